//! Decay bounds and verification reports: support statistics a(f), mu(f),
//! the finite-support bound t^mu e^{-t} / mu! ||f|| (valid for t large
//! enough), and the geometric bound k e^{-lambda t} (valid at every t).

use serde::{Deserialize, Serialize};

use crate::datum::InitialDatum;
use crate::error::{Error, Result};
use crate::solver::SolutionField;

/// Relative slack against bounds evaluated in double precision.
pub const BOUND_REL_TOL: f64 = 1e-6;

/// Support statistics of a finite-support datum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportStats {
    /// a(f): smallest level from which f vanishes identically.
    pub a: usize,
    /// mu(f) = a(f) - 1 when a(f) > 0, else 0; the decay exponent.
    pub mu: usize,
    pub sup_norm: f64,
}

pub fn support_stats(datum: &InitialDatum) -> Result<SupportStats> {
    let a = datum
        .support_level()
        .ok_or_else(|| Error::Config("support_stats needs a finite-support datum".into()))?;
    Ok(SupportStats {
        a,
        mu: a.saturating_sub(1),
        sup_norm: datum.sup_norm(),
    })
}

/// t^mu e^{-t} / mu! times ||f||.
pub fn finite_support_bound(stats: &SupportStats, t: f64) -> f64 {
    let mut factorial = 1.0;
    for i in 1..=stats.mu {
        factorial *= i as f64;
    }
    t.powi(stats.mu as i32) * (-t).exp() / factorial * stats.sup_norm
}

/// k e^{-lambda t}.
pub fn geometric_bound(k: f64, lambda: f64, t: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::ParamDomain {
            name: "k",
            value: k,
            range: "(0, inf)",
        });
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::ParamDomain {
            name: "lambda",
            value: lambda,
            range: "(0, 1)",
        });
    }
    if !(t >= 0.0) {
        return Err(Error::ParamDomain {
            name: "t",
            value: t,
            range: "[0, inf)",
        });
    }
    Ok(k * (-lambda * t).exp())
}

/// Which bound a report checks against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundKind {
    FiniteSupport { stats: SupportStats },
    Geometric { k: f64, lambda: f64 },
}

impl BoundKind {
    pub fn bound_at(&self, t: f64) -> Result<f64> {
        match self {
            BoundKind::FiniteSupport { stats } => Ok(finite_support_bound(stats, t)),
            BoundKind::Geometric { k, lambda } => geometric_bound(*k, *lambda, t),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DecayNode {
    pub t: f64,
    pub max_abs_u: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Per-node comparison of observed max |u| against a decay bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayReport {
    pub kind: BoundKind,
    pub nodes: Vec<DecayNode>,
    /// Smallest grid time from which the bound holds through t_end; `None`
    /// when the bound fails at the final node.
    pub first_valid_time: Option<f64>,
    /// Whether the pass flags are monotone (once valid, stays valid).
    pub monotone: bool,
}

impl DecayReport {
    pub fn all_pass(&self) -> bool {
        self.nodes.iter().all(|n| n.pass)
    }
}

/// Compare a solved field against a decay bound. `abs_tol` is the additive
/// slack granted on top of the relative one (scheme error for numerically
/// produced fields).
pub fn check_decay(field: &SolutionField, kind: &BoundKind, abs_tol: f64) -> Result<DecayReport> {
    let trajectory: Vec<(f64, f64)> = (0..field.grid.len())
        .map(|k| (field.grid.node(k), field.max_abs_at(k)))
        .collect();
    check_decay_trajectory(&trajectory, kind, abs_tol)
}

/// Same check on a streamed (t, max |u|) trajectory, for runs too large to
/// keep in memory.
pub fn check_decay_trajectory(
    trajectory: &[(f64, f64)],
    kind: &BoundKind,
    abs_tol: f64,
) -> Result<DecayReport> {
    let mut nodes = Vec::with_capacity(trajectory.len());
    for &(t, max_abs_u) in trajectory {
        let bound = kind.bound_at(t)?;
        let pass = max_abs_u <= bound * (1.0 + BOUND_REL_TOL) + abs_tol;
        nodes.push(DecayNode {
            t,
            max_abs_u,
            bound,
            pass,
        });
    }
    let mut first_valid_time = None;
    for node in nodes.iter().rev() {
        if node.pass {
            first_valid_time = Some(node.t);
        } else {
            break;
        }
    }
    let mut seen_pass = false;
    let mut monotone = true;
    for node in &nodes {
        if node.pass {
            seen_pass = true;
        } else if seen_pass {
            monotone = false;
        }
    }
    Ok(DecayReport {
        kind: *kind,
        nodes,
        first_valid_time,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averaging::AveragingSpec;
    use crate::solver::{solve_ivp, ClosureRule, TimeGrid};
    use crate::tree::TreeShape;

    #[test]
    fn support_stats_examples() {
        let zero = InitialDatum::finite([]);
        let s = support_stats(&zero).unwrap();
        assert_eq!((s.a, s.mu), (0, 0));

        let root_only = InitialDatum::finite([("".parse().unwrap(), 2.0)]);
        let s = support_stats(&root_only).unwrap();
        assert_eq!((s.a, s.mu, s.sup_norm), (1, 0, 2.0));

        let f3 = InitialDatum::monomial_family(3);
        let s = support_stats(&f3).unwrap();
        assert_eq!((s.a, s.mu, s.sup_norm), (4, 3, 6.0));
    }

    #[test]
    fn support_stats_rejects_geometric() {
        let g = InitialDatum::Geometric {
            k: 1.0,
            lambda: 0.5,
            seed: None,
        };
        assert!(support_stats(&g).is_err());
    }

    #[test]
    fn finite_support_bound_values() {
        let s = SupportStats {
            a: 1,
            mu: 0,
            sup_norm: 3.0,
        };
        assert!((finite_support_bound(&s, 2.0) - 3.0 * (-2.0f64).exp()).abs() < 1e-15);

        let s = SupportStats {
            a: 3,
            mu: 2,
            sup_norm: 2.0,
        };
        assert!((finite_support_bound(&s, 1.0) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn geometric_bound_values() {
        assert_eq!(geometric_bound(1.0, 0.5, 0.0).unwrap(), 1.0);
        let b = geometric_bound(1.0, 0.5, 2.0).unwrap();
        assert!((b - (-1.0f64).exp()).abs() < 1e-15);
        assert!(geometric_bound(-1.0, 0.5, 0.0).is_err());
        assert!(geometric_bound(1.0, 1.5, 0.0).is_err());
    }

    #[test]
    fn zero_field_trivially_passes() {
        let shape = TreeShape::new(2, 2).unwrap();
        let datum = InitialDatum::finite([]);
        let grid = TimeGrid::new(1.0, 20).unwrap();
        let field = solve_ivp(
            shape,
            AveragingSpec::mean(2),
            &datum,
            grid,
            ClosureRule::ZeroBoundary,
        )
        .unwrap();
        let kind = BoundKind::FiniteSupport {
            stats: support_stats(&datum).unwrap(),
        };
        let report = check_decay(&field, &kind, 0.0).unwrap();
        assert!(report.all_pass());
        assert_eq!(report.first_valid_time, Some(0.0));
        assert!(report.monotone);
    }

    #[test]
    fn eigen_field_meets_geometric_bound_with_equality() {
        let shape = TreeShape::new(3, 5).unwrap();
        let lambda = 0.5;
        let datum = InitialDatum::Geometric {
            k: 1.0,
            lambda,
            seed: None,
        };
        let grid = TimeGrid::new(2.0, 2000).unwrap();
        let field = solve_ivp(
            shape,
            AveragingSpec::mean(3),
            &datum,
            grid,
            ClosureRule::GeometricEnvelope { k: 1.0, lambda },
        )
        .unwrap();
        let kind = BoundKind::Geometric { k: 1.0, lambda };
        let report = check_decay(&field, &kind, 1e-6).unwrap();
        assert!(report.all_pass());
        // optimality: the bound is attained up to scheme error
        for node in &report.nodes {
            assert!((node.max_abs_u - node.bound).abs() < 1e-6);
        }
    }
}
