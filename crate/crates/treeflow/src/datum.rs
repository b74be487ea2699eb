//! Initial data f on the tree.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::tree::{TreeShape, VertexPath};

/// The initial condition, evaluable at any vertex.
///
/// `Geometric` with a seed draws a deterministic per-vertex multiplier in
/// [-1, 1], so |f(x)| <= k (1-lambda)^level always holds; without a seed it
/// is the exact eigen-datum f(x) = k (1-lambda)^level. The multiplier is a
/// function of (seed, global rank), hence independent of the truncation
/// depth: the same datum is seen by runs at different depths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialDatum {
    FiniteSupport {
        table: BTreeMap<VertexPath, f64>,
    },
    Geometric {
        k: f64,
        lambda: f64,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        seed: Option<u64>,
    },
    LevelFunction {
        values: Vec<f64>,
    },
    ScalingEigen {
        c: f64,
        lambda: f64,
    },
}

impl InitialDatum {
    pub fn finite(entries: impl IntoIterator<Item = (VertexPath, f64)>) -> Self {
        InitialDatum::FiniteSupport {
            table: entries.into_iter().collect(),
        }
    }

    /// The optimal-decay datum f_n: n! at every level-n vertex, 0 elsewhere.
    pub fn monomial_family(n: usize) -> Self {
        let mut values = vec![0.0; n + 1];
        values[n] = (1..=n).product::<usize>() as f64;
        InitialDatum::LevelFunction { values }
    }

    pub fn value(&self, path: &VertexPath, shape: &TreeShape) -> f64 {
        match self {
            InitialDatum::FiniteSupport { table } => table.get(path).copied().unwrap_or(0.0),
            InitialDatum::Geometric { k, lambda, seed } => {
                let base = k * (1.0 - lambda).powi(path.level() as i32);
                match seed {
                    None => base,
                    Some(s) => base * unit_multiplier(*s, shape.rank_of(path) as u64),
                }
            }
            InitialDatum::LevelFunction { values } => {
                values.get(path.level()).copied().unwrap_or(0.0)
            }
            InitialDatum::ScalingEigen { c, lambda } => c * lambda.powi(path.level() as i32),
        }
    }

    /// Values at every stored vertex, in rank order.
    pub fn initial_values(&self, shape: &TreeShape) -> Vec<f64> {
        let nv = shape.vertex_count();
        match self {
            InitialDatum::FiniteSupport { table } => {
                let mut out = vec![0.0; nv];
                for (path, &v) in table {
                    if path.level() <= shape.depth() {
                        out[shape.rank_of(path)] = v;
                    }
                }
                out
            }
            InitialDatum::Geometric { k, lambda, seed } => {
                let mut out = vec![0.0; nv];
                for level in 0..=shape.depth() {
                    let base = k * (1.0 - lambda).powi(level as i32);
                    let off = shape.level_offset(level);
                    for idx in 0..shape.level_len(level) {
                        let rank = off + idx;
                        out[rank] = match seed {
                            None => base,
                            Some(s) => base * unit_multiplier(*s, rank as u64),
                        };
                    }
                }
                out
            }
            InitialDatum::LevelFunction { values } => (0..nv)
                .map(|rank| {
                    values
                        .get(shape.level_of_rank(rank))
                        .copied()
                        .unwrap_or(0.0)
                })
                .collect(),
            InitialDatum::ScalingEigen { c, lambda } => (0..nv)
                .map(|rank| c * lambda.powi(shape.level_of_rank(rank) as i32))
                .collect(),
        }
    }

    /// a(f): the smallest j with f = 0 on all levels >= j, when the datum has
    /// finite support.
    pub fn support_level(&self) -> Option<usize> {
        match self {
            InitialDatum::FiniteSupport { table } => Some(
                table
                    .iter()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(p, _)| p.level() + 1)
                    .max()
                    .unwrap_or(0),
            ),
            InitialDatum::LevelFunction { values } => Some(
                values
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(l, _)| l + 1)
                    .max()
                    .unwrap_or(0),
            ),
            _ => None,
        }
    }

    /// Sup norm of f over the whole (infinite) tree; infinite for a growing
    /// scaling datum.
    pub fn sup_norm(&self) -> f64 {
        match self {
            InitialDatum::FiniteSupport { table } => {
                table.values().fold(0.0f64, |acc, v| acc.max(v.abs()))
            }
            // lambda in (0, 1), so the envelope peaks at the root
            InitialDatum::Geometric { k, .. } => k.abs(),
            InitialDatum::LevelFunction { values } => {
                values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
            }
            InitialDatum::ScalingEigen { c, lambda } => {
                if *lambda <= 1.0 {
                    c.abs()
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

/// Deterministic multiplier in [-1, 1] from (seed, rank), splitmix64 based.
fn unit_multiplier(seed: u64, rank: u64) -> f64 {
    let mut z = seed ^ rank.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    // 53 uniform bits into [0, 1), mapped to [-1, 1)
    let u = (z >> 11) as f64 / (1u64 << 53) as f64;
    2.0 * u - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::enumerate_vertices;

    #[test]
    fn finite_support_values() {
        let shape = TreeShape::new(2, 2).unwrap();
        let f = InitialDatum::finite([("0".parse().unwrap(), 2.0), ("1.1".parse().unwrap(), -3.0)]);
        let vals = f.initial_values(&shape);
        assert_eq!(vals[1], 2.0);
        assert_eq!(vals[6], -3.0);
        assert_eq!(vals.iter().filter(|v| **v != 0.0).count(), 2);
        assert_eq!(f.support_level(), Some(3));
    }

    #[test]
    fn geometric_envelope_holds_for_seeded_data() {
        let shape = TreeShape::new(3, 4).unwrap();
        let f = InitialDatum::Geometric {
            k: 2.0,
            lambda: 0.4,
            seed: Some(11),
        };
        for path in enumerate_vertices(&shape) {
            let v = f.value(&path, &shape);
            assert!(v.abs() <= 2.0 * 0.6f64.powi(path.level() as i32) + 1e-15);
        }
    }

    #[test]
    fn seeded_geometric_is_depth_independent() {
        let shallow = TreeShape::new(3, 2).unwrap();
        let deep = TreeShape::new(3, 5).unwrap();
        let f = InitialDatum::Geometric {
            k: 1.0,
            lambda: 0.5,
            seed: Some(3),
        };
        for path in enumerate_vertices(&shallow) {
            assert_eq!(f.value(&path, &shallow), f.value(&path, &deep));
        }
    }

    #[test]
    fn monomial_family_datum() {
        let f = InitialDatum::monomial_family(3);
        let shape = TreeShape::new(2, 4).unwrap();
        assert_eq!(f.support_level(), Some(4));
        assert_eq!(f.sup_norm(), 6.0);
        assert_eq!(f.value(&"1.0.1".parse().unwrap(), &shape), 6.0);
        assert_eq!(f.value(&VertexPath::root(), &shape), 0.0);
    }

    #[test]
    fn datum_json_round_trip() {
        let f = InitialDatum::finite([("0.2".parse().unwrap(), 1.5)]);
        let json = serde_json::to_string(&f).unwrap();
        let back: InitialDatum = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);

        let g = InitialDatum::Geometric {
            k: 1.0,
            lambda: 0.3,
            seed: Some(9),
        };
        let back: InitialDatum = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
    }
}
