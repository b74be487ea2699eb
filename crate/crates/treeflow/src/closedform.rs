//! Exact solutions used as oracles against the numerical solver.
//!
//! Under the arithmetic mean, a finite-support datum yields e^t u(x,t)
//! polynomial in t, propagated exactly level by level. Eigen-solutions,
//! the optimal monomial family and the level-constant solutions are
//! evaluated from their closed forms.

use crate::averaging::{AveragingKind, AveragingSpec};
use crate::datum::InitialDatum;
use crate::error::{Error, Result};
use crate::tree::TreeShape;

/// Per-vertex coefficient vectors c_x with e^t u(x,t) = Σ_j c_x[j] t^j.
#[derive(Debug, Clone)]
pub struct PolynomialSolution {
    pub shape: TreeShape,
    coeffs: Vec<Vec<f64>>,
}

impl PolynomialSolution {
    pub fn coeffs(&self, rank: usize) -> &[f64] {
        &self.coeffs[rank]
    }

    pub fn root_coeffs(&self) -> &[f64] {
        &self.coeffs[0]
    }

    pub fn max_degree(&self) -> usize {
        self.coeffs.iter().map(|c| c.len() - 1).max().unwrap_or(0)
    }

    /// u(x, t) = e^{-t} Σ_j c_x[j] t^j, Horner on the polynomial part.
    pub fn value(&self, rank: usize, t: f64) -> f64 {
        let c = &self.coeffs[rank];
        let mut poly = 0.0;
        for &cj in c.iter().rev() {
            poly = poly * t + cj;
        }
        (-t).exp() * poly
    }
}

/// Exact solution for a finite-support datum under the arithmetic mean.
///
/// Bottom-up: at levels with no nonzero datum below, c_x = [f(x)]; above,
/// the coefficient identity (j+1) c_x[j+1] = mean of the children's c[j]
/// integrates the children term by term, and c_x[0] = f(x). Exactness (as
/// opposed to the two-sided bounds) holds only for the linear mean, hence
/// the operator restriction.
pub fn finite_support_exact(
    shape: &TreeShape,
    spec: &AveragingSpec,
    datum: &InitialDatum,
) -> Result<PolynomialSolution> {
    if !matches!(spec.kind(), AveragingKind::ArithmeticMean) {
        return Err(Error::UnsupportedOperator);
    }
    let support = datum
        .support_level()
        .ok_or_else(|| Error::Config("finite_support_exact needs a finite-support datum".into()))?;
    if support > shape.depth() + 1 {
        return Err(Error::SupportExceedsDepth {
            support,
            depth: shape.depth(),
        });
    }
    let f = datum.initial_values(shape);
    let m = shape.branching();
    let nv = shape.vertex_count();
    let mut coeffs: Vec<Vec<f64>> = vec![Vec::new(); nv];

    for level in (0..=shape.depth()).rev() {
        let off = shape.level_offset(level);
        for idx in 0..shape.level_len(level) {
            let rank = off + idx;
            // vertices at or below the top nonzero level keep a constant
            // polynomial; missing children (below depth) are identically zero
            let child0 = shape.first_child_rank(rank);
            let child_deg = match child0 {
                Some(c0) => (0..m).map(|j| coeffs[c0 + j].len()).max().unwrap_or(0),
                None => 0,
            };
            let mut c = vec![0.0; child_deg + 1];
            c[0] = f[rank];
            if let Some(c0) = child0 {
                for j in 0..child_deg {
                    let mut sum = 0.0;
                    for child in 0..m {
                        sum += coeffs[c0 + child].get(j).copied().unwrap_or(0.0);
                    }
                    c[j + 1] = sum / m as f64 / (j + 1) as f64;
                }
            }
            while c.len() > 1 && c.last() == Some(&0.0) {
                c.pop();
            }
            coeffs[rank] = c;
        }
    }
    Ok(PolynomialSolution {
        shape: *shape,
        coeffs,
    })
}

/// The optimal-decay example u_n(x,t) = e^{-t} n!/(n-l)! t^{n-l} for
/// l = level <= n, 0 below.
pub fn monomial_example(n: usize, level: usize, t: f64) -> f64 {
    if level > n {
        return 0.0;
    }
    let mut falling = 1.0;
    for i in 0..level {
        falling *= (n - i) as f64;
    }
    (-t).exp() * falling * t.powi((n - level) as i32)
}

/// Decaying eigen-solution k e^{-lambda t} (1-lambda)^{level}, lambda in (0,1).
pub fn geometric_eigen(k: f64, lambda: f64, level: usize, t: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::ParamDomain {
            name: "lambda",
            value: lambda,
            range: "(0, 1)",
        });
    }
    Ok(k * (-lambda * t).exp() * (1.0 - lambda).powi(level as i32))
}

/// Scaling eigen-solution c e^{(lambda-1) t} lambda^{level}, lambda > 0;
/// grows in t when lambda > 1 (the unbounded-datum regime).
pub fn scaling_eigen(c: f64, lambda: f64, level: usize, t: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::ParamDomain {
            name: "lambda",
            value: lambda,
            range: "(0, inf)",
        });
    }
    Ok(c * ((lambda - 1.0) * t).exp() * lambda.powi(level as i32))
}

/// Subfactorial !n (number of derangements), by the exact integer recurrence
/// !n = n !(n-1) + (-1)^n, !0 = 1.
pub fn subfactorial(n: u32) -> Result<i64> {
    let mut d: i64 = 1;
    for i in 1..=n {
        let sign = if i % 2 == 0 { 1 } else { -1 };
        d = d
            .checked_mul(i as i64)
            .and_then(|v| v.checked_add(sign))
            .ok_or(Error::SubfactorialOverflow(n))?;
    }
    Ok(d)
}

/// The level-n value of the initial condition of the level-constant solution
/// with a_0 = (1+t)^{-1}: (-1)^n !n.
pub fn subfactorial_datum(n: u32) -> Result<i64> {
    let d = subfactorial(n)?;
    Ok(if n % 2 == 0 { d } else { -d })
}

/// a_n(t) = Σ_{j<=n} C(n,j) (-1)^j (alpha)_j (1+t)^{-alpha-j}: the value on
/// level n of the level-constant solution generated by a_0 = (1+t)^{-alpha}.
pub fn level_constant_solution(alpha: f64, n: usize, t: f64) -> Result<f64> {
    level_constant_sum(alpha, n, t, 0)
}

/// Analytic d/dt of [`level_constant_solution`].
pub fn level_constant_derivative(alpha: f64, n: usize, t: f64) -> Result<f64> {
    level_constant_sum(alpha, n, t, 1)
}

// Shared evaluator: order 0 gives a_n, order 1 its derivative. Coefficients
// C(n,j)(alpha)_j are exact integers when alpha is a small integer, promoted
// to f64 only at the end; the alternating sum is Neumaier-compensated since
// individual terms dwarf the result near t = 0.
fn level_constant_sum(alpha: f64, n: usize, t: f64, order: u32) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::ParamDomain {
            name: "alpha",
            value: alpha,
            range: "(0, inf)",
        });
    }
    if !(t > -1.0) {
        return Err(Error::ParamDomain {
            name: "t",
            value: t,
            range: "(-1, inf)",
        });
    }
    let base = 1.0 + t;
    let exact = alpha.fract() == 0.0 && alpha <= 4.0 && n <= 20;
    let mut sum = NeumaierSum::default();
    for j in 0..=n {
        let coeff = if exact {
            (binomial_u128(n, j) as f64) * (rising_factorial_u128(alpha as u128, j) as f64)
        } else {
            binomial_u128(n, j) as f64 * rising_factorial(alpha, j)
        };
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let mut term = sign * coeff * base.powf(-alpha - j as f64);
        if order == 1 {
            term *= -(alpha + j as f64) / base;
        }
        sum.add(term);
    }
    Ok(sum.value())
}

fn binomial_u128(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1u128;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

fn rising_factorial_u128(alpha: u128, j: usize) -> u128 {
    (0..j).map(|i| alpha + i as u128).product()
}

fn rising_factorial(alpha: f64, j: usize) -> f64 {
    (0..j).map(|i| alpha + i as f64).product()
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Exact integer coefficient of (1+t)^{-alpha-j} in a_n for integer alpha:
/// C(n,j) (-1)^j (alpha)_j. Used to verify a_{i+1} = a_i' + a_i exactly.
pub fn level_constant_coefficient(alpha: u32, n: usize, j: usize) -> i128 {
    let mag = binomial_u128(n, j) as i128 * rising_factorial_u128(alpha as u128, j) as i128;
    if j % 2 == 0 {
        mag
    } else {
        -mag
    }
}
