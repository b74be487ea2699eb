//! Averaging operators F: R^m -> R and randomized verification of the
//! averaging axioms:
//!
//! (i)   F(0,..,0) = 0 and F(1,..,1) = 1
//! (ii)  F(t x) = t F(x) for all real t
//! (iii) F(t + x) = t + F(x) for all real t
//! (iv)  F(x) < max x when the coordinates are not all equal
//! (v)   F nondecreasing in each coordinate
//!
//! plus the resulting 1-Lipschitz bound |F(x) - F(y)| <= max |x_j - y_j|.
//!
//! The median here is the standard one (middle order statistic for odd m,
//! mean of the two middle values for even m). The source formula for `med`
//! swaps the even/odd cases as printed; the nondecreasing-rearrangement
//! reading used everywhere else matches the standard definition, which is
//! what we implement.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Absolute width at which the p-average bisection stops.
pub const P_AVERAGE_TOL: f64 = 1e-14;
/// Iteration cap for the p-average bisection.
pub const P_AVERAGE_MAX_ITER: usize = 200;
/// Tolerance of the randomized axiom checks.
pub const AXIOM_TOL: f64 = 1e-9;

/// Which averaging operator to use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AveragingKind {
    /// (1/m) Σ x_j.
    ArithmeticMean,
    /// The implicit p-average: the unique t with Σ sign(x_j - t)|x_j - t|^{p-1} = 0.
    PAverage { p: f64 },
    /// α med{x_j} + (1-α)/m Σ x_j.
    MedianMeanBlend { alpha: f64 },
    /// α med{x_j} + (1-α)/2 (max + min).
    MedianMidrangeBlend { alpha: f64 },
    /// α/2 (max + min) + (1-α)/m Σ x_j.
    MinMaxMeanBlend { alpha: f64 },
}

/// A declarative operator description: kind plus arity m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragingSpec {
    kind: AveragingKind,
    arity: usize,
}

impl AveragingSpec {
    pub fn new(kind: AveragingKind, arity: usize) -> Result<Self> {
        if arity < 2 {
            return Err(Error::BadBranching(arity));
        }
        match kind {
            AveragingKind::PAverage { p } if !(p > 1.0) || !p.is_finite() => {
                return Err(Error::ParamDomain {
                    name: "p",
                    value: p,
                    range: "(1, inf)",
                })
            }
            AveragingKind::MedianMeanBlend { alpha } | AveragingKind::MedianMidrangeBlend { alpha }
                if !(0.0..=1.0).contains(&alpha) =>
            {
                return Err(Error::ParamDomain {
                    name: "alpha",
                    value: alpha,
                    range: "[0, 1]",
                })
            }
            AveragingKind::MinMaxMeanBlend { alpha } if !(alpha > 0.0 && alpha < 1.0) => {
                return Err(Error::ParamDomain {
                    name: "alpha",
                    value: alpha,
                    range: "(0, 1)",
                })
            }
            _ => {}
        }
        Ok(AveragingSpec { kind, arity })
    }

    pub fn mean(arity: usize) -> Self {
        AveragingSpec::new(AveragingKind::ArithmeticMean, arity).unwrap()
    }

    pub fn kind(&self) -> AveragingKind {
        self.kind
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Evaluate F on a full coordinate vector.
    pub fn evaluate(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.arity {
            return Err(Error::ArityMismatch {
                arity: self.arity,
                expected: values.len(),
            });
        }
        if let AveragingKind::PAverage { .. } = self.kind {
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("p_average"));
            }
        }
        Ok(self.eval_hot(values))
    }

    /// Infallible evaluation for hot loops. Non-finite inputs propagate as
    /// non-finite outputs, which the solver traps after each step.
    #[inline]
    pub fn eval_hot(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.arity);
        match self.kind {
            AveragingKind::ArithmeticMean => mean(values),
            AveragingKind::PAverage { p } => p_average_unchecked(values, p),
            AveragingKind::MedianMeanBlend { alpha } => {
                alpha * median(values) + (1.0 - alpha) * mean(values)
            }
            AveragingKind::MedianMidrangeBlend { alpha } => {
                alpha * median(values) + (1.0 - alpha) * midrange(values)
            }
            AveragingKind::MinMaxMeanBlend { alpha } => {
                alpha * midrange(values) + (1.0 - alpha) * mean(values)
            }
        }
    }
}

#[inline]
fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[inline]
fn minmax(values: &[f64]) -> (f64, f64) {
    let mut lo = values[0];
    let mut hi = values[0];
    for &v in &values[1..] {
        if v < lo {
            lo = v;
        }
        if v > hi {
            hi = v;
        }
    }
    (lo, hi)
}

#[inline]
fn midrange(values: &[f64]) -> f64 {
    let (lo, hi) = minmax(values);
    0.5 * (hi + lo)
}

/// Standard median: middle order statistic for odd length, mean of the two
/// middle order statistics for even length.
pub fn median(values: &[f64]) -> f64 {
    let mut buf: SmallVec<[f64; 8]> = SmallVec::from_slice(values);
    buf.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = buf.len();
    if n % 2 == 1 {
        buf[n / 2]
    } else {
        0.5 * (buf[n / 2 - 1] + buf[n / 2])
    }
}

/// The implicit p-average of Example 2.3: the unique root of
/// g(t) = Σ sign(x_j - t)|x_j - t|^{p-1} inside [min x, max x].
///
/// g is continuous and strictly decreasing there for every p > 1 (the
/// sign(.)|.|^{p-1} form avoids the |.|^{p-2} singularity for p < 2), so
/// plain bisection is safe; it stops at interval width 1e-14.
pub fn p_average(values: &[f64], p: f64) -> Result<f64> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::ParamDomain {
            name: "p",
            value: p,
            range: "(1, inf)",
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("p_average"));
    }
    Ok(p_average_unchecked(values, p))
}

#[inline]
fn signed_pow(d: f64, q: f64) -> f64 {
    // sign(d) |d|^q
    if d >= 0.0 {
        d.powf(q)
    } else {
        -(-d).powf(q)
    }
}

fn p_average_unchecked(values: &[f64], p: f64) -> f64 {
    let (mut lo, mut hi) = minmax(values);
    if hi - lo <= 0.0 {
        return lo;
    }
    let q = p - 1.0;
    let g = |t: f64| values.iter().map(|&x| signed_pow(x - t, q)).sum::<f64>();
    for _ in 0..P_AVERAGE_MAX_ITER {
        if hi - lo <= P_AVERAGE_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Outcome of the randomized axiom suite for one operator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AxiomReport {
    pub normalization: bool,
    pub homogeneity: bool,
    pub translation: bool,
    pub strict_below_max: bool,
    pub monotonicity: bool,
    pub lipschitz: bool,
    pub counterexample: Option<Counterexample>,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Counterexample {
    pub axiom: String,
    pub values: Vec<f64>,
    pub detail: String,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.normalization
            && self.homogeneity
            && self.translation
            && self.strict_below_max
            && self.monotonicity
            && self.lipschitz
    }
}

/// Run the randomized axiom suite: axioms (i)-(v) plus the Lipschitz bound,
/// on `sample_count` vectors drawn from `seed`. Axiom (iv) additionally gets
/// deterministic 0/1 probe vectors with repeated coordinates, which is where
/// strictness actually breaks (e.g. the pure median on (0,1,1)).
pub fn verify_axioms(spec: &AveragingSpec, sample_count: usize, seed: u64) -> AxiomReport {
    let m = spec.arity();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = AxiomReport {
        normalization: true,
        homogeneity: true,
        translation: true,
        strict_below_max: true,
        monotonicity: true,
        lipschitz: true,
        counterexample: None,
        samples: sample_count,
    };

    let record =
        |flag: &mut bool, ce: &mut Option<Counterexample>, axiom: &str, x: &[f64], detail: String| {
            *flag = false;
            if ce.is_none() {
                *ce = Some(Counterexample {
                    axiom: axiom.to_string(),
                    values: x.to_vec(),
                    detail,
                });
            }
        };

    // (i) exactly (up to the bisection tolerance for the p-average)
    let zeros = vec![0.0; m];
    let ones = vec![1.0; m];
    let f0 = spec.eval_hot(&zeros);
    let f1 = spec.eval_hot(&ones);
    if f0.abs() > AXIOM_TOL || (f1 - 1.0).abs() > AXIOM_TOL {
        record(
            &mut report.normalization,
            &mut report.counterexample,
            "(i) normalization",
            &zeros,
            format!("F(0,..,0) = {f0}, F(1,..,1) = {f1}"),
        );
    }

    // strictness probes: every nonconstant 0/1 pattern (m <= 12)
    if m <= 12 {
        for mask in 1..(1usize << m) - 1 {
            let x: Vec<f64> = (0..m).map(|j| ((mask >> j) & 1) as f64).collect();
            let fx = spec.eval_hot(&x);
            if fx >= 1.0 - 1e-12 {
                record(
                    &mut report.strict_below_max,
                    &mut report.counterexample,
                    "(iv) strict sub-maximality",
                    &x,
                    format!("F(x) = {fx} >= max x = 1"),
                );
            }
        }
    }

    for _ in 0..sample_count {
        let x: Vec<f64> = (0..m).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let fx = spec.eval_hot(&x);

        // (ii) homogeneity, with negative t included
        let t: f64 = rng.gen_range(-2.0..2.0);
        let tx: Vec<f64> = x.iter().map(|&v| t * v).collect();
        let ftx = spec.eval_hot(&tx);
        if (ftx - t * fx).abs() > AXIOM_TOL {
            record(
                &mut report.homogeneity,
                &mut report.counterexample,
                "(ii) homogeneity",
                &x,
                format!("t = {t}: F(t x) = {ftx} vs t F(x) = {}", t * fx),
            );
        }

        // (iii) translation invariance
        let s: f64 = rng.gen_range(-5.0..5.0);
        let sx: Vec<f64> = x.iter().map(|&v| s + v).collect();
        let fsx = spec.eval_hot(&sx);
        if (fsx - (s + fx)).abs() > AXIOM_TOL {
            record(
                &mut report.translation,
                &mut report.counterexample,
                "(iii) translation",
                &x,
                format!("t = {s}: F(t + x) = {fsx} vs t + F(x) = {}", s + fx),
            );
        }

        // (iv) on the random vector (coordinates a.s. distinct)
        let (lo, hi) = minmax(&x);
        if hi > lo && fx >= hi - 1e-12 {
            record(
                &mut report.strict_below_max,
                &mut report.counterexample,
                "(iv) strict sub-maximality",
                &x,
                format!("F(x) = {fx} >= max x = {hi}"),
            );
        }

        // (v) monotone in each coordinate, by a random upward perturbation
        let j = rng.gen_range(0..m);
        let delta: f64 = rng.gen_range(0.0..1.0);
        let mut xp = x.clone();
        xp[j] += delta;
        let fxp = spec.eval_hot(&xp);
        if fxp < fx - AXIOM_TOL {
            record(
                &mut report.monotonicity,
                &mut report.counterexample,
                "(v) monotonicity",
                &x,
                format!("raising coordinate {j} by {delta} dropped F from {fx} to {fxp}"),
            );
        }

        // Lipschitz bound in the max metric
        let y: Vec<f64> = (0..m).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let fy = spec.eval_hot(&y);
        let dist = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if (fx - fy).abs() > dist + AXIOM_TOL {
            record(
                &mut report.lipschitz,
                &mut report.counterexample,
                "lipschitz",
                &x,
                format!("|F(x) - F(y)| = {} > max|x-y| = {dist}", (fx - fy).abs()),
            );
        }
    }

    report
}

// JSON wire format: {"kind": string, "p"?: number, "alpha"?: number, "arity": int}
#[derive(Serialize, Deserialize)]
struct SpecWire {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    alpha: Option<f64>,
    arity: usize,
}

impl Serialize for AveragingSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let (kind, p, alpha) = match self.kind {
            AveragingKind::ArithmeticMean => ("mean", None, None),
            AveragingKind::PAverage { p } => ("p_average", Some(p), None),
            AveragingKind::MedianMeanBlend { alpha } => ("median_mean_blend", None, Some(alpha)),
            AveragingKind::MedianMidrangeBlend { alpha } => {
                ("median_midrange_blend", None, Some(alpha))
            }
            AveragingKind::MinMaxMeanBlend { alpha } => ("min_max_mean_blend", None, Some(alpha)),
        };
        SpecWire {
            kind: kind.to_string(),
            p,
            alpha,
            arity: self.arity,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AveragingSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let wire = SpecWire::deserialize(deserializer)?;
        let need = |opt: Option<f64>, name: &str| {
            opt.ok_or_else(|| D::Error::custom(format!("operator kind {:?} needs {name}", wire.kind)))
        };
        let kind = match wire.kind.as_str() {
            "mean" => AveragingKind::ArithmeticMean,
            "p_average" => AveragingKind::PAverage {
                p: need(wire.p, "p")?,
            },
            "median_mean_blend" => AveragingKind::MedianMeanBlend {
                alpha: need(wire.alpha, "alpha")?,
            },
            "median_midrange_blend" => AveragingKind::MedianMidrangeBlend {
                alpha: need(wire.alpha, "alpha")?,
            },
            "min_max_mean_blend" => AveragingKind::MinMaxMeanBlend {
                alpha: need(wire.alpha, "alpha")?,
            },
            other => return Err(D::Error::custom(format!("unknown operator kind {other:?}"))),
        };
        AveragingSpec::new(kind, wire.arity).map_err(D::Error::custom)
    }
}
