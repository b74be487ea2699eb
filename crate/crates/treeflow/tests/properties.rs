//! Randomized structural properties of the operators and the embedding.

use proptest::prelude::*;

use treeflow::averaging::{p_average, AveragingKind, AveragingSpec};
use treeflow::tree::{psi_embed, TreeShape};

fn operand() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0f64..100.0, 2..=6)
}

fn any_spec(m: usize) -> impl Strategy<Value = AveragingSpec> {
    prop_oneof![
        Just(AveragingKind::ArithmeticMean),
        (1.0f64..6.0).prop_map(|p| AveragingKind::PAverage { p }),
        (0.0f64..=1.0).prop_map(|alpha| AveragingKind::MedianMeanBlend { alpha }),
        (0.0f64..=1.0).prop_map(|alpha| AveragingKind::MedianMidrangeBlend { alpha }),
        (0.0f64..1.0).prop_map(|alpha| AveragingKind::MinMaxMeanBlend { alpha }),
    ]
    .prop_map(move |kind| AveragingSpec::new(kind, m).unwrap())
}

fn spec_and_operand() -> impl Strategy<Value = (AveragingSpec, Vec<f64>)> {
    operand().prop_flat_map(|x| {
        let m = x.len();
        (any_spec(m), Just(x))
    })
}

proptest! {
    /// The value always lies between the smallest and largest operand.
    #[test]
    fn bounded_by_extremes((spec, x) in spec_and_operand()) {
        let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let v = spec.evaluate(&x).unwrap();
        prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12, "{v} outside [{lo}, {hi}]");
    }

    /// All shipped operators are symmetric in their arguments.
    #[test]
    fn permutation_invariant((spec, x) in spec_and_operand(), rot in 0usize..6) {
        let mut y = x.clone();
        y.rotate_left(rot % x.len());
        let a = spec.evaluate(&x).unwrap();
        let b = spec.evaluate(&y).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
    }

    /// F(x + c) = F(x) + c up to bisection tolerance.
    #[test]
    fn translation_invariant((spec, x) in spec_and_operand(), c in -50.0f64..50.0) {
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        let a = spec.evaluate(&x).unwrap() + c;
        let b = spec.evaluate(&shifted).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
    }

    /// Increasing one operand never decreases the value.
    #[test]
    fn monotone_in_each_operand((spec, x) in spec_and_operand(), idx in 0usize..6, bump in 0.0f64..10.0) {
        let mut y = x.clone();
        let i = idx % x.len();
        y[i] += bump;
        let a = spec.evaluate(&x).unwrap();
        let b = spec.evaluate(&y).unwrap();
        prop_assert!(b >= a - 1e-9 * (1.0 + a.abs()));
    }

    /// The 2-average coincides with the arithmetic mean.
    #[test]
    fn quadratic_average_is_mean(x in operand()) {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let v = p_average(&x, 2.0).unwrap();
        prop_assert!((v - mean).abs() <= 1e-9 * (1.0 + mean.abs()));
    }

    /// Within one level, rank order agrees with the embedding order.
    #[test]
    fn psi_respects_rank_order(m in 2usize..5, level in 1usize..6) {
        let shape = TreeShape::new(m, level).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for idx in 0..shape.level_len(level) {
            let path = shape.path_of(shape.level_offset(level) + idx);
            let (psi, interval) = psi_embed(&path, m);
            prop_assert!(psi > prev);
            prop_assert!(interval[0] == psi && interval[1] > interval[0]);
            prev = psi;
        }
    }
}
