//! Seeded generators for the randomized verification suites.
//!
//! The generator is fixed (ChaCha8 keyed by the suite seed, vertices visited
//! in rank order, values uniform on the stated ranges) so that suites are
//! reproducible and portable across implementations.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::datum::InitialDatum;
use crate::tree::TreeShape;

/// A random finite-support datum: every vertex with level < max entry level
/// `a` gets a uniform value in [-1, 1], with roughly 30% zeroed so supports
/// vary in shape. The top level always carries at least one nonzero entry,
/// pinning a(f) = a.
pub fn finite_support_datum(shape: &TreeShape, a: usize, seed: u64) -> InitialDatum {
    assert!(a >= 1 && a <= shape.depth() + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for level in 0..a {
        for idx in 0..shape.level_len(level) {
            let rank = shape.level_offset(level) + idx;
            if rng.gen_bool(0.7) {
                let v: f64 = rng.gen_range(-1.0..1.0);
                entries.push((shape.path_of(rank), v));
            }
        }
    }
    let top_off = shape.level_offset(a - 1);
    let top_idx = rng.gen_range(0..shape.level_len(a - 1));
    let v: f64 = rng.gen_range(0.5..1.0);
    entries.push((shape.path_of(top_off + top_idx), v));
    InitialDatum::finite(entries)
}

/// A pointwise-ordered pair f <= g of finite-support data: f dense uniform
/// on [-1, 1] up to the given level, g = f plus a nonnegative increment.
pub fn ordered_pair(shape: &TreeShape, a: usize, seed: u64) -> (InitialDatum, InitialDatum) {
    assert!(a >= 1 && a <= shape.depth() + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for level in 0..a {
        for idx in 0..shape.level_len(level) {
            let rank = shape.level_offset(level) + idx;
            let path = shape.path_of(rank);
            let f: f64 = rng.gen_range(-1.0..1.0);
            let bump: f64 = rng.gen_range(0.0..0.5);
            lower.push((path.clone(), f));
            upper.push((path, f + bump));
        }
    }
    (InitialDatum::finite(lower), InitialDatum::finite(upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::enumerate_vertices;

    #[test]
    fn datum_has_requested_support() {
        let shape = TreeShape::new(3, 4).unwrap();
        for seed in 0..20 {
            let f = finite_support_datum(&shape, 3, seed);
            assert_eq!(f.support_level(), Some(3), "seed {seed}");
            assert!(f.sup_norm() <= 1.0);
        }
    }

    #[test]
    fn pair_is_ordered_everywhere() {
        let shape = TreeShape::new(2, 4).unwrap();
        for seed in 0..20 {
            let (f, g) = ordered_pair(&shape, 3, seed);
            for path in enumerate_vertices(&shape) {
                assert!(f.value(&path, &shape) <= g.value(&path, &shape));
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let shape = TreeShape::new(2, 3).unwrap();
        assert_eq!(
            finite_support_datum(&shape, 2, 9),
            finite_support_datum(&shape, 2, 9)
        );
    }
}
