//! Addressing, enumeration and embedding of vertices of the truncated
//! directed m-ary tree.
//!
//! Vertices are finite digit sequences over {0,..,m-1}; the empty sequence
//! is the root. Storage uses level-order ranks in a flat layout so that the
//! children of a vertex form a contiguous block, which keeps the time
//! stepping cache friendly. Branching m >= 2 is accepted (nothing downstream
//! needs m > 2).

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default cap on stored vertices; exceeding it is an error, never a silent
/// truncation.
pub const DEFAULT_VERTEX_BUDGET: usize = 5_000_000;

/// A vertex address: the digit sequence leading from the root.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct VertexPath {
    digits: Vec<u8>,
}

impl VertexPath {
    /// The root, written `∅` in the underlying notation.
    pub fn root() -> Self {
        VertexPath { digits: Vec::new() }
    }

    /// Build a path, validating every digit against the branching.
    pub fn new(digits: Vec<u8>, m: usize) -> Result<Self> {
        for &d in &digits {
            if (d as usize) >= m {
                return Err(Error::DigitOutOfRange {
                    digit: d as u32,
                    m,
                });
            }
        }
        Ok(VertexPath { digits })
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    /// Level = number of digits; the root has level 0.
    pub fn level(&self) -> usize {
        self.digits.len()
    }

    pub fn is_root(&self) -> bool {
        self.digits.is_empty()
    }

    /// The path extended by one digit.
    pub fn child(&self, digit: u8) -> Self {
        let mut digits = self.digits.clone();
        digits.push(digit);
        VertexPath { digits }
    }

    pub fn parent(&self) -> Option<Self> {
        if self.digits.is_empty() {
            None
        } else {
            Some(VertexPath {
                digits: self.digits[..self.digits.len() - 1].to_vec(),
            })
        }
    }
}

// Level-then-lexicographic order, matching the storage rank order.
impl Ord for VertexPath {
    fn cmp(&self, other: &Self) -> Ordering {
        self.level()
            .cmp(&other.level())
            .then_with(|| self.digits.cmp(&other.digits))
    }
}

impl PartialOrd for VertexPath {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Serialized form: dot-separated digits, empty string for the root.
impl fmt::Display for VertexPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for d in &self.digits {
            if !first {
                write!(f, ".")?;
            }
            write!(f, "{d}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for VertexPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Ok(VertexPath::root());
        }
        let mut digits = Vec::new();
        for part in s.split('.') {
            let d: u8 = part
                .parse()
                .map_err(|_| Error::BadPath(s.to_string()))?;
            digits.push(d);
        }
        Ok(VertexPath { digits })
    }
}

impl Serialize for VertexPath {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for VertexPath {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The truncated regular tree: branching m and maximum stored level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeShape {
    branching: usize,
    depth: usize,
}

impl TreeShape {
    pub fn new(branching: usize, depth: usize) -> Result<Self> {
        Self::with_budget(branching, depth, DEFAULT_VERTEX_BUDGET)
    }

    pub fn with_budget(branching: usize, depth: usize, budget: usize) -> Result<Self> {
        if branching < 2 {
            return Err(Error::BadBranching(branching));
        }
        let count = geometric_count(branching, depth);
        if count > budget as u128 {
            return Err(Error::VertexBudget {
                m: branching,
                depth,
                count,
                budget,
            });
        }
        Ok(TreeShape { branching, depth })
    }

    pub fn branching(&self) -> usize {
        self.branching
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Number of stored vertices, (m^(L+1) - 1)/(m - 1).
    pub fn vertex_count(&self) -> usize {
        geometric_count(self.branching, self.depth) as usize
    }

    /// Rank of the first vertex of `level`, (m^level - 1)/(m - 1).
    pub fn level_offset(&self, level: usize) -> usize {
        geometric_count_below(self.branching, level) as usize
    }

    /// Number of vertices at `level`, m^level.
    pub fn level_len(&self, level: usize) -> usize {
        (self.branching as u128).pow(level as u32) as usize
    }

    pub fn level_of_rank(&self, rank: usize) -> usize {
        debug_assert!(rank < self.vertex_count());
        let mut level = 0;
        let mut next = 1u128; // offset of level 1
        while (rank as u128) >= next {
            level += 1;
            next += (self.branching as u128).pow(level as u32);
        }
        level
    }

    /// Rank of child `digit` of the vertex at `rank`, if it is stored.
    pub fn child_rank(&self, rank: usize, digit: usize) -> Option<usize> {
        let level = self.level_of_rank(rank);
        if level >= self.depth {
            return None;
        }
        let idx = rank - self.level_offset(level);
        Some(self.level_offset(level + 1) + idx * self.branching + digit)
    }

    /// Rank of the first child, when stored. The m children are contiguous.
    pub fn first_child_rank(&self, rank: usize) -> Option<usize> {
        self.child_rank(rank, 0)
    }

    pub fn parent_rank(&self, rank: usize) -> Option<usize> {
        let level = self.level_of_rank(rank);
        if level == 0 {
            return None;
        }
        let idx = rank - self.level_offset(level);
        Some(self.level_offset(level - 1) + idx / self.branching)
    }

    /// Level-order rank of a path. Independent of the stored depth, so ranks
    /// agree between truncations of the same tree.
    pub fn rank_of(&self, path: &VertexPath) -> usize {
        let mut idx = 0usize;
        for &d in path.digits() {
            idx = idx * self.branching + d as usize;
        }
        self.level_offset(path.level()) + idx
    }

    pub fn path_of(&self, rank: usize) -> VertexPath {
        let level = self.level_of_rank(rank);
        let mut idx = rank - self.level_offset(level);
        let mut digits = vec![0u8; level];
        for slot in digits.iter_mut().rev() {
            *slot = (idx % self.branching) as u8;
            idx /= self.branching;
        }
        VertexPath { digits }
    }
}

fn geometric_count(m: usize, depth: usize) -> u128 {
    geometric_count_below(m, depth + 1)
}

fn geometric_count_below(m: usize, level: usize) -> u128 {
    // (m^level - 1)/(m - 1) summed to dodge pow overflow on silly inputs
    let mut total = 0u128;
    let mut layer = 1u128;
    for _ in 0..level {
        total = total.saturating_add(layer);
        layer = layer.saturating_mul(m as u128);
    }
    total
}

/// The m successors of `path`, in digit order.
pub fn successors(path: &VertexPath, shape: &TreeShape) -> Result<Vec<VertexPath>> {
    if path.level() >= shape.depth() {
        return Err(Error::TruncationBoundary {
            level: path.level(),
            depth: shape.depth(),
        });
    }
    Ok((0..shape.branching())
        .map(|d| path.child(d as u8))
        .collect())
}

/// All stored vertices in level-then-lexicographic order, root first.
pub fn enumerate_vertices(shape: &TreeShape) -> Vec<VertexPath> {
    (0..shape.vertex_count())
        .map(|rank| shape.path_of(rank))
        .collect()
}

/// Base-m embedding ψ(x) = Σ a_k m^{-k}, together with the interval
/// I_x = [ψ(x), ψ(x) + m^{-level}] carried by the vertex.
pub fn psi_embed(path: &VertexPath, m: usize) -> (f64, [f64; 2]) {
    let mut psi = 0.0;
    let mut scale = 1.0;
    for &d in path.digits() {
        scale /= m as f64;
        psi += d as f64 * scale;
    }
    (psi, [psi, psi + scale])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(digits: &[u8]) -> VertexPath {
        VertexPath::new(digits.to_vec(), 10).unwrap()
    }

    #[test]
    fn successors_of_root_m3() {
        let shape = TreeShape::new(3, 2).unwrap();
        let kids = successors(&VertexPath::root(), &shape).unwrap();
        assert_eq!(kids, vec![path(&[0]), path(&[1]), path(&[2])]);
    }

    #[test]
    fn successors_extend_digits() {
        let shape = TreeShape::new(2, 3).unwrap();
        let kids = successors(&path(&[1]), &shape).unwrap();
        assert_eq!(kids, vec![path(&[1, 0]), path(&[1, 1])]);

        let shape = TreeShape::new(3, 3).unwrap();
        let kids = successors(&path(&[0, 2]), &shape).unwrap();
        assert_eq!(kids, vec![path(&[0, 2, 0]), path(&[0, 2, 1]), path(&[0, 2, 2])]);
    }

    #[test]
    fn successors_below_depth_error() {
        let shape = TreeShape::new(2, 1).unwrap();
        assert!(successors(&path(&[0]), &shape).is_err());
    }

    #[test]
    fn enumeration_counts() {
        let shape = TreeShape::new(2, 1).unwrap();
        let all = enumerate_vertices(&shape);
        assert_eq!(all, vec![VertexPath::root(), path(&[0]), path(&[1])]);

        assert_eq!(TreeShape::new(3, 2).unwrap().vertex_count(), 13);
        assert_eq!(TreeShape::new(2, 0).unwrap().vertex_count(), 1);
    }

    #[test]
    fn vertex_budget_enforced() {
        match TreeShape::with_budget(3, 10, 1000) {
            Err(Error::VertexBudget { count, .. }) => assert_eq!(count, 88573),
            other => panic!("expected budget error, got {other:?}"),
        }
        assert!(TreeShape::new(2, 40).is_err());
    }

    #[test]
    fn psi_examples() {
        let (psi, interval) = psi_embed(&path(&[1]), 3);
        assert!((psi - 1.0 / 3.0).abs() < 1e-15);
        assert!((interval[1] - 2.0 / 3.0).abs() < 1e-15);

        let (psi, interval) = psi_embed(&VertexPath::root(), 2);
        assert_eq!(psi, 0.0);
        assert_eq!(interval, [0.0, 1.0]);

        let (psi, interval) = psi_embed(&path(&[2, 0]), 3);
        assert!((psi - 2.0 / 3.0).abs() < 1e-15);
        assert!((interval[1] - (2.0 / 3.0 + 1.0 / 9.0)).abs() < 1e-15);
    }

    #[test]
    fn child_intervals_tile_parent() {
        let shape = TreeShape::new(3, 2).unwrap();
        let parent = path(&[1]);
        let (_, parent_iv) = psi_embed(&parent, 3);
        let kids = successors(&parent, &shape).unwrap();
        let mut lo = parent_iv[0];
        for kid in &kids {
            let (_, iv) = psi_embed(kid, 3);
            assert!((iv[0] - lo).abs() < 1e-15);
            assert!(iv[0] >= parent_iv[0] - 1e-15 && iv[1] <= parent_iv[1] + 1e-15);
            lo = iv[1];
        }
        assert!((lo - parent_iv[1]).abs() < 1e-15);
    }

    #[test]
    fn rank_arithmetic_round_trips() {
        let shape = TreeShape::new(3, 4).unwrap();
        for rank in 0..shape.vertex_count() {
            let p = shape.path_of(rank);
            assert_eq!(shape.rank_of(&p), rank);
            if let Some(c0) = shape.first_child_rank(rank) {
                for j in 0..3 {
                    assert_eq!(shape.parent_rank(c0 + j).unwrap(), rank);
                    assert_eq!(shape.path_of(c0 + j), p.child(j as u8));
                }
            }
        }
    }

    #[test]
    fn path_string_round_trip() {
        let p = path(&[0, 2, 1]);
        assert_eq!(p.to_string(), "0.2.1");
        assert_eq!("0.2.1".parse::<VertexPath>().unwrap(), p);
        assert_eq!("".parse::<VertexPath>().unwrap(), VertexPath::root());
        assert!("0.x".parse::<VertexPath>().is_err());
    }

    #[test]
    fn digit_validation() {
        assert!(VertexPath::new(vec![0, 3], 3).is_err());
        assert!(VertexPath::new(vec![0, 2], 3).is_ok());
    }
}
