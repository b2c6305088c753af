//! Hypercube vertices, vertex subsets and monotone (upward closed) sets.
//!
//! A vertex of `{0,1}^n` is an integer in `0..2^n`. Coordinate `i`
//! (0-based, so `x_{i+1}` in one-based notation) lives in bit `i`. This
//! mapping is frozen: the `.mset` format and every function table in the
//! crate index vertices this way.
//!
//! Bitstrings are written `x_1 x_2 ... x_n` from left to right, so the
//! string `"01"` is the vertex with `x_1 = 0, x_2 = 1`, i.e. index 2.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIM: u32 = 24;

/// A hypercube vertex. Bit `i` of the index is coordinate `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Vertex(pub u32);

impl Vertex {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn bit(self, coord: usize) -> bool {
        (self.0 >> coord) & 1 == 1
    }

    /// `x` with coordinate `coord` flipped.
    pub fn flip(self, coord: usize) -> Vertex {
        Vertex(self.0 ^ (1 << coord))
    }

    /// `x` with coordinate `coord` set to `b`.
    pub fn with(self, coord: usize, b: bool) -> Vertex {
        if b {
            Vertex(self.0 | (1 << coord))
        } else {
            Vertex(self.0 & !(1 << coord))
        }
    }

    /// Hamming weight `|x|`.
    pub fn weight(self) -> u32 {
        self.0.count_ones()
    }

    /// Coordinatewise order `self ⪯ other`.
    pub fn precedes(self, other: Vertex) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn to_bitstring(self, n: u32) -> String {
        (0..n as usize)
            .map(|i| if self.bit(i) { '1' } else { '0' })
            .collect()
    }

    /// Parse an `x_1 ... x_n` bitstring.
    pub fn parse_bitstring(s: &str) -> Result<(Vertex, u32)> {
        let n = s.len() as u32;
        if n == 0 || n > MAX_DIM {
            return Err(Error::ParamOutOfRange(format!("bitstring {s:?}")));
        }
        let mut v = 0u32;
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => v |= 1 << i,
                _ => return Err(Error::ParamOutOfRange(format!("bitstring {s:?}"))),
            }
        }
        Ok((Vertex(v), n))
    }
}

fn check_dim(n: u32) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        Err(Error::Dimension(n))
    } else {
        Ok(())
    }
}

/// An arbitrary subset of `{0,1}^n`, stored as a bitmask plus the sorted
/// member list. Functions "on the set" are slices indexed by position in
/// [`VertexSet::members`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexSet {
    n: u32,
    words: Vec<u64>,
    members: Vec<u32>,
}

impl VertexSet {
    pub fn empty(n: u32) -> Result<Self> {
        check_dim(n)?;
        let words = vec![0u64; (1usize << n).div_ceil(64)];
        Ok(VertexSet {
            n,
            words,
            members: Vec::new(),
        })
    }

    pub fn full(n: u32) -> Result<Self> {
        Self::from_predicate(n, |_| true)
    }

    pub fn from_predicate(n: u32, pred: impl Fn(u32) -> bool) -> Result<Self> {
        check_dim(n)?;
        let mut words = vec![0u64; (1usize << n).div_ceil(64)];
        let mut members = Vec::new();
        for v in 0..(1u32 << n) {
            if pred(v) {
                words[(v >> 6) as usize] |= 1 << (v & 63);
                members.push(v);
            }
        }
        Ok(VertexSet { n, words, members })
    }

    pub fn from_mask(n: u32, mask: &[bool]) -> Result<Self> {
        check_dim(n)?;
        if mask.len() != 1usize << n {
            return Err(Error::MaskLength {
                n,
                expected: 1 << n,
                found: mask.len(),
            });
        }
        Self::from_predicate(n, |v| mask[v as usize])
    }

    pub fn from_members(n: u32, members: impl IntoIterator<Item = u32>) -> Result<Self> {
        let mut set = Self::empty(n)?;
        for v in members {
            if v >= 1 << n {
                return Err(Error::ParamOutOfRange(format!("vertex {v} for n = {n}")));
            }
            set.words[(v >> 6) as usize] |= 1 << (v & 63);
        }
        set.rebuild_members();
        Ok(set)
    }

    fn rebuild_members(&mut self) {
        self.members = (0..(1u32 << self.n))
            .filter(|&v| self.contains(v))
            .collect();
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `μ(A) = |A| / 2^n`.
    pub fn density(&self) -> f64 {
        self.len() as f64 / (1u64 << self.n) as f64
    }

    pub fn contains(&self, v: u32) -> bool {
        (v >> self.n) == 0 && (self.words[(v >> 6) as usize] >> (v & 63)) & 1 == 1
    }

    /// Members in ascending index order.
    pub fn members(&self) -> &[u32] {
        &self.members
    }

    /// Position of `v` in [`members`](Self::members).
    pub fn position(&self, v: u32) -> Option<usize> {
        self.members.binary_search(&v).ok()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn to_mask(&self) -> Vec<bool> {
        (0..(1u32 << self.n)).map(|v| self.contains(v)).collect()
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.n == other.n
            && self
                .words
                .iter()
                .zip(&other.words)
                .all(|(a, b)| a & !b == 0)
    }

    /// First covering edge `x → x ∪ {i}` leaving the set, if any.
    pub fn first_violation(&self) -> Option<(u32, u32)> {
        for &v in &self.members {
            for i in 0..self.n {
                let up = v | (1 << i);
                if up != v && !self.contains(up) {
                    return Some((v, up));
                }
            }
        }
        None
    }

    pub fn is_upward_closed(&self) -> bool {
        self.first_violation().is_none()
    }

    /// Members with no lower cover inside the set.
    pub fn minimal_elements(&self) -> Vec<u32> {
        self.members
            .iter()
            .copied()
            .filter(|&v| (0..self.n).all(|i| v & (1 << i) == 0 || !self.contains(v ^ (1 << i))))
            .collect()
    }

    /// Induced-subgraph adjacency in local (member position) indices.
    pub fn induced_neighbors(&self) -> Vec<Vec<usize>> {
        self.members
            .iter()
            .map(|&v| {
                (0..self.n)
                    .filter_map(|i| self.position(v ^ (1 << i)))
                    .collect()
            })
            .collect()
    }
}

/// A validated upward-closed subset of `{0,1}^n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotoneSet(VertexSet);

impl std::ops::Deref for MonotoneSet {
    type Target = VertexSet;
    fn deref(&self) -> &VertexSet {
        &self.0
    }
}

impl AsRef<VertexSet> for MonotoneSet {
    fn as_ref(&self) -> &VertexSet {
        &self.0
    }
}

impl AsRef<VertexSet> for VertexSet {
    fn as_ref(&self) -> &VertexSet {
        self
    }
}

impl MonotoneSet {
    pub fn full(n: u32) -> Result<Self> {
        Ok(MonotoneSet(VertexSet::full(n)?))
    }

    pub fn as_set(&self) -> &VertexSet {
        &self.0
    }

    pub fn into_set(self) -> VertexSet {
        self.0
    }
}

impl TryFrom<VertexSet> for MonotoneSet {
    type Error = Error;
    fn try_from(set: VertexSet) -> Result<Self> {
        validate_monotone(set)
    }
}

/// Accept `set` iff it is upward closed; otherwise report a witness edge.
/// The empty set and `{1...1}` are valid; check [`VertexSet::len`] before
/// spectral or variance work.
pub fn validate_monotone(set: VertexSet) -> Result<MonotoneSet> {
    match set.first_violation() {
        None => Ok(MonotoneSet(set)),
        Some((from, to)) => Err(Error::NotMonotone {
            from: Vertex(from).to_bitstring(set.n),
            to: Vertex(to).to_bitstring(set.n),
        }),
    }
}

/// Smallest upward-closed superset.
pub fn upward_closure(set: &VertexSet) -> MonotoneSet {
    let n = set.n;
    let mut closed = set.clone();
    // v | bit > v, so one ascending pass propagates everything
    for v in 0..(1u32 << n) {
        if closed.contains(v) {
            for i in 0..n {
                let up = v | (1 << i);
                closed.words[(up >> 6) as usize] |= 1 << (up & 63);
            }
        }
    }
    closed.rebuild_members();
    MonotoneSet(closed)
}

/// Upward closure of an i.i.d. Bernoulli(`p`) mask.
pub fn random_monotone(n: u32, p: f64, seed: u64) -> Result<MonotoneSet> {
    check_dim(n)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::ParamOutOfRange(format!(
            "bias p = {p} must lie in (0, 1)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask: Vec<bool> = (0..(1usize << n)).map(|_| rng.random_bool(p)).collect();
    Ok(upward_closure(&VertexSet::from_mask(n, &mask)?))
}

/// Every monotone subset of `{0,1}^n`, the empty set included. `n <= 5`.
pub fn enumerate_all_monotone(n: u32) -> Result<Vec<MonotoneSet>> {
    check_dim(n)?;
    if n > 5 {
        return Err(Error::ParamOutOfRange(format!(
            "enumeration supports n <= 5, got {n}"
        )));
    }
    let size = 1u32 << n;
    let mut masks = Vec::new();
    // decreasing index is a linear extension with upper covers first
    fn extend(v: i64, n: u32, mask: u64, out: &mut Vec<u64>) {
        if v < 0 {
            out.push(mask);
            return;
        }
        let v = v as u32;
        extend(v as i64 - 1, n, mask, out);
        let covers_in = (0..n).all(|i| v & (1 << i) != 0 || mask >> (v | (1 << i)) & 1 == 1);
        if covers_in {
            extend(v as i64 - 1, n, mask | 1 << v, out);
        }
    }
    extend(size as i64 - 1, n, 0, &mut masks);
    masks
        .into_iter()
        .map(|m| VertexSet::from_predicate(n, |v| m >> v & 1 == 1).map(MonotoneSet))
        .collect()
}

/// The example families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    FullCube {
        n: u32,
    },
    /// `{x : |x| != floor(n/2)} ∪ {x_star}`; not monotone.
    MiddleSliceBridge {
        n: u32,
        x_star: u32,
    },
    /// Union of the subcubes fixing the first `m` and the next `m`
    /// coordinates to 1. Needs `n/4 <= m <= n/2`.
    TwoSubcubes {
        n: u32,
        m: u32,
    },
    /// `{x : Σ a_i x_i >= b}` with `a_i >= 0`.
    Halfspace {
        n: u32,
        a: Vec<f64>,
        b: f64,
    },
    /// `{x : |x| >= k}`.
    WeightThreshold {
        n: u32,
        k: u32,
    },
}

/// Result of [`named_family`]: every family is monotone except the bridge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilySet {
    Monotone(MonotoneSet),
    NonMonotone(VertexSet),
}

impl FamilySet {
    pub fn set(&self) -> &VertexSet {
        match self {
            FamilySet::Monotone(m) => m.as_set(),
            FamilySet::NonMonotone(s) => s,
        }
    }

    pub fn monotone(&self) -> Option<&MonotoneSet> {
        match self {
            FamilySet::Monotone(m) => Some(m),
            FamilySet::NonMonotone(_) => None,
        }
    }

    pub fn into_monotone(self) -> Option<MonotoneSet> {
        match self {
            FamilySet::Monotone(m) => Some(m),
            FamilySet::NonMonotone(_) => None,
        }
    }
}

impl Family {
    pub fn n(&self) -> u32 {
        match *self {
            Family::FullCube { n }
            | Family::MiddleSliceBridge { n, .. }
            | Family::TwoSubcubes { n, .. }
            | Family::Halfspace { n, .. }
            | Family::WeightThreshold { n, .. } => n,
        }
    }

    /// Bridge with the default crossing vertex `1..10..0`.
    pub fn middle_slice_bridge(n: u32) -> Family {
        Family::MiddleSliceBridge {
            n,
            x_star: (1u32 << (n / 2)) - 1,
        }
    }
}

pub fn named_family(family: &Family) -> Result<FamilySet> {
    let n = family.n();
    check_dim(n)?;
    let out_of_range = |msg: String| Err(Error::ParamOutOfRange(msg));
    let set = match family {
        Family::FullCube { .. } => VertexSet::full(n)?,
        Family::MiddleSliceBridge { x_star, .. } => {
            let k = n / 2;
            if *x_star >= 1 << n || x_star.count_ones() != k {
                return out_of_range(format!("x_star must have weight {k}"));
            }
            let set = VertexSet::from_predicate(n, |v| v.count_ones() != k || v == *x_star)?;
            return Ok(FamilySet::NonMonotone(set));
        }
        Family::TwoSubcubes { m, .. } => {
            let m = *m;
            if 4 * m < n || 2 * m > n || m == 0 {
                return out_of_range(format!(
                    "two_subcubes needs n/4 <= m <= n/2, got n={n}, m={m}"
                ));
            }
            let low = (1u32 << m) - 1;
            let high = low << m;
            VertexSet::from_predicate(n, |v| v & low == low || v & high == high)?
        }
        Family::Halfspace { a, b, .. } => {
            if a.len() != n as usize {
                return out_of_range(format!("halfspace needs {n} coefficients, got {}", a.len()));
            }
            if a.iter().any(|&ai| !(ai >= 0.0 && ai.is_finite())) || !b.is_finite() {
                return out_of_range(
                    "halfspace coefficients must be finite and nonnegative".into(),
                );
            }
            VertexSet::from_predicate(n, |v| {
                let s: f64 = (0..n as usize)
                    .filter(|&i| v >> i & 1 == 1)
                    .map(|i| a[i])
                    .sum();
                s >= *b
            })?
        }
        Family::WeightThreshold { k, .. } => {
            if *k > n {
                return out_of_range(format!("weight threshold k = {k} exceeds n = {n}"));
            }
            VertexSet::from_predicate(n, |v| v.count_ones() >= *k)?
        }
    };
    Ok(FamilySet::Monotone(validate_monotone(set)?))
}
