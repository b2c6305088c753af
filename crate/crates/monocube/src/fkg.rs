//! Survival-function measures, the `K_c` pairing, and covariance lower
//! bounds for pairs of random variables with finite support.

use serde::{Deserialize, Serialize};

use crate::cube::VertexSet;
use crate::error::{Error, Result};
use crate::report::{Relation, VerificationReport};

/// Finite atomic measure on `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    atoms: Vec<(f64, f64)>,
}

impl DiscreteMeasure {
    /// Atoms at positions 0 or 1 are dropped: every `K_c` integrand
    /// vanishes there.
    pub fn new(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut kept = Vec::new();
        for (x, m) in atoms {
            if !(0.0..=1.0).contains(&x) || !(m >= 0.0 && m.is_finite()) {
                return Err(Error::ParamOutOfRange(format!("atom ({x}, {m})")));
            }
            if x > 0.0 && x < 1.0 && m > 0.0 {
                kept.push((x, m));
            }
        }
        Ok(DiscreteMeasure { atoms: kept })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// Image under `x ↦ 1 - x`.
    pub fn reverse(&self) -> DiscreteMeasure {
        DiscreteMeasure {
            atoms: self.atoms.iter().map(|&(x, m)| (1.0 - x, m)).collect(),
        }
    }
}

/// Sort by value, merge ties, drop zero probabilities.
fn normalize_dist(dist: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    if dist
        .iter()
        .any(|&(v, p)| !v.is_finite() || !(p >= 0.0 && p.is_finite()))
    {
        return Err(Error::InvalidJoint(
            "values must be finite, probabilities >= 0".into(),
        ));
    }
    let mut d: Vec<(f64, f64)> = dist.iter().copied().filter(|&(_, p)| p > 0.0).collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(d.len());
    for (v, p) in d {
        match merged.last_mut() {
            Some(last) if last.0 == v => last.1 += p,
            _ => merged.push((v, p)),
        }
    }
    Ok(merged)
}

/// Measure of `a ↦ P[X >= a]`: for sorted support `v_1 < ... < v_k`, an atom
/// at `P[X >= v_i]` with mass `v_i - v_{i-1}` for `i = 2..k`.
pub fn pushforward(dist: &[(f64, f64)]) -> Result<DiscreteMeasure> {
    let d = normalize_dist(dist)?;
    if d.is_empty() {
        return Err(Error::EmptySupport);
    }
    let mut tail = vec![0.0; d.len() + 1];
    for i in (0..d.len()).rev() {
        tail[i] = tail[i + 1] + d[i].1;
    }
    let atoms = (1..d.len()).map(|i| (tail[i].clamp(0.0, 1.0), d[i].0 - d[i - 1].0));
    DiscreteMeasure::new(atoms)
}

fn check_c(c: f64) -> Result<()> {
    if (0.0..1.0).contains(&c) {
        Ok(())
    } else {
        Err(Error::BadC(c))
    }
}

/// `K_c(λ, ν) = ΣΣ m m' min{ √(1-c) x y, (1-x)(1-y)/√(1-c) }`.
pub fn k_c(lambda: &DiscreteMeasure, nu: &DiscreteMeasure, c: f64) -> Result<f64> {
    check_c(c)?;
    let s = (1.0 - c).sqrt();
    let mut total = 0.0;
    for &(x, m) in &lambda.atoms {
        for &(y, mm) in &nu.atoms {
            total += m * mm * (s * x * y).min((1.0 - x) * (1.0 - y) / s);
        }
    }
    Ok(total)
}

/// Joint law of `(X, Y)` with finite support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteJoint {
    support: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean_x: f64,
    pub mean_y: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub cov: f64,
}

impl FiniteJoint {
    /// Probabilities must be nonnegative and sum to 1 within `1e-14`.
    pub fn new(support: Vec<(f64, f64, f64)>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidJoint("empty support".into()));
        }
        if support
            .iter()
            .any(|&(x, y, p)| !x.is_finite() || !y.is_finite() || !(p >= 0.0 && p.is_finite()))
        {
            return Err(Error::InvalidJoint(
                "values must be finite, probabilities >= 0".into(),
            ));
        }
        let total: f64 = support.iter().map(|s| s.2).sum();
        if (total - 1.0).abs() > 1e-14 {
            return Err(Error::InvalidJoint(format!("probabilities sum to {total}")));
        }
        Ok(FiniteJoint { support })
    }

    pub fn support(&self) -> &[(f64, f64, f64)] {
        &self.support
    }

    pub fn marginal_x(&self) -> Vec<(f64, f64)> {
        normalize_dist(&self.support.iter().map(|s| (s.0, s.2)).collect::<Vec<_>>()).unwrap()
    }

    pub fn marginal_y(&self) -> Vec<(f64, f64)> {
        normalize_dist(&self.support.iter().map(|s| (s.1, s.2)).collect::<Vec<_>>()).unwrap()
    }

    pub fn moments(&self) -> Moments {
        let mean_x: f64 = self.support.iter().map(|s| s.0 * s.2).sum();
        let mean_y: f64 = self.support.iter().map(|s| s.1 * s.2).sum();
        let (mut var_x, mut var_y, mut cov) = (0.0, 0.0, 0.0);
        for &(x, y, p) in &self.support {
            var_x += p * (x - mean_x) * (x - mean_x);
            var_y += p * (y - mean_y) * (y - mean_y);
            cov += p * (x - mean_x) * (y - mean_y);
        }
        Moments {
            mean_x,
            mean_y,
            var_x,
            var_y,
            cov,
        }
    }

    /// Parse `x,y,p` CSV; a header line starting with `x` is allowed.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut support = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || (i == 0 && line.starts_with('x')) {
                continue;
            }
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || Error::Parse {
                line: i + 1,
                msg: format!("expected `x,y,p`, got {line:?}"),
            };
            if parts.len() != 3 {
                return Err(bad());
            }
            let nums: Vec<f64> = parts
                .iter()
                .map(|p| p.parse::<f64>().map_err(|_| bad()))
                .collect::<Result<_>>()?;
            support.push((nums[0], nums[1], nums[2]));
        }
        Self::new(support)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestC {
    pub c: f64,
    /// Threshold pair attaining the minimum ratio, if any is below 1.
    pub argmin: Option<(f64, f64)>,
}

/// Largest `c <= 1` with `P[X>=a, Y>=b] >= c P[X>=a] P[Y>=b]` for all
/// `(a, b)`; thresholds range over support values.
pub fn best_c(joint: &FiniteJoint) -> BestC {
    let xs: Vec<f64> = joint.marginal_x().into_iter().map(|d| d.0).collect();
    let ys: Vec<f64> = joint.marginal_y().into_iter().map(|d| d.0).collect();
    let (kx, ky) = (xs.len(), ys.len());
    let mut grid = vec![vec![0.0; ky + 1]; kx + 1];
    for &(x, y, p) in joint.support() {
        if p > 0.0 {
            let i = xs.binary_search_by(|v| v.total_cmp(&x)).unwrap();
            let j = ys.binary_search_by(|v| v.total_cmp(&y)).unwrap();
            grid[i][j] += p;
        }
    }
    // suffix sums: tail[i][j] = P[X >= xs[i], Y >= ys[j]]
    let mut tail = vec![vec![0.0; ky + 1]; kx + 1];
    for i in (0..kx).rev() {
        for j in (0..ky).rev() {
            tail[i][j] = grid[i][j] + tail[i + 1][j] + tail[i][j + 1] - tail[i + 1][j + 1];
        }
    }
    let px: Vec<f64> = (0..kx).map(|i| tail[i][0]).collect();
    let py: Vec<f64> = (0..ky).map(|j| tail[0][j]).collect();
    let mut best = BestC {
        c: 1.0,
        argmin: None,
    };
    for i in 0..kx {
        for j in 0..ky {
            let denom = px[i] * py[j];
            if denom <= 0.0 {
                continue;
            }
            let ratio = tail[i][j].max(0.0) / denom;
            if ratio < best.c {
                best = BestC {
                    c: ratio,
                    argmin: Some((xs[i], ys[j])),
                };
            }
        }
    }
    best
}

/// `Cov ≥ -√((1-c) Var X Var Y)` with `c` from [`best_c`], plus the two
/// intermediate steps through `K_c`. When `c = 1` the `K_c` steps are
/// vacuous and omitted.
pub fn fkg_theorem_check(joint: &FiniteJoint) -> Result<VerificationReport> {
    let m = joint.moments();
    if m.var_x <= 0.0 || m.var_y <= 0.0 {
        return Err(Error::DegenerateMarginal);
    }
    let bc = best_c(joint);
    let c = bc.c;
    let bound = -((1.0 - c) * m.var_x * m.var_y).sqrt();
    let mut report = VerificationReport::new(
        "covariance_lower_bound",
        m.cov,
        Relation::AtLeast,
        bound,
        1e-12,
    )
    .quantity("c", c)
    .quantity("cov", m.cov)
    .quantity("var_x", m.var_x)
    .quantity("var_y", m.var_y);
    if c < 1.0 {
        let alpha = pushforward(&joint.marginal_x())?;
        let beta = pushforward(&joint.marginal_y())?;
        let kab = k_c(&alpha, &beta, c)?;
        let kaa = k_c(&alpha, &alpha.reverse(), 0.0)?;
        let kbb = k_c(&beta, &beta.reverse(), 0.0)?;
        report = report
            .quantity("k_c_alpha_beta", kab)
            .quantity("k_alpha_alpha_rev", kaa)
            .quantity("k_beta_beta_rev", kbb)
            .step(VerificationReport::new(
                "covariance_via_k_c",
                m.cov,
                Relation::AtLeast,
                -(1.0 - c).sqrt() * kab,
                1e-10,
            ))
            .step(VerificationReport::new(
                "k_c_cauchy_schwarz",
                kab * kab,
                Relation::AtMost,
                kaa * kbb,
                1e-10,
            ));
    }
    Ok(report)
}

/// Closed forms `h(x, y)` and `q(x)` for a fixed `c ∈ [0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HqPair {
    c: f64,
}

impl HqPair {
    pub fn c(&self) -> f64 {
        self.c
    }

    /// `(2 - cx)(2 - c - cy) / (4 (1-cx)^{3/2} (1-cy)^{3/2})`.
    pub fn h(&self, x: f64, y: f64) -> f64 {
        let c = self.c;
        (2.0 - c * x) * (2.0 - c - c * y)
            / (4.0 * (1.0 - c * x).powf(1.5) * (1.0 - c * y).powf(1.5))
    }

    /// `(1 - x) / (1 - cx)`, an involution of `[0, 1]`.
    pub fn q(&self, x: f64) -> f64 {
        (1.0 - x) / (1.0 - self.c * x)
    }

    /// `x (1 - y) / √((1-cx)(1-cy))`, the integral of `h` over
    /// `[0, x] × [y, 1]`.
    pub fn h_integral(&self, x: f64, y: f64) -> f64 {
        x * (1.0 - y) / ((1.0 - self.c * x) * (1.0 - self.c * y)).sqrt()
    }
}

pub fn h_and_q(c: f64) -> Result<HqPair> {
    check_c(c)?;
    Ok(HqPair { c })
}

/// `E_A[1_B 1_C] >= μ(A) E_A[1_B] E_A[1_C]` for up-sets `B, C` inside `A`,
/// compared exactly as `|B ∩ C| · 2^n >= |B| · |C|`.
pub fn zero_one_fkg_check(
    a: &VertexSet,
    b: &VertexSet,
    c: &VertexSet,
) -> Result<VerificationReport> {
    if a.is_empty() {
        return Err(Error::EmptySet);
    }
    for s in [b, c] {
        if !s.is_subset(a) || !s.is_upward_closed() {
            return Err(Error::NotUpset);
        }
    }
    let both = b
        .words()
        .iter()
        .zip(c.words())
        .map(|(x, y)| (x & y).count_ones() as u128)
        .sum::<u128>();
    let lhs_count = both << a.n();
    let rhs_count = b.len() as u128 * c.len() as u128;
    let size = a.len() as f64;
    let lhs = both as f64 / size;
    let rhs = a.density() * (b.len() as f64 / size) * (c.len() as f64 / size);
    let mut report = VerificationReport::new("zero_one_fkg", lhs, Relation::AtLeast, rhs, 0.0)
        .quantity("intersection", both as f64)
        .quantity("size_b", b.len() as f64)
        .quantity("size_c", c.len() as f64);
    // the decision is made on integers
    report.pass = lhs_count >= rhs_count;
    Ok(report)
}

/// The 3×3 joint on `{0, 2, 3}²` for which the covariance bound is tight.
pub fn equality_grid_joint() -> FiniteJoint {
    let fifth = 1.0 / 5.0;
    let fifteenth = 1.0 / 15.0;
    FiniteJoint::new(vec![
        (3.0, 3.0, fifth),
        (3.0, 2.0, fifth),
        (2.0, 3.0, fifth),
        (0.0, 3.0, fifteenth),
        (3.0, 0.0, fifteenth),
        (2.0, 2.0, 4.0 / 15.0),
    ])
    .expect("grid joint is normalized")
}
