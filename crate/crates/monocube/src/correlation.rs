//! Correlation of functions on a set under its uniform measure, and the
//! search for the most negatively correlated pair of monotone functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cube::VertexSet;
use crate::error::{Error, Result};
use crate::projection::{project_monotone, PosetEdges, ProjectionOptions};
use crate::report::{Relation, VerificationReport};
use crate::walk::mean_on;

fn centered(f: &[f64]) -> Vec<f64> {
    let m = mean_on(f);
    f.iter().map(|x| x - m).collect()
}

fn cov(f: &[f64], g: &[f64]) -> f64 {
    let (mf, mg) = (mean_on(f), mean_on(g));
    f.iter()
        .zip(g)
        .map(|(a, b)| (a - mf) * (b - mg))
        .sum::<f64>()
        / f.len() as f64
}

/// Variance below this (relative to the squared scale) counts as constant.
fn is_constant(f: &[f64]) -> bool {
    let scale = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    scale == 0.0 || cov(f, f) <= 1e-28 * scale * scale
}

fn check_pair(set: &VertexSet, f: &[f64], g: &[f64]) -> Result<()> {
    for x in [f, g] {
        if x.len() != set.len() {
            return Err(Error::SizeMismatch {
                expected: set.len(),
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
    }
    Ok(())
}

/// Pearson correlation on the set.
pub fn rho(set: &VertexSet, f: &[f64], g: &[f64]) -> Result<f64> {
    check_pair(set, f, g)?;
    if is_constant(f) || is_constant(g) {
        return Err(Error::ConstantInput);
    }
    Ok((cov(f, g) / (cov(f, f) * cov(g, g)).sqrt()).clamp(-1.0, 1.0))
}

/// `min_{a >= 0, b} ‖f - (a g + b)‖` in `L²` of the set, via
/// `τ² = (1 - max{0, ρ}²) Var f`. A constant `f` gives 0.
pub fn tau(set: &VertexSet, f: &[f64], g: &[f64]) -> Result<f64> {
    check_pair(set, f, g)?;
    if is_constant(g) {
        return Err(Error::ConstantInput);
    }
    let var_f = cov(f, f);
    if is_constant(f) {
        return Ok(var_f.max(0.0).sqrt());
    }
    let r = rho(set, f, g)?.max(0.0);
    Ok(((1.0 - r * r) * var_f).max(0.0).sqrt())
}

/// `ρ(f,g)⁺² + ρ(f,h)⁺² <= 1 + ρ(g,h)⁺`.
pub fn trigonometry_check(
    set: &VertexSet,
    f: &[f64],
    g: &[f64],
    h: &[f64],
) -> Result<VerificationReport> {
    let pos = |x: f64| x.max(0.0);
    let rfg = rho(set, f, g)?;
    let rfh = rho(set, f, h)?;
    let rgh = rho(set, g, h)?;
    let lhs = pos(rfg).powi(2) + pos(rfh).powi(2);
    Ok(VerificationReport::new(
        "correlation_triangle",
        lhs,
        Relation::AtMost,
        1.0 + pos(rgh),
        1e-12,
    )
    .quantity("rho_fg", rfg)
    .quantity("rho_fh", rfh)
    .quantity("rho_gh", rgh))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaSearchOptions {
    pub restarts: usize,
    /// Alternation rounds per restart.
    pub iters: usize,
    pub seed: u64,
    pub projection: ProjectionOptions,
}

impl Default for DeltaSearchOptions {
    fn default() -> Self {
        DeltaSearchOptions {
            restarts: 32,
            iters: 200,
            seed: 0,
            projection: ProjectionOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub n: u32,
    pub mu: f64,
    /// `min{0, best correlation found}`; never below the true infimum.
    pub delta_hat: f64,
    /// Smallest correlation found, before capping at 0; `None` when no
    /// restart produced a pair.
    pub best_rho: Option<f64>,
    /// `-sqrt(1 - μ)`.
    pub bound: f64,
    /// `delta_hat - bound`.
    pub margin: f64,
    pub pass: bool,
    /// Most anti-correlated pair found, centered with unit variance, in
    /// member order. `None` when every restart degenerated.
    pub witness_g: Option<Vec<f64>>,
    pub witness_h: Option<Vec<f64>>,
    pub restarts: usize,
}

/// Center and scale to unit variance; `None` for (numerically) constant
/// input.
fn standardize(f: &[f64]) -> Option<Vec<f64>> {
    let c = centered(f);
    let var = c.iter().map(|x| x * x).sum::<f64>() / c.len() as f64;
    let scale = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !(var > 1e-24 * scale * scale) || var == 0.0 {
        return None;
    }
    let sd = var.sqrt();
    Some(c.into_iter().map(|x| x / sd).collect())
}

/// The unit-variance monotone function most anti-aligned with the
/// standardized `g`: the normalized cone projection of `-g`.
fn anti_align(g: &[f64], poset: &PosetEdges, opts: &ProjectionOptions) -> Result<Option<Vec<f64>>> {
    let d: Vec<f64> = g.iter().map(|x| -x).collect();
    let p = project_monotone(&d, poset, opts)?;
    if !p.converged {
        return Err(Error::NotConverged {
            iterations: p.sweeps,
            residual: p.raw_violation,
        });
    }
    let norm_d = d.iter().map(|x| x * x).sum::<f64>();
    let norm_p = centered(&p.values).iter().map(|x| x * x).sum::<f64>();
    if norm_p <= 1e-12 * norm_d {
        return Ok(None);
    }
    Ok(standardize(&p.values))
}

fn random_start(
    set: &VertexSet,
    poset: &PosetEdges,
    rng: &mut ChaCha8Rng,
    opts: &ProjectionOptions,
) -> Result<Option<Vec<f64>>> {
    let len = set.len();
    let raw: Vec<f64> = match rng.random_range(0..3u8) {
        // indicator of the up-set generated by one random member
        0 => {
            let base = set.members()[rng.random_range(0..len)];
            set.members()
                .iter()
                .map(|&v| if v & base == base { 1.0 } else { 0.0 })
                .collect()
        }
        // random positive combination of coordinates
        1 => {
            let w: Vec<f64> = (0..set.n()).map(|_| rng.random::<f64>().powi(3)).collect();
            set.members()
                .iter()
                .map(|&v| {
                    (0..set.n() as usize)
                        .filter(|&i| v >> i & 1 == 1)
                        .map(|i| w[i])
                        .sum()
                })
                .collect()
        }
        _ => {
            let noise: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
            let p = project_monotone(&noise, poset, opts)?;
            p.values
        }
    };
    Ok(standardize(&raw))
}

struct RestartResult {
    rho: f64,
    pair: Option<(Vec<f64>, Vec<f64>)>,
}

fn one_restart(
    set: &VertexSet,
    poset: &PosetEdges,
    opts: &DeltaSearchOptions,
    k: usize,
) -> Result<RestartResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(k as u64);
    let mut out = RestartResult {
        rho: f64::INFINITY,
        pair: None,
    };
    let Some(mut g) = random_start(set, poset, &mut rng, &opts.projection)? else {
        return Ok(out);
    };
    let pearson =
        |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64;
    let mut best = f64::INFINITY;
    for _ in 0..opts.iters {
        let Some(f) = anti_align(&g, poset, &opts.projection)? else {
            return Ok(out);
        };
        let r = pearson(&f, &g);
        if r < best {
            out.rho = r;
            out.pair = Some((f.clone(), g.clone()));
        }
        let improved = best - r;
        best = best.min(r);
        g = f;
        if improved.is_finite() && improved.abs() <= 1e-13 {
            break;
        }
    }
    Ok(out)
}

/// Alternating minimization of `ρ(f, g)` over pairs of monotone functions
/// on `set`, from `restarts` seeded starting points.
pub fn delta_search(set: &VertexSet, opts: &DeltaSearchOptions) -> Result<CorrelationReport> {
    if set.len() < 2 {
        return Err(Error::TooSmall(set.len()));
    }
    if opts.restarts == 0 {
        return Err(Error::ParamOutOfRange("restarts must be positive".into()));
    }
    let poset = PosetEdges::on_set(set)?;
    let results: Vec<RestartResult> = (0..opts.restarts)
        .into_par_iter()
        .map(|k| one_restart(set, &poset, opts, k))
        .collect::<Result<_>>()?;
    let mut best_rho = f64::INFINITY;
    let mut pair = None;
    for r in results {
        if r.rho < best_rho {
            best_rho = r.rho;
            pair = r.pair;
        }
    }
    let mu = set.density();
    let bound = -(1.0 - mu).sqrt();
    let delta_hat = best_rho.min(0.0);
    let (witness_g, witness_h) = match pair {
        Some((g, h)) => (Some(g), Some(h)),
        None => (None, None),
    };
    Ok(CorrelationReport {
        n: set.n(),
        mu,
        delta_hat,
        best_rho: best_rho.is_finite().then_some(best_rho),
        bound,
        margin: delta_hat - bound,
        pass: delta_hat - bound >= -1e-8,
        witness_g,
        witness_h,
        restarts: opts.restarts,
    })
}
