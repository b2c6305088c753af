//! Extension of functions on a set to the full cube, and the checks tying
//! the censored Dirichlet form to directed energies and correlations.

use serde::{Deserialize, Serialize};

use crate::correlation::{rho, tau, CorrelationReport};
use crate::cube::VertexSet;
use crate::digraph::{directed_energy, WeightedDigraph};
use crate::error::{Error, Result};
use crate::projection::{project_monotone, PosetEdges, Projection, ProjectionOptions};
use crate::report::{Relation, VerificationReport};
use crate::walk::{dirichlet_form, variance_on_a};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedFunction {
    /// Values on the set, in member order.
    pub original: Vec<f64>,
    /// Values on all `2^n` vertices.
    pub extended: Vec<f64>,
    /// Value used off the set: the minimum of `original`.
    pub fill: f64,
}

/// Extend `f` from `set` to the cube by its minimum.
pub fn extend_t(set: &VertexSet, f: &[f64]) -> Result<ExtendedFunction> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    if f.len() != set.len() {
        return Err(Error::SizeMismatch {
            expected: set.len(),
            found: f.len(),
        });
    }
    if f.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let fill = f.iter().copied().fold(f64::INFINITY, f64::min);
    let mut extended = vec![fill; 1 << set.n()];
    for (&v, &x) in set.members().iter().zip(f) {
        extended[v as usize] = x;
    }
    Ok(ExtendedFunction {
        original: f.to_vec(),
        extended,
        fill,
    })
}

fn negate(f: &[f64]) -> Vec<f64> {
    f.iter().map(|x| -x).collect()
}

/// `μ 𝓔_A(f) = 𝓔⁻(T[f]) + 𝓔⁻(T[-f])`, exact up to rounding.
pub fn extension_identity_check(set: &VertexSet, f: &[f64]) -> Result<VerificationReport> {
    let cube = WeightedDigraph::hypercube(set.n())?;
    extension_identity_on(&cube, set, f)
}

/// As [`extension_identity_check`] with a prebuilt directed hypercube.
pub fn extension_identity_on(
    cube: &WeightedDigraph,
    set: &VertexSet,
    f: &[f64],
) -> Result<VerificationReport> {
    let lhs = set.density() * dirichlet_form(set, f)?;
    let up = directed_energy(cube, &extend_t(set, f)?.extended)?;
    let down = directed_energy(cube, &extend_t(set, &negate(f))?.extended)?;
    Ok(
        VerificationReport::new("extension_identity", lhs, Relation::Equal, up + down, 1e-12)
            .quantity("energy_t_f", up)
            .quantity("energy_t_neg_f", down),
    )
}

/// `(1 + δ̂) Var_A(f) <= 𝓔_A(f)`.
pub fn gap_bound_from_delta(
    set: &VertexSet,
    f: &[f64],
    delta_hat: f64,
) -> Result<VerificationReport> {
    let var = variance_on_a(set, f)?;
    if var <= 0.0 {
        return Err(Error::ConstantInput);
    }
    let energy = dirichlet_form(set, f)?;
    Ok(VerificationReport::new(
        "gap_from_delta",
        (1.0 + delta_hat) * var,
        Relation::AtMost,
        energy,
        1e-10,
    )
    .quantity("delta_hat", delta_hat)
    .quantity("variance", var)
    .quantity("energy", energy))
}

/// A coordinate that is non-constant on the set, as a monotone function.
fn coordinate_witness(set: &VertexSet) -> Option<Vec<f64>> {
    (0..set.n()).find_map(|i| {
        let g: Vec<f64> = set.members().iter().map(|&v| (v >> i & 1) as f64).collect();
        (g.iter().any(|&x| x != g[0])).then_some(g)
    })
}

/// A non-constant `f` with `(1 + δ̂) n Var_A(f) >= 𝓔_A(f)`.
///
/// With no negatively correlated pair any non-constant monotone function
/// works; otherwise `f = g - h` for the search's witnesses, which are
/// centered with unit variance and correlation `δ̂`.
pub fn delta_witness_from_gap(
    set: &VertexSet,
    search: &CorrelationReport,
) -> Result<(Vec<f64>, VerificationReport)> {
    if set.len() < 2 {
        return Err(Error::TooSmall(set.len()));
    }
    let n = set.n() as f64;
    let pair = match (&search.witness_g, &search.witness_h) {
        (Some(g), Some(h)) if search.delta_hat < 0.0 => Some((g, h)),
        _ => None,
    };
    let Some((g, h)) = pair else {
        let g = coordinate_witness(set).ok_or(Error::ConstantInput)?;
        let var = variance_on_a(set, &g)?;
        let energy = dirichlet_form(set, &g)?;
        let report =
            VerificationReport::new("delta_witness", n * var, Relation::AtLeast, energy, 1e-10)
                .input("case", "nonnegative")
                .quantity("variance", var)
                .quantity("energy", energy);
        return Ok((g, report));
    };
    let f: Vec<f64> = g.iter().zip(h).map(|(a, b)| a - b).collect();
    let var = variance_on_a(set, &f)?;
    if var <= 1e-24 {
        return Err(Error::SearchDegenerate);
    }
    let energy = dirichlet_form(set, &f)?;
    let d = search.delta_hat;
    let r = rho(set, &f, g)?;
    let report = VerificationReport::new(
        "delta_witness",
        (1.0 + d) * n * var,
        Relation::AtLeast,
        energy,
        1e-10,
    )
    .input("case", "negative")
    .quantity("delta_hat", d)
    .quantity("variance", var)
    .quantity("energy", energy)
    .step(VerificationReport::new(
        "witness_correlation",
        r,
        Relation::Equal,
        ((1.0 - d) / 2.0).sqrt(),
        1e-8,
    ));
    Ok((f, report))
}

fn converged(p: Projection) -> Result<Projection> {
    if p.converged {
        Ok(p)
    } else {
        Err(Error::NotConverged {
            iterations: p.sweeps,
            residual: p.raw_violation,
        })
    }
}

/// Projection of `T[f]` onto monotone functions of the cube, restricted
/// back to the set. Returns (restriction, `dist₂ᵐᵒⁿᵒ(T[f])`).
pub fn restricted_projection(
    set: &VertexSet,
    f: &[f64],
    opts: &ProjectionOptions,
) -> Result<(Vec<f64>, f64)> {
    let ext = extend_t(set, f)?;
    let cube = PosetEdges::hypercube(set.n())?;
    let p = converged(project_monotone(&ext.extended, &cube, opts)?)?;
    let g = set
        .members()
        .iter()
        .map(|&v| p.values[v as usize])
        .collect();
    Ok((g, p.dist_sq.sqrt()))
}

fn l2_dist(f: &[f64], g: &[f64]) -> f64 {
    (f.iter().zip(g).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / f.len() as f64).sqrt()
}

/// `‖f - g₀‖_A <= μ^{-1/2} dist₂ᵐᵒⁿᵒ(T[f])` for the restricted projection
/// `g₀`, plus `μ^{-1/2} dist₂ᵐᵒⁿᵒ(T[f]) <= τ(f, g)` for every non-constant
/// monotone `g` in `others`.
pub fn mono_dist_extension_checks(
    set: &VertexSet,
    f: &[f64],
    others: &[Vec<f64>],
) -> Result<VerificationReport> {
    if set.len() < 2 {
        return Err(Error::TooSmall(set.len()));
    }
    let (g0, dist) = restricted_projection(set, f, &ProjectionOptions::default())?;
    let scaled = dist / set.density().sqrt();
    let mut report = VerificationReport::new(
        "restricted_projection",
        l2_dist(f, &g0),
        Relation::AtMost,
        scaled,
        1e-12,
    )
    .quantity("dist_mono_extension", dist);
    let poset = PosetEdges::on_set(set)?;
    for g in others {
        if !poset.is_monotone(g) {
            let (u, v) = poset.first_violation(g).unwrap();
            return Err(Error::GNotMonotone(u, v));
        }
        match tau(set, f, g) {
            Ok(t) => {
                report = report.step(VerificationReport::new(
                    "extension_distance_vs_tau",
                    scaled,
                    Relation::AtMost,
                    t,
                    1e-8,
                ))
            }
            Err(Error::ConstantInput) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

/// `min_{a >= 0, b} ‖f - (a g + b)‖²`, also for constant `g`.
fn tau_sq(set: &VertexSet, f: &[f64], g: &[f64]) -> Result<f64> {
    match tau(set, f, g) {
        Ok(t) => Ok(t * t),
        Err(Error::ConstantInput) => variance_on_a(set, f),
        Err(e) => Err(e),
    }
}

fn rho_or_zero(set: &VertexSet, f: &[f64], g: &[f64]) -> Result<f64> {
    match rho(set, f, g) {
        Err(Error::ConstantInput) => Ok(0.0),
        r => r,
    }
}

/// The inequalities leading from `𝓔_A(f)` down to
/// `(1 - sqrt(1 - μ)) Var_A(f)`, one step each, with `g`, `h` the
/// restricted projections of `T[f]` and `T[-f]`.
pub fn proof_chain_check(set: &VertexSet, f: &[f64]) -> Result<VerificationReport> {
    let var = variance_on_a(set, f)?;
    let energy = dirichlet_form(set, f)?;
    let neg = negate(f);
    let opts = ProjectionOptions::default();
    let (g, _) = restricted_projection(set, f, &opts)?;
    let (h, _) = restricted_projection(set, &neg, &opts)?;
    let split = l2_dist(f, &g).powi(2) + l2_dist(&neg, &h).powi(2);
    let taus = tau_sq(set, f, &g)? + tau_sq(set, &neg, &h)?;
    let r_gh = rho_or_zero(set, &g, &h)?;
    let triangle = (1.0 - (-r_gh).max(0.0)) * var;
    let floor = (1.0 - (1.0 - set.density()).sqrt()) * var;
    Ok(
        VerificationReport::new("poincare_chain", energy, Relation::AtLeast, floor, 1e-10)
            .quantity("variance", var)
            .quantity("rho_gh", r_gh)
            .step(VerificationReport::new(
                "energy_vs_projections",
                energy,
                Relation::AtLeast,
                split,
                1e-8,
            ))
            .step(VerificationReport::new(
                "projections_vs_tau",
                split,
                Relation::AtLeast,
                taus,
                1e-10,
            ))
            .step(VerificationReport::new(
                "tau_vs_correlation",
                taus,
                Relation::AtLeast,
                triangle,
                1e-10,
            ))
            .step(VerificationReport::new(
                "correlation_floor",
                triangle,
                Relation::AtLeast,
                floor,
                1e-10,
            )),
    )
}
