//! The verification suite behind the `verify` command: every check run
//! over exhaustive small sets and seeded random cases, summarized as one
//! report per check family.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bridge::{
    delta_witness_from_gap, extension_identity_on, gap_bound_from_delta,
    mono_dist_extension_checks, proof_chain_check,
};
use crate::correlation::{delta_search, DeltaSearchOptions};
use crate::cube::{
    enumerate_all_monotone, named_family, random_monotone, Family, MonotoneSet, VertexSet,
};
use crate::digraph::{gap_ratio, reverse_poincare_check, WeightedDigraph};
use crate::error::{Error, Result};
use crate::fkg::{equality_grid_joint, fkg_theorem_check, zero_one_fkg_check, FiniteJoint};
use crate::flow::{flow_trace_checks, heat_flow_solve, FlowOptions};
use crate::projection::{project_monotone, PosetEdges, ProjectionOptions};
use crate::report::{Relation, VerificationReport};
use crate::walk::{dirichlet_form, mixing_time_tv, spectral_gap_gamma, variance_on_a};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    /// Largest dimension; sets are enumerated exhaustively up to
    /// `min(n_max, 4)` and sampled above.
    pub n_max: u32,
    /// Random cases per dimension for sampled checks.
    pub random_trials: usize,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            n_max: 4,
            random_trials: 100,
            seed: 1,
        }
    }
}

/// Summary of one check family: the first failing report, or the one
/// with the smallest margin when all pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySummary {
    pub check: String,
    pub cases: usize,
    pub failures: usize,
    pub pass: bool,
    pub representative: Option<VerificationReport>,
}

impl FamilySummary {
    fn new(check: &str) -> Self {
        FamilySummary {
            check: check.to_string(),
            cases: 0,
            failures: 0,
            pass: true,
            representative: None,
        }
    }

    fn add(&mut self, report: VerificationReport) {
        self.cases += 1;
        let ok = report.all_pass();
        if !ok {
            self.failures += 1;
        }
        let replace = match &self.representative {
            None => true,
            Some(cur) => {
                (!ok && cur.all_pass()) || (ok == cur.all_pass() && report.margin < cur.margin)
            }
        };
        self.pass &= ok;
        if replace {
            self.representative = Some(report);
        }
    }

    fn absorb(&mut self, reports: impl IntoIterator<Item = VerificationReport>) {
        for r in reports {
            self.add(r);
        }
    }
}

fn random_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// Sets used for set-level checks: every monotone set with at least two
/// members for `n <= min(n_max, 4)`, plus random sets above.
pub fn test_sets(cfg: &SuiteConfig) -> Result<Vec<MonotoneSet>> {
    let mut sets = Vec::new();
    for n in 1..=cfg.n_max.min(4) {
        sets.extend(
            enumerate_all_monotone(n)?
                .into_iter()
                .filter(|a| a.len() >= 2),
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for n in 5..=cfg.n_max {
        let mut made = 0;
        while made < cfg.random_trials {
            let p = rng.random_range(0.02..0.5);
            let a = random_monotone(n, p, rng.random())?;
            if a.len() >= 2 {
                sets.push(a);
                made += 1;
            }
        }
    }
    Ok(sets)
}

fn set_checks(a: &VertexSet, seed: u64) -> Result<Vec<(usize, VerificationReport)>> {
    let n = a.n();
    let mut out = Vec::new();
    let spectral = spectral_gap_gamma(a)?;
    let minimizer = &spectral.minimizer;
    let var = variance_on_a(a, minimizer)?;
    let ratio = dirichlet_form(a, minimizer)? / var;
    out.push((
        0,
        VerificationReport::new(
            "spectral_gap_bound",
            spectral.gamma,
            Relation::AtLeast,
            spectral.bound,
            1e-12,
        )
        .quantity("mu", spectral.mu)
        .step(VerificationReport::new(
            "eigenvector_ratio",
            ratio,
            Relation::Equal,
            n as f64 * spectral.gamma,
            1e-10,
        )),
    ));

    let search = delta_search(
        a,
        &DeltaSearchOptions {
            seed,
            ..DeltaSearchOptions::default()
        },
    )?;
    out.push((
        1,
        VerificationReport::new(
            "fkg_ratio_floor",
            search.delta_hat,
            Relation::AtLeast,
            search.bound,
            1e-8,
        ),
    ));
    out.push((2, gap_bound_from_delta(a, minimizer, search.delta_hat)?));
    let (_, witness) = delta_witness_from_gap(a, &search)?;
    out.push((3, witness));
    let upper = VerificationReport::new(
        "gap_upper_sandwich",
        spectral.gamma,
        Relation::AtMost,
        1.0 + search.delta_hat,
        1e-8,
    );
    let lower = VerificationReport::new(
        "gap_lower_sandwich",
        (1.0 + search.delta_hat) / n as f64,
        Relation::AtMost,
        spectral.gamma * (1.0 + 1e-8),
        0.0,
    );
    out.push((4, upper.step(lower)));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = random_vec(&mut rng, a.len());
    let cube = WeightedDigraph::hypercube(n)?;
    out.push((5, extension_identity_on(&cube, a, &f)?));
    out.push((6, proof_chain_check(a, &f)?));
    let witnesses: Vec<Vec<f64>> = [&search.witness_g, &search.witness_h]
        .into_iter()
        .flatten()
        .cloned()
        .collect();
    out.push((7, mono_dist_extension_checks(a, &f, &witnesses)?));
    Ok(out)
}

const SET_FAMILIES: [&str; 8] = [
    "spectral_gap_bound",
    "fkg_ratio_floor",
    "gap_from_delta",
    "delta_witness",
    "gap_sandwich",
    "extension_identity",
    "poincare_chain",
    "extension_projection",
];

fn cube_checks(n: u32, trials: usize, seed: u64) -> Result<Vec<(usize, VerificationReport)>> {
    let cube = WeightedDigraph::hypercube(n)?;
    let poset = PosetEdges::hypercube(n)?;
    let len = 1usize << n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut anti = vec![0.0; len];
    for (x, v) in anti.iter_mut().enumerate() {
        *v = -((x & 1) as f64);
    }
    out.push((
        0,
        VerificationReport::new(
            "anti_dictator_ratio",
            gap_ratio(&cube, &anti)?,
            Relation::Equal,
            1.0,
            1e-12,
        ),
    ));
    for _ in 0..trials {
        let f = random_vec(&mut rng, len);
        let energy = crate::digraph::directed_energy(&cube, &f)?;
        if energy > 0.0 {
            out.push((
                0,
                VerificationReport::new(
                    "dynamical_gap",
                    gap_ratio(&cube, &f)?,
                    Relation::AtLeast,
                    1.0,
                    1e-9,
                ),
            ));
        }
        let proj = project_monotone(&f, &poset, &ProjectionOptions::default())?;
        if !proj.converged {
            return Err(Error::NotConverged {
                iterations: proj.sweeps,
                residual: proj.raw_violation,
            });
        }
        out.push((1, reverse_poincare_check(&cube, &f, &proj.values)?));
        let mut opts = FlowOptions::for_graph(&cube);
        // a tenth of the default step keeps RK4 drift below the 1e-6 decay slack
        opts.step *= 0.1;
        opts.state_every = 200;
        let flow = heat_flow_solve(&cube, &f, &opts)?;
        let flow_dist = crate::digraph::dist_sq(&f, &flow.equilibrium);
        out.push((
            2,
            VerificationReport::new(
                "directed_poincare",
                proj.dist_sq,
                Relation::AtMost,
                flow_dist,
                1e-8,
            )
            .step(VerificationReport::new(
                "flow_limit_distance",
                flow_dist,
                Relation::AtMost,
                energy,
                1e-8,
            )),
        ));
        out.push((3, flow_trace_checks(&cube, &flow, 1.0)));
    }
    Ok(out)
}

const CUBE_FAMILIES: [&str; 4] = [
    "dynamical_gap",
    "reverse_directed_poincare",
    "directed_poincare",
    "heat_flow",
];

fn random_joint(rng: &mut ChaCha8Rng) -> FiniteJoint {
    let kx = rng.random_range(2..=5);
    let ky = rng.random_range(2..=5);
    let xs: Vec<f64> = (0..kx).map(|_| rng.random_range(-3.0..3.0)).collect();
    let ys: Vec<f64> = (0..ky).map(|_| rng.random_range(-3.0..3.0)).collect();
    let mut cells = Vec::new();
    for &x in &xs {
        for &y in &ys {
            cells.push((
                x,
                y,
                if rng.random_bool(0.3) {
                    0.0
                } else {
                    rng.random::<f64>()
                },
            ));
        }
    }
    let mut total: f64 = cells.iter().map(|c| c.2).sum();
    if total == 0.0 {
        cells[0].2 = 1.0;
        total = 1.0;
    }
    for c in &mut cells {
        c.2 /= total;
    }
    // absorb the rounding residue into one cell
    let residue = 1.0 - cells.iter().map(|c| c.2).sum::<f64>();
    if let Some(c) = cells.iter_mut().find(|c| c.2 > 0.0) {
        c.2 += residue;
    }
    FiniteJoint::new(cells).expect("normalized joint")
}

/// `[(a-b)⁺ - (c-d)⁺] · [(a-c)⁺ - (b-d)⁺] >= 0`.
pub fn quadruple_sign(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let p = |x: f64| x.max(0.0);
    (p(a - b) - p(c - d)) * (p(a - c) - p(b - d))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub config: SuiteConfig,
    pub families: Vec<FamilySummary>,
    pub pass: bool,
}

/// Run the whole suite.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    if cfg.n_max == 0 || cfg.n_max > 8 {
        return Err(Error::ParamOutOfRange(format!(
            "n_max = {} must lie in 1..=8",
            cfg.n_max
        )));
    }
    let mut families = Vec::new();

    let mut full = FamilySummary::new("full_cube_gap");
    for n in 1..=cfg.n_max {
        let r = spectral_gap_gamma(&VertexSet::full(n)?)?;
        full.add(
            VerificationReport::new(
                "full_cube_gap",
                r.gamma,
                Relation::Equal,
                1.0 / n as f64,
                1e-9,
            )
            .input("n", n),
        );
    }
    families.push(full);

    let sets = test_sets(cfg)?;
    let per_set: Vec<Vec<(usize, VerificationReport)>> = sets
        .par_iter()
        .enumerate()
        .map(|(i, a)| set_checks(a, cfg.seed.wrapping_add(i as u64)))
        .collect::<Result<_>>()?;
    let mut set_fams: Vec<FamilySummary> =
        SET_FAMILIES.iter().map(|s| FamilySummary::new(s)).collect();
    for (ix, r) in per_set.into_iter().flatten() {
        set_fams[ix].add(r);
    }
    families.extend(set_fams);

    let per_n: Vec<Vec<(usize, VerificationReport)>> = (1..=cfg.n_max)
        .into_par_iter()
        .map(|n| cube_checks(n, cfg.random_trials, cfg.seed ^ ((n as u64) << 32)))
        .collect::<Result<_>>()?;
    let mut cube_fams: Vec<FamilySummary> = CUBE_FAMILIES
        .iter()
        .map(|s| FamilySummary::new(s))
        .collect();
    for (ix, r) in per_n.into_iter().flatten() {
        cube_fams[ix].add(r);
    }
    families.extend(cube_fams);

    let mut fkg = FamilySummary::new("covariance_lower_bound");
    fkg.add(fkg_theorem_check(&equality_grid_joint())?);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.random_trials {
        match fkg_theorem_check(&random_joint(&mut rng)) {
            Ok(r) => fkg.add(r),
            Err(Error::DegenerateMarginal) => {}
            Err(e) => return Err(e),
        }
    }
    families.push(fkg);

    let mut zero_one = FamilySummary::new("zero_one_fkg");
    for n in 1..=cfg.n_max.min(3) {
        let all = enumerate_all_monotone(n)?;
        for a in all.iter().filter(|a| !a.is_empty()) {
            let ups: Vec<&MonotoneSet> = all.iter().filter(|b| b.is_subset(a)).collect();
            for b in &ups {
                for c in &ups {
                    zero_one.add(zero_one_fkg_check(a, b, c)?);
                }
            }
        }
    }
    families.push(zero_one);

    let mut quad = FamilySummary::new("quadruple_sign");
    let mut worst = f64::INFINITY;
    let mut violations = 0usize;
    for _ in 0..cfg.random_trials * 100 {
        let v = quadruple_sign(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        worst = worst.min(v);
        violations += (v < 0.0) as usize;
    }
    quad.add(
        VerificationReport::new("quadruple_sign", worst, Relation::AtLeast, 0.0, 0.0)
            .quantity("violations", violations as f64),
    );
    families.push(quad);

    let mut mixing = FamilySummary::new("mixing_bound");
    let mut mix_sets: Vec<VertexSet> = sets.iter().map(|a| a.as_set().clone()).collect();
    for n in 2..=cfg.n_max {
        for fam in [
            Family::FullCube { n },
            Family::WeightThreshold { n, k: n / 2 },
        ] {
            mix_sets.push(named_family(&fam)?.set().clone());
        }
        if n >= 4 {
            mix_sets.push(
                named_family(&Family::TwoSubcubes {
                    n,
                    m: n.div_ceil(4),
                })?
                .set()
                .clone(),
            );
        }
    }
    let mix: Vec<VerificationReport> = mix_sets
        .par_iter()
        .map(|a| {
            let bound = crate::walk::mixing_bound(a);
            let r = mixing_time_tv(a, 0.25, bound.ceil() as usize + 1)?;
            let t = r.t_mix.map_or(f64::INFINITY, |t| t as f64);
            Ok(
                VerificationReport::new("mixing_bound", t, Relation::AtMost, bound, 0.0)
                    .input("n", a.n()),
            )
        })
        .collect::<Result<_>>()?;
    mixing.absorb(mix);
    families.push(mixing);

    let pass = families.iter().all(|f| f.pass);
    Ok(SuiteOutcome {
        config: *cfg,
        families,
        pass,
    })
}
