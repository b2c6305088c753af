//! The lazy random walk censored to a vertex set, its Dirichlet form and
//! spectral gap, exact mixing times and trajectory simulation.
//!
//! From `x`, pick a coordinate `i` uniformly; if `x ⊕ e_i` is in the set,
//! move there with probability ½, otherwise stay.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cube::VertexSet;
use crate::error::{Error, Result};
use crate::linalg::{lanczos_second_smallest, laplacian_matrix, sorted_eigen};

/// Largest set handled by dense eigensolves and exact powering.
pub const DENSE_LIMIT: usize = 4096;

fn require_two(set: &VertexSet) -> Result<()> {
    if set.len() < 2 {
        Err(Error::TooSmall(set.len()))
    } else {
        Ok(())
    }
}

fn check_fn(set: &VertexSet, f: &[f64]) -> Result<()> {
    if f.len() != set.len() {
        return Err(Error::SizeMismatch {
            expected: set.len(),
            found: f.len(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct CensoredKernel {
    n: u32,
    neighbors: Vec<Vec<usize>>,
}

impl CensoredKernel {
    pub fn new(set: &VertexSet) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::EmptySet);
        }
        Ok(CensoredKernel {
            n: set.n(),
            neighbors: set.induced_neighbors(),
        })
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// Probability of moving to each in-set neighbour.
    pub fn move_probability(&self) -> f64 {
        0.5 / self.n as f64
    }

    pub fn stay_probability(&self, x: usize) -> f64 {
        1.0 - self.neighbors[x].len() as f64 * self.move_probability()
    }

    pub fn neighbors(&self, x: usize) -> &[usize] {
        &self.neighbors[x]
    }

    pub fn dense_matrix(&self) -> DMatrix<f64> {
        let m = self.move_probability();
        let mut p = DMatrix::zeros(self.len(), self.len());
        for x in 0..self.len() {
            p[(x, x)] = self.stay_probability(x);
            for &y in &self.neighbors[x] {
                p[(x, y)] = m;
            }
        }
        p
    }

    /// `out = row · P`.
    pub fn step_distribution(&self, row: &[f64], out: &mut [f64]) {
        let m = self.move_probability();
        for y in 0..self.len() {
            let mut acc = row[y] * self.stay_probability(y);
            for &z in &self.neighbors[y] {
                acc += row[z] * m;
            }
            out[y] = acc;
        }
    }
}

/// `𝓔_A(f) = ¼ avg_{x∈A} Σ_i (f(x) - f(x ⊕ e_i))² 1[x ⊕ e_i ∈ A]`.
pub fn dirichlet_form(set: &VertexSet, f: &[f64]) -> Result<f64> {
    require_two(set)?;
    check_fn(set, f)?;
    let mut total = 0.0;
    for (pos, &x) in set.members().iter().enumerate() {
        for i in 0..set.n() {
            if let Some(q) = set.position(x ^ (1 << i)) {
                let d = f[pos] - f[q];
                total += d * d;
            }
        }
    }
    Ok(0.25 * total / set.len() as f64)
}

pub fn mean_on(f: &[f64]) -> f64 {
    f.iter().sum::<f64>() / f.len() as f64
}

/// Variance under the uniform measure on the set.
pub fn variance_on_a(set: &VertexSet, f: &[f64]) -> Result<f64> {
    require_two(set)?;
    check_fn(set, f)?;
    let mean = mean_on(f);
    Ok(f.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / f.len() as f64)
}

fn is_connected(neighbors: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; neighbors.len()];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(x) = stack.pop() {
        for &y in &neighbors[x] {
            if !seen[y] {
                seen[y] = true;
                count += 1;
                stack.push(y);
            }
        }
    }
    count == neighbors.len()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub n: u32,
    pub mu: f64,
    pub gamma: f64,
    /// `(1 - sqrt(1 - μ)) / n`.
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
    pub connected: bool,
    pub method: String,
    /// Eigenvector for `λ₂`, indexed like the set's members.
    #[serde(skip)]
    pub minimizer: Vec<f64>,
}

/// `γ(H_A) = λ₂ / (2n)` from the induced-subgraph Laplacian.
pub fn spectral_gap_gamma(set: &VertexSet) -> Result<SpectralReport> {
    require_two(set)?;
    let n = set.n();
    let mu = set.density();
    let bound = (1.0 - (1.0 - mu).sqrt()) / n as f64;
    let neighbors = set.induced_neighbors();
    let connected = is_connected(&neighbors);
    let (lambda2, minimizer, method) = if !connected {
        (0.0, Vec::new(), "disconnected")
    } else if set.len() <= DENSE_LIMIT {
        let edges = neighbors.iter().enumerate().flat_map(|(u, ns)| {
            ns.iter()
                .filter(move |&&v| v > u)
                .map(move |&v| (u, v, 1.0))
        });
        let (values, vectors) = sorted_eigen(laplacian_matrix(set.len(), edges));
        (
            values[1],
            vectors.column(1).iter().copied().collect(),
            "dense",
        )
    } else {
        let res = lanczos_second_smallest(
            set.len(),
            |x, y| {
                for (u, ns) in neighbors.iter().enumerate() {
                    y[u] = ns.len() as f64 * x[u] - ns.iter().map(|&v| x[v]).sum::<f64>();
                }
            },
            2.0 * n as f64,
            1e-10,
            600,
            0x5eed,
        );
        if !res.converged {
            return Err(Error::NotConverged {
                iterations: res.iterations,
                residual: res.residual,
            });
        }
        (res.value, res.vector, "lanczos")
    };
    let gamma = lambda2.max(0.0) / (2.0 * n as f64);
    Ok(SpectralReport {
        n,
        mu,
        gamma,
        bound,
        margin: gamma - bound,
        pass: gamma - bound >= -1e-12,
        connected,
        method: method.to_string(),
        minimizer,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingResult {
    /// First `t` with worst-start TV at most `eps`; `None` if not reached
    /// within the step cap.
    pub t_mix: Option<usize>,
    /// `(t, max_x TV(P^t(x, ·), uniform))` for `t = 0, 1, ...`.
    pub tv_curve: Vec<(usize, f64)>,
    /// `2n/μ · ln(4 · 2^n μ)`.
    pub bound: f64,
    pub pass: bool,
    /// True when estimated by simulation instead of exact powering.
    pub approximate: bool,
}

impl MixingResult {
    pub fn curve_csv(&self) -> String {
        let mut out = String::from("t,max_tv\n");
        for &(t, tv) in &self.tv_curve {
            out.push_str(&format!("{t},{tv:.14e}\n"));
        }
        out
    }
}

pub fn mixing_bound(set: &VertexSet) -> f64 {
    let n = set.n() as f64;
    let mu = set.density();
    2.0 * n / mu * (4.0 * set.len() as f64).ln()
}

/// Exact worst-start mixing time by powering the kernel from every start.
/// Stops at `max_steps`. Sets above [`DENSE_LIMIT`] return `TooLarge`.
pub fn mixing_time_tv(set: &VertexSet, eps: f64, max_steps: usize) -> Result<MixingResult> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::ParamOutOfRange(format!(
            "eps = {eps} must lie in (0, 1)"
        )));
    }
    if set.len() > DENSE_LIMIT {
        return Err(Error::TooLarge {
            size: set.len(),
            limit: DENSE_LIMIT,
        });
    }
    let kernel = CensoredKernel::new(set)?;
    let size = kernel.len();
    let uniform = 1.0 / size as f64;
    let mut rows: Vec<Vec<f64>> = (0..size)
        .map(|x| {
            let mut r = vec![0.0; size];
            r[x] = 1.0;
            r
        })
        .collect();
    let mut scratch = vec![0.0; size];
    let worst = |rows: &[Vec<f64>]| {
        rows.iter()
            .map(|r| 0.5 * r.iter().map(|p| (p - uniform).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let mut tv = worst(&rows);
    let mut curve = vec![(0, tv)];
    let mut t = 0;
    while tv > eps && t < max_steps {
        for r in rows.iter_mut() {
            kernel.step_distribution(r, &mut scratch);
            std::mem::swap(r, &mut scratch);
        }
        t += 1;
        tv = worst(&rows);
        curve.push((t, tv));
    }
    let bound = mixing_bound(set);
    let t_mix = (tv <= eps).then_some(t);
    Ok(MixingResult {
        t_mix,
        tv_curve: curve,
        bound,
        pass: t_mix.is_some_and(|t| t as f64 <= bound),
        approximate: false,
    })
}

/// Simulation estimate for sets too large to power exactly: `walkers`
/// independent walks from each minimal element, TV of the empirical
/// endpoint distribution at each `t`. Biased upward by sampling noise.
pub fn mixing_time_simulated(
    set: &VertexSet,
    eps: f64,
    max_steps: usize,
    walkers: usize,
    seed: u64,
) -> Result<MixingResult> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let kernel = CensoredKernel::new(set)?;
    let size = kernel.len();
    let uniform = 1.0 / size as f64;
    let starts: Vec<usize> = set
        .minimal_elements()
        .into_iter()
        .take(8)
        .filter_map(|v| set.position(v))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions: Vec<Vec<usize>> = starts.iter().map(|&s| vec![s; walkers]).collect();
    let mut counts = vec![0usize; size];
    let mut curve = Vec::new();
    let mut t_mix = None;
    for t in 0..=max_steps {
        let mut worst = 0.0f64;
        for pos in &positions {
            counts.iter_mut().for_each(|c| *c = 0);
            for &p in pos {
                counts[p] += 1;
            }
            let tv = 0.5
                * counts
                    .iter()
                    .map(|&c| (c as f64 / walkers as f64 - uniform).abs())
                    .sum::<f64>();
            worst = worst.max(tv);
        }
        curve.push((t, worst));
        if worst <= eps {
            t_mix = Some(t);
            break;
        }
        for pos in positions.iter_mut() {
            for p in pos.iter_mut() {
                *p = walk_step(&kernel, set, *p, &mut rng).0;
            }
        }
    }
    let bound = mixing_bound(set);
    Ok(MixingResult {
        t_mix,
        tv_curve: curve,
        bound,
        pass: t_mix.is_some_and(|t| t as f64 <= bound),
        approximate: true,
    })
}

/// One step from member position `x`; the flag is true when the proposed
/// neighbour lies outside the set.
fn walk_step(
    kernel: &CensoredKernel,
    set: &VertexSet,
    x: usize,
    rng: &mut ChaCha8Rng,
) -> (usize, bool) {
    let i = rng.random_range(0..kernel.n);
    let target = set.members()[x] ^ (1 << i);
    let coin = rng.random_bool(0.5);
    match set.position(target) {
        Some(y) if coin => (y, false),
        Some(_) => (x, false),
        None => (x, true),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkSummary {
    pub steps: usize,
    /// Visits per member position over times `1..=steps`.
    pub visits: Vec<u64>,
    /// Fraction of steps whose proposed neighbour lay outside the set.
    pub censored_fraction: f64,
    /// `(t, TV(empirical visit distribution up to t, uniform))`.
    pub checkpoints: Vec<(usize, f64)>,
    pub final_vertex: u32,
}

/// Simulate `steps` moves from `start` (a vertex index).
pub fn simulate_walk(set: &VertexSet, start: u32, steps: usize, seed: u64) -> Result<WalkSummary> {
    let mut x = set.position(start).ok_or(Error::StartNotInA(start))?;
    let kernel = CensoredKernel::new(set)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut visits = vec![0u64; kernel.len()];
    let uniform = 1.0 / kernel.len() as f64;
    let mut censored = 0usize;
    let mut checkpoints = Vec::new();
    let mut next_checkpoint = 1usize;
    for t in 1..=steps {
        let (y, was_censored) = walk_step(&kernel, set, x, &mut rng);
        x = y;
        censored += was_censored as usize;
        visits[x] += 1;
        if t == next_checkpoint || t == steps {
            let tv = 0.5
                * visits
                    .iter()
                    .map(|&c| (c as f64 / t as f64 - uniform).abs())
                    .sum::<f64>();
            checkpoints.push((t, tv));
            while next_checkpoint <= t {
                next_checkpoint *= 2;
            }
        }
    }
    Ok(WalkSummary {
        steps,
        visits,
        censored_fraction: if steps > 0 {
            censored as f64 / steps as f64
        } else {
            0.0
        },
        checkpoints,
        final_vertex: set.members()[x],
    })
}
