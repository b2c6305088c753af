//! Weighted digraphs, the directed Laplacian and directed energy.
//!
//! All inner products on vertex functions are averages over vertices:
//! `<f, g> = (1/|V|) Σ_u f(u) g(u)`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{laplacian_matrix, sorted_eigenvalues};
use crate::report::{Relation, VerificationReport};

/// A real function on the vertices of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(pub Vec<f64>);

impl StateVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(StateVector(values))
    }

    pub fn zeros(len: usize) -> Self {
        StateVector(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn inner(&self, other: &StateVector) -> f64 {
        inner(&self.0, &other.0)
    }

    pub fn norm_sq(&self) -> f64 {
        inner(&self.0, &self.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }
}

impl std::ops::Deref for StateVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for StateVector {
    fn from(v: Vec<f64>) -> Self {
        StateVector(v)
    }
}

/// Averaged inner product of two slices.
pub fn inner(f: &[f64], g: &[f64]) -> f64 {
    debug_assert_eq!(f.len(), g.len());
    if f.is_empty() {
        return 0.0;
    }
    f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() / f.len() as f64
}

/// Averaged squared distance `‖f - g‖²`.
pub fn dist_sq(f: &[f64], g: &[f64]) -> f64 {
    if f.is_empty() {
        return 0.0;
    }
    f.iter().zip(g).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / f.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDigraph {
    vertex_count: usize,
    weights: BTreeMap<(usize, usize), f64>,
    edges: Vec<(usize, usize, f64)>,
    max_weighted_degree: f64,
}

impl WeightedDigraph {
    pub fn new(vertex_count: usize) -> Result<Self> {
        if vertex_count == 0 {
            return Err(Error::ParamOutOfRange(
                "graph needs at least one vertex".into(),
            ));
        }
        Ok(WeightedDigraph {
            vertex_count,
            weights: BTreeMap::new(),
            edges: Vec::new(),
            max_weighted_degree: 0.0,
        })
    }

    pub fn from_edges(
        vertex_count: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut g = Self::new(vertex_count)?;
        for (u, v, w) in edges {
            g.check_edge(u, v, w)?;
            if w > 0.0 {
                *g.weights.entry((u, v)).or_insert(0.0) += w;
            }
        }
        g.rebuild();
        Ok(g)
    }

    /// The directed hypercube `H_n`: unit weight on `x → x ∪ {i}`.
    pub fn hypercube(n: u32) -> Result<Self> {
        if n == 0 || n > crate::cube::MAX_DIM {
            return Err(Error::Dimension(n));
        }
        let size = 1usize << n;
        let edges = (0..size).flat_map(move |x| {
            (0..n as usize)
                .filter(move |&i| x >> i & 1 == 0)
                .map(move |i| (x, x | 1 << i, 1.0))
        });
        Self::from_edges(size, edges)
    }

    fn check_edge(&self, u: usize, v: usize, w: f64) -> Result<()> {
        if u >= self.vertex_count || v >= self.vertex_count {
            return Err(Error::ParamOutOfRange(format!(
                "edge ({u}, {v}) outside {} vertices",
                self.vertex_count
            )));
        }
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::ParamOutOfRange(format!(
                "weight {w} must be finite and >= 0"
            )));
        }
        Ok(())
    }

    /// Replace `w(u, v)`; zero removes the edge.
    pub fn set_weight(&mut self, u: usize, v: usize, w: f64) -> Result<()> {
        self.check_edge(u, v, w)?;
        if w > 0.0 {
            self.weights.insert((u, v), w);
        } else {
            self.weights.remove(&(u, v));
        }
        self.rebuild();
        Ok(())
    }

    fn rebuild(&mut self) {
        self.edges = self.weights.iter().map(|(&(u, v), &w)| (u, v, w)).collect();
        let mut degree = vec![0.0; self.vertex_count];
        for &(u, v, w) in &self.edges {
            degree[u] += w;
            degree[v] += w;
        }
        self.max_weighted_degree = degree.into_iter().fold(0.0, f64::max);
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn weight(&self, u: usize, v: usize) -> f64 {
        self.weights.get(&(u, v)).copied().unwrap_or(0.0)
    }

    /// Edges with positive weight, sorted by `(u, v)`.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// `d_w = max_u Σ_v (w(u,v) + w(v,u))`.
    pub fn max_weighted_degree(&self) -> f64 {
        self.max_weighted_degree
    }

    fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.vertex_count {
            return Err(Error::SizeMismatch {
                expected: self.vertex_count,
                found: f.len(),
            });
        }
        Ok(())
    }

    /// Parse the edge-list format: `vertices=<count>` then `u v w` lines.
    /// Blank lines and lines starting with `#` are skipped.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (line, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing `vertices=` header".into(),
        })?;
        let count: usize = header
            .strip_prefix("vertices=")
            .and_then(|c| c.trim().parse().ok())
            .ok_or(Error::Parse {
                line,
                msg: "expected `vertices=<count>`".into(),
            })?;
        let mut edges = Vec::new();
        for (line, l) in lines {
            let parts: Vec<&str> = l.split_whitespace().collect();
            let bad = || Error::Parse {
                line,
                msg: format!("expected `u v w`, got {l:?}"),
            };
            if parts.len() != 3 {
                return Err(bad());
            }
            let u: usize = parts[0].parse().map_err(|_| bad())?;
            let v: usize = parts[1].parse().map_err(|_| bad())?;
            let w: f64 = parts[2].parse().map_err(|_| bad())?;
            edges.push((u, v, w));
        }
        Self::from_edges(count, edges)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("vertices={}\n", self.vertex_count);
        for &(u, v, w) in &self.edges {
            out.push_str(&format!("{u} {v} {w}\n"));
        }
        out
    }
}

/// `(𝓛⁻f)(z) = ½ Σ_v [ -w(z,v)(f(z)-f(v))⁺ + w(v,z)(f(v)-f(z))⁺ ]`,
/// written into `out`. Equal endpoints contribute nothing.
pub fn laplacian_into(g: &WeightedDigraph, f: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for &(u, v, w) in g.edges() {
        let d = f[u] - f[v];
        if d > 0.0 {
            let flow = 0.5 * w * d;
            out[u] -= flow;
            out[v] += flow;
        }
    }
}

pub fn laplacian_apply(g: &WeightedDigraph, f: &[f64]) -> Result<StateVector> {
    g.check_len(f)?;
    let mut out = vec![0.0; f.len()];
    laplacian_into(g, f, &mut out);
    Ok(StateVector(out))
}

/// Energy without the size check, for inner loops.
pub fn energy_unchecked(g: &WeightedDigraph, f: &[f64]) -> f64 {
    let total: f64 = g
        .edges()
        .iter()
        .map(|&(u, v, w)| {
            let d = f[u] - f[v];
            if d > 0.0 {
                w * d * d
            } else {
                0.0
            }
        })
        .sum();
    0.5 * total / f.len() as f64
}

/// `𝓔⁻(f) = ½ · avg_u Σ_v w(u,v) ((f(u) - f(v))⁺)²`.
pub fn directed_energy(g: &WeightedDigraph, f: &[f64]) -> Result<f64> {
    g.check_len(f)?;
    Ok(energy_unchecked(g, f))
}

/// `f` has no edge `u → v` with `w > 0` and `f(u) > f(v)`.
pub fn first_antimonotone_edge(g: &WeightedDigraph, f: &[f64]) -> Option<(usize, usize)> {
    g.edges()
        .iter()
        .find(|&&(u, v, _)| f[u] > f[v])
        .map(|&(u, v, _)| (u, v))
}

/// `‖𝓛⁻f‖² / 𝓔⁻(f)`.
pub fn gap_ratio(g: &WeightedDigraph, f: &[f64]) -> Result<f64> {
    let energy = directed_energy(g, f)?;
    if energy <= 0.0 {
        return Err(Error::ZeroEnergy);
    }
    let lf = laplacian_apply(g, f)?;
    Ok(lf.norm_sq() / energy)
}

/// Laplacian `D - W` of the order graph `G_π`, where `π` sorts vertices by
/// `f` (ties by index) and each unordered pair `{u, v}` with `u` ranked
/// above `v` gets weight `½ w(u, v)`.
pub fn order_graph_laplacian(g: &WeightedDigraph, f: &[f64]) -> DMatrix<f64> {
    let mut rank = vec![0usize; f.len()];
    let mut order: Vec<usize> = (0..f.len()).collect();
    order.sort_by(|&a, &b| f[a].total_cmp(&f[b]).then(a.cmp(&b)));
    for (r, &v) in order.iter().enumerate() {
        rank[v] = r;
    }
    let edges = g
        .edges()
        .iter()
        .filter(|&&(u, v, _)| u != v && rank[u] > rank[v])
        .map(|&(u, v, w)| (u, v, 0.5 * w));
    laplacian_matrix(f.len(), edges)
}

/// Smallest nonzero eigenvalue of the order graph of `f`; a lower bound for
/// the gap ratio of every function inducing the same order. `None` when the
/// order graph has no edges.
pub fn order_certificate(g: &WeightedDigraph, f: &[f64]) -> Option<f64> {
    let l = order_graph_laplacian(g, f);
    let scale = l.diagonal().iter().fold(0.0f64, |a, &b| a.max(b));
    if scale == 0.0 {
        return None;
    }
    sorted_eigenvalues(l)
        .into_iter()
        .find(|&x| x > 1e-9 * scale)
}

/// Result of [`dynamical_gap_estimate`].
#[derive(Debug, Clone, PartialEq)]
pub struct GapEstimate {
    /// Minimum order-graph eigenvalue over every function evaluated.
    pub lower_certificate: f64,
    /// Minimum gap ratio over every function evaluated.
    pub empirical_inf: f64,
    /// Function attaining `empirical_inf`.
    pub minimizer: Vec<f64>,
    pub evaluated: usize,
}

/// Apply the Laplacian of the edges that are antimonotone for `pattern`
/// (with weights `w`) to `x`.
fn active_laplacian(g: &WeightedDigraph, pattern: &[f64], x: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for &(u, v, w) in g.edges() {
        if pattern[u] > pattern[v] {
            let d = w * (x[u] - x[v]);
            out[u] += d;
            out[v] -= d;
        }
    }
}

fn normalize(f: &mut [f64]) {
    let mean = f.iter().sum::<f64>() / f.len() as f64;
    f.iter_mut().for_each(|x| *x -= mean);
    let norm = (f.iter().map(|x| x * x).sum::<f64>() / f.len() as f64).sqrt();
    if norm > 0.0 {
        f.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Gradient descent on the gap ratio from `f`, with backtracking. Within a
/// fixed antimonotone pattern the ratio is `fᵀM²f / (2 fᵀMf)` for the
/// pattern Laplacian `M`, which gives the gradient.
fn descend(g: &WeightedDigraph, f: &mut Vec<f64>, iters: usize) -> f64 {
    let len = f.len();
    let mut ratio = match gap_ratio(g, f) {
        Ok(r) => r,
        Err(_) => return f64::INFINITY,
    };
    let mut mf = vec![0.0; len];
    let mut mmf = vec![0.0; len];
    let mut step = 0.1;
    for _ in 0..iters {
        active_laplacian(g, f, f, &mut mf);
        active_laplacian(g, f, &mf, &mut mmf);
        let e: f64 = f.iter().zip(&mf).map(|(a, b)| a * b).sum();
        let nn: f64 = mf.iter().map(|a| a * a).sum();
        if e <= 0.0 {
            break;
        }
        // gradient of nn / (2e) up to a positive factor
        let grad: Vec<f64> = (0..len).map(|i| mmf[i] * e - mf[i] * nn).collect();
        let gnorm = grad.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gnorm < 1e-300 {
            break;
        }
        let fnorm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut accepted = false;
        while step > 1e-12 {
            let trial: Vec<f64> = (0..len)
                .map(|i| f[i] - step * fnorm * grad[i] / gnorm)
                .collect();
            if let Ok(r) = gap_ratio(g, &trial) {
                if r < ratio {
                    *f = trial;
                    normalize(f);
                    ratio = r;
                    accepted = true;
                    step *= 1.5;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    ratio
}

/// Estimate `λ⁻(G)` from `samples` random functions, each followed by
/// `descent_iters` steps of descent on the ratio.
pub fn dynamical_gap_estimate(
    g: &WeightedDigraph,
    samples: usize,
    descent_iters: usize,
    seed: u64,
) -> Result<GapEstimate> {
    if g.edges().iter().all(|&(u, v, _)| u == v) {
        return Err(Error::NoEdges);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = g.vertex_count();
    let mut est = GapEstimate {
        lower_certificate: f64::INFINITY,
        empirical_inf: f64::INFINITY,
        minimizer: Vec::new(),
        evaluated: 0,
    };
    let record = |f: &[f64], est: &mut GapEstimate| {
        if let Ok(r) = gap_ratio(g, f) {
            est.evaluated += 1;
            if r < est.empirical_inf {
                est.empirical_inf = r;
                est.minimizer = f.to_vec();
            }
            if let Some(c) = order_certificate(g, f) {
                est.lower_certificate = est.lower_certificate.min(c);
            }
        }
    };
    for _ in 0..samples {
        let mut f: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        record(&f, &mut est);
        if descent_iters > 0 {
            descend(g, &mut f, descent_iters);
            record(&f, &mut est);
        }
    }
    Ok(est)
}

fn check_cube(n: u32, f: &[f64]) -> Result<()> {
    if n == 0 || n > crate::cube::MAX_DIM || f.len() != 1usize << n {
        return Err(Error::WrongDomain { n });
    }
    Ok(())
}

/// Coordinate pieces `𝓛⁽ⁱ⁾f` of the hypercube Laplacian:
/// `(𝓛⁽ⁱ⁾f)(x) = ½ (f(x ⊕ e_i) - f(x)) · 1[f(x^{i→0}) > f(x^{i→1})]`.
pub fn coordinate_laplacians(n: u32, f: &[f64]) -> Result<Vec<StateVector>> {
    check_cube(n, f)?;
    Ok((0..n as usize)
        .map(|i| {
            let bit = 1usize << i;
            StateVector(
                (0..f.len())
                    .map(|x| {
                        let lo = x & !bit;
                        let hi = x | bit;
                        if f[lo] > f[hi] {
                            0.5 * (f[x ^ bit] - f[x])
                        } else {
                            0.0
                        }
                    })
                    .collect(),
            )
        })
        .collect())
}

/// Per-coordinate energy `¼ E[((f(x^{i→1}) - f(x^{i→0}))⁻)²]`.
pub fn coordinate_energy(n: u32, f: &[f64], coord: usize) -> Result<f64> {
    check_cube(n, f)?;
    let bit = 1usize << coord;
    let sum: f64 = (0..f.len())
        .map(|x| {
            let d = f[x | bit] - f[x & !bit];
            if d < 0.0 {
                d * d
            } else {
                0.0
            }
        })
        .sum();
    Ok(0.25 * sum / f.len() as f64)
}

/// `‖f - g‖² >= 𝓔⁻(f) / d_w` for monotone `g`.
pub fn reverse_poincare_check(
    g_graph: &WeightedDigraph,
    f: &[f64],
    g: &[f64],
) -> Result<VerificationReport> {
    g_graph.check_len(f)?;
    g_graph.check_len(g)?;
    if let Some((u, v)) = first_antimonotone_edge(g_graph, g) {
        return Err(Error::GNotMonotone(u, v));
    }
    let energy = energy_unchecked(g_graph, f);
    let d_w = g_graph.max_weighted_degree();
    let lhs = dist_sq(f, g);
    let rhs = if d_w > 0.0 { energy / d_w } else { 0.0 };
    Ok(VerificationReport::new(
        "reverse_directed_poincare",
        lhs,
        Relation::AtLeast,
        rhs,
        1e-12,
    )
    .quantity("energy", energy)
    .quantity("max_weighted_degree", d_w))
}
