//! Euclidean projection onto the cone of monotone functions of a poset.
//!
//! The poset is given by covering edges `u → v` meaning `g(u) <= g(v)`.
//! Distances use the uniform (averaged) measure on the vertices.

use serde::{Deserialize, Serialize};

use crate::cube::VertexSet;
use crate::digraph::{dist_sq, WeightedDigraph};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosetEdges {
    len: usize,
    edges: Vec<(usize, usize)>,
    preds: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

impl PosetEdges {
    /// Validate that the edges form a DAG on `len` vertices.
    pub fn new(len: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut indeg = vec![0usize; len];
        let mut succs = vec![Vec::new(); len];
        let mut preds = vec![Vec::new(); len];
        for &(u, v) in &edges {
            if u >= len || v >= len {
                return Err(Error::ParamOutOfRange(format!(
                    "edge ({u}, {v}) outside {len} vertices"
                )));
            }
            if u == v {
                return Err(Error::Cyclic);
            }
            indeg[v] += 1;
            succs[u].push(v);
            preds[v].push(u);
        }
        let mut stack: Vec<usize> = (0..len).rev().filter(|&v| indeg[v] == 0).collect();
        let mut topo = Vec::with_capacity(len);
        while let Some(u) = stack.pop() {
            topo.push(u);
            for &v in succs[u].iter().rev() {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    stack.push(v);
                }
            }
        }
        if topo.len() != len {
            return Err(Error::Cyclic);
        }
        Ok(PosetEdges {
            len,
            edges,
            preds,
            topo,
        })
    }

    /// The `n 2^{n-1}` covering edges of `{0,1}^n`.
    pub fn hypercube(n: u32) -> Result<Self> {
        Self::on_set(&VertexSet::full(n)?)
    }

    /// Covering edges with both ends in `set`, in member-position indices.
    pub fn on_set(set: &VertexSet) -> Result<Self> {
        let mut edges = Vec::new();
        for (pos, &v) in set.members().iter().enumerate() {
            for i in 0..set.n() {
                if v & (1 << i) == 0 {
                    if let Some(up) = set.position(v | (1 << i)) {
                        edges.push((pos, up));
                    }
                }
            }
        }
        Self::new(set.len(), edges)
    }

    pub fn from_digraph(g: &WeightedDigraph) -> Result<Self> {
        let edges = g
            .edges()
            .iter()
            .filter(|&&(u, v, _)| u != v)
            .map(|&(u, v, _)| (u, v))
            .collect();
        Self::new(g.vertex_count(), edges)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Largest `(f(u) - f(v))⁺` over edges.
    pub fn max_violation(&self, f: &[f64]) -> f64 {
        self.edges
            .iter()
            .map(|&(u, v)| (f[u] - f[v]).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn first_violation(&self, f: &[f64]) -> Option<(usize, usize)> {
        self.edges.iter().copied().find(|&(u, v)| f[u] > f[v])
    }

    pub fn is_monotone(&self, f: &[f64]) -> bool {
        self.first_violation(f).is_none()
    }

    /// Raise each value to the max of its predecessors, in topological
    /// order. Moves `f` by at most (depth × max violation).
    pub fn repair(&self, f: &mut [f64]) {
        for &v in &self.topo {
            for &u in &self.preds[v] {
                if f[u] > f[v] {
                    f[v] = f[u];
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionOptions {
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        ProjectionOptions {
            tol: 1e-10,
            max_sweeps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// Exactly monotone on the poset.
    pub values: Vec<f64>,
    /// `‖f - values‖²` under the averaged measure.
    pub dist_sq: f64,
    pub sweeps: usize,
    /// Largest edge violation of the raw Dykstra iterate at exit.
    pub raw_violation: f64,
    pub converged: bool,
}

fn check_len(f: &[f64], poset: &PosetEdges) -> Result<()> {
    if f.len() != poset.len {
        return Err(Error::SizeMismatch {
            expected: poset.len,
            found: f.len(),
        });
    }
    if f.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Dykstra's cyclic projections onto the edge halfspaces
/// `{g : g(u) <= g(v)}`.
///
/// Stops when the largest violation and the largest change over a sweep
/// are both at most `tol`. The iterate is then made exactly feasible: the
/// level sets it has formed are replaced by block means of `f` when that
/// is feasible and no farther from `f`, otherwise values are raised along
/// a topological order.
pub fn project_monotone(
    f: &[f64],
    poset: &PosetEdges,
    opts: &ProjectionOptions,
) -> Result<Projection> {
    check_len(f, poset)?;
    if !(opts.tol > 0.0) {
        return Err(Error::ParamOutOfRange(
            "projection tol must be positive".into(),
        ));
    }
    let mut x = f.to_vec();
    if poset.is_monotone(&x) {
        return Ok(Projection {
            values: x,
            dist_sq: 0.0,
            sweeps: 0,
            raw_violation: 0.0,
            converged: true,
        });
    }
    let mut corr = vec![0.0; poset.edges.len()];
    let mut sweeps = 0;
    let mut violation = f64::INFINITY;
    let mut converged = false;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let mut change = 0.0f64;
        for (e, &(u, v)) in poset.edges.iter().enumerate() {
            let yu = x[u] + corr[e];
            let yv = x[v] - corr[e];
            let (nu, nv, c) = if yu > yv {
                let mid = 0.5 * (yu + yv);
                (mid, mid, 0.5 * (yu - yv))
            } else {
                (yu, yv, 0.0)
            };
            change = change.max((nu - x[u]).abs()).max((nv - x[v]).abs());
            x[u] = nu;
            x[v] = nv;
            corr[e] = c;
        }
        violation = poset.max_violation(&x);
        if violation <= opts.tol && change <= opts.tol {
            converged = true;
            break;
        }
    }

    let mut repaired = x.clone();
    poset.repair(&mut repaired);
    let mut best = repaired;
    let mut best_dist = dist_sq(f, &best);
    if let Some(pooled) = pool_blocks(f, &x, poset, 1e3 * opts.tol) {
        let d = dist_sq(f, &pooled);
        if d <= best_dist {
            best = pooled;
            best_dist = d;
        }
    }
    Ok(Projection {
        values: best,
        dist_sq: best_dist,
        sweeps,
        raw_violation: violation,
        converged,
    })
}

/// Merge endpoints of edges whose values agree within `eta`, replace each
/// block by the mean of `f` over it. Returns the result only if it is
/// exactly monotone.
fn pool_blocks(f: &[f64], x: &[f64], poset: &PosetEdges, eta: f64) -> Option<Vec<f64>> {
    let len = f.len();
    let mut parent: Vec<usize> = (0..len).collect();
    fn find(parent: &mut [usize], mut a: usize) -> usize {
        while parent[a] != a {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        a
    }
    for &(u, v) in &poset.edges {
        if (x[u] - x[v]).abs() <= eta {
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru != rv {
                parent[ru] = rv;
            }
        }
    }
    let mut sum = vec![0.0; len];
    let mut count = vec![0usize; len];
    for i in 0..len {
        let r = find(&mut parent, i);
        sum[r] += f[i];
        count[r] += 1;
    }
    let pooled: Vec<f64> = (0..len)
        .map(|i| {
            let r = find(&mut parent, i);
            sum[r] / count[r] as f64
        })
        .collect();
    poset.is_monotone(&pooled).then_some(pooled)
}

/// `dist₂ᵐᵒⁿᵒ(f)`: distance (not squared) to the monotone cone.
pub fn dist2_mono(f: &[f64], poset: &PosetEdges, opts: &ProjectionOptions) -> Result<f64> {
    let p = project_monotone(f, poset, opts)?;
    if !p.converged {
        return Err(Error::NotConverged {
            iterations: p.sweeps,
            residual: p.raw_violation,
        });
    }
    Ok(p.dist_sq.sqrt())
}
