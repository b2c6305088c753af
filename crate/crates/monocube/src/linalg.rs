//! Symmetric eigen helpers: dense solves through nalgebra and a Lanczos
//! iteration for large graph Laplacians.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Eigenpairs of a symmetric matrix, eigenvalues ascending.
pub fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

/// Eigenvalues only, ascending.
pub fn sorted_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Dense Laplacian `D - W` from a weighted edge list.
pub fn laplacian_matrix(
    dim: usize,
    edges: impl IntoIterator<Item = (usize, usize, f64)>,
) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(dim, dim);
    for (u, v, w) in edges {
        if u == v {
            continue;
        }
        l[(u, v)] -= w;
        l[(v, u)] -= w;
        l[(u, u)] += w;
        l[(v, v)] += w;
    }
    l
}

#[derive(Debug, Clone)]
pub struct LanczosResult {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Smallest eigenvalue of a PSD operator `L` on the complement of the
/// constant vector. `shift` must bound the spectrum of `L` from above.
///
/// Runs Lanczos with full reorthogonalization on `shift·I - L`, deflating
/// the all-ones vector at every step.
pub fn lanczos_second_smallest(
    dim: usize,
    matvec: impl Fn(&[f64], &mut [f64]),
    shift: f64,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> LanczosResult {
    assert!(dim >= 2);
    let max_iter = max_iter.min(dim - 1).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let deflate = |x: &mut [f64]| {
        let mean = x.iter().sum::<f64>() / dim as f64;
        x.iter_mut().for_each(|v| *v -= mean);
    };
    let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();

    let mut q: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
    deflate(&mut q);
    let q_norm = norm(&q);
    q.iter_mut().for_each(|v| *v /= q_norm);

    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![0.0; dim];
    let mut best = LanczosResult {
        value: f64::NAN,
        vector: Vec::new(),
        residual: f64::INFINITY,
        iterations: 0,
        converged: false,
    };

    for k in 0..max_iter {
        let qk = &basis[k];
        matvec(qk, &mut w);
        for (wi, &qi) in w.iter_mut().zip(qk) {
            *wi = shift * qi - *wi;
        }
        deflate(&mut w);
        let alpha = dot(&w, qk);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for b in &basis {
                let d = dot(&w, b);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
            }
        }
        alphas.push(alpha);
        let beta = norm(&w);

        let done = k + 1 == max_iter || beta < 1e-14 || (k + 1) % 8 == 0;
        if done {
            let m = alphas.len();
            let t = DMatrix::from_fn(m, m, |r, c| {
                if r == c {
                    alphas[r]
                } else if r + 1 == c {
                    betas[r]
                } else if c + 1 == r {
                    betas[c]
                } else {
                    0.0
                }
            });
            let (vals, vecs) = sorted_eigen(t);
            let top = m - 1;
            let theta = vals[top];
            let residual = (beta * vecs[(top, top)]).abs();
            let mut vector = vec![0.0; dim];
            for (j, b) in basis.iter().enumerate().take(m) {
                let s = vecs[(j, top)];
                vector.iter_mut().zip(b).for_each(|(x, y)| *x += s * y);
            }
            best = LanczosResult {
                value: shift - theta,
                vector,
                residual,
                iterations: m,
                converged: residual <= tol || beta < 1e-14,
            };
            if best.converged {
                break;
            }
        }
        if beta < 1e-14 {
            break;
        }
        betas.push(beta);
        basis.push(w.iter().map(|x| x / beta).collect());
    }
    best
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn to_dvector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}
