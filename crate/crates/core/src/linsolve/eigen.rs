//! Smallest nonzero generalized eigenvalue of `K x = λ M x` on the
//! M-orthogonal complement of a deflation space.
//!
//! Subspace (block inverse) iteration with Rayleigh–Ritz. The inverse is applied
//! through the nonsingular augmented system
//! `[[K, M G], [Gᵀ M, 0]] [x; μ] = [M v; 0]`, whose `x` block is the inverse of
//! `K` restricted to vectors M-orthogonal to range(G).

use super::{factorize, Factorization, SolveError};
use crate::sparse::{dot, norm2, SparseOperator, Triplets};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug)]
pub struct EigenOptions {
    pub block: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { block: 6, tol: 1e-10, max_iter: 500, seed: 0x5eed }
    }
}

#[derive(Clone, Debug)]
pub struct EigenResult {
    pub lambda: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
    /// ‖K v − λ M v‖ / ‖v‖.
    pub residual: f64,
}

struct DeflatedInverse {
    n: usize,
    m: SparseOperator,
    lu: Factorization,
}

impl DeflatedInverse {
    fn new(k: &SparseOperator, m: &SparseOperator, g: Option<&SparseOperator>) -> Result<Self, SolveError> {
        let n = k.nrows();
        let mg = g.map(|g| m.matmul(g));
        let ng = mg.as_ref().map_or(0, |x| x.ncols());
        let mut t = Triplets::new(n + ng, n + ng);
        t.push_block(0, 0, k, 1.0);
        if let Some(mg) = &mg {
            t.push_block(0, n, mg, 1.0);
            t.push_block(n, 0, &mg.transpose(), 1.0);
        }
        let lu = factorize(&t.to_csr())?;
        Ok(Self { n, m: m.clone(), lu })
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut rhs = self.m.mul_vec(v);
        rhs.resize(self.lu.dim(), 0.0);
        let mut x = self.lu.solve(&rhs).expect("dimension fixed at construction");
        x.truncate(self.n);
        x
    }
}

/// Rayleigh–Ritz on the columns of `y`: returns ascending Ritz values and M-orthonormal Ritz vectors.
fn rayleigh_ritz(
    k: &SparseOperator,
    m: &SparseOperator,
    y: &[Vec<f64>],
) -> Result<(Vec<f64>, Vec<Vec<f64>>), SolveError> {
    let p = y.len();
    let ky: Vec<Vec<f64>> = y.iter().map(|v| k.mul_vec(v)).collect();
    let my: Vec<Vec<f64>> = y.iter().map(|v| m.mul_vec(v)).collect();
    let kr = DMatrix::from_fn(p, p, |a, b| 0.5 * (dot(&y[a], &ky[b]) + dot(&y[b], &ky[a])));
    let mr = DMatrix::from_fn(p, p, |a, b| 0.5 * (dot(&y[a], &my[b]) + dot(&y[b], &my[a])));
    let chol = mr.cholesky().ok_or_else(|| SolveError::Breakdown("Ritz basis lost rank".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| SolveError::Breakdown("singular Ritz mass".into()))?;
    let s = &linv * kr * linv.transpose();
    let s = (&s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(s);
    let mut idx: Vec<usize> = (0..p).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let coeffs = linv.transpose() * &eig.eigenvectors;
    let n = y[0].len();
    let mut vals = Vec::with_capacity(p);
    let mut vecs = Vec::with_capacity(p);
    for &c in &idx {
        vals.push(eig.eigenvalues[c]);
        let mut v = vec![0.0; n];
        for (a, ya) in y.iter().enumerate() {
            let s = coeffs[(a, c)];
            for (vi, yi) in v.iter_mut().zip(ya) {
                *vi += s * yi;
            }
        }
        vecs.push(v);
    }
    Ok((vals, vecs))
}

/// Smallest eigenvalue of `K x = λ M x` with `x` M-orthogonal to range(`deflation`).
pub fn eig_smallest_nonzero(
    k: &SparseOperator,
    m: &SparseOperator,
    deflation: Option<&SparseOperator>,
    opts: EigenOptions,
) -> Result<EigenResult, SolveError> {
    let n = k.nrows();
    for op in [k, m] {
        if !op.is_square() {
            return Err(SolveError::NotSquare { rows: op.nrows(), cols: op.ncols() });
        }
        if op.nrows() != n {
            return Err(SolveError::DimensionMismatch { expected: n, found: op.nrows() });
        }
    }
    let ndefl = deflation.map_or(0, |g| g.ncols());
    let avail = n.saturating_sub(ndefl);
    if avail == 0 {
        return Err(SolveError::Breakdown("deflation space fills the whole space".into()));
    }
    let inv = DeflatedInverse::new(k, m, deflation)?;
    let p = opts.block.min(avail).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<Vec<f64>> = (0..p).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let mut prev = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let y: Vec<Vec<f64>> = x.iter().map(|v| inv.apply(v)).collect();
        let (vals, vecs) = rayleigh_ritz(k, m, &y)?;
        x = vecs;
        let lambda = vals[0];
        let v = &x[0];
        let kv = k.mul_vec(v);
        let mv = m.mul_vec(v);
        let r: Vec<f64> = kv.iter().zip(&mv).map(|(a, b)| a - lambda * b).collect();
        let residual = norm2(&r) / norm2(v);
        let settled = (lambda - prev).abs() <= opts.tol * lambda.abs().max(f64::MIN_POSITIVE);
        if settled && residual <= 1e-8 * lambda.abs().max(1e-300) || it == opts.max_iter {
            if !(lambda.is_finite() && lambda > 0.0) {
                return Err(SolveError::Breakdown(format!("non-positive Ritz value {lambda}")));
            }
            return Ok(EigenResult { lambda, vector: x[0].clone(), iterations: it, residual });
        }
        prev = lambda;
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_pencil() {
        let i = SparseOperator::identity(5);
        let r = eig_smallest_nonzero(&i, &i, None, EigenOptions::default()).unwrap();
        assert!((r.lambda - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_laplacian_1d() {
        let n = 8;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let k = SparseOperator::from_triplets(n, n, &t);
        let r = eig_smallest_nonzero(&k, &SparseOperator::identity(n), None, EigenOptions::default()).unwrap();
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / 9.0).cos();
        assert!((r.lambda - exact).abs() < 1e-6 * exact);
    }

    #[test]
    fn neumann_laplacian_deflated_by_constants() {
        let n = 10;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, if i == 0 || i == n - 1 { 1.0 } else { 2.0 }));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let k = SparseOperator::from_triplets(n, n, &t);
        let ones = SparseOperator::from_triplets(n, 1, &(0..n).map(|i| (i, 0, 1.0)).collect::<Vec<_>>());
        let r = eig_smallest_nonzero(&k, &SparseOperator::identity(n), Some(&ones), EigenOptions::default()).unwrap();
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / n as f64).cos();
        assert!((r.lambda - exact).abs() < 1e-8 * exact);
    }
}
