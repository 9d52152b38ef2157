//! MINRES for symmetric (possibly singular) systems, with an explicit
//! projection onto the orthogonal complement of a known null space.

use super::{factorize, Factorization, SolveError};
use crate::sparse::{axpy, dot, norm2, SparseOperator};

#[derive(Clone, Copy, Debug)]
pub struct KrylovOptions {
    /// Relative residual target ‖Kx − f‖ / ‖f‖.
    pub tol: f64,
    pub max_iter: usize,
    /// Restarts from the current iterate when the true residual misses `tol`.
    pub max_restarts: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 5000, max_restarts: 4 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KrylovReport {
    pub iterations: usize,
    /// True relative residual of the returned solution.
    pub residual: f64,
    pub converged: bool,
    /// Euclidean norm of the component of x in the supplied null space.
    pub null_component_norm: f64,
}

/// Euclidean projector onto range(G)ᗮ, `x ↦ x − G (GᵀG)⁻¹ Gᵀ x`.
#[derive(Clone, Debug)]
pub struct GradientProjector {
    g: SparseOperator,
    gtg: Option<Factorization>,
}

impl GradientProjector {
    pub fn new(g: &SparseOperator) -> Result<Self, SolveError> {
        let gtg = if g.ncols() == 0 { None } else { Some(factorize(&g.transpose().matmul(g))?) };
        Ok(Self { g: g.clone(), gtg })
    }

    /// Component of `x` in range(G).
    pub fn range_component(&self, x: &[f64]) -> Vec<f64> {
        match &self.gtg {
            None => vec![0.0; x.len()],
            Some(f) => {
                let c = f.solve(&self.g.mul_vec_transpose(x)).expect("dimension checked at construction");
                self.g.mul_vec(&c)
            }
        }
    }

    pub fn project_out(&self, x: &mut [f64]) {
        let r = self.range_component(x);
        axpy(-1.0, &r, x);
    }
}

fn true_residual(k: &SparseOperator, x: &[f64], f: &[f64]) -> Vec<f64> {
    let mut r = f.to_vec();
    axpy(-1.0, &k.mul_vec(x), &mut r);
    r
}

/// One MINRES run (Paige–Saunders recurrences) from initial guess `x`.
/// Returns the iteration count.
fn minres_run(k: &SparseOperator, f: &[f64], x: &mut [f64], tol_abs: f64, max_iter: usize) -> usize {
    let n = f.len();
    let mut r1 = true_residual(k, x, f);
    let mut y = r1.clone();
    let beta1 = norm2(&r1);
    if beta1 <= tol_abs {
        return 0;
    }
    let mut r2 = r1.clone();
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut itn = 0;
    while itn < max_iter {
        itn += 1;
        let s = 1.0 / beta;
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = s * yi;
        }
        k.mul_vec_into(&v, &mut y);
        if itn >= 2 {
            axpy(-beta / oldb, &r1, &mut y);
        }
        let alfa = dot(&v, &y);
        axpy(-alfa / beta, &r2, &mut y);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        oldb = beta;
        beta = norm2(&y);
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        let denom = 1.0 / gamma;
        for i in 0..n {
            let w1 = w2[i];
            w2[i] = w[i];
            w[i] = (v[i] - oldeps * w1 - delta * w2[i]) * denom;
            x[i] += phi * w[i];
        }
        if phibar <= tol_abs || beta == 0.0 {
            break;
        }
    }
    itn
}

/// Plain MINRES with true-residual restarts.
pub fn minres(k: &SparseOperator, f: &[f64], x0: Option<&[f64]>, opts: KrylovOptions) -> (Vec<f64>, KrylovReport) {
    let mut x = x0.map_or_else(|| vec![0.0; f.len()], |v| v.to_vec());
    let fnorm = norm2(f);
    if fnorm == 0.0 && x0.is_none() {
        return (x, KrylovReport { iterations: 0, residual: 0.0, converged: true, null_component_norm: 0.0 });
    }
    let scale = fnorm.max(f64::MIN_POSITIVE);
    let mut iterations = 0;
    let mut rel = norm2(&true_residual(k, &x, f)) / scale;
    for _ in 0..=opts.max_restarts {
        if rel <= opts.tol {
            break;
        }
        // Aim a little below the target since the recurrence residual drifts from the true one.
        iterations += minres_run(k, f, &mut x, 0.1 * opts.tol * scale, opts.max_iter - iterations.min(opts.max_iter));
        rel = norm2(&true_residual(k, &x, f)) / scale;
        if iterations >= opts.max_iter {
            break;
        }
    }
    let report = KrylovReport { iterations, residual: rel, converged: rel <= opts.tol, null_component_norm: 0.0 };
    (x, report)
}

/// MINRES followed by projection out of the supplied null space, giving the
/// minimum Euclidean-norm solution of a consistent singular system.
pub fn minres_minnorm(
    k: &SparseOperator,
    f: &[f64],
    null_space: Option<&GradientProjector>,
    x0: Option<&[f64]>,
    opts: KrylovOptions,
) -> (Vec<f64>, KrylovReport) {
    let (mut x, mut report) = minres(k, f, x0, opts);
    if let Some(p) = null_space {
        p.project_out(&mut x);
        // The projection is exact on ker(K), so one re-check suffices.
        report.null_component_norm = norm2(&p.range_component(&x));
        let fnorm = norm2(f).max(f64::MIN_POSITIVE);
        report.residual = norm2(&true_residual(k, &x, f)) / fnorm;
        report.converged = report.residual <= opts.tol;
    }
    (x, report)
}
