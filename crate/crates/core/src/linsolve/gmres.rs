//! Right-preconditioned restarted GMRES with an LU factorization as preconditioner.

use super::Factorization;
use crate::sparse::{axpy, dot, norm2, SparseOperator};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmresOutcome {
    pub iterations: usize,
    /// True relative residual ‖b − A x‖ / ‖b‖.
    pub residual: f64,
    pub converged: bool,
}

/// Solves `A x = b` with `M⁻¹` applied through `pc`. Starts from zero.
pub fn gmres(
    a: &SparseOperator,
    b: &[f64],
    pc: &Factorization,
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> (Vec<f64>, GmresOutcome) {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return (x, GmresOutcome { iterations: 0, residual: 0.0, converged: true });
    }
    let mut total = 0;
    let mut r = b.to_vec();
    loop {
        let beta = norm2(&r);
        if beta <= tol * bnorm || total >= max_iter {
            return (x, GmresOutcome { iterations: total, residual: beta / bnorm, converged: beta <= tol * bnorm });
        }
        let m = restart.min(max_iter - total).max(1);
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|ri| ri / beta).collect());
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        while k < m {
            let zk = pc.solve(&v[k]).expect("preconditioner dimension matches");
            let mut w = a.mul_vec(&zk);
            z.push(zk);
            // modified Gram–Schmidt, twice for stability
            for _ in 0..2 {
                for (i, vi) in v.iter().enumerate() {
                    let hij = dot(&w, vi);
                    h[i][k] += hij;
                    axpy(-hij, vi, &mut w);
                }
            }
            let wn = norm2(&w);
            h[k + 1][k] = wn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let d = h[k][k].hypot(h[k + 1][k]);
            if d == 0.0 {
                break;
            }
            cs[k] = h[k][k] / d;
            sn[k] = h[k + 1][k] / d;
            h[k][k] = d;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k += 1;
            total += 1;
            if g[k].abs() <= 0.1 * tol * bnorm || wn == 0.0 {
                break;
            }
            v.push(w.iter().map(|wi| wi / wn).collect());
        }
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (yi, zi) in y.iter().zip(&z) {
            axpy(*yi, zi, &mut x);
        }
        r = b.to_vec();
        axpy(-1.0, &a.mul_vec(&x), &mut r);
        if k == 0 {
            let beta = norm2(&r);
            return (x, GmresOutcome { iterations: total, residual: beta / bnorm, converged: beta <= tol * bnorm });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsolve::factorize;
    use rand::{Rng, SeedableRng};

    #[test]
    fn perturbed_preconditioner_converges() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = 60;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            t.push((i, (i + 1) % n, -1.0));
            t.push(((i + 3) % n, i, 0.5));
        }
        let a = SparseOperator::from_triplets(n, n, &t);
        let pert: Vec<_> = t.iter().map(|&(r, c, v)| (r, c, v * (1.0 + rng.gen_range(-0.1..0.1)))).collect();
        let p = factorize(&SparseOperator::from_triplets(n, n, &pert)).unwrap();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (x, out) = gmres(&a, &b, &p, 1e-13, 30, 200);
        assert!(out.converged, "{out:?}");
        let mut r = b.clone();
        axpy(-1.0, &a.mul_vec(&x), &mut r);
        assert!(norm2(&r) <= 1e-12 * norm2(&b));
    }
}
