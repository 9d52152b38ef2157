//! Vector potentials, harmonic components, helicities and the discrete Arnold constant.

use crate::derham::{DeRhamComplex, FieldError, FieldVec, SpaceKind};
use crate::linsolve::{
    eig_smallest_nonzero, minres_minnorm, EigenOptions, GradientProjector, KrylovOptions, KrylovReport, SolveError,
};
use crate::sparse::{norm_inf, SparseOperator};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HodgeError {
    #[error("field is not divergence-free: ‖D_div B‖∞ = {div:e} vs ‖B‖∞ = {scale:e}")]
    NotSolenoidal { div: f64, scale: f64 },
    #[error("potential solve did not converge: {0:?}")]
    NotConverged(KrylovReport),
    #[error(transparent)]
    Space(#[from] FieldError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Clone, Debug)]
pub struct HodgeResult {
    pub a: FieldVec,
    pub b_h: FieldVec,
    pub helicity: f64,
    pub gen_helicity: f64,
    pub report: KrylovReport,
}

#[derive(Clone, Debug)]
pub struct PoincareEstimate {
    pub lambda_min: f64,
    pub c: f64,
    pub vector: FieldVec,
    pub residual: f64,
}

/// Reusable curl–curl operator and gradient projector for repeated decompositions.
pub struct HodgeSolver<'a> {
    cx: &'a DeRhamComplex,
    k: SparseOperator,
    proj: GradientProjector,
    pub opts: KrylovOptions,
}

/// Relative divergence accepted before a potential is recovered.
pub const DIV_TOLERANCE: f64 = 1e-10;

impl<'a> HodgeSolver<'a> {
    pub fn new(cx: &'a DeRhamComplex) -> Result<Self, HodgeError> {
        let c = cx.d_curl();
        let k = c.transpose().matmul(&cx.mass(SpaceKind::Face).matmul(c));
        let proj = GradientProjector::new(cx.d_grad())?;
        Ok(Self { cx, k, proj, opts: KrylovOptions { tol: 1e-12, max_iter: 20_000, max_restarts: 8 } })
    }

    pub fn curl_curl(&self) -> &SparseOperator {
        &self.k
    }

    /// Minimum-norm `A` with `(curl A, curl C) = (B, curl C)` for all edge `C`.
    pub fn recover_potential(&self, b: &FieldVec) -> Result<(FieldVec, KrylovReport), HodgeError> {
        self.cx.check(b, SpaceKind::Face)?;
        let div = norm_inf(&self.cx.d_div().mul_vec(&b.coeffs));
        let scale = norm_inf(&b.coeffs);
        if div > DIV_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
            return Err(HodgeError::NotSolenoidal { div, scale });
        }
        let c = self.cx.d_curl();
        let f = c.mul_vec_transpose(&self.cx.mass(SpaceKind::Face).mul_vec(&b.coeffs));
        let (a, report) = minres_minnorm(&self.k, &f, Some(&self.proj), None, self.opts);
        if !report.converged {
            return Err(HodgeError::NotConverged(report));
        }
        Ok((FieldVec::new(SpaceKind::Edge, a), report))
    }

    pub fn decompose(&self, b: &FieldVec) -> Result<HodgeResult, HodgeError> {
        let (a, report) = self.recover_potential(b)?;
        let b_h = harmonic_component(self.cx, b, &a);
        let helicity = helicity(self.cx, &a, b);
        let gen_helicity = generalized_helicity(self.cx, &a, b, &b_h);
        Ok(HodgeResult { a, b_h, helicity, gen_helicity, report })
    }
}

pub fn recover_potential(cx: &DeRhamComplex, b: &FieldVec) -> Result<(FieldVec, KrylovReport), HodgeError> {
    HodgeSolver::new(cx)?.recover_potential(b)
}

pub fn decompose(cx: &DeRhamComplex, b: &FieldVec) -> Result<HodgeResult, HodgeError> {
    HodgeSolver::new(cx)?.decompose(b)
}

/// `B_H = B − D_curl A`.
pub fn harmonic_component(cx: &DeRhamComplex, b: &FieldVec, a: &FieldVec) -> FieldVec {
    let ca = cx.d_curl().mul_vec(&a.coeffs);
    FieldVec::new(SpaceKind::Face, b.coeffs.iter().zip(&ca).map(|(x, y)| x - y).collect())
}

/// `∫ A · B` through the edge–face pairing.
pub fn helicity(cx: &DeRhamComplex, a: &FieldVec, b: &FieldVec) -> f64 {
    cx.mixed_mass().quadratic_form(&a.coeffs, &b.coeffs)
}

/// `∫ A · (B + B_H)`.
pub fn generalized_helicity(cx: &DeRhamComplex, a: &FieldVec, b: &FieldVec, b_h: &FieldVec) -> f64 {
    let s: Vec<f64> = b.coeffs.iter().zip(&b_h.coeffs).map(|(x, y)| x + y).collect();
    cx.mixed_mass().quadratic_form(&a.coeffs, &s)
}

/// Smallest nonzero eigenvalue of the curl–curl pencil on edges, deflated by gradients.
/// The returned constant `C = √λ` satisfies `C |H(B)| ≤ ‖B‖²` for solenoidal `B` in the curl range.
pub fn estimate_arnold_constant(cx: &DeRhamComplex) -> Result<PoincareEstimate, HodgeError> {
    let c = cx.d_curl();
    let k = c.transpose().matmul(&cx.mass(SpaceKind::Face).matmul(c));
    let g = cx.d_grad();
    let defl = if g.ncols() > 0 { Some(g) } else { None };
    let r = eig_smallest_nonzero(&k, cx.mass(SpaceKind::Edge), defl, EigenOptions::default())?;
    Ok(PoincareEstimate {
        lambda_min: r.lambda,
        c: r.lambda.sqrt(),
        vector: FieldVec::new(SpaceKind::Edge, r.vector),
        residual: r.residual,
    })
}

/// `‖B − B_H‖²_M`.
pub fn modified_energy(cx: &DeRhamComplex, b: &FieldVec, b_h: &FieldVec) -> f64 {
    let d: Vec<f64> = b.coeffs.iter().zip(&b_h.coeffs).map(|(x, y)| x - y).collect();
    cx.mass(SpaceKind::Face).quadratic_form(&d, &d)
}

pub fn mass_norm(cx: &DeRhamComplex, v: &FieldVec) -> f64 {
    cx.energy(v).max(0.0).sqrt()
}
