//! Analytic initial fields and projection onto discretely divergence-free fluxes.

use crate::derham::{interpolate, DeRhamComplex, FieldVec, SpaceKind};
use crate::element::Vec3;
use crate::linsolve::{factorize, solve_refined, SolveError};
use crate::sparse::{SparseOperator, Triplets};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HopfParams {
    pub omega1: f64,
    pub omega2: f64,
    pub s: f64,
}

impl Default for HopfParams {
    fn default() -> Self {
        Self { omega1: 3.0, omega2: 2.0, s: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ICKind {
    Hopf(HopfParams),
    Isohelix,
    /// Constant field, mostly for tests and sanity runs.
    Uniform { value: [f64; 3] },
}

#[derive(Debug, Error)]
pub enum FieldsError {
    #[error("winding numbers must not both vanish")]
    DegenerateWinding,
    #[error("scale parameter must be nonnegative, got {0}")]
    NegativeScale(f64),
    #[error(transparent)]
    Space(#[from] crate::derham::FieldError),
    #[error("projection solve failed: {0}")]
    Solve(#[from] SolveError),
}

/// Hopf fibration field with `r² = x² + y² + z²`.
pub fn hopf_field(p: HopfParams) -> Result<impl Fn(Vec3) -> Vec3, FieldsError> {
    let w = (p.omega1 * p.omega1 + p.omega2 * p.omega2).sqrt();
    if w == 0.0 {
        return Err(FieldsError::DegenerateWinding);
    }
    if p.s < 0.0 {
        return Err(FieldsError::NegativeScale(p.s));
    }
    let (w1, w2) = (p.omega1, p.omega2);
    let c = 4.0 * p.s.sqrt() / (PI * w);
    Ok(move |[x, y, z]: Vec3| {
        let r2 = x * x + y * y + z * z;
        let f = c / (1.0 + r2).powi(3);
        [
            f * 2.0 * (w2 * y - w1 * x * z),
            -f * 2.0 * (w2 * x + w1 * y * z),
            f * w1 * (-1.0 + x * x + y * y - z * z),
        ]
    })
}

/// Twisted uniform field `(α y, −α x, 1)` with `α = (π/2) z exp(−r²/2 − z²/4)`, `r² = x² + y²`.
pub fn isohelix_field() -> impl Fn(Vec3) -> Vec3 {
    |[x, y, z]: Vec3| {
        let alpha = 0.5 * PI * z * (-0.5 * (x * x + y * y) - 0.25 * z * z).exp();
        [alpha * y, -alpha * x, 1.0]
    }
}

pub fn analytic_field(ic: ICKind) -> Result<Box<dyn Fn(Vec3) -> Vec3>, FieldsError> {
    Ok(match ic {
        ICKind::Hopf(p) => Box::new(hopf_field(p)?),
        ICKind::Isohelix => Box::new(isohelix_field()),
        ICKind::Uniform { value } => Box::new(move |_| value),
    })
}

/// Symmetric saddle system for the M-orthogonal projection onto ker(D_div):
/// unknowns (B, p, μ), with μ enforcing a mean-zero `p`.
fn projection_system(cx: &DeRhamComplex) -> SparseOperator {
    let nf = cx.dim(SpaceKind::Face);
    let nc = cx.dim(SpaceKind::Cell);
    let mf = cx.mass(SpaceKind::Face);
    let mcd = cx.mass(SpaceKind::Cell).matmul(cx.d_div());
    let mut t = Triplets::new(nf + nc + 1, nf + nc + 1);
    t.push_block(0, 0, mf, 1.0);
    t.push_block(0, nf, &mcd.transpose(), -1.0);
    t.push_block(nf, 0, &mcd, -1.0);
    for c in 0..nc {
        t.push(nf + c, nf + nc, 1.0);
        t.push(nf + nc, nf + c, 1.0);
    }
    t.to_csr()
}

/// Projects a face field onto the discretely divergence-free subspace.
/// Returns the projected field and the cell-space multiplier.
pub fn project_divfree(cx: &DeRhamComplex, raw: &FieldVec) -> Result<(FieldVec, FieldVec), FieldsError> {
    cx.check(raw, SpaceKind::Face)?;
    let nf = cx.dim(SpaceKind::Face);
    let nc = cx.dim(SpaceKind::Cell);
    let a = projection_system(cx);
    let lu = factorize(&a)?;
    let mut rhs = cx.mass(SpaceKind::Face).mul_vec(&raw.coeffs);
    rhs.resize(nf + nc + 1, 0.0);
    let x = solve_refined(&lu, &a, &rhs)?;
    let b = FieldVec::new(SpaceKind::Face, x[..nf].to_vec());
    let p = FieldVec::new(SpaceKind::Cell, x[nf..nf + nc].to_vec());
    Ok((b, p))
}

/// Interpolates an initial condition into `space`; face fields are projected to be divergence-free.
pub fn initial_field(cx: &DeRhamComplex, ic: ICKind, space: SpaceKind) -> Result<FieldVec, FieldsError> {
    let f = analytic_field(ic)?;
    let raw = interpolate(cx, &*f, space);
    if space == SpaceKind::Face {
        Ok(project_divfree(cx, &raw)?.0)
    } else {
        Ok(raw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::BoxMesh;
    use crate::sparse::norm_inf;

    fn reference_mesh(periodic: bool) -> BoxMesh {
        BoxMesh::new([(-4.0, 4.0), (-4.0, 4.0), (-10.0, 10.0)], [4, 4, 10], periodic).unwrap()
    }

    fn fd_div(f: &dyn Fn(Vec3) -> Vec3, p: Vec3) -> f64 {
        let h = 1e-4;
        (0..3)
            .map(|a| {
                let (mut pp, mut pm) = (p, p);
                pp[a] += h;
                pm[a] -= h;
                (f(pp)[a] - f(pm)[a]) / (2.0 * h)
            })
            .sum()
    }

    #[test]
    fn hopf_at_origin() {
        let f = hopf_field(HopfParams::default()).unwrap();
        let v = f([0.0; 3]);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[1], 0.0);
        assert!((v[2] + 12.0 / (PI * 13f64.sqrt())).abs() < 1e-14);
        let zero = hopf_field(HopfParams { s: 0.0, ..Default::default() }).unwrap();
        assert_eq!(zero([0.3, -1.0, 2.0]), [0.0, 0.0, 0.0]);
        assert!(hopf_field(HopfParams { omega1: 0.0, omega2: 0.0, s: 1.0 }).is_err());
    }

    #[test]
    fn isohelix_values() {
        let f = isohelix_field();
        assert_eq!(f([1.0, 0.0, 0.0]), [0.0, 0.0, 1.0]);
        let v = f([0.0, 1.0, 2.0]);
        assert!((v[0] - PI * (-1.5f64).exp()).abs() < 1e-14);
        assert!((v[0] - 0.70100).abs() < 5e-5);
        assert_eq!(v[1], 0.0);
        assert_eq!(v[2], 1.0);
    }

    #[test]
    fn analytic_fields_are_solenoidal() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let hopf = hopf_field(HopfParams::default()).unwrap();
        let iso = isohelix_field();
        for _ in 0..20 {
            let p = [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0), rng.gen_range(-10.0..10.0)];
            assert!(fd_div(&hopf, p).abs() < 1e-8);
            assert!(fd_div(&iso, p).abs() < 1e-8);
        }
    }

    #[test]
    fn projection_of_hopf() {
        let cx = DeRhamComplex::new(&reference_mesh(false));
        let hopf = hopf_field(HopfParams::default()).unwrap();
        let raw = interpolate(&cx, &hopf, SpaceKind::Face);
        let (b, p) = project_divfree(&cx, &raw).unwrap();
        let div = cx.d_div().mul_vec(&b.coeffs);
        assert!(norm_inf(&div) <= 1e-11 * norm_inf(&b.coeffs));
        assert!(cx.energy(&b) < cx.energy(&raw));
        assert!(p.coeffs.iter().sum::<f64>().abs() < 1e-10 * norm_inf(&p.coeffs).max(1.0));
        // idempotent
        let (b2, _) = project_divfree(&cx, &b).unwrap();
        for (x, y) in b.coeffs.iter().zip(&b2.coeffs) {
            assert!((x - y).abs() < 1e-12 * norm_inf(&b.coeffs));
        }
    }

    #[test]
    fn uniform_flux_is_already_solenoidal() {
        let cx = DeRhamComplex::new(&reference_mesh(true));
        let raw = interpolate(&cx, &|_| [0.0, 0.0, 1.0], SpaceKind::Face);
        let (b, p) = project_divfree(&cx, &raw).unwrap();
        for (x, y) in b.coeffs.iter().zip(&raw.coeffs) {
            assert!((x - y).abs() < 1e-11);
        }
        assert!(norm_inf(&p.coeffs) < 1e-11);
    }

    #[test]
    fn wrong_space_is_rejected() {
        let cx = DeRhamComplex::new(&reference_mesh(true));
        assert!(project_divfree(&cx, &cx.zeros(SpaceKind::Edge)).is_err());
    }
}
