//! Implicit-midpoint time stepping for the magneto-frictional system.
//!
//! Each step solves one nonlinear stage system by Newton's method. The stage
//! unknowns are stacked into a single vector; for the helicity-preserving
//! scheme the blocks are `(B_mid, E, j, H)`:
//!
//! ```text
//! (a) M_f 2(B_mid − Bⁿ)/Δt + M_f C E       = 0
//! (b) M_e E + τ T(j, H)                     = 0
//! (c) M_e j − Cᵀ M_f B_mid                  = 0
//! (d) M_e H − M_mix B_mid                   = 0
//! ```
//!
//! with `C` the discrete curl and `T(j, H)_F = ∫ ((j × H) × H) · F`.
//! The H(div) variant without `H` drops block (d) and evaluates `T` with the
//! face field `B_mid`. The H(curl) and H¹ variants solve the two-field
//! velocity formulation `(B_mid, u)`.

use crate::derham::{DeRhamComplex, FieldError, FieldVec, SpaceKind};
use crate::element::{add3, cross, dot3, BasisTable, CellRule, LocalSpace};
use crate::linsolve::{factorize, gmres, solve_refined, Factorization, SolveError};
use std::cell::RefCell;
use crate::sparse::{norm2, SparseOperator, Triplets};
use serde::{Deserialize, Serialize};
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemeKind {
    #[serde(rename = "sp")]
    Sp,
    #[serde(rename = "hdiv_noH")]
    HdivNoH,
    #[serde(rename = "hcurl")]
    Hcurl,
    #[serde(rename = "h1")]
    H1,
}

impl SchemeKind {
    /// Space the magnetic field lives in.
    pub fn field_space(self) -> SpaceKind {
        match self {
            SchemeKind::Sp | SchemeKind::HdivNoH => SpaceKind::Face,
            SchemeKind::Hcurl => SpaceKind::EdgeUnconstrained,
            SchemeKind::H1 => SpaceKind::NodalVector,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Sp => "sp",
            SchemeKind::HdivNoH => "hdiv_noH",
            SchemeKind::Hcurl => "hcurl",
            SchemeKind::H1 => "h1",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [SchemeKind::Sp, SchemeKind::HdivNoH, SchemeKind::Hcurl, SchemeKind::H1]
            .into_iter()
            .find(|k| k.name() == s)
    }

    /// Names and spaces of the stage blocks, in stacking order.
    pub fn stage_blocks(self) -> &'static [(&'static str, SpaceKind)] {
        match self {
            SchemeKind::Sp => &[
                ("B_mid", SpaceKind::Face),
                ("E", SpaceKind::Edge),
                ("j", SpaceKind::Edge),
                ("H", SpaceKind::Edge),
            ],
            SchemeKind::HdivNoH => &[("B_mid", SpaceKind::Face), ("E", SpaceKind::Edge), ("j", SpaceKind::Edge)],
            SchemeKind::Hcurl => &[("B_mid", SpaceKind::EdgeUnconstrained), ("u", SpaceKind::Face)],
            SchemeKind::H1 => &[("B_mid", SpaceKind::NodalVector), ("u", SpaceKind::NodalVector)],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepperConfig {
    pub dt: f64,
    pub tau: f64,
    pub newton_abs_tol: f64,
    pub newton_max_iter: usize,
    /// Multiplies `newton_abs_tol`; normally `max(1, ‖B⁰‖_M)`.
    pub residual_scale: f64,
    /// Retry a failed step once as two half steps.
    pub allow_halving: bool,
}

impl StepperConfig {
    pub fn new(dt: f64, tau: f64) -> Self {
        Self { dt, tau, newton_abs_tol: 1e-10, newton_max_iter: 20, residual_scale: 1.0, allow_halving: false }
    }

    pub fn tolerance(&self) -> f64 {
        self.newton_abs_tol * self.residual_scale
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeState {
    pub t: f64,
    pub step: u64,
    pub b: FieldVec,
    pub scheme: SchemeKind,
}

impl SchemeState {
    pub fn new(scheme: SchemeKind, b: FieldVec) -> Self {
        Self { t: 0.0, step: 0, b, scheme }
    }
}

/// Converged stage values, one field per block of [`SchemeKind::stage_blocks`].
#[derive(Clone, Debug, PartialEq)]
pub struct Stage {
    pub scheme: SchemeKind,
    pub blocks: Vec<FieldVec>,
}

impl Stage {
    pub fn get(&self, name: &str) -> Option<&FieldVec> {
        self.scheme.stage_blocks().iter().position(|(n, _)| *n == name).map(|i| &self.blocks[i])
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.blocks.iter().flat_map(|b| b.coeffs.iter().copied()).collect()
    }
}

#[derive(Clone, Debug)]
pub struct StepReport {
    pub newton_iters: usize,
    pub residual: f64,
    pub stage: Stage,
    pub wall_time: Duration,
    /// Energy drop predicted by the dissipation law at the stage values.
    pub dissipation: f64,
    pub halved: bool,
}

#[derive(Debug, Error)]
pub enum StepError {
    #[error("Newton did not converge after {iters} iterations (residual {residual:e})")]
    NewtonFailed { iters: usize, residual: f64 },
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Space(#[from] FieldError),
    #[error("invalid stepper configuration: {0}")]
    Config(String),
}

struct Layout {
    offsets: Vec<usize>,
    lens: Vec<usize>,
}

impl Layout {
    fn total(&self) -> usize {
        self.offsets.last().unwrap() + self.lens.last().unwrap()
    }

    fn block<'v>(&self, x: &'v [f64], i: usize) -> &'v [f64] {
        &x[self.offsets[i]..self.offsets[i] + self.lens[i]]
    }
}

const GMRES_TOL: f64 = 1e-13;
const GMRES_RESTART: usize = 60;
/// Iteration count above which the next solve refactorizes.
const GMRES_REFRESH: usize = 40;
const POLISH_FACTOR: f64 = 1e-3;

/// Per-scheme stepping context: layouts, constant operators and basis tables.
pub struct Stepper<'a> {
    cx: &'a DeRhamComplex,
    kind: SchemeKind,
    cfg: StepperConfig,
    layout: Layout,
    weights: Vec<f64>,
    edge: BasisTable,
    face: BasisTable,
    nodal: BasisTable,
    /// Constant part of the Jacobian (Δt-dependent).
    linear: SparseOperator,
    /// LU of the mass matrix used for the explicit initial guess.
    guess_mass: Factorization,
    /// Most recent Jacobian factorization, reused as a GMRES preconditioner.
    precond: RefCell<Option<Factorization>>,
}

fn local_table(space: SpaceKind) -> LocalSpace {
    space.local()
}

impl<'a> Stepper<'a> {
    pub fn new(cx: &'a DeRhamComplex, kind: SchemeKind, cfg: StepperConfig) -> Result<Self, StepError> {
        if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
            return Err(StepError::Config(format!("dt must be positive, got {}", cfg.dt)));
        }
        if !(cfg.tau >= 0.0 && cfg.tau.is_finite()) {
            return Err(StepError::Config(format!("tau must be nonnegative, got {}", cfg.tau)));
        }
        let blocks = kind.stage_blocks();
        let lens: Vec<usize> = blocks.iter().map(|(_, s)| cx.dim(*s)).collect();
        let mut offsets = vec![0];
        for l in &lens[..lens.len() - 1] {
            offsets.push(offsets.last().unwrap() + l);
        }
        let layout = Layout { offsets, lens };
        let h = cx.mesh().spacing();
        let rule = CellRule::gauss(3);
        let vol = cx.mesh().cell_volume();
        let weights = rule.weights.iter().map(|w| w * vol).collect();
        let edge = BasisTable::new(LocalSpace::Edge, &rule, h);
        let face = BasisTable::new(LocalSpace::Face, &rule, h);
        let nodal = BasisTable::new(LocalSpace::NodalVector, &rule, h);
        let linear = Self::linear_part(cx, kind, &layout, cfg.dt);
        let guess_space = match kind {
            SchemeKind::Sp | SchemeKind::HdivNoH => SpaceKind::Edge,
            SchemeKind::Hcurl => SpaceKind::Face,
            SchemeKind::H1 => SpaceKind::NodalVector,
        };
        let guess_mass = factorize(cx.mass(guess_space))?;
        Ok(Self { cx, kind, cfg, layout, weights, edge, face, nodal, linear, guess_mass, precond: RefCell::new(None) })
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn unknowns(&self) -> usize {
        self.layout.total()
    }

    fn linear_part(cx: &DeRhamComplex, kind: SchemeKind, layout: &Layout, dt: f64) -> SparseOperator {
        let n = layout.total();
        let o = &layout.offsets;
        let mut t = Triplets::new(n, n);
        match kind {
            SchemeKind::Sp | SchemeKind::HdivNoH => {
                let mf = cx.mass(SpaceKind::Face);
                let me = cx.mass(SpaceKind::Edge);
                let mfc = mf.matmul(cx.d_curl());
                t.push_block(o[0], o[0], mf, 2.0 / dt);
                t.push_block(o[0], o[1], &mfc, 1.0);
                t.push_block(o[1], o[1], me, 1.0);
                t.push_block(o[2], o[0], &mfc.transpose(), -1.0);
                t.push_block(o[2], o[2], me, 1.0);
                if kind == SchemeKind::Sp {
                    t.push_block(o[3], o[0], cx.mixed_mass(), -1.0);
                    t.push_block(o[3], o[3], me, 1.0);
                }
            }
            SchemeKind::Hcurl | SchemeKind::H1 => {
                let (sb, su) = (kind.stage_blocks()[0].1, kind.stage_blocks()[1].1);
                t.push_block(o[0], o[0], cx.mass(sb), 2.0 / dt);
                t.push_block(o[1], o[1], cx.mass(su), 1.0);
            }
        }
        t.to_csr()
    }

    fn table(&self, space: SpaceKind) -> &BasisTable {
        match local_table(space) {
            LocalSpace::Edge => &self.edge,
            LocalSpace::Face => &self.face,
            LocalSpace::NodalVector => &self.nodal,
            other => unreachable!("no stage table for {other:?}"),
        }
    }

    /// Lorentz-type term `τ ((j × H) × H, F)` for edge tests `F`, with `H` in `h_space`.
    /// Adds into `out[row_off..]`; optionally emits Jacobian triplets. Returns ∫ |j × H|².
    #[allow(clippy::too_many_arguments)]
    fn lorentz_term(
        &self,
        j: &[f64],
        col_j: usize,
        hf: &[f64],
        h_space: SpaceKind,
        col_h: usize,
        row_off: usize,
        out: &mut [f64],
        mut jac: Option<&mut Triplets>,
    ) -> f64 {
        let tau = self.cfg.tau;
        let de = self.cx.cell_dofs(SpaceKind::Edge);
        let dh = self.cx.cell_dofs(h_space);
        let te = &self.edge;
        let th = self.table(h_space);
        let (ne, nh) = (te.n, th.n);
        let mut jl = vec![0.0; ne];
        let mut hl = vec![0.0; nh];
        let mut tl = vec![0.0; ne];
        let mut kj = vec![0.0; ne * ne];
        let mut kh = vec![0.0; ne * nh];
        let ncells = self.cx.mesh().family_count(crate::mesh::EntityFamily::Cells);
        let mut diss = 0.0;
        for c in 0..ncells {
            de.gather(c, j, &mut jl);
            dh.gather(c, hf, &mut hl);
            tl.fill(0.0);
            if jac.is_some() {
                kj.fill(0.0);
                kh.fill(0.0);
            }
            for (q, &w) in self.weights.iter().enumerate() {
                let jq = te.value_at(q, &jl);
                let hq = th.value_at(q, &hl);
                let jxh = cross(jq, hq);
                let f = cross(jxh, hq);
                diss += w * dot3(jxh, jxh);
                for l in 0..ne {
                    tl[l] += w * dot3(f, te.val(q, l));
                }
                if jac.is_some() {
                    for m in 0..ne {
                        let a = cross(cross(te.val(q, m), hq), hq);
                        for l in 0..ne {
                            kj[l * ne + m] += w * dot3(a, te.val(q, l));
                        }
                    }
                    for m in 0..nh {
                        let psi = th.val(q, m);
                        let a = add3(cross(cross(jq, psi), hq), cross(jxh, psi));
                        for l in 0..ne {
                            kh[l * nh + m] += w * dot3(a, te.val(q, l));
                        }
                    }
                }
            }
            let rows = de.cell(c);
            for (l, r) in rows.iter().enumerate() {
                let Some(r) = *r else { continue };
                out[row_off + r] += tau * tl[l];
                if let Some(t) = jac.as_deref_mut() {
                    for (m, cm) in rows.iter().enumerate() {
                        if let Some(cm) = *cm {
                            t.push(row_off + r, col_j + cm, tau * kj[l * ne + m]);
                        }
                    }
                    for (m, cm) in dh.cell(c).iter().enumerate() {
                        if let Some(cm) = *cm {
                            t.push(row_off + r, col_h + cm, tau * kh[l * nh + m]);
                        }
                    }
                }
            }
        }
        diss
    }

    /// Velocity-formulation terms `−(u × B, curl C)` and `−τ (curl B × B, v)`.
    fn transport_term(&self, b: &[f64], u: &[f64], out: &mut [f64], mut jac: Option<&mut Triplets>) {
        let tau = self.cfg.tau;
        let (sb, su) = (self.kind.stage_blocks()[0].1, self.kind.stage_blocks()[1].1);
        let (ob, ou) = (self.layout.offsets[0], self.layout.offsets[1]);
        let db = self.cx.cell_dofs(sb);
        let du = self.cx.cell_dofs(su);
        let tb = self.table(sb);
        let tu = self.table(su);
        let (nb, nu) = (tb.n, tu.n);
        let mut bl = vec![0.0; nb];
        let mut ul = vec![0.0; nu];
        let mut rb = vec![0.0; nb];
        let mut ru = vec![0.0; nu];
        let mut kbb = vec![0.0; nb * nb];
        let mut kbu = vec![0.0; nb * nu];
        let mut kub = vec![0.0; nu * nb];
        let ncells = self.cx.mesh().family_count(crate::mesh::EntityFamily::Cells);
        for c in 0..ncells {
            db.gather(c, b, &mut bl);
            du.gather(c, u, &mut ul);
            rb.fill(0.0);
            ru.fill(0.0);
            if jac.is_some() {
                kbb.fill(0.0);
                kbu.fill(0.0);
                kub.fill(0.0);
            }
            for (q, &w) in self.weights.iter().enumerate() {
                let bq = tb.value_at(q, &bl);
                let cbq = tb.deriv_at(q, &bl);
                let uq = tu.value_at(q, &ul);
                let uxb = cross(uq, bq);
                let cxb = cross(cbq, bq);
                for l in 0..nb {
                    rb[l] -= w * dot3(uxb, tb.deriv(q, l));
                }
                for l in 0..nu {
                    ru[l] -= tau * w * dot3(cxb, tu.val(q, l));
                }
                if jac.is_some() {
                    for m in 0..nb {
                        let phi = tb.val(q, m);
                        let a = cross(uq, phi);
                        let g = add3(cross(tb.deriv(q, m), bq), cross(cbq, phi));
                        for l in 0..nb {
                            kbb[l * nb + m] -= w * dot3(a, tb.deriv(q, l));
                        }
                        for l in 0..nu {
                            kub[l * nb + m] -= tau * w * dot3(g, tu.val(q, l));
                        }
                    }
                    for m in 0..nu {
                        let a = cross(tu.val(q, m), bq);
                        for l in 0..nb {
                            kbu[l * nu + m] -= w * dot3(a, tb.deriv(q, l));
                        }
                    }
                }
            }
            let rows_b = db.cell(c);
            let rows_u = du.cell(c);
            for (l, r) in rows_b.iter().enumerate() {
                let Some(r) = *r else { continue };
                out[ob + r] += rb[l];
                if let Some(t) = jac.as_deref_mut() {
                    for (m, cm) in rows_b.iter().enumerate() {
                        if let Some(cm) = *cm {
                            t.push(ob + r, ob + cm, kbb[l * nb + m]);
                        }
                    }
                    for (m, cm) in rows_u.iter().enumerate() {
                        if let Some(cm) = *cm {
                            t.push(ob + r, ou + cm, kbu[l * nu + m]);
                        }
                    }
                }
            }
            for (l, r) in rows_u.iter().enumerate() {
                let Some(r) = *r else { continue };
                out[ou + r] += ru[l];
                if let Some(t) = jac.as_deref_mut() {
                    for (m, cm) in rows_b.iter().enumerate() {
                        if let Some(cm) = *cm {
                            t.push(ou + r, ob + cm, kub[l * nb + m]);
                        }
                    }
                }
            }
        }
    }

    /// Nonlinear contribution; returns the dissipation integral where defined.
    fn nonlinear(&self, x: &[f64], out: &mut [f64], jac: Option<&mut Triplets>) -> f64 {
        let o = &self.layout.offsets;
        match self.kind {
            SchemeKind::Sp => {
                let j = self.layout.block(x, 2);
                let h = self.layout.block(x, 3);
                self.lorentz_term(j, o[2], h, SpaceKind::Edge, o[3], o[1], out, jac)
            }
            SchemeKind::HdivNoH => {
                let j = self.layout.block(x, 2);
                let b = self.layout.block(x, 0);
                self.lorentz_term(j, o[2], b, SpaceKind::Face, o[0], o[1], out, jac)
            }
            SchemeKind::Hcurl | SchemeKind::H1 => {
                let b = self.layout.block(x, 0);
                let u = self.layout.block(x, 1);
                self.transport_term(b, u, out, jac);
                0.0
            }
        }
    }

    fn check_field(&self, bn: &FieldVec) -> Result<(), StepError> {
        Ok(self.cx.check(bn, self.kind.field_space())?)
    }

    /// Stacked stage residual at `x` for the step starting from `bn`.
    pub fn residual(&self, bn: &FieldVec, x: &[f64]) -> Result<Vec<f64>, StepError> {
        self.check_field(bn)?;
        if x.len() != self.unknowns() {
            return Err(SolveError::DimensionMismatch { expected: self.unknowns(), found: x.len() }.into());
        }
        Ok(self.residual_unchecked(bn, x).0)
    }

    fn residual_unchecked(&self, bn: &FieldVec, x: &[f64]) -> (Vec<f64>, f64) {
        let mut r = self.linear.mul_vec(x);
        let mb = self.cx.mass(self.kind.field_space()).mul_vec(&bn.coeffs);
        let s = 2.0 / self.cfg.dt;
        for (ri, mi) in r[..bn.len()].iter_mut().zip(&mb) {
            *ri -= s * mi;
        }
        let diss = self.nonlinear(x, &mut r, None);
        (r, diss)
    }

    /// Exact Jacobian of [`Stepper::residual`] at `x`.
    pub fn jacobian(&self, x: &[f64]) -> SparseOperator {
        let n = self.unknowns();
        let mut t = Triplets::with_capacity(n, n, self.linear.nnz() + 64 * n);
        t.push_block(0, 0, &self.linear, 1.0);
        let mut scratch = vec![0.0; n];
        self.nonlinear(x, &mut scratch, Some(&mut t));
        t.to_csr()
    }

    /// Explicit initial stage guess: `B_mid = Bⁿ`, remaining blocks from their defining equations.
    pub fn initial_guess(&self, bn: &FieldVec) -> Result<Vec<f64>, StepError> {
        self.check_field(bn)?;
        let mut x = vec![0.0; self.unknowns()];
        let o = &self.layout.offsets;
        x[..bn.len()].copy_from_slice(&bn.coeffs);
        let cx = self.cx;
        match self.kind {
            SchemeKind::Sp | SchemeKind::HdivNoH => {
                let me = cx.mass(SpaceKind::Edge);
                let ne = cx.dim(SpaceKind::Edge);
                let mfb = cx.mass(SpaceKind::Face).mul_vec(&bn.coeffs);
                let j = solve_refined(&self.guess_mass, me, &cx.d_curl().mul_vec_transpose(&mfb))?;
                x[o[2]..o[2] + ne].copy_from_slice(&j);
                if self.kind == SchemeKind::Sp {
                    let h = solve_refined(&self.guess_mass, me, &cx.mixed_mass().mul_vec(&bn.coeffs))?;
                    x[o[3]..o[3] + ne].copy_from_slice(&h);
                }
                let mut t = vec![0.0; x.len()];
                self.nonlinear(&x, &mut t, None);
                let e = solve_refined(&self.guess_mass, me, &t[o[1]..o[1] + ne])?;
                for (xi, ei) in x[o[1]..o[1] + ne].iter_mut().zip(&e) {
                    *xi = -ei;
                }
            }
            SchemeKind::Hcurl | SchemeKind::H1 => {
                let su = self.kind.stage_blocks()[1].1;
                let nu = cx.dim(su);
                let mut t = vec![0.0; x.len()];
                self.nonlinear(&x, &mut t, None);
                let u = solve_refined(&self.guess_mass, cx.mass(su), &t[o[1]..o[1] + nu])?;
                for (xi, ui) in x[o[1]..o[1] + nu].iter_mut().zip(&u) {
                    *xi = -ui;
                }
            }
        }
        Ok(x)
    }

    fn newton(&self, bn: &FieldVec) -> Result<(Vec<f64>, usize, f64, f64), StepError> {
        let tol = self.cfg.tolerance();
        let mut x = self.initial_guess(bn)?;
        let (mut r, mut diss) = self.residual_unchecked(bn, &x);
        let mut rn = norm2(&r);
        let mut iters = 0;
        // At least one correction is always taken, so a consistent guess still costs one iteration.
        while iters == 0 || rn > tol {
            if iters >= self.cfg.newton_max_iter || !rn.is_finite() {
                return Err(StepError::NewtonFailed { iters, residual: rn });
            }
            iters += 1;
            let dx = self.newton_direction(&x, &r)?;
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..12 {
                let xt: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a - alpha * d).collect();
                let (rt, dt) = self.residual_unchecked(bn, &xt);
                let rtn = norm2(&rt);
                if rtn <= tol || rtn <= (1.0 - 1e-4 * alpha) * rn {
                    x = xt;
                    r = rt;
                    rn = rtn;
                    diss = dt;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                return Err(StepError::NewtonFailed { iters, residual: rn });
            }
        }
        // One more full correction while the residual is above roundoff, so that the
        // converged stage does not depend on how the iteration got there.
        if rn > POLISH_FACTOR * tol && iters < self.cfg.newton_max_iter {
            let dx = self.newton_direction(&x, &r)?;
            let xt: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a - d).collect();
            let (rt, dt) = self.residual_unchecked(bn, &xt);
            let rtn = norm2(&rt);
            if rtn < rn {
                iters += 1;
                x = xt;
                rn = rtn;
                diss = dt;
            }
        }
        Ok((x, iters, rn, diss))
    }

    /// Solves `J(x) dx = r`. GMRES preconditioned by the last factorization is tried first;
    /// the Jacobian is refactorized when that stalls.
    fn newton_direction(&self, x: &[f64], r: &[f64]) -> Result<Vec<f64>, StepError> {
        let jac = self.jacobian(x);
        let mut pc = self.precond.borrow_mut();
        if let Some(lu) = pc.as_ref() {
            let (dx, out) = gmres(&jac, r, lu, GMRES_TOL, GMRES_RESTART, GMRES_RESTART);
            if out.converged {
                if out.iterations > GMRES_REFRESH {
                    *pc = None;
                }
                return Ok(dx);
            }
        }
        let lu = factorize(&jac)?;
        let dx = solve_refined(&lu, &jac, r)?;
        *pc = Some(lu);
        Ok(dx)
    }

    fn single_step(&self, state: &SchemeState) -> Result<(SchemeState, StepReport), StepError> {
        let start = Instant::now();
        let (x, iters, res, diss) = self.newton(&state.b)?;
        let blocks: Vec<FieldVec> = self
            .kind
            .stage_blocks()
            .iter()
            .enumerate()
            .map(|(i, (_, s))| FieldVec::new(*s, self.layout.block(&x, i).to_vec()))
            .collect();
        let stage = Stage { scheme: self.kind, blocks };
        let dt = self.cfg.dt;
        let next = match self.kind {
            // Strong update: the increment is an exact discrete curl.
            SchemeKind::Sp | SchemeKind::HdivNoH => {
                let ce = self.cx.d_curl().mul_vec(&stage.blocks[1].coeffs);
                state.b.coeffs.iter().zip(&ce).map(|(b, c)| b - dt * c).collect()
            }
            SchemeKind::Hcurl | SchemeKind::H1 => {
                state.b.coeffs.iter().zip(&stage.blocks[0].coeffs).map(|(b, m)| 2.0 * m - b).collect()
            }
        };
        let dissipation = match self.kind {
            SchemeKind::Sp | SchemeKind::HdivNoH => 2.0 * self.cfg.tau * dt * diss,
            SchemeKind::Hcurl | SchemeKind::H1 => {
                let u = &stage.blocks[1];
                if self.cfg.tau > 0.0 {
                    2.0 * dt / self.cfg.tau * self.cx.energy(u)
                } else {
                    0.0
                }
            }
        };
        let new_state = SchemeState {
            t: state.t + dt,
            step: state.step + 1,
            b: FieldVec::new(state.b.space, next),
            scheme: state.scheme,
        };
        let report =
            StepReport { newton_iters: iters, residual: res, stage, wall_time: start.elapsed(), dissipation, halved: false };
        Ok((new_state, report))
    }

    /// Advances `state` by one step of size `dt` (or two half steps after a failure, if allowed).
    pub fn step(&self, state: &SchemeState) -> Result<(SchemeState, StepReport), StepError> {
        if state.scheme != self.kind {
            return Err(StepError::Config(format!(
                "state belongs to scheme {}, stepper is {}",
                state.scheme.name(),
                self.kind.name()
            )));
        }
        self.check_field(&state.b)?;
        match self.single_step(state) {
            Ok(ok) => Ok(ok),
            Err(StepError::NewtonFailed { .. }) if self.cfg.allow_halving => {
                let half = StepperConfig { dt: 0.5 * self.cfg.dt, allow_halving: false, ..self.cfg };
                let sub = Stepper::new(self.cx, self.kind, half)?;
                let (mid, r1) = sub.single_step(state)?;
                let (mut end, mut r2) = sub.single_step(&mid)?;
                end.step = state.step + 1;
                r2.newton_iters += r1.newton_iters;
                r2.dissipation += r1.dissipation;
                r2.wall_time += r1.wall_time;
                r2.halved = true;
                Ok((end, r2))
            }
            Err(e) => Err(e),
        }
    }
}

/// Residual of the helicity-preserving stage system (convenience wrapper).
pub fn residual_sp(cx: &DeRhamComplex, bn: &FieldVec, stage: &Stage, cfg: StepperConfig) -> Result<Vec<f64>, StepError> {
    Stepper::new(cx, SchemeKind::Sp, cfg)?.residual(bn, &stage.flatten())
}

/// Jacobian of the helicity-preserving stage system (convenience wrapper).
pub fn jacobian_sp(cx: &DeRhamComplex, stage: &Stage, cfg: StepperConfig) -> Result<SparseOperator, StepError> {
    Ok(Stepper::new(cx, SchemeKind::Sp, cfg)?.jacobian(&stage.flatten()))
}

/// Face-space divergence size used in diagnostics: `‖D_div B‖₂` for face fields,
/// the norm of per-cell `∫ div B` for nodal vectors, NaN for edge fields.
pub fn divergence_norm(cx: &DeRhamComplex, b: &FieldVec) -> f64 {
    match b.space {
        SpaceKind::Face => norm2(&cx.d_div().mul_vec(&b.coeffs)),
        SpaceKind::NodalVector => norm2(&cell_divergence_nodal(cx, b)),
        _ => f64::NAN,
    }
}

/// Per-cell `∫ div B` of a continuous trilinear vector field.
pub fn cell_divergence_nodal(cx: &DeRhamComplex, b: &FieldVec) -> Vec<f64> {
    let h = cx.mesh().spacing();
    let rule = CellRule::gauss(2);
    let vol = cx.mesh().cell_volume();
    let dofs = cx.cell_dofs(SpaceKind::NodalVector);
    let ncells = cx.mesh().family_count(crate::mesh::EntityFamily::Cells);
    let mut local = vec![0.0; 24];
    let mut grads = Vec::with_capacity(rule.len() * 8);
    for p in &rule.points {
        for l in 0..8 {
            grads.push(crate::element::eval_basis(LocalSpace::Node, l, *p, h).1);
        }
    }
    (0..ncells)
        .map(|c| {
            dofs.gather(c, &b.coeffs, &mut local);
            let mut s = 0.0;
            for (q, w) in rule.weights.iter().enumerate() {
                for l in 0..24 {
                    s += w * vol * local[l] * grads[q * 8 + l / 3][l % 3];
                }
            }
            s
        })
        .collect()
}
