//! Lowest-order discrete de Rham complex on a [`BoxMesh`].
//!
//! DOFs are integrals: vertex values, edge circulations, face fluxes and cell
//! integrals. With that choice `grad`, `curl` and `div` are signed incidence
//! matrices with entries in {-1, 0, 1}. Essential boundary conditions are
//! applied by eliminating the masked DOFs; every reduced operator acts on
//! free DOFs only.

use crate::element::{self, cell_entities, eval_basis, CellRule, LocalSpace, Vec3};
use crate::mesh::{BoxMesh, EntityFamily, EntityKind};
use crate::sparse::{SparseOperator, Triplets};
use thiserror::Error;

/// DOF space a coefficient vector belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    /// Scalar nodal space with homogeneous Dirichlet conditions.
    Nodal,
    /// Edge space with vanishing tangential trace.
    Edge,
    /// Face space with vanishing normal trace.
    Face,
    /// Piecewise constants (mean-zero handled by a multiplier where needed).
    Cell,
    /// Edge space without boundary conditions.
    EdgeUnconstrained,
    /// Continuous trilinear vector fields with vanishing normal component.
    NodalVector,
}

impl SpaceKind {
    pub fn local(self) -> LocalSpace {
        match self {
            SpaceKind::Nodal => LocalSpace::Node,
            SpaceKind::Edge | SpaceKind::EdgeUnconstrained => LocalSpace::Edge,
            SpaceKind::Face => LocalSpace::Face,
            SpaceKind::Cell => LocalSpace::Cell,
            SpaceKind::NodalVector => LocalSpace::NodalVector,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SpaceKind::Nodal => "nodal",
            SpaceKind::Edge => "edge",
            SpaceKind::Face => "face",
            SpaceKind::Cell => "cell",
            SpaceKind::EdgeUnconstrained => "edge_unconstrained",
            SpaceKind::NodalVector => "nodal_vector",
        }
    }

    pub const ALL: [SpaceKind; 6] = [
        SpaceKind::Nodal,
        SpaceKind::Edge,
        SpaceKind::Face,
        SpaceKind::Cell,
        SpaceKind::EdgeUnconstrained,
        SpaceKind::NodalVector,
    ];

    fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("expected a {expected} field, got {found}")]
    SpaceMismatch { expected: &'static str, found: &'static str },
    #[error("{space} field has {found} coefficients, space dimension is {expected}")]
    LengthMismatch { space: &'static str, expected: usize, found: usize },
}

/// Coefficient vector over the free DOFs of one space.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldVec {
    pub space: SpaceKind,
    pub coeffs: Vec<f64>,
}

impl FieldVec {
    pub fn new(space: SpaceKind, coeffs: Vec<f64>) -> Self {
        Self { space, coeffs }
    }

    pub fn zeros(space: SpaceKind, n: usize) -> Self {
        Self { space, coeffs: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn expect_space(&self, space: SpaceKind) -> Result<(), FieldError> {
        if self.space == space {
            Ok(())
        } else {
            Err(FieldError::SpaceMismatch { expected: space.name(), found: self.space.name() })
        }
    }
}

/// Map between full entity numbering and free DOF numbering.
#[derive(Clone, Debug)]
pub struct FreeMap {
    pub to_free: Vec<Option<usize>>,
    pub free: Vec<usize>,
}

impl FreeMap {
    fn from_mask(masked: &[bool]) -> Self {
        let mut to_free = vec![None; masked.len()];
        let mut free = Vec::new();
        for (g, &m) in masked.iter().enumerate() {
            if !m {
                to_free[g] = Some(free.len());
                free.push(g);
            }
        }
        Self { to_free, free }
    }

    pub fn len(&self) -> usize {
        self.free.len()
    }

    pub fn is_empty(&self) -> bool {
        self.free.is_empty()
    }

    pub fn full_len(&self) -> usize {
        self.to_free.len()
    }

    /// Scatters free coefficients into a full-length vector (zeros elsewhere).
    pub fn expand(&self, free_coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.full_len()];
        for (f, &g) in self.free.iter().enumerate() {
            out[g] = free_coeffs[f];
        }
        out
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&g| full[g]).collect()
    }
}

/// Per-cell local-to-free DOF table for one space.
#[derive(Clone, Debug)]
pub struct CellDofs {
    pub n_local: usize,
    idx: Vec<Option<usize>>,
}

impl CellDofs {
    #[inline]
    pub fn cell(&self, c: usize) -> &[Option<usize>] {
        &self.idx[c * self.n_local..(c + 1) * self.n_local]
    }

    /// Local coefficients of a free vector on cell `c`.
    #[inline]
    pub fn gather(&self, c: usize, coeffs: &[f64], out: &mut [f64]) {
        for (o, d) in out.iter_mut().zip(self.cell(c)) {
            *o = d.map_or(0.0, |g| coeffs[g]);
        }
    }
}

/// The discrete complex with operators, masses and boundary data.
#[derive(Clone, Debug)]
pub struct DeRhamComplex {
    mesh: BoxMesh,
    free: Vec<FreeMap>,
    cell_dofs: Vec<CellDofs>,
    grad_full: SparseOperator,
    curl_full: SparseOperator,
    div_full: SparseOperator,
    grad: SparseOperator,
    curl: SparseOperator,
    div: SparseOperator,
    mass: Vec<SparseOperator>,
    mixed: SparseOperator,
    harmonic_dim: usize,
}

fn nodal_vector_mask(mesh: &BoxMesh) -> Vec<bool> {
    let [nx, ny, nz] = mesh.resolution();
    let nv = mesh.entity_counts().vertices;
    let mut mask = vec![false; 3 * nv];
    for g in 0..nv {
        let [i, j, k] = mesh.entity(EntityFamily::Vertices, g).index;
        mask[g] = i == 0 || i == nx;
        mask[nv + g] = j == 0 || j == ny;
        mask[2 * nv + g] = !mesh.periodic_z() && (k == 0 || k == nz);
    }
    mask
}

fn full_mask(mesh: &BoxMesh, space: SpaceKind) -> Vec<bool> {
    match space {
        SpaceKind::Nodal => mesh.boundary_mask(EntityFamily::Vertices).masked,
        SpaceKind::Edge => mesh.boundary_mask(EntityFamily::Edges).masked,
        SpaceKind::Face => mesh.boundary_mask(EntityFamily::Faces).masked,
        SpaceKind::Cell => mesh.boundary_mask(EntityFamily::Cells).masked,
        SpaceKind::EdgeUnconstrained => vec![false; mesh.family_count(EntityFamily::Edges)],
        SpaceKind::NodalVector => nodal_vector_mask(mesh),
    }
}

/// Full-space gradient incidence (edges x vertices).
pub fn incidence_grad(mesh: &BoxMesh) -> SparseOperator {
    let ne = mesh.family_count(EntityFamily::Edges);
    let nv = mesh.family_count(EntityFamily::Vertices);
    let mut t = Triplets::with_capacity(ne, nv, 2 * ne);
    for e in 0..ne {
        let id = mesh.entity(EntityFamily::Edges, e);
        let [i, j, k] = id.index;
        let (di, dj, dk) = match id.kind {
            EntityKind::EdgeX => (1, 0, 0),
            EntityKind::EdgeY => (0, 1, 0),
            _ => (0, 0, 1),
        };
        t.push(e, mesh.global_index(EntityKind::Vertex, i, j, k), -1.0);
        t.push(e, mesh.global_index(EntityKind::Vertex, i + di, j + dj, k + dk), 1.0);
    }
    t.to_csr()
}

/// Full-space curl incidence (faces x edges), right-hand orientation about `+normal`.
pub fn incidence_curl(mesh: &BoxMesh) -> SparseOperator {
    let nf = mesh.family_count(EntityFamily::Faces);
    let ne = mesh.family_count(EntityFamily::Edges);
    let mut t = Triplets::with_capacity(nf, ne, 4 * nf);
    for f in 0..nf {
        let id = mesh.entity(EntityFamily::Faces, f);
        let [i, j, k] = id.index;
        let g = |kind, a, b, c| mesh.global_index(kind, a, b, c);
        use EntityKind::*;
        let entries = match id.kind {
            // (curl E)_x = dEz/dy - dEy/dz
            FaceX => [
                (g(EdgeY, i, j, k), 1.0),
                (g(EdgeZ, i, j + 1, k), 1.0),
                (g(EdgeY, i, j, k + 1), -1.0),
                (g(EdgeZ, i, j, k), -1.0),
            ],
            // (curl E)_y = dEx/dz - dEz/dx
            FaceY => [
                (g(EdgeX, i, j, k + 1), 1.0),
                (g(EdgeX, i, j, k), -1.0),
                (g(EdgeZ, i + 1, j, k), -1.0),
                (g(EdgeZ, i, j, k), 1.0),
            ],
            // (curl E)_z = dEy/dx - dEx/dy
            _ => [
                (g(EdgeY, i + 1, j, k), 1.0),
                (g(EdgeY, i, j, k), -1.0),
                (g(EdgeX, i, j + 1, k), -1.0),
                (g(EdgeX, i, j, k), 1.0),
            ],
        };
        for (e, v) in entries {
            t.push(f, e, v);
        }
    }
    t.to_csr()
}

/// Full-space divergence incidence (cells x faces).
pub fn incidence_div(mesh: &BoxMesh) -> SparseOperator {
    let nc = mesh.family_count(EntityFamily::Cells);
    let nf = mesh.family_count(EntityFamily::Faces);
    let mut t = Triplets::with_capacity(nc, nf, 6 * nc);
    for (c, [i, j, k]) in element::cells(mesh).enumerate() {
        use EntityKind::*;
        t.push(c, mesh.global_index(FaceX, i, j, k), -1.0);
        t.push(c, mesh.global_index(FaceX, i + 1, j, k), 1.0);
        t.push(c, mesh.global_index(FaceY, i, j, k), -1.0);
        t.push(c, mesh.global_index(FaceY, i, j + 1, k), 1.0);
        t.push(c, mesh.global_index(FaceZ, i, j, k), -1.0);
        t.push(c, mesh.global_index(FaceZ, i, j, k + 1), 1.0);
    }
    t.to_csr()
}

fn hat_mass(h: f64, s: usize, t: usize) -> f64 {
    if s == t {
        h / 3.0
    } else {
        h / 6.0
    }
}

/// Closed-form local L2 pairing of two lowest-order bases on a uniform cell.
pub fn local_pairing_closed_form(a: LocalSpace, b: LocalSpace, h: Vec3) -> Vec<f64> {
    let [hx, hy, hz] = h;
    let (na, nb) = (a.local_dofs(), b.local_dofs());
    let mut out = vec![0.0; na * nb];
    use LocalSpace::*;
    for la in 0..na {
        for lb in 0..nb {
            out[la * nb + lb] = match (a, b) {
                (Node, Node) => {
                    let (s, t) = (la, lb);
                    hat_mass(hx, s & 1, t & 1)
                        * hat_mass(hy, (s >> 1) & 1, (t >> 1) & 1)
                        * hat_mass(hz, s >> 2, t >> 2)
                }
                (NodalVector, NodalVector) => {
                    if la % 3 != lb % 3 {
                        0.0
                    } else {
                        let (s, t) = (la / 3, lb / 3);
                        hat_mass(hx, s & 1, t & 1)
                            * hat_mass(hy, (s >> 1) & 1, (t >> 1) & 1)
                            * hat_mass(hz, s >> 2, t >> 2)
                    }
                }
                (Edge, Edge) => {
                    if la / 4 != lb / 4 {
                        0.0
                    } else {
                        let (s1, t1) = ((la % 4) % 2, (la % 4) / 2);
                        let (s2, t2) = ((lb % 4) % 2, (lb % 4) / 2);
                        // transverse spacings and the axis spacing
                        let (ha, hb, hl) = match la / 4 {
                            0 => (hy, hz, hx),
                            1 => (hx, hz, hy),
                            _ => (hx, hy, hz),
                        };
                        hat_mass(ha, s1, s2) * hat_mass(hb, t1, t2) / hl
                    }
                }
                (Face, Face) => {
                    if la / 2 != lb / 2 {
                        0.0
                    } else {
                        let (hn, area) = match la / 2 {
                            0 => (hx, hy * hz),
                            1 => (hy, hx * hz),
                            _ => (hz, hx * hy),
                        };
                        hat_mass(hn, la % 2, lb % 2) / area
                    }
                }
                // Co-axial edge/face pairs integrate to (1/8) independently of h.
                (Edge, Face) => {
                    if la / 4 == lb / 2 {
                        0.125
                    } else {
                        0.0
                    }
                }
                (Cell, Cell) => 1.0 / (hx * hy * hz),
                _ => unimplemented!("no closed form for {a:?} x {b:?}"),
            };
        }
    }
    out
}

/// Local pairing by tensor Gauss quadrature with `points` per axis.
pub fn local_pairing_quadrature(a: LocalSpace, b: LocalSpace, h: Vec3, points: usize) -> Vec<f64> {
    let rule = CellRule::gauss(points);
    let vol = h[0] * h[1] * h[2];
    let (na, nb) = (a.local_dofs(), b.local_dofs());
    let mut out = vec![0.0; na * nb];
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        for la in 0..na {
            let (va, _) = eval_basis(a, la, *p, h);
            for lb in 0..nb {
                let (vb, _) = eval_basis(b, lb, *p, h);
                out[la * nb + lb] += w * vol * element::dot3(va, vb);
            }
        }
    }
    out
}

fn assemble_pairing_full(mesh: &BoxMesh, a: LocalSpace, b: LocalSpace, local: &[f64]) -> SparseOperator {
    let full_len = |s: LocalSpace| match s {
        LocalSpace::Node => mesh.family_count(EntityFamily::Vertices),
        LocalSpace::Edge => mesh.family_count(EntityFamily::Edges),
        LocalSpace::Face => mesh.family_count(EntityFamily::Faces),
        LocalSpace::Cell => mesh.family_count(EntityFamily::Cells),
        LocalSpace::NodalVector => 3 * mesh.family_count(EntityFamily::Vertices),
    };
    let (na, nb) = (a.local_dofs(), b.local_dofs());
    let ncells = mesh.family_count(EntityFamily::Cells);
    let mut t = Triplets::with_capacity(full_len(a), full_len(b), ncells * na * nb);
    for cell in element::cells(mesh) {
        let ga = cell_entities(mesh, a, cell);
        let gb = cell_entities(mesh, b, cell);
        for la in 0..na {
            for lb in 0..nb {
                let v = local[la * nb + lb];
                if v != 0.0 {
                    t.push(ga[la], gb[lb], v);
                }
            }
        }
    }
    t.to_csr()
}

/// Mass matrix of `space` restricted to its free DOFs (closed form).
pub fn assemble_mass(mesh: &BoxMesh, space: SpaceKind) -> SparseOperator {
    let local = local_pairing_closed_form(space.local(), space.local(), mesh.spacing());
    let full = assemble_pairing_full(mesh, space.local(), space.local(), &local);
    let map = FreeMap::from_mask(&full_mask(mesh, space));
    full.restrict(&map.free, &map.free)
}

/// Same as [`assemble_mass`] but integrated with tensor Gauss quadrature.
pub fn assemble_mass_quadrature(mesh: &BoxMesh, space: SpaceKind, points: usize) -> SparseOperator {
    let local = local_pairing_quadrature(space.local(), space.local(), mesh.spacing(), points);
    let full = assemble_pairing_full(mesh, space.local(), space.local(), &local);
    let map = FreeMap::from_mask(&full_mask(mesh, space));
    full.restrict(&map.free, &map.free)
}

/// Edge-test / face-trial L2 pairing on free DOFs (closed form).
pub fn assemble_mixed_mass(mesh: &BoxMesh) -> SparseOperator {
    let local = local_pairing_closed_form(LocalSpace::Edge, LocalSpace::Face, mesh.spacing());
    mixed_from_local(mesh, &local)
}

pub fn assemble_mixed_mass_quadrature(mesh: &BoxMesh, points: usize) -> SparseOperator {
    let local = local_pairing_quadrature(LocalSpace::Edge, LocalSpace::Face, mesh.spacing(), points);
    mixed_from_local(mesh, &local)
}

fn mixed_from_local(mesh: &BoxMesh, local: &[f64]) -> SparseOperator {
    let full = assemble_pairing_full(mesh, LocalSpace::Edge, LocalSpace::Face, local);
    let e = FreeMap::from_mask(&full_mask(mesh, SpaceKind::Edge));
    let f = FreeMap::from_mask(&full_mask(mesh, SpaceKind::Face));
    full.restrict(&e.free, &f.free)
}

/// Rank-based exactness audit of a built complex.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexReport {
    pub max_curl_grad: f64,
    pub max_div_curl: f64,
    /// Free DOF counts: nodes, edges, faces, cells.
    pub dims: [usize; 4],
    /// Dense ranks of grad, curl, div (only on small meshes).
    pub ranks: Option<[usize; 3]>,
    /// dim ker(curl) - rank(grad).
    pub edge_defect: Option<usize>,
    /// dim ker(div) - rank(curl).
    pub face_defect: Option<usize>,
    pub harmonic_dim: usize,
    pub expected_harmonic_dim: usize,
    pub failures: Vec<String>,
}

impl ComplexReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl std::fmt::Display for ComplexReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "free dims (node, edge, face, cell): {:?}", self.dims)?;
        writeln!(f, "max |curl*grad| = {:e}", self.max_curl_grad)?;
        writeln!(f, "max |div*curl|  = {:e}", self.max_div_curl)?;
        match self.ranks {
            Some(r) => writeln!(f, "ranks (grad, curl, div): {r:?}")?,
            None => writeln!(f, "ranks: skipped (mesh too large for dense rank)")?,
        }
        if let (Some(e), Some(fd)) = (self.edge_defect, self.face_defect) {
            writeln!(f, "edge-level defect: {e}, face-level defect: {fd}")?;
        }
        writeln!(f, "harmonic_dim: {} (expected {})", self.harmonic_dim, self.expected_harmonic_dim)?;
        if self.passed() {
            write!(f, "status: PASS")
        } else {
            write!(f, "status: FAIL ({})", self.failures.join("; "))
        }
    }
}

/// Largest mesh (in total free DOFs) for which dense ranks are computed.
pub const DENSE_RANK_LIMIT: usize = 500;

fn dense_rank(op: &SparseOperator) -> usize {
    if op.nrows() == 0 || op.ncols() == 0 {
        return 0;
    }
    let d = op.to_dense();
    let svd = d.svd(false, false);
    let smax = svd.singular_values.max();
    svd.singular_values.iter().filter(|&&s| s > 1e-9 * smax.max(1.0)).count()
}

impl DeRhamComplex {
    pub fn new(mesh: &BoxMesh) -> Self {
        let free: Vec<FreeMap> =
            SpaceKind::ALL.iter().map(|&s| FreeMap::from_mask(&full_mask(mesh, s))).collect();
        let cell_dofs = SpaceKind::ALL
            .iter()
            .map(|&s| {
                let n_local = s.local().local_dofs();
                let map = &free[s.slot()];
                let mut idx = Vec::new();
                for cell in element::cells(mesh) {
                    idx.extend(cell_entities(mesh, s.local(), cell).into_iter().map(|g| map.to_free[g]));
                }
                CellDofs { n_local, idx }
            })
            .collect();
        let grad_full = incidence_grad(mesh);
        let curl_full = incidence_curl(mesh);
        let div_full = incidence_div(mesh);
        let (n, e, f, c) = (
            &free[SpaceKind::Nodal.slot()],
            &free[SpaceKind::Edge.slot()],
            &free[SpaceKind::Face.slot()],
            &free[SpaceKind::Cell.slot()],
        );
        let grad = grad_full.restrict(&e.free, &n.free);
        let curl = curl_full.restrict(&f.free, &e.free);
        let div = div_full.restrict(&c.free, &f.free);
        let mass = SpaceKind::ALL.iter().map(|&s| assemble_mass(mesh, s)).collect();
        let mixed = assemble_mixed_mass(mesh);
        // Euler count of the reduced complex; assumes exactness at the edge level.
        let alt = n.len() as i64 - e.len() as i64 + f.len() as i64 - c.len() as i64 + 1;
        let harmonic_dim = alt.max(0) as usize;
        Self {
            mesh: mesh.clone(),
            free,
            cell_dofs,
            grad_full,
            curl_full,
            div_full,
            grad,
            curl,
            div,
            mass,
            mixed,
            harmonic_dim,
        }
    }

    pub fn mesh(&self) -> &BoxMesh {
        &self.mesh
    }

    pub fn dim(&self, space: SpaceKind) -> usize {
        self.free[space.slot()].len()
    }

    pub fn free_map(&self, space: SpaceKind) -> &FreeMap {
        &self.free[space.slot()]
    }

    pub fn cell_dofs(&self, space: SpaceKind) -> &CellDofs {
        &self.cell_dofs[space.slot()]
    }

    /// Free nodes -> free edges.
    pub fn d_grad(&self) -> &SparseOperator {
        &self.grad
    }

    /// Free edges -> free faces.
    pub fn d_curl(&self) -> &SparseOperator {
        &self.curl
    }

    /// Free faces -> cells.
    pub fn d_div(&self) -> &SparseOperator {
        &self.div
    }

    pub fn d_grad_full(&self) -> &SparseOperator {
        &self.grad_full
    }

    pub fn d_curl_full(&self) -> &SparseOperator {
        &self.curl_full
    }

    pub fn d_div_full(&self) -> &SparseOperator {
        &self.div_full
    }

    pub fn mass(&self, space: SpaceKind) -> &SparseOperator {
        &self.mass[space.slot()]
    }

    /// Free edges x free faces.
    pub fn mixed_mass(&self) -> &SparseOperator {
        &self.mixed
    }

    pub fn harmonic_dim(&self) -> usize {
        self.harmonic_dim
    }

    pub fn zeros(&self, space: SpaceKind) -> FieldVec {
        FieldVec::zeros(space, self.dim(space))
    }

    pub fn check(&self, v: &FieldVec, space: SpaceKind) -> Result<(), FieldError> {
        v.expect_space(space)?;
        if v.len() != self.dim(space) {
            return Err(FieldError::LengthMismatch {
                space: space.name(),
                expected: self.dim(space),
                found: v.len(),
            });
        }
        Ok(())
    }

    /// M-weighted squared norm `vᵀ M v`.
    pub fn energy(&self, v: &FieldVec) -> f64 {
        self.mass(v.space).quadratic_form(&v.coeffs, &v.coeffs)
    }

    pub fn verify(&self) -> ComplexReport {
        verify_complex(self)
    }
}

pub fn build_complex(mesh: &BoxMesh) -> DeRhamComplex {
    DeRhamComplex::new(mesh)
}

pub fn verify_complex(cx: &DeRhamComplex) -> ComplexReport {
    let mut failures = Vec::new();
    let max_curl_grad = cx.curl_full.matmul(&cx.grad_full).max_abs();
    let max_div_curl = cx.div_full.matmul(&cx.curl_full).max_abs();
    if max_curl_grad != 0.0 {
        failures.push(format!("curl*grad has entry {max_curl_grad}"));
    }
    if max_div_curl != 0.0 {
        failures.push(format!("div*curl has entry {max_div_curl}"));
    }
    let dims = [
        cx.dim(SpaceKind::Nodal),
        cx.dim(SpaceKind::Edge),
        cx.dim(SpaceKind::Face),
        cx.dim(SpaceKind::Cell),
    ];
    let expected = usize::from(cx.mesh.periodic_z());
    if cx.harmonic_dim != expected {
        failures.push(format!("harmonic_dim {} != {}", cx.harmonic_dim, expected));
    }
    let (mut ranks, mut edge_defect, mut face_defect) = (None, None, None);
    if dims.iter().sum::<usize>() <= DENSE_RANK_LIMIT {
        let r = [dense_rank(&cx.grad), dense_rank(&cx.curl), dense_rank(&cx.div)];
        let ed = dims[1] - r[1] - r[0];
        let fd = dims[2] - r[2] - r[1];
        if r[0] != dims[0] {
            failures.push(format!("grad not injective: rank {} < {}", r[0], dims[0]));
        }
        if r[2] + 1 != dims[3] {
            failures.push(format!("div rank {} != cells - 1 = {}", r[2], dims[3] - 1));
        }
        if ed != 0 {
            failures.push(format!("edge-level defect {ed}"));
        }
        if fd != expected {
            failures.push(format!("face-level defect {fd} != {expected}"));
        }
        ranks = Some(r);
        edge_defect = Some(ed);
        face_defect = Some(fd);
    }
    ComplexReport {
        max_curl_grad,
        max_div_curl,
        dims,
        ranks,
        edge_defect,
        face_defect,
        harmonic_dim: cx.harmonic_dim,
        expected_harmonic_dim: expected,
        failures,
    }
}

/// Edge circulations of `f` over every edge (3-point Gauss per edge).
pub fn interpolate_edges_full(mesh: &BoxMesh, f: &dyn Fn(Vec3) -> Vec3) -> Vec<f64> {
    let (p, w) = element::gauss_legendre(3);
    let h = mesh.spacing();
    (0..mesh.family_count(EntityFamily::Edges))
        .map(|e| {
            let id = mesh.entity(EntityFamily::Edges, e);
            let axis = id.kind.axis().unwrap();
            let [i, j, k] = id.index;
            let x0 = mesh.point(i, j, k);
            p.iter()
                .zip(&w)
                .map(|(&t, &wt)| {
                    let mut x = x0;
                    x[axis] += t * h[axis];
                    wt * h[axis] * f(x)[axis]
                })
                .sum()
        })
        .collect()
}

/// Face fluxes of `f` through every face (3x3 Gauss per face).
pub fn interpolate_faces_full(mesh: &BoxMesh, f: &dyn Fn(Vec3) -> Vec3) -> Vec<f64> {
    let (p, w) = element::gauss_legendre(3);
    let h = mesh.spacing();
    (0..mesh.family_count(EntityFamily::Faces))
        .map(|g| {
            let id = mesh.entity(EntityFamily::Faces, g);
            let n = id.kind.axis().unwrap();
            let (a, b) = ((n + 1) % 3, (n + 2) % 3);
            let [i, j, k] = id.index;
            let x0 = mesh.point(i, j, k);
            let mut s = 0.0;
            for (&ta, &wa) in p.iter().zip(&w) {
                for (&tb, &wb) in p.iter().zip(&w) {
                    let mut x = x0;
                    x[a] += ta * h[a];
                    x[b] += tb * h[b];
                    s += wa * wb * h[a] * h[b] * f(x)[n];
                }
            }
            s
        })
        .collect()
}

/// Point values of each component at every vertex, component-major.
pub fn interpolate_nodal_vector_full(mesh: &BoxMesh, f: &dyn Fn(Vec3) -> Vec3) -> Vec<f64> {
    let nv = mesh.family_count(EntityFamily::Vertices);
    let mut out = vec![0.0; 3 * nv];
    for g in 0..nv {
        let [i, j, k] = mesh.entity(EntityFamily::Vertices, g).index;
        let v = f(mesh.point(i, j, k));
        for c in 0..3 {
            out[c * nv + g] = v[c];
        }
    }
    out
}

/// Canonical DOF interpolation into the free DOFs of `space`; masked DOFs are dropped (zero).
pub fn interpolate(cx: &DeRhamComplex, f: &dyn Fn(Vec3) -> Vec3, space: SpaceKind) -> FieldVec {
    let full = match space {
        SpaceKind::Edge | SpaceKind::EdgeUnconstrained => interpolate_edges_full(cx.mesh(), f),
        SpaceKind::Face => interpolate_faces_full(cx.mesh(), f),
        SpaceKind::NodalVector => interpolate_nodal_vector_full(cx.mesh(), f),
        SpaceKind::Nodal | SpaceKind::Cell => {
            panic!("interpolation of vector fields into the {} space is undefined", space.name())
        }
    };
    FieldVec::new(space, cx.free_map(space).restrict(&full))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube2(periodic: bool) -> BoxMesh {
        BoxMesh::new([(0.0, 2.0); 3], [2, 2, 2], periodic).unwrap()
    }

    fn reference_mesh(periodic: bool) -> BoxMesh {
        BoxMesh::new([(-4.0, 4.0), (-4.0, 4.0), (-10.0, 10.0)], [4, 4, 10], periodic).unwrap()
    }

    #[test]
    fn operators_are_signed_incidence() {
        let cx = DeRhamComplex::new(&reference_mesh(true));
        for op in [cx.d_grad_full(), cx.d_curl_full(), cx.d_div_full()] {
            assert!(op.values().iter().all(|v| *v == 1.0 || *v == -1.0));
        }
        assert_eq!(cx.d_curl_full().matmul(cx.d_grad_full()).max_abs(), 0.0);
        assert_eq!(cx.d_div_full().matmul(cx.d_curl_full()).max_abs(), 0.0);
    }

    #[test]
    fn cube2_is_exact() {
        let cx = DeRhamComplex::new(&cube2(false));
        let r = cx.verify();
        assert!(r.passed(), "{r}");
        assert_eq!(r.dims, [1, 6, 12, 8]);
        // nullity of curl = number of interior vertices
        assert_eq!(r.dims[1] - r.ranks.unwrap()[1], 1);
        assert_eq!(r.face_defect, Some(0));
    }

    #[test]
    fn periodic_cube2_has_one_harmonic_field() {
        let cx = DeRhamComplex::new(&cube2(true));
        let r = cx.verify();
        assert!(r.passed(), "{r}");
        assert_eq!(r.face_defect, Some(1));
        assert_eq!(r.edge_defect, Some(0));
        assert_eq!(cx.harmonic_dim(), 1);
    }

    #[test]
    fn harmonic_dim_on_reference_meshes() {
        assert_eq!(DeRhamComplex::new(&reference_mesh(false)).harmonic_dim(), 0);
        assert_eq!(DeRhamComplex::new(&reference_mesh(true)).harmonic_dim(), 1);
    }

    #[test]
    fn closed_form_mass_entries() {
        let m = reference_mesh(false);
        let me = assemble_mass(&m, SpaceKind::Edge);
        let mf = assemble_mass(&m, SpaceKind::Face);
        let mc = assemble_mass(&m, SpaceKind::Cell);
        // interior entities on an h = 2 mesh
        let cx = DeRhamComplex::new(&m);
        let e = cx.free_map(SpaceKind::Edge).to_free[m.global_index(EntityKind::EdgeX, 1, 2, 5)].unwrap();
        let f = cx.free_map(SpaceKind::Face).to_free[m.global_index(EntityKind::FaceY, 1, 2, 5)].unwrap();
        assert!((me.get(e, e) - 8.0 / 9.0).abs() < 1e-15);
        assert!((mf.get(f, f) - 1.0 / 3.0).abs() < 1e-15);
        assert!((mc.get(3, 3) - 0.125).abs() < 1e-15);
        for op in [&me, &mf, &mc] {
            assert_eq!(op.asymmetry(), 0.0);
        }
    }

    #[test]
    fn masses_are_positive_definite() {
        let cx = DeRhamComplex::new(&cube2(true));
        for s in SpaceKind::ALL {
            let d = cx.mass(s).to_dense();
            if d.nrows() > 0 {
                assert!(d.cholesky().is_some(), "{s:?} mass not SPD");
            }
        }
    }

    #[test]
    fn mixed_mass_of_constant_field_is_volume() {
        let cx = DeRhamComplex::new(&reference_mesh(true));
        let c = |_: Vec3| [0.0, 0.0, 1.0];
        let m = cx.mesh();
        let local = local_pairing_closed_form(LocalSpace::Edge, LocalSpace::Face, m.spacing());
        let full = assemble_pairing_full(m, LocalSpace::Edge, LocalSpace::Face, &local);
        let e = interpolate_edges_full(m, &c);
        let f = interpolate_faces_full(m, &c);
        let v = full.quadratic_form(&e, &f);
        assert!((v - 1280.0).abs() < 1e-10);
        // x-edge against y-face vanishes
        let ei = cx.free_map(SpaceKind::Edge).to_free[m.global_index(EntityKind::EdgeX, 1, 1, 1)].unwrap();
        let fi = cx.free_map(SpaceKind::Face).to_free[m.global_index(EntityKind::FaceY, 1, 1, 1)].unwrap();
        assert_eq!(cx.mixed_mass().get(ei, fi), 0.0);
    }

    #[test]
    fn constant_flux_interpolation() {
        let cx = DeRhamComplex::new(&reference_mesh(true));
        let f = interpolate(&cx, &|_| [0.0, 0.0, 1.0], SpaceKind::Face);
        let m = cx.mesh();
        for (free, &g) in cx.free_map(SpaceKind::Face).free.iter().enumerate() {
            let want = if m.entity(EntityFamily::Faces, g).kind == EntityKind::FaceZ { 4.0 } else { 0.0 };
            assert!((f.coeffs[free] - want).abs() < 1e-14);
        }
        let cx = DeRhamComplex::new(&reference_mesh(false));
        let f = interpolate(&cx, &|_| [1.0, 0.0, 0.0], SpaceKind::Face);
        for (free, &g) in cx.free_map(SpaceKind::Face).free.iter().enumerate() {
            let id = m.entity(EntityFamily::Faces, g);
            if id.kind == EntityKind::FaceX {
                assert!((f.coeffs[free] - 4.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn space_tags_are_checked() {
        let cx = DeRhamComplex::new(&cube2(false));
        let v = cx.zeros(SpaceKind::Edge);
        assert!(cx.check(&v, SpaceKind::Face).is_err());
        assert!(cx.check(&FieldVec::zeros(SpaceKind::Edge, 3), SpaceKind::Edge).is_err());
        assert!(cx.check(&v, SpaceKind::Edge).is_ok());
    }
}
