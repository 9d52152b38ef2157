//! Lowest-order tensor-product elements on a uniform hexahedral cell.
//!
//! Reference coordinates run over `[0, 1]^3`. The 1D shape functions are
//! `psi_0(t) = 1 - t` and `psi_1(t) = t`. Every basis function is scaled so
//! that its degree of freedom (point value, circulation, flux or cell
//! integral) equals one, which makes the exterior derivatives pure incidence
//! matrices.
//!
//! Local numbering inside cell `(i, j, k)`:
//! * nodes `a + 2b + 4c` at vertex `(i+a, j+b, k+c)`;
//! * edges `0..4` are x-edges `(b, c) = (l % 2, l / 2)` at `(i, j+b, k+c)`,
//!   `4..8` y-edges `(a, c)` at `(i+a, j, k+c)`, `8..12` z-edges `(a, b)`
//!   at `(i+a, j+b, k)`;
//! * faces `0, 1` are x-faces at `(i+a, j, k)`, `2, 3` y-faces at
//!   `(i, j+b, k)`, `4, 5` z-faces at `(i, j, k+c)`.

use crate::mesh::{BoxMesh, EntityKind};

pub type Vec3 = [f64; 3];

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
pub fn dot3(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn add3(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
fn psi(s: usize, t: f64) -> f64 {
    if s == 0 {
        1.0 - t
    } else {
        t
    }
}

#[inline]
fn dpsi(s: usize) -> f64 {
    if s == 0 {
        -1.0
    } else {
        1.0
    }
}

/// Gauss–Legendre rule with `n` points mapped to `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut pts = vec![0.0; n];
    let mut wts = vec![0.0; n];
    for i in 0..n {
        // Newton iteration on P_n from the Chebyshev-like initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pnm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        pts[n - 1 - i] = 0.5 * (x + 1.0);
        wts[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (pts, wts)
}

/// Tensor-product quadrature on the reference cell; weights sum to one.
#[derive(Clone, Debug)]
pub struct CellRule {
    pub points: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl CellRule {
    pub fn gauss(n: usize) -> Self {
        let (p, w) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n * n);
        let mut weights = Vec::with_capacity(n * n * n);
        for c in 0..n {
            for b in 0..n {
                for a in 0..n {
                    points.push([p[a], p[b], p[c]]);
                    weights.push(w[a] * w[b] * w[c]);
                }
            }
        }
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Which local element a table describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LocalSpace {
    Node,
    Edge,
    Face,
    Cell,
    /// Three copies of the nodal element, one per Cartesian component.
    NodalVector,
}

impl LocalSpace {
    pub fn local_dofs(self) -> usize {
        match self {
            LocalSpace::Node => 8,
            LocalSpace::Edge => 12,
            LocalSpace::Face => 6,
            LocalSpace::Cell => 1,
            LocalSpace::NodalVector => 24,
        }
    }
}

/// Basis values (and curls, for vector spaces) tabulated at quadrature points.
#[derive(Clone, Debug)]
pub struct BasisTable {
    pub space: LocalSpace,
    pub n: usize,
    /// `val[q * n + l]`; scalar spaces store the value in component 0.
    pub val: Vec<Vec3>,
    /// Curl for vector spaces, gradient for `Node`, divergence (component 0) for `Face`.
    pub deriv: Vec<Vec3>,
}

/// Evaluates local basis function `l` of `space` at reference point `p`,
/// for a cell with spacing `h`. Returns (value, derivative) with the
/// derivative convention of [`BasisTable::deriv`].
pub fn eval_basis(space: LocalSpace, l: usize, p: Vec3, h: Vec3) -> (Vec3, Vec3) {
    let [x, y, z] = p;
    let [hx, hy, hz] = h;
    match space {
        LocalSpace::Node => {
            let (a, b, c) = (l & 1, (l >> 1) & 1, (l >> 2) & 1);
            let v = psi(a, x) * psi(b, y) * psi(c, z);
            let g = [
                dpsi(a) * psi(b, y) * psi(c, z) / hx,
                psi(a, x) * dpsi(b) * psi(c, z) / hy,
                psi(a, x) * psi(b, y) * dpsi(c) / hz,
            ];
            ([v, 0.0, 0.0], g)
        }
        LocalSpace::Edge => {
            let (s, t) = ((l % 4) % 2, (l % 4) / 2);
            match l / 4 {
                0 => {
                    let v = psi(s, y) * psi(t, z) / hx;
                    let curl = [
                        0.0,
                        psi(s, y) * dpsi(t) / (hz * hx),
                        -dpsi(s) * psi(t, z) / (hy * hx),
                    ];
                    ([v, 0.0, 0.0], curl)
                }
                1 => {
                    let v = psi(s, x) * psi(t, z) / hy;
                    let curl = [
                        -psi(s, x) * dpsi(t) / (hz * hy),
                        0.0,
                        dpsi(s) * psi(t, z) / (hx * hy),
                    ];
                    ([0.0, v, 0.0], curl)
                }
                _ => {
                    let v = psi(s, x) * psi(t, y) / hz;
                    let curl = [
                        psi(s, x) * dpsi(t) / (hy * hz),
                        -dpsi(s) * psi(t, y) / (hx * hz),
                        0.0,
                    ];
                    ([0.0, 0.0, v], curl)
                }
            }
        }
        LocalSpace::Face => {
            let s = l % 2;
            let vol = hx * hy * hz;
            let div = [dpsi(s) / vol, 0.0, 0.0];
            match l / 2 {
                0 => ([psi(s, x) / (hy * hz), 0.0, 0.0], div),
                1 => ([0.0, psi(s, y) / (hx * hz), 0.0], div),
                _ => ([0.0, 0.0, psi(s, z) / (hx * hy)], div),
            }
        }
        LocalSpace::Cell => ([1.0 / (hx * hy * hz), 0.0, 0.0], [0.0; 3]),
        LocalSpace::NodalVector => {
            let (node, comp) = (l / 3, l % 3);
            let (v, g) = eval_basis(LocalSpace::Node, node, p, h);
            let mut e = [0.0; 3];
            e[comp] = 1.0;
            let mut val = [0.0; 3];
            val[comp] = v[0];
            (val, cross(g, e))
        }
    }
}

impl BasisTable {
    pub fn new(space: LocalSpace, rule: &CellRule, h: Vec3) -> Self {
        let n = space.local_dofs();
        let mut val = Vec::with_capacity(rule.len() * n);
        let mut deriv = Vec::with_capacity(rule.len() * n);
        for &p in &rule.points {
            for l in 0..n {
                let (v, d) = eval_basis(space, l, p, h);
                val.push(v);
                deriv.push(d);
            }
        }
        Self { space, n, val, deriv }
    }

    /// Field value at quadrature point `q` from local coefficients.
    #[inline]
    pub fn value_at(&self, q: usize, coeffs: &[f64]) -> Vec3 {
        let mut out = [0.0; 3];
        let row = &self.val[q * self.n..(q + 1) * self.n];
        for (v, &c) in row.iter().zip(coeffs) {
            if c != 0.0 {
                out[0] += c * v[0];
                out[1] += c * v[1];
                out[2] += c * v[2];
            }
        }
        out
    }

    #[inline]
    pub fn deriv_at(&self, q: usize, coeffs: &[f64]) -> Vec3 {
        let mut out = [0.0; 3];
        let row = &self.deriv[q * self.n..(q + 1) * self.n];
        for (v, &c) in row.iter().zip(coeffs) {
            out[0] += c * v[0];
            out[1] += c * v[1];
            out[2] += c * v[2];
        }
        out
    }

    #[inline]
    pub fn val(&self, q: usize, l: usize) -> Vec3 {
        self.val[q * self.n + l]
    }

    #[inline]
    pub fn deriv(&self, q: usize, l: usize) -> Vec3 {
        self.deriv[q * self.n + l]
    }
}

/// Global (full, unreduced) entity ids touched by one cell, in local order.
pub fn cell_entities(mesh: &BoxMesh, space: LocalSpace, cell: [usize; 3]) -> Vec<usize> {
    let [i, j, k] = cell;
    match space {
        LocalSpace::Node => (0..8)
            .map(|l| mesh.global_index(EntityKind::Vertex, i + (l & 1), j + ((l >> 1) & 1), k + (l >> 2)))
            .collect(),
        LocalSpace::Edge => (0..12)
            .map(|l| {
                let (s, t) = ((l % 4) % 2, (l % 4) / 2);
                match l / 4 {
                    0 => mesh.global_index(EntityKind::EdgeX, i, j + s, k + t),
                    1 => mesh.global_index(EntityKind::EdgeY, i + s, j, k + t),
                    _ => mesh.global_index(EntityKind::EdgeZ, i + s, j + t, k),
                }
            })
            .collect(),
        LocalSpace::Face => (0..6)
            .map(|l| {
                let s = l % 2;
                match l / 2 {
                    0 => mesh.global_index(EntityKind::FaceX, i + s, j, k),
                    1 => mesh.global_index(EntityKind::FaceY, i, j + s, k),
                    _ => mesh.global_index(EntityKind::FaceZ, i, j, k + s),
                }
            })
            .collect(),
        LocalSpace::Cell => vec![mesh.global_index(EntityKind::Cell, i, j, k)],
        LocalSpace::NodalVector => {
            let nodes = cell_entities(mesh, LocalSpace::Node, cell);
            let nv = mesh.entity_counts().vertices;
            (0..24).map(|l| nodes[l / 3] + (l % 3) * nv).collect()
        }
    }
}

/// Iterates cells in lexicographic (x-fastest) order.
pub fn cells(mesh: &BoxMesh) -> impl Iterator<Item = [usize; 3]> {
    let [nx, ny, nz] = mesh.resolution();
    (0..nz).flat_map(move |k| (0..ny).flat_map(move |j| (0..nx).map(move |i| [i, j, k])))
}
