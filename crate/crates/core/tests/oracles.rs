use mfrelax::cli::RunConfig;
use mfrelax::derham::{interpolate, DeRhamComplex, FieldVec, SpaceKind};
use mfrelax::diagio::cell_averages;
use mfrelax::fields::{hopf_field, initial_field, HopfParams, ICKind};
use mfrelax::hodge::{decompose, estimate_arnold_constant, mass_norm};
use mfrelax::linsolve::{eig_smallest_nonzero, EigenOptions};
use mfrelax::mesh::BoxMesh;
use mfrelax::sparse::SparseOperator;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const HOPF_H0: f64 = 0.08733304866021459;
const HOPF_LAMBDA: f64 = 0.1871688887755211;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn dense_to_sparse(a: &DMatrix<f64>) -> SparseOperator {
    let mut t = Vec::new();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if a[(i, j)] != 0.0 {
                t.push((i, j, a[(i, j)]));
            }
        }
    }
    SparseOperator::from_triplets(a.nrows(), a.ncols(), &t)
}

#[test]
fn arnold_constant_scales_inversely_with_length() {
    let small = BoxMesh::new([(0.0, 2.0); 3], [2, 2, 2], false).unwrap();
    let large = BoxMesh::new([(0.0, 4.0); 3], [2, 2, 2], false).unwrap();
    let a = estimate_arnold_constant(&DeRhamComplex::new(&small)).unwrap();
    let b = estimate_arnold_constant(&DeRhamComplex::new(&large)).unwrap();
    assert!(rel(4.0 * b.lambda_min, a.lambda_min) < 1e-8, "{} vs {}", a.lambda_min, b.lambda_min);
    assert!(rel(2.0 * b.c, a.c) < 1e-8);
}

#[test]
fn eigensolver_matches_dense_pencil_without_deflation() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 30;
    let r = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let k = &r * r.transpose() + DMatrix::identity(n, n) * 0.5;
    let q = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let m = &q * q.transpose() + DMatrix::identity(n, n) * (n as f64);
    // reduce K x = λ M x to a standard problem through the Cholesky factor of M
    let l = m.clone().cholesky().unwrap().l();
    let li = l.clone().try_inverse().unwrap();
    let s = &li * &k * li.transpose();
    let expected = s.symmetric_eigen().eigenvalues.min();
    let got = eig_smallest_nonzero(&dense_to_sparse(&k), &dense_to_sparse(&m), None, EigenOptions::default()).unwrap();
    assert!(rel(got.lambda, expected) < 1e-8, "{} vs {expected}", got.lambda);
}

#[test]
fn isohelix_harmonic_part_is_the_uniform_axial_field() {
    let cfg = RunConfig::preset("isohelix-periodic").unwrap();
    let cx = DeRhamComplex::new(&cfg.mesh.build().unwrap());
    let b = initial_field(&cx, ICKind::Isohelix, SpaceKind::Face).unwrap();
    let h = decompose(&cx, &b).unwrap();
    let uniform = interpolate(&cx, &|_| [0.0, 0.0, 1.0], SpaceKind::Face);
    let diff = FieldVec::new(SpaceKind::Face, h.b_h.coeffs.iter().zip(&uniform.coeffs).map(|(a, b)| a - b).collect());
    let vol = cx.mesh().volume();
    assert!(mass_norm(&cx, &diff) <= 1e-10 * vol.sqrt(), "{}", mass_norm(&cx, &diff));
    assert!(rel(mass_norm(&cx, &h.b_h), vol.sqrt()) < 1e-12);
}

#[test]
fn hopf_cell_averages_converge_under_refinement() {
    let f = hopf_field(HopfParams::default()).unwrap();
    let (g, w) = gauss3();
    let mut errors = Vec::new();
    for n in [12usize, 24, 48] {
        let mesh = BoxMesh::new([(-1.5, 1.5); 3], [n, n, n], false).unwrap();
        let cx = DeRhamComplex::new(&mesh);
        let b = interpolate(&cx, &f, SpaceKind::Face);
        let avg = cell_averages(&cx, &b);
        let hx = mesh.spacing();
        let mut err: f64 = 0.0;
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let c = mesh.cell_center(i, j, k);
                    // interior block, away from the masked walls
                    if c.iter().any(|x| x.abs() > 1.0) {
                        continue;
                    }
                    let mut exact = [0.0; 3];
                    for (a, wa) in g.iter().zip(&w) {
                        for (b_, wb) in g.iter().zip(&w) {
                            for (c_, wc) in g.iter().zip(&w) {
                                let p = [c[0] + 0.5 * hx[0] * a, c[1] + 0.5 * hx[1] * b_, c[2] + 0.5 * hx[2] * c_];
                                let v = f(p);
                                for d in 0..3 {
                                    exact[d] += wa * wb * wc * v[d] / 8.0;
                                }
                            }
                        }
                    }
                    let got = avg[i + n * (j + n * k)];
                    for d in 0..3 {
                        err = err.max((got[d] - exact[d]).abs());
                    }
                }
            }
        }
        errors.push(err);
    }
    assert!(errors.windows(2).all(|p| p[1] < p[0]), "errors {errors:?}");
    // second order once the mesh resolves the core
    assert!((errors[1] / errors[2]).log2() > 1.8, "errors {errors:?}");
}

#[test]
fn hopf_reference_values() {
    let cfg = RunConfig::preset("hopf-trivial").unwrap();
    let cx = DeRhamComplex::new(&cfg.mesh.build().unwrap());
    let b = initial_field(&cx, cfg.ic, SpaceKind::Face).unwrap();
    let h = decompose(&cx, &b).unwrap();
    assert!(rel(h.helicity, HOPF_H0) < 1e-9, "{}", h.helicity);
    assert!(mass_norm(&cx, &h.b_h) <= 1e-10 * mass_norm(&cx, &b));
    let est = estimate_arnold_constant(&cx).unwrap();
    assert!(rel(est.lambda_min, HOPF_LAMBDA) < 1e-8, "{}", est.lambda_min);
    assert!(h.helicity.abs() * est.c <= cx.energy(&b));
}

/// Three-point Gauss–Legendre rule on [-1, 1].
fn gauss3() -> ([f64; 3], [f64; 3]) {
    let a = (0.6f64).sqrt();
    ([-a, 0.0, a], [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
}
