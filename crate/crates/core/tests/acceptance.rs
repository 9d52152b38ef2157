//! Acceptance criteria 1-10. Runs as a plain binary so every criterion prints its verdict.

use mfrelax::cli::{cmd_poincare, cmd_run, cmd_verify, RunConfig, RunOptions, StepEvent};
use mfrelax::derham::{
    assemble_mass, assemble_mass_quadrature, assemble_mixed_mass, assemble_mixed_mass_quadrature, interpolate_edges_full,
    interpolate_faces_full, DeRhamComplex, FieldVec, SpaceKind,
};
use mfrelax::diagio::{read_csv, DiagRow};
use mfrelax::element::Vec3;
use mfrelax::hodge::{recover_potential, helicity};
use mfrelax::mesh::{BoxMesh, EntityFamily};
use mfrelax::relax::{SchemeKind, Stepper, StepperConfig};
use mfrelax::sparse::{norm2, norm_inf, SparseOperator};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

struct Verdicts {
    failed: Vec<usize>,
}

impl Verdicts {
    fn record(&mut self, n: usize, name: &str, checks: &[(bool, String)]) {
        let pass = checks.iter().all(|(ok, _)| *ok);
        let detail: Vec<String> =
            checks.iter().map(|(ok, d)| if *ok { d.clone() } else { format!("FAILED {d}") }).collect();
        println!("criterion {n:>2} {name}: {} [{}]", if pass { "PASS" } else { "FAIL" }, detail.join("; "));
        if !pass {
            self.failed.push(n);
        }
    }
}

fn reference_mesh(periodic: bool) -> BoxMesh {
    BoxMesh::new([(-4.0, 4.0), (-4.0, 4.0), (-10.0, 10.0)], [4, 4, 10], periodic).unwrap()
}

/// Exact rank of an integer matrix by fraction-free Gaussian elimination.
fn integer_rank(op: &SparseOperator) -> usize {
    let (m, n) = (op.nrows(), op.ncols());
    let mut a = vec![vec![0i128; n]; m];
    for (r, row) in a.iter_mut().enumerate() {
        for (c, v) in op.row(r) {
            assert_eq!(v.fract(), 0.0, "incidence entries must be integers");
            row[c] = v as i128;
        }
    }
    let (mut rank, mut prev) = (0usize, 1i128);
    for col in 0..n {
        let Some(p) = (rank..m).find(|&r| a[r][col] != 0) else { continue };
        a.swap(rank, p);
        for r in rank + 1..m {
            for c in col + 1..n {
                a[r][c] = (a[rank][col] * a[r][c] - a[r][col] * a[rank][c]) / prev;
            }
            a[r][col] = 0;
        }
        prev = a[rank][col];
        rank += 1;
    }
    rank
}

fn criterion_1(v: &mut Verdicts) {
    let start = Instant::now();
    let mut checks = Vec::new();
    for (preset, expected) in [("cube-2", 0usize), ("periodic-2", 1)] {
        let cfg = RunConfig::preset(preset).unwrap();
        let report = cmd_verify(&cfg).unwrap();
        let cx = DeRhamComplex::new(&cfg.mesh.build().unwrap());
        let cg = cx.d_curl_full().matmul(cx.d_grad_full()).max_abs();
        let dc = cx.d_div_full().matmul(cx.d_curl_full()).max_abs();
        let (g, c, d) = (integer_rank(cx.d_grad()), integer_rank(cx.d_curl()), integer_rank(cx.d_div()));
        let dims = [SpaceKind::Nodal, SpaceKind::Edge, SpaceKind::Face, SpaceKind::Cell].map(|s| cx.dim(s));
        let edge_defect = dims[1] - c - g;
        let face_defect = dims[2] - d - c;
        checks.push((cg == 0.0 && dc == 0.0, format!("{preset}: |DD| = {cg}, {dc}")));
        checks.push((
            g == dims[0] && edge_defect == 0 && face_defect == expected,
            format!("{preset}: exact ranks {g}/{c}/{d}, defects {edge_defect}/{face_defect}"),
        ));
        checks.push((
            report.passed() && report.harmonic_dim == expected && report.ranks == Some([g, c, d]),
            format!("{preset}: verify harmonic_dim {}", report.harmonic_dim),
        ));
    }
    let t = start.elapsed();
    checks.push((t < Duration::from_secs(5), format!("{:.2}s", t.as_secs_f64())));
    v.record(1, "complex exactness", &checks);
}

struct StepLog {
    div_ratio: f64,
    energy_before: f64,
    energy_after: f64,
    dissipation: f64,
    b_h_drift: f64,
    elapsed: Duration,
}

struct Trajectory {
    rows: Vec<DiagRow>,
    steps: Vec<StepLog>,
    elapsed: Duration,
}

fn run_logged(cfg: &RunConfig, steps: Option<u64>) -> Trajectory {
    let start = Instant::now();
    let mut logs = Vec::new();
    let mut b_h0: Option<FieldVec> = None;
    let init_cx = DeRhamComplex::new(&cfg.mesh.build().unwrap());
    let init = mfrelax::fields::initial_field(&init_cx, cfg.ic, cfg.scheme.field_space()).unwrap();
    if init.space == SpaceKind::Face {
        b_h0 = Some(mfrelax::hodge::decompose(&init_cx, &init).unwrap().b_h);
    }
    let opts = RunOptions { steps, ..Default::default() };
    let out = cmd_run(cfg, &opts, &mut |ev: &StepEvent<'_>| {
        let b = &ev.state.b;
        let div_ratio = if b.space == SpaceKind::Face {
            norm_inf(&ev.cx.d_div().mul_vec(&b.coeffs)) / norm_inf(&b.coeffs)
        } else {
            f64::NAN
        };
        let b_h_drift = match (ev.hodge, &b_h0) {
            (Some(h), Some(h0)) => {
                let d: Vec<f64> = h.b_h.coeffs.iter().zip(&h0.coeffs).map(|(a, b)| a - b).collect();
                ev.cx.mass(SpaceKind::Face).quadratic_form(&d, &d).max(0.0).sqrt()
            }
            _ => f64::NAN,
        };
        logs.push(StepLog {
            div_ratio,
            energy_before: ev.cx.energy(&ev.previous.b),
            energy_after: ev.cx.energy(b),
            dissipation: ev.report.dissipation,
            b_h_drift,
            elapsed: start.elapsed(),
        });
    })
    .unwrap();
    Trajectory { rows: out.rows, steps: logs, elapsed: start.elapsed() }
}

fn max_by<T>(xs: &[T], f: impl Fn(&T) -> f64) -> f64 {
    xs.iter().map(f).fold(f64::NEG_INFINITY, f64::max)
}

fn criteria_2_to_4(v: &mut Verdicts) {
    let cfg = RunConfig::preset("hopf-trivial").unwrap();
    let soak = run_logged(&cfg, None);
    let first = &soak.steps[..100];
    let rows100 = &soak.rows[..=100];
    let t100 = first[99].elapsed;

    let div = max_by(first, |s| s.div_ratio);
    v.record(
        2,
        "magnetic Gauss law",
        &[
            (div <= 1e-11, format!("max ‖D_div B‖∞/‖B‖∞ = {div:.2e} over 100 steps")),
            (t100 < Duration::from_secs(180), format!("{:.1}s", t100.as_secs_f64())),
        ],
    );

    let e0 = rows100[0].energy;
    let rise = max_by(first, |s| (s.energy_after - s.energy_before) / s.energy_before);
    let gap = max_by(first, |s| (s.energy_after - s.energy_before + s.dissipation).abs() / s.energy_before);
    v.record(
        3,
        "energy dissipation",
        &[
            (rise <= 1e-9, format!("largest relative step change {rise:.2e} (E {e0:.6} -> {:.6})", rows100[100].energy)),
            (gap <= 1e-9, format!("identity gap {gap:.2e}")),
        ],
    );

    let h0 = soak.rows[0].helicity;
    let d100 = max_by(rows100, |r| (r.helicity - h0).abs()) / (1.0 + h0.abs());
    let dsoak = max_by(&soak.rows, |r| (r.helicity - h0).abs()) / h0.abs();
    v.record(
        4,
        "helicity conservation",
        &[
            (d100 <= 1e-8, format!("H0 = {h0:.10e}, 100-step drift {d100:.2e}")),
            (soak.steps.len() == 1000 && dsoak <= 1e-7, format!("{}-step drift {dsoak:.2e}", soak.steps.len())),
            (soak.elapsed < Duration::from_secs(1800), format!("soak {:.1}s", soak.elapsed.as_secs_f64())),
        ],
    );
}

fn criterion_5(v: &mut Verdicts) {
    let cfg = RunConfig::preset("hopf-periodic").unwrap();
    let est = cmd_poincare(&cfg).unwrap();
    let tr = run_logged(&cfg, Some(100));
    let r0 = &tr.rows[0];
    let bh = max_by(&tr.steps, |s| s.b_h_drift) / r0.harmonic_norm;
    let gh = max_by(&tr.rows, |r| (r.gen_helicity - r0.gen_helicity).abs()) / (1.0 + r0.gen_helicity.abs());
    let slack = tr.rows.iter().map(|r| r.energy - est.c * r.gen_helicity.abs() + 1e-8 * r0.energy).fold(f64::INFINITY, f64::min);
    v.record(
        5,
        "periodic generalized structures",
        &[
            (bh <= 1e-9, format!("‖B_H‖ = {:.6e}, drift {bh:.2e}", r0.harmonic_norm)),
            (gh <= 1e-8, format!("H~0 = {:.6e}, drift {gh:.2e}", r0.gen_helicity)),
            (slack >= 0.0, format!("C = {:.6}, min E - C|H~| = {slack:.4e}", est.c)),
        ],
    );
}

fn criterion_6(v: &mut Verdicts) {
    let cfg = RunConfig::preset("isohelix-periodic").unwrap();
    let tr = run_logged(&cfg, None);
    let gh = max_by(&tr.rows, |r| r.gen_helicity.abs());
    let m0 = tr.rows[0].modified_energy;
    let mono = tr.rows.windows(2).all(|w| w[1].modified_energy <= w[0].modified_energy);
    let mt = tr.rows.last().unwrap().modified_energy;
    let h0 = tr.rows[0].harmonic_norm;
    let bh = max_by(&tr.rows, |r| (r.harmonic_norm - h0).abs()) / h0;
    v.record(
        6,
        "isohelix relaxation",
        &[
            (tr.steps.len() == 1000 && gh <= 1e-8, format!("max |H~| = {gh:.2e} over {} steps", tr.steps.len())),
            (mono, "modified energy non-increasing".to_string()),
            (mt <= 0.05 * m0, format!("E~(T)/E~(0) = {:.4}", mt / m0)),
            (bh <= 1e-9, format!("‖B_H‖ = {h0:.6}, drift {bh:.2e}")),
        ],
    );
}

fn criterion_7(v: &mut Verdicts) {
    let start = Instant::now();
    let mut sp_cfg = RunConfig::preset("hopf-trivial").unwrap();
    sp_cfg.dt = 1.0;
    sp_cfg.t_final = 1000.0;
    let sp = run_logged(&sp_cfg, None);
    let noh = run_logged(&RunConfig::preset("hopf-noH").unwrap(), None);
    let h1 = run_logged(&RunConfig::preset("hopf-h1").unwrap(), None);
    let dir = tempfile::tempdir().unwrap();
    let hc_cfg = RunConfig::preset("hopf-hcurl").unwrap();
    let hc = cmd_run(&hc_cfg, &RunOptions { out: Some(dir.path().into()), ..Default::default() }, &mut |_| {}).unwrap();
    let hc_csv = std::fs::read_to_string(hc.csv.as_ref().unwrap()).unwrap();
    let hc_rows = read_csv(hc.csv.as_ref().unwrap()).unwrap();
    let elapsed = start.elapsed();

    let drift = |t: &Trajectory| {
        let h0 = t.rows[0].helicity;
        (t.rows.last().unwrap().helicity - h0).abs() / h0.abs()
    };
    let max_drift = |t: &Trajectory| {
        let h0 = t.rows[0].helicity;
        max_by(&t.rows, |r| (r.helicity - h0).abs()) / h0.abs()
    };
    let (d_noh, d_sp) = (drift(&noh), max_drift(&sp));
    let (e_noh, e_sp) = (noh.rows.last().unwrap().energy, sp.rows.last().unwrap().energy);
    let h1_div = max_by(&h1.rows[..=100], |r| r.div_norm);
    let sp_div = max_by(&sp.rows, |r| r.div_norm);
    let hc_na = hc_rows.len() == 1001
        && hc_rows.iter().all(|r| r.div_norm.is_nan())
        && hc_csv.lines().skip(1).all(|l| l.split(',').nth(4) == Some("nan"));
    v.record(
        7,
        "scheme separation",
        &[
            (d_noh > 1e-3 && d_sp <= 1e-8, format!("(a) helicity drift hdiv_noH {d_noh:.3e}, sp {d_sp:.2e}")),
            (e_noh < e_sp, format!("(b) final energy hdiv_noH {e_noh:.6e} < sp {e_sp:.6e}")),
            (
                h1_div > 1e-6 && sp_div <= 1e-11,
                format!(
                    "(c) h1 div_norm {h1_div:.3e} within 100 steps (t=0: {:.3e}), sp {sp_div:.2e}",
                    h1.rows[0].div_norm
                ),
            ),
            (hc_na, format!("(d) hcurl ran {} steps, div_norm n/a", hc_rows.len() - 1)),
            (elapsed < Duration::from_secs(1200), format!("{:.1}s", elapsed.as_secs_f64())),
        ],
    );
}

/// Smallest nonzero eigenvalue of K x = λ M x by dense Cholesky reduction.
fn dense_pencil_min(k: &SparseOperator, m: &SparseOperator) -> f64 {
    let (kd, md) = (k.to_dense(), m.to_dense());
    let l = md.cholesky().expect("mass is SPD").l();
    let linv = l.clone().try_inverse().unwrap();
    let a: DMatrix<f64> = &linv * kd * linv.transpose();
    let a = (&a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(a);
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    eig.eigenvalues.iter().cloned().filter(|&x| x > 1e-9 * top).fold(f64::INFINITY, f64::min)
}

fn criterion_8(v: &mut Verdicts) {
    let cfg = RunConfig::preset("cube-2").unwrap();
    let est = cmd_poincare(&cfg).unwrap();
    let cx = DeRhamComplex::new(&cfg.mesh.build().unwrap());
    let c = cx.d_curl();
    let k = c.transpose().matmul(&cx.mass(SpaceKind::Face).matmul(c));
    let lam = dense_pencil_min(&k, cx.mass(SpaceKind::Edge));
    let rel = (est.lambda_min - lam).abs() / lam;
    let mut checks = vec![(rel <= 1e-6, format!("cube-2 λ = {:.12}, dense {lam:.12}, rel {rel:.1e}", est.lambda_min))];

    let mut rng = ChaCha8Rng::seed_from_u64(0xa4);
    for (name, mesh) in [("cube-2", cfg.mesh.build().unwrap()), ("4x4x10", reference_mesh(false))] {
        let cx = DeRhamComplex::new(&mesh);
        let cst = mfrelax::hodge::estimate_arnold_constant(&cx).unwrap().c;
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let a0: Vec<f64> = (0..cx.dim(SpaceKind::Edge)).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b = FieldVec::new(SpaceKind::Face, cx.d_curl().mul_vec(&a0));
            let (a, _) = recover_potential(&cx, &b).unwrap();
            let ratio = cst * helicity(&cx, &a, &b).abs() / cx.energy(&b);
            worst = worst.max(ratio);
        }
        checks.push((worst <= 1.0 + 1e-10, format!("{name}: max C|H|/E = {worst:.4} over 20 samples")));
    }
    v.record(8, "Arnold constant", &checks);
}

fn fd_jacobian_check(kind: SchemeKind) -> f64 {
    let cx = DeRhamComplex::new(&reference_mesh(false));
    let cfg = StepperConfig::new(10.0, 100.0);
    let st = Stepper::new(&cx, kind, cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let bn = FieldVec::new(kind.field_space(), (0..cx.dim(kind.field_space())).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let x: Vec<f64> = (0..st.unknowns()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let j = st.jacobian(&x);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let d: Vec<f64> = (0..x.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let eps = 1e-6;
        let xp: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + eps * b).collect();
        let xm: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a - eps * b).collect();
        let (rp, rm) = (st.residual(&bn, &xp).unwrap(), st.residual(&bn, &xm).unwrap());
        let fd: Vec<f64> = rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
        let jd = j.mul_vec(&d);
        let diff: Vec<f64> = fd.iter().zip(&jd).map(|(a, b)| a - b).collect();
        worst = worst.max(norm2(&diff) / norm2(&jd));
    }
    worst
}

type VField = fn(Vec3) -> Vec3;
type SField = fn(Vec3) -> f64;

/// Quadratic fields with hand-computed derivatives, for the non-periodic box.
const BOX_FIELDS: (VField, VField, SField, SField, VField) = (
    |[x, y, z]| [x * y + 0.5 * z * z - 1.0, y * z - x * x + 0.25 * x, x * z + 2.0 * y * y - 0.3 * y],
    |[x, y, _]| [3.0 * y - 0.3, 0.0, 0.25 - 3.0 * x],
    |[x, y, z]| x + y + z,
    |[x, y, z]| x * x - 2.0 * y * z + 0.5 * z + x * y,
    |[x, y, z]| [2.0 * x + y, x - 2.0 * z, 0.5 - 2.0 * y],
);

/// z-independent quadratic fields, for the periodic box.
const PERIODIC_FIELDS: (VField, VField, SField, SField, VField) = (
    |[x, y, _]| [x * y - 1.0, 0.25 * x - x * x, 2.0 * y * y - 0.3 * y],
    |[x, y, _]| [4.0 * y - 0.3, 0.0, 0.25 - 3.0 * x],
    |[_, y, _]| y,
    |[x, y, _]| x * x + x * y,
    |[x, y, _]| [2.0 * x + y, x, 0.0],
);

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// grad, curl and div of the interpolants against interpolants of the exact derivatives.
fn commuting_diagram_error() -> f64 {
    let mut worst = 0.0f64;
    let cases = [
        (BoxMesh::new([(-1.0, 2.0), (0.0, 1.5), (-0.5, 1.0)], [3, 2, 4], false).unwrap(), BOX_FIELDS),
        (BoxMesh::new([(-1.0, 2.0), (0.0, 1.5), (0.0, 3.0)], [3, 2, 4], true).unwrap(), PERIODIC_FIELDS),
    ];
    for (mesh, (f, curl_f, div_f, phi, grad_phi)) in cases {
        let cx = DeRhamComplex::new(&mesh);
        let fe = interpolate_edges_full(&mesh, &f);
        let ff = interpolate_faces_full(&mesh, &f);
        worst = worst.max(max_diff(&cx.d_curl_full().mul_vec(&fe), &interpolate_faces_full(&mesh, &curl_f)));

        let nodal: Vec<f64> = (0..mesh.family_count(EntityFamily::Vertices))
            .map(|g| {
                let [i, j, k] = mesh.entity(EntityFamily::Vertices, g).index;
                phi(mesh.point(i, j, k))
            })
            .collect();
        worst = worst.max(max_diff(&cx.d_grad_full().mul_vec(&nodal), &interpolate_edges_full(&mesh, &grad_phi)));

        // cell integrals of div F by 3x3x3 Gauss
        let h = mesh.spacing();
        let r = (0.6f64).sqrt();
        let (gp, gw) = ([-r, 0.0, r], [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0]);
        let cells: Vec<f64> = (0..mesh.family_count(EntityFamily::Cells))
            .map(|c| {
                let [i, j, k] = mesh.entity(EntityFamily::Cells, c).index;
                let ctr = mesh.cell_center(i, j, k);
                let mut s = 0.0;
                for a in 0..3 {
                    for b in 0..3 {
                        for d in 0..3 {
                            let p = [
                                ctr[0] + 0.5 * h[0] * gp[a],
                                ctr[1] + 0.5 * h[1] * gp[b],
                                ctr[2] + 0.5 * h[2] * gp[d],
                            ];
                            s += gw[a] * gw[b] * gw[d] * div_f(p);
                        }
                    }
                }
                s * mesh.cell_volume() / 8.0
            })
            .collect();
        worst = worst.max(max_diff(&cx.d_div_full().mul_vec(&ff), &cells));
    }
    worst
}

fn mass_quadrature_error() -> f64 {
    let mut worst = 0.0f64;
    for periodic in [false, true] {
        let mesh = reference_mesh(periodic);
        let mut pairs: Vec<(SparseOperator, SparseOperator)> = SpaceKind::ALL
            .iter()
            .map(|&s| (assemble_mass(&mesh, s), assemble_mass_quadrature(&mesh, s, 3)))
            .collect();
        pairs.push((assemble_mixed_mass(&mesh), assemble_mixed_mass_quadrature(&mesh, 3)));
        for (a, b) in pairs {
            let scale = a.max_abs().max(1.0);
            let (da, db) = (a.to_dense(), b.to_dense());
            worst = worst.max((da - db).amax() / scale);
        }
    }
    worst
}

fn criterion_9(v: &mut Verdicts) {
    let mut checks = Vec::new();
    for kind in [SchemeKind::Sp, SchemeKind::HdivNoH, SchemeKind::Hcurl, SchemeKind::H1] {
        let e = fd_jacobian_check(kind);
        checks.push((e <= 1e-6, format!("{} Jacobian vs FD {e:.1e}", kind.name())));
    }
    let cd = commuting_diagram_error();
    checks.push((cd <= 1e-12, format!("commuting diagram {cd:.1e}")));
    let mq = mass_quadrature_error();
    checks.push((mq <= 1e-14, format!("mass closed form vs 27-point quadrature {mq:.1e}")));
    v.record(9, "oracle cross-checks", &checks);
}

fn criterion_10(v: &mut Verdicts) {
    let cfg = RunConfig::preset("hopf-trivial").unwrap();
    let root = tempfile::tempdir().unwrap();
    let run = |name: &str, steps: u64, resume: Option<std::path::PathBuf>| {
        let out = root.path().join(name);
        cmd_run(&cfg, &RunOptions { out: Some(out.clone()), steps: Some(steps), resume }, &mut |_| {}).unwrap()
    };
    let a = run("a", 20, None);
    let b = run("b", 20, None);
    let bytes = |p: &Option<std::path::PathBuf>| std::fs::read(p.as_ref().unwrap()).unwrap();
    let identical = bytes(&a.csv) == bytes(&b.csv);

    run("split", 10, None);
    let ck = root.path().join("split").join(mfrelax::cli::CHECKPOINT_NAME);
    let resumed = run("split", 10, Some(ck));
    let ra = read_csv(a.csv.as_ref().unwrap()).unwrap();
    let rs = read_csv(resumed.csv.as_ref().unwrap()).unwrap();
    let mut worst = 0.0f64;
    for (x, y) in ra.iter().zip(&rs) {
        for (p, q) in [(x.energy, y.energy), (x.helicity, y.helicity), (x.gen_helicity, y.gen_helicity), (x.t, y.t)] {
            worst = worst.max((p - q).abs() / p.abs().max(1e-300));
        }
    }
    let scale = norm_inf(&a.state.b.coeffs);
    let state_diff =
        a.state.b.coeffs.iter().zip(&resumed.state.b.coeffs).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max) / scale;
    v.record(
        10,
        "determinism and IO",
        &[
            (identical, "repeated run CSV bitwise identical".to_string()),
            (
                ra.len() == rs.len() && worst <= 1e-12 && state_diff <= 1e-12,
                format!("split run rows {}/{}, max rel diff {worst:.1e}, state {state_diff:.1e}", rs.len(), ra.len()),
            ),
        ],
    );
}

fn main() {
    // honour `cargo test -- <filter>` style invocations that list or skip tests
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    if args.iter().any(|a| !a.starts_with('-') && !"acceptance".contains(a.as_str())) {
        return;
    }
    let mut v = Verdicts { failed: Vec::new() };
    criterion_1(&mut v);
    criteria_2_to_4(&mut v);
    criterion_5(&mut v);
    criterion_6(&mut v);
    criterion_7(&mut v);
    criterion_8(&mut v);
    criterion_9(&mut v);
    criterion_10(&mut v);
    if !v.failed.is_empty() {
        eprintln!("failed criteria: {:?}", v.failed);
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
