//! Run configuration, embedded presets and the command implementations behind the binary.

use crate::derham::{verify_complex, ComplexReport, DeRhamComplex, SpaceKind};
use crate::diagio::{
    checkpoint_load_for, checkpoint_save, diagnostics_row, read_seeds, trace_fieldlines, write_vtk_polylines,
    write_vtk_snapshot, CsvWriter, DiagError, DiagRow, Traces,
};
use crate::element::Vec3;
use crate::fields::{initial_field, FieldsError, HopfParams, ICKind};
use crate::hodge::{estimate_arnold_constant, HodgeError, HodgeResult, HodgeSolver, PoincareEstimate};
use crate::mesh::{BoxMesh, MeshError};
use crate::relax::{SchemeKind, SchemeState, StepError, StepReport, Stepper, StepperConfig};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config {origin}: {source}")]
    Parse { origin: String, source: serde_json::Error },
    #[error("config field `{field}`: {msg}")]
    Invalid { field: &'static str, msg: String },
    #[error("unknown preset `{0}` (available: {1})")]
    UnknownPreset(String, String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fields(#[from] FieldsError),
    #[error(transparent)]
    Hodge(#[from] HodgeError),
    #[error(transparent)]
    Diag(#[from] DiagError),
    #[error("step {step} failed: {source}")]
    Step { step: u64, source: StepError },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub extents: [[f64; 2]; 3],
    pub resolution: [usize; 3],
    #[serde(default)]
    pub periodic_z: bool,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self { extents: [[-4.0, 4.0], [-4.0, 4.0], [-10.0, 10.0]], resolution: [4, 4, 10], periodic_z: false }
    }
}

impl MeshConfig {
    pub fn build(&self) -> Result<BoxMesh, MeshError> {
        BoxMesh::new(self.extents.map(|[a, b]| (a, b)), self.resolution, self.periodic_z)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewtonConfig {
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_true")]
    pub allow_halving: bool,
}

fn default_abs_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    20
}
fn default_true() -> bool {
    true
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self { abs_tol: default_abs_tol(), max_iter: default_max_iter(), allow_halving: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceConfig {
    /// Arclength step; `h_min/4` when absent.
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default = "default_max_length")]
    pub max_length: f64,
}

fn default_max_length() -> f64 {
    60.0
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self { step: None, max_length: default_max_length() }
    }
}

/// Run configuration. `tau`, `dt` and `t_final` have no defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeKind,
    #[serde(default = "default_ic")]
    pub ic: ICKind,
    pub tau: f64,
    pub dt: f64,
    pub t_final: f64,
    #[serde(default)]
    pub newton: NewtonConfig,
    /// Steps between helicity evaluations; every step up to 10⁴ DOFs, every 10th above.
    #[serde(default)]
    pub helicity_cadence: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Steps between VTK snapshots; 0 writes only the first and last.
    #[serde(default)]
    pub snapshot_cadence: usize,
    /// Steps between checkpoints; 0 checkpoints only at the end.
    #[serde(default = "default_checkpoint_cadence")]
    pub checkpoint_cadence: usize,
    #[serde(default)]
    pub seeds: Vec<Vec3>,
    #[serde(default)]
    pub trace: TraceConfig,
}

fn default_scheme() -> SchemeKind {
    SchemeKind::Sp
}
fn default_ic() -> ICKind {
    ICKind::Hopf(HopfParams::default())
}
fn default_checkpoint_cadence() -> usize {
    100
}

pub const PRESETS: [(&str, &str); 8] = [
    ("cube-2", include_str!("../presets/cube-2.json")),
    ("periodic-2", include_str!("../presets/periodic-2.json")),
    ("hopf-trivial", include_str!("../presets/hopf-trivial.json")),
    ("hopf-periodic", include_str!("../presets/hopf-periodic.json")),
    ("hopf-noH", include_str!("../presets/hopf-noH.json")),
    ("hopf-hcurl", include_str!("../presets/hopf-hcurl.json")),
    ("hopf-h1", include_str!("../presets/hopf-h1.json")),
    ("isohelix-periodic", include_str!("../presets/isohelix-periodic.json")),
];

impl RunConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self, CliError> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|source| CliError::Parse { origin: origin.to_string(), source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn preset(name: &str) -> Result<Self, CliError> {
        let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
            CliError::UnknownPreset(name.to_string(), PRESETS.map(|(n, _)| n).join(", "))
        })?;
        Self::from_json(text, &format!("preset {name}"))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let inv = |field, msg: String| Err(CliError::Invalid { field, msg });
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return inv("tau", format!("must be a nonnegative number, got {}", self.tau));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return inv("dt", format!("must be positive, got {}", self.dt));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return inv("t_final", format!("must be positive, got {}", self.t_final));
        }
        let n = (self.t_final / self.dt).round();
        if n < 1.0 || (n * self.dt - self.t_final).abs() > 1e-9 * self.t_final {
            return inv("t_final", format!("t_final / dt = {} is not a positive integer", self.t_final / self.dt));
        }
        if !(self.newton.abs_tol > 0.0) {
            return inv("newton.abs_tol", format!("must be positive, got {}", self.newton.abs_tol));
        }
        if self.newton.max_iter == 0 {
            return inv("newton.max_iter", "must be at least 1".into());
        }
        if self.helicity_cadence == Some(0) {
            return inv("helicity_cadence", "must be at least 1".into());
        }
        if let Err(e) = self.mesh.build() {
            return inv("mesh", e.to_string());
        }
        Ok(())
    }

    pub fn steps(&self) -> u64 {
        (self.t_final / self.dt).round() as u64
    }

    pub fn stepper_config(&self, residual_scale: f64) -> StepperConfig {
        StepperConfig {
            dt: self.dt,
            tau: self.tau,
            newton_abs_tol: self.newton.abs_tol,
            newton_max_iter: self.newton.max_iter,
            residual_scale,
            allow_halving: self.newton.allow_halving,
        }
    }
}

pub fn default_helicity_cadence(total_dofs: usize) -> usize {
    if total_dofs <= 10_000 {
        1
    } else {
        10
    }
}

fn total_dofs(cx: &DeRhamComplex) -> usize {
    [SpaceKind::Nodal, SpaceKind::Edge, SpaceKind::Face, SpaceKind::Cell].iter().map(|s| cx.dim(*s)).sum()
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<ComplexReport, CliError> {
    let cx = DeRhamComplex::new(&cfg.mesh.build()?);
    Ok(verify_complex(&cx))
}

pub fn cmd_poincare(cfg: &RunConfig) -> Result<PoincareEstimate, CliError> {
    let cx = DeRhamComplex::new(&cfg.mesh.build()?);
    Ok(estimate_arnold_constant(&cx)?)
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Output directory; nothing is written when absent.
    pub out: Option<PathBuf>,
    /// Number of steps to take instead of `t_final / dt`.
    pub steps: Option<u64>,
    /// Checkpoint to continue from.
    pub resume: Option<PathBuf>,
}

/// Everything an observer may inspect after each accepted step.
pub struct StepEvent<'a> {
    pub cx: &'a DeRhamComplex,
    pub previous: &'a SchemeState,
    pub state: &'a SchemeState,
    pub report: &'a StepReport,
    pub row: &'a DiagRow,
    pub hodge: Option<&'a HodgeResult>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub initial: SchemeState,
    pub state: SchemeState,
    /// Rows written in this invocation (the initial row is included unless resuming).
    pub rows: Vec<DiagRow>,
    pub csv: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
}

pub const CSV_NAME: &str = "diagnostics.csv";
pub const CHECKPOINT_NAME: &str = "checkpoint.prlx";

/// Project, step, record. `observe` sees every accepted step.
pub fn cmd_run(
    cfg: &RunConfig,
    opts: &RunOptions,
    observe: &mut dyn FnMut(&StepEvent<'_>),
) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let mesh = cfg.mesh.build()?;
    let cx = DeRhamComplex::new(&mesh);
    let b0 = initial_field(&cx, cfg.ic, cfg.scheme.field_space())?;
    let initial = SchemeState::new(cfg.scheme, b0);
    let scale = cx.energy(&initial.b).sqrt().max(1.0);
    let stepper = Stepper::new(&cx, cfg.scheme, cfg.stepper_config(scale)).map_err(|source| CliError::Step { step: 0, source })?;
    let face = cfg.scheme.field_space() == SpaceKind::Face;
    let hodge = if face { Some(HodgeSolver::new(&cx)?) } else { None };
    let cadence = cfg.helicity_cadence.unwrap_or_else(|| default_helicity_cadence(total_dofs(&cx))) as u64;

    let mut state = match &opts.resume {
        Some(p) => {
            let s = checkpoint_load_for(&cx, p)?;
            if s.scheme != cfg.scheme {
                return Err(CliError::Invalid {
                    field: "scheme",
                    msg: format!("checkpoint holds a {} state", s.scheme.name()),
                });
            }
            s
        }
        None => initial.clone(),
    };
    let total = opts.steps.unwrap_or_else(|| cfg.steps());
    let last_step = if opts.resume.is_some() && opts.steps.is_none() { total } else { state.step + total };

    let out = opts.out.as_ref().or(cfg.out.as_ref());
    if let Some(d) = out {
        std::fs::create_dir_all(d).map_err(|source| CliError::Io { path: d.clone(), source })?;
    }
    let csv_path = out.map(|d| d.join(CSV_NAME));
    let ck_path = out.map(|d| d.join(CHECKPOINT_NAME));
    let mut csv = match &csv_path {
        Some(p) if opts.resume.is_some() && p.exists() => Some(CsvWriter::append(p)?),
        Some(p) => Some(CsvWriter::create(p)?),
        None => None,
    };
    let snap_base = out.map(|d| d.join("snapshots").join("b.vtk"));
    if let Some(b) = &snap_base {
        let dir = b.parent().unwrap();
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    }

    let decompose = |s: &SchemeState| -> Result<Option<HodgeResult>, CliError> {
        match &hodge {
            Some(h) if s.step % cadence == 0 || s.step == last_step => Ok(Some(h.decompose(&s.b)?)),
            _ => Ok(None),
        }
    };
    let mut rows = Vec::new();
    let mut prev_row = diagnostics_row(&cx, &state, decompose(&state)?.as_ref());
    if opts.resume.is_none() {
        if let Some(w) = csv.as_mut() {
            w.write(&prev_row)?;
        }
        rows.push(prev_row);
        if let Some(b) = &snap_base {
            write_vtk_snapshot(&cx, &state, b)?;
        }
    }

    while state.step < last_step {
        let (next, report) = match stepper.step(&state) {
            Ok(ok) => ok,
            Err(source) => {
                if let Some(w) = csv.as_mut() {
                    w.flush()?;
                }
                if let Some(p) = &ck_path {
                    checkpoint_save(&mesh, &state, p)?;
                }
                return Err(CliError::Step { step: state.step + 1, source });
            }
        };
        let h = decompose(&next)?;
        let row = diagnostics_row(&cx, &next, h.as_ref()).with_step(&report).carry_from(&prev_row);
        if let Some(w) = csv.as_mut() {
            w.write(&row)?;
        }
        observe(&StepEvent { cx: &cx, previous: &state, state: &next, report: &report, row: &row, hodge: h.as_ref() });
        rows.push(row);
        prev_row = row;
        state = next;
        if let Some(b) = &snap_base {
            if (cfg.snapshot_cadence > 0 && state.step % cfg.snapshot_cadence as u64 == 0) || state.step == last_step {
                write_vtk_snapshot(&cx, &state, b)?;
            }
        }
        if let Some(p) = &ck_path {
            if cfg.checkpoint_cadence > 0 && state.step % cfg.checkpoint_cadence as u64 == 0 {
                if let Some(w) = csv.as_mut() {
                    w.flush()?;
                }
                checkpoint_save(&mesh, &state, p)?;
            }
        }
    }
    if let Some(w) = csv.as_mut() {
        w.flush()?;
    }
    if let Some(p) = &ck_path {
        checkpoint_save(&mesh, &state, p)?;
    }
    Ok(RunOutcome { initial, state, rows, csv: csv_path, checkpoint: ck_path })
}

/// Seeds on a ring of radius 1 in the plane z = 0, used when none are configured.
pub fn default_seeds() -> Vec<Vec3> {
    (0..8)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / 8.0;
            [a.cos(), a.sin(), 0.0]
        })
        .collect()
}

/// Traces field lines of the checkpointed field (or the initial field) and writes VTK polylines.
pub fn cmd_trace(
    cfg: &RunConfig,
    checkpoint: Option<&Path>,
    seeds: Option<&Path>,
    out: Option<&Path>,
) -> Result<(Traces, Option<PathBuf>), CliError> {
    let mesh = cfg.mesh.build()?;
    let cx = DeRhamComplex::new(&mesh);
    let state = match checkpoint {
        Some(p) => checkpoint_load_for(&cx, p)?,
        None => SchemeState::new(cfg.scheme, initial_field(&cx, cfg.ic, cfg.scheme.field_space())?),
    };
    let seeds = match seeds {
        Some(p) => read_seeds(p)?,
        None if !cfg.seeds.is_empty() => cfg.seeds.clone(),
        None => default_seeds(),
    };
    let traces = trace_fieldlines(&cx, &state.b, &seeds, cfg.trace.step, cfg.trace.max_length)?;
    let path = match out.or(cfg.out.as_deref()) {
        Some(d) => {
            std::fs::create_dir_all(d).map_err(|source| CliError::Io { path: d.to_path_buf(), source })?;
            let p = d.join(format!("fieldlines_{:06}.vtk", state.step));
            let jump = 2.0 * cfg.trace.step.unwrap_or(0.25 * mesh.h_min());
            write_vtk_polylines(&traces.lines, jump, &p)?;
            Some(p)
        }
        None => None,
    };
    Ok((traces, path))
}
