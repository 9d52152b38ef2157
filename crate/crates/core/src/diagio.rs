//! Diagnostics rows, CSV time series, VTK snapshots, field-line tracing and checkpoints.

use crate::derham::{DeRhamComplex, FieldVec, SpaceKind};
use crate::element::Vec3;
use crate::hodge::{mass_norm, modified_energy, HodgeResult};
use crate::mesh::{BoxMesh, EntityFamily, EntityKind};
use crate::relax::{divergence_norm, SchemeKind, SchemeState, StepReport};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const CSV_HEADER: &str =
    "t,energy,helicity,gen_helicity,div_norm,harmonic_norm,modified_energy,newton_iters,residual";
pub const CHECKPOINT_MAGIC: &str = "PRLX1";

#[derive(Debug, Error)]
pub enum DiagError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("checkpoint mismatch: {0}")]
    Mismatch(String),
    #[error("{0}")]
    Unsupported(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DiagError + '_ {
    move |source| DiagError::Io { path: path.to_path_buf(), source }
}

/// One time-series record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagRow {
    pub t: f64,
    pub energy: f64,
    pub helicity: f64,
    pub gen_helicity: f64,
    pub div_norm: f64,
    pub harmonic_norm: f64,
    pub modified_energy: f64,
    pub newton_iters: usize,
    pub residual: f64,
    /// Helicity columns were copied from an earlier row instead of recomputed.
    pub carried: bool,
}

impl DiagRow {
    pub fn with_step(mut self, report: &StepReport) -> Self {
        self.newton_iters = report.newton_iters;
        self.residual = report.residual;
        self
    }

    /// Fills the hodge-derived columns from `prev` when they were skipped.
    pub fn carry_from(mut self, prev: &DiagRow) -> Self {
        if self.carried {
            self.helicity = prev.helicity;
            self.gen_helicity = prev.gen_helicity;
            self.harmonic_norm = prev.harmonic_norm;
            self.modified_energy = prev.modified_energy;
        }
        self
    }

    fn values(&self) -> [f64; 7] {
        [self.t, self.energy, self.helicity, self.gen_helicity, self.div_norm, self.harmonic_norm, self.modified_energy]
    }
}

/// Diagnostics of `state`. Helicity columns need a hodge result for face fields; without one
/// they are NaN and the row is flagged as carried. Edge and nodal fields have no helicity columns.
pub fn diagnostics_row(cx: &DeRhamComplex, state: &SchemeState, hodge: Option<&HodgeResult>) -> DiagRow {
    let b = &state.b;
    let mut row = DiagRow {
        t: state.t,
        energy: cx.energy(b),
        helicity: f64::NAN,
        gen_helicity: f64::NAN,
        div_norm: divergence_norm(cx, b),
        harmonic_norm: f64::NAN,
        modified_energy: f64::NAN,
        newton_iters: 0,
        residual: 0.0,
        carried: false,
    };
    if b.space == SpaceKind::Face {
        match hodge {
            Some(h) => {
                row.helicity = h.helicity;
                row.gen_helicity = h.gen_helicity;
                row.harmonic_norm = mass_norm(cx, &h.b_h);
                row.modified_energy = modified_energy(cx, b, &h.b_h);
            }
            None => row.carried = true,
        }
    }
    row
}

/// Shortest decimal that parses back to the same bits; NaN is written as `nan`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:?}")
    }
}

fn csv_line(row: &DiagRow) -> String {
    let mut s = String::new();
    for v in row.values() {
        s.push_str(&format_float(v));
        s.push(',');
    }
    let _ = write!(s, "{},{}", row.newton_iters, format_float(row.residual));
    s
}

/// Appending CSV writer; the header is written on creation.
pub struct CsvWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path) -> Result<Self, DiagError> {
        let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
        writeln!(out, "{CSV_HEADER}").map_err(io_err(path))?;
        Ok(Self { path: path.to_path_buf(), out })
    }

    /// Opens an existing file for appending, checking its header.
    pub fn append(path: &Path) -> Result<Self, DiagError> {
        let mut first = String::new();
        BufReader::new(File::open(path).map_err(io_err(path))?).read_line(&mut first).map_err(io_err(path))?;
        if first.trim_end() != CSV_HEADER {
            return Err(DiagError::Parse { path: path.to_path_buf(), line: 1, msg: "unexpected header".into() });
        }
        let f = std::fs::OpenOptions::new().append(true).open(path).map_err(io_err(path))?;
        Ok(Self { path: path.to_path_buf(), out: BufWriter::new(f) })
    }

    pub fn write(&mut self, row: &DiagRow) -> Result<(), DiagError> {
        writeln!(self.out, "{}", csv_line(row)).map_err(io_err(&self.path))
    }

    pub fn flush(&mut self) -> Result<(), DiagError> {
        self.out.flush().map_err(io_err(&self.path))
    }
}

pub fn write_csv(rows: &[DiagRow], path: &Path) -> Result<(), DiagError> {
    let mut w = CsvWriter::create(path)?;
    for r in rows {
        w.write(r)?;
    }
    w.flush()
}

pub fn read_csv(path: &Path) -> Result<Vec<DiagRow>, DiagError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let perr = |line: usize, msg: String| DiagError::Parse { path: path.to_path_buf(), line, msg };
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(perr(1, "unexpected header".into()));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(perr(i + 2, format!("expected 9 fields, found {}", f.len())));
        }
        let num = |k: usize| f[k].parse::<f64>().map_err(|e| perr(i + 2, format!("field {}: {e}", k + 1)));
        rows.push(DiagRow {
            t: num(0)?,
            energy: num(1)?,
            helicity: num(2)?,
            gen_helicity: num(3)?,
            div_norm: num(4)?,
            harmonic_norm: num(5)?,
            modified_energy: num(6)?,
            newton_iters: f[7].parse().map_err(|e| perr(i + 2, format!("field 8: {e}")))?,
            residual: num(8)?,
            carried: false,
        });
    }
    Ok(rows)
}

/// Per-cell averages of a face, edge or nodal-vector field, cells in lexicographic order.
pub fn cell_averages(cx: &DeRhamComplex, b: &FieldVec) -> Vec<Vec3> {
    let mesh = cx.mesh();
    let [nx, ny, nz] = mesh.resolution();
    let h = mesh.spacing();
    let full = cx.free_map(b.space).expand(&b.coeffs);
    let mut out = Vec::with_capacity(nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let v = match b.space {
                    SpaceKind::Face => [0, 1, 2].map(|a| {
                        let kind = EntityKind::FACES[a];
                        let mut hi = [i, j, k];
                        hi[a] += 1;
                        let area = h[(a + 1) % 3] * h[(a + 2) % 3];
                        let lo = full[mesh.global_index(kind, i, j, k)];
                        let up = full[mesh.global_index(kind, hi[0], hi[1], hi[2])];
                        0.5 * (lo + up) / area
                    }),
                    SpaceKind::Edge | SpaceKind::EdgeUnconstrained => [0, 1, 2].map(|a| {
                        let kind = EntityKind::EDGES[a];
                        let (b1, b2) = ((a + 1) % 3, (a + 2) % 3);
                        let mut s = 0.0;
                        for (d1, d2) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                            let mut idx = [i, j, k];
                            idx[b1] += d1;
                            idx[b2] += d2;
                            s += full[mesh.global_index(kind, idx[0], idx[1], idx[2])];
                        }
                        0.25 * s / h[a]
                    }),
                    SpaceKind::NodalVector => {
                        let nv = mesh.entity_counts().vertices;
                        let mut s = [0.0; 3];
                        for c in 0..8 {
                            let g = mesh.global_index(EntityKind::Vertex, i + (c & 1), j + ((c >> 1) & 1), k + (c >> 2));
                            for (a, sa) in s.iter_mut().enumerate() {
                                *sa += full[a * nv + g] / 8.0;
                            }
                        }
                        s
                    }
                    SpaceKind::Nodal | SpaceKind::Cell => [f64::NAN; 3],
                };
                out.push(v);
            }
        }
    }
    out
}

/// Snapshot file name `<stem>_<step>.vtk` next to `base`.
pub fn snapshot_path(base: &Path, step: u64) -> PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("snapshot");
    base.with_file_name(format!("{stem}_{step:06}.vtk"))
}

/// Legacy ASCII VTK unstructured hexahedral grid with cell-averaged `B`. Returns the written path.
pub fn write_vtk_snapshot(cx: &DeRhamComplex, state: &SchemeState, base: &Path) -> Result<PathBuf, DiagError> {
    if matches!(state.b.space, SpaceKind::Nodal | SpaceKind::Cell) {
        return Err(DiagError::Unsupported(format!("no vector snapshot for {} fields", state.b.space.name())));
    }
    let path = snapshot_path(base, state.step);
    let mesh = cx.mesh();
    let [nx, ny, nz] = mesh.resolution();
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "B scheme={} step={} t={}", state.scheme.name(), state.step, format_float(state.t));
    let _ = writeln!(s, "ASCII\nDATASET UNSTRUCTURED_GRID");
    let np = (nx + 1) * (ny + 1) * (nz + 1);
    let _ = writeln!(s, "POINTS {np} double");
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                let p = mesh.point(i, j, k);
                let _ = writeln!(s, "{} {} {}", format_float(p[0]), format_float(p[1]), format_float(p[2]));
            }
        }
    }
    let nc = nx * ny * nz;
    let _ = writeln!(s, "CELLS {nc} {}", nc * 9);
    let pid = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let _ = writeln!(
                    s,
                    "8 {} {} {} {} {} {} {} {}",
                    pid(i, j, k),
                    pid(i + 1, j, k),
                    pid(i + 1, j + 1, k),
                    pid(i, j + 1, k),
                    pid(i, j, k + 1),
                    pid(i + 1, j, k + 1),
                    pid(i + 1, j + 1, k + 1),
                    pid(i, j + 1, k + 1)
                );
            }
        }
    }
    let _ = writeln!(s, "CELL_TYPES {nc}");
    for _ in 0..nc {
        let _ = writeln!(s, "12");
    }
    let _ = writeln!(s, "CELL_DATA {nc}\nVECTORS B double");
    for v in cell_averages(cx, &state.b) {
        let _ = writeln!(s, "{} {} {}", format_float(v[0]), format_float(v[1]), format_float(v[2]));
    }
    std::fs::write(&path, s).map_err(io_err(&path))?;
    Ok(path)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Boundary,
    MaxLength,
    Stagnation,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::Boundary => "boundary",
            Termination::MaxLength => "max_length",
            Termination::Stagnation => "stagnation",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    pub seed: usize,
    pub points: Vec<Vec3>,
    /// |B| of the reconstruction at each point.
    pub strength: Vec<f64>,
    pub termination: Termination,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Traces {
    pub lines: Vec<Polyline>,
    /// Seeds that were outside the domain.
    pub skipped: Vec<usize>,
}

/// Per-axis linear reconstruction of a face field inside each cell.
pub struct FaceReconstruction<'a> {
    mesh: &'a BoxMesh,
    density: Vec<f64>,
}

impl<'a> FaceReconstruction<'a> {
    pub fn new(cx: &'a DeRhamComplex, b: &FieldVec) -> Result<Self, DiagError> {
        if b.space != SpaceKind::Face {
            return Err(DiagError::Unsupported(format!("tracing needs a face field, got {}", b.space.name())));
        }
        let mesh = cx.mesh();
        let h = mesh.spacing();
        let mut density = cx.free_map(SpaceKind::Face).expand(&b.coeffs);
        for (g, d) in density.iter_mut().enumerate() {
            let a = mesh.entity(EntityFamily::Faces, g).kind.axis().unwrap();
            *d /= h[(a + 1) % 3] * h[(a + 2) % 3];
        }
        Ok(Self { mesh, density })
    }

    pub fn eval(&self, p: Vec3) -> Vec3 {
        let ([i, j, k], s) = self.mesh.locate(p);
        [0, 1, 2].map(|a| {
            let kind = EntityKind::FACES[a];
            let mut hi = [i, j, k];
            hi[a] += 1;
            let lo = self.density[self.mesh.global_index(kind, i, j, k)];
            let up = self.density[self.mesh.global_index(kind, hi[0], hi[1], hi[2])];
            // outside the box the boundary value is continued
            let s = s[a].clamp(0.0, 1.0);
            (1.0 - s) * lo + s * up
        })
    }
}

fn norm3(v: Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

const STAGNATION: f64 = 1e-12;

/// RK4 on the unit direction field with fixed arclength `step_len` (default `h_min/4`).
pub fn trace_fieldlines(
    cx: &DeRhamComplex,
    b: &FieldVec,
    seeds: &[Vec3],
    step_len: Option<f64>,
    max_len: f64,
) -> Result<Traces, DiagError> {
    let rec = FaceReconstruction::new(cx, b)?;
    let mesh = cx.mesh();
    let step = step_len.unwrap_or(0.25 * mesh.h_min());
    if !(step > 0.0) {
        return Err(DiagError::Unsupported(format!("step length must be positive, got {step}")));
    }
    let ext = mesh.extents();
    let periodic = mesh.periodic_z();
    let wrap = |mut p: Vec3| {
        if periodic {
            let (lo, hi) = ext[2];
            p[2] = lo + (p[2] - lo).rem_euclid(hi - lo);
        }
        p
    };
    let inside = |p: Vec3| (0..3).all(|a| (a == 2 && periodic) || (p[a] >= ext[a].0 && p[a] <= ext[a].1));
    let dir = |p: Vec3| {
        let v = rec.eval(wrap(p));
        let n = norm3(v);
        if n < STAGNATION {
            None
        } else {
            Some(v.map(|c| c / n))
        }
    };
    let mut traces = Traces { lines: Vec::new(), skipped: Vec::new() };
    for (sid, &seed) in seeds.iter().enumerate() {
        if !inside(seed) || !seed.iter().all(|c| c.is_finite()) {
            traces.skipped.push(sid);
            continue;
        }
        let mut p = wrap(seed);
        let mut pts = vec![p];
        let mut strength = vec![norm3(rec.eval(p))];
        let mut len = 0.0;
        let termination = loop {
            if len >= max_len {
                break Termination::MaxLength;
            }
            let hs = step.min(max_len - len);
            let add = |p: Vec3, k: Vec3, f: f64| [p[0] + f * k[0], p[1] + f * k[1], p[2] + f * k[2]];
            let Some(k1) = dir(p) else { break Termination::Stagnation };
            let Some(k2) = dir(add(p, k1, 0.5 * hs)) else { break Termination::Stagnation };
            let Some(k3) = dir(add(p, k2, 0.5 * hs)) else { break Termination::Stagnation };
            let Some(k4) = dir(add(p, k3, hs)) else { break Termination::Stagnation };
            let q = [0, 1, 2].map(|a| p[a] + hs / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]));
            if !inside(q) {
                // clip the chord at the first boundary plane it crosses
                let mut frac: f64 = 1.0;
                for a in 0..3 {
                    if a == 2 && periodic {
                        continue;
                    }
                    let d = q[a] - p[a];
                    if q[a] < ext[a].0 {
                        frac = frac.min((ext[a].0 - p[a]) / d);
                    } else if q[a] > ext[a].1 {
                        frac = frac.min((ext[a].1 - p[a]) / d);
                    }
                }
                let e = wrap([0, 1, 2].map(|a| p[a] + frac * (q[a] - p[a])));
                pts.push(e);
                strength.push(norm3(rec.eval(e)));
                break Termination::Boundary;
            }
            p = wrap(q);
            len += hs;
            pts.push(p);
            strength.push(norm3(rec.eval(p)));
        };
        traces.lines.push(Polyline { seed: sid, points: pts, strength, termination });
    }
    Ok(traces)
}

/// Legacy ASCII VTK polydata; lines are split where they wrap through a periodic direction.
pub fn write_vtk_polylines(lines: &[Polyline], max_jump: f64, path: &Path) -> Result<(), DiagError> {
    let mut pieces: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut pts: Vec<(Vec3, f64)> = Vec::new();
    for l in lines {
        let mut cur = Vec::new();
        for (i, (&p, &s)) in l.points.iter().zip(&l.strength).enumerate() {
            if i > 0 {
                let q = l.points[i - 1];
                if norm3([p[0] - q[0], p[1] - q[1], p[2] - q[2]]) > max_jump && !cur.is_empty() {
                    pieces.push((l.seed, std::mem::take(&mut cur)));
                }
            }
            cur.push(pts.len());
            pts.push((p, s));
        }
        if !cur.is_empty() {
            pieces.push((l.seed, cur));
        }
    }
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\nfield lines\nASCII\nDATASET POLYDATA");
    let _ = writeln!(s, "POINTS {} double", pts.len());
    for (p, _) in &pts {
        let _ = writeln!(s, "{} {} {}", format_float(p[0]), format_float(p[1]), format_float(p[2]));
    }
    let size: usize = pieces.iter().map(|(_, c)| c.len() + 1).sum();
    let _ = writeln!(s, "LINES {} {size}", pieces.len());
    for (_, c) in &pieces {
        let idx: Vec<String> = c.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(s, "{} {}", c.len(), idx.join(" "));
    }
    let _ = writeln!(s, "CELL_DATA {}\nSCALARS seed int 1\nLOOKUP_TABLE default", pieces.len());
    for (seed, _) in &pieces {
        let _ = writeln!(s, "{seed}");
    }
    let _ = writeln!(s, "POINT_DATA {}\nSCALARS strength double 1\nLOOKUP_TABLE default", pts.len());
    for (_, v) in &pts {
        let _ = writeln!(s, "{}", format_float(*v));
    }
    std::fs::write(path, s).map_err(io_err(path))
}

/// Reads whitespace-separated seed triples, one per line; `#` starts a comment.
pub fn read_seeds(path: &Path) -> Result<Vec<Vec3>, DiagError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut seeds = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| DiagError::Parse { path: path.to_path_buf(), line: i + 1, msg: format!("{e}") })?;
        if v.len() != 3 {
            return Err(DiagError::Parse { path: path.to_path_buf(), line: i + 1, msg: "expected three coordinates".into() });
        }
        seeds.push([v[0], v[1], v[2]]);
    }
    Ok(seeds)
}

fn mesh_descriptor(mesh: &BoxMesh) -> String {
    let e = mesh.extents();
    let r = mesh.resolution();
    format!(
        "{} {} {} {} {} {} {} {} {} {}",
        format_float(e[0].0),
        format_float(e[0].1),
        format_float(e[1].0),
        format_float(e[1].1),
        format_float(e[2].0),
        format_float(e[2].1),
        r[0],
        r[1],
        r[2],
        u8::from(mesh.periodic_z())
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub mesh: BoxMesh,
    pub state: SchemeState,
}

/// Text preamble terminated by `data`, then the coefficients as little-endian f64.
pub fn checkpoint_save(mesh: &BoxMesh, state: &SchemeState, path: &Path) -> Result<(), DiagError> {
    let mut head = String::new();
    let _ = writeln!(head, "{CHECKPOINT_MAGIC}");
    let _ = writeln!(head, "scheme {}", state.scheme.name());
    let _ = writeln!(head, "space {}", state.b.space.name());
    let _ = writeln!(head, "mesh {}", mesh_descriptor(mesh));
    let _ = writeln!(head, "t {}", format_float(state.t));
    let _ = writeln!(head, "step {}", state.step);
    let _ = writeln!(head, "n {}", state.b.len());
    let _ = writeln!(head, "data");
    let mut buf = head.into_bytes();
    for c in &state.b.coeffs {
        buf.extend_from_slice(&c.to_le_bytes());
    }
    // write-then-rename so an interrupted save never leaves a torn checkpoint
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, buf).map_err(io_err(&tmp))?;
    std::fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn checkpoint_load(path: &Path) -> Result<Checkpoint, DiagError> {
    let mut r = BufReader::new(File::open(path).map_err(io_err(path))?);
    let perr = |line: usize, msg: String| DiagError::Parse { path: path.to_path_buf(), line, msg };
    let mut fields = std::collections::HashMap::new();
    let mut line = String::new();
    let mut lineno = 0;
    loop {
        line.clear();
        lineno += 1;
        if r.read_line(&mut line).map_err(io_err(path))? == 0 {
            return Err(perr(lineno, "unexpected end of header".into()));
        }
        let l = line.trim_end();
        if lineno == 1 {
            if l != CHECKPOINT_MAGIC {
                return Err(DiagError::Mismatch(format!("format version {l:?}, expected {CHECKPOINT_MAGIC}")));
            }
            continue;
        }
        if l == "data" {
            break;
        }
        let (k, v) = l.split_once(' ').ok_or_else(|| perr(lineno, format!("malformed header line {l:?}")))?;
        fields.insert(k.to_string(), v.to_string());
    }
    let get = |k: &str| fields.get(k).ok_or_else(|| perr(lineno, format!("missing header field {k}")));
    let scheme =
        SchemeKind::from_name(get("scheme")?).ok_or_else(|| perr(lineno, format!("unknown scheme {}", fields["scheme"])))?;
    let space = SpaceKind::ALL
        .into_iter()
        .find(|s| s.name() == get("space").map(String::as_str).unwrap_or(""))
        .ok_or_else(|| perr(lineno, "unknown space".into()))?;
    let m: Vec<&str> = get("mesh")?.split(' ').collect();
    if m.len() != 10 {
        return Err(perr(lineno, "malformed mesh descriptor".into()));
    }
    let fnum = |s: &str| s.parse::<f64>().map_err(|e| perr(lineno, format!("{e}")));
    let unum = |s: &str| s.parse::<usize>().map_err(|e| perr(lineno, format!("{e}")));
    let mesh = BoxMesh::new(
        [(fnum(m[0])?, fnum(m[1])?), (fnum(m[2])?, fnum(m[3])?), (fnum(m[4])?, fnum(m[5])?)],
        [unum(m[6])?, unum(m[7])?, unum(m[8])?],
        m[9] == "1",
    )
    .map_err(|e| perr(lineno, format!("{e}")))?;
    let t = fnum(get("t")?)?;
    let step = get("step")?.parse::<u64>().map_err(|e| perr(lineno, format!("{e}")))?;
    let n = unum(get("n")?)?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(io_err(path))?;
    if bytes.len() != 8 * n {
        return Err(DiagError::Mismatch(format!("expected {} data bytes, found {}", 8 * n, bytes.len())));
    }
    let coeffs = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(Checkpoint { mesh, state: SchemeState { t, step, b: FieldVec::new(space, coeffs), scheme } })
}

/// Loads a checkpoint and checks that it belongs to `cx`'s mesh.
pub fn checkpoint_load_for(cx: &DeRhamComplex, path: &Path) -> Result<SchemeState, DiagError> {
    let ck = checkpoint_load(path)?;
    if ck.mesh != *cx.mesh() {
        return Err(DiagError::Mismatch(format!(
            "checkpoint mesh [{}] differs from [{}]",
            mesh_descriptor(&ck.mesh),
            mesh_descriptor(cx.mesh())
        )));
    }
    if ck.state.b.space != ck.state.scheme.field_space() || ck.state.b.len() != cx.dim(ck.state.b.space) {
        return Err(DiagError::Mismatch("field space or length does not match the scheme".into()));
    }
    Ok(ck.state)
}
