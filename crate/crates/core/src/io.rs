//! File formats: snapshot and profile CSVs, run metadata, certificates.
//!
//! Numbers are written with 17 significant digits so that a write/read
//! round trip is exact.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entropy::CertificateReport;
use crate::eos::PressureLaw;
use crate::fvm::{FieldState, Grid, Perturbation, RunSummary, SimConfig};
use crate::riemann::RiemannData;

pub const FIELD_HEADER: [&str; 5] = ["x1", "x2", "rho", "m1", "m2"];
pub const PROFILE_HEADER: [&str; 4] = ["x1", "rho", "u1", "u2"];
pub const CERTIFICATE_HEADER: [&str; 5] =
    ["t", "total_relative_entropy", "rei2_rhs", "energy_slack", "one_sided_min_eig"];
pub const META_FILE: &str = "meta.json";
pub const SNAPSHOT_DIR: &str = "snapshots";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {message}")]
    File { path: String, message: String },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error("missing snapshot {0}")]
    MissingSnapshot(String),
}

fn file_err(path: &Path, e: impl std::fmt::Display) -> IoError {
    IoError::File { path: path.display().to_string(), message: e.to_string() }
}

fn format_err(path: &Path, message: impl Into<String>) -> IoError {
    IoError::Format { path: path.display().to_string(), message: message.into() }
}

/// 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<(), IoError>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let file = File::create(path).map_err(|e| file_err(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file));
    w.write_record(header).map_err(|e| file_err(path, e))?;
    for row in rows {
        w.write_record(row.iter().map(|&x| fmt_f64(x))).map_err(|e| file_err(path, e))?;
    }
    w.flush().map_err(|e| file_err(path, e))
}

fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>, IoError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| file_err(path, e))?;
    let found = r.headers().map_err(|e| format_err(path, e.to_string()))?.clone();
    if found.iter().collect::<Vec<_>>() != header {
        return Err(format_err(path, format!("expected header {}", header.join(","))));
    }
    let mut rows = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| format_err(path, e.to_string()))?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| format_err(path, format!("row {}: {e}", n + 2)))?;
        rows.push(row);
    }
    Ok(rows)
}

/// Writes a field as `x1,x2,rho,m1,m2`, one row per cell in grid order.
pub fn write_field_csv(path: &Path, field: &FieldState) -> Result<(), IoError> {
    let g = field.grid;
    let rows = (0..g.nx1).flat_map(move |i| {
        (0..g.nx2).map(move |j| {
            let k = g.index(i, j);
            vec![g.x1_center(i), g.x2_center(j), field.rho[k], field.m1[k], field.m2[k]]
        })
    });
    write_rows(path, &FIELD_HEADER, rows)
}

/// Reads a field written by [`write_field_csv`] and checks that its cell
/// centers match `grid`.
pub fn read_field_csv(path: &Path, grid: &Grid, t: f64) -> Result<FieldState, IoError> {
    let rows = read_rows(path, &FIELD_HEADER)?;
    if rows.len() != grid.cells() {
        return Err(format_err(path, format!("{} rows for a grid of {} cells", rows.len(), grid.cells())));
    }
    let mut field = FieldState::zeros(*grid, t);
    let tol = 1e-9 * grid.a.max(1.0);
    for i in 0..grid.nx1 {
        for j in 0..grid.nx2 {
            let k = grid.index(i, j);
            let row = &rows[k];
            if (row[0] - grid.x1_center(i)).abs() > tol || (row[1] - grid.x2_center(j)).abs() > tol {
                return Err(format_err(path, format!("row {} is not cell ({i}, {j})", k + 2)));
            }
            if !(row[2] >= 0.0) {
                return Err(format_err(path, format!("negative density in row {}", k + 2)));
            }
            field.rho[k] = row[2];
            field.m1[k] = row[3];
            field.m2[k] = row[4];
        }
    }
    Ok(field)
}

/// One sample of an exact profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRow {
    pub x1: f64,
    pub rho: f64,
    pub u1: f64,
    pub u2: f64,
}

pub fn write_profile_csv(path: &Path, rows: &[ProfileRow]) -> Result<(), IoError> {
    write_rows(path, &PROFILE_HEADER, rows.iter().map(|r| vec![r.x1, r.rho, r.u1, r.u2]))
}

pub fn read_profile_csv(path: &Path) -> Result<Vec<ProfileRow>, IoError> {
    Ok(read_rows(path, &PROFILE_HEADER)?
        .into_iter()
        .map(|r| ProfileRow { x1: r[0], rho: r[1], u1: r[2], u2: r[3] })
        .collect())
}

pub fn write_certificate_csv(path: &Path, report: &CertificateReport) -> Result<(), IoError> {
    let rows = (0..report.times.len()).map(|k| {
        vec![
            report.times[k],
            report.total_relative_entropy[k],
            report.rei2_rhs[k],
            report.energy_slack[k],
            report.one_sided_min_eig[k],
        ]
    });
    write_rows(path, &CERTIFICATE_HEADER, rows)
}

pub fn read_certificate_csv(path: &Path) -> Result<Vec<Vec<f64>>, IoError> {
    read_rows(path, &CERTIFICATE_HEADER)
}

/// Contents of `meta.json` next to a run's snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub schema: u32,
    pub grid: Grid,
    pub law: PressureLaw,
    pub data: RiemannData,
    pub cfl: f64,
    pub t_end: f64,
    pub snapshot_every: f64,
    pub perturbation: Option<Perturbation>,
    pub snapshot_times: Vec<f64>,
    /// Paths relative to the run directory.
    pub snapshot_files: Vec<PathBuf>,
    pub dt_history: Vec<f64>,
    pub boundary_outflow: Vec<[f64; 3]>,
    pub max_boundary_deviation: f64,
}

impl RunMeta {
    pub fn new(config: &SimConfig, summary: &RunSummary) -> Self {
        RunMeta {
            schema: crate::config::SCHEMA_VERSION,
            grid: config.grid,
            law: config.law.clone(),
            data: config.data,
            cfl: config.cfl,
            t_end: config.t_end,
            snapshot_every: config.snapshot_every,
            perturbation: config.perturbation,
            snapshot_times: summary.snapshot_times.clone(),
            snapshot_files: (0..summary.snapshot_times.len()).map(snapshot_file).collect(),
            dt_history: summary.dt_history.clone(),
            boundary_outflow: summary.boundary_outflow.clone(),
            max_boundary_deviation: summary.max_boundary_deviation,
        }
    }

    pub fn dt_max(&self) -> f64 {
        self.dt_history.iter().copied().fold(0.0, f64::max)
    }
}

/// `snapshots/t_<index>.csv`.
pub fn snapshot_file(index: usize) -> PathBuf {
    Path::new(SNAPSHOT_DIR).join(format!("t_{index:04}.csv"))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let file = File::create(path).map_err(|e| file_err(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| file_err(path, e))?;
    w.write_all(b"\n").map_err(|e| file_err(path, e))?;
    w.flush().map_err(|e| file_err(path, e))
}

pub fn read_meta(dir: &Path) -> Result<RunMeta, IoError> {
    let path = dir.join(META_FILE);
    if !path.exists() {
        return Err(IoError::MissingSnapshot(path.display().to_string()));
    }
    let text = std::fs::read_to_string(&path).map_err(|e| file_err(&path, e))?;
    serde_json::from_str(&text).map_err(|e| format_err(&path, e.to_string()))
}

/// Loads every snapshot listed in `meta.json` under `dir`.
pub fn read_run(dir: &Path) -> Result<(RunMeta, Vec<FieldState>), IoError> {
    let meta = read_meta(dir)?;
    if meta.snapshot_files.len() != meta.snapshot_times.len() || meta.snapshot_files.is_empty() {
        return Err(format_err(&dir.join(META_FILE), "snapshot list and times disagree"));
    }
    let mut snapshots = Vec::with_capacity(meta.snapshot_files.len());
    for (file, &t) in meta.snapshot_files.iter().zip(&meta.snapshot_times) {
        let path = dir.join(file);
        if !path.exists() {
            return Err(IoError::MissingSnapshot(path.display().to_string()));
        }
        snapshots.push(read_field_csv(&path, &meta.grid, t)?);
    }
    Ok((meta, snapshots))
}
