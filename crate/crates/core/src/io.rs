//! CSV/JSON persistence for trajectories and check reports.
//!
//! Formats (all diff-able, no binary deps):
//!
//! - `time_series.csv`: one row per recorded snapshot with the fixed header
//!   `t,mass,min,max,dt,newton_iters,cum_inflow_outer,cum_inflow_inner`;
//! - `grid.csv`: the cell-face radii, one per row under the header `face`;
//! - `snapshots/snap_NNNNN.csv`: rows `t,r,u` (radial) or `t,x,y,u` (planar);
//! - `report.json`: `{ "schema_version": 1, "checks": [CheckReport...] }`.
//!
//! Floats in CSV carry 17 significant digits, so read-back reproduces values
//! bit-exactly; JSON floats use the shortest exact round-trip encoding.

use crate::error::SolverError;
use crate::planar::{MaskedGrid, Trajectory2d};
use crate::radial::{RadialField, RadialGrid, StepDiag, Trajectory};
use crate::verify::CheckReport;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {file} line {line}: {what}")]
    Parse {
        file: String,
        line: usize,
        what: String,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io { path: path.display().to_string(), source }
}

/// 17-significant-digit float encoding; round-trips bit-exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(file: &Path, line: usize, s: &str) -> Result<f64, IoError> {
    s.parse().map_err(|_| IoError::Parse {
        file: file.display().to_string(),
        line,
        what: format!("bad float {s:?}"),
    })
}

const TIME_SERIES_HEADER: &str = "t,mass,min,max,dt,newton_iters,cum_inflow_outer,cum_inflow_inner";

/// Indices of the snapshots to persist: everything, or t = 0 plus specific times.
fn recorded_indices(traj_times: &[f64], record: Option<&[f64]>) -> Vec<usize> {
    match record {
        None => (0..traj_times.len()).collect(),
        Some(times) => {
            let mut idx = vec![0usize];
            for &t in times {
                if let Some(k) = traj_times
                    .iter()
                    .position(|&tt| (tt - t).abs() <= 1e-12 * t.abs().max(1.0))
                {
                    if !idx.contains(&k) {
                        idx.push(k);
                    }
                }
            }
            idx.sort_unstable();
            idx
        }
    }
}

fn write_time_series(
    dir: &Path,
    times: &[f64],
    steps: &[StepDiag],
    indices: &[usize],
    mass0: f64,
    min0: f64,
    max0: f64,
) -> Result<(), IoError> {
    let path = dir.join("time_series.csv");
    let mut out = String::from(TIME_SERIES_HEADER);
    out.push('\n');
    for &k in indices {
        if k == 0 {
            out.push_str(&format!(
                "{},{},{},{},{},0,{},{}\n",
                fmt_f64(0.0),
                fmt_f64(mass0),
                fmt_f64(min0),
                fmt_f64(max0),
                fmt_f64(0.0),
                fmt_f64(0.0),
                fmt_f64(0.0)
            ));
        } else {
            let s = &steps[k - 1];
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                fmt_f64(times[k]),
                fmt_f64(s.mass),
                fmt_f64(s.min_u),
                fmt_f64(s.max_u),
                fmt_f64(s.dt),
                s.newton_iters,
                fmt_f64(s.cum_inflow_outer),
                fmt_f64(s.cum_inflow_inner)
            ));
        }
    }
    fs::write(&path, out).map_err(io_err(&path))
}

/// Persist a radial trajectory: time series, grid faces, and snapshot files.
/// `record = None` writes every accepted step; otherwise t = 0 and the given
/// times (which must be snapshot times of the trajectory).
pub fn write_trajectory(
    dir: &Path,
    traj: &Trajectory,
    grid: &RadialGrid,
    record: Option<&[f64]>,
) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let snap_dir = dir.join("snapshots");
    fs::create_dir_all(&snap_dir).map_err(io_err(&snap_dir))?;

    let path = dir.join("grid.csv");
    let mut out = String::from("face\n");
    for f in &grid.faces {
        out.push_str(&fmt_f64(*f));
        out.push('\n');
    }
    fs::write(&path, out).map_err(io_err(&path))?;

    let times: Vec<f64> = traj.fields.iter().map(|f| f.time).collect();
    let indices = recorded_indices(&times, record);
    let m0 = crate::radial::mass(&traj.fields[0], grid)?;
    write_time_series(
        dir,
        &times,
        &traj.steps,
        &indices,
        m0,
        traj.fields[0].min(),
        traj.fields[0].max(),
    )?;

    for (snap_no, &k) in indices.iter().enumerate() {
        let f = &traj.fields[k];
        let path = snap_dir.join(format!("snap_{snap_no:05}.csv"));
        let mut out = String::from("t,r,u\n");
        for (c, &u) in f.values.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{}\n",
                fmt_f64(f.time),
                fmt_f64(grid.centers[c]),
                fmt_f64(u)
            ));
        }
        fs::write(&path, out).map_err(io_err(&path))?;
    }
    Ok(())
}

/// Persist a planar trajectory (time series and x,y snapshots).
pub fn write_trajectory2d(
    dir: &Path,
    traj: &Trajectory2d,
    grid: &MaskedGrid,
    record: Option<&[f64]>,
) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let snap_dir = dir.join("snapshots");
    fs::create_dir_all(&snap_dir).map_err(io_err(&snap_dir))?;
    let times: Vec<f64> = traj.fields.iter().map(|f| f.time).collect();
    let indices = recorded_indices(&times, record);
    let m0 = crate::planar::mass2d(&traj.fields[0], grid)?;
    write_time_series(
        dir,
        &times,
        &traj.steps,
        &indices,
        m0,
        traj.fields[0].min(),
        traj.fields[0].max(),
    )?;
    for (snap_no, &k) in indices.iter().enumerate() {
        let f = &traj.fields[k];
        let path = snap_dir.join(format!("snap_{snap_no:05}.csv"));
        let mut out = String::from("t,x,y,u\n");
        for (c, &u) in f.values.iter().enumerate() {
            let (x, y) = grid.center(c);
            out.push_str(&format!(
                "{},{},{},{}\n",
                fmt_f64(f.time),
                fmt_f64(x),
                fmt_f64(y),
                fmt_f64(u)
            ));
        }
        fs::write(&path, out).map_err(io_err(&path))?;
    }
    Ok(())
}

/// Machine-readable report envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: u32,
    pub checks: Vec<CheckReport>,
}

pub fn write_report(path: &Path, checks: &[CheckReport]) -> Result<(), IoError> {
    let file = ReportFile { schema_version: 1, checks: checks.to_vec() };
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    serde_json::to_writer_pretty(&mut f, &file)?;
    f.write_all(b"\n").map_err(io_err(path))?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<ReportFile, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(serde_json::from_str(&text)?)
}

/// One parsed row of `time_series.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSeriesRow {
    pub t: f64,
    pub mass: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub dt: f64,
    pub newton_iters: u32,
    pub cum_inflow_outer: f64,
    pub cum_inflow_inner: f64,
}

/// Parse a stored time series (any run type).
pub fn read_time_series(dir: &Path) -> Result<Vec<TimeSeriesRow>, IoError> {
    let path = dir.join("time_series.csv");
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line.trim() != TIME_SERIES_HEADER {
                return Err(IoError::Parse {
                    file: path.display().to_string(),
                    line: 1,
                    what: format!("unexpected header {line:?}"),
                });
            }
            continue;
        }
        let cols: Vec<&str> = line.trim().split(',').collect();
        if cols.len() != 8 {
            return Err(IoError::Parse {
                file: path.display().to_string(),
                line: i + 1,
                what: format!("expected 8 columns, got {}", cols.len()),
            });
        }
        rows.push(TimeSeriesRow {
            t: parse_f64(&path, i + 1, cols[0])?,
            mass: parse_f64(&path, i + 1, cols[1])?,
            min_u: parse_f64(&path, i + 1, cols[2])?,
            max_u: parse_f64(&path, i + 1, cols[3])?,
            dt: parse_f64(&path, i + 1, cols[4])?,
            newton_iters: cols[5].parse().map_err(|_| IoError::Parse {
                file: path.display().to_string(),
                line: i + 1,
                what: format!("bad iteration count {:?}", cols[5]),
            })?,
            cum_inflow_outer: parse_f64(&path, i + 1, cols[6])?,
            cum_inflow_inner: parse_f64(&path, i + 1, cols[7])?,
        });
    }
    Ok(rows)
}

/// Read back the face radii written by `write_trajectory`.
pub fn read_grid_faces(dir: &Path) -> Result<Vec<f64>, IoError> {
    let path = dir.join("grid.csv");
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let mut faces = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            continue;
        }
        faces.push(parse_f64(&path, i + 1, line.trim())?);
    }
    Ok(faces)
}

/// Reconstruct a radial trajectory from a run directory. Snapshot fields are
/// exact (17-digit round trip); per-step diagnostics come from the time
/// series (cumulative inflows are the stepper's own bookkeeping).
pub fn read_trajectory(dir: &Path, grid: &RadialGrid) -> Result<Trajectory, IoError> {
    let path = dir.join("time_series.csv");
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let mut steps = Vec::new();
    let mut row_times = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line.trim() != TIME_SERIES_HEADER {
                return Err(IoError::Parse {
                    file: path.display().to_string(),
                    line: 1,
                    what: format!("unexpected header {line:?}"),
                });
            }
            continue;
        }
        let cols: Vec<&str> = line.trim().split(',').collect();
        if cols.len() != 8 {
            return Err(IoError::Parse {
                file: path.display().to_string(),
                line: i + 1,
                what: format!("expected 8 columns, got {}", cols.len()),
            });
        }
        let t = parse_f64(&path, i + 1, cols[0])?;
        row_times.push(t);
        if t > 0.0 {
            steps.push(StepDiag {
                t,
                dt: parse_f64(&path, i + 1, cols[4])?,
                newton_iters: cols[5].parse().map_err(|_| IoError::Parse {
                    file: path.display().to_string(),
                    line: i + 1,
                    what: format!("bad iteration count {:?}", cols[5]),
                })?,
                mass: parse_f64(&path, i + 1, cols[1])?,
                min_u: parse_f64(&path, i + 1, cols[2])?,
                max_u: parse_f64(&path, i + 1, cols[3])?,
                cum_inflow_outer: parse_f64(&path, i + 1, cols[6])?,
                cum_inflow_inner: parse_f64(&path, i + 1, cols[7])?,
            });
        }
    }

    let snap_dir = dir.join("snapshots");
    let mut names: Vec<_> = fs::read_dir(&snap_dir)
        .map_err(io_err(&snap_dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|e| e == "csv").unwrap_or(false))
        .collect();
    names.sort();
    let mut fields = Vec::new();
    for path in names {
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let mut values = Vec::new();
        let mut time = 0.0;
        for (i, line) in text.lines().enumerate() {
            if i == 0 {
                continue;
            }
            let cols: Vec<&str> = line.trim().split(',').collect();
            if cols.len() != 3 {
                return Err(IoError::Parse {
                    file: path.display().to_string(),
                    line: i + 1,
                    what: format!("expected 3 columns, got {}", cols.len()),
                });
            }
            time = parse_f64(&path, i + 1, cols[0])?;
            values.push(parse_f64(&path, i + 1, cols[2])?);
        }
        if values.len() != grid.n_cells() {
            return Err(IoError::Solver(SolverError::SizeMismatch {
                expected: grid.n_cells(),
                got: values.len(),
            }));
        }
        fields.push(RadialField { values, time });
    }
    if fields.is_empty() {
        return Err(IoError::Parse {
            file: snap_dir.display().to_string(),
            line: 0,
            what: "no snapshot files".into(),
        });
    }
    Ok(Trajectory { fields, steps })
}
