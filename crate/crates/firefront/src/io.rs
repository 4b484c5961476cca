//! Columnar text files and run manifests.
//!
//! Datasets and trajectories share one record format: a header row
//! (`x[,y],t,T,E,X,tag`), one record per line, decimal text values.
//! Floats are written with Rust's shortest round-trip formatting, so files
//! are byte-reproducible and parse back exactly. A TOML manifest next to
//! the data records the grid, sampling, parameters, constants and seeds.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdsolver::{CoordMap, Dataset, Grid, Record, Sampling, Tag, Trajectory};
use crate::model::{ParamSeries, PhysConstants, PhysParams, StatePoint};
use crate::optim::TraceRow;

pub const DATASET_FILE: &str = "dataset.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const SERIES_FILE: &str = "theta_series.csv";
pub const TRACE_FILE: &str = "trace.csv";

/// Gaussian-process noise settings as recorded in manifests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseInfo {
    pub delta: f64,
    pub zeta: f64,
    pub seed: u64,
}

/// Provenance for a trajectory or dataset output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub kind: String,
    pub constants_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub records: Option<usize>,
    pub grid: Grid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<Sampling>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<CoordMap>,
    pub theta_nominal: PhysParams,
    pub constants: PhysConstants,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseInfo>,
}

fn records_header(dim: usize) -> &'static str {
    if dim == 1 {
        "x,t,T,E,X,tag"
    } else {
        "x,y,t,T,E,X,tag"
    }
}

fn write_records<'a>(
    path: &Path,
    dim: usize,
    rows: impl Iterator<Item = &'a Record>,
) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", records_header(dim))?;
    for r in rows {
        if dim == 1 {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.x,
                r.t,
                r.state.temp,
                r.state.endo,
                r.state.exo,
                r.tag.as_str()
            )?;
        } else {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.x,
                r.y,
                r.t,
                r.state.temp,
                r.state.endo,
                r.state.exo,
                r.tag.as_str()
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Write `dataset.csv` plus `manifest.toml` into `dir`.
pub fn write_dataset(dir: &Path, ds: &Dataset, manifest: &RunManifest) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_records(&dir.join(DATASET_FILE), ds.dim, ds.records.iter())?;
    write_manifest(&dir.join(MANIFEST_FILE), manifest)
}

/// Write `trajectory.csv` plus `manifest.toml` into `dir`. Trajectories
/// use the same record format with every grid node at every time level.
pub fn write_trajectory(dir: &Path, traj: &Trajectory, manifest: &RunManifest) -> Result<()> {
    fs::create_dir_all(dir)?;
    let grid = &traj.grid;
    let path = dir.join(TRAJECTORY_FILE);
    let mut w = BufWriter::new(fs::File::create(&path)?);
    writeln!(w, "{}", records_header(grid.dim))?;
    for (level, frame) in traj.frames.iter().enumerate() {
        let t = grid.t_at(level);
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let s = frame.at(iy * grid.nx + ix);
                let tag = record_tag(grid, ix, iy, level);
                if grid.dim == 1 {
                    writeln!(w, "{},{},{},{},{},{}", grid.x_at(ix), t, s.temp, s.endo, s.exo, tag)?;
                } else {
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{}",
                        grid.x_at(ix),
                        grid.y_at(iy),
                        t,
                        s.temp,
                        s.endo,
                        s.exo,
                        tag
                    )?;
                }
            }
        }
    }
    w.flush()?;
    write_manifest(&dir.join(MANIFEST_FILE), manifest)
}

fn record_tag(grid: &Grid, ix: usize, iy: usize, level: usize) -> &'static str {
    let on_boundary = if grid.dim == 1 {
        ix == 0 || ix == grid.nx - 1
    } else {
        ix == 0 || ix == grid.nx - 1 || iy == 0 || iy == grid.ny - 1
    };
    if on_boundary {
        Tag::Boundary.as_str()
    } else if level == 0 {
        Tag::Initial.as_str()
    } else {
        Tag::Interior.as_str()
    }
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<()> {
    let text = toml::to_string_pretty(manifest)
        .map_err(|e| Error::Config(format!("manifest serialization failed: {e}")))?;
    fs::write(path, text)?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(path)?;
    Ok(toml::from_str(&text)?)
}

/// Resolve a dataset location: either a directory holding `dataset.csv`
/// and `manifest.toml`, or the CSV path itself with the manifest beside it.
fn dataset_paths(path: &Path) -> (PathBuf, PathBuf) {
    if path.is_dir() {
        (path.join(DATASET_FILE), path.join(MANIFEST_FILE))
    } else {
        let manifest = path.parent().unwrap_or(Path::new(".")).join(MANIFEST_FILE);
        (path.to_path_buf(), manifest)
    }
}

/// Read a dataset and its manifest back.
pub fn read_dataset(path: &Path) -> Result<(Dataset, RunManifest)> {
    let (csv_path, manifest_path) = dataset_paths(path);
    let manifest = read_manifest(&manifest_path)?;
    let file = fs::File::open(&csv_path)?;
    let display = csv_path.display().to_string();
    let reader = BufReader::new(file);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse {
            path: display.clone(),
            line: 1,
            message: "empty file".into(),
        })?
        .map_err(Error::Io)?;
    let dim = match header.trim() {
        h if h == records_header(1) => 1,
        h if h == records_header(2) => 2,
        h => {
            return Err(Error::Parse {
                path: display,
                line: 1,
                message: format!("unrecognized header '{h}'"),
            })
        }
    };
    let mut records = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line.map_err(Error::Io)?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        let expected = if dim == 1 { 6 } else { 7 };
        if parts.len() != expected {
            return Err(Error::Parse {
                path: display,
                line: line_no,
                message: format!("expected {expected} fields, found {}", parts.len()),
            });
        }
        let parse = |s: &str, what: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|_| Error::Parse {
                path: display.clone(),
                line: line_no,
                message: format!("invalid {what} value '{s}'"),
            })
        };
        let (x, y, rest) = if dim == 1 {
            (parse(parts[0], "x")?, 0.0, &parts[1..])
        } else {
            (parse(parts[0], "x")?, parse(parts[1], "y")?, &parts[2..])
        };
        let tag = Tag::parse(rest[4].trim()).ok_or_else(|| Error::Parse {
            path: display.clone(),
            line: line_no,
            message: format!("unknown tag '{}'", rest[4]),
        })?;
        records.push(Record {
            x,
            y,
            t: parse(rest[0], "t")?,
            state: StatePoint {
                temp: parse(rest[1], "T")?,
                endo: parse(rest[2], "E")?,
                exo: parse(rest[3], "X")?,
            },
            tag,
        });
    }
    let sampling = manifest
        .sampling
        .ok_or_else(|| Error::Config("manifest lacks a [sampling] section".into()))?;
    let norm = manifest
        .normalization
        .ok_or_else(|| Error::Config("manifest lacks a [normalization] section".into()))?;
    Ok((
        Dataset { dim, spacing: sampling, norm, records },
        RunManifest { sampling: Some(sampling), normalization: Some(norm), ..manifest },
    ))
}

/// Parameter time series: `t` column then one column per component.
pub fn write_series(path: &Path, series: &ParamSeries) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    let names = PhysParams::component_names(series.dim);
    writeln!(w, "t,{}", names.join(","))?;
    for (t, row) in series.times.iter().zip(&series.values) {
        write!(w, "{t}")?;
        for v in row {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Training trace: iteration, loss terms, then theta components.
pub fn write_trace(path: &Path, rows: &[TraceRow], dim: usize) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    let names = PhysParams::component_names(dim);
    writeln!(w, "iteration,loss,loss_data,loss_pde,loss_bi,{}", names.join(","))?;
    for r in rows {
        write!(
            w,
            "{},{},{},{},{}",
            r.iteration, r.loss.total, r.loss.data, r.loss.pde, r.loss.bi
        )?;
        for v in &r.theta {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Checkpoint manifest accompanying a flat parameter dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub widths: Vec<usize>,
    pub init_seed: u64,
    pub iteration: u64,
    pub theta: PhysParams,
}

/// Write `checkpoint.toml` + `params.csv` (one flat value per line).
pub fn write_checkpoint(
    dir: &Path,
    manifest: &CheckpointManifest,
    flat_params: &[f64],
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let text = toml::to_string_pretty(manifest)
        .map_err(|e| Error::Config(format!("checkpoint serialization failed: {e}")))?;
    fs::write(dir.join("checkpoint.toml"), text)?;
    let mut w = BufWriter::new(fs::File::create(dir.join("params.csv"))?);
    writeln!(w, "value")?;
    for v in flat_params {
        writeln!(w, "{v}")?;
    }
    w.flush()?;
    Ok(())
}
