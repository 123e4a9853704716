//! Run directories: ASCII field snapshots, CSV tables and a manifest.
//!
//! A run directory is written under an `INCOMPLETE` marker that is removed
//! only after `manifest.json` (with a SHA-256 of every artifact) is in
//! place, so an interrupted run is never mistaken for a finished one.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::sweep::SweepResult;

pub const MANIFEST: &str = "manifest.json";
pub const INCOMPLETE: &str = "INCOMPLETE";
pub const CONFIG_FILE: &str = "config.toml";
pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

/// Layout of a field on the staggered grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Staggering {
    Cell,
    XFace,
    YFace,
}

impl Staggering {
    fn shape(self, grid: &Grid) -> (usize, usize) {
        match self {
            Staggering::Cell => (grid.nx(), grid.ny()),
            Staggering::XFace => (grid.nx() + 1, grid.ny()),
            Staggering::YFace => (grid.nx(), grid.ny() + 1),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Staggering::Cell => "cell",
            Staggering::XFace => "xface",
            Staggering::YFace => "yface",
        }
    }
}

/// A field read back from a snapshot file.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub dimension: usize,
    pub extent: [f64; 4],
    pub h: f64,
    pub time: f64,
    pub field: String,
    pub staggering: Staggering,
    pub shape: (usize, usize),
    pub values: Vec<f64>,
}

/// Header lines followed by row-major values, one per line.
pub fn snapshot_text(grid: &Grid, time: f64, field: &str, staggering: Staggering, values: &[f64]) -> String {
    let o = grid.origin();
    let e = grid.extent();
    let (sx, sy) = staggering.shape(grid);
    let mut s = String::with_capacity(values.len() * 24 + 256);
    let _ = writeln!(s, "dimension {}", grid.dimension());
    let _ = writeln!(s, "extent {} {} {} {}", o[0], e[0], o[1], e[1]);
    let _ = writeln!(s, "h {}", grid.h());
    let _ = writeln!(s, "time {time}");
    let _ = writeln!(s, "field {field} {} {sx} {sy}", staggering.name());
    for v in values {
        let _ = writeln!(s, "{v:e}");
    }
    s
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingArtifact(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    let bad = |message: String| Error::MalformedArtifact {
        path: path.to_path_buf(),
        message,
    };
    let mut lines = text.lines();
    let mut header = |key: &str| -> Result<Vec<String>> {
        let line = lines.next().ok_or_else(|| bad(format!("missing header {key}")))?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(bad(format!("expected header {key}, found {line:?}")));
        }
        Ok(parts.map(str::to_string).collect())
    };
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number {s:?}")));
    let dim = header("dimension")?;
    let ext = header("extent")?;
    let h = header("h")?;
    let time = header("time")?;
    let field = header("field")?;
    if ext.len() != 4 || field.len() != 4 || dim.len() != 1 || h.len() != 1 || time.len() != 1 {
        return Err(bad("malformed header".into()));
    }
    let staggering = match field[1].as_str() {
        "cell" => Staggering::Cell,
        "xface" => Staggering::XFace,
        "yface" => Staggering::YFace,
        other => return Err(bad(format!("unknown staggering {other}"))),
    };
    let shape = (
        field[2].parse::<usize>().map_err(|_| bad("bad shape".into()))?,
        field[3].parse::<usize>().map_err(|_| bad("bad shape".into()))?,
    );
    let values = lines.map(|l| num(l.trim())).collect::<Result<Vec<f64>>>()?;
    if values.len() != shape.0 * shape.1 {
        return Err(bad(format!("expected {} values, found {}", shape.0 * shape.1, values.len())));
    }
    Ok(Snapshot {
        dimension: dim[0].parse().map_err(|_| bad("bad dimension".into()))?,
        extent: [num(&ext[0])?, num(&ext[1])?, num(&ext[2])?, num(&ext[3])?],
        h: num(&h[0])?,
        time: num(&time[0])?,
        field: field[0].clone(),
        staggering,
        shape,
        values,
    })
}

/// One artifact in the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub sha256: String,
    pub bytes: u64,
}

/// Snapshot files of one trajectory at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    /// `eps_<value>` or `reference`.
    pub run: String,
    pub eps: Option<f64>,
    pub index: usize,
    pub time: f64,
    pub files: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub eps: Vec<f64>,
    pub snapshots: Vec<SnapshotEntry>,
    /// Energy CSV per eps, keyed by run id.
    pub energy: BTreeMap<String, String>,
    pub artifacts: BTreeMap<String, ArtifactEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Indices of the snapshots written as files: `n` evenly spread, first and
/// last included (only the last when `n == 1`).
pub fn field_file_indices(count: usize, n: usize) -> Vec<usize> {
    if count == 0 {
        return Vec::new();
    }
    if n <= 1 || count == 1 {
        return vec![count - 1];
    }
    let mut idx: Vec<usize> = (0..n.min(count))
        .map(|k| ((k * (count - 1)) as f64 / (n.min(count) - 1) as f64).round() as usize)
        .collect();
    idx.dedup();
    idx
}

struct Writer<'a> {
    root: &'a Path,
    artifacts: BTreeMap<String, ArtifactEntry>,
}

impl Writer<'_> {
    fn put(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.artifacts.insert(
            rel.to_string(),
            ArtifactEntry {
                sha256: sha256_hex(bytes),
                bytes: bytes.len() as u64,
            },
        );
        Ok(())
    }
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

#[derive(Serialize)]
struct ChannelRow {
    t: f64,
    g1: f64,
    g2: f64,
    g3: f64,
    g4: f64,
    g5: f64,
}

#[derive(Serialize)]
struct SpectrumRow {
    index: usize,
    eigenvalue: f64,
}

/// Prepares `dir` for a new run: it must be absent, empty, or a previous run
/// directory (which is cleared).
fn prepare_dir(dir: &Path) -> Result<()> {
    if dir.exists() {
        let is_run = dir.join(MANIFEST).exists() || dir.join(INCOMPLETE).exists();
        let empty = fs::read_dir(dir)?.next().is_none();
        if !empty && !is_run {
            return Err(Error::InvalidParameter(format!(
                "output directory {} is not empty and is not a run directory",
                dir.display()
            )));
        }
        if !empty {
            fs::remove_dir_all(dir)?;
        }
    }
    fs::create_dir_all(dir)?;
    fs::write(dir.join(INCOMPLETE), b"run in progress\n")?;
    Ok(())
}

/// Writes every artifact of a sweep to `dir`.
pub fn write_run(result: &SweepResult, grid: &Grid, dir: &Path) -> Result<Manifest> {
    prepare_dir(dir)?;
    let cfg = &result.config;
    let mut w = Writer {
        root: dir,
        artifacts: BTreeMap::new(),
    };
    w.put(CONFIG_FILE, cfg.canonical_text().as_bytes())?;
    w.put(METRICS_FILE, &csv_bytes(&result.metrics())?)?;
    w.put(SUMMARY_FILE, &csv_bytes(&result.summary)?)?;
    w.put("summary.txt", crate::sweep::format_summary(&result.summary).as_bytes())?;
    let spectrum = |v: &[f64]| -> Vec<SpectrumRow> {
        v.iter()
            .enumerate()
            .map(|(index, &eigenvalue)| SpectrumRow { index, eigenvalue })
            .collect()
    };
    w.put("spectrum.csv", &csv_bytes(&spectrum(&result.spectrum))?)?;
    w.put("decay_spectrum.csv", &csv_bytes(&spectrum(&result.decay_spectrum))?)?;
    let mut snapshots = Vec::new();
    let mut energy = BTreeMap::new();
    let picks = field_file_indices(result.schedule.len(), cfg.schedule.field_files);
    for m in &result.members {
        let run = format!("eps_{}", m.eps);
        let efile = format!("energy_{run}.csv");
        w.put(&efile, &csv_bytes(&m.energy)?)?;
        energy.insert(run.clone(), efile);
        let rows: Vec<ChannelRow> = m
            .snapshots
            .iter()
            .zip(&m.channels)
            .map(|(s, g)| ChannelRow {
                t: s.time,
                g1: g[0],
                g2: g[1],
                g3: g[2],
                g4: g[3],
                g5: g[4],
            })
            .collect();
        w.put(&format!("channels_{run}.csv"), &csv_bytes(&rows)?)?;
        for &k in &picks {
            let s = &m.snapshots[k];
            let files = vec![
                format!("snapshots/{run}/density_{k:04}.txt"),
                format!("snapshots/{run}/velocity_x_{k:04}.txt"),
                format!("snapshots/{run}/velocity_y_{k:04}.txt"),
            ];
            w.put(&files[0], snapshot_text(grid, s.time, "density", Staggering::Cell, &s.density).as_bytes())?;
            w.put(&files[1], snapshot_text(grid, s.time, "velocity_x", Staggering::XFace, &s.velocity.x).as_bytes())?;
            w.put(&files[2], snapshot_text(grid, s.time, "velocity_y", Staggering::YFace, &s.velocity.y).as_bytes())?;
            snapshots.push(SnapshotEntry {
                run: run.clone(),
                eps: Some(m.eps),
                index: k,
                time: s.time,
                files,
            });
        }
    }
    for &k in &picks {
        let s = &result.reference[k];
        let files = vec![
            format!("snapshots/reference/velocity_x_{k:04}.txt"),
            format!("snapshots/reference/velocity_y_{k:04}.txt"),
        ];
        w.put(&files[0], snapshot_text(grid, s.time, "velocity_x", Staggering::XFace, &s.velocity.x).as_bytes())?;
        w.put(&files[1], snapshot_text(grid, s.time, "velocity_y", Staggering::YFace, &s.velocity.y).as_bytes())?;
        snapshots.push(SnapshotEntry {
            run: "reference".into(),
            eps: None,
            index: k,
            time: s.time,
            files,
        });
    }
    let manifest = Manifest {
        name: cfg.name.clone(),
        eps: cfg.sweep.eps.clone(),
        snapshots,
        energy,
        artifacts: w.artifacts,
    };
    fs::write(dir.join(MANIFEST), serde_json::to_vec_pretty(&manifest)?)?;
    fs::remove_file(dir.join(INCOMPLETE))?;
    Ok(manifest)
}

/// Reads the manifest of a finished run.
pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    if dir.join(INCOMPLETE).exists() {
        return Err(Error::IncompleteRun(dir.to_path_buf()));
    }
    let path = dir.join(MANIFEST);
    let bytes = fs::read(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingArtifact(path.clone()),
        _ => Error::Io(e),
    })?;
    Ok(serde_json::from_slice(&bytes)?)
}

pub fn artifact_path(dir: &Path, rel: &str) -> PathBuf {
    dir.join(rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    #[test]
    fn snapshot_round_trips_exactly() {
        let g = build_grid(2, 1.0, 0.2, 1.0 / 16.0).unwrap();
        let vals: Vec<f64> = (0..g.n_cells()).map(|i| (i as f64 * 0.37).sin() / 3.0).collect();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.txt");
        fs::write(&p, snapshot_text(&g, 0.125, "density", Staggering::Cell, &vals)).unwrap();
        let s = read_snapshot(&p).unwrap();
        assert_eq!(s.values, vals);
        assert_eq!(s.time, 0.125);
        assert_eq!(s.shape, (g.nx(), g.ny()));
        assert_eq!(s.extent, [-1.0, 1.0, -1.0, 1.0]);
    }

    #[test]
    fn missing_snapshot_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nope.txt");
        match read_snapshot(&p).unwrap_err() {
            Error::MissingArtifact(q) => assert_eq!(q, p),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn picks_include_ends() {
        assert_eq!(field_file_indices(51, 2), vec![0, 50]);
        assert_eq!(field_file_indices(51, 3), vec![0, 25, 50]);
        assert_eq!(field_file_indices(1, 3), vec![0]);
        assert_eq!(field_file_indices(5, 1), vec![4]);
    }

    #[test]
    fn foreign_directory_is_not_overwritten() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("keep.txt"), "x").unwrap();
        assert!(prepare_dir(dir.path()).is_err());
        assert!(dir.path().join("keep.txt").exists());
    }
}
