//! Post-hoc checks of a run directory, computed from the files alone.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::compressible::FluidState;
use crate::config::parse_config;
use crate::diagnostics::MetricsRecord;
use crate::energy::{kinetic_energy, potential_energy, EnergyRecord};
use crate::error::{Error, Result};
use crate::field::{divergence, FaceField};
use crate::grid::Grid;
use crate::io::{read_manifest, read_snapshot, sha256_hex, Snapshot, Staggering, CONFIG_FILE, METRICS_FILE};
use crate::scenario::Scenario;

/// Relative agreement required between stored and recomputed energies.
/// Snapshots round-trip exactly, so only summation order differs.
pub const ENERGY_RECORD_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value <= tolerance` (false for NaN).
    fn at_most(name: String, value: f64, tolerance: f64) -> Check {
        Check {
            name,
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }

    /// Passes when `value > bound`; the bound is reported as the tolerance.
    fn above(name: String, value: f64, bound: f64) -> Check {
        Check {
            name,
            value,
            tolerance: bound,
            pass: value > bound,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {:<40} value={:.6e} tol={:.3e}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.tolerance
            )?;
        }
        Ok(())
    }
}

fn expect_layout(path: &Path, s: &Snapshot, grid: &Grid, st: Staggering) -> Result<()> {
    let shape = match st {
        Staggering::Cell => (grid.nx(), grid.ny()),
        Staggering::XFace => (grid.nx() + 1, grid.ny()),
        Staggering::YFace => (grid.nx(), grid.ny() + 1),
    };
    if s.staggering != st || s.shape != shape || s.h != grid.h() {
        return Err(Error::MalformedArtifact {
            path: path.to_path_buf(),
            message: "snapshot layout does not match the configured grid".into(),
        });
    }
    Ok(())
}

fn read_energy(path: &Path) -> Result<Vec<EnergyRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Verifies a finished run directory.
///
/// Absent or incomplete runs and missing artifacts are errors; failed
/// invariants are reported as failing checks.
pub fn verify_run(dir: &Path) -> Result<VerifyReport> {
    let manifest = read_manifest(dir)?;
    for rel in manifest.artifacts.keys() {
        let p = dir.join(rel);
        if !p.is_file() {
            return Err(Error::MissingArtifact(p));
        }
    }
    let mut checks = Vec::new();

    let mut mismatched = 0usize;
    for (rel, entry) in &manifest.artifacts {
        let bytes = fs::read(dir.join(rel))?;
        if sha256_hex(&bytes) != entry.sha256 {
            log::warn!("hash mismatch for {rel}");
            mismatched += 1;
        }
    }
    checks.push(Check::at_most("artifact_hashes".into(), mismatched as f64, 0.0));

    let config = parse_config(&fs::read_to_string(dir.join(CONFIG_FILE))?)?;
    let scenario = Scenario::from_config(&config)?;
    let grid = &scenario.grid;
    let law = &scenario.law;

    for (run, file) in &manifest.energy {
        let records = read_energy(&dir.join(file))?;
        let bad = records.iter().filter(|r| !r.flag).count();
        checks.push(Check::at_most(format!("energy_flags {run}"), bad as f64, 0.0));
    }

    for entry in &manifest.snapshots {
        let read = |k: usize, st: Staggering| -> Result<Vec<f64>> {
            let p = dir.join(&entry.files[k]);
            let s = read_snapshot(&p)?;
            expect_layout(&p, &s, grid, st)?;
            Ok(s.values)
        };
        let tag = format!("{} t={:.6}", entry.run, entry.time);
        match entry.eps {
            Some(eps) => {
                let state = FluidState {
                    density: read(0, Staggering::Cell)?,
                    velocity: FaceField {
                        x: read(1, Staggering::XFace)?,
                        y: read(2, Staggering::YFace)?,
                    },
                    time: entry.time,
                    eps,
                };
                let min = (0..grid.n_cells())
                    .filter(|&c| grid.is_active(c))
                    .map(|c| state.density[c])
                    .fold(f64::INFINITY, f64::min);
                checks.push(Check::above(format!("density_min {tag}"), min, 0.0));

                let file = manifest.energy.get(&entry.run).ok_or_else(|| Error::MalformedArtifact {
                    path: dir.join("manifest.json"),
                    message: format!("no energy table for {}", entry.run),
                })?;
                let records = read_energy(&dir.join(file))?;
                let rec = records
                    .iter()
                    .find(|r| (r.t - entry.time).abs() <= 1e-12 * entry.time.abs().max(1.0))
                    .ok_or_else(|| Error::MalformedArtifact {
                        path: dir.join(file),
                        message: format!("no energy record at t={}", entry.time),
                    })?;
                let energy = kinetic_energy(grid, &state) + potential_energy(grid, law, &state);
                let stored = rec.kinetic + rec.potential;
                let rel = (energy - stored).abs() / stored.abs().max(1.0);
                checks.push(Check::at_most(format!("energy_record {tag}"), rel, ENERGY_RECORD_TOL));
                let excess = energy + rec.dissipation - rec.rhs;
                checks.push(Check::at_most(format!("energy_inequality {tag}"), excess, rec.tolerance));
            }
            None => {
                let u = FaceField {
                    x: read(0, Staggering::XFace)?,
                    y: read(1, Staggering::YFace)?,
                };
                let div = divergence(grid, &u).iter().fold(0.0f64, |m, d| m.max(d.abs()));
                checks.push(Check::at_most(
                    format!("reference_divergence {tag}"),
                    div,
                    config.numerics.tol_div,
                ));
            }
        }
    }

    let mut r = csv::Reader::from_path(dir.join(METRICS_FILE))?;
    let metrics: Vec<MetricsRecord> = r.deserialize().collect::<std::result::Result<_, _>>()?;
    let nonfinite = metrics.iter().filter(|m| !m.value.is_finite()).count();
    checks.push(Check::at_most("metrics_finite".into(), nonfinite as f64, 0.0));

    Ok(VerifyReport { checks })
}
