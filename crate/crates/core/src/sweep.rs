//! The eps sweep: one compressible run per Mach number, one incompressible
//! reference run, and every derived quantity (acoustic extraction, forcing
//! channels, local decay functional, bound monitors, convergence metrics).
//!
//! Members run on a rayon pool whose size comes from `LOWMACH_WORKERS`
//! (default: available parallelism). Results do not depend on the pool size.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compressible::{self, init_state, FluidState};
use crate::config::ExperimentConfig;
use crate::diagnostics::{
    assembly_identity, convergence_metrics, trapezoid, uniform_estimate_report, vortex_patch, window_test_function,
    ConvergenceInputs, MetricsRecord,
};
use crate::energy::{EnergyMonitor, EnergyRecord};
use crate::error::{Error, Result};
use crate::field::{face_norm, FaceField};
use crate::grid::Grid;
use crate::incompressible::IncompressibleState;
use crate::poisson::assemble_neumann_laplacian;
use crate::scenario::{cosine_pulse, Scenario};
use crate::spectral::acoustic::extract_acoustic_potential;
use crate::spectral::forcing::{assemble_forcing, forcing_channel_norms, forcing_modes};
use crate::spectral::helmholtz::HelmholtzProjector;
use crate::spectral::rage::{radial_cutoff, rage_decay, RageRecord, SpectralWindow};
use crate::spectral::{spectral_decompose, SpectralDecomposition};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "LOWMACH_WORKERS";

pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Spectral data shared by all members.
#[derive(Clone, Debug)]
pub struct SpectralSetup {
    pub grid: Grid,
    pub spectrum: SpectralDecomposition,
}

impl SpectralSetup {
    pub fn new(grid: Grid, modes: usize) -> Result<SpectralSetup> {
        let lap = assemble_neumann_laplacian(&grid)?;
        let k = modes.min(lap.n_active());
        let spectrum = spectral_decompose(&lap, k)?;
        Ok(SpectralSetup { grid, spectrum })
    }
}

/// Inputs of the local decay functional.
#[derive(Clone, Debug)]
pub struct DecaySetup {
    pub spectral: SpectralSetup,
    pub window: SpectralWindow,
    pub cutoff: Vec<f64>,
    pub data: Vec<f64>,
    pub horizon: f64,
}

impl DecaySetup {
    pub fn new(scenario: &Scenario) -> Result<DecaySetup> {
        let cfg = &scenario.config;
        let spectral = SpectralSetup::new(scenario.decay_grid()?, cfg.spectral.modes)?;
        let mut window = SpectralWindow::default_for(&spectral.spectrum)?;
        window.ramp = cfg.spectral.window_ramp;
        let a = cfg.geometry.radius;
        let cutoff = radial_cutoff(&spectral.grid, cfg.spectral.cutoff_inner * a, cfg.spectral.cutoff_outer * a);
        let s = &cfg.spectral;
        let data = cosine_pulse(&spectral.grid, 1.0, s.decay_pulse_center, s.decay_pulse_width);
        Ok(DecaySetup {
            spectral,
            window,
            cutoff,
            data,
            horizon: scenario.decay_horizon(),
        })
    }

    pub fn evaluate(&self, c2: f64, eps: f64) -> Result<RageRecord> {
        rage_decay(
            &self.spectral.spectrum,
            c2,
            eps,
            &self.data,
            &self.cutoff,
            &self.window,
            self.horizon,
            None,
        )
    }
}

/// Everything computed for one Mach number.
#[derive(Clone, Debug)]
pub struct MemberResult {
    pub eps: f64,
    pub steps: usize,
    pub snapshots: Vec<FluidState>,
    /// Energy inequality records at the snapshot times.
    pub energy: Vec<EnergyRecord>,
    /// Channel norms `||G_i(t)||` at the snapshot times.
    pub channels: Vec<[f64; 5]>,
    /// `||G_i||_{L2(0,T)}`.
    pub channel_norms: [f64; 5],
    /// Largest relative defect of the assembly identity over the snapshots.
    pub assembly_defect: f64,
    /// Acoustic energy `c2 ||r||^2 + ||grad Psi||^2` at the snapshot times.
    pub acoustic_energy: Vec<f64>,
    pub decay: RageRecord,
    pub metrics: Vec<MetricsRecord>,
}

impl MemberResult {
    pub fn metric(&self, name: &str, t_or_sup: &str) -> Option<f64> {
        self.metrics
            .iter()
            .find(|r| r.metric_name == name && r.t_or_sup == t_or_sup)
            .map(|r| r.value)
    }

    pub fn channel_sum(&self) -> f64 {
        self.channel_norms.iter().sum()
    }

    pub fn energy_ok(&self) -> bool {
        self.energy.iter().all(|r| r.flag)
    }
}

/// One row of the summary table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub eps: f64,
    pub steps: usize,
    pub density_deviation: f64,
    pub velocity_error: f64,
    pub solenoidal_momentum: f64,
    pub decay: f64,
    pub channel_sum: f64,
    pub residual_measure_scaled: f64,
    pub assembly_defect: f64,
    pub energy_ok: bool,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub config: ExperimentConfig,
    pub schedule: Vec<f64>,
    pub members: Vec<MemberResult>,
    pub reference: Vec<IncompressibleState>,
    pub spectrum: Vec<f64>,
    pub decay_spectrum: Vec<f64>,
    pub summary: Vec<SummaryRow>,
}

impl SweepResult {
    /// All metric records, members in sweep order.
    pub fn metrics(&self) -> Vec<MetricsRecord> {
        self.members.iter().flat_map(|m| m.metrics.iter().cloned()).collect()
    }
}

fn run_id(eps: f64) -> String {
    format!("eps_{eps}")
}

/// Test field for the assembly identity: two vortex patches plus a
/// non-solenoidal bump, zero on boundary faces.
fn assembly_test_field(grid: &Grid, scenario: &Scenario) -> FaceField {
    let mut phi = window_test_function(grid, &scenario.window);
    let mid = 0.5 * (scenario.window.inner + scenario.window.outer);
    let w = 0.5 * (scenario.window.outer - scenario.window.inner);
    phi.axpy(0.5, &vortex_patch(grid, [mid, 0.0], w));
    phi.axpy(
        1.0,
        &FaceField::sample(grid, |p| {
            let d2 = ((p[0] + mid).powi(2) + p[1] * p[1]) / (w * w);
            let b = if d2 < 1.0 { (1.0 - d2).powi(3) } else { 0.0 };
            [b, 0.5 * b]
        }),
    );
    phi.clear_boundary(grid);
    phi
}

fn run_member(
    scenario: &Scenario,
    eps: f64,
    schedule: &[f64],
    reference: &[IncompressibleState],
    projector: &HelmholtzProjector,
    forcing: &SpectralSetup,
    decay: &DecaySetup,
) -> Result<MemberResult> {
    let cfg = &scenario.config;
    let grid = &scenario.grid;
    let solver = scenario.compressible_solver()?;
    let m0 = scenario.path.eval(0.0)?;
    let state0 = init_state(grid, &scenario.law, &scenario.initial, eps, &m0)?;
    let mut monitor = EnergyMonitor::new(&solver, &state0, scenario.extension.clone(), cfg.numerics.tol_energy);
    let mut energy = vec![monitor.report(&solver, &state0)];
    let mut steps = 0usize;
    let mut next_sample = 1usize;
    let traj = compressible::run(&solver, state0, schedule, |old, new, dt, log| {
        monitor.accumulate(&solver, old, dt, log);
        steps += 1;
        if let Some(&target) = schedule.get(next_sample) {
            if target - new.time <= 1e-14 * target.max(1.0) {
                let mut at = new.clone();
                at.time = target;
                energy.push(monitor.report(&solver, &at));
                next_sample += 1;
            }
        }
        Ok(())
    })?;
    let snapshots = traj.snapshots;
    // Schedules that start with repeated zeros produce no step.
    while energy.len() < snapshots.len() {
        let last = energy[energy.len() - 1];
        energy.push(last);
    }
    let c2 = scenario.law.reference_slope();
    let phi = assembly_test_field(grid, scenario);
    let lambdas = forcing.spectrum.values();
    let mut channels = Vec::with_capacity(snapshots.len());
    let mut acoustic_energy = Vec::with_capacity(snapshots.len());
    let mut assembly_defect = 0.0_f64;
    for st in &snapshots {
        let (v, mv) = scenario.frame(st.time);
        let ac = extract_acoustic_potential(projector, &scenario.law, st, &v, mv)?;
        let chk = assembly_identity(projector, &ac.momentum, &ac.split, &phi)?;
        let scale = face_norm(grid, &ac.momentum) * face_norm(grid, &phi);
        if scale > 0.0 {
            assembly_defect = assembly_defect.max(chk.defect / scale);
        }
        let r2: f64 = crate::field::cell_norm(grid, &ac.state.r).powi(2);
        acoustic_energy.push(c2 * r2 + face_norm(grid, &ac.split.gradient).powi(2));
        let motion = scenario.path.eval_unchecked(st.time);
        let f = assemble_forcing(grid, &scenario.law, &scenario.visc, st, &motion, scenario.extension.as_ref());
        let modes = forcing_modes(grid, &forcing.grid, &forcing.spectrum, &f)?;
        channels.push(forcing_channel_norms(lambdas, &modes));
    }
    let times: Vec<f64> = snapshots.iter().map(|s| s.time).collect();
    let channel_norms: [f64; 5] = std::array::from_fn(|i| {
        let sq: Vec<f64> = channels.iter().map(|c| c[i] * c[i]).collect();
        trapezoid(&times, &sq).sqrt()
    });
    let decay_record = decay.evaluate(c2, eps)?;

    let id = run_id(eps);
    let mut metrics = uniform_estimate_report(&id, grid, &scenario.law, &snapshots, &cfg.numerics.residual_exponents);
    let test_function = window_test_function(grid, &scenario.window);
    let frame = |t: f64| scenario.frame(t);
    let inputs = ConvergenceInputs {
        run_id: &id,
        grid,
        law: &scenario.law,
        window: scenario.window,
        test_function: &test_function,
        frame: &frame,
    };
    metrics.extend(convergence_metrics(&inputs, &snapshots, reference)?);
    let rec = |name: &str, q: Option<f64>, window: &str, value: f64| MetricsRecord {
        run_id: id.clone(),
        eps,
        metric_name: name.to_string(),
        q,
        window: window.to_string(),
        t_or_sup: "int".to_string(),
        value,
    };
    // Time average over the decay horizon, independent of the flow schedule.
    metrics.push(MetricsRecord {
        t_or_sup: "avg".to_string(),
        ..rec("acoustic_decay", Some(2.0), "chi", decay_record.value)
    });
    for (i, n) in channel_norms.iter().enumerate() {
        metrics.push(rec(&format!("forcing_channel_{}", i + 1), Some(2.0), "full", *n));
    }
    metrics.push(MetricsRecord {
        t_or_sup: "sup".to_string(),
        ..rec("assembly_defect", None, "full", assembly_defect)
    });
    Ok(MemberResult {
        eps,
        steps,
        snapshots,
        energy,
        channels,
        channel_norms,
        assembly_defect,
        acoustic_energy,
        decay: decay_record,
        metrics,
    })
}

/// Incompressible reference trajectory on the common schedule.
pub fn reference_run(scenario: &Scenario, schedule: &[f64]) -> Result<Vec<IncompressibleState>> {
    let solver = scenario.incompressible_solver()?;
    let initial = solver.initial_state(&scenario.initial.velocity)?;
    solver.run(initial, schedule)
}

/// Runs the whole sweep.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    let scenario = Scenario::from_config(config)?;
    let schedule = config.schedule_times();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    pool.install(|| {
        let (left, right) = rayon::join(
            || -> Result<_> {
                Ok((
                    reference_run(&scenario, &schedule)?,
                    SpectralSetup::new(scenario.spectral_grid()?, config.spectral.modes)?,
                ))
            },
            || -> Result<_> { Ok((DecaySetup::new(&scenario)?, HelmholtzProjector::new(&scenario.grid)?)) },
        );
        let (reference, forcing) = left?;
        let (decay, projector) = right?;
        log::info!(
            "spectral setup: {} forcing modes, {} decay modes, decay horizon {:.4}",
            forcing.spectrum.n_modes(),
            decay.spectral.spectrum.n_modes(),
            decay.horizon
        );
        let members: Vec<MemberResult> = config
            .sweep
            .eps
            .par_iter()
            .map(|&eps| {
                let r = run_member(&scenario, eps, &schedule, &reference, &projector, &forcing, &decay);
                if let Ok(m) = &r {
                    log::info!("eps = {eps}: {} steps", m.steps);
                }
                r
            })
            .collect::<Result<_>>()?;
        let summary = members
            .iter()
            .map(|m| SummaryRow {
                eps: m.eps,
                steps: m.steps,
                density_deviation: m.metric("density_deviation", "sup").unwrap_or(0.0),
                velocity_error: m.metric("velocity_error", "int").unwrap_or(0.0),
                solenoidal_momentum: m.metric("solenoidal_momentum", "int").unwrap_or(0.0),
                decay: m.decay.value,
                channel_sum: m.channel_sum(),
                residual_measure_scaled: m.metric("res_measure", "sup").unwrap_or(0.0) / (m.eps * m.eps),
                assembly_defect: m.assembly_defect,
                energy_ok: m.energy_ok(),
            })
            .collect();
        Ok(SweepResult {
            config: config.clone(),
            schedule: schedule.clone(),
            members,
            reference,
            spectrum: forcing.spectrum.values().to_vec(),
            decay_spectrum: decay.spectral.spectrum.values().to_vec(),
            summary,
        })
    })
}

/// Summary table as aligned text.
pub fn format_summary(rows: &[SummaryRow]) -> String {
    let mut s = format!(
        "{:>8} {:>7} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12} {:>9}\n",
        "eps", "steps", "dens_dev", "vel_err_K", "solenoidal", "decay", "channels", "res/eps^2", "energy"
    );
    for r in rows {
        s.push_str(&format!(
            "{:>8} {:>7} {:>12.5e} {:>12.5e} {:>12.5e} {:>12.5e} {:>12.5e} {:>12.5e} {:>9}\n",
            r.eps,
            r.steps,
            r.density_deviation,
            r.velocity_error,
            r.solenoidal_momentum,
            r.decay,
            r.channel_sum,
            r.residual_measure_scaled,
            if r.energy_ok { "ok" } else { "VIOLATED" }
        ));
    }
    s
}
