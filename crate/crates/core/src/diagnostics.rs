//! Essential/residual splitting, uniform-in-eps bound monitors and the
//! convergence metrics comparing a compressible trajectory with the
//! incompressible reference.

use serde::{Deserialize, Serialize};

use crate::compressible::{momentum_dot, FluidState};
use crate::constitutive::PressureLaw;
use crate::error::{Error, Result};
use crate::field::{cell_gradient, cell_lq, cell_norm, curl_of_nodes, divergence_interior, face_dot, face_norm, sample_nodes, FaceField};
use crate::grid::{FaceKind, Grid};
use crate::incompressible::IncompressibleState;
use crate::spectral::acoustic::momentum_perturbation;
use crate::spectral::helmholtz::{HelmholtzProjector, HelmholtzSplit};

/// `f = essential + residual` with `essential = f` where
/// `rho_ref/2 < rho < 2 rho_ref` and 0 elsewhere.
#[derive(Clone, Debug, PartialEq)]
pub struct EssResSplit {
    pub essential: Vec<f64>,
    pub residual: Vec<f64>,
    pub indicator: Vec<f64>,
}

pub fn split_ess_res(rho: &[f64], f: &[f64], rho_ref: f64) -> EssResSplit {
    let indicator: Vec<f64> = rho
        .iter()
        .map(|&r| if r > 0.5 * rho_ref && r < 2.0 * rho_ref { 1.0 } else { 0.0 })
        .collect();
    let essential: Vec<f64> = f.iter().zip(&indicator).map(|(v, i)| v * i).collect();
    let residual = f.iter().zip(&essential).map(|(v, e)| v - e).collect();
    EssResSplit {
        essential,
        residual,
        indicator,
    }
}

/// One row of the metrics table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub run_id: String,
    pub eps: f64,
    pub metric_name: String,
    /// Exponent of the spatial norm, if any.
    pub q: Option<f64>,
    /// `full` or `K`.
    pub window: String,
    /// `sup`, `int` (time-integrated) or a snapshot time.
    pub t_or_sup: String,
    pub value: f64,
}

impl MetricsRecord {
    fn new(run_id: &str, eps: f64, name: &str, q: Option<f64>, window: &str, t_or_sup: &str, value: f64) -> MetricsRecord {
        MetricsRecord {
            run_id: run_id.to_string(),
            eps,
            metric_name: name.to_string(),
            q,
            window: window.to_string(),
            t_or_sup: t_or_sup.to_string(),
            value,
        }
    }
}

/// Trapezoid rule for samples `values` at `times`.
pub fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// Instantaneous values of the uniform-bound quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformSample {
    pub ess_fluctuation_l2: f64,
    pub res_density_lgamma: f64,
    pub res_measure: f64,
    pub res_fluctuation_lq: Vec<f64>,
    /// `||u||_{L2}^2 + ||grad u||_{L2}^2`.
    pub velocity_h1_sq: f64,
    pub momentum_l2: f64,
}

pub fn uniform_sample(grid: &Grid, law: &PressureLaw, state: &FluidState, qs: &[f64]) -> UniformSample {
    let rho_ref = law.reference_density;
    let rho = &state.density;
    let fl: Vec<f64> = rho.iter().map(|r| (r - rho_ref) / state.eps).collect();
    let sf = split_ess_res(rho, &fl, rho_ref);
    let sr = split_ess_res(rho, rho, rho_ref);
    let one = vec![1.0; rho.len()];
    let s1 = split_ess_res(rho, &one, rho_ref);
    let grad = cell_gradient(grid, &state.velocity);
    let mut g2 = 0.0;
    for c in 0..grid.n_cells() {
        if grid.is_active(c) {
            g2 += grad[c].iter().flatten().map(|x| x * x).sum::<f64>();
        }
    }
    g2 *= grid.cell_area();
    UniformSample {
        ess_fluctuation_l2: cell_norm(grid, &sf.essential),
        res_density_lgamma: cell_lq(grid, &sr.residual, law.exponent),
        res_measure: cell_lq(grid, &s1.residual, 1.0),
        res_fluctuation_lq: qs.iter().map(|&q| cell_lq(grid, &sf.residual, q)).collect(),
        velocity_h1_sq: face_norm(grid, &state.velocity).powi(2) + g2,
        momentum_l2: momentum_dot(grid, rho, &state.velocity, &state.velocity).max(0.0).sqrt(),
    }
}

/// Sup-in-time and time-integrated bound monitors of one trajectory.
pub fn uniform_estimate_report(
    run_id: &str,
    grid: &Grid,
    law: &PressureLaw,
    snapshots: &[FluidState],
    qs: &[f64],
) -> Vec<MetricsRecord> {
    let Some(first) = snapshots.first() else {
        return Vec::new();
    };
    let eps = first.eps;
    let samples: Vec<UniformSample> = snapshots.iter().map(|s| uniform_sample(grid, law, s, qs)).collect();
    let sup = |f: &dyn Fn(&UniformSample) -> f64| samples.iter().map(f).fold(0.0, f64::max);
    let times: Vec<f64> = snapshots.iter().map(|s| s.time).collect();
    let h1: Vec<f64> = samples.iter().map(|s| s.velocity_h1_sq).collect();
    let mut out = vec![
        MetricsRecord::new(run_id, eps, "ess_fluctuation", Some(2.0), "full", "sup", sup(&|s| s.ess_fluctuation_l2)),
        MetricsRecord::new(run_id, eps, "res_density", Some(law.exponent), "full", "sup", sup(&|s| s.res_density_lgamma)),
        MetricsRecord::new(run_id, eps, "res_measure", Some(1.0), "full", "sup", sup(&|s| s.res_measure)),
    ];
    for (i, &q) in qs.iter().enumerate() {
        out.push(MetricsRecord::new(run_id, eps, "res_fluctuation", Some(q), "full", "sup", sup(&|s| s.res_fluctuation_lq[i])));
    }
    out.push(MetricsRecord::new(run_id, eps, "velocity_l2_h1", Some(2.0), "full", "int", trapezoid(&times, &h1).sqrt()));
    out.push(MetricsRecord::new(run_id, eps, "momentum_linf_l2", Some(2.0), "full", "sup", sup(&|s| s.momentum_l2)));
    out
}

/// Compact window `inner <= |y| <= outer` (body coordinates).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub inner: f64,
    pub outer: f64,
}

impl Annulus {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let r = p[0].hypot(p[1]);
        r >= self.inner && r <= self.outer
    }
}

/// `||a - b||_{L2(K)}` over faces whose centers lie in the window.
pub fn window_distance(grid: &Grid, a: &FaceField, b: &FaceField, window: &Annulus) -> f64 {
    let mut s = 0.0;
    for j in 0..grid.ny() {
        for i in 0..=grid.nx() {
            let k = grid.xface(i, j);
            if grid.xface_kind(k) != FaceKind::Inactive && window.contains(grid.xface_center(i, j)) {
                s += (a.x[k] - b.x[k]).powi(2);
            }
        }
    }
    for j in 0..=grid.ny() {
        for i in 0..grid.nx() {
            let k = grid.yface(i, j);
            if grid.yface_kind(k) != FaceKind::Inactive && window.contains(grid.yface_center(i, j)) {
                s += (a.y[k] - b.y[k]).powi(2);
            }
        }
    }
    (s * grid.cell_area()).sqrt()
}

/// Divergence-free vortex patch: the discrete curl of the stream function
/// `(1 - (d/radius)^2)^4` centered at `center`, so it vanishes on every face
/// whose nodes lie outside the disk `d < radius`.
pub fn vortex_patch(grid: &Grid, center: [f64; 2], radius: f64) -> FaceField {
    let psi = sample_nodes(grid, |p| {
        let d2 = ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)) / (radius * radius);
        if d2 < 1.0 {
            (1.0 - d2).powi(4)
        } else {
            0.0
        }
    });
    curl_of_nodes(grid, &psi)
}

/// Default test function: a patch filling the width of the window, centered
/// on the positive y axis.
pub fn window_test_function(grid: &Grid, window: &Annulus) -> FaceField {
    let mid = 0.5 * (window.inner + window.outer);
    vortex_patch(grid, [0.0, mid], 0.5 * (window.outer - window.inner))
}

/// Inputs of the convergence comparison besides the two trajectories.
pub struct ConvergenceInputs<'a> {
    pub run_id: &'a str,
    pub grid: &'a Grid,
    pub law: &'a PressureLaw,
    pub window: Annulus,
    /// Test function for the solenoidal momentum check.
    pub test_function: &'a FaceField,
    /// Extension field `V(t)` and obstacle velocity at each snapshot.
    pub frame: &'a dyn Fn(f64) -> (FaceField, [f64; 2]),
}

/// Metrics (i)-(iii): density deviation, windowed velocity error and the
/// solenoidal momentum test, as sup and time-integrated values plus the
/// per-snapshot series.
pub fn convergence_metrics(
    inputs: &ConvergenceInputs<'_>,
    compressible: &[FluidState],
    incompressible: &[IncompressibleState],
) -> Result<Vec<MetricsRecord>> {
    if compressible.len() != incompressible.len() {
        return Err(Error::ScheduleMismatch(format!(
            "{} compressible vs {} incompressible snapshots",
            compressible.len(),
            incompressible.len()
        )));
    }
    for (a, b) in compressible.iter().zip(incompressible) {
        if (a.time - b.time).abs() > 1e-12 * a.time.abs().max(1.0) {
            return Err(Error::ScheduleMismatch(format!("snapshot times {} and {}", a.time, b.time)));
        }
    }
    let Some(first) = compressible.first() else {
        return Ok(Vec::new());
    };
    let (g, id, eps) = (inputs.grid, inputs.run_id, first.eps);
    let rho_ref = inputs.law.reference_density;
    let times: Vec<f64> = compressible.iter().map(|s| s.time).collect();
    let mut density = Vec::new();
    let mut velocity = Vec::new();
    let mut solenoidal = Vec::new();
    for (c, u) in compressible.iter().zip(incompressible) {
        let dev: Vec<f64> = c.density.iter().map(|r| r - rho_ref).collect();
        density.push(cell_norm(g, &dev) / eps);
        velocity.push(window_distance(g, &c.velocity, &u.velocity, &inputs.window));
        let (v, mv) = (inputs.frame)(c.time);
        let w = momentum_perturbation(g, inputs.law, c, &v, mv);
        let mut limit = u.velocity.clone();
        limit.axpy(-1.0, &v);
        limit.scale(rho_ref);
        solenoidal.push(face_dot(g, &w, inputs.test_function) - face_dot(g, &limit, inputs.test_function));
    }
    let sq = |v: &[f64]| v.iter().map(|x| x * x).collect::<Vec<_>>();
    let mut out = vec![
        MetricsRecord::new(id, eps, "density_deviation", Some(2.0), "full", "sup", density.iter().copied().fold(0.0, f64::max)),
        MetricsRecord::new(id, eps, "velocity_error", Some(2.0), "K", "int", trapezoid(&times, &sq(&velocity)).sqrt()),
        MetricsRecord::new(id, eps, "solenoidal_momentum", Some(2.0), "K", "int", trapezoid(&times, &sq(&solenoidal)).sqrt()),
    ];
    for (k, &t) in times.iter().enumerate() {
        let ts = format!("{t:.6}");
        out.push(MetricsRecord::new(id, eps, "density_deviation", Some(2.0), "full", &ts, density[k]));
        out.push(MetricsRecord::new(id, eps, "velocity_error", Some(2.0), "K", &ts, velocity[k]));
        out.push(MetricsRecord::new(id, eps, "solenoidal_momentum", Some(2.0), "K", &ts, solenoidal[k].abs()));
    }
    Ok(out)
}

/// Terms of the discrete assembly identity
/// `<W, phi> = <W, H phi> - <Psi, div(phi - H phi)> + boundary`,
/// where `W = H W + grad Psi` and `boundary` is the flux pairing on wall and
/// rim faces (zero when `phi` vanishes there).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssemblyCheck {
    pub lhs: f64,
    pub solenoidal: f64,
    pub potential: f64,
    pub boundary: f64,
    /// `|lhs - (solenoidal + potential + boundary)|`.
    pub defect: f64,
}

pub fn assembly_identity(
    projector: &HelmholtzProjector,
    momentum: &FaceField,
    split: &HelmholtzSplit,
    phi: &FaceField,
) -> Result<AssemblyCheck> {
    let g = projector.grid();
    let phi_split = projector.split(phi)?;
    let lhs = face_dot(g, momentum, phi);
    let solenoidal = face_dot(g, momentum, &phi_split.solenoidal);
    let div = divergence_interior(g, &phi_split.gradient);
    let potential = -split.potential.iter().zip(&div).enumerate().filter(|(c, _)| g.is_active(*c)).map(|(_, (p, d))| p * d).sum::<f64>()
        * g.cell_area();
    let mut boundary = 0.0;
    for (k, kind) in g.xface_kinds().iter().enumerate() {
        if kind.is_boundary() {
            boundary += momentum.x[k] * phi.x[k];
        }
    }
    for (k, kind) in g.yface_kinds().iter().enumerate() {
        if kind.is_boundary() {
            boundary += momentum.y[k] * phi.y[k];
        }
    }
    boundary *= g.cell_area();
    Ok(AssemblyCheck {
        lhs,
        solenoidal,
        potential,
        boundary,
        defect: (lhs - solenoidal - potential - boundary).abs(),
    })
}
