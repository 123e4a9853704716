//! Experiment configuration: a sectioned key/value TOML file.
//!
//! Every key has a default, so a minimal file only names what differs.
//! `canonical_text` writes every key in a fixed order and is a fixed point of
//! `parse_config` followed by `canonical_text`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::PathKind;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub dimension: usize,
    /// Half width `L` of the box `[-L, L]^2`.
    pub half_extent: f64,
    /// Obstacle radius `a`.
    pub radius: f64,
    /// Cell size of the flow grid.
    pub h: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            dimension: 2,
            half_extent: 2.0,
            radius: 0.25,
            h: 1.0 / 64.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsConfig {
    pub pressure_coefficient: f64,
    pub gamma: f64,
    pub shear_viscosity: f64,
    pub bulk_viscosity: f64,
    pub reference_density: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        PhysicsConfig {
            pressure_coefficient: 1.0,
            gamma: 2.0,
            shear_viscosity: 0.01,
            bulk_viscosity: 0.0,
            reference_density: 1.0,
        }
    }
}

// `deny_unknown_fields` does not combine with `flatten`; stray keys in this
// section are reported by the path enum instead.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MotionConfig {
    #[serde(flatten)]
    pub path: PathKind,
    pub horizon: f64,
}

impl Default for MotionConfig {
    fn default() -> Self {
        MotionConfig {
            path: PathKind::Linear { velocity: [0.1, 0.0] },
            horizon: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityKind {
    Rest,
    /// A Gaussian vortex plus a Gaussian gradient bump.
    VortexGradient,
    /// Seeded random superposition of Gaussian vortices and gradient bumps.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    pub pulse_amplitude: f64,
    pub pulse_width: f64,
    pub pulse_center: [f64; 2],
    pub velocity_kind: VelocityKind,
    /// Peak of the vortex stream function.
    pub vortex_strength: f64,
    pub vortex_center: [f64; 2],
    pub vortex_width: f64,
    /// Peak of the gradient potential.
    pub gradient_strength: f64,
    pub gradient_center: [f64; 2],
    pub gradient_width: f64,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig {
            pulse_amplitude: 1.0,
            pulse_width: 0.2,
            pulse_center: [0.75, 0.0],
            velocity_kind: VelocityKind::VortexGradient,
            vortex_strength: 0.2,
            vortex_center: [0.0, 0.6],
            vortex_width: 0.1,
            gradient_strength: 0.1,
            gradient_center: [-0.6, 0.0],
            gradient_width: 0.14,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    pub cfl: f64,
    /// Width of the absorbing rim; 0 disables it.
    pub sponge_width: f64,
    pub sponge_exponent: f64,
    /// Outer radius of the extension field support.
    pub extension_support: f64,
    pub tol_div: f64,
    /// Energy inequality tolerance as a fraction of the initial energy.
    pub tol_energy: f64,
    /// Exponents `q` of the residual fluctuation norms.
    pub residual_exponents: Vec<f64>,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            cfl: 0.3,
            sponge_width: 0.5,
            sponge_exponent: 2.0,
            extension_support: 1.0,
            tol_div: 1e-8,
            tol_energy: 1e-3,
            residual_exponents: vec![1.5, 2.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralConfig {
    /// Cell size of the spectral grid on the flow domain (forcing channels).
    /// Must be an integer multiple of the flow cell size.
    pub h: f64,
    /// Retained modes `K`; the effective count is `min(K, active cells)`.
    pub modes: usize,
    /// Half width of the domain of the decay functional.
    pub decay_half_extent: f64,
    /// Cell size of the decay-functional grid.
    pub decay_h: f64,
    /// Relative width of the spectral window ramps.
    pub window_ramp: f64,
    /// Cutoff radii of the localization, in units of the obstacle radius.
    pub cutoff_inner: f64,
    pub cutoff_outer: f64,
    /// Fraction of the reflection-return time used as horizon.
    pub reflection_fraction: f64,
    /// Cosine pulse used as data of the decay functional.
    pub decay_pulse_center: [f64; 2],
    pub decay_pulse_width: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            h: 1.0 / 16.0,
            modes: 2000,
            decay_half_extent: 3.0,
            decay_h: 3.0 / 32.0,
            window_ramp: 0.5,
            cutoff_inner: 2.0,
            cutoff_outer: 3.0,
            reflection_fraction: 0.95,
            decay_pulse_center: [0.45, 0.0],
            decay_pulse_width: 0.3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Window `K` in units of the obstacle radius.
    pub window_inner: f64,
    pub window_outer: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            window_inner: 1.2,
            window_outer: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub eps: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            eps: vec![0.2, 0.1, 0.05, 0.025],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    /// Final time `T`.
    pub final_time: f64,
    /// Number of snapshot intervals; snapshots are taken at `k T / n`.
    pub snapshots: usize,
    /// Number of snapshots written as field files (evenly spread, always
    /// including the first and last).
    pub field_files: usize,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            final_time: 0.5,
            snapshots: 50,
            field_files: 2,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub geometry: GeometryConfig,
    pub physics: PhysicsConfig,
    pub motion: MotionConfig,
    pub initial: InitialConfig,
    pub numerics: NumericsConfig,
    pub spectral: SpectralConfig,
    pub diagnostics: DiagnosticsConfig,
    pub sweep: SweepConfig,
    pub schedule: ScheduleConfig,
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |p| p + 1) + 1;
    (line, column)
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
        Error::ConfigParse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    config.validate()?;
    Ok(config)
}

fn is_multiple(coarse: f64, fine: f64) -> bool {
    let r = coarse / fine;
    r >= 1.0 - 1e-12 && (r - r.round()).abs() < 1e-9 * r
}

impl ExperimentConfig {
    /// Every key in a fixed order.
    pub fn canonical_text(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Collects every violated invariant.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut need = |ok: bool, msg: String| {
            if !ok {
                v.push(msg);
            }
        };
        let g = &self.geometry;
        need(g.dimension == 2, format!("dimension {} is not supported (only 2)", g.dimension));
        need(g.h > 0.0, format!("geometry.h = {} must be positive", g.h));
        need(g.radius > 2.0 * g.h, format!("radius {} must exceed 2h = {}", g.radius, 2.0 * g.h));
        need(g.half_extent > 4.0 * g.radius, format!("half_extent {} must exceed 4 radius", g.half_extent));
        need(g.h <= 0.0 || is_multiple(2.0 * g.half_extent, g.h), format!("geometry.h = {} must divide 2 half_extent", g.h));
        let p = &self.physics;
        need(p.gamma > 1.5, "gamma must exceed 3/2".to_string());
        need(p.pressure_coefficient > 0.0, "pressure_coefficient must be positive".to_string());
        need(p.reference_density > 0.0, "reference_density must be positive".to_string());
        need(p.shear_viscosity > 0.0, "shear_viscosity must be positive".to_string());
        need(p.bulk_viscosity >= -p.shear_viscosity, "bulk_viscosity must be at least -shear_viscosity".to_string());
        let m = &self.motion;
        need(m.horizon > 0.0, "motion horizon must be positive".to_string());
        if let PathKind::Sinusoidal { frequency, .. } = m.path {
            need(frequency >= 0.0, "motion frequency must be nonnegative".to_string());
        }
        let i = &self.initial;
        need(i.pulse_width > 0.0, "pulse_width must be positive".to_string());
        need(i.vortex_width > 0.0 && i.gradient_width > 0.0, "vortex_width and gradient_width must be positive".to_string());
        let n = &self.numerics;
        need(n.cfl > 0.0 && n.cfl <= crate::compressible::MAX_CFL, format!("cfl must lie in (0, {}]", crate::compressible::MAX_CFL));
        need(n.sponge_width >= 0.0 && n.sponge_width < g.half_extent - g.radius, "sponge_width must lie in [0, half_extent - radius)".to_string());
        need(n.sponge_exponent > 0.0, "sponge_exponent must be positive".to_string());
        need(
            n.extension_support > g.radius && n.extension_support + g.h < g.half_extent,
            "extension_support must lie between the radius and the box edge".to_string(),
        );
        need(n.tol_div > 0.0, "tol_div must be positive".to_string());
        need(n.tol_energy > 0.0, "tol_energy must be positive".to_string());
        need(n.residual_exponents.iter().all(|&q| q >= 1.0), "residual_exponents must be >= 1".to_string());
        let s = &self.spectral;
        need(s.h > 0.0 && is_multiple(s.h, g.h), "spectral.h must be a positive multiple of geometry.h".to_string());
        need(g.radius > 2.0 * s.h, "spectral.h must be below radius / 2".to_string());
        need(s.modes >= 10, "spectral.modes must be at least 10".to_string());
        need(s.decay_h > 0.0 && g.radius > 2.0 * s.decay_h, "decay_h must be positive and below radius / 2".to_string());
        need(s.decay_half_extent > 4.0 * g.radius, "decay_half_extent must exceed 4 radius".to_string());
        need(s.decay_h <= 0.0 || is_multiple(2.0 * s.decay_half_extent, s.decay_h), "decay_h must divide 2 decay_half_extent".to_string());
        need((0.0..1.0).contains(&s.window_ramp), "window_ramp must lie in [0, 1)".to_string());
        need(1.0 <= s.cutoff_inner && s.cutoff_inner < s.cutoff_outer, "cutoff radii must satisfy 1 <= inner < outer".to_string());
        need(s.decay_pulse_width > 0.0, "decay_pulse_width must be positive".to_string());
        need(s.reflection_fraction > 0.0 && s.reflection_fraction <= 1.0, "reflection_fraction must lie in (0, 1]".to_string());
        let d = &self.diagnostics;
        need(1.0 < d.window_inner && d.window_inner < d.window_outer, "diagnostics window must satisfy 1 < inner < outer".to_string());
        need(
            g.radius * d.window_outer < g.half_extent - n.sponge_width,
            "diagnostics window must stay outside the sponge".to_string(),
        );
        let e = &self.sweep.eps;
        need(!e.is_empty(), "eps list must not be empty".to_string());
        need(e.iter().all(|&x| x > 0.0 && x <= 1.0), "eps values must lie in (0, 1]".to_string());
        need(e.windows(2).all(|w| w[1] < w[0]), "eps list must be strictly decreasing".to_string());
        let sc = &self.schedule;
        need(sc.final_time >= 0.0, "final_time must be nonnegative".to_string());
        need(sc.final_time <= m.horizon, format!("final_time {} exceeds the motion horizon {}", sc.final_time, m.horizon));
        need(sc.snapshots >= 1, "snapshots must be at least 1".to_string());
        need(sc.field_files >= 1, "field_files must be at least 1".to_string());
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigValidation(v))
        }
    }

    /// Snapshot times `k T / n`.
    pub fn schedule_times(&self) -> Vec<f64> {
        let sc = &self.schedule;
        if sc.final_time == 0.0 {
            return vec![0.0];
        }
        (0..=sc.snapshots)
            .map(|k| sc.final_time * k as f64 / sc.snapshots as f64)
            .collect()
    }
}
