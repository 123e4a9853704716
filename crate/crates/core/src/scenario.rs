//! Builds grids, laws, solvers and initial data from a configuration, and
//! holds the scenario files shipped with the crate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::compressible::{CompressibleSolver, IllPreparedData, Sponge};
use crate::config::{parse_config, ExperimentConfig, InitialConfig, VelocityKind};
use crate::constitutive::{PressureLaw, Viscosity};
use crate::diagnostics::Annulus;
use crate::error::{Error, Result};
use crate::extension::ExtensionField;
use crate::field::{curl_of_nodes, sample_cells, sample_nodes, FaceField};
use crate::grid::{build_grid, Grid};
use crate::incompressible::IncompressibleSolver;
use crate::motion::MotionPath;

/// Scenario files shipped with the crate, by name.
pub const SHIPPED_SCENARIOS: [(&str, &str); 2] = [
    ("default", include_str!("../scenarios/default.toml")),
    ("static", include_str!("../scenarios/static.toml")),
];

pub fn shipped_config(name: &str) -> Result<ExperimentConfig> {
    let (_, text) = SHIPPED_SCENARIOS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::InvalidParameter(format!("no shipped scenario named {name}")))?;
    parse_config(text)
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: ExperimentConfig,
    pub grid: Grid,
    pub law: PressureLaw,
    pub visc: Viscosity,
    pub path: MotionPath,
    pub extension: Option<ExtensionField>,
    pub sponge: Option<Sponge>,
    pub initial: IllPreparedData,
    pub window: Annulus,
}

impl Scenario {
    pub fn from_config(config: &ExperimentConfig) -> Result<Scenario> {
        config.validate()?;
        let g = &config.geometry;
        let grid = build_grid(g.dimension, g.half_extent, g.radius, g.h)?;
        let p = &config.physics;
        let law = PressureLaw::new(p.pressure_coefficient, p.gamma, p.reference_density)?;
        let visc = Viscosity::new(p.shear_viscosity, p.bulk_viscosity)?;
        let path = MotionPath::new(config.motion.path, config.motion.horizon);
        let extension = if path.is_static() {
            None
        } else {
            Some(ExtensionField::new(&grid, config.numerics.extension_support)?)
        };
        let n = &config.numerics;
        let sponge = (n.sponge_width > 0.0).then_some(Sponge {
            width: n.sponge_width,
            exponent: n.sponge_exponent,
        });
        let initial = initial_data(&grid, &config.initial, config.seed);
        let d = &config.diagnostics;
        Ok(Scenario {
            config: config.clone(),
            grid,
            law,
            visc,
            path,
            extension,
            sponge,
            initial,
            window: Annulus {
                inner: d.window_inner * g.radius,
                outer: d.window_outer * g.radius,
            },
        })
    }

    pub fn compressible_solver(&self) -> Result<CompressibleSolver> {
        CompressibleSolver::new(
            self.grid.clone(),
            self.law,
            self.visc,
            self.path,
            self.sponge,
            self.config.numerics.cfl,
        )
    }

    pub fn incompressible_solver(&self) -> Result<IncompressibleSolver> {
        IncompressibleSolver::new(
            self.grid.clone(),
            self.visc,
            self.law.reference_density,
            self.path,
            self.extension.clone(),
            self.config.numerics.cfl,
        )
    }

    /// Extension field and obstacle velocity at time `t`.
    pub fn frame(&self, t: f64) -> (FaceField, [f64; 2]) {
        let m = self.path.eval_unchecked(t);
        let v = match &self.extension {
            Some(e) => e.field(&self.grid, m.velocity),
            None => FaceField::zeros(&self.grid),
        };
        (v, m.velocity)
    }

    /// Coarse grid on the flow domain used for the forcing channels.
    pub fn spectral_grid(&self) -> Result<Grid> {
        let g = &self.config.geometry;
        build_grid(g.dimension, g.half_extent, g.radius, self.config.spectral.h)
    }

    /// Large domain of the local decay functional.
    pub fn decay_grid(&self) -> Result<Grid> {
        let g = &self.config.geometry;
        let s = &self.config.spectral;
        build_grid(g.dimension, s.decay_half_extent, g.radius, s.decay_h)
    }

    /// Horizon of the decay functional: a fraction of the time a wave at
    /// the smallest `eps` needs to reach the box edge from the obstacle and
    /// return.
    pub fn decay_horizon(&self) -> f64 {
        let s = &self.config.spectral;
        let eps_min = self.config.sweep.eps.iter().copied().fold(f64::INFINITY, f64::min);
        let c = self.law.reference_slope().sqrt();
        s.reflection_fraction * 2.0 * (s.decay_half_extent - self.config.geometry.radius) * eps_min / c
    }
}

/// Normalized cosine bump of radius `width`.
fn cos_bump(p: [f64; 2], center: [f64; 2], width: f64) -> f64 {
    let r = (p[0] - center[0]).hypot(p[1] - center[1]) / width;
    if r < 1.0 {
        0.5 * (1.0 + (std::f64::consts::PI * r).cos())
    } else {
        0.0
    }
}

/// Density pulse profile `rho^(1)_0`, usable on any grid.
pub fn pulse_profile(grid: &Grid, init: &InitialConfig) -> Vec<f64> {
    cosine_pulse(grid, init.pulse_amplitude, init.pulse_center, init.pulse_width)
}

pub fn cosine_pulse(grid: &Grid, amplitude: f64, center: [f64; 2], width: f64) -> Vec<f64> {
    sample_cells(grid, 0.0, |p| amplitude * cos_bump(p, center, width))
}

fn gaussian(p: [f64; 2], center: [f64; 2], width: f64) -> f64 {
    let r2 = (p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2);
    (-r2 / (2.0 * width * width)).exp()
}

/// Curl of `s g(y - c0)` plus the gradient of `t g(y - c1)` for Gaussians `g`.
fn add_vortex_and_gradient(
    grid: &Grid,
    u: &mut FaceField,
    vortices: &[([f64; 2], f64, f64)],
    gradients: &[([f64; 2], f64, f64)],
) {
    let psi = sample_nodes(grid, |p| vortices.iter().map(|&(c, s, w)| s * gaussian(p, c, w)).sum());
    u.axpy(1.0, &curl_of_nodes(grid, &psi));
    u.axpy(
        1.0,
        &FaceField::sample(grid, |p| {
            let mut g = [0.0; 2];
            for &(c, s, w) in gradients {
                let q = s * gaussian(p, c, w) / (w * w);
                g[0] -= q * (p[0] - c[0]);
                g[1] -= q * (p[1] - c[1]);
            }
            g
        }),
    );
}

/// Ill-prepared initial data: density pulse and a velocity with both a
/// solenoidal and a gradient component.
pub fn initial_data(grid: &Grid, init: &InitialConfig, seed: u64) -> IllPreparedData {
    let mut velocity = FaceField::zeros(grid);
    match init.velocity_kind {
        VelocityKind::Rest => {}
        VelocityKind::VortexGradient => add_vortex_and_gradient(
            grid,
            &mut velocity,
            &[(init.vortex_center, init.vortex_strength, init.vortex_width)],
            &[(init.gradient_center, init.gradient_strength, init.gradient_width)],
        ),
        VelocityKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = grid.obstacle_radius().unwrap_or(0.0);
            let reach = 0.5 * grid.extent()[0];
            let place = |rng: &mut ChaCha8Rng| {
                let r = rng.gen_range(2.0 * a..(2.0 * a).max(reach));
                let th = rng.gen_range(0.0..std::f64::consts::TAU);
                [r * th.cos(), r * th.sin()]
            };
            let vortices: Vec<_> = (0..4)
                .map(|_| (place(&mut rng), init.vortex_strength * rng.gen_range(-1.0..1.0), init.vortex_width))
                .collect();
            let gradients: Vec<_> = (0..2)
                .map(|_| (place(&mut rng), init.gradient_strength * rng.gen_range(-1.0..1.0), init.gradient_width))
                .collect();
            add_vortex_and_gradient(grid, &mut velocity, &vortices, &gradients);
        }
    }
    IllPreparedData {
        density_perturbation: pulse_profile(grid, init),
        velocity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{divergence, face_norm};

    #[test]
    fn shipped_scenarios_are_valid() {
        for (name, _) in SHIPPED_SCENARIOS {
            let c = shipped_config(name).unwrap();
            let s = Scenario::from_config(&c).unwrap();
            assert!(s.grid.coarsen_factor(&s.spectral_grid().unwrap()).is_some());
            s.decay_grid().unwrap();
            assert!(s.decay_horizon() > 0.0);
        }
    }

    #[test]
    fn default_data_is_ill_prepared() {
        let c = shipped_config("default").unwrap();
        let s = Scenario::from_config(&c).unwrap();
        let d = &s.initial;
        assert!(d.density_perturbation.iter().any(|x| *x > 0.9));
        let div = divergence(&s.grid, &d.velocity);
        assert!(div.iter().any(|x| x.abs() > 1.0));
        assert!(face_norm(&s.grid, &d.velocity) > 0.0);
    }

    #[test]
    fn random_data_is_seeded() {
        let mut c = shipped_config("static").unwrap();
        c.initial.velocity_kind = VelocityKind::Random;
        let a = Scenario::from_config(&c).unwrap().initial.velocity;
        let b = Scenario::from_config(&c).unwrap().initial.velocity;
        assert_eq!(a, b);
        c.seed += 1;
        let d = Scenario::from_config(&c).unwrap().initial.velocity;
        assert_ne!(a, d);
    }
}
