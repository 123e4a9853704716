//! Projection solver for the incompressible limit system in the body frame,
//! `rho_ref (dU/dt + ((U - m') . grad) U) + grad Pi = div S(grad U)`,
//! `div U = 0`, `U = m'` on the obstacle.
//!
//! The boundary data are carried by the solenoidal extension `V(t)`; each
//! step advances the momentum equation explicitly with the same stencils as
//! the compressible solver and then sets `U = V + H(U* - V)`, which is
//! solenoidal and satisfies the boundary condition exactly.

use crate::compressible::{build_stencils, stress_fields, FaceStencil, StaggeredStress, UpdateContext};
use crate::constitutive::Viscosity;
use crate::error::{Error, Result};
use crate::extension::ExtensionField;
use crate::field::FaceField;
use crate::grid::Grid;
use crate::motion::MotionPath;
use crate::spectral::helmholtz::HelmholtzProjector;

/// Velocity at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct IncompressibleState {
    pub velocity: FaceField,
    pub time: f64,
}

#[derive(Clone, Debug)]
pub struct IncompressibleSolver {
    pub grid: Grid,
    pub visc: Viscosity,
    pub reference_density: f64,
    pub path: MotionPath,
    pub cfl: f64,
    extension: Option<ExtensionField>,
    projector: HelmholtzProjector,
    xstencils: Vec<FaceStencil>,
    ystencils: Vec<FaceStencil>,
    density: Vec<f64>,
    zeros: Vec<f64>,
}

impl IncompressibleSolver {
    /// `extension` must be given whenever the obstacle moves.
    pub fn new(
        grid: Grid,
        visc: Viscosity,
        reference_density: f64,
        path: MotionPath,
        extension: Option<ExtensionField>,
        cfl: f64,
    ) -> Result<IncompressibleSolver> {
        if !(cfl > 0.0 && cfl <= 0.5) {
            return Err(Error::InvalidParameter(format!("CFL factor {cfl} must lie in (0, 0.5]")));
        }
        if !(reference_density > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "reference density {reference_density} must be positive"
            )));
        }
        if extension.is_none() && !path.is_static() {
            return Err(Error::InvalidParameter(
                "a moving obstacle needs an extension field".into(),
            ));
        }
        let projector = HelmholtzProjector::new(&grid)?;
        let (xstencils, ystencils) = build_stencils(&grid);
        let n = grid.n_cells();
        Ok(IncompressibleSolver {
            grid,
            visc,
            reference_density,
            path,
            cfl,
            extension,
            projector,
            xstencils,
            ystencils,
            density: vec![reference_density; n],
            zeros: vec![0.0; n],
        })
    }

    pub fn projector(&self) -> &HelmholtzProjector {
        &self.projector
    }

    /// The extension `V(t)`, zero for a static obstacle.
    pub fn extension_at(&self, t: f64) -> FaceField {
        match &self.extension {
            Some(e) => e.field(&self.grid, self.path.eval_unchecked(t).velocity),
            None => FaceField::zeros(&self.grid),
        }
    }

    /// Solenoidal part `H(u0)` of a velocity field.
    pub fn project_initial(&self, u0: &FaceField) -> Result<FaceField> {
        self.projector.project(u0)
    }

    /// Initial state `U(0) = V(0) + H(u0 - V(0))`: the divergence-free field
    /// with the obstacle boundary values closest to `u0`.
    pub fn initial_state(&self, u0: &FaceField) -> Result<IncompressibleState> {
        let v = self.extension_at(0.0);
        let mut d = u0.clone();
        d.axpy(-1.0, &v);
        let mut u = self.projector.project(&d)?;
        u.axpy(1.0, &v);
        Ok(IncompressibleState { velocity: u, time: 0.0 })
    }

    pub fn stability_limit(&self, state: &IncompressibleState) -> f64 {
        let h = self.grid.h();
        let m = self.path.eval_unchecked(state.time).velocity;
        let speed = state.velocity.max_abs() + m[0].hypot(m[1]);
        let advective = if speed > 0.0 { h / speed } else { f64::INFINITY };
        let viscous = h * h * self.reference_density / (4.0 * self.visc.shear);
        advective.min(viscous)
    }

    pub fn stable_dt(&self, state: &IncompressibleState) -> f64 {
        self.cfl * self.stability_limit(state)
    }

    pub fn step(&self, state: &IncompressibleState, dt: f64) -> Result<IncompressibleState> {
        let limit = self.cfl * self.stability_limit(state);
        if dt > limit * (1.0 + 1e-12) {
            return Err(Error::CflViolation { dt, limit });
        }
        let g = &self.grid;
        let u = &state.velocity;
        let mv = self.path.eval_unchecked(state.time).velocity;
        let StaggeredStress { sxx, syy, sxy, .. } = stress_fields(g, &self.visc, u);
        let ctx = UpdateContext {
            h: g.h(),
            dt,
            inv_eps2: 0.0,
            enthalpy: &self.zeros,
            rho: &self.density,
            shear: &sxy,
        };
        let mut star = u.clone();
        ctx.update(&self.xstencils, &u.x, &u.y, &sxx, [mv[0], mv[1]], &mut star.x);
        ctx.update(&self.ystencils, &u.y, &u.x, &syy, [mv[1], mv[0]], &mut star.y);
        if !star.is_finite() {
            return Err(Error::NanDetected("velocity"));
        }
        let t = state.time + dt;
        let v = self.extension_at(t);
        star.axpy(-1.0, &v);
        let mut next = self.projector.project(&star)?;
        next.axpy(1.0, &v);
        Ok(IncompressibleState { velocity: next, time: t })
    }

    /// Integrates to every time of `schedule` and returns the snapshots.
    pub fn run(&self, initial: IncompressibleState, schedule: &[f64]) -> Result<Vec<IncompressibleState>> {
        let horizon = self.path.horizon;
        if let Some(&last) = schedule.last() {
            if last > horizon * (1.0 + 1e-12) {
                return Err(Error::OutOfHorizon { t: last, horizon });
            }
        }
        let mut out = Vec::with_capacity(schedule.len());
        let mut state = initial;
        for &target in schedule {
            while state.time < target {
                let remaining = target - state.time;
                let mut dt = self.stable_dt(&state);
                if dt >= remaining {
                    dt = remaining;
                } else if dt > 0.5 * remaining {
                    dt = 0.5 * remaining;
                }
                state = self.step(&state, dt)?;
                if target - state.time <= 1e-14 * target.max(1.0) {
                    state.time = target;
                }
            }
            out.push(state.clone());
        }
        Ok(out)
    }
}
