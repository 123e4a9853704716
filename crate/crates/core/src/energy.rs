//! Discrete energy inequality monitor.
//!
//! Left side: kinetic plus scaled relative-entropy energy at time `t` plus the
//! viscous dissipation accumulated up to `t`. Right side: the initial energy
//! plus the work terms involving the extension field `V`.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::compressible::{
    convective_work_in, momentum_dot, momentum_dot_in, stress_work_in, CompressibleSolver,
    FluidState, StepLog,
};
use crate::constitutive::PressureLaw;
use crate::extension::ExtensionField;
use crate::field::FaceField;
use crate::grid::{CellWindow, Grid};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub t: f64,
    pub eps: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub dissipation: f64,
    /// Accumulated `int (S:grad V - rho u(x)u : grad V - rho u . dV/dt)`.
    pub v_terms: f64,
    /// `int rho u . V (t) - int rho u . V (0)`.
    pub coupling: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
    pub flag: bool,
}

/// Kinetic energy over interior faces.
pub fn kinetic_energy(grid: &Grid, state: &FluidState) -> f64 {
    0.5 * momentum_dot(grid, &state.density, &state.velocity, &state.velocity)
}

/// `eps^-2 int E(rho | rho_ref)`.
pub fn potential_energy(grid: &Grid, law: &PressureLaw, state: &FluidState) -> f64 {
    let mut s = 0.0;
    for c in 0..grid.n_cells() {
        if grid.is_active(c) {
            s += law.entropy(state.density[c]);
        }
    }
    s * grid.cell_area() / (state.eps * state.eps)
}

/// Tracks the time integrals of the energy inequality along a run.
#[derive(Clone, Debug)]
pub struct EnergyMonitor {
    extension: Option<ExtensionField>,
    /// Cells covering the support of `V`.
    window: CellWindow,
    initial_energy: f64,
    initial_coupling: f64,
    dissipation: f64,
    v_terms: f64,
    tolerance: f64,
    /// Last (velocity, acceleration) and the matching `V` and `dV/dt`.
    cache: RefCell<Option<([f64; 4], FaceField, FaceField)>>,
}

impl EnergyMonitor {
    /// `tolerance_fraction` scales the initial left side into the absolute
    /// tolerance of the flag.
    pub fn new(
        solver: &CompressibleSolver,
        initial: &FluidState,
        extension: Option<ExtensionField>,
        tolerance_fraction: f64,
    ) -> EnergyMonitor {
        let g = &solver.grid;
        let initial_energy = kinetic_energy(g, initial) + potential_energy(g, &solver.law, initial);
        let window = match &extension {
            Some(ext) => g.window_around_origin(ext.support, 2),
            None => g.full_window(),
        };
        let mut m = EnergyMonitor {
            extension,
            window,
            initial_energy,
            initial_coupling: 0.0,
            dissipation: 0.0,
            v_terms: 0.0,
            tolerance: tolerance_fraction * initial_energy,
            cache: RefCell::new(None),
        };
        m.initial_coupling = m.coupling(solver, initial);
        m
    }

    /// Runs `f` on `V(t)` and its rate, or returns `None` for a static
    /// obstacle.
    fn with_extension<R>(
        &self,
        solver: &CompressibleSolver,
        t: f64,
        f: impl FnOnce(&FaceField, &FaceField) -> R,
    ) -> Option<R> {
        let ext = self.extension.as_ref()?;
        if solver.path.is_static() {
            return None;
        }
        let motion = solver.path.eval_unchecked(t);
        let key = [
            motion.velocity[0],
            motion.velocity[1],
            motion.acceleration[0],
            motion.acceleration[1],
        ];
        let mut cache = self.cache.borrow_mut();
        if cache.as_ref().map_or(true, |(k, _, _)| *k != key) {
            let v = ext.field(&solver.grid, motion.velocity);
            let rate = ext.lab_rate(&solver.grid, &motion);
            *cache = Some((key, v, rate));
        }
        let (_, v, rate) = cache.as_ref().unwrap();
        Some(f(v, rate))
    }

    fn coupling(&self, solver: &CompressibleSolver, state: &FluidState) -> f64 {
        self.with_extension(solver, state.time, |v, _| {
            momentum_dot_in(&solver.grid, &state.density, &state.velocity, v, self.window)
        })
        .unwrap_or(0.0)
    }

    /// Adds the left-point contribution of the step `[t, t + dt]` that
    /// produced `log` from `state`.
    pub fn accumulate(&mut self, solver: &CompressibleSolver, state: &FluidState, dt: f64, log: &StepLog) {
        let g = &solver.grid;
        let u = &state.velocity;
        self.dissipation += log.dissipation;
        let work = self.with_extension(solver, state.time, |v, rate| {
            let w = self.window;
            stress_work_in(g, &solver.visc, u, v, w)
                - convective_work_in(g, &state.density, u, v, w)
                - momentum_dot_in(g, &state.density, u, rate, w)
        });
        self.v_terms += dt * work.unwrap_or(0.0);
    }

    pub fn report(&self, solver: &CompressibleSolver, state: &FluidState) -> EnergyRecord {
        let g = &solver.grid;
        let kinetic = kinetic_energy(g, state);
        let potential = potential_energy(g, &solver.law, state);
        let coupling = self.coupling(solver, state) - self.initial_coupling;
        let lhs = kinetic + potential + self.dissipation;
        let rhs = self.initial_energy + coupling + self.v_terms;
        EnergyRecord {
            t: state.time,
            eps: state.eps,
            kinetic,
            potential,
            dissipation: self.dissipation,
            v_terms: self.v_terms,
            coupling,
            lhs,
            rhs,
            tolerance: self.tolerance,
            flag: lhs <= rhs + self.tolerance,
        }
    }
}
