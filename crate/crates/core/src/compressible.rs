//! Explicit finite-volume solver for the scaled barotropic Navier-Stokes
//! system in the body-fixed frame.
//!
//! Unknowns are the density at cell centers and the laboratory velocity on
//! faces, both expressed in body coordinates `y = x - m(t)`. Transport uses
//! the relative velocity `w = u - m'`. A step updates the density first
//! (Rusanov flux with the acoustic wave speed) and then the velocity with
//! the enthalpy gradient of the new density, which gives a stable
//! forward-backward treatment of the fast acoustic coupling.

use crate::constitutive::{PressureLaw, Viscosity};
use crate::error::{Error, Result};
use crate::field::FaceField;
use crate::grid::{CellWindow, FaceKind, Grid};
use crate::motion::{MotionPath, MotionSample};

/// Density and face velocity at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct FluidState {
    pub density: Vec<f64>,
    pub velocity: FaceField,
    pub time: f64,
    pub eps: f64,
}

/// Initial perturbation: `rho_0 = rho_ref + eps * density_perturbation`.
#[derive(Clone, Debug)]
pub struct IllPreparedData {
    pub density_perturbation: Vec<f64>,
    pub velocity: FaceField,
}

/// Absorbing rim: relaxes toward the far-field state with a per-step blend
/// factor growing from 0 at the inner edge to 1 at the box boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sponge {
    pub width: f64,
    pub exponent: f64,
}

impl Sponge {
    #[inline]
    pub fn blend(&self, distance_to_rim: f64) -> f64 {
        if self.width <= 0.0 || distance_to_rim >= self.width {
            return 0.0;
        }
        let s = (1.0 - distance_to_rim / self.width).clamp(0.0, 1.0);
        s.powf(self.exponent)
    }
}

/// Imposes the boundary values of the velocity: `u . n = m' . n` on obstacle
/// walls and `u = 0` at the truncation boundary.
pub fn apply_velocity_bc(grid: &Grid, u: &mut FaceField, obstacle_velocity: [f64; 2]) {
    for (v, k) in u.x.iter_mut().zip(grid.xface_kinds()) {
        match k {
            FaceKind::Wall => *v = obstacle_velocity[0],
            FaceKind::Outer | FaceKind::Inactive => *v = 0.0,
            FaceKind::Interior => {}
        }
    }
    for (v, k) in u.y.iter_mut().zip(grid.yface_kinds()) {
        match k {
            FaceKind::Wall => *v = obstacle_velocity[1],
            FaceKind::Outer | FaceKind::Inactive => *v = 0.0,
            FaceKind::Interior => {}
        }
    }
}

/// Builds the initial state; fails with `Vacuum` if any active cell has
/// nonpositive density.
pub fn init_state(
    grid: &Grid,
    law: &PressureLaw,
    data: &IllPreparedData,
    eps: f64,
    motion: &MotionSample,
) -> Result<FluidState> {
    let rho_ref = law.reference_density;
    let mut density = vec![rho_ref; grid.n_cells()];
    for c in 0..grid.n_cells() {
        if grid.is_active(c) {
            let rho = rho_ref + eps * data.density_perturbation[c];
            if !(rho > 0.0) {
                return Err(Error::Vacuum { cell: c, value: rho });
            }
            density[c] = rho;
        }
    }
    let mut velocity = data.velocity.clone();
    apply_velocity_bc(grid, &mut velocity, motion.velocity);
    Ok(FluidState {
        density,
        velocity,
        time: 0.0,
        eps,
    })
}

/// Bookkeeping of one step that the energy and mass monitors need.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepLog {
    /// Mass added by the sponge relaxation.
    pub sponge_mass: f64,
    /// Mass entering through the truncation boundary.
    pub boundary_mass: f64,
    /// Viscous dissipation `dt * int S(grad u):grad u` at the start of the step.
    pub dissipation: f64,
}

#[derive(Clone, Debug)]
pub struct CompressibleSolver {
    pub grid: Grid,
    pub law: PressureLaw,
    pub visc: Viscosity,
    pub path: MotionPath,
    pub sponge: Option<Sponge>,
    pub cfl: f64,
    cell_blend: Vec<f64>,
    xface_blend: Vec<f64>,
    yface_blend: Vec<f64>,
    xstencils: Vec<FaceStencil>,
    ystencils: Vec<FaceStencil>,
}

pub const MAX_CFL: f64 = 0.3;

impl CompressibleSolver {
    pub fn new(
        grid: Grid,
        law: PressureLaw,
        visc: Viscosity,
        path: MotionPath,
        sponge: Option<Sponge>,
        cfl: f64,
    ) -> Result<CompressibleSolver> {
        if !(cfl > 0.0 && cfl <= MAX_CFL) {
            return Err(Error::InvalidParameter(format!(
                "CFL factor {cfl} must lie in (0, {MAX_CFL}]"
            )));
        }
        let (mut cell_blend, mut xface_blend, mut yface_blend) = (
            vec![0.0; grid.n_cells()],
            vec![0.0; grid.n_xfaces()],
            vec![0.0; grid.n_yfaces()],
        );
        if let Some(s) = sponge {
            for j in 0..grid.ny() {
                for i in 0..grid.nx() {
                    cell_blend[grid.cell(i, j)] = s.blend(grid.distance_to_rim(grid.cell_center(i, j)));
                }
                for i in 0..=grid.nx() {
                    xface_blend[grid.xface(i, j)] =
                        s.blend(grid.distance_to_rim(grid.xface_center(i, j)));
                }
            }
            for j in 0..=grid.ny() {
                for i in 0..grid.nx() {
                    yface_blend[grid.yface(i, j)] =
                        s.blend(grid.distance_to_rim(grid.yface_center(i, j)));
                }
            }
        }
        let (xstencils, ystencils) = build_stencils(&grid);
        Ok(CompressibleSolver {
            xstencils,
            ystencils,
            grid,
            law,
            visc,
            path,
            sponge,
            cfl,
            cell_blend,
            xface_blend,
            yface_blend,
        })
    }

    /// Largest stable step for the given state before the CFL factor is
    /// applied: the minimum of the acoustic, advective and viscous limits.
    pub fn stability_limit(&self, state: &FluidState) -> f64 {
        let g = &self.grid;
        let h = g.h();
        let rho_ref = self.law.reference_density;
        let mut rho_max = 0.0_f64;
        for c in 0..g.n_cells() {
            if g.is_active(c) {
                rho_max = rho_max.max(state.density[c]);
            }
        }
        let acoustic = state.eps * h
            / (self.law.reference_slope() * (rho_max / rho_ref).powf(self.law.exponent - 1.0)).sqrt();
        let motion = self.path.eval_unchecked(state.time);
        let speed = state.velocity.max_abs() + motion.velocity[0].hypot(motion.velocity[1]);
        let advective = if speed > 0.0 { h / speed } else { f64::INFINITY };
        let viscous = h * h * rho_ref / (4.0 * self.visc.shear);
        acoustic.min(advective).min(viscous)
    }

    /// Step size used by `run`: the CFL factor times the stability limit.
    pub fn stable_dt(&self, state: &FluidState) -> f64 {
        self.cfl * self.stability_limit(state)
    }

    /// Advances the state by `dt`.
    pub fn step(&self, state: &FluidState, dt: f64, log: &mut StepLog) -> Result<FluidState> {
        let limit = self.stability_limit(state);
        if dt > self.cfl * limit * (1.0 + 1e-12) {
            return Err(Error::CflViolation {
                dt,
                limit: self.cfl * limit,
            });
        }
        let g = &self.grid;
        let (nx, ny, h) = (g.nx(), g.ny(), g.h());
        let eps = state.eps;
        let rho_ref = self.law.reference_density;
        let motion = self.path.eval_unchecked(state.time);
        let mv = motion.velocity;
        let rho = &state.density;
        let u = &state.velocity;

        // Mass fluxes through every face.
        let sound = |r: f64| self.law.dp(r).sqrt() / eps;
        let mut fx = vec![0.0; g.n_xfaces()];
        let mut boundary_in = 0.0;
        for j in 0..ny {
            for i in 0..=nx {
                let k = g.xface(i, j);
                match g.xface_kind(k) {
                    FaceKind::Interior => {
                        let (rl, rr) = (rho[g.cell(i - 1, j)], rho[g.cell(i, j)]);
                        let w = u.x[k] - mv[0];
                        let alpha = w.abs() + sound(0.5 * (rl + rr));
                        fx[k] = 0.5 * (rl + rr) * w - 0.5 * alpha * (rr - rl);
                    }
                    FaceKind::Outer => {
                        let w = -mv[0];
                        let (rl, rr) = if i == 0 {
                            (rho_ref, rho[g.cell(0, j)])
                        } else {
                            (rho[g.cell(nx - 1, j)], rho_ref)
                        };
                        fx[k] = w * if w > 0.0 { rl } else { rr };
                        boundary_in += if i == 0 { fx[k] } else { -fx[k] };
                    }
                    _ => {}
                }
            }
        }
        let mut fy = vec![0.0; g.n_yfaces()];
        for j in 0..=ny {
            for i in 0..nx {
                let k = g.yface(i, j);
                match g.yface_kind(k) {
                    FaceKind::Interior => {
                        let (rl, rr) = (rho[g.cell(i, j - 1)], rho[g.cell(i, j)]);
                        let w = u.y[k] - mv[1];
                        let alpha = w.abs() + sound(0.5 * (rl + rr));
                        fy[k] = 0.5 * (rl + rr) * w - 0.5 * alpha * (rr - rl);
                    }
                    FaceKind::Outer => {
                        let w = -mv[1];
                        let (rl, rr) = if j == 0 {
                            (rho_ref, rho[g.cell(i, 0)])
                        } else {
                            (rho[g.cell(i, ny - 1)], rho_ref)
                        };
                        fy[k] = w * if w > 0.0 { rl } else { rr };
                        boundary_in += if j == 0 { fy[k] } else { -fy[k] };
                    }
                    _ => {}
                }
            }
        }
        log.boundary_mass += boundary_in * h * dt;

        let mut rho_new = rho.clone();
        let lam = dt / h;
        for j in 0..ny {
            for i in 0..nx {
                let c = g.cell(i, j);
                if !g.is_active(c) {
                    continue;
                }
                let div = fx[g.xface(i + 1, j)] - fx[g.xface(i, j)] + fy[g.yface(i, j + 1)]
                    - fy[g.yface(i, j)];
                let r = rho[c] - lam * div;
                if !r.is_finite() {
                    return Err(Error::NanDetected("density"));
                }
                if r <= 0.0 {
                    return Err(Error::Vacuum { cell: c, value: r });
                }
                rho_new[c] = r;
            }
        }

        // Velocity update on interior faces.
        let enthalpy: Vec<f64> = rho_new.iter().map(|&r| self.law.enthalpy(r)).collect();
        let StaggeredStress { sxx, syy, sxy, work } = stress_fields(g, &self.visc, u);
        log.dissipation += dt * work;
        let inv_eps2 = 1.0 / (eps * eps);
        let mut u_new = u.clone();
        let ctx = UpdateContext {
            h,
            dt,
            inv_eps2,
            enthalpy: &enthalpy,
            rho: &rho_new,
            shear: &sxy,
        };
        ctx.update(&self.xstencils, &u.x, &u.y, &sxx, [mv[0], mv[1]], &mut u_new.x);
        ctx.update(&self.ystencils, &u.y, &u.x, &syy, [mv[1], mv[0]], &mut u_new.y);
        if !u_new.is_finite() {
            return Err(Error::NanDetected("velocity"));
        }
        let t_new = state.time + dt;
        let next_motion = self.path.eval_unchecked(t_new);
        apply_velocity_bc(g, &mut u_new, next_motion.velocity);

        if self.sponge.is_some() {
            let mut added = 0.0;
            for c in 0..g.n_cells() {
                let b = self.cell_blend[c];
                if b > 0.0 && g.is_active(c) {
                    let d = -b * (rho_new[c] - rho_ref);
                    rho_new[c] += d;
                    added += d;
                }
            }
            log.sponge_mass += added * g.cell_area();
            for (v, (b, k)) in u_new
                .x
                .iter_mut()
                .zip(self.xface_blend.iter().zip(g.xface_kinds()))
            {
                if *k == FaceKind::Interior {
                    *v -= b * *v;
                }
            }
            for (v, (b, k)) in u_new
                .y
                .iter_mut()
                .zip(self.yface_blend.iter().zip(g.yface_kinds()))
            {
                if *k == FaceKind::Interior {
                    *v -= b * *v;
                }
            }
        }

        Ok(FluidState {
            density: rho_new,
            velocity: u_new,
            time: t_new,
            eps,
        })
    }

    /// Total mass over active cells.
    pub fn mass(&self, state: &FluidState) -> f64 {
        let g = &self.grid;
        let mut m = 0.0;
        for c in 0..g.n_cells() {
            if g.is_active(c) {
                m += state.density[c];
            }
        }
        m * g.cell_area()
    }
}

/// Neighbour of a face value in an upwind difference.
#[derive(Clone, Copy, Debug)]
enum Neighbor {
    Face(u32),
    /// Zero-gradient ghost (neighbour inside the obstacle).
    Own,
    /// Far-field value 0 (neighbour outside the box).
    Zero,
}

/// Precomputed connectivity of one interior face for the momentum update.
/// "Along" runs parallel to the velocity component, "across" perpendicular.
#[derive(Clone, Debug)]
pub(crate) struct FaceStencil {
    face: u32,
    lo: u32,
    hi: u32,
    node_lo: u32,
    node_hi: u32,
    along: [Neighbor; 2],
    across: [Neighbor; 2],
    transverse: [u32; 4],
    n_transverse: u32,
}

pub(crate) fn build_stencils(g: &Grid) -> (Vec<FaceStencil>, Vec<FaceStencil>) {
    let (nx, ny) = (g.nx() as isize, g.ny() as isize);
    let xnb = |i: isize, j: isize| -> Neighbor {
        if i < 0 || j < 0 || i > nx || j >= ny {
            return Neighbor::Zero;
        }
        let k = g.xface(i as usize, j as usize);
        if g.xface_kind(k) == FaceKind::Inactive {
            Neighbor::Own
        } else {
            Neighbor::Face(k as u32)
        }
    };
    let ynb = |i: isize, j: isize| -> Neighbor {
        if i < 0 || j < 0 || i >= nx || j > ny {
            return Neighbor::Zero;
        }
        let k = g.yface(i as usize, j as usize);
        if g.yface_kind(k) == FaceKind::Inactive {
            Neighbor::Own
        } else {
            Neighbor::Face(k as u32)
        }
    };
    let nxu = g.nx();
    let mut xs = Vec::new();
    for j in 0..g.ny() {
        for i in 1..g.nx() {
            let k = g.xface(i, j);
            if g.xface_kind(k) != FaceKind::Interior {
                continue;
            }
            let mut transverse = [0u32; 4];
            let mut n = 0;
            for (a, b) in [(i - 1, j), (i, j), (i - 1, j + 1), (i, j + 1)] {
                let f = g.yface(a, b);
                if g.yface_kind(f) != FaceKind::Inactive {
                    transverse[n] = f as u32;
                    n += 1;
                }
            }
            let (ii, jj) = (i as isize, j as isize);
            xs.push(FaceStencil {
                face: k as u32,
                lo: g.cell(i - 1, j) as u32,
                hi: g.cell(i, j) as u32,
                node_lo: node(nxu, i, j) as u32,
                node_hi: node(nxu, i, j + 1) as u32,
                along: [xnb(ii - 1, jj), xnb(ii + 1, jj)],
                across: [xnb(ii, jj - 1), xnb(ii, jj + 1)],
                transverse,
                n_transverse: n as u32,
            });
        }
    }
    let mut ys = Vec::new();
    for j in 1..g.ny() {
        for i in 0..g.nx() {
            let k = g.yface(i, j);
            if g.yface_kind(k) != FaceKind::Interior {
                continue;
            }
            let mut transverse = [0u32; 4];
            let mut n = 0;
            for (a, b) in [(i, j - 1), (i + 1, j - 1), (i, j), (i + 1, j)] {
                let f = g.xface(a, b);
                if g.xface_kind(f) != FaceKind::Inactive {
                    transverse[n] = f as u32;
                    n += 1;
                }
            }
            let (ii, jj) = (i as isize, j as isize);
            ys.push(FaceStencil {
                face: k as u32,
                lo: g.cell(i, j - 1) as u32,
                hi: g.cell(i, j) as u32,
                node_lo: node(nxu, i, j) as u32,
                node_hi: node(nxu, i + 1, j) as u32,
                along: [ynb(ii, jj - 1), ynb(ii, jj + 1)],
                across: [ynb(ii - 1, jj), ynb(ii + 1, jj)],
                transverse,
                n_transverse: n as u32,
            });
        }
    }
    (xs, ys)
}

pub(crate) struct UpdateContext<'a> {
    pub h: f64,
    pub dt: f64,
    pub inv_eps2: f64,
    pub enthalpy: &'a [f64],
    pub rho: &'a [f64],
    pub shear: &'a [f64],
}

impl UpdateContext<'_> {
    /// Momentum update of one velocity component. `normal_stress` is the
    /// diagonal stress entry of this component, `frame` the obstacle
    /// velocity as (this component, other component).
    pub(crate) fn update(
        &self,
        stencils: &[FaceStencil],
        own: &[f64],
        other: &[f64],
        normal_stress: &[f64],
        frame: [f64; 2],
        out: &mut [f64],
    ) {
        let h = self.h;
        let value = |nb: Neighbor, me: f64| match nb {
            Neighbor::Face(f) => own[f as usize],
            Neighbor::Own => me,
            Neighbor::Zero => 0.0,
        };
        let upwind = |nbs: [Neighbor; 2], me: f64, w: f64| {
            if w > 0.0 {
                (me - value(nbs[0], me)) / h
            } else {
                (value(nbs[1], me) - me) / h
            }
        };
        for s in stencils {
            let k = s.face as usize;
            let (lo, hi) = (s.lo as usize, s.hi as usize);
            let me = own[k];
            let wn = me - frame[0];
            let mut wt = 0.0;
            for &f in &s.transverse[..s.n_transverse as usize] {
                wt += other[f as usize];
            }
            if s.n_transverse > 0 {
                wt /= s.n_transverse as f64;
            }
            wt -= frame[1];
            let adv = wn * upwind(s.along, me, wn) + wt * upwind(s.across, me, wt);
            let grad_h = (self.enthalpy[hi] - self.enthalpy[lo]) / h;
            let visc = (normal_stress[hi] - normal_stress[lo]) / h
                + (self.shear[s.node_hi as usize] - self.shear[s.node_lo as usize]) / h;
            let rho_f = 0.5 * (self.rho[lo] + self.rho[hi]);
            out[k] = me + self.dt * (-adv - self.inv_eps2 * grad_h + visc / rho_f);
        }
    }
}

#[inline]
pub(crate) fn node(nx: usize, i: usize, j: usize) -> usize {
    j * (nx + 1) + i
}

/// Viscous stress on the staggered grid: normal components at cell centers,
/// the shear component at nodes. Nodes not surrounded by four active cells
/// carry no shear stress (complete slip).
pub struct StaggeredStress {
    pub sxx: Vec<f64>,
    pub syy: Vec<f64>,
    pub sxy: Vec<f64>,
    /// `int S(grad u) : grad u` with the same stencils.
    pub work: f64,
}

pub fn stress_fields(grid: &Grid, visc: &Viscosity, u: &FaceField) -> StaggeredStress {
    let (nx, ny, h) = (grid.nx(), grid.ny(), grid.h());
    let mu = visc.shear;
    let lam = visc.trace_coefficient();
    let mut sxx = vec![0.0; grid.n_cells()];
    let mut syy = vec![0.0; grid.n_cells()];
    let mut work = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            let c = grid.cell(i, j);
            if !grid.is_active(c) {
                continue;
            }
            let dudx = (u.x[grid.xface(i + 1, j)] - u.x[grid.xface(i, j)]) / h;
            let dvdy = (u.y[grid.yface(i, j + 1)] - u.y[grid.yface(i, j)]) / h;
            let div = dudx + dvdy;
            sxx[c] = 2.0 * mu * dudx + lam * div;
            syy[c] = 2.0 * mu * dvdy + lam * div;
            work += sxx[c] * dudx + syy[c] * dvdy;
        }
    }
    let mut sxy = vec![0.0; (nx + 1) * (ny + 1)];
    for j in 1..ny {
        for i in 1..nx {
            if grid.node_is_interior(i, j) {
                let dudy = (u.x[grid.xface(i, j)] - u.x[grid.xface(i, j - 1)]) / h;
                let dvdx = (u.y[grid.yface(i, j)] - u.y[grid.yface(i - 1, j)]) / h;
                let shear = dudy + dvdx;
                sxy[node(nx, i, j)] = mu * shear;
                work += mu * shear * shear;
            }
        }
    }
    StaggeredStress {
        sxx,
        syy,
        sxy,
        work: work * grid.cell_area(),
    }
}

/// Discrete `int S(grad u) : grad v` using the staggered stress of `u` and
/// the matching difference stencils of `v`.
pub fn stress_work(grid: &Grid, visc: &Viscosity, u: &FaceField, v: &FaceField) -> f64 {
    stress_work_in(grid, visc, u, v, grid.full_window())
}

/// [`stress_work`] restricted to the cells of `w`; exact when `v` vanishes
/// outside `w` shrunk by one cell.
pub fn stress_work_in(grid: &Grid, visc: &Viscosity, u: &FaceField, v: &FaceField, w: CellWindow) -> f64 {
    let h = grid.h();
    let mu = visc.shear;
    let lam = visc.trace_coefficient();
    let mut s = 0.0;
    for j in w.j0..w.j1 {
        for i in w.i0..w.i1 {
            let c = grid.cell(i, j);
            if !grid.is_active(c) {
                continue;
            }
            let (xl, xr) = (grid.xface(i, j), grid.xface(i + 1, j));
            let (yb, yt) = (grid.yface(i, j), grid.yface(i, j + 1));
            let dudx = (u.x[xr] - u.x[xl]) / h;
            let dudy = (u.y[yt] - u.y[yb]) / h;
            let div = dudx + dudy;
            let dvdx = (v.x[xr] - v.x[xl]) / h;
            let dvdy = (v.y[yt] - v.y[yb]) / h;
            s += (2.0 * mu * dudx + lam * div) * dvdx + (2.0 * mu * dudy + lam * div) * dvdy;
        }
    }
    for j in w.j0.max(1)..w.j1.min(grid.ny() - 1) + 1 {
        for i in w.i0.max(1)..w.i1.min(grid.nx() - 1) + 1 {
            if !grid.node_is_interior(i, j) {
                continue;
            }
            let (xb, xt) = (grid.xface(i, j - 1), grid.xface(i, j));
            let (yl, yr) = (grid.yface(i - 1, j), grid.yface(i, j));
            let shear_u = (u.x[xt] - u.x[xb] + u.y[yr] - u.y[yl]) / h;
            let shear_v = (v.x[xt] - v.x[xb] + v.y[yr] - v.y[yl]) / h;
            s += mu * shear_u * shear_v;
        }
    }
    s * grid.cell_area()
}

/// Discrete `int rho (u (x) u) : grad v` with cell-averaged velocities.
pub fn convective_work(grid: &Grid, rho: &[f64], u: &FaceField, v: &FaceField) -> f64 {
    convective_work_in(grid, rho, u, v, grid.full_window())
}

/// [`convective_work`] restricted to the cells of `w`.
pub fn convective_work_in(grid: &Grid, rho: &[f64], u: &FaceField, v: &FaceField, w: CellWindow) -> f64 {
    let h = grid.h();
    let avg_x = |f: &FaceField, i: usize, j: usize| 0.5 * (f.x[grid.xface(i, j)] + f.x[grid.xface(i + 1, j)]);
    let avg_y = |f: &FaceField, i: usize, j: usize| 0.5 * (f.y[grid.yface(i, j)] + f.y[grid.yface(i, j + 1)]);
    // Cross derivative of a cell average, one-sided next to inactive cells.
    let deriv = |avg: &dyn Fn(usize, usize) -> f64, i: usize, j: usize, di: isize, dj: isize| -> f64 {
        let (ii, jj) = (i as isize, j as isize);
        let fwd = grid.active_ij(ii + di, jj + dj);
        let bwd = grid.active_ij(ii - di, jj - dj);
        let at = |a: isize, b: isize| avg(a as usize, b as usize);
        match (fwd, bwd) {
            (true, true) => (at(ii + di, jj + dj) - at(ii - di, jj - dj)) / (2.0 * h),
            (true, false) => (at(ii + di, jj + dj) - at(ii, jj)) / h,
            (false, true) => (at(ii, jj) - at(ii - di, jj - dj)) / h,
            (false, false) => 0.0,
        }
    };
    let vx = |i: usize, j: usize| avg_x(v, i, j);
    let vy = |i: usize, j: usize| avg_y(v, i, j);
    let mut s = 0.0;
    for j in w.j0..w.j1 {
        for i in w.i0..w.i1 {
            let c = grid.cell(i, j);
            if !grid.is_active(c) {
                continue;
            }
            let a = [avg_x(u, i, j), avg_y(u, i, j)];
            let g00 = (v.x[grid.xface(i + 1, j)] - v.x[grid.xface(i, j)]) / h;
            let g11 = (v.y[grid.yface(i, j + 1)] - v.y[grid.yface(i, j)]) / h;
            let g01 = deriv(&vx, i, j, 0, 1);
            let g10 = deriv(&vy, i, j, 1, 0);
            s += rho[c] * (a[0] * a[0] * g00 + a[0] * a[1] * (g01 + g10) + a[1] * a[1] * g11);
        }
    }
    s * grid.cell_area()
}

/// Face density: average of the two adjacent cells on interior faces.
#[inline]
pub(crate) fn face_density_x(grid: &Grid, rho: &[f64], i: usize, j: usize) -> f64 {
    0.5 * (rho[grid.cell(i - 1, j)] + rho[grid.cell(i, j)])
}

#[inline]
pub(crate) fn face_density_y(grid: &Grid, rho: &[f64], i: usize, j: usize) -> f64 {
    0.5 * (rho[grid.cell(i, j - 1)] + rho[grid.cell(i, j)])
}

/// Discrete `int rho u . v` over interior faces.
pub fn momentum_dot(grid: &Grid, rho: &[f64], u: &FaceField, v: &FaceField) -> f64 {
    momentum_dot_in(grid, rho, u, v, grid.full_window())
}

/// [`momentum_dot`] over the faces of the cells in `w`.
pub fn momentum_dot_in(grid: &Grid, rho: &[f64], u: &FaceField, v: &FaceField, w: CellWindow) -> f64 {
    let mut s = 0.0;
    for j in w.j0..w.j1 {
        for i in w.i0.max(1)..w.i1.min(grid.nx() - 1) + 1 {
            let k = grid.xface(i, j);
            if grid.xface_kind(k) == FaceKind::Interior {
                s += face_density_x(grid, rho, i, j) * u.x[k] * v.x[k];
            }
        }
    }
    for j in w.j0.max(1)..w.j1.min(grid.ny() - 1) + 1 {
        for i in w.i0..w.i1 {
            let k = grid.yface(i, j);
            if grid.yface_kind(k) == FaceKind::Interior {
                s += face_density_y(grid, rho, i, j) * u.y[k] * v.y[k];
            }
        }
    }
    s * grid.cell_area()
}

/// Sequence of snapshots taken at the scheduled times.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub snapshots: Vec<FluidState>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }
}

/// Integrates to every time in `schedule` (ascending, starting at the
/// initial time), shortening the last step before each sample time so that
/// snapshots land exactly on the schedule. `observer` sees every accepted
/// step as `(old state, new state, dt, log)`.
pub fn run(
    solver: &CompressibleSolver,
    initial: FluidState,
    schedule: &[f64],
    mut observer: impl FnMut(&FluidState, &FluidState, f64, &StepLog) -> Result<()>,
) -> Result<Trajectory> {
    let horizon = solver.path.horizon;
    if let Some(&last) = schedule.last() {
        if last > horizon * (1.0 + 1e-12) {
            return Err(Error::OutOfHorizon { t: last, horizon });
        }
    }
    let eps = initial.eps;
    let mut snapshots = Vec::with_capacity(schedule.len());
    let mut state = initial;
    let mut step_index = 0usize;
    for &target in schedule {
        while state.time < target {
            let mut dt = solver.stable_dt(&state);
            let remaining = target - state.time;
            if dt >= remaining {
                dt = remaining;
            } else if dt > 0.5 * remaining {
                // split the remainder evenly rather than leaving a sliver
                dt = 0.5 * remaining;
            }
            let mut log = StepLog::default();
            let next = solver
                .step(&state, dt, &mut log)
                .map_err(|e| e.tagged(eps, step_index))?;
            observer(&state, &next, dt, &log).map_err(|e| e.tagged(eps, step_index))?;
            state = next;
            step_index += 1;
            if target - state.time <= 1e-14 * target.max(1.0) {
                state.time = target;
            }
        }
        snapshots.push(state.clone());
    }
    Ok(Trajectory { snapshots })
}
