//! Forcing of the acoustic potential equation and its split into five
//! channels `h = sum_i A^{-1 + (i-1)/2} G_i`.
//!
//! The momentum forcing is made of three groups, each turned into mode
//! coefficients of `h` through the weak pairing with `grad A^{-1} phi`:
//!
//! * tensor terms `T = S(grad u) - rho u(x)u + M(x)m' + eps m'(x)W` paired with
//!   second derivatives of `A^{-1} phi`; allowed powers `-1` and `0`;
//! * vector terms `-rho_ref dV/dt - eps m'' r` paired with first derivatives;
//!   power `-1/2`;
//! * the pressure remainder `F3` paired with `phi` itself; powers `0`, `1/2`
//!   and `1`.
//!
//! Each mode of a group goes to the allowed channel with the smallest weight
//! `lambda^{-p}`, so that `G_i` stays bounded as both `lambda -> 0` and
//! `lambda -> infinity`.

use super::acoustic::{density_fluctuation, momentum_perturbation};
use super::{restrict_cells, SpectralDecomposition};
use crate::compressible::FluidState;
use crate::constitutive::{stress, PressureLaw, Tensor2, Viscosity};
use crate::error::Result;
use crate::extension::ExtensionField;
use crate::field::{cell_gradient, cell_velocity, divergence_interior, FaceField};
use crate::grid::{FaceKind, Grid};
use crate::motion::MotionSample;

/// Forcing fields of one state.
#[derive(Clone, Debug)]
pub struct ForcingFields {
    /// `S(grad u) - rho u (x) u` at cell centers.
    pub stress_convective: Vec<Tensor2>,
    /// `(rho u - rho_ref V) (x) m' + eps m' (x) W` at cell centers.
    pub translation: Vec<Tensor2>,
    /// `-rho_ref dV/dt` on faces.
    pub extension_rate: FaceField,
    /// `-eps m'' r` on faces.
    pub acceleration: FaceField,
    /// `eps^-2 (p(rho) - p'(rho_ref)(rho - rho_ref) - p(rho_ref))` at cells.
    pub pressure: Vec<f64>,
}

/// Evaluates every forcing field. `extension` is `None` for a static
/// obstacle.
pub fn assemble_forcing(
    grid: &Grid,
    law: &PressureLaw,
    visc: &Viscosity,
    state: &FluidState,
    motion: &MotionSample,
    extension: Option<&ExtensionField>,
) -> ForcingFields {
    let n = grid.n_cells();
    let eps = state.eps;
    let rho_ref = law.reference_density;
    let rho = &state.density;
    let mv = motion.velocity;
    let (v, rate) = match extension {
        Some(ext) => (ext.field(grid, mv), ext.lab_rate(grid, motion)),
        None => (FaceField::zeros(grid), FaceField::zeros(grid)),
    };
    let grad = cell_gradient(grid, &state.velocity);
    let (ux, uy) = cell_velocity(grid, &state.velocity);
    let w = momentum_perturbation(grid, law, state, &v, mv);
    let (wx, wy) = cell_velocity(grid, &w);
    let (vx, vy) = cell_velocity(grid, &v);
    let zero = [[0.0; 2]; 2];
    let mut stress_convective = vec![zero; n];
    let mut translation = vec![zero; n];
    let mut pressure = vec![0.0; n];
    for c in 0..n {
        if !grid.is_active(c) {
            continue;
        }
        let s = stress(visc, &grad[c]);
        let u = [ux[c], uy[c]];
        let m = [rho[c] * u[0] - rho_ref * vx[c], rho[c] * u[1] - rho_ref * vy[c]];
        let wc = [wx[c], wy[c]];
        for a in 0..2 {
            for b in 0..2 {
                stress_convective[c][a][b] = s[a][b] - rho[c] * u[a] * u[b];
                translation[c][a][b] = m[a] * mv[b] + eps * mv[a] * wc[b];
            }
        }
        pressure[c] = law.pressure_remainder(rho[c]) / (eps * eps);
    }
    let mut extension_rate = rate;
    extension_rate.scale(-rho_ref);
    let r = density_fluctuation(grid, law, state);
    let acc = motion.acceleration;
    let mut acceleration = FaceField::zeros(grid);
    if acc != [0.0, 0.0] {
        for j in 0..grid.ny() {
            for i in 0..=grid.nx() {
                let k = grid.xface(i, j);
                if grid.xface_kind(k) == FaceKind::Interior {
                    let rf = 0.5 * (r[grid.cell(i - 1, j)] + r[grid.cell(i, j)]);
                    acceleration.x[k] = -eps * acc[0] * rf;
                }
            }
        }
        for j in 0..=grid.ny() {
            for i in 0..grid.nx() {
                let k = grid.yface(i, j);
                if grid.yface_kind(k) == FaceKind::Interior {
                    let rf = 0.5 * (r[grid.cell(i, j - 1)] + r[grid.cell(i, j)]);
                    acceleration.y[k] = -eps * acc[1] * rf;
                }
            }
        }
    }
    ForcingFields {
        stress_convective,
        translation,
        extension_rate,
        acceleration,
        pressure,
    }
}

/// Row divergence `(div T)_a = sum_b d_b T_ab` of a cell tensor field on the
/// interior faces. Normal derivatives use the two adjacent cells, tangential
/// ones the average of centered (one-sided at walls) cell differences.
pub fn tensor_divergence(grid: &Grid, t: &[Tensor2]) -> FaceField {
    let h = grid.h();
    let d = |a: usize, b: usize, i: usize, j: usize, di: isize, dj: isize| -> f64 {
        let (ii, jj) = (i as isize, j as isize);
        let at = |p: isize, q: isize| t[grid.cell(p as usize, q as usize)][a][b];
        match (grid.active_ij(ii + di, jj + dj), grid.active_ij(ii - di, jj - dj)) {
            (true, true) => (at(ii + di, jj + dj) - at(ii - di, jj - dj)) / (2.0 * h),
            (true, false) => (at(ii + di, jj + dj) - at(ii, jj)) / h,
            (false, true) => (at(ii, jj) - at(ii - di, jj - dj)) / h,
            (false, false) => 0.0,
        }
    };
    let mut out = FaceField::zeros(grid);
    for j in 0..grid.ny() {
        for i in 1..grid.nx() {
            let k = grid.xface(i, j);
            if grid.xface_kind(k) != FaceKind::Interior {
                continue;
            }
            let (l, r) = (grid.cell(i - 1, j), grid.cell(i, j));
            out.x[k] = (t[r][0][0] - t[l][0][0]) / h + 0.5 * (d(0, 1, i - 1, j, 0, 1) + d(0, 1, i, j, 0, 1));
        }
    }
    for j in 1..grid.ny() {
        for i in 0..grid.nx() {
            let k = grid.yface(i, j);
            if grid.yface_kind(k) != FaceKind::Interior {
                continue;
            }
            let (b, tp) = (grid.cell(i, j - 1), grid.cell(i, j));
            out.y[k] = (t[tp][1][1] - t[b][1][1]) / h + 0.5 * (d(1, 0, i, j - 1, 1, 0) + d(1, 0, i, j, 1, 0));
        }
    }
    out
}

/// Mode coefficients of the potential forcing `h`, per group.
#[derive(Clone, Debug, PartialEq)]
pub struct ForcingModes {
    pub tensor: Vec<f64>,
    pub vector: Vec<f64>,
    pub scalar: Vec<f64>,
}

/// Eigenvalue separating the low and high channel of a group.
pub const CHANNEL_SPLIT: f64 = 1.0;

/// Channel powers `p_i = -1 + (i-1)/2`.
pub const CHANNEL_POWERS: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];

/// Projects flow-grid forcing onto the spectral grid.
pub fn forcing_modes(
    flow: &Grid,
    spectral: &Grid,
    spectrum: &SpectralDecomposition,
    fields: &ForcingFields,
) -> Result<ForcingModes> {
    let lambdas = spectrum.values();
    let potential = |source: Vec<f64>| -> Result<Vec<f64>> {
        let coarse = restrict_cells(flow, spectral, &source)?;
        let mut c = spectrum.coefficients(&coarse);
        for (k, v) in c.iter_mut().enumerate() {
            *v = if lambdas[k] > 0.0 { *v / lambdas[k] } else { 0.0 };
        }
        Ok(c)
    };
    let mut tensor = fields.stress_convective.clone();
    for (t, s) in tensor.iter_mut().zip(&fields.translation) {
        for a in 0..2 {
            for b in 0..2 {
                t[a][b] += s[a][b];
            }
        }
    }
    let neg_div = |f: &FaceField| -> Vec<f64> { divergence_interior(flow, f).into_iter().map(|x| -x).collect() };
    let tensor = potential(neg_div(&tensor_divergence(flow, &tensor)))?;
    let mut vec_field = fields.extension_rate.clone();
    vec_field.axpy(1.0, &fields.acceleration);
    let vector = potential(neg_div(&vec_field))?;
    let coarse = restrict_cells(flow, spectral, &fields.pressure)?;
    let mut scalar = spectrum.coefficients(&coarse);
    scalar[0] = 0.0;
    Ok(ForcingModes { tensor, vector, scalar })
}

/// Channel coefficients `G_i` (mode coordinates) from the group
/// coefficients of `h`.
pub fn route_channels(lambdas: &[f64], modes: &ForcingModes) -> [Vec<f64>; 5] {
    let k = lambdas.len();
    let mut g: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; k]);
    for (m, &l) in lambdas.iter().enumerate() {
        if l <= 0.0 {
            continue;
        }
        if l < CHANNEL_SPLIT {
            g[0][m] += l * modes.tensor[m];
            g[2][m] += modes.scalar[m];
        } else {
            g[2][m] += modes.tensor[m];
            g[4][m] += modes.scalar[m] / l;
        }
        g[1][m] += l.sqrt() * modes.vector[m];
    }
    g
}

/// `L2` norms of the five channels at one instant.
pub fn forcing_channel_norms(lambdas: &[f64], modes: &ForcingModes) -> [f64; 5] {
    let g = route_channels(lambdas, modes);
    std::array::from_fn(|i| g[i].iter().map(|x| x * x).sum::<f64>().sqrt())
}

/// Total potential forcing `h` in mode coordinates.
pub fn total_forcing(modes: &ForcingModes) -> Vec<f64> {
    modes
        .tensor
        .iter()
        .zip(&modes.vector)
        .zip(&modes.scalar)
        .map(|((a, b), c)| a + b + c)
        .collect()
}
