//! Acoustic variables of a compressible state in the obstacle frame:
//! `r = (rho - rho_ref) / eps` and the momentum perturbation
//! `W = rho u - rho_ref V - eps m' r`, split as `W = H(W) + grad Psi`.

use super::helmholtz::{HelmholtzProjector, HelmholtzSplit};
use super::wave::AcousticState;
use crate::compressible::FluidState;
use crate::constitutive::PressureLaw;
use crate::error::Result;
use crate::field::FaceField;
use crate::grid::{FaceKind, Grid};

/// Extraction result: the acoustic pair plus the split of `W`.
#[derive(Clone, Debug)]
pub struct AcousticExtraction {
    pub state: AcousticState,
    pub momentum: FaceField,
    pub split: HelmholtzSplit,
}

/// Density on a face: average of the active neighbours.
pub(crate) fn face_density(grid: &Grid, rho: &[f64], axis_x: bool, i: usize, j: usize) -> f64 {
    let (a, b) = if axis_x {
        ((i as isize - 1, j as isize), (i as isize, j as isize))
    } else {
        ((i as isize, j as isize - 1), (i as isize, j as isize))
    };
    let mut s = 0.0;
    let mut n = 0.0;
    for (p, q) in [a, b] {
        if grid.active_ij(p, q) {
            s += rho[grid.cell(p as usize, q as usize)];
            n += 1.0;
        }
    }
    if n > 0.0 {
        s / n
    } else {
        0.0
    }
}

/// `W = rho u - rho_ref V - m' (rho - rho_ref)` on every non-inactive face.
/// `extension` is `V(t)` (zero field for a static obstacle).
pub fn momentum_perturbation(
    grid: &Grid,
    law: &PressureLaw,
    state: &FluidState,
    extension: &FaceField,
    obstacle_velocity: [f64; 2],
) -> FaceField {
    let rho_ref = law.reference_density;
    let rho = &state.density;
    let u = &state.velocity;
    let mut w = FaceField::zeros(grid);
    for j in 0..grid.ny() {
        for i in 0..=grid.nx() {
            let k = grid.xface(i, j);
            if grid.xface_kind(k) == FaceKind::Inactive {
                continue;
            }
            let rf = face_density(grid, rho, true, i, j);
            w.x[k] = rf * u.x[k] - rho_ref * extension.x[k] - obstacle_velocity[0] * (rf - rho_ref);
        }
    }
    for j in 0..=grid.ny() {
        for i in 0..grid.nx() {
            let k = grid.yface(i, j);
            if grid.yface_kind(k) == FaceKind::Inactive {
                continue;
            }
            let rf = face_density(grid, rho, false, i, j);
            w.y[k] = rf * u.y[k] - rho_ref * extension.y[k] - obstacle_velocity[1] * (rf - rho_ref);
        }
    }
    w
}

/// `(rho - rho_ref) / eps` on active cells.
pub fn density_fluctuation(grid: &Grid, law: &PressureLaw, state: &FluidState) -> Vec<f64> {
    let rho_ref = law.reference_density;
    (0..grid.n_cells())
        .map(|c| {
            if grid.is_active(c) {
                (state.density[c] - rho_ref) / state.eps
            } else {
                0.0
            }
        })
        .collect()
}

/// Computes `(r, Psi)` with zero-mean `Psi` and the Helmholtz split of `W`.
pub fn extract_acoustic_potential(
    projector: &HelmholtzProjector,
    law: &PressureLaw,
    state: &FluidState,
    extension: &FaceField,
    obstacle_velocity: [f64; 2],
) -> Result<AcousticExtraction> {
    let grid = projector.grid();
    let momentum = momentum_perturbation(grid, law, state, extension, obstacle_velocity);
    let split = projector.split(&momentum)?;
    let r = density_fluctuation(grid, law, state);
    Ok(AcousticExtraction {
        state: AcousticState {
            r,
            psi: split.potential.clone(),
            eps: state.eps,
            t: state.time,
        },
        momentum,
        split,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compressible::{init_state, IllPreparedData};
    use crate::extension::ExtensionField;
    use crate::field::{cell_mean, curl_of_nodes, face_dot, face_norm, sample_cells, sample_nodes};
    use crate::grid::build_grid;
    use crate::motion::{MotionPath, PathKind};

    fn law() -> PressureLaw {
        PressureLaw::new(1.0, 2.0, 1.0).unwrap()
    }

    #[test]
    fn pure_extension_motion_has_no_acoustics() {
        let g = build_grid(2, 1.0, 0.2, 1.0 / 32.0).unwrap();
        let ext = ExtensionField::new(&g, 0.7).unwrap();
        let path = MotionPath::new(PathKind::Linear { velocity: [0.3, -0.1] }, 1.0);
        let m = path.eval(0.0).unwrap();
        let v = ext.field(&g, m.velocity);
        let data = IllPreparedData {
            density_perturbation: vec![0.0; g.n_cells()],
            velocity: v.clone(),
        };
        let st = init_state(&g, &law(), &data, 0.1, &m).unwrap();
        let p = HelmholtzProjector::new(&g).unwrap();
        let out = extract_acoustic_potential(&p, &law(), &st, &v, m.velocity).unwrap();
        assert!(out.momentum.max_abs() < 1e-14);
        assert!(out.state.psi.iter().all(|x| x.abs() < 1e-12));
        assert!(out.state.r.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn pulse_state_split_is_orthogonal() {
        let g = build_grid(2, 1.0, 0.2, 1.0 / 32.0).unwrap();
        let psi = sample_nodes(&g, |p| 0.1 * (-((p[0] - 0.4).powi(2) + p[1] * p[1]) / 0.02).exp());
        let mut u = curl_of_nodes(&g, &psi);
        u.axpy(1.0, &FaceField::sample(&g, |p| [0.2 * p[1], 0.1 * p[0] * p[0]]));
        let data = IllPreparedData {
            density_perturbation: sample_cells(&g, 0.0, |p| (-(p[0] * p[0] + (p[1] - 0.5).powi(2)) / 0.03).exp()),
            velocity: u,
        };
        let path = MotionPath::new(PathKind::Static, 1.0);
        let st = init_state(&g, &law(), &data, 0.1, &path.eval(0.0).unwrap()).unwrap();
        let p = HelmholtzProjector::new(&g).unwrap();
        let out = extract_acoustic_potential(&p, &law(), &st, &FaceField::zeros(&g), [0.0, 0.0]).unwrap();
        let w2 = face_norm(&g, &out.momentum).powi(2);
        let h2 = face_norm(&g, &out.split.solenoidal).powi(2);
        let g2 = face_norm(&g, &out.split.gradient).powi(2);
        assert!((w2 - h2 - g2).abs() < 1e-8 * w2);
        assert!(face_dot(&g, &out.split.solenoidal, &out.split.gradient).abs() < 1e-8 * w2);
        assert!(cell_mean(&g, &out.state.psi).abs() < 1e-12);
    }
}
