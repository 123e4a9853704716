//! Discrete Helmholtz projection `H(v) = v - grad Theta`.
//!
//! `Theta` solves the Neumann problem `A Theta = -div v` with the interior
//! divergence, so the boundary flux `v . n` is carried entirely by the
//! gradient part: on boundary faces `grad Theta := v . n` and `H(v) = 0`.
//! With this convention `v = H(v) + grad Theta` holds exactly on every face,
//! `H(v)` is discretely solenoidal and tangent, and the two parts are
//! orthogonal in the face inner product.

use crate::error::Result;
use crate::field::{divergence_interior, gradient, FaceField};
use crate::grid::{FaceKind, Grid};
use crate::poisson::PoissonSolver;

/// Result of a projection.
#[derive(Clone, Debug)]
pub struct HelmholtzSplit {
    /// Solenoidal, tangent part `H(v)`.
    pub solenoidal: FaceField,
    /// Gradient part, including the boundary flux of `v`.
    pub gradient: FaceField,
    /// Zero-mean potential `Theta`.
    pub potential: Vec<f64>,
}

/// Reusable projector (the multigrid hierarchy is built once per grid).
#[derive(Clone, Debug)]
pub struct HelmholtzProjector {
    grid: Grid,
    solver: PoissonSolver,
}

impl HelmholtzProjector {
    pub fn new(grid: &Grid) -> Result<HelmholtzProjector> {
        Ok(HelmholtzProjector {
            grid: grid.clone(),
            solver: PoissonSolver::new(grid)?,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Potential `Theta` only.
    pub fn potential(&self, v: &FaceField) -> Result<Vec<f64>> {
        let g = &self.grid;
        let mut rhs = divergence_interior(g, v);
        rhs.iter_mut().for_each(|x| *x = -*x);
        self.solver.solve_new(g, &rhs)
    }

    pub fn split(&self, v: &FaceField) -> Result<HelmholtzSplit> {
        let g = &self.grid;
        let potential = self.potential(v)?;
        let mut grad = gradient(g, &potential);
        let mut sol = v.clone();
        for (k, kind) in g.xface_kinds().iter().enumerate() {
            match kind {
                FaceKind::Interior => sol.x[k] -= grad.x[k],
                FaceKind::Inactive => {
                    sol.x[k] = 0.0;
                    grad.x[k] = 0.0;
                }
                _ => {
                    grad.x[k] = v.x[k];
                    sol.x[k] = 0.0;
                }
            }
        }
        for (k, kind) in g.yface_kinds().iter().enumerate() {
            match kind {
                FaceKind::Interior => sol.y[k] -= grad.y[k],
                FaceKind::Inactive => {
                    sol.y[k] = 0.0;
                    grad.y[k] = 0.0;
                }
                _ => {
                    grad.y[k] = v.y[k];
                    sol.y[k] = 0.0;
                }
            }
        }
        Ok(HelmholtzSplit {
            solenoidal: sol,
            gradient: grad,
            potential,
        })
    }

    pub fn project(&self, v: &FaceField) -> Result<FaceField> {
        Ok(self.split(v)?.solenoidal)
    }
}

/// One-shot projection returning `(H(v), Theta)`.
pub fn helmholtz_project(grid: &Grid, v: &FaceField) -> Result<(FaceField, Vec<f64>)> {
    let split = HelmholtzProjector::new(grid)?.split(v)?;
    Ok((split.solenoidal, split.potential))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{curl_of_nodes, divergence, face_dot, face_norm, sample_cells, sample_nodes};
    use crate::grid::build_grid;

    fn grid() -> Grid {
        build_grid(2, 1.0, 0.2, 1.0 / 32.0).unwrap()
    }

    #[test]
    fn split_is_exact_orthogonal_and_solenoidal() {
        let g = grid();
        let p = HelmholtzProjector::new(&g).unwrap();
        let v = FaceField::sample(&g, |x| [(2.0 * x[1]).sin() + x[0], x[0] * x[1] - 0.3]);
        let s = p.split(&v).unwrap();
        let mut back = s.solenoidal.clone();
        back.axpy(1.0, &s.gradient);
        back.axpy(-1.0, &v);
        assert!(back.max_abs() < 1e-14);
        let n2 = face_norm(&g, &v).powi(2);
        assert!(face_dot(&g, &s.solenoidal, &s.gradient).abs() < 1e-10 * n2);
        let div = divergence(&g, &s.solenoidal);
        assert!(div.iter().map(|d| d.abs()).fold(0.0, f64::max) < 1e-8);
        let again = p.project(&s.solenoidal).unwrap();
        let mut d = again;
        d.axpy(-1.0, &s.solenoidal);
        assert!(face_norm(&g, &d) < 1e-10 * n2.sqrt());
    }

    #[test]
    fn gradients_are_removed_and_tangent_curls_kept() {
        let g = grid();
        let p = HelmholtzProjector::new(&g).unwrap();
        let q = sample_cells(&g, 0.0, |x| (x[0] * 3.0).cos() * x[1]);
        let gq = gradient(&g, &q);
        assert!(p.project(&gq).unwrap().max_abs() < 1e-10);
        // Stream function vanishing on the rim and near the obstacle.
        let psi = sample_nodes(&g, |x| {
            if x[0].hypot(x[1]) < 0.35 {
                return 0.0;
            }
            let r2 = (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2);
            (-(r2 / 0.02)).exp() * (1.0 - x[0] * x[0]) * (1.0 - x[1] * x[1])
        });
        let mut w = curl_of_nodes(&g, &psi);
        w.clear_boundary(&g);
        let hw = p.project(&w).unwrap();
        let mut d = hw;
        d.axpy(-1.0, &w);
        assert!(d.max_abs() < 1e-9 * w.max_abs());
    }

    #[test]
    fn uniform_flow_on_empty_square_projects_to_zero() {
        let g = Grid::rectangle(1.0, 1.0, 32);
        let v = FaceField::sample(&g, |_| [1.0, 0.0]);
        let (hv, _) = helmholtz_project(&g, &v).unwrap();
        assert!(face_norm(&g, &hv) <= 10.0 * g.h());
    }
}
