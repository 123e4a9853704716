//! Neumann Laplacian on the active cells and a multigrid-preconditioned
//! conjugate gradient solver for it.
//!
//! The operator is `(A w)_c = h^-2 sum_{open faces} (w_c - w_nb)`, where a face
//! is open when both neighbours are active. Walls and the outer rim carry the
//! homogeneous Neumann condition, so `A` is symmetric positive semidefinite
//! with the constants as kernel on a connected region.

use crate::error::{Error, Result};
use crate::field::remove_mean;
use crate::grid::{FaceKind, Grid};

/// Matrix-free Neumann Laplacian on a connected active region.
#[derive(Clone, Debug)]
pub struct NeumannLaplacian {
    level: Level,
    /// Active cell indices in grid order; position in this list is the
    /// compact (spectral) index.
    active: Vec<usize>,
}

/// Assembles the operator, rejecting disconnected fluid regions.
pub fn assemble_neumann_laplacian(grid: &Grid) -> Result<NeumannLaplacian> {
    let components = grid.connected_components();
    if components != 1 {
        return Err(Error::DisconnectedDomain { components });
    }
    let active = (0..grid.n_cells()).filter(|&c| grid.is_active(c)).collect();
    Ok(NeumannLaplacian {
        level: Level::from_grid(grid),
        active,
    })
}

impl NeumannLaplacian {
    pub fn n_active(&self) -> usize {
        self.active.len()
    }

    pub fn active_cells(&self) -> &[usize] {
        &self.active
    }

    pub fn cell_size(&self) -> f64 {
        self.level.h
    }

    /// Length of the full cell arrays the operator acts on.
    pub fn n_cells(&self) -> usize {
        self.level.nx * self.level.ny
    }

    /// `A w` on full cell arrays (solid cells map to 0).
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; w.len()];
        self.level.apply(w, &mut out);
        out
    }

    /// Discrete Dirichlet form `<A w, w>` as a sum of squared face jumps.
    pub fn dirichlet_form(&self, w: &[f64]) -> f64 {
        let l = &self.level;
        let mut s = 0.0;
        for j in 0..l.ny {
            for i in 1..l.nx {
                let wgt = l.wx[j * (l.nx + 1) + i];
                if wgt > 0.0 {
                    let d = w[j * l.nx + i] - w[j * l.nx + i - 1];
                    s += wgt * d * d;
                }
            }
        }
        for j in 1..l.ny {
            for i in 0..l.nx {
                let wgt = l.wy[j * l.nx + i];
                if wgt > 0.0 {
                    let d = w[j * l.nx + i] - w[(j - 1) * l.nx + i];
                    s += wgt * d * d;
                }
            }
        }
        s / (l.h * l.h)
    }

    /// Dense row-major matrix on the compact active index set.
    pub fn dense(&self) -> Vec<f64> {
        let n = self.active.len();
        let l = &self.level;
        let mut compact = vec![usize::MAX; l.nx * l.ny];
        for (k, &c) in self.active.iter().enumerate() {
            compact[c] = k;
        }
        let inv_h2 = 1.0 / (l.h * l.h);
        let mut m = vec![0.0; n * n];
        for (k, &c) in self.active.iter().enumerate() {
            let (i, j) = (c % l.nx, c / l.nx);
            let mut link = |nb: usize, wgt: f64| {
                if wgt > 0.0 {
                    m[k * n + k] += wgt * inv_h2;
                    m[k * n + compact[nb]] -= wgt * inv_h2;
                }
            };
            if i > 0 {
                link(c - 1, l.wx[j * (l.nx + 1) + i]);
            }
            if i + 1 < l.nx {
                link(c + 1, l.wx[j * (l.nx + 1) + i + 1]);
            }
            if j > 0 {
                link(c - l.nx, l.wy[j * l.nx + i]);
            }
            if j + 1 < l.ny {
                link(c + l.nx, l.wy[(j + 1) * l.nx + i]);
            }
        }
        m
    }
}

/// One level of the multigrid hierarchy: a cell-centered box with per-face
/// conductances (1 for an open face on the finest level).
#[derive(Clone, Debug)]
struct Level {
    nx: usize,
    ny: usize,
    h: f64,
    active: Vec<bool>,
    wx: Vec<f64>,
    wy: Vec<f64>,
    diag: Vec<f64>,
}

impl Level {
    fn from_grid(grid: &Grid) -> Level {
        let open = |k: &FaceKind| if *k == FaceKind::Interior { 1.0 } else { 0.0 };
        let wx = grid.xface_kinds().iter().map(open).collect();
        let wy = grid.yface_kinds().iter().map(open).collect();
        let active = (0..grid.n_cells()).map(|c| grid.is_active(c)).collect();
        Level::finish(grid.nx(), grid.ny(), grid.h(), active, wx, wy)
    }

    fn finish(nx: usize, ny: usize, h: f64, mut active: Vec<bool>, wx: Vec<f64>, wy: Vec<f64>) -> Level {
        let mut diag = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let c = j * nx + i;
                let d = wx[j * (nx + 1) + i]
                    + wx[j * (nx + 1) + i + 1]
                    + wy[j * nx + i]
                    + wy[(j + 1) * nx + i];
                diag[c] = d / (h * h);
                if d == 0.0 {
                    active[c] = false;
                }
            }
        }
        Level {
            nx,
            ny,
            h,
            active,
            wx,
            wy,
            diag,
        }
    }

    fn can_coarsen(&self) -> bool {
        self.nx % 2 == 0 && self.ny % 2 == 0 && self.nx >= 8 && self.ny >= 8
    }

    fn coarsen(&self) -> Level {
        let (nx, ny) = (self.nx / 2, self.ny / 2);
        let mut active = vec![false; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                active[j * nx + i] = (0..2).any(|b| {
                    (0..2).any(|a| self.active[(2 * j + b) * self.nx + 2 * i + a])
                });
            }
        }
        let mut wx = vec![0.0; (nx + 1) * ny];
        for j in 0..ny {
            for i in 1..nx {
                let f = 2 * i;
                wx[j * (nx + 1) + i] = 0.5
                    * (self.wx[(2 * j) * (self.nx + 1) + f] + self.wx[(2 * j + 1) * (self.nx + 1) + f]);
            }
        }
        let mut wy = vec![0.0; nx * (ny + 1)];
        for j in 1..ny {
            for i in 0..nx {
                let f = 2 * j;
                wy[j * nx + i] = 0.5 * (self.wy[f * self.nx + 2 * i] + self.wy[f * self.nx + 2 * i + 1]);
            }
        }
        Level::finish(nx, ny, 2.0 * self.h, active, wx, wy)
    }

    #[inline]
    fn offdiag_sum(&self, x: &[f64], i: usize, j: usize) -> f64 {
        let nx = self.nx;
        let c = j * nx + i;
        let mut s = 0.0;
        if i > 0 {
            s += self.wx[j * (nx + 1) + i] * x[c - 1];
        }
        if i + 1 < nx {
            s += self.wx[j * (nx + 1) + i + 1] * x[c + 1];
        }
        if j > 0 {
            s += self.wy[j * nx + i] * x[c - nx];
        }
        if j + 1 < self.ny {
            s += self.wy[(j + 1) * nx + i] * x[c + nx];
        }
        s / (self.h * self.h)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for j in 0..self.ny {
            for i in 0..self.nx {
                let c = j * self.nx + i;
                y[c] = if self.active[c] {
                    self.diag[c] * x[c] - self.offdiag_sum(x, i, j)
                } else {
                    0.0
                };
            }
        }
    }

    /// One Gauss-Seidel sweep over cells of the given color.
    fn gs_color(&self, x: &mut [f64], b: &[f64], color: usize) {
        for j in 0..self.ny {
            let start = (j + color) % 2;
            for i in (start..self.nx).step_by(2) {
                let c = j * self.nx + i;
                if self.active[c] {
                    x[c] = (b[c] + self.offdiag_sum(x, i, j)) / self.diag[c];
                }
            }
        }
    }

    fn mean_zero(&self, x: &mut [f64]) {
        let (mut s, mut n) = (0.0, 0usize);
        for (v, a) in x.iter().zip(&self.active) {
            if *a {
                s += v;
                n += 1;
            }
        }
        let m = if n > 0 { s / n as f64 } else { 0.0 };
        for (v, a) in x.iter_mut().zip(&self.active) {
            *v = if *a { *v - m } else { 0.0 };
        }
    }
}

/// Poisson solver for `A x = b` with the Neumann Laplacian, `b` compatible
/// (zero mean over active cells) and `x` normalized to zero mean.
#[derive(Clone, Debug)]
pub struct PoissonSolver {
    levels: Vec<Level>,
    pub tolerance: f64,
    pub max_iterations: usize,
}

/// Statistics of the last solve.
#[derive(Clone, Copy, Debug, Default)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

const PRE_SWEEPS: usize = 2;
const COARSE_SWEEPS: usize = 60;

impl PoissonSolver {
    pub fn new(grid: &Grid) -> Result<PoissonSolver> {
        let lap = assemble_neumann_laplacian(grid)?;
        Ok(PoissonSolver::from_laplacian(&lap))
    }

    pub fn from_laplacian(lap: &NeumannLaplacian) -> PoissonSolver {
        let mut levels = vec![lap.level.clone()];
        while levels.last().unwrap().can_coarsen() {
            let next = levels.last().unwrap().coarsen();
            levels.push(next);
        }
        PoissonSolver {
            levels,
            tolerance: 1e-12,
            max_iterations: 400,
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> PoissonSolver {
        self.tolerance = tol;
        self
    }

    fn vcycle(&self, level: usize, b: &[f64], x: &mut [f64]) {
        let l = &self.levels[level];
        x.iter_mut().for_each(|v| *v = 0.0);
        if level + 1 == self.levels.len() {
            for _ in 0..COARSE_SWEEPS {
                l.gs_color(x, b, 0);
                l.gs_color(x, b, 1);
            }
            for _ in 0..COARSE_SWEEPS {
                l.gs_color(x, b, 1);
                l.gs_color(x, b, 0);
            }
            l.mean_zero(x);
            return;
        }
        for _ in 0..PRE_SWEEPS {
            l.gs_color(x, b, 0);
            l.gs_color(x, b, 1);
        }
        let mut r = vec![0.0; b.len()];
        l.apply(x, &mut r);
        for c in 0..r.len() {
            r[c] = if l.active[c] { b[c] - r[c] } else { 0.0 };
        }
        let coarse = &self.levels[level + 1];
        let mut rc = vec![0.0; coarse.nx * coarse.ny];
        for j in 0..l.ny {
            for i in 0..l.nx {
                rc[(j / 2) * coarse.nx + i / 2] += 0.25 * r[j * l.nx + i];
            }
        }
        for (v, a) in rc.iter_mut().zip(&coarse.active) {
            if !a {
                *v = 0.0;
            }
        }
        let mut ec = vec![0.0; rc.len()];
        self.vcycle(level + 1, &rc, &mut ec);
        for j in 0..l.ny {
            for i in 0..l.nx {
                let c = j * l.nx + i;
                if l.active[c] {
                    x[c] += ec[(j / 2) * coarse.nx + i / 2];
                }
            }
        }
        for _ in 0..PRE_SWEEPS {
            l.gs_color(x, b, 1);
            l.gs_color(x, b, 0);
        }
    }

    fn precondition(&self, r: &[f64], z: &mut [f64]) {
        self.vcycle(0, r, z);
        self.levels[0].mean_zero(z);
    }

    /// Solves `A x = b`; `x` holds the initial guess on entry (warm start).
    /// The mean of `b` over active cells is removed first.
    pub fn solve(&self, b: &[f64], x: &mut [f64]) -> Result<SolveStats> {
        let l = &self.levels[0];
        let n = b.len();
        let mut rhs = b.to_vec();
        l.mean_zero(&mut rhs);
        l.mean_zero(x);
        let bnorm = dot(&rhs, &rhs, &l.active).sqrt();
        if bnorm == 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
            return Ok(SolveStats::default());
        }
        let mut r = vec![0.0; n];
        l.apply(x, &mut r);
        for c in 0..n {
            r[c] = if l.active[c] { rhs[c] - r[c] } else { 0.0 };
        }
        let mut z = vec![0.0; n];
        self.precondition(&r, &mut z);
        let mut p = z.clone();
        let mut rz = dot(&r, &z, &l.active);
        let mut q = vec![0.0; n];
        let mut res = dot(&r, &r, &l.active).sqrt() / bnorm;
        let mut it = 0;
        while res > self.tolerance {
            if it >= self.max_iterations || !res.is_finite() {
                return Err(Error::PoissonFailure {
                    iterations: it,
                    residual: res,
                });
            }
            l.apply(&p, &mut q);
            let pq = dot(&p, &q, &l.active);
            if pq <= 0.0 {
                break;
            }
            let alpha = rz / pq;
            for c in 0..n {
                x[c] += alpha * p[c];
                r[c] -= alpha * q[c];
            }
            res = dot(&r, &r, &l.active).sqrt() / bnorm;
            it += 1;
            if res <= self.tolerance {
                break;
            }
            self.precondition(&r, &mut z);
            let rz_new = dot(&r, &z, &l.active);
            let beta = rz_new / rz;
            rz = rz_new;
            for c in 0..n {
                p[c] = z[c] + beta * p[c];
            }
        }
        l.mean_zero(x);
        Ok(SolveStats {
            iterations: it,
            residual: res,
        })
    }

    /// Convenience wrapper solving from a zero initial guess.
    pub fn solve_new(&self, grid: &Grid, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = vec![0.0; grid.n_cells()];
        self.solve(b, &mut x)?;
        remove_mean(grid, &mut x);
        Ok(x)
    }
}

fn dot(a: &[f64], b: &[f64], mask: &[bool]) -> f64 {
    a.iter()
        .zip(b)
        .zip(mask)
        .filter(|(_, m)| **m)
        .map(|((x, y), _)| x * y)
        .sum()
}
