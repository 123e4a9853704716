//! Discrete fields on the staggered grid and the basic difference operators.

use crate::grid::{Axis, FaceKind, Grid};

/// Face-centered vector field: `x` on vertical faces, `y` on horizontal ones.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceField {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl FaceField {
    pub fn zeros(grid: &Grid) -> FaceField {
        FaceField {
            x: vec![0.0; grid.n_xfaces()],
            y: vec![0.0; grid.n_yfaces()],
        }
    }

    /// Samples a continuous vector field at face centers (inactive faces stay 0).
    pub fn sample(grid: &Grid, f: impl Fn([f64; 2]) -> [f64; 2]) -> FaceField {
        let mut out = FaceField::zeros(grid);
        for j in 0..grid.ny() {
            for i in 0..=grid.nx() {
                let k = grid.xface(i, j);
                if grid.xface_kind(k) != FaceKind::Inactive {
                    out.x[k] = f(grid.xface_center(i, j))[0];
                }
            }
        }
        for j in 0..=grid.ny() {
            for i in 0..grid.nx() {
                let k = grid.yface(i, j);
                if grid.yface_kind(k) != FaceKind::Inactive {
                    out.y[k] = f(grid.yface_center(i, j))[1];
                }
            }
        }
        out
    }

    pub fn component(&self, axis: Axis) -> &[f64] {
        match axis {
            Axis::X => &self.x,
            Axis::Y => &self.y,
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.x.iter_mut().chain(self.y.iter_mut()).for_each(|v| *v *= a);
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &FaceField) {
        for (s, o) in self.x.iter_mut().zip(&other.x) {
            *s += a * o;
        }
        for (s, o) in self.y.iter_mut().zip(&other.y) {
            *s += a * o;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.x
            .iter()
            .chain(&self.y)
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.y).all(|v| v.is_finite())
    }

    /// Zeroes every face that is not interior.
    pub fn clear_boundary(&mut self, grid: &Grid) {
        for (v, k) in self.x.iter_mut().zip(grid.xface_kinds()) {
            if *k != FaceKind::Interior {
                *v = 0.0;
            }
        }
        for (v, k) in self.y.iter_mut().zip(grid.yface_kinds()) {
            if *k != FaceKind::Interior {
                *v = 0.0;
            }
        }
    }
}

/// L2 inner product over all active (interior and boundary) faces with weight
/// `h^2` per face.
pub fn face_dot(grid: &Grid, a: &FaceField, b: &FaceField) -> f64 {
    let mut s = 0.0;
    for (k, kind) in grid.xface_kinds().iter().enumerate() {
        if *kind != FaceKind::Inactive {
            s += a.x[k] * b.x[k];
        }
    }
    for (k, kind) in grid.yface_kinds().iter().enumerate() {
        if *kind != FaceKind::Inactive {
            s += a.y[k] * b.y[k];
        }
    }
    s * grid.cell_area()
}

pub fn face_norm(grid: &Grid, a: &FaceField) -> f64 {
    face_dot(grid, a, a).sqrt()
}

/// L2 inner product of cell fields over active cells.
pub fn cell_dot(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for c in 0..grid.n_cells() {
        if grid.is_active(c) {
            s += a[c] * b[c];
        }
    }
    s * grid.cell_area()
}

pub fn cell_norm(grid: &Grid, a: &[f64]) -> f64 {
    cell_dot(grid, a, a).sqrt()
}

/// `L^q` norm of a cell field over active cells.
pub fn cell_lq(grid: &Grid, a: &[f64], q: f64) -> f64 {
    let mut s = 0.0;
    for c in 0..grid.n_cells() {
        if grid.is_active(c) {
            s += a[c].abs().powf(q);
        }
    }
    (s * grid.cell_area()).powf(1.0 / q)
}

/// Mean over active cells.
pub fn cell_mean(grid: &Grid, a: &[f64]) -> f64 {
    let mut s = 0.0;
    let mut n = 0usize;
    for c in 0..grid.n_cells() {
        if grid.is_active(c) {
            s += a[c];
            n += 1;
        }
    }
    s / n as f64
}

pub fn remove_mean(grid: &Grid, a: &mut [f64]) {
    let m = cell_mean(grid, a);
    for c in 0..grid.n_cells() {
        a[c] = if grid.is_active(c) { a[c] - m } else { 0.0 };
    }
}

/// Cell divergence using every active face (boundary faces contribute their
/// stored normal flux). Solid cells get 0.
pub fn divergence(grid: &Grid, u: &FaceField) -> Vec<f64> {
    divergence_impl(grid, u, true)
}

/// Cell divergence with boundary faces treated as zero flux.
pub fn divergence_interior(grid: &Grid, u: &FaceField) -> Vec<f64> {
    divergence_impl(grid, u, false)
}

fn divergence_impl(grid: &Grid, u: &FaceField, boundary: bool) -> Vec<f64> {
    let (nx, ny, h) = (grid.nx(), grid.ny(), grid.h());
    let take_x = |k: usize| match grid.xface_kind(k) {
        FaceKind::Interior => u.x[k],
        FaceKind::Wall | FaceKind::Outer if boundary => u.x[k],
        _ => 0.0,
    };
    let take_y = |k: usize| match grid.yface_kind(k) {
        FaceKind::Interior => u.y[k],
        FaceKind::Wall | FaceKind::Outer if boundary => u.y[k],
        _ => 0.0,
    };
    let mut div = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let c = grid.cell(i, j);
            if !grid.is_active(c) {
                continue;
            }
            div[c] = (take_x(grid.xface(i + 1, j)) - take_x(grid.xface(i, j))
                + take_y(grid.yface(i, j + 1))
                - take_y(grid.yface(i, j)))
                / h;
        }
    }
    div
}

/// Gradient of a cell field on interior faces; boundary faces are left 0.
pub fn gradient(grid: &Grid, p: &[f64]) -> FaceField {
    let mut g = FaceField::zeros(grid);
    let h = grid.h();
    for j in 0..grid.ny() {
        for i in 1..grid.nx() {
            let k = grid.xface(i, j);
            if grid.xface_kind(k) == FaceKind::Interior {
                g.x[k] = (p[grid.cell(i, j)] - p[grid.cell(i - 1, j)]) / h;
            }
        }
    }
    for j in 1..grid.ny() {
        for i in 0..grid.nx() {
            let k = grid.yface(i, j);
            if grid.yface_kind(k) == FaceKind::Interior {
                g.y[k] = (p[grid.cell(i, j)] - p[grid.cell(i, j - 1)]) / h;
            }
        }
    }
    g
}

/// Velocity field `curl psi` of a node stream function (`(nx+1)*(ny+1)`
/// values, row-major). Exactly divergence free cell by cell.
pub fn curl_of_nodes(grid: &Grid, psi: &[f64]) -> FaceField {
    let (nx, ny, h) = (grid.nx(), grid.ny(), grid.h());
    let node = |i: usize, j: usize| psi[j * (nx + 1) + i];
    let mut u = FaceField::zeros(grid);
    for j in 0..ny {
        for i in 0..=nx {
            u.x[grid.xface(i, j)] = (node(i, j + 1) - node(i, j)) / h;
        }
    }
    for j in 0..=ny {
        for i in 0..nx {
            u.y[grid.yface(i, j)] = -(node(i + 1, j) - node(i, j)) / h;
        }
    }
    u
}

/// Samples a scalar function at the grid nodes.
pub fn sample_nodes(grid: &Grid, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity((grid.nx() + 1) * (grid.ny() + 1));
    for j in 0..=grid.ny() {
        for i in 0..=grid.nx() {
            out.push(f(grid.node(i, j)));
        }
    }
    out
}

/// Samples a scalar function at active cell centers (solid cells get `fill`).
pub fn sample_cells(grid: &Grid, fill: f64, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
    let mut out = vec![fill; grid.n_cells()];
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let c = grid.cell(i, j);
            if grid.is_active(c) {
                out[c] = f(grid.cell_center(i, j));
            }
        }
    }
    out
}

/// Cell-centered velocity obtained by averaging the two faces of each cell.
pub fn cell_velocity(grid: &Grid, u: &FaceField) -> (Vec<f64>, Vec<f64>) {
    let mut ux = vec![0.0; grid.n_cells()];
    let mut uy = vec![0.0; grid.n_cells()];
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let c = grid.cell(i, j);
            if grid.is_active(c) {
                ux[c] = 0.5 * (u.x[grid.xface(i, j)] + u.x[grid.xface(i + 1, j)]);
                uy[c] = 0.5 * (u.y[grid.yface(i, j)] + u.y[grid.yface(i, j + 1)]);
            }
        }
    }
    (ux, uy)
}

/// Velocity gradient at cell centers: `[[du/dx, du/dy], [dv/dx, dv/dy]]`.
/// Normal derivatives come from the cell's own faces, cross derivatives from
/// centered differences of the cell-averaged velocity (one-sided next to
/// walls).
pub fn cell_gradient(grid: &Grid, u: &FaceField) -> Vec<[[f64; 2]; 2]> {
    let (ux, uy) = cell_velocity(grid, u);
    let h = grid.h();
    let mut out = vec![[[0.0; 2]; 2]; grid.n_cells()];
    let deriv = |f: &[f64], i: usize, j: usize, di: isize, dj: isize| -> f64 {
        let (i, j) = (i as isize, j as isize);
        let fwd = grid.active_ij(i + di, j + dj);
        let bwd = grid.active_ij(i - di, j - dj);
        let at = |a: isize, b: isize| f[grid.cell(a as usize, b as usize)];
        match (fwd, bwd) {
            (true, true) => (at(i + di, j + dj) - at(i - di, j - dj)) / (2.0 * h),
            (true, false) => (at(i + di, j + dj) - at(i, j)) / h,
            (false, true) => (at(i, j) - at(i - di, j - dj)) / h,
            (false, false) => 0.0,
        }
    };
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let c = grid.cell(i, j);
            if !grid.is_active(c) {
                continue;
            }
            let dudx = (u.x[grid.xface(i + 1, j)] - u.x[grid.xface(i, j)]) / h;
            let dvdy = (u.y[grid.yface(i, j + 1)] - u.y[grid.yface(i, j)]) / h;
            out[c] = [
                [dudx, deriv(&ux, i, j, 0, 1)],
                [deriv(&uy, i, j, 1, 0), dvdy],
            ];
        }
    }
    out
}
