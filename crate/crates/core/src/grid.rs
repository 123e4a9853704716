//! Staggered (MAC) grid over the truncated exterior of a disk.
//!
//! Scalars live at cell centers, the x-velocity on vertical faces and the
//! y-velocity on horizontal faces. The obstacle is a disk of radius `a`
//! centered at the origin of the body-fixed frame; cells whose center lies
//! inside the disk are masked as solid. Walls are the faces separating an
//! active cell from a solid one (staircase boundary) plus the outer rim of
//! the box.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellKind {
    Fluid,
    /// Active cell touching a wall (obstacle or truncation boundary).
    Cut,
    Solid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceKind {
    /// Both neighbours are active.
    Interior,
    /// Separates an active cell from the obstacle.
    Wall,
    /// Lies on the truncation boundary next to an active cell.
    Outer,
    /// Not adjacent to any active cell.
    Inactive,
}

impl FaceKind {
    pub fn is_boundary(self) -> bool {
        matches!(self, FaceKind::Wall | FaceKind::Outer)
    }
}

/// Face orientation on the staggered grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

#[derive(Clone, Debug)]
pub struct Grid {
    dimension: usize,
    nx: usize,
    ny: usize,
    h: f64,
    origin: [f64; 2],
    obstacle_radius: Option<f64>,
    cells: Vec<CellKind>,
    xfaces: Vec<FaceKind>,
    yfaces: Vec<FaceKind>,
    /// Outward (out of the fluid) unit normal of every cut cell.
    normals: Vec<Option<[f64; 2]>>,
}

/// Validated construction of the truncated exterior domain `[-L, L]^d` minus
/// the disk of radius `a`.
pub fn build_grid(dimension: usize, half_extent: f64, radius: f64, h: f64) -> Result<Grid> {
    if dimension != 2 {
        return Err(Error::InvalidParameter(format!(
            "dimension {dimension} is not supported (only d = 2)"
        )));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!("cell size h = {h} must be positive")));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "obstacle radius a = {radius} must be positive"
        )));
    }
    let across = 2.0 * radius / h;
    if across < 4.0 {
        return Err(Error::GeometryTooCoarse { cells: across });
    }
    if radius <= 2.0 * h {
        return Err(Error::InvalidParameter(format!(
            "obstacle radius a = {radius} must exceed 2h = {}",
            2.0 * h
        )));
    }
    if half_extent <= 4.0 * radius {
        return Err(Error::InvalidParameter(format!(
            "half extent L = {half_extent} must exceed 4a = {}",
            4.0 * radius
        )));
    }
    let n = 2.0 * half_extent / h;
    let n_round = n.round();
    if (n - n_round).abs() > 1e-9 * n.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "cell size h = {h} does not divide 2L = {}",
            2.0 * half_extent
        )));
    }
    let n = n_round as usize;
    Ok(Grid::new(
        [-half_extent, -half_extent],
        n,
        n,
        h,
        Some(radius),
    ))
}

/// Half-open rectangle of cell indices `[i0, i1) x [j0, j1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellWindow {
    pub i0: usize,
    pub i1: usize,
    pub j0: usize,
    pub j1: usize,
}

impl Grid {
    pub fn full_window(&self) -> CellWindow {
        CellWindow { i0: 0, i1: self.nx, j0: 0, j1: self.ny }
    }

    /// Smallest window containing every cell that meets the square
    /// `|y|_inf <= radius`, padded by `pad` cells and clipped to the grid.
    pub fn window_around_origin(&self, radius: f64, pad: usize) -> CellWindow {
        let lo = |o: f64, n: usize| {
            let k = ((-radius - o) / self.h).floor() as isize - pad as isize;
            k.clamp(0, n as isize) as usize
        };
        let hi = |o: f64, n: usize| {
            let k = ((radius - o) / self.h).ceil() as isize + pad as isize;
            k.clamp(0, n as isize) as usize
        };
        CellWindow {
            i0: lo(self.origin[0], self.nx),
            i1: hi(self.origin[0], self.nx),
            j0: lo(self.origin[1], self.ny),
            j1: hi(self.origin[1], self.ny),
        }
    }

    /// Unvalidated constructor for an `nx` by `ny` box with lower-left corner
    /// `origin` and an optional disk obstacle at the coordinate origin.
    pub fn new(origin: [f64; 2], nx: usize, ny: usize, h: f64, obstacle_radius: Option<f64>) -> Grid {
        assert!(nx >= 2 && ny >= 2, "grid needs at least 2x2 cells");
        let mut cells = vec![CellKind::Fluid; nx * ny];
        if let Some(a) = obstacle_radius {
            for j in 0..ny {
                for i in 0..nx {
                    let x = origin[0] + (i as f64 + 0.5) * h;
                    let y = origin[1] + (j as f64 + 0.5) * h;
                    if (x * x + y * y).sqrt() < a {
                        cells[j * nx + i] = CellKind::Solid;
                    }
                }
            }
        }
        let active = |c: &[CellKind], i: usize, j: usize| c[j * nx + i] != CellKind::Solid;

        let mut xfaces = vec![FaceKind::Inactive; (nx + 1) * ny];
        for j in 0..ny {
            for i in 0..=nx {
                let left = i > 0 && active(&cells, i - 1, j);
                let right = i < nx && active(&cells, i, j);
                xfaces[j * (nx + 1) + i] = if i == 0 || i == nx {
                    if left || right {
                        FaceKind::Outer
                    } else {
                        FaceKind::Inactive
                    }
                } else {
                    match (left, right) {
                        (true, true) => FaceKind::Interior,
                        (false, false) => FaceKind::Inactive,
                        _ => FaceKind::Wall,
                    }
                };
            }
        }
        let mut yfaces = vec![FaceKind::Inactive; nx * (ny + 1)];
        for j in 0..=ny {
            for i in 0..nx {
                let below = j > 0 && active(&cells, i, j - 1);
                let above = j < ny && active(&cells, i, j);
                yfaces[j * nx + i] = if j == 0 || j == ny {
                    if below || above {
                        FaceKind::Outer
                    } else {
                        FaceKind::Inactive
                    }
                } else {
                    match (below, above) {
                        (true, true) => FaceKind::Interior,
                        (false, false) => FaceKind::Inactive,
                        _ => FaceKind::Wall,
                    }
                };
            }
        }

        let mut normals = vec![None; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let c = j * nx + i;
                if cells[c] == CellKind::Solid {
                    continue;
                }
                let faces = [
                    (xfaces[j * (nx + 1) + i], [-1.0, 0.0]),
                    (xfaces[j * (nx + 1) + i + 1], [1.0, 0.0]),
                    (yfaces[j * nx + i], [0.0, -1.0]),
                    (yfaces[(j + 1) * nx + i], [0.0, 1.0]),
                ];
                let mut touches_wall = false;
                let mut outer = [0.0_f64, 0.0];
                for (kind, n) in faces {
                    match kind {
                        FaceKind::Wall => touches_wall = true,
                        FaceKind::Outer => {
                            outer[0] += n[0];
                            outer[1] += n[1];
                        }
                        _ => {}
                    }
                }
                if touches_wall {
                    // Analytic normal of the disk, pointing into the obstacle.
                    let x = origin[0] + (i as f64 + 0.5) * h;
                    let y = origin[1] + (j as f64 + 0.5) * h;
                    let r = (x * x + y * y).sqrt();
                    normals[c] = Some([-x / r, -y / r]);
                    cells[c] = CellKind::Cut;
                } else if outer != [0.0, 0.0] {
                    let r = (outer[0] * outer[0] + outer[1] * outer[1]).sqrt();
                    normals[c] = Some([outer[0] / r, outer[1] / r]);
                    cells[c] = CellKind::Cut;
                }
            }
        }

        Grid {
            dimension: 2,
            nx,
            ny,
            h,
            origin,
            obstacle_radius,
            cells,
            xfaces,
            yfaces,
            normals,
        }
    }

    /// Obstacle-free rectangle `[0, lx] x [0, ly]` with `nx` cells along x.
    pub fn rectangle(lx: f64, ly: f64, nx: usize) -> Grid {
        let h = lx / nx as f64;
        let ny = (ly / h).round() as usize;
        Grid::new([0.0, 0.0], nx, ny, h, None)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }
    /// Upper-right corner of the box.
    pub fn extent(&self) -> [f64; 2] {
        [
            self.origin[0] + self.nx as f64 * self.h,
            self.origin[1] + self.ny as f64 * self.h,
        ]
    }
    pub fn obstacle_radius(&self) -> Option<f64> {
        self.obstacle_radius
    }
    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }
    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }
    pub fn n_xfaces(&self) -> usize {
        (self.nx + 1) * self.ny
    }
    pub fn n_yfaces(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
    #[inline]
    pub fn xface(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }
    #[inline]
    pub fn yface(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn cell_kind(&self, c: usize) -> CellKind {
        self.cells[c]
    }
    #[inline]
    pub fn is_active(&self, c: usize) -> bool {
        self.cells[c] != CellKind::Solid
    }
    #[inline]
    pub fn active_ij(&self, i: isize, j: isize) -> bool {
        i >= 0
            && j >= 0
            && (i as usize) < self.nx
            && (j as usize) < self.ny
            && self.is_active(self.cell(i as usize, j as usize))
    }
    #[inline]
    pub fn xface_kind(&self, f: usize) -> FaceKind {
        self.xfaces[f]
    }
    #[inline]
    pub fn yface_kind(&self, f: usize) -> FaceKind {
        self.yfaces[f]
    }
    pub fn face_kind(&self, axis: Axis, f: usize) -> FaceKind {
        match axis {
            Axis::X => self.xfaces[f],
            Axis::Y => self.yfaces[f],
        }
    }
    pub fn cell_kinds(&self) -> &[CellKind] {
        &self.cells
    }
    pub fn xface_kinds(&self) -> &[FaceKind] {
        &self.xfaces
    }
    pub fn yface_kinds(&self) -> &[FaceKind] {
        &self.yfaces
    }
    pub fn normal(&self, c: usize) -> Option<[f64; 2]> {
        self.normals[c]
    }

    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.h,
            self.origin[1] + (j as f64 + 0.5) * self.h,
        ]
    }
    pub fn xface_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + i as f64 * self.h,
            self.origin[1] + (j as f64 + 0.5) * self.h,
        ]
    }
    pub fn yface_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.h,
            self.origin[1] + j as f64 * self.h,
        ]
    }
    pub fn node(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + i as f64 * self.h,
            self.origin[1] + j as f64 * self.h,
        ]
    }

    /// Normal of a boundary face, pointing out of the fluid. `None` for
    /// interior and inactive faces.
    pub fn face_normal_sign(&self, axis: Axis, i: usize, j: usize) -> Option<f64> {
        let (kind, low_active) = match axis {
            Axis::X => (
                self.xfaces[self.xface(i, j)],
                i > 0 && self.is_active(self.cell(i - 1, j)),
            ),
            Axis::Y => (
                self.yfaces[self.yface(i, j)],
                j > 0 && self.is_active(self.cell(i, j - 1)),
            ),
        };
        kind.is_boundary()
            .then_some(if low_active { 1.0 } else { -1.0 })
    }

    /// A node carries shear stress only if all four surrounding cells are
    /// active; elsewhere the complete-slip condition sets it to zero.
    #[inline]
    pub fn node_is_interior(&self, i: usize, j: usize) -> bool {
        let (i, j) = (i as isize, j as isize);
        self.active_ij(i - 1, j - 1)
            && self.active_ij(i, j - 1)
            && self.active_ij(i - 1, j)
            && self.active_ij(i, j)
    }

    pub fn count(&self, kind: CellKind) -> usize {
        self.cells.iter().filter(|&&k| k == kind).count()
    }
    pub fn active_count(&self) -> usize {
        self.cells.iter().filter(|&&k| k != CellKind::Solid).count()
    }

    /// Distance from a point to the nearest edge of the box.
    pub fn distance_to_rim(&self, p: [f64; 2]) -> f64 {
        let hi = self.extent();
        (p[0] - self.origin[0])
            .min(hi[0] - p[0])
            .min(p[1] - self.origin[1])
            .min(hi[1] - p[1])
    }

    /// Number of connected components of the active region (face adjacency).
    pub fn connected_components(&self) -> usize {
        let mut label = vec![usize::MAX; self.n_cells()];
        let mut components = 0;
        let mut queue = VecDeque::new();
        for start in 0..self.n_cells() {
            if !self.is_active(start) || label[start] != usize::MAX {
                continue;
            }
            label[start] = components;
            queue.push_back(start);
            while let Some(c) = queue.pop_front() {
                let (i, j) = ((c % self.nx) as isize, (c / self.nx) as isize);
                for (di, dj) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                    if self.active_ij(i + di, j + dj) {
                        let n = self.cell((i + di) as usize, (j + dj) as usize);
                        if label[n] == usize::MAX {
                            label[n] = components;
                            queue.push_back(n);
                        }
                    }
                }
            }
            components += 1;
        }
        components
    }

    /// Integer coarsening of the same geometry, used for the spectral grid.
    pub fn coarsen_factor(&self, coarse: &Grid) -> Option<usize> {
        let ratio = coarse.h / self.h;
        let k = ratio.round();
        let same_box = (coarse.origin[0] - self.origin[0]).abs() < 1e-12
            && (coarse.origin[1] - self.origin[1]).abs() < 1e-12;
        (k >= 1.0
            && (ratio - k).abs() < 1e-9
            && same_box
            && coarse.nx * k as usize == self.nx
            && coarse.ny * k as usize == self.ny)
            .then_some(k as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn too_coarse_geometry_is_rejected() {
        let err = build_grid(2, 1.0, 0.2, 0.5).unwrap_err();
        assert!(matches!(err, Error::GeometryTooCoarse { .. }), "{err}");
    }

    #[test]
    fn zero_radius_is_rejected() {
        assert!(build_grid(2, 2.0, 0.0, 1.0 / 64.0).is_err());
    }

    #[test]
    fn solid_count_matches_disk_enumeration() {
        let h = 1.0 / 64.0;
        let grid = build_grid(2, 2.0, 0.25, h).unwrap();
        // Oracle: count centers inside the disk directly.
        let n = (4.0 / h) as usize;
        let mut inside = 0;
        for j in 0..n {
            for i in 0..n {
                let x = -2.0 + (i as f64 + 0.5) * h;
                let y = -2.0 + (j as f64 + 0.5) * h;
                if x * x + y * y < 0.0625 {
                    inside += 1;
                }
            }
        }
        assert_eq!(grid.count(CellKind::Solid), inside);
        let area_estimate = std::f64::consts::PI * 0.0625 / (h * h);
        assert!((inside as f64 - area_estimate).abs() < 2.0 * std::f64::consts::PI * 0.25 / h);
        assert!((area_estimate - 804.2).abs() < 0.1);
    }

    #[test]
    fn classification_partitions_cells() {
        let grid = build_grid(2, 1.0, 0.2, 1.0 / 32.0).unwrap();
        let total = grid.count(CellKind::Fluid) + grid.count(CellKind::Cut) + grid.count(CellKind::Solid);
        assert_eq!(total, grid.n_cells());
        assert!(grid.count(CellKind::Fluid) > 0);
        for c in 0..grid.n_cells() {
            assert_eq!(grid.cell_kind(c) == CellKind::Cut, grid.normal(c).is_some());
        }
    }

    #[test]
    fn wall_normals_point_into_obstacle() {
        let grid = build_grid(2, 1.0, 0.2, 1.0 / 32.0).unwrap();
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                let c = grid.cell(i, j);
                if let Some(n) = grid.normal(c) {
                    let p = grid.cell_center(i, j);
                    let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                    if r < 0.5 {
                        assert!(n[0] * p[0] + n[1] * p[1] < 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn staircase_normals_cancel() {
        let grid = build_grid(2, 1.5, 0.3, 1.0 / 40.0).unwrap();
        let mut sum = [0.0, 0.0];
        for j in 0..grid.ny() {
            for i in 0..=grid.nx() {
                if grid.xface_kind(grid.xface(i, j)) == FaceKind::Wall {
                    sum[0] += grid.face_normal_sign(Axis::X, i, j).unwrap();
                }
            }
        }
        for j in 0..=grid.ny() {
            for i in 0..grid.nx() {
                if grid.yface_kind(grid.yface(i, j)) == FaceKind::Wall {
                    sum[1] += grid.face_normal_sign(Axis::Y, i, j).unwrap();
                }
            }
        }
        assert_eq!(sum, [0.0, 0.0]);
    }

    #[test]
    fn exterior_domain_is_connected() {
        let grid = build_grid(2, 1.0, 0.2, 1.0 / 32.0).unwrap();
        assert_eq!(grid.connected_components(), 1);
    }

    #[test]
    fn classification_is_reproducible() {
        let a = build_grid(2, 1.0, 0.2, 1.0 / 32.0).unwrap();
        let b = build_grid(2, 1.0, 0.2, 1.0 / 32.0).unwrap();
        assert_eq!(a.cell_kinds(), b.cell_kinds());
        assert_eq!(a.xface_kinds(), b.xface_kinds());
    }
}
