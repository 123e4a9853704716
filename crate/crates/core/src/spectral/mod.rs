//! Spectral calculus of the Neumann Laplacian: eigenpairs, functions of the
//! operator, the Helmholtz split, the acoustic wave propagator, forcing
//! channels and the local-decay functional.

pub mod acoustic;
pub mod forcing;
pub mod helmholtz;
pub mod rage;
pub mod wave;

use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::poisson::NeumannLaplacian;

/// Relative size of the constant component above which a negative power
/// is refused.
const KERNEL_TOLERANCE: f64 = 1e-9;

/// Retained eigenpairs of the Neumann Laplacian, ascending. Modes are
/// orthonormal in the cell inner product `sum_c w_c v_c h^2`; the first mode
/// is the exact normalized constant with eigenvalue 0.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    h: f64,
    n_cells: usize,
    active: Vec<usize>,
    values: Vec<f64>,
    /// Mode `k` occupies `modes[k * n .. (k + 1) * n]` over the active cells.
    modes: Vec<f64>,
}

/// Output of a spectral function application.
#[derive(Clone, Debug)]
pub struct SpectralApply {
    /// Full cell array (solid cells 0).
    pub field: Vec<f64>,
    /// `|| (I - P_K) w ||` of the input.
    pub truncation_remainder: f64,
}

/// Computes the `k` smallest eigenpairs with a dense symmetric eigensolver.
pub fn spectral_decompose(lap: &NeumannLaplacian, k: usize) -> Result<SpectralDecomposition> {
    let n = lap.n_active();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "mode count {k} must lie in 1..={n}"
        )));
    }
    let h = lap.cell_size();
    let dense = lap.dense();
    let a = Mat::from_fn(n, n, |i, j| dense[i * n + j]);
    drop(dense);
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::EigensolverFailure(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut values = Vec::with_capacity(k);
    let mut modes = vec![0.0; k * n];
    let scale = 1.0 / h;
    for m in 0..k {
        values.push(s[m].max(0.0));
        for i in 0..n {
            modes[m * n + i] = u[(i, m)] * scale;
        }
    }
    // The kernel is known exactly on a connected region.
    values[0] = 0.0;
    let c = 1.0 / (h * (n as f64).sqrt());
    modes[..n].iter_mut().for_each(|v| *v = c);
    for m in 1..k {
        let e = &mut modes[m * n..(m + 1) * n];
        let proj: f64 = e.iter().sum::<f64>() * c * h * h;
        e.iter_mut().for_each(|v| *v -= proj * c);
        // Deterministic sign: first nonzero entry positive.
        if let Some(&first) = e.iter().find(|v| v.abs() > 1e-12) {
            if first < 0.0 {
                e.iter_mut().for_each(|v| *v = -*v);
            }
        }
    }
    let spec = SpectralDecomposition {
        h,
        n_cells: lap.n_cells(),
        active: lap.active_cells().to_vec(),
        values,
        modes,
    };
    let worst = spec.residuals(lap).into_iter().fold(0.0, f64::max);
    if !(worst <= 1e-8) {
        return Err(Error::EigensolverFailure(format!(
            "eigenpair residual {worst:.3e} exceeds 1e-8"
        )));
    }
    Ok(spec)
}

impl SpectralDecomposition {
    pub fn n_modes(&self) -> usize {
        self.values.len()
    }

    pub fn n_active(&self) -> usize {
        self.active.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mode `k` on the active cells, in `NeumannLaplacian::active_cells` order.
    pub fn mode(&self, k: usize) -> &[f64] {
        let n = self.active.len();
        &self.modes[k * n..(k + 1) * n]
    }

    /// Mode `k` as a full cell array.
    pub fn mode_field(&self, k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cells];
        for (&c, v) in self.active.iter().zip(self.mode(k)) {
            out[c] = *v;
        }
        out
    }

    /// `||A e_k - lambda_k e_k|| / ||e_k||` for every retained pair.
    pub fn residuals(&self, lap: &NeumannLaplacian) -> Vec<f64> {
        (0..self.n_modes())
            .map(|k| {
                let e = self.mode_field(k);
                let ae = lap.apply(&e);
                let (mut r, mut n) = (0.0, 0.0);
                for &c in &self.active {
                    r += (ae[c] - self.values[k] * e[c]).powi(2);
                    n += e[c] * e[c];
                }
                (r / n).sqrt()
            })
            .collect()
    }

    /// Largest entry of `Gram - I`. Costs `K^2 n`; meant for tests.
    pub fn gram_defect(&self) -> f64 {
        let h2 = self.h * self.h;
        let mut worst = 0.0_f64;
        for a in 0..self.n_modes() {
            for b in a..self.n_modes() {
                let d: f64 = self.mode(a).iter().zip(self.mode(b)).map(|(x, y)| x * y).sum::<f64>() * h2;
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((d - target).abs());
            }
        }
        worst
    }

    /// Mode coefficients `<w, e_k>` of a full cell array.
    pub fn coefficients(&self, w: &[f64]) -> Vec<f64> {
        let h2 = self.h * self.h;
        let compact: Vec<f64> = self.active.iter().map(|&c| w[c]).collect();
        (0..self.n_modes())
            .map(|k| self.mode(k).iter().zip(&compact).map(|(e, x)| e * x).sum::<f64>() * h2)
            .collect()
    }

    /// `sum_k coeffs[k] e_k` as a full cell array.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let n = self.active.len();
        let mut compact = vec![0.0; n];
        for (k, &a) in coeffs.iter().enumerate() {
            if a != 0.0 {
                for (o, e) in compact.iter_mut().zip(self.mode(k)) {
                    *o += a * e;
                }
            }
        }
        let mut out = vec![0.0; self.n_cells];
        for (&c, v) in self.active.iter().zip(&compact) {
            out[c] = *v;
        }
        out
    }

    /// Norm of a full cell array in the cell inner product.
    pub fn norm(&self, w: &[f64]) -> f64 {
        (self.active.iter().map(|&c| w[c] * w[c]).sum::<f64>() * self.h * self.h).sqrt()
    }

    /// `|| w - P_K w ||`.
    pub fn truncation_remainder(&self, w: &[f64]) -> f64 {
        let back = self.synthesize(&self.coefficients(w));
        let diff: Vec<f64> = w.iter().zip(&back).map(|(a, b)| a - b).collect();
        self.norm(&diff)
    }

    /// `f(A) w` on the retained span.
    pub fn apply_function(&self, w: &[f64], f: impl Fn(f64) -> f64) -> SpectralApply {
        let coeffs = self.coefficients(w);
        let scaled: Vec<f64> = coeffs.iter().zip(&self.values).map(|(c, &l)| c * f(l)).collect();
        let field = self.synthesize(&scaled);
        let back = self.synthesize(&coeffs);
        let diff: Vec<f64> = w.iter().zip(&back).map(|(a, b)| a - b).collect();
        SpectralApply {
            field,
            truncation_remainder: self.norm(&diff),
        }
    }

    /// `A^s w`. For `s < 0` the constant component of `w` must vanish; the
    /// zero eigenvalue is excluded from every nonpositive power except the
    /// identity `s = 0`.
    pub fn fractional_power_apply(&self, s: f64, w: &[f64]) -> Result<SpectralApply> {
        if s < 0.0 {
            let c0 = self.coefficients_kernel(w);
            let scale = self.norm(w).max(f64::MIN_POSITIVE);
            if c0.abs() > KERNEL_TOLERANCE * scale {
                return Err(Error::KernelSingularity {
                    power: s,
                    component: c0,
                });
            }
        }
        Ok(self.apply_function(w, |l| power(l, s)))
    }

    fn coefficients_kernel(&self, w: &[f64]) -> f64 {
        let h2 = self.h * self.h;
        self.active.iter().zip(self.mode(0)).map(|(&c, e)| w[c] * e).sum::<f64>() * h2
    }
}

/// `lambda^s` with `0^s = 0` for `s != 0` (the kernel is gauged away).
pub(crate) fn power(lambda: f64, s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else if lambda <= 0.0 {
        0.0
    } else {
        lambda.powf(s)
    }
}

/// Block average of a cell field from `fine` onto the coarser `coarse` grid
/// over the active fine cells of each block. Coarse cells without active fine
/// cells, or inactive themselves, get 0.
pub fn restrict_cells(fine: &Grid, coarse: &Grid, field: &[f64]) -> Result<Vec<f64>> {
    let k = fine.coarsen_factor(coarse).ok_or_else(|| {
        Error::InvalidParameter("spectral grid must be an integer coarsening of the flow grid".into())
    })?;
    let mut out = vec![0.0; coarse.n_cells()];
    for jc in 0..coarse.ny() {
        for ic in 0..coarse.nx() {
            let c = coarse.cell(ic, jc);
            if !coarse.is_active(c) {
                continue;
            }
            let (mut s, mut n) = (0.0, 0usize);
            for j in jc * k..(jc + 1) * k {
                for i in ic * k..(ic + 1) * k {
                    let f = fine.cell(i, j);
                    if fine.is_active(f) {
                        s += field[f];
                        n += 1;
                    }
                }
            }
            if n > 0 {
                out[c] = s / n as f64;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{cell_mean, gradient, sample_cells, face_norm};
    use crate::grid::build_grid;
    use crate::poisson::assemble_neumann_laplacian;

    fn small() -> (Grid, NeumannLaplacian, SpectralDecomposition) {
        let g = build_grid(2, 1.0, 0.2, 1.0 / 16.0).unwrap();
        let lap = assemble_neumann_laplacian(&g).unwrap();
        let n = lap.n_active();
        let s = spectral_decompose(&lap, n).unwrap();
        (g, lap, s)
    }

    #[test]
    fn single_mode_is_the_constant() {
        let g = Grid::rectangle(1.0, 1.0, 6);
        let lap = assemble_neumann_laplacian(&g).unwrap();
        let s = spectral_decompose(&lap, 1).unwrap();
        assert_eq!(s.values(), &[0.0]);
        let e = s.mode(0);
        assert!(e.iter().all(|v| *v == e[0]));
    }

    #[test]
    fn full_basis_is_orthonormal_and_accurate() {
        let (_, lap, s) = small();
        assert!(s.gram_defect() < 1e-10);
        assert!(s.residuals(&lap).iter().all(|r| *r < 1e-8));
        assert!(s.values().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn powers_match_operator_and_gradient_norm() {
        let (g, lap, s) = small();
        let mut w = sample_cells(&g, 0.0, |x| (2.0 * x[0]).sin() + x[1] * x[1]);
        let m = cell_mean(&g, &w);
        for c in 0..g.n_cells() {
            if g.is_active(c) {
                w[c] -= m;
            }
        }
        let direct = lap.apply(&w);
        let spec = s.fractional_power_apply(1.0, &w).unwrap();
        assert!(spec.truncation_remainder < 1e-10);
        for c in 0..g.n_cells() {
            assert!((direct[c] - spec.field[c]).abs() < 1e-8 * (1.0 + direct[c].abs()));
        }
        let half = s.fractional_power_apply(0.5, &w).unwrap();
        let lhs = s.norm(&half.field);
        let rhs = face_norm(&g, &gradient(&g, &w));
        assert!((lhs - rhs).abs() < 1e-9 * rhs);
        let id = s.fractional_power_apply(0.0, &w).unwrap();
        assert!(id.field.iter().zip(&w).all(|(a, b)| (a - b).abs() < 1e-10));
    }

    #[test]
    fn negative_power_needs_zero_mean() {
        let (g, _, s) = small();
        let w = sample_cells(&g, 0.0, |_| 1.0);
        assert!(matches!(
            s.fractional_power_apply(-0.5, &w),
            Err(Error::KernelSingularity { .. })
        ));
    }

    #[test]
    fn inverse_undoes_operator() {
        let (g, lap, s) = small();
        let w = s.mode_field(3);
        let aw = lap.apply(&w);
        let back = s.fractional_power_apply(-1.0, &aw).unwrap();
        for c in 0..g.n_cells() {
            assert!((back.field[c] - w[c]).abs() < 1e-9);
        }
    }
}
