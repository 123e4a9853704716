//! Barotropic pressure law and Newtonian viscous stress.

use crate::error::{Error, Result};

/// `p(rho) = a rho^gamma` together with the reference (far-field) density.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PressureLaw {
    pub coefficient: f64,
    pub exponent: f64,
    pub reference_density: f64,
}

impl PressureLaw {
    pub fn new(coefficient: f64, exponent: f64, reference_density: f64) -> Result<PressureLaw> {
        let mut problems = Vec::new();
        if !(coefficient > 0.0) {
            problems.push(format!("pressure coefficient {coefficient} must be positive"));
        }
        if !(exponent > 1.5) {
            problems.push(format!("gamma must exceed 3/2 (got {exponent})"));
        }
        if !(reference_density > 0.0) {
            problems.push(format!("reference density {reference_density} must be positive"));
        }
        if problems.is_empty() {
            Ok(PressureLaw {
                coefficient,
                exponent,
                reference_density,
            })
        } else {
            Err(Error::InvalidParameter(problems.join("; ")))
        }
    }

    fn check(rho: f64) -> Result<()> {
        if rho < 0.0 {
            Err(Error::NegativeDensity(rho))
        } else {
            Ok(())
        }
    }

    pub fn pressure(&self, rho: f64) -> Result<f64> {
        Self::check(rho)?;
        Ok(self.p(rho))
    }

    pub fn pressure_slope(&self, rho: f64) -> Result<f64> {
        Self::check(rho)?;
        Ok(self.dp(rho))
    }

    /// `P(rho) = rho * int_1^rho p(z) / z^2 dz`
    pub fn pressure_potential(&self, rho: f64) -> Result<f64> {
        Self::check(rho)?;
        Ok(self.potential(rho))
    }

    /// Relative entropy `P(rho) - P'(rho_ref)(rho - rho_ref) - P(rho_ref)`.
    pub fn relative_entropy(&self, rho: f64) -> Result<f64> {
        Self::check(rho)?;
        Ok(self.entropy(rho))
    }

    // Unchecked kernels used inside the solvers, where positivity is
    // guaranteed by the caller.

    #[inline]
    pub(crate) fn p(&self, rho: f64) -> f64 {
        self.coefficient * pow(rho, self.exponent)
    }

    #[inline]
    pub(crate) fn dp(&self, rho: f64) -> f64 {
        self.coefficient * self.exponent * pow(rho, self.exponent - 1.0)
    }

    #[inline]
    pub(crate) fn potential(&self, rho: f64) -> f64 {
        let g = self.exponent;
        self.coefficient * (pow(rho, g) - rho) / (g - 1.0)
    }

    /// `rho^g - r^g - g r^(g-1) (rho - r)`, the second-order remainder of
    /// `rho^g` about the reference density. Uses the binomial series close to
    /// the reference to avoid cancellation.
    #[inline]
    fn power_remainder(&self, rho: f64) -> f64 {
        let g = self.exponent;
        let r = self.reference_density;
        let d = rho - r;
        if d.abs() < 1e-3 * r {
            let x = d / r;
            let mut coeff = g * (g - 1.0) / 2.0;
            let mut term = x * x;
            let mut sum = 0.0;
            for k in 2..12 {
                sum += coeff * term;
                coeff *= (g - k as f64) / (k as f64 + 1.0);
                term *= x;
            }
            pow(r, g) * sum
        } else {
            pow(rho, g) - pow(r, g) - g * pow(r, g - 1.0) * d
        }
    }

    /// The linear terms of `P` cancel in the relative entropy, leaving a
    /// multiple of the power remainder.
    #[inline]
    pub(crate) fn entropy(&self, rho: f64) -> f64 {
        self.coefficient * self.power_remainder(rho) / (self.exponent - 1.0)
    }

    /// Enthalpy `H` with `H'(rho) = p'(rho) / rho`.
    #[inline]
    pub(crate) fn enthalpy(&self, rho: f64) -> f64 {
        let g = self.exponent;
        self.coefficient * g / (g - 1.0) * pow(rho, g - 1.0)
    }

    /// `p(rho) - p'(rho_ref)(rho - rho_ref) - p(rho_ref)`, nonnegative for
    /// convex laws.
    #[inline]
    pub(crate) fn pressure_remainder(&self, rho: f64) -> f64 {
        self.coefficient * self.power_remainder(rho)
    }

    /// `p'(rho_ref)`
    pub fn reference_slope(&self) -> f64 {
        self.dp(self.reference_density)
    }
}

/// Shear and bulk viscosities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Viscosity {
    pub shear: f64,
    pub bulk: f64,
}

impl Viscosity {
    pub fn new(shear: f64, bulk: f64) -> Result<Viscosity> {
        if !(shear > 0.0) || !(bulk >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "viscosities must satisfy mu > 0, eta >= 0 (got mu = {shear}, eta = {bulk})"
            )));
        }
        Ok(Viscosity { shear, bulk })
    }

    /// Coefficient of `div u` on the diagonal: `eta - 2 mu / 3`.
    #[inline]
    pub fn trace_coefficient(&self) -> f64 {
        self.bulk - 2.0 * self.shear / 3.0
    }
}

/// `x^e` with exact fast paths for the integer exponents of the default law.
#[inline]
fn pow(x: f64, e: f64) -> f64 {
    if e == 1.0 {
        x
    } else if e == 2.0 {
        x * x
    } else {
        x.powf(e)
    }
}

pub type Tensor2 = [[f64; 2]; 2];

/// `S = mu (grad u + grad u^T - 2/3 div u I) + eta div u I`, with
/// `grad[i][j] = d u_i / d x_j`.
pub fn stress(visc: &Viscosity, grad: &Tensor2) -> Tensor2 {
    let div = grad[0][0] + grad[1][1];
    let mu = visc.shear;
    let lam = visc.trace_coefficient() * div;
    let off = mu * (grad[0][1] + grad[1][0]);
    [
        [2.0 * mu * grad[0][0] + lam, off],
        [off, 2.0 * mu * grad[1][1] + lam],
    ]
}

pub fn contract(a: &Tensor2, b: &Tensor2) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn law() -> PressureLaw {
        PressureLaw::new(1.0, 2.0, 1.0).unwrap()
    }

    /// Composite Simpson oracle for `rho * int_1^rho p(z)/z^2 dz`.
    fn potential_oracle(law: &PressureLaw, rho: f64) -> f64 {
        let n = 20_000;
        let (a, b) = (1.0, rho);
        let step = (b - a) / n as f64;
        let f = |z: f64| law.p(z) / (z * z);
        let mut s = f(a) + f(b);
        for k in 1..n {
            let z = a + k as f64 * step;
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(z);
        }
        rho * s * step / 3.0
    }

    #[test]
    fn pressure_values() {
        let l = law();
        assert_eq!(l.pressure(0.0).unwrap(), 0.0);
        assert_eq!(l.pressure(1.0).unwrap(), 1.0);
        assert_eq!(l.pressure_slope(1.0).unwrap(), 2.0);
        assert!(matches!(l.pressure(-0.1), Err(Error::NegativeDensity(_))));
        for k in -6..=6 {
            let rho = 10f64.powf(k as f64 / 2.0);
            let ratio = l.pressure_slope(rho).unwrap() / rho.powf(l.exponent - 1.0);
            assert!((ratio - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn potential_matches_quadrature() {
        let l = law();
        assert!((l.pressure_potential(2.0).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(l.pressure_potential(1.0).unwrap(), 0.0);
        let other = PressureLaw::new(0.7, 1.8, 1.3).unwrap();
        for rho in [0.3, 0.9, 1.7, 4.0] {
            for l in [l, other] {
                let exact = l.pressure_potential(rho).unwrap();
                let quad = potential_oracle(&l, rho);
                assert!((exact - quad).abs() <= 1e-10 * exact.abs().max(1e-3), "{rho}");
            }
        }
    }

    #[test]
    fn relative_entropy_quadratic_case() {
        let l = law();
        assert!((l.relative_entropy(1.5).unwrap() - 0.25).abs() < 1e-14);
        // cross-check through the quadrature oracle of P
        let rho = 1.5;
        let dp_ref = 1.0; // P'(1) = 2*1 - 1 for a = 1, gamma = 2
        let via_oracle = potential_oracle(&l, rho) - dp_ref * (rho - 1.0) - 0.0;
        assert!((via_oracle - 0.25).abs() < 1e-10);
    }

    #[test]
    fn scaled_entropy_is_exactly_quadratic() {
        let l = law();
        for eps in [0.2, 0.1, 0.05, 0.025, 1e-4] {
            for s in [-1.0, 0.3, 2.0] {
                let v = l.relative_entropy(1.0 + eps * s).unwrap() / (eps * eps);
                assert!((v - s * s).abs() < 1e-9 * (s * s).max(1.0), "{eps} {s} {v}");
            }
        }
    }

    #[test]
    fn stress_examples() {
        let v = Viscosity::new(1.0, 0.0).unwrap();
        let s = stress(&v, &[[1.0, 0.0], [0.0, 1.0]]);
        assert!((s[0][0] - 2.0 / 3.0).abs() < 1e-15 && (s[1][1] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s[0][1], 0.0);
        let s = stress(&v, &[[0.0, 1.3], [-1.3, 0.0]]);
        assert_eq!(s, [[0.0, 0.0], [0.0, 0.0]]);
        assert_eq!(stress(&v, &[[0.0; 2]; 2]), [[0.0; 2]; 2]);
    }

    proptest! {
        #[test]
        fn entropy_nonnegative(rho in 0.0f64..10.0, g in 1.51f64..4.0, r in 0.1f64..3.0) {
            let l = PressureLaw::new(1.0, g, r).unwrap();
            let e = l.relative_entropy(rho).unwrap();
            prop_assert!(e >= -1e-12 * (1.0 + rho.powf(g)));
            prop_assert!(l.pressure_remainder(rho) >= -1e-12 * (1.0 + rho.powf(g)));
        }

        #[test]
        fn stress_is_dissipative(g in prop::array::uniform4(-5.0f64..5.0), mu in 0.01f64..2.0, eta in 0.0f64..2.0) {
            let grad = [[g[0], g[1]], [g[2], g[3]]];
            let s = stress(&Viscosity::new(mu, eta).unwrap(), &grad);
            prop_assert!(s[0][1] == s[1][0]);
            // 2/3 deviatoric coefficient in 2D leaves mu/3 (div u)^2 >= 0
            prop_assert!(contract(&s, &grad) >= -1e-12);
        }

        #[test]
        fn stress_is_linear(g in prop::array::uniform4(-5.0f64..5.0), a in -3.0f64..3.0) {
            let v = Viscosity::new(0.4, 0.2).unwrap();
            let grad = [[g[0], g[1]], [g[2], g[3]]];
            let scaled = [[a * g[0], a * g[1]], [a * g[2], a * g[3]]];
            let s = stress(&v, &grad);
            let t = stress(&v, &scaled);
            for i in 0..2 { for j in 0..2 {
                prop_assert!((t[i][j] - a * s[i][j]).abs() < 1e-12);
            }}
        }
    }
}
