//! Local acoustic decay functional
//!
//! `D = int_0^T || chi G(A) e(t) X ||^2 dt`, `e(t) = exp(i sqrt(c2 A) t / eps)`,
//!
//! evaluated on the retained modes with composite Simpson quadrature. For
//! real `X` the squared norm splits into the cosine and sine parts of the
//! propagator.

use serde::{Deserialize, Serialize};

use super::SpectralDecomposition;
use crate::error::{Error, Result};
use crate::extension::smoothstep;
use crate::grid::Grid;

/// Quadrature steps must satisfy `step <= QUADRATURE_FACTOR / omega_max`,
/// about 12 samples per period of the fastest retained oscillation.
pub const QUADRATURE_FACTOR: f64 = 0.5;

/// Smooth spectral window: 1 on `[lo, hi]`, C2 ramps over `[lo (1 - ramp), lo]`
/// and `[hi, hi (1 + ramp)]`, 0 elsewhere. Values stay in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralWindow {
    pub lo: f64,
    pub hi: f64,
    pub ramp: f64,
}

impl SpectralWindow {
    /// Default window: 1 between the 5th and the `K/2`-th eigenvalue
    /// (1-based, the first being 0), half-width ramps.
    pub fn default_for(spectrum: &SpectralDecomposition) -> Result<SpectralWindow> {
        let v = spectrum.values();
        let k = v.len();
        if k < 10 {
            return Err(Error::InvalidParameter(format!(
                "spectral window needs at least 10 retained modes, have {k}"
            )));
        }
        Ok(SpectralWindow {
            lo: v[4],
            hi: v[k / 2 - 1],
            ramp: 0.5,
        })
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        let lo0 = self.lo * (1.0 - self.ramp);
        let hi1 = self.hi * (1.0 + self.ramp);
        if lambda <= lo0 || lambda >= hi1 {
            0.0
        } else if lambda < self.lo {
            smoothstep((lambda - lo0) / (self.lo - lo0))
        } else if lambda <= self.hi {
            1.0
        } else {
            1.0 - smoothstep((lambda - self.hi) / (hi1 - self.hi))
        }
    }

    /// Upper end of the support.
    pub fn support_max(&self) -> f64 {
        self.hi * (1.0 + self.ramp)
    }
}

/// Radial C2 cutoff: 1 for `|y| <= inner`, 0 for `|y| >= outer`.
pub fn radial_cutoff(grid: &Grid, inner: f64, outer: f64) -> Vec<f64> {
    crate::field::sample_cells(grid, 0.0, |p| {
        let r = p[0].hypot(p[1]);
        1.0 - smoothstep((r - inner) / (outer - inner))
    })
}

/// Result of one evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RageRecord {
    pub eps: f64,
    pub value: f64,
    pub horizon: f64,
    pub steps: usize,
    pub modes: usize,
    pub truncation_remainder: f64,
}

/// Largest admissible quadrature step for the given window.
pub fn max_quadrature_step(c2: f64, eps: f64, window: &SpectralWindow) -> f64 {
    QUADRATURE_FACTOR * eps / (c2 * window.support_max()).sqrt()
}

/// Evaluates `D`. With `steps = None` the smallest even step count meeting
/// the resolution bound is used; an explicit count that is too coarse fails
/// with `UnresolvedOscillation`.
#[allow(clippy::too_many_arguments)]
pub fn rage_decay(
    spectrum: &SpectralDecomposition,
    c2: f64,
    eps: f64,
    x: &[f64],
    chi: &[f64],
    window: &SpectralWindow,
    horizon: f64,
    steps: Option<usize>,
) -> Result<RageRecord> {
    if !(window.lo > 0.0 && window.lo <= window.hi && (0.0..1.0).contains(&window.ramp)) {
        return Err(Error::InvalidParameter(
            "spectral window must satisfy 0 < lo <= hi and 0 <= ramp < 1".into(),
        ));
    }
    let limit = max_quadrature_step(c2, eps, window);
    let steps = match steps {
        Some(n) => {
            let n = n.max(2) + n % 2;
            let step = horizon / n as f64;
            if step > limit {
                return Err(Error::UnresolvedOscillation { step, limit });
            }
            n
        }
        None => {
            let n = (horizon / limit).ceil().max(2.0) as usize;
            n + n % 2
        }
    };
    let coeffs = spectrum.coefficients(x);
    let values = spectrum.values();
    let mut active = Vec::new();
    for (k, (&c, &l)) in coeffs.iter().zip(values).enumerate() {
        let a = window.eval(l) * c;
        if a != 0.0 {
            active.push((k, a, (c2 * l).sqrt() / eps));
        }
    }
    let n = spectrum.n_active();
    let chi_c: Vec<f64> = spectrum.active.iter().map(|&c| chi[c]).collect();
    let h2 = spectrum.h * spectrum.h;
    let integrand = |t: f64| {
        let mut re = vec![0.0; n];
        let mut im = vec![0.0; n];
        for &(k, a, w) in &active {
            let (s, c) = (w * t).sin_cos();
            let (ac, as_) = (a * c, a * s);
            for ((r, i), e) in re.iter_mut().zip(im.iter_mut()).zip(spectrum.mode(k)) {
                *r += ac * e;
                *i += as_ * e;
            }
        }
        re.iter()
            .zip(&im)
            .zip(&chi_c)
            .map(|((r, i), x)| x * x * (r * r + i * i))
            .sum::<f64>()
            * h2
    };
    let dt = horizon / steps as f64;
    let mut sum = integrand(0.0) + integrand(horizon);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * integrand(i as f64 * dt);
    }
    Ok(RageRecord {
        eps,
        value: sum * dt / 3.0,
        horizon,
        steps,
        modes: active.len(),
        truncation_remainder: spectrum.truncation_remainder(x),
    })
}
