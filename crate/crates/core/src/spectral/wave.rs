//! The acoustic wave system
//!
//! ```text
//! eps dr/dt   =  A Psi
//! eps dPsi/dt = -c2 r + eps h
//! ```
//!
//! with `A` the Neumann Laplacian and `c2 = p'(rho_ref)`, solved mode by mode.
//! A mode with eigenvalue `lambda` rotates with angular frequency
//! `omega = sqrt(c2 lambda) / eps`. On the kernel `r` is constant and `Psi`
//! is gauged to zero.

use serde::{Deserialize, Serialize};

use super::SpectralDecomposition;

/// Acoustic state as full cell arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcousticState {
    pub r: Vec<f64>,
    pub psi: Vec<f64>,
    pub eps: f64,
    pub t: f64,
}

/// Acoustic state in mode coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ModalState {
    pub r: Vec<f64>,
    pub psi: Vec<f64>,
}

impl ModalState {
    pub fn zeros(k: usize) -> ModalState {
        ModalState {
            r: vec![0.0; k],
            psi: vec![0.0; k],
        }
    }
}

/// Per-mode propagator for fixed `eps` and `c2`.
#[derive(Clone, Debug)]
pub struct WavePropagator<'a> {
    pub spectrum: &'a SpectralDecomposition,
    /// `p'(rho_ref)`.
    pub c2: f64,
    pub eps: f64,
}

/// `(1 - cos x) / x^2` without cancellation.
fn one_minus_cos_over_sq(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        0.5 - x2 / 24.0 + x2 * x2 / 720.0
    } else {
        (1.0 - x.cos()) / (x * x)
    }
}

/// `(x - sin x) / x^3` without cancellation.
fn x_minus_sin_over_cube(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        1.0 / 6.0 - x2 / 120.0 + x2 * x2 / 5040.0
    } else {
        (x - x.sin()) / (x * x * x)
    }
}

impl<'a> WavePropagator<'a> {
    pub fn new(spectrum: &'a SpectralDecomposition, c2: f64, eps: f64) -> WavePropagator<'a> {
        WavePropagator { spectrum, c2, eps }
    }

    pub fn frequency(&self, lambda: f64) -> f64 {
        (self.c2 * lambda).sqrt() / self.eps
    }

    pub fn to_modal(&self, state: &AcousticState) -> ModalState {
        let mut psi = self.spectrum.coefficients(&state.psi);
        psi[0] = 0.0;
        ModalState {
            r: self.spectrum.coefficients(&state.r),
            psi,
        }
    }

    pub fn to_state(&self, modal: &ModalState, t: f64) -> AcousticState {
        AcousticState {
            r: self.spectrum.synthesize(&modal.r),
            psi: self.spectrum.synthesize(&modal.psi),
            eps: self.eps,
            t,
        }
    }

    /// Homogeneous evolution by `dt` in mode coordinates.
    pub fn rotate(&self, modal: &ModalState, dt: f64) -> ModalState {
        let mut out = ModalState::zeros(modal.r.len());
        for (k, &lambda) in self.spectrum.values().iter().enumerate().take(modal.r.len()) {
            let (r0, p0) = (modal.r[k], modal.psi[k]);
            if lambda <= 0.0 {
                out.r[k] = r0;
                continue;
            }
            let w = self.frequency(lambda);
            let (s, c) = (w * dt).sin_cos();
            let ratio = (lambda / self.c2).sqrt();
            out.r[k] = r0 * c + ratio * p0 * s;
            out.psi[k] = p0 * c - r0 * s / ratio;
        }
        out
    }

    /// Acoustic energy `c2 ||r||^2 + ||A^{1/2} Psi||^2` in mode coordinates.
    pub fn energy(&self, modal: &ModalState) -> f64 {
        let lambdas = self.spectrum.values();
        modal
            .r
            .iter()
            .zip(&modal.psi)
            .zip(lambdas)
            .map(|((r, p), l)| self.c2 * r * r + l * p * p)
            .sum()
    }

    /// Exact response over `[0, dt]` to a forcing that is linear in time,
    /// `h(s) = h0 (1 - s/dt) + h1 s/dt`, starting from zero.
    pub fn forced_increment(&self, h0: &[f64], h1: &[f64], dt: f64) -> ModalState {
        let mut out = ModalState::zeros(h0.len());
        for (k, &lambda) in self.spectrum.values().iter().enumerate().take(h0.len()) {
            if lambda <= 0.0 {
                continue;
            }
            let w = self.frequency(lambda);
            let x = w * dt;
            // int_0^dt cos(w tau) (1 - tau/dt) dtau etc., tau = dt - s.
            let c_const = dt * if x.abs() < 1e-8 { 1.0 } else { x.sin() / x };
            let c_late = dt * one_minus_cos_over_sq(x);
            let s_const = dt * x * one_minus_cos_over_sq(x);
            let s_late = dt * x * x_minus_sin_over_cube(x);
            let ratio = (lambda / self.c2).sqrt();
            out.psi[k] = h0[k] * (c_const - c_late) + h1[k] * c_late;
            out.r[k] = ratio * (h0[k] * (s_const - s_late) + h1[k] * s_late);
        }
        out
    }
}

/// Homogeneous propagation of a cell-space state to time `t`, returning the
/// new state and the truncation remainder of the initial data
/// `||(I-P_K) r0|| + ||(I-P_K) Psi0||`.
pub fn wave_propagate(
    spectrum: &SpectralDecomposition,
    c2: f64,
    eps: f64,
    state0: &AcousticState,
    t: f64,
) -> (AcousticState, f64) {
    let prop = WavePropagator::new(spectrum, c2, eps);
    let modal = prop.to_modal(state0);
    let out = prop.rotate(&modal, t - state0.t);
    let remainder = spectrum.truncation_remainder(&state0.r) + spectrum.truncation_remainder(&state0.psi);
    (prop.to_state(&out, t), remainder)
}

/// Variation of constants on the retained span. `forcing(t)` returns mode
/// coefficients of `h(t)`; between the points of `times` it is interpolated
/// linearly and integrated exactly against the oscillatory kernel, so the
/// result is exact for piecewise-linear forcing and second order otherwise.
/// Returns the modal state at every entry of `times` (which must start at
/// the initial time and be nondecreasing).
pub fn duhamel_solve(
    prop: &WavePropagator<'_>,
    initial: &ModalState,
    forcing: impl Fn(f64) -> Vec<f64>,
    times: &[f64],
) -> Vec<ModalState> {
    let mut out = Vec::with_capacity(times.len());
    let Some(&t0) = times.first() else {
        return out;
    };
    let mut state = initial.clone();
    let mut h_prev = forcing(t0);
    out.push(state.clone());
    for w in times.windows(2) {
        let dt = w[1] - w[0];
        let h_next = forcing(w[1]);
        let mut next = prop.rotate(&state, dt);
        let inc = prop.forced_increment(&h_prev, &h_next, dt);
        for k in 0..next.r.len() {
            next.r[k] += inc.r[k];
            next.psi[k] += inc.psi[k];
        }
        state = next;
        h_prev = h_next;
        out.push(state.clone());
    }
    out
}
