//! Prescribed rigid translation of the obstacle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathKind {
    Static,
    /// `m(t) = v t`
    Linear { velocity: [f64; 2] },
    /// `m(t) = A sin(w t)`
    Sinusoidal { amplitude: [f64; 2], frequency: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MotionPath {
    pub kind: PathKind,
    pub horizon: f64,
}

/// Displacement, velocity and acceleration at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MotionSample {
    pub displacement: [f64; 2],
    pub velocity: [f64; 2],
    pub acceleration: [f64; 2],
}

impl MotionPath {
    pub fn new(kind: PathKind, horizon: f64) -> MotionPath {
        MotionPath { kind, horizon }
    }

    pub fn is_static(&self) -> bool {
        match self.kind {
            PathKind::Static => true,
            PathKind::Linear { velocity } => velocity == [0.0, 0.0],
            PathKind::Sinusoidal { amplitude, frequency } => {
                amplitude == [0.0, 0.0] || frequency == 0.0
            }
        }
    }

    /// Largest obstacle speed over the horizon.
    pub fn max_speed(&self) -> f64 {
        match self.kind {
            PathKind::Static => 0.0,
            PathKind::Linear { velocity } => velocity[0].hypot(velocity[1]),
            PathKind::Sinusoidal { amplitude, frequency } => {
                amplitude[0].hypot(amplitude[1]) * frequency.abs()
            }
        }
    }

    /// Evaluates the path; rejects times outside `[0, horizon]`.
    pub fn eval(&self, t: f64) -> Result<MotionSample> {
        if !(t >= 0.0 && t <= self.horizon * (1.0 + 1e-12)) {
            return Err(Error::OutOfHorizon {
                t,
                horizon: self.horizon,
            });
        }
        Ok(self.eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> MotionSample {
        match self.kind {
            PathKind::Static => MotionSample {
                displacement: [0.0; 2],
                velocity: [0.0; 2],
                acceleration: [0.0; 2],
            },
            PathKind::Linear { velocity } => MotionSample {
                displacement: [velocity[0] * t, velocity[1] * t],
                velocity,
                acceleration: [0.0; 2],
            },
            PathKind::Sinusoidal { amplitude, frequency } => {
                let (s, c) = (frequency * t).sin_cos();
                let w = frequency;
                MotionSample {
                    displacement: [amplitude[0] * s, amplitude[1] * s],
                    velocity: [amplitude[0] * w * c, amplitude[1] * w * c],
                    acceleration: [-amplitude[0] * w * w * s, -amplitude[1] * w * w * s],
                }
            }
        }
    }
}

/// `eval_motion` in free-function form.
pub fn eval_motion(path: &MotionPath, t: f64) -> Result<MotionSample> {
    path.eval(t)
}
