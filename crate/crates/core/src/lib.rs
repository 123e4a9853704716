//! Numerical laboratory for the low Mach number limit of compressible viscous
//! flow around a translating obstacle.

pub mod constitutive;
pub mod error;
pub mod extension;
pub mod field;
pub mod grid;
pub mod motion;
pub mod scenario;
pub mod poisson;
pub mod compressible;
pub mod config;
pub mod diagnostics;
pub mod energy;
pub mod incompressible;
pub mod spectral;
pub mod sweep;
pub mod io;
pub mod verify;

pub use constitutive::{stress, PressureLaw, Viscosity};
pub use error::{Error, Result};
pub use extension::{build_extension_field, ExtensionField};
pub use field::FaceField;
pub use grid::{build_grid, Axis, CellKind, CellWindow, FaceKind, Grid};
pub use motion::{eval_motion, MotionPath, MotionSample, PathKind};
pub use poisson::{assemble_neumann_laplacian, NeumannLaplacian, PoissonSolver};
pub use spectral::helmholtz::{helmholtz_project, HelmholtzProjector, HelmholtzSplit};
pub use spectral::rage::{rage_decay, RageRecord, SpectralWindow};
pub use spectral::wave::{wave_propagate, AcousticState, ModalState, WavePropagator};
pub use spectral::{spectral_decompose, SpectralDecomposition};
pub use incompressible::{IncompressibleSolver, IncompressibleState};
pub use compressible::{CompressibleSolver, FluidState, IllPreparedData, Sponge};
pub use config::{parse_config, ExperimentConfig};
pub use scenario::{shipped_config, Scenario};
pub use sweep::{run_sweep, SweepResult};
pub use io::{write_run, Manifest};
pub use verify::{verify_run, VerifyReport};
