//! Pulsed single-pass parametric amplification in a χ⁽²⁾ crystal.
//!
//! The crate propagates the linear signal equation through the crystal to obtain
//! the Bogoliubov Green functions (C, S), reduces them to independent squeezing
//! modes, compares them with a perturbative Gaussian model and predicts the noise
//! seen by a balanced homodyne detector with an arbitrary local oscillator.

pub mod config;
pub mod decomposition;
pub mod dispersion;
pub mod error;
pub mod grid;
pub mod homodyne;
pub mod io;
pub mod linalg;
pub mod perturbative;
pub mod pipeline;
pub mod propagator;

pub use dispersion::{DispersionCoefficients, DispersionModel, Field, Polarization, Sellmeier};
pub use decomposition::{bloch_messiah, decompose, ModeDecomposition};
pub use error::{Error, ExitStatus, Result};
pub use grid::{transform, Direction, FrequencyGrid, PumpProfile, PumpSpec};
pub use linalg::CMatrix;
pub use propagator::{compute_green, propagate_field, Frame, GreenPair, Propagator, Scheme};
pub use homodyne::{gaussian_lo, homodyne_report, HomodyneReport, LocalOscillator};
pub use perturbative::{gaussian_params, GaussianModel};
pub use config::RunConfig;
pub use pipeline::{Command, Pipeline};
