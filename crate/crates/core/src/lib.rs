//! Two-photon Mach-Zehnder phase estimation under depolarizing decoherence,
//! with a tunable polarization ancilla that restores super-sensitivity at
//! the phases where the bare two-photon probe goes blind.
//!
//! The crate is organized bottom-up:
//!
//! - [`quantum`]: labeled Hilbert spaces, density operators, Kraus channels, projective measurements.
//! - [`decoherence`]: the depolarizing channel on each photon's path.
//! - [`optics`]: probe states, interferometer, waveplates, detection projectors, convention checks.
//! - [`sensitivity`]: Fisher information, the waveplate search, super-sensitivity thresholds.
//! - [`adaptive`]: Monte-Carlo adaptive maximum-likelihood estimation.
//! - [`cli`]: file formats, run manifests and the commands behind the `ancilla-phase` binary.
//!
//! Runnable walkthroughs live in `examples/`.

pub mod adaptive;
pub mod cli;
pub mod decoherence;
pub mod error;
pub mod optics;
pub mod quantum;
pub mod sensitivity;

pub use error::{Error, Result};
