//! Statistical-CSI beamforming for IRS-assisted MISO downlinks.
//!
//! * [`numerics`]: complex vectors/matrices, steering vectors, dominant
//!   singular vectors, reproducible random streams.
//! * [`channel`]: scenario constants, LoS components, Rician channel draws.
//! * [`beamform`]: alternating transmit/phase optimizer, Rayleigh-case closed
//!   forms, random-phase baseline.
//! * [`capacity`]: instantaneous and ergodic capacity, Jensen upper bounds,
//!   moment diagnostics.
//! * [`scenario`] and [`runner`]: experiment files and CSV output used by the
//!   `irsbeam` binary.

pub mod beamform;
pub mod capacity;
pub mod channel;
pub mod error;
pub mod numerics;
pub mod runner;
pub mod scenario;

pub use error::{Error, Result};
