//! Simulation of a single trapped ion probed through a swept high-finesse
//! optical cavity: derived cavity figures, motional sideband couplings,
//! transient intracavity field, optical Bloch equations, and the scan-level
//! experiments built on top of them (spectra, standing-wave scans, detection
//! statistics, line fits).
//!
//! Conventions used throughout:
//! - All frequencies are angular (rad/s) unless a name says otherwise
//!   (`fsr_hz`, `linewidth_fwhm_hz`). Conversion from ordinary frequencies
//!   happens at the I/O boundary, not here.
//! - Decay rates are amplitude/population rates as named at each site;
//!   `kappa` is the cavity field (HWHM) decay rate, `gamma` the upper-state
//!   population decay rate.
//! - Detunings are laser minus resonance.

pub mod bloch;
pub mod constants;
pub mod csvio;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod field;
pub mod fit;
pub mod motion;
pub mod params;

pub use error::{Error, Result};

/// Complex double used for field amplitudes and coherences.
pub type C64 = num_complex::Complex64;
