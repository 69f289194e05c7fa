//! Driven bosonic Josephson junctions in a calibrated double well: stationary two-mode
//! parameters, exact two-mode and Gross-Pitaevskii dynamics, Bessel-function effective
//! couplings and resonance scans.

pub mod bessel;
pub mod effective;
pub mod error;
pub mod exact;
pub mod expm;
pub mod gp;
pub mod calibration;
pub mod config;
pub mod grid;
pub mod interp;
pub mod output;
pub mod potential;
pub mod scan;
pub mod spectral;
pub mod tables;
pub mod twomode;
pub mod units;

pub use error::{Error, Result};
