//! Resource allocation for downlinks assisted by a reconfigurable intelligent
//! surface (RIS).
//!
//! The crate is organised bottom-up:
//!
//! - [`scenario`]: geometry, RF budget, path loss and noise power.
//! - [`channel`]: random channel realizations and the per-user reflected
//!   matrices `D_k` that turn the RIS design into an optimization over a
//!   fixed-modulus complex vector.
//! - [`su_opt`]: single-user SNR evaluation plus three maximizers
//!   (alternating, upper-bound, lower-bound).
//! - [`mu_opt`]: geometric-mean SINR under channel-matched beamforming, its
//!   analytic phase gradient, convex power allocation, and the alternating
//!   phase/power driver.
//! - [`harness`]: paired Monte Carlo experiments and empirical CDFs.
//! - [`cli`]: the `ris-sim` command-line front end.

// `!(x > 0.0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod error;
pub mod harness;
pub mod mu_opt;
pub mod report;
pub mod scenario;
pub mod su_opt;

pub use num_complex::Complex64;

pub use channel::{ChannelRealization, EffectiveChannel, RisConfig};
pub use error::{Error, Result};
pub use report::OptimizationReport;
pub use scenario::ScenarioConfig;

/// Phase of a complex number with the convention `∠0 = 0`.
#[inline]
pub(crate) fn angle(z: Complex64) -> f64 {
    if z.re == 0.0 && z.im == 0.0 {
        0.0
    } else {
        z.arg()
    }
}

/// Wraps an angle into `[-π, π]`.
#[inline]
pub fn wrap_phase(phi: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let w = phi - TAU * (phi / TAU).round();
    w.clamp(-PI, PI)
}

/// Linear power ratio to dB.
#[inline]
pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}
