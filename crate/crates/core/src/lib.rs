//! Monte-Carlo simulator for malicious reconfigurable intelligent surface (RIS)
//! attacks against rate-splitting (RSMA) and space-division (SDMA) multiple
//! access in a multi-user MIMO downlink.
//!
//! The pipeline for one Monte-Carlo trial is:
//!
//! 1. [`channel`] draws the true fading channels and the imperfect estimates
//!    held by the base station and by the attacker.
//! 2. [`transmitter`] builds the zero-forcing private precoders, the matched
//!    filter common precoder and the adaptive power split, all while the RIS
//!    absorbs.
//! 3. [`attacker`] chooses the reflection vector (random, aligned interference
//!    or mitigation).
//! 4. [`metrics`] evaluates the common/private SINRs and the sum rate on the
//!    true channels with the RIS reflecting.
//!
//! [`harness`] runs seeded sweeps over power, scheme, attack and CSI quality
//! and writes CSV results.

pub mod attacker;
pub mod channel;
mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod rng;
pub mod transmitter;

pub use error::{Error, Result};

/// Complex double-precision scalar used throughout the crate.
pub type C64 = nalgebra::Complex<f64>;

/// Converts a power in dBm to milliwatts.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_conversion() {
        assert_eq!(dbm_to_mw(0.0), 1.0);
        assert!((dbm_to_mw(30.0) - 1000.0).abs() < 1e-9);
        assert!((dbm_to_mw(-50.0) - 1e-5).abs() < 1e-18);
    }
}
