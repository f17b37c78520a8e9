//! Precoder design and power allocation at the base station.
//!
//! Private streams use zero-forcing on the estimated direct channels, the
//! common stream uses the normalized sum of the estimates (equal-weight
//! matched filter). RSMA splits power adaptively so that the residual
//! private-stream interference measured on the legitimate links lands at the
//! noise level. SDMA puts all power on the private streams, split uniformly.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::hermitian_condition_number;
use crate::{Error, Result, C64};

/// Gram matrices with a larger condition number are treated as singular.
pub const MAX_GRAM_CONDITION: f64 = 1e12;

/// Interference powers below this (mW) count as zero when splitting power.
pub const INTERFERENCE_FLOOR_MW: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Rsma,
    Sdma,
}

impl Scheme {
    pub const ALL: [Scheme; 2] = [Scheme::Rsma, Scheme::Sdma];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Rsma => "rsma",
            Scheme::Sdma => "sdma",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rsma" => Ok(Scheme::Rsma),
            "sdma" => Ok(Scheme::Sdma),
            other => Err(Error::Config(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Precoders of one transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    /// Unit-norm common precoder `p^c`.
    pub common: DVector<C64>,
    /// Zero-forcing private precoders `p^p_k` (not normalized).
    pub private: Vec<DVector<C64>>,
}

impl PrecoderSet {
    pub fn design(h_hat: &[DVector<C64>]) -> Result<Self> {
        Ok(PrecoderSet {
            common: mf_common_precoder(h_hat)?,
            private: zf_private_precoders(h_hat)?,
        })
    }
}

fn stack_columns(h_hat: &[DVector<C64>]) -> Result<DMatrix<C64>> {
    let m = h_hat
        .first()
        .map(|h| h.len())
        .ok_or_else(|| Error::Dimension("no user channels".into()))?;
    if h_hat.iter().any(|h| h.len() != m) {
        return Err(Error::Dimension("user channels differ in length".into()));
    }
    Ok(DMatrix::from_columns(h_hat))
}

/// Columns of `Ĥ (Ĥ^H Ĥ)^{-1}` with `Ĥ = [ĥ_1 .. ĥ_K]`, so that
/// `ĥ_{k'}^H p_k = 1` if `k' = k` and `0` otherwise.
pub fn zf_private_precoders(h_hat: &[DVector<C64>]) -> Result<Vec<DVector<C64>>> {
    let h = stack_columns(h_hat)?;
    let (m, k) = h.shape();
    if m < k {
        return Err(Error::Dimension(format!(
            "zero-forcing needs at least as many antennas as users (M = {m}, K = {k})"
        )));
    }
    let gram = h.adjoint() * &h;
    let condition = hermitian_condition_number(&gram);
    if !(condition <= MAX_GRAM_CONDITION) {
        return Err(Error::Singular { condition });
    }
    let chol = gram
        .cholesky()
        .ok_or(Error::Singular { condition })?;
    let precoders = &h * chol.inverse();
    Ok(precoders.column_iter().map(|c| c.into_owned()).collect())
}

/// `s / ||s||` with `s = Σ_i ĥ_i`.
pub fn mf_common_precoder(h_hat: &[DVector<C64>]) -> Result<DVector<C64>> {
    let h = stack_columns(h_hat)?;
    let s: DVector<C64> = h.column_sum();
    let scale: f64 = h_hat.iter().map(|h| h.norm()).sum();
    let norm = s.norm();
    if !(norm > 1e-12 * scale) {
        return Err(Error::DegenerateSum);
    }
    Ok(s / C64::from(norm))
}

/// Which user's measured interference sets the private power fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterferenceReference {
    /// Minimum over users (the default rule).
    #[default]
    LeastInterfered,
    /// Maximum over users, which protects the worst user.
    MostInterfered,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub total_power_mw: f64,
    pub alpha_common: f64,
    pub alpha_private: Vec<f64>,
    pub noise_power_mw: f64,
}

impl PowerAllocation {
    /// Uniform private split with no common stream.
    pub fn sdma(users: usize, total_power_mw: f64, noise_power_mw: f64) -> Self {
        PowerAllocation {
            total_power_mw,
            alpha_common: 0.0,
            alpha_private: vec![1.0 / users as f64; users],
            noise_power_mw,
        }
    }

    pub fn budget(&self) -> f64 {
        self.alpha_common + self.alpha_private.iter().sum::<f64>()
    }
}

/// Per-stream private fraction given the reference interference power (mW,
/// already multiplied by the total power). At or below
/// [`INTERFERENCE_FLOOR_MW`] the private streams take the whole budget.
pub fn private_power_fraction(users: usize, interference_mw: f64, noise_power_mw: f64) -> f64 {
    let uniform = 1.0 / users as f64;
    if interference_mw < INTERFERENCE_FLOOR_MW {
        uniform
    } else {
        uniform.min(noise_power_mw / interference_mw)
    }
}

/// Leakage `Σ_{i≠k} |h_k^H p_i|^2` seen by each user on its direct channel.
pub fn private_leakage(h: &[DVector<C64>], p_private: &[DVector<C64>]) -> Vec<f64> {
    h.iter()
        .enumerate()
        .map(|(k, hk)| {
            p_private
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != k)
                .map(|(_, p)| hk.dotc(p).norm_sqr())
                .sum()
        })
        .collect()
}

/// Power split for `scheme`.
///
/// For RSMA the interference is measured on the true direct channels, as
/// reported by the users during the training phase while the RIS absorbs.
pub fn allocate_power(
    h_true: &[DVector<C64>],
    p_private: &[DVector<C64>],
    total_power_mw: f64,
    noise_power_mw: f64,
    scheme: Scheme,
    reference: InterferenceReference,
) -> Result<PowerAllocation> {
    if !(total_power_mw > 0.0) || !total_power_mw.is_finite() {
        return Err(Error::Domain(format!("transmit power must be positive, got {total_power_mw} mW")));
    }
    if !(noise_power_mw > 0.0) || !noise_power_mw.is_finite() {
        return Err(Error::Domain(format!("noise power must be positive, got {noise_power_mw} mW")));
    }
    let users = p_private.len();
    if users == 0 || h_true.len() != users {
        return Err(Error::Dimension(format!(
            "{} channels for {users} private precoders",
            h_true.len()
        )));
    }
    if scheme == Scheme::Sdma {
        return Ok(PowerAllocation::sdma(users, total_power_mw, noise_power_mw));
    }

    let leakage = private_leakage(h_true, p_private);
    let reference_leakage = match reference {
        InterferenceReference::LeastInterfered => leakage.iter().cloned().fold(f64::INFINITY, f64::min),
        InterferenceReference::MostInterfered => leakage.iter().cloned().fold(0.0, f64::max),
    };
    let alpha_p = private_power_fraction(users, reference_leakage * total_power_mw, noise_power_mw);
    // An exact uniform split leaves nothing for the common stream.
    let alpha_common = if alpha_p == 1.0 / users as f64 {
        0.0
    } else {
        (1.0 - users as f64 * alpha_p).max(0.0)
    };
    Ok(PowerAllocation {
        total_power_mw,
        alpha_common,
        alpha_private: vec![alpha_p; users],
        noise_power_mw,
    })
}
