//! SINRs and achievable rates.
//!
//! Users decode the common stream first, treating every private stream
//! (including their own) as noise, then cancel it perfectly and decode their
//! private stream against the remaining private streams.

use nalgebra::DVector;

use crate::attacker::{effective_channel, ReflectionState};
use crate::channel::ChannelRealization;
use crate::transmitter::{PowerAllocation, PrecoderSet, Scheme};
use crate::C64;

/// Received power `|g · p|²` (mW per mW transmitted).
fn gain(g: &DVector<C64>, p: &DVector<C64>) -> f64 {
    g.dot(p).norm_sqr()
}

fn private_power_sum(
    g: &DVector<C64>,
    precoders: &PrecoderSet,
    power: &PowerAllocation,
    skip: Option<usize>,
) -> f64 {
    precoders
        .private
        .iter()
        .zip(&power.alpha_private)
        .enumerate()
        .filter(|&(i, _)| Some(i) != skip)
        .map(|(_, (p, alpha))| gain(g, p) * power.total_power_mw * alpha)
        .sum()
}

/// Common-stream SINR of a user with effective channel row `g_k`.
pub fn common_sinr(g_k: &DVector<C64>, precoders: &PrecoderSet, power: &PowerAllocation) -> f64 {
    let signal = gain(g_k, &precoders.common) * power.total_power_mw * power.alpha_common;
    signal / (private_power_sum(g_k, precoders, power, None) + power.noise_power_mw)
}

/// Private-stream SINR of user `k` after perfect cancellation of the common
/// stream.
pub fn private_sinr(
    g_k: &DVector<C64>,
    k: usize,
    precoders: &PrecoderSet,
    power: &PowerAllocation,
) -> f64 {
    let signal = gain(g_k, &precoders.private[k]) * power.total_power_mw * power.alpha_private[k];
    signal / (private_power_sum(g_k, precoders, power, Some(k)) + power.noise_power_mw)
}

/// Rates of one transmission, in bits/s/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub common_sinr: Vec<f64>,
    pub private_sinr: Vec<f64>,
    pub common_rate_per_user: Vec<f64>,
    /// Rate of the common message, limited by the weakest user.
    pub allocated_common_rate: f64,
    pub private_rates: Vec<f64>,
    pub sum_rate: f64,
    /// Power fraction of the common stream used for this transmission.
    pub alpha_common: f64,
}

impl RateReport {
    /// Assembles a report from per-user SINRs. SDMA carries no common message,
    /// so its common rate is zero regardless of `common_sinr`.
    pub fn from_sinrs(common_sinr: Vec<f64>, private_sinr: Vec<f64>, scheme: Scheme, alpha_common: f64) -> Self {
        let common_rate_per_user: Vec<f64> = common_sinr.iter().map(|g| (1.0 + g).log2()).collect();
        let private_rates: Vec<f64> = private_sinr.iter().map(|g| (1.0 + g).log2()).collect();
        let allocated_common_rate = match scheme {
            Scheme::Sdma => 0.0,
            Scheme::Rsma => common_rate_per_user
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min)
                .max(0.0),
        };
        let sum_rate = allocated_common_rate + private_rates.iter().sum::<f64>();
        RateReport {
            common_sinr,
            private_sinr,
            common_rate_per_user,
            allocated_common_rate,
            private_rates,
            sum_rate,
            alpha_common,
        }
    }

    pub fn private_rate_sum(&self) -> f64 {
        self.private_rates.iter().sum()
    }
}

/// Evaluates every user's SINRs on the true channels with the RIS in `state`.
pub fn rate_report(
    realization: &ChannelRealization,
    state: &ReflectionState,
    precoders: &PrecoderSet,
    power: &PowerAllocation,
    scheme: Scheme,
) -> RateReport {
    let users = realization.num_users();
    let channels: Vec<DVector<C64>> = (0..users)
        .map(|k| effective_channel(realization, state, k))
        .collect();
    let common = channels
        .iter()
        .map(|g| common_sinr(g, precoders, power))
        .collect();
    let private = channels
        .iter()
        .enumerate()
        .map(|(k, g)| private_sinr(g, k, precoders, power))
        .collect();
    RateReport::from_sinrs(common, private, scheme, power.alpha_common)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_channels, Point, ScenarioGeometry};
    use crate::linalg::complex_gaussian_vector;
    use crate::rng::stream;
    use crate::transmitter::{allocate_power, InterferenceReference};
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn common_sinr_without_common_power_is_zero() {
        let mut rng = stream(1, &[]);
        let h: Vec<_> = (0..2).map(|_| complex_gaussian_vector(&mut rng, 3, 1.0)).collect();
        let precoders = PrecoderSet::design(&h).unwrap();
        let power = PowerAllocation::sdma(2, 10.0, 1.0);
        let g = h[0].map(|x| x.conj());
        assert_eq!(common_sinr(&g, &precoders, &power), 0.0);
    }

    #[test]
    fn single_user_common_sinr() {
        let mut rng = stream(2, &[]);
        let h = vec![complex_gaussian_vector(&mut rng, 4, 1.0)];
        let precoders = PrecoderSet::design(&h).unwrap();
        let power = PowerAllocation {
            total_power_mw: 5.0,
            alpha_common: 0.4,
            alpha_private: vec![0.6],
            noise_power_mw: 0.3,
        };
        let g = h[0].map(|x| x.conj());
        let hp = h[0].dotc(&precoders.private[0]).norm_sqr();
        let expected = h[0].norm_squared() * 5.0 * 0.4 / (hp * 5.0 * 0.6 + 0.3);
        assert!((common_sinr(&g, &precoders, &power) - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn common_sinr_without_private_power() {
        let mut rng = stream(3, &[]);
        let h: Vec<_> = (0..3).map(|_| complex_gaussian_vector(&mut rng, 5, 1.0)).collect();
        let precoders = PrecoderSet::design(&h).unwrap();
        let power = PowerAllocation {
            total_power_mw: 2.0,
            alpha_common: 1.0,
            alpha_private: vec![0.0; 3],
            noise_power_mw: 0.1,
        };
        let g = h[1].map(|x| x.conj());
        let expected = g.dot(&precoders.common).norm_sqr() * 2.0 / 0.1;
        assert!((common_sinr(&g, &precoders, &power) - expected).abs() < 1e-12 * expected);
        assert_eq!(private_sinr(&g, 1, &precoders, &power), 0.0);
    }

    #[test]
    fn zf_private_sinr_is_interference_free() {
        let mut rng = stream(4, &[]);
        let h: Vec<_> = (0..3).map(|_| complex_gaussian_vector(&mut rng, 6, 1.0)).collect();
        let precoders = PrecoderSet::design(&h).unwrap();
        let power = PowerAllocation::sdma(3, 7.0, 0.2);
        for k in 0..3 {
            let g = h[k].map(|x| x.conj());
            let expected = h[k].dotc(&precoders.private[k]).norm_sqr() * 7.0 / 3.0 / 0.2;
            assert!((private_sinr(&g, k, &precoders, &power) - expected).abs() < 1e-9 * expected);
        }
    }

    #[test]
    fn two_user_private_sinr_with_unit_interference() {
        // g · p_1 = √S, g · p_2 = 1.
        let s = 9.0f64;
        let precoders = PrecoderSet {
            common: DVector::from_vec(vec![c(1.0), c(0.0)]),
            private: vec![
                DVector::from_vec(vec![c(s.sqrt()), c(0.0)]),
                DVector::from_vec(vec![c(0.0), c(1.0)]),
            ],
        };
        let g = DVector::from_vec(vec![c(1.0), c(1.0)]);
        let power = PowerAllocation {
            total_power_mw: 4.0,
            alpha_common: 0.0,
            alpha_private: vec![0.5, 0.5],
            noise_power_mw: 1.0,
        };
        let expected = s * 4.0 * 0.5 / (1.0 * 4.0 * 0.5 + 1.0);
        assert!((private_sinr(&g, 0, &precoders, &power) - expected).abs() < 1e-12);
    }

    #[test]
    fn min_rule_and_sum() {
        let common = [2.0f64, 1.5, 3.0].map(|r| 2f64.powf(r) - 1.0).to_vec();
        let report = RateReport::from_sinrs(common.clone(), vec![1.0, 0.0, 3.0], Scheme::Rsma, 0.5);
        assert!((report.allocated_common_rate - 1.5).abs() < 1e-12);
        assert!((report.private_rates[0] - 1.0).abs() < 1e-15);
        assert!((report.sum_rate - (1.5 + 1.0 + 0.0 + 2.0)).abs() < 1e-12);

        let sdma = RateReport::from_sinrs(common, vec![0.0; 3], Scheme::Sdma, 0.0);
        assert_eq!(sdma.allocated_common_rate, 0.0);
        assert_eq!(sdma.sum_rate, 0.0);

        let zero = RateReport::from_sinrs(vec![0.0; 3], vec![0.0; 3], Scheme::Rsma, 0.0);
        assert_eq!(zero.sum_rate, 0.0);
    }

    fn scenario() -> ScenarioGeometry {
        ScenarioGeometry::new(
            Point::new(0.0, 0.0),
            Point::new(40.0, 5.0),
            vec![Point::new(30.0, 15.0), Point::new(50.0, 15.0), Point::new(55.0, 10.0)],
            2.5,
        )
        .unwrap()
    }

    #[test]
    fn perfect_csi_rsma_equals_sdma() {
        let truth = draw_channels(&scenario(), 10, 8, &mut stream(5, &[])).unwrap();
        let precoders = PrecoderSet::design(&truth.h).unwrap();
        for dbm in [0.0, 20.0, 40.0] {
            let p = crate::dbm_to_mw(dbm);
            let rsma = allocate_power(&truth.h, &precoders.private, p, 1e-5, Scheme::Rsma, InterferenceReference::default()).unwrap();
            let sdma = allocate_power(&truth.h, &precoders.private, p, 1e-5, Scheme::Sdma, InterferenceReference::default()).unwrap();
            let a = rate_report(&truth, &ReflectionState::Absorb, &precoders, &rsma, Scheme::Rsma);
            let b = rate_report(&truth, &ReflectionState::Absorb, &precoders, &sdma, Scheme::Sdma);
            assert_eq!(a.sum_rate, b.sum_rate);
        }
    }

    #[test]
    fn sdma_rate_saturates_under_leakage() {
        let truth = draw_channels(&scenario(), 10, 8, &mut stream(6, &[])).unwrap();
        let mut rng = stream(7, &[]);
        let h_hat: Vec<_> = truth
            .h
            .iter()
            .zip(&truth.gains.bs_user)
            .map(|(h, &pl)| h * c(0.95f64.sqrt()) + complex_gaussian_vector(&mut rng, 10, pl) * c(0.05f64.sqrt()))
            .collect();
        let precoders = PrecoderSet::design(&h_hat).unwrap();
        let noise = 1e-5;
        let rate = |p: f64| {
            let pa = PowerAllocation::sdma(3, p, noise);
            rate_report(&truth, &ReflectionState::Absorb, &precoders, &pa, Scheme::Sdma).sum_rate
        };
        let r6 = rate(1e6 * noise);
        let r7 = rate(1e7 * noise);
        assert!((r7 - r6).abs() <= 0.01 * r6, "{r6} vs {r7}");
    }

    proptest! {
        #[test]
        fn sinr_is_nondecreasing_in_power(seed in 0u64..200, lo in -20.0f64..40.0, step in 0.0f64..20.0) {
            let truth = draw_channels(&scenario(), 6, 4, &mut stream(seed, &[])).unwrap();
            let mut rng = stream(seed, &[1]);
            let h_hat: Vec<_> = truth.h.iter().map(|h| h + complex_gaussian_vector(&mut rng, 6, 1e-5)).collect();
            let precoders = PrecoderSet::design(&h_hat).unwrap();
            let state = crate::attacker::random_attack(4, &mut rng);
            let make = |dbm: f64| PowerAllocation {
                total_power_mw: crate::dbm_to_mw(dbm),
                alpha_common: 0.4,
                alpha_private: vec![0.2; 3],
                noise_power_mw: 1e-5,
            };
            let a = rate_report(&truth, &state, &precoders, &make(lo), Scheme::Rsma);
            let b = rate_report(&truth, &state, &precoders, &make(lo + step), Scheme::Rsma);
            for k in 0..3 {
                prop_assert!(b.common_sinr[k] >= a.common_sinr[k] * (1.0 - 1e-12));
                prop_assert!(b.private_sinr[k] >= a.private_sinr[k] * (1.0 - 1e-12));
            }
            prop_assert!(a.sum_rate >= 0.0);
            prop_assert!((a.sum_rate - a.allocated_common_rate - a.private_rate_sum()).abs() < 1e-12);
        }
    }
}
