//! Monte-Carlo trials and their aggregation.
//!
//! Every random quantity of trial `t` comes from a stream keyed by
//! `(seed, t, redraw)`, so channels are shared by every power level, scheme,
//! attack and CSI error level, and results do not depend on thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::attacker::{aligned_attack, mitigation_attack, random_attack, AttackKind, ReflectionState};
use crate::channel::{cascade, corrupt_csi, draw_channels, ChannelRealization, CsiErrorSpec, ScenarioGeometry};
use crate::metrics::{rate_report, RateReport};
use crate::rng::{derive_seed, stream, Stream};
use crate::transmitter::{allocate_power, PrecoderSet, Scheme};
use crate::{dbm_to_mw, Error, Result};

/// Redraws allowed for a single trial before giving up on it.
const MAX_REDRAWS_PER_TRIAL: usize = 64;

/// Channels and precoders of one trial, after any redraws.
#[derive(Debug, Clone)]
pub struct TrialContext {
    pub trial_index: usize,
    pub redraws: usize,
    pub seed: u64,
    pub truth: ChannelRealization,
    pub precoders: PrecoderSet,
}

/// Draws the channels of trial `trial_index` and designs the precoders from
/// the base station's estimate. A singular or degenerate estimate triggers a
/// redraw with the next sub-seed.
pub fn prepare_trial(
    config: &ExperimentConfig,
    geometry: &ScenarioGeometry,
    trial_index: usize,
) -> Result<TrialContext> {
    for redraw in 0..=MAX_REDRAWS_PER_TRIAL {
        let seed = derive_seed(config.seed, &[trial_index as u64, redraw as u64]);
        let truth = draw_channels(
            geometry,
            config.channel.antennas,
            config.channel.ris_elements,
            &mut stream(seed, &[Stream::Fading as u64]),
        )?;
        let estimate = corrupt_csi(
            &truth,
            &config.csi.bs,
            config.channel.error_scaling,
            &mut stream(seed, &[Stream::BsEstimate as u64]),
        )?;
        match PrecoderSet::design(&estimate.h_hat) {
            Ok(precoders) => {
                return Ok(TrialContext { trial_index, redraws: redraw, seed, truth, precoders });
            }
            Err(e @ (Error::Singular { .. } | Error::DegenerateSum)) => {
                log::warn!("trial {trial_index}: {e}; redrawing");
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::RedrawBudget { redraws: MAX_REDRAWS_PER_TRIAL + 1, trials: 1 })
}

/// Reflection state chosen by `attack` in this trial, given the attacker's
/// CSI error levels.
pub fn attack_state(
    config: &ExperimentConfig,
    context: &TrialContext,
    attack: AttackKind,
    attacker_csi: &CsiErrorSpec,
) -> Result<ReflectionState> {
    let elements = context.truth.num_elements();
    match attack {
        AttackKind::None => Ok(ReflectionState::Absorb),
        AttackKind::Random => Ok(random_attack(
            elements,
            &mut stream(context.seed, &[Stream::RandomPhases as u64]),
        )),
        AttackKind::Aligned | AttackKind::Mitigation => {
            let estimate = corrupt_csi(
                &context.truth,
                attacker_csi,
                config.channel.error_scaling,
                &mut stream(context.seed, &[Stream::AttackerEstimate as u64, attack.id()]),
            )?;
            let cascades = cascade(&estimate)?;
            let spec = config.attack_spec(attack);
            let solution = if attack == AttackKind::Aligned {
                aligned_attack(&cascades, &spec)?
            } else {
                mitigation_attack(&cascades, &estimate.h_hat, &spec)?
            };
            Ok(solution.state)
        }
    }
}

/// Rates of one transmission at `power_dbm` with the RIS in `state`.
pub fn evaluate(
    config: &ExperimentConfig,
    context: &TrialContext,
    state: &ReflectionState,
    power_dbm: f64,
    scheme: Scheme,
) -> Result<RateReport> {
    let power = allocate_power(
        &context.truth.h,
        &context.precoders.private,
        dbm_to_mw(power_dbm),
        dbm_to_mw(config.transmitter.noise_dbm),
        scheme,
        config.transmitter.interference_reference,
    )?;
    Ok(rate_report(&context.truth, state, &context.precoders, &power, scheme))
}

/// One trial of one configuration, computed from scratch.
pub fn run_trial(
    config: &ExperimentConfig,
    power_dbm: f64,
    scheme: Scheme,
    attack: AttackKind,
    trial_index: usize,
) -> Result<RateReport> {
    let context = prepare_trial(config, &config.geometry()?, trial_index)?;
    let state = attack_state(config, &context, attack, &config.csi.attacker)?;
    evaluate(config, &context, &state, power_dbm, scheme)
}

/// Result of one (power, scheme, attack) combination within a trial.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub power_dbm: f64,
    pub scheme: Scheme,
    pub attack: AttackKind,
    pub report: RateReport,
}

/// Every combination of a trial, ordered by power, scheme, then attack.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial_index: usize,
    pub redraws: usize,
    pub cells: Vec<Cell>,
}

/// Runs every combination of one trial. Each attack is optimized once and
/// reused across powers and schemes; the result equals [`run_trial`] cell by
/// cell.
pub fn run_trial_grid(
    config: &ExperimentConfig,
    geometry: &ScenarioGeometry,
    trial_index: usize,
) -> Result<TrialOutcome> {
    let context = prepare_trial(config, geometry, trial_index)?;
    let schemes = config.schemes();
    let attacks = config.attacks();
    let states = attacks
        .iter()
        .map(|&a| attack_state(config, &context, a, &config.csi.attacker))
        .collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::with_capacity(config.transmitter.power_sweep_dbm.len() * schemes.len() * attacks.len());
    for &power_dbm in &config.transmitter.power_sweep_dbm {
        for &scheme in &schemes {
            for (&attack, state) in attacks.iter().zip(&states) {
                let report = evaluate(config, &context, state, power_dbm, scheme)?;
                cells.push(Cell { power_dbm, scheme, attack, report });
            }
        }
    }
    Ok(TrialOutcome { trial_index, redraws: context.redraws, cells })
}

/// Aggregate over trials of one combination; one CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub power_dbm: f64,
    pub scheme: Scheme,
    pub attack: AttackKind,
    pub tau_bs: f64,
    pub tau_attacker: f64,
    pub mean_sum_rate: f64,
    pub std_sum_rate: f64,
    pub mean_common_rate: f64,
    pub mean_private_rate_sum: f64,
    pub mean_alpha_common: f64,
    pub trials: usize,
}

/// Per-trial values of one combination; one row of the trial dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub power_dbm: f64,
    pub scheme: Scheme,
    pub attack: AttackKind,
    pub tau_bs: f64,
    pub tau_attacker: f64,
    pub sum_rate: f64,
    pub common_rate: f64,
    pub private_rate_sum: f64,
    pub alpha_common: f64,
    pub redraws: usize,
}

/// Aggregated records plus the per-trial outcomes they were computed from.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<ResultRecord>,
    pub outcomes: Vec<TrialOutcome>,
    pub tau_bs: f64,
    pub tau_attacker: f64,
}

impl ExperimentOutput {
    pub fn trial_records(&self) -> Vec<TrialRecord> {
        self.outcomes
            .iter()
            .flat_map(|o| {
                o.cells.iter().map(move |c| TrialRecord {
                    trial: o.trial_index,
                    power_dbm: c.power_dbm,
                    scheme: c.scheme,
                    attack: c.attack,
                    tau_bs: self.tau_bs,
                    tau_attacker: self.tau_attacker,
                    sum_rate: c.report.sum_rate,
                    common_rate: c.report.allocated_common_rate,
                    private_rate_sum: c.report.private_rate_sum(),
                    alpha_common: c.report.alpha_common,
                    redraws: o.redraws,
                })
            })
            .collect()
    }
}

/// Sample mean and standard deviation (`n - 1` denominator; zero for a
/// single sample).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Runs `config.trials` trials in parallel on the current rayon pool and
/// aggregates them in trial order.
pub fn run_experiment_detailed(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let geometry = config.geometry()?;
    let outcomes = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial_grid(config, &geometry, t))
        .collect::<Result<Vec<_>>>()?;
    let redraws: usize = outcomes.iter().map(|o| o.redraws).sum();
    if redraws * 100 > config.trials {
        return Err(Error::RedrawBudget { redraws, trials: config.trials });
    }
    let tau_bs = config.csi.bs.tau_bs_u;
    let tau_attacker = config.csi.attacker.worst();
    let records = aggregate(&outcomes, tau_bs, tau_attacker);
    Ok(ExperimentOutput { records, outcomes, tau_bs, tau_attacker })
}

/// Aggregated records of `config`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    Ok(run_experiment_detailed(config)?.records)
}

fn aggregate(outcomes: &[TrialOutcome], tau_bs: f64, tau_attacker: f64) -> Vec<ResultRecord> {
    let Some(first) = outcomes.first() else {
        return Vec::new();
    };
    (0..first.cells.len())
        .map(|i| {
            let cell = &first.cells[i];
            let column = |f: &dyn Fn(&RateReport) -> f64| -> Vec<f64> {
                outcomes.iter().map(|o| f(&o.cells[i].report)).collect()
            };
            let (mean_sum_rate, std_sum_rate) = mean_std(&column(&|r| r.sum_rate));
            ResultRecord {
                power_dbm: cell.power_dbm,
                scheme: cell.scheme,
                attack: cell.attack,
                tau_bs,
                tau_attacker,
                mean_sum_rate,
                std_sum_rate,
                mean_common_rate: mean_std(&column(&|r| r.allocated_common_rate)).0,
                mean_private_rate_sum: mean_std(&column(&|r| r.private_rate_sum())).0,
                mean_alpha_common: mean_std(&column(&|r| r.alpha_common)).0,
                trials: outcomes.len(),
            }
        })
        .collect()
}

/// Copy of `config` with uniform CSI error levels at the base station and
/// the attacker.
pub fn with_tau(config: &ExperimentConfig, tau_bs: f64, tau_attacker: f64) -> ExperimentConfig {
    let mut c = config.clone();
    c.csi.bs = CsiErrorSpec::uniform(tau_bs);
    c.csi.attacker = CsiErrorSpec::uniform(tau_attacker);
    c
}

/// Runs the grid `sweep.bs_tau x sweep.attacker_tau`. Every grid point uses
/// the same channel draws.
pub fn run_tau_sweep_detailed(config: &ExperimentConfig) -> Result<Vec<ExperimentOutput>> {
    if config.sweep.bs_tau.is_empty() || config.sweep.attacker_tau.is_empty() {
        return Err(Error::Config("field `sweep`: bs_tau and attacker_tau must not be empty".into()));
    }
    let mut outputs = Vec::new();
    for &tau_bs in &config.sweep.bs_tau {
        for &tau_attacker in &config.sweep.attacker_tau {
            log::info!("sweep point tau_bs = {tau_bs}, tau_attacker = {tau_attacker}");
            outputs.push(run_experiment_detailed(&with_tau(config, tau_bs, tau_attacker))?);
        }
    }
    Ok(outputs)
}

/// Aggregated records of the sweep, grid point by grid point.
pub fn run_tau_sweep(config: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    Ok(run_tau_sweep_detailed(config)?
        .into_iter()
        .flat_map(|o| o.records)
        .collect())
}
