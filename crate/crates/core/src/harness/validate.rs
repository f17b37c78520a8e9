//! Self-check suite run by the `validate` subcommand.

use nalgebra::{DMatrix, DVector};

use super::config::ExperimentConfig;
use super::experiment::{run_experiment, run_experiment_detailed};
use crate::attacker::{aligned_attack_traced, mitigation_attack_traced, random_attack, AttackKind, AttackSpec};
use crate::channel::{cascade, corrupt_csi, draw_channels, ChannelEstimate, CsiErrorSpec, ErrorScaling};
use crate::linalg::{complex_gaussian_vector, max_modulus_deviation};
use crate::rng::stream;
use crate::transmitter::{allocate_power, zf_private_precoders, InterferenceReference, Scheme};
use crate::{dbm_to_mw, Result, C64};

/// Outcome of one invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Check { name, passed, detail }
    }
}

const INSTANCES: u64 = 50;

fn small_config(seed: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::reference();
    c.seed = seed;
    c.trials = 6;
    c.channel.ris_elements = 32;
    c.attacker.iterations = 200;
    c.transmitter.power_sweep_dbm = vec![0.0, 20.0, 40.0];
    c
}

fn cascade_identity(config: &ExperimentConfig) -> Result<Check> {
    let geometry = config.geometry()?;
    let mut worst: f64 = 0.0;
    for i in 0..INSTANCES {
        let mut rng = stream(config.seed, &[101, i]);
        let truth = draw_channels(&geometry, config.channel.antennas, config.channel.ris_elements, &mut rng)?;
        let theta = random_attack(truth.num_elements(), &mut rng);
        let theta = theta.theta().expect("random attack reflects");
        let k = cascade(&ChannelEstimate::exact(&truth))?;
        for (u, f) in truth.f.iter().enumerate() {
            let direct: DVector<C64> = (f.adjoint() * DMatrix::from_diagonal(theta) * &truth.g).transpose();
            let via = &k.per_user[u] * theta;
            let err = (direct - &via).norm() / via.norm().max(f64::MIN_POSITIVE);
            worst = worst.max(err);
        }
    }
    Ok(Check::new("cascade identity", worst <= 1e-10, format!("max relative error {worst:.2e}")))
}

fn zero_forcing(config: &ExperimentConfig) -> Result<Check> {
    let k = config.num_users();
    let m = config.channel.antennas;
    let mut worst: f64 = 0.0;
    for i in 0..INSTANCES {
        let mut rng = stream(config.seed, &[102, i]);
        let h: Vec<DVector<C64>> = (0..k).map(|_| complex_gaussian_vector(&mut rng, m, 1.0)).collect();
        let p = zf_private_precoders(&h)?;
        for (a, ha) in h.iter().enumerate() {
            for (b, pb) in p.iter().enumerate() {
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((ha.dotc(pb) - C64::new(target, 0.0)).norm());
            }
        }
    }
    Ok(Check::new("zero-forcing orthogonality", worst <= 1e-9, format!("max deviation {worst:.2e}")))
}

fn exact_estimate(config: &ExperimentConfig) -> Result<Check> {
    let geometry = config.geometry()?;
    let mut identical = true;
    for i in 0..INSTANCES {
        let truth = draw_channels(&geometry, 4, 8, &mut stream(config.seed, &[103, i]))?;
        for scaling in [ErrorScaling::PathLoss, ErrorScaling::Unit] {
            let est = corrupt_csi(&truth, &CsiErrorSpec::PERFECT, scaling, &mut stream(config.seed, &[104, i]))?;
            identical &= est == ChannelEstimate::exact(&truth);
        }
    }
    Ok(Check::new("error-free estimate equals truth", identical, String::new()))
}

fn power_budget(config: &ExperimentConfig) -> Result<Check> {
    let k = config.num_users();
    let noise = dbm_to_mw(config.transmitter.noise_dbm);
    let mut worst: f64 = 0.0;
    for i in 0..INSTANCES {
        let mut rng = stream(config.seed, &[105, i]);
        let h: Vec<DVector<C64>> = (0..k).map(|_| complex_gaussian_vector(&mut rng, config.channel.antennas, 1e-4)).collect();
        let h_hat: Vec<DVector<C64>> = h.iter().map(|x| x + complex_gaussian_vector(&mut rng, x.len(), 1e-5)).collect();
        let p = zf_private_precoders(&h_hat)?;
        for dbm in [0.0, 20.0, 40.0] {
            for reference in [InterferenceReference::LeastInterfered, InterferenceReference::MostInterfered] {
                for scheme in Scheme::ALL {
                    let a = allocate_power(&h, &p, dbm_to_mw(dbm), noise, scheme, reference)?;
                    let off = (a.budget() - 1.0).abs();
                    let negative = a.alpha_common < 0.0 || a.alpha_private.iter().any(|x| *x < 0.0);
                    worst = worst.max(if negative { f64::INFINITY } else { off });
                }
            }
        }
    }
    Ok(Check::new("power fractions sum to one", worst <= 1e-12, format!("max deviation {worst:.2e}")))
}

fn attack_iterates(config: &ExperimentConfig) -> Result<Check> {
    let geometry = config.geometry()?;
    let mut modulus: f64 = 0.0;
    let mut violations = 0usize;
    for i in 0..10 {
        let truth = draw_channels(&geometry, config.channel.antennas, config.channel.ris_elements, &mut stream(config.seed, &[106, i]))?;
        let est = ChannelEstimate::exact(&truth);
        let k = cascade(&est)?;
        let mut track = |last: &mut Option<f64>, obj: f64, ascending: bool| {
            if let Some(prev) = *last {
                let tol = 1e-9 * prev.abs().max(obj.abs());
                if (ascending && obj < prev - tol) || (!ascending && obj > prev + tol) {
                    violations += 1;
                }
            }
            *last = Some(obj);
        };
        let mut last = None;
        let aligned = aligned_attack_traced(&k, &config.attack_spec(AttackKind::Aligned), |_, obj| {
            track(&mut last, obj, true)
        })?;
        let mut last = None;
        let spec: AttackSpec = config.attack_spec(AttackKind::Mitigation);
        let mitigation = mitigation_attack_traced(&k, &est.h_hat, &spec, |_, obj| track(&mut last, obj, false))?;
        for state in [aligned.state, mitigation.state] {
            modulus = modulus.max(max_modulus_deviation(state.theta().expect("optimized attacks reflect")));
        }
    }
    Ok(Check::new(
        "attack iterates are unit-modulus and monotone",
        modulus <= 1e-12 && violations == 0,
        format!("max modulus deviation {modulus:.2e}, {violations} non-monotone steps"),
    ))
}

fn rate_accounting(config: &ExperimentConfig) -> Result<Check> {
    let output = run_experiment_detailed(config)?;
    let mut worst: f64 = 0.0;
    for outcome in &output.outcomes {
        for cell in &outcome.cells {
            let r = &cell.report;
            worst = worst.max((r.sum_rate - r.allocated_common_rate - r.private_rate_sum()).abs());
            if cell.scheme == Scheme::Sdma && r.allocated_common_rate != 0.0 {
                worst = f64::INFINITY;
            }
        }
    }
    for r in &output.records {
        worst = worst.max((r.mean_sum_rate - r.mean_common_rate - r.mean_private_rate_sum).abs());
    }
    Ok(Check::new("sum rate equals common plus private", worst <= 1e-9, format!("max deviation {worst:.2e}")))
}

fn perfect_csi_equivalence(config: &ExperimentConfig) -> Result<Check> {
    let records = run_experiment(config)?;
    let mut worst: f64 = 0.0;
    for r in records.iter().filter(|r| r.scheme == Scheme::Rsma) {
        let sdma = records
            .iter()
            .find(|s| s.scheme == Scheme::Sdma && s.attack == r.attack && s.power_dbm == r.power_dbm)
            .expect("both schemes are configured");
        worst = worst.max((r.mean_sum_rate - sdma.mean_sum_rate).abs());
    }
    Ok(Check::new(
        "perfect CSI: RSMA equals SDMA",
        worst <= 1e-9,
        format!("max gap {worst:.2e}"),
    ))
}

fn reproducibility(config: &ExperimentConfig) -> Result<Check> {
    let a = run_experiment(config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| crate::Error::Numeric(e.to_string()))?;
    let b = pool.install(|| run_experiment(config))?;
    Ok(Check::new("results independent of thread count", a == b, String::new()))
}

/// Runs every check under `seed`.
pub fn run_checks(seed: u64) -> Vec<Check> {
    let config = small_config(seed);
    let mut with_csi_error = config.clone();
    with_csi_error.csi.bs = CsiErrorSpec::uniform(0.3);
    with_csi_error.csi.attacker = CsiErrorSpec::uniform(0.6);
    let checks: [(&'static str, Box<dyn Fn() -> Result<Check>>); 8] = [
        ("cascade identity", Box::new(|| cascade_identity(&config))),
        ("zero-forcing orthogonality", Box::new(|| zero_forcing(&config))),
        ("error-free estimate equals truth", Box::new(|| exact_estimate(&config))),
        ("power fractions sum to one", Box::new(|| power_budget(&config))),
        ("attack iterates are unit-modulus and monotone", Box::new(|| attack_iterates(&config))),
        ("sum rate equals common plus private", Box::new(|| rate_accounting(&with_csi_error))),
        ("perfect CSI: RSMA equals SDMA", Box::new(|| perfect_csi_equivalence(&config))),
        ("results independent of thread count", Box::new(|| reproducibility(&with_csi_error))),
    ];
    checks
        .iter()
        .map(|(name, check)| check().unwrap_or_else(|e| Check::new(name, false, format!("error: {e}"))))
        .collect()
}
