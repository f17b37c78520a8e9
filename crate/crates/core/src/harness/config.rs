//! Experiment configuration, stored as TOML.
//!
//! ```toml
//! seed = 1
//! trials = 500
//!
//! [geometry]
//! bs = [0.0, 0.0]
//! ris = [40.0, 5.0]
//! users = [[30.0, 15.0], [50.0, 15.0], [55.0, 10.0]]
//! path_loss_exponent = 2.5
//!
//! [channel]
//! antennas = 10          # M
//! ris_elements = 200     # L
//! error_scaling = "path-loss"   # or "unit"
//!
//! [transmitter]
//! power_sweep_dbm = [0.0, 5.0, 10.0]
//! noise_dbm = -50.0
//! schemes = ["rsma", "sdma"]
//! interference_reference = "least-interfered"   # or "most-interfered"
//!
//! [csi.bs]
//! tau_bs_u = 0.0
//! tau_bs_ris = 0.0
//! tau_ris_u = 0.0
//!
//! [csi.attacker]
//! tau_bs_u = 0.0
//! tau_bs_ris = 0.0
//! tau_ris_u = 0.0
//!
//! [attacker]
//! attacks = ["none", "random", "aligned", "mitigation"]
//! weights = [0.3333333333333333, 0.3333333333333333, 0.3333333333333333]
//! iterations = 3000
//! step_scale = 0.99
//!
//! [sweep]                  # only read by `sweep-tau`
//! bs_tau = [0.0, 0.3]
//! attacker_tau = [0.3, 0.6, 0.9]
//! ```
//!
//! The number of users `K` is the length of `geometry.users`. `weights` may be
//! omitted for uniform weights.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::attacker::{AttackKind, AttackSpec};
use crate::channel::{CsiErrorSpec, ErrorScaling, Point, ScenarioGeometry};
use crate::transmitter::{InterferenceReference, Scheme};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub bs: [f64; 2],
    pub ris: [f64; 2],
    pub users: Vec<[f64; 2]>,
    pub path_loss_exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub antennas: usize,
    pub ris_elements: usize,
    #[serde(default)]
    pub error_scaling: ErrorScaling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmitterConfig {
    pub power_sweep_dbm: Vec<f64>,
    pub noise_dbm: f64,
    pub schemes: Vec<Scheme>,
    #[serde(default)]
    pub interference_reference: InterferenceReference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsiConfig {
    pub bs: CsiErrorSpec,
    pub attacker: CsiErrorSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackerConfig {
    pub attacks: Vec<AttackKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    pub iterations: usize,
    pub step_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub bs_tau: Vec<f64>,
    #[serde(default)]
    pub attacker_tau: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    pub geometry: GeometryConfig,
    pub channel: ChannelConfig,
    pub transmitter: TransmitterConfig,
    pub csi: CsiConfig,
    pub attacker: AttackerConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

const HEADER: &str = "\
# Malicious-RIS attack experiment.
# K (users) = length of geometry.users, M = channel.antennas, L = channel.ris_elements.
# Powers are in dBm; tau values are CSI error levels in [0, 1].
";

impl ExperimentConfig {
    /// The reference scenario: three users, ten antennas, a 200-element RIS,
    /// perfect CSI everywhere and all four attacks.
    pub fn reference() -> Self {
        ExperimentConfig {
            seed: 1,
            trials: 500,
            geometry: GeometryConfig {
                bs: [0.0, 0.0],
                ris: [40.0, 5.0],
                users: vec![[30.0, 15.0], [50.0, 15.0], [55.0, 10.0]],
                path_loss_exponent: 2.5,
            },
            channel: ChannelConfig {
                antennas: 10,
                ris_elements: 200,
                error_scaling: ErrorScaling::PathLoss,
            },
            transmitter: TransmitterConfig {
                power_sweep_dbm: (0..=8).map(|i| 5.0 * i as f64).collect(),
                noise_dbm: -50.0,
                schemes: Scheme::ALL.to_vec(),
                interference_reference: InterferenceReference::LeastInterfered,
            },
            csi: CsiConfig {
                bs: CsiErrorSpec::PERFECT,
                attacker: CsiErrorSpec::PERFECT,
            },
            attacker: AttackerConfig {
                attacks: AttackKind::ALL.to_vec(),
                weights: Some(vec![1.0 / 3.0; 3]),
                iterations: 3000,
                step_scale: 0.99,
            },
            sweep: SweepConfig {
                bs_tau: vec![0.0, 0.3],
                attacker_tau: vec![0.3, 0.6, 0.9],
            },
        }
    }

    /// Parses and validates a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        let body = toml::to_string(self).expect("experiment config serializes to TOML");
        format!("{HEADER}\n{body}")
    }

    pub fn num_users(&self) -> usize {
        self.geometry.users.len()
    }

    pub fn geometry(&self) -> Result<ScenarioGeometry> {
        let g = &self.geometry;
        ScenarioGeometry::new(
            Point::new(g.bs[0], g.bs[1]),
            Point::new(g.ris[0], g.ris[1]),
            g.users.iter().map(|u| Point::new(u[0], u[1])).collect(),
            g.path_loss_exponent,
        )
    }

    pub fn weights(&self) -> Vec<f64> {
        self.attacker
            .weights
            .clone()
            .unwrap_or_else(|| vec![1.0 / self.num_users() as f64; self.num_users()])
    }

    pub fn attack_spec(&self, kind: AttackKind) -> AttackSpec {
        AttackSpec {
            kind,
            weights: self.weights(),
            iterations: self.attacker.iterations,
            step_scale: self.attacker.step_scale,
        }
    }

    /// Schemes in canonical order, without duplicates.
    pub fn schemes(&self) -> Vec<Scheme> {
        let mut s = self.transmitter.schemes.clone();
        s.sort();
        s.dedup();
        s
    }

    /// Attacks in canonical order, without duplicates.
    pub fn attacks(&self) -> Vec<AttackKind> {
        let mut a = self.attacker.attacks.clone();
        a.sort();
        a.dedup();
        a
    }

    /// Checks every field, naming the offending one on failure.
    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: String| Err(Error::Config(format!("field `{name}`: {msg}")));
        if self.trials < 1 {
            return field("trials", "must be at least 1".into());
        }
        if let Err(e) = self.geometry() {
            return field("geometry", e.to_string());
        }
        let k = self.num_users();
        if self.channel.antennas < k {
            return field(
                "channel.antennas",
                format!("{} antennas cannot serve {k} users", self.channel.antennas),
            );
        }
        if self.channel.ris_elements < 1 {
            return field("channel.ris_elements", "must be at least 1".into());
        }
        if self.transmitter.power_sweep_dbm.is_empty() {
            return field("transmitter.power_sweep_dbm", "must not be empty".into());
        }
        if let Some(p) = self.transmitter.power_sweep_dbm.iter().find(|p| !p.is_finite()) {
            return field("transmitter.power_sweep_dbm", format!("{p} is not finite"));
        }
        if !self.transmitter.noise_dbm.is_finite() {
            return field("transmitter.noise_dbm", "must be finite".into());
        }
        if self.transmitter.schemes.is_empty() {
            return field("transmitter.schemes", "must not be empty".into());
        }
        if let Err(e) = self.csi.bs.validate() {
            return field("csi.bs", e.to_string());
        }
        if let Err(e) = self.csi.attacker.validate() {
            return field("csi.attacker", e.to_string());
        }
        if self.attacker.attacks.is_empty() {
            return field("attacker.attacks", "must not be empty".into());
        }
        if self.weights().len() != k {
            return field(
                "attacker.weights",
                format!("{} weights for {k} users", self.weights().len()),
            );
        }
        if let Err(e) = self.attack_spec(AttackKind::Aligned).validate() {
            return field("attacker", e.to_string());
        }
        for (name, list) in [("sweep.bs_tau", &self.sweep.bs_tau), ("sweep.attacker_tau", &self.sweep.attacker_tau)] {
            if let Some(t) = list.iter().find(|t| !(0.0..=1.0).contains(*t)) {
                return field(name, format!("{t} is outside [0, 1]"));
            }
        }
        Ok(())
    }
}
