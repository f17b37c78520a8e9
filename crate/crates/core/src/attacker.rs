//! Malicious RIS reflection strategies.
//!
//! * Random interference: i.i.d. uniform phases, no CSI needed.
//! * Aligned interference: maximizes the weighted reflected power
//!   `Σ ω_k ||K_k θ||²` over unit-modulus `θ`.
//! * Mitigation: minimizes `Σ ω_k ||K_k θ + conj(ĥ_k)||²`, steering the
//!   reflected paths against the direct ones.
//!
//! Both optimized attacks stack the weighted cascades into
//! `K̄ = [√ω_1 K_1; …; √ω_K K_K]` (`KM x L`) and run a projected gradient
//! iteration with step `δ / λ_max(K̄^H K̄)`, projecting every iterate back onto
//! the unit circle element-wise.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{CascadeMatrix, ChannelRealization};
use crate::linalg::{
    all_finite_matrix, all_finite_vector, hermitian_condition_number, largest_gram_eigenvalue,
    project_unit_modulus_into, PowerIteration,
};
use crate::transmitter::MAX_GRAM_CONDITION;
use crate::{Error, Result, C64};

/// What the RIS does during data transmission.
#[derive(Debug, Clone, PartialEq)]
pub enum ReflectionState {
    /// The RIS contributes nothing to any channel.
    Absorb,
    /// Unit-modulus reflection coefficients, one per element.
    Reflect(DVector<C64>),
}

impl ReflectionState {
    pub fn theta(&self) -> Option<&DVector<C64>> {
        match self {
            ReflectionState::Absorb => None,
            ReflectionState::Reflect(theta) => Some(theta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackKind {
    None,
    Random,
    Aligned,
    Mitigation,
}

impl AttackKind {
    pub const ALL: [AttackKind; 4] = [
        AttackKind::None,
        AttackKind::Random,
        AttackKind::Aligned,
        AttackKind::Mitigation,
    ];

    /// Stable numeric id, used for stream derivation and ordering.
    pub fn id(self) -> u64 {
        match self {
            AttackKind::None => 0,
            AttackKind::Random => 1,
            AttackKind::Aligned => 2,
            AttackKind::Mitigation => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AttackKind::None => "none",
            AttackKind::Random => "random",
            AttackKind::Aligned => "aligned",
            AttackKind::Mitigation => "mitigation",
        }
    }

    /// Whether the attacker needs channel estimates.
    pub fn needs_csi(self) -> bool {
        matches!(self, AttackKind::Aligned | AttackKind::Mitigation)
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AttackKind::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown attack `{s}`")))
    }
}

/// Parameters of one attack.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackSpec {
    pub kind: AttackKind,
    /// Per-user weights `ω_k`, non-negative and summing to one.
    pub weights: Vec<f64>,
    /// Number of iterates `I`; the algorithms perform `I - 1` updates.
    pub iterations: usize,
    /// Step scale `δ` in `(0, 1)`.
    pub step_scale: f64,
}

impl AttackSpec {
    /// Uniform weights, `I = 3000`, `δ = 0.99`.
    pub fn with_defaults(kind: AttackKind, users: usize) -> Self {
        AttackSpec {
            kind,
            weights: vec![1.0 / users as f64; users],
            iterations: 3000,
            step_scale: 0.99,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.is_empty() {
            return Err(Error::Domain("attack weights are empty".into()));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Domain(format!("attack weights must be non-negative: {:?}", self.weights)));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("attack weights sum to {sum}, expected 1")));
        }
        if !(self.step_scale > 0.0 && self.step_scale < 1.0) {
            return Err(Error::Domain(format!("step scale {} is outside (0, 1)", self.step_scale)));
        }
        if self.iterations < 1 {
            return Err(Error::Domain("iterations must be at least 1".into()));
        }
        Ok(())
    }

    fn expect_kind(&self, kind: AttackKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::Domain(format!(
                "attack spec is for `{}`, expected `{kind}`",
                self.kind
            )));
        }
        self.validate()
    }
}

/// Reflection state chosen by an optimized attack, with its objective before
/// and after the iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackSolution {
    pub state: ReflectionState,
    pub initial_objective: f64,
    pub objective: f64,
}

/// Uniform i.i.d. phases on `[0, 2π)`.
pub fn random_attack<R: Rng + ?Sized>(elements: usize, rng: &mut R) -> ReflectionState {
    ReflectionState::Reflect(DVector::from_fn(elements, |_, _| {
        let phase: f64 = rng.random::<f64>() * TAU;
        C64::new(phase.cos(), phase.sin())
    }))
}

/// `K̄ = [√ω_1 K_1; …; √ω_K K_K]`.
pub fn stack_cascades(cascades: &CascadeMatrix, weights: &[f64]) -> Result<DMatrix<C64>> {
    if cascades.num_users() != weights.len() {
        return Err(Error::Dimension(format!(
            "{} cascades for {} weights",
            cascades.num_users(),
            weights.len()
        )));
    }
    let (m, l) = cascades.block_shape();
    if cascades.per_user.iter().any(|k| k.shape() != (m, l)) {
        return Err(Error::Dimension("cascade blocks differ in shape".into()));
    }
    let mut stacked = DMatrix::zeros(m * weights.len(), l);
    for (k, (block, w)) in cascades.per_user.iter().zip(weights).enumerate() {
        stacked
            .rows_mut(k * m, m)
            .copy_from(&(block * C64::from(w.sqrt())));
    }
    if !all_finite_matrix(&stacked) {
        return Err(Error::Numeric("non-finite entry in cascade matrices".into()));
    }
    Ok(stacked)
}

/// `h̄ = [√ω_1 conj(ĥ_1); …; √ω_K conj(ĥ_K)]`.
pub fn stack_direct(h_hat: &[DVector<C64>], weights: &[f64]) -> Result<DVector<C64>> {
    if h_hat.len() != weights.len() {
        return Err(Error::Dimension(format!(
            "{} direct channels for {} weights",
            h_hat.len(),
            weights.len()
        )));
    }
    let parts: Vec<C64> = h_hat
        .iter()
        .zip(weights)
        .flat_map(|(h, w)| h.iter().map(move |x| x.conj() * w.sqrt()))
        .collect();
    let stacked = DVector::from_vec(parts);
    if !all_finite_vector(&stacked) {
        return Err(Error::Numeric("non-finite entry in direct channel estimates".into()));
    }
    Ok(stacked)
}

/// `Σ ω_k ||K_k θ||²`.
pub fn aligned_objective(cascades: &CascadeMatrix, weights: &[f64], theta: &DVector<C64>) -> f64 {
    cascades
        .per_user
        .iter()
        .zip(weights)
        .map(|(k, w)| w * (k * theta).norm_squared())
        .sum()
}

/// `Σ ω_k ||K_k θ + conj(ĥ_k)||²`.
pub fn mitigation_objective(
    cascades: &CascadeMatrix,
    h_hat: &[DVector<C64>],
    weights: &[f64],
    theta: &DVector<C64>,
) -> f64 {
    cascades
        .per_user
        .iter()
        .zip(h_hat)
        .zip(weights)
        .map(|((k, h), w)| w * (k * theta + h.map(|x| x.conj())).norm_squared())
        .sum()
}

/// Direction of a projected gradient step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    Ascent,
    Descent,
}

/// Projected gradient on `||K̄θ + offset||²` (offset = 0 for the ascent).
///
/// Runs `iterations - 1` updates from `init` and calls `observe` with the
/// objective of every iterate, starting with `init`.
fn projected_gradient(
    kbar: &DMatrix<C64>,
    offset: Option<&DVector<C64>>,
    init: DVector<C64>,
    step_scale: f64,
    iterations: usize,
    direction: Direction,
    mut observe: impl FnMut(&DVector<C64>, f64),
) -> Result<DVector<C64>> {
    let lambda_max = largest_gram_eigenvalue(kbar, PowerIteration::default())?;
    let kbar_h = kbar.adjoint();
    let mut theta = init;
    let mut residual = DVector::zeros(kbar.nrows());
    let mut gradient = DVector::zeros(kbar.ncols());
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);

    let evaluate = |theta: &DVector<C64>, residual: &mut DVector<C64>| {
        residual.gemv(one, kbar, theta, zero);
        if let Some(h) = offset {
            *residual += h;
        }
        residual.norm_squared()
    };

    let mut objective = evaluate(&theta, &mut residual);
    observe(&theta, objective);
    // A vanishing cascade leaves the objective independent of θ.
    if !(lambda_max > 0.0) {
        for _ in 1..iterations {
            observe(&theta, objective);
        }
        return Ok(theta);
    }
    let step = match direction {
        Direction::Ascent => step_scale / lambda_max,
        Direction::Descent => -step_scale / lambda_max,
    };
    for _ in 1..iterations {
        gradient.gemv(one, &kbar_h, &residual, zero);
        let candidate = &theta + &gradient * C64::from(step);
        project_unit_modulus_into(&candidate, &mut theta);
        objective = evaluate(&theta, &mut residual);
        if !objective.is_finite() {
            return Err(Error::Numeric("objective diverged during projected gradient".into()));
        }
        observe(&theta, objective);
    }
    Ok(theta)
}

/// Aligned interference attack; see [`aligned_attack_traced`].
pub fn aligned_attack(cascades: &CascadeMatrix, spec: &AttackSpec) -> Result<AttackSolution> {
    aligned_attack_traced(cascades, spec, |_, _| {})
}

/// Aligned interference attack, reporting every iterate and its objective to
/// `observe`.
///
/// Starts from the all-ones reflection and ascends `||K̄θ||²`.
pub fn aligned_attack_traced(
    cascades: &CascadeMatrix,
    spec: &AttackSpec,
    mut observe: impl FnMut(&DVector<C64>, f64),
) -> Result<AttackSolution> {
    spec.expect_kind(AttackKind::Aligned)?;
    let kbar = stack_cascades(cascades, &spec.weights)?;
    let init = DVector::from_element(kbar.ncols(), C64::new(1.0, 0.0));
    let mut first = None;
    let mut last = 0.0;
    let theta = projected_gradient(
        &kbar,
        None,
        init,
        spec.step_scale,
        spec.iterations,
        Direction::Ascent,
        |theta, obj| {
            first.get_or_insert(obj);
            last = obj;
            observe(theta, obj);
        },
    )?;
    Ok(AttackSolution {
        state: ReflectionState::Reflect(theta),
        initial_objective: first.unwrap_or(last),
        objective: last,
    })
}

/// Phase of `(K̄^H K̄)^{-1} K̄^H h̄`, or `None` when `K̄^H K̄` is singular (in
/// particular whenever `L > KM`).
fn least_squares_phase(kbar: &DMatrix<C64>, hbar: &DVector<C64>) -> Option<DVector<C64>> {
    if kbar.ncols() > kbar.nrows() {
        return None;
    }
    let gram = kbar.adjoint() * kbar;
    if !(hermitian_condition_number(&gram) <= MAX_GRAM_CONDITION) {
        return None;
    }
    let solution = gram.cholesky()?.solve(&(kbar.adjoint() * hbar));
    let mut theta = DVector::from_element(kbar.ncols(), C64::new(1.0, 0.0));
    project_unit_modulus_into(&solution, &mut theta);
    Some(theta)
}

/// Mitigation attack; see [`mitigation_attack_traced`].
pub fn mitigation_attack(
    cascades: &CascadeMatrix,
    h_hat_attacker: &[DVector<C64>],
    spec: &AttackSpec,
) -> Result<AttackSolution> {
    mitigation_attack_traced(cascades, h_hat_attacker, spec, |_, _| {})
}

/// Mitigation attack with per-iterate reporting.
///
/// The first iterate is the phase of `(K̄^H K̄)^{-1} K̄^H h̄`; when that Gram
/// matrix is singular the all-ones reflection is used instead.
pub fn mitigation_attack_traced(
    cascades: &CascadeMatrix,
    h_hat_attacker: &[DVector<C64>],
    spec: &AttackSpec,
    mut observe: impl FnMut(&DVector<C64>, f64),
) -> Result<AttackSolution> {
    spec.expect_kind(AttackKind::Mitigation)?;
    let kbar = stack_cascades(cascades, &spec.weights)?;
    let hbar = stack_direct(h_hat_attacker, &spec.weights)?;
    if hbar.len() != kbar.nrows() {
        return Err(Error::Dimension(format!(
            "stacked direct channels have length {}, cascades have {} rows",
            hbar.len(),
            kbar.nrows()
        )));
    }
    let init = least_squares_phase(&kbar, &hbar).unwrap_or_else(|| {
        log::debug!(
            "mitigation attack: singular K̄^H K̄ ({} x {}), starting from all-ones",
            kbar.ncols(),
            kbar.ncols()
        );
        DVector::from_element(kbar.ncols(), C64::new(1.0, 0.0))
    });
    let mut first = None;
    let mut last = 0.0;
    let theta = projected_gradient(
        &kbar,
        Some(&hbar),
        init,
        spec.step_scale,
        spec.iterations,
        Direction::Descent,
        |theta, obj| {
            first.get_or_insert(obj);
            last = obj;
            observe(theta, obj);
        },
    )?;
    Ok(AttackSolution {
        state: ReflectionState::Reflect(theta),
        initial_objective: first.unwrap_or(last),
        objective: last,
    })
}

/// Effective channel row of user `k`, `f_k^H diag(θ) G + h_k^H`, returned as a
/// vector `g` such that the received amplitude of precoder `p` is `g · p`
/// (no conjugation).
pub fn effective_channel(truth: &ChannelRealization, state: &ReflectionState, k: usize) -> DVector<C64> {
    let direct = truth.h[k].map(|x| x.conj());
    match state {
        ReflectionState::Absorb => direct,
        ReflectionState::Reflect(theta) => {
            let weighted = truth.f[k].zip_map(theta, |f, t| f.conj() * t);
            truth.g.tr_mul(&weighted) + direct
        }
    }
}
