//! Constrained defensive-noise and alteration objectives (SMON, DMON, SION,
//! DION, SMOA, DMOA) plus derivative-free optimizers and the ensemble
//! defender construction.
//!
//! All six evaluators are deterministic given `(ℵ, spec, seed)`: every Monte
//! Carlo quantity inside them draws from named seeded streams. The reported
//! objective always equals `primary − λ·penalty` exactly as computed from the
//! reported components.
//!
//! Penalty terms written against "negated" distributions in the source
//! definitions are realized as divergences between post-noise and baseline
//! distributions (the stated intent being the information needed to identify
//! the baseline); the literal negated-distribution reading is not
//! interpretable as a probability distribution.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::divergence::{jsd_classical, qjsd, LogBase};
use crate::error::{CoreError, Result};
use crate::linalg::{operator_norm, CMatrix};
use crate::models::{
    model_dissimilarity_s, predict_dynamics, predict_readout, sample_dynamics_operators,
    shift_distribution, CognitiveDistribution, DynamicsModel, HypothesisClass, ReadoutModel,
    VectorDistribution,
};
use crate::projective::UnitaryOperator;
use crate::rng::{derive_stream, run_seeded_tasks};
use crate::statedist::DensityMatrix;

// ---------------------------------------------------------------------------
// Objective specification
// ---------------------------------------------------------------------------

/// The six objective variants of the defense/attack framework.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveVariant {
    /// State model-optimal noise: max-min model dissimilarity over a readout
    /// hypothesis class.
    Smon,
    /// Dynamics model-optimal noise: max-min operator difference over a
    /// dynamics hypothesis class.
    Dmon,
    /// State information-optimal noise: model-agnostic JS divergence on the
    /// neural space.
    Sion,
    /// Dynamics information-optimal noise: JS divergence on the neural space
    /// with a dynamics-channel penalty.
    Dion,
    /// State model-optimal alteration (attack): target attainment vs
    /// detectability.
    Smoa,
    /// Dynamics model-optimal alteration (attack): operator-target attainment
    /// vs detectability.
    Dmoa,
}

/// Orientation of the DMOA attainment term. The written definition maximizes
/// distance to the target operator while the surrounding description asks how
/// closely the altered dynamics approach it; closeness is the default and the
/// printed-distance orientation remains selectable.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DmoaOrientation {
    #[default]
    Closeness,
    Distance,
}

/// Full configuration of one objective evaluation.
///
/// Variant-specific requirements (checked by [`ObjectiveSpec::validate`]):
/// SMON needs a readout hypothesis class and a ground-truth readout; DMON a
/// dynamics class and a ground-truth readout; SION a ground-truth readout;
/// DION a ground-truth dynamics channel; SMOA an attacker readout model and a
/// target cognitive distribution; DMOA a dynamics class and a target
/// operator.
#[derive(Clone, Debug)]
pub struct ObjectiveSpec {
    pub variant: ObjectiveVariant,
    /// Tradeoff weight λ ≥ 0 on the penalty / detectability term.
    pub lambda: f64,
    /// Minimum-dissimilarity constraint μ ∈ [0, 1] (defense variants).
    pub mu: f64,
    /// Baseline neural distribution Q.
    pub q: VectorDistribution,
    /// Hypothesis class H for the model-aware variants.
    pub hypothesis_class: Option<HypothesisClass>,
    /// Simulated subject's true readout channel T (SMON/DMON/SION penalty).
    pub ground_truth_readout: Option<ReadoutModel>,
    /// Simulated subject's true dynamics channel T_dyn (DION penalty).
    pub ground_truth_dynamics: Option<DynamicsModel>,
    /// Attacker's readout model F (SMOA).
    pub attacker_model: Option<ReadoutModel>,
    /// Attack target distribution B (SMOA).
    pub target_distribution: Option<CognitiveDistribution>,
    /// Attack target operator Φ (DMOA).
    pub target_operator: Option<UnitaryOperator>,
    /// Monte Carlo samples for model predictions and operator expectations.
    pub mc_samples: u64,
    /// Monte Carlo samples for the neural-space JS-divergence estimator.
    pub divergence_samples: u64,
    /// Master seed for every stream drawn during evaluation.
    pub seed: u64,
    pub dmoa_orientation: DmoaOrientation,
}

impl ObjectiveSpec {
    /// Minimal spec; variant-specific fields start empty and must be filled
    /// before [`Self::validate`] passes for variants that need them.
    pub fn new(variant: ObjectiveVariant, q: VectorDistribution, seed: u64) -> Self {
        Self {
            variant,
            lambda: 0.0,
            mu: 0.0,
            q,
            hypothesis_class: None,
            ground_truth_readout: None,
            ground_truth_dynamics: None,
            attacker_model: None,
            target_distribution: None,
            target_operator: None,
            mc_samples: 256,
            divergence_samples: 1024,
            seed,
            dmoa_orientation: DmoaOrientation::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(CoreError::Validation(format!(
                "lambda {} must be a nonnegative real",
                self.lambda
            )));
        }
        if !(0.0..=1.0).contains(&self.mu) {
            return Err(CoreError::Validation(format!(
                "mu {} outside [0,1]",
                self.mu
            )));
        }
        self.q.validate()?;
        if self.mc_samples == 0 {
            return Err(CoreError::Config("mc_samples must be >= 1".into()));
        }
        use ObjectiveVariant::*;
        match self.variant {
            Smon => {
                match self.hypothesis_class {
                    Some(HypothesisClass::Readout { .. }) => {}
                    _ => {
                        return Err(CoreError::Config(
                            "SMON requires a readout hypothesis class".into(),
                        ))
                    }
                }
                self.require_ground_truth_readout()?;
            }
            Dmon => {
                match self.hypothesis_class {
                    Some(HypothesisClass::Dynamics { .. }) => {}
                    _ => {
                        return Err(CoreError::Config(
                            "DMON requires a dynamics hypothesis class".into(),
                        ))
                    }
                }
                self.require_ground_truth_readout()?;
            }
            Sion => {
                self.require_divergence_samples()?;
                self.require_ground_truth_readout()?;
            }
            Dion => {
                self.require_divergence_samples()?;
                if self.ground_truth_dynamics.is_none() {
                    return Err(CoreError::Config(
                        "DION requires a ground-truth dynamics channel".into(),
                    ));
                }
            }
            Smoa => {
                self.require_divergence_samples()?;
                if self.attacker_model.is_none() {
                    return Err(CoreError::Config("SMOA requires an attacker model".into()));
                }
                if self.target_distribution.is_none() {
                    return Err(CoreError::Config(
                        "SMOA requires a target cognitive distribution".into(),
                    ));
                }
            }
            Dmoa => {
                self.require_divergence_samples()?;
                match self.hypothesis_class {
                    Some(HypothesisClass::Dynamics { .. }) => {}
                    _ => {
                        return Err(CoreError::Config(
                            "DMOA requires a dynamics hypothesis class".into(),
                        ))
                    }
                }
                if self.target_operator.is_none() {
                    return Err(CoreError::Config(
                        "DMOA requires a target operator".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn require_ground_truth_readout(&self) -> Result<()> {
        if self.ground_truth_readout.is_none() {
            return Err(CoreError::Config(
                "penalty term requires a ground-truth readout channel".into(),
            ));
        }
        Ok(())
    }

    fn require_divergence_samples(&self) -> Result<()> {
        if self.divergence_samples < 100 {
            return Err(CoreError::Config(format!(
                "divergence estimator needs >= 100 samples, got {}",
                self.divergence_samples
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Noise parameterization
// ---------------------------------------------------------------------------

/// Optimizer-searchable form of the noise distribution ℵ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseParameterization {
    /// Independent Gaussian noise per coordinate.
    GaussianDiagonal { mean: Vec<f64>, scale: Vec<f64> },
    /// Deterministic shift supported on a fixed sparse index set.
    SparseSupport {
        dim: usize,
        support: Vec<usize>,
        values: Vec<f64>,
    },
}

impl NoiseParameterization {
    pub fn zeros(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(CoreError::Empty("noise dimension must be >= 1".into()));
        }
        Ok(Self::GaussianDiagonal {
            mean: vec![0.0; m],
            scale: vec![0.0; m],
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::GaussianDiagonal { mean, scale } => {
                if mean.is_empty() || mean.len() != scale.len() {
                    return Err(CoreError::DimensionMismatch(format!(
                        "mean length {} vs scale length {}",
                        mean.len(),
                        scale.len()
                    )));
                }
                if scale.iter().any(|&s| !(s >= 0.0) || !s.is_finite()) {
                    return Err(CoreError::Validation("scales must be >= 0".into()));
                }
                if mean.iter().any(|v| !v.is_finite()) {
                    return Err(CoreError::Validation("means must be finite".into()));
                }
            }
            Self::SparseSupport {
                dim,
                support,
                values,
            } => {
                if *dim == 0 || support.is_empty() {
                    return Err(CoreError::Empty("sparse support must be non-empty".into()));
                }
                if support.len() != values.len() {
                    return Err(CoreError::DimensionMismatch(format!(
                        "support size {} vs value count {}",
                        support.len(),
                        values.len()
                    )));
                }
                if support.iter().any(|&i| i >= *dim) {
                    return Err(CoreError::Validation(format!(
                        "support index out of range for dim {dim}"
                    )));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(CoreError::Validation("values must be finite".into()));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::GaussianDiagonal { mean, .. } => mean.len(),
            Self::SparseSupport { dim, .. } => *dim,
        }
    }

    /// The noise distribution ℵ this parameterization denotes.
    pub fn to_distribution(&self) -> Result<VectorDistribution> {
        self.validate()?;
        match self {
            Self::GaussianDiagonal { mean, scale } => {
                VectorDistribution::gaussian(mean.clone(), scale.clone())
            }
            Self::SparseSupport {
                dim,
                support,
                values,
            } => {
                let mut mean = vec![0.0; *dim];
                for (&i, &v) in support.iter().zip(values) {
                    mean[i] = v;
                }
                VectorDistribution::point_mass(mean)
            }
        }
    }

    /// Per-coordinate noise energy `E[ℵ_i²] = mean_i² + scale_i²`.
    pub fn energy_per_coord(&self) -> Vec<f64> {
        match self {
            Self::GaussianDiagonal { mean, scale } => mean
                .iter()
                .zip(scale)
                .map(|(m, s)| m * m + s * s)
                .collect(),
            Self::SparseSupport {
                dim,
                support,
                values,
            } => {
                let mut e = vec![0.0; *dim];
                for (&i, &v) in support.iter().zip(values) {
                    e[i] = v * v;
                }
                e
            }
        }
    }

    /// Total noise energy `E‖ℵ‖²` (the scenario's "total noise variance").
    pub fn total_energy(&self) -> f64 {
        self.energy_per_coord().iter().sum()
    }

    /// Fraction of [`Self::total_energy`] carried by the given coordinates.
    pub fn subset_energy_fraction(&self, subset: &[usize]) -> f64 {
        let e = self.energy_per_coord();
        let total: f64 = e.iter().sum();
        if total <= 0.0 {
            return 0.0;
        }
        subset.iter().filter(|&&i| i < e.len()).map(|&i| e[i]).sum::<f64>() / total
    }

    fn flatten(&self) -> Vec<f64> {
        match self {
            Self::GaussianDiagonal { mean, scale } => {
                mean.iter().chain(scale).copied().collect()
            }
            Self::SparseSupport { values, .. } => values.clone(),
        }
    }

    fn unflatten(&self, theta: &[f64]) -> Self {
        match self {
            Self::GaussianDiagonal { mean, .. } => {
                let m = mean.len();
                Self::GaussianDiagonal {
                    mean: theta[..m].to_vec(),
                    scale: theta[m..].to_vec(),
                }
            }
            Self::SparseSupport { dim, support, .. } => Self::SparseSupport {
                dim: *dim,
                support: support.clone(),
                values: theta.to_vec(),
            },
        }
    }
}

/// Box-bounded search space over one noise parameterization's parameters.
#[derive(Clone, Debug)]
pub struct NoiseSpace {
    /// Structural template and starting point of the search.
    pub template: NoiseParameterization,
    /// Box half-width: means/values range over `[−bound, bound]`, scales over
    /// `[0, bound]`.
    pub bound: f64,
}

impl NoiseSpace {
    pub fn new(template: NoiseParameterization, bound: f64) -> Result<Self> {
        template.validate()?;
        if !(bound > 0.0) || !bound.is_finite() {
            return Err(CoreError::Validation(format!(
                "search bound {bound} must be positive"
            )));
        }
        Ok(Self { template, bound })
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.template {
            NoiseParameterization::GaussianDiagonal { mean, .. } => {
                let m = mean.len();
                let mut lower = vec![-self.bound; 2 * m];
                lower[m..].fill(0.0);
                (lower, vec![self.bound; 2 * m])
            }
            NoiseParameterization::SparseSupport { support, .. } => (
                vec![-self.bound; support.len()],
                vec![self.bound; support.len()],
            ),
        }
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Decomposed objective value. For defenses `primary` is the dissimilarity /
/// divergence term and `penalty` the cognitive-alteration penalty; for
/// attacks `primary` is the attainment and `penalty` the detectability.
/// `objective = primary − λ·penalty` exactly as computed from these fields.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EvalBreakdown {
    pub objective: f64,
    pub primary: f64,
    pub penalty: f64,
    /// Signed slack of the μ constraint in its printed form (≥ 0 iff
    /// feasible); attacks are unconstrained and report 0.
    pub constraint_slack: f64,
    pub feasible: bool,
}

fn defense_breakdown(primary: f64, penalty: f64, lambda: f64, slack: f64) -> EvalBreakdown {
    EvalBreakdown {
        objective: primary - lambda * penalty,
        primary,
        penalty,
        constraint_slack: slack,
        feasible: slack >= 0.0,
    }
}

/// Dispatch on `spec.variant`.
pub fn evaluate(aleph: &NoiseParameterization, spec: &ObjectiveSpec) -> Result<EvalBreakdown> {
    match spec.variant {
        ObjectiveVariant::Smon => eval_smon(aleph, spec),
        ObjectiveVariant::Dmon => eval_dmon(aleph, spec),
        ObjectiveVariant::Sion => eval_sion(aleph, spec),
        ObjectiveVariant::Dion => eval_dion(aleph, spec),
        ObjectiveVariant::Smoa => eval_smoa(aleph, spec),
        ObjectiveVariant::Dmoa => eval_dmoa(aleph, spec),
    }
}

fn shifted_q(aleph: &NoiseParameterization, spec: &ObjectiveSpec) -> Result<VectorDistribution> {
    let noise = aleph.to_distribution()?;
    if noise.dim() != spec.q.dim() {
        return Err(CoreError::DimensionMismatch(format!(
            "noise dim {} vs Q dim {}",
            noise.dim(),
            spec.q.dim()
        )));
    }
    shift_distribution(&spec.q, &noise, spec.seed)
}

/// Penalty shared by SMON/DMON/SION: QJSD between the simulated subject's
/// post-noise and baseline cognitive distributions, `D_QJS(T(Q+ℵ), T(Q))`.
fn alteration_penalty(spec: &ObjectiveSpec, q_shift: &VectorDistribution) -> Result<f64> {
    let t = spec
        .ground_truth_readout
        .as_ref()
        .ok_or_else(|| CoreError::Config("missing ground-truth readout".into()))?;
    let a = predict_readout(t, &spec.q, spec.mc_samples, spec.seed)?;
    let b = predict_readout(t, q_shift, spec.mc_samples, spec.seed)?;
    qjsd(b.density(), a.density(), LogBase::Two)
}

/// State model-optimal noise (Def 1): worst-case model dissimilarity over the
/// readout hypothesis class minus the λ-weighted alteration penalty.
pub fn eval_smon(aleph: &NoiseParameterization, spec: &ObjectiveSpec) -> Result<EvalBreakdown> {
    spec.validate()?;
    if spec.variant != ObjectiveVariant::Smon {
        return Err(CoreError::Config("spec variant is not SMON".into()));
    }
    let q_shift = shifted_q(aleph, spec)?;
    let members = match spec.hypothesis_class.as_ref().unwrap() {
        HypothesisClass::Readout { members } => members,
        _ => unreachable!("validated above"),
    };
    let mut worst = f64::INFINITY;
    for f in members {
        let s = model_dissimilarity_s(f, &spec.q, &q_shift, spec.mc_samples, spec.seed)?;
        worst = worst.min(s);
    }
    let penalty = alteration_penalty(spec, &q_shift)?;
    Ok(defense_breakdown(worst, penalty, spec.lambda, worst - spec.mu))
}

/// Dynamics model-optimal noise (Def 2): worst-case halved mean operator-norm
/// difference over the dynamics hypothesis class. The μ threshold applies to
/// the printed un-halved norm (i.e. `2·primary ≥ μ`).
pub fn eval_dmon(aleph: &NoiseParameterization, spec: &ObjectiveSpec) -> Result<EvalBreakdown> {
    spec.validate()?;
    if spec.variant != ObjectiveVariant::Dmon {
        return Err(CoreError::Config("spec variant is not DMON".into()));
    }
    let q_shift = shifted_q(aleph, spec)?;
    let members = match spec.hypothesis_class.as_ref().unwrap() {
        HypothesisClass::Dynamics { members } => members,
        _ => unreachable!("validated above"),
    };
    let mut worst_half = f64::INFINITY;
    for g in members {
        worst_half = worst_half.min(mean_operator_gap(g, &spec.q, &q_shift, spec)? / 2.0);
    }
    let penalty = alteration_penalty(spec, &q_shift)?;
    Ok(defense_breakdown(
        worst_half,
        penalty,
        spec.lambda,
        2.0 * worst_half - spec.mu,
    ))
}

/// Mean operator-norm difference `E‖G(Q) − G(Q2)‖` under common random
/// numbers (each expectation draws the same underlying stream).
fn mean_operator_gap(
    g: &DynamicsModel,
    q: &VectorDistribution,
    q2: &VectorDistribution,
    spec: &ObjectiveSpec,
) -> Result<f64> {
    let ops_a = sample_dynamics_operators(g, q, spec.mc_samples, spec.seed)?;
    let ops_b = sample_dynamics_operators(g, q2, spec.mc_samples, spec.seed)?;
    let total: f64 = ops_a
        .iter()
        .zip(&ops_b)
        .map(|(a, b)| operator_norm(&(a.matrix() - b.matrix())))
        .sum();
    Ok(total / spec.mc_samples as f64)
}

/// State information-optimal noise (Def 3): neural-space JS distance between
/// `Q` and `Q + ℵ` minus the λ-weighted alteration penalty.
pub fn eval_sion(aleph: &NoiseParameterization, spec: &ObjectiveSpec) -> Result<EvalBreakdown> {
    spec.validate()?;
    if spec.variant != ObjectiveVariant::Sion {
        return Err(CoreError::Config("spec variant is not SION".into()));
    }
    let q_shift = shifted_q(aleph, spec)?;
    let divergence = jsd_estimate(&spec.q, &q_shift, spec.divergence_samples, spec.seed)?;
    let penalty = alteration_penalty(spec, &q_shift)?;
    Ok(defense_breakdown(
        divergence,
        penalty,
        spec.lambda,
        divergence - spec.mu,
    ))
}

/// Dynamics information-optimal noise (Def 4): SION's divergence term with a
/// dynamics-channel penalty computed through the channel-state (Choi)
/// embedding of the ground-truth dynamics at `Q + ℵ` vs `Q`.
pub fn eval_dion(aleph: &NoiseParameterization, spec: &ObjectiveSpec) -> Result<EvalBreakdown> {
    spec.validate()?;
    if spec.variant != ObjectiveVariant::Dion {
        return Err(CoreError::Config("spec variant is not DION".into()));
    }
    let q_shift = shifted_q(aleph, spec)?;
    let divergence = jsd_estimate(&spec.q, &q_shift, spec.divergence_samples, spec.seed)?;
    let t = spec.ground_truth_dynamics.as_ref().unwrap();
    let u_base = predict_dynamics(t, &spec.q, spec.mc_samples, spec.seed)?;
    let u_shift = predict_dynamics(t, &q_shift, spec.mc_samples, spec.seed)?;
    let penalty = qjsd(
        &choi_state(&u_shift)?,
        &choi_state(&u_base)?,
        LogBase::Two,
    )?;
    Ok(defense_breakdown(
        divergence,
        penalty,
        spec.lambda,
        divergence - spec.mu,
    ))
}

/// Channel-state embedding: the pure Choi state `|Φ_U⟩ = (U ⊗ I)|Ω⟩` with
/// `|Ω⟩ = d^{-1/2} Σ_i |ii⟩`, i.e. amplitudes `U_{ij}/√d` at index `i·d + j`.
pub fn choi_state(u: &UnitaryOperator) -> Result<DensityMatrix> {
    let d = u.dim();
    let m = u.matrix();
    let mut v = Vec::with_capacity(d * d);
    let norm = (d as f64).sqrt();
    for i in 0..d {
        for j in 0..d {
            v.push(m[(i, j)] / norm);
        }
    }
    let mat = CMatrix::from_fn(d * d, d * d, |r, c| v[r] * v[c].conj());
    DensityMatrix::new(mat)
}

/// State model-optimal alteration (Def 5): attainment `Y = 1 − JSD(F(Q+ℵ), B)`
/// against detectability `D_J(Q, Q+ℵ)`.
pub fn eval_smoa(aleph: &NoiseParameterization, spec: &ObjectiveSpec) -> Result<EvalBreakdown> {
    spec.validate()?;
    if spec.variant != ObjectiveVariant::Smoa {
        return Err(CoreError::Config("spec variant is not SMOA".into()));
    }
    let q_shift = shifted_q(aleph, spec)?;
    let f = spec.attacker_model.as_ref().unwrap();
    let b = spec.target_distribution.as_ref().unwrap();
    let predicted = predict_readout(f, &q_shift, spec.mc_samples, spec.seed)?;
    let attainment =
        1.0 - jsd_classical(predicted.outcome_probs(), b.outcome_probs(), LogBase::Two)?;
    let detectability = jsd_estimate(&spec.q, &q_shift, spec.divergence_samples, spec.seed)?;
    Ok(EvalBreakdown {
        objective: attainment - spec.lambda * detectability,
        primary: attainment,
        penalty: detectability,
        constraint_slack: 0.0,
        feasible: true,
    })
}

/// Dynamics model-optimal alteration (Def 6): operator-target attainment
/// (closeness by default, see [`DmoaOrientation`]) against detectability.
pub fn eval_dmoa(aleph: &NoiseParameterization, spec: &ObjectiveSpec) -> Result<EvalBreakdown> {
    spec.validate()?;
    if spec.variant != ObjectiveVariant::Dmoa {
        return Err(CoreError::Config("spec variant is not DMOA".into()));
    }
    let q_shift = shifted_q(aleph, spec)?;
    let phi = spec.target_operator.as_ref().unwrap();
    let members = match spec.hypothesis_class.as_ref().unwrap() {
        HypothesisClass::Dynamics { members } => members,
        _ => unreachable!("validated above"),
    };
    let mut min_half_dist = f64::INFINITY;
    for g in members {
        let ops = sample_dynamics_operators(g, &q_shift, spec.mc_samples, spec.seed)?;
        let mean: f64 = ops
            .iter()
            .map(|u| operator_norm(&(u.matrix() - phi.matrix())))
            .sum::<f64>()
            / spec.mc_samples as f64;
        min_half_dist = min_half_dist.min(mean / 2.0);
    }
    let attainment = match spec.dmoa_orientation {
        DmoaOrientation::Closeness => 1.0 - min_half_dist,
        DmoaOrientation::Distance => min_half_dist,
    };
    let detectability = jsd_estimate(&spec.q, &q_shift, spec.divergence_samples, spec.seed)?;
    Ok(EvalBreakdown {
        objective: attainment - spec.lambda * detectability,
        primary: attainment,
        penalty: detectability,
        constraint_slack: 0.0,
        feasible: true,
    })
}

// ---------------------------------------------------------------------------
// Continuous JS-distance estimator
// ---------------------------------------------------------------------------

/// Seeded Monte Carlo estimate of the base-2 Jensen-Shannon *distance*
/// between two continuous distributions on the neural space, clamped to
/// `[0, 1]`.
///
/// Gaussian pairs with strictly positive scales use exact density evaluation
/// under a plug-in mixture; any other combination falls back to a
/// k-nearest-neighbor density proxy over seeded samples. Requires `samples ≥
/// 100` (configuration error below that).
pub fn jsd_estimate(
    p: &VectorDistribution,
    q: &VectorDistribution,
    samples: u64,
    seed: u64,
) -> Result<f64> {
    if samples < 100 {
        return Err(CoreError::Config(format!(
            "jsd_estimate needs >= 100 samples, got {samples}"
        )));
    }
    if p.dim() != q.dim() {
        return Err(CoreError::DimensionMismatch(format!(
            "distribution dims {} vs {}",
            p.dim(),
            q.dim()
        )));
    }
    let density_ok = |d: &VectorDistribution| {
        matches!(d, VectorDistribution::GaussianDiagonal { scale, .. } if scale.iter().all(|&s| s > 0.0))
    };
    let mut rng = derive_stream(seed, "jsd-estimate", 0);
    let divergence = if density_ok(p) && density_ok(q) {
        let mut acc = 0.0;
        for _ in 0..samples {
            let x = p.sample(&mut rng);
            acc += 0.5 * log2_component_over_mixture(p.log_density(&x)?, q.log_density(&x)?);
            let y = q.sample(&mut rng);
            acc += 0.5 * log2_component_over_mixture(q.log_density(&y)?, p.log_density(&y)?);
        }
        acc / samples as f64
    } else {
        let n = samples as usize;
        let xs: Vec<Vec<f64>> = (0..n).map(|_| p.sample(&mut rng)).collect();
        let ys: Vec<Vec<f64>> = (0..n).map(|_| q.sample(&mut rng)).collect();
        let mut acc = 0.0;
        for (own, other) in [(&xs, &ys), (&ys, &xs)] {
            for (i, x) in own.iter().enumerate() {
                let ln_own = knn_log_density(x, own, Some(i));
                let ln_other = knn_log_density(x, other, None);
                acc += 0.5 * log2_component_over_mixture(ln_own, ln_other);
            }
        }
        acc / n as f64
    };
    // Snap float-noise residuals (identical inputs leave ~1e-17 per-term
    // cancellation error that the square root would inflate to ~1e-9).
    let divergence = if divergence.abs() < 1e-14 {
        0.0
    } else {
        divergence
    };
    Ok(divergence.clamp(0.0, 1.0).sqrt())
}

/// `log2(component / mixture)` with mixture `m = (e^{la} + e^{lb})/2`,
/// where `la` is the log-density of the component the sample came from.
fn log2_component_over_mixture(la: f64, lb: f64) -> f64 {
    let lm = log_add_exp(la, lb) - std::f64::consts::LN_2;
    (la - lm) / std::f64::consts::LN_2
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// k-NN log-density proxy (k = 3): `ln k − ln n_eff − ln V_d − d·ln r_k`.
fn knn_log_density(x: &[f64], cloud: &[Vec<f64>], skip: Option<usize>) -> f64 {
    const K: usize = 3;
    let d = x.len() as f64;
    let mut dists: Vec<f64> = cloud
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(_, y)| {
            x.iter()
                .zip(y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let n_eff = dists.len();
    let k = K.min(n_eff);
    dists.select_nth_unstable_by(k - 1, |a, b| a.partial_cmp(b).unwrap());
    let r = dists[k - 1].max(1e-300);
    let ln_vd = (d / 2.0) * std::f64::consts::PI.ln() - ln_gamma(d / 2.0 + 1.0);
    (k as f64).ln() - (n_eff as f64).ln() - ln_vd - d * r.ln()
}

// ---------------------------------------------------------------------------
// Derivative-free optimization
// ---------------------------------------------------------------------------

/// Search strategy for [`optimize`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "kebab-case")]
pub enum OptimizerStrategy {
    /// Uniform sampling of the box; evaluations parallelize over threads with
    /// deterministic lowest-index tie-breaking.
    RandomSearch,
    /// (1+1) evolution strategy with 1/5th-success-rule step adaptation.
    EvolutionOnePlusOne { initial_step: f64 },
    /// Central-finite-difference ascent on the penalized objective; the
    /// penalty coefficient doubles whenever the iterate violates the μ
    /// constraint.
    FiniteDifferenceAscent {
        step: f64,
        learning_rate: f64,
        penalty_rho0: f64,
    },
}

#[derive(Clone, Debug)]
pub struct OptimizerConfig {
    pub strategy: OptimizerStrategy,
    /// Total objective-evaluation budget (≥ 1).
    pub budget: u64,
    /// Seed for the optimizer's own randomness (independent of the
    /// evaluation seed inside the spec).
    pub seed: u64,
    pub threads: usize,
}

/// One trace entry: `(iteration, objective, constraint slack)` of the point
/// evaluated at that step.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: u64,
    pub objective: f64,
    pub constraint_slack: f64,
}

#[derive(Clone, Debug)]
pub struct OptimizationResult {
    pub best_noise: NoiseParameterization,
    pub objective_value: f64,
    pub breakdown: EvalBreakdown,
    /// True iff the best point satisfies the μ constraint. When no feasible
    /// point was seen, the best infeasible point is returned with this flag
    /// false.
    pub constraint_satisfied: bool,
    pub trace: Vec<TracePoint>,
    pub evaluations: u64,
    pub seed: u64,
}

/// Engine-level result over a raw parameter vector (used directly by the
/// quadratic plumbing-test mode).
#[derive(Clone, Debug)]
pub struct EngineResult {
    pub best_theta: Vec<f64>,
    pub breakdown: EvalBreakdown,
    pub trace: Vec<TracePoint>,
    pub evaluations: u64,
}

struct BestTracker {
    theta: Vec<f64>,
    breakdown: EvalBreakdown,
}

impl BestTracker {
    fn offer(&mut self, theta: &[f64], b: EvalBreakdown) {
        let better = match (b.feasible, self.breakdown.feasible) {
            (true, false) => true,
            (false, true) => false,
            _ => b.objective > self.breakdown.objective,
        };
        if better {
            self.theta = theta.to_vec();
            self.breakdown = b;
        }
    }
}

fn clamp_theta(theta: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((t, lo), hi) in theta.iter_mut().zip(lower).zip(upper) {
        *t = t.clamp(*lo, *hi);
    }
}

/// Run the configured derivative-free strategy on a raw objective over the
/// box `[lower, upper]`, starting from `start`. Feasible points dominate
/// infeasible ones in the returned best; ties in feasibility compare the
/// objective.
pub fn optimize_function<F>(
    eval: F,
    start: &[f64],
    lower: &[f64],
    upper: &[f64],
    config: &OptimizerConfig,
) -> Result<EngineResult>
where
    F: Fn(&[f64]) -> Result<EvalBreakdown> + Sync,
{
    if start.is_empty() {
        return Err(CoreError::Empty("empty parameter space".into()));
    }
    if start.len() != lower.len() || start.len() != upper.len() {
        return Err(CoreError::DimensionMismatch(
            "start/bound length mismatch".into(),
        ));
    }
    if config.budget == 0 {
        return Err(CoreError::Config("optimizer budget must be >= 1".into()));
    }
    let mut start = start.to_vec();
    clamp_theta(&mut start, lower, upper);

    match &config.strategy {
        OptimizerStrategy::RandomSearch => {
            random_search(&eval, &start, lower, upper, config)
        }
        OptimizerStrategy::EvolutionOnePlusOne { initial_step } => {
            evolution_one_plus_one(&eval, &start, lower, upper, config, *initial_step)
        }
        OptimizerStrategy::FiniteDifferenceAscent {
            step,
            learning_rate,
            penalty_rho0,
        } => finite_difference_ascent(
            &eval,
            &start,
            lower,
            upper,
            config,
            *step,
            *learning_rate,
            *penalty_rho0,
        ),
    }
}

fn random_search<F>(
    eval: &F,
    start: &[f64],
    lower: &[f64],
    upper: &[f64],
    config: &OptimizerConfig,
) -> Result<EngineResult>
where
    F: Fn(&[f64]) -> Result<EvalBreakdown> + Sync,
{
    // First evaluation is always the start point; the rest sample the box.
    let b0 = eval(start)?;
    let mut best = BestTracker {
        theta: start.to_vec(),
        breakdown: b0,
    };
    let mut trace = vec![TracePoint {
        iteration: 0,
        objective: b0.objective,
        constraint_slack: b0.constraint_slack,
    }];
    let rest = config.budget - 1;
    let candidates = run_seeded_tasks(
        config.seed,
        "optimize-random",
        rest,
        config.threads.max(1),
        |_, rng| {
            let theta: Vec<f64> = lower
                .iter()
                .zip(upper)
                .map(|(&lo, &hi)| lo + (hi - lo) * rng.gen::<f64>())
                .collect();
            let breakdown = eval(&theta);
            (theta, breakdown)
        },
    );
    for (i, (theta, breakdown)) in candidates.into_iter().enumerate() {
        let b = breakdown?;
        trace.push(TracePoint {
            iteration: (i + 1) as u64,
            objective: b.objective,
            constraint_slack: b.constraint_slack,
        });
        best.offer(&theta, b);
    }
    Ok(EngineResult {
        best_theta: best.theta,
        breakdown: best.breakdown,
        trace,
        evaluations: config.budget,
    })
}

fn evolution_one_plus_one<F>(
    eval: &F,
    start: &[f64],
    lower: &[f64],
    upper: &[f64],
    config: &OptimizerConfig,
    initial_step: f64,
) -> Result<EngineResult>
where
    F: Fn(&[f64]) -> Result<EvalBreakdown> + Sync,
{
    if !(initial_step > 0.0) {
        return Err(CoreError::Config("initial_step must be positive".into()));
    }
    // Fixed-coefficient penalty score used only for accept/reject ranking.
    let score = |b: &EvalBreakdown| b.objective - 10.0 * (-b.constraint_slack).max(0.0);
    let mut rng = derive_stream(config.seed, "optimize-es", 0);
    let mut theta = start.to_vec();
    let mut current = eval(&theta)?;
    let mut best = BestTracker {
        theta: theta.clone(),
        breakdown: current,
    };
    let mut trace = vec![TracePoint {
        iteration: 0,
        objective: current.objective,
        constraint_slack: current.constraint_slack,
    }];
    let mut sigma = initial_step;
    // 1/5th-success rule: multiplicative factors with equilibrium at a 20%
    // acceptance rate (1.3 · 0.9367⁴ ≈ 1).
    const UP: f64 = 1.3;
    const DOWN: f64 = 0.936_746;
    for it in 1..config.budget {
        let mut candidate: Vec<f64> = theta
            .iter()
            .map(|&t| t + sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        clamp_theta(&mut candidate, lower, upper);
        let b = eval(&candidate)?;
        trace.push(TracePoint {
            iteration: it,
            objective: b.objective,
            constraint_slack: b.constraint_slack,
        });
        best.offer(&candidate, b);
        if score(&b) >= score(&current) {
            theta = candidate;
            current = b;
            sigma *= UP;
        } else {
            sigma *= DOWN;
        }
        sigma = sigma.clamp(1e-9, upper.iter().zip(lower).map(|(h, l)| h - l).fold(0.0, f64::max));
    }
    Ok(EngineResult {
        best_theta: best.theta,
        breakdown: best.breakdown,
        trace,
        evaluations: config.budget,
    })
}

#[allow(clippy::too_many_arguments)]
fn finite_difference_ascent<F>(
    eval: &F,
    start: &[f64],
    lower: &[f64],
    upper: &[f64],
    config: &OptimizerConfig,
    step: f64,
    learning_rate: f64,
    penalty_rho0: f64,
) -> Result<EngineResult>
where
    F: Fn(&[f64]) -> Result<EvalBreakdown> + Sync,
{
    if !(step > 0.0) || !(learning_rate > 0.0) || !(penalty_rho0 > 0.0) {
        return Err(CoreError::Config(
            "step, learning_rate, and penalty_rho0 must be positive".into(),
        ));
    }
    let penalized = |b: &EvalBreakdown, rho: f64| {
        let v = (-b.constraint_slack).max(0.0);
        b.objective - rho * v * v
    };
    let d = start.len();
    let mut theta = start.to_vec();
    let mut rho = penalty_rho0;
    let mut lr = learning_rate;
    let mut evals: u64 = 0;
    let mut trace = Vec::new();
    let run = |theta: &[f64], evals: &mut u64| -> Result<EvalBreakdown> {
        *evals += 1;
        eval(theta)
    };
    let mut current = run(&theta, &mut evals)?;
    let mut best = BestTracker {
        theta: theta.clone(),
        breakdown: current,
    };
    trace.push(TracePoint {
        iteration: 0,
        objective: current.objective,
        constraint_slack: current.constraint_slack,
    });
    let mut it: u64 = 0;
    'outer: while evals + (2 * d as u64) + 1 <= config.budget {
        it += 1;
        // Central-difference gradient of the penalized objective.
        let mut grad = vec![0.0; d];
        for i in 0..d {
            let mut plus = theta.clone();
            plus[i] = (plus[i] + step).clamp(lower[i], upper[i]);
            let mut minus = theta.clone();
            minus[i] = (minus[i] - step).clamp(lower[i], upper[i]);
            let width = plus[i] - minus[i];
            if width <= 0.0 {
                continue;
            }
            let bp = run(&plus, &mut evals)?;
            let bm = run(&minus, &mut evals)?;
            best.offer(&plus, bp);
            best.offer(&minus, bm);
            grad[i] = (penalized(&bp, rho) - penalized(&bm, rho)) / width;
            if evals >= config.budget {
                break 'outer;
            }
        }
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm > 0.0 {
            let mut candidate: Vec<f64> = theta
                .iter()
                .zip(&grad)
                .map(|(t, g)| t + lr * g / norm)
                .collect();
            clamp_theta(&mut candidate, lower, upper);
            let b = run(&candidate, &mut evals)?;
            best.offer(&candidate, b);
            trace.push(TracePoint {
                iteration: it,
                objective: b.objective,
                constraint_slack: b.constraint_slack,
            });
            if penalized(&b, rho) > penalized(&current, rho) {
                theta = candidate;
                current = b;
            } else {
                lr *= 0.5;
            }
        } else {
            lr *= 0.5;
        }
        // Penalty-coefficient doubling on violation at the current iterate.
        if !current.feasible {
            rho *= 2.0;
        }
        if lr < 1e-9 {
            break;
        }
    }
    Ok(EngineResult {
        best_theta: best.theta,
        breakdown: best.breakdown,
        trace,
        evaluations: evals,
    })
}

/// Maximize the configured objective over the noise search space.
pub fn optimize(
    spec: &ObjectiveSpec,
    space: &NoiseSpace,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    spec.validate()?;
    let (lower, upper) = space.bounds();
    let start = space.template.flatten();
    let template = space.template.clone();
    let eval = |theta: &[f64]| -> Result<EvalBreakdown> {
        evaluate(&template.unflatten(theta), spec)
    };
    let engine = optimize_function(eval, &start, &lower, &upper, config)?;
    Ok(OptimizationResult {
        best_noise: template.unflatten(&engine.best_theta),
        objective_value: engine.breakdown.objective,
        breakdown: engine.breakdown,
        constraint_satisfied: engine.breakdown.feasible,
        trace: engine.trace,
        evaluations: engine.evaluations,
        seed: config.seed,
    })
}

// ---------------------------------------------------------------------------
// Ensemble defender class
// ---------------------------------------------------------------------------

/// Outcome of the ensemble construction: the union class (if any candidate
/// qualified) plus per-candidate minimum dissimilarities.
#[derive(Clone, Debug)]
pub struct EnsembleDefender {
    /// Union of all members of qualifying classes, deduplicated; `None` when
    /// no candidate class met the threshold (the "empty-flagged" result).
    pub class: Option<HypothesisClass>,
    /// Minimum member dissimilarity of each candidate, in input order.
    pub min_dissimilarities: Vec<f64>,
    pub qualifying: usize,
}

impl EnsembleDefender {
    pub fn is_empty(&self) -> bool {
        self.class.is_none()
    }
}

/// Build the ensemble defender class: the union of member models from every
/// candidate class whose minimum member dissimilarity under ℵ meets μ.
/// Readout members are scored by the normalized model dissimilarity `S`;
/// dynamics members by the printed (un-halved) mean operator gap.
pub fn ensemble_defender_class(
    candidates: &[HypothesisClass],
    q: &VectorDistribution,
    aleph: &NoiseParameterization,
    mu: f64,
    mc_samples: u64,
    seed: u64,
) -> Result<EnsembleDefender> {
    if candidates.is_empty() {
        return Err(CoreError::Empty("no candidate hypothesis classes".into()));
    }
    if !(0.0..=1.0).contains(&mu) {
        return Err(CoreError::Validation(format!("mu {mu} outside [0,1]")));
    }
    let all_readout = candidates
        .iter()
        .all(|c| matches!(c, HypothesisClass::Readout { .. }));
    let all_dynamics = candidates
        .iter()
        .all(|c| matches!(c, HypothesisClass::Dynamics { .. }));
    if !all_readout && !all_dynamics {
        return Err(CoreError::Validation(
            "candidate classes must share one member kind".into(),
        ));
    }
    let q_shift = shift_distribution(q, &aleph.to_distribution()?, seed)?;
    let mut mins = Vec::with_capacity(candidates.len());
    let mut readout_union: Vec<ReadoutModel> = Vec::new();
    let mut dynamics_union: Vec<DynamicsModel> = Vec::new();
    let mut qualifying = 0usize;
    for class in candidates {
        let min_s = match class {
            HypothesisClass::Readout { members } => {
                let mut min_s = f64::INFINITY;
                for f in members {
                    min_s =
                        min_s.min(model_dissimilarity_s(f, q, &q_shift, mc_samples, seed)?);
                }
                min_s
            }
            HypothesisClass::Dynamics { members } => {
                let mut min_s = f64::INFINITY;
                for g in members {
                    let ops_a = sample_dynamics_operators(g, q, mc_samples, seed)?;
                    let ops_b = sample_dynamics_operators(g, &q_shift, mc_samples, seed)?;
                    let mean: f64 = ops_a
                        .iter()
                        .zip(&ops_b)
                        .map(|(a, b)| operator_norm(&(a.matrix() - b.matrix())))
                        .sum::<f64>()
                        / mc_samples as f64;
                    min_s = min_s.min(mean);
                }
                min_s
            }
        };
        mins.push(min_s);
        if min_s >= mu {
            qualifying += 1;
            match class {
                HypothesisClass::Readout { members } => {
                    for f in members {
                        if !readout_union.contains(f) {
                            readout_union.push(f.clone());
                        }
                    }
                }
                HypothesisClass::Dynamics { members } => {
                    for g in members {
                        if !dynamics_union.contains(g) {
                            dynamics_union.push(g.clone());
                        }
                    }
                }
            }
        }
    }
    let class = if all_readout && !readout_union.is_empty() {
        Some(HypothesisClass::readout(readout_union)?)
    } else if all_dynamics && !dynamics_union.is_empty() {
        Some(HypothesisClass::dynamics(dynamics_union)?)
    } else {
        None
    };
    Ok(EnsembleDefender {
        class,
        min_dissimilarities: mins,
        qualifying,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{DynamicsKind, OdaLevel, ReadoutKind};
    use num_complex::Complex64;

    fn softmax_model(weights: Vec<Vec<f64>>) -> ReadoutModel {
        ReadoutModel::new("ls", OdaLevel::Gamma, ReadoutKind::LinearSoftmax { weights }).unwrap()
    }

    fn subset_model(weights: Vec<Vec<f64>>, subset: Vec<usize>) -> ReadoutModel {
        ReadoutModel::new(
            "sub",
            OdaLevel::Gamma,
            ReadoutKind::SubsetSoftmax { weights, subset },
        )
        .unwrap()
    }

    fn identity_rows(m: usize, c: f64) -> Vec<Vec<f64>> {
        // K = m + 1 rows: a zero row then c·e_j for each coordinate.
        let mut rows = vec![vec![0.0; m]];
        for j in 0..m {
            let mut r = vec![0.0; m];
            r[j] = c;
            rows.push(r);
        }
        rows
    }

    fn mean_shift(m: usize, coord: usize, value: f64) -> NoiseParameterization {
        let mut mean = vec![0.0; m];
        mean[coord] = value;
        NoiseParameterization::GaussianDiagonal {
            mean,
            scale: vec![0.0; m],
        }
    }

    fn smon_spec(m: usize, members: Vec<ReadoutModel>) -> ObjectiveSpec {
        let mut spec = ObjectiveSpec::new(
            ObjectiveVariant::Smon,
            VectorDistribution::standard_normal(m).unwrap(),
            11,
        );
        spec.hypothesis_class = Some(HypothesisClass::readout(members).unwrap());
        spec.ground_truth_readout = Some(softmax_model(identity_rows(m, 0.6)));
        spec.mc_samples = 400;
        spec
    }

    #[test]
    fn smon_zero_noise_is_zero_and_infeasible() {
        let mut spec = smon_spec(6, vec![softmax_model(identity_rows(6, 1.0))]);
        spec.mu = 0.2;
        spec.lambda = 0.5;
        let b = eval_smon(&NoiseParameterization::zeros(6).unwrap(), &spec).unwrap();
        assert!(b.primary.abs() < 1e-12);
        assert!(b.penalty.abs() < 1e-9);
        assert!(b.objective.abs() < 1e-9);
        assert!(!b.feasible);
    }

    #[test]
    fn lambda_zero_objective_equals_primary() {
        let mut spec = smon_spec(4, vec![softmax_model(identity_rows(4, 1.0))]);
        spec.lambda = 0.0;
        let b = eval_smon(&mean_shift(4, 1, 1.5), &spec).unwrap();
        assert_eq!(b.objective, b.primary);
        assert!(b.primary > 0.0);
    }

    #[test]
    fn subset_readout_ignores_off_subset_noise() {
        let m = 10;
        let weights = vec![vec![0.0; 5], vec![1.0, 0.5, -0.5, 0.3, 0.7]];
        let spec = {
            let mut s = smon_spec(m, vec![subset_model(weights, (0..5).collect())]);
            s.mu = 0.1;
            s
        };
        let b = eval_smon(&mean_shift(m, 7, 3.0), &spec).unwrap();
        assert!(b.primary.abs() < 1e-9, "worst_case_S = {}", b.primary);
    }

    #[test]
    fn objective_decomposition_identity() {
        let mut spec = smon_spec(4, vec![softmax_model(identity_rows(4, 1.0))]);
        spec.lambda = 0.7;
        spec.mu = 0.1;
        let b = eval_smon(&mean_shift(4, 0, 1.0), &spec).unwrap();
        assert!((b.objective - (b.primary - spec.lambda * b.penalty)).abs() < 1e-12);
    }

    #[test]
    fn evaluators_are_deterministic() {
        let mut spec = smon_spec(4, vec![softmax_model(identity_rows(4, 1.0))]);
        spec.lambda = 0.3;
        let aleph = mean_shift(4, 2, 0.8);
        let a = eval_smon(&aleph, &spec).unwrap();
        let b = eval_smon(&aleph, &spec).unwrap();
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        assert_eq!(a.penalty.to_bits(), b.penalty.to_bits());
    }

    #[test]
    fn feasibility_monotone_under_class_enlargement() {
        let m = 4;
        let f1 = softmax_model(identity_rows(m, 1.0));
        let f2 = subset_model(vec![vec![0.0], vec![0.4]], vec![3]);
        let small = smon_spec(m, vec![f1.clone()]);
        let large = smon_spec(m, vec![f1, f2]);
        let aleph = mean_shift(m, 0, 1.2);
        let ws = eval_smon(&aleph, &small).unwrap().primary;
        let wl = eval_smon(&aleph, &large).unwrap().primary;
        assert!(wl <= ws);
    }

    fn rotation_model(m: usize, rows: Vec<Vec<f64>>) -> DynamicsModel {
        let _ = m;
        DynamicsModel::new(
            "rot",
            OdaLevel::Beta,
            DynamicsKind::Rotation {
                weights: rows,
                dim: 2,
            },
        )
        .unwrap()
    }

    fn dmon_spec(m: usize, members: Vec<DynamicsModel>) -> ObjectiveSpec {
        let mut spec = ObjectiveSpec::new(
            ObjectiveVariant::Dmon,
            VectorDistribution::standard_normal(m).unwrap(),
            13,
        );
        spec.hypothesis_class = Some(HypothesisClass::dynamics(members).unwrap());
        spec.ground_truth_readout = Some(softmax_model(identity_rows(m, 0.6)));
        spec.mc_samples = 200;
        spec
    }

    #[test]
    fn dmon_zero_noise_and_norm_bounds() {
        let spec = dmon_spec(3, vec![rotation_model(3, vec![vec![0.8, 0.0, 0.3]])]);
        let zero = eval_dmon(&NoiseParameterization::zeros(3).unwrap(), &spec).unwrap();
        assert!(zero.primary.abs() < 1e-12);
        let shifted = eval_dmon(&mean_shift(3, 0, 2.0), &spec).unwrap();
        assert!(shifted.primary > 0.0 && shifted.primary <= 1.0);
    }

    #[test]
    fn dmon_constant_dynamics_sees_nothing() {
        let g = DynamicsModel::new("id", OdaLevel::Alpha, DynamicsKind::Constant { dim: 2 }).unwrap();
        let spec = dmon_spec(3, vec![g]);
        let b = eval_dmon(&mean_shift(3, 1, 5.0), &spec).unwrap();
        assert!(b.primary.abs() < 1e-12);
    }

    fn sion_spec(m: usize) -> ObjectiveSpec {
        let mut spec = ObjectiveSpec::new(
            ObjectiveVariant::Sion,
            VectorDistribution::standard_normal(m).unwrap(),
            17,
        );
        spec.ground_truth_readout = Some(softmax_model(identity_rows(m, 0.6)));
        spec.mc_samples = 300;
        spec.divergence_samples = 2000;
        spec
    }

    #[test]
    fn sion_zero_noise_infeasible_and_large_shift_saturates() {
        let mut spec = sion_spec(3);
        spec.mu = 0.1;
        let zero = eval_sion(&NoiseParameterization::zeros(3).unwrap(), &spec).unwrap();
        assert!(zero.primary.abs() < 1e-12);
        assert!(!zero.feasible);
        let big = eval_sion(&mean_shift(3, 0, 40.0), &spec).unwrap();
        assert!(big.primary > 0.999, "divergence {}", big.primary);
    }

    #[test]
    fn sion_sample_floor_is_config_error() {
        let mut spec = sion_spec(3);
        spec.divergence_samples = 50;
        let err = eval_sion(&NoiseParameterization::zeros(3).unwrap(), &spec).unwrap_err();
        assert!(matches!(err, CoreError::Config(_)));
    }

    #[test]
    fn jsd_estimate_matches_1d_quadrature() {
        // P = N(0,1), Q = N(1,1): JS divergence by Simpson quadrature.
        let ln2 = std::f64::consts::LN_2;
        let pdf = |x: f64, mu: f64| (-0.5 * (x - mu) * (x - mu)).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let steps = 200_000;
        let (a, b) = (-12.0f64, 13.0f64);
        let h = (b - a) / steps as f64;
        let integrand = |x: f64| {
            let p = pdf(x, 0.0);
            let q = pdf(x, 1.0);
            let m = 0.5 * (p + q);
            let mut v = 0.0;
            if p > 0.0 {
                v += 0.5 * p * (p / m).ln() / ln2;
            }
            if q > 0.0 {
                v += 0.5 * q * (q / m).ln() / ln2;
            }
            v
        };
        let mut integral = integrand(a) + integrand(b);
        for i in 1..steps {
            let x = a + i as f64 * h;
            integral += if i % 2 == 1 { 4.0 } else { 2.0 } * integrand(x);
        }
        let divergence = integral * h / 3.0;
        let expected = divergence.sqrt();
        let p = VectorDistribution::standard_normal(1).unwrap();
        let q = VectorDistribution::gaussian(vec![1.0], vec![1.0]).unwrap();
        let est = jsd_estimate(&p, &q, 20_000, 5).unwrap();
        assert!(
            (est - expected).abs() < 0.02,
            "estimate {est} vs quadrature {expected}"
        );
    }

    #[test]
    fn jsd_estimate_empirical_proxy_is_sane() {
        let p = VectorDistribution::empirical(
            (0..300).map(|i| vec![(i % 17) as f64 * 0.1]).collect(),
        )
        .unwrap();
        let far = VectorDistribution::empirical(
            (0..300).map(|i| vec![50.0 + (i % 13) as f64 * 0.1]).collect(),
        )
        .unwrap();
        let near = jsd_estimate(&p, &p, 200, 7).unwrap();
        let apart = jsd_estimate(&p, &far, 200, 7).unwrap();
        assert!(near < 0.2, "self-distance {near}");
        assert!(apart > 0.9, "separated distance {apart}");
    }

    fn dion_spec(m: usize) -> ObjectiveSpec {
        let mut spec = ObjectiveSpec::new(
            ObjectiveVariant::Dion,
            VectorDistribution::standard_normal(m).unwrap(),
            19,
        );
        spec.ground_truth_dynamics = Some(rotation_model(m, vec![vec![1.0]]));
        spec.mc_samples = 4000;
        spec.divergence_samples = 2000;
        spec
    }

    #[test]
    fn dion_zero_noise_is_zero() {
        let spec = dion_spec(1);
        let b = eval_dion(&NoiseParameterization::zeros(1).unwrap(), &spec).unwrap();
        assert!(b.primary.abs() < 1e-12);
        assert!(b.penalty.abs() < 1e-6, "penalty {}", b.penalty);
    }

    #[test]
    fn dion_constant_channel_gives_zero_penalty() {
        let mut spec = dion_spec(1);
        spec.ground_truth_dynamics = Some(
            DynamicsModel::new("id", OdaLevel::Alpha, DynamicsKind::Constant { dim: 2 }).unwrap(),
        );
        let b = eval_dion(&mean_shift(1, 0, 2.0), &spec).unwrap();
        assert!(b.penalty.abs() < 1e-9);
    }

    #[test]
    fn dion_penalty_monotone_along_mean_shift_ray() {
        let spec = dion_spec(1);
        let mut last = -1.0;
        for t in [0.2, 0.4, 0.6, 0.8, 1.0] {
            let b = eval_dion(&mean_shift(1, 0, t), &spec).unwrap();
            assert!(
                b.penalty > last,
                "penalty not increasing at t={t}: {} <= {last}",
                b.penalty
            );
            last = b.penalty;
        }
    }

    fn smoa_spec(m: usize, target: Vec<f64>) -> ObjectiveSpec {
        let mut spec = ObjectiveSpec::new(
            ObjectiveVariant::Smoa,
            VectorDistribution::standard_normal(m).unwrap(),
            23,
        );
        spec.attacker_model = Some(softmax_model(identity_rows(m, 1.0)));
        spec.target_distribution = Some(CognitiveDistribution::from_outcome_probs(&target).unwrap());
        spec.mc_samples = 400;
        spec.divergence_samples = 1000;
        spec
    }

    #[test]
    fn smoa_perfect_start_scores_one_at_any_lambda() {
        let m = 2;
        let mut spec = smoa_spec(m, vec![0.25, 0.5, 0.25]);
        // Make the target exactly the attacker's prediction at zero noise.
        let f = spec.attacker_model.clone().unwrap();
        let predicted = predict_readout(&f, &spec.q, spec.mc_samples, spec.seed).unwrap();
        spec.target_distribution =
            Some(CognitiveDistribution::from_outcome_probs(predicted.outcome_probs()).unwrap());
        for lambda in [0.0, 1.0, 25.0] {
            spec.lambda = lambda;
            let b = eval_smoa(&NoiseParameterization::zeros(m).unwrap(), &spec).unwrap();
            assert!((b.objective - 1.0).abs() < 1e-9, "objective {}", b.objective);
        }
    }

    #[test]
    fn smoa_objective_monotone_decreasing_in_lambda() {
        let mut spec = smoa_spec(2, vec![0.2, 0.3, 0.5]);
        let aleph = mean_shift(2, 0, 1.0);
        let mut last = f64::INFINITY;
        for lambda in [0.1, 1.0, 5.0] {
            spec.lambda = lambda;
            let b = eval_smoa(&aleph, &spec).unwrap();
            assert!(b.objective < last);
            last = b.objective;
        }
    }

    fn dmoa_spec(m: usize, phi: UnitaryOperator) -> ObjectiveSpec {
        let mut spec = ObjectiveSpec::new(
            ObjectiveVariant::Dmoa,
            VectorDistribution::standard_normal(m).unwrap(),
            29,
        );
        spec.hypothesis_class = Some(
            HypothesisClass::dynamics(vec![DynamicsModel::new(
                "id",
                OdaLevel::Alpha,
                DynamicsKind::Constant { dim: 2 },
            )
            .unwrap()])
            .unwrap(),
        );
        spec.target_operator = Some(phi);
        spec.mc_samples = 100;
        spec.divergence_samples = 500;
        spec
    }

    #[test]
    fn dmoa_identity_target_attains_one() {
        let eye = UnitaryOperator::new(CMatrix::identity(2, 2)).unwrap();
        let spec = dmoa_spec(1, eye);
        let b = eval_dmoa(&NoiseParameterization::zeros(1).unwrap(), &spec).unwrap();
        assert!((b.primary - 1.0).abs() < 1e-12);
        assert!(b.penalty.abs() < 1e-12);
    }

    #[test]
    fn dmoa_antipodal_target_attains_zero() {
        let neg = UnitaryOperator::new(CMatrix::identity(2, 2).scale(-1.0)).unwrap();
        let mut spec = dmoa_spec(1, neg);
        let b = eval_dmoa(&NoiseParameterization::zeros(1).unwrap(), &spec).unwrap();
        assert!(b.primary.abs() < 1e-12, "closeness {}", b.primary);
        spec.dmoa_orientation = DmoaOrientation::Distance;
        let d = eval_dmoa(&NoiseParameterization::zeros(1).unwrap(), &spec).unwrap();
        assert!((d.primary - 1.0).abs() < 1e-12);
    }

    // --- optimizer engine ---

    fn quadratic_eval(center: Vec<f64>) -> impl Fn(&[f64]) -> Result<EvalBreakdown> + Sync {
        move |theta: &[f64]| {
            let objective = 1.0
                - theta
                    .iter()
                    .zip(&center)
                    .map(|(t, c)| (t - c) * (t - c))
                    .sum::<f64>();
            Ok(EvalBreakdown {
                objective,
                primary: objective,
                penalty: 0.0,
                constraint_slack: 0.0,
                feasible: true,
            })
        }
    }

    #[test]
    fn quadratic_mode_finite_difference_finds_maximizer() {
        let center = vec![0.4, -0.7];
        let result = optimize_function(
            quadratic_eval(center.clone()),
            &[0.0, 0.0],
            &[-2.0, -2.0],
            &[2.0, 2.0],
            &OptimizerConfig {
                strategy: OptimizerStrategy::FiniteDifferenceAscent {
                    step: 1e-4,
                    learning_rate: 0.5,
                    penalty_rho0: 10.0,
                },
                budget: 3000,
                seed: 1,
                threads: 1,
            },
        )
        .unwrap();
        for (t, c) in result.best_theta.iter().zip(&center) {
            assert!((t - c).abs() < 1e-3, "theta {t} vs center {c}");
        }
        assert!(!result.trace.is_empty());
    }

    #[test]
    fn quadratic_mode_evolution_strategy_finds_maximizer() {
        let center = vec![-0.3, 0.9, 0.1];
        let result = optimize_function(
            quadratic_eval(center.clone()),
            &[1.0, -1.0, 1.0],
            &[-2.0, -2.0, -2.0],
            &[2.0, 2.0, 2.0],
            &OptimizerConfig {
                strategy: OptimizerStrategy::EvolutionOnePlusOne { initial_step: 0.3 },
                budget: 6000,
                seed: 2,
                threads: 1,
            },
        )
        .unwrap();
        for (t, c) in result.best_theta.iter().zip(&center) {
            assert!((t - c).abs() < 1e-3, "theta {t} vs center {c}");
        }
    }

    #[test]
    fn random_search_is_thread_invariant_and_reasonable() {
        let center = vec![0.2, 0.5];
        let run = |threads| {
            optimize_function(
                quadratic_eval(center.clone()),
                &[0.0, 0.0],
                &[-1.0, -1.0],
                &[1.0, 1.0],
                &OptimizerConfig {
                    strategy: OptimizerStrategy::RandomSearch,
                    budget: 2000,
                    seed: 3,
                    threads,
                },
            )
            .unwrap()
        };
        let serial = run(1);
        let parallel = run(8);
        assert_eq!(
            serial.breakdown.objective.to_bits(),
            parallel.breakdown.objective.to_bits()
        );
        assert_eq!(serial.best_theta, parallel.best_theta);
        for (t, c) in serial.best_theta.iter().zip(&center) {
            assert!((t - c).abs() < 0.15);
        }
    }

    #[test]
    fn empty_parameter_space_is_an_error() {
        let err = optimize_function(
            quadratic_eval(vec![]),
            &[],
            &[],
            &[],
            &OptimizerConfig {
                strategy: OptimizerStrategy::RandomSearch,
                budget: 10,
                seed: 0,
                threads: 1,
            },
        )
        .unwrap_err();
        assert!(matches!(err, CoreError::Empty(_)));
    }

    #[test]
    fn budget_one_infeasible_start_reports_unsatisfied() {
        let mut spec = sion_spec(3);
        spec.mu = 0.1;
        let space = NoiseSpace::new(NoiseParameterization::zeros(3).unwrap(), 2.0).unwrap();
        let result = optimize(
            &spec,
            &space,
            &OptimizerConfig {
                strategy: OptimizerStrategy::RandomSearch,
                budget: 1,
                seed: 4,
                threads: 1,
            },
        )
        .unwrap();
        assert!(!result.constraint_satisfied);
        assert_eq!(result.evaluations, 1);
        assert!(!result.trace.is_empty());
    }

    // --- ensemble defender ---

    #[test]
    fn ensemble_thresholds_and_union() {
        let m = 4;
        let q = VectorDistribution::standard_normal(m).unwrap();
        let aleph = mean_shift(m, 0, 2.0);
        // Class A: two models reading the shifted coordinate (qualify).
        let a = HypothesisClass::readout(vec![
            softmax_model(identity_rows(m, 1.0)),
            softmax_model(identity_rows(m, 0.8)),
        ])
        .unwrap();
        // Class B: three distinct models, also on the shifted coordinate.
        let b = HypothesisClass::readout(vec![
            softmax_model(identity_rows(m, 0.9)),
            softmax_model(identity_rows(m, 0.7)),
            softmax_model(identity_rows(m, 0.6)),
        ])
        .unwrap();
        // Class C: blind to the shift (reads only coordinate 3).
        let c = HypothesisClass::readout(vec![subset_model(
            vec![vec![0.0], vec![1.0]],
            vec![3],
        )])
        .unwrap();

        let all = ensemble_defender_class(
            &[a.clone(), b.clone(), c.clone()],
            &q,
            &aleph,
            0.05,
            400,
            31,
        )
        .unwrap();
        assert_eq!(all.qualifying, 2);
        assert_eq!(all.class.as_ref().unwrap().len(), 5);

        let none = ensemble_defender_class(&[c.clone()], &q, &aleph, 0.5, 400, 31).unwrap();
        assert!(none.is_empty());

        let single = ensemble_defender_class(&[a.clone(), c], &q, &aleph, 0.05, 400, 31).unwrap();
        assert_eq!(single.qualifying, 1);
        assert_eq!(single.class.unwrap(), a);
    }

    #[test]
    fn choi_state_is_valid_density() {
        let u = UnitaryOperator::new(CMatrix::from_fn(2, 2, |i, j| {
            // Hadamard-like unitary.
            let h = 1.0 / 2.0_f64.sqrt();
            match (i, j) {
                (0, 0) | (0, 1) | (1, 0) => Complex64::new(h, 0.0),
                _ => Complex64::new(-h, 0.0),
            }
        }))
        .unwrap();
        let rho = choi_state(&u).unwrap();
        assert_eq!(rho.dim(), 4);
    }
}
