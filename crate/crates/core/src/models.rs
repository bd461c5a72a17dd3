//! The neural-to-cognitive model zoo: vector distributions over neural
//! states, cognitive outcome distributions, toy readout models `F`, toy
//! dynamics models `G`, hypothesis classes, least-squares/softmax fitting,
//! and the α/β/γ operational-taxonomy metadata.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::divergence::{jsd_classical, LogBase};
use crate::error::{CoreError, Result};
use crate::linalg::{expm_i_hermitian, CMatrix};
use crate::projective::UnitaryOperator;
use crate::rng::derive_stream;
use crate::statedist::DensityMatrix;

/// Version stamp of the serialized model format.
pub const MODEL_FORMAT_VERSION: u32 = 1;

// ---------------------------------------------------------------------------
// Vector distributions
// ---------------------------------------------------------------------------

/// Parameterized distribution over real `m`-vectors: the neural baseline `Q`,
/// noise `ℵ`, and the shifted `Q + ℵ` all use this type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum VectorDistribution {
    GaussianDiagonal { mean: Vec<f64>, scale: Vec<f64> },
    Empirical { samples: Vec<Vec<f64>> },
}

impl VectorDistribution {
    /// Gaussian with the given mean and per-coordinate standard deviations.
    pub fn gaussian(mean: Vec<f64>, scale: Vec<f64>) -> Result<Self> {
        let dist = Self::GaussianDiagonal { mean, scale };
        dist.validate()?;
        Ok(dist)
    }

    /// Standard normal in `m` dimensions.
    pub fn standard_normal(m: usize) -> Result<Self> {
        Self::gaussian(vec![0.0; m], vec![1.0; m])
    }

    /// Deterministic point mass (zero-scale Gaussian) — the representation of
    /// a pure mean-shift noise signal.
    pub fn point_mass(mean: Vec<f64>) -> Result<Self> {
        let scale = vec![0.0; mean.len()];
        Self::gaussian(mean, scale)
    }

    /// Empirical distribution over stored samples.
    pub fn empirical(samples: Vec<Vec<f64>>) -> Result<Self> {
        let dist = Self::Empirical { samples };
        dist.validate()?;
        Ok(dist)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::GaussianDiagonal { mean, scale } => {
                if mean.is_empty() {
                    return Err(CoreError::Empty("gaussian mean".into()));
                }
                if mean.len() != scale.len() {
                    return Err(CoreError::DimensionMismatch(format!(
                        "mean length {} vs scale length {}",
                        mean.len(),
                        scale.len()
                    )));
                }
                if scale.iter().any(|&s| s < 0.0 || !s.is_finite()) {
                    return Err(CoreError::Validation("negative gaussian scale".into()));
                }
            }
            Self::Empirical { samples } => {
                let first = samples
                    .first()
                    .ok_or_else(|| CoreError::Empty("empirical sample set".into()))?;
                if first.is_empty() || samples.iter().any(|s| s.len() != first.len()) {
                    return Err(CoreError::DimensionMismatch(
                        "empirical samples of unequal length".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::GaussianDiagonal { mean, .. } => mean.len(),
            Self::Empirical { samples } => samples[0].len(),
        }
    }

    /// Draw one sample.
    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        match self {
            Self::GaussianDiagonal { mean, scale } => mean
                .iter()
                .zip(scale)
                .map(|(&m, &s)| m + s * rng.sample::<f64, _>(StandardNormal))
                .collect(),
            Self::Empirical { samples } => samples[rng.gen_range(0..samples.len())].clone(),
        }
    }

    /// Pointwise log-density (Gaussian kind only; zero-scale coordinates are
    /// skipped — they contribute a common constant to density ratios).
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        match self {
            Self::GaussianDiagonal { mean, scale } => {
                if x.len() != mean.len() {
                    return Err(CoreError::DimensionMismatch(
                        "point dimension differs from distribution".into(),
                    ));
                }
                let mut acc = 0.0;
                for ((&xi, &mi), &si) in x.iter().zip(mean).zip(scale) {
                    if si > 0.0 {
                        let z = (xi - mi) / si;
                        acc += -0.5 * z * z - si.ln() - 0.5 * (std::f64::consts::TAU).ln();
                    }
                }
                Ok(acc)
            }
            Self::Empirical { .. } => Err(CoreError::Validation(
                "log_density undefined for empirical distributions".into(),
            )),
        }
    }

    /// Mean vector (exact for Gaussian, sample mean for empirical).
    pub fn mean(&self) -> Vec<f64> {
        match self {
            Self::GaussianDiagonal { mean, .. } => mean.clone(),
            Self::Empirical { samples } => {
                let m = samples[0].len();
                let mut acc = vec![0.0; m];
                for s in samples {
                    for (a, &v) in acc.iter_mut().zip(s) {
                        *a += v;
                    }
                }
                acc.iter_mut().for_each(|a| *a /= samples.len() as f64);
                acc
            }
        }
    }
}

/// The distribution of `Q + ℵ` for independent `Q` and `ℵ`.
///
/// Gaussian + Gaussian convolves in closed form (means add, variances add).
/// Any combination involving an empirical distribution becomes an empirical
/// set of pairwise sums with seeded pairing.
pub fn shift_distribution(
    q: &VectorDistribution,
    aleph: &VectorDistribution,
    seed: u64,
) -> Result<VectorDistribution> {
    if q.dim() != aleph.dim() {
        return Err(CoreError::DimensionMismatch(format!(
            "distribution dimensions {} vs {}",
            q.dim(),
            aleph.dim()
        )));
    }
    use VectorDistribution::*;
    match (q, aleph) {
        (
            GaussianDiagonal { mean: m1, scale: s1 },
            GaussianDiagonal { mean: m2, scale: s2 },
        ) => VectorDistribution::gaussian(
            m1.iter().zip(m2).map(|(a, b)| a + b).collect(),
            s1.iter()
                .zip(s2)
                .map(|(a, b)| (a * a + b * b).sqrt())
                .collect(),
        ),
        _ => {
            let count = match (q, aleph) {
                (Empirical { samples: a }, Empirical { samples: b }) => a.len().max(b.len()),
                (Empirical { samples }, _) | (_, Empirical { samples }) => samples.len(),
                _ => unreachable!(),
            };
            let mut rng = derive_stream(seed, "shift-distribution", 0);
            let sums = (0..count)
                .map(|_| {
                    let x = q.sample(&mut rng);
                    let y = aleph.sample(&mut rng);
                    x.iter().zip(&y).map(|(a, b)| a + b).collect()
                })
                .collect();
            VectorDistribution::empirical(sums)
        }
    }
}

// ---------------------------------------------------------------------------
// Cognitive distributions
// ---------------------------------------------------------------------------

/// Distribution over a `K`-outcome cogit basis: a density matrix plus its
/// diagonal outcome probabilities.
#[derive(Clone, Debug)]
pub struct CognitiveDistribution {
    density: DensityMatrix,
    outcome_probs: Vec<f64>,
}

impl CognitiveDistribution {
    pub fn new(density: DensityMatrix) -> Result<Self> {
        if density.dim() < 2 {
            return Err(CoreError::Validation("K must be >= 2".into()));
        }
        let outcome_probs = density.diagonal_probabilities();
        Ok(Self {
            density,
            outcome_probs,
        })
    }

    /// Diagonal cognitive distribution from outcome probabilities.
    pub fn from_outcome_probs(probs: &[f64]) -> Result<Self> {
        Self::new(DensityMatrix::from_probabilities(probs)?)
    }

    pub fn density(&self) -> &DensityMatrix {
        &self.density
    }

    pub fn outcome_probs(&self) -> &[f64] {
        &self.outcome_probs
    }

    pub fn k(&self) -> usize {
        self.outcome_probs.len()
    }
}

// ---------------------------------------------------------------------------
// Readout models
// ---------------------------------------------------------------------------

/// Operational provenance of a model: population-level (α), similar-group
/// (β), or single-individual (γ). Metadata only — it never changes the math.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OdaLevel {
    Alpha,
    Beta,
    Gamma,
}

/// Concrete toy readout families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ReadoutKind {
    /// `probs ∝ exp(W x)`, `W` is `K × m`.
    LinearSoftmax { weights: Vec<Vec<f64>> },
    /// Linear softmax restricted to a feature subset: `W` is `K × |subset|`.
    SubsetSoftmax {
        weights: Vec<Vec<f64>>,
        subset: Vec<usize>,
    },
    /// Hard nearest-centroid assignment, one centroid per outcome.
    NearestCentroid { centroids: Vec<Vec<f64>> },
    /// Input-independent fixed distribution.
    Constant { probs: Vec<f64> },
}

/// A neural-to-cognitive readout map `F` with identity and taxonomy tag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutModel {
    pub identity: String,
    pub oda_level: OdaLevel,
    pub kind: ReadoutKind,
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / total).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl ReadoutModel {
    pub fn new(identity: impl Into<String>, oda_level: OdaLevel, kind: ReadoutKind) -> Result<Self> {
        let model = Self {
            identity: identity.into(),
            oda_level,
            kind,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            ReadoutKind::LinearSoftmax { weights } | ReadoutKind::SubsetSoftmax { weights, .. } => {
                let first = weights
                    .first()
                    .ok_or_else(|| CoreError::Empty("softmax weights".into()))?;
                if weights.len() < 2 {
                    return Err(CoreError::Validation("need K >= 2 outcomes".into()));
                }
                if weights.iter().any(|row| row.len() != first.len()) {
                    return Err(CoreError::DimensionMismatch("ragged weight rows".into()));
                }
                if let ReadoutKind::SubsetSoftmax { weights, subset } = &self.kind {
                    if subset.is_empty() || subset.len() != weights[0].len() {
                        return Err(CoreError::DimensionMismatch(
                            "subset size must match weight columns".into(),
                        ));
                    }
                }
            }
            ReadoutKind::NearestCentroid { centroids } => {
                let first = centroids
                    .first()
                    .ok_or_else(|| CoreError::Empty("centroids".into()))?;
                if centroids.len() < 2 || centroids.iter().any(|c| c.len() != first.len()) {
                    return Err(CoreError::Validation("need >= 2 equal-length centroids".into()));
                }
            }
            ReadoutKind::Constant { probs } => {
                crate::divergence::validate_probability_vector(probs)?;
            }
        }
        Ok(())
    }

    /// Number of cognitive outcomes `K`.
    pub fn k(&self) -> usize {
        match &self.kind {
            ReadoutKind::LinearSoftmax { weights }
            | ReadoutKind::SubsetSoftmax { weights, .. } => weights.len(),
            ReadoutKind::NearestCentroid { centroids } => centroids.len(),
            ReadoutKind::Constant { probs } => probs.len(),
        }
    }

    /// The feature subset this model reads, when restricted.
    pub fn feature_subset(&self) -> Option<&[usize]> {
        match &self.kind {
            ReadoutKind::SubsetSoftmax { subset, .. } => Some(subset),
            _ => None,
        }
    }

    /// Input dimension the model requires, if any (Constant accepts all).
    pub fn input_dim(&self) -> Option<usize> {
        match &self.kind {
            ReadoutKind::LinearSoftmax { weights } => Some(weights[0].len()),
            ReadoutKind::SubsetSoftmax { subset, .. } => {
                subset.iter().max().map(|&m| m + 1)
            }
            ReadoutKind::NearestCentroid { centroids } => Some(centroids[0].len()),
            ReadoutKind::Constant { .. } => None,
        }
    }

    /// Outcome probabilities for a single neural sample.
    pub fn predict_sample(&self, x: &[f64]) -> Result<Vec<f64>> {
        match &self.kind {
            ReadoutKind::LinearSoftmax { weights } => {
                if x.len() != weights[0].len() {
                    return Err(CoreError::DimensionMismatch(format!(
                        "input dim {} vs weights {}",
                        x.len(),
                        weights[0].len()
                    )));
                }
                let logits: Vec<f64> = weights.iter().map(|row| dot(row, x)).collect();
                Ok(softmax(&logits))
            }
            ReadoutKind::SubsetSoftmax { weights, subset } => {
                if subset.iter().any(|&i| i >= x.len()) {
                    return Err(CoreError::DimensionMismatch(
                        "feature subset exceeds input dimension".into(),
                    ));
                }
                let restricted: Vec<f64> = subset.iter().map(|&i| x[i]).collect();
                let logits: Vec<f64> = weights.iter().map(|row| dot(row, &restricted)).collect();
                Ok(softmax(&logits))
            }
            ReadoutKind::NearestCentroid { centroids } => {
                if x.len() != centroids[0].len() {
                    return Err(CoreError::DimensionMismatch(
                        "input dim differs from centroid dim".into(),
                    ));
                }
                let mut best = 0usize;
                let mut best_d = f64::INFINITY;
                for (i, c) in centroids.iter().enumerate() {
                    let d: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
                    if d < best_d {
                        best_d = d;
                        best = i;
                    }
                }
                let mut probs = vec![0.0; centroids.len()];
                probs[best] = 1.0;
                Ok(probs)
            }
            ReadoutKind::Constant { probs } => Ok(probs.clone()),
        }
    }
}

/// Monte Carlo prediction of the cognitive distribution `F(Q)`: the average
/// of per-sample outcome probabilities over `samples` seeded draws from `Q`.
/// Deterministic given `(F, Q, samples, seed)`; sampling uses common random
/// numbers (the same underlying standard-normal draws for every `Q` of equal
/// dimension), which makes downstream objectives smooth in distribution
/// parameters.
pub fn predict_readout(
    f: &ReadoutModel,
    q: &VectorDistribution,
    samples: u64,
    seed: u64,
) -> Result<CognitiveDistribution> {
    q.validate()?;
    if let Some(required) = f.input_dim() {
        let ok = match &f.kind {
            ReadoutKind::SubsetSoftmax { .. } => q.dim() >= required,
            _ => q.dim() == required,
        };
        if !ok {
            return Err(CoreError::DimensionMismatch(format!(
                "model requires input dim {required}, distribution has {}",
                q.dim()
            )));
        }
    }
    if samples == 0 {
        return Err(CoreError::Config("samples must be >= 1".into()));
    }
    let mut rng = derive_stream(seed, "predict-readout", 0);
    let mut acc = vec![0.0; f.k()];
    for _ in 0..samples {
        let x = q.sample(&mut rng);
        let probs = f.predict_sample(&x)?;
        for (a, p) in acc.iter_mut().zip(&probs) {
            *a += p;
        }
    }
    acc.iter_mut().for_each(|a| *a /= samples as f64);
    // Guard against round-off before the validator sees it.
    let total: f64 = acc.iter().sum();
    acc.iter_mut().for_each(|a| *a /= total);
    CognitiveDistribution::from_outcome_probs(&acc)
}

/// Normalized model-dissimilarity `S`: base-2 JS distance between the
/// predicted outcome distributions of `F(Q)` and `F(Q2)`.
pub fn model_dissimilarity_s(
    f: &ReadoutModel,
    q: &VectorDistribution,
    q2: &VectorDistribution,
    samples: u64,
    seed: u64,
) -> Result<f64> {
    let a = predict_readout(f, q, samples, seed)?;
    let b = predict_readout(f, q2, samples, seed)?;
    jsd_classical(a.outcome_probs(), b.outcome_probs(), LogBase::Two)
}

// ---------------------------------------------------------------------------
// Dynamics models
// ---------------------------------------------------------------------------

/// Concrete toy dynamics families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum DynamicsKind {
    /// Generator `H(x) = Σ_k (w_k · x) B_k` over a fixed Hermitian basis,
    /// exponentiated to `U = exp(i H)`. `weights` is `k × m`.
    Rotation { weights: Vec<Vec<f64>>, dim: usize },
    /// Zero generator: the identity operator regardless of input.
    Constant { dim: usize },
}

/// A neural-to-dynamics map `G` with identity and taxonomy tag. Outputs are
/// unitary by construction (exponential of a Hermitian generator).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicsModel {
    pub identity: String,
    pub oda_level: OdaLevel,
    pub kind: DynamicsKind,
}

/// Deterministic Hermitian basis element `k` in dimension `d`: the real
/// symmetric pair couplers `(E_ab + E_ba)` for a < b, then the imaginary
/// antisymmetric couplers `i(E_ab − E_ba)`, then the diagonal elements.
pub fn hermitian_basis_element(d: usize, k: usize) -> Result<CMatrix> {
    let pairs = d * (d - 1) / 2;
    let total = 2 * pairs + d;
    if k >= total {
        return Err(CoreError::Validation(format!(
            "basis index {k} exceeds {total} elements at dim {d}"
        )));
    }
    let mut m = CMatrix::zeros(d, d);
    if k < pairs || k < 2 * pairs {
        // Decode the (a, b) pair for index k mod pairs.
        let mut idx = k % pairs;
        let mut a = 0usize;
        let mut row_len = d - 1;
        while idx >= row_len {
            idx -= row_len;
            a += 1;
            row_len -= 1;
        }
        let b = a + 1 + idx;
        if k < pairs {
            m[(a, b)] = Complex64::new(1.0, 0.0);
            m[(b, a)] = Complex64::new(1.0, 0.0);
        } else {
            m[(a, b)] = Complex64::new(0.0, 1.0);
            m[(b, a)] = Complex64::new(0.0, -1.0);
        }
    } else {
        let i = k - 2 * pairs;
        m[(i, i)] = Complex64::new(1.0, 0.0);
    }
    Ok(m)
}

impl DynamicsModel {
    pub fn new(identity: impl Into<String>, oda_level: OdaLevel, kind: DynamicsKind) -> Result<Self> {
        let model = Self {
            identity: identity.into(),
            oda_level,
            kind,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            DynamicsKind::Rotation { weights, dim } => {
                if *dim < 2 {
                    return Err(CoreError::Validation("dynamics dim must be >= 2".into()));
                }
                let first = weights
                    .first()
                    .ok_or_else(|| CoreError::Empty("rotation weights".into()))?;
                if weights.iter().any(|w| w.len() != first.len()) {
                    return Err(CoreError::DimensionMismatch("ragged weight rows".into()));
                }
                let budget = 2 * (dim * (dim - 1) / 2) + dim;
                if weights.len() > budget {
                    return Err(CoreError::Validation(format!(
                        "{} generator weights exceed basis size {budget}",
                        weights.len()
                    )));
                }
            }
            DynamicsKind::Constant { dim } => {
                if *dim < 2 {
                    return Err(CoreError::Validation("dynamics dim must be >= 2".into()));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            DynamicsKind::Rotation { dim, .. } | DynamicsKind::Constant { dim } => *dim,
        }
    }

    /// Hermitian generator for a single neural sample.
    pub fn generator(&self, x: &[f64]) -> Result<CMatrix> {
        match &self.kind {
            DynamicsKind::Rotation { weights, dim } => {
                let mut h = CMatrix::zeros(*dim, *dim);
                for (k, w) in weights.iter().enumerate() {
                    if w.len() != x.len() {
                        return Err(CoreError::DimensionMismatch(format!(
                            "weight row length {} vs input {}",
                            w.len(),
                            x.len()
                        )));
                    }
                    let coeff = dot(w, x);
                    h += hermitian_basis_element(*dim, k)?.scale(coeff);
                }
                Ok(h)
            }
            DynamicsKind::Constant { dim } => Ok(CMatrix::zeros(*dim, *dim)),
        }
    }

    /// Unitary for a single neural sample: `exp(i H(x))`.
    pub fn unitary(&self, x: &[f64]) -> Result<UnitaryOperator> {
        UnitaryOperator::new(expm_i_hermitian(&self.generator(x)?)?)
    }
}

/// Monte Carlo dynamics prediction: the unitary from the mean generator over
/// `samples` seeded draws. Unitary within 1e-10 by construction.
pub fn predict_dynamics(
    g: &DynamicsModel,
    q: &VectorDistribution,
    samples: u64,
    seed: u64,
) -> Result<UnitaryOperator> {
    q.validate()?;
    if samples == 0 {
        return Err(CoreError::Config("samples must be >= 1".into()));
    }
    let mut rng = derive_stream(seed, "predict-dynamics", 0);
    let d = g.dim();
    let mut acc = CMatrix::zeros(d, d);
    for _ in 0..samples {
        let x = q.sample(&mut rng);
        acc += g.generator(&x)?;
    }
    acc /= Complex64::new(samples as f64, 0.0);
    UnitaryOperator::new(expm_i_hermitian(&acc)?)
}

/// Per-sample unitaries under common random numbers, for expectation-style
/// operator statistics.
pub fn sample_dynamics_operators(
    g: &DynamicsModel,
    q: &VectorDistribution,
    samples: u64,
    seed: u64,
) -> Result<Vec<UnitaryOperator>> {
    q.validate()?;
    if samples == 0 {
        return Err(CoreError::Config("samples must be >= 1".into()));
    }
    let mut rng = derive_stream(seed, "predict-dynamics", 0);
    (0..samples).map(|_| g.unitary(&q.sample(&mut rng))).collect()
}

// ---------------------------------------------------------------------------
// Hypothesis classes
// ---------------------------------------------------------------------------

/// Finite, non-empty, homogeneous set of candidate models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "member-kind", rename_all = "kebab-case")]
pub enum HypothesisClass {
    Readout { members: Vec<ReadoutModel> },
    Dynamics { members: Vec<DynamicsModel> },
}

impl HypothesisClass {
    pub fn readout(members: Vec<ReadoutModel>) -> Result<Self> {
        if members.is_empty() {
            return Err(CoreError::Empty("hypothesis class".into()));
        }
        Ok(Self::Readout { members })
    }

    pub fn dynamics(members: Vec<DynamicsModel>) -> Result<Self> {
        if members.is_empty() {
            return Err(CoreError::Empty("hypothesis class".into()));
        }
        Ok(Self::Dynamics { members })
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Readout { members } => members.len(),
            Self::Dynamics { members } => members.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

/// Which toy family to fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitKind {
    LinearSoftmax,
    NearestCentroid,
}

/// Result of [`fit_readout`]: the fitted model, its training accuracy, and
/// whether a degenerate single-class dataset forced a constant model.
#[derive(Clone, Debug)]
pub struct FitReport {
    pub model: ReadoutModel,
    pub training_accuracy: f64,
    pub constant_fallback: bool,
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Fit a toy readout model on labelled `(neural vector, outcome)` pairs.
/// Deterministic: zero initialization and fixed-schedule full-batch gradient
/// descent for the softmax family; closed-form means for centroids.
pub fn fit_readout(
    kind: FitKind,
    dataset: &[(Vec<f64>, usize)],
    oda_level: OdaLevel,
) -> Result<FitReport> {
    let first = dataset
        .first()
        .ok_or_else(|| CoreError::Empty("training dataset".into()))?;
    let m = first.0.len();
    if m == 0 || dataset.iter().any(|(x, _)| x.len() != m) {
        return Err(CoreError::DimensionMismatch(
            "training vectors of unequal length".into(),
        ));
    }
    let k = dataset.iter().map(|&(_, y)| y).max().unwrap() + 1;
    let classes: std::collections::BTreeSet<usize> =
        dataset.iter().map(|&(_, y)| y).collect();
    if classes.len() < 2 {
        // Degenerate dataset: constant model flagged.
        let only = *classes.iter().next().unwrap();
        let k = (only + 1).max(2);
        let mut probs = vec![0.0; k];
        probs[only] = 1.0;
        let model = ReadoutModel::new(
            "constant-fallback",
            oda_level,
            ReadoutKind::Constant { probs },
        )?;
        return Ok(FitReport {
            model,
            training_accuracy: 1.0,
            constant_fallback: true,
        });
    }

    let model = match kind {
        FitKind::NearestCentroid => {
            let mut centroids = vec![vec![0.0; m]; k];
            let mut counts = vec![0usize; k];
            for (x, y) in dataset {
                counts[*y] += 1;
                for (c, &v) in centroids[*y].iter_mut().zip(x) {
                    *c += v;
                }
            }
            for (c, &n) in centroids.iter_mut().zip(&counts) {
                if n > 0 {
                    c.iter_mut().for_each(|v| *v /= n as f64);
                }
            }
            ReadoutModel::new(
                "fitted-nearest-centroid",
                oda_level,
                ReadoutKind::NearestCentroid { centroids },
            )?
        }
        FitKind::LinearSoftmax => {
            // Full-batch gradient descent on multinomial cross-entropy.
            let mut w = vec![vec![0.0; m]; k];
            let n = dataset.len() as f64;
            let lr = 0.5;
            for _ in 0..400 {
                let mut grad = vec![vec![0.0; m]; k];
                for (x, y) in dataset {
                    let logits: Vec<f64> = w.iter().map(|row| dot(row, x)).collect();
                    let probs = softmax(&logits);
                    for (c, p) in probs.iter().enumerate() {
                        let err = p - f64::from(u8::from(c == *y));
                        for (g, &xi) in grad[c].iter_mut().zip(x) {
                            *g += err * xi / n;
                        }
                    }
                }
                for (wr, gr) in w.iter_mut().zip(&grad) {
                    for (wv, gv) in wr.iter_mut().zip(gr) {
                        *wv -= lr * gv;
                    }
                }
            }
            ReadoutModel::new(
                "fitted-linear-softmax",
                oda_level,
                ReadoutKind::LinearSoftmax { weights: w },
            )?
        }
    };

    let correct = dataset
        .iter()
        .filter(|(x, y)| argmax(&model.predict_sample(x).unwrap()) == *y)
        .count();
    Ok(FitReport {
        training_accuracy: correct as f64 / dataset.len() as f64,
        model,
        constant_fallback: false,
    })
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// Versioned wrapper for model parameter files (human-readable JSON;
/// round-trips parameters bit-exactly).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VersionedModel<T> {
    pub version: u32,
    pub model: T,
}

/// Serialize a model with the current format version.
pub fn serialize_model<T: Serialize>(model: &T) -> Result<String> {
    serde_json::to_string_pretty(&VersionedModel {
        version: MODEL_FORMAT_VERSION,
        model,
    })
    .map_err(|e| CoreError::Validation(format!("serialization failed: {e}")))
}

/// Parse a versioned model file, rejecting unknown versions.
pub fn deserialize_model<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    let wrapper: VersionedModel<T> = serde_json::from_str(text)
        .map_err(|e| CoreError::Validation(format!("deserialization failed: {e}")))?;
    if wrapper.version != MODEL_FORMAT_VERSION {
        return Err(CoreError::Validation(format!(
            "unsupported model format version {}",
            wrapper.version
        )));
    }
    Ok(wrapper.model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::operator_norm;
    use approx::assert_abs_diff_eq;

    #[test]
    fn shift_gaussian_convolution() {
        let q = VectorDistribution::gaussian(vec![1.0, 2.0], vec![1.0, 2.0]).unwrap();
        let aleph = VectorDistribution::gaussian(vec![0.5, -1.0], vec![2.0, 1.0]).unwrap();
        let shifted = shift_distribution(&q, &aleph, 0).unwrap();
        match shifted {
            VectorDistribution::GaussianDiagonal { mean, scale } => {
                assert_abs_diff_eq!(mean[0], 1.5);
                assert_abs_diff_eq!(mean[1], 1.0);
                assert_abs_diff_eq!(scale[0], 5.0f64.sqrt(), epsilon = 1e-12);
                assert_abs_diff_eq!(scale[1], 5.0f64.sqrt(), epsilon = 1e-12);
            }
            _ => panic!("expected gaussian"),
        }
        // Zero noise leaves Q unchanged.
        let zero = VectorDistribution::point_mass(vec![0.0, 0.0]).unwrap();
        assert_eq!(shift_distribution(&q, &zero, 0).unwrap(), q);
    }

    #[test]
    fn shift_empirical_moments() {
        let mut rng = crate::rng::derive_stream(50, "shift-emp", 0);
        let samples: Vec<Vec<f64>> = (0..10_000)
            .map(|_| vec![2.0 + rng.sample::<f64, _>(StandardNormal)])
            .collect();
        let q = VectorDistribution::empirical(samples).unwrap();
        let aleph = VectorDistribution::gaussian(vec![3.0], vec![0.5]).unwrap();
        let shifted = shift_distribution(&q, &aleph, 7).unwrap();
        let mean = shifted.mean()[0];
        // SE of the mean about sqrt(1 + .25)/100 ~ 0.011.
        assert!((mean - 5.0).abs() < 0.05, "mean {mean}");
    }

    #[test]
    fn constant_and_subset_readouts() {
        let c = ReadoutModel::new(
            "const",
            OdaLevel::Alpha,
            ReadoutKind::Constant {
                probs: vec![0.25, 0.75],
            },
        )
        .unwrap();
        let q = VectorDistribution::standard_normal(3).unwrap();
        let pred = predict_readout(&c, &q, 100, 1).unwrap();
        assert_abs_diff_eq!(pred.outcome_probs()[1], 0.75, epsilon = 1e-12);

        // Subset models ignore off-subset perturbations exactly.
        let sub = ReadoutModel::new(
            "subset",
            OdaLevel::Beta,
            ReadoutKind::SubsetSoftmax {
                weights: vec![vec![1.0, -1.0], vec![-1.0, 1.0]],
                subset: vec![0, 1],
            },
        )
        .unwrap();
        let q8 = VectorDistribution::standard_normal(8).unwrap();
        let mut off_mean = vec![0.0; 8];
        off_mean[7] = 5.0;
        let q8_shift = shift_distribution(
            &q8,
            &VectorDistribution::point_mass(off_mean).unwrap(),
            0,
        )
        .unwrap();
        let s = model_dissimilarity_s(&sub, &q8, &q8_shift, 500, 3).unwrap();
        assert!(s < 1e-9, "subset model saw off-subset noise: {s}");
    }

    #[test]
    fn linear_softmax_argmax_tracks_concentration() {
        let w = vec![vec![4.0, 0.0], vec![-4.0, 0.0]];
        let f = ReadoutModel::new(
            "lin",
            OdaLevel::Gamma,
            ReadoutKind::LinearSoftmax { weights: w },
        )
        .unwrap();
        let q = VectorDistribution::gaussian(vec![1.5, 0.0], vec![0.2, 0.2]).unwrap();
        let pred = predict_readout(&f, &q, 400, 5).unwrap();
        assert_eq!(argmax(pred.outcome_probs()), 0);
    }

    #[test]
    fn predict_determinism() {
        let f = ReadoutModel::new(
            "lin",
            OdaLevel::Alpha,
            ReadoutKind::LinearSoftmax {
                weights: vec![vec![1.0, 0.5], vec![-0.5, 1.0]],
            },
        )
        .unwrap();
        let q = VectorDistribution::standard_normal(2).unwrap();
        let a = predict_readout(&f, &q, 300, 11).unwrap();
        let b = predict_readout(&f, &q, 300, 11).unwrap();
        assert_eq!(a.outcome_probs(), b.outcome_probs());
        let c = predict_readout(&f, &q, 300, 12).unwrap();
        assert_ne!(a.outcome_probs(), c.outcome_probs());
    }

    #[test]
    fn dynamics_norm_bounds() {
        let g = DynamicsModel::new(
            "rot",
            OdaLevel::Alpha,
            DynamicsKind::Rotation {
                weights: vec![vec![1.0, 0.0], vec![0.0, 0.7]],
                dim: 4,
            },
        )
        .unwrap();
        let mut rng = crate::rng::derive_stream(51, "dyn-bounds", 0);
        for i in 0..100 {
            let q = VectorDistribution::gaussian(
                vec![rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0],
                vec![0.5, 0.5],
            )
            .unwrap();
            let noise = VectorDistribution::point_mass(vec![
                rng.gen::<f64>() * 4.0 - 2.0,
                rng.gen::<f64>() * 4.0 - 2.0,
            ])
            .unwrap();
            let u = predict_dynamics(&g, &q, 50, i).unwrap();
            assert_abs_diff_eq!(operator_norm(u.matrix()), 1.0, epsilon = 1e-9);
            let shifted = shift_distribution(&q, &noise, i).unwrap();
            let v = predict_dynamics(&g, &shifted, 50, i).unwrap();
            let diff = operator_norm(&(u.matrix() - v.matrix()));
            assert!((0.0..=2.0 + 1e-9).contains(&diff), "norm diff {diff}");
        }
        // Zero-parameter model -> identity.
        let id = DynamicsModel::new("const", OdaLevel::Beta, DynamicsKind::Constant { dim: 3 })
            .unwrap();
        let q = VectorDistribution::standard_normal(2).unwrap();
        let u = predict_dynamics(&id, &q, 10, 0).unwrap();
        assert!(
            (u.matrix() - CMatrix::identity(3, 3))
                .iter()
                .all(|z| z.norm() < 1e-12)
        );
    }

    #[test]
    fn hermitian_basis_is_hermitian_and_distinct() {
        let d = 4;
        let total = 2 * (d * (d - 1) / 2) + d;
        let mut seen: Vec<CMatrix> = Vec::new();
        for k in 0..total {
            let b = hermitian_basis_element(d, k).unwrap();
            assert!(crate::linalg::hermitian_deviation(&b) < 1e-15);
            for other in &seen {
                let overlap: Complex64 = b
                    .iter()
                    .zip(other.iter())
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                assert!(overlap.norm() < 1e-12, "basis elements not orthogonal");
            }
            seen.push(b);
        }
        assert!(hermitian_basis_element(d, total).is_err());
    }

    #[test]
    fn fitting_separable_and_degenerate() {
        // Linearly separable two-class set.
        let mut dataset = Vec::new();
        for i in 0..40 {
            let t = i as f64 / 10.0;
            dataset.push((vec![1.0 + t, 0.0], 0));
            dataset.push((vec![-1.0 - t, 0.1], 1));
        }
        let report = fit_readout(FitKind::LinearSoftmax, &dataset, OdaLevel::Gamma).unwrap();
        assert_abs_diff_eq!(report.training_accuracy, 1.0);
        assert!(!report.constant_fallback);
        let report_nc = fit_readout(FitKind::NearestCentroid, &dataset, OdaLevel::Gamma).unwrap();
        assert_abs_diff_eq!(report_nc.training_accuracy, 1.0);

        // Refit determinism (bitwise-equal parameters).
        let again = fit_readout(FitKind::LinearSoftmax, &dataset, OdaLevel::Gamma).unwrap();
        assert_eq!(report.model, again.model);

        // Single-class dataset -> constant fallback flagged.
        let degenerate: Vec<(Vec<f64>, usize)> =
            (0..5).map(|i| (vec![i as f64], 1)).collect();
        let fallback = fit_readout(FitKind::LinearSoftmax, &degenerate, OdaLevel::Alpha).unwrap();
        assert!(fallback.constant_fallback);
        assert!(matches!(
            fallback.model.kind,
            ReadoutKind::Constant { .. }
        ));
    }

    #[test]
    fn model_serialization_round_trip() {
        let f = ReadoutModel::new(
            "demo",
            OdaLevel::Beta,
            ReadoutKind::LinearSoftmax {
                weights: vec![vec![0.1234567890123456789, -7.5], vec![3.25, 1e-17]],
            },
        )
        .unwrap();
        let text = serialize_model(&f).unwrap();
        let back: ReadoutModel = deserialize_model(&text).unwrap();
        assert_eq!(f, back);
        // Bit-exactness of parameters.
        match (&f.kind, &back.kind) {
            (
                ReadoutKind::LinearSoftmax { weights: a },
                ReadoutKind::LinearSoftmax { weights: b },
            ) => {
                for (ra, rb) in a.iter().zip(b) {
                    for (x, y) in ra.iter().zip(rb) {
                        assert_eq!(x.to_bits(), y.to_bits());
                    }
                }
            }
            _ => panic!("kind changed"),
        }
        // Unknown version rejected.
        let bad = text.replace("\"version\": 1", "\"version\": 99");
        assert!(deserialize_model::<ReadoutModel>(&bad).is_err());
    }

    #[test]
    fn hypothesis_class_invariants() {
        assert!(HypothesisClass::readout(vec![]).is_err());
        let c = ReadoutModel::new(
            "c",
            OdaLevel::Alpha,
            ReadoutKind::Constant {
                probs: vec![0.5, 0.5],
            },
        )
        .unwrap();
        let class = HypothesisClass::readout(vec![c]).unwrap();
        assert_eq!(class.len(), 1);
    }
}
