//! Fidelity and normalized Bures distance statistics of random projective
//! states: pure/mixed fidelity, the published CDF formulas alongside their
//! corrected Beta-law counterparts, Haar sampling, and the Monte Carlo
//! adjudication between them.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::linalg::{
    hermitian_deviation, hermitian_eigen, CMatrix, CVector, EIGENVALUE_CLIP,
};
use crate::projective::DenseState;
use crate::rng::run_seeded_tasks;

// ---------------------------------------------------------------------------
// Density matrices
// ---------------------------------------------------------------------------

/// Hermitian, trace-1, positive-semidefinite `D × D` matrix.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    entries: CMatrix,
}

impl DensityMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(CoreError::DimensionMismatch(
                "density matrix must be square".into(),
            ));
        }
        if hermitian_deviation(&entries) > 1e-10 {
            return Err(CoreError::Validation(
                "density matrix not Hermitian within 1e-10".into(),
            ));
        }
        let trace = entries.trace();
        if (trace.re - 1.0).abs() > 1e-10 || trace.im.abs() > 1e-10 {
            return Err(CoreError::Validation(format!(
                "density matrix trace {trace} differs from 1"
            )));
        }
        let (values, _) = hermitian_eigen(&entries)?;
        if values.iter().any(|&v| v < -EIGENVALUE_CLIP) {
            return Err(CoreError::Validation(format!(
                "density matrix has negative eigenvalue {:.3e}",
                values.iter().cloned().fold(f64::INFINITY, f64::min)
            )));
        }
        Ok(Self { entries })
    }

    /// Rank-1 projector `|ψ⟩⟨ψ|`.
    pub fn from_pure(psi: &DenseState) -> Result<Self> {
        let v = psi.amplitudes();
        let mat = CMatrix::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj());
        Self::new(mat)
    }

    /// Diagonal density matrix from a probability vector.
    pub fn from_probabilities(probs: &[f64]) -> Result<Self> {
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|&p| !(0.0..=1.0 + 1e-10).contains(&p)) || (total - 1.0).abs() > 1e-9
        {
            return Err(CoreError::Validation(
                "probabilities must be in [0,1] and sum to 1".into(),
            ));
        }
        let d = probs.len();
        let mat = CMatrix::from_fn(d, d, |i, j| {
            if i == j {
                Complex64::new(probs[i] / total, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self::new(mat)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    /// Diagonal (outcome probabilities in the computational basis).
    pub fn diagonal_probabilities(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.entries[(i, i)].re.max(0.0))
            .collect()
    }

    /// Convex mixture `w ρ + (1−w) σ`.
    pub fn mix(rho: &Self, sigma: &Self, w: f64) -> Result<Self> {
        if rho.dim() != sigma.dim() {
            return Err(CoreError::DimensionMismatch(
                "mixing density matrices of different dimension".into(),
            ));
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(CoreError::Validation(format!("mixture weight {w}")));
        }
        Self::new(rho.entries.scale(w) + sigma.entries.scale(1.0 - w))
    }
}

// ---------------------------------------------------------------------------
// Fidelity and Bures distance
// ---------------------------------------------------------------------------

/// Pure-state fidelity `Fi = |⟨ψ|φ⟩|²`.
pub fn fidelity_pure(psi: &DenseState, phi: &DenseState) -> Result<f64> {
    if psi.dim() != phi.dim() {
        return Err(CoreError::DimensionMismatch(format!(
            "state dimensions {} vs {}",
            psi.dim(),
            phi.dim()
        )));
    }
    let inner: Complex64 = psi
        .amplitudes()
        .iter()
        .zip(phi.amplitudes().iter())
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(inner.norm_sqr().clamp(0.0, 1.0))
}

/// Square root of a PSD matrix with eigenvalues below `rel · λ_max` zeroed.
/// Rank-deficient density matrices carry numerical residual eigenvalues of
/// order machine epsilon whose square roots (~1e-8) would otherwise dominate
/// the fidelity error budget.
fn sqrt_psd_clipped(m: &CMatrix, rel: f64) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigen(m)?;
    let max = values.iter().cloned().fold(0.0f64, f64::max);
    let floor = rel * max.max(f64::MIN_POSITIVE);
    let diag = CMatrix::from_diagonal(&CVector::from_iterator(
        values.len(),
        values
            .iter()
            .map(|&v| Complex64::new(if v > floor { v.sqrt() } else { 0.0 }, 0.0)),
    ));
    Ok(&vectors * diag * vectors.adjoint())
}

/// Mixed-state (Uhlmann) fidelity `(tr √(√ρ σ √ρ))²`.
pub fn fidelity_mixed(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(CoreError::DimensionMismatch(
            "density matrices of different dimension".into(),
        ));
    }
    let sqrt_rho = sqrt_psd_clipped(rho.entries(), 1e-13)?;
    let inner = &sqrt_rho * sigma.entries() * &sqrt_rho;
    let root = sqrt_psd_clipped(&inner, 1e-13)?;
    let tr = root.trace().re;
    Ok((tr * tr).clamp(0.0, 1.0))
}

/// Normalized Bures distance `b = √(1 − √Fi) ∈ [0, 1]`.
pub fn bures_normalized_from_fidelity(fi: f64) -> f64 {
    (1.0 - fi.clamp(0.0, 1.0).sqrt()).max(0.0).sqrt()
}

/// Normalized Bures distance between density matrices.
pub fn bures_normalized(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok(bures_normalized_from_fidelity(fidelity_mixed(rho, sigma)?))
}

// ---------------------------------------------------------------------------
// Distribution formulas: published and corrected
// ---------------------------------------------------------------------------

/// Which printed formula family to evaluate: the expressions exactly as
/// published (`Paper`, kept for the discrepancy ledger) or the corrected
/// Beta-law versions (`Corrected`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CdfVariant {
    Paper,
    Corrected,
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(CoreError::Validation(format!(
            "Hilbert dimension {d} must be >= 2"
        )));
    }
    Ok(())
}

/// CDF of the fidelity of two independent Haar-random pure states in
/// dimension `D`.
///
/// * `Corrected`: `Pr[Fi < y] = 1 − (1−y)^{D−1}` (the Beta(1, D−1) law).
/// * `Paper`: the printed expression `(1−y)^{D−1} / (D−1)`.
pub fn fidelity_cdf(y: f64, d: usize, variant: CdfVariant) -> Result<f64> {
    check_dim(d)?;
    let y = y.clamp(0.0, 1.0);
    let k = (d - 1) as f64;
    Ok(match variant {
        CdfVariant::Corrected => 1.0 - (1.0 - y).powf(k),
        CdfVariant::Paper => (1.0 - y).powf(k) / k,
    })
}

/// Natural log of the paper's Bures tail expression
/// `(2v² − v⁴)^{D−1} / (D−1)`, evaluated in log-space so magnitudes down to
/// 1e-182 survive.
pub fn ln_paper_bures_term(v: f64, d: usize) -> Result<f64> {
    check_dim(d)?;
    let v = v.clamp(0.0, 1.0);
    let base = 2.0 * v * v - v.powi(4);
    let k = (d - 1) as f64;
    if base <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(k * base.ln() - k.ln())
}

/// CDF of the normalized Bures distance of two Haar-random pure states.
///
/// * `Corrected`: `Pr[b < v] = (2v² − v⁴)^{D−1}` (change of variables from
///   the Beta fidelity law; monotone, 0 at v=0, 1 at v=1).
/// * `Paper`: the printed expression `1 − (2v² − v⁴)^{D−1} / (D−1)`.
pub fn bures_cdf(v: f64, d: usize, variant: CdfVariant) -> Result<f64> {
    check_dim(d)?;
    let v = v.clamp(0.0, 1.0);
    let base = (2.0 * v * v - v.powi(4)).max(0.0);
    let k = (d - 1) as f64;
    Ok(match variant {
        CdfVariant::Corrected => base.powf(k),
        CdfVariant::Paper => 1.0 - ln_paper_bures_term(v, d)?.exp(),
    })
}

/// The paper's closed-form mean-distance approximation `√(1 − D^{−1/2})`.
pub fn mean_bures_approx(d: usize) -> Result<f64> {
    check_dim(d)?;
    Ok((1.0 - (d as f64).powf(-0.5)).sqrt())
}

// ---------------------------------------------------------------------------
// Haar sampling and Monte Carlo
// ---------------------------------------------------------------------------

/// Haar-uniform pure state: normalized isotropic complex Gaussian vector.
pub fn sample_random_pure(d: usize, rng: &mut impl Rng) -> Result<DenseState> {
    if d < 1 {
        return Err(CoreError::Validation("dimension must be >= 1".into()));
    }
    loop {
        let v = CVector::from_fn(d, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let norm = v.norm();
        if norm > 1e-12 {
            return DenseState::new(v.unscale(norm));
        }
    }
}

/// A Monte Carlo estimate with its standard error and provenance.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub samples: u64,
    pub seed: u64,
}

impl McEstimate {
    fn from_indicator_mean(hits: f64, samples: u64, seed: u64) -> Self {
        let p = hits / samples as f64;
        Self {
            value: p,
            standard_error: (p * (1.0 - p) / samples as f64).sqrt(),
            samples,
            seed,
        }
    }
}

/// Estimate `Pr[b < v]` (equivalently a fidelity threshold event) over pairs
/// of independent Haar states, sharded across `threads`.
pub fn mc_bures_cdf(
    d: usize,
    v: f64,
    samples: u64,
    seed: u64,
    threads: usize,
) -> Result<McEstimate> {
    check_dim(d)?;
    // Shard count is fixed (not thread-derived) so results are independent of
    // the thread count.
    let shards = 64u64.min(samples.max(1));
    let per_shard = samples / shards;
    let remainder = samples % shards;
    let counts = run_seeded_tasks(seed, "mc-bures-cdf", shards, threads, |i, rng| {
        let quota = per_shard + u64::from(i < remainder);
        let mut hits = 0u64;
        for _ in 0..quota {
            let a = sample_random_pure(d, rng).expect("haar sample");
            let b = sample_random_pure(d, rng).expect("haar sample");
            let fi = fidelity_pure(&a, &b).expect("fidelity");
            if bures_normalized_from_fidelity(fi) < v {
                hits += 1;
            }
        }
        hits
    });
    let hits: u64 = counts.iter().sum();
    Ok(McEstimate::from_indicator_mean(hits as f64, samples, seed))
}

/// Mean and standard error of a statistic of Haar fidelity samples.
pub fn mc_fidelity_mean(
    d: usize,
    samples: u64,
    seed: u64,
    threads: usize,
) -> Result<McEstimate> {
    check_dim(d)?;
    let shards = 64u64.min(samples.max(1));
    let per_shard = samples / shards;
    let remainder = samples % shards;
    let sums = run_seeded_tasks(seed, "mc-fidelity-mean", shards, threads, |i, rng| {
        let quota = per_shard + u64::from(i < remainder);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..quota {
            let a = sample_random_pure(d, rng).expect("haar sample");
            let b = sample_random_pure(d, rng).expect("haar sample");
            let fi = fidelity_pure(&a, &b).expect("fidelity");
            sum += fi;
            sum_sq += fi * fi;
        }
        (sum, sum_sq)
    });
    let (sum, sum_sq) = sums
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    Ok(McEstimate {
        value: mean,
        standard_error: (var / n).sqrt(),
        samples,
        seed,
    })
}

/// Verdict of the Monte Carlo adjudication between the published and
/// corrected CDF values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CdfVerdict {
    SupportsCorrected,
    SupportsPaper,
    Inconclusive,
}

/// Full adjudication record for one `(D, v)` point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BuresAdjudication {
    pub d: usize,
    pub v: f64,
    pub paper_value: f64,
    pub corrected_value: f64,
    pub estimate: McEstimate,
    pub tolerance: f64,
    pub verdict: CdfVerdict,
}

/// Decide between the paper's printed `Pr[b < v]` value and the corrected
/// Beta-law value by direct simulation.
pub fn adjudicate_bures_cdf(
    d: usize,
    v: f64,
    samples: u64,
    seed: u64,
    threads: usize,
    tolerance: f64,
) -> Result<BuresAdjudication> {
    let estimate = mc_bures_cdf(d, v, samples, seed, threads)?;
    let paper_value = bures_cdf(v, d, CdfVariant::Paper)?;
    let corrected_value = bures_cdf(v, d, CdfVariant::Corrected)?;
    let near_paper = (estimate.value - paper_value).abs() <= tolerance;
    let near_corrected = (estimate.value - corrected_value).abs() <= tolerance;
    let verdict = match (near_paper, near_corrected) {
        (false, true) => CdfVerdict::SupportsCorrected,
        (true, false) => CdfVerdict::SupportsPaper,
        _ => CdfVerdict::Inconclusive,
    };
    Ok(BuresAdjudication {
        d,
        v,
        paper_value,
        corrected_value,
        estimate,
        tolerance,
        verdict,
    })
}

/// Map a cogit count to its Hilbert-space dimension `D = 2^N`.
pub fn hilbert_dimension(n_cogits: u32) -> Result<usize> {
    if n_cogits == 0 || n_cogits > 63 {
        return Err(CoreError::Validation(format!(
            "cogit count {n_cogits} outside [1, 63]"
        )));
    }
    Ok(1usize << n_cogits)
}
