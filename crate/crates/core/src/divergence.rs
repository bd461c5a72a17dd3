//! Classical and quantum Jensen-Shannon distances, the pure-state reduction
//! report, and the binary-entropy (Roga) upper bound on the quantum JS
//! distance.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::linalg::hermitian_eigen;
use crate::statedist::DensityMatrix;

/// Eigenvalues and probabilities below this are treated as exact zeros in
/// entropy sums (`0·log 0 = 0`).
pub const LOG_CLIP: f64 = 1e-14;

/// Logarithm base for divergences. Base 2 normalizes both JS distances to
/// `[0, 1]` and is the default everywhere; base e is available for
/// natural-log formula reproduction. The divergence and any bound compared
/// against it must share one base.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogBase {
    Two,
    E,
}

impl Default for LogBase {
    fn default() -> Self {
        LogBase::Two
    }
}

impl LogBase {
    fn ln_scale(self) -> f64 {
        match self {
            LogBase::Two => std::f64::consts::LN_2,
            LogBase::E => 1.0,
        }
    }
}

/// Validate a probability vector: nonnegative entries summing to 1 within
/// 1e-10 (zero entries permitted).
pub fn validate_probability_vector(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(CoreError::Empty("probability vector".into()));
    }
    if p.iter().any(|&x| !(x >= -1e-12) || !x.is_finite()) {
        return Err(CoreError::Validation("negative probability entry".into()));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(CoreError::Validation(format!(
            "probabilities sum to {total}, not 1"
        )));
    }
    Ok(())
}

fn shannon_entropy_nats(p: &[f64]) -> f64 {
    p.iter()
        .map(|&x| if x > LOG_CLIP { -x * x.ln() } else { 0.0 })
        .sum()
}

/// Classical Jensen-Shannon distance
/// `√(½ Σ P log(P/M) + ½ Σ Q log(Q/M))` with `M = ½(P+Q)`; in `[0, 1]` for
/// base 2.
pub fn jsd_classical(p: &[f64], q: &[f64], base: LogBase) -> Result<f64> {
    if p.len() != q.len() {
        return Err(CoreError::DimensionMismatch(format!(
            "distribution lengths {} vs {}",
            p.len(),
            q.len()
        )));
    }
    validate_probability_vector(p)?;
    validate_probability_vector(q)?;
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
    // JS divergence = H(M) − ½H(P) − ½H(Q), computed in nats then rescaled.
    let div_nats = shannon_entropy_nats(&m)
        - 0.5 * shannon_entropy_nats(p)
        - 0.5 * shannon_entropy_nats(q);
    Ok((div_nats / base.ln_scale()).max(0.0).sqrt())
}

/// Von Neumann entropy in nats with eigenvalue clipping.
fn von_neumann_entropy_nats(rho: &DensityMatrix) -> Result<f64> {
    let (values, _) = hermitian_eigen(rho.entries())?;
    Ok(shannon_entropy_nats(
        &values.iter().map(|&v| v.max(0.0)).collect::<Vec<_>>(),
    ))
}

/// Quantum Jensen-Shannon distance
/// `√(S(τ) − ½S(ρ) − ½S(σ))`, `τ = ½(ρ+σ)`, via eigendecomposition; in
/// `[0, 1]` for base 2.
pub fn qjsd(rho: &DensityMatrix, sigma: &DensityMatrix, base: LogBase) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(CoreError::DimensionMismatch(
            "density matrices of different dimension".into(),
        ));
    }
    let tau = DensityMatrix::mix(rho, sigma, 0.5)?;
    let div_nats = von_neumann_entropy_nats(&tau)?
        - 0.5 * von_neumann_entropy_nats(rho)?
        - 0.5 * von_neumann_entropy_nats(sigma)?;
    Ok((div_nats / base.ln_scale()).max(0.0).sqrt())
}

/// Side-by-side report of the published pure-state shortcut ("the QJSD
/// reduces to the classical JSD" for `|ψ⟩ = Σ√p_i|i⟩`, `|φ⟩ = Σ√q_i|i⟩`)
/// against the exact QJSD of the corresponding rank-1 projectors. The two
/// agree when the states commute (orthogonal or identical support pattern)
/// but differ in general; both values are reported, neither is asserted
/// equal.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PureReductionReport {
    pub reduction_value: f64,
    pub exact_qjsd: f64,
    pub discrepancy: f64,
}

/// The published shortcut value: `jsd_classical(p, q)`.
pub fn qjsd_pure_reduction(p: &[f64], q: &[f64], base: LogBase) -> Result<f64> {
    jsd_classical(p, q, base)
}

/// Build the full comparison report for the pure-state reduction claim.
pub fn qjsd_pure_reduction_report(
    p: &[f64],
    q: &[f64],
    base: LogBase,
) -> Result<PureReductionReport> {
    let reduction_value = qjsd_pure_reduction(p, q, base)?;
    let psi = amplitudes_from_probs(p)?;
    let phi = amplitudes_from_probs(q)?;
    let exact = qjsd(
        &DensityMatrix::from_pure(&psi)?,
        &DensityMatrix::from_pure(&phi)?,
        base,
    )?;
    Ok(PureReductionReport {
        reduction_value,
        exact_qjsd: exact,
        discrepancy: (reduction_value - exact).abs(),
    })
}

fn amplitudes_from_probs(p: &[f64]) -> Result<crate::projective::DenseState> {
    validate_probability_vector(p)?;
    let amps = nalgebra::DVector::from_iterator(
        p.len(),
        p.iter()
            .map(|&x| num_complex::Complex64::new(x.max(0.0).sqrt(), 0.0)),
    );
    crate::projective::DenseState::new(amps)
}

/// Binary-entropy upper bound on the quantum JS distance in terms of the
/// normalized Bures distance `b`: `√h(½b²)` with
/// `h(x) = −x log x − (1−x) log(1−x)` in the shared log base.
pub fn roga_bound(b: f64, base: LogBase) -> Result<f64> {
    if !(0.0..=1.0 + 1e-12).contains(&b) {
        return Err(CoreError::Validation(format!("b = {b} outside [0,1]")));
    }
    let x = (0.5 * b * b).clamp(0.0, 1.0);
    let h_nats = shannon_entropy_nats(&[x, 1.0 - x]);
    Ok((h_nats / base.ln_scale()).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;
    use crate::statedist::{bures_normalized, fidelity_mixed, sample_random_pure};
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn random_probs(k: usize, rng: &mut impl Rng) -> Vec<f64> {
        let mut v: Vec<f64> = (0..k).map(|_| -rng.gen::<f64>().max(1e-12).ln()).collect();
        let total: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= total);
        v
    }

    fn random_density(d: usize, rng: &mut impl Rng) -> DensityMatrix {
        let probs = random_probs(3, rng);
        let mut acc = crate::linalg::CMatrix::zeros(d, d);
        for &w in &probs {
            let psi = sample_random_pure(d, rng).unwrap();
            acc += DensityMatrix::from_pure(&psi).unwrap().entries().scale(w);
        }
        DensityMatrix::new(acc).unwrap()
    }

    #[test]
    fn classical_jsd_anchors() {
        assert_abs_diff_eq!(
            jsd_classical(&[0.2, 0.8], &[0.2, 0.8], LogBase::Two).unwrap(),
            0.0
        );
        assert_abs_diff_eq!(
            jsd_classical(&[1.0, 0.0], &[0.0, 1.0], LogBase::Two).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        // Hand-evaluated value for P=(1/2,1/2), Q=(1,0).
        assert_abs_diff_eq!(
            jsd_classical(&[0.5, 0.5], &[1.0, 0.0], LogBase::Two).unwrap(),
            0.5579230452841438,
            epsilon = 1e-12
        );
    }

    #[test]
    fn jsd_symmetry_range_triangle() {
        let mut rng = derive_stream(40, "jsd-props", 0);
        for _ in 0..1000 {
            let p = random_probs(5, &mut rng);
            let q = random_probs(5, &mut rng);
            let r = random_probs(5, &mut rng);
            let pq = jsd_classical(&p, &q, LogBase::Two).unwrap();
            let qp = jsd_classical(&q, &p, LogBase::Two).unwrap();
            assert_abs_diff_eq!(pq, qp, epsilon = 1e-12);
            assert!((0.0..=1.0 + 1e-12).contains(&pq));
            let pr = jsd_classical(&p, &r, LogBase::Two).unwrap();
            let rq = jsd_classical(&r, &q, LogBase::Two).unwrap();
            assert!(pq <= pr + rq + 1e-9, "triangle violated");
        }
    }

    #[test]
    fn qjsd_matches_classical_on_diagonals() {
        let mut rng = derive_stream(41, "qjsd-diag", 0);
        for _ in 0..1000 {
            let p = random_probs(4, &mut rng);
            let q = random_probs(4, &mut rng);
            let rho = DensityMatrix::from_probabilities(&p).unwrap();
            let sigma = DensityMatrix::from_probabilities(&q).unwrap();
            let quantum = qjsd(&rho, &sigma, LogBase::Two).unwrap();
            let classical = jsd_classical(&p, &q, LogBase::Two).unwrap();
            assert_abs_diff_eq!(quantum, classical, epsilon = 1e-9);
        }
    }

    #[test]
    fn qjsd_extremes() {
        let mut rng = derive_stream(42, "qjsd-extremes", 0);
        let rho = random_density(4, &mut rng);
        assert_abs_diff_eq!(qjsd(&rho, &rho, LogBase::Two).unwrap(), 0.0, epsilon = 1e-7);
        let e0 = crate::projective::DenseState::basis(2, 0).unwrap();
        let e1 = crate::projective::DenseState::basis(2, 1).unwrap();
        let p0 = DensityMatrix::from_pure(&e0).unwrap();
        let p1 = DensityMatrix::from_pure(&e1).unwrap();
        assert_abs_diff_eq!(qjsd(&p0, &p1, LogBase::Two).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pure_reduction_report_cases() {
        // Identical and disjoint supports: shortcut and exact agree.
        let same = qjsd_pure_reduction_report(&[0.3, 0.7], &[0.3, 0.7], LogBase::Two).unwrap();
        assert!(same.reduction_value < 1e-9 && same.exact_qjsd < 1e-7);
        let disjoint =
            qjsd_pure_reduction_report(&[1.0, 0.0], &[0.0, 1.0], LogBase::Two).unwrap();
        assert_abs_diff_eq!(disjoint.reduction_value, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(disjoint.exact_qjsd, 1.0, epsilon = 1e-9);
        // Nonorthogonal: the shortcut and the exact value differ; both are
        // reported, nothing asserted equal.
        let report = qjsd_pure_reduction_report(&[0.5, 0.5], &[0.9, 0.1], LogBase::Two).unwrap();
        assert!(report.reduction_value > 0.0 && report.exact_qjsd > 0.0);
        assert!(report.discrepancy > 1e-3, "expected visible discrepancy");
    }

    #[test]
    fn roga_bound_dominates_qjsd() {
        assert_abs_diff_eq!(roga_bound(0.0, LogBase::Two).unwrap(), 0.0);
        assert_abs_diff_eq!(roga_bound(1.0, LogBase::Two).unwrap(), 1.0, epsilon = 1e-12);
        let mut rng = derive_stream(43, "roga", 0);
        for d in [2usize, 4, 8] {
            for _ in 0..500 {
                let rho = random_density(d, &mut rng);
                let sigma = random_density(d, &mut rng);
                let div = qjsd(&rho, &sigma, LogBase::Two).unwrap();
                let b = bures_normalized(&rho, &sigma).unwrap();
                let bound = roga_bound(b, LogBase::Two).unwrap();
                assert!(
                    div <= bound + 1e-9,
                    "violation at d={d}: qjsd {div} > bound {bound} (fi {})",
                    fidelity_mixed(&rho, &sigma).unwrap()
                );
            }
        }
    }
}
