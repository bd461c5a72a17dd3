//! Noisy binary measurement statistics: the mixture Bernoulli pmf, the
//! effective-flip moments, exact log-space binomial tails, Gaussian/erfc tail
//! approximations (both the published form and a refined Peizer–Pratt form),
//! and concentration intervals of normalized measurement distance.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{CoreError, Result};

/// Per-cogit measurement model: `n` cogits, underlying `Pr[1] = p`, and a
/// uniform flip probability `q` applied to each outcome.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct NoisyMeasurementModel {
    pub n: u64,
    pub p: f64,
    pub q: f64,
}

impl NoisyMeasurementModel {
    pub fn new(n: u64, p: f64, q: f64) -> Result<Self> {
        if n < 1 {
            return Err(CoreError::Validation("n must be >= 1".into()));
        }
        for (name, v) in [("p", p), ("q", q)] {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(CoreError::Validation(format!("{name} = {v} outside [0,1]")));
            }
        }
        Ok(Self { n, p, q })
    }

    /// Effective per-trial flip probability `p + q − 2pq` (probability that
    /// the noisy outcome differs from a fixed reference bit drawn with
    /// probability `p`).
    pub fn effective_p(&self) -> f64 {
        self.p + self.q - 2.0 * self.p * self.q
    }
}

/// Mixture pmf of one noisy measurement:
/// `f(x) = (1−q) p^x (1−p)^{1−x} + q (1−p)^x p^{1−x}` for `x ∈ {0, 1}`.
pub fn mixture_pmf(x: u8, p: f64, q: f64) -> Result<f64> {
    if x > 1 {
        return Err(CoreError::Validation(format!("outcome {x} not in {{0,1}}")));
    }
    let model = NoisyMeasurementModel::new(1, p, q)?;
    let (p, q) = (model.p, model.q);
    Ok(if x == 1 {
        (1.0 - q) * p + q * (1.0 - p)
    } else {
        (1.0 - q) * (1.0 - p) + q * p
    })
}

/// Mean and variance of the flip count over `n` trials:
/// `mean = n·p_eff`, `var = n·p_eff·(1 − p_eff)` with `p_eff = p + q − 2pq`.
pub fn effective_flip_moments(n: u64, p: f64, q: f64) -> Result<(f64, f64)> {
    let model = NoisyMeasurementModel::new(n, p, q)?;
    let pe = model.effective_p();
    let nf = n as f64;
    Ok((nf * pe, nf * pe * (1.0 - pe)))
}

// ---------------------------------------------------------------------------
// Exact binomial tails (log-space)
// ---------------------------------------------------------------------------

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Natural log of the Binomial(n, p) pmf at `k`.
pub fn ln_binomial_pmf(k: u64, n: u64, p: f64) -> Result<f64> {
    if k > n {
        return Err(CoreError::Validation(format!("k = {k} exceeds n = {n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(CoreError::Validation(format!("p = {p} outside [0,1]")));
    }
    if p == 0.0 {
        return Ok(if k == 0 { 0.0 } else { f64::NEG_INFINITY });
    }
    if p == 1.0 {
        return Ok(if k == n { 0.0 } else { f64::NEG_INFINITY });
    }
    Ok(ln_choose(n, k) + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln())
}

/// Log-sum-exp over a sequence of log terms (stable for magnitudes down to
/// 1e-300 and below relative to the maximum).
fn logsumexp(terms: impl Iterator<Item = f64>) -> f64 {
    let values: Vec<f64> = terms.filter(|v| v.is_finite() || *v > f64::NEG_INFINITY).collect();
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Natural log of the upper tail `Pr[X ≥ k]` for `X ~ Binomial(n, p)`,
/// summed from the smaller tail side in log space.
pub fn ln_binomial_tail_ge(k: u64, n: u64, p: f64) -> Result<f64> {
    if k == 0 {
        return Ok(0.0);
    }
    if k > n {
        return Ok(f64::NEG_INFINITY);
    }
    // Sum whichever side carries the smaller mass (the side away from the
    // mean): small-mass sums are relatively accurate, and the complement of
    // a small sum stays accurate, while the complement of a near-1 sum loses
    // relative precision.
    if k as f64 > n as f64 * p {
        Ok(logsumexp((k..=n).map(|j| ln_binomial_pmf(j, n, p).unwrap())))
    } else {
        let ln_lower = logsumexp((0..k).map(|j| ln_binomial_pmf(j, n, p).unwrap()));
        if ln_lower >= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok((-ln_lower.exp()).ln_1p())
    }
}

/// Exact `Pr[X ≥ k]` (as a plain f64, possibly subnormal).
pub fn binomial_tail_ge(k: u64, n: u64, p: f64) -> Result<f64> {
    Ok(ln_binomial_tail_ge(k, n, p)?.exp())
}

/// Exact `Pr[X ≤ k]`. Mirrors the side selection of
/// [`ln_binomial_tail_ge`]: when the lower tail is the small side it is
/// summed directly in log space, so values far below the mean keep full
/// relative precision instead of being recovered as `1 − (≈1)`.
pub fn binomial_cdf_le(k: u64, n: u64, p: f64) -> Result<f64> {
    if k >= n {
        return Ok(1.0);
    }
    if (k as f64) < n as f64 * p {
        Ok(ln_binomial_cdf_le(k, n, p)?.exp())
    } else {
        Ok(1.0 - binomial_tail_ge(k + 1, n, p)?)
    }
}

/// Natural log of `Pr[X ≤ k]`.
pub fn ln_binomial_cdf_le(k: u64, n: u64, p: f64) -> Result<f64> {
    if k >= n {
        return Ok(0.0);
    }
    Ok(logsumexp((0..=k).map(|j| ln_binomial_pmf(j, n, p).unwrap())))
}

// ---------------------------------------------------------------------------
// Gaussian / erfc approximations
// ---------------------------------------------------------------------------

/// Standard normal upper tail `Pr[N(0,1) ≥ z] = ½ erfc(z/√2)`.
pub fn gaussian_upper_tail(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// The published Gaussian tail of the flip count:
/// `Pr[Z ≥ z] ≈ ½ erfc((z − mean)/√(2 var))` with the mixture moments. The
/// printed `1/√2` prefactor on `erf` is treated as a typo; prose fixes the
/// `½ erfc` form. Degenerate variance falls back to the exact step function.
pub fn similarity_tail(z: f64, n: u64, p: f64, q: f64) -> Result<f64> {
    let (mean, var) = effective_flip_moments(n, p, q)?;
    if var <= 0.0 {
        return Ok(if z <= mean { 1.0 } else { 0.0 });
    }
    Ok(gaussian_upper_tail((z - mean) / var.sqrt()))
}

/// Gaussian tail of the true-vs-noisy agreement count: the match count has
/// mean `n(1−q)` and variance `n q (1−q)`; this returns `Pr[matches ≥ z]`.
/// The flip-count distance is exactly `Binomial(n, q)`.
pub fn true_vs_noisy_tail(z: f64, n: u64, q: f64) -> Result<f64> {
    let model = NoisyMeasurementModel::new(n, 0.0, q)?;
    let nf = n as f64;
    let mean = nf * (1.0 - model.q);
    let var = nf * model.q * (1.0 - model.q);
    if var <= 0.0 {
        return Ok(if z <= mean { 1.0 } else { 0.0 });
    }
    Ok(gaussian_upper_tail((z - mean) / var.sqrt()))
}

/// Peizer–Pratt approximation of the binomial CDF `Pr[X ≤ k]` — an
/// erfc-based refinement of the Gaussian tail accurate to ~2e-7 in absolute
/// error at n = 1000, comfortably inside the 1e-3 requirement the plain
/// continuity-corrected erfc formula misses at skewed `p`.
pub fn peizer_pratt_cdf_le(k: u64, n: u64, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(CoreError::Validation(format!("p = {p} outside [0,1]")));
    }
    if p == 0.0 {
        return Ok(1.0);
    }
    if p == 1.0 {
        return Ok(if k >= n { 1.0 } else { 0.0 });
    }
    if k >= n {
        return Ok(1.0);
    }
    let q = 1.0 - p;
    let (nf, kf) = (n as f64, k as f64);
    let d = kf + 2.0 / 3.0 - (nf + 1.0 / 3.0) * p
        + 0.02 * (q / (kf + 1.0) - p / (nf - kf) + (q - 0.5) / (nf + 1.0));
    let s = kf + 0.5;
    let t = nf - kf - 0.5;
    let g = |x: f64| -> f64 {
        if (x - 1.0).abs() < 1e-12 {
            1.0
        } else {
            let x = x.max(1e-300);
            (1.0 - x * x + 2.0 * x * x.ln()) / (1.0 - x).powi(2)
        }
    };
    let inner = (1.0 + q * g(s / (nf * p)) + p * g(t / (nf * q))) / ((nf + 1.0 / 6.0) * p * q);
    let z = d * inner.max(0.0).sqrt();
    Ok(1.0 - gaussian_upper_tail(z))
}

/// Refined upper tail `Pr[X ≥ k]` via Peizer–Pratt.
pub fn peizer_pratt_tail_ge(k: u64, n: u64, p: f64) -> Result<f64> {
    if k == 0 {
        return Ok(1.0);
    }
    Ok(1.0 - peizer_pratt_cdf_le(k - 1, n, p)?)
}

// ---------------------------------------------------------------------------
// Concentration intervals
// ---------------------------------------------------------------------------

/// One row of a concentration table: the tightest symmetric normalized
/// interval around the mean holding at least `mass` under the exact binomial
/// law `Binomial(n, q_eff)/n`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConcentrationRow {
    pub n: u64,
    pub q: f64,
    pub mass: f64,
    pub lower: f64,
    pub upper: f64,
    pub achieved_mass: f64,
}

/// Tightest symmetric interval `[(c−d)/n, (c+d)/n]` around the rounded mean
/// `c = round(n·q)` with exact probability ≥ `mass`.
pub fn concentration_interval(n: u64, q: f64, mass: f64) -> Result<ConcentrationRow> {
    if !(0.0..1.0).contains(&mass) {
        return Err(CoreError::Validation(format!("mass {mass} outside (0,1)")));
    }
    let model = NoisyMeasurementModel::new(n, 0.0, q)?;
    let q = model.q;
    let center = (n as f64 * q).round() as i64;
    let nf = n as f64;
    let prob_in = |lo: i64, hi: i64| -> Result<f64> {
        let lo = lo.max(0) as u64;
        let hi = hi.min(n as i64) as u64;
        let above = if lo == 0 {
            1.0
        } else {
            binomial_tail_ge(lo, n, q)?
        };
        let strictly_above = binomial_tail_ge(hi + 1, n, q)?;
        Ok((above - strictly_above).clamp(0.0, 1.0))
    };
    for d in 0..=(n as i64) {
        let (lo, hi) = (center - d, center + d);
        let achieved = prob_in(lo, hi)?;
        if achieved >= mass {
            return Ok(ConcentrationRow {
                n,
                q,
                mass,
                lower: lo.max(0) as f64 / nf,
                upper: hi.min(n as i64) as f64 / nf,
                achieved_mass: achieved,
            });
        }
    }
    Err(CoreError::Validation(
        "mass not reachable (should be impossible for mass < 1)".into(),
    ))
}

/// Bulk table of concentration intervals over the Cartesian product of the
/// given `n`, `q`, and `mass` lists.
pub fn concentration_table(
    ns: &[u64],
    qs: &[f64],
    masses: &[f64],
) -> Result<Vec<ConcentrationRow>> {
    let mut rows = Vec::with_capacity(ns.len() * qs.len() * masses.len());
    for &n in ns {
        for &q in qs {
            for &mass in masses {
                rows.push(concentration_interval(n, q, mass)?);
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn mixture_pmf_values() {
        assert_abs_diff_eq!(mixture_pmf(1, 0.7, 0.0).unwrap(), 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(mixture_pmf(1, 0.5, 0.3).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(mixture_pmf(1, 0.9, 0.1).unwrap(), 0.82, epsilon = 1e-15);
        for (p, q) in [(0.3, 0.2), (0.0, 1.0), (0.77, 0.13)] {
            let total = mixture_pmf(0, p, q).unwrap() + mixture_pmf(1, p, q).unwrap();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn moment_formulas() {
        let (m, v) = effective_flip_moments(100, 0.4, 0.0).unwrap();
        assert_abs_diff_eq!(m, 40.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v, 24.0, epsilon = 1e-12);
        let (m, v) = effective_flip_moments(1000, 0.5, 0.5).unwrap();
        assert_abs_diff_eq!(m, 500.0, epsilon = 1e-9);
        assert_abs_diff_eq!(v, 250.0, epsilon = 1e-9);
        let (m, v) = effective_flip_moments(1000, 0.5, 0.25).unwrap();
        assert_abs_diff_eq!(m, 500.0, epsilon = 1e-9);
        assert_abs_diff_eq!(v, 250.0, epsilon = 1e-9);
    }

    #[test]
    fn exact_tails_match_known_values() {
        // Frozen against an independent implementation of the binomial law.
        let out_pair = binomial_cdf_le(424, 1000, 0.5).unwrap()
            + binomial_tail_ge(576, 1000, 0.5).unwrap();
        assert!((out_pair / 1.7202330892302777e-6 - 1.0).abs() < 1e-7);
        let out_q25 = binomial_cdf_le(184, 1000, 0.25).unwrap()
            + binomial_tail_ge(316, 1000, 0.25).unwrap();
        assert!((out_q25 / 1.92376052203882e-6 - 1.0).abs() < 1e-7);
        // Extreme magnitudes survive in log space.
        let ln_tiny = ln_binomial_tail_ge(900, 1000, 0.5).unwrap();
        assert!(ln_tiny.is_finite() && ln_tiny < -300.0);
        // Simple identities.
        assert_abs_diff_eq!(binomial_tail_ge(0, 10, 0.3).unwrap(), 1.0);
        assert_abs_diff_eq!(
            binomial_tail_ge(1, 10, 0.3).unwrap(),
            1.0 - 0.7f64.powi(10),
            epsilon = 1e-12
        );
    }

    #[test]
    fn similarity_tail_shape() {
        let (mean, _) = effective_flip_moments(1000, 0.5, 0.1).unwrap();
        assert_abs_diff_eq!(
            similarity_tail(mean, 1000, 0.5, 0.1).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(similarity_tail(-1e9, 1000, 0.5, 0.1).unwrap(), 1.0);
        assert_abs_diff_eq!(similarity_tail(1e9, 1000, 0.5, 0.1).unwrap(), 0.0);
        let mut prev = f64::INFINITY;
        for i in 0..=100 {
            let z = 400.0 + 2.0 * i as f64;
            let t = similarity_tail(z, 1000, 0.5, 0.1).unwrap();
            assert!(t <= prev + 1e-15);
            prev = t;
        }
        // Degenerate variance: exact step.
        assert_abs_diff_eq!(similarity_tail(-0.5, 10, 0.0, 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(similarity_tail(0.5, 10, 0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn true_vs_noisy_values() {
        // q = 0: all matches, distance 0 with probability 1.
        assert_abs_diff_eq!(true_vs_noisy_tail(1000.0, 1000, 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(true_vs_noisy_tail(1000.1, 1000, 0.0).unwrap(), 0.0);
        // Interval mass at q = 0.25 from the exact binomial law.
        let inside = binomial_cdf_le(315, 1000, 0.25).unwrap()
            - binomial_cdf_le(184, 1000, 0.25).unwrap();
        assert!(inside >= 1.0 - 2e-6);
    }

    #[test]
    fn peizer_pratt_accuracy() {
        for p in [0.25, 0.5, 2.0 / 3.0, 0.75] {
            let mut max_err: f64 = 0.0;
            for k in 0..1000 {
                let exact = binomial_cdf_le(k, 1000, p).unwrap();
                let approx = peizer_pratt_cdf_le(k, 1000, p).unwrap();
                max_err = max_err.max((exact - approx).abs());
            }
            assert!(max_err < 1e-3, "p={p}: max err {max_err:.3e}");
            assert!(max_err < 5e-7, "p={p}: refined accuracy regressed: {max_err:.3e}");
        }
    }

    #[test]
    fn plain_erfc_tail_is_coarser_than_refined() {
        // The published erfc formula (no continuity correction) has absolute
        // error above 1e-3 at skewed p; documents why the refined form exists.
        let p = 0.75;
        let mut max_err_plain: f64 = 0.0;
        for k in 0..=1000u64 {
            let exact = binomial_tail_ge(k, 1000, p).unwrap();
            let (mean, var) = (1000.0 * p, 1000.0 * p * (1.0 - p));
            let plain = gaussian_upper_tail((k as f64 - mean) / var.sqrt());
            max_err_plain = max_err_plain.max((exact - plain).abs());
        }
        assert!(
            max_err_plain > 1e-3,
            "plain erfc unexpectedly accurate: {max_err_plain:.3e}"
        );
    }

    #[test]
    fn concentration_intervals_reproduce_published_anchors() {
        let mass = 1.0 - 2e-6;
        let pair = concentration_interval(1000, 0.5, mass).unwrap();
        assert_abs_diff_eq!(pair.lower, 0.425, epsilon = 1e-12);
        assert_abs_diff_eq!(pair.upper, 0.575, epsilon = 1e-12);
        let q25 = concentration_interval(1000, 0.25, mass).unwrap();
        assert_abs_diff_eq!(q25.lower, 0.185, epsilon = 1e-12);
        assert_abs_diff_eq!(q25.upper, 0.315, epsilon = 1e-12);
        let q3 = concentration_interval(1000, 1.0 / 3.0, mass).unwrap();
        assert_abs_diff_eq!(q3.lower, 0.262, epsilon = 1e-12);
        assert_abs_diff_eq!(q3.upper, 0.404, epsilon = 1e-12);
        // Degenerate noiseless case.
        let z = concentration_interval(4, 0.0, 0.9).unwrap();
        assert_abs_diff_eq!(z.lower, 0.0);
        assert_abs_diff_eq!(z.upper, 0.0);
        // Bulk table covers the product.
        let table = concentration_table(&[1000], &[0.25, 0.5], &[mass, 0.99]).unwrap();
        assert_eq!(table.len(), 4);
    }
}
