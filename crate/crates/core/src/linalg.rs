//! Dense complex linear-algebra helpers: Hermitian eigendecomposition,
//! matrix square roots and logarithms, operator norms, and the unitary
//! exponential of a Hermitian generator.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{CoreError, Result};

/// Floor applied to eigenvalues before square roots and logarithms, absorbing
/// floating-point negativity of positive-semidefinite inputs.
pub const EIGENVALUE_CLIP: f64 = 1e-10;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Max-abs deviation from Hermitian symmetry.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let adj = m.adjoint();
    (m - adj).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigendecomposition of a Hermitian matrix: real eigenvalues (ascending) and
/// the unitary of column eigenvectors.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if m.nrows() != m.ncols() {
        return Err(CoreError::DimensionMismatch(format!(
            "expected square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if hermitian_deviation(m) > 1e-8 {
        return Err(CoreError::Validation(
            "matrix is not Hermitian within 1e-8".into(),
        ));
    }
    // Symmetrize to suppress round-off before factorizing.
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    Ok((values, vectors))
}

/// Apply a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_map(m: &CMatrix, f: impl Fn(f64) -> f64) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigen(m)?;
    let diag = CMatrix::from_diagonal(&CVector::from_iterator(
        values.len(),
        values.iter().map(|&v| Complex64::new(f(v), 0.0)),
    ));
    Ok(&vectors * diag * vectors.adjoint())
}

/// Principal square root of a Hermitian positive-semidefinite matrix via
/// eigendecomposition (exact and unconditional for PSD inputs).
pub fn matrix_sqrt_eigen(m: &CMatrix) -> Result<CMatrix> {
    hermitian_map(m, |v| v.max(0.0).sqrt())
}

/// Square root of a Hermitian PSD matrix by the binomial series
/// `sqrt(I - X) = I - X/2 - X^2/8 - ...` with `X = I - M`. Converges only when
/// the spectrum of `M` lies in (0, 2); a convergence guard rejects inputs
/// whose residual stops contracting.
pub fn matrix_sqrt_series(m: &CMatrix, max_terms: usize, tol: f64) -> Result<CMatrix> {
    if m.nrows() != m.ncols() {
        return Err(CoreError::DimensionMismatch("square matrix required".into()));
    }
    let n = m.nrows();
    let x = CMatrix::identity(n, n) - m;
    // term_{k} = coeff_k * X^k where coeff follows the binomial(1/2) recurrence.
    let mut sum = CMatrix::identity(n, n);
    let mut x_power = x.clone();
    let mut coeff = -0.5; // binomial(1/2, 1) applied to (−X)
    let mut last_norm = f64::INFINITY;
    for k in 1..=max_terms {
        let term = x_power.map(|z| z * coeff);
        let term_norm = term.iter().map(|z| z.norm()).fold(0.0, f64::max);
        sum += term;
        if term_norm < tol {
            return Ok(sum);
        }
        if k > 8 && term_norm > last_norm {
            return Err(CoreError::Validation(
                "matrix_sqrt_series failed to converge (spectrum outside (0,2))".into(),
            ));
        }
        last_norm = term_norm;
        // binomial(1/2, k+1) = binomial(1/2, k) * (1/2 - k) / (k + 1), with the
        // (−1)^k sign folded in by multiplying by −1 · (k − 1/2)/(k + 1).
        coeff *= (k as f64 - 0.5) / (k as f64 + 1.0);
        x_power *= &x;
    }
    Err(CoreError::Validation(
        "matrix_sqrt_series exhausted its term budget".into(),
    ))
}

/// Operator (spectral) norm: largest singular value.
pub fn operator_norm(m: &CMatrix) -> f64 {
    let gram = m.adjoint() * m;
    let sym = (&gram + gram.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    eig.eigenvalues
        .iter()
        .fold(0.0f64, |acc, &v| acc.max(v.max(0.0)))
        .sqrt()
}

/// Unitary `exp(i H)` of a Hermitian generator `H`.
pub fn expm_i_hermitian(h: &CMatrix) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigen(h)?;
    let diag = CMatrix::from_diagonal(&CVector::from_iterator(
        values.len(),
        values.iter().map(|&v| Complex64::new(0.0, v).exp()),
    ));
    Ok(&vectors * diag * vectors.adjoint())
}

/// Haar-distributed random unitary via QR of a complex Ginibre matrix with
/// the standard phase correction on the diagonal of `R`.
pub fn random_unitary(d: usize, rng: &mut impl rand::Rng) -> CMatrix {
    use rand_distr::StandardNormal;
    let ginibre = CMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = ginibre.qr();
    let r = qr.r();
    let phases: Vec<Complex64> = (0..d)
        .map(|i| {
            let z = r[(i, i)];
            if z.norm() < 1e-300 {
                Complex64::new(1.0, 0.0)
            } else {
                z / z.norm()
            }
        })
        .collect();
    let mut q = qr.q();
    for (j, phase) in phases.iter().enumerate() {
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Max-abs deviation of `U U† − I`.
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    let gram = u * u.adjoint();
    let id = CMatrix::identity(u.nrows(), u.ncols());
    (gram - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn random_hermitian(n: usize, rng: &mut impl Rng) -> CMatrix {
        let raw = CMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        (&raw + raw.adjoint()).scale(0.5)
    }

    #[test]
    fn sqrt_eigen_squares_back() {
        let mut rng = crate::rng::derive_stream(1, "linalg-sqrt", 0);
        for _ in 0..20 {
            let h = random_hermitian(5, &mut rng);
            let psd = &h * h.adjoint();
            let root = matrix_sqrt_eigen(&psd).unwrap();
            let back = &root * &root;
            for (a, b) in back.iter().zip(psd.iter()) {
                assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-9);
                assert_abs_diff_eq!(a.im, b.im, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn sqrt_series_matches_eigen_on_contractive_spectrum() {
        let mut rng = crate::rng::derive_stream(2, "linalg-series", 0);
        for _ in 0..10 {
            let h = random_hermitian(4, &mut rng);
            // Scale spectrum into (0, 2) around 1.
            let psd = CMatrix::identity(4, 4) + (&h * h.adjoint()).scale(0.02);
            let a = matrix_sqrt_eigen(&psd).unwrap();
            let b = matrix_sqrt_series(&psd, 200, 1e-13).unwrap();
            for (x, y) in a.iter().zip(b.iter()) {
                assert_abs_diff_eq!(x.re, y.re, epsilon = 1e-10);
                assert_abs_diff_eq!(x.im, y.im, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn sqrt_series_guard_rejects_wide_spectrum() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![
            Complex64::new(9.0, 0.0),
            Complex64::new(1.0, 0.0),
        ]));
        assert!(matrix_sqrt_series(&m, 100, 1e-12).is_err());
    }

    #[test]
    fn expm_is_unitary_and_norm_is_spectral() {
        let mut rng = crate::rng::derive_stream(3, "linalg-expm", 0);
        for _ in 0..10 {
            let h = random_hermitian(6, &mut rng);
            let u = expm_i_hermitian(&h).unwrap();
            assert!(unitarity_deviation(&u) < 1e-10);
            assert_abs_diff_eq!(operator_norm(&u), 1.0, epsilon = 1e-10);
        }
        let diag = CMatrix::from_diagonal(&CVector::from_vec(vec![
            Complex64::new(-3.0, 0.0),
            Complex64::new(2.0, 0.0),
        ]));
        assert_abs_diff_eq!(operator_norm(&diag), 3.0, epsilon = 1e-10);
    }
}
