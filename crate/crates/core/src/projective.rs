//! Projective holographic algebra over two-level "cogit" states.
//!
//! A cogit is a normalized two-level complex state `α|0⟩ + β|1⟩`. A
//! [`CogitHypervector`] is a product-form array of `n` cogits — the
//! high-dimensional cognitive state. This module provides the holographic
//! operations (bundle, bind/unbind, permute), Born-rule measurement, dense
//! tensor-product states for small `n`, unitary dynamics, and the similarity
//! measures used by recovery experiments.
//!
//! Binding convention: binding composes both the relative phase (phases add
//! mod 2π) and the measurement probability through the XOR-like rule
//! `p = p_x + p_y − 2 p_x p_y`. Phase-only binding leaves measurement
//! statistics of the bound vector identical to the first operand, which makes
//! bundle/unbind recovery through measurements impossible; the XOR rule keeps
//! binding exactly invertible (away from the `p = 1/2` fixed point) while
//! giving bound vectors measurement statistics deranged from both operands.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::linalg::{unitarity_deviation, CMatrix, CVector};

use std::f64::consts::TAU;

/// Normalization tolerance required of every state-producing operation.
pub const NORM_TOL: f64 = 1e-12;

/// Largest cogit count representable densely (D = 2^14 = 16384).
pub const MAX_DENSE_COGITS: usize = 14;

// ---------------------------------------------------------------------------
// Cogit
// ---------------------------------------------------------------------------

/// A normalized two-level state `α|0⟩ + β|1⟩`. The global phase is kept as
/// constructed (amplitude-level bundling is sensitive to it); all algebraic
/// operations read only the gauge-invariant pair `(Pr[1], relative phase)`
/// and emit states with real nonnegative `α`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cogit {
    alpha: Complex64,
    beta: Complex64,
    /// Binding channel `u = 1 − 2 Pr[1]`, stored explicitly so binding and
    /// unbinding compose by exact multiplication/division instead of
    /// re-deriving `u` from `|β|²` (which injects ~1e-16 absolute noise that
    /// division amplifies when the other operand's `u` is small).
    channel: f64,
}

impl Cogit {
    /// Build from raw amplitudes; rejects zero vectors and renormalizes
    /// within tolerance.
    pub fn new(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if norm < 1e-9 {
            return Err(CoreError::Validation("zero-norm cogit amplitudes".into()));
        }
        let (alpha, beta) = (alpha / norm, beta / norm);
        Ok(Self {
            alpha,
            beta,
            channel: (alpha.norm_sqr() - beta.norm_sqr()).clamp(-1.0, 1.0),
        })
    }

    /// Internal constructor from the binding channel `u` and relative phase.
    fn from_channel_phase(u: f64, phi: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&u) || !u.is_finite() {
            return Err(CoreError::Validation(format!(
                "channel value {u} outside [-1,1]"
            )));
        }
        let p = ((1.0 - u) / 2.0).clamp(0.0, 1.0);
        Ok(Self {
            alpha: Complex64::new((1.0 - p).sqrt(), 0.0),
            beta: Complex64::from_polar(p.sqrt(), phi.rem_euclid(TAU)),
            channel: u,
        })
    }

    /// Canonical construction from measurement probability `p = Pr[1]` and
    /// relative phase `φ`: `√(1−p)|0⟩ + √p e^{iφ}|1⟩`.
    pub fn from_prob_phase(p: f64, phi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) || !p.is_finite() {
            return Err(CoreError::Validation(format!(
                "probability {p} outside [0,1]"
            )));
        }
        Ok(Self {
            alpha: Complex64::new((1.0 - p).sqrt(), 0.0),
            beta: Complex64::from_polar(p.sqrt(), phi.rem_euclid(TAU)),
            channel: 1.0 - 2.0 * p,
        })
    }

    /// Construction from Bloch angles `(θ, φ)`:
    /// `cos(θ/2)|0⟩ + sin(θ/2) e^{iφ}|1⟩`.
    pub fn from_bloch(theta: f64, phi: f64) -> Result<Self> {
        let half = theta / 2.0;
        Self::from_prob_phase(half.sin().powi(2), phi)
    }

    /// The `|0⟩` basis state.
    pub fn zero() -> Self {
        Self {
            alpha: Complex64::new(1.0, 0.0),
            beta: Complex64::new(0.0, 0.0),
            channel: 1.0,
        }
    }

    /// The `|1⟩` basis state.
    pub fn one() -> Self {
        Self {
            alpha: Complex64::new(0.0, 0.0),
            beta: Complex64::new(1.0, 0.0),
            channel: -1.0,
        }
    }

    /// The same physical state with both amplitudes negated (a global phase
    /// flip; relevant only to amplitude-level bundling).
    pub fn phase_negated(&self) -> Self {
        Self {
            alpha: -self.alpha,
            beta: -self.beta,
            channel: self.channel,
        }
    }

    /// Amplitude on `|0⟩`.
    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    /// Amplitude on `|1⟩`.
    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    /// Born probability of measuring `1`.
    pub fn prob_one(&self) -> f64 {
        self.beta.norm_sqr().clamp(0.0, 1.0)
    }

    /// The binding channel variable `u = 1 − 2 Pr[1] ∈ [−1, 1]`; binding
    /// multiplies these, unbinding divides them.
    pub fn prob_channel(&self) -> f64 {
        self.channel
    }

    /// Relative phase `φ = arg β − arg α ∈ [0, 2π)` (zero by convention when
    /// `p ∈ {0, 1}`).
    pub fn relative_phase(&self) -> f64 {
        if self.beta.norm() < 1e-15 || self.alpha.norm() < 1e-15 {
            0.0
        } else {
            (self.beta.arg() - self.alpha.arg()).rem_euclid(TAU)
        }
    }

    /// Bloch polar angle `θ ∈ [0, π]`.
    pub fn bloch_theta(&self) -> f64 {
        2.0 * self.prob_one().sqrt().asin()
    }

    /// Bloch azimuthal angle, identical to [`Self::relative_phase`].
    pub fn bloch_phi(&self) -> f64 {
        self.relative_phase()
    }

    /// `|α|² + |β|²` deviation from 1 (diagnostic).
    pub fn norm_deviation(&self) -> f64 {
        (self.alpha.norm_sqr() + self.beta.norm_sqr() - 1.0).abs()
    }
}

// ---------------------------------------------------------------------------
// CogitHypervector
// ---------------------------------------------------------------------------

/// Product-form array of `n ≥ 1` cogits. Immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct CogitHypervector {
    cogits: Vec<Cogit>,
}

impl CogitHypervector {
    pub fn new(cogits: Vec<Cogit>) -> Result<Self> {
        if cogits.is_empty() {
            return Err(CoreError::Empty("hypervector needs n >= 1 cogits".into()));
        }
        Ok(Self { cogits })
    }

    pub fn len(&self) -> usize {
        self.cogits.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cogits(&self) -> &[Cogit] {
        &self.cogits
    }

    /// All-`|0⟩` hypervector: the identity element of binding.
    pub fn binding_identity(n: usize) -> Result<Self> {
        Self::new(vec![Cogit::zero(); n])
    }

    /// Per-cogit global phase flip (see [`Cogit::phase_negated`]).
    pub fn phase_negated(&self) -> Self {
        Self {
            cogits: self.cogits.iter().map(Cogit::phase_negated).collect(),
        }
    }

    /// Random hypervector: `p_i ~ U[0,1]`, `φ_i ~ U[0,2π)` i.i.d.
    pub fn random(n: usize, rng: &mut impl Rng) -> Result<Self> {
        let cogits = (0..n)
            .map(|_| Cogit::from_prob_phase(rng.gen::<f64>(), rng.gen::<f64>() * TAU))
            .collect::<Result<Vec<_>>>()?;
        Self::new(cogits)
    }

    fn check_same_len(&self, other: &Self) -> Result<()> {
        if self.len() != other.len() {
            return Err(CoreError::DimensionMismatch(format!(
                "hypervector lengths {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(())
    }
}

/// Result of [`bundle`]: the bundled hypervector plus the indices of cogits
/// whose amplitude sum was degenerate (resolved to `|0⟩` by the deterministic
/// tie-break).
#[derive(Clone, Debug)]
pub struct BundleOutcome {
    pub vector: CogitHypervector,
    pub degenerate_indices: Vec<usize>,
}

impl BundleOutcome {
    pub fn is_degenerate(&self) -> bool {
        !self.degenerate_indices.is_empty()
    }
}

/// Superposition bundling: per-cogit amplitude sum with per-cogit
/// renormalization. A per-cogit zero sum (e.g. bundling `x` with its
/// phase-negated copy) resolves to `|0⟩` at that index and is reported in
/// [`BundleOutcome::degenerate_indices`].
pub fn bundle(inputs: &[CogitHypervector]) -> Result<BundleOutcome> {
    let first = inputs
        .first()
        .ok_or_else(|| CoreError::Empty("bundle of zero hypervectors".into()))?;
    for v in inputs {
        first.check_same_len(v)?;
    }
    let n = first.len();
    let mut cogits = Vec::with_capacity(n);
    let mut degenerate = Vec::new();
    for i in 0..n {
        let mut alpha = Complex64::new(0.0, 0.0);
        let mut beta = Complex64::new(0.0, 0.0);
        for v in inputs {
            alpha += v.cogits[i].alpha();
            beta += v.cogits[i].beta();
        }
        match Cogit::new(alpha, beta) {
            Ok(c) => cogits.push(c),
            Err(_) => {
                degenerate.push(i);
                cogits.push(Cogit::zero());
            }
        }
    }
    Ok(BundleOutcome {
        vector: CogitHypervector::new(cogits)?,
        degenerate_indices: degenerate,
    })
}

/// Holographic binding: per-cogit phase addition combined with the XOR-like
/// probability rule `p = p_x + p_y − 2 p_x p_y`. Commutative and associative;
/// the all-`|0⟩` hypervector is the identity.
pub fn bind(x: &CogitHypervector, y: &CogitHypervector) -> Result<CogitHypervector> {
    x.check_same_len(y)?;
    let cogits = x
        .cogits
        .iter()
        .zip(&y.cogits)
        .map(|(cx, cy)| {
            // In the variable u = 1 − 2p the XOR rule is exact
            // multiplication: u = u_x · u_y, which unbind inverts by exact
            // division (relative error ~1 ulp independent of how close p_x
            // sits to 1/2).
            let u = (cx.prob_channel() * cy.prob_channel()).clamp(-1.0, 1.0);
            let phi = cx.relative_phase() + cy.relative_phase();
            Cogit::from_channel_phase(u, phi)
        })
        .collect::<Result<Vec<_>>>()?;
    CogitHypervector::new(cogits)
}

/// Inverse of [`bind`]: per-cogit phase subtraction and the inverse
/// probability map `p = (p_s − p_x) / (1 − 2 p_x)`, clamped to `[0, 1]`.
/// `unbind(bind(x, y), x) = y` exactly whenever no `p_x` sits at the
/// non-invertible fixed point `1/2`.
pub fn unbind(s: &CogitHypervector, x: &CogitHypervector) -> Result<CogitHypervector> {
    s.check_same_len(x)?;
    let cogits = s
        .cogits
        .iter()
        .zip(&x.cogits)
        .map(|(cs, cx)| {
            let (us, ux) = (cs.prob_channel(), cx.prob_channel());
            let u = if ux.abs() < 1e-300 {
                // p_x = 1/2 erases the probability channel; fall back to the
                // maximally uninformative value.
                0.0
            } else {
                (us / ux).clamp(-1.0, 1.0)
            };
            let phi = cs.relative_phase() - cx.relative_phase();
            Cogit::from_channel_phase(u, phi)
        })
        .collect::<Result<Vec<_>>>()?;
    CogitHypervector::new(cogits)
}

/// Cyclic permutation: the cogit at index `i` moves to `(i + j) mod n`.
/// `permute(permute(x, j), −j) = x` and `permute(x, n) = x`.
pub fn permute(x: &CogitHypervector, j: i64) -> CogitHypervector {
    let n = x.len() as i64;
    let shift = j.rem_euclid(n) as usize;
    let mut cogits = vec![Cogit::zero(); x.len()];
    for (i, c) in x.cogits.iter().enumerate() {
        cogits[(i + shift) % x.len()] = *c;
    }
    CogitHypervector { cogits }
}

// ---------------------------------------------------------------------------
// Measurement
// ---------------------------------------------------------------------------

/// Measurement outcome record: one bit per cogit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitVector {
    pub bits: Vec<u8>,
}

impl BitVector {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Independent per-cogit Born-rule measurement: `Pr[1] = |β_i|²`.
pub fn measure(x: &CogitHypervector, rng: &mut impl Rng) -> BitVector {
    BitVector {
        bits: x
            .cogits
            .iter()
            .map(|c| u8::from(rng.gen::<f64>() < c.prob_one()))
            .collect(),
    }
}

/// Normalized Hamming similarity: `1 − d_H/n`.
pub fn hamming_similarity(u: &BitVector, v: &BitVector) -> Result<f64> {
    if u.len() != v.len() {
        return Err(CoreError::DimensionMismatch(format!(
            "bit vector lengths {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let agree = u
        .bits
        .iter()
        .zip(&v.bits)
        .filter(|(a, b)| a == b)
        .count();
    Ok(agree as f64 / u.len() as f64)
}

/// Analytic expectation of the normalized Hamming similarity between
/// independent measurements of `x` and `y`:
/// `mean_i [ p_{x,i} p_{y,i} + (1 − p_{x,i})(1 − p_{y,i}) ]`.
pub fn expected_measurement_similarity(
    x: &CogitHypervector,
    y: &CogitHypervector,
) -> Result<f64> {
    x.check_same_len(y)?;
    let total: f64 = x
        .cogits
        .iter()
        .zip(&y.cogits)
        .map(|(cx, cy)| {
            let (px, py) = (cx.prob_one(), cy.prob_one());
            px * py + (1.0 - px) * (1.0 - py)
        })
        .sum();
    Ok(total / x.len() as f64)
}

/// Real-part cosine similarity of two complex vectors:
/// `Re⟨u, v⟩ / (‖u‖ ‖v‖)` with the Hermitian inner product.
pub fn cosine_similarity(u: &[Complex64], v: &[Complex64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(CoreError::DimensionMismatch(format!(
            "vector lengths {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let nu: f64 = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if nu < 1e-300 || nv < 1e-300 {
        return Err(CoreError::Validation("zero-norm input to cosine".into()));
    }
    let inner: Complex64 = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
    Ok(inner.re / (nu * nv))
}

// ---------------------------------------------------------------------------
// Dense states and operators
// ---------------------------------------------------------------------------

/// Full `D`-dimensional complex state vector (`D = 2^N` when built from
/// cogits; basis labels are bitstrings with cogit 0 as the most significant
/// bit).
#[derive(Clone, Debug)]
pub struct DenseState {
    amplitudes: CVector,
}

impl DenseState {
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(CoreError::Validation(format!(
                "dense state norm {norm} differs from 1"
            )));
        }
        Ok(Self {
            amplitudes: amplitudes.unscale(norm),
        })
    }

    /// Tensor product of the cogits of `x` (limited to
    /// [`MAX_DENSE_COGITS`]).
    pub fn from_cogits(x: &CogitHypervector) -> Result<Self> {
        let n = x.len();
        if n > MAX_DENSE_COGITS {
            return Err(CoreError::Validation(format!(
                "dense representation limited to {MAX_DENSE_COGITS} cogits, got {n}"
            )));
        }
        let d = 1usize << n;
        let mut amps = CVector::zeros(d);
        for idx in 0..d {
            let mut a = Complex64::new(1.0, 0.0);
            for (i, c) in x.cogits().iter().enumerate() {
                let bit = (idx >> (n - 1 - i)) & 1;
                a *= if bit == 0 { c.alpha() } else { c.beta() };
            }
            amps[idx] = a;
        }
        Self::new(amps)
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(d: usize, index: usize) -> Result<Self> {
        if index >= d {
            return Err(CoreError::Validation(format!(
                "basis index {index} outside dimension {d}"
            )));
        }
        let mut amps = CVector::zeros(d);
        amps[index] = Complex64::new(1.0, 0.0);
        Self::new(amps)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    /// Born probability of each basis outcome.
    pub fn outcome_probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Sample one basis outcome under the Born rule.
    pub fn sample_outcome(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, z) in self.amplitudes.iter().enumerate() {
            acc += z.norm_sqr();
            if u < acc {
                return i;
            }
        }
        self.dim() - 1
    }
}

/// Born rule: `Pr[a] = |⟨a|ψ⟩|²`.
pub fn born_probability(psi: &DenseState, a: &DenseState) -> Result<f64> {
    if psi.dim() != a.dim() {
        return Err(CoreError::DimensionMismatch(format!(
            "state dimensions {} vs {}",
            psi.dim(),
            a.dim()
        )));
    }
    let inner: Complex64 = a
        .amplitudes
        .iter()
        .zip(psi.amplitudes.iter())
        .map(|(x, y)| x.conj() * y)
        .sum();
    Ok(inner.norm_sqr().clamp(0.0, 1.0))
}

/// `D × D` unitary operator (`U U† = I` within 1e-10).
#[derive(Clone, Debug)]
pub struct UnitaryOperator {
    matrix: CMatrix,
}

impl UnitaryOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(CoreError::DimensionMismatch(
                "unitary must be square".into(),
            ));
        }
        let dev = unitarity_deviation(&matrix);
        if dev > 1e-8 {
            return Err(CoreError::Validation(format!(
                "unitarity deviation {dev:.3e} exceeds 1e-8"
            )));
        }
        Ok(Self { matrix })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            matrix: CMatrix::identity(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
        }
    }
}

/// Apply a unitary to a dense state: `ψ ↦ Hψ` (norm preserved within 1e-12).
pub fn apply_dynamics(h: &UnitaryOperator, psi: &DenseState) -> Result<DenseState> {
    if h.dim() != psi.dim() {
        return Err(CoreError::DimensionMismatch(format!(
            "operator dimension {} vs state dimension {}",
            h.dim(),
            psi.dim()
        )));
    }
    DenseState::new(h.matrix() * &psi.amplitudes)
}

fn permuted_basis_index(idx: usize, j: i64, n: usize) -> usize {
    let shift = j.rem_euclid(n as i64) as usize;
    let mut out = 0usize;
    for i in 0..n {
        let bit = (idx >> (n - 1 - i)) & 1;
        let target = (i + shift) % n;
        out |= bit << (n - 1 - target);
    }
    out
}

/// Dense-state analog of [`permute`]: relabel tensor factors by the cyclic
/// shift `i → (i + j) mod n`.
pub fn permute_dense(psi: &DenseState, j: i64, n: usize) -> Result<DenseState> {
    if psi.dim() != 1usize << n {
        return Err(CoreError::DimensionMismatch(format!(
            "state dimension {} does not equal 2^{n}",
            psi.dim()
        )));
    }
    let mut amps = CVector::zeros(psi.dim());
    for idx in 0..psi.dim() {
        amps[permuted_basis_index(idx, j, n)] = psi.amplitudes[idx];
    }
    DenseState::new(amps)
}

/// Conjugate `H` by the tensor-factor permutation matrix of the cyclic shift
/// `j`: the operator that acts on permuted states the way `H` acts on
/// unpermuted ones.
pub fn permute_operator(h: &UnitaryOperator, j: i64, n: usize) -> Result<UnitaryOperator> {
    let d = 1usize << n;
    if h.dim() != d {
        return Err(CoreError::DimensionMismatch(format!(
            "operator dimension {} does not equal 2^{n}",
            h.dim()
        )));
    }
    let mut permuted = CMatrix::zeros(d, d);
    // P H P† with P|b⟩ = |π(b)⟩: entry (π(r), π(c)) = H(r, c).
    for r in 0..d {
        let pr = permuted_basis_index(r, j, n);
        for c in 0..d {
            permuted[(pr, permuted_basis_index(c, j, n))] = h.matrix()[(r, c)];
        }
    }
    UnitaryOperator::new(permuted)
}
