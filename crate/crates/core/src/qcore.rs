//! Complex linear-algebra substrate: pure states, density matrices, unitaries,
//! Kronecker products, Hermitian eigendecomposition and fidelity.
//!
//! Basis index `i` of an `n`-qubit register is read little-endian: qubit `q`
//! (1-based) is bit `q - 1` of `i`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Number of qubits for a register of dimension `dim`, which must be `2^n`, `n >= 1`.
pub fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Kronecker product of a sequence of factors, left to right.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a CMatrix>) -> CMatrix {
    factors
        .into_iter()
        .fold(CMatrix::from_element(1, 1, ONE), |acc, f| kron(&acc, f))
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// Normalized Hadamard gate.
pub fn hadamard() -> CMatrix {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    CMatrix::from_row_slice(2, 2, &[h, h, h, -h])
}

/// Embed a single-qubit operator on qubit `qubit` (1-based) of an `n`-qubit register.
///
/// With the little-endian index convention qubit 1 is the rightmost Kronecker
/// factor, so the result is `I^{⊗(n-q)} ⊗ op ⊗ I^{⊗(q-1)}`.
pub fn embed_single(op: &CMatrix, qubit: usize, n: usize) -> CMatrix {
    assert!(qubit >= 1 && qubit <= n, "qubit {qubit} out of range 1..={n}");
    let high = identity(1 << (n - qubit));
    let low = identity(1 << (qubit - 1));
    kron(&kron(&high, op), &low)
}

fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Eigen-decomposition of a Hermitian matrix, eigenpairs sorted by descending eigenvalue.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Normalized amplitude vector of an `n`-qubit pure state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateJson", into = "StateJson")]
pub struct StateVector {
    amps: CVector,
    n: usize,
}

impl StateVector {
    /// Builds a state from raw amplitudes, normalizing them.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        Self::from_vector(CVector::from_vec(amps))
    }

    pub fn from_vector(amps: CVector) -> Result<Self> {
        let n = qubits_for_dim(amps.len())?;
        let norm = amps.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        Ok(Self { amps: amps / C64::new(norm, 0.0), n })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::QubitCount { n, min: 1 });
        }
        let dim = 1usize << n;
        if index >= dim {
            return Err(Error::DimensionMismatch { expected: dim, found: index });
        }
        let mut amps = CVector::zeros(dim);
        amps[index] = ONE;
        Ok(Self { amps, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn amplitude(&self, i: usize) -> C64 {
        self.amps[i]
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        self.check_dim(other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }

    /// Computational-basis outcome probabilities `|c_i|²`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn outer(&self) -> DensityMatrix {
        DensityMatrix { m: &self.amps * self.amps.adjoint() }
    }

    pub fn with_global_phase(&self, theta: f64) -> Self {
        Self { amps: &self.amps * C64::from_polar(1.0, theta), n: self.n }
    }

    /// Fixes the global phase so the largest-magnitude amplitude (first one on
    /// ties) is real and nonnegative.
    pub fn canonical_phase(self) -> Self {
        let mut best = 0;
        for (i, c) in self.amps.iter().enumerate() {
            if c.norm() > self.amps[best].norm() {
                best = i;
            }
        }
        let pivot = self.amps[best];
        if pivot.norm() == 0.0 {
            return self;
        }
        let phase = pivot.conj() / pivot.norm();
        Self { amps: self.amps * phase, n: self.n }
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: dim });
        }
        Ok(())
    }
}

/// JSON form shared by states: qubit count plus parallel real/imaginary arrays.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct StateJson {
    n: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl TryFrom<StateJson> for StateVector {
    type Error = Error;

    fn try_from(j: StateJson) -> Result<Self> {
        if j.re.len() != j.im.len() {
            return Err(Error::Parse("re and im arrays differ in length".into()));
        }
        let s = StateVector::from_amplitudes(
            j.re.iter().zip(&j.im).map(|(&r, &i)| C64::new(r, i)).collect(),
        )?;
        if s.n != j.n {
            return Err(Error::Parse(format!("n = {} but {} amplitudes", j.n, j.re.len())));
        }
        Ok(s)
    }
}

impl From<StateVector> for StateJson {
    fn from(s: StateVector) -> Self {
        StateJson {
            n: s.n,
            re: s.amps.iter().map(|c| c.re).collect(),
            im: s.amps.iter().map(|c| c.im).collect(),
        }
    }
}

/// Hermitian `d × d` matrix. Trace normalization and positivity are not
/// enforced: finite-shot reconstructions may carry small negative eigenvalues.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct DensityMatrix {
    m: CMatrix,
}

impl DensityMatrix {
    /// Accepts a matrix that is Hermitian within tolerance, snapping it to exact Hermiticity.
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        check_square_qubit(&m)?;
        let dev = max_abs_diff(&m, &m.adjoint());
        if dev > tolerance::HERMITIAN {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self::hermitian_part(m))
    }

    /// `(m + m†) / 2`.
    pub fn hermitian_part(m: CMatrix) -> Self {
        let adj = m.adjoint();
        Self { m: (m + adj) * C64::new(0.5, 0.0) }
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let dim = 1usize << n;
        Self { m: identity(dim) / C64::new(dim as f64, 0.0) }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn n(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn entry(&self, j: usize, k: usize) -> C64 {
        self.m[(j, k)]
    }

    pub fn trace(&self) -> f64 {
        self.m.diagonal().iter().map(|c| c.re).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.m.diagonal().iter().map(|c| c.re).collect()
    }

    /// Divides by the trace.
    pub fn normalized(&self) -> Result<Self> {
        let tr = self.trace();
        if tr.abs() < f64::MIN_POSITIVE || !tr.is_finite() {
            return Err(Error::Degenerate(format!("trace {tr} cannot be normalized")));
        }
        Ok(Self { m: &self.m / C64::new(tr, 0.0) })
    }

    /// `U ρ U†`.
    pub fn conjugated_by(&self, u: &UnitaryMatrix) -> Result<Self> {
        if u.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: u.dim() });
        }
        Ok(Self::hermitian_part(&u.m * &self.m * u.m.adjoint()))
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.m).0
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        max_abs_diff(&self.m, &other.m)
    }
}

fn check_square_qubit(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
    }
    qubits_for_dim(m.nrows()).map(|_| ())
}

/// JSON form shared by square matrices: dimension plus row-major real/imaginary arrays.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub(crate) struct MatrixJson {
    pub dim: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let dim = m.nrows();
        let mut re = Vec::with_capacity(dim * dim);
        let mut im = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                re.push(m[(r, c)].re);
                im.push(m[(r, c)].im);
            }
        }
        Self { dim, re, im }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let len = self.dim * self.dim;
        if self.re.len() != len || self.im.len() != len {
            return Err(Error::Parse(format!(
                "expected {len} entries for dim {}, got re={} im={}",
                self.dim,
                self.re.len(),
                self.im.len()
            )));
        }
        Ok(CMatrix::from_fn(self.dim, self.dim, |r, c| {
            C64::new(self.re[r * self.dim + c], self.im[r * self.dim + c])
        }))
    }
}

impl TryFrom<MatrixJson> for DensityMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        DensityMatrix::from_matrix(j.to_matrix()?)
    }
}

impl From<DensityMatrix> for MatrixJson {
    fn from(d: DensityMatrix) -> Self {
        MatrixJson::from_matrix(&d.m)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix {
    m: CMatrix,
}

impl UnitaryMatrix {
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        check_square_qubit(&m)?;
        let dev = max_abs_diff(&(m.adjoint() * &m), &identity(m.nrows()));
        if dev > tolerance::UNITARY {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self { m })
    }

    pub fn identity(n: usize) -> Self {
        Self { m: identity(1 << n) }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self { m: self.m.adjoint() }
    }

    pub fn compose(&self, other: &UnitaryMatrix) -> Self {
        Self { m: &self.m * &other.m }
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: psi.dim() });
        }
        StateVector::from_vector(&self.m * &psi.amps)
    }

    /// Largest entrywise deviation of `U†U` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        max_abs_diff(&(self.m.adjoint() * &self.m), &identity(self.dim()))
    }
}

/// Top eigenpair of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct Principal {
    pub state: StateVector,
    pub eigenvalue: f64,
    /// Gap to the second eigenvalue fell below [`tolerance::DEGENERACY_GAP`].
    pub degenerate: bool,
}

/// Unit eigenvector of the largest eigenvalue, in canonical global phase.
pub fn principal_eigenvector(m: &DensityMatrix) -> Result<Principal> {
    let (values, vectors) = hermitian_eigen(&m.m);
    let degenerate = values.len() > 1 && values[0] - values[1] < tolerance::DEGENERACY_GAP;
    let state = StateVector::from_vector(vectors.column(0).into_owned())?.canonical_phase();
    Ok(Principal { state, eigenvalue: values[0], degenerate })
}

/// Borrowed view of either kind of state, for [`fidelity`].
#[derive(Clone, Copy, Debug)]
pub enum StateRef<'a> {
    Pure(&'a StateVector),
    Mixed(&'a DensityMatrix),
}

impl<'a> From<&'a StateVector> for StateRef<'a> {
    fn from(s: &'a StateVector) -> Self {
        StateRef::Pure(s)
    }
}

impl<'a> From<&'a DensityMatrix> for StateRef<'a> {
    fn from(m: &'a DensityMatrix) -> Self {
        StateRef::Mixed(m)
    }
}

impl StateRef<'_> {
    fn dim(&self) -> usize {
        match self {
            StateRef::Pure(s) => s.dim(),
            StateRef::Mixed(m) => m.dim(),
        }
    }
}

/// Eigenvalues of a PSD matrix with round-off noise and tiny negatives
/// (down to `-PSD_CLIP`) set to zero.
fn clipped_spectrum(values: &[f64]) -> Result<Vec<f64>> {
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let noise = 64.0 * f64::EPSILON * values.len() as f64 * scale;
    values
        .iter()
        .map(|&v| {
            if v < -tolerance::PSD_CLIP {
                Err(Error::NotPositive(v))
            } else if v <= noise {
                Ok(0.0)
            } else {
                Ok(v)
            }
        })
        .collect()
}

/// Square root of a PSD matrix.
fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigen(m);
    let roots: Vec<C64> = clipped_spectrum(&values)?.into_iter().map(|v| C64::new(v.sqrt(), 0.0)).collect();
    let scaled = CMatrix::from_fn(vectors.nrows(), vectors.ncols(), |r, c| vectors[(r, c)] * roots[c]);
    Ok(&scaled * vectors.adjoint())
}

/// `F(ρ, σ) = (tr √(√σ ρ √σ))²` for general density matrices.
pub fn mixed_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: sigma.dim() });
    }
    psd_sqrt(&rho.m)?;
    let root = psd_sqrt(&sigma.m)?;
    let inner = &root * &rho.m * &root;
    let inner = (&inner + inner.adjoint()) * C64::new(0.5, 0.0);
    let (values, _) = hermitian_eigen(&inner);
    let tr: f64 = clipped_spectrum(&values)?.iter().map(|v| v.sqrt()).sum();
    Ok((tr * tr).clamp(0.0, 1.0))
}

/// State fidelity, `|⟨ψ|φ⟩|²` for pure pairs and `⟨ψ|ρ|ψ⟩` for pure-mixed pairs.
pub fn fidelity<'a, 'b>(a: impl Into<StateRef<'a>>, b: impl Into<StateRef<'b>>) -> Result<f64> {
    let (a, b) = (a.into(), b.into());
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    match (a, b) {
        (StateRef::Pure(x), StateRef::Pure(y)) => Ok(x.inner(y)?.norm_sqr().clamp(0.0, 1.0)),
        (StateRef::Pure(x), StateRef::Mixed(m)) | (StateRef::Mixed(m), StateRef::Pure(x)) => {
            psd_sqrt(&m.m)?;
            let v = x.amps.dotc(&(&m.m * &x.amps));
            Ok(v.re.clamp(0.0, 1.0))
        }
        (StateRef::Mixed(x), StateRef::Mixed(y)) => mixed_fidelity(x, y),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn kron_identities() {
        assert_eq!(kron(&identity(2), &identity(2)), identity(4));
    }

    #[test]
    fn kron_builds_pauli_setting_for_two_qubits() {
        // X on qubit 1 of two qubits flips bit 0: |0>↔|1>, |2>↔|3>.
        let lambda = embed_single(&pauli_x(), 1, 2);
        let mut expected = CMatrix::zeros(4, 4);
        for (r, col) in [(0, 1), (1, 0), (2, 3), (3, 2)] {
            expected[(r, col)] = ONE;
        }
        assert_eq!(lambda, expected);
        assert_eq!(kron(&identity(2), &pauli_x()), expected);
        // X on qubit 2 flips bit 1.
        assert_eq!(embed_single(&pauli_x(), 2, 2), kron(&pauli_x(), &identity(2)));
    }

    #[test]
    fn hadamard_pair_gives_uniform_amplitudes() {
        let hh = UnitaryMatrix::from_matrix(kron(&hadamard(), &hadamard())).unwrap();
        let out = hh.apply(&StateVector::basis(2, 0).unwrap()).unwrap();
        for a in out.amplitudes().iter() {
            assert_abs_diff_eq!(a.re, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn principal_eigenvector_of_projector() {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = ONE;
        let p = principal_eigenvector(&DensityMatrix::from_matrix(m).unwrap()).unwrap();
        assert_abs_diff_eq!(p.state.amplitude(0).re, 1.0, epsilon = 1e-14);
        assert!(!p.degenerate);
    }

    #[test]
    fn principal_eigenvector_dominant_diagonal() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = c(0.9, 0.0);
        m[(1, 1)] = c(0.1, 0.0);
        let p = principal_eigenvector(&DensityMatrix::from_matrix(m).unwrap()).unwrap();
        assert_abs_diff_eq!(p.state.amplitude(0).re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.eigenvalue, 0.9, epsilon = 1e-14);
    }

    #[test]
    fn principal_eigenvector_flags_degeneracy() {
        let p = principal_eigenvector(&DensityMatrix::maximally_mixed(2)).unwrap();
        assert!(p.degenerate);
        assert_abs_diff_eq!(p.state.amplitudes().norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn canonical_phase_makes_largest_amplitude_real() {
        let s = StateVector::from_amplitudes(vec![c(0.1, 0.2), c(0.0, -0.9)])
            .unwrap()
            .canonical_phase();
        assert!(s.amplitude(1).re > 0.0);
        assert_abs_diff_eq!(s.amplitude(1).im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn fidelity_basic_values() {
        let zero = StateVector::basis(1, 0).unwrap();
        let one = StateVector::basis(1, 1).unwrap();
        let plus = StateVector::from_amplitudes(vec![ONE, ONE]).unwrap();
        assert_abs_diff_eq!(fidelity(&zero, &zero).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fidelity(&zero, &one).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fidelity(&zero, &plus).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn fidelity_paths_agree() {
        let a = StateVector::from_amplitudes(vec![c(0.3, 0.1), c(-0.2, 0.5), c(0.7, 0.0), c(0.1, -0.3)]).unwrap();
        let b = StateVector::from_amplitudes(vec![c(0.5, 0.0), c(0.1, 0.2), c(-0.4, 0.3), c(0.2, 0.6)]).unwrap();
        let pure = fidelity(&a, &b).unwrap();
        let mixed = fidelity(&a.outer(), &b.outer()).unwrap();
        let half = fidelity(&a, &b.outer()).unwrap();
        assert_abs_diff_eq!(pure, mixed, epsilon = 1e-10);
        assert_abs_diff_eq!(pure, half, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&b, &a).unwrap(), pure, epsilon = 1e-15);
    }

    #[test]
    fn fidelity_with_maximally_mixed() {
        let rho = DensityMatrix::maximally_mixed(1);
        let zero = StateVector::basis(1, 0).unwrap();
        assert_abs_diff_eq!(fidelity(&zero, &rho).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&rho, &rho).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn fidelity_rejects_negative_matrix() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.2, 0.0), ZERO, ZERO, c(-0.2, 0.0)]);
        let bad = DensityMatrix::from_matrix(m).unwrap();
        let good = DensityMatrix::maximally_mixed(1);
        assert!(matches!(fidelity(&bad, &good), Err(Error::NotPositive(_))));
    }

    #[test]
    fn rejects_non_hermitian_and_non_unitary() {
        let m = CMatrix::from_row_slice(2, 2, &[ONE, ONE, ZERO, ONE]);
        assert!(matches!(DensityMatrix::from_matrix(m.clone()), Err(Error::NotHermitian(_))));
        assert!(matches!(UnitaryMatrix::from_matrix(m), Err(Error::NotUnitary(_))));
        assert!(matches!(StateVector::from_amplitudes(vec![ONE; 3]), Err(Error::NotPowerOfTwo(3))));
        assert!(matches!(StateVector::from_amplitudes(vec![ZERO; 2]), Err(Error::ZeroNorm)));
    }

    #[test]
    fn json_round_trip() {
        let s = StateVector::from_amplitudes(vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(text, r#"{"n":1,"re":[0.6,0.0],"im":[0.0,0.8]}"#);
        let back: StateVector = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);

        let rho = s.outer();
        let text = serde_json::to_string(&rho).unwrap();
        let back: DensityMatrix = serde_json::from_str(&text).unwrap();
        assert!(back.max_abs_diff(&rho) < 1e-15);
    }
}
