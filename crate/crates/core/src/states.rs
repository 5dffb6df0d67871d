//! Test states and structured unitaries: Haar-random states, GHZ, sorting
//! permutations and Hadamard layers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{self, CMatrix, CVector, StateVector, UnitaryMatrix, C64, ONE};

/// Root seed of a reproducible random stream.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

impl RngSeed {
    /// Child seed depending on every element of `parts`, in order.
    pub fn derive(self, parts: &[u64]) -> RngSeed {
        let mut h = splitmix64(self.0);
        for &p in parts {
            h = splitmix64(h ^ splitmix64(p));
        }
        RngSeed(h)
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

/// Haar-random pure state: `2^n` i.i.d. standard complex Gaussians, normalized.
pub fn haar_random_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<StateVector> {
    if n == 0 {
        return Err(Error::QubitCount { n, min: 1 });
    }
    let dim = 1usize << n;
    let amps = (0..dim)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    StateVector::from_amplitudes(amps)
}

/// `(|0…0⟩ + |1…1⟩)/√2`.
pub fn ghz_state(n: usize) -> Result<StateVector> {
    if n < 2 {
        return Err(Error::QubitCount { n, min: 2 });
    }
    let dim = 1usize << n;
    let mut amps = CVector::zeros(dim);
    amps[0] = ONE;
    amps[dim - 1] = ONE;
    StateVector::from_vector(amps)
}

/// Indices ordered by descending weight, ties by lower index first.
pub fn descending_order(weights: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]));
    order
}

/// `U_p = Σ_k |k⟩⟨[k]|`, where `[k]` is the index of the k-th largest weight.
pub fn permutation_unitary(weights: &[f64]) -> Result<UnitaryMatrix> {
    let dim = weights.len();
    qcore::qubits_for_dim(dim)?;
    let mut m = CMatrix::zeros(dim, dim);
    for (k, src) in descending_order(weights).into_iter().enumerate() {
        m[(k, src)] = ONE;
    }
    UnitaryMatrix::from_matrix(m)
}

/// Hadamard gates on the qubits whose bit is set in `mask` (qubit q is bit q-1),
/// identities elsewhere.
pub fn hadamard_on(n: usize, mask: usize) -> Result<UnitaryMatrix> {
    if n == 0 {
        return Err(Error::QubitCount { n, min: 1 });
    }
    let id = qcore::identity(2);
    let h = qcore::hadamard();
    // Highest qubit is the leftmost factor.
    let factors: Vec<&CMatrix> = (0..n)
        .rev()
        .map(|b| if mask >> b & 1 == 1 { &h } else { &id })
        .collect();
    UnitaryMatrix::from_matrix(qcore::kron_all(factors))
}

/// `H^{⊗n}` with the normalized Hadamard.
pub fn hadamard_layer(n: usize) -> Result<UnitaryMatrix> {
    hadamard_on(n, (1usize << n) - 1)
}
