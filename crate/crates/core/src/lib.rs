//! Pure-state tomography by rank-1 matrix completion.
//!
//! An `n`-qubit pure state is measured in `2n + 1` local settings: the
//! computational basis, which yields the diagonal of `ρ = |ψ⟩⟨ψ|`, and the X
//! and Y eigenbases of each qubit, which yield every coherence `ρ_jk` between
//! indices differing in a single bit. The remaining entries follow from the
//! rank-1 constraint and the estimate is the top eigenvector of the completed,
//! trace-normalized matrix.
//!
//! * [`qcore`]: states, density matrices, unitaries, fidelity.
//! * [`states`]: Haar-random and GHZ states, permutation and Hadamard unitaries.
//! * [`measure`]: settings, exact probabilities, shot sampling, readout noise.
//! * [`completion`]: row-column feasibility and rank-1 filling.
//! * [`tomography`]: reconstruction pipelines, purity check, five-setting baseline.
//! * [`bench`]: parameter sweeps, CSV output and median aggregation.

pub mod bench;
pub mod completion;
pub mod error;
pub mod measure;
pub mod qcore;
pub mod states;
pub mod tolerance;
pub mod tomography;

pub use error::{Error, Result};
