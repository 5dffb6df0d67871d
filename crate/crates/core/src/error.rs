use thiserror::Error;

use crate::measure::SettingId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {0} is not a power of two (>= 2)")]
    NotPowerOfTwo(usize),

    #[error("state vector has zero norm")]
    ZeroNorm,

    #[error("qubit count {n} below minimum {min}")]
    QubitCount { n: usize, min: usize },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("matrix is not positive semidefinite (eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),

    #[error("readout flip probability {0} outside [0, 0.5)")]
    InvalidNoise(f64),

    #[error("record has zero shots")]
    ZeroShots,

    #[error("shot record for {setting} is inconsistent: counts sum to {sum} but shots = {shots}")]
    InconsistentRecord { setting: SettingId, sum: u64, shots: u64 },

    #[error("missing measurement setting {0}")]
    MissingSetting(SettingId),

    #[error("unexpected measurement setting {0}")]
    UnexpectedSetting(SettingId),

    #[error("shot budget {budget} smaller than the {settings} settings required")]
    InsufficientShots { budget: u64, settings: usize },

    #[error("known entries do not determine a rank-1 completion: {0}")]
    Infeasible(String),

    #[error("rank-1 completion needs a pivot through vanishing diagonals {vanishing:?}")]
    SparseFailure { vanishing: Vec<usize> },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
