//! Numerical tolerances and calibration constants shared across the crate.

/// Unit-norm tolerance for state vectors.
pub const NORM: f64 = 1e-12;

/// Hermiticity tolerance for density matrices.
pub const HERMITIAN: f64 = 1e-12;

/// Unitarity tolerance, `U†U = I`.
pub const UNITARY: f64 = 1e-10;

/// Eigenvalue gap below which the top eigenvalue is reported as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-12;

/// Eigenvalues in `[-PSD_CLIP, 0)` are clipped to zero; anything lower is an error.
pub const PSD_CLIP: f64 = 1e-9;

/// Allowed deviation of a probability vector's sum from one.
pub const PROB_SUM: f64 = 1e-9;

/// Most negative probability tolerated when sampling.
pub const NEG_PROB: f64 = 1e-12;

/// Pivot floor used for infinite-shot (exact probability) reconstructions.
pub const EXACT_PIVOT_FLOOR: f64 = 1e-12;

/// Expected shot counts below which a diagonal entry counts as vanishing.
/// The finite-shot pivot floor is `PIVOT_FLOOR_COUNTS * settings / n_total`.
pub const PIVOT_FLOOR_COUNTS: f64 = 10.0;

/// Scale of the default purity tolerance, `PURITY_SCALE / sqrt(shots_per_setting)`.
pub const PURITY_SCALE: f64 = 5.0;

/// Readout-limited screening: a diagonal entry smaller than this multiple of
/// the weight that single bit flips leak into it from its neighbours is
/// indistinguishable from readout error.
pub const READOUT_LEAK_FACTOR: f64 = 2.0;

/// Representative superconducting-device readout error; the default flip
/// probability of [`NoiseModel::device`](crate::measure::NoiseModel::device).
pub const DEVICE_READOUT_FLIP: f64 = 2.653e-2;

/// Pivot floor for a finite budget of `n_total` shots spread over `settings` settings.
pub fn shot_pivot_floor(settings: usize, n_total: u64) -> f64 {
    PIVOT_FLOOR_COUNTS * settings as f64 / n_total as f64
}
