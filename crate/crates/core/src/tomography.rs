//! Reconstruction pipelines.
//!
//! [`mcqst_reconstruct`] runs the local-Pauli protocol end to end: diagonal
//! from the computational setting, Hamming-1 coherences from the X/Y settings,
//! rank-1 completion, trace normalization and the top eigenvector.
//! [`reconstruct_with_rotation`] screens the computational distribution first
//! and, when the support is too sparse to be completed, rotates the state by a
//! Hadamard layer before measuring. [`fivebasis_reconstruct`] is the
//! five-setting baseline working in the amplitude-sorted frame.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::completion::{self, CompletionOptions, PartialMatrix};
use crate::error::{Error, Result};
use crate::measure::{
    self, hamming_pairs, Axis, MeasurementSetting, NoiseModel, SettingId, ShotRecord,
};
use crate::qcore::{principal_eigenvector, CMatrix, DensityMatrix, StateVector, C64, ZERO};
use crate::states;
use crate::tolerance;

/// Total number of copies spent on a reconstruction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum ShotBudget {
    /// Infinite shots: exact outcome probabilities.
    #[default]
    Exact,
    Finite(u64),
}

impl std::fmt::Display for ShotBudget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ShotBudget::Exact => write!(f, "exact"),
            ShotBudget::Finite(n) => write!(f, "{n}"),
        }
    }
}

impl std::str::FromStr for ShotBudget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "exact" {
            return Ok(ShotBudget::Exact);
        }
        // Accept plain integers and scientific notation such as 1e6.
        if let Ok(n) = s.parse::<u64>() {
            return Ok(ShotBudget::Finite(n));
        }
        match s.parse::<f64>() {
            Ok(x) if x >= 1.0 && x.fract() == 0.0 && x <= u64::MAX as f64 => Ok(ShotBudget::Finite(x as u64)),
            _ => Err(Error::Parse(format!("invalid shot budget {s:?}"))),
        }
    }
}

impl Serialize for ShotBudget {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ShotBudget::Exact => s.serialize_str("exact"),
            ShotBudget::Finite(n) => s.serialize_u64(*n),
        }
    }
}

impl<'de> Deserialize<'de> for ShotBudget {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Float(f64),
            Text(String),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Int(n) => return Ok(ShotBudget::Finite(n)),
            Raw::Float(x) => x.to_string(),
            Raw::Text(t) => t,
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// How the measurement data is acquired.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub budget: ShotBudget,
    pub noise: Option<NoiseModel>,
    /// Overrides the default pivot floor.
    pub pivot_floor: Option<f64>,
}

impl RunOptions {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn shots(n_total: u64) -> Self {
        Self { budget: ShotBudget::Finite(n_total), ..Self::default() }
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Self {
        self.noise = Some(noise);
        self
    }

    fn floor(&self, settings: usize) -> f64 {
        self.pivot_floor.unwrap_or(match self.budget {
            ShotBudget::Exact => tolerance::EXACT_PIVOT_FLOOR,
            ShotBudget::Finite(n) => tolerance::shot_pivot_floor(settings, n),
        })
    }
}

/// Outcome frequencies of one setting: empirical, or exact in infinite-shot mode.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub setting: SettingId,
    pub frequencies: Vec<f64>,
    /// `None` for exact probabilities.
    pub shots: Option<u64>,
}

impl Observation {
    pub fn from_record(r: &ShotRecord) -> Result<Self> {
        Ok(Self { setting: r.setting, frequencies: r.frequencies()?, shots: Some(r.shots) })
    }
}

/// Measures `psi` in `setting`, spending `shots` copies (`None` = exact).
fn observe<R: Rng + ?Sized>(
    psi: &StateVector,
    setting: &MeasurementSetting,
    shots: Option<u64>,
    noise: Option<&NoiseModel>,
    rng: &mut R,
) -> Result<Observation> {
    let p = setting.exact_probabilities(psi)?;
    match shots {
        None => {
            let frequencies = match noise {
                Some(noise) => measure::readout_channel(&p, noise)?,
                None => p,
            };
            Ok(Observation { setting: setting.id(), frequencies, shots: None })
        }
        Some(shots) => {
            let mut record = measure::sample_counts(setting.id(), &p, shots, rng)?;
            if let Some(noise) = noise {
                record = measure::apply_readout_noise(&record, noise, rng)?;
            }
            Observation::from_record(&record)
        }
    }
}

/// Shots per setting for a budget, `None` entries in exact mode.
fn shares(budget: ShotBudget, settings: usize) -> Result<Vec<Option<u64>>> {
    match budget {
        ShotBudget::Exact => Ok(vec![None; settings]),
        ShotBudget::Finite(n) => Ok(measure::allocate_shots(n, settings)?.into_iter().map(Some).collect()),
    }
}

/// Samples shot records for all `2n + 1` local settings of `psi`.
pub fn simulate_records<R: Rng + ?Sized>(
    psi: &StateVector,
    n_total: u64,
    noise: Option<&NoiseModel>,
    rng: &mut R,
) -> Result<Vec<ShotRecord>> {
    let settings = measure::build_settings(psi.n())?;
    let shots = measure::allocate_shots(n_total, settings.len())?;
    settings
        .iter()
        .zip(shots)
        .map(|(s, k)| {
            let p = s.exact_probabilities(psi)?;
            let rec = measure::sample_counts(s.id(), &p, k, rng)?;
            match noise {
                Some(noise) => measure::apply_readout_noise(&rec, noise, rng),
                None => Ok(rec),
            }
        })
        .collect()
}

/// `ρ̂_ii = N_i / shots` from the computational record.
pub fn estimate_diagonal(record: &ShotRecord) -> Result<Vec<f64>> {
    if record.setting != SettingId::Computational {
        return Err(Error::UnexpectedSetting(record.setting));
    }
    record.frequencies()
}

/// Coherences `ρ̂_jk` for the pairs of `qubit` from X and Y frequencies.
///
/// `ρ̂_jk = ½[(p̂_X(+) − p̂_X(−)) + i(p̂_Y(−) − p̂_Y(+))]`, where `+` is outcome
/// `j` and `−` outcome `k` of each pair.
pub fn offdiagonal_from_frequencies(n: usize, qubit: usize, px: &[f64], py: &[f64]) -> Vec<((usize, usize), C64)> {
    hamming_pairs(n, qubit)
        .map(|(j, k)| {
            let re = px[j] - px[k];
            let im = py[k] - py[j];
            ((j, k), C64::new(0.5 * re, 0.5 * im))
        })
        .collect()
}

/// Coherences of one qubit from its X and Y records.
pub fn estimate_offdiagonal(x: &ShotRecord, y: &ShotRecord) -> Result<Vec<((usize, usize), C64)>> {
    let (qx, qy) = match (x.setting, y.setting) {
        (SettingId::Pauli { qubit: a, axis: Axis::X }, SettingId::Pauli { qubit: b, axis: Axis::Y }) => (a, b),
        (SettingId::Pauli { axis: Axis::X, .. }, other) | (other, _) => return Err(Error::UnexpectedSetting(other)),
    };
    if qx != qy {
        return Err(Error::UnexpectedSetting(y.setting));
    }
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), found: y.dim() });
    }
    let n = crate::qcore::qubits_for_dim(x.dim())?;
    if qx > n {
        return Err(Error::UnexpectedSetting(x.setting));
    }
    Ok(offdiagonal_from_frequencies(n, qx, &x.frequencies()?, &y.frequencies()?))
}

fn find(obs: &[Observation], id: SettingId) -> Result<&Observation> {
    obs.iter().find(|o| o.setting == id).ok_or(Error::MissingSetting(id))
}

/// Measured entries: diagonal plus both orientations of every Hamming-1 pair.
pub fn assemble_partial(n: usize, obs: &[Observation]) -> Result<PartialMatrix> {
    let d = 1usize << n;
    for o in obs {
        if o.frequencies.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: o.frequencies.len() });
        }
    }
    let mut pm = PartialMatrix::new(d);
    for (i, &p) in find(obs, SettingId::Computational)?.frequencies.iter().enumerate() {
        pm.set(i, i, C64::new(p, 0.0));
    }
    for qubit in 1..=n {
        let x = find(obs, SettingId::Pauli { qubit, axis: Axis::X })?;
        let y = find(obs, SettingId::Pauli { qubit, axis: Axis::Y })?;
        for ((j, k), v) in offdiagonal_from_frequencies(n, qubit, &x.frequencies, &y.frequencies) {
            pm.set(j, k, v);
            pm.set(k, j, v.conj());
        }
    }
    Ok(pm)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Flags {
    /// The state was rotated by a Hadamard layer before measurement.
    pub rotated: bool,
    /// The top eigenvalue of the completed matrix was degenerate.
    pub degenerate_eig: bool,
    /// The unrotated data could not be completed and rotation recovered it.
    pub sparse_failure_recovered: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReconstructionResult {
    pub estimate: StateVector,
    /// Completed, trace-normalized matrix before the eigendecomposition.
    pub raw_matrix: DensityMatrix,
    pub settings_used: usize,
    /// Copies consumed, `None` in exact mode.
    pub shots_used: Option<u64>,
    pub flags: Flags,
    /// Qubits that received a Hadamard when `flags.rotated` is set.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rotation_qubits: Vec<usize>,
}

fn total_shots(obs: &[Observation]) -> Option<u64> {
    obs.iter().map(|o| o.shots).sum()
}

/// Completion, normalization and top eigenvector for a full set of local observations.
pub fn reconstruct_observations(n: usize, obs: &[Observation], pivot_floor: f64) -> Result<ReconstructionResult> {
    let pm = assemble_partial(n, obs)?;
    let completed = completion::complete_rank1(&pm, None, &CompletionOptions::with_floor(pivot_floor))?;
    let raw_matrix = completed.normalized()?;
    let top = principal_eigenvector(&raw_matrix)?;
    Ok(ReconstructionResult {
        estimate: top.state,
        raw_matrix,
        settings_used: 2 * n + 1,
        shots_used: total_shots(obs),
        flags: Flags { degenerate_eig: top.degenerate, ..Flags::default() },
        rotation_qubits: Vec::new(),
    })
}

/// Reconstruction from recorded experiments covering all `2n + 1` local settings.
pub fn mcqst_from_records(records: &[ShotRecord], pivot_floor: Option<f64>) -> Result<ReconstructionResult> {
    let first = records.first().ok_or(Error::MissingSetting(SettingId::Computational))?;
    let n = crate::qcore::qubits_for_dim(first.dim())?;
    let obs: Vec<Observation> = records.iter().map(Observation::from_record).collect::<Result<_>>()?;
    let n_total: u64 = records.iter().map(|r| r.shots).sum();
    let floor = pivot_floor.unwrap_or_else(|| tolerance::shot_pivot_floor(2 * n + 1, n_total));
    reconstruct_observations(n, &obs, floor)
}

/// Simulates the local-Pauli protocol on `psi` and reconstructs it.
pub fn mcqst_reconstruct<R: Rng + ?Sized>(psi: &StateVector, opts: &RunOptions, rng: &mut R) -> Result<ReconstructionResult> {
    let n = psi.n();
    let settings = measure::build_settings(n)?;
    let shots = shares(opts.budget, settings.len())?;
    let obs = settings
        .iter()
        .zip(&shots)
        .map(|(s, &k)| observe(psi, s, k, opts.noise.as_ref(), rng))
        .collect::<Result<Vec<_>>>()?;
    reconstruct_observations(n, &obs, opts.floor(settings.len()))
}

/// Support screening of a computational-basis distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct Screening {
    /// Indices whose weight is statistically or readout-indistinguishable from zero.
    pub vanishing: Vec<usize>,
    /// The remaining indices are connected by single bit flips.
    pub connected: bool,
}

/// Marks vanishing diagonal entries and checks that the rest of the support is
/// connected in the hypercube, which is what rank-1 completion from Hamming-1
/// coherences needs.
///
/// An entry vanishes when it is below `floor`, or, under readout noise with
/// flip probability `q`, below `READOUT_LEAK_FACTOR · q · Σ_b diag[i ^ 2^b]`,
/// the weight single flips leak into it from its neighbours.
pub fn screen_support(diag: &[f64], floor: f64, noise: Option<&NoiseModel>) -> Screening {
    let d = diag.len();
    let n = d.trailing_zeros() as usize;
    let q = noise.map_or(0.0, |m| m.readout_flip_prob);
    let live: Vec<bool> = (0..d)
        .map(|i| {
            let leak: f64 = (0..n).map(|b| diag[i ^ (1 << b)]).sum::<f64>() * q;
            diag[i] >= floor && diag[i] > 0.0 && diag[i] >= tolerance::READOUT_LEAK_FACTOR * leak
        })
        .collect();
    let vanishing: Vec<usize> = (0..d).filter(|&i| !live[i]).collect();
    let connected = match live.iter().position(|&l| l) {
        None => false,
        Some(start) => {
            let mut seen = vec![false; d];
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(x) = stack.pop() {
                for b in 0..n {
                    let y = x ^ (1 << b);
                    if live[y] && !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
            (0..d).all(|i| !live[i] || seen[i])
        }
    };
    Screening { vanishing, connected }
}

/// Hadamard masks tried by the rotation path: the full layer first, then
/// layers on fewer qubits (more qubits first, lower mask first).
pub fn rotation_candidates(n: usize) -> Vec<usize> {
    let mut masks: Vec<usize> = (1..1usize << n).collect();
    masks.sort_by_key(|&m| (std::cmp::Reverse(m.count_ones()), m));
    masks
}

/// Local-Pauli reconstruction with sparse-support handling.
///
/// A computational measurement is taken first. If its live support is
/// connected the data is reused and the protocol proceeds unrotated.
/// Otherwise Hadamard layers from [`rotation_candidates`] are applied to the
/// state, each screened with a fresh computational measurement, and the first
/// one whose support completes is used; the estimate `V†ψ̂'` is returned in the
/// original frame. Screening measurements of rejected frames count towards
/// `shots_used`.
pub fn reconstruct_with_rotation<R: Rng + ?Sized>(
    psi: &StateVector,
    opts: &RunOptions,
    rng: &mut R,
) -> Result<ReconstructionResult> {
    let n = psi.n();
    let settings = measure::build_settings(n)?;
    let shots = shares(opts.budget, settings.len())?;
    let floor = opts.floor(settings.len());
    let noise = opts.noise.as_ref();
    let mut spent: Option<u64> = Some(0);
    let mut first_vanishing = None;

    let frames = std::iter::once(0usize).chain(rotation_candidates(n));
    for mask in frames {
        let v = states::hadamard_on(n, mask)?;
        let rotated = if mask == 0 { psi.clone() } else { v.apply(psi)? };
        let comp = observe(&rotated, &settings[0], shots[0], noise, rng)?;
        spent = spent.zip(comp.shots).map(|(a, b)| a + b);
        let screen = screen_support(&comp.frequencies, floor, noise);
        first_vanishing.get_or_insert_with(|| screen.vanishing.clone());
        if !screen.connected {
            continue;
        }
        let mut obs = vec![comp];
        for (s, &k) in settings.iter().zip(&shots).skip(1) {
            obs.push(observe(&rotated, s, k, noise, rng)?);
        }
        spent = spent.zip(total_shots(&obs[1..])).map(|(a, b)| a + b);
        match reconstruct_observations(n, &obs, floor) {
            Ok(mut res) => {
                res.shots_used = spent;
                if mask != 0 {
                    let back = v.adjoint();
                    res.estimate = back.apply(&res.estimate)?.canonical_phase();
                    res.raw_matrix = res.raw_matrix.conjugated_by(&back)?;
                    res.flags.rotated = true;
                    res.flags.sparse_failure_recovered = true;
                    res.rotation_qubits = (0..n).filter(|b| mask >> b & 1 == 1).map(|b| b + 1).collect();
                }
                return Ok(res);
            }
            Err(Error::SparseFailure { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::SparseFailure { vanishing: first_vanishing.unwrap_or_default() })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Purity {
    Pure { max_deviation: f64 },
    Impure { pair: (usize, usize), deviation: f64 },
}

impl Purity {
    pub fn is_pure(&self) -> bool {
        matches!(self, Purity::Pure { .. })
    }

    pub fn deviation(&self) -> f64 {
        match *self {
            Purity::Pure { max_deviation } => max_deviation,
            Purity::Impure { deviation, .. } => deviation,
        }
    }
}

/// Default tolerance `PURITY_SCALE / sqrt(shots_per_setting)`.
pub fn default_purity_tolerance(shots_per_setting: u64) -> f64 {
    tolerance::PURITY_SCALE / (shots_per_setting.max(1) as f64).sqrt()
}

/// Checks `|ρ_ij|² = |ρ_ii||ρ_jj|` on every known off-diagonal entry whose two
/// diagonal entries are known.
pub fn purity_certify(pm: &PartialMatrix, tol: f64) -> Purity {
    let mut worst = (0.0, (0, 0));
    for (i, j) in pm.known_positions() {
        if i == j {
            continue;
        }
        let (Some(a), Some(b)) = (pm.get(i, i), pm.get(j, j)) else { continue };
        let dev = (pm.entries()[(i, j)].norm_sqr() - a.norm() * b.norm()).abs();
        if dev > worst.0 {
            worst = (dev, (i, j));
        }
    }
    if worst.0 <= tol {
        Purity::Pure { max_deviation: worst.0 }
    } else {
        Purity::Impure { pair: worst.1, deviation: worst.0 }
    }
}

/// [`purity_certify`] on every entry of a full matrix.
pub fn purity_certify_matrix(m: &DensityMatrix, tol: f64) -> Purity {
    let d = m.dim();
    let pm = PartialMatrix::observe(m.matrix(), (0..d).flat_map(|j| (0..d).map(move |k| (j, k))));
    purity_certify(&pm, tol)
}

/// Five-setting baseline.
///
/// The computational measurement gives `|c_i|` and the sorting permutation
/// `U_p`. In the sorted frame the four pairing bases over `(2t, 2t+1)` and
/// `(2t+1, 2t+2)`, each in X and Y form, give every consecutive coherence;
/// chaining them yields the first row, the matrix follows from
/// `ρ_ij = ρ_i0 ρ_0j / ρ_00`, and the state is assembled from the measured
/// moduli and the phases of the first column before undoing `U_p`.
pub fn fivebasis_reconstruct<R: Rng + ?Sized>(psi: &StateVector, opts: &RunOptions, rng: &mut R) -> Result<ReconstructionResult> {
    const SETTINGS: usize = 5;
    let n = psi.n();
    let d = psi.dim();
    let shots = shares(opts.budget, SETTINGS)?;
    let floor = opts.floor(SETTINGS);
    let noise = opts.noise.as_ref();

    let comp = observe(psi, &MeasurementSetting::computational(n)?, shots[0], noise, rng)?;
    let order = states::descending_order(&comp.frequencies);
    let up = states::permutation_unitary(&comp.frequencies)?;
    let sorted = up.apply(psi)?;
    let diag: Vec<f64> = order.iter().map(|&i| comp.frequencies[i]).collect();
    if diag[0] < floor || diag[0] <= 0.0 {
        return Err(Error::Degenerate("largest computational weight vanishes".into()));
    }

    let mut pairing = Vec::with_capacity(4);
    for (offset, axis) in [(0, Axis::X), (0, Axis::Y), (1, Axis::X), (1, Axis::Y)] {
        let s = MeasurementSetting::staggered(n, offset, axis)?;
        pairing.push(observe(&sorted, &s, shots[1 + pairing.len()], noise, rng)?);
    }
    let mut obs_shots = comp.shots;
    for o in &pairing {
        obs_shots = obs_shots.zip(o.shots).map(|(a, b)| a + b);
    }

    // Consecutive coherences ρ(t, t+1).
    let coherence = |t: usize| {
        let (px, py) = (&pairing[2 * (t % 2)].frequencies, &pairing[2 * (t % 2) + 1].frequencies);
        C64::new(0.5 * (px[t] - px[t + 1]), 0.5 * (py[t + 1] - py[t]))
    };
    // First row by chaining: ρ(0,k) = ρ(0,k-1) ρ(k-1,k) / ρ(k-1,k-1).
    let mut row = vec![ZERO; d];
    row[0] = C64::new(diag[0], 0.0);
    for k in 1..d {
        if diag[k - 1] < floor || diag[k - 1] <= 0.0 {
            break;
        }
        row[k] = row[k - 1] * coherence(k - 1) / diag[k - 1];
    }

    let filled = CMatrix::from_fn(d, d, |i, j| row[i].conj() * row[j] / diag[0]);
    let raw_sorted = DensityMatrix::hermitian_part(filled).normalized()?;
    let amps: Vec<C64> = (0..d)
        .map(|i| {
            let phase = row[i].conj();
            let modulus = diag[i].max(0.0).sqrt();
            if phase.norm() > 0.0 { phase / phase.norm() * modulus } else { C64::new(modulus, 0.0) }
        })
        .collect();
    let back = up.adjoint();
    let estimate = back.apply(&StateVector::from_amplitudes(amps)?)?.canonical_phase();
    let raw_matrix = raw_sorted.conjugated_by(&back)?;
    let degenerate_eig = principal_eigenvector(&raw_matrix)?.degenerate;
    Ok(ReconstructionResult {
        estimate,
        raw_matrix,
        settings_used: SETTINGS,
        shots_used: obs_shots,
        flags: Flags { degenerate_eig, ..Flags::default() },
        rotation_qubits: Vec::new(),
    })
}
