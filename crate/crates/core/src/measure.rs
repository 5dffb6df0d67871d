//! Measurement settings, exact outcome probabilities and finite-shot sampling.
//!
//! The local settings are the computational basis plus the X and Y eigenbases
//! of every single qubit. A Pauli setting on qubit `q` pairs each index `j`
//! whose bit `q - 1` is clear with `k = j + 2^(q-1)`; outcome `j` is the `+1`
//! eigenvector `(|j⟩ + φ|k⟩)/√2` and outcome `k` the `-1` eigenvector
//! `(|j⟩ - φ|k⟩)/√2`, with `φ = 1` for X and `φ = i` for Y. This is exactly
//! what a rotation on qubit `q` followed by a computational readout reports,
//! so a readout bit flip on that qubit swaps the two outcomes of a pair.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{self, CMatrix, StateVector, C64, I, ONE};
use crate::tolerance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    /// Relative phase of the `+1` eigenvector.
    fn phase(self) -> C64 {
        match self {
            Axis::X => ONE,
            Axis::Y => I,
        }
    }

    fn letter(self) -> char {
        match self {
            Axis::X => 'X',
            Axis::Y => 'Y',
        }
    }
}

/// Identifier of a measurement setting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SettingId {
    Computational,
    /// Eigenbasis of X or Y on a single qubit (1-based).
    Pauli { qubit: usize, axis: Axis },
    /// Entangled pairing basis over consecutive indices `(2t + offset, 2t + offset + 1)`,
    /// used by the five-setting baseline.
    Staggered { offset: usize, axis: Axis },
}

impl fmt::Display for SettingId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SettingId::Computational => write!(f, "Z"),
            SettingId::Pauli { qubit, axis } => write!(f, "{}{}", axis.letter(), qubit),
            SettingId::Staggered { offset, axis } => write!(f, "S{}{}", offset, axis.letter()),
        }
    }
}

impl FromStr for SettingId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unknown setting id {s:?}"));
        let axis = |c: char| match c {
            'X' => Some(Axis::X),
            'Y' => Some(Axis::Y),
            _ => None,
        };
        if s == "Z" {
            return Ok(SettingId::Computational);
        }
        let mut chars = s.chars();
        match chars.next() {
            Some('S') => {
                let offset = chars.next().and_then(|c| c.to_digit(10)).ok_or_else(bad)? as usize;
                let axis = chars.next().and_then(axis).ok_or_else(bad)?;
                if offset > 1 || chars.next().is_some() {
                    return Err(bad());
                }
                Ok(SettingId::Staggered { offset, axis })
            }
            Some(c) => {
                let axis = axis(c).ok_or_else(bad)?;
                let qubit: usize = chars.as_str().parse().map_err(|_| bad())?;
                if qubit == 0 {
                    return Err(bad());
                }
                Ok(SettingId::Pauli { qubit, axis })
            }
            None => Err(bad()),
        }
    }
}

impl Serialize for SettingId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SettingId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Index pairs `(j, k = j + 2^(q-1))` exposed by the Pauli settings of qubit `q`.
///
/// Enumerates `j = 2^q ν + ζ` with `ν < d / 2^q` and `ζ < 2^(q-1)`: the `d/2`
/// indices whose bit `q - 1` is clear.
pub fn hamming_pairs(n: usize, qubit: usize) -> impl Iterator<Item = (usize, usize)> {
    assert!(qubit >= 1 && qubit <= n, "qubit {qubit} out of range 1..={n}");
    let half = 1usize << (qubit - 1);
    let blocks = 1usize << (n - qubit);
    (0..blocks).flat_map(move |nu| (0..half).map(move |zeta| (2 * half * nu + zeta, 2 * half * nu + zeta + half)))
}

/// One orthonormal measurement basis; column `m` of `basis` is the vector for outcome `m`.
#[derive(Clone, Debug)]
pub struct MeasurementSetting {
    id: SettingId,
    n: usize,
    basis: CMatrix,
}

fn pair_basis(dim: usize, pairs: impl IntoIterator<Item = (usize, usize)>, phase: C64) -> CMatrix {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut basis = qcore::identity(dim);
    for (j, k) in pairs {
        basis[(j, j)] = h;
        basis[(k, j)] = phase * h;
        basis[(j, k)] = h;
        basis[(k, k)] = -phase * h;
    }
    basis
}

impl MeasurementSetting {
    pub fn computational(n: usize) -> Result<Self> {
        check_qubits(n)?;
        Ok(Self { id: SettingId::Computational, n, basis: qcore::identity(1 << n) })
    }

    pub fn pauli(n: usize, qubit: usize, axis: Axis) -> Result<Self> {
        check_qubits(n)?;
        if qubit == 0 || qubit > n {
            return Err(Error::QubitCount { n: qubit, min: 1 });
        }
        let basis = pair_basis(1 << n, hamming_pairs(n, qubit), axis.phase());
        Ok(Self { id: SettingId::Pauli { qubit, axis }, n, basis })
    }

    /// Pairing basis over `(2t + offset, 2t + offset + 1)`; unpaired indices stay computational.
    pub fn staggered(n: usize, offset: usize, axis: Axis) -> Result<Self> {
        check_qubits(n)?;
        let dim = 1usize << n;
        let pairs = (offset..dim.saturating_sub(1)).step_by(2).map(|j| (j, j + 1));
        let basis = pair_basis(dim, pairs, axis.phase());
        Ok(Self { id: SettingId::Staggered { offset: offset & 1, axis }, n, basis })
    }

    pub fn from_id(n: usize, id: SettingId) -> Result<Self> {
        match id {
            SettingId::Computational => Self::computational(n),
            SettingId::Pauli { qubit, axis } => Self::pauli(n, qubit, axis),
            SettingId::Staggered { offset, axis } => Self::staggered(n, offset, axis),
        }
    }

    pub fn id(&self) -> SettingId {
        self.id
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn basis_vector(&self, outcome: usize) -> StateVector {
        StateVector::from_vector(self.basis.column(outcome).into_owned())
            .expect("basis vectors are unit norm")
    }

    /// `p_m = |⟨V_m|ψ⟩|²` for every outcome `m`.
    pub fn exact_probabilities(&self, psi: &StateVector) -> Result<Vec<f64>> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: psi.dim() });
        }
        let overlaps = self.basis.adjoint() * psi.amplitudes();
        Ok(overlaps.iter().map(|c| c.norm_sqr()).collect())
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > 16 {
        return Err(Error::QubitCount { n, min: 1 });
    }
    Ok(())
}

/// The `2n + 1` local settings: computational first, then `X_q, Y_q` for `q = 1..n`.
pub fn build_settings(n: usize) -> Result<Vec<MeasurementSetting>> {
    let mut settings = vec![MeasurementSetting::computational(n)?];
    for qubit in 1..=n {
        for axis in [Axis::X, Axis::Y] {
            settings.push(MeasurementSetting::pauli(n, qubit, axis)?);
        }
    }
    Ok(settings)
}

/// Ids of the local settings in [`build_settings`] order.
pub fn local_setting_ids(n: usize) -> Vec<SettingId> {
    std::iter::once(SettingId::Computational)
        .chain((1..=n).flat_map(|qubit| [Axis::X, Axis::Y].map(|axis| SettingId::Pauli { qubit, axis })))
        .collect()
}

/// Splits `n_total` shots evenly over `settings`; the remainder goes to the first setting.
pub fn allocate_shots(n_total: u64, settings: usize) -> Result<Vec<u64>> {
    if settings == 0 || n_total < settings as u64 {
        return Err(Error::InsufficientShots { budget: n_total, settings });
    }
    let each = n_total / settings as u64;
    let mut out = vec![each; settings];
    out[0] += n_total - each * settings as u64;
    Ok(out)
}

/// Outcome histogram of one setting.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawRecord")]
pub struct ShotRecord {
    pub setting: SettingId,
    pub counts: Vec<u64>,
    pub shots: u64,
}

#[derive(Deserialize)]
struct RawRecord {
    setting: SettingId,
    counts: Vec<u64>,
    shots: u64,
}

impl TryFrom<RawRecord> for ShotRecord {
    type Error = Error;

    fn try_from(r: RawRecord) -> Result<Self> {
        ShotRecord::new(r.setting, r.counts)
            .and_then(|rec| if rec.shots == r.shots { Ok(rec) } else {
                Err(Error::InconsistentRecord { setting: r.setting, sum: rec.shots, shots: r.shots })
            })
    }
}

impl ShotRecord {
    pub fn new(setting: SettingId, counts: Vec<u64>) -> Result<Self> {
        qcore::qubits_for_dim(counts.len())?;
        let shots = counts.iter().sum();
        Ok(Self { setting, counts, shots })
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    /// Empirical outcome frequencies.
    pub fn frequencies(&self) -> Result<Vec<f64>> {
        if self.shots == 0 {
            return Err(Error::ZeroShots);
        }
        let total = self.shots as f64;
        Ok(self.counts.iter().map(|&c| c as f64 / total).collect())
    }
}

/// Checks a probability vector and returns it with tiny negatives clipped.
fn clean_probabilities(p: &[f64]) -> Result<Vec<f64>> {
    if let Some(&bad) = p.iter().find(|&&x| !x.is_finite() || x < -tolerance::NEG_PROB) {
        return Err(Error::InvalidProbabilities(format!("entry {bad}")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > tolerance::PROB_SUM {
        return Err(Error::InvalidProbabilities(format!("sum {sum}")));
    }
    Ok(p.iter().map(|&x| x.max(0.0)).collect())
}

/// Multinomial draw of `shots` outcomes from `p`, by sequential conditional binomials.
pub fn sample_counts<R: Rng + ?Sized>(
    setting: SettingId,
    p: &[f64],
    shots: u64,
    rng: &mut R,
) -> Result<ShotRecord> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let p = clean_probabilities(p)?;
    let mut counts = vec![0u64; p.len()];
    let mut left = shots;
    let mut mass: f64 = p.iter().sum();
    for (i, &pi) in p.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == p.len() || mass <= pi {
            counts[i] = left;
            break;
        }
        let q = (pi / mass).clamp(0.0, 1.0);
        let draw = Binomial::new(left, q).expect("q in [0, 1]").sample(rng);
        counts[i] = draw;
        left -= draw;
        mass -= pi;
    }
    ShotRecord::new(setting, counts)
}

/// Independent classical bit flip of every readout bit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub readout_flip_prob: f64,
}

impl NoiseModel {
    pub fn new(readout_flip_prob: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&readout_flip_prob) {
            return Err(Error::InvalidNoise(readout_flip_prob));
        }
        Ok(Self { readout_flip_prob })
    }

    /// Readout error of the reference superconducting device.
    pub fn device() -> Self {
        Self { readout_flip_prob: tolerance::DEVICE_READOUT_FLIP }
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.readout_flip_prob).map(|_| ())
    }
}

/// Flips every bit of every recorded outcome independently with the model's probability.
///
/// Bits are independent, so flipping bit by bit with one binomial per
/// (index, bit) is an exact draw from the noisy histogram.
pub fn apply_readout_noise<R: Rng + ?Sized>(
    record: &ShotRecord,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<ShotRecord> {
    noise.validate()?;
    let p = noise.readout_flip_prob;
    let mut counts = record.counts.clone();
    if p == 0.0 {
        return Ok(record.clone());
    }
    let n = qcore::qubits_for_dim(counts.len())?;
    for bit in 0..n {
        let mask = 1usize << bit;
        let before = counts.clone();
        for (x, &c) in before.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let moved = Binomial::new(c, p).expect("p in [0, 0.5)").sample(rng);
            counts[x] -= moved;
            counts[x ^ mask] += moved;
        }
    }
    ShotRecord::new(record.setting, counts)
}

/// Outcome distribution after the readout channel, computed exactly.
pub fn readout_channel(p: &[f64], noise: &NoiseModel) -> Result<Vec<f64>> {
    noise.validate()?;
    let flip = noise.readout_flip_prob;
    let n = qcore::qubits_for_dim(p.len())?;
    let mut out = p.to_vec();
    for bit in 0..n {
        let mask = 1usize << bit;
        let before = out.clone();
        for x in 0..out.len() {
            out[x] = (1.0 - flip) * before[x] + flip * before[x ^ mask];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::RngSeed;
    use approx::assert_abs_diff_eq;

    fn plus() -> StateVector {
        StateVector::from_amplitudes(vec![ONE, ONE]).unwrap()
    }

    fn plus_i() -> StateVector {
        StateVector::from_amplitudes(vec![ONE, I]).unwrap()
    }

    #[test]
    fn one_qubit_settings() {
        let s = build_settings(1).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s[0].id(), SettingId::Computational);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let x = &s[1];
        assert_abs_diff_eq!(x.basis()[(1, 0)].re, h, epsilon = 1e-15);
        assert_abs_diff_eq!(x.basis()[(1, 1)].re, -h, epsilon = 1e-15);
        let y = &s[2];
        assert_abs_diff_eq!(y.basis()[(1, 0)].im, h, epsilon = 1e-15);
        assert_abs_diff_eq!(y.basis()[(1, 1)].im, -h, epsilon = 1e-15);
    }

    #[test]
    fn enumerates_pairs_with_bit_clear() {
        assert_eq!(hamming_pairs(2, 2).collect::<Vec<_>>(), vec![(0, 2), (1, 3)]);
        assert_eq!(hamming_pairs(2, 1).collect::<Vec<_>>(), vec![(0, 1), (2, 3)]);
        // Oracle: every j with bit q-1 clear, in increasing order.
        for n in 1..=5 {
            for q in 1..=n {
                let oracle: Vec<_> = (0..1usize << n)
                    .filter(|j| j >> (q - 1) & 1 == 0)
                    .map(|j| (j, j | 1 << (q - 1)))
                    .collect();
                assert_eq!(hamming_pairs(n, q).collect::<Vec<_>>(), oracle);
            }
        }
    }

    #[test]
    fn three_qubit_settings_are_orthonormal() {
        let settings = build_settings(3).unwrap();
        assert_eq!(settings.len(), 7);
        for s in &settings {
            assert_eq!(s.basis().ncols(), 8);
            let gram = s.basis().adjoint() * s.basis();
            assert!((gram - qcore::identity(8)).norm() < 1e-12, "{}", s.id());
        }
    }

    #[test]
    fn exact_probability_cases() {
        let x = MeasurementSetting::pauli(1, 1, Axis::X).unwrap();
        let p = x.exact_probabilities(&plus()).unwrap();
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.0, epsilon = 1e-15);

        // Oracle: explicit inner product with (|0> + i|1>)/sqrt(2).
        let y = MeasurementSetting::pauli(1, 1, Axis::Y).unwrap();
        let target = StateVector::from_amplitudes(vec![ONE, I]).unwrap();
        let overlap = target.inner(&plus_i()).unwrap().norm_sqr();
        let p = y.exact_probabilities(&plus_i()).unwrap();
        assert_abs_diff_eq!(p[0], overlap, epsilon = 1e-15);
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(target.inner(&y.basis_vector(0)).unwrap().re, 1.0, epsilon = 1e-15);

        let z = MeasurementSetting::computational(2).unwrap();
        let p = z.exact_probabilities(&StateVector::basis(2, 0).unwrap()).unwrap();
        assert_eq!(p, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn sampling_cases() {
        let mut rng = RngSeed(3).rng();
        let r = sample_counts(SettingId::Computational, &[1.0, 0.0], 100, &mut rng).unwrap();
        assert_eq!(r.counts, vec![100, 0]);
        let r = sample_counts(SettingId::Computational, &[0.5, 0.5], 1_000_000, &mut rng).unwrap();
        assert!((r.counts[0] as f64 / 1e6 - 0.5).abs() < 0.002);
        assert_eq!(r.counts.iter().sum::<u64>(), r.shots);
        assert!(sample_counts(SettingId::Computational, &[1.1, -0.1], 10, &mut rng).is_err());
        assert!(sample_counts(SettingId::Computational, &[0.5, 0.4], 10, &mut rng).is_err());
        assert!(sample_counts(SettingId::Computational, &[0.5, 0.5], 0, &mut rng).is_err());
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let p = [0.1, 0.2, 0.3, 0.4];
        let a = sample_counts(SettingId::Computational, &p, 5000, &mut RngSeed(9).rng()).unwrap();
        let b = sample_counts(SettingId::Computational, &p, 5000, &mut RngSeed(9).rng()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn readout_noise_cases() {
        let mut rng = RngSeed(4).rng();
        let rec = ShotRecord::new(SettingId::Computational, vec![1000, 0]).unwrap();
        let same = apply_readout_noise(&rec, &NoiseModel::new(0.0).unwrap(), &mut rng).unwrap();
        assert_eq!(same, rec);

        let big = ShotRecord::new(SettingId::Computational, vec![400_000, 0, 0, 0]).unwrap();
        let scrambled = apply_readout_noise(&big, &NoiseModel::new(0.4999).unwrap(), &mut rng).unwrap();
        for c in &scrambled.counts {
            assert!((*c as f64 / 400_000.0 - 0.25).abs() < 0.005);
        }
        assert_eq!(scrambled.shots, big.shots);

        // Binomial expectation: (1 - p, p) * 1000 with p = 2.653e-2 -> (973.47, 26.53).
        let dev = NoiseModel::device();
        let trials = 2000;
        let mut flipped = 0u64;
        for _ in 0..trials {
            flipped += apply_readout_noise(&rec, &dev, &mut rng).unwrap().counts[1];
        }
        let mean = flipped as f64 / trials as f64;
        assert!((mean - 26.53).abs() < 0.5, "mean {mean}");
        let expected = readout_channel(&[1.0, 0.0], &dev).unwrap();
        assert_abs_diff_eq!(expected[1] * 1000.0, 26.53, epsilon = 1e-9);

        assert!(NoiseModel::new(0.5).is_err());
        assert!(NoiseModel::new(-0.1).is_err());
    }

    #[test]
    fn allocation_rounding() {
        assert_eq!(allocate_shots(10, 3).unwrap(), vec![4, 3, 3]);
        assert_eq!(allocate_shots(3000, 3).unwrap(), vec![1000, 1000, 1000]);
        assert!(allocate_shots(2, 3).is_err());
    }

    #[test]
    fn setting_ids_round_trip_through_strings() {
        for id in local_setting_ids(3)
            .into_iter()
            .chain([0, 1].into_iter().flat_map(|o| [Axis::X, Axis::Y].map(|axis| SettingId::Staggered { offset: o, axis })))
        {
            assert_eq!(id.to_string().parse::<SettingId>().unwrap(), id);
        }
        assert!("Q1".parse::<SettingId>().is_err());
        assert!("X0".parse::<SettingId>().is_err());
    }

    #[test]
    fn record_json_validates_totals() {
        let ok = r#"{"setting":"X2","counts":[3,1,0,0],"shots":4}"#;
        let rec: ShotRecord = serde_json::from_str(ok).unwrap();
        assert_eq!(rec.setting, SettingId::Pauli { qubit: 2, axis: Axis::X });
        let bad = r#"{"setting":"X2","counts":[3,1,0,0],"shots":5}"#;
        assert!(serde_json::from_str::<ShotRecord>(bad).is_err());
    }

    #[test]
    fn staggered_bases_are_orthonormal() {
        for offset in [0, 1] {
            for axis in [Axis::X, Axis::Y] {
                let s = MeasurementSetting::staggered(3, offset, axis).unwrap();
                let gram = s.basis().adjoint() * s.basis();
                assert!((gram - qcore::identity(8)).norm() < 1e-12);
            }
        }
    }
}
