//! Benchmark harness: seeded trials over a grid of qubit counts and shot
//! budgets, CSV/JSON output and median aggregation.
//!
//! Every trial draws from its own stream, `seed.derive([n, N_total, trial])`,
//! so rows are reproducible individually and independent of thread count.
//! Both protocols see the same state for a given grid point and trial.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::NoiseModel;
use crate::qcore::{fidelity, StateVector};
use crate::states::{ghz_state, haar_random_state, RngSeed};
use crate::tomography::{self, RunOptions, ShotBudget};

/// First line of every CSV written by [`write_csv`].
pub const CSV_HEADER_COMMENT: &str = "# mcqst-bench v1";

pub const CSV_COLUMNS: [&str; 9] =
    ["protocol", "n", "N_total", "trial", "seed", "fidelity", "infidelity", "wall_time_ms", "error"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Mcqst,
    Fivebasis,
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Protocol::Mcqst => "mcqst",
            Protocol::Fivebasis => "fivebasis",
        })
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mcqst" => Ok(Protocol::Mcqst),
            "fivebasis" => Ok(Protocol::Fivebasis),
            _ => Err(Error::Parse(format!("unknown protocol {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolChoice {
    Mcqst,
    Fivebasis,
    #[default]
    Both,
}

impl ProtocolChoice {
    pub fn protocols(self) -> Vec<Protocol> {
        match self {
            ProtocolChoice::Mcqst => vec![Protocol::Mcqst],
            ProtocolChoice::Fivebasis => vec![Protocol::Fivebasis],
            ProtocolChoice::Both => vec![Protocol::Mcqst, Protocol::Fivebasis],
        }
    }
}

/// Where trial states come from: `"haar"`, `"ghz"` or `{"file": "state.json"}`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateSource {
    #[default]
    Haar,
    Ghz,
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub protocol: ProtocolChoice,
    pub n_range: Vec<usize>,
    pub shots_range: Vec<ShotBudget>,
    pub trials: usize,
    #[serde(default)]
    pub seed: RngSeed,
    #[serde(default)]
    pub noise: Option<NoiseModel>,
    #[serde(default)]
    pub state_source: StateSource,
    /// Use the rotation path for the local-Pauli protocol.
    #[serde(default)]
    pub rotation: bool,
    /// Record wall-clock times; off by default so output is byte-reproducible.
    #[serde(default)]
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(noise) = &self.noise {
            noise.validate()?;
        }
        if self.trials == 0 {
            return Err(Error::Parse("trials must be at least 1".into()));
        }
        if let Some(&n) = self.n_range.iter().find(|&&n| n == 0 || n > 16) {
            return Err(Error::QubitCount { n, min: 1 });
        }
        for protocol in self.protocol.protocols() {
            for &n in &self.n_range {
                let settings = match protocol {
                    Protocol::Mcqst => 2 * n + 1,
                    Protocol::Fivebasis => 5,
                };
                for &b in &self.shots_range {
                    if let ShotBudget::Finite(budget) = b {
                        if budget < settings as u64 {
                            return Err(Error::InsufficientShots { budget, settings });
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub protocol: Protocol,
    pub n: usize,
    #[serde(rename = "N_total")]
    pub n_total: ShotBudget,
    pub trial: usize,
    pub seed: u64,
    pub fidelity: Option<f64>,
    pub infidelity: Option<f64>,
    pub wall_time_ms: Option<f64>,
    pub error: Option<String>,
}

fn budget_key(b: ShotBudget) -> u64 {
    match b {
        ShotBudget::Exact => 0,
        ShotBudget::Finite(n) => n,
    }
}

/// Stream of trial `trial` at grid point `(n, n_total)`.
pub fn trial_seed(root: RngSeed, n: usize, n_total: ShotBudget, trial: usize) -> RngSeed {
    root.derive(&[n as u64, budget_key(n_total), trial as u64])
}

fn trial_state(source: &StateSource, file_state: Option<&StateVector>, n: usize, seed: RngSeed) -> Result<StateVector> {
    match source {
        StateSource::Haar => haar_random_state(n, &mut seed.derive(&[0]).rng()),
        StateSource::Ghz => ghz_state(n),
        StateSource::File(_) => {
            let psi = file_state.expect("file state loaded before trials");
            if psi.n() != n {
                return Err(Error::DimensionMismatch { expected: 1 << n, found: psi.dim() });
            }
            Ok(psi.clone())
        }
    }
}

fn run_trial(cfg: &ExperimentConfig, file_state: Option<&StateVector>, job: (Protocol, usize, ShotBudget, usize)) -> BenchRow {
    let (protocol, n, n_total, trial) = job;
    let seed = trial_seed(cfg.seed, n, n_total, trial);
    let start = Instant::now();
    let outcome = trial_state(&cfg.state_source, file_state, n, seed).and_then(|psi| {
        let opts = RunOptions { budget: n_total, noise: cfg.noise, pivot_floor: None };
        let mut rng = seed.derive(&[1]).rng();
        let res = match protocol {
            Protocol::Mcqst if cfg.rotation => tomography::reconstruct_with_rotation(&psi, &opts, &mut rng),
            Protocol::Mcqst => tomography::mcqst_reconstruct(&psi, &opts, &mut rng),
            Protocol::Fivebasis => tomography::fivebasis_reconstruct(&psi, &opts, &mut rng),
        }?;
        fidelity(&res.estimate, &psi)
    });
    let wall_time_ms = cfg.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
    let (fid, error) = match outcome {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    BenchRow {
        protocol,
        n,
        n_total,
        trial,
        seed: seed.0,
        fidelity: fid,
        infidelity: fid.map(|f| 1.0 - f),
        wall_time_ms,
        error,
    }
}

/// Runs every trial of the grid; failed trials become rows with `error` set.
///
/// Rows are ordered by protocol, `n`, `N_total`, trial, in config order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<BenchRow>> {
    cfg.validate()?;
    let file_state = match &cfg.state_source {
        StateSource::File(path) => Some(serde_json::from_str::<StateVector>(&std::fs::read_to_string(path)?)?),
        _ => None,
    };
    let mut jobs = Vec::new();
    for protocol in cfg.protocol.protocols() {
        for &n in &cfg.n_range {
            for &budget in &cfg.shots_range {
                jobs.extend((0..cfg.trials).map(|t| (protocol, n, budget, t)));
            }
        }
    }
    Ok(jobs.into_par_iter().map(|job| run_trial(cfg, file_state.as_ref(), job)).collect())
}

fn opt_field(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes the header comment, the column line and one line per row.
pub fn write_csv<W: Write>(rows: &[BenchRow], mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER_COMMENT}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.protocol.to_string(),
            r.n.to_string(),
            r.n_total.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            opt_field(r.fidelity),
            opt_field(r.infidelity),
            opt_field(r.wall_time_ms),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses CSV produced by [`write_csv`].
pub fn read_csv<R: Read>(input: R) -> Result<Vec<BenchRow>> {
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_COLUMNS {
        return Err(Error::Parse(format!("unexpected columns {header:?}")));
    }
    let num = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            return Ok(None);
        }
        s.parse().map(Some).map_err(|_| Error::Parse(format!("bad number {s:?}")))
    };
    let int = |s: &str| -> Result<u64> { s.parse().map_err(|_| Error::Parse(format!("bad integer {s:?}"))) };
    rd.records()
        .map(|rec| {
            let rec = rec?;
            Ok(BenchRow {
                protocol: rec[0].parse()?,
                n: int(&rec[1])? as usize,
                n_total: rec[2].parse()?,
                trial: int(&rec[3])? as usize,
                seed: int(&rec[4])?,
                fidelity: num(&rec[5])?,
                infidelity: num(&rec[6])?,
                wall_time_ms: num(&rec[7])?,
                error: Some(rec[8].to_owned()).filter(|e| !e.is_empty()),
            })
        })
        .collect()
}

/// Median; the mean of the two central values for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    match v.len() {
        0 => None,
        len if len % 2 == 1 => Some(v[m]),
        _ => Some(0.5 * (v[m - 1] + v[m])),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridSummary {
    pub protocol: Protocol,
    pub n: usize,
    #[serde(rename = "N_total")]
    pub n_total: ShotBudget,
    pub trials: usize,
    /// Rows excluded from the median because the trial failed.
    pub errors: usize,
    pub median_fidelity: Option<f64>,
    pub median_infidelity: Option<f64>,
}

/// Per grid point medians over successful trials.
pub fn aggregate_median(rows: &[BenchRow]) -> Vec<GridSummary> {
    let mut groups: BTreeMap<(Protocol, usize, ShotBudget), Vec<&BenchRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.protocol, r.n, r.n_total)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((protocol, n, n_total), g)| {
            let fid: Vec<f64> = g.iter().filter_map(|r| r.fidelity).collect();
            let inf: Vec<f64> = g.iter().filter_map(|r| r.infidelity).collect();
            GridSummary {
                protocol,
                n,
                n_total,
                trials: g.len(),
                errors: g.iter().filter(|r| r.error.is_some()).count(),
                median_fidelity: median(&fid),
                median_infidelity: median(&inf),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(json: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(json).unwrap()
    }

    #[test]
    fn median_rules() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn config_parsing() {
        let c = config(r#"{"protocol":"mcqst","n_range":[2,3],"shots_range":["exact",10000,1e5],"trials":3,"seed":7,
            "noise":{"readout_flip_prob":0.02653},"state_source":{"file":"psi.json"},"rotation":true}"#);
        assert_eq!(c.shots_range, vec![ShotBudget::Exact, ShotBudget::Finite(10_000), ShotBudget::Finite(100_000)]);
        assert_eq!(c.state_source, StateSource::File("psi.json".into()));
        assert!(!c.timing);
        let d = config(r#"{"n_range":[2],"shots_range":[100],"trials":1}"#);
        assert_eq!(d.protocol, ProtocolChoice::Both);
        assert_eq!(d.state_source, StateSource::Haar);
        assert!(ExperimentConfig::from_json(r#"{"n_range":[2],"shots_range":[100],"trials":1,"noise":{"readout_flip_prob":0.7}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"n_range":[2],"shots_range":[100],"trials":1,"bogus":1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"n_range":[2],"shots_range":[100],"trials":0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"n_range":[3],"shots_range":[6],"trials":1}"#).is_err());
    }

    #[test]
    fn rows_are_seeded_and_ordered() {
        let c = config(r#"{"n_range":[2],"shots_range":[1000,"exact"],"trials":2,"seed":3}"#);
        let rows = run_experiment(&c).unwrap();
        assert_eq!(rows.len(), 8);
        assert_eq!(rows[0].protocol, Protocol::Mcqst);
        assert_eq!(rows[7].protocol, Protocol::Fivebasis);
        assert_eq!((rows[1].n_total, rows[1].trial), (ShotBudget::Finite(1000), 1));
        assert_eq!(rows[0].seed, rows[4].seed);
        assert_eq!(rows, run_experiment(&c).unwrap());
        for r in &rows[2..4] {
            assert!(r.infidelity.unwrap() < 1e-9);
        }
    }

    #[test]
    fn single_qubit_exact_rows() {
        let c = config(r#"{"protocol":"mcqst","n_range":[1],"shots_range":["exact"],"trials":3}"#);
        let rows = run_experiment(&c).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.infidelity.unwrap() < 1e-9));
    }

    #[test]
    fn failures_are_rows() {
        let c = config(r#"{"protocol":"mcqst","n_range":[3],"shots_range":["exact"],"trials":1,"state_source":"ghz"}"#);
        let rows = run_experiment(&c).unwrap();
        assert!(rows[0].fidelity.is_none());
        assert!(rows[0].error.as_ref().unwrap().contains("vanishing"));
        let s = aggregate_median(&rows);
        assert_eq!((s[0].trials, s[0].errors, s[0].median_infidelity), (1, 1, None));
    }

    #[test]
    fn csv_round_trip() {
        let c = config(r#"{"n_range":[2],"shots_range":[500],"trials":2,"seed":11}"#);
        let mut rows = run_experiment(&c).unwrap();
        rows[1].error = Some("boom, with \"quotes\"".into());
        rows[1].fidelity = None;
        rows[1].infidelity = None;
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# mcqst-bench v1\nprotocol,n,N_total,trial,seed,fidelity,infidelity,wall_time_ms,error\n"));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), rows);
    }
}
