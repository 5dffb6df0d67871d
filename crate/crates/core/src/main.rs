use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use mcqst::bench::{self, ExperimentConfig, Protocol};
use mcqst::completion::{self, CompletionOptions, PartialMatrix};
use mcqst::measure::{NoiseModel, ShotRecord};
use mcqst::qcore::{fidelity, StateVector};
use mcqst::states::{ghz_state, haar_random_state, RngSeed};
use mcqst::tomography::{self, Observation, RunOptions, ShotBudget};

#[derive(Parser)]
#[command(name = "mcqst", version, about = "Pure-state tomography from local Pauli measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Benchmark sweeps.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Reconstruct a state from a simulated experiment or recorded shots.
    Reconstruct(ReconstructArgs),
    /// Rank-1 completion of a partially known matrix.
    Complete(CompleteArgs),
    /// Check the purity condition on measured entries.
    PurityCheck(PurityArgs),
    /// Sample shot records of all local settings for a state.
    Simulate(SimulateArgs),
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Run the sweep described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output file; `.json` writes JSON, anything else CSV.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Replaces the shot grid with infinite-shot mode.
        #[arg(long)]
        exact: bool,
        /// Records per-trial wall-clock times.
        #[arg(long)]
        timing: bool,
    },
}

#[derive(Args)]
struct StateArgs {
    /// State JSON file ({"n", "re", "im"}).
    #[arg(long, group = "source")]
    state: Option<PathBuf>,
    /// Haar-random state on this many qubits.
    #[arg(long, group = "source")]
    haar: Option<usize>,
    /// GHZ state on this many qubits.
    #[arg(long, group = "source")]
    ghz: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl StateArgs {
    fn given(&self) -> bool {
        self.state.is_some() || self.haar.is_some() || self.ghz.is_some()
    }

    fn load(&self) -> Result<StateVector> {
        if let Some(path) = &self.state {
            return read_json(path);
        }
        if let Some(n) = self.haar {
            return Ok(haar_random_state(n, &mut RngSeed(self.seed).derive(&[0]).rng())?);
        }
        if let Some(n) = self.ghz {
            return Ok(ghz_state(n)?);
        }
        bail!("one of --state, --haar or --ghz is required")
    }
}

#[derive(Args)]
struct ReconstructArgs {
    #[command(flatten)]
    source: StateArgs,
    /// Replayed shot records (JSON arrays), instead of simulating.
    #[arg(long, num_args = 1.., conflicts_with = "source")]
    records: Vec<PathBuf>,
    /// Total shot budget; default is infinite-shot mode.
    #[arg(long, conflicts_with = "exact")]
    shots: Option<ShotBudget>,
    #[arg(long)]
    exact: bool,
    /// Readout bit-flip probability.
    #[arg(long)]
    noise: Option<f64>,
    /// Screen the support and rotate sparse states.
    #[arg(long)]
    rotation: bool,
    #[arg(long, default_value = "mcqst")]
    protocol: Protocol,
    /// Reference state for the reported fidelity.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    pivot_floor: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompleteArgs {
    /// PartialMatrix JSON ({"dim", "re", "im", "known"}).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    pivot_floor: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PurityArgs {
    /// PartialMatrix JSON.
    #[arg(long, conflicts_with = "records")]
    input: Option<PathBuf>,
    /// Shot records of all local settings.
    #[arg(long, num_args = 1..)]
    records: Vec<PathBuf>,
    /// Defaults to 5/sqrt(shots per setting) for records, 1e-9 otherwise.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: StateArgs,
    #[arg(long)]
    shots: u64,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_records(paths: &[PathBuf]) -> Result<Vec<ShotRecord>> {
    let mut out = Vec::new();
    for p in paths {
        out.extend(read_json::<Vec<ShotRecord>>(p)?);
    }
    Ok(out)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut w = output(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn noise_model(p: Option<f64>) -> Result<Option<NoiseModel>> {
    Ok(p.map(NoiseModel::new).transpose()?)
}

fn bench_run(config: &Path, out: &Path, seed: Option<u64>, exact: bool, timing: bool) -> Result<()> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seed = RngSeed(s);
    }
    if exact {
        cfg.shots_range = vec![ShotBudget::Exact];
    }
    cfg.timing |= timing;
    let rows = bench::run_experiment(&cfg)?;
    if out.extension().is_some_and(|e| e == "json") {
        emit_json(&rows, Some(out))?;
    } else {
        bench::write_csv(&rows, BufWriter::new(File::create(out)?))?;
    }
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "{:<10} {:>3} {:>10} {:>7} {:>7} {:>16}", "protocol", "n", "N_total", "trials", "errors", "median_infid")?;
    for s in bench::aggregate_median(&rows) {
        let med = s.median_infidelity.map_or("-".to_owned(), |m| format!("{m:.6e}"));
        writeln!(stdout, "{:<10} {:>3} {:>10} {:>7} {:>7} {:>16}", s.protocol.to_string(), s.n, s.n_total.to_string(), s.trials, s.errors, med)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ReconstructOutput {
    #[serde(flatten)]
    result: tomography::ReconstructionResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    fidelity: Option<f64>,
}

fn reconstruct(args: &ReconstructArgs) -> Result<()> {
    let budget = if args.exact { ShotBudget::Exact } else { args.shots.unwrap_or(ShotBudget::Exact) };
    let opts = RunOptions { budget, noise: noise_model(args.noise)?, pivot_floor: args.pivot_floor };
    let mut truth = args.truth.as_deref().map(read_json::<StateVector>).transpose()?;
    let result = if !args.records.is_empty() {
        if args.protocol != Protocol::Mcqst || args.rotation {
            bail!("recorded shots can only be replayed through the unrotated local-Pauli pipeline");
        }
        tomography::mcqst_from_records(&read_records(&args.records)?, args.pivot_floor)?
    } else {
        let psi = args.source.load()?;
        let mut rng = RngSeed(args.source.seed).derive(&[1]).rng();
        let res = match args.protocol {
            Protocol::Mcqst if args.rotation => tomography::reconstruct_with_rotation(&psi, &opts, &mut rng)?,
            Protocol::Mcqst => tomography::mcqst_reconstruct(&psi, &opts, &mut rng)?,
            Protocol::Fivebasis => tomography::fivebasis_reconstruct(&psi, &opts, &mut rng)?,
        };
        truth.get_or_insert(psi);
        res
    };
    let fidelity = truth.map(|t| fidelity(&result.estimate, &t)).transpose()?;
    emit_json(&ReconstructOutput { result, fidelity }, args.out.as_deref())
}

#[derive(Serialize)]
struct CompleteOutput {
    feasibility: completion::Feasibility,
    #[serde(skip_serializing_if = "Option::is_none")]
    matrix: Option<PartialMatrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn complete(args: &CompleteArgs) -> Result<()> {
    let pm: PartialMatrix = read_json(&args.input)?;
    let mut opts = CompletionOptions::default();
    if let Some(f) = args.pivot_floor {
        opts.pivot_floor = f;
    }
    let feasibility = completion::feasibility_check(&pm);
    let (matrix, error) = match completion::fill_rank1(&pm, None, &opts) {
        Ok(c) => {
            let d = pm.dim();
            let all = (0..d).flat_map(|j| (0..d).map(move |k| (j, k)));
            (Some(PartialMatrix::observe(c.filled(), all)), None)
        }
        Err(e) => (None, Some(e.to_string())),
    };
    let failed = error.is_some();
    emit_json(&CompleteOutput { feasibility, matrix, error }, args.out.as_deref())?;
    if failed {
        std::process::exit(2);
    }
    Ok(())
}

fn purity_check(args: &PurityArgs) -> Result<()> {
    let (pm, default_tol) = match &args.input {
        Some(path) => (read_json::<PartialMatrix>(path)?, 1e-9),
        None => {
            if args.records.is_empty() {
                bail!("one of --input or --records is required");
            }
            let records = read_records(&args.records)?;
            let n = mcqst::qcore::qubits_for_dim(records[0].dim())?;
            let obs = records.iter().map(Observation::from_record).collect::<Result<Vec<_>, _>>()?;
            let per_setting = records.iter().map(|r| r.shots).min().unwrap_or(0);
            (tomography::assemble_partial(n, &obs)?, tomography::default_purity_tolerance(per_setting))
        }
    };
    let verdict = tomography::purity_certify(&pm, args.tol.unwrap_or(default_tol));
    emit_json(&verdict, None)?;
    if !verdict.is_pure() {
        std::process::exit(3);
    }
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let psi = args.source.load()?;
    let noise = noise_model(args.noise)?;
    let mut rng = RngSeed(args.source.seed).derive(&[1]).rng();
    let records = tomography::simulate_records(&psi, args.shots, noise.as_ref(), &mut rng)?;
    emit_json(&records, args.out.as_deref())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Bench(BenchCommand::Run { config, out, seed, exact, timing }) => bench_run(config, out, *seed, *exact, *timing),
        Command::Reconstruct(args) => {
            if args.records.is_empty() && !args.source.given() {
                bail!("one of --state, --haar, --ghz or --records is required");
            }
            reconstruct(args)
        }
        Command::Complete(args) => complete(args),
        Command::PurityCheck(args) => purity_check(args),
        Command::Simulate(args) => simulate(args),
    }
}
