//! `rtdsat` — collect runtime distributions of a local-search SAT solver,
//! fit parametric models, predict multi-walk parallel speedup, and validate
//! the prediction by simulation.
//!
//! Every command is deterministic given its flags and input files; all
//! randomness comes from explicit `--seed` values. Data goes to `-o` (or
//! stdout), diagnostics to stderr.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use rtdsat::cnf::{self, CnfFormula};
use rtdsat::fit::{self, Family, FitReport};
use rtdsat::multiwalk::{self, ParallelResult};
use rtdsat::orderstats;
use rtdsat::rtd::{Rtd, Unit};
use rtdsat::runlog::{self, RunRecord};
use rtdsat::sls::{self, SolverConfig};

mod report;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "rtdsat",
    version,
    about = "Runtime distributions and multi-walk speedup prediction for SAT local search"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a uniform random k-SAT instance in DIMACS CNF
    Generate(GenerateArgs),
    /// Run the solver repeatedly and write the runtime log CSV
    Collect(CollectArgs),
    /// Fit runtime models to a log and test goodness of fit
    Fit(FitArgs),
    /// Predict multi-walk runtime and speedup from a fitted model
    Predict(PredictArgs),
    /// Execute or simulate the multi-walk parallel solver
    Simulate(SimulateArgs),
    /// Assemble an analysis report with plot data
    Report(report::ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of variables
    #[arg(long)]
    vars: u32,
    /// Literals per clause
    #[arg(long, short)]
    k: u32,
    /// Clause-to-variable ratio (clause count = round(ratio * vars))
    #[arg(long)]
    ratio: f64,
    /// Generator seed
    #[arg(long)]
    seed: u64,
    /// Output path (stdout if omitted)
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolverFlags {
    /// WalkSAT noise probability
    #[arg(long, default_value_t = 0.57)]
    noise: f64,
    /// Per-run flip cutoff
    #[arg(long, default_value_t = 10_000_000)]
    max_flips: u64,
    /// Per-run wall-clock cutoff in seconds
    #[arg(long)]
    max_seconds: Option<f64>,
}

impl SolverFlags {
    fn config(&self, seed: u64) -> Result<SolverConfig> {
        let cfg = SolverConfig::new(seed)
            .with_noise(self.noise)
            .with_max_flips(self.max_flips)
            .with_max_seconds(self.max_seconds);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct CollectArgs {
    /// Instance to solve (DIMACS CNF)
    #[arg(long)]
    cnf: PathBuf,
    /// Number of sequential runs
    #[arg(long)]
    runs: usize,
    /// Base seed; run i uses seed + i
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    solver: SolverFlags,
    /// Runtime unit to analyze later (seconds adds the wall-clock column)
    #[arg(long, default_value = "flips")]
    unit: Unit,
    /// Output path (stdout if omitted)
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Runtime log CSV from `collect`
    #[arg(long)]
    rtd: PathBuf,
    /// Candidate families, comma separated: exp, shifted-exp, lognormal
    #[arg(long, value_delimiter = ',', required = true)]
    families: Vec<Family>,
    /// Unit to analyze
    #[arg(long, default_value = "flips")]
    unit: Unit,
    /// Output path (stdout if omitted)
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    /// Fit JSON from `fit`
    #[arg(long)]
    fit: PathBuf,
    /// Core counts, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    cores: Vec<u64>,
    /// Output path (stdout if omitted)
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Instance to solve (DIMACS CNF)
    #[arg(long)]
    cnf: PathBuf,
    /// Number of parallel walks
    #[arg(long)]
    cores: u64,
    /// Number of repeated trials
    #[arg(long)]
    trials: usize,
    /// Base seed; trial t, worker w uses seed + t*cores + w
    #[arg(long)]
    seed: u64,
    /// logical: first finisher in flips; wallclock: real threads, seconds
    #[arg(long, default_value = "logical")]
    mode: SimMode,
    #[command(flatten)]
    solver: SolverFlags,
    /// Sequential mean runtime to embed an empirical speedup
    #[arg(long)]
    seq_mean: Option<f64>,
    /// Output path (stdout if omitted)
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum SimMode {
    Logical,
    Wallclock,
}

/// Fit command output: one report per candidate family plus the selection.
#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct FitFile {
    pub version: String,
    pub unit: Unit,
    pub families: Vec<FitReport>,
    pub selected: FitReport,
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => {
            let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
    }
}

fn open_in(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn load_formula(path: &Path) -> Result<CnfFormula> {
    let formula =
        cnf::parse_dimacs(open_in(path)?).with_context(|| format!("parsing {}", path.display()))?;
    let tautologies = formula.tautological_clauses();
    if !tautologies.is_empty() {
        eprintln!(
            "warning: {} clause(s) contain a literal and its negation (first at index {})",
            tautologies.len(),
            tautologies[0]
        );
    }
    Ok(formula)
}

fn load_rtd(path: &Path, unit: Unit) -> Result<(Vec<RunRecord>, Rtd)> {
    let records = runlog::read_run_log(open_in(path)?)
        .with_context(|| format!("reading run log {}", path.display()))?;
    let rtd = runlog::rtd_from_records(&records, unit)
        .with_context(|| format!("building {unit} RTD from {}", path.display()))?;
    Ok((records, rtd))
}

fn load_fit_file(path: &Path) -> Result<FitFile> {
    let mut text = String::new();
    open_in(path)?.read_to_string(&mut text)?;
    serde_json::from_str(&text).with_context(|| format!("parsing fit JSON {}", path.display()))
}

fn warn_censoring(rtd: &Rtd) {
    let frac = rtd.censored_fraction();
    if frac > 0.05 {
        eprintln!(
            "warning: {:.1}% of runs were censored at the cutoff; censored runs are \
             excluded from fitting, so estimates may be biased. Consider raising the cutoff.",
            100.0 * frac
        );
    }
}

fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let formula = cnf::generate_uniform_ksat(args.vars, args.k, args.ratio, args.seed)?;
    let mut out = open_out(&args.out)?;
    cnf::write_dimacs(&formula, &mut out)?;
    out.flush()?;
    eprintln!(
        "generated {} variables, {} clauses (k={}, ratio={}, seed={})",
        args.vars,
        formula.num_clauses(),
        args.k,
        args.ratio,
        args.seed
    );
    Ok(())
}

fn cmd_collect(args: &CollectArgs) -> Result<()> {
    if args.runs < 2 {
        bail!("--runs must be at least 2 to form a distribution");
    }
    if args.unit == Unit::Seconds && args.solver.max_seconds.is_none() {
        eprintln!(
            "warning: collecting in seconds without --max-seconds; censored runs (if any) \
             will not form a valid seconds RTD"
        );
    }
    let formula = load_formula(&args.cnf)?;
    let config = args.solver.config(args.seed)?;
    let runs = sls::collect_runs(&formula, &config, args.runs, args.seed)?;

    let record_seconds = args.unit == Unit::Seconds;
    let records: Vec<RunRecord> = runs
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut rec = RunRecord::from_outcome(i as u64, r, record_seconds);
            // A censored run's true time is only known to reach the cutoff;
            // log the cutoff itself so the seconds RTD stays well formed.
            if record_seconds && r.status == rtdsat::RunStatus::Cutoff {
                if let Some(limit) = args.solver.max_seconds {
                    rec.seconds = Some(limit);
                }
            }
            rec
        })
        .collect();
    let mut out = open_out(&args.out)?;
    runlog::write_run_log(&records, &mut out)?;
    out.flush()?;

    let solved = runs
        .iter()
        .filter(|r| r.status == rtdsat::RunStatus::Solved)
        .count();
    eprintln!(
        "{} runs, {} solved, {} censored",
        runs.len(),
        solved,
        runs.len() - solved
    );
    // The log itself was written, so this is a warning, not a failure;
    // fitting such a log will fail with a degenerate-RTD error anyway.
    if solved == 0 {
        eprintln!("warning: every run was censored; raise --max-flips or --max-seconds");
    }
    Ok(())
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let (_, rtd) = load_rtd(&args.rtd, args.unit)?;
    warn_censoring(&rtd);
    let families = fit::fit_all(&rtd, &args.families)?;
    let selected = fit::best_report(&families).clone();
    let file = FitFile {
        version: VERSION.to_string(),
        unit: args.unit,
        families,
        selected,
    };
    let mut out = open_out(&args.out)?;
    serde_json::to_writer_pretty(&mut out, &file)?;
    writeln!(out)?;
    out.flush()?;
    for r in &file.families {
        eprintln!(
            "{:<12} p-value {:.4e} D {:.4} {}",
            r.model.family().to_string(),
            r.p_value,
            r.ks_d,
            if r.accepted { "accepted" } else { "rejected" }
        );
    }
    Ok(())
}

fn cmd_predict(args: &PredictArgs) -> Result<()> {
    let fit_file = load_fit_file(&args.fit)?;
    let model = fit_file.selected.model;
    model
        .validate()
        .with_context(|| format!("fit file {}", args.fit.display()))?;
    let curve = orderstats::speedup_curve(&model, &args.cores)?;
    let mut out = open_out(&args.out)?;
    orderstats::write_speedup_curve(&curve, &model, fit_file.unit, &mut out)?;
    out.flush()?;
    eprintln!(
        "predicted {} core counts from {} model (base mean {:.3})",
        curve.points.len(),
        model.family(),
        curve.base_mean
    );
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let formula = load_formula(&args.cnf)?;
    let config = args.solver.config(args.seed)?;
    let result: ParallelResult = match args.mode {
        SimMode::Logical => {
            multiwalk::simulate_logical(&formula, &config, args.cores, args.trials, args.seed)?
        }
        SimMode::Wallclock => {
            let available = std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1);
            if args.cores as usize > available {
                eprintln!(
                    "warning: requesting {} cores on a machine with {} hardware threads; \
                     wall-clock timings will be distorted by oversubscription",
                    args.cores, available
                );
            }
            multiwalk::run_parallel_wallclock(&formula, &config, args.cores, args.trials)?
        }
    };
    let result = match args.seq_mean {
        Some(m) if m > 0.0 => result.with_sequential_mean(m),
        Some(m) => bail!("--seq-mean must be positive, got {m}"),
        None => result,
    };
    if result.n_censored_trials > 0 {
        eprintln!(
            "warning: {} of {} trials had every walk censored at the cutoff",
            result.n_censored_trials, result.trials
        );
    }
    let mut out = open_out(&args.out)?;
    multiwalk::write_parallel_result(&result, &mut out)?;
    out.flush()?;
    eprintln!(
        "{} trials on {} cores: mean runtime {:.3} {}",
        result.trials, result.n_cores, result.mean_runtime, result.unit
    );
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate(args) => cmd_generate(&args),
        Command::Collect(args) => cmd_collect(&args),
        Command::Fit(args) => cmd_fit(&args),
        Command::Predict(args) => cmd_predict(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Report(args) => report::cmd_report(&args),
    }
}
