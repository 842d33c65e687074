//! Independent multi-walk parallel execution: n solver copies race on the
//! same instance and the first solution wins.
//!
//! Two channels validate the order-statistics predictions:
//!
//! * [`simulate_logical`] measures the first finisher in flips, taking the
//!   minimum of n independent seeded runs per trial. It is deterministic,
//!   hardware-independent and scales to arbitrary core counts on one
//!   machine, so it is the primary validation path.
//! * [`run_parallel_wallclock`] actually races n worker threads and
//!   records wall-clock seconds to the first solution, bounded by the
//!   machine's real parallelism.
//!
//! Worker seeds are `base_seed + trial * n_cores + worker`, so no seed is
//! ever reused across trials or workers — the draws stay i.i.d.

use std::io::{self, BufRead, Write};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnf::CnfFormula;
use crate::fit::DistModel;
use crate::rng::SplitMix64;
use crate::rtd::Unit;
use crate::sls::{self, RunStatus, SolverConfig, WorkerOutcome};

#[derive(Debug, Error)]
pub enum MultiwalkError {
    #[error("n_cores must be >= 1")]
    ZeroCores,
    #[error("trials must be >= 1")]
    ZeroTrials,
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("missing '#' JSON summary line")]
    MissingHeader,
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One independent runtime draw for a given seed.
#[derive(Debug, Clone, Copy)]
pub struct Draw {
    pub value: f64,
    pub censored: bool,
}

/// Anything that can play the role of the sequential solver in a logical
/// simulation: the real WalkSAT run, or a replayed sampler from a fitted
/// model when validating the pipeline end to end.
pub trait RuntimeSource: Sync {
    fn draw(&self, seed: u64) -> Draw;
    fn unit(&self) -> Unit;
}

/// The real solver, measured in flips.
pub struct SolverSource<'a> {
    pub formula: &'a CnfFormula,
    pub config: SolverConfig,
}

impl RuntimeSource for SolverSource<'_> {
    fn draw(&self, seed: u64) -> Draw {
        let cfg = self.config.clone().with_seed(seed);
        let out = sls::solve(self.formula, &cfg);
        Draw {
            value: out.flips as f64,
            censored: out.status == RunStatus::Cutoff,
        }
    }

    fn unit(&self) -> Unit {
        Unit::Flips
    }
}

/// Synthetic solver that replays runtimes from a fitted model; each seed
/// is an independent draw.
pub struct ModelSource {
    pub model: DistModel,
    pub unit: Unit,
}

impl RuntimeSource for ModelSource {
    fn draw(&self, seed: u64) -> Draw {
        let mut rng = SplitMix64::new(seed);
        let mut spare = None;
        Draw {
            value: self.model.sample(&mut rng, &mut spare),
            censored: false,
        }
    }

    fn unit(&self) -> Unit {
        self.unit
    }
}

/// Measured multi-walk performance over repeated trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelResult {
    pub n_cores: u64,
    pub trials: usize,
    pub runtimes: Vec<f64>,
    pub unit: Unit,
    pub mean_runtime: f64,
    /// Trials in which every walk hit its cutoff; their runtime is the
    /// cutoff value and the mean is biased low accordingly.
    pub n_censored_trials: usize,
    pub base_seed: u64,
    /// Filled in when a sequential mean is supplied for comparison.
    pub empirical_speedup: Option<f64>,
}

impl ParallelResult {
    /// Attaches the empirical speedup against a sequential mean runtime.
    pub fn with_sequential_mean(mut self, seq_mean: f64) -> Self {
        self.empirical_speedup = Some(empirical_speedup(seq_mean, &self));
        self
    }
}

/// Speedup of the parallel runs against a sequential mean runtime.
pub fn empirical_speedup(seq_mean: f64, par: &ParallelResult) -> f64 {
    assert!(seq_mean > 0.0);
    seq_mean / par.mean_runtime
}

/// Logical multi-walk simulation over an arbitrary runtime source: each
/// trial takes the minimum of `n_cores` independent draws. Deterministic
/// given `base_seed` regardless of thread scheduling.
pub fn simulate_logical_source<S: RuntimeSource>(
    source: &S,
    n_cores: u64,
    trials: usize,
    base_seed: u64,
) -> Result<ParallelResult, MultiwalkError> {
    if n_cores == 0 {
        return Err(MultiwalkError::ZeroCores);
    }
    if trials == 0 {
        return Err(MultiwalkError::ZeroTrials);
    }
    let outcomes: Vec<(f64, bool)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut best = f64::INFINITY;
            let mut all_censored = true;
            for worker in 0..n_cores {
                let seed = base_seed
                    .wrapping_add((trial as u64).wrapping_mul(n_cores))
                    .wrapping_add(worker);
                let draw = source.draw(seed);
                if !draw.censored {
                    all_censored = false;
                }
                if draw.value < best {
                    best = draw.value;
                }
            }
            (best, all_censored)
        })
        .collect();

    let runtimes: Vec<f64> = outcomes.iter().map(|&(v, _)| v).collect();
    let n_censored_trials = outcomes.iter().filter(|&&(_, c)| c).count();
    let mean_runtime = runtimes.iter().sum::<f64>() / runtimes.len() as f64;
    Ok(ParallelResult {
        n_cores,
        trials,
        runtimes,
        unit: source.unit(),
        mean_runtime,
        n_censored_trials,
        base_seed,
        empirical_speedup: None,
    })
}

/// Logical simulation of the real solver in flips.
pub fn simulate_logical(
    formula: &CnfFormula,
    config: &SolverConfig,
    n_cores: u64,
    trials: usize,
    base_seed: u64,
) -> Result<ParallelResult, MultiwalkError> {
    let source = SolverSource {
        formula,
        config: config.clone(),
    };
    simulate_logical_source(&source, n_cores, trials, base_seed)
}

/// Races `n_cores` solver threads per trial and records wall-clock seconds
/// from launch to the first solution. Workers share one stop flag, polled
/// every flip, so losers halt promptly. Trials where no worker solved are
/// censored at the observed elapsed time.
///
/// Requesting more cores than the machine offers oversubscribes threads;
/// callers should warn (not fail) in that case.
pub fn run_parallel_wallclock(
    formula: &CnfFormula,
    config: &SolverConfig,
    n_cores: u64,
    trials: usize,
) -> Result<ParallelResult, MultiwalkError> {
    if n_cores == 0 {
        return Err(MultiwalkError::ZeroCores);
    }
    if trials == 0 {
        return Err(MultiwalkError::ZeroTrials);
    }
    let base_seed = config.seed;
    let mut runtimes = Vec::with_capacity(trials);
    let mut n_censored_trials = 0usize;

    for trial in 0..trials {
        let stop = AtomicBool::new(false);
        let first: Mutex<Option<f64>> = Mutex::new(None);
        let start = Instant::now();
        std::thread::scope(|scope| {
            for worker in 0..n_cores {
                let seed = base_seed
                    .wrapping_add((trial as u64).wrapping_mul(n_cores))
                    .wrapping_add(worker);
                let cfg = config.clone().with_seed(seed);
                let (stop, first) = (&stop, &first);
                scope.spawn(move || {
                    let outcome = sls::solve_with_stop(formula, &cfg, stop);
                    if let WorkerOutcome::Finished(out) = outcome {
                        if out.status == RunStatus::Solved {
                            let elapsed = start.elapsed().as_secs_f64();
                            let mut guard = first.lock().unwrap();
                            if guard.is_none() {
                                *guard = Some(elapsed);
                                stop.store(true, Ordering::Relaxed);
                            }
                        }
                    }
                });
            }
        });
        match first.into_inner().unwrap() {
            Some(elapsed) => runtimes.push(elapsed.max(f64::MIN_POSITIVE)),
            None => {
                n_censored_trials += 1;
                runtimes.push(start.elapsed().as_secs_f64());
            }
        }
    }

    let mean_runtime = runtimes.iter().sum::<f64>() / runtimes.len() as f64;
    Ok(ParallelResult {
        n_cores,
        trials,
        runtimes,
        unit: Unit::Seconds,
        mean_runtime,
        n_censored_trials,
        base_seed,
        empirical_speedup: None,
    })
}

/// Summary half of the result file: the `#` JSON header line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelSummary {
    pub n_cores: u64,
    pub trials: usize,
    pub unit: Unit,
    pub mean_runtime: f64,
    pub n_censored_trials: usize,
    pub base_seed: u64,
    pub empirical_speedup: Option<f64>,
}

impl From<&ParallelResult> for ParallelSummary {
    fn from(r: &ParallelResult) -> Self {
        ParallelSummary {
            n_cores: r.n_cores,
            trials: r.trials,
            unit: r.unit,
            mean_runtime: r.mean_runtime,
            n_censored_trials: r.n_censored_trials,
            base_seed: r.base_seed,
            empirical_speedup: r.empirical_speedup,
        }
    }
}

/// Writes per-trial rows as CSV with one `#` JSON summary line on top.
pub fn write_parallel_result<W: Write>(result: &ParallelResult, mut w: W) -> io::Result<()> {
    let summary = ParallelSummary::from(result);
    writeln!(w, "# {}", serde_json::to_string(&summary)?)?;
    writeln!(w, "trial,n_cores,runtime,unit")?;
    for (trial, &rt) in result.runtimes.iter().enumerate() {
        writeln!(w, "{},{},{},{}", trial, result.n_cores, rt, result.unit)?;
    }
    Ok(())
}

pub fn read_parallel_result<R: BufRead>(reader: R) -> Result<ParallelResult, MultiwalkError> {
    let mut lines = reader.lines();
    let summary: ParallelSummary = match lines.next() {
        Some(Ok(line)) if line.starts_with('#') => {
            serde_json::from_str(line.trim_start_matches('#').trim())?
        }
        Some(Err(e)) => return Err(e.into()),
        _ => return Err(MultiwalkError::MissingHeader),
    };
    match lines.next() {
        Some(Ok(line)) if line.trim() == "trial,n_cores,runtime,unit" => {}
        Some(Err(e)) => return Err(e.into()),
        _ => {
            return Err(MultiwalkError::Malformed {
                line: 2,
                msg: "expected column header trial,n_cores,runtime,unit".into(),
            })
        }
    }
    let mut runtimes = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 3;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(MultiwalkError::Malformed {
                line: lineno,
                msg: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let rt: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| MultiwalkError::Malformed {
                line: lineno,
                msg: format!("bad runtime: {:?}", fields[2]),
            })?;
        runtimes.push(rt);
    }
    Ok(ParallelResult {
        n_cores: summary.n_cores,
        trials: summary.trials,
        runtimes,
        unit: summary.unit,
        mean_runtime: summary.mean_runtime,
        n_censored_trials: summary.n_censored_trials,
        base_seed: summary.base_seed,
        empirical_speedup: summary.empirical_speedup,
    })
}
