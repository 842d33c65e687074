//! Runtime-distribution analysis and parallel speedup prediction for
//! stochastic local search SAT solving.
//!
//! The workflow mirrors the underlying statistical model: collect the
//! sequential runtime distribution of a Las Vegas solver on one instance,
//! approximate it with a parametric family (exponential, shifted
//! exponential or lognormal), derive the distribution of the minimum of n
//! independent copies via order statistics, and predict the n-core
//! multi-walk runtime and speedup — then validate the prediction with an
//! in-process multi-walk simulator.
//!
//! Modules follow the pipeline:
//!
//! * [`cnf`] — formulas: DIMACS I/O, random k-SAT generation, evaluation.
//! * [`sls`] — the WalkSAT/SKC solver producing runtime samples.
//! * [`rtd`] — empirical runtime distributions and summary statistics.
//! * [`fit`] — parametric model fitting and the KS goodness-of-fit test.
//! * [`orderstats`] — min-distributions, expected parallel runtime,
//!   speedup curves and limits.
//! * [`multiwalk`] — logical and wall-clock multi-walk execution.
//! * [`runlog`] — the run-log CSV interchange format.
//!
//! All randomness is seeded explicitly and flows through one deterministic
//! generator ([`rng::SplitMix64`]), so every result is reproducible from
//! its seeds.

pub mod cnf;
pub mod fit;
pub mod multiwalk;
pub mod orderstats;
pub mod quad;
pub mod rng;
pub mod rtd;
pub mod runlog;
pub mod sls;

pub use cnf::{Assignment, CnfFormula};
pub use fit::{DistModel, Family, FitReport};
pub use multiwalk::ParallelResult;
pub use orderstats::{SpeedupCurve, SpeedupLimit};
pub use rtd::{Rtd, RtdSummary, Unit};
pub use sls::{RunOutcome, RunStatus, SolverConfig};
