//! Stochastic local search solver (WalkSAT/SKC) and batch RTD collection.
//!
//! One run is one random initial assignment followed by flips until the
//! formula is satisfied or the cutoff hits; there are no restarts, since
//! the multi-walk scheme replaces restarts with independent parallel walks.
//! Runtime is measured primarily in flips, which is deterministic given
//! `(formula, seed)` on any machine; wall-clock seconds are recorded as an
//! auxiliary measurement.

use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::cnf::{Assignment, CnfFormula};
use crate::rng::SplitMix64;
use crate::rtd::{Rtd, RtdError, Unit};

#[derive(Debug, Error)]
pub enum SlsError {
    #[error("noise must be in [0, 1], got {0}")]
    BadNoise(f64),
    #[error("max_flips must be at least 1")]
    ZeroMaxFlips,
    #[error("need at least 2 runs to build an RTD, got {0}")]
    TooFewRuns(usize),
    #[error("seconds-unit RTDs need a max_seconds cutoff when runs are censored")]
    SecondsCutoffMissing,
    #[error(transparent)]
    Rtd(#[from] RtdError),
}

/// Solver parameters. `noise` is the WalkSAT random-walk probability used
/// when no zero-break variable exists in the chosen clause.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub noise: f64,
    pub max_flips: u64,
    pub max_seconds: Option<f64>,
    pub seed: u64,
}

impl SolverConfig {
    /// Noise 0.57 is a conventional WalkSAT setting for random 3-SAT near
    /// the phase transition.
    pub fn new(seed: u64) -> Self {
        SolverConfig {
            noise: 0.57,
            max_flips: 10_000_000,
            max_seconds: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SlsError> {
        if !(0.0..=1.0).contains(&self.noise) || self.noise.is_nan() {
            return Err(SlsError::BadNoise(self.noise));
        }
        if self.max_flips == 0 {
            return Err(SlsError::ZeroMaxFlips);
        }
        Ok(())
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_max_flips(mut self, max_flips: u64) -> Self {
        self.max_flips = max_flips;
        self
    }

    pub fn with_max_seconds(mut self, max_seconds: Option<f64>) -> Self {
        self.max_seconds = max_seconds;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Solved,
    Cutoff,
}

/// One Las Vegas draw: the observed runtime of a single solver run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub flips: u64,
    pub seconds: f64,
    pub seed: u64,
    pub model: Option<Assignment>,
}

/// Outcome of a worker that may have been halted by a peer's stop signal;
/// only `run_parallel_wallclock` sees the `Halted` case.
#[derive(Debug)]
pub(crate) enum WorkerOutcome {
    Finished(RunOutcome),
    Halted {
        #[allow(dead_code)] // diagnostic payload, asserted on in tests
        flips: u64,
    },
}

/// Incremental WalkSAT state: satisfied-literal counts per clause, break
/// counts per variable and the unsatisfied-clause list, all updated in
/// O(occurrences of the flipped variable) per flip.
pub(crate) struct WalkState<'a> {
    formula: &'a CnfFormula,
    values: Vec<bool>,
    pos_occ: Vec<Vec<u32>>,
    neg_occ: Vec<Vec<u32>>,
    sat_count: Vec<u32>,
    // Sum of (1-based) variable indices of satisfying literals per clause;
    // when sat_count == 1 this is exactly the critical variable.
    crit_sum: Vec<u64>,
    break_count: Vec<u32>,
    unsat: Vec<u32>,
    unsat_pos: Vec<u32>,
    scratch: Vec<u32>,
}

const NOT_IN_UNSAT: u32 = u32::MAX;

impl<'a> WalkState<'a> {
    pub(crate) fn new(formula: &'a CnfFormula, rng: &mut SplitMix64) -> Self {
        let nv = formula.num_vars() as usize;
        let nc = formula.num_clauses();
        let values: Vec<bool> = (0..nv).map(|_| rng.next_bool()).collect();

        let mut pos_occ = vec![Vec::new(); nv];
        let mut neg_occ = vec![Vec::new(); nv];
        for (ci, clause) in formula.clauses().iter().enumerate() {
            for &lit in clause {
                let v = (lit.unsigned_abs() - 1) as usize;
                if lit > 0 {
                    pos_occ[v].push(ci as u32);
                } else {
                    neg_occ[v].push(ci as u32);
                }
            }
        }

        let mut state = WalkState {
            formula,
            values,
            pos_occ,
            neg_occ,
            sat_count: vec![0; nc],
            crit_sum: vec![0; nc],
            break_count: vec![0; nv],
            unsat: Vec::new(),
            unsat_pos: vec![NOT_IN_UNSAT; nc],
            scratch: Vec::new(),
        };
        state.rebuild();
        state
    }

    fn rebuild(&mut self) {
        for (ci, clause) in self.formula.clauses().iter().enumerate() {
            let mut count = 0;
            let mut sum = 0u64;
            for &lit in clause {
                let var = lit.unsigned_abs();
                if self.values[(var - 1) as usize] == (lit > 0) {
                    count += 1;
                    sum += var as u64;
                }
            }
            self.sat_count[ci] = count;
            self.crit_sum[ci] = sum;
            if count == 0 {
                self.unsat_pos[ci] = self.unsat.len() as u32;
                self.unsat.push(ci as u32);
            } else if count == 1 {
                self.break_count[(sum - 1) as usize] += 1;
            }
        }
    }

    pub(crate) fn num_unsat(&self) -> usize {
        self.unsat.len()
    }

    pub(crate) fn assignment(&self) -> Assignment {
        Assignment::new(self.values.clone())
    }

    #[cfg(test)]
    pub(crate) fn values(&self) -> &[bool] {
        &self.values
    }

    fn unsat_insert(&mut self, ci: u32) {
        self.unsat_pos[ci as usize] = self.unsat.len() as u32;
        self.unsat.push(ci);
    }

    fn unsat_remove(&mut self, ci: u32) {
        let pos = self.unsat_pos[ci as usize];
        let last = *self.unsat.last().unwrap();
        self.unsat[pos as usize] = last;
        self.unsat_pos[last as usize] = pos;
        self.unsat.pop();
        self.unsat_pos[ci as usize] = NOT_IN_UNSAT;
    }

    /// Flips variable `var` (1-based), updating all incremental counters.
    fn flip(&mut self, var: u32) {
        let vi = (var - 1) as usize;
        let was_true = self.values[vi];
        self.values[vi] = !was_true;
        // Literals of var that were satisfying before the flip lose their
        // support; the opposite-polarity clauses gain one. The occurrence
        // lists are immutable after construction, so they are moved out for
        // the duration of the update and restored afterwards.
        let (losing, gaining) = if was_true {
            (
                std::mem::take(&mut self.pos_occ[vi]),
                std::mem::take(&mut self.neg_occ[vi]),
            )
        } else {
            (
                std::mem::take(&mut self.neg_occ[vi]),
                std::mem::take(&mut self.pos_occ[vi]),
            )
        };

        for &ci in &losing {
            let c = ci as usize;
            self.sat_count[c] -= 1;
            self.crit_sum[c] -= var as u64;
            match self.sat_count[c] {
                0 => {
                    self.break_count[vi] -= 1;
                    self.unsat_insert(ci);
                }
                1 => {
                    let crit = self.crit_sum[c];
                    self.break_count[(crit - 1) as usize] += 1;
                }
                _ => {}
            }
        }
        for &ci in &gaining {
            let c = ci as usize;
            match self.sat_count[c] {
                0 => {
                    self.break_count[vi] += 1;
                    self.unsat_remove(ci);
                }
                1 => {
                    let crit = self.crit_sum[c];
                    self.break_count[(crit - 1) as usize] -= 1;
                }
                _ => {}
            }
            self.sat_count[c] += 1;
            self.crit_sum[c] += var as u64;
        }

        if was_true {
            self.pos_occ[vi] = losing;
            self.neg_occ[vi] = gaining;
        } else {
            self.neg_occ[vi] = losing;
            self.pos_occ[vi] = gaining;
        }
    }

    /// One WalkSAT/SKC step. Returns the flipped variable.
    ///
    /// RNG call order per step: clause pick; then either a pick among
    /// zero-break variables, or one noise draw followed by a pick among the
    /// walk target or the minimum-break ties.
    pub(crate) fn step(&mut self, noise: f64, rng: &mut SplitMix64) -> u32 {
        debug_assert!(!self.unsat.is_empty());
        let ci = self.unsat[rng.below(self.unsat.len() as u64) as usize];
        let clause = &self.formula.clauses()[ci as usize];

        self.scratch.clear();
        let mut min_break = u32::MAX;
        for &lit in clause {
            let var = lit.unsigned_abs();
            let b = self.break_count[(var - 1) as usize];
            if b < min_break {
                min_break = b;
                self.scratch.clear();
                self.scratch.push(var);
            } else if b == min_break {
                self.scratch.push(var);
            }
        }

        let var = if min_break == 0 {
            // Freebie: some variable breaks nothing; flip one of those.
            self.scratch[rng.below(self.scratch.len() as u64) as usize]
        } else if rng.bernoulli(noise) {
            clause[rng.below(clause.len() as u64) as usize].unsigned_abs()
        } else {
            self.scratch[rng.below(self.scratch.len() as u64) as usize]
        };
        self.flip(var);
        var
    }
}

const STOP_POLL_MASK: u64 = 0x3FF; // time-cutoff check every 1024 flips

fn solve_inner(
    formula: &CnfFormula,
    config: &SolverConfig,
    stop: Option<&AtomicBool>,
) -> WorkerOutcome {
    let start = Instant::now();
    let mut rng = SplitMix64::new(config.seed);
    let mut state = WalkState::new(formula, &mut rng);
    let mut flips: u64 = 0;

    loop {
        if state.num_unsat() == 0 {
            let seconds = start.elapsed().as_secs_f64();
            // The wall-clock deadline is polled every 1024 flips, so a
            // solution can land shortly after it passed; the observation
            // window ended at the deadline, so such a run is censored.
            if let Some(limit) = config.max_seconds {
                if seconds >= limit {
                    return WorkerOutcome::Finished(RunOutcome {
                        status: RunStatus::Cutoff,
                        flips,
                        seconds,
                        seed: config.seed,
                        model: None,
                    });
                }
            }
            let model = state.assignment();
            debug_assert_eq!(crate::cnf::count_unsat(formula, &model).unwrap(), 0);
            return WorkerOutcome::Finished(RunOutcome {
                status: RunStatus::Solved,
                flips,
                seconds,
                seed: config.seed,
                model: Some(model),
            });
        }
        if let Some(stop) = stop {
            // Polled every flip so a peer's solution halts us promptly.
            if stop.load(Ordering::Relaxed) {
                return WorkerOutcome::Halted { flips };
            }
        }
        if flips >= config.max_flips {
            return WorkerOutcome::Finished(RunOutcome {
                status: RunStatus::Cutoff,
                flips,
                seconds: start.elapsed().as_secs_f64(),
                seed: config.seed,
                model: None,
            });
        }
        if let Some(limit) = config.max_seconds {
            if flips & STOP_POLL_MASK == 0 {
                let elapsed = start.elapsed().as_secs_f64();
                if elapsed >= limit {
                    return WorkerOutcome::Finished(RunOutcome {
                        status: RunStatus::Cutoff,
                        flips,
                        seconds: elapsed,
                        seed: config.seed,
                        model: None,
                    });
                }
            }
        }
        state.step(config.noise, &mut rng);
        flips += 1;
    }
}

/// Runs WalkSAT once. Flip counts are deterministic given
/// `(formula, config.seed)`; cutoff is reported as a status, not an error.
pub fn solve(formula: &CnfFormula, config: &SolverConfig) -> RunOutcome {
    match solve_inner(formula, config, None) {
        WorkerOutcome::Finished(outcome) => outcome,
        WorkerOutcome::Halted { .. } => unreachable!("no stop signal was supplied"),
    }
}

/// Stop-aware variant used by the wall-clock multi-walk executor.
pub(crate) fn solve_with_stop(
    formula: &CnfFormula,
    config: &SolverConfig,
    stop: &AtomicBool,
) -> WorkerOutcome {
    solve_inner(formula, config, Some(stop))
}

/// Runs the solver `n_runs` times with seeds `base_seed..base_seed+n_runs`,
/// in parallel. The result vector is ordered by seed offset regardless of
/// scheduling, so batch output is fully deterministic in flips.
pub fn collect_runs(
    formula: &CnfFormula,
    config: &SolverConfig,
    n_runs: usize,
    base_seed: u64,
) -> Result<Vec<RunOutcome>, SlsError> {
    config.validate()?;
    Ok((0..n_runs)
        .into_par_iter()
        .map(|i| {
            let cfg = config.clone().with_seed(base_seed.wrapping_add(i as u64));
            solve(formula, &cfg)
        })
        .collect())
}

/// Builds the per-run observation `(runtime, censored)` in the given unit.
pub fn observation(
    outcome: &RunOutcome,
    unit: Unit,
    config: &SolverConfig,
) -> Result<(f64, bool), SlsError> {
    match (unit, outcome.status) {
        (Unit::Flips, RunStatus::Solved) => Ok((outcome.flips as f64, false)),
        (Unit::Flips, RunStatus::Cutoff) => Ok((outcome.flips as f64, true)),
        (Unit::Seconds, RunStatus::Solved) => Ok((outcome.seconds, false)),
        (Unit::Seconds, RunStatus::Cutoff) => {
            // A censored seconds sample is only meaningful at a seconds
            // cutoff; flip cutoffs land at arbitrary elapsed times.
            let limit = config.max_seconds.ok_or(SlsError::SecondsCutoffMissing)?;
            Ok((limit, true))
        }
    }
}

/// Collects a runtime distribution from `n_runs` solver runs. Cutoff runs
/// enter as censored samples at the cutoff value; if every run is censored
/// the RTD would be degenerate and a distinct error tells the caller to
/// raise the cutoffs.
pub fn collect_rtd(
    formula: &CnfFormula,
    config: &SolverConfig,
    n_runs: usize,
    base_seed: u64,
) -> Result<Rtd, SlsError> {
    if n_runs < 2 {
        return Err(SlsError::TooFewRuns(n_runs));
    }
    let runs = collect_runs(formula, config, n_runs, base_seed)?;
    rtd_from_outcomes(&runs, Unit::Flips, config)
}

/// Assembles an RTD from already-collected outcomes in the given unit.
pub fn rtd_from_outcomes(
    runs: &[RunOutcome],
    unit: Unit,
    config: &SolverConfig,
) -> Result<Rtd, SlsError> {
    if runs.len() < 2 {
        return Err(SlsError::TooFewRuns(runs.len()));
    }
    if runs.iter().all(|r| r.status == RunStatus::Cutoff) {
        return Err(RtdError::AllCensored(runs.len()).into());
    }
    let obs = runs
        .iter()
        .map(|r| observation(r, unit, config))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Rtd::new(obs, unit)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::{count_unsat, generate_uniform_ksat, CnfFormula};

    #[test]
    fn solves_trivially_satisfiable_formula() {
        let f = CnfFormula::new(2, vec![vec![1], vec![1, 2]]).unwrap();
        for seed in 0..20 {
            let out = solve(&f, &SolverConfig::new(seed).with_max_flips(1000));
            assert_eq!(out.status, RunStatus::Solved);
            let model = out.model.unwrap();
            assert!(model.value(1));
            assert_eq!(count_unsat(&f, &model).unwrap(), 0);
        }
    }

    #[test]
    fn contradiction_hits_cutoff() {
        let f = CnfFormula::new(1, vec![vec![1], vec![-1]]).unwrap();
        let out = solve(&f, &SolverConfig::new(3).with_max_flips(1000));
        assert_eq!(out.status, RunStatus::Cutoff);
        assert_eq!(out.flips, 1000);
        assert!(out.model.is_none());
    }

    #[test]
    fn flip_counts_are_seed_deterministic() {
        let f = generate_uniform_ksat(60, 3, 4.2, 5).unwrap();
        let cfg = SolverConfig::new(17).with_max_flips(200_000);
        let a = solve(&f, &cfg);
        let b = solve(&f, &cfg);
        assert_eq!(a.flips, b.flips);
        assert_eq!(a.status, b.status);
        let c = solve(&f, &cfg.clone().with_seed(18));
        // Different seeds explore differently (flip counts almost surely differ).
        assert!(a.flips != c.flips || a.status != c.status);
    }

    #[test]
    fn incremental_bookkeeping_matches_recount_and_flips_one_var() {
        let f = generate_uniform_ksat(25, 3, 4.2, 9).unwrap();
        let mut rng = SplitMix64::new(4);
        let mut state = WalkState::new(&f, &mut rng);
        let mut prev = state.values().to_vec();
        for _ in 0..300 {
            if state.num_unsat() == 0 {
                break;
            }
            state.step(0.57, &mut rng);
            let cur = state.values().to_vec();
            let changed = prev.iter().zip(&cur).filter(|(a, b)| a != b).count();
            assert_eq!(changed, 1, "every flip changes exactly one variable");
            let from_scratch = count_unsat(&f, &state.assignment()).unwrap();
            assert_eq!(state.num_unsat(), from_scratch);
            prev = cur;
        }
    }

    // Exhaustive satisfiability oracle for small formulas.
    fn brute_force_satisfiable(f: &CnfFormula) -> bool {
        let v = f.num_vars();
        assert!(v <= 20);
        (0..1u32 << v).any(|bits| {
            let a = Assignment::new((0..v).map(|i| bits >> i & 1 == 1).collect());
            count_unsat(f, &a).unwrap() == 0
        })
    }

    #[test]
    fn never_solves_unsatisfiable_formulas() {
        let mut checked = 0;
        for seed in 0..40 {
            // Ratio 7.0 puts most 3-SAT instances well into the UNSAT region.
            let f = generate_uniform_ksat(14, 3, 7.0, seed).unwrap();
            if brute_force_satisfiable(&f) {
                continue;
            }
            checked += 1;
            let out = solve(&f, &SolverConfig::new(seed * 31).with_max_flips(20_000));
            assert_eq!(out.status, RunStatus::Cutoff);
        }
        assert!(checked >= 5, "only {checked} unsat instances drawn");
    }

    #[test]
    fn solves_most_random_instances_near_phase_transition() {
        // Empirical sanity floor; satisfiability of each instance is
        // checked first so UNSAT draws do not count against the solver.
        let mut solved = 0;
        let mut total = 0;
        for seed in 0..30 {
            let f = generate_uniform_ksat(18, 3, 4.2, 1000 + seed).unwrap();
            if !brute_force_satisfiable(&f) {
                continue;
            }
            total += 1;
            let out = solve(&f, &SolverConfig::new(seed).with_max_flips(1_000_000));
            if out.status == RunStatus::Solved {
                solved += 1;
            }
        }
        assert!(total >= 15);
        assert_eq!(
            solved, total,
            "WalkSAT should solve all small satisfiable instances"
        );
    }

    #[test]
    fn collect_rtd_is_reproducible_and_counts_censoring() {
        let f = generate_uniform_ksat(40, 3, 4.2, 2).unwrap();
        let cfg = SolverConfig::new(0).with_max_flips(500_000);
        let a = collect_rtd(&f, &cfg, 20, 100).unwrap();
        let b = collect_rtd(&f, &cfg, 20, 100).unwrap();
        assert_eq!(a.samples(), b.samples());
        assert_eq!(a.len(), 20);

        // Tight cutoff forces a censored mix on a contradiction-free formula.
        let tight = SolverConfig::new(0).with_max_flips(3);
        let runs = collect_runs(&f, &tight, 30, 7).unwrap();
        let n_cut = runs
            .iter()
            .filter(|r| r.status == RunStatus::Cutoff)
            .count();
        match rtd_from_outcomes(&runs, Unit::Flips, &tight) {
            Ok(rtd) => assert_eq!(rtd.n_censored(), n_cut),
            Err(SlsError::Rtd(RtdError::AllCensored(_))) => assert_eq!(n_cut, 30),
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn all_censored_is_a_distinct_error() {
        let f = CnfFormula::new(1, vec![vec![1], vec![-1]]).unwrap();
        let cfg = SolverConfig::new(0).with_max_flips(10);
        match collect_rtd(&f, &cfg, 3, 0) {
            Err(SlsError::Rtd(RtdError::AllCensored(3))) => {}
            other => panic!("expected AllCensored, got {other:?}"),
        }
    }

    #[test]
    fn too_few_runs_rejected() {
        let f = CnfFormula::new(1, vec![vec![1]]).unwrap();
        assert!(matches!(
            collect_rtd(&f, &SolverConfig::new(0), 1, 0),
            Err(SlsError::TooFewRuns(1))
        ));
    }

    #[test]
    fn solutions_past_the_deadline_count_as_cutoff() {
        let f = CnfFormula::new(2, vec![vec![1], vec![1, 2]]).unwrap();
        let out = solve(&f, &SolverConfig::new(0).with_max_seconds(Some(0.0)));
        assert_eq!(out.status, RunStatus::Cutoff);
        assert!(out.seconds >= 0.0);
        assert!(out.model.is_none());
    }

    #[test]
    fn halts_promptly_once_stop_is_set() {
        let f = CnfFormula::new(1, vec![vec![1], vec![-1]]).unwrap();
        let stop = AtomicBool::new(true);
        let cfg = SolverConfig::new(1).with_max_flips(u64::MAX);
        match solve_with_stop(&f, &cfg, &stop) {
            WorkerOutcome::Halted { flips } => assert_eq!(flips, 0),
            other => panic!("expected halt, got {other:?}"),
        }
    }
}
