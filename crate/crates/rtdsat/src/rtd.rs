//! Empirical runtime distributions: sorted samples with censoring flags,
//! ECDF queries and summary statistics.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RtdError {
    #[error("an RTD needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error(
        "nonpositive runtime sample {0}; use flip-count units, where zero cannot \
         occur for nontrivial formulas"
    )]
    NonPositiveSample(f64),
    #[error("sample is not a finite number: {0}")]
    NonFiniteSample(f64),
    #[error("censored samples must all equal one cutoff value, found {0} and {1}")]
    InconsistentCutoff(f64, f64),
    #[error("censored sample {censored} is below the uncensored maximum {max_uncensored}")]
    CensoredBelowMax { censored: f64, max_uncensored: f64 },
    #[error("all {0} runs were censored; raise the cutoff and re-collect")]
    AllCensored(usize),
}

/// Unit a runtime sample is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Flips,
    Seconds,
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Unit::Flips => write!(f, "flips"),
            Unit::Seconds => write!(f, "seconds"),
        }
    }
}

impl FromStr for Unit {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "flips" => Ok(Unit::Flips),
            "seconds" => Ok(Unit::Seconds),
            other => Err(format!("unknown unit {other:?} (expected flips|seconds)")),
        }
    }
}

/// An empirical runtime distribution: positive samples sorted ascending,
/// with a parallel censoring flag (true = run hit the cutoff, so the true
/// runtime is only known to be at least the recorded value).
///
/// Immutable after construction; all queries are binary searches.
#[derive(Debug, Clone, PartialEq)]
pub struct Rtd {
    samples: Vec<f64>,
    censored: Vec<bool>,
    unit: Unit,
}

/// Sample statistics of the distribution. Censored values enter at the
/// cutoff, so a timeout-heavy RTD reports the timeout as its max rather
/// than pretending the slow runs never happened.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RtdSummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
    pub n: usize,
    pub n_censored: usize,
}

impl Rtd {
    /// Builds an RTD from `(runtime, censored)` pairs, sorting and
    /// validating the invariants.
    pub fn new(observations: Vec<(f64, bool)>, unit: Unit) -> Result<Self, RtdError> {
        if observations.len() < 2 {
            return Err(RtdError::TooFewSamples(observations.len()));
        }
        if observations.iter().all(|&(_, c)| c) {
            return Err(RtdError::AllCensored(observations.len()));
        }
        for &(x, _) in &observations {
            if !x.is_finite() {
                return Err(RtdError::NonFiniteSample(x));
            }
            if x <= 0.0 {
                return Err(RtdError::NonPositiveSample(x));
            }
        }
        let mut obs = observations;
        // Censored-after-uncensored at equal values keeps censored runs at
        // the top of the order.
        obs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

        let mut cutoff: Option<f64> = None;
        let mut max_uncensored = f64::NEG_INFINITY;
        for &(x, c) in &obs {
            if c {
                match cutoff {
                    None => cutoff = Some(x),
                    Some(v) if v != x => return Err(RtdError::InconsistentCutoff(v, x)),
                    _ => {}
                }
            } else {
                max_uncensored = max_uncensored.max(x);
            }
        }
        if let Some(v) = cutoff {
            if v < max_uncensored {
                return Err(RtdError::CensoredBelowMax {
                    censored: v,
                    max_uncensored,
                });
            }
        }
        let (samples, censored) = obs.into_iter().unzip();
        Ok(Rtd {
            samples,
            censored,
            unit,
        })
    }

    /// Convenience constructor for fully observed (uncensored) samples.
    pub fn from_samples(samples: Vec<f64>, unit: Unit) -> Result<Self, RtdError> {
        Self::new(samples.into_iter().map(|x| (x, false)).collect(), unit)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    /// Sorted samples, censored values included at the cutoff.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn censored_flags(&self) -> &[bool] {
        &self.censored
    }

    pub fn n_censored(&self) -> usize {
        self.censored.iter().filter(|&&c| c).count()
    }

    pub fn censored_fraction(&self) -> f64 {
        self.n_censored() as f64 / self.len() as f64
    }

    /// Uncensored samples only (still sorted); the fitting routines work
    /// on these.
    pub fn uncensored_samples(&self) -> Vec<f64> {
        self.samples
            .iter()
            .zip(&self.censored)
            .filter(|&(_, &c)| !c)
            .map(|(&x, _)| x)
            .collect()
    }

    /// Empirical CDF: fraction of samples <= x. Right-continuous step
    /// function; censoring flags are ignored here (the censored values sit
    /// at the cutoff like any other sample).
    pub fn ecdf(&self, x: f64) -> f64 {
        let k = self.samples.partition_point(|&s| s <= x);
        k as f64 / self.samples.len() as f64
    }

    /// Lower inverse-ECDF quantile: the smallest sample `s` with
    /// `ecdf(s) >= q`. Uses the same `k/n` floating-point comparison as
    /// `ecdf`, so `quantile(ecdf(s)) == s` for every sample.
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.samples.len();
        let nf = n as f64;
        // Smallest k in 1..=n with k/n >= q.
        let mut lo = 1usize;
        let mut hi = n;
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if mid as f64 / nf >= q {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        self.samples[lo - 1]
    }

    pub fn summary(&self) -> RtdSummary {
        let n = self.samples.len();
        let mean = self.samples.iter().sum::<f64>() / n as f64;
        RtdSummary {
            min: self.samples[0],
            max: self.samples[n - 1],
            mean,
            median: self.quantile(0.5),
            n,
            n_censored: self.n_censored(),
        }
    }

    /// Writes `(x, F(x))` pairs at each sample point as CSV plot data.
    pub fn write_ecdf_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x,ecdf")?;
        for &x in &self.samples {
            writeln!(w, "{},{}", x, self.ecdf(x))?;
        }
        Ok(())
    }
}
