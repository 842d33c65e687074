//! Parametric runtime models, maximum-likelihood fitting, and the
//! one-sample Kolmogorov-Smirnov goodness-of-fit test.
//!
//! Censored samples are excluded from parameter estimation and from the
//! KS statistic: including cutoff values as if they were real runtimes
//! would bias the rate and log-mean estimates. Callers should warn loudly
//! when more than 5% of runs were censored (see
//! [`crate::rtd::Rtd::censored_fraction`]).
//!
//! KS p-values come from the asymptotic Kolmogorov distribution with no
//! adjustment for estimated parameters (no Lilliefors correction); they
//! are mildly optimistic when the model was fitted to the same data.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};
use thiserror::Error;

use crate::rng::SplitMix64;
use crate::rtd::Rtd;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("need at least 2 distinct uncensored samples to fit {family}, got {n} total")]
    TooFewSamples { family: Family, n: usize },
    #[error("degenerate RTD (all uncensored samples equal); {family} parameters are undefined")]
    Degenerate { family: Family },
    #[error("no candidate families given")]
    NoCandidates,
    #[error("invalid model parameters: {0}")]
    BadParams(String),
}

/// Model family selectable on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    Exponential,
    ShiftedExponential,
    Lognormal,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Exponential => write!(f, "exp"),
            Family::ShiftedExponential => write!(f, "shifted-exp"),
            Family::Lognormal => write!(f, "lognormal"),
        }
    }
}

impl FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exp" | "exponential" => Ok(Family::Exponential),
            "shifted-exp" | "shifted-exponential" => Ok(Family::ShiftedExponential),
            "lognormal" => Ok(Family::Lognormal),
            other => Err(format!(
                "unknown family {other:?} (expected exp|shifted-exp|lognormal)"
            )),
        }
    }
}

/// A fitted parametric runtime model.
///
/// `Exponential` is the non-shifted special case (`x0 = 0`) kept as its own
/// variant because the linear-speedup regime is detected by family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params")]
pub enum DistModel {
    #[serde(rename = "exp")]
    Exponential { lambda: f64 },
    #[serde(rename = "shifted-exp")]
    ShiftedExponential { x0: f64, lambda: f64 },
    #[serde(rename = "lognormal")]
    Lognormal { mu: f64, sigma: f64 },
}

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Standard normal CDF.
fn phi(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Standard normal quantile.
fn phi_inv(p: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * p)
}

impl DistModel {
    pub fn family(&self) -> Family {
        match self {
            DistModel::Exponential { .. } => Family::Exponential,
            DistModel::ShiftedExponential { .. } => Family::ShiftedExponential,
            DistModel::Lognormal { .. } => Family::Lognormal,
        }
    }

    pub fn validate(&self) -> Result<(), FitError> {
        let bad = |msg: String| Err(FitError::BadParams(msg));
        // is_finite() also rejects NaN, so the comparisons below are safe.
        match *self {
            DistModel::Exponential { lambda } => {
                if !lambda.is_finite() || lambda <= 0.0 {
                    return bad(format!("lambda = {lambda}, need > 0"));
                }
            }
            DistModel::ShiftedExponential { x0, lambda } => {
                if !lambda.is_finite() || lambda <= 0.0 {
                    return bad(format!("lambda = {lambda}, need > 0"));
                }
                if !x0.is_finite() || x0 < 0.0 {
                    return bad(format!("x0 = {x0}, need >= 0"));
                }
            }
            DistModel::Lognormal { mu, sigma } => {
                if !mu.is_finite() {
                    return bad(format!("mu = {mu}"));
                }
                if !sigma.is_finite() || sigma <= 0.0 {
                    return bad(format!("sigma = {sigma}, need > 0"));
                }
            }
        }
        Ok(())
    }

    /// Shift and rate of the exponential family; `None` for lognormal.
    pub(crate) fn exponential_params(&self) -> Option<(f64, f64)> {
        match *self {
            DistModel::Exponential { lambda } => Some((0.0, lambda)),
            DistModel::ShiftedExponential { x0, lambda } => Some((x0, lambda)),
            DistModel::Lognormal { .. } => None,
        }
    }

    /// Cumulative distribution function F(x).
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            DistModel::Exponential { lambda } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-lambda * x).exp_m1()
                }
            }
            DistModel::ShiftedExponential { x0, lambda } => {
                if x <= x0 {
                    0.0
                } else {
                    -(-lambda * (x - x0)).exp_m1()
                }
            }
            DistModel::Lognormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    phi((x.ln() - mu) / sigma)
                }
            }
        }
    }

    /// Probability density f(x).
    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            DistModel::Exponential { lambda } => {
                if x < 0.0 {
                    0.0
                } else {
                    lambda * (-lambda * x).exp()
                }
            }
            DistModel::ShiftedExponential { x0, lambda } => {
                if x < x0 {
                    0.0
                } else {
                    lambda * (-lambda * (x - x0)).exp()
                }
            }
            DistModel::Lognormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    let z = (x.ln() - mu) / sigma;
                    (-0.5 * z * z).exp() / (x * sigma * (2.0 * std::f64::consts::PI).sqrt())
                }
            }
        }
    }

    /// ln(1 - F(x)), the log survival function, computed without the
    /// catastrophic cancellation of `ln(1 - cdf(x))` in the right tail.
    /// This is the numerically safe form of the `(1-F)^(n-1)` guard.
    pub fn ln_survival(&self, x: f64) -> f64 {
        match *self {
            DistModel::Exponential { lambda } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -lambda * x
                }
            }
            DistModel::ShiftedExponential { x0, lambda } => {
                if x <= x0 {
                    0.0
                } else {
                    -lambda * (x - x0)
                }
            }
            DistModel::Lognormal { mu, sigma } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let z = (x.ln() - mu) / sigma;
                if z > 0.0 {
                    // Right tail: survival = erfc(z/sqrt2)/2 is accurate.
                    (0.5 * erfc(z / SQRT_2)).ln()
                } else {
                    (-phi(z)).ln_1p()
                }
            }
        }
    }

    /// Analytic mean `E[Y]`.
    pub fn mean(&self) -> f64 {
        match *self {
            DistModel::Exponential { lambda } => 1.0 / lambda,
            DistModel::ShiftedExponential { x0, lambda } => x0 + 1.0 / lambda,
            DistModel::Lognormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
        }
    }

    /// Inverse CDF.
    pub fn quantile(&self, p: f64) -> f64 {
        debug_assert!((0.0..1.0).contains(&p));
        match *self {
            DistModel::Exponential { lambda } => -(-p).ln_1p() / lambda,
            DistModel::ShiftedExponential { x0, lambda } => x0 - (-p).ln_1p() / lambda,
            DistModel::Lognormal { mu, sigma } => (mu + sigma * phi_inv(p)).exp(),
        }
    }

    /// One seeded draw. `spare` caches the second normal of a polar-method
    /// pair; pass a fresh `None` per stream.
    pub fn sample(&self, rng: &mut SplitMix64, spare: &mut Option<f64>) -> f64 {
        match *self {
            DistModel::Exponential { lambda } => rng.next_exp() / lambda,
            DistModel::ShiftedExponential { x0, lambda } => x0 + rng.next_exp() / lambda,
            DistModel::Lognormal { mu, sigma } => (mu + sigma * rng.next_normal(spare)).exp(),
        }
    }
}

/// Fit result plus the goodness-of-fit verdict for one family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    #[serde(flatten)]
    pub model: DistModel,
    pub ks_d: f64,
    pub p_value: f64,
    pub accepted: bool,
    pub n: usize,
    pub n_censored: usize,
}

fn uncensored_for_fit(rtd: &Rtd, family: Family) -> Result<Vec<f64>, FitError> {
    let xs = rtd.uncensored_samples();
    if xs.len() < 2 {
        return Err(FitError::TooFewSamples {
            family,
            n: xs.len(),
        });
    }
    Ok(xs)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Non-shifted exponential MLE: lambda = 1 / mean.
pub fn fit_exponential(rtd: &Rtd) -> Result<DistModel, FitError> {
    let xs = uncensored_for_fit(rtd, Family::Exponential)?;
    Ok(DistModel::Exponential {
        lambda: 1.0 / mean(&xs),
    })
}

/// Shifted exponential: the shift is pinned just below the smallest sample
/// (x0 = (1 - 1e-6) * min, so the density is positive at every data point)
/// and the rate is the conditional MLE lambda = 1 / (mean - x0).
pub fn fit_shifted_exponential(rtd: &Rtd) -> Result<DistModel, FitError> {
    let family = Family::ShiftedExponential;
    let xs = uncensored_for_fit(rtd, family)?;
    let lo = xs[0];
    if xs[xs.len() - 1] == lo {
        return Err(FitError::Degenerate { family });
    }
    let x0 = lo * (1.0 - 1e-6);
    Ok(DistModel::ShiftedExponential {
        x0,
        lambda: 1.0 / (mean(&xs) - x0),
    })
}

/// Lognormal MLE: mu and sigma are the mean and population standard
/// deviation of the log samples.
pub fn fit_lognormal(rtd: &Rtd) -> Result<DistModel, FitError> {
    let family = Family::Lognormal;
    let xs = uncensored_for_fit(rtd, family)?;
    if xs[xs.len() - 1] == xs[0] {
        return Err(FitError::Degenerate { family });
    }
    let logs: Vec<f64> = xs.iter().map(|&x| x.ln()).collect();
    let mu = mean(&logs);
    let var = logs.iter().map(|l| (l - mu) * (l - mu)).sum::<f64>() / logs.len() as f64;
    if var == 0.0 {
        return Err(FitError::Degenerate { family });
    }
    Ok(DistModel::Lognormal {
        mu,
        sigma: var.sqrt(),
    })
}

pub fn fit_family(rtd: &Rtd, family: Family) -> Result<DistModel, FitError> {
    match family {
        Family::Exponential => fit_exponential(rtd),
        Family::ShiftedExponential => fit_shifted_exponential(rtd),
        Family::Lognormal => fit_lognormal(rtd),
    }
}

/// Asymptotic Kolmogorov distribution tail:
/// p = 2 * sum_{k>=1} (-1)^(k-1) exp(-2 k^2 t^2),
/// truncated when a term drops below 1e-12 or after 100 terms.
pub fn kolmogorov_pvalue(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100u32 {
        let term = (-2.0 * (k * k) as f64 * t * t).exp();
        sum += sign * term;
        if term < 1e-12 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS test of the uncensored samples against `m`.
///
/// D is the supremum gap between the empirical step function and the model
/// CDF, evaluated at both step edges; `accepted` is `p > 0.05`, the
/// conventional threshold.
pub fn ks_test(rtd: &Rtd, m: &DistModel) -> FitReport {
    let xs = rtd.uncensored_samples();
    let n = xs.len();
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = m.cdf(x);
        let upper = (i + 1) as f64 / nf - f;
        let lower = f - i as f64 / nf;
        d = d.max(upper.abs()).max(lower.abs());
    }
    let p = kolmogorov_pvalue(nf.sqrt() * d);
    FitReport {
        model: *m,
        ks_d: d,
        p_value: p,
        accepted: p > 0.05,
        n: rtd.len(),
        n_censored: rtd.n_censored(),
    }
}

/// Fits every candidate family and returns the report with the highest
/// p-value; its `accepted` flag says whether even the best fit clears 0.05.
/// Fit errors (e.g. a degenerate RTD) propagate.
pub fn select_model(rtd: &Rtd, candidates: &[Family]) -> Result<FitReport, FitError> {
    let reports = fit_all(rtd, candidates)?;
    Ok(best_report(&reports).clone())
}

/// Per-family reports in candidate order.
pub fn fit_all(rtd: &Rtd, candidates: &[Family]) -> Result<Vec<FitReport>, FitError> {
    if candidates.is_empty() {
        return Err(FitError::NoCandidates);
    }
    candidates
        .iter()
        .map(|&fam| Ok(ks_test(rtd, &fit_family(rtd, fam)?)))
        .collect()
}

/// The argmax-p-value report (first wins ties).
pub fn best_report(reports: &[FitReport]) -> &FitReport {
    reports
        .iter()
        .reduce(|best, r| if r.p_value > best.p_value { r } else { best })
        .expect("reports must be nonempty")
}
