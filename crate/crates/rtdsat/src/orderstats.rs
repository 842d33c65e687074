//! Order statistics of the runtime model: the distribution of the minimum
//! of n i.i.d. draws, its expectation, and the predicted parallel speedup.
//!
//! Running n independent copies of a Las Vegas solver and stopping at the
//! first solution draws the minimum of n runtimes, whose CDF is
//! `F_Z(x) = 1 - (1 - F_Y(x))^n`. The expected parallel runtime is
//! `E[Z] = n * integral of t f(t) (1-F(t))^(n-1) dt` and the speedup is
//! `G(n) = E[Y] / E[Z]`. The exponential family has closed forms; the
//! lognormal expectation is evaluated by adaptive quadrature after the
//! substitution t = exp(mu + sigma u), which turns the integrand into a
//! Gaussian-weighted function of u truncated to |u| <= 12.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::fit::DistModel;
use crate::quad::{self, QuadError};
use crate::rng::SplitMix64;
use crate::rtd::{Rtd, Unit};

#[derive(Debug, Error)]
pub enum OrderStatsError {
    #[error("core_counts must be nonempty")]
    NoCoreCounts,
    #[error("core counts must be >= 1")]
    ZeroCores,
    #[error(transparent)]
    Quad(#[from] QuadError),
}

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// CDF of the minimum of `n` i.i.d. draws from `m`.
pub fn min_cdf(m: &DistModel, n: u64, x: f64) -> f64 {
    debug_assert!(n >= 1);
    // 1 - (1-F)^n, evaluated as -expm1(n * ln(1-F)) so large n cannot
    // underflow the survival power.
    -(n as f64 * m.ln_survival(x)).exp_m1()
}

/// Density of the minimum of `n` i.i.d. draws: n f(x) (1-F(x))^(n-1).
pub fn min_pdf(m: &DistModel, n: u64, x: f64) -> f64 {
    debug_assert!(n >= 1);
    let factor = if n == 1 {
        1.0
    } else {
        ((n - 1) as f64 * m.ln_survival(x)).exp()
    };
    n as f64 * m.pdf(x) * factor
}

/// Expected runtime of the first finisher among `n` walks.
///
/// Exponential family: closed form `x0 + 1/(n lambda)`. Lognormal: adaptive
/// quadrature of the order-statistic integral to 1e-8 relative tolerance.
pub fn expected_min(m: &DistModel, n: u64) -> Result<f64, OrderStatsError> {
    debug_assert!(n >= 1);
    match m.exponential_params() {
        Some((x0, lambda)) => Ok(x0 + 1.0 / (n as f64 * lambda)),
        None => expected_min_quadrature(m, n),
    }
}

/// Quadrature route for `E[Z^(n)]`, usable for every family; for the
/// exponential family this cross-checks the closed form.
pub fn expected_min_quadrature(m: &DistModel, n: u64) -> Result<f64, OrderStatsError> {
    debug_assert!(n >= 1);
    let nf = n as f64;
    match *m {
        DistModel::Lognormal { mu, sigma } => {
            let f = |u: f64| {
                let density = (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
                let factor = if n == 1 {
                    1.0
                } else {
                    ((nf - 1.0) * normal_ln_survival(u)).exp()
                };
                nf * (mu + sigma * u).exp() * density * factor
            };
            Ok(quad::integrate(f, -12.0, 12.0, 1e-8)?)
        }
        _ => {
            let (x0, lambda) = m.exponential_params().expect("exponential family");
            // The min is x0 + Exp(n lambda); 45 mean widths of tail leave
            // relative mass ~ 5e-18.
            let hi = x0 + 45.0 / (nf * lambda);
            let f = |t: f64| {
                let factor = if n == 1 {
                    1.0
                } else {
                    ((nf - 1.0) * m.ln_survival(t)).exp()
                };
                nf * t * m.pdf(t) * factor
            };
            Ok(quad::integrate(f, x0, hi, 1e-8)?)
        }
    }
}

/// ln(1 - Phi(u)) without right-tail cancellation.
fn normal_ln_survival(u: f64) -> f64 {
    if u > 0.0 {
        (0.5 * erfc(u / SQRT_2)).ln()
    } else {
        (-(0.5 * erfc(-u / SQRT_2))).ln_1p()
    }
}

/// Predicted speedup `G(n) = E[Y] / E[Z^(n)]`.
pub fn predicted_speedup(m: &DistModel, n: u64) -> Result<f64, OrderStatsError> {
    Ok(m.mean() / expected_min(m, n)?)
}

/// Asymptote of the speedup curve as the core count grows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SpeedupLimit {
    /// Speedup grows without bound (non-shifted exponential: G(n) = n).
    Infinite,
    /// Closed-form limit, `1 + 1/(x0 lambda)` for a shifted exponential.
    Exact { value: f64 },
    /// Numerically extrapolated asymptote; the lognormal curve saturates
    /// but has no known closed-form limit, so this is an engineering
    /// estimate (Aitken-accelerated G(2^k) sequence), not an exact value.
    Numerical { value: f64 },
}

impl SpeedupLimit {
    pub fn value(&self) -> Option<f64> {
        match *self {
            SpeedupLimit::Infinite => None,
            SpeedupLimit::Exact { value } | SpeedupLimit::Numerical { value } => Some(value),
        }
    }
}

/// Speedup limit of the model. Shifted exponential with x0 > 0 saturates at
/// `1 + 1/(x0 lambda)`; with x0 = 0 the speedup is n itself, unbounded.
pub fn speedup_limit(m: &DistModel) -> Result<SpeedupLimit, OrderStatsError> {
    match *m {
        DistModel::Exponential { .. } => Ok(SpeedupLimit::Infinite),
        DistModel::ShiftedExponential { x0, lambda } => {
            if x0 == 0.0 {
                Ok(SpeedupLimit::Infinite)
            } else {
                Ok(SpeedupLimit::Exact {
                    value: 1.0 + 1.0 / (x0 * lambda),
                })
            }
        }
        DistModel::Lognormal { .. } => Ok(SpeedupLimit::Numerical {
            value: lognormal_numerical_limit(m, 20)?,
        }),
    }
}

/// Aitken delta-squared extrapolation of G(2^k), k = 0..=kmax, clamped to
/// stay at or above the last sequence element so the reported limit
/// dominates every evaluated speedup.
fn lognormal_numerical_limit(m: &DistModel, kmax: u32) -> Result<f64, OrderStatsError> {
    let g: Vec<f64> = (0..=kmax)
        .map(|k| predicted_speedup(m, 1u64 << k))
        .collect::<Result<_, _>>()?;
    let last_g = *g.last().expect("kmax >= 0");
    let mut seq = g;
    let mut estimate = last_g;
    while seq.len() >= 3 {
        let mut next = Vec::with_capacity(seq.len() - 2);
        for w in seq.windows(3) {
            let denom = w[2] - 2.0 * w[1] + w[0];
            if denom.abs() < 1e-9 * w[2].abs().max(1.0) {
                continue;
            }
            let accel = w[2] - (w[2] - w[1]).powi(2) / denom;
            if accel.is_finite() {
                next.push(accel);
            }
        }
        match next.last() {
            Some(&v) => estimate = v,
            None => break,
        }
        seq = next;
    }
    Ok(estimate.max(last_g))
}

/// Non-parametric estimate of `E[Z^(n)]`: the mean over seeded bootstrap
/// trials of the minimum of `n` samples drawn with replacement from the
/// RTD. Used as a cross-check when no parametric fit is accepted.
pub fn empirical_expected_min(rtd: &Rtd, n: u64, trials: u64, seed: u64) -> f64 {
    assert!(n >= 1 && trials >= 1);
    let mut rng = SplitMix64::new(seed);
    let xs = rtd.samples();
    let len = xs.len() as u64;
    let mut acc = 0.0;
    for _ in 0..trials {
        let mut best = f64::INFINITY;
        for _ in 0..n {
            let x = xs[rng.below(len) as usize];
            if x < best {
                best = x;
            }
        }
        acc += best;
    }
    acc / trials as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedupPoint {
    pub n: u64,
    pub expected_runtime: f64,
    pub speedup: f64,
}

/// Predicted runtime and speedup per core count, plus the asymptote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupCurve {
    pub points: Vec<SpeedupPoint>,
    pub limit: SpeedupLimit,
    pub base_mean: f64,
}

/// Evaluates the curve at each requested core count (sorted, deduplicated).
pub fn speedup_curve(m: &DistModel, core_counts: &[u64]) -> Result<SpeedupCurve, OrderStatsError> {
    if core_counts.is_empty() {
        return Err(OrderStatsError::NoCoreCounts);
    }
    if core_counts.contains(&0) {
        return Err(OrderStatsError::ZeroCores);
    }
    let mut counts = core_counts.to_vec();
    counts.sort_unstable();
    counts.dedup();

    let base_mean = m.mean();
    let points = counts
        .iter()
        .map(|&n| {
            let expected_runtime = expected_min(m, n)?;
            Ok(SpeedupPoint {
                n,
                expected_runtime,
                speedup: base_mean / expected_runtime,
            })
        })
        .collect::<Result<Vec<_>, OrderStatsError>>()?;

    let limit = match *m {
        DistModel::Lognormal { .. } => {
            // Extend the extrapolation range past the largest request so the
            // reported limit dominates every point.
            let max_n = *counts.last().expect("nonempty");
            let kmax = 20.max(64 - max_n.leading_zeros());
            SpeedupLimit::Numerical {
                value: lognormal_numerical_limit(m, kmax)?,
            }
        }
        _ => speedup_limit(m)?,
    };
    Ok(SpeedupCurve {
        points,
        limit,
        base_mean,
    })
}

/// Header line of the curve file: everything needed to replot or reuse the
/// prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveHeader {
    pub model: DistModel,
    pub limit: SpeedupLimit,
    pub base_mean: f64,
    pub unit: Unit,
}

/// Writes the curve as gnuplot-ready CSV prefixed by one `#` JSON header
/// line carrying the model, the limit and the base mean.
pub fn write_speedup_curve<W: Write>(
    curve: &SpeedupCurve,
    model: &DistModel,
    unit: Unit,
    mut w: W,
) -> io::Result<()> {
    let header = CurveHeader {
        model: *model,
        limit: curve.limit,
        base_mean: curve.base_mean,
        unit,
    };
    writeln!(w, "# {}", serde_json::to_string(&header)?)?;
    writeln!(w, "n,expected_runtime,speedup")?;
    for p in &curve.points {
        writeln!(w, "{},{},{}", p.n, p.expected_runtime, p.speedup)?;
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum CurveReadError {
    #[error("missing '#' JSON header line")]
    MissingHeader,
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn read_speedup_curve<R: BufRead>(
    reader: R,
) -> Result<(CurveHeader, SpeedupCurve), CurveReadError> {
    let mut lines = reader.lines();
    let header: CurveHeader = match lines.next() {
        Some(Ok(line)) if line.starts_with('#') => {
            serde_json::from_str(line.trim_start_matches('#').trim())?
        }
        Some(Err(e)) => return Err(e.into()),
        _ => return Err(CurveReadError::MissingHeader),
    };
    match lines.next() {
        Some(Ok(line)) if line.trim() == "n,expected_runtime,speedup" => {}
        Some(Err(e)) => return Err(e.into()),
        _ => {
            return Err(CurveReadError::Malformed {
                line: 2,
                msg: "expected column header n,expected_runtime,speedup".into(),
            })
        }
    }
    let mut points = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 3;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(CurveReadError::Malformed {
                line: lineno,
                msg: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        let bad = |what: &str, s: &str| CurveReadError::Malformed {
            line: lineno,
            msg: format!("bad {what}: {s:?}"),
        };
        points.push(SpeedupPoint {
            n: fields[0].trim().parse().map_err(|_| bad("n", fields[0]))?,
            expected_runtime: fields[1]
                .trim()
                .parse()
                .map_err(|_| bad("expected_runtime", fields[1]))?,
            speedup: fields[2]
                .trim()
                .parse()
                .map_err(|_| bad("speedup", fields[2]))?,
        });
    }
    let curve = SpeedupCurve {
        points,
        limit: header.limit,
        base_mean: header.base_mean,
    };
    Ok((header, curve))
}
