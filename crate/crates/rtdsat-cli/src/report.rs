//! The `report` command: joins a runtime log, a fit, a speedup prediction
//! and optional simulation results into one analysis JSON plus
//! gnuplot-ready plot CSVs.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use rtdsat::fit::{DistModel, FitReport};
use rtdsat::multiwalk::{self, ParallelResult};
use rtdsat::orderstats::{self, SpeedupCurve, SpeedupLimit};
use rtdsat::rtd::{RtdSummary, Unit};

use crate::{load_fit_file, load_rtd, open_in, VERSION};

#[derive(Args)]
pub(crate) struct ReportArgs {
    /// Runtime log CSV from `collect`
    #[arg(long)]
    rtd: PathBuf,
    /// Fit JSON from `fit`
    #[arg(long)]
    fit: PathBuf,
    /// Speedup curve from `predict`
    #[arg(long)]
    curve: PathBuf,
    /// Simulation results from `simulate` (repeatable, one per core count)
    #[arg(long = "sim")]
    sims: Vec<PathBuf>,
    /// Unit to analyze; must match the fit, curve and simulation units
    #[arg(long, default_value = "flips")]
    unit: Unit,
    /// Instance label embedded in the report (defaults to the log file stem)
    #[arg(long)]
    instance: Option<String>,
    /// Directory for report.json and the plot CSVs
    #[arg(long)]
    out_dir: PathBuf,
}

/// Predicted-vs-actual pairing for one simulated core count.
#[derive(Debug, Serialize, Deserialize)]
struct Comparison {
    n: u64,
    predicted_runtime: f64,
    predicted_speedup: f64,
    actual_mean_runtime: f64,
    actual_speedup: f64,
    trials: usize,
    n_censored_trials: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct AnalysisReport {
    version: String,
    instance: String,
    unit: Unit,
    seed_min: u64,
    seed_max: u64,
    rtd_summary: RtdSummary,
    fits: Vec<FitReport>,
    selected: FitReport,
    curve: SpeedupCurve,
    comparisons: Vec<Comparison>,
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(
        File::create(&path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

/// Model CDF sampled on an even grid over the bulk of the distribution.
fn write_cdf_csv<W: Write>(mut w: W, cdf: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<()> {
    writeln!(w, "x,cdf")?;
    let steps = 256;
    for i in 0..=steps {
        let x = lo + (hi - lo) * i as f64 / steps as f64;
        writeln!(w, "{},{}", x, cdf(x))?;
    }
    Ok(())
}

pub(crate) fn cmd_report(args: &ReportArgs) -> Result<()> {
    let (records, rtd) = load_rtd(&args.rtd, args.unit)?;
    let fit_file = load_fit_file(&args.fit)?;
    if fit_file.unit != args.unit {
        bail!(
            "unit mismatch: fit was computed in {}, report requested {}",
            fit_file.unit,
            args.unit
        );
    }
    let (curve_header, curve) = orderstats::read_speedup_curve(open_in(&args.curve)?)
        .with_context(|| format!("reading curve {}", args.curve.display()))?;
    if curve_header.unit != args.unit {
        bail!(
            "unit mismatch: curve was predicted in {}, report requested {}",
            curve_header.unit,
            args.unit
        );
    }
    let model = curve_header.model;
    if model != fit_file.selected.model {
        eprintln!("warning: curve model differs from the fit's selected model; using the curve's");
    }

    let mut sims: Vec<ParallelResult> = Vec::new();
    for path in &args.sims {
        let sim = multiwalk::read_parallel_result(open_in(path)?)
            .with_context(|| format!("reading simulation {}", path.display()))?;
        if sim.unit != args.unit {
            bail!(
                "unit mismatch: simulation {} is in {}, report requested {}",
                path.display(),
                sim.unit,
                args.unit
            );
        }
        sims.push(sim);
    }
    sims.sort_by_key(|s| s.n_cores);

    let summary = rtd.summary();
    let seq_mean = summary.mean;
    let comparisons = sims
        .iter()
        .map(|sim| -> Result<Comparison> {
            let predicted_runtime = orderstats::expected_min(&model, sim.n_cores)?;
            Ok(Comparison {
                n: sim.n_cores,
                predicted_runtime,
                predicted_speedup: model.mean() / predicted_runtime,
                actual_mean_runtime: sim.mean_runtime,
                actual_speedup: sim.empirical_speedup.unwrap_or(seq_mean / sim.mean_runtime),
                trials: sim.trials,
                n_censored_trials: sim.n_censored_trials,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let dir = &args.out_dir;

    // Empirical CDF at each sample point.
    rtd.write_ecdf_csv(create(dir, "ecdf.csv")?)?;

    // Fitted sequential CDF over the sample range.
    let (lo, hi) = (summary.min, summary.max);
    write_cdf_csv(create(dir, "fitted_cdf.csv")?, |x| model.cdf(x), lo, hi)?;

    // Predicted n-core CDFs: the bulk of each min-distribution.
    for point in &curve.points {
        let n = point.n;
        let qlo = min_quantile(&model, n, 0.001);
        let qhi = min_quantile(&model, n, 0.999);
        write_cdf_csv(
            create(dir, &format!("min_cdf_n{n}.csv"))?,
            |x| orderstats::min_cdf(&model, n, x),
            qlo,
            qhi,
        )?;
    }

    // Predicted vs actual speedups; actual left blank where not simulated.
    {
        let mut w = create(dir, "speedup.csv")?;
        writeln!(w, "n,predicted_speedup,actual_speedup")?;
        for point in &curve.points {
            match comparisons.iter().find(|c| c.n == point.n) {
                Some(c) => writeln!(w, "{},{},{}", point.n, point.speedup, c.actual_speedup)?,
                None => writeln!(w, "{},{},", point.n, point.speedup)?,
            }
        }
    }

    let instance = args.instance.clone().unwrap_or_else(|| {
        args.rtd
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let report = AnalysisReport {
        version: VERSION.to_string(),
        instance,
        unit: args.unit,
        seed_min: records.iter().map(|r| r.seed).min().unwrap_or(0),
        seed_max: records.iter().map(|r| r.seed).max().unwrap_or(0),
        rtd_summary: summary,
        fits: fit_file.families,
        selected: fit_file.selected,
        curve,
        comparisons,
    };
    let mut w = create(dir, "report.json")?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    writeln!(w)?;
    w.flush()?;

    eprintln!("report written to {}", dir.display());
    if let SpeedupLimit::Numerical { value } = report.curve.limit {
        eprintln!("note: speedup limit {value:.2} is a numerical asymptote, not a closed form");
    }
    Ok(())
}

/// Quantile of the min-distribution: F_Z(x) = q iff F_Y(x) = 1-(1-q)^(1/n).
fn min_quantile(model: &DistModel, n: u64, q: f64) -> f64 {
    let base_q = -(-q).ln_1p() / n as f64; // -ln(1-q)/n
    model.quantile(-(-base_q).exp_m1()) // 1 - exp(-base_q)
}
