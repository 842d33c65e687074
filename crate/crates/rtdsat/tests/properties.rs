//! Cross-module invariants: property tests over random inputs, plus the
//! DPLL-certified solver success-rate check.

mod common;

use proptest::prelude::*;

use rtdsat::cnf::{self, CnfFormula};
use rtdsat::fit::{self, DistModel};
use rtdsat::orderstats;
use rtdsat::quad;
use rtdsat::rng::SplitMix64;
use rtdsat::rtd::{Rtd, Unit};
use rtdsat::sls::{solve, RunStatus, SolverConfig};

#[test]
fn solver_succeeds_on_dpll_certified_instances() {
    // Satisfiable v=50 instances at the phase-transition ratio must be
    // solved within 1e6 flips in at least 95% of seeded runs.
    let mut attempted = 0u32;
    let mut solved = 0u32;
    let mut instances = 0;
    for gen_seed in 0.. {
        if instances == 5 {
            break;
        }
        let f = cnf::generate_uniform_ksat(50, 3, 4.2, gen_seed).unwrap();
        if !common::dpll_satisfiable(&f) {
            continue;
        }
        instances += 1;
        for run_seed in 0..20 {
            attempted += 1;
            let cfg = SolverConfig::new(run_seed).with_max_flips(1_000_000);
            if solve(&f, &cfg).status == RunStatus::Solved {
                solved += 1;
            }
        }
    }
    assert_eq!(attempted, 100);
    assert!(
        solved >= 95,
        "solved only {solved}/100 runs on satisfiable instances"
    );
}

#[test]
fn density_integral_reproduces_cdf_near_one() {
    // Integrating the density over (0, Q) with Q = F^-1(1 - 1e-10) must
    // reproduce the CDF value within 1e-6, for every family.
    let models = [
        DistModel::Exponential { lambda: 0.7 },
        DistModel::ShiftedExponential {
            x0: 100.0,
            lambda: 1.0 / 700.0,
        },
        DistModel::ShiftedExponential {
            x0: 0.01,
            lambda: 10.0,
        },
        DistModel::Lognormal {
            mu: 0.0,
            sigma: 1.0,
        },
        DistModel::Lognormal {
            mu: 6.0,
            sigma: 0.8,
        },
    ];
    for m in models {
        let q = m.quantile(1.0 - 1e-10);
        let lo = 1e-12;
        let mass = quad::integrate(|x| m.pdf(x), lo, q, 1e-8).unwrap();
        assert!(
            (mass - m.cdf(q)).abs() < 1e-6,
            "{m:?}: integral {mass} vs cdf {}",
            m.cdf(q)
        );
    }
}

fn formula_strategy() -> impl Strategy<Value = CnfFormula> {
    // Random small formulas: up to 9 vars, clauses of width 1..=4,
    // duplicates allowed, no empty clause.
    (2u32..10).prop_flat_map(|nv| {
        let lit = (1i32..=nv as i32).prop_flat_map(|v| prop_oneof![Just(v), Just(-v)]);
        let clause = prop::collection::vec(lit, 1..=4);
        prop::collection::vec(clause, 1..40)
            .prop_map(move |clauses| CnfFormula::new(nv, clauses).unwrap())
    })
}

fn sorted_positive_samples() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-3..1e6f64, 2..60).prop_map(|mut v| {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dimacs_round_trip(f in formula_strategy()) {
        let mut buf = Vec::new();
        cnf::write_dimacs(&f, &mut buf).unwrap();
        let parsed = cnf::parse_dimacs(buf.as_slice()).unwrap();
        prop_assert_eq!(parsed, f);
    }

    #[test]
    fn ecdf_is_a_distribution_function(samples in sorted_positive_samples(), x in -1e6..2e6f64) {
        let rtd = Rtd::from_samples(samples.clone(), Unit::Flips).unwrap();
        let v = rtd.ecdf(x);
        prop_assert!((0.0..=1.0).contains(&v));
        // Monotone in x.
        prop_assert!(rtd.ecdf(x) <= rtd.ecdf(x + 1.0));
        prop_assert_eq!(rtd.ecdf(samples[samples.len() - 1]), 1.0);
        prop_assert_eq!(rtd.ecdf(samples[0] - 1.0), 0.0);
    }

    #[test]
    fn quantile_monotone(samples in sorted_positive_samples(), q1 in 0.0..=1.0f64, q2 in 0.0..=1.0f64) {
        let rtd = Rtd::from_samples(samples, Unit::Flips).unwrap();
        let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
        prop_assert!(rtd.quantile(lo) <= rtd.quantile(hi));
    }

    #[test]
    fn quantile_inverts_ecdf(samples in sorted_positive_samples()) {
        let rtd = Rtd::from_samples(samples, Unit::Flips).unwrap();
        for &s in rtd.samples() {
            prop_assert_eq!(rtd.quantile(rtd.ecdf(s)), s);
        }
    }

    #[test]
    fn ks_statistics_are_bounded(samples in sorted_positive_samples(), lambda in 1e-6..1e3f64) {
        let rtd = Rtd::from_samples(samples, Unit::Flips).unwrap();
        let report = fit::ks_test(&rtd, &DistModel::Exponential { lambda });
        prop_assert!((0.0..=1.0).contains(&report.ks_d));
        prop_assert!((0.0..=1.0).contains(&report.p_value));
        prop_assert_eq!(report.accepted, report.p_value > 0.05);
    }

    #[test]
    fn fit_scale_equivariance(samples in sorted_positive_samples(), c in 1e-3..1e3f64) {
        let distinct = samples.windows(2).any(|w| w[0] != w[1]);
        prop_assume!(distinct);
        let base = Rtd::from_samples(samples.clone(), Unit::Flips).unwrap();
        let scaled =
            Rtd::from_samples(samples.iter().map(|&x| c * x).collect(), Unit::Flips).unwrap();

        let DistModel::ShiftedExponential { x0: a0, lambda: l0 } =
            fit::fit_shifted_exponential(&base).unwrap() else { unreachable!() };
        let DistModel::ShiftedExponential { x0: a1, lambda: l1 } =
            fit::fit_shifted_exponential(&scaled).unwrap() else { unreachable!() };
        prop_assert!((a1 - c * a0).abs() <= 1e-9 * c * a0.abs().max(1.0));
        prop_assert!((l1 - l0 / c).abs() <= 1e-9 * (l0 / c));

        let DistModel::Lognormal { mu: m0, sigma: s0 } =
            fit::fit_lognormal(&base).unwrap() else { unreachable!() };
        let DistModel::Lognormal { mu: m1, sigma: s1 } =
            fit::fit_lognormal(&scaled).unwrap() else { unreachable!() };
        prop_assert!((m1 - (m0 + c.ln())).abs() < 1e-9);
        prop_assert!((s1 - s0).abs() < 1e-9);

        // The KS statistic is scale-free when the model scales with the data.
        let d0 = fit::ks_test(&base, &DistModel::ShiftedExponential { x0: a0, lambda: l0 }).ks_d;
        let d1 = fit::ks_test(&scaled, &DistModel::ShiftedExponential { x0: a1, lambda: l1 }).ks_d;
        prop_assert!((d0 - d1).abs() < 1e-9);
    }

    #[test]
    fn lognormal_fit_equals_normal_mle_on_logs(samples in sorted_positive_samples()) {
        let distinct = samples.windows(2).any(|w| w[0] != w[1]);
        prop_assume!(distinct);
        let rtd = Rtd::from_samples(samples.clone(), Unit::Flips).unwrap();
        let DistModel::Lognormal { mu, sigma } = fit::fit_lognormal(&rtd).unwrap() else {
            unreachable!()
        };
        let logs: Vec<f64> = samples.iter().map(|x| x.ln()).collect();
        let m = logs.iter().sum::<f64>() / logs.len() as f64;
        let v = logs.iter().map(|l| (l - m) * (l - m)).sum::<f64>() / logs.len() as f64;
        prop_assert!((mu - m).abs() < 1e-12);
        prop_assert!((sigma - v.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn model_cdf_monotone_with_proper_limits(
        lambda in 1e-3..1e3f64,
        x0 in 0.0..1e3f64,
        mu in -3.0..8.0f64,
        sigma in 0.05..3.0f64,
        x in 0.0..1e5f64,
    ) {
        for m in [
            DistModel::Exponential { lambda },
            DistModel::ShiftedExponential { x0, lambda },
            DistModel::Lognormal { mu, sigma },
        ] {
            let f = m.cdf(x);
            prop_assert!((0.0..=1.0).contains(&f), "{m:?}");
            prop_assert!(m.cdf(x) <= m.cdf(x * 1.5 + 1.0), "{m:?}");
            prop_assert_eq!(m.cdf(-1.0), 0.0);
            prop_assert!(m.cdf(m.quantile(1.0 - 1e-12)) > 1.0 - 1e-9);
        }
    }

    #[test]
    fn min_cdf_stochastic_dominance(
        n in 1u64..512,
        x in 0.0..1e4f64,
        lambda in 1e-3..10.0f64,
        mu in -2.0..7.0f64,
        sigma in 0.1..2.5f64,
    ) {
        for m in [
            DistModel::Exponential { lambda },
            DistModel::Lognormal { mu, sigma },
        ] {
            let a = orderstats::min_cdf(&m, n, x);
            let b = orderstats::min_cdf(&m, n + 1, x);
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!(b >= a - 1e-15, "{m:?} n={n} x={x}: {b} < {a}");
        }
    }

    #[test]
    fn bootstrap_min_estimate_is_within_sample_range(
        samples in sorted_positive_samples(),
        n in 1u64..64,
        seed in 0u64..1000,
    ) {
        let rtd = Rtd::from_samples(samples.clone(), Unit::Flips).unwrap();
        let est = orderstats::empirical_expected_min(&rtd, n, 200, seed);
        // Slack covers the rounding of the 200-term mean.
        prop_assert!(est >= samples[0] * (1.0 - 1e-9));
        prop_assert!(est <= samples[samples.len() - 1] * (1.0 + 1e-9));
    }
}

#[test]
fn split_streams_do_not_collide() {
    // Adjacent seeds must give uncorrelated-looking streams; a quick
    // sanity check that the first draws by consecutive seeds spread out.
    let mut firsts: Vec<u64> = (0..1000).map(|s| SplitMix64::new(s).next_u64()).collect();
    firsts.sort_unstable();
    firsts.dedup();
    assert_eq!(firsts.len(), 1000);
}
