//! Acceptance gate. Each test prints one `PASS`/`FAIL` line with the measured
//! quantities and the tolerance it is held to.

use std::sync::OnceLock;

#[path = "../../core/tests/support/mod.rs"]
mod support;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use survdiff::classical::{
    build_risk_table, cvm_censored, ks_censored, weighted_logrank, WeightRule,
};
use survdiff::statistics::{compute, Family, Form, StatisticKind};
use survdiff::{
    km_survival, km_weights, order_with_censoring, Method, SemimetricSpec, SurvivalSample,
    TwoSampleData,
};
use survdiff_sim::scenario::{cure_hazard, find_builtin};
use survdiff_sim::{run_study, CensoringModel, LifetimeModel, ScenarioConfig, StudyResult};

fn report(criterion: u32, title: &str, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {criterion} [{verdict}] {title}: {detail}");
}

fn logrank() -> Method {
    "logrank".parse().unwrap()
}

fn energy1() -> Method {
    Method::energy(1.0).unwrap()
}

fn summary(result: &StudyResult, method: &Method) -> (f64, f64, f64) {
    let s = result.summary(&method.to_string()).unwrap();
    (s.rejection_rate, s.mean_p, s.sd_p)
}

fn null_exp1_n20() -> &'static StudyResult {
    static RESULT: OnceLock<StudyResult> = OnceLock::new();
    RESULT.get_or_init(|| {
        let mut config = find_builtin("null-exp1-n20-c10", None).unwrap();
        config.methods = vec![energy1(), logrank()];
        assert_eq!((config.replications, config.permutations), (500, 1000));
        run_study(&config).unwrap()
    })
}

#[test]
fn criterion_1_null_size_energy() {
    let result = null_exp1_n20();
    let (rate, mean, sd) = summary(result, &energy1());
    let pass = (0.023..=0.073).contains(&rate)
        && (mean - 0.496).abs() <= 0.04
        && (sd - 0.286).abs() <= 0.03;
    report(
        1,
        "energy alpha=1, Exp(1) 20/20, 10% censoring",
        pass,
        format!("rejection {rate:.3} in [0.023, 0.073], mean p {mean:.3} (0.496 +- 0.04), sd p {sd:.3} (0.286 +- 0.03)"),
    );
    assert!(pass);
}

#[test]
fn criterion_2_null_size_logrank() {
    let result = null_exp1_n20();
    let (rate, _, _) = summary(result, &logrank());
    let pass = (0.025..=0.075).contains(&rate);
    report(
        2,
        "log-rank, Exp(1) 20/20, 10% censoring",
        pass,
        format!("rejection {rate:.3} in [0.025, 0.075]"),
    );
    assert!(pass);
}

#[test]
fn criterion_3_null_size_all_methods() {
    let table = [
        0.064, 0.048, 0.062, 0.064, 0.074, 0.064, 0.044, 0.054, 0.056, 0.066, 0.068, 0.066, 0.068,
        0.056,
    ];
    let config = find_builtin("null-exp1.5-n50-c30", None).unwrap();
    let result = run_study(&config).unwrap();
    let mut pass = true;
    let mut cells = Vec::new();
    for (s, expected) in result.summaries.iter().zip(table) {
        let ok = (s.rejection_rate - expected).abs() <= 0.03 + 1e-12;
        pass &= ok;
        cells.push(format!(
            "{}={:.3}/{expected}{}",
            s.method,
            s.rejection_rate,
            if ok { "" } else { "!" }
        ));
    }
    report(
        3,
        "Exp(1.5) 50/50, 30% censoring, 14 methods within 0.03",
        pass,
        cells.join(" "),
    );
    assert!(pass);
}

fn power_study(name: &str) -> StudyResult {
    let mut config: ScenarioConfig = find_builtin(name, Some(100)).unwrap();
    config.replications = 200;
    run_study(&config).unwrap()
}

fn power(result: &StudyResult, method: &Method) -> f64 {
    summary(result, method).0
}

#[test]
fn criterion_4_power_orderings() {
    let roster = Method::study_roster();
    let mean_power = |result: &StudyResult, pick: fn(&Method) -> bool| {
        let v: Vec<f64> = roster
            .iter()
            .filter(|m| pick(m))
            .map(|m| power(result, m))
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };

    let ph = power_study("ph-theta2");
    let (lr, en) = (power(&ph, &logrank()), power(&ph, &energy1()));
    let ph_ok = lr >= en - 0.05;

    let cure = power_study("cure");
    let (ek, lf) = (
        mean_power(&cure, Method::is_energy_or_kernel),
        mean_power(&cure, Method::is_logrank_family),
    );
    let cure_ok = ek > lf;

    let delayed = power_study("delayed");
    let gauss: Method = "gaussian:sigma=1".parse().unwrap();
    let (g, l) = (power(&delayed, &gauss), power(&delayed, &logrank()));
    let delayed_ok = g > l + 0.10 && l < 0.25;

    let pass = ph_ok && cure_ok && delayed_ok;
    report(
        4,
        "power orderings at n=100, 200 replications",
        pass,
        format!(
            "ph theta=2: logrank {lr:.3} >= energy {en:.3} - 0.05 [{ph_ok}]; \
             cure: energy+kernel mean {ek:.3} > logrank family mean {lf:.3} [{cure_ok}]; \
             delayed: gaussian {g:.3} > logrank {l:.3} + 0.10 and logrank < 0.25 [{delayed_ok}]"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_5_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let families = support::families();
    let rules = [
        ("logrank", WeightRule::LogRank),
        ("gehan", WeightRule::Gehan),
        ("tarone-ware", WeightRule::TaroneWare),
        ("peto-peto", WeightRule::PetoPeto),
        (
            "fh11",
            WeightRule::FlemingHarrington {
                rho: 1.0,
                gamma: 1.0,
            },
        ),
    ];
    let (mut compared, mut mismatched, mut worst) = (0usize, 0usize, 0.0f64);
    let mut check = |got: Option<f64>, want: Option<f64>| match (got, want) {
        (Some(g), Some(w)) => {
            compared += 1;
            worst = worst.max((g - w).abs() / w.abs().max(1.0));
            if !support::close(g, w) {
                mismatched += 1;
            }
        }
        (None, None) => {}
        _ => mismatched += 1,
    };
    for _ in 0..500 {
        let (g0, g1) = (
            support::random_group(&mut rng),
            support::random_group(&mut rng),
        );
        let data = support::to_data(&g0, &g1);
        for family in &families {
            for form in [Form::V, Form::VNormalized, Form::UNormalized] {
                for censored in [true, false] {
                    let kind = StatisticKind {
                        family: *family,
                        form,
                        censoring_aware: censored,
                    };
                    check(
                        compute(kind, &data).ok().map(|v| v.raw),
                        support::oracle_statistic(family, form, censored, &g0, &g1),
                    );
                }
            }
        }
        for (name, rule) in rules {
            check(
                build_risk_table(&data)
                    .and_then(|t| weighted_logrank(&t, rule))
                    .ok(),
                support::oracle_logrank(name, &g0, &g1),
            );
        }
        let want = support::oracle_schumacher(&g0, &g1);
        let ks = ks_censored(&data).ok();
        let cvm = cvm_censored(&data).ok();
        check(ks.map(|q| q.0), want.map(|q| q.0));
        check(ks.map(|q| q.1), want.map(|q| q.1));
        check(cvm.map(|q| q.0), want.map(|q| q.2));
        check(cvm.map(|q| q.1), want.map(|q| q.3));
    }
    let pass = mismatched == 0;
    report(
        5,
        "500 random data sets, n0, n1 <= 6, double-loop oracle",
        pass,
        format!("{compared} values compared, {mismatched} mismatches, worst relative error {worst:.2e} (tolerance 1e-10)"),
    );
    assert!(pass);
}

fn random_sample(rng: &mut ChaCha8Rng, censored: bool) -> SurvivalSample {
    let n = rng.random_range(2..25);
    let grid = rng.random_bool(0.3);
    let (times, events) = (0..n)
        .map(|_| {
            let t = if grid {
                rng.random_range(0..8) as f64 * 0.5
            } else {
                rng.random_range(0.0..5.0)
            };
            (t, !censored || rng.random_bool(0.7))
        })
        .unzip();
    SurvivalSample::new(times, events).unwrap()
}

#[test]
fn criterion_6_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let families = support::families();
    let mut failures = Vec::new();
    for _ in 0..300 {
        let s = random_sample(&mut rng, true);
        let ordered = order_with_censoring(&s);
        let mass = km_weights(&ordered).total_mass;
        if (mass - (1.0 - km_survival(&ordered).last_value())).abs() > 1e-12 {
            failures.push("km mass");
        }
        let u = random_sample(&mut rng, false);
        let w = km_weights(&order_with_censoring(&u)).weights;
        if w.iter().any(|&x| (x - 1.0 / u.len() as f64).abs() > 1e-15) {
            failures.push("uniform weights");
        }

        let data = TwoSampleData::new(random_sample(&mut rng, true), random_sample(&mut rng, true))
            .unwrap();
        let alpha = rng.random_range(0.2..2.0);
        let semimetric = SemimetricSpec::new(alpha).unwrap();
        let energy = compute(
            StatisticKind::censored(Family::Energy(semimetric), Form::VNormalized),
            &data,
        );
        let induced = Family::InducedKernel {
            semimetric,
            anchor: rng.random_range(-2.0..2.0),
        };
        let mmd = compute(StatisticKind::censored(induced, Form::VNormalized), &data);
        if let (Ok(e), Ok(m)) = (energy, mmd) {
            if (e.raw - 2.0 * m.raw).abs() > 1e-10 * e.raw.abs().max(1.0) {
                failures.push("energy = 2 mmd");
            }
        }

        let uncensored = TwoSampleData::new(
            random_sample(&mut rng, false),
            random_sample(&mut rng, false),
        )
        .unwrap();
        for family in &families {
            for form in [Form::V, Form::VNormalized, Form::UNormalized] {
                let c = compute(StatisticKind::censored(*family, form), &uncensored);
                let plain = compute(StatisticKind::uncensored(*family, form), &uncensored);
                if let (Ok(c), Ok(p)) = (c, plain) {
                    if (c.raw - p.raw).abs() > 1e-10 * p.raw.abs().max(1.0) {
                        failures.push("censored reduces to uncensored");
                    }
                }
            }
        }

        let swapped = data.swapped();
        let pooled = data.pooled();
        let pooled_swapped = swapped.pooled();
        for method in Method::registry() {
            let kind = method.statistic_kind();
            let a = method.prepare(&pooled).evaluate(pooled.labels());
            let b = method
                .prepare(&pooled_swapped)
                .evaluate(pooled_swapped.labels());
            match (a, b) {
                (Ok(a), Ok(b)) if (a - b).abs() <= 1e-12 * a.abs().max(1.0) => {}
                (Err(_), Err(_)) => {}
                _ => failures.push(if kind.is_some() {
                    "symmetry (energy/kernel)"
                } else {
                    "symmetry (classical)"
                }),
            }
        }
    }
    failures.dedup();
    let pass = failures.is_empty();
    report(
        6,
        "KM mass, uniform weights, energy = 2 MMD^2, censored reduction, group symmetry",
        pass,
        if pass {
            "300 random cases, all identities hold".into()
        } else {
            format!("violated: {failures:?}")
        },
    );
    assert!(pass);
}

fn ks_distance_to(mut draws: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = draws.len() as f64;
    draws
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn criterion_7_simulator_fidelity() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cure = cure_hazard();
    let cured = (0..100_000)
        .filter(|_| cure.sample(&mut rng).is_infinite())
        .count() as f64
        / 1e5;
    let cure_ok = (cured - (-1.25f64).exp()).abs() <= 0.01;

    let constant = LifetimeModel::constant_hazard(0.5, 100.0);
    let draws: Vec<f64> = (0..100_000).map(|_| constant.sample(&mut rng)).collect();
    let ks = ks_distance_to(draws, |t| 1.0 - (-0.5 * t).exp());
    let ks_ok = ks < 0.01;

    let mut worst = 0.0f64;
    let mut calib = Vec::new();
    for config in survdiff_sim::builtin_scenarios()
        .iter()
        .filter(|s| s.name.starts_with("null-"))
    {
        if !config.name.contains("-n20-") {
            continue;
        }
        let CensoringModel::TargetRate { rate: target } = config.censoring0 else {
            unreachable!()
        };
        let resolved = config.censoring0.resolve(&config.lifetime0).unwrap();
        let censored = (0..1_000_000)
            .filter(|_| {
                let t = config.lifetime0.sample(&mut rng);
                let c = resolved.sample(&mut rng);
                c < t
            })
            .count() as f64
            / 1e6;
        worst = worst.max((censored - target).abs());
        calib.push(format!("{}={censored:.4}", config.name));
    }
    let calib_ok = worst <= 0.01;
    let pass = cure_ok && ks_ok && calib_ok;
    report(
        7,
        "cure fraction, constant hazard vs exponential, censoring calibration",
        pass,
        format!(
            "cure fraction {cured:.4} vs {:.4} (+-0.01); KS distance {ks:.4} (< 0.01); \
             worst calibration error {worst:.4} (<= 0.01) [{}]",
            (-1.25f64).exp(),
            calib.join(" ")
        ),
    );
    assert!(pass);
}

fn study_csv(config: &ScenarioConfig, threads: usize) -> (Vec<u8>, Vec<u8>) {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap();
    let result = pool.install(|| run_study(config)).unwrap();
    let (mut summary, mut long) = (Vec::new(), Vec::new());
    result.write_summary_csv(&mut summary).unwrap();
    result.write_pvalues_csv(&mut long).unwrap();
    (summary, long)
}

#[test]
fn criterion_8_determinism() {
    let mut config = find_builtin("cure", Some(20)).unwrap();
    config.replications = 12;
    config.permutations = 199;
    config.methods = Method::registry();
    let one = study_csv(&config, 1);
    let four = study_csv(&config, 4);
    let again = study_csv(&config, 2);
    let pass = one == four && one == again;
    report(
        8,
        "byte-identical CSV across re-runs and thread counts",
        pass,
        format!(
            "1, 4 and 2 worker threads; summary {} bytes, p-values {} bytes",
            one.0.len(),
            one.1.len()
        ),
    );
    assert!(pass);
}
