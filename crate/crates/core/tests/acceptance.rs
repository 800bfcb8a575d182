//! Acceptance criteria. Each test prints one `[PASS]`/`[FAIL]` line; run with
//! `cargo test -p cssm --test acceptance -- --nocapture` to see them.

use std::time::{Duration, Instant};

use cssm::autocov::TimeSeries;
use cssm::critval::{self, BridgeConfig};
use cssm::cusum::{cssm_test, cusum_path};
use cssm::longrun::{bartlett_linear, estimate_longrun_cov, sigma_bar, EstimatorConfig};
use cssm::mc::{self, run_scenario, Scenario};
use cssm::models::{self, ChangeSpec, ModelSpec};
use cssm::rng;
use rand::Rng;
use rand_distr::StandardNormal;

fn report(id: u32, name: &str, pass: bool, detail: String) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {id}: {name}: {detail}");
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

const REPS: usize = 1000;
const SEED: u64 = 20_100_101;

#[test]
fn c1_critical_value_l1_alpha05() {
    let cfg = BridgeConfig {
        grid_points: 2000,
        replications: 100_000,
        seed: SEED,
    };
    let start = Instant::now();
    let c = critval::simulated_critical_value(1, 0.05, &cfg).unwrap();
    let elapsed = start.elapsed();
    let pass = (c - 2.408).abs() <= 0.06 && elapsed <= Duration::from_secs(120);
    report(
        1,
        "simulated c_0.05(L=1) = 2.408 ± 0.06 within 2 min",
        pass,
        format!("c = {c:.4}, {:.1} s", elapsed.as_secs_f64()),
    );
}

#[test]
fn c2_type_one_error_arma() {
    let s = Scenario::new("T1 no change", mc::t1_change(0.1, 0.2), 500, REPS, SEED);
    let start = Instant::now();
    let r = run_scenario(&s).unwrap();
    let elapsed = start.elapsed();
    let pass = r.failed == 0
        && (0.02..=0.08).contains(&r.power)
        && elapsed <= Duration::from_secs(300);
    report(
        2,
        "ARMA(1,1) no-change rejection rate in [0.02, 0.08]",
        pass,
        format!("rate = {:.3} (paper 0.047), {:.1} s", r.power, elapsed.as_secs_f64()),
    );
}

#[test]
fn c3_power_strong_alternative() {
    let s = Scenario::new("T1 (0.7, 0.6)", mc::t1_change(0.7, 0.6), 500, REPS, SEED + 1);
    let r = run_scenario(&s).unwrap();
    report(
        3,
        "power at (theta1, phi1) = (0.7, 0.6) ≥ 0.98",
        r.failed == 0 && r.power >= 0.98,
        format!("power = {:.3} (paper 1.000)", r.power),
    );
}

#[test]
fn c4_power_moderate_alternative() {
    let s = Scenario::new("T1 (0.3, 0.4)", mc::t1_change(0.3, 0.4), 500, REPS, SEED + 2);
    let r = run_scenario(&s).unwrap();
    report(
        4,
        "power at (theta1, phi1) = (0.3, 0.4) within ±0.05 of 0.874",
        r.failed == 0 && (r.power - 0.874).abs() <= 0.05,
        format!("power = {:.3}", r.power),
    );
}

#[test]
fn c5_garch_size() {
    let mut details = Vec::new();
    let mut pass = true;
    for (n, paper) in [(500, 0.034), (1000, 0.032)] {
        let s = Scenario::new(format!("T3 no change n={n}"), mc::t3_change(None, n), n, REPS, SEED + n as u64);
        let r = run_scenario(&s).unwrap();
        pass &= r.failed == 0 && (r.power - paper).abs() <= 0.03;
        details.push(format!("n={n}: {:.3} (paper {paper})", r.power));
    }
    report(5, "GARCH(1,1) no-change rates within ±0.03 of paper", pass, details.join(", "));
}

fn figure4_change() -> ChangeSpec {
    ChangeSpec::new(500, ModelSpec::product2dep(0.0, 1.0), ModelSpec::product2dep(0.0, 1.26))
}

#[test]
fn c6_change_localization() {
    let s = Scenario::new("figure 4", figure4_change(), 1000, 200, SEED + 3);
    let r = run_scenario(&s).unwrap();
    let median = r.median_location_error().unwrap();

    let x = models::simulate_with_change(&figure4_change(), 1000, SEED).unwrap();
    let single = cssm_test(&x, 1, &EstimatorConfig::default(), 2.408).unwrap();
    let pass = r.failed == 0 && median <= 50.0 && single.reject && single.change_index.abs_diff(512) <= 50;
    report(
        6,
        "median |k̂ − 500| ≤ 50 over 200 reps; single run detects near t = 512",
        pass,
        format!(
            "median = {median}, power = {:.3}; single run T = {:.3}, k̂ = {}",
            r.power, single.statistic, single.change_index
        ),
    );
}

#[test]
fn c7_estimator_matches_bartlett_ma1() {
    let theta = 0.5;
    let n = 20_000;
    let reps = 50;
    let cfg = EstimatorConfig::default();
    let exact = bartlett_linear(&[1.0 + theta * theta, theta], 3.0, 1).unwrap();
    let mut mean = [[0.0; 2]; 2];
    for r in 0..reps {
        let x = models::simulate(&ModelSpec::Ma2 { theta1: theta, theta2: 0.0, sigma: 1.0 }, n, rng::stream_seed(SEED, r), 500).unwrap();
        let c = estimate_longrun_cov(&x, 1, &cfg).unwrap();
        for (h, row) in mean.iter_mut().enumerate() {
            for (k, m) in row.iter_mut().enumerate() {
                *m += c.get(h, k) / reps as f64;
            }
        }
    }
    let mut worst: f64 = 0.0;
    for (h, row) in mean.iter().enumerate() {
        for (k, m) in row.iter().enumerate() {
            worst = worst.max((m - exact.get(h, k)).abs() / exact.get(h, k).abs());
        }
    }
    report(
        7,
        "mean Ĉ for MA(1), θ = 0.5, n = 20000 within 10% of Bartlett C",
        worst <= 0.10,
        format!("Ĉ = {mean:.3?} vs C = {:?}, max rel err {worst:.4}", exact.to_rows()),
    );
}

/// Literal nested-loop evaluation, 1-based indices, dropping products that
/// run past `x_n` and averaging over the retained ones.
fn sigma_bar_literal(x: &[f64], h: usize, k: usize, l: usize) -> f64 {
    let n = x.len();
    let at = |i: usize| x[i - 1];
    let gamma = |lag: usize| (1..=n - lag).map(|i| at(i) * at(i + lag)).sum::<f64>() / n as f64;
    let (mut sum, mut count) = (0.0, 0usize);
    for i in 1..=n {
        if i + l + h.max(k) > n {
            continue;
        }
        let y1 = at(i) * at(i + h) * at(i + l) * at(i + l + k);
        let y2 = at(i + l) * at(i + l + h) * at(i) * at(i + k);
        sum += if l == 0 { y1 } else { y1 + y2 };
        count += 1;
    }
    let mean = sum / count as f64;
    if l == 0 {
        n as f64 * (mean - gamma(h) * gamma(k))
    } else {
        (n - l) as f64 * (mean - 2.0 * gamma(h) * gamma(k))
    }
}

#[test]
fn c8_sigma_bar_brute_force() {
    let mut rng = rng::seeded(SEED);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for _ in 0..100 {
        let n = rng.random_range(5..=50);
        let v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal) * 2.0).collect();
        let x = TimeSeries::new(v.clone()).unwrap();
        for h in 0..=2 {
            for k in h..=2 {
                for l in 0..n - k {
                    let fast = sigma_bar(&x, h, k, l).unwrap();
                    worst = worst.max((fast - sigma_bar_literal(&v, h, k, l)).abs());
                    checked += 1;
                }
            }
        }
    }
    report(
        8,
        "σ̄ matches literal reference on 100 series (n ≤ 50) within 1e-10",
        worst <= 1e-10,
        format!("{checked} evaluations, max |Δ| = {worst:.3e}"),
    );
}

#[test]
fn c9_invariant_suite() {
    let cfg = EstimatorConfig::default();
    let mut failures = Vec::new();

    // path nonnegativity and scale invariance across models
    let specs = [
        ModelSpec::arma11(0.2, 0.1),
        ModelSpec::ma2(0.3, 0.3),
        ModelSpec::product2dep(0.0, 1.0),
        ModelSpec::garch11(0.5, 0.1, 0.2),
    ];
    let mut worst_scale: f64 = 0.0;
    for (i, spec) in specs.iter().enumerate() {
        for r in 0..5u64 {
            let x = models::simulate(spec, 600, 100 * i as u64 + r, 500).unwrap();
            for lag in 0..=2 {
                let c = estimate_longrun_cov(&x, lag, &cfg).unwrap();
                let p = cusum_path(&x, &c, lag).unwrap();
                if p.values().iter().any(|&v| v < 0.0) {
                    failures.push(format!("negative path value ({spec}, L={lag})"));
                }
                let base = cssm_test(&x, lag, &cfg, 2.408).unwrap();
                for scale in [0.01, 0.5, 3.0, 250.0] {
                    let t = cssm_test(&x.scaled(scale).unwrap(), lag, &cfg, 2.408).unwrap();
                    worst_scale = worst_scale.max((t.statistic - base.statistic).abs() / base.statistic);
                    if t.change_index != base.change_index {
                        failures.push(format!("change index moved under scaling ({spec}, c={scale})"));
                    }
                }
            }
        }
    }
    if worst_scale > 1e-6 {
        failures.push(format!("scale invariance: max rel diff {worst_scale:.3e}"));
    }

    // bridge endpoint and pointwise variance at t = 0.5
    let m = 200;
    let reps = 100_000;
    let mut rng = rng::seeded(SEED);
    let mut b = Vec::new();
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..reps {
        critval::simulate_bridge(&mut rng, m, &mut b);
        if b[m] != 0.0 {
            failures.push("bridge endpoint not zero".into());
            break;
        }
        s1 += b[m / 2];
        s2 += b[m / 2] * b[m / 2];
    }
    let mean = s1 / reps as f64;
    let var = s2 / reps as f64 - mean * mean;
    let se = 0.25 * (2.0 / reps as f64).sqrt();
    if (var - 0.25).abs() > 3.0 * se {
        failures.push(format!("Var W⁰(0.5) = {var:.5}, expected 0.25 ± {:.5}", 3.0 * se));
    }

    // seed determinism under different thread counts
    let bcfg = BridgeConfig { grid_points: 300, replications: 4000, seed: 77 };
    let scenario = Scenario::new("det", mc::t1_change(0.3, 0.4), 500, 200, 77);
    let mut runs = Vec::new();
    for threads in [1, 2, 5] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        runs.push(pool.install(|| {
            let sups = critval::simulate_bridge_sup(1, &bcfg).unwrap();
            let rep = run_scenario(&scenario).unwrap();
            (sups, rep.rejections, rep.outcomes)
        }));
    }
    if runs.windows(2).any(|w| w[0] != w[1]) {
        failures.push("results depend on thread count".into());
    }

    report(
        9,
        "invariants (path ≥ 0, scale invariance, bridge checks, thread-count determinism)",
        failures.is_empty(),
        if failures.is_empty() {
            format!("scale rel diff {worst_scale:.2e}, Var W⁰(0.5) = {var:.5}")
        } else {
            failures.join("; ")
        },
    );
}
