//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its runtime (visible with `--nocapture`) and enforcing the stated
//! tolerance and time budget.
//!
//! Run with: `cargo test -p mulwalk-cli --test acceptance -- --nocapture`

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::rand_core::RngCore;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use mulwalk::certificates::{certification_profile, certify_thm1, decay_condition_holds};
use mulwalk::rng::stream_rng;
use mulwalk::{
    certificates, exact_l1, find_k, lemma_suite, mc_l1, minimize_ratio, rademacher_exact, ratio,
    riesz_l1, riesz_ratio_sweep, CoefficientVector, Distribution, LacunarySequence, Method, Norm,
    Oracle, SearchConfig,
};

fn finish(number: u32, label: &str, budget: Duration, started: Instant) {
    let elapsed = started.elapsed();
    println!("criterion {number}: PASS - {label} ({elapsed:.2?} < {budget:.0?})");
    assert!(
        elapsed <= budget,
        "criterion {number} exceeded its {budget:.0?} budget: {elapsed:?}"
    );
}

fn two_point() -> Distribution {
    Distribution::finite(&[(0.0, 0.5), (2.0, 0.5)]).unwrap()
}

fn random_mean_one_dist(rng: &mut ChaCha8Rng) -> Distribution {
    loop {
        let s = rng.random_range(2..=4);
        let mut values: Vec<f64> = (0..s).map(|_| rng.random_range(0.0..3.0)).collect();
        if rng.random::<f64>() < 0.4 {
            values[0] = 0.0;
        }
        let weights: Vec<f64> = (0..s).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = weights.iter().sum();
        let mean: f64 = values
            .iter()
            .zip(&weights)
            .map(|(v, w)| v * w / total)
            .sum();
        if mean < 1e-3 {
            continue;
        }
        let atoms: Vec<(f64, f64)> = values
            .iter()
            .zip(&weights)
            .map(|(&v, &w)| (v / mean, w / total))
            .collect();
        match Distribution::finite(&atoms) {
            Ok(d) if !d.is_degenerate() => return d,
            _ => continue,
        }
    }
}

#[test]
fn criterion_01_cosine_moments_analytic_and_monte_carlo() {
    let started = Instant::now();
    let lambda_ref = 2.0 * 2f64.sqrt() / PI;
    let mu_ref = 2.0 / PI;

    let analytic = Distribution::one_plus_cosine()
        .moment_profile(0.01, 2.0)
        .unwrap();
    assert!((analytic.lambda - lambda_ref).abs() <= 1e-9);
    assert!((analytic.mu - mu_ref).abs() <= 1e-9);

    // the same law forced through the 10⁶-sample Monte Carlo route
    let sampled = Distribution::sampler(
        2024,
        |rng: &mut dyn RngCore| {
            let mut buf = [0u8; 8];
            rng.fill_bytes(&mut buf);
            let u = (u64::from_le_bytes(buf) >> 11) as f64 / (1u64 << 53) as f64;
            1.0 + (std::f64::consts::TAU * u).cos()
        },
        Default::default(),
    );
    let profile = sampled.moment_profile(0.01, 2.0).unwrap();
    assert!(
        (profile.lambda - lambda_ref).abs() <= 1e-3,
        "lambda off by {}",
        (profile.lambda - lambda_ref).abs()
    );
    assert!(
        (profile.mu - mu_ref).abs() <= 1e-3,
        "mu off by {}",
        (profile.mu - mu_ref).abs()
    );
    finish(
        1,
        "cosine moments analytic to 1e-9, Monte Carlo to 1e-3",
        Duration::from_secs(5),
        started,
    );
}

#[test]
fn criterion_02_cosine_certificate_reproduces_the_reference_constant() {
    let started = Instant::now();
    let dist = Distribution::one_plus_cosine();
    let profile = certification_profile(&dist).unwrap();
    let lambda = 2.0 * 2f64.sqrt() / PI;
    let mu = 2.0 / PI;
    let eps_ref = (1.0 - lambda) * (1.0 - lambda) * mu.min(1.0) / 256.0;
    assert!((profile.eps - eps_ref).abs() <= 1e-9);
    let p_ref = (1.0 - eps_ref).acos() / PI;
    assert!((profile.p_eps - p_ref).abs() <= 1e-9);
    let cert = certify_thm1(&profile).unwrap();
    assert!(cert.applicable);
    assert!(cert.c >= 2e-5, "c = {} below the reference bound", cert.c);
    finish(
        2,
        "near-zero-mass certificate c ≥ 2e-5 with closed-form ε, p(ε)",
        Duration::from_secs(1),
        started,
    );
}

#[test]
fn criterion_03_certificate_soundness_and_search_floor_at_desk_scale() {
    let started = Instant::now();
    let dist = two_point();
    let cert = certify_thm1(&certification_profile(&dist).unwrap()).unwrap();
    assert_eq!(cert.c, 1.0 / 128.0);

    let mut rng = stream_rng(0xACCE01, 0);
    let mut violations = 0u32;
    for _ in 0..500 {
        let n = rng.random_range(0..=8);
        let coeffs: Vec<f64> = (0..=n).map(|_| rng.random_range(-1.0..1.0)).collect();
        if coeffs.iter().map(|a| a.abs()).sum::<f64>() < 1e-9 {
            continue;
        }
        let cv = CoefficientVector::scalars(&coeffs);
        let r = ratio(&dist, &cv, Method::Exact).unwrap();
        if r < cert.c {
            violations += 1;
        }
    }
    assert_eq!(
        violations, 0,
        "{violations} of 500 random vectors beat c = 1/128"
    );

    let config = SearchConfig {
        n: 6,
        d: 1,
        norm: Norm::L1,
        budget: 20_000,
        restarts: 10,
        seed: 0,
        oracle: Oracle::Exact,
    };
    let search = minimize_ratio(&dist, &config).unwrap();
    assert!(
        search.best_ratio >= cert.c - 1e-9,
        "search found {} below the certificate {}",
        search.best_ratio,
        cert.c
    );
    finish(
        3,
        "exact ratios and adversarial search never beat c = 1/128",
        Duration::from_secs(60),
        started,
    );
}

#[test]
fn criterion_04_k_solver_reference_values_and_minimality() {
    let started = Instant::now();
    let sqrt_half = std::f64::consts::FRAC_1_SQRT_2;
    let cosine_lambda = 2.0 * 2f64.sqrt() / PI;
    let cosine_mu = 2.0 / PI;

    let k1 = find_k(sqrt_half, 1.0, 2.0).unwrap();
    assert_eq!(k1, 28);
    assert!(decay_condition_holds(sqrt_half, 1.0, 2.0, 28).unwrap());
    assert!(!decay_condition_holds(sqrt_half, 1.0, 2.0, 27).unwrap());

    let k2 = find_k(cosine_lambda, cosine_mu, 2.0).unwrap();
    assert_eq!(k2, 112);
    assert!(decay_condition_holds(cosine_lambda, cosine_mu, 2.0, 112).unwrap());
    assert!(!decay_condition_holds(cosine_lambda, cosine_mu, 2.0, 111).unwrap());
    finish(
        4,
        "k-solver returns 28 and 112, both minimal",
        Duration::from_secs(1),
        started,
    );
}

#[test]
fn criterion_05_ledger_guarantees_on_random_parameter_triples() {
    let started = Instant::now();
    let mut rng = stream_rng(0xACCE05, 0);
    for _ in 0..100 {
        let lambda: f64 = rng.random_range(0.05..0.95);
        let mu: f64 = rng.random_range(0.05..2.0);
        let a: f64 = rng.random_range(0.5..50.0);
        let p: f64 = rng.random_range(0.01..1.0);

        // damage stays at most half the gain with the default threshold
        let eps = certificates::epsilon_default(lambda, mu).unwrap();
        let (_, beta, c) = certificates::ledger_thm1(p, mu, lambda, eps, 10_000).unwrap();
        for ck in c {
            assert!(beta - ck >= beta / 2.0 * (1.0 - 1e-9));
        }

        // and with the minimal k on the truncated route
        let k = find_k(lambda, mu, a).unwrap();
        let (_, beta3, c3) = certificates::ledger_thm3(mu, lambda, a, k, 10_000).unwrap();
        let sup = c3.iter().cloned().fold(0.0f64, f64::max);
        assert!(
            sup <= beta3 / 2.0 * (1.0 + 1e-9),
            "sup damage {sup} above beta/2 = {} at ({lambda}, {mu}, {a})",
            beta3 / 2.0
        );
    }
    finish(
        5,
        "both ledgers keep β − c_i ≥ β/2 on 100 random triples",
        Duration::from_secs(5),
        started,
    );
}

#[test]
fn criterion_06_universal_upper_bound_with_equality_cases() {
    let started = Instant::now();
    let mut rng = stream_rng(0xACCE06, 0);
    for t in 0..1000u32 {
        let dist = random_mean_one_dist(&mut rng);
        let n = rng.random_range(0..=6);
        let cv = if t % 4 == 0 {
            // nonnegative scalars: the bound is attained exactly
            let coeffs: Vec<f64> = (0..=n).map(|_| rng.random_range(0.0..1.0)).collect();
            CoefficientVector::scalars(&coeffs)
        } else {
            let d = rng.random_range(1..=3);
            let norm = [Norm::L1, Norm::L2, Norm::Linf][rng.random_range(0..3)];
            let coeffs: Vec<Vec<f64>> = (0..=n)
                .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            CoefficientVector::new(coeffs, norm).unwrap()
        };
        let mass = cv.l1_mass();
        let est = exact_l1(&dist, &cv).unwrap();
        assert!(
            est.mean <= mass + 1e-12,
            "mean {} above mass {mass}",
            est.mean
        );
        if t % 4 == 0 {
            assert!(
                (est.mean - mass).abs() <= 1e-12 * (1.0 + mass),
                "nonnegative case not tight: {} vs {mass}",
                est.mean
            );
        }
    }
    finish(
        6,
        "exact value ≤ Σ‖vᵢ‖ + 1e-12 on 1000 instances, tight for nonnegative scalars",
        Duration::from_secs(60),
        started,
    );
}

#[test]
fn criterion_07_monte_carlo_agrees_with_the_exact_oracle() {
    let started = Instant::now();
    let mut rng = stream_rng(0xACCE07, 0);
    let mut hits = 0u32;
    for trial in 0..100u64 {
        let dist = random_mean_one_dist(&mut rng);
        let n = rng.random_range(0..=5);
        let d = rng.random_range(1..=2);
        let norm = [Norm::L1, Norm::L2, Norm::Linf][rng.random_range(0..3)];
        let coeffs: Vec<Vec<f64>> = (0..=n)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let cv = CoefficientVector::new(coeffs, norm).unwrap();
        let exact = exact_l1(&dist, &cv).unwrap().mean;
        let est = mc_l1(&dist, &cv, 100_000, trial).unwrap();
        if (est.mean - exact).abs() <= 4.0 * est.std_error + 1e-12 {
            hits += 1;
        }
    }
    assert!(hits >= 99, "only {hits} of 100 within four standard errors");
    finish(
        7,
        "≥ 99 of 100 Monte Carlo runs within 4 standard errors",
        Duration::from_secs(60),
        started,
    );
}

#[test]
fn criterion_08_sign_walk_identity_up_to_sixteen() {
    let started = Instant::now();
    for n in 1..=16u32 {
        let (products, plain) = rademacher_exact(n).unwrap();
        assert_eq!(products, plain, "identity broke at n = {n}");
        assert!(products <= (n as f64).sqrt());
    }
    finish(
        8,
        "sign-product walk equals the plain sign sum and stays below √n",
        Duration::from_secs(10),
        started,
    );
}

#[test]
fn criterion_09_quadrature_hits_the_closed_forms() {
    let started = Instant::now();
    let seq = LacunarySequence::validate(&[1, 4, 16, 64]).unwrap();
    for i in 0..4usize {
        let mut unit = vec![0.0; 4];
        unit[i] = 1.0;
        let q = riesz_l1(&unit, &seq, 1e-8).unwrap();
        assert!(
            (q.value - 1.0).abs() <= 1e-6,
            "unit vector {i}: {}",
            q.value
        );
    }
    let q = riesz_l1(&[1.0, -1.0], &seq, 1e-8).unwrap();
    assert!(
        (q.value - 2.0 / PI).abs() <= 1e-6,
        "difference case: {}",
        q.value
    );

    let sweep = riesz_ratio_sweep(&seq, 3, 40, 0, 1e-6).unwrap();
    for row in &sweep.rows {
        assert!(
            row.ratio <= 1.0 + 1e-6,
            "trial {} ratio {}",
            row.trial,
            row.ratio
        );
    }
    finish(
        9,
        "unit means exact to 1e-6, |cos| mean to 1e-6, sweep ratios ≤ 1 + 1e-6",
        Duration::from_secs(30),
        started,
    );
}

#[test]
fn criterion_10_inequality_suite_is_violation_free() {
    let started = Instant::now();
    let mut rng = stream_rng(0xACCE10, 0);
    let mut total_checked = 0u64;
    for round in 0..50u64 {
        let dist = random_mean_one_dist(&mut rng);
        let report = lemma_suite(&dist, 20, round).unwrap();
        assert_eq!(
            report.total_violations, 0,
            "violations on round {round}: {:?}",
            report.lemmas
        );
        total_checked += report.trials;
    }
    assert_eq!(total_checked, 1000);
    finish(
        10,
        "zero violations across 1000 exact inequality instances",
        Duration::from_secs(120),
        started,
    );
}

// ---------------------------------------------------------------------------
// Criterion 11: byte-identical result subtrees for reruns of every seeded
// command, including under different worker counts.
// ---------------------------------------------------------------------------

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_mulwalk")
}

fn run_with_threads(args: &[String], threads: &str) -> Value {
    let output = Command::new(bin())
        .args(args)
        .env("RAYON_NUM_THREADS", threads)
        .output()
        .expect("binary runs");
    assert!(output.status.success(), "{args:?} failed: {output:?}");
    serde_json::from_slice(&output.stdout).expect("report parses")
}

fn result_bytes(report: &Value) -> String {
    serde_json::to_string(&report["result"]).unwrap()
}

fn manifest_modulo_timestamp(report: &Value) -> Value {
    let mut manifest = report["manifest"].clone();
    manifest["timestamp_unix_ms"] = Value::Null;
    manifest
}

#[test]
fn criterion_11_reruns_reproduce_byte_identical_results() {
    let started = Instant::now();
    let dir = std::env::temp_dir().join(format!("mulwalk-acceptance-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let dist_cos: PathBuf = dir.join("cos.json");
    fs::write(&dist_cos, r#"{"kind":"one_plus_cosine"}"#).unwrap();
    let dist_two: PathBuf = dir.join("two.json");
    fs::write(&dist_two, r#"{"kind":"finite","atoms":[[0,0.5],[2,0.5]]}"#).unwrap();
    let coeffs: PathBuf = dir.join("a.json");
    fs::write(&coeffs, r#"{"norm":"l1","coeffs":[0.5,-0.3,0.2]}"#).unwrap();
    let seq: PathBuf = dir.join("seq.json");
    fs::write(&seq, "[1,4,16,64]").unwrap();

    let path = |p: &Path| p.to_str().unwrap().to_string();
    let commands: Vec<Vec<String>> = vec![
        vec![
            "estimate",
            "--dist",
            &path(&dist_cos),
            "--coeffs",
            &path(&coeffs),
            "--samples",
            "20000",
            "--seed",
            "5",
        ],
        vec![
            "sweep",
            "--seq",
            &path(&seq),
            "--n",
            "2",
            "--samples",
            "6",
            "--seed",
            "3",
            "--tol",
            "1e-4",
        ],
        vec![
            "suite",
            "--dist",
            &path(&dist_two),
            "--samples",
            "20",
            "--seed",
            "7",
        ],
        vec![
            "adversary",
            "--dist",
            &path(&dist_cos),
            "--n",
            "3",
            "--budget",
            "600",
            "--restarts",
            "3",
            "--samples",
            "2000",
            "--seed",
            "9",
        ],
        vec![
            "adversary",
            "--dist",
            &path(&dist_two),
            "--n",
            "4",
            "--budget",
            "500",
            "--C",
            "2",
            "--seed",
            "11",
        ],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();

    for args in &commands {
        let first = run_with_threads(args, "4");
        let rerun = run_with_threads(args, "4");
        let single = run_with_threads(args, "1");
        assert_eq!(
            result_bytes(&first),
            result_bytes(&rerun),
            "rerun of {args:?} changed the result subtree"
        );
        assert_eq!(
            result_bytes(&first),
            result_bytes(&single),
            "worker count changed the result subtree of {args:?}"
        );
        assert_eq!(
            manifest_modulo_timestamp(&first),
            manifest_modulo_timestamp(&rerun),
            "manifest of {args:?} changed beyond the timestamp"
        );
    }
    finish(
        11,
        "seeded commands reproduce bit-for-bit across reruns and worker counts",
        Duration::from_secs(120),
        started,
    );
}
