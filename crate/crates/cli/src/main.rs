//! `mulwalk`: batch front end for the walk-combination toolkit.
//!
//! Each invocation runs exactly one subcommand, composes library calls, and
//! writes one JSON report `{"manifest": …, "result": …}` (plus a CSV
//! companion for sweep and search traces). Exit codes: 0 on success, 1 on
//! domain errors (embedded in the report), 2 on usage errors. Seeds default
//! to 0 and are always recorded; the worker count is controlled only by the
//! `RAYON_NUM_THREADS` environment variable.

mod report;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use mulwalk::certificates::{certification_profile, certify_thm1, certify_thm3};
use mulwalk::{
    bounded_sum_probe, exact_l1, lemma_suite, mc_l1, minimize_ratio, rademacher_exact, ratio,
    riesz_l1, riesz_ratio_sweep, CoefficientVector, Distribution, LacunarySequence, Method, Norm,
    Oracle, SearchConfig, SearchResult,
};

use report::{csv_companion_path, write_report, RunManifest};

#[derive(Parser)]
#[command(name = "mulwalk", version, about, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    L1,
    L2,
    Linf,
}

impl From<NormArg> for Norm {
    fn from(n: NormArg) -> Norm {
        match n {
            NormArg::L1 => Norm::L1,
            NormArg::L2 => Norm::L2,
            NormArg::Linf => Norm::Linf,
        }
    }
}

#[derive(Args)]
struct OutArg {
    /// Report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the nonnegative mean-one nondegenerate contract of a distribution.
    Validate {
        #[arg(long)]
        dist: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Compute both certified lower-bound constants with their ledgers.
    Certify {
        #[arg(long)]
        dist: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Exact expectation of the coefficient combination (finite support).
    Exact {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long)]
        coeffs: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Monte Carlo estimate of the coefficient combination.
    Estimate {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long)]
        coeffs: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// L1-to-ℓ1 ratio; exact unless --samples switches to Monte Carlo.
    Ratio {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long)]
        coeffs: PathBuf,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Quadrature of a trigonometric-product combination on the circle.
    Riesz {
        #[arg(long)]
        seq: PathBuf,
        #[arg(long)]
        coeffs: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Random unit-mass coefficient sweep of the quadrature ratio.
    Sweep {
        #[arg(long)]
        seq: PathBuf,
        #[arg(long)]
        n: usize,
        /// Number of random coefficient vectors to try.
        #[arg(long, default_value_t = 100)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Coefficient search: ratio minimization, or the bounded-sum probe with --C.
    Adversary {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = NormArg::L1)]
        norm: NormArg,
        #[arg(long, default_value_t = 20_000)]
        budget: u64,
        #[arg(long, default_value_t = 10)]
        restarts: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Monte Carlo oracle sample count; exact enumeration when omitted.
        #[arg(long)]
        samples: Option<u64>,
        /// Partial-sum bound: switches to the bounded-coefficient probe.
        #[arg(long = "C")]
        c_bound: Option<f64>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Exact inequality suite on randomized instances of a finite law.
    Suite {
        #[arg(long)]
        dist: PathBuf,
        /// Number of randomized trials.
        #[arg(long, default_value_t = 100)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Exact sign-walk values: products vs plain sums, both below √n.
    Rademacher {
        #[arg(long)]
        n: u32,
        #[command(flatten)]
        out: OutArg,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Certify { .. } => "certify",
            Command::Exact { .. } => "exact",
            Command::Estimate { .. } => "estimate",
            Command::Ratio { .. } => "ratio",
            Command::Riesz { .. } => "riesz",
            Command::Sweep { .. } => "sweep",
            Command::Adversary { .. } => "adversary",
            Command::Suite { .. } => "suite",
            Command::Rademacher { .. } => "rademacher",
        }
    }

    fn out(&self) -> Option<&PathBuf> {
        match self {
            Command::Validate { out, .. }
            | Command::Certify { out, .. }
            | Command::Exact { out, .. }
            | Command::Estimate { out, .. }
            | Command::Ratio { out, .. }
            | Command::Riesz { out, .. }
            | Command::Sweep { out, .. }
            | Command::Adversary { out, .. }
            | Command::Suite { out, .. }
            | Command::Rademacher { out, .. } => out.out.as_ref(),
        }
    }

    fn seed(&self) -> u64 {
        match self {
            Command::Estimate { seed, .. }
            | Command::Ratio { seed, .. }
            | Command::Sweep { seed, .. }
            | Command::Adversary { seed, .. }
            | Command::Suite { seed, .. } => *seed,
            _ => 0,
        }
    }

    fn input_paths(&self) -> (Option<&PathBuf>, Option<&PathBuf>, Option<&PathBuf>) {
        match self {
            Command::Validate { dist, .. }
            | Command::Certify { dist, .. }
            | Command::Suite { dist, .. }
            | Command::Adversary { dist, .. } => (Some(dist), None, None),
            Command::Exact { dist, coeffs, .. }
            | Command::Estimate { dist, coeffs, .. }
            | Command::Ratio { dist, coeffs, .. } => (Some(dist), Some(coeffs), None),
            Command::Riesz { seq, coeffs, .. } => (None, Some(coeffs), Some(seq)),
            Command::Sweep { seq, .. } => (None, None, Some(seq)),
            Command::Rademacher { .. } => (None, None, None),
        }
    }

    /// Flag combinations the library would reject with a panic are usage
    /// errors and must exit 2 before any work happens.
    fn check_usage(&self) -> anyhow::Result<()> {
        match self {
            Command::Estimate { samples, .. } if *samples < 100 => {
                bail!("--samples must be at least 100")
            }
            Command::Ratio {
                samples: Some(s), ..
            } if *s < 100 => {
                bail!("--samples must be at least 100")
            }
            Command::Sweep { samples, tol, .. } => {
                if *samples < 1 {
                    bail!("--samples must be at least 1");
                }
                if !tol.is_finite() || *tol <= 0.0 {
                    bail!("--tol must be positive");
                }
                Ok(())
            }
            Command::Riesz { tol, .. } if !tol.is_finite() || *tol <= 0.0 => {
                bail!("--tol must be positive")
            }
            Command::Suite { samples, .. } if *samples < 1 => {
                bail!("--samples must be at least 1")
            }
            Command::Adversary {
                budget,
                restarts,
                samples,
                c_bound,
                n,
                ..
            } => {
                if c_bound.is_none() {
                    if *restarts < 1 {
                        bail!("--restarts must be at least 1");
                    }
                    if *budget < *restarts {
                        bail!("--budget must be at least --restarts");
                    }
                } else {
                    if *budget < 1 {
                        bail!("--budget must be at least 1");
                    }
                    if *n < 1 {
                        bail!("--n must be at least 1 for the bounded-sum probe");
                    }
                }
                if let Some(s) = samples {
                    if *s < 100 {
                        bail!("--samples must be at least 100");
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

fn load_distribution(path: &PathBuf) -> anyhow::Result<Distribution> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read distribution file {}", path.display()))?;
    Distribution::from_spec_json(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn load_coefficients(path: &PathBuf) -> anyhow::Result<CoefficientVector> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read coefficient file {}", path.display()))?;
    CoefficientVector::from_json_str(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn load_sequence(path: &PathBuf) -> anyhow::Result<LacunarySequence> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read sequence file {}", path.display()))?;
    LacunarySequence::from_json_str(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn scalar_coefficients(cv: &CoefficientVector) -> anyhow::Result<Vec<f64>> {
    if cv.dim() != 1 {
        bail!(
            "this command needs scalar coefficients (d = 1), got d = {}",
            cv.dim()
        );
    }
    Ok(cv.coeffs().iter().map(|p| p[0]).collect())
}

fn search_value(result: &SearchResult) -> anyhow::Result<Value> {
    Ok(serde_json::to_value(result)?)
}

/// Runs one command and produces the `result` subtree of the report plus an
/// optional CSV companion body.
fn execute(cmd: &Command) -> anyhow::Result<(Value, Option<String>)> {
    match cmd {
        Command::Validate { dist, .. } => {
            let d = load_distribution(dist)?;
            let report = d.validate();
            let value = json!({
                "kind": d.kind_name(),
                "checks": report,
                "all_pass": report.all_pass(),
            });
            Ok((value, None))
        }
        Command::Certify { dist, .. } => {
            let d = load_distribution(dist)?;
            let validation = d.validate();
            if !validation.all_pass() {
                bail!(
                    "distribution failed validation: {}",
                    serde_json::to_string(&validation)?
                );
            }
            let profile = certification_profile(&d).map_err(|e| anyhow!("{e}"))?;
            let thm1 = match certify_thm1(&profile) {
                Ok(cert) => serde_json::to_value(cert)?,
                Err(e) => json!({ "error": e.to_string() }),
            };
            let thm3 = match certify_thm3(&profile) {
                Ok(cert) => serde_json::to_value(cert)?,
                Err(e) => json!({ "error": e.to_string() }),
            };
            Ok((
                json!({ "profile": profile, "thm1": thm1, "thm3": thm3 }),
                None,
            ))
        }
        Command::Exact { dist, coeffs, .. } => {
            let d = load_distribution(dist)?;
            let cv = load_coefficients(coeffs)?;
            let est = exact_l1(&d, &cv).map_err(|e| anyhow!("{e}"))?;
            let mass = cv.l1_mass();
            let value = json!({
                "estimate": est,
                "coefficient_mass": mass,
                "ratio": est.mean / mass,
            });
            Ok((value, None))
        }
        Command::Estimate {
            dist,
            coeffs,
            samples,
            seed,
            ..
        } => {
            let d = load_distribution(dist)?;
            let cv = load_coefficients(coeffs)?;
            let est = mc_l1(&d, &cv, *samples, *seed).map_err(|e| anyhow!("{e}"))?;
            let mass = cv.l1_mass();
            let value = json!({
                "estimate": est,
                "coefficient_mass": mass,
                "ratio": est.mean / mass,
            });
            Ok((value, None))
        }
        Command::Ratio {
            dist,
            coeffs,
            samples,
            seed,
            ..
        } => {
            let d = load_distribution(dist)?;
            let cv = load_coefficients(coeffs)?;
            let method = match samples {
                Some(s) => Method::MonteCarlo {
                    samples: *s,
                    seed: *seed,
                },
                None => Method::Exact,
            };
            let r = ratio(&d, &cv, method).map_err(|e| anyhow!("{e}"))?;
            let value = json!({
                "ratio": r,
                "method": if samples.is_some() { "monte_carlo" } else { "exact" },
            });
            Ok((value, None))
        }
        Command::Riesz {
            seq, coeffs, tol, ..
        } => {
            let s = load_sequence(seq)?;
            let a = scalar_coefficients(&load_coefficients(coeffs)?)?;
            let quad = riesz_l1(&a, &s, *tol).map_err(|e| anyhow!("{e}"))?;
            let mass: f64 = a.iter().map(|x| x.abs()).sum();
            let value = json!({
                "quadrature": quad,
                "coefficient_mass": mass,
                "ratio": quad.value / mass,
                "sequence": s,
            });
            Ok((value, None))
        }
        Command::Sweep {
            seq,
            n,
            samples,
            seed,
            tol,
            ..
        } => {
            let s = load_sequence(seq)?;
            let report =
                riesz_ratio_sweep(&s, *n, *samples, *seed, *tol).map_err(|e| anyhow!("{e}"))?;
            let mut csv = String::from("trial,ratio");
            for i in 0..=*n {
                csv.push_str(&format!(",a{i}"));
            }
            csv.push('\n');
            for row in &report.rows {
                csv.push_str(&format!("{},{}", row.trial, row.ratio));
                for c in &row.coeffs {
                    csv.push_str(&format!(",{c}"));
                }
                csv.push('\n');
            }
            Ok((serde_json::to_value(report)?, Some(csv)))
        }
        Command::Adversary {
            dist,
            n,
            norm,
            budget,
            restarts,
            seed,
            samples,
            c_bound,
            ..
        } => {
            let d = load_distribution(dist)?;
            let (mode, config_value, result) = match c_bound {
                Some(c) => {
                    let result =
                        bounded_sum_probe(&d, *n, *c, *budget, *seed).map_err(|e| anyhow!("{e}"))?;
                    let config = json!({ "n": n, "C": c, "budget": budget, "seed": seed });
                    ("bounded_sum_probe", config, result)
                }
                None => {
                    let config = SearchConfig {
                        n: *n,
                        d: 1,
                        norm: (*norm).into(),
                        budget: *budget,
                        restarts: *restarts,
                        seed: *seed,
                        oracle: match samples {
                            Some(s) => Oracle::MonteCarlo { samples: *s },
                            None => Oracle::Exact,
                        },
                    };
                    let result = minimize_ratio(&d, &config).map_err(|e| anyhow!("{e}"))?;
                    ("minimize_ratio", serde_json::to_value(config)?, result)
                }
            };
            let mut csv = String::from("restart,step,best_value\n");
            for trace in &result.trace {
                for (step, value) in trace.best_values.iter().enumerate() {
                    csv.push_str(&format!("{},{step},{value}\n", trace.restart));
                }
            }
            let value =
                json!({ "mode": mode, "config": config_value, "search": search_value(&result)? });
            Ok((value, Some(csv)))
        }
        Command::Suite {
            dist,
            samples,
            seed,
            ..
        } => {
            let d = load_distribution(dist)?;
            let report = lemma_suite(&d, *samples, *seed).map_err(|e| anyhow!("{e}"))?;
            Ok((serde_json::to_value(report)?, None))
        }
        Command::Rademacher { n, .. } => {
            let (products, plain) = rademacher_exact(*n).map_err(|e| anyhow!("{e}"))?;
            let value = json!({
                "n": n,
                "value_products": products,
                "value_plain": plain,
                "sqrt_n": (*n as f64).sqrt(),
            });
            Ok((value, None))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cmd = cli.command;
    if let Err(e) = cmd.check_usage() {
        eprintln!("usage error: {e}");
        return ExitCode::from(2);
    }
    let (dist, coeffs, seq) = cmd.input_paths();
    let manifest = RunManifest::new(
        cmd.name(),
        dist.cloned(),
        coeffs.cloned(),
        seq.cloned(),
        cmd.seed(),
        cmd.out().cloned(),
    );
    match execute(&cmd) {
        Ok((result, csv)) => {
            let csv = csv.and_then(|body| cmd.out().map(|out| (csv_companion_path(out), body)));
            match write_report(&manifest, &result, cmd.out(), csv.as_ref()) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(1)
                }
            }
        }
        Err(e) => {
            let result = json!({ "error": format!("{e:#}") });
            if let Err(werr) = write_report(&manifest, &result, cmd.out(), None) {
                eprintln!("error: {werr:#}");
            }
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
