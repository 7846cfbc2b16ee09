//! Derivative-free search over coefficient space: minimizes the L1-to-ℓ1
//! ratio to probe certificate sharpness, and maximizes the normalized
//! combination value under bounded coefficients and partial sums.
//!
//! The engine is multi-restart cyclic coordinate descent with a halving step
//! schedule. The objective has kinks (absolute values) and the Monte Carlo
//! oracle is noisy, so each restart freezes one common set of sampled paths
//! and every candidate is scored against it, so within a restart the
//! objective is an ordinary deterministic function. Restarts are independent and may
//! run in parallel; the final reduction picks the minimum in restart order.

use rand::Rng;
use serde::Serialize;

use crate::distributions::{Distribution, ProductPath};
use crate::error::{Error, Result};
use crate::evaluator::{self, CoefficientVector, Norm, ENUMERATION_BUDGET};
use crate::exec;
use crate::rng::{stream_rng, subseed};

const STEP_INITIAL: f64 = 0.25;
const STEP_HALVING: f64 = 0.5;
const STEP_FLOOR: f64 = 1e-6;

/// Substream offsets: restart starts use `r`, common-random-number path sets
/// use `PATH_STREAM + r`, the final recheck uses `RECHECK_STREAM`.
const PATH_STREAM: u64 = 1 << 32;
const RECHECK_STREAM: u64 = 1 << 33;

/// Default sampling effort when the probe has to fall back to Monte Carlo.
const PROBE_SAMPLES: u64 = 16_384;
const PROBE_RESTARTS: u64 = 8;

/// Objective oracle for the search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Oracle {
    Exact,
    MonteCarlo { samples: u64 },
}

/// Search-space and effort description.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SearchConfig {
    /// Number of random factors; coefficients have `n + 1` points.
    pub n: usize,
    /// Coordinate dimension of each point.
    pub d: usize,
    pub norm: Norm,
    /// Total objective evaluations across all restarts.
    pub budget: u64,
    pub restarts: u64,
    pub seed: u64,
    pub oracle: Oracle,
}

/// The step schedule in force during a search, recorded for reproducibility.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct StepSchedule {
    pub initial: f64,
    pub halving: f64,
    pub floor: f64,
}

/// Best-so-far objective values of one restart, in acceptance order.
#[derive(Clone, Debug, Serialize)]
pub struct RestartTrace {
    pub restart: u64,
    pub best_values: Vec<f64>,
}

/// Outcome of a search, re-verified through the evaluator on return.
#[derive(Clone, Debug, Serialize)]
pub struct SearchResult {
    pub best_ratio: f64,
    pub best_coeffs: CoefficientVector,
    pub evaluations_used: u64,
    pub trace: Vec<RestartTrace>,
    pub budget_exhausted: bool,
    pub step_schedule: StepSchedule,
    /// Independent recomputation of the objective at `best_coeffs`: equal to
    /// `best_ratio` for the exact oracle, a fresh estimate for Monte Carlo.
    pub recheck_ratio: f64,
    pub recheck_std_error: f64,
}

struct RestartOutcome {
    best_x: Vec<f64>,
    best_f: f64,
    trace: Vec<f64>,
    evals: u64,
    exhausted: bool,
}

/// Cyclic coordinate descent: perturb one coordinate at a time by `±step`,
/// re-project, keep strict improvements (ties keep the incumbent), halve the
/// step after a full cycle without improvement, stop at the floor or when
/// the evaluation budget runs out.
fn descend<O, P>(mut x: Vec<f64>, objective: &O, project: &P, budget: u64) -> RestartOutcome
where
    O: Fn(&[f64]) -> f64,
    P: Fn(&mut Vec<f64>) -> bool,
{
    let feasible = project(&mut x);
    debug_assert!(feasible, "start points are feasible by construction");
    let mut evals = 0u64;
    let mut exhausted = budget == 0;
    let mut best_f = f64::INFINITY;
    let mut trace = Vec::new();
    if !exhausted {
        best_f = objective(&x);
        evals += 1;
        trace.push(best_f);
    }
    let dims = x.len();
    let mut step = STEP_INITIAL;
    'schedule: while step >= STEP_FLOOR && !exhausted {
        let mut improved = false;
        for c in 0..dims {
            for sign in [1.0, -1.0] {
                if evals >= budget {
                    exhausted = true;
                    break 'schedule;
                }
                let mut candidate = x.clone();
                candidate[c] += sign * step;
                if !project(&mut candidate) {
                    continue;
                }
                let f = objective(&candidate);
                evals += 1;
                if f < best_f {
                    x = candidate;
                    best_f = f;
                    trace.push(best_f);
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= STEP_HALVING;
        }
    }
    RestartOutcome {
        best_x: x,
        best_f,
        trace,
        evals,
        exhausted,
    }
}

fn cv_from_flat(x: &[f64], d: usize, norm: Norm) -> CoefficientVector {
    let coeffs: Vec<Vec<f64>> = x.chunks(d).map(|c| c.to_vec()).collect();
    CoefficientVector::new(coeffs, norm).expect("search coordinates stay finite")
}

fn l1_mass_flat(x: &[f64], d: usize, norm: Norm) -> f64 {
    x.chunks(d).map(|c| norm.eval(c)).sum()
}

/// Mean of `‖Σ vᵢRᵢ‖` over a frozen path set.
fn mean_over_paths(x: &[f64], d: usize, norm: Norm, paths: &[ProductPath]) -> f64 {
    let mut acc = vec![0.0; d];
    let mut total = 0.0;
    for path in paths {
        acc.fill(0.0);
        for (i, &r) in path.values.iter().enumerate() {
            for k in 0..d {
                acc[k] += x[i * d + k] * r;
            }
        }
        total += norm.eval(&acc);
    }
    total / paths.len() as f64
}

fn split_budget(budget: u64, restarts: u64, r: u64) -> u64 {
    budget / restarts + u64::from(r < budget % restarts)
}

fn pick_best(outcomes: &[RestartOutcome]) -> usize {
    let mut best = 0;
    for (i, o) in outcomes.iter().enumerate().skip(1) {
        if o.best_f < outcomes[best].best_f {
            best = i;
        }
    }
    best
}

/// Validates that the exact oracle can serve `(dist, n)`.
fn check_exact_oracle(dist: &Distribution, n: usize) -> Result<()> {
    match dist.atoms() {
        None => Err(Error::OracleUnavailable(
            "exact oracle needs a finite-support distribution".to_string(),
        )),
        Some(atoms) => {
            let outcomes = (atoms.len() as f64).powi(n as i32);
            if outcomes > ENUMERATION_BUDGET {
                Err(Error::OracleUnavailable(format!(
                    "enumeration of {outcomes:e} outcomes exceeds the exact-oracle budget"
                )))
            } else {
                Ok(())
            }
        }
    }
}

/// Minimizes `E‖Σ vᵢRᵢ‖ / Σ‖vᵢ‖` over coefficients of unit ℓ1 mass by
/// multi-restart coordinate descent. The returned value can never fall below
/// an applicable certificate constant when the exact oracle is used.
pub fn minimize_ratio(dist: &Distribution, config: &SearchConfig) -> Result<SearchResult> {
    assert!(config.restarts >= 1, "at least one restart");
    assert!(
        config.budget >= config.restarts,
        "budget must cover all restarts"
    );
    assert!(config.d >= 1, "coordinate dimension must be positive");
    if let Oracle::Exact = config.oracle {
        check_exact_oracle(dist, config.n)?;
    }
    let d = config.d;
    let norm = config.norm;
    let dims = (config.n + 1) * d;

    let project = move |x: &mut Vec<f64>| -> bool {
        let mass = l1_mass_flat(x, d, norm);
        if mass < 1e-12 || !mass.is_finite() {
            return false;
        }
        for v in x.iter_mut() {
            *v /= mass;
        }
        true
    };

    let outcomes = exec::map_indexed(config.restarts as usize, |r| {
        let mut rng = stream_rng(config.seed, r as u64);
        let start: Vec<f64> = (0..dims).map(|_| rng.random_range(-1.0..1.0)).collect();
        let per_budget = split_budget(config.budget, config.restarts, r as u64);
        match config.oracle {
            Oracle::Exact => {
                let objective = |x: &[f64]| -> f64 {
                    let cv = cv_from_flat(x, d, norm);
                    let est = evaluator::exact_l1(dist, &cv).expect("oracle checked above");
                    est.mean / cv.l1_mass()
                };
                descend(start, &objective, &project, per_budget)
            }
            Oracle::MonteCarlo { samples } => {
                let paths = dist.sample_products(
                    config.n,
                    subseed(config.seed, PATH_STREAM + r as u64),
                    samples.max(1) as usize,
                );
                let objective = |x: &[f64]| -> f64 {
                    mean_over_paths(x, d, norm, &paths) / l1_mass_flat(x, d, norm)
                };
                descend(start, &objective, &project, per_budget)
            }
        }
    });

    let best = pick_best(&outcomes);
    let best_coeffs = cv_from_flat(&outcomes[best].best_x, d, norm);
    let (recheck_ratio, recheck_std_error) = match config.oracle {
        Oracle::Exact => (
            evaluator::ratio(dist, &best_coeffs, evaluator::Method::Exact)?,
            0.0,
        ),
        Oracle::MonteCarlo { samples } => {
            let est = evaluator::mc_l1(
                dist,
                &best_coeffs,
                samples.max(100),
                subseed(config.seed, RECHECK_STREAM),
            )?;
            let mass = best_coeffs.l1_mass();
            (est.mean / mass, est.std_error / mass)
        }
    };
    Ok(SearchResult {
        best_ratio: outcomes[best].best_f,
        best_coeffs,
        evaluations_used: outcomes.iter().map(|o| o.evals).sum(),
        trace: outcomes
            .iter()
            .enumerate()
            .map(|(r, o)| RestartTrace {
                restart: r as u64,
                best_values: o.trace.clone(),
            })
            .collect(),
        budget_exhausted: outcomes.iter().any(|o| o.exhausted),
        step_schedule: StepSchedule {
            initial: STEP_INITIAL,
            halving: STEP_HALVING,
            floor: STEP_FLOOR,
        },
        recheck_ratio,
        recheck_std_error,
    })
}

/// Maximizes `E|Σ aᵢRᵢ|/(n+1)` over scalar sequences with `|aᵢ| ≤ 1` and
/// every partial sum bounded by `c_bound` (both enforced by projection).
/// Restart 0 starts from alternating signs and restart 1 from all ones, so
/// traces compare structured starts against random ones.
pub fn bounded_sum_probe(
    dist: &Distribution,
    n: usize,
    c_bound: f64,
    budget: u64,
    seed: u64,
) -> Result<SearchResult> {
    if !c_bound.is_finite() || c_bound < 1.0 {
        return Err(Error::InfeasibleConstraints(c_bound));
    }
    assert!(n >= 1, "the probe needs at least one random factor");
    assert!(budget >= 1, "budget must allow at least one evaluation");
    let restarts = PROBE_RESTARTS.min(budget);
    let dims = n + 1;
    let scale = dims as f64;

    let project = move |x: &mut Vec<f64>| -> bool {
        let mut partial = 0.0;
        for v in x.iter_mut() {
            let lo = (-c_bound - partial).max(-1.0);
            let hi = (c_bound - partial).min(1.0);
            *v = v.clamp(lo, hi);
            partial += *v;
        }
        true
    };

    let exact_ok = check_exact_oracle(dist, n).is_ok();

    let outcomes = exec::map_indexed(restarts as usize, |r| {
        let start: Vec<f64> = match r {
            0 => (0..dims)
                .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
                .collect(),
            1 => vec![1.0; dims],
            _ => {
                let mut rng = stream_rng(seed, r as u64);
                (0..dims).map(|_| rng.random_range(-1.0..1.0)).collect()
            }
        };
        let per_budget = split_budget(budget, restarts, r as u64);
        // maximization: minimize the negated normalized value
        if exact_ok {
            let objective = |x: &[f64]| -> f64 {
                let cv = cv_from_flat(x, 1, Norm::L1);
                let est = evaluator::exact_l1(dist, &cv).expect("oracle checked above");
                -est.mean / scale
            };
            descend(start, &objective, &project, per_budget)
        } else {
            let paths = dist.sample_products(
                n,
                subseed(seed, PATH_STREAM + r as u64),
                PROBE_SAMPLES as usize,
            );
            let objective = |x: &[f64]| -> f64 { -mean_over_paths(x, 1, Norm::L1, &paths) / scale };
            descend(start, &objective, &project, per_budget)
        }
    });

    let best = pick_best(&outcomes);
    let best_coeffs = cv_from_flat(&outcomes[best].best_x, 1, Norm::L1);
    let (recheck_ratio, recheck_std_error) = if exact_ok {
        (evaluator::exact_l1(dist, &best_coeffs)?.mean / scale, 0.0)
    } else {
        let est = evaluator::mc_l1(
            dist,
            &best_coeffs,
            PROBE_SAMPLES,
            subseed(seed, RECHECK_STREAM),
        )?;
        (est.mean / scale, est.std_error / scale)
    };
    Ok(SearchResult {
        best_ratio: -outcomes[best].best_f,
        best_coeffs,
        evaluations_used: outcomes.iter().map(|o| o.evals).sum(),
        trace: outcomes
            .iter()
            .enumerate()
            .map(|(r, o)| RestartTrace {
                restart: r as u64,
                best_values: o.trace.iter().map(|v| -v).collect(),
            })
            .collect(),
        budget_exhausted: outcomes.iter().any(|o| o.exhausted),
        step_schedule: StepSchedule {
            initial: STEP_INITIAL,
            halving: STEP_HALVING,
            floor: STEP_FLOOR,
        },
        recheck_ratio,
        recheck_std_error,
    })
}
