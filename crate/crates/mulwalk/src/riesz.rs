//! Trigonometric-product combinations on the circle: validates lacunary
//! frequency sequences and integrates `(1/2π)∫|Σ aᵢ·Πⱼ≤ᵢ(1+cos(nⱼt))|dt`
//! by deterministic grid quadrature.
//!
//! The products are nonnegative with unit mean, so the combination obeys the
//! same ℓ1 upper bound as the random-walk model; the sweep probes how far
//! below it random coefficients can push the integral.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec;
use crate::rng::stream_rng;

/// Hard cap on the quadrature grid.
pub const MAX_GRID: u64 = 1 << 28;

const GRID_BATCH: usize = 1 << 16;

/// Strictly increasing positive integers with every ratio at least 3.
#[derive(Clone, Debug, Serialize)]
pub struct LacunarySequence {
    freqs: Vec<u64>,
    ratios: Vec<f64>,
    /// Prefix sum of `n_k/n_{k+1}`. Diagnostic only; no finite prefix can
    /// decide the summability of the full sequence.
    prefix_ratio_sum: f64,
}

impl LacunarySequence {
    /// Validates raw integers: positive, strictly increasing, each
    /// consecutive ratio at least 3 (boundary included).
    pub fn validate(raw: &[i64]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::EmptyInput("frequency sequence"));
        }
        let mut freqs = Vec::with_capacity(raw.len());
        for &entry in raw {
            if entry <= 0 {
                return Err(Error::NonpositiveEntry(entry));
            }
            freqs.push(entry as u64);
        }
        for i in 1..freqs.len() {
            if freqs[i] <= freqs[i - 1] {
                return Err(Error::NotIncreasing(i));
            }
            // integer check: n_{k+1}/n_k ≥ 3 with no rounding
            if freqs[i] < freqs[i - 1].saturating_mul(3) {
                return Err(Error::RatioTooSmall {
                    pred: freqs[i - 1],
                    succ: freqs[i],
                });
            }
        }
        let ratios = freqs
            .windows(2)
            .map(|w| w[1] as f64 / w[0] as f64)
            .collect();
        let prefix_ratio_sum = freqs.windows(2).map(|w| w[0] as f64 / w[1] as f64).sum();
        Ok(LacunarySequence {
            freqs,
            ratios,
            prefix_ratio_sum,
        })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: Vec<i64> = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Self::validate(&raw)
    }

    pub fn freqs(&self) -> &[u64] {
        &self.freqs
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    pub fn prefix_ratio_sum(&self) -> f64 {
        self.prefix_ratio_sum
    }
}

/// A converged quadrature value with its final grid and the change seen at
/// the last grid doubling.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub grid_size: u64,
    pub refinement_delta: f64,
}

/// `Σ_j |Σᵢ aᵢ·Πⱼ≤ᵢ(1+cos(nⱼ t_j))|` over `points` grid nodes
/// `t_j = 2π(j+offset)/points`, batched with an order-fixed reduction.
fn grid_sum(a: &[f64], freqs: &[u64], points: u64, offset: f64) -> f64 {
    let inv = 1.0 / points as f64;
    let parts = exec::map_batched(points as usize, GRID_BATCH, |range| {
        let mut sum = 0.0;
        for j in range {
            let t = std::f64::consts::TAU * ((j as f64 + offset) * inv);
            let mut combo = a[0];
            let mut prod = 1.0;
            for (i, &f) in freqs.iter().take(a.len() - 1).enumerate() {
                prod *= 1.0 + (f as f64 * t).cos();
                combo += a[i + 1] * prod;
            }
            sum += combo.abs();
        }
        sum
    });
    parts.into_iter().sum()
}

/// `(1/2π)∫₀^{2π}|Σᵢ aᵢ·Πⱼ≤ᵢ(1+cos(nⱼt))|dt` by uniform trapezoid
/// quadrature (on a periodic integrand the trapezoid and midpoint rules
/// coincide). The grid starts at `64·(1+Σ nⱼ)` nodes, past the bandwidth
/// of the polynomial inside the absolute value, and doubles, reusing
/// previous nodes, until the relative change drops below `tol`.
pub fn riesz_l1(a: &[f64], seq: &LacunarySequence, tol: f64) -> Result<QuadratureResult> {
    if a.is_empty() {
        return Err(Error::EmptyInput("coefficients"));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteCoefficient);
    }
    assert!(tol > 0.0, "tolerance must be positive");
    let n = a.len() - 1;
    if n > seq.len() {
        return Err(Error::CoefficientLengthMismatch {
            got: a.len(),
            need: n,
            have: seq.len(),
        });
    }
    let mass: f64 = a.iter().map(|x| x.abs()).sum();
    let top: u128 = seq.freqs[..n].iter().map(|&f| f as u128).sum();
    let start = 64u128 * (1 + top);
    if start > MAX_GRID as u128 {
        return Err(Error::GridOverflow);
    }
    let mut points = start as u64;
    let mut sum = grid_sum(a, &seq.freqs, points, 0.0);
    loop {
        if 2 * points > MAX_GRID {
            return Err(Error::GridOverflow);
        }
        let value_prev = sum / points as f64;
        sum += grid_sum(a, &seq.freqs, points, 0.5);
        points *= 2;
        let value = sum / points as f64;
        let delta = (value - value_prev).abs();
        let denom = value.abs().max(1e-3 * mass);
        if delta / denom < tol {
            return Ok(QuadratureResult {
                value,
                grid_size: points,
                refinement_delta: delta,
            });
        }
    }
}

/// One sweep trial: a unit-ℓ1 coefficient vector and its integral ratio.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub trial: u64,
    pub ratio: f64,
    pub coeffs: Vec<f64>,
}

/// Counts of sweep ratios in bins of width `bin_width` starting at 0.
#[derive(Clone, Debug, Serialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub counts: Vec<u64>,
}

/// Report of a randomized coefficient sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub trials: u64,
    pub seed: u64,
    pub tol: f64,
    pub min_ratio: f64,
    pub argmin_trial: u64,
    pub argmin_coeffs: Vec<f64>,
    pub histogram: Histogram,
    pub rows: Vec<SweepRow>,
}

const HIST_WIDTH: f64 = 0.05;
const HIST_BINS: usize = 22; // covers [0, 1.1)

/// Integrates `trials` random unit-ℓ1 coefficient vectors of length `n+1`
/// against the sequence and reports the observed ratios, their minimum, and
/// a histogram. Deterministic per seed.
pub fn riesz_ratio_sweep(
    seq: &LacunarySequence,
    n: usize,
    trials: u64,
    seed: u64,
    tol: f64,
) -> Result<SweepReport> {
    if n > seq.len() {
        return Err(Error::CoefficientLengthMismatch {
            got: n + 1,
            need: n,
            have: seq.len(),
        });
    }
    assert!(trials >= 1, "at least one trial");
    let outcomes = exec::map_indexed(trials as usize, |t| -> Result<SweepRow> {
        let mut rng = stream_rng(seed, t as u64);
        let coeffs = loop {
            let draw: Vec<f64> = (0..=n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mass: f64 = draw.iter().map(|x| x.abs()).sum();
            if mass > 1e-9 {
                break draw.iter().map(|x| x / mass).collect::<Vec<f64>>();
            }
        };
        let mass: f64 = coeffs.iter().map(|x| x.abs()).sum();
        let quad = riesz_l1(&coeffs, seq, tol)?;
        Ok(SweepRow {
            trial: t as u64,
            ratio: quad.value / mass,
            coeffs,
        })
    });
    let mut rows = Vec::with_capacity(trials as usize);
    for outcome in outcomes {
        rows.push(outcome?);
    }
    let mut counts = vec![0u64; HIST_BINS];
    for row in &rows {
        let bin = ((row.ratio / HIST_WIDTH).floor() as usize).min(HIST_BINS - 1);
        counts[bin] += 1;
    }
    let argmin = rows
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.ratio.total_cmp(&b.ratio))
        .map(|(i, _)| i)
        .expect("at least one trial");
    Ok(SweepReport {
        trials,
        seed,
        tol,
        min_ratio: rows[argmin].ratio,
        argmin_trial: rows[argmin].trial,
        argmin_coeffs: rows[argmin].coeffs.clone(),
        histogram: Histogram {
            bin_width: HIST_WIDTH,
            counts,
        },
        rows,
    })
}
