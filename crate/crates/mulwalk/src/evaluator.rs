//! Evaluates `E‖Σ vᵢRᵢ‖` exactly (finite support) or by Monte Carlo, plus
//! the L1-to-ℓ1 ratio, the sign-walk square-root example, and exact property
//! checks for the six inequalities behind the certificates.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{Atom, Distribution};
use crate::error::{Error, Result};
use crate::exec::{self, SAMPLE_BATCH};
use crate::rng::stream_rng;

/// Two-sided 99% normal quantile.
const Z99: f64 = 2.576;

/// Enumeration budget for the exact oracle: `sⁿ` outcomes at most.
pub const ENUMERATION_BUDGET: f64 = 1e7;

/// Coordinate norm on d-dimensional real space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            Norm::L1 => x.iter().map(|v| v.abs()).sum(),
            Norm::L2 => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Norm::Linf => x.iter().fold(0.0, |m, &v| m.max(v.abs())),
        }
    }
}

/// Coefficients `v₀..v_n` in d-dimensional space with a declared norm.
/// Scalars are the `d = 1` case.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientVector {
    norm: Norm,
    coeffs: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CvSpec {
    norm: Norm,
    coeffs: Vec<CoeffEntry>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CoeffEntry {
    Scalar(f64),
    Point(Vec<f64>),
}

impl CoefficientVector {
    pub fn new(coeffs: Vec<Vec<f64>>, norm: Norm) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::EmptyInput("coefficient list"));
        }
        let d = coeffs[0].len();
        if d == 0 {
            return Err(Error::EmptyInput("coefficient point"));
        }
        for point in &coeffs {
            if point.len() != d {
                return Err(Error::Parse(format!(
                    "coefficient points mix dimensions {d} and {}",
                    point.len()
                )));
            }
            if point.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteCoefficient);
            }
        }
        Ok(CoefficientVector { norm, coeffs })
    }

    /// Scalar coefficients (`d = 1`); all three norms coincide with `|·|`.
    pub fn scalars(a: &[f64]) -> Self {
        CoefficientVector {
            norm: Norm::L1,
            coeffs: a.iter().map(|&x| vec![x]).collect(),
        }
    }

    /// Parses `{"norm":"linf","coeffs":[[1,0],[0,1]]}`; scalar entries may
    /// be written flat, as in `{"norm":"l1","coeffs":[1,-1]}`.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let spec: CvSpec = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let coeffs = spec
            .coeffs
            .into_iter()
            .map(|e| match e {
                CoeffEntry::Scalar(x) => vec![x],
                CoeffEntry::Point(p) => p,
            })
            .collect();
        Self::new(coeffs, spec.norm)
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].len()
    }

    /// `n`: the number of random factors (`n + 1` coefficients).
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn point_norm(&self, i: usize) -> f64 {
        self.norm.eval(&self.coeffs[i])
    }

    /// `Σᵢ ‖vᵢ‖` in the declared norm.
    pub fn l1_mass(&self) -> f64 {
        (0..self.coeffs.len()).map(|i| self.point_norm(i)).sum()
    }

    pub fn scaled(&self, t: f64) -> Self {
        CoefficientVector {
            norm: self.norm,
            coeffs: self
                .coeffs
                .iter()
                .map(|p| p.iter().map(|&x| t * x).collect())
                .collect(),
        }
    }
}

/// Which evaluation route produced an estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    Exact,
    MonteCarlo,
}

/// Evaluation route selector for [`ratio`].
#[derive(Clone, Copy, Debug)]
pub enum Method {
    Exact,
    MonteCarlo { samples: u64, seed: u64 },
}

/// Point estimate of `E‖Σ vᵢRᵢ‖` with its uncertainty.
#[derive(Clone, Debug, Serialize)]
pub struct EstimateResult {
    pub mean: f64,
    pub std_error: f64,
    pub ci99: (f64, f64),
    pub samples: u64,
    pub seed: u64,
    pub method: EstimateMethod,
}

struct ExactState<'a> {
    atoms: &'a [Atom],
    cv: &'a CoefficientVector,
    n: usize,
    d: usize,
    /// `partials[i] = Σ_{j≤i} vⱼRⱼ` along the current enumeration stack.
    partials: Vec<Vec<f64>>,
    acc: f64,
    leaves: u64,
}

impl ExactState<'_> {
    fn descend(&mut self, depth: usize, r: f64, mass: f64) {
        if depth == self.n {
            self.acc += mass * self.cv.norm.eval(&self.partials[depth]);
            self.leaves += 1;
            return;
        }
        for a in 0..self.atoms.len() {
            let atom = self.atoms[a];
            let r_next = r * atom.value;
            let mass_next = mass * atom.probability;
            let (head, rest) = self.partials.split_at_mut(depth + 1);
            let src = &head[depth];
            let dst = &mut rest[0];
            let coeff = &self.cv.coeffs[depth + 1];
            for k in 0..self.d {
                dst[k] = src[k] + coeff[k] * r_next;
            }
            if r_next == 0.0 {
                // a zero factor absorbs: every deeper term vanishes, so the
                // whole subtree contributes one fixed norm
                self.acc += mass_next * self.cv.norm.eval(&self.partials[depth + 1]);
                self.leaves += 1;
            } else {
                self.descend(depth + 1, r_next, mass_next);
            }
        }
    }
}

/// Exact `E‖Σ vᵢRᵢ‖` by enumerating all factor assignments of a finite law.
pub fn exact_l1(dist: &Distribution, cv: &CoefficientVector) -> Result<EstimateResult> {
    let atoms = dist.atoms().ok_or(Error::NotFiniteSupport)?;
    let n = cv.degree();
    let outcomes = (atoms.len() as f64).powi(n as i32);
    if outcomes > ENUMERATION_BUDGET {
        return Err(Error::EnumerationTooLarge(outcomes));
    }
    let d = cv.dim();
    let mut state = ExactState {
        atoms,
        cv,
        n,
        d,
        partials: vec![vec![0.0; d]; n + 1],
        acc: 0.0,
        leaves: 0,
    };
    state.partials[0].copy_from_slice(&cv.coeffs[0]);
    state.descend(0, 1.0, 1.0);
    let mean = state.acc;
    Ok(EstimateResult {
        mean,
        std_error: 0.0,
        ci99: (mean, mean),
        samples: state.leaves,
        seed: 0,
        method: EstimateMethod::Exact,
    })
}

/// Monte Carlo estimate of `E‖Σ vᵢRᵢ‖` over `samples` independent paths.
/// Chunk `c` of fixed size draws from substream `c` of `seed`, and chunk
/// sums are combined in index order, so the result is bit-reproducible and
/// independent of the worker count.
pub fn mc_l1(
    dist: &Distribution,
    cv: &CoefficientVector,
    samples: u64,
    seed: u64,
) -> Result<EstimateResult> {
    assert!(samples >= 100, "Monte Carlo needs at least 100 samples");
    let n = cv.degree();
    if n == 0 {
        // R₀ = 1, so every sample is the same deterministic value
        let mean = cv.point_norm(0);
        return Ok(EstimateResult {
            mean,
            std_error: 0.0,
            ci99: (mean, mean),
            samples,
            seed,
            method: EstimateMethod::MonteCarlo,
        });
    }
    let d = cv.dim();
    let partials = exec::map_batched(samples as usize, SAMPLE_BATCH, |range| {
        let mut rng = stream_rng(seed, (range.start / SAMPLE_BATCH) as u64);
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        let mut acc = vec![0.0; d];
        for _ in range {
            acc.copy_from_slice(&cv.coeffs[0]);
            let mut r = 1.0;
            for coeff in &cv.coeffs[1..] {
                r *= dist.sample(&mut rng);
                for k in 0..d {
                    acc[k] += coeff[k] * r;
                }
            }
            let v = cv.norm.eval(&acc);
            sum += v;
            sumsq += v * v;
        }
        (sum, sumsq)
    });
    let (sum, sumsq) = partials
        .into_iter()
        .fold((0.0, 0.0), |(s, q), (ps, pq)| (s + ps, q + pq));
    let count = samples as f64;
    let mean = sum / count;
    let var = ((sumsq - sum * sum / count) / (count - 1.0)).max(0.0);
    let std_error = (var / count).sqrt();
    Ok(EstimateResult {
        mean,
        std_error,
        ci99: (mean - Z99 * std_error, mean + Z99 * std_error),
        samples,
        seed,
        method: EstimateMethod::MonteCarlo,
    })
}

/// `E‖Σ vᵢRᵢ‖ / Σ‖vᵢ‖` with the chosen evaluation route.
pub fn ratio(dist: &Distribution, cv: &CoefficientVector, method: Method) -> Result<f64> {
    let mass = cv.l1_mass();
    if mass == 0.0 {
        return Err(Error::ZeroCoefficients);
    }
    let est = match method {
        Method::Exact => exact_l1(dist, cv)?,
        Method::MonteCarlo { samples, seed } => mc_l1(dist, cv, samples, seed)?,
    };
    Ok(est.mean / mass)
}

fn binomial(n: u32, k: u32) -> u64 {
    let k = k.min(n - k.min(n));
    let mut out = 1u64;
    for i in 1..=k as u64 {
        out = out * (n as u64 - k as u64 + i) / i;
    }
    out
}

/// For sign factors `ε_i = ±1`: evaluates `E|Σ_{i=1}^n Π_{k≤i} ε_k|` by
/// enumerating all `2ⁿ` sign patterns and `E|Σ_{i=1}^n ε_i|` by the binomial
/// closed form. The two agree exactly (products of signs are again
/// independent signs) and stay below `√n`: the walk with `P(|X| = 1) = 1`
/// admits no ℓ1 lower bound.
pub fn rademacher_exact(n: u32) -> Result<(f64, f64)> {
    if !(1..=20).contains(&n) {
        return Err(Error::NTooLarge(n));
    }
    let total = 1u64 << n;
    let mut weighted: u64 = 0;
    for mask in 0..total {
        let mut prod = 1i64;
        let mut s = 0i64;
        for i in 0..n {
            prod *= if (mask >> i) & 1 == 1 { 1 } else { -1 };
            s += prod;
        }
        weighted += s.unsigned_abs();
    }
    // every term is a dyadic rational with a short mantissa, so both routes
    // are exact in f64 and must agree bit for bit
    let value_products = weighted as f64 / total as f64;
    let value_plain = n as f64 * 2f64.powi(1 - n as i32) * binomial(n - 1, (n - 1) / 2) as f64;
    assert!(
        value_products == value_plain,
        "sign-product identity must be exact"
    );
    assert!(value_products <= (n as f64).sqrt());
    Ok((value_products, value_plain))
}

/// Per-inequality tally of a [`lemma_suite`] run.
#[derive(Clone, Debug, Serialize)]
pub struct LemmaReport {
    pub name: &'static str,
    pub hypothesis_met: u64,
    pub violations: u64,
}

/// Result of checking the six certificate inequalities on randomized exact
/// instances.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub trials: u64,
    pub seed: u64,
    pub lemmas: Vec<LemmaReport>,
    pub total_violations: u64,
}

const LEMMA_NAMES: [&str; 6] = [
    "two_term_lower",
    "small_shift_gain",
    "sqrt_decay",
    "truncated_two_term",
    "split_gain",
    "max_coefficient",
];

const LEMMA_COUNT: usize = LEMMA_NAMES.len();

/// Per-trial lemma counters: (hypothesis met, violated).
type TrialCounts = [(u64, u64); LEMMA_COUNT];

/// Enumerates all `sⁿ` factor assignments of `atoms`, visiting each outcome
/// with its probability and the full path `R₀..R_n`.
fn enumerate_outcomes(atoms: &[Atom], n: usize, mut visit: impl FnMut(f64, &[f64])) {
    let s = atoms.len();
    let mut idx = vec![0usize; n];
    let mut rs = vec![1.0; n + 1];
    let mut prob = vec![1.0; n + 1];
    loop {
        for i in 0..n {
            rs[i + 1] = rs[i] * atoms[idx[i]].value;
            prob[i + 1] = prob[i] * atoms[idx[i]].probability;
        }
        visit(prob[n], &rs);
        let mut pos = n;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < s {
                break;
            }
            idx[pos] = 0;
        }
    }
}

fn range_sum(cv: &CoefficientVector, rs: &[f64], lo: usize, hi: usize, out: &mut [f64]) {
    out.fill(0.0);
    for (coeff, &r) in cv.coeffs()[lo..hi].iter().zip(&rs[lo..hi]) {
        for (slot, &c) in out.iter_mut().zip(coeff) {
            *slot += c * r;
        }
    }
}

fn slack(lhs: f64, rhs: f64) -> f64 {
    1e-9 * (1.0 + lhs.abs() + rhs.abs())
}

fn run_lemma_trial(dist: &Distribution, seed: u64, trial: u64) -> TrialCounts {
    let atoms = dist.atoms().expect("finite support checked by caller");
    let s = atoms.len();
    let mut rng = stream_rng(seed, trial);
    let mut counts: TrialCounts = Default::default();

    let d: usize = rng.random_range(1..=3);
    let norm = [Norm::L1, Norm::L2, Norm::Linf][rng.random_range(0..3)];
    let mut n_max = 1usize;
    while n_max < 4 && (s as f64).powi(n_max as i32 + 1) <= 1e5 {
        n_max += 1;
    }
    let n: usize = rng.random_range(1..=n_max);
    let decay: f64 = [1.0, 0.7, 0.3][rng.random_range(0..3)];
    let head_scale = if rng.random::<bool>() { 4.0 } else { 1.0 };

    let mut coeffs: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let scale = if i == 0 {
            head_scale
        } else {
            decay.powi(i as i32)
        };
        coeffs.push(
            (0..d)
                .map(|_| scale * rng.random_range(-1.0..1.0))
                .collect(),
        );
    }
    let cv = CoefficientVector::new(coeffs, norm).expect("finite coordinates");
    let u: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let split: usize = rng.random_range(1..=n);
    let trunc_idx: usize = rng.random_range(0..=s);
    let trunc_level = if trunc_idx == s {
        atoms[s - 1].value + 1.0
    } else {
        atoms[trunc_idx].value
    };

    let mu: f64 = atoms
        .iter()
        .map(|t| t.probability * (t.value - 1.0).abs())
        .sum();
    let lambda: f64 = atoms.iter().map(|t| t.probability * t.value.sqrt()).sum();

    // pair inequality: E‖uX+v‖ ≥ ½E|X−1|·max{‖u‖,‖v‖}
    {
        let lhs: f64 = atoms
            .iter()
            .map(|t| {
                let point: Vec<f64> = (0..d).map(|k| u[k] * t.value + v[k]).collect();
                t.probability * norm.eval(&point)
            })
            .sum();
        let rhs = 0.5 * mu * norm.eval(&u).max(norm.eval(&v));
        counts[0].0 += 1;
        if lhs < rhs - slack(lhs, rhs) {
            counts[0].1 += 1;
        }
    }

    // truncated pair inequality: E‖uX+v‖1{X≤A} ≥ μ‖v‖/8 whenever the strict
    // tail E|X−1|1{X>A} stays below μ/4
    {
        let tail_strict: f64 = atoms
            .iter()
            .filter(|t| t.value > trunc_level)
            .map(|t| t.probability * (t.value - 1.0).abs())
            .sum();
        if tail_strict <= mu / 4.0 + 1e-12 {
            counts[3].0 += 1;
            let lhs: f64 = atoms
                .iter()
                .filter(|t| t.value <= trunc_level)
                .map(|t| {
                    let point: Vec<f64> = (0..d).map(|k| u[k] * t.value + v[k]).collect();
                    t.probability * norm.eval(&point)
                })
                .sum();
            let rhs = mu * norm.eval(&v) / 8.0;
            if lhs < rhs - slack(lhs, rhs) {
                counts[3].1 += 1;
            }
        }
    }

    // accumulate the path functionals for the remaining four checks
    let v0_norm = cv.point_norm(0);
    let weighted_tail: f64 = (0..=n)
        .map(|k| lambda.powi(k as i32) * cv.point_norm(k))
        .sum();
    let sqrt_bound: f64 = (0..=n)
        .map(|k| lambda.powi(k as i32) * cv.point_norm(k).sqrt())
        .sum();
    let thresholds: Vec<f64> = if lambda < 1.0 {
        [1.0, 2.0, 4.0]
            .iter()
            .map(|t| t / (1.0 - lambda) * weighted_tail)
            .collect()
    } else {
        Vec::new()
    };

    let mut e_s = 0.0;
    let mut e_sqrt_s = 0.0;
    let mut e_y1 = 0.0; // Y = Σ_{i≥1} vᵢRᵢ
    let mut p_y1_big = 0.0;
    let mut tail_mass = [0.0f64; 3];
    let mut e_z = 0.0; // Z = Σ_{i<split}
    let mut e_ym = 0.0; // Y = Σ_{i≥split}
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    let mut buf = vec![0.0; d];
    enumerate_outcomes(atoms, n, |p, rs| {
        range_sum(&cv, rs, 0, n + 1, &mut buf);
        let norm_s = norm.eval(&buf);
        e_s += p * norm_s;
        e_sqrt_s += p * norm_s.sqrt();
        for (i, &thr) in thresholds.iter().enumerate() {
            if norm_s >= thr {
                tail_mass[i] += p;
            }
        }
        range_sum(&cv, rs, 1, n + 1, &mut buf);
        let norm_y1 = norm.eval(&buf);
        e_y1 += p * norm_y1;
        if norm_y1 > v0_norm / 4.0 {
            p_y1_big += p;
        }
        range_sum(&cv, rs, 0, split, &mut buf);
        let norm_z = norm.eval(&buf);
        e_z += p * norm_z;
        range_sum(&cv, rs, split, n + 1, &mut buf);
        let norm_ym = norm.eval(&buf);
        e_ym += p * norm_ym;
        rows.push((p, norm_z, norm_ym));
    });

    // shift gain: P(‖Y‖ > ‖v₀‖/4) ≤ ¼ implies E‖Y+v₀‖ ≥ E‖Y‖ + ‖v₀‖/8
    if p_y1_big <= 0.25 {
        counts[1].0 += 1;
        let rhs = e_y1 + v0_norm / 8.0;
        if e_s < rhs - slack(e_s, rhs) {
            counts[1].1 += 1;
        }
    }

    // geometric decay of square-root moments and the induced tail bound
    if lambda < 1.0 - 1e-12 {
        counts[2].0 += 1;
        let mut violated = e_sqrt_s > sqrt_bound + slack(e_sqrt_s, sqrt_bound);
        for (i, t) in [1.0f64, 2.0, 4.0].iter().enumerate() {
            let bound = 1.0 / t.sqrt();
            if tail_mass[i] > bound + 1e-12 {
                violated = true;
            }
        }
        if violated {
            counts[2].1 += 1;
        }
    }

    // split gain: a small head-tail overlap yields E‖Y+Z‖ ≥ E‖Y‖ + ½E‖Z‖
    {
        let overlap: f64 = rows
            .iter()
            .map(|&(p, nz, ny)| if ny > e_z / 8.0 { p * nz } else { 0.0 })
            .sum();
        if overlap <= e_z / 8.0 + 1e-12 {
            counts[4].0 += 1;
            let rhs = e_ym + 0.5 * e_z;
            if e_s < rhs - slack(e_s, rhs) {
                counts[4].1 += 1;
            }
        }
    }

    // every coefficient is visible: E‖Σ vᵢRᵢ‖ ≥ ¼μ²·maxᵢ‖vᵢ‖
    {
        counts[5].0 += 1;
        let max_norm = (0..=n).map(|i| cv.point_norm(i)).fold(0.0f64, f64::max);
        let rhs = 0.25 * mu * mu * max_norm;
        if e_s < rhs - slack(e_s, rhs) {
            counts[5].1 += 1;
        }
    }

    counts
}

/// Checks the six exact inequalities on `trials` randomized instances
/// (random coefficients, dimensions, norms, and split points). Hypotheses
/// are tested first; conclusions are evaluated by exact enumeration.
pub fn lemma_suite(dist: &Distribution, trials: u64, seed: u64) -> Result<SuiteReport> {
    if dist.atoms().is_none() {
        return Err(Error::NotFiniteSupport);
    }
    assert!(trials >= 1, "at least one trial");
    let all = exec::map_indexed(trials as usize, |t| run_lemma_trial(dist, seed, t as u64));
    let mut totals: TrialCounts = Default::default();
    for counts in all {
        for (slot, c) in totals.iter_mut().zip(counts) {
            slot.0 += c.0;
            slot.1 += c.1;
        }
    }
    let lemmas: Vec<LemmaReport> = LEMMA_NAMES
        .iter()
        .zip(totals)
        .map(|(&name, (met, viol))| LemmaReport {
            name,
            hypothesis_met: met,
            violations: viol,
        })
        .collect();
    let total_violations = lemmas.iter().map(|l| l.violations).sum();
    Ok(SuiteReport {
        trials,
        seed,
        lemmas,
        total_violations,
    })
}
