//! Nonnegative mean-one factor laws, product-path sampling, and the moment
//! functionals feeding the certificates.
//!
//! A [`Distribution`] is one of three kinds: a finite atom table, the
//! built-in `1 + cos(Y)` law with `Y` uniform on `[0, 2π)`, or an opaque
//! seeded sampler. The functionals of interest are `λ = E√X`, `μ = E|X−1|`,
//! `p(ε) = P(X ≤ ε)` and `tail(A) = E|X−1|·1{X ≥ A}`; they are computed
//! analytically, exactly over atoms, or by seeded Monte Carlo, with the
//! route recorded per field.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, SAMPLE_BATCH};
use crate::rng::{stream_rng, subseed};

/// Default Monte Carlo budget for sampler-kind moment estimation.
pub const DEFAULT_MOMENT_SAMPLES: u64 = 1_000_000;

/// Mean-one z-score threshold for sampler validation.
pub const MEAN_Z_THRESHOLD: f64 = 5.0;

// Substream indices for the internal Monte Carlo passes of a sampler-kind
// distribution, so they never collide with caller-visible path streams.
const MOMENT_STREAM: u64 = 0x6d6f_6d73;
const TRUNCATION_STREAM: u64 = 0x7472_6e63;
const VALIDATE_STREAM: u64 = 0x7661_6c64;

/// One point mass of a finite-support law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Atom {
    pub value: f64,
    pub probability: f64,
}

/// Optional caller-supplied analytic moments for a sampler-kind law.
#[derive(Clone, Copy, Debug, Default)]
pub struct SamplerMoments {
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
}

type SampleFn = Arc<dyn Fn(&mut dyn RngCore) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Finite {
        atoms: Vec<Atom>,
    },
    OnePlusCosine,
    Sampler {
        seed: u64,
        gen: SampleFn,
        moments: SamplerMoments,
    },
}

/// A nonnegative mean-one factor law.
#[derive(Clone)]
pub struct Distribution {
    kind: Kind,
}

impl fmt::Debug for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Finite { atoms } => f.debug_struct("Finite").field("atoms", atoms).finish(),
            Kind::OnePlusCosine => f.write_str("OnePlusCosine"),
            Kind::Sampler { seed, .. } => f
                .debug_struct("Sampler")
                .field("seed", seed)
                .finish_non_exhaustive(),
        }
    }
}

/// How a profile field was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Provenance {
    Analytic,
    ExactFinite,
    MonteCarlo { samples: u64, seed: u64 },
}

/// Provenance of each moment functional.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FieldProvenance {
    pub lambda: Provenance,
    pub mu: Provenance,
    pub p_eps: Provenance,
    pub tail_a: Provenance,
}

/// The moment functionals of one factor law at a stored `(ε, A)`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MomentProfile {
    pub lambda: f64,
    pub mu: f64,
    pub p_eps: f64,
    pub tail_a: f64,
    pub eps: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub provenance: FieldProvenance,
}

/// One sampled trajectory `R₀..R_n` of the multiplicative walk.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProductPath {
    pub values: Vec<f64>,
    pub seed: u64,
}

impl ProductPath {
    /// Number of random factors (`values` has length `n + 1`).
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }
}

/// Outcome of one validation check.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub pass: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        CheckResult {
            pass,
            detail: detail.into(),
        }
    }
}

/// Pass/fail report for the nonnegative mean-one nondegenerate contract.
#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub nonnegative: CheckResult,
    pub mean_one: CheckResult,
    pub nondegenerate: CheckResult,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.nonnegative.pass && self.mean_one.pass && self.nondegenerate.pass
    }
}

// a plain struct keeps serde_json's line/column information, which tagged
// enums lose to content buffering
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DistributionSpec {
    kind: String,
    #[serde(default)]
    atoms: Option<Vec<(f64, f64)>>,
}

impl Distribution {
    /// Builds a finite-support law from `(value, probability)` pairs. Atoms
    /// with coinciding values are merged and the result is sorted ascending.
    pub fn finite(atoms: &[(f64, f64)]) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyInput("atom list"));
        }
        for &(value, probability) in atoms {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::NegativeValue(value));
            }
            if !probability.is_finite() || probability <= 0.0 || probability > 1.0 {
                return Err(Error::NonpositiveProbability(probability));
            }
        }
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        let mut sorted = atoms.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (value, probability) in sorted {
            match merged.last_mut() {
                Some(last) if last.value == value => last.probability += probability,
                _ => merged.push(Atom { value, probability }),
            }
        }
        let total: f64 = merged.iter().map(|a| a.probability).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::ProbabilitySumMismatch(total));
        }
        let mean: f64 = merged.iter().map(|a| a.probability * a.value).sum();
        if (mean - 1.0).abs() > 1e-9 {
            return Err(Error::MeanNotOne(mean));
        }
        Ok(Distribution {
            kind: Kind::Finite { atoms: merged },
        })
    }

    /// The law of `1 + cos(Y)` with `Y` uniform on `[0, 2π)`. Supported on
    /// `[0, 2]` with mean one; all moment functionals have closed forms.
    pub fn one_plus_cosine() -> Self {
        Distribution {
            kind: Kind::OnePlusCosine,
        }
    }

    /// Wraps an opaque seeded generator. `moments` may supply analytic
    /// `λ`/`μ`; anything missing is estimated by seeded Monte Carlo.
    pub fn sampler<F>(seed: u64, gen: F, moments: SamplerMoments) -> Self
    where
        F: Fn(&mut dyn RngCore) -> f64 + Send + Sync + 'static,
    {
        Distribution {
            kind: Kind::Sampler {
                seed,
                gen: Arc::new(gen),
                moments,
            },
        }
    }

    /// Parses the JSON spec form: `{"kind":"finite","atoms":[[0,0.5],[2,0.5]]}`
    /// or `{"kind":"one_plus_cosine"}`.
    pub fn from_spec_json(s: &str) -> Result<Self> {
        let spec: DistributionSpec =
            serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        match spec.kind.as_str() {
            "finite" => {
                let atoms = spec.atoms.ok_or_else(|| {
                    Error::Parse("field `atoms` is required for kind \"finite\"".to_string())
                })?;
                Self::finite(&atoms)
            }
            "one_plus_cosine" => {
                if spec.atoms.is_some() {
                    return Err(Error::Parse(
                        "field `atoms` is not allowed for kind \"one_plus_cosine\"".to_string(),
                    ));
                }
                Ok(Self::one_plus_cosine())
            }
            other => Err(Error::Parse(format!(
                "unknown kind `{other}`, expected \"finite\" or \"one_plus_cosine\""
            ))),
        }
    }

    /// The atom table of a finite-support law.
    pub fn atoms(&self) -> Option<&[Atom]> {
        match &self.kind {
            Kind::Finite { atoms } => Some(atoms),
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match &self.kind {
            Kind::Finite { .. } => "finite",
            Kind::OnePlusCosine => "one_plus_cosine",
            Kind::Sampler { .. } => "sampler",
        }
    }

    /// `P(X = 1) = 1`, decidable exactly for a finite law. The built-in
    /// cosine law is never degenerate; a sampler is assumed nondegenerate
    /// (validation probes it empirically).
    pub fn is_degenerate(&self) -> bool {
        match &self.kind {
            Kind::Finite { atoms } => atoms.len() == 1 && atoms[0].value == 1.0,
            _ => false,
        }
    }

    /// Draws one factor.
    pub fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        match &self.kind {
            Kind::Finite { atoms } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for atom in atoms {
                    acc += atom.probability;
                    if u < acc {
                        return atom.value;
                    }
                }
                atoms.last().expect("nonempty").value
            }
            Kind::OnePlusCosine => {
                let u: f64 = rng.random();
                1.0 + (TAU * u).cos()
            }
            Kind::Sampler { gen, .. } => gen(rng),
        }
    }

    /// Checks nonnegativity, mean one, and nondegeneracy. Finite and cosine
    /// laws are checked exactly; a sampler is probed with 10⁶ seeded draws
    /// and a z-score test on the mean.
    pub fn validate(&self) -> ValidationReport {
        match &self.kind {
            Kind::Finite { atoms } => {
                let neg = atoms.iter().find(|a| a.value < 0.0);
                let mean: f64 = atoms.iter().map(|a| a.probability * a.value).sum();
                ValidationReport {
                    nonnegative: CheckResult::new(
                        neg.is_none(),
                        "all atom values nonnegative (exact)",
                    ),
                    mean_one: CheckResult::new(
                        (mean - 1.0).abs() <= 1e-9,
                        format!("exact weighted mean = {mean}"),
                    ),
                    nondegenerate: CheckResult::new(
                        !self.is_degenerate(),
                        if self.is_degenerate() {
                            "P(X = 1) = 1".to_string()
                        } else {
                            "P(X = 1) < 1 (exact)".to_string()
                        },
                    ),
                }
            }
            Kind::OnePlusCosine => ValidationReport {
                nonnegative: CheckResult::new(true, "supported on [0, 2]"),
                mean_one: CheckResult::new(true, "E(1 + cos Y) = 1 analytically"),
                nondegenerate: CheckResult::new(true, "continuous law, P(X = 1) = 0"),
            },
            Kind::Sampler { seed, .. } => {
                let samples = DEFAULT_MOMENT_SAMPLES;
                let stream = subseed(*seed, VALIDATE_STREAM);
                let (mut sum, mut sumsq) = (0.0, 0.0);
                let (mut negatives, mut ones) = (0u64, 0u64);
                for part in self.sample_stats(stream, samples) {
                    sum += part.sum;
                    sumsq += part.sumsq;
                    negatives += part.negatives;
                    ones += part.ones;
                }
                let n = samples as f64;
                let mean = sum / n;
                let var = ((sumsq - sum * sum / n) / (n - 1.0)).max(0.0);
                let se = (var / n).sqrt();
                let z = if se > 0.0 {
                    (mean - 1.0).abs() / se
                } else {
                    f64::INFINITY
                };
                let mean_pass = if se > 0.0 {
                    z <= MEAN_Z_THRESHOLD
                } else {
                    (mean - 1.0).abs() <= 1e-9
                };
                ValidationReport {
                    nonnegative: CheckResult::new(
                        negatives == 0,
                        format!("{negatives} negative draws in {samples}"),
                    ),
                    mean_one: CheckResult::new(
                        mean_pass,
                        format!(
                            "empirical mean {mean:.6} over {samples} draws, |z| = {z:.2} \
                             (threshold {MEAN_Z_THRESHOLD})"
                        ),
                    ),
                    nondegenerate: CheckResult::new(
                        ones < samples,
                        format!("{ones} of {samples} draws equal 1 exactly"),
                    ),
                }
            }
        }
    }

    /// Computes `(λ, μ, p(ε), tail(A))` with per-field provenance.
    pub fn moment_profile(&self, eps: f64, a: f64) -> Result<MomentProfile> {
        assert!(eps > 0.0 && a > 0.0, "eps and A must be positive");
        let profile = match &self.kind {
            Kind::Finite { atoms } => {
                let lambda: f64 = atoms.iter().map(|t| t.probability * t.value.sqrt()).sum();
                let mu: f64 = atoms
                    .iter()
                    .map(|t| t.probability * (t.value - 1.0).abs())
                    .sum();
                let p_eps: f64 = atoms
                    .iter()
                    .filter(|t| t.value <= eps)
                    .map(|t| t.probability)
                    .sum();
                let tail_a: f64 = atoms
                    .iter()
                    .filter(|t| t.value >= a)
                    .map(|t| t.probability * (t.value - 1.0).abs())
                    .sum();
                let exact = Provenance::ExactFinite;
                MomentProfile {
                    lambda,
                    mu,
                    p_eps,
                    tail_a,
                    eps,
                    a,
                    provenance: FieldProvenance {
                        lambda: exact,
                        mu: exact,
                        p_eps: exact,
                        tail_a: exact,
                    },
                }
            }
            Kind::OnePlusCosine => {
                let analytic = Provenance::Analytic;
                MomentProfile {
                    lambda: cosine_lambda(),
                    mu: cosine_mu(),
                    p_eps: cosine_p_le(eps),
                    tail_a: cosine_tail(a),
                    eps,
                    a,
                    provenance: FieldProvenance {
                        lambda: analytic,
                        mu: analytic,
                        p_eps: analytic,
                        tail_a: analytic,
                    },
                }
            }
            Kind::Sampler { seed, moments, .. } => {
                let samples = DEFAULT_MOMENT_SAMPLES;
                let stream = subseed(*seed, MOMENT_STREAM);
                let (mut s_sqrt, mut s_mu, mut s_p, mut s_tail) = (0.0, 0.0, 0.0, 0.0);
                for part in self.moment_sums(stream, samples, eps, a) {
                    s_sqrt += part.0;
                    s_mu += part.1;
                    s_p += part.2;
                    s_tail += part.3;
                }
                let n = samples as f64;
                let mc = Provenance::MonteCarlo {
                    samples,
                    seed: stream,
                };
                let (lambda, lambda_prov) = match moments.lambda {
                    Some(l) => (l, Provenance::Analytic),
                    None => (s_sqrt / n, mc),
                };
                let (mu, mu_prov) = match moments.mu {
                    Some(m) => (m, Provenance::Analytic),
                    None => (s_mu / n, mc),
                };
                MomentProfile {
                    lambda,
                    mu,
                    p_eps: s_p / n,
                    tail_a: s_tail / n,
                    eps,
                    a,
                    provenance: FieldProvenance {
                        lambda: lambda_prov,
                        mu: mu_prov,
                        p_eps: mc,
                        tail_a: mc,
                    },
                }
            }
        };
        if profile.mu <= 1e-9 {
            return Err(Error::DegenerateDistribution);
        }
        Ok(profile)
    }

    /// Smallest truncation level `A` from the candidate grid with
    /// `tail(A) ≤ μ/4`. Finite laws probe their support values plus
    /// `max + 1`; the other kinds probe the geometric grid `1, 2, 4, …`.
    pub fn choose_truncation(&self, mu: f64) -> Result<f64> {
        if mu <= 0.0 {
            return Err(Error::NonpositiveMu(mu));
        }
        let bound = mu / 4.0;
        match &self.kind {
            Kind::Finite { atoms } => {
                let mut candidates: Vec<f64> = atoms.iter().map(|t| t.value).collect();
                candidates.push(atoms.last().expect("nonempty").value + 1.0);
                for a in candidates {
                    if a <= 0.0 {
                        continue;
                    }
                    let tail: f64 = atoms
                        .iter()
                        .filter(|t| t.value >= a)
                        .map(|t| t.probability * (t.value - 1.0).abs())
                        .sum();
                    if tail <= bound {
                        return Ok(a);
                    }
                }
                // max-support + 1 always has an empty tail
                unreachable!("the final candidate has tail 0");
            }
            Kind::OnePlusCosine => {
                for j in 0..=40i32 {
                    let a = 2f64.powi(j);
                    if cosine_tail(a) <= bound {
                        return Ok(a);
                    }
                }
                unreachable!("tail(2) = 0 for the cosine law");
            }
            Kind::Sampler { seed, .. } => {
                let samples = DEFAULT_MOMENT_SAMPLES;
                let stream = subseed(*seed, TRUNCATION_STREAM);
                let draws = self.draw_block(stream, samples);
                for j in 0..=40u32 {
                    let a = 2f64.powi(j as i32);
                    let tail: f64 = draws
                        .iter()
                        .filter(|&&x| x >= a)
                        .map(|&x| (x - 1.0).abs())
                        .sum::<f64>()
                        / samples as f64;
                    if tail <= bound {
                        return Ok(a);
                    }
                }
                Err(Error::NoFiniteTruncation)
            }
        }
    }

    /// Samples `count` independent paths `R₀..R_n`. Path `j` uses substream
    /// `j` of `seed`, so identical inputs give bit-identical output whatever
    /// the worker count.
    pub fn sample_products(&self, n: usize, seed: u64, count: usize) -> Vec<ProductPath> {
        assert!(count >= 1, "count must be at least 1");
        exec::map_indexed(count, |j| {
            let path_seed = subseed(seed, j as u64);
            let mut rng = stream_rng(seed, j as u64);
            let mut values = Vec::with_capacity(n + 1);
            let mut r = 1.0;
            values.push(r);
            for _ in 0..n {
                r *= self.sample(&mut rng);
                values.push(r);
            }
            ProductPath {
                values,
                seed: path_seed,
            }
        })
    }

    /// Per-batch draw statistics for validation.
    fn sample_stats(&self, stream: u64, samples: u64) -> Vec<DrawStats> {
        exec::map_batched(samples as usize, SAMPLE_BATCH, |range| {
            let mut rng = stream_rng(stream, (range.start / SAMPLE_BATCH) as u64);
            let mut out = DrawStats::default();
            for _ in range {
                let x = self.sample(&mut rng);
                out.sum += x;
                out.sumsq += x * x;
                if x < 0.0 {
                    out.negatives += 1;
                }
                if x == 1.0 {
                    out.ones += 1;
                }
            }
            out
        })
    }

    /// Per-batch `(Σ√x, Σ|x−1|, #{x ≤ ε}, Σ|x−1|1{x ≥ A})`.
    fn moment_sums(
        &self,
        stream: u64,
        samples: u64,
        eps: f64,
        a: f64,
    ) -> Vec<(f64, f64, f64, f64)> {
        exec::map_batched(samples as usize, SAMPLE_BATCH, |range| {
            let mut rng = stream_rng(stream, (range.start / SAMPLE_BATCH) as u64);
            let (mut s_sqrt, mut s_mu, mut s_p, mut s_tail) = (0.0, 0.0, 0.0, 0.0);
            for _ in range {
                let x = self.sample(&mut rng);
                s_sqrt += x.max(0.0).sqrt();
                let dev = (x - 1.0).abs();
                s_mu += dev;
                if x <= eps {
                    s_p += 1.0;
                }
                if x >= a {
                    s_tail += dev;
                }
            }
            (s_sqrt, s_mu, s_p, s_tail)
        })
    }

    fn draw_block(&self, stream: u64, samples: u64) -> Vec<f64> {
        let batches = exec::map_batched(samples as usize, SAMPLE_BATCH, |range| {
            let mut rng = stream_rng(stream, (range.start / SAMPLE_BATCH) as u64);
            range.map(|_| self.sample(&mut rng)).collect::<Vec<f64>>()
        });
        batches.concat()
    }
}

#[derive(Default)]
struct DrawStats {
    sum: f64,
    sumsq: f64,
    negatives: u64,
    ones: u64,
}

/// `E√(1 + cos Y) = 2√2/π`.
pub fn cosine_lambda() -> f64 {
    2.0 * std::f64::consts::SQRT_2 / PI
}

/// `E|cos Y| = 2/π`.
pub fn cosine_mu() -> f64 {
    2.0 / PI
}

/// `P(1 + cos Y ≤ ε) = arccos(1 − ε)/π` for `ε ∈ (0, 2)`.
pub fn cosine_p_le(eps: f64) -> f64 {
    if eps <= 0.0 {
        0.0
    } else if eps >= 2.0 {
        1.0
    } else {
        (1.0 - eps).acos() / PI
    }
}

/// `E|cos Y|·1{1 + cos Y ≥ A}` in closed form.
pub fn cosine_tail(a: f64) -> f64 {
    if a <= 0.0 {
        return cosine_mu();
    }
    if a >= 2.0 {
        return 0.0;
    }
    let s = (1.0 - (a - 1.0) * (a - 1.0)).max(0.0).sqrt();
    if a <= 1.0 {
        (2.0 - s) / PI
    } else {
        s / PI
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_point() -> Distribution {
        Distribution::finite(&[(0.0, 0.5), (2.0, 0.5)]).unwrap()
    }

    #[test]
    fn finite_constructor_validates() {
        assert!(two_point().validate().all_pass());
        assert!(matches!(
            Distribution::finite(&[(-0.1, 0.5), (2.1, 0.5)]),
            Err(Error::NegativeValue(_))
        ));
        assert!(matches!(
            Distribution::finite(&[(0.0, 0.5), (2.0, 0.4)]),
            Err(Error::ProbabilitySumMismatch(_))
        ));
        assert!(matches!(
            Distribution::finite(&[(0.0, 0.5), (3.0, 0.5)]),
            Err(Error::MeanNotOne(_))
        ));
        assert!(matches!(
            Distribution::finite(&[(1.0, 0.0), (1.0, 1.0)]),
            Err(Error::NonpositiveProbability(_))
        ));
    }

    #[test]
    fn atoms_merge_and_sort() {
        let d = Distribution::finite(&[(2.0, 0.25), (0.0, 0.5), (2.0, 0.25)]).unwrap();
        let atoms = d.atoms().unwrap();
        assert_eq!(atoms.len(), 2);
        assert_eq!(atoms[0].value, 0.0);
        assert_eq!(atoms[1].value, 2.0);
        assert_abs_diff_eq!(atoms[1].probability, 0.5, epsilon = 0.0);
    }

    #[test]
    fn degenerate_point_mass_is_constructible_but_flagged() {
        let d = Distribution::finite(&[(1.0, 1.0)]).unwrap();
        assert!(d.is_degenerate());
        let report = d.validate();
        assert!(report.nonnegative.pass && report.mean_one.pass);
        assert!(!report.nondegenerate.pass);
        assert!(matches!(
            d.moment_profile(1e-3, 2.0),
            Err(Error::DegenerateDistribution)
        ));
    }

    #[test]
    fn symmetric_half_spread_law_is_valid() {
        let d = Distribution::finite(&[(0.5, 0.5), (1.5, 0.5)]).unwrap();
        assert!(d.validate().all_pass());
        let p = d.moment_profile(1e-6, 2.0).unwrap();
        assert_abs_diff_eq!(p.mu, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(
            p.lambda,
            (0.5f64.sqrt() + 1.5f64.sqrt()) / 2.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn cosine_moments_match_closed_forms() {
        let d = Distribution::one_plus_cosine();
        let p = d.moment_profile(0.02, 2.0).unwrap();
        assert_abs_diff_eq!(p.lambda, 2.0 * 2f64.sqrt() / PI, epsilon = 1e-15);
        assert_abs_diff_eq!(p.mu, 2.0 / PI, epsilon = 1e-15);
        assert_abs_diff_eq!(p.p_eps, (1.0f64 - 0.02).acos() / PI, epsilon = 1e-15);
        assert_eq!(p.tail_a, 0.0);
        // the square-root lower bound for the near-zero mass
        assert!(p.p_eps >= (2.0 * 0.02f64).sqrt() / PI);
    }

    #[test]
    fn two_point_profile_by_hand() {
        let p = two_point().moment_profile(1e-3, 2.0).unwrap();
        assert_abs_diff_eq!(p.lambda, 2f64.sqrt() / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.mu, 1.0, epsilon = 0.0);
        assert_abs_diff_eq!(p.p_eps, 0.5, epsilon = 0.0);
        assert_abs_diff_eq!(p.tail_a, 0.5, epsilon = 0.0);
    }

    #[test]
    fn profile_matches_reverse_order_resummation() {
        let d = Distribution::finite(&[(0.0, 0.2), (0.5, 0.3), (1.5, 0.3), (2.0, 0.2)]).unwrap();
        let p = d.moment_profile(0.6, 1.4).unwrap();
        let atoms = d.atoms().unwrap();
        let lambda_rev: f64 = atoms
            .iter()
            .rev()
            .map(|t| t.probability * t.value.sqrt())
            .sum();
        let mu_rev: f64 = atoms
            .iter()
            .rev()
            .map(|t| t.probability * (t.value - 1.0).abs())
            .sum();
        assert_abs_diff_eq!(p.lambda, lambda_rev, epsilon = 1e-12);
        assert_abs_diff_eq!(p.mu, mu_rev, epsilon = 1e-12);
    }

    #[test]
    fn p_monotone_in_eps_and_tail_monotone_in_a() {
        let d = Distribution::one_plus_cosine();
        let mut last_p = -1.0;
        let mut last_tail = f64::INFINITY;
        for i in 1..40 {
            let eps = 0.05 * i as f64;
            let prof = d.moment_profile(eps, eps).unwrap();
            assert!(prof.p_eps >= last_p);
            assert!(prof.tail_a <= last_tail);
            last_p = prof.p_eps;
            last_tail = prof.tail_a;
        }
    }

    #[test]
    fn truncation_levels_match_hand_arithmetic() {
        assert_eq!(
            Distribution::one_plus_cosine()
                .choose_truncation(cosine_mu())
                .unwrap(),
            2.0
        );
        // tail(2) = 0.5 > 1/4, so the next candidate max+1 = 3 wins
        assert_eq!(two_point().choose_truncation(1.0).unwrap(), 3.0);
        let heavy = Distribution::finite(&[(0.0, 0.9), (10.0, 0.1)]).unwrap();
        let mu = heavy.moment_profile(1e-3, 1.0).unwrap().mu;
        assert_abs_diff_eq!(mu, 1.8, epsilon = 1e-12);
        assert_eq!(heavy.choose_truncation(mu).unwrap(), 11.0);
    }

    #[test]
    fn paths_start_at_one_and_multiply() {
        let d = two_point();
        let paths = d.sample_products(3, 7, 64);
        assert_eq!(paths.len(), 64);
        for path in &paths {
            assert_eq!(path.values[0], 1.0);
            assert_eq!(path.n(), 3);
            for v in &path.values {
                assert!([0.0, 1.0, 2.0, 4.0, 8.0].contains(v));
            }
            // zeros absorb
            if let Some(first_zero) = path.values.iter().position(|&v| v == 0.0) {
                assert!(path.values[first_zero..].iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn continuous_paths_obey_the_product_recurrence() {
        // each ratio Rᵢ/Rᵢ₋₁ must be a draw from the factor law, here [0, 2]
        let d = Distribution::one_plus_cosine();
        for path in d.sample_products(8, 21, 50) {
            assert_eq!(path.values[0], 1.0);
            for w in path.values.windows(2) {
                assert!(w[1] >= 0.0);
                if w[0] > 0.0 {
                    let factor = w[1] / w[0];
                    assert!((0.0..=2.0 + 1e-12).contains(&factor));
                }
            }
        }
    }

    #[test]
    fn zero_length_paths_are_constant_one() {
        let d = Distribution::one_plus_cosine();
        for path in d.sample_products(0, 3, 8) {
            assert_eq!(path.values, vec![1.0]);
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let d = Distribution::one_plus_cosine();
        let a = d.sample_products(5, 99, 100);
        let b = d.sample_products(5, 99, 100);
        assert_eq!(a, b);
    }

    #[test]
    fn sampler_kind_estimates_moments() {
        // same law as one_plus_cosine but forced through the Monte Carlo path
        let d = Distribution::sampler(
            12345,
            |rng: &mut dyn RngCore| {
                let mut buf = [0u8; 8];
                rng.fill_bytes(&mut buf);
                let u = (u64::from_le_bytes(buf) >> 11) as f64 / (1u64 << 53) as f64;
                1.0 + (TAU * u).cos()
            },
            SamplerMoments::default(),
        );
        let p = d.moment_profile(0.02, 2.0).unwrap();
        assert!(matches!(p.provenance.lambda, Provenance::MonteCarlo { .. }));
        assert_abs_diff_eq!(p.lambda, cosine_lambda(), epsilon = 3e-3);
        assert_abs_diff_eq!(p.mu, cosine_mu(), epsilon = 3e-3);
    }

    #[test]
    fn biased_sampler_fails_mean_check() {
        let d = Distribution::sampler(
            7,
            |rng: &mut dyn RngCore| {
                let mut buf = [0u8; 8];
                rng.fill_bytes(&mut buf);
                let u = (u64::from_le_bytes(buf) >> 11) as f64 / (1u64 << 53) as f64;
                1.1 * (1.0 + (TAU * u).cos())
            },
            SamplerMoments::default(),
        );
        let report = d.validate();
        assert!(report.nonnegative.pass);
        assert!(!report.mean_one.pass);
    }

    #[test]
    fn cosine_empirical_mean_within_five_standard_errors() {
        let d = Distribution::one_plus_cosine();
        let n = 1_000_000usize;
        let paths = d.sample_products(1, 0, n);
        let sum: f64 = paths.iter().map(|p| p.values[1]).sum();
        let sumsq: f64 = paths.iter().map(|p| p.values[1] * p.values[1]).sum();
        let mean = sum / n as f64;
        let var = (sumsq - sum * sum / n as f64) / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        assert!((mean - 1.0).abs() <= 5.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn spec_json_round_trips() {
        let d =
            Distribution::from_spec_json(r#"{"kind":"finite","atoms":[[0,0.5],[2,0.5]]}"#).unwrap();
        assert_eq!(d.atoms().unwrap().len(), 2);
        assert!(Distribution::from_spec_json(r#"{"kind":"one_plus_cosine"}"#).is_ok());
        let err = Distribution::from_spec_json(r#"{"kind":"gaussian"}"#).unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
        let err = Distribution::from_spec_json("{\n  \"kind\": \"finite\",\n  \"atoms\": 3\n}")
            .unwrap_err();
        let msg = format!("{err}");
        assert!(
            msg.contains("line"),
            "diagnostic should cite the location: {msg}"
        );
    }
}
