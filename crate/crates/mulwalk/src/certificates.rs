//! Certified lower-bound constants for the L1-to-ℓ1 comparison, with the
//! internal ledgers that make every induction step auditable.
//!
//! Two routes are provided. The `thm1` route needs mass near zero: with
//! `p = P(X ≤ ε)` at the default `ε = (1−λ)²·min{μ,1}/256` it certifies
//! `c = min{μ,1}·p/64`. The `thm3` route only needs a truncation level `A`
//! with `tail(A) ≤ μ/4`: it certifies `c = μ³/(512k)`, where `k` is the
//! smallest integer with `2¹⁷k λ^{2k−2} A ≤ μ³(1−λ)²`. Ledgers carry the
//! per-index damage terms `c_i` together with `α, β`; the positivity slack
//! `β − c_i ≥ β/2` is what both certificates ultimately rest on.

use serde::Serialize;

use crate::distributions::{Distribution, MomentProfile};
use crate::error::{Error, Result};

/// Hard cap for the k-solver scan.
pub const K_LIMIT: u32 = 1_000_000;

/// How many leading `c_i` a certificate embeds in its ledger.
const THM1_HEAD: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Theorem {
    Thm1,
    Thm3,
}

/// Internal constants of one certificate: `α`, `β`, the leading damage
/// terms `c_1, c_2, …`, and their supremum over all indices.
#[derive(Clone, Debug, Serialize)]
pub struct Ledger {
    pub alpha: f64,
    pub beta: f64,
    pub c_head: Vec<f64>,
    pub c_sup: f64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum CertificateInputs {
    Thm1 {
        lambda: f64,
        mu: f64,
        p: f64,
        eps: f64,
    },
    Thm3 {
        lambda: f64,
        mu: f64,
        #[serde(rename = "A")]
        a: f64,
        k: u32,
    },
}

/// A machine-checked instantiation of one lower-bound constant.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub theorem: Theorem,
    pub c: f64,
    pub inputs: CertificateInputs,
    pub ledger: Ledger,
    pub applicable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..1.0).contains(&lambda) || !lambda.is_finite() {
        return Err(Error::LambdaOutOfRange(lambda));
    }
    Ok(())
}

fn check_mu(mu: f64) -> Result<()> {
    if !mu.is_finite() || mu <= 0.0 {
        return Err(Error::NonpositiveMu(mu));
    }
    Ok(())
}

fn check_truncation(a: f64) -> Result<()> {
    if !a.is_finite() || a <= 0.0 {
        return Err(Error::NonpositiveTruncation(a));
    }
    Ok(())
}

/// The default small-value threshold `ε = (1−λ)²·min{μ,1}/256`; always
/// below 1/8.
pub fn epsilon_default(lambda: f64, mu: f64) -> Result<f64> {
    check_lambda(lambda)?;
    check_mu(mu)?;
    let gap = 1.0 - lambda;
    Ok(gap * gap * mu.min(1.0) / 256.0)
}

/// Ledger of the small-mass induction: `α = p/16`,
/// `β = min{α/2, μp/32}`, and `c_k = (4pε/(1−λ))·(1−λᵏ)/(1−λ)` in closed
/// form. Returns `(α, β, c_1..c_n)`.
pub fn ledger_thm1(
    p: f64,
    mu: f64,
    lambda: f64,
    eps: f64,
    n: usize,
) -> Result<(f64, f64, Vec<f64>)> {
    check_lambda(lambda)?;
    check_mu(mu)?;
    if !(eps > 0.0 && eps < 0.125) {
        return Err(Error::EpsTooLarge(eps));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::NonpositiveProbability(p));
    }
    let alpha = p / 16.0;
    let beta = (alpha / 2.0).min(mu * p / 32.0);
    let factor = 4.0 * p * eps / (1.0 - lambda);
    let c = (1..=n)
        .map(|k| factor * (1.0 - lambda.powi(k as i32)) / (1.0 - lambda))
        .collect();
    Ok((alpha, beta, c))
}

/// Certifies `c = min{μ,1}·p(ε)/64` from a profile taken at the default
/// `ε`. Inapplicable (with reason) when the law has no mass at or below
/// `ε`, which is the gate for laws bounded away from zero.
pub fn certify_thm1(profile: &MomentProfile) -> Result<Certificate> {
    check_mu(profile.mu)?;
    check_lambda(profile.lambda)?;
    let expected = epsilon_default(profile.lambda, profile.mu)?;
    if (profile.eps - expected).abs() > 1e-12 * expected {
        return Err(Error::ProfileEpsMismatch {
            found: profile.eps,
            expected,
        });
    }
    let p = profile.p_eps;
    let c = profile.mu.min(1.0) * p / 64.0;
    let applicable = p > 0.0;
    let ledger = if applicable {
        let (alpha, beta, c_head) =
            ledger_thm1(p, profile.mu, profile.lambda, profile.eps, THM1_HEAD)?;
        let gap = 1.0 - profile.lambda;
        let c_sup = 4.0 * p * profile.eps / (gap * gap);
        Ledger {
            alpha,
            beta,
            c_head,
            c_sup,
        }
    } else {
        Ledger {
            alpha: 0.0,
            beta: 0.0,
            c_head: Vec::new(),
            c_sup: 0.0,
        }
    };
    Ok(Certificate {
        theorem: Theorem::Thm1,
        c,
        inputs: CertificateInputs::Thm1 {
            lambda: profile.lambda,
            mu: profile.mu,
            p,
            eps: profile.eps,
        },
        ledger,
        applicable,
        reason: if applicable {
            None
        } else {
            Some("p(eps) = 0".to_string())
        },
    })
}

// ---------------------------------------------------------------------------
// Compensated evaluation of k·λ^{2k−2}·2¹⁷·A vs μ³(1−λ)².
//
// λ^{2k−2} underflows f64 long before the inequality stops being meaningful,
// so the scan runs in log space; candidates that land within the log-space
// noise band get re-judged with double-double arithmetic (exact products via
// fused multiply-add, plus a separate power-of-two exponent), which is
// faithful to the f64 inputs to ~1e-30 relative.
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
struct Scaled {
    hi: f64,
    lo: f64,
    exp: i64,
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl Scaled {
    fn from(x: f64) -> Self {
        Scaled {
            hi: x,
            lo: 0.0,
            exp: 0,
        }
        .normalized()
    }

    /// Exact difference `a − b` for modest inputs.
    fn from_diff(a: f64, b: f64) -> Self {
        let s = a - b;
        let bb = a - s;
        let err = (a - (s + bb)) + (bb - b);
        Scaled {
            hi: s,
            lo: err,
            exp: 0,
        }
        .normalized()
    }

    /// Rescales so that `|hi| ∈ [1, 2)`, folding powers of two into `exp`.
    fn normalized(self) -> Self {
        assert!(self.hi > 0.0, "scaled values are positive by construction");
        let e = self.hi.log2().floor() as i32;
        let scale = 2f64.powi(-e);
        Scaled {
            hi: self.hi * scale,
            lo: self.lo * scale,
            exp: self.exp + i64::from(e),
        }
    }

    fn mul(self, other: Scaled) -> Self {
        let p = self.hi * other.hi;
        let err = self.hi.mul_add(other.hi, -p);
        let t = self.hi * other.lo + self.lo * other.hi + err;
        let (hi, lo) = quick_two_sum(p, t);
        Scaled {
            hi,
            lo,
            exp: self.exp + other.exp,
        }
        .normalized()
    }

    fn powi(self, mut e: u64) -> Self {
        let mut base = self;
        let mut acc = Scaled::from(1.0);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(base);
            }
            base = base.mul(base);
            e >>= 1;
        }
        acc
    }

    fn le(self, other: Scaled) -> bool {
        if self.exp != other.exp {
            return self.exp < other.exp;
        }
        // both mantissas sit in [1, 2), so hi − hi is exact
        let head = self.hi - other.hi;
        head + (self.lo - other.lo) <= 0.0
    }
}

/// Whether `k` satisfies the geometric-decay condition
/// `2¹⁷·k·λ^{2k−2}·A ≤ μ³·(1−λ)²`, judged in compensated arithmetic.
pub fn decay_condition_holds(lambda: f64, mu: f64, a: f64, k: u32) -> Result<bool> {
    check_lambda(lambda)?;
    check_mu(mu)?;
    check_truncation(a)?;
    if k < 1 {
        return Err(Error::InvalidK(k));
    }
    if lambda == 0.0 {
        // λ^{2k−2} is 1 at k = 1 and 0 afterwards
        let lhs_zero = k > 1;
        let lhs = 131072.0 * k as f64 * a;
        let rhs = mu * mu * mu * (1.0 - lambda) * (1.0 - lambda);
        return Ok(lhs_zero || lhs <= rhs);
    }
    let lam = Scaled::from(lambda);
    let mut lhs = lam.powi(2 * u64::from(k) - 2);
    lhs = lhs.mul(Scaled::from(k as f64));
    lhs = lhs.mul(Scaled::from(a));
    lhs.exp += 17;
    let gap = Scaled::from_diff(1.0, lambda);
    let m = Scaled::from(mu);
    let rhs = m.mul(m).mul(m).mul(gap).mul(gap);
    Ok(lhs.le(rhs))
}

/// Smallest positive integer `k` with `2¹⁷k λ^{2k−2} A ≤ μ³(1−λ)²`. Scans in
/// log space and settles near-ties with [`decay_condition_holds`]; errors
/// with `KOverflow` past 10⁶.
pub fn find_k(lambda: f64, mu: f64, a: f64) -> Result<u32> {
    check_lambda(lambda)?;
    check_mu(mu)?;
    check_truncation(a)?;
    if lambda == 0.0 {
        return Ok(if decay_condition_holds(lambda, mu, a, 1)? {
            1
        } else {
            2
        });
    }
    let ln_lambda = lambda.ln();
    let target = 3.0 * mu.ln() + 2.0 * (-lambda).ln_1p() - 17.0 * std::f64::consts::LN_2 - a.ln();
    for k in 1..=K_LIMIT {
        let lhs = (k as f64).ln() + (2.0 * k as f64 - 2.0) * ln_lambda;
        let holds = if (lhs - target).abs() <= 1e-9 * (1.0 + lhs.abs() + target.abs()) {
            decay_condition_holds(lambda, mu, a, k)?
        } else {
            lhs <= target
        };
        if holds {
            return Ok(k);
        }
    }
    Err(Error::KOverflow(K_LIMIT))
}

/// Ledger of the truncated induction: `α = μ/64`, `β = μ²α/(4k)`, `c_i = 0`
/// below `k`, and the closed-form geometric sum
/// `c_i = (2⁸A/(1−λ))·λ^{2k−2}·(1−λ^{i−k+1})/(1−λ)` from `i = k` on.
/// Returns `(α, β, c_1..c_n)`.
pub fn ledger_thm3(mu: f64, lambda: f64, a: f64, k: u32, n: usize) -> Result<(f64, f64, Vec<f64>)> {
    if k < 1 {
        return Err(Error::InvalidK(k));
    }
    check_lambda(lambda)?;
    check_mu(mu)?;
    let alpha = mu / 64.0;
    let beta = mu * mu * alpha / (4.0 * k as f64);
    let gap = 1.0 - lambda;
    let lead = 256.0 * a * ((2.0 * k as f64 - 2.0) * lambda.ln()).exp() / gap;
    let c = (1..=n)
        .map(|i| {
            if (i as u32) < k {
                0.0
            } else {
                let len = (i as u32 - k + 1) as i32;
                lead * (1.0 - lambda.powi(len)) / gap
            }
        })
        .collect();
    Ok((alpha, beta, c))
}

/// Certifies `c = μ³/(512k)` from a profile whose truncation level passes
/// the quarter-tail test; `k` comes from [`find_k`].
pub fn certify_thm3(profile: &MomentProfile) -> Result<Certificate> {
    check_mu(profile.mu)?;
    check_lambda(profile.lambda)?;
    let bound = profile.mu / 4.0;
    if profile.tail_a > bound * (1.0 + 1e-12) {
        return Err(Error::TruncationInvalid {
            tail: profile.tail_a,
            bound,
        });
    }
    let k = find_k(profile.lambda, profile.mu, profile.a)?;
    let c = profile.mu.powi(3) / (512.0 * k as f64);
    let head = (k as usize + 8).min(128);
    let (alpha, beta, c_head) = ledger_thm3(profile.mu, profile.lambda, profile.a, k, head)?;
    let gap = 1.0 - profile.lambda;
    let c_sup =
        256.0 * profile.a * ((2.0 * k as f64 - 2.0) * profile.lambda.ln()).exp() / (gap * gap);
    Ok(Certificate {
        theorem: Theorem::Thm3,
        c,
        inputs: CertificateInputs::Thm3 {
            lambda: profile.lambda,
            mu: profile.mu,
            a: profile.a,
            k,
        },
        ledger: Ledger {
            alpha,
            beta,
            c_head,
            c_sup,
        },
        applicable: true,
        reason: None,
    })
}

/// Builds the profile both certificates expect: moments at the default `ε`
/// and at the smallest valid truncation level.
pub fn certification_profile(dist: &Distribution) -> Result<MomentProfile> {
    let base = dist.moment_profile(1.0, 1.0)?;
    let eps = epsilon_default(base.lambda, base.mu)?;
    let a = dist.choose_truncation(base.mu)?;
    dist.moment_profile(eps, a)
}
