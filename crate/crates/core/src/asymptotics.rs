//! Asymptotics of the accumulated entropy sum.
//!
//! The entropy sum over a probe prefix splits into two classical partial
//! sums,
//!
//! ```text
//! sum_{m=2}^{M} ln(m)/m            = (ln M)^2 / 2 + gamma_1 + o(1)
//! -sum_{m=2}^{M} (1-1/m) ln(1-1/m) = ln M + gamma' + o(1)
//! ```
//!
//! whose additive constants cancel in the difference, leaving the closed
//! form `(ln n + 1) x - x^2/2` with `x = ln(n/(n-q))`. This module evaluates
//! that closed form, solves the quadratic threshold it induces, computes the
//! limiting hit fraction `1 - e^{-(1-eps)}`, and estimates both constants
//! numerically with Euler-Maclaurin-corrected partial sums.
//!
//! Everything here works in nats and converts at the boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::{entropy_nats, Compensated, LogBase};

/// Reference value for the constant in the second partial sum,
/// gamma' = -0.7885305659 (to the digits asserted by the acceptance suite).
pub const GAMMA_PRIME_REFERENCE: f64 = -0.7885305659;

/// Cutoffs below this trip the small-M warning on constant estimates.
pub const RECOMMENDED_MIN_CUTOFF: u64 = 1_000;

/// Closed-form approximation of the entropy sum over a q-probe prefix,
/// in nats: `(ln n + 1) x - x^2/2` with `x = ln(n/(n-q))`.
///
/// Valid for `0 <= q < n`; at `q = n` the substitution has a pole, and the
/// exact summation must be used instead (the final term is h(1) = 0, so
/// q = n carries no more information than q = n-1).
pub fn closed_form_sum(n: u64, q: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("closed_form_sum: n must be positive"));
    }
    if q >= n {
        return Err(Error::domain(format!(
            "closed_form_sum: q = {q} >= n = {n} hits the pole; use the exact sum"
        )));
    }
    let fraction = q as f64 / n as f64;
    let x = -(-fraction).ln_1p();
    Ok(((n as f64).ln() + 1.0) * x - 0.5 * x * x)
}

/// Probe-fraction threshold from the quadratic inequality
/// `x^2 - 2(ln n + 1)x + 2(1-eps)ln n - 2 ln2 h(eps) <= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSolution {
    pub n: u64,
    pub epsilon: f64,
    /// Smaller quadratic root, in nats: x = ln(n/(n-q)) at the threshold.
    pub x: f64,
    /// Threshold probe fraction q/n = 1 - e^{-x}.
    pub fraction: f64,
    pub q_continuous: f64,
    /// Ceiling of `q_continuous`.
    pub q_integer: u64,
}

/// Solve the threshold quadratic for (n, epsilon), taking the smaller root
/// with the product-over-sum form (the naive `b - sqrt(b^2 - c)` cancels
/// catastrophically once ln n is large).
pub fn solve_threshold(n: u64, epsilon: f64) -> Result<ThresholdSolution> {
    if n < 4 {
        return Err(Error::domain(format!("solve_threshold: n = {n} < 4")));
    }
    if !(0.0..1.0 / 3.0).contains(&epsilon) {
        return Err(Error::domain(format!(
            "solve_threshold: epsilon = {epsilon} outside [0, 1/3)"
        )));
    }
    let log_n = (n as f64).ln();
    let b = log_n + 1.0;
    let c = 2.0 * (1.0 - epsilon) * log_n - 2.0 * entropy_nats(epsilon);
    let discriminant = b * b - c;
    if discriminant < 0.0 {
        // Unreachable for n >= 4, eps in [0, 1/3): b^2 - c >= (ln n)^2 + 1.
        return Err(Error::domain(
            "solve_threshold: negative discriminant (out of regime)",
        ));
    }
    let x = c / (b + discriminant.sqrt());
    let fraction = -(-x).exp_m1();
    let q_continuous = fraction * n as f64;
    let q_integer = (q_continuous.ceil() as u64).min(n);
    Ok(ThresholdSolution {
        n,
        epsilon,
        x,
        fraction,
        q_continuous,
        q_integer,
    })
}

/// Limiting hit fraction 1 - e^{-(1-eps)}.
pub fn limit_fraction(epsilon: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::domain(format!(
            "limit_fraction: epsilon = {epsilon} outside [0, 1]"
        )));
    }
    Ok(-(-(1.0 - epsilon)).exp_m1())
}

/// Which additive constant an estimate targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstantName {
    /// Constant of sum ln(m)/m (the first Stieltjes constant).
    Gamma1,
    /// Constant of the -(1-1/m)ln(1-1/m) sum.
    GammaPrime,
}

/// Partial-sum estimate of one additive constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantEstimate {
    pub constant_name: ConstantName,
    /// Summation cutoff.
    #[serde(rename = "M")]
    pub cutoff: u64,
    /// Uncorrected partial-sum estimate at the cutoff.
    pub estimate: f64,
    /// Euler-Maclaurin-corrected estimate (trapezoid + first Bernoulli
    /// term), which removes the O(1/M)-scale truncation error.
    pub richardson_estimate: f64,
    /// |estimate(M) - estimate(M/2)|.
    pub delta_last_doubling: f64,
    /// Set when the cutoff is below [`RECOMMENDED_MIN_CUTOFF`]; the value is
    /// still computed.
    pub warning_small_m: bool,
}

impl ConstantEstimate {
    pub const CSV_HEADER: &'static [&'static str] = &[
        "constant_name",
        "M",
        "estimate",
        "richardson_estimate",
        "delta_last_doubling",
        "warning_small_m",
    ];
}

fn estimate_constant(
    name: ConstantName,
    cutoff: u64,
    term: impl Fn(f64) -> f64,
    normalize: impl Fn(f64, f64) -> f64,
    correct: impl Fn(f64, f64) -> f64,
) -> Result<ConstantEstimate> {
    if cutoff < 2 {
        return Err(Error::domain(format!(
            "constant estimate needs a cutoff >= 2, got {cutoff}"
        )));
    }
    let half = cutoff / 2;
    let mut sum = Compensated::default();
    let mut estimate_at_half = None;
    for m in 2..=cutoff {
        sum.add(term(m as f64));
        if m == half {
            estimate_at_half = Some(normalize(sum.value(), half as f64));
        }
    }
    let m_f = cutoff as f64;
    let estimate = normalize(sum.value(), m_f);
    let richardson_estimate = correct(estimate, m_f);
    let delta_last_doubling = estimate_at_half
        .map(|e| (estimate - e).abs())
        .unwrap_or(f64::NAN);
    Ok(ConstantEstimate {
        constant_name: name,
        cutoff,
        estimate,
        richardson_estimate,
        delta_last_doubling,
        warning_small_m: cutoff < RECOMMENDED_MIN_CUTOFF,
    })
}

/// Estimate the constant of `sum ln(m)/m` as
/// `sum_{m=2}^{M} ln(m)/m - (ln M)^2/2`, with correction terms
/// `-ln(M)/(2M) - (1 - ln M)/(12 M^2)`.
pub fn gamma1_estimate(cutoff: u64) -> Result<ConstantEstimate> {
    estimate_constant(
        ConstantName::Gamma1,
        cutoff,
        |m| m.ln() / m,
        |sum, m| sum - 0.5 * m.ln() * m.ln(),
        |estimate, m| estimate - m.ln() / (2.0 * m) - (1.0 - m.ln()) / (12.0 * m * m),
    )
}

/// Estimate gamma' as `-sum_{m=2}^{M} (1-1/m) ln(1-1/m) - ln M`, with
/// correction terms `-1/M + 1/(4 M^2)`.
pub fn gamma_prime_estimate(cutoff: u64) -> Result<ConstantEstimate> {
    estimate_constant(
        ConstantName::GammaPrime,
        cutoff,
        |m| {
            let inv = 1.0 / m;
            -(1.0 - inv) * (-inv).ln_1p()
        },
        |sum, m| sum - m.ln(),
        |estimate, m| estimate - 1.0 / m + 1.0 / (4.0 * m * m),
    )
}

/// Estimates over a ladder of cutoffs, for convergence tables.
pub fn convergence_table(name: ConstantName, cutoffs: &[u64]) -> Result<Vec<ConstantEstimate>> {
    cutoffs
        .iter()
        .map(|&m| match name {
            ConstantName::Gamma1 => gamma1_estimate(m),
            ConstantName::GammaPrime => gamma_prime_estimate(m),
        })
        .collect()
}

/// One point of the polynomial-budget information limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolyRegimePoint {
    pub n_bits: u32,
    pub q: u64,
    pub info_bits: f64,
}

impl PolyRegimePoint {
    pub const CSV_HEADER: &'static [&'static str] = &["n_bits", "q", "info_bits"];
}

/// Closed-form obtainable information for q = N^exponent probes against
/// 2^N pages, in bits, for each listed N. The sequence vanishes as N grows.
pub fn poly_regime_limit(bit_lengths: &[u32], exponent: u32) -> Result<Vec<PolyRegimePoint>> {
    if exponent == 0 {
        return Err(Error::domain("poly_regime_limit: exponent must be >= 1"));
    }
    bit_lengths
        .iter()
        .map(|&bits| {
            if !(2..=63).contains(&bits) {
                return Err(Error::domain(format!(
                    "poly_regime_limit: bit length {bits} outside [2, 63]"
                )));
            }
            let n = 1u64 << bits;
            let q = (bits as u128).pow(exponent);
            if q >= n as u128 {
                return Err(Error::domain(format!(
                    "poly_regime_limit: N^{exponent} = {q} is not below 2^{bits}"
                )));
            }
            let info_bits = LogBase::Bits.from_nats(closed_form_sum(n, q as u64)?);
            Ok(PolyRegimePoint {
                n_bits: bits,
                q: q as u64,
                info_bits,
            })
        })
        .collect()
}
