//! Information accounting for equality-probe transcripts.
//!
//! Everything here is a pure function of integers and reals: binary entropy,
//! the per-probe conditional entropy `h(1/(n-k+1))`, the chain-rule
//! accumulation over a probe prefix, the exact transcript mutual information
//! for a public without-replacement schedule under a uniform hidden index,
//! and the Fano-style requirements those quantities are compared against.
//!
//! Conventions:
//! - the public surface defaults to bits; natural-log values are converted
//!   exactly once at the boundary (factor `ln 2`),
//! - `n` is the library size, `q` a number of probes, `k` a 1-based probe
//!   position.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::Schedule;

/// Logarithm base for entropy values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogBase {
    /// Base-2 logarithms (bits). Default on the public surface.
    Bits,
    /// Natural logarithms (nats). Used internally by the asymptotics.
    Nats,
}

impl LogBase {
    /// Convert a value computed in nats into this base. The only conversion
    /// factor anywhere is `ln 2`, applied here.
    #[inline]
    pub fn from_nats(self, nats: f64) -> f64 {
        match self {
            LogBase::Nats => nats,
            LogBase::Bits => nats / std::f64::consts::LN_2,
        }
    }
}

/// Below this probability the direct entropy formula gives way to the
/// small-p series; the two paths agree to better than 1e-9 relative in an
/// overlap band around the cutoff (validated by test).
pub const SMALL_P_CUTOFF: f64 = 9.313225746154785e-10; // 2^-30

/// Largest probe count summed term-by-term; beyond this, accumulation is
/// routed to the closed form (cross-validated at the boundary by test).
pub const SUMMATION_TERM_LIMIT: u64 = 1 << 24;

/// Slack, in bits, used when comparing an information measure against a
/// requirement so that exact-equality thresholds resolve to the smallest
/// probe count instead of tipping on the last rounding error.
pub const TIE_TOLERANCE_BITS: f64 = 1e-9;

/// Library sizes up to this bound are enumerated exactly by the brute-force
/// oracle.
pub const BRUTE_FORCE_LIMIT: u64 = 1 << 16;

/// Binary entropy h(p) = -p log p - (1-p) log(1-p), with h(0) = h(1) = 0.
pub fn binary_entropy(p: f64, base: LogBase) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!(
            "binary_entropy: p = {p} outside [0, 1]"
        )));
    }
    Ok(base.from_nats(entropy_nats(p)))
}

#[inline]
pub(crate) fn entropy_nats(p: f64) -> f64 {
    if p == 0.0 || p == 1.0 {
        return 0.0;
    }
    // h is symmetric about 1/2; for p > 1/2 the reflection 1-p is computed
    // exactly (Sterbenz), so evaluating at min(p, 1-p) loses nothing.
    let q = if p > 0.5 { 1.0 - p } else { p };
    if q < SMALL_P_CUTOFF {
        entropy_nats_small(q)
    } else {
        entropy_nats_direct(q)
    }
}

/// Direct formula; `ln_1p` keeps the (1-q)ln(1-q) term accurate.
#[inline]
pub(crate) fn entropy_nats_direct(q: f64) -> f64 {
    -q * q.ln() - (1.0 - q) * (-q).ln_1p()
}

/// Series path for tiny q:
/// -(1-q)ln(1-q) = q - q^2/2 - q^3/6 - ..., so
/// h(q) = q ln(1/q) + q - q^2/2 - q^3/6 + O(q^4).
#[inline]
pub(crate) fn entropy_nats_small(q: f64) -> f64 {
    q * (-q.ln()) + q - q * q * 0.5 - q * q * q / 6.0
}

/// Conditional entropy of probe k after k-1 misses: h(1/(n-k+1)).
pub fn per_probe_entropy(n: u64, k: u64, base: LogBase) -> Result<f64> {
    if k == 0 || k > n {
        return Err(Error::domain(format!(
            "per_probe_entropy: k = {k} outside [1, n = {n}]"
        )));
    }
    let remaining = n - k + 1;
    Ok(base.from_nats(entropy_nats(1.0 / remaining as f64)))
}

/// Neumaier (compensated) summation.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Compensated {
    sum: f64,
    compensation: f64,
}

impl Compensated {
    #[inline]
    pub(crate) fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Chain-rule accumulation: sum_{k=1}^{q} h(1/(n-k+1)).
///
/// Exact term-by-term summation (compensated, ascending k). Refuses probe
/// counts beyond [`SUMMATION_TERM_LIMIT`]; use [`accumulated_info`] to route
/// large arguments through the closed form instead.
pub fn chain_rule_bound(n: u64, q: u64, base: LogBase) -> Result<f64> {
    if q > n {
        return Err(Error::domain(format!(
            "chain_rule_bound: q = {q} exceeds n = {n}"
        )));
    }
    if q > SUMMATION_TERM_LIMIT {
        return Err(Error::capacity(format!(
            "chain_rule_bound: q = {q} exceeds the direct-summation limit \
             {SUMMATION_TERM_LIMIT}; use accumulated_info"
        )));
    }
    let mut acc = Compensated::default();
    for k in 1..=q {
        let remaining = n - k + 1;
        acc.add(entropy_nats(1.0 / remaining as f64));
    }
    Ok(base.from_nats(acc.value()))
}

/// Chain-rule information with automatic routing: exact summation up to
/// [`SUMMATION_TERM_LIMIT`] terms, closed form beyond.
pub fn accumulated_info(n: u64, q: u64, base: LogBase) -> Result<f64> {
    if q > n {
        return Err(Error::domain(format!(
            "accumulated_info: q = {q} exceeds n = {n}"
        )));
    }
    if q <= SUMMATION_TERM_LIMIT {
        chain_rule_bound(n, q, base)
    } else {
        // The final term h(1/1) is zero, so q = n can be evaluated at n-1,
        // where the closed form has no pole.
        let q_eff = if q == n { n - 1 } else { q };
        Ok(base.from_nats(crate::asymptotics::closed_form_sum(n, q_eff)?))
    }
}

/// Exact mutual information between the hidden index and the first q probe
/// outcomes of a public without-replacement schedule, uniform prior:
/// (q/n) log n + ((n-q)/n) log(n/(n-q)), with the q = 0 and q = n limits
/// taken by continuity.
pub fn exact_transcript_mi(n: u64, q: u64, base: LogBase) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("exact_transcript_mi: n must be positive"));
    }
    if q > n {
        return Err(Error::domain(format!(
            "exact_transcript_mi: q = {q} exceeds n = {n}"
        )));
    }
    let n_f = n as f64;
    let log_n = n_f.ln();
    let nats = if q == 0 {
        0.0
    } else if q == n {
        log_n
    } else {
        let fraction = q as f64 / n_f;
        // log(n/(n-q)) = -ln(1 - q/n), kept stable for q << n.
        let residual_info = -(-fraction).ln_1p();
        fraction * log_n + (1.0 - fraction) * residual_info
    };
    Ok(base.from_nats(nats))
}

/// Information required by the exact Fano form, log n - h(eps) - eps log(n-1),
/// or by the asymptotic form (1-eps) log n - h(eps).
pub fn fano_required_info(n: u64, epsilon: f64, exact: bool, base: LogBase) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain(format!("fano_required_info: n = {n} < 2")));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::domain(format!(
            "fano_required_info: epsilon = {epsilon} outside [0, 1)"
        )));
    }
    let log_n = (n as f64).ln();
    let nats = if exact {
        log_n - entropy_nats(epsilon) - epsilon * ((n - 1) as f64).ln()
    } else {
        (1.0 - epsilon) * log_n - entropy_nats(epsilon)
    };
    Ok(base.from_nats(nats))
}

/// Fano ceiling on residual uncertainty: h(Pe) + Pe log(n-1).
pub fn fano_posterior_bound(p_error: f64, n: u64, base: LogBase) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("fano_posterior_bound: n must be positive"));
    }
    let cap = 1.0 - 1.0 / n as f64;
    if !(0.0..=1.0).contains(&p_error) || p_error > cap + 1e-12 {
        return Err(Error::domain(format!(
            "fano_posterior_bound: p_error = {p_error} outside [0, 1 - 1/n = {cap}]"
        )));
    }
    if n == 1 || p_error == 0.0 {
        return Ok(base.from_nats(entropy_nats(p_error)));
    }
    let nats = entropy_nats(p_error) + p_error * ((n - 1) as f64).ln();
    Ok(base.from_nats(nats))
}

/// Which information measure a probe-count search compares against the
/// Fano requirement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MinProbesMode {
    /// Chain-rule accumulation (the obtainable-information upper bound).
    ChainBound,
    /// Exact transcript mutual information.
    ExactMi,
}

/// Result of [`min_probes_for_recovery`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinProbesOutcome {
    /// Smallest probe count whose information measure meets the requirement
    /// (or `n` when it never does).
    pub q: u64,
    /// False only if numeric tolerance left the requirement unmet at q = n.
    pub requirement_met: bool,
}

/// Smallest q such that the selected information measure at (n, q) reaches
/// the exact Fano requirement for error tolerance `epsilon`. Monotone
/// bisection; ties within [`TIE_TOLERANCE_BITS`] resolve to the smallest q.
pub fn min_probes_for_recovery(n: u64, epsilon: f64, mode: MinProbesMode) -> Result<MinProbesOutcome> {
    if n < 2 {
        return Err(Error::domain(format!(
            "min_probes_for_recovery: n = {n} < 2"
        )));
    }
    if !(0.0..1.0 / 3.0).contains(&epsilon) {
        return Err(Error::domain(format!(
            "min_probes_for_recovery: epsilon = {epsilon} outside [0, 1/3)"
        )));
    }
    let required = fano_required_info(n, epsilon, true, LogBase::Bits)?;
    let threshold = required - TIE_TOLERANCE_BITS;
    let measure = |q: u64| -> Result<f64> {
        match mode {
            MinProbesMode::ChainBound => accumulated_info(n, q, LogBase::Bits),
            MinProbesMode::ExactMi => exact_transcript_mi(n, q, LogBase::Bits),
        }
    };
    if measure(n)? < threshold {
        return Ok(MinProbesOutcome { q: n, requirement_met: false });
    }
    // measure(0) = 0 < threshold for every admissible (n, epsilon).
    let mut lo = 0u64;
    let mut hi = n;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if measure(mid)? >= threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(MinProbesOutcome { q: hi, requirement_met: true })
}

/// Obtainable information, in bits, for a polynomial probe budget
/// q = ceil(coefficient * N^degree) against a library of 2^N pages.
pub fn poly_probe_info(bit_length: u32, poly_degree: u32, coefficient: f64) -> Result<f64> {
    if !(2..=63).contains(&bit_length) {
        return Err(Error::domain(format!(
            "poly_probe_info: bit length {bit_length} outside [2, 63]"
        )));
    }
    if !coefficient.is_finite() || coefficient < 0.0 {
        return Err(Error::domain(format!(
            "poly_probe_info: coefficient {coefficient} must be finite and >= 0"
        )));
    }
    let n = 1u64 << bit_length;
    let budget = coefficient * (bit_length as f64).powi(poly_degree as i32);
    let q = budget.ceil();
    if q > n as f64 {
        return Err(Error::domain(format!(
            "poly_probe_info: probe budget {q} exceeds 2^{bit_length}"
        )));
    }
    accumulated_info(n, q as u64, LogBase::Bits)
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

/// Double-double accumulator (Knuth two-sum). Roughly 106 mantissa bits,
/// used where the ground-truth oracle favors precision over speed.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let (s, e) = two_sum(self.hi, x);
        let lo = self.lo + e;
        let (hi, lo) = quick_two_sum(s, lo);
        self.hi = hi;
        self.lo = lo;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

/// Worlds grouped by the transcript they produce under a fixed candidate
/// prefix. Key is the packed outcome bit-vector; worlds appear in
/// ascending order within each group.
pub(crate) fn transcript_groups(n: u64, candidates: &[u64]) -> HashMap<Vec<u64>, Vec<u64>> {
    let words = candidates.len().div_ceil(64);
    let mut groups: HashMap<Vec<u64>, Vec<u64>> = HashMap::new();
    for world in 0..n {
        let mut bits = vec![0u64; words];
        for (k, &candidate) in candidates.iter().enumerate() {
            if candidate == world {
                bits[k / 64] |= 1 << (k % 64);
            }
        }
        groups.entry(bits).or_default().push(world);
    }
    groups
}

/// Ground-truth mutual information I(hidden index; first q outcomes),
/// computed by enumerating every equally likely world and tallying the
/// entropy of the induced transcript distribution. Independent of the
/// closed-form path it cross-checks.
pub fn brute_force_mi(n: u64, q: u64, schedule: &mut Schedule) -> Result<f64> {
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::capacity(format!(
            "brute_force_mi: n = {n} exceeds the enumeration bound {BRUTE_FORCE_LIMIT}"
        )));
    }
    if q > n {
        return Err(Error::domain(format!(
            "brute_force_mi: q = {q} exceeds n = {n}"
        )));
    }
    if schedule.library_size() != n {
        return Err(Error::protocol(format!(
            "brute_force_mi: schedule built for n = {}, asked about n = {n}",
            schedule.library_size()
        )));
    }
    let candidates = schedule.take_prefix(q)?;
    let groups = transcript_groups(n, &candidates);
    // Deterministic schedule: H(transcript | world) = 0, so
    // I = H(transcript) = log2 n - (1/n) sum_c c*log2(c).
    let mut weighted = DoubleDouble::default();
    for worlds in groups.values() {
        let count = worlds.len() as f64;
        weighted.add(count * count.log2());
    }
    Ok((n as f64).log2() - weighted.value() / n as f64)
}

// ---------------------------------------------------------------------------
// Bound report
// ---------------------------------------------------------------------------

/// Required-versus-obtainable information for one (n, q, epsilon)
/// configuration. Field order is the serialized schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: u64,
    pub q: u64,
    pub epsilon: f64,
    pub chain_bound_bits: f64,
    pub exact_mi_bits: f64,
    pub fano_required_bits: f64,
    pub satisfied: bool,
}

impl BoundReport {
    pub const CSV_HEADER: &'static [&'static str] = &[
        "n",
        "q",
        "epsilon",
        "chain_bound_bits",
        "exact_mi_bits",
        "fano_required_bits",
        "satisfied",
    ];

    /// Evaluate every bundled quantity at (n, q, epsilon).
    pub fn compute(n: u64, q: u64, epsilon: f64) -> Result<Self> {
        let chain_bound_bits = accumulated_info(n, q, LogBase::Bits)?;
        let exact_mi_bits = exact_transcript_mi(n, q, LogBase::Bits)?;
        let fano_required_bits = fano_required_info(n, epsilon, true, LogBase::Bits)?;
        debug_assert!(exact_mi_bits <= chain_bound_bits + TIE_TOLERANCE_BITS);
        debug_assert!(exact_mi_bits <= (n as f64).log2() + TIE_TOLERANCE_BITS);
        Ok(BoundReport {
            n,
            q,
            epsilon,
            chain_bound_bits,
            exact_mi_bits,
            fano_required_bits,
            satisfied: chain_bound_bits >= fano_required_bits,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::Schedule;
    use approx::assert_relative_eq;

    // High-precision reference values, frozen from an independent
    // arbitrary-precision evaluation of the defining formulas.
    const H_QUARTER_BITS: f64 = 0.8112781244591328;
    const H_THIRD_BITS: f64 = 0.9182958340544895;
    const H_TENTH_BITS: f64 = 0.46899559358928117;
    const H_2POW20_BITS: f64 = 2.0449346878965513e-5;
    const H_2POW40_BITS: f64 = 3.7691911566879123e-11;
    const H_2POW60_BITS: f64 = 5.3293042757356915e-17;
    const CHAIN_4_3_BITS: f64 = 2.7295739585136224;
    const FANO_2POW20_01_BITS: f64 = 17.531004543996905;
    const FANO_POST_QUARTER_16: f64 = 1.7880007733612625;
    const POLY_20_3_BITS: f64 = 0.16417964813394268;
    const POLY_30_3_BITS: f64 = 7.906583602425104e-4;

    #[test]
    fn entropy_trivial_points() {
        assert_eq!(binary_entropy(0.5, LogBase::Bits).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0, LogBase::Bits).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0, LogBase::Bits).unwrap(), 0.0);
    }

    #[test]
    fn entropy_against_reference() {
        assert_relative_eq!(
            binary_entropy(0.25, LogBase::Bits).unwrap(),
            H_QUARTER_BITS,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            binary_entropy(1.0 / 3.0, LogBase::Bits).unwrap(),
            H_THIRD_BITS,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            binary_entropy(0.1, LogBase::Bits).unwrap(),
            H_TENTH_BITS,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            binary_entropy(2f64.powi(-20), LogBase::Bits).unwrap(),
            H_2POW20_BITS,
            max_relative = 1e-12
        );
    }

    #[test]
    fn entropy_small_p_path() {
        // Below the cutoff the series path takes over; 1e-9 relative target.
        assert_relative_eq!(
            binary_entropy(2f64.powi(-40), LogBase::Bits).unwrap(),
            H_2POW40_BITS,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            binary_entropy(2f64.powi(-60), LogBase::Bits).unwrap(),
            H_2POW60_BITS,
            max_relative = 1e-9
        );
    }

    #[test]
    fn entropy_paths_agree_in_overlap_band() {
        // Both evaluation paths must agree near the switchover.
        for exp in [-34, -32, -31, -30, -29, -28, -26] {
            let q = 2f64.powi(exp);
            let direct = entropy_nats_direct(q);
            let series = entropy_nats_small(q);
            assert_relative_eq!(direct, series, max_relative = 1e-9);
        }
    }

    #[test]
    fn entropy_domain_errors() {
        assert!(binary_entropy(-0.1, LogBase::Bits).is_err());
        assert!(binary_entropy(1.1, LogBase::Bits).is_err());
        assert!(binary_entropy(f64::NAN, LogBase::Bits).is_err());
    }

    #[test]
    fn entropy_base_consistency() {
        for p in [0.5, 0.25, 1e-3, 2f64.powi(-20), 0.9] {
            let bits = binary_entropy(p, LogBase::Bits).unwrap();
            let nats = binary_entropy(p, LogBase::Nats).unwrap();
            assert_relative_eq!(
                nats,
                std::f64::consts::LN_2 * bits,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn per_probe_edges() {
        assert_eq!(per_probe_entropy(4, 4, LogBase::Bits).unwrap(), 0.0);
        assert_eq!(per_probe_entropy(4, 3, LogBase::Bits).unwrap(), 1.0);
        assert_relative_eq!(
            per_probe_entropy(1 << 20, 1, LogBase::Bits).unwrap(),
            H_2POW20_BITS,
            max_relative = 1e-12
        );
        assert!(per_probe_entropy(4, 5, LogBase::Bits).is_err());
        assert!(per_probe_entropy(4, 0, LogBase::Bits).is_err());
    }

    #[test]
    fn chain_rule_small_cases() {
        assert_eq!(chain_rule_bound(16, 0, LogBase::Bits).unwrap(), 0.0);
        assert_relative_eq!(
            chain_rule_bound(2, 2, LogBase::Bits).unwrap(),
            1.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            chain_rule_bound(4, 3, LogBase::Bits).unwrap(),
            CHAIN_4_3_BITS,
            max_relative = 1e-12
        );
        assert!(chain_rule_bound(4, 5, LogBase::Bits).is_err());
    }

    #[test]
    fn chain_rule_monotone_in_q() {
        let n = 257;
        let mut prev = 0.0;
        for q in 0..=n {
            let value = chain_rule_bound(n, q, LogBase::Bits).unwrap();
            assert!(value >= prev);
            prev = value;
        }
    }

    #[test]
    fn exact_mi_limits_and_values() {
        assert_eq!(exact_transcript_mi(8, 0, LogBase::Bits).unwrap(), 0.0);
        assert_relative_eq!(
            exact_transcript_mi(16, 16, LogBase::Bits).unwrap(),
            4.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            exact_transcript_mi(4, 3, LogBase::Bits).unwrap(),
            2.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            exact_transcript_mi(4, 1, LogBase::Bits).unwrap(),
            H_QUARTER_BITS,
            max_relative = 1e-12
        );
        assert!(exact_transcript_mi(4, 5, LogBase::Bits).is_err());
    }

    #[test]
    fn brute_force_matches_formula_on_small_cases() {
        let mut lex = Schedule::lexicographic(4);
        assert_relative_eq!(
            brute_force_mi(4, 3, &mut lex).unwrap(),
            2.0,
            max_relative = 1e-14
        );
        let mut lex = Schedule::lexicographic(8);
        assert_eq!(brute_force_mi(8, 0, &mut lex).unwrap(), 0.0);
        let mut lex = Schedule::lexicographic(16);
        assert_relative_eq!(
            brute_force_mi(16, 16, &mut lex).unwrap(),
            4.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn brute_force_capacity_and_protocol_errors() {
        let mut lex = Schedule::lexicographic((1 << 16) + 2);
        assert!(matches!(
            brute_force_mi((1 << 16) + 2, 1, &mut lex),
            Err(Error::Capacity(_))
        ));
        let mut lex = Schedule::lexicographic(8);
        assert!(brute_force_mi(16, 2, &mut lex).is_err());
    }

    #[test]
    fn fano_required_reference_points() {
        assert_relative_eq!(
            fano_required_info(4, 0.0, true, LogBase::Bits).unwrap(),
            2.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            fano_required_info(1 << 20, 0.1, true, LogBase::Bits).unwrap(),
            FANO_2POW20_01_BITS,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            fano_required_info(1 << 20, 1.0 / 3.0, false, LogBase::Bits).unwrap(),
            12.415037499278844,
            max_relative = 1e-12
        );
    }

    #[test]
    fn fano_posterior_reference_points() {
        assert_eq!(fano_posterior_bound(0.0, 128, LogBase::Bits).unwrap(), 0.0);
        assert_relative_eq!(
            fano_posterior_bound(0.5, 2, LogBase::Bits).unwrap(),
            1.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            fano_posterior_bound(0.25, 16, LogBase::Bits).unwrap(),
            FANO_POST_QUARTER_16,
            max_relative = 1e-12
        );
        assert!(fano_posterior_bound(0.9, 2, LogBase::Bits).is_err());
    }

    #[test]
    fn min_probes_small_case() {
        let out = min_probes_for_recovery(4, 0.0, MinProbesMode::ExactMi).unwrap();
        assert_eq!(out.q, 3);
        assert!(out.requirement_met);
        let out = min_probes_for_recovery(4, 0.0, MinProbesMode::ChainBound).unwrap();
        assert_eq!(out.q, 3);
    }

    #[test]
    fn min_probes_exact_mi_zero_error_needs_n_minus_one() {
        // With zero error tolerance the transcript must determine the index:
        // the hit is observed, or a single unprobed page remains.
        for bits in [4u32, 8, 12] {
            let n = 1u64 << bits;
            let out = min_probes_for_recovery(n, 0.0, MinProbesMode::ExactMi).unwrap();
            assert_eq!(out.q, n - 1);
        }
    }

    #[test]
    fn min_probes_rejects_bad_epsilon() {
        assert!(min_probes_for_recovery(16, 1.0 / 3.0, MinProbesMode::ChainBound).is_err());
        assert!(min_probes_for_recovery(16, -0.1, MinProbesMode::ChainBound).is_err());
    }

    #[test]
    fn poly_probe_reference_points() {
        assert_relative_eq!(
            poly_probe_info(20, 3, 1.0).unwrap(),
            POLY_20_3_BITS,
            max_relative = 1e-10
        );
        assert_relative_eq!(
            poly_probe_info(30, 3, 1.0).unwrap(),
            POLY_30_3_BITS,
            max_relative = 1e-10
        );
        assert_eq!(poly_probe_info(10, 0, 0.0).unwrap(), 0.0);
        // Budget beyond the library is out of the regime.
        assert!(poly_probe_info(4, 3, 2.0).is_err());
    }

    #[test]
    fn bound_report_fields() {
        let report = BoundReport::compute(1024, 512, 0.1).unwrap();
        assert_eq!(report.n, 1024);
        assert_eq!(report.q, 512);
        assert!(report.exact_mi_bits <= report.chain_bound_bits + TIE_TOLERANCE_BITS);
        assert!(report.exact_mi_bits <= 10.0 + TIE_TOLERANCE_BITS);
        assert_eq!(
            report.satisfied,
            report.chain_bound_bits >= report.fano_required_bits
        );
    }

    #[test]
    fn double_double_tracks_tiny_residuals() {
        let mut dd = DoubleDouble::default();
        dd.add(1.0);
        dd.add(1e-20);
        dd.add(-1.0);
        assert_eq!(dd.value(), 1e-20);
    }
}
