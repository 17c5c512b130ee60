//! Monte Carlo and exhaustive experiment harness.
//!
//! Trials are independent: per-trial randomness comes from a derived stream
//! `(master_seed, trial_index)`, results are collected in trial order, and
//! aggregation is a fixed-order fold, so any parallel partitioning of the
//! trial range produces bit-identical results.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::{
    brute_force_mi, fano_posterior_bound, LogBase, TIE_TOLERANCE_BITS,
};
use crate::model::verification_rounds;
use crate::rng::trial_rng;
use crate::schedule::{Schedule, ScheduleKind};

use rand::Rng;

/// Largest bit length simulated trial-by-trial; larger libraries switch to
/// the analytic expectation and say so in the output.
pub const SIMULATION_BITS_LIMIT: u32 = 24;

/// Bit lengths of the standard time-space sweep (p = N^2, one workspace bit
/// per searcher). Starts at 14 so that the additive per-round terms are
/// small against n/(2p) and doubling p moves the product by well under 5%.
pub const STANDARD_TRADEOFF_SWEEP: &[u32] = &[14, 16, 18, 20, 22, 24, 26, 28];

/// How a quantity in a report row was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Simulated,
    Analytic,
}

/// Searchers per round, fixed or polynomial in the bit length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParallelismSpec {
    Fixed(u64),
    Poly { degree: u32, coefficient: f64 },
}

impl ParallelismSpec {
    /// Evaluate at bit length N; must come out >= 1.
    pub fn evaluate(&self, bit_length: u32) -> Result<u64> {
        let value = match *self {
            ParallelismSpec::Fixed(p) => p,
            ParallelismSpec::Poly { degree, coefficient } => {
                let raw = coefficient * (bit_length as f64).powi(degree as i32);
                if !raw.is_finite() || raw > u64::MAX as f64 {
                    return Err(Error::domain(format!(
                        "parallelism spec overflows at N = {bit_length}"
                    )));
                }
                raw.ceil() as u64
            }
        };
        if value == 0 {
            return Err(Error::domain(format!(
                "parallelism must be >= 1, got 0 at N = {bit_length}"
            )));
        }
        Ok(value)
    }
}

/// Seedable description of one experiment run; hashed into output metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_bits: Option<u32>,
    pub n: Option<u64>,
    pub schedule: ScheduleKind,
    pub parallelism: ParallelismSpec,
    pub epsilon: f64,
    pub trials: u64,
    pub master_seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::domain("experiment needs trials >= 1"));
        }
        if let Some(bits) = self.n_bits {
            self.parallelism.evaluate(bits)?;
        }
        Ok(())
    }
}

fn require_without_replacement(kind: ScheduleKind, what: &str) -> Result<()> {
    match kind {
        ScheduleKind::Lexicographic | ScheduleKind::RandomWithoutReplacement => Ok(()),
        _ => Err(Error::unsupported(format!(
            "{what} is defined for without-replacement schedules only"
        ))),
    }
}

fn fresh_schedule(kind: ScheduleKind, n: u64, rng: crate::rng::Stream) -> Result<Schedule> {
    match kind {
        ScheduleKind::Lexicographic => Ok(Schedule::lexicographic(n)),
        ScheduleKind::RandomWithoutReplacement => Schedule::random_without_replacement_from(n, rng),
        ScheduleKind::RandomWithReplacement => Ok(Schedule::random_with_replacement_from(n, rng)),
        ScheduleKind::AdaptiveScripted => Err(Error::unsupported(
            "scripted schedules are single-run; supply them to run_search directly",
        )),
    }
}

/// Hit positions over `trials` independent worlds, one derived stream each.
fn sample_hit_positions(
    n: u64,
    kind: ScheduleKind,
    trials: u64,
    master_seed: u64,
) -> Result<Vec<u64>> {
    (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(master_seed, trial);
            let target = rng.random_range(0..n);
            let schedule = fresh_schedule(kind, n, rng)?;
            schedule.hit_position(target)
        })
        .collect()
}

fn mean_and_std_error(values: &[u64]) -> (f64, f64) {
    let count = values.len() as f64;
    let mean = values.iter().map(|&v| v as f64).sum::<f64>() / count;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let variance = values
        .iter()
        .map(|&v| {
            let d = v as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / (count - 1.0);
    (mean, (variance / count).sqrt())
}

/// Sample mean of the flattened hit position, its standard error, and the
/// analytic reference (n+1)/2.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HitTimeReport {
    pub n: u64,
    pub trials: u64,
    pub mean: f64,
    pub std_error: f64,
    pub reference: f64,
}

impl HitTimeReport {
    pub const CSV_HEADER: &'static [&'static str] =
        &["n", "trials", "mean", "std_error", "reference"];
}

/// Monte Carlo estimate of the expected hit position under a uniform hidden
/// index, without replacement.
pub fn expected_hit_time(
    n: u64,
    kind: ScheduleKind,
    trials: u64,
    master_seed: u64,
) -> Result<HitTimeReport> {
    require_without_replacement(kind, "expected_hit_time")?;
    if trials == 0 {
        return Err(Error::domain("expected_hit_time: trials must be >= 1"));
    }
    let positions = sample_hit_positions(n, kind, trials, master_seed)?;
    let (mean, std_error) = mean_and_std_error(&positions);
    Ok(HitTimeReport {
        n,
        trials,
        mean,
        std_error,
        reference: (n as f64 + 1.0) / 2.0,
    })
}

/// Exhaustive variant: every hidden index once against one fixed schedule
/// realization. The mean is exactly (n+1)/2 for without-replacement kinds.
pub fn expected_hit_time_exhaustive(
    n: u64,
    kind: ScheduleKind,
    schedule_seed: u64,
) -> Result<HitTimeReport> {
    require_without_replacement(kind, "expected_hit_time_exhaustive")?;
    let positions: Vec<u64> = (0..n)
        .map(|target| {
            let schedule = fresh_schedule(kind, n, trial_rng(schedule_seed, 0))?;
            schedule.hit_position(target)
        })
        .collect::<Result<_>>()?;
    let (mean, std_error) = mean_and_std_error(&positions);
    Ok(HitTimeReport {
        n,
        trials: n,
        mean,
        std_error,
        reference: (n as f64 + 1.0) / 2.0,
    })
}

/// One point of the success-probability curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuccessPoint {
    pub q: u64,
    pub empirical: f64,
    pub analytic: f64,
}

impl SuccessPoint {
    pub const CSV_HEADER: &'static [&'static str] = &["q", "empirical", "analytic"];
}

/// Fraction of trials whose hit falls within the first q probes, against
/// the analytic value q/n, for each q in the grid.
pub fn success_curve(
    n: u64,
    q_grid: &[u64],
    kind: ScheduleKind,
    trials: u64,
    master_seed: u64,
) -> Result<Vec<SuccessPoint>> {
    require_without_replacement(kind, "success_curve")?;
    if trials == 0 {
        return Err(Error::domain("success_curve: trials must be >= 1"));
    }
    if let Some(&bad) = q_grid.iter().find(|&&q| q > n) {
        return Err(Error::domain(format!("success_curve: q = {bad} > n = {n}")));
    }
    let mut positions = sample_hit_positions(n, kind, trials, master_seed)?;
    positions.sort_unstable();
    Ok(q_grid
        .iter()
        .map(|&q| {
            let within = positions.partition_point(|&pos| pos <= q);
            SuccessPoint {
                q,
                empirical: within as f64 / trials as f64,
                analytic: q as f64 / n as f64,
            }
        })
        .collect())
}

/// Round counts for the two-stage protocol at one (N, p).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoStageReport {
    pub n_bits: u32,
    pub p: u64,
    pub trials: u64,
    pub mean_search_rounds: f64,
    pub verify_rounds: u64,
    pub mean_total_rounds: f64,
    pub mode: EvalMode,
}

impl TwoStageReport {
    pub const CSV_HEADER: &'static [&'static str] = &[
        "n_bits",
        "p",
        "trials",
        "mean_search_rounds",
        "verify_rounds",
        "mean_total_rounds",
        "mode",
    ];
}

/// Measured (or, above [`SIMULATION_BITS_LIMIT`], analytic) search rounds
/// plus the verification rounds ceil(N/p).
pub fn two_stage_rounds(
    bit_length: u32,
    parallelism: u64,
    kind: ScheduleKind,
    trials: u64,
    master_seed: u64,
) -> Result<TwoStageReport> {
    if bit_length == 0 || bit_length > 63 {
        return Err(Error::domain(format!(
            "two_stage_rounds: bit length {bit_length} outside [1, 63]"
        )));
    }
    if parallelism == 0 {
        return Err(Error::domain("two_stage_rounds: parallelism must be >= 1"));
    }
    let n = 1u64 << bit_length;
    let (mean_search_rounds, mode, trials_used) = if bit_length <= SIMULATION_BITS_LIMIT {
        require_without_replacement(kind, "two_stage_rounds (simulated)")?;
        if trials == 0 {
            return Err(Error::domain("two_stage_rounds: trials must be >= 1"));
        }
        let positions = sample_hit_positions(n, kind, trials, master_seed)?;
        let mean = positions
            .iter()
            .map(|&q| q.div_ceil(parallelism) as f64)
            .sum::<f64>()
            / trials as f64;
        (mean, EvalMode::Simulated, trials)
    } else {
        ((n as f64 + 1.0) / (2.0 * parallelism as f64), EvalMode::Analytic, 0)
    };
    let verify_rounds = verification_rounds(bit_length, parallelism)?;
    Ok(TwoStageReport {
        n_bits: bit_length,
        p: parallelism,
        trials: trials_used,
        mean_search_rounds,
        verify_rounds,
        mean_total_rounds: mean_search_rounds + verify_rounds as f64,
        mode,
    })
}

/// One row of the time-space table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffRow {
    pub n_bits: u32,
    pub p: u64,
    /// Workspace bits S = c_S * p.
    pub workspace_bits: u64,
    pub search_rounds: f64,
    pub verify_rounds: u64,
    pub total_rounds: f64,
    pub ts_product: f64,
    /// ts_product / 2^N, the normalized product the sweep is judged by.
    pub ts_over_library: f64,
    pub mode: EvalMode,
}

impl TradeoffRow {
    pub const CSV_HEADER: &'static [&'static str] = &[
        "n_bits",
        "p",
        "workspace_bits",
        "search_rounds",
        "verify_rounds",
        "total_rounds",
        "ts_product",
        "ts_over_library",
        "mode",
    ];
}

/// Time-space table over a bit-length sweep: expected total rounds times
/// workspace bits, with S = c_S * p.
pub fn tradeoff_table(
    sweep: &[u32],
    parallelism: ParallelismSpec,
    workspace_per_searcher: u64,
    kind: ScheduleKind,
    trials: u64,
    master_seed: u64,
) -> Result<Vec<TradeoffRow>> {
    if workspace_per_searcher == 0 {
        return Err(Error::domain("tradeoff_table: c_S must be >= 1"));
    }
    sweep
        .iter()
        .enumerate()
        .map(|(index, &bits)| {
            let p = parallelism.evaluate(bits)?;
            // Distinct substream block per sweep entry.
            let seed_base = master_seed.wrapping_add((index as u64) << 32);
            let stage = two_stage_rounds(bits, p, kind, trials, seed_base)?;
            let workspace = workspace_per_searcher * p;
            let ts_product = stage.mean_total_rounds * workspace as f64;
            Ok(TradeoffRow {
                n_bits: bits,
                p,
                workspace_bits: workspace,
                search_rounds: stage.mean_search_rounds,
                verify_rounds: stage.verify_rounds,
                total_rounds: stage.mean_total_rounds,
                ts_product,
                ts_over_library: ts_product / (1u64 << bits) as f64,
                mode: stage.mode,
            })
        })
        .collect()
}

/// Decoder families audited against the information inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderKind {
    /// Posterior argmax (smallest index on ties).
    BayesOptimal,
    /// Always guesses the schedule's first candidate, transcript ignored.
    FirstCandidate,
    /// Deterministic pseudo-random pick among the worlds consistent with
    /// the transcript.
    RandomGuess,
}

impl std::str::FromStr for DecoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bayes" | "bayes-optimal" => Ok(DecoderKind::BayesOptimal),
            "first" | "first-candidate" => Ok(DecoderKind::FirstCandidate),
            "random" | "random-guess" => Ok(DecoderKind::RandomGuess),
            other => Err(Error::domain(format!("unknown decoder '{other}'"))),
        }
    }
}

/// Exact audit of one decoder on one (n, q) configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecoderAuditReport {
    pub n: u64,
    pub q: u64,
    pub decoder: DecoderKind,
    pub p_error: f64,
    /// I(hidden index; decoder output), bits.
    pub mi_decoder_bits: f64,
    /// H(hidden index | decoder output), bits.
    pub cond_entropy_bits: f64,
    /// I(hidden index; transcript), bits, from the brute-force oracle.
    pub mi_transcript_bits: f64,
    /// Fano ceiling h(Pe) + Pe log(n-1), bits.
    pub fano_bound_bits: f64,
    pub fano_ok: bool,
    pub dpi_ok: bool,
}

impl DecoderAuditReport {
    pub const CSV_HEADER: &'static [&'static str] = &[
        "n",
        "q",
        "decoder",
        "p_error",
        "mi_decoder_bits",
        "cond_entropy_bits",
        "mi_transcript_bits",
        "fano_bound_bits",
        "fano_ok",
        "dpi_ok",
    ];
}

/// Largest library the audit enumerates.
pub const AUDIT_LIMIT: u64 = 1 << 10;

fn fnv1a(words: &[u64], salt: u64) -> u64 {
    let mut hash = 0xcbf29ce484222325u64 ^ salt;
    for &word in words {
        for byte in word.to_le_bytes() {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
    }
    hash
}

/// Enumerate every world exactly (no sampling), run the decoder on each
/// transcript, and check the Fano and data-processing inequalities.
/// `schedule` is consumed; it must be fresh.
pub fn decoder_audit(
    n: u64,
    q: u64,
    decoder: DecoderKind,
    schedule: Schedule,
) -> Result<DecoderAuditReport> {
    if n > AUDIT_LIMIT {
        return Err(Error::capacity(format!(
            "decoder_audit enumerates all worlds; n = {n} exceeds {AUDIT_LIMIT}"
        )));
    }
    if q > n {
        return Err(Error::domain(format!("decoder_audit: q = {q} > n = {n}")));
    }
    let mut transcript_schedule = schedule.clone();
    let candidates = transcript_schedule.take_prefix(q)?;
    let groups = crate::info::transcript_groups(n, &candidates);

    // Decode each transcript group; every world in a group shares ŵ.
    let mut correct = 0u64;
    let mut decode_counts: std::collections::HashMap<u64, u64> = std::collections::HashMap::new();
    for (bits, worlds) in &groups {
        let guess = match decoder {
            DecoderKind::BayesOptimal => worlds[0],
            DecoderKind::FirstCandidate => candidates.first().copied().unwrap_or(0),
            DecoderKind::RandomGuess => {
                worlds[(fnv1a(bits, q) % worlds.len() as u64) as usize]
            }
        };
        if worlds.contains(&guess) {
            correct += 1;
        }
        *decode_counts.entry(guess).or_default() += worlds.len() as u64;
    }

    let p_error = 1.0 - correct as f64 / n as f64;
    // Deterministic decoder over a deterministic schedule: the output is a
    // function of the world, so I(w; ŵ) = H(ŵ).
    let mut weighted = crate::info::Compensated::default();
    for &count in decode_counts.values() {
        let c = count as f64;
        weighted.add(c * c.log2());
    }
    let log_n = (n as f64).log2();
    let mi_decoder_bits = log_n - weighted.value() / n as f64;
    let cond_entropy_bits = log_n - mi_decoder_bits;
    let mut oracle_schedule = schedule;
    let mi_transcript_bits = brute_force_mi(n, q, &mut oracle_schedule)?;
    let fano_bound_bits = fano_posterior_bound(p_error, n, LogBase::Bits)?;

    Ok(DecoderAuditReport {
        n,
        q,
        decoder,
        p_error,
        mi_decoder_bits,
        cond_entropy_bits,
        mi_transcript_bits,
        fano_bound_bits,
        fano_ok: cond_entropy_bits <= fano_bound_bits + TIE_TOLERANCE_BITS,
        dpi_ok: mi_decoder_bits <= mi_transcript_bits + TIE_TOLERANCE_BITS,
    })
}
