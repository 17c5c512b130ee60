//! Probing schedules.
//!
//! A schedule decides which candidate each searcher inspects next. Four
//! kinds are supported: lexicographic order, a uniformly random permutation
//! (without replacement), independent uniform draws (with replacement), and
//! scripted candidate lists (adaptivity as a function of history length).
//! Schedules carry their iteration state and are confined to a single
//! search run; create one per trial.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::rng::{trial_rng, Stream};

/// Random permutations are realized with a partial Fisher-Yates array up to
/// this library size and with a sparse map beyond it (same draw sequence,
/// same outputs, bounded memory either way).
const PERMUTATION_ARRAY_LIMIT: u64 = 1 << 20;

/// Library sizes accepted for the random-permutation kind; beyond this even
/// the sparse representation is refused rather than silently thrashing.
const PERMUTATION_CAPACITY: u64 = 1 << 22;

/// Schedule families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    Lexicographic,
    RandomWithoutReplacement,
    RandomWithReplacement,
    AdaptiveScripted,
}

impl std::str::FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lex" | "lexicographic" => Ok(ScheduleKind::Lexicographic),
            "random" | "random-without-replacement" => Ok(ScheduleKind::RandomWithoutReplacement),
            "replacement" | "random-with-replacement" => Ok(ScheduleKind::RandomWithReplacement),
            "scripted" | "adaptive-scripted" => Ok(ScheduleKind::AdaptiveScripted),
            other => Err(Error::domain(format!("unknown schedule kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
enum State {
    Lexicographic,
    /// Partial Fisher-Yates; `slots` is either a dense array or a sparse
    /// displacement map, consuming one uniform draw per emitted candidate.
    Permutation { rng: Stream, slots: Slots },
    Replacement { rng: Stream },
    Scripted { script: Vec<u64> },
}

#[derive(Debug, Clone)]
enum Slots {
    Dense(Vec<u64>),
    Sparse(HashMap<u64, u64>),
}

impl Slots {
    fn get(&self, index: u64) -> u64 {
        match self {
            Slots::Dense(v) => v[index as usize],
            Slots::Sparse(m) => m.get(&index).copied().unwrap_or(index),
        }
    }

    fn set(&mut self, index: u64, value: u64) {
        match self {
            Slots::Dense(v) => v[index as usize] = value,
            Slots::Sparse(m) => {
                m.insert(index, value);
            }
        }
    }
}

/// A probing policy plus its iteration state.
#[derive(Debug, Clone)]
pub struct Schedule {
    kind: ScheduleKind,
    library_size: u64,
    issued: u64,
    state: State,
}

impl Schedule {
    /// Visit candidates 0, 1, 2, ... in order.
    pub fn lexicographic(library_size: u64) -> Self {
        Schedule {
            kind: ScheduleKind::Lexicographic,
            library_size,
            issued: 0,
            state: State::Lexicographic,
        }
    }

    /// Visit a uniformly random permutation of the library, derived from a
    /// seeded stream.
    pub fn random_without_replacement(library_size: u64, seed: u64) -> Result<Self> {
        Self::random_without_replacement_from(library_size, trial_rng(seed, 0))
    }

    /// Same, but driven by an externally derived stream (per-trial use).
    pub fn random_without_replacement_from(library_size: u64, rng: Stream) -> Result<Self> {
        if library_size > PERMUTATION_CAPACITY {
            return Err(Error::capacity(format!(
                "random permutation schedule limited to n <= {PERMUTATION_CAPACITY}, got {library_size}"
            )));
        }
        let slots = if library_size <= PERMUTATION_ARRAY_LIMIT {
            Slots::Dense((0..library_size).collect())
        } else {
            Slots::Sparse(HashMap::new())
        };
        Ok(Schedule {
            kind: ScheduleKind::RandomWithoutReplacement,
            library_size,
            issued: 0,
            state: State::Permutation { rng, slots },
        })
    }

    /// Independent uniform draws; candidates may repeat.
    pub fn random_with_replacement(library_size: u64, seed: u64) -> Self {
        Self::random_with_replacement_from(library_size, trial_rng(seed, 0))
    }

    pub fn random_with_replacement_from(library_size: u64, rng: Stream) -> Self {
        Schedule {
            kind: ScheduleKind::RandomWithReplacement,
            library_size,
            issued: 0,
            state: State::Replacement { rng },
        }
    }

    /// Fixed candidate list; the next batch is always the next script
    /// entries, regardless of observed outcomes.
    pub fn scripted(library_size: u64, script: Vec<u64>) -> Result<Self> {
        if let Some(&bad) = script.iter().find(|&&c| c >= library_size) {
            return Err(Error::domain(format!(
                "scripted schedule contains candidate {bad} >= n = {library_size}"
            )));
        }
        Ok(Schedule {
            kind: ScheduleKind::AdaptiveScripted,
            library_size,
            issued: 0,
            state: State::Scripted { script },
        })
    }

    /// Parse a script from a JSON array of candidate integers.
    pub fn scripted_from_json(library_size: u64, json: &str) -> Result<Self> {
        let script: Vec<u64> = serde_json::from_str(json)
            .map_err(|e| Error::domain(format!("script is not a JSON array of integers: {e}")))?;
        Self::scripted(library_size, script)
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn library_size(&self) -> u64 {
        self.library_size
    }

    /// Candidates issued so far (the history length).
    pub fn issued(&self) -> u64 {
        self.issued
    }

    /// Unvisited candidates left, or `None` when unbounded (with
    /// replacement).
    pub fn remaining(&self) -> Option<u64> {
        match &self.state {
            State::Lexicographic | State::Permutation { .. } => {
                Some(self.library_size - self.issued)
            }
            State::Replacement { .. } => None,
            State::Scripted { script } => Some(script.len() as u64 - self.issued),
        }
    }

    /// True for the kinds that guarantee no candidate repeats within a run.
    pub fn is_without_replacement(&self) -> bool {
        matches!(
            self.kind,
            ScheduleKind::Lexicographic | ScheduleKind::RandomWithoutReplacement
        )
    }

    fn next_candidate(&mut self) -> Result<u64> {
        let position = self.issued;
        let candidate = match &mut self.state {
            State::Lexicographic => {
                if position >= self.library_size {
                    return Err(Error::protocol("lexicographic schedule exhausted"));
                }
                position
            }
            State::Permutation { rng, slots } => {
                if position >= self.library_size {
                    return Err(Error::protocol("permutation schedule exhausted"));
                }
                let swap_with = rng.random_range(position..self.library_size);
                let chosen = slots.get(swap_with);
                let displaced = slots.get(position);
                slots.set(swap_with, displaced);
                chosen
            }
            State::Replacement { rng } => rng.random_range(0..self.library_size),
            State::Scripted { script } => {
                let Some(&candidate) = script.get(position as usize) else {
                    return Err(Error::ScriptExhausted {
                        needed: 1,
                        available: 0,
                    });
                };
                candidate
            }
        };
        self.issued += 1;
        Ok(candidate)
    }

    /// Next batch of `batch_size` candidates, consuming schedule state.
    /// Without-replacement kinds return distinct candidates and fail if
    /// fewer remain; scripts fail if shorter than the demand.
    pub fn next_batch(&mut self, batch_size: u64) -> Result<Vec<u64>> {
        if batch_size == 0 {
            return Err(Error::domain("next_batch: batch size must be >= 1"));
        }
        if let Some(left) = self.remaining() {
            if left < batch_size {
                return match self.kind {
                    ScheduleKind::AdaptiveScripted => Err(Error::ScriptExhausted {
                        needed: batch_size,
                        available: left,
                    }),
                    _ => Err(Error::protocol(format!(
                        "schedule has {left} candidates left, batch of {batch_size} requested"
                    ))),
                };
            }
        }
        (0..batch_size).map(|_| self.next_candidate()).collect()
    }

    /// First `count` candidates as a plain list (oracle and audit helper).
    pub fn take_prefix(&mut self, count: u64) -> Result<Vec<u64>> {
        if count == 0 {
            return Ok(Vec::new());
        }
        self.next_batch(count)
    }

    /// Flattened probe position (1-based) at which this schedule first hits
    /// `target`. Takes a fresh schedule and consumes it. Lexicographic order
    /// admits a direct answer (equivalent to walking, see tests); the other
    /// bounded kinds walk their candidate sequence.
    pub fn hit_position(mut self, target: u64) -> Result<u64> {
        if target >= self.library_size {
            return Err(Error::domain(format!(
                "hit_position: target {target} >= n = {}",
                self.library_size
            )));
        }
        if self.issued != 0 {
            return Err(Error::protocol(
                "hit_position requires a fresh schedule",
            ));
        }
        match self.kind {
            ScheduleKind::Lexicographic => Ok(target + 1),
            ScheduleKind::RandomWithReplacement => Err(Error::unsupported(
                "hit position is unbounded for with-replacement schedules",
            )),
            _ => {
                let mut position = 0;
                while self.remaining() != Some(0) {
                    position += 1;
                    if self.next_candidate()? == target {
                        return Ok(position);
                    }
                }
                Err(Error::protocol(
                    "schedule exhausted before reaching the target candidate",
                ))
            }
        }
    }
}

/// Empirical distribution of the flattened hit position under a uniformly
/// drawn hidden index.
#[derive(Debug, Clone, Serialize)]
pub struct HitPositionReport {
    pub n: u64,
    pub trials: u64,
    /// counts[i] = number of trials whose hit occurred at position i+1.
    pub counts: Vec<u64>,
    pub chi_square: f64,
    pub p_value: f64,
}

impl HitPositionReport {
    pub fn mean_position(&self) -> f64 {
        let total: f64 = self
            .counts
            .iter()
            .enumerate()
            .map(|(i, &c)| (i as f64 + 1.0) * c as f64)
            .sum();
        total / self.trials as f64
    }
}

fn schedule_for_trial(kind: ScheduleKind, n: u64, rng: Stream) -> Result<Schedule> {
    match kind {
        ScheduleKind::Lexicographic => Ok(Schedule::lexicographic(n)),
        ScheduleKind::RandomWithoutReplacement => Schedule::random_without_replacement_from(n, rng),
        ScheduleKind::RandomWithReplacement => Ok(Schedule::random_with_replacement_from(n, rng)),
        ScheduleKind::AdaptiveScripted => Err(Error::unsupported(
            "hit-position sampling over scripted schedules is not defined",
        )),
    }
}

/// Sample the hit-position distribution over `trials` uniformly drawn hidden
/// indices, with a fresh schedule per trial, and test it against uniformity.
pub fn hit_position_distribution(
    kind: ScheduleKind,
    n: u64,
    trials: u64,
    master_seed: u64,
) -> Result<HitPositionReport> {
    if matches!(kind, ScheduleKind::RandomWithReplacement) {
        return Err(Error::unsupported(
            "hit-position distribution is unbounded for with-replacement schedules",
        ));
    }
    if trials == 0 {
        return Err(Error::domain("hit_position_distribution: trials must be >= 1"));
    }
    if n > PERMUTATION_CAPACITY {
        return Err(Error::capacity(format!(
            "hit_position_distribution materializes n counts; n = {n} is too large"
        )));
    }
    let mut counts = vec![0u64; n as usize];
    for trial in 0..trials {
        let mut rng = trial_rng(master_seed, trial);
        let target = rng.random_range(0..n);
        let schedule = schedule_for_trial(kind, n, rng)?;
        let position = schedule.hit_position(target)?;
        counts[(position - 1) as usize] += 1;
    }
    let (chi_square, p_value) = chi_square_uniform(&counts, trials)?;
    Ok(HitPositionReport {
        n,
        trials,
        counts,
        chi_square,
        p_value,
    })
}

/// Hit positions for every hidden index in turn against one fixed schedule
/// realization. For any without-replacement schedule this is exactly one
/// hit per position.
pub fn hit_position_exhaustive(kind: ScheduleKind, n: u64, seed: u64) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; n as usize];
    for target in 0..n {
        let schedule = schedule_for_trial(kind, n, trial_rng(seed, 0))?;
        let position = schedule.hit_position(target)?;
        counts[(position - 1) as usize] += 1;
    }
    Ok(counts)
}

/// Pearson chi-square statistic of `counts` against the uniform law, plus
/// its upper-tail p-value at n-1 degrees of freedom.
pub fn chi_square_uniform(counts: &[u64], trials: u64) -> Result<(f64, f64)> {
    let bins = counts.len();
    if bins < 2 {
        return Err(Error::domain("chi-square requires at least two bins"));
    }
    if trials == 0 {
        return Err(Error::domain("chi-square requires at least one trial"));
    }
    let expected = trials as f64 / bins as f64;
    let statistic: f64 = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    let dist = ChiSquared::new((bins - 1) as f64)
        .map_err(|e| Error::domain(format!("chi-square df: {e}")))?;
    Ok((statistic, 1.0 - dist.cdf(statistic)))
}
