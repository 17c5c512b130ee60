//! The hidden-world model and the two-stage search/verification protocol.
//!
//! An [`Instance`] is a library of `n = 2^N` pages, exactly one of which is
//! marked; the marked index is the only unknown. Searchers interact with it
//! solely through equality probes. A search run executes rounds of parallel
//! probes until the first hit; verification checks a constant-size
//! certificate in time independent of `n`. The library itself is implicit —
//! nothing of size `2^N` is ever materialized.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::schedule::Schedule;

/// Fixed mark-token width, in bytes.
pub const MARK_TOKEN_LEN: usize = 32;

/// One hidden world: bit length N, library size n = 2^N, marked index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    bit_length: u32,
    library_size: u64,
    hidden_index: u64,
    token_key: [u8; 32],
}

impl Instance {
    /// Build an instance with `n = 2^bit_length` pages and the given marked
    /// index. The verifier's token key is derived deterministically from
    /// `key_seed`, so runs are reproducible end to end.
    pub fn new(bit_length: u32, hidden_index: u64, key_seed: u64) -> Result<Self> {
        if bit_length == 0 || bit_length > 63 {
            return Err(Error::domain(format!(
                "instance bit length {bit_length} outside [1, 63]"
            )));
        }
        let library_size = 1u64 << bit_length;
        if hidden_index >= library_size {
            return Err(Error::domain(format!(
                "hidden index {hidden_index} >= n = {library_size}"
            )));
        }
        let mut hasher = Sha256::new();
        hasher.update(b"psocid.instance-key.v1");
        hasher.update(key_seed.to_le_bytes());
        Ok(Instance {
            bit_length,
            library_size,
            hidden_index,
            token_key: hasher.finalize().into(),
        })
    }

    pub fn bit_length(&self) -> u32 {
        self.bit_length
    }

    pub fn library_size(&self) -> u64 {
        self.library_size
    }

    pub fn hidden_index(&self) -> u64 {
        self.hidden_index
    }

    /// Equality probe: 1 iff `candidate` is the marked page. Pure.
    pub fn eq_probe(&self, candidate: u64) -> Result<bool> {
        if candidate >= self.library_size {
            return Err(Error::domain(format!(
                "probe candidate {candidate} >= n = {}",
                self.library_size
            )));
        }
        Ok(candidate == self.hidden_index)
    }

    /// Canonical mark token: a keyed hash over (N, marked index).
    fn canonical_token(&self) -> [u8; MARK_TOKEN_LEN] {
        let mut hasher = Sha256::new();
        hasher.update(b"psocid.mark-token.v1");
        hasher.update(self.token_key);
        hasher.update(self.bit_length.to_le_bytes());
        hasher.update(self.hidden_index.to_le_bytes());
        hasher.finalize().into()
    }

    /// Certificate an honest searcher would submit after finding the page.
    pub fn issue_certificate(&self) -> Certificate {
        Certificate {
            claimed_index: self.hidden_index,
            mark_token: self.canonical_token().to_vec(),
        }
    }

    /// Accept iff the token is the canonical one (constant-time compare)
    /// and the claimed index is the marked page. Cost is independent of n.
    pub fn verify_certificate(&self, certificate: &Certificate) -> Verdict {
        if certificate.mark_token.len() != MARK_TOKEN_LEN {
            return Verdict::Reject(RejectCode::MalformedToken);
        }
        let canonical = self.canonical_token();
        let mut diff = 0u8;
        for (a, b) in canonical.iter().zip(certificate.mark_token.iter()) {
            diff |= a ^ b;
        }
        let index_ok = certificate.claimed_index == self.hidden_index;
        if diff != 0 {
            Verdict::Reject(RejectCode::InvalidToken)
        } else if !index_ok {
            Verdict::Reject(RejectCode::WrongIndex)
        } else {
            Verdict::Accept
        }
    }
}

/// Claimed index plus the opaque mark token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub claimed_index: u64,
    pub mark_token: Vec<u8>,
}

/// Verifier decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "verdict", content = "code")]
pub enum Verdict {
    Accept,
    Reject(RejectCode),
}

impl Verdict {
    pub fn accepted(&self) -> bool {
        matches!(self, Verdict::Accept)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RejectCode {
    /// Token length differs from the fixed constant.
    MalformedToken,
    /// Token bytes do not match the canonical token.
    InvalidToken,
    /// Valid token but the claimed index is not the marked page.
    WrongIndex,
}

/// One probe outcome. Serialized field names and order are the stable wire
/// schema: {t, j, candidate, y}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeRecord {
    /// Round, 1-based.
    #[serde(rename = "t")]
    pub round: u64,
    /// Searcher within the round, 1-based.
    #[serde(rename = "j")]
    pub searcher: u64,
    pub candidate: u64,
    /// Probe outcome bit.
    #[serde(rename = "y", with = "bit")]
    pub outcome: bool,
}

mod bit {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(serde::de::Error::custom(format!(
                "outcome bit must be 0 or 1, got {other}"
            ))),
        }
    }
}

/// Ordered probe record sequence, flattened lexicographically by (t, j).
/// At most one record is a hit, and if present it is the last.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Transcript {
    records: Vec<ProbeRecord>,
}

impl Transcript {
    /// Wrap records, enforcing the flattening order and single-hit-last
    /// invariants.
    pub fn from_records(records: Vec<ProbeRecord>) -> Result<Self> {
        for pair in records.windows(2) {
            if (pair[1].round, pair[1].searcher) <= (pair[0].round, pair[0].searcher) {
                return Err(Error::protocol(
                    "transcript records out of (t, j) lexicographic order",
                ));
            }
        }
        let hits = records.iter().filter(|r| r.outcome).count();
        if hits > 1 {
            return Err(Error::protocol("transcript carries more than one hit"));
        }
        if hits == 1 && !records.last().is_some_and(|r| r.outcome) {
            return Err(Error::protocol("transcript hit is not the final record"));
        }
        Ok(Transcript { records })
    }

    pub fn records(&self) -> &[ProbeRecord] {
        &self.records
    }

    pub fn len(&self) -> u64 {
        self.records.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Outcome bits in flattened order.
    pub fn outcomes(&self) -> impl Iterator<Item = bool> + '_ {
        self.records.iter().map(|r| r.outcome)
    }

    /// One JSON object per line, stable field order.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for record in &self.records {
            let line = serde_json::to_string(record)
                .map_err(|e| Error::Serialize(e.to_string()))?;
            out.push_str(&line);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut records = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: ProbeRecord = serde_json::from_str(line)
                .map_err(|e| Error::Serialize(format!("line {}: {e}", idx + 1)))?;
            records.push(record);
        }
        Transcript::from_records(records)
    }
}

/// Outcome of one search run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchResult {
    /// Round of the first hit, or `None` when the round budget ran out.
    pub t_search: Option<u64>,
    /// Searcher index of the hit within its round.
    pub winning_searcher: Option<u64>,
    pub transcript: Transcript,
    /// Searchers per round the run was configured with.
    pub parallelism: u64,
}

impl SearchResult {
    pub fn found(&self) -> bool {
        self.t_search.is_some()
    }

    /// Probes actually issued (the partial final round is truncated after
    /// the hit).
    pub fn q_issued(&self) -> u64 {
        self.transcript.len()
    }

    /// Per-round accounting, t_search * p: what the information bounds use.
    pub fn q_paper(&self) -> Option<u64> {
        self.t_search.map(|t| t * self.parallelism)
    }
}

/// Compact hit summary for experiment loops that do not need the
/// record-level transcript (equivalent to [`run_search`]; see tests).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HitSummary {
    pub t_search: Option<u64>,
    pub winning_searcher: Option<u64>,
    pub probes_issued: u64,
}

/// Execute rounds of `parallelism` probes until the first hit or until
/// `max_rounds` is exhausted (a censored run, not an error). Within the hit
/// round, probes after the hit are not issued. A final partial round is
/// issued when fewer than `parallelism` unvisited candidates remain.
pub fn run_search(
    instance: &Instance,
    schedule: &mut Schedule,
    parallelism: u64,
    max_rounds: u64,
) -> Result<SearchResult> {
    let mut records = Vec::new();
    let hit = drive_search(instance, schedule, parallelism, max_rounds, |record| {
        records.push(record)
    })?;
    Ok(SearchResult {
        t_search: hit.t_search,
        winning_searcher: hit.winning_searcher,
        transcript: Transcript { records },
        parallelism,
    })
}

/// Transcript-free variant of [`run_search`].
pub fn search_hit(
    instance: &Instance,
    schedule: &mut Schedule,
    parallelism: u64,
    max_rounds: u64,
) -> Result<HitSummary> {
    drive_search(instance, schedule, parallelism, max_rounds, |_| {})
}

fn drive_search(
    instance: &Instance,
    schedule: &mut Schedule,
    parallelism: u64,
    max_rounds: u64,
    mut sink: impl FnMut(ProbeRecord),
) -> Result<HitSummary> {
    if parallelism == 0 {
        return Err(Error::domain("run_search: parallelism must be >= 1"));
    }
    if schedule.library_size() != instance.library_size() {
        return Err(Error::protocol(format!(
            "schedule built for n = {}, instance has n = {}",
            schedule.library_size(),
            instance.library_size()
        )));
    }
    let mut probes_issued = 0u64;
    for round in 1..=max_rounds {
        let batch_size = match schedule.remaining() {
            Some(0) => {
                return Err(Error::protocol(
                    "schedule exhausted before the search found the marked page",
                ))
            }
            Some(left) => left.min(parallelism),
            None => parallelism,
        };
        let batch = schedule.next_batch(batch_size)?;
        for (offset, candidate) in batch.into_iter().enumerate() {
            let searcher = offset as u64 + 1;
            let outcome = instance.eq_probe(candidate)?;
            probes_issued += 1;
            sink(ProbeRecord {
                round,
                searcher,
                candidate,
                outcome,
            });
            if outcome {
                return Ok(HitSummary {
                    t_search: Some(round),
                    winning_searcher: Some(searcher),
                    probes_issued,
                });
            }
        }
    }
    Ok(HitSummary {
        t_search: None,
        winning_searcher: None,
        probes_issued,
    })
}

/// Minimal number of one-way rounds to transmit the N-bit index at
/// `parallelism` bits per round: ceil(N / p). The constant-size token rides
/// along and is reported separately as an additive constant.
pub fn verification_rounds(bit_length: u32, parallelism: u64) -> Result<u64> {
    if bit_length == 0 {
        return Err(Error::domain("verification_rounds: bit length must be >= 1"));
    }
    if parallelism == 0 {
        return Err(Error::domain("verification_rounds: parallelism must be >= 1"));
    }
    Ok((bit_length as u64).div_ceil(parallelism))
}
