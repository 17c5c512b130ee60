//! An executable laboratory for equality-probe search.
//!
//! A library of `2^N` pages hides exactly one marked page. Searchers may
//! learn about the marked index only through equality probes — "is this the
//! page?" — a one-bit answer that is almost always no. This crate simulates
//! the two-stage search/verification protocol over that interface, accounts
//! for the information each probe can carry (exactly and through chain-rule
//! bounds), evaluates the asymptotic threshold machinery those sums induce,
//! and packages the whole thing behind a reproducible, seedable experiment
//! harness.
//!
//! Modules:
//! - [`model`]: instances, probes, transcripts, the search loop, and the
//!   constant-time certificate verifier,
//! - [`schedule`]: probing policies (lexicographic, random with/without
//!   replacement, scripted),
//! - [`info`]: entropy, chain-rule accumulation, exact transcript mutual
//!   information, Fano requirements, and the brute-force oracle,
//! - [`asymptotics`]: the closed-form entropy sum, threshold quadratic,
//!   limiting hit fraction, and the two additive-constant estimators,
//! - [`experiments`]: Monte Carlo / exhaustive experiment drivers,
//! - [`report`]: byte-stable CSV / JSON-lines emission with provenance.

pub mod asymptotics;
pub mod error;
pub mod experiments;
pub mod info;
pub mod model;
pub mod report;
pub mod rng;
pub mod schedule;

pub use error::{Error, Result};
pub use info::{BoundReport, LogBase, MinProbesMode};
pub use model::{Certificate, Instance, SearchResult, Transcript, Verdict};
pub use schedule::{Schedule, ScheduleKind};
