//! Cross-module invariants checked by exhaustive enumeration at desk scale.

use psocid_core::asymptotics::{closed_form_sum, limit_fraction, solve_threshold};
use psocid_core::experiments::{
    decoder_audit, expected_hit_time, success_curve, tradeoff_table, two_stage_rounds,
    DecoderKind, EvalMode, ParallelismSpec,
};
use psocid_core::info::{
    accumulated_info, brute_force_mi, chain_rule_bound, exact_transcript_mi,
    fano_required_info, min_probes_for_recovery, poly_probe_info, LogBase, MinProbesMode,
    SUMMATION_TERM_LIMIT,
};
use psocid_core::model::{run_search, Instance};
use psocid_core::rng::trial_rng;
use psocid_core::schedule::{
    chi_square_uniform, hit_position_distribution, Schedule, ScheduleKind,
};

const LN_2: f64 = std::f64::consts::LN_2;

fn lex_prefix(n: u64, q: u64) -> Vec<u64> {
    Schedule::lexicographic(n).take_prefix(q).unwrap()
}

/// Conditional law of probe k after k-1 misses is Bernoulli(1/(n-k+1)) for
/// every without-replacement schedule: verified by counting worlds.
#[test]
fn schedule_independence_of_per_probe_law() {
    for n in [2u64, 8, 64] {
        let mut prefixes: Vec<Vec<u64>> = vec![lex_prefix(n, n)];
        for seed in 0..100 {
            let mut schedule = Schedule::random_without_replacement(n, seed).unwrap();
            prefixes.push(schedule.take_prefix(n).unwrap());
        }
        // A scripted schedule (reversed order) belongs to the same class.
        prefixes.push((0..n).rev().collect());

        for candidates in &prefixes {
            for k in 1..=n as usize {
                let consistent: Vec<u64> = (0..n)
                    .filter(|w| !candidates[..k - 1].contains(w))
                    .collect();
                assert_eq!(consistent.len() as u64, n - (k as u64 - 1));
                let hits = consistent
                    .iter()
                    .filter(|&&w| candidates[k - 1] == w)
                    .count();
                assert_eq!(hits, 1, "n={n} k={k}: exactly one consistent world hits");
            }
        }
    }
}

/// Under a public without-replacement schedule, (T_search, J) pins the
/// hidden index: replaying the schedule to the flattened hit position
/// reproduces it.
#[test]
fn hit_coordinates_determine_hidden_index() {
    for (n, seeds) in [(16u64, 4u64), (256, 2), (1024, 1)] {
        for seed in 0..seeds {
            for target in 0..n {
                let instance = Instance::new(n.trailing_zeros(), target, 0).unwrap();
                let p = 3;
                let mut schedule = Schedule::random_without_replacement(n, seed).unwrap();
                let result = run_search(&instance, &mut schedule, p, n).unwrap();
                let t = result.t_search.expect("full sweep always hits");
                let j = result.winning_searcher.unwrap();
                let flat = (t - 1) * p + j;
                assert_eq!(flat, result.q_issued());
                // Re-derive the candidate at the flattened position from a
                // fresh copy of the public schedule.
                let mut replay = Schedule::random_without_replacement(n, seed).unwrap();
                let candidate = *replay.take_prefix(flat).unwrap().last().unwrap();
                assert_eq!(candidate, target);
            }
        }
    }
}

/// Exact transcript MI never exceeds the chain-rule accumulation, and both
/// are monotone in the probe count.
#[test]
fn dominance_and_monotonicity() {
    for bits in 1..=10u32 {
        let n = 1u64 << bits;
        let mut prev_chain = 0.0f64;
        let mut prev_exact = 0.0f64;
        for q in 0..=n {
            let chain = chain_rule_bound(n, q, LogBase::Bits).unwrap();
            let exact = exact_transcript_mi(n, q, LogBase::Bits).unwrap();
            assert!(
                exact <= chain + 1e-9,
                "n={n} q={q}: exact {exact} > chain {chain}"
            );
            assert!(exact <= bits as f64 + 1e-9);
            assert!(chain + 1e-12 >= prev_chain);
            assert!(exact + 1e-12 >= prev_exact);
            prev_chain = chain;
            prev_exact = exact;
        }
    }
}

/// The brute-force oracle agrees with the closed form for random
/// without-replacement schedules too, and with-replacement transcripts
/// never carry more information than without-replacement ones.
#[test]
fn oracle_matches_for_random_schedules() {
    for (n, q) in [(16u64, 5u64), (64, 20), (128, 128)] {
        let exact = exact_transcript_mi(n, q, LogBase::Bits).unwrap();
        for seed in 0..5 {
            let mut schedule = Schedule::random_without_replacement(n, seed).unwrap();
            let brute = brute_force_mi(n, q, &mut schedule).unwrap();
            assert!(
                (brute - exact).abs() <= 1e-9,
                "n={n} q={q} seed={seed}: {brute} vs {exact}"
            );
        }
        let mut replacement = Schedule::random_with_replacement(n, 1);
        let brute = brute_force_mi(n, q, &mut replacement).unwrap();
        assert!(brute <= exact + 1e-9);
    }
}

/// Closed-form fidelity: the nats-level gap to the exact sum stays below
/// 0.1 and shrinks as n grows at fixed q/n.
#[test]
fn closed_form_fidelity() {
    let fractions = [0.1, 0.3, 0.5, 0.7, 0.9];
    let mut previous_worst = f64::INFINITY;
    for bits in [10u32, 14, 18, 22, 24] {
        let n = 1u64 << bits;
        let mut worst = 0.0f64;
        for &fraction in &fractions {
            let q = (fraction * n as f64) as u64;
            let exact_nats = LN_2 * chain_rule_bound(n, q, LogBase::Bits).unwrap();
            let closed = closed_form_sum(n, q).unwrap();
            let gap = (closed - exact_nats).abs();
            assert!(gap <= 0.1, "n=2^{bits} q/n={fraction}: gap {gap}");
            worst = worst.max(gap);
        }
        assert!(
            worst <= previous_worst + 1e-9,
            "worst gap must not grow with n: {worst} after {previous_worst}"
        );
        previous_worst = worst;
    }
}

/// Summation and closed form agree across the routing boundary.
#[test]
fn summation_routing_boundary_cross_validation() {
    let n = 1u64 << 25;
    let boundary = SUMMATION_TERM_LIMIT;
    // Just below: exact summation. Just above: closed form. The two routes
    // must agree to far better than the tolerances built on top of them.
    let below = accumulated_info(n, boundary, LogBase::Bits).unwrap();
    let above = accumulated_info(n, boundary + 1, LogBase::Bits).unwrap();
    assert!(above >= below);
    assert!(
        (above - below) < 1e-4,
        "routing discontinuity: {below} -> {above}"
    );
    // And the closed form evaluated below the boundary agrees with the sum.
    let closed_below = LogBase::Bits.from_nats(closed_form_sum(n, boundary).unwrap());
    assert!((closed_below - below).abs() < 1e-4);
}

/// Two independent routes to the probe threshold: quadratic solution vs
/// summation-based bisection.
#[test]
fn threshold_routes_agree() {
    for bits in [16u32, 18] {
        let n = 1u64 << bits;
        for epsilon in [0.0, 0.1, 0.3] {
            let quadratic = solve_threshold(n, epsilon).unwrap().fraction;
            let bisected = min_probes_for_recovery(n, epsilon, MinProbesMode::ChainBound)
                .unwrap()
                .q as f64
                / n as f64;
            assert!(
                (quadratic - bisected).abs() <= 0.01,
                "n=2^{bits} eps={epsilon}: quadratic {quadratic} vs bisection {bisected}"
            );
        }
    }
}

/// The quadratic threshold fractions extrapolate to the limiting fraction.
#[test]
fn threshold_sweep_extrapolates_to_limit() {
    for epsilon in [0.0, 0.2] {
        let fractions: Vec<(f64, f64)> = (10..=40)
            .step_by(6)
            .map(|bits| {
                let n = 1u64 << bits;
                ((n as f64).ln(), solve_threshold(n, epsilon).unwrap().fraction)
            })
            .collect();
        let (log_a, frac_a) = fractions[fractions.len() - 2];
        let (log_b, frac_b) = fractions[fractions.len() - 1];
        // Model fraction(n) = A - B / ln n and extrapolate to infinity.
        let slope = (frac_b - frac_a) / (1.0 / log_a - 1.0 / log_b);
        let extrapolated = frac_b + slope / log_b;
        let limit = limit_fraction(epsilon).unwrap();
        assert!(
            (extrapolated - limit).abs() <= 0.005,
            "eps={epsilon}: extrapolated {extrapolated} vs limit {limit}"
        );
    }
}

/// Polynomial probe budgets yield vanishing information while the Fano
/// floor keeps growing linearly.
#[test]
fn barrier_gap_diverges() {
    let mut previous = f64::INFINITY;
    for bits in 10..=40u32 {
        let info = poly_probe_info(bits, 3, 1.0).unwrap();
        assert!(info < previous, "N={bits}: {info} not < {previous}");
        previous = info;
    }
    assert!(previous < 1e-3, "N=40 budget info {previous}");

    let mut previous_floor = 0.0;
    for bits in 10..=40u32 {
        let floor =
            fano_required_info(1u64 << bits, 1.0 / 3.0, false, LogBase::Bits).unwrap();
        assert!(floor > previous_floor);
        previous_floor = floor;
    }
}

/// Uniform-position law: chi-square does not reject at the pinned seed, and
/// the empirical mean sits within three standard errors of (n+1)/2.
#[test]
fn hit_positions_are_uniform() {
    let report = hit_position_distribution(
        ScheduleKind::RandomWithoutReplacement,
        256,
        100_000,
        20_260_809,
    )
    .unwrap();
    assert!(
        report.p_value > 0.001,
        "chi-square rejected uniformity: statistic {}, p {}",
        report.chi_square,
        report.p_value
    );
    let lex = hit_position_distribution(ScheduleKind::Lexicographic, 1024, 100_000, 11).unwrap();
    let mean = lex.mean_position();
    let se = (1024.0f64 * 1024.0 / 12.0 / 100_000.0).sqrt();
    assert!((mean - 512.5).abs() <= 3.0 * se, "mean {mean}, se {se}");
}

/// Success curve stays within 4 sigma of q/n except for a vanishing share
/// of grid points (pinned seed).
#[test]
fn success_curve_tracks_analytic_probability() {
    let n = 256u64;
    let trials = 20_000u64;
    let grid: Vec<u64> = (0..=n).collect();
    let points = success_curve(
        n,
        &grid,
        ScheduleKind::RandomWithoutReplacement,
        trials,
        424_242,
    )
    .unwrap();
    let mut outliers = 0usize;
    for point in &points {
        let p = point.analytic;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        if (point.empirical - p).abs() > 4.0 * sigma {
            outliers += 1;
        }
    }
    assert!(
        (outliers as f64) < 0.01 * points.len() as f64,
        "{outliers} of {} grid points beyond 4 sigma",
        points.len()
    );
    assert_eq!(points[0].empirical, 0.0);
    assert_eq!(points[n as usize].empirical, 1.0);
}

/// The empirical hit-position histogram of an exhaustive lexicographic scan
/// is exactly uniform, and the chi-square helper sees it as such.
#[test]
fn exhaustive_scan_is_exactly_uniform() {
    let counts = psocid_core::schedule::hit_position_exhaustive(
        ScheduleKind::Lexicographic,
        64,
        0,
    )
    .unwrap();
    let (statistic, p) = chi_square_uniform(&counts, 64).unwrap();
    assert_eq!(statistic, 0.0);
    assert!(p > 0.999);
}

/// Doubling parallelism halves the search rounds and leaves the
/// time-space product alone (within tolerance), and analytic rows agree
/// with simulated rows where both apply.
#[test]
fn tradeoff_scaling_relations() {
    let base = tradeoff_table(
        &[16],
        ParallelismSpec::Fixed(256),
        1,
        ScheduleKind::Lexicographic,
        20_000,
        9,
    )
    .unwrap();
    let doubled = tradeoff_table(
        &[16],
        ParallelismSpec::Fixed(512),
        1,
        ScheduleKind::Lexicographic,
        20_000,
        9,
    )
    .unwrap();
    let ratio = base[0].search_rounds / doubled[0].search_rounds;
    assert!((ratio - 2.0).abs() < 0.1, "search-round ratio {ratio}");
    let ts_shift = (doubled[0].ts_product - base[0].ts_product).abs() / base[0].ts_product;
    assert!(ts_shift < 0.05, "TS moved by {ts_shift}");

    // Simulated vs analytic expectation at the same configuration.
    let simulated = two_stage_rounds(16, 256, ScheduleKind::Lexicographic, 20_000, 9).unwrap();
    assert_eq!(simulated.mode, EvalMode::Simulated);
    let analytic_rounds = ((1u64 << 16) as f64 + 1.0) / (2.0 * 256.0);
    assert!(
        (simulated.mean_search_rounds - analytic_rounds).abs() / analytic_rounds < 0.02,
        "simulated {} vs analytic {}",
        simulated.mean_search_rounds,
        analytic_rounds
    );
}

/// Exhaustive toy-scale tradeoff: every quantity is exact.
#[test]
fn tradeoff_exhaustive_toy_case() {
    // n = 16, p = 1: search rounds average (n+1)/2 over all worlds.
    let positions: Vec<u64> = (0..16u64)
        .map(|w| Schedule::lexicographic(16).hit_position(w).unwrap())
        .collect();
    let mean = positions.iter().sum::<u64>() as f64 / 16.0;
    assert_eq!(mean, 8.5);
    let verify = psocid_core::model::verification_rounds(4, 1).unwrap();
    assert_eq!(verify, 4);
    let ts = (mean + verify as f64) * 1.0;
    assert_eq!(ts, 12.5);
}

/// Fano and data-processing inequalities hold for every decoder at small n
/// (full q range), including random schedules.
#[test]
fn audits_clean_at_small_scale() {
    for n in [2u64, 4, 8, 16] {
        for q in 0..=n {
            for decoder in [
                DecoderKind::BayesOptimal,
                DecoderKind::FirstCandidate,
                DecoderKind::RandomGuess,
            ] {
                let lex = decoder_audit(n, q, decoder, Schedule::lexicographic(n)).unwrap();
                assert!(lex.fano_ok && lex.dpi_ok, "{lex:?}");
                let random = decoder_audit(
                    n,
                    q,
                    decoder,
                    Schedule::random_without_replacement(n, 3).unwrap(),
                )
                .unwrap();
                assert!(random.fano_ok && random.dpi_ok, "{random:?}");
            }
        }
    }
}

/// Same master seed, same trial indices: results do not depend on how the
/// trial range is partitioned (rayon inside vs a handmade serial fold).
#[test]
fn experiment_results_are_partition_invariant() {
    let parallel = expected_hit_time(128, ScheduleKind::RandomWithoutReplacement, 2_000, 77)
        .unwrap();
    let serial: Vec<u64> = (0..2_000u64)
        .map(|trial| {
            use rand::Rng;
            let mut rng = trial_rng(77, trial);
            let target = rng.random_range(0..128);
            Schedule::random_without_replacement_from(128, rng)
                .unwrap()
                .hit_position(target)
                .unwrap()
        })
        .collect();
    let mean = serial.iter().sum::<u64>() as f64 / 2_000.0;
    assert_eq!(parallel.mean, mean);
}

/// Worker count is immaterial: a single-thread pool reproduces the default
/// pool bit for bit.
#[test]
fn experiment_results_are_worker_count_invariant() {
    let default_pool =
        expected_hit_time(256, ScheduleKind::RandomWithoutReplacement, 3_000, 123).unwrap();
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| {
            expected_hit_time(256, ScheduleKind::RandomWithoutReplacement, 3_000, 123).unwrap()
        });
    assert_eq!(default_pool, single);
}

/// No candidate repeats over a complete run, up to n = 2^12.
#[test]
fn without_replacement_never_repeats() {
    for n in [1u64 << 10, 1 << 12] {
        for seed in [0u64, 1] {
            let mut schedule = Schedule::random_without_replacement(n, seed).unwrap();
            let mut seen = vec![false; n as usize];
            for candidate in schedule.take_prefix(n).unwrap() {
                assert!(!seen[candidate as usize], "repeat at n={n} seed={seed}");
                seen[candidate as usize] = true;
            }
            assert!(seen.iter().all(|&s| s));
        }
    }
}

/// The per-trial round count ceil(Q/p) used by the experiment drivers is
/// exactly run_search's halting round, partial final rounds included.
#[test]
fn round_count_shortcut_matches_search_loop() {
    let n = 32u64;
    for p in [1u64, 3, 5, 7, 32] {
        for target in 0..n {
            let instance = Instance::new(5, target, 0).unwrap();
            let mut schedule = Schedule::lexicographic(n);
            let result = run_search(&instance, &mut schedule, p, n).unwrap();
            let position = Schedule::lexicographic(n).hit_position(target).unwrap();
            assert_eq!(result.t_search, Some(position.div_ceil(p)));
        }
    }
}
