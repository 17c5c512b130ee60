//! `psocid` — command-line front door for the equality-probe search lab.
//!
//! Every numeric result printed to stdout is JSON; tables land in CSV or
//! JSON-lines files via `--out`. Subcommands with randomness take `--seed`
//! and are bit-reproducible. A TOML config file can pre-set shared keys
//! (flags win). Exit codes: 0 success, 1 domain/runtime error, 2 usage.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use psocid_core::asymptotics::{
    convergence_table, gamma1_estimate, gamma_prime_estimate, poly_regime_limit,
    solve_threshold, ConstantEstimate, ConstantName, PolyRegimePoint,
};
use psocid_core::experiments::{
    decoder_audit, expected_hit_time, success_curve, tradeoff_table, DecoderAuditReport,
    DecoderKind, ExperimentConfig, HitTimeReport, ParallelismSpec, SuccessPoint, TradeoffRow,
    STANDARD_TRADEOFF_SWEEP,
};
use psocid_core::info::{
    accumulated_info, brute_force_mi, exact_transcript_mi, min_probes_for_recovery,
    BoundReport, LogBase, MinProbesMode,
};
use psocid_core::model::{run_search, Certificate, Instance};
use psocid_core::report::{
    emit_to_path, ReportEntry, ReportFormat, ReportMeta,
};
use psocid_core::schedule::{Schedule, ScheduleKind};

#[derive(Parser)]
#[command(
    name = "psocid",
    version,
    about = "Equality-probe search: simulation, information accounting, asymptotics",
    after_help = "Environment: PSOCID_OUT_DIR prefixes relative output paths; \
                  PSOCID_LOG=debug enables progress notes on stderr."
)]
struct Cli {
    /// TOML file with default values for shared keys (seed, trials,
    /// epsilon, schedule, format); explicit flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write a run manifest (subcommand, config hash, output hashes,
    /// timestamps) to this path.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run searches: a single transcript-producing run, or seeded
    /// hit-time/success-curve trials.
    Simulate(SimulateArgs),
    /// Transcript information at (n, q): exact closed form, chain-rule
    /// accumulation, optionally the brute-force oracle.
    Mi(MiArgs),
    /// Required-vs-obtainable information report, optionally solving for
    /// the minimal probe count.
    Bounds(BoundsArgs),
    /// Solve the probe-fraction threshold quadratic at (n, epsilon).
    Threshold(ThresholdArgs),
    /// Estimate the entropy-sum constants, with convergence tables.
    Constants(ConstantsArgs),
    /// Obtainable information under polynomial probe budgets q = N^d.
    PolyLimit(PolyLimitArgs),
    /// Time-space product table over a bit-length sweep.
    Tradeoff(TradeoffArgs),
    /// Exact decoder audit (Fano and data-processing checks).
    Audit(AuditArgs),
    /// Build and check certificates against an instance.
    VerifyCert(VerifyCertArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Library size (power of two). Alternative to --n-bits.
    #[arg(long)]
    n: Option<u64>,
    /// Index bit length N (library size 2^N).
    #[arg(long)]
    n_bits: Option<u32>,
    /// Hidden marked index; drawn from the seed when omitted.
    #[arg(long)]
    wstar: Option<u64>,
    /// Seed for the verifier's token key.
    #[arg(long, default_value_t = 0)]
    key_seed: u64,
    /// Schedule kind: lex | random | replacement | scripted.
    #[arg(long)]
    schedule: Option<String>,
    /// JSON file with the candidate script (scripted schedules).
    #[arg(long)]
    script: Option<PathBuf>,
    /// Master seed for schedules and trial streams.
    #[arg(long)]
    seed: Option<u64>,
    /// Parallel searchers per round.
    #[arg(long, default_value_t = 1)]
    p: u64,
    /// Round budget; defaults to n (always enough without replacement).
    #[arg(long)]
    max_rounds: Option<u64>,
    /// Number of Monte Carlo trials; 1 means a single transcribed run.
    #[arg(long)]
    trials: Option<u64>,
    /// Probe-count grid for the success curve (requires --trials > 1).
    #[arg(long, value_delimiter = ',')]
    q_grid: Option<Vec<u64>>,
    /// Write the single-run transcript (JSON lines) here.
    #[arg(long)]
    transcript_out: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct MiArgs {
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    n_bits: Option<u32>,
    /// Probe count.
    #[arg(long)]
    q: u64,
    /// Also run the brute-force enumeration oracle (n <= 2^16).
    #[arg(long)]
    brute: bool,
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    n_bits: Option<u32>,
    /// Error tolerance epsilon in [0, 1).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Evaluate the report at this probe count.
    #[arg(long, conflicts_with = "solve")]
    q: Option<u64>,
    /// Solve for the minimal probe count instead: chain-bound | exact-mi.
    #[arg(long, visible_alias = "mode")]
    solve: Option<String>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ThresholdArgs {
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    n_bits: Option<u32>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ConstantsArgs {
    /// Which constant: gamma1 | gamma-prime.
    #[arg(long)]
    which: String,
    /// Summation cutoff M.
    #[arg(long, visible_alias = "M", default_value_t = 10_000_000)]
    cutoff: u64,
    /// Emit a doubling convergence ladder up to the cutoff.
    #[arg(long)]
    table: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct PolyLimitArgs {
    /// Probe-budget exponent d in q = N^d.
    #[arg(long, default_value_t = 3)]
    exponent: u32,
    /// Bit lengths to evaluate.
    #[arg(long, value_delimiter = ',', default_values_t = vec![20u32, 30, 40, 50, 60])]
    n_bits_list: Vec<u32>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct TradeoffArgs {
    /// Bit lengths to sweep; defaults to the standard sweep.
    #[arg(long, value_delimiter = ',')]
    n_bits_list: Option<Vec<u32>>,
    /// Fixed searchers per round (overrides the polynomial spec).
    #[arg(long)]
    p: Option<u64>,
    /// Polynomial parallelism degree (p = coeff * N^degree).
    #[arg(long, default_value_t = 2)]
    p_degree: u32,
    /// Polynomial parallelism coefficient.
    #[arg(long, default_value_t = 1.0)]
    p_coeff: f64,
    /// Workspace bits per searcher (S = c_s * p).
    #[arg(long, default_value_t = 1)]
    c_s: u64,
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    n_bits: Option<u32>,
    #[arg(long)]
    q: u64,
    /// Decoder: bayes | first | random.
    #[arg(long)]
    decoder: String,
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct VerifyCertArgs {
    #[arg(long)]
    n_bits: u32,
    /// The instance's marked index.
    #[arg(long)]
    wstar: u64,
    #[arg(long, default_value_t = 0)]
    key_seed: u64,
    /// Claimed index; defaults to the marked index (honest).
    #[arg(long)]
    claimed: Option<u64>,
    /// Supply the mark token explicitly as hex.
    #[arg(long)]
    token_hex: Option<String>,
    /// Flip this bit of the honest token before verifying.
    #[arg(long)]
    corrupt_token_bit: Option<usize>,
}

#[derive(Args, Clone)]
struct OutputArgs {
    /// Write the result rows to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv | jsonl.
    #[arg(long)]
    format: Option<String>,
}

/// Defaults loadable from the TOML config file. Flags always win.
#[derive(Default)]
struct ConfigDefaults {
    seed: Option<u64>,
    trials: Option<u64>,
    epsilon: Option<f64>,
    schedule: Option<String>,
    format: Option<String>,
}

impl ConfigDefaults {
    fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let table: toml::Table = text.parse().context("parsing TOML config")?;
        let mut defaults = ConfigDefaults::default();
        for (key, value) in &table {
            match key.as_str() {
                "seed" => defaults.seed = value.as_integer().map(|v| v as u64),
                "trials" => defaults.trials = value.as_integer().map(|v| v as u64),
                "epsilon" => defaults.epsilon = value.as_float().or(value.as_integer().map(|v| v as f64)),
                "schedule" => defaults.schedule = value.as_str().map(String::from),
                "format" => defaults.format = value.as_str().map(String::from),
                other => {
                    return Err(anyhow!("unknown config key '{other}'"));
                }
            }
        }
        Ok(defaults)
    }
}

fn log_enabled(level: &str) -> bool {
    match std::env::var("PSOCID_LOG").as_deref() {
        Ok("debug") => true,
        Ok("quiet") => false,
        _ => level == "info",
    }
}

fn note(level: &str, message: &str) {
    if log_enabled(level) {
        eprintln!("psocid: {message}");
    }
}

/// Resolve an output path against PSOCID_OUT_DIR for relative paths.
fn resolve_out_path(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os("PSOCID_OUT_DIR") {
        Some(dir) => PathBuf::from(dir).join(path),
        None => path.to_path_buf(),
    }
}

fn library_size(n: Option<u64>, n_bits: Option<u32>) -> anyhow::Result<u64> {
    match (n, n_bits) {
        (Some(_), Some(_)) => Err(anyhow!("give either --n or --n-bits, not both")),
        (Some(n), None) => Ok(n),
        (None, Some(bits)) => {
            if bits == 0 || bits > 63 {
                return Err(anyhow!("--n-bits must be in [1, 63]"));
            }
            Ok(1u64 << bits)
        }
        (None, None) => Err(anyhow!("one of --n or --n-bits is required")),
    }
}

fn bit_length_of(n: u64) -> anyhow::Result<u32> {
    if !n.is_power_of_two() {
        return Err(anyhow!("library size {n} is not a power of two"));
    }
    Ok(n.trailing_zeros())
}

fn build_schedule(
    kind_text: Option<&str>,
    script: Option<&Path>,
    n: u64,
    seed: u64,
) -> anyhow::Result<Schedule> {
    let kind = ScheduleKind::from_str(kind_text.unwrap_or("lex"))?;
    Ok(match kind {
        ScheduleKind::Lexicographic => Schedule::lexicographic(n),
        ScheduleKind::RandomWithoutReplacement => Schedule::random_without_replacement(n, seed)?,
        ScheduleKind::RandomWithReplacement => Schedule::random_with_replacement(n, seed),
        ScheduleKind::AdaptiveScripted => {
            let path = script.ok_or_else(|| anyhow!("scripted schedule needs --script FILE"))?;
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading script {}", path.display()))?;
            Schedule::scripted_from_json(n, &text)?
        }
    })
}

fn schedule_kind(kind_text: Option<&str>) -> anyhow::Result<ScheduleKind> {
    Ok(ScheduleKind::from_str(kind_text.unwrap_or("lex"))?)
}

fn report_format(format_text: Option<&str>) -> anyhow::Result<ReportFormat> {
    Ok(ReportFormat::from_str(format_text.unwrap_or("jsonl"))?)
}

/// Collected manifest state for one invocation.
struct RunRecorder {
    subcommand: String,
    config: serde_json::Value,
    started: chrono::DateTime<chrono::Utc>,
    outputs: Vec<ReportEntry>,
}

#[derive(Serialize)]
struct RunManifest {
    subcommand: String,
    config: serde_json::Value,
    artifact_version: String,
    started: String,
    finished: String,
    outputs: Vec<ReportEntry>,
}

impl RunRecorder {
    fn new(subcommand: &str, config: serde_json::Value) -> Self {
        RunRecorder {
            subcommand: subcommand.to_string(),
            config,
            started: chrono::Utc::now(),
            outputs: Vec::new(),
        }
    }

    fn meta(&self, seed: Option<u64>) -> anyhow::Result<ReportMeta> {
        Ok(ReportMeta::new(&self.subcommand, seed, &self.config)?)
    }

    fn emit<T: Serialize>(
        &mut self,
        rows: &[T],
        header: &[&str],
        seed: Option<u64>,
        output: &OutputArgs,
    ) -> anyhow::Result<()> {
        if let Some(out) = &output.out {
            let format = report_format(output.format.as_deref())?;
            let path = resolve_out_path(out);
            let entry = emit_to_path(rows, header, &self.meta(seed)?, format, &path)?;
            note("info", &format!("wrote {}", entry.path.display()));
            self.outputs.push(entry);
        }
        Ok(())
    }

    fn record_file(&mut self, path: &Path, bytes: &[u8]) {
        self.outputs.push(ReportEntry {
            path: path.to_path_buf(),
            sha256: psocid_core::report::sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
    }

    fn finish(self, manifest_path: Option<&Path>) -> anyhow::Result<()> {
        let Some(path) = manifest_path else {
            return Ok(());
        };
        let manifest = RunManifest {
            subcommand: self.subcommand,
            config: self.config,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            started: self.started.to_rfc3339(),
            finished: chrono::Utc::now().to_rfc3339(),
            outputs: self.outputs,
        };
        let path = resolve_out_path(path);
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
        note("info", &format!("wrote manifest {}", path.display()));
        Ok(())
    }
}

fn print_json(value: &impl Serialize) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("psocid: error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let defaults = match &cli.config {
        Some(path) => ConfigDefaults::load(path)?,
        None => ConfigDefaults::default(),
    };
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args, &defaults, cli.manifest.as_deref()),
        Command::Mi(args) => cmd_mi(args, &defaults, cli.manifest.as_deref()),
        Command::Bounds(args) => cmd_bounds(args, &defaults, cli.manifest.as_deref()),
        Command::Threshold(args) => cmd_threshold(args, &defaults, cli.manifest.as_deref()),
        Command::Constants(args) => cmd_constants(args, &defaults, cli.manifest.as_deref()),
        Command::PolyLimit(args) => cmd_poly_limit(args, &defaults, cli.manifest.as_deref()),
        Command::Tradeoff(args) => cmd_tradeoff(args, &defaults, cli.manifest.as_deref()),
        Command::Audit(args) => cmd_audit(args, &defaults, cli.manifest.as_deref()),
        Command::VerifyCert(args) => cmd_verify_cert(args),
    }
}

fn cmd_simulate(
    args: SimulateArgs,
    defaults: &ConfigDefaults,
    manifest: Option<&Path>,
) -> anyhow::Result<()> {
    let n = library_size(args.n, args.n_bits)?;
    let bits = bit_length_of(n)?;
    let seed = args.seed.or(defaults.seed).unwrap_or(0);
    let trials = args.trials.or(defaults.trials).unwrap_or(1);
    let schedule_text = args.schedule.clone().or(defaults.schedule.clone());
    let max_rounds = args.max_rounds.unwrap_or(n);

    let experiment = ExperimentConfig {
        n_bits: Some(bits),
        n: Some(n),
        schedule: schedule_kind(schedule_text.as_deref())?,
        parallelism: ParallelismSpec::Fixed(args.p),
        epsilon: 0.0,
        trials: trials.max(1),
        master_seed: seed,
    };
    experiment.validate()?;
    let config = json!({
        "experiment": experiment, "wstar": args.wstar, "max_rounds": max_rounds,
        "q_grid": args.q_grid, "key_seed": args.key_seed,
    });
    let mut recorder = RunRecorder::new("simulate", config);

    if trials <= 1 {
        let hidden = args
            .wstar
            .unwrap_or_else(|| psocid_core::rng::draw_index(seed, n));
        let instance = Instance::new(bits, hidden, args.key_seed)?;
        let mut schedule =
            build_schedule(schedule_text.as_deref(), args.script.as_deref(), n, seed)?;
        let result = run_search(&instance, &mut schedule, args.p, max_rounds)?;
        if let Some(out) = &args.transcript_out {
            let path = resolve_out_path(out);
            let jsonl = result.transcript.to_jsonl()?;
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            std::fs::write(&path, &jsonl)?;
            recorder.record_file(&path, jsonl.as_bytes());
        }
        let outcomes: Vec<u8> = result.transcript.outcomes().map(u8::from).collect();
        print_json(&json!({
            "n": n,
            "bit_length": bits,
            "hidden_index": hidden,
            "t_search": result.t_search,
            "winning_searcher": result.winning_searcher,
            "q_issued": result.q_issued(),
            "q_paper": result.q_paper(),
            "found": result.found(),
            "outcomes": outcomes,
        }))?;
    } else {
        let kind = schedule_kind(schedule_text.as_deref())?;
        let hit = expected_hit_time(n, kind, trials, seed)?;
        recorder.emit(
            std::slice::from_ref(&hit),
            HitTimeReport::CSV_HEADER,
            Some(seed),
            &args.output,
        )?;
        if let Some(grid) = &args.q_grid {
            let curve = success_curve(n, grid, kind, trials, seed)?;
            let extension = report_format(args.output.format.as_deref())?.extension();
            let mut curve_output = args.output.clone();
            curve_output.out = curve_output
                .out
                .map(|p| p.with_extension(format!("curve.{extension}")));
            recorder.emit(&curve, SuccessPoint::CSV_HEADER, Some(seed), &curve_output)?;
        }
        print_json(&hit)?;
    }
    recorder.finish(manifest)
}

#[derive(Serialize)]
struct MiRow {
    n: u64,
    q: u64,
    exact_mi_bits: f64,
    chain_bound_bits: f64,
    brute_mi_bits: Option<f64>,
}

impl MiRow {
    const CSV_HEADER: &'static [&'static str] =
        &["n", "q", "exact_mi_bits", "chain_bound_bits", "brute_mi_bits"];
}

fn cmd_mi(args: MiArgs, defaults: &ConfigDefaults, manifest: Option<&Path>) -> anyhow::Result<()> {
    let n = library_size(args.n, args.n_bits)?;
    let seed = args.seed.or(defaults.seed).unwrap_or(0);
    let schedule_text = args.schedule.clone().or(defaults.schedule.clone());
    let brute_mi_bits = if args.brute {
        let mut schedule = build_schedule(schedule_text.as_deref(), None, n, seed)?;
        Some(brute_force_mi(n, args.q, &mut schedule)?)
    } else {
        None
    };
    let row = MiRow {
        n,
        q: args.q,
        exact_mi_bits: exact_transcript_mi(n, args.q, LogBase::Bits)?,
        chain_bound_bits: accumulated_info(n, args.q, LogBase::Bits)?,
        brute_mi_bits,
    };
    let config = json!({"n": n, "q": args.q, "brute": args.brute, "seed": seed});
    let mut recorder = RunRecorder::new("mi", config);
    recorder.emit(
        std::slice::from_ref(&row),
        MiRow::CSV_HEADER,
        Some(seed),
        &args.output,
    )?;
    print_json(&row)?;
    recorder.finish(manifest)
}

fn cmd_bounds(
    args: BoundsArgs,
    defaults: &ConfigDefaults,
    manifest: Option<&Path>,
) -> anyhow::Result<()> {
    let n = library_size(args.n, args.n_bits)?;
    let epsilon = args.epsilon.or(defaults.epsilon).unwrap_or(0.0);
    let (q, solved) = match (&args.solve, args.q) {
        (Some(mode_text), None) => {
            let mode = match mode_text.as_str() {
                "chain-bound" => MinProbesMode::ChainBound,
                "exact-mi" => MinProbesMode::ExactMi,
                other => return Err(anyhow!("unknown solve mode '{other}'")),
            };
            let outcome = min_probes_for_recovery(n, epsilon, mode)?;
            (outcome.q, Some(outcome))
        }
        (None, Some(q)) => (q, None),
        (None, None) => return Err(anyhow!("give --q or --solve MODE")),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    let report = BoundReport::compute(n, q, epsilon)?;
    let config = json!({"n": n, "epsilon": epsilon, "q": args.q, "solve": args.solve});
    let mut recorder = RunRecorder::new("bounds", config);
    recorder.emit(
        std::slice::from_ref(&report),
        BoundReport::CSV_HEADER,
        None,
        &args.output,
    )?;
    if let Some(outcome) = solved {
        print_json(&json!({
            "report": report,
            "q_min": outcome.q,
            "fraction": outcome.q as f64 / n as f64,
            "requirement_met": outcome.requirement_met,
        }))?;
    } else {
        print_json(&report)?;
    }
    recorder.finish(manifest)
}

fn cmd_threshold(
    args: ThresholdArgs,
    defaults: &ConfigDefaults,
    manifest: Option<&Path>,
) -> anyhow::Result<()> {
    let n = library_size(args.n, args.n_bits)?;
    let epsilon = args.epsilon.or(defaults.epsilon).unwrap_or(0.0);
    let solution = solve_threshold(n, epsilon)?;
    let config = json!({"n": n, "epsilon": epsilon});
    let mut recorder = RunRecorder::new("threshold", config);
    recorder.emit(
        std::slice::from_ref(&solution),
        &["n", "epsilon", "x", "fraction", "q_continuous", "q_integer"],
        None,
        &args.output,
    )?;
    print_json(&solution)?;
    recorder.finish(manifest)
}

fn cmd_constants(
    args: ConstantsArgs,
    defaults: &ConfigDefaults,
    manifest: Option<&Path>,
) -> anyhow::Result<()> {
    let _ = defaults;
    let which = match args.which.as_str() {
        "gamma1" => ConstantName::Gamma1,
        "gamma-prime" | "gamma_prime" => ConstantName::GammaPrime,
        other => return Err(anyhow!("unknown constant '{other}' (gamma1 | gamma-prime)")),
    };
    let config = json!({"which": args.which, "cutoff": args.cutoff, "table": args.table});
    let mut recorder = RunRecorder::new("constants", config);
    let estimate = match which {
        ConstantName::Gamma1 => gamma1_estimate(args.cutoff)?,
        ConstantName::GammaPrime => gamma_prime_estimate(args.cutoff)?,
    };
    if args.table {
        let mut cutoffs = Vec::new();
        let mut m = 1_000u64;
        while m < args.cutoff {
            cutoffs.push(m);
            m = m.saturating_mul(2);
        }
        cutoffs.push(args.cutoff);
        let rows = convergence_table(which, &cutoffs)?;
        recorder.emit(&rows, ConstantEstimate::CSV_HEADER, None, &args.output)?;
    } else {
        recorder.emit(
            std::slice::from_ref(&estimate),
            ConstantEstimate::CSV_HEADER,
            None,
            &args.output,
        )?;
    }
    print_json(&estimate)?;
    recorder.finish(manifest)
}

fn cmd_poly_limit(
    args: PolyLimitArgs,
    defaults: &ConfigDefaults,
    manifest: Option<&Path>,
) -> anyhow::Result<()> {
    let _ = defaults;
    let rows = poly_regime_limit(&args.n_bits_list, args.exponent)?;
    let config = json!({"exponent": args.exponent, "n_bits_list": args.n_bits_list});
    let mut recorder = RunRecorder::new("poly-limit", config);
    recorder.emit(&rows, PolyRegimePoint::CSV_HEADER, None, &args.output)?;
    print_json(&rows)?;
    recorder.finish(manifest)
}

fn cmd_tradeoff(
    args: TradeoffArgs,
    defaults: &ConfigDefaults,
    manifest: Option<&Path>,
) -> anyhow::Result<()> {
    let sweep = args
        .n_bits_list
        .clone()
        .unwrap_or_else(|| STANDARD_TRADEOFF_SWEEP.to_vec());
    let parallelism = match args.p {
        Some(p) => ParallelismSpec::Fixed(p),
        None => ParallelismSpec::Poly {
            degree: args.p_degree,
            coefficient: args.p_coeff,
        },
    };
    let kind = schedule_kind(args.schedule.as_deref().or(defaults.schedule.as_deref()))?;
    let trials = args.trials.or(defaults.trials).unwrap_or(10_000);
    let seed = args.seed.or(defaults.seed).unwrap_or(0);
    note(
        "debug",
        &format!("tradeoff sweep {sweep:?}, trials {trials}, seed {seed}"),
    );
    let experiment = ExperimentConfig {
        n_bits: sweep.first().copied(),
        n: None,
        schedule: kind,
        parallelism,
        epsilon: 0.0,
        trials,
        master_seed: seed,
    };
    experiment.validate()?;
    let rows = tradeoff_table(&sweep, parallelism, args.c_s, kind, trials, seed)?;
    let config = json!({
        "experiment": experiment, "n_bits_list": sweep, "c_s": args.c_s,
    });
    let mut recorder = RunRecorder::new("tradeoff", config);
    recorder.emit(&rows, TradeoffRow::CSV_HEADER, Some(seed), &args.output)?;
    print_json(&rows)?;
    recorder.finish(manifest)
}

fn cmd_audit(
    args: AuditArgs,
    defaults: &ConfigDefaults,
    manifest: Option<&Path>,
) -> anyhow::Result<()> {
    let n = library_size(args.n, args.n_bits)?;
    let decoder = DecoderKind::from_str(&args.decoder)?;
    let seed = args.seed.or(defaults.seed).unwrap_or(0);
    let schedule = build_schedule(
        args.schedule.as_deref().or(defaults.schedule.as_deref()),
        None,
        n,
        seed,
    )?;
    let report = decoder_audit(n, args.q, decoder, schedule)?;
    let config = json!({"n": n, "q": args.q, "decoder": args.decoder, "seed": seed});
    let mut recorder = RunRecorder::new("audit", config);
    recorder.emit(
        std::slice::from_ref(&report),
        DecoderAuditReport::CSV_HEADER,
        Some(seed),
        &args.output,
    )?;
    print_json(&report)?;
    recorder.finish(manifest)
}

fn cmd_verify_cert(args: VerifyCertArgs) -> anyhow::Result<()> {
    let instance = Instance::new(args.n_bits, args.wstar, args.key_seed)?;
    let honest = instance.issue_certificate();
    let mut token = match &args.token_hex {
        Some(hex) => decode_hex(hex)?,
        None => honest.mark_token.clone(),
    };
    if let Some(bit) = args.corrupt_token_bit {
        if bit / 8 >= token.len() {
            return Err(anyhow!("--corrupt-token-bit {bit} beyond token length"));
        }
        token[bit / 8] ^= 1 << (bit % 8);
    }
    let certificate = Certificate {
        claimed_index: args.claimed.unwrap_or(args.wstar),
        mark_token: token,
    };
    let verdict = instance.verify_certificate(&certificate);
    print_json(&json!({
        "n_bits": args.n_bits,
        "claimed_index": certificate.claimed_index,
        "result": verdict,
        "accepted": verdict.accepted(),
    }))?;
    Ok(())
}

fn decode_hex(text: &str) -> anyhow::Result<Vec<u8>> {
    if !text.len().is_multiple_of(2) {
        return Err(anyhow!("hex token must have an even number of digits"));
    }
    (0..text.len())
        .step_by(2)
        .map(|i| {
            u8::from_str_radix(&text[i..i + 2], 16)
                .map_err(|e| anyhow!("bad hex at offset {i}: {e}"))
        })
        .collect()
}
