//! `twistlab`: build constructions, replay their invariants and attack the
//! inequalities they rely on.
//!
//! Exit codes: 0 success, 2 construction failure, 3 violated inequality,
//! 64 usage error.

mod eval;

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use twistlab::construction::{
    audit_state, check_level_mass, run_case_a, run_construction, trivial_dual_witnesses,
    AuditEntry, BuildOptions, ConstructionState, DualWitness, MAX_DEPTH,
};
use twistlab::oracles::{
    chain_ascent, chain_fuzzer, crosspolytope_report, quasi_constant_adversary, MassOptions,
    OracleReport, Strategy,
};
use twistlab::quasilinear::{normalize_constant, QuasiFunctional, SplitMap};
use twistlab::rational::{self, Rational};
use twistlab::FinSeq;

const EXIT_CONSTRUCTION: u8 = 2;
const EXIT_VIOLATION: u8 = 3;
const EXIT_USAGE: u8 = 64;

/// Chain-fuzzer distances below the unit sphere used by `verify`.
const VERIFY_DELTAS: [&str; 2] = ["1/1000", "1/1000000"];

#[derive(Parser)]
#[command(name = "twistlab", version, about = "Twisted sums, quasi-linear maps and trivial-dual constructions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the level-by-level construction and write state.json, levels.csv.
    Construct(ConstructArgs),
    /// Replay every invariant of a state and fuzz the bound chain.
    Verify(VerifyArgs),
    /// Evaluate a JSON expression, e.g. '{"ribe":{"1":"1/2","2":"1/2"}}'.
    Eval {
        expression: String,
    },
    /// Run one adversarial search and write oracle-report.json.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Case {
    /// Disjoint mean-zero pairs in l1 with the Ribe function.
    A,
    /// James space: needs a user-supplied splitting map via --input.
    B,
    /// Mixed l_p sums with the weighted Ribe function.
    C,
    /// Functional, splitting map and vectors read from --input.
    Custom,
}

#[derive(clap::Args)]
struct ConstructArgs {
    #[arg(long, value_enum, default_value = "a")]
    case: Case,
    #[arg(long, default_value_t = 6)]
    depth: usize,
    /// Number of generators d_j for case (a).
    #[arg(long, default_value_t = 2)]
    generators: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// JSON with `functional`, `split`, `xs`, `ds` (custom and case b).
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(clap::Args)]
struct VerifyArgs {
    #[arg(long)]
    state: PathBuf,
    #[arg(long, default_value = "10000", value_parser = parse_count)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Smallest margin a fuzzed inequality must keep to count as satisfied.
    #[arg(long, default_value_t = 0.0)]
    tolerance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Target {
    QuasiConstant,
    Lemma5,
    Chain,
    Crosspolytope,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Kind {
    /// The Ribe function with its assumed constant 4.
    Ribe,
    /// The Ribe function divided by 4.
    NormalizedRibe,
    /// Weighted Ribe on mixed l2 sums with weights 2^{1-n}, n <= 16.
    WeightedRibe,
}

#[derive(clap::Args)]
struct OracleArgs {
    #[arg(value_enum)]
    target: Target,
    #[arg(long)]
    state: Option<PathBuf>,
    /// Level attacked by `lemma5` and `crosspolytope`; all levels if omitted.
    #[arg(long)]
    level: Option<usize>,
    /// Trials for random searches, iterations for `chain --ascent`.
    #[arg(long, visible_alias = "budget", default_value = "10000", value_parser = parse_count)]
    trials: u64,
    #[arg(long, value_enum, default_value = "ribe")]
    kind: Kind,
    /// Functional JSON file; overrides --kind.
    #[arg(long)]
    functional: Option<PathBuf>,
    /// JSON list of vectors for `crosspolytope`; overrides --state.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "auto")]
    strategy: StrategyArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Distance below the unit sphere for `chain`, as a rational.
    #[arg(long, default_value = "1/1000")]
    delta: String,
    /// Coordinate ascent instead of random certificates for `chain`.
    #[arg(long)]
    ascent: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Auto,
    Orthant,
    Heuristic,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Auto => Strategy::Auto,
            StrategyArg::Orthant => Strategy::Orthant,
            StrategyArg::Heuristic => Strategy::Heuristic,
        }
    }
}

/// Accepts plain integers and float notation such as `1e6`.
fn parse_count(text: &str) -> Result<u64, String> {
    if let Ok(n) = text.parse::<u64>() {
        return Ok(n);
    }
    match text.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 => Ok(v as u64),
        _ => Err(format!("`{text}` is not a non-negative integer")),
    }
}

/// An error that knows its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn usage(error: impl Into<anyhow::Error>) -> Self {
        Self { code: EXIT_USAGE, error: error.into() }
    }

    fn construction(error: impl Into<anyhow::Error>) -> Self {
        Self { code: EXIT_CONSTRUCTION, error: error.into() }
    }

    fn violation(error: impl Into<anyhow::Error>) -> Self {
        Self { code: EXIT_VIOLATION, error: error.into() }
    }

    fn other(error: impl Into<anyhow::Error>) -> Self {
        Self { code: 1, error: error.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_USAGE);
    }
    let result = match cli.command {
        Command::Construct(args) => cmd_construct(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Eval { expression } => cmd_eval(&expression),
        Command::Oracle(args) => cmd_oracle(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(text) = std::env::var("TWISTLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = text
        .trim()
        .parse()
        .map_err(|_| anyhow!("TWISTLAB_THREADS must be a positive integer, got `{text}`"))?;
    if n == 0 {
        return Err(anyhow!("TWISTLAB_THREADS must be positive"));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// File helpers.

/// Writes through a temporary file in the same directory and renames it.
fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(Failure::other)?;
    text.push('\n');
    write_atomic(path, text.as_bytes()).map_err(Failure::other)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::usage)?;
    serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(Failure::usage)
}

fn load_state(path: &Path) -> Result<ConstructionState, Failure> {
    read_json(path)
}

// ---------------------------------------------------------------------------
// construct

/// Inputs for a custom construction.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomInput {
    functional: QuasiFunctional,
    split: SplitMap,
    xs: Vec<FinSeq>,
    ds: Vec<FinSeq>,
    /// Divide the functional and the split map by the functional's
    /// assumed constant before building.
    #[serde(default)]
    normalize: bool,
}

fn cmd_construct(args: &ConstructArgs) -> CmdResult {
    if args.depth == 0 || args.depth > MAX_DEPTH {
        return Err(Failure::usage(anyhow!("--depth must lie in 1..={MAX_DEPTH}, got {}", args.depth)));
    }
    let state = match args.case {
        Case::A => {
            if args.input.is_some() {
                return Err(Failure::usage(anyhow!("--input is only read for --case custom or b")));
            }
            if args.generators == 0 {
                return Err(Failure::usage(anyhow!("--generators must be positive")));
            }
            run_case_a(args.depth, args.generators, args.seed).map_err(Failure::construction)?
        }
        Case::C => {
            return Err(Failure::usage(anyhow!(
                "case c is not constructed: the generator sets live in l1 only; \
                 use `eval` with weighted_ribe or nonsplit for mixed l_p sums"
            )))
        }
        Case::B | Case::Custom => {
            let Some(input) = &args.input else {
                let why = if args.case == Case::B {
                    "case b needs a splitting map for the James-space functional, which is \
                     only known to exist; supply it with --input"
                } else {
                    "--case custom needs --input"
                };
                return Err(Failure::usage(anyhow!(why)));
            };
            let custom: CustomInput = read_json(input)?;
            build_custom(custom, args)?
        }
    };
    let dir = &args.out;
    write_json(&dir.join("state.json"), &state)?;
    let mut csv = csv::Writer::from_writer(Vec::new());
    for row in state.table() {
        csv.serialize(row).map_err(Failure::other)?;
    }
    let bytes = csv.into_inner().map_err(|e| Failure::other(anyhow!("{e}")))?;
    write_atomic(&dir.join("levels.csv"), &bytes).map_err(Failure::other)?;
    print_table(&state);
    println!("wrote {} and {}", dir.join("state.json").display(), dir.join("levels.csv").display());
    Ok(())
}

fn build_custom(custom: CustomInput, args: &ConstructArgs) -> Result<ConstructionState, Failure> {
    let (f, split) = if custom.normalize {
        let c = custom.functional.assumed_constant();
        let inv = rational::from_f64(1.0 / c)
            .ok_or_else(|| Failure::usage(anyhow!("cannot normalize constant {c}")))?;
        (normalize_constant(&custom.functional).map_err(Failure::usage)?, custom.split.scaled(&inv))
    } else {
        (custom.functional, custom.split)
    };
    let opts = BuildOptions {
        mass: MassOptions { seed: args.seed, ..MassOptions::default() },
        ..BuildOptions::default()
    };
    let mut state = run_construction(&f, &split, &custom.xs, &custom.ds, args.depth, &opts)
        .map_err(Failure::construction)?;
    if args.case == Case::B {
        state.case = "b".into();
    }
    Ok(state)
}

fn print_table(state: &ConstructionState) {
    println!("{:>3}  {:>10}  {:>6}  {:>8}  {:>10}  {:>6}", "n", "c_n", "s_n", "m_n", "M_n", "|G_n|");
    for row in state.table() {
        println!(
            "{:>3}  {:>10}  {:>6}  {:>8}  {:>10}  {:>6}",
            row.n, row.c_n, row.s_n, row.m_n, row.basis_constant, row.generators
        );
    }
}

// ---------------------------------------------------------------------------
// verify

#[derive(Serialize)]
struct Transcript {
    state: String,
    trials: u64,
    seed: u64,
    tolerance: f64,
    audit: Vec<AuditEntry>,
    chain: Vec<ChainRun>,
    dual: Vec<DualWitness>,
    /// Smallest margin over the fuzzed inequalities; absent without trials.
    min_margin: Option<f64>,
    failures: Vec<String>,
    passed: bool,
}

#[derive(Serialize)]
struct ChainRun {
    delta: String,
    report: OracleReport,
}

fn cmd_verify(args: &VerifyArgs) -> CmdResult {
    if !(args.tolerance >= 0.0) {
        return Err(Failure::usage(anyhow!("--tolerance must be non-negative")));
    }
    let state = load_state(&args.state)?;
    let mass = MassOptions { seed: args.seed, ..MassOptions::default() };
    let audit = audit_state(&state, mass);
    let mut failures: Vec<String> = audit
        .iter()
        .filter(|e| !e.passed)
        .map(|e| format!("level {}: {} failed ({})", e.level, e.check, e.detail))
        .collect();

    let mut dual = Vec::new();
    for m in 1..=state.depth.min(state.levels.len()) {
        match trivial_dual_witnesses(&state, m, 1) {
            Ok(w) => {
                if !(w.hull_exact && w.members_valid && w.boundary && !w.unit_in_ball) {
                    failures.push(format!("level {m}: dual-witness failed"));
                }
                dual.push(w);
            }
            Err(e) => failures.push(format!("level {m}: dual-witness failed ({e})")),
        }
    }

    let mut chain = Vec::new();
    let mut min_margin: Option<f64> = None;
    if args.trials > 0 && failures.is_empty() {
        for delta in VERIFY_DELTAS {
            let d = rational::parse_rational(delta).expect("constant");
            let report = chain_fuzzer(&state, args.trials, args.seed, &d);
            let margin = -report.best_violation;
            min_margin = Some(min_margin.map_or(margin, |m: f64| m.min(margin)));
            if !(margin > args.tolerance) {
                failures.push(format!(
                    "chain (delta = {delta}): margin {margin:.3e} at or below tolerance {:.3e}",
                    args.tolerance
                ));
            }
            chain.push(ChainRun { delta: delta.into(), report });
        }
    }

    let passed = failures.is_empty();
    let transcript = Transcript {
        state: args.state.display().to_string(),
        trials: args.trials,
        seed: args.seed,
        tolerance: args.tolerance,
        audit,
        chain,
        dual,
        min_margin,
        failures: failures.clone(),
        passed,
    };
    let path = args.out.join("transcript.json");
    write_json(&path, &transcript)?;

    let checks = transcript.audit.len();
    println!("static checks: {} of {checks} passed", transcript.audit.iter().filter(|e| e.passed).count());
    match min_margin {
        Some(m) => println!("chain fuzzer: {} trials per delta, min margin {m:.6e}", args.trials),
        None if args.trials == 0 => println!("chain fuzzer: skipped (trials = 0)"),
        None => println!("chain fuzzer: skipped after static failures"),
    }
    if passed {
        println!("verified; transcript in {}", path.display());
        Ok(())
    } else {
        for f in &failures {
            println!("violation: {f}");
        }
        Err(Failure::violation(anyhow!(
            "{} violated check(s), first: {}; see {}",
            failures.len(),
            failures[0],
            path.display()
        )))
    }
}

// ---------------------------------------------------------------------------
// eval

fn cmd_eval(expression: &str) -> CmdResult {
    let expr: eval::Expr = serde_json::from_str(expression)
        .context("parsing expression")
        .map_err(Failure::usage)?;
    let value = eval::evaluate(&expr).map_err(Failure::usage)?;
    println!("{}", eval::format_value(value));
    Ok(())
}

// ---------------------------------------------------------------------------
// oracle

fn oracle_functional(args: &OracleArgs) -> Result<QuasiFunctional, Failure> {
    if let Some(path) = &args.functional {
        return read_json(path);
    }
    Ok(match args.kind {
        Kind::Ribe => QuasiFunctional::ribe(),
        Kind::NormalizedRibe => normalize_constant(&QuasiFunctional::ribe()).map_err(Failure::other)?,
        Kind::WeightedRibe => {
            let weights = FinSeq::from_pairs((1..=16).map(|n| (n, rational::pow2(1 - n as i64))));
            QuasiFunctional::weighted_ribe(weights, rational::int(2)).map_err(Failure::other)?
        }
    })
}

fn required_state(args: &OracleArgs) -> Result<ConstructionState, Failure> {
    match &args.state {
        Some(p) => load_state(p),
        None => Err(Failure::usage(anyhow!("{:?} needs --state", args.target))),
    }
}

fn selected_levels(state: &ConstructionState, level: Option<usize>) -> Result<Vec<usize>, Failure> {
    match level {
        Some(n) if state.level(n).is_some() => Ok(vec![n]),
        Some(n) => Err(Failure::usage(anyhow!("level {n} outside 1..={}", state.levels.len()))),
        None => Ok((1..=state.levels.len()).collect()),
    }
}

/// The report with the largest violation (first on ties).
fn worst(reports: Vec<OracleReport>) -> Option<OracleReport> {
    reports.into_iter().reduce(|a, b| {
        if b.best_violation > a.best_violation || (a.best_violation.is_nan() && !b.best_violation.is_nan()) {
            b
        } else {
            a
        }
    })
}

fn cmd_oracle(args: &OracleArgs) -> CmdResult {
    let report = match args.target {
        Target::QuasiConstant => {
            let f = oracle_functional(args)?;
            quasi_constant_adversary(&f, args.trials, args.seed)
        }
        Target::Lemma5 => {
            let state = required_state(args)?;
            let opts = MassOptions { seed: args.seed, ..MassOptions::default() };
            let levels = selected_levels(&state, args.level)?;
            let reports = levels
                .iter()
                .map(|&n| {
                    let r = check_level_mass(state.level(n).expect("checked"), opts);
                    println!(
                        "level {n}: best mass {:.6e}, eta {:.6e}, violation {:.6e} ({})",
                        r.best_value, r.threshold, r.best_violation, r.method
                    );
                    r
                })
                .collect();
            worst(reports).expect("at least one level")
        }
        Target::Chain => {
            let delta = rational::parse_rational(&args.delta).map_err(Failure::usage)?;
            if delta < Rational::from_integer(0.into()) || delta >= Rational::from_integer(1.into()) {
                return Err(Failure::usage(anyhow!("--delta must lie in [0, 1)")));
            }
            let state = match &args.state {
                Some(p) => load_state(p)?,
                // Nothing is examined, so any small state will do.
                None if args.trials == 0 => run_case_a(1, 2, args.seed).map_err(Failure::other)?,
                None => return Err(Failure::usage(anyhow!("chain needs --state"))),
            };
            if args.ascent {
                chain_ascent(&state, args.trials, args.seed, &delta)
            } else {
                chain_fuzzer(&state, args.trials, args.seed, &delta)
            }
        }
        Target::Crosspolytope => {
            let families: Vec<Vec<FinSeq>> = if let Some(p) = &args.input {
                vec![read_json(p)?]
            } else {
                let state = required_state(args)?;
                selected_levels(&state, args.level)?
                    .into_iter()
                    // The trailing minus-sum vector makes the full family
                    // dependent; the basis constant is taken without it.
                    .map(|n| {
                        let x = &state.level(n).expect("checked").x;
                        x[..x.len().saturating_sub(1)].to_vec()
                    })
                    .collect()
            };
            let mut reports = Vec::new();
            for ys in &families {
                reports.push(crosspolytope_report(ys, args.strategy.into()).map_err(Failure::usage)?);
            }
            worst(reports).ok_or_else(|| Failure::usage(anyhow!("no vectors given")))?
        }
    };
    let path = args.out.join("oracle-report.json");
    write_json(&path, &report)?;
    println!(
        "{} ({}): best value {}, threshold {}, violation {}",
        report.target,
        report.method,
        eval::format_value(report.best_value),
        eval::format_value(report.threshold),
        eval::format_value(report.best_violation)
    );
    println!("report in {}", path.display());
    if report.violated() {
        Err(Failure::violation(anyhow!("{} oracle found a violation", report.target)))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_accept_float_notation() {
        assert_eq!(parse_count("1e6"), Ok(1_000_000));
        assert_eq!(parse_count("250"), Ok(250));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
