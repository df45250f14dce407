use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lazydep::bench::{parse_problems, parse_request, run_bench, BenchRow, Mode, CSV_HEADER};
use lazydep::depparse::translate_directory;
use lazydep::discovery::{Discovery, DiscoveryOptions, DiscoveryResult, Outcome, Verification};
use lazydep::extfm::{discover_ext, enumerate_products, ExtFM, ENUMERATION_CAP};
use lazydep::fragments::{load_fragment, load_repository, CutStrategy, RepositoryIndex};
use lazydep::gen::{run_generate, GenSpec};
use lazydep::{verify_result, Configuration, FeatureName, Product};
use serde_json::json;

/// Lazy product discovery over feature-model fragment repositories.
#[derive(Parser)]
#[command(name = "lazydep", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find a product containing the requested features.
    Discover(DiscoverArgs),
    /// Decide the request by enumerating the full composition.
    Oracle(OracleArgs),
    /// Generate a synthetic repository.
    Gen(GenArgs),
    /// Run a problems file and write one CSV row per problem and mode.
    Bench(BenchArgs),
    /// Translate a directory of `.pkg` files into a repository.
    Translate(TranslateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Lazy,
    Eager,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Full,
    Minimum,
}

#[derive(Args)]
struct DiscoverArgs {
    #[arg(long)]
    repo: PathBuf,
    /// Comma-separated feature names; may be empty.
    #[arg(long, default_value = "")]
    request: String,
    #[arg(long, value_enum, default_value = "lazy")]
    mode: ModeArg,
    /// Check the result against the extensional oracle (small repositories).
    #[arg(long)]
    verify_oracle: bool,
    #[arg(long)]
    debug_invariants: bool,
    /// Write the final solver clause store in DIMACS format.
    #[arg(long, value_name = "FILE")]
    dump_cnf: Option<PathBuf>,
    #[arg(long, env = "LAZYDEP_SEED", default_value_t = 0)]
    seed: u64,
    /// Write the run's CSV row (with header) to FILE.
    #[arg(long, value_name = "FILE")]
    stats: Option<PathBuf>,
    /// Print `{found, product, stats}` as JSON.
    #[arg(long)]
    json: bool,
    #[arg(long, value_enum, default_value = "full")]
    cut_strategy: StrategyArg,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    repo: PathBuf,
    #[arg(long, default_value = "")]
    request: String,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    fragments: usize,
    #[arg(long, default_value_t = 10)]
    features_per: usize,
    #[arg(long, default_value_t = 3)]
    out_degree: usize,
    #[arg(long, default_value_t = 0.05)]
    share: f64,
    #[arg(long, env = "LAZYDEP_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    repo: PathBuf,
    /// One comma-separated request per line.
    #[arg(long)]
    problems: PathBuf,
    /// Comma-separated modes: lazy, eager.
    #[arg(long, default_value = "lazy,eager")]
    modes: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, env = "LAZYDEP_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TranslateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn product_json(p: Option<&Product>) -> serde_json::Value {
    match p {
        Some(p) => json!(p.iter().map(FeatureName::as_str).collect::<Vec<_>>()),
        None => serde_json::Value::Null,
    }
}

fn print_outcome(outcome: Option<&Product>) -> io::Result<ExitCode> {
    let mut out = io::stdout().lock();
    match outcome {
        Some(p) => {
            for f in p {
                writeln!(out, "{f}")?;
            }
            Ok(ExitCode::SUCCESS)
        }
        None => {
            eprintln!("no product");
            Ok(ExitCode::from(1))
        }
    }
}

fn load(repo: &PathBuf) -> Result<RepositoryIndex> {
    load_repository(repo).with_context(|| format!("loading repository {}", repo.display()))
}

fn discover(args: DiscoverArgs) -> Result<ExitCode> {
    let idx = load(&args.repo)?;
    let c = parse_request(&args.request).context("parsing --request")?;
    let opts = DiscoveryOptions {
        strategy: match args.cut_strategy {
            StrategyArg::Full => CutStrategy::FullOrTrivial,
            StrategyArg::Minimum => CutStrategy::Minimum,
        },
        seed: args.seed,
        debug_invariants: args.debug_invariants,
    };
    let mut d = Discovery::new(&idx, opts);
    let (mode, result): (Mode, DiscoveryResult) = match args.mode {
        ModeArg::Lazy => (Mode::Lazy, d.lazy(&c)?),
        ModeArg::Eager => (Mode::Eager, d.eager(&c)?),
    };
    if let Some(path) = &args.dump_cnf {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        d.session().write_dimacs(&mut w)?;
        w.flush()?;
    }
    if let Some(path) = &args.stats {
        let row = BenchRow::new(0, mode, &result);
        fs::write(path, format!("{CSV_HEADER}\n{row}\n")).with_context(|| format!("writing {}", path.display()))?;
    }
    if !result.violations.is_empty() {
        for v in &result.violations {
            eprintln!("invariant violation: {v:?}");
        }
        bail!("{} invariant violations", result.violations.len());
    }
    if args.verify_oracle {
        match verify_result(&idx, &c, &result.outcome)? {
            Verification::Confirmed => eprintln!("oracle: confirmed"),
            Verification::Skipped(why) => eprintln!("warning: oracle skipped: {why}"),
            Verification::Refuted(why) => bail!("oracle refuted the result: {why}"),
        }
    }
    if args.json {
        let s = &result.stats;
        let doc = json!({
            "found": result.outcome.is_found(),
            "product": product_json(result.outcome.product()),
            "stats": {
                "mode": mode.to_string(),
                "iterations": s.iterations,
                "fragments_loaded": s.fragments_loaded,
                "features_loaded": s.features_loaded,
                "total_features": s.total_features,
                "solver_calls": s.solver_calls,
                "wall_ms": s.wall_ms(),
            },
        });
        println!("{doc}");
        return Ok(if result.outcome.is_found() { ExitCode::SUCCESS } else { ExitCode::from(1) });
    }
    Ok(print_outcome(result.outcome.product())?)
}

fn oracle(args: OracleArgs) -> Result<ExitCode> {
    let idx = load(&args.repo)?;
    let c: Configuration = parse_request(&args.request).context("parsing --request")?;
    let unknown: Vec<&FeatureName> = c.iter().filter(|f| !idx.declares(f)).collect();
    if !unknown.is_empty() {
        bail!("unknown request features: {unknown:?}");
    }
    let total = idx.total_features();
    if total > ENUMERATION_CAP {
        bail!("{total} features exceed the enumeration cap of {ENUMERATION_CAP}");
    }
    let models = idx
        .entries()
        .iter()
        .map(|e| Ok(enumerate_products(&load_fragment(&idx, &e.id)?.fm)?))
        .collect::<Result<Vec<ExtFM>>>()?;
    let found = discover_ext(&models, &c)?;
    let outcome = match found {
        Some(p) => Outcome::Found(p),
        None => Outcome::NoProduct,
    };
    Ok(print_outcome(outcome.product())?)
}

fn gen(args: GenArgs) -> Result<ExitCode> {
    let spec = GenSpec {
        fragments: args.fragments,
        features_per_fragment: args.features_per,
        dep_out_degree: args.out_degree,
        share_prob: args.share,
        seed: args.seed,
    };
    let idx = run_generate(&spec, &args.out)?;
    println!("{} fragments, {} features", idx.len(), idx.total_features());
    Ok(ExitCode::SUCCESS)
}

fn bench(args: BenchArgs) -> Result<ExitCode> {
    let modes = args
        .modes
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect::<Result<Vec<Mode>, _>>()?;
    if modes.is_empty() {
        bail!("no modes given");
    }
    let idx = load(&args.repo)?;
    let text = fs::read_to_string(&args.problems)
        .with_context(|| format!("reading {}", args.problems.display()))?;
    let problems = parse_problems(&args.problems, &text)?;
    let file = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut w = BufWriter::new(file);
    let opts = DiscoveryOptions {
        seed: args.seed,
        ..Default::default()
    };
    run_bench(&idx, &problems, &modes, opts, args.jobs, &mut w)?;
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn translate(args: TranslateArgs) -> Result<ExitCode> {
    let idx = translate_directory(&args.input, &args.out)?;
    println!("{} fragments, {} features", idx.len(), idx.total_features());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Discover(a) => discover(a),
        Command::Oracle(a) => oracle(a),
        Command::Gen(a) => gen(a),
        Command::Bench(a) => bench(a),
        Command::Translate(a) => translate(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(2)
    })
}
