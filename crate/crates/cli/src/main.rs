//! Command-line front end: runs simulations, tests strategy rules, checks
//! stylized facts on recorded output, and generates synthetic fundamentals.
//!
//! Exit codes are a stable contract:
//!   0  success (for `validate`: every fact passed)
//!   1  validation failure (a fact failed, or there was too little data)
//!   2  usage or config error (bad flags, malformed config, unknown strategy)
//!   3  runtime simulation error; a state dump path is printed

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mecosim::charts;
use mecosim::config::SimConfig;
use mecosim::data::{synthesize_fundamentals, SynthConfig};
use mecosim::output::SeriesFrame;
use mecosim::validation::{
    log_returns, market_aggregate, stylized_report_from_frames, summary_stats, FactThresholds,
};
use sha2::{Digest, Sha256};

/// Environment variable naming the default output directory.
const OUT_ENV: &str = "MECOSIM_OUT";

#[derive(Parser)]
#[command(name = "mecosim", version, about = "Market ecology simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation from a TOML config and write the output CSV set.
    Run {
        /// Path to the config file.
        config: PathBuf,
        /// Override the config's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: $MECOSIM_OUT, then ./out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sweep a half-open seed range like `0..10`, writing one
        /// subdirectory per seed. Seeds run in parallel.
        #[arg(long, value_name = "A..B", conflicts_with = "seed")]
        seeds: Option<String>,
        /// Clear stocks on a thread pool (output is identical either way).
        #[arg(long)]
        parallel: bool,
        /// Disable investment flows regardless of the config.
        #[arg(long)]
        no_flows: bool,
    },
    /// Run with a strategy fund enabled and summarize its NAV.
    TestStrategy {
        /// Path to the config file.
        config: PathBuf,
        /// Rule spec: buy_and_hold:<stock_id>, top_value:<k>, or equal_weight.
        #[arg(long)]
        strategy: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Disable investment flows regardless of the config.
        #[arg(long)]
        no_flows: bool,
    },
    /// Check stylized facts on recorded prices and volumes.
    Validate {
        /// prices.csv from a previous run.
        prices: PathBuf,
        /// volumes.csv from the same run.
        volumes: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic fundamentals CSV.
    SynthData {
        #[arg(long, default_value_t = 21)]
        stocks: usize,
        #[arg(long, default_value_t = 42)]
        quarters: u32,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A failure carrying its exit code; the message goes to stderr.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Failure {
        Failure { code, message: message.into() }
    }
}

/// Classifies library errors into the exit-code contract: anything wrong
/// with inputs (config, data files, strategy names) is 2; anything that
/// went wrong while simulating is 3.
fn exit_code_for(err: &mecosim::Error) -> u8 {
    use mecosim::Error::*;
    match err {
        Io { .. } | Csv { .. } | SchemaHeader { .. } | BadValue { .. }
        | DuplicateRecord { .. } | MissingQuarterZero { .. } | NonContiguousQuarters { .. }
        | EmptyTable | Config(_) | UnknownStrategy { .. } | UnknownStockId { .. } => 2,
        _ => 3,
    }
}

fn input_err(err: mecosim::Error) -> Failure {
    Failure::new(exit_code_for(&err), err.to_string())
}

fn write_err(path: &Path, err: mecosim::Error) -> Failure {
    Failure::new(3, format!("failed writing {}: {err}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match dispatch(cli.command) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    };
    ExitCode::from(code)
}

fn dispatch(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Run { config, seed, out, seeds, parallel, no_flows } => {
            let cfg = load_config(&config, seed, parallel, no_flows)?;
            let out = resolve_out(out);
            match seeds {
                Some(range) => cmd_sweep(cfg, &out, &range),
                None => {
                    let summary = run_one(cfg, &out)?;
                    println!("{summary}");
                    Ok(0)
                }
            }
        }
        Command::TestStrategy { config, strategy, seed, out, no_flows } => {
            let cfg = load_config(&config, seed, false, no_flows)?;
            cmd_test_strategy(cfg, &strategy, &resolve_out(out))
        }
        Command::Validate { prices, volumes, out } => {
            cmd_validate(&prices, &volumes, &resolve_out(out))
        }
        Command::SynthData { stocks, quarters, seed, out } => {
            cmd_synth_data(stocks, quarters, seed, &resolve_out(out))
        }
    }
}

fn load_config(
    path: &Path,
    seed: Option<u64>,
    parallel: bool,
    no_flows: bool,
) -> Result<SimConfig, Failure> {
    let mut cfg = SimConfig::load(path).map_err(input_err)?;
    if let Some(seed) = seed {
        cfg.run.seed = seed;
    }
    if parallel {
        cfg.run.parallel = true;
    }
    if no_flows {
        cfg.flows.enabled = false;
    }
    Ok(cfg)
}

fn resolve_out(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Failure::new(3, format!("cannot create {}: {e}", dir.display())))
}

/// Runs one configured simulation and writes the CSV set plus a manifest.
/// On a runtime error, writes a state dump into the output directory so the
/// failure is reproducible, and reports its path.
fn run_one(cfg: SimConfig, dir: &Path) -> Result<String, Failure> {
    ensure_dir(dir)?;
    let output = match mecosim::engine::run(cfg.clone()) {
        Ok(output) => output,
        Err(err) => {
            let code = exit_code_for(&err);
            if code != 3 {
                return Err(Failure::new(code, err.to_string()));
            }
            let dump = dir.join("state_dump.json");
            let body = serde_json::json!({
                "error": err.to_string(),
                "seed": cfg.run.seed,
                "config": cfg,
            });
            let hint = match std::fs::write(&dump, format!("{body:#}")) {
                Ok(()) => format!("state dump: {}", dump.display()),
                Err(e) => format!("state dump could not be written: {e}"),
            };
            return Err(Failure::new(3, format!("{err}\n{hint}")));
        }
    };
    output.write_dir(dir).map_err(|e| write_err(dir, e))?;
    write_manifest(&cfg, &output, dir)?;
    let mut line = format!(
        "wrote {} days x {} stocks to {}",
        output.n_days(),
        output.stock_ids.len(),
        dir.display()
    );
    if output.terminated_early {
        line.push_str(" (terminated early: all participants insolvent)");
    }
    Ok(line)
}

/// The manifest pins everything needed to reproduce the run: the full
/// resolved config (plus its hash for quick comparison), the seed, and the
/// crate versions that produced the artifacts.
fn write_manifest(
    cfg: &SimConfig,
    output: &mecosim::engine::SimulationOutput,
    dir: &Path,
) -> Result<(), Failure> {
    let config_json = serde_json::to_value(cfg)
        .map_err(|e| Failure::new(3, format!("manifest serialization failed: {e}")))?;
    let digest = Sha256::digest(config_json.to_string().as_bytes());
    let hash: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    let manifest = serde_json::json!({
        "config_sha256": hash,
        "seed": cfg.run.seed,
        "n_days": output.n_days(),
        "n_stocks": output.stock_ids.len(),
        "terminated_early": output.terminated_early,
        "versions": {
            "mecosim": mecosim::VERSION,
            "mecosim-cli": env!("CARGO_PKG_VERSION"),
        },
        "config": config_json,
    });
    let path = dir.join("run_manifest.json");
    std::fs::write(&path, format!("{manifest:#}"))
        .map_err(|e| Failure::new(3, format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

/// Parses `a..b` (half-open, like a Rust range) into a seed list.
fn parse_seed_range(text: &str) -> Result<Vec<u64>, Failure> {
    let usage = || {
        Failure::new(2, format!("--seeds expects a half-open range like 0..10, got `{text}`"))
    };
    let (a, b) = text.split_once("..").ok_or_else(usage)?;
    let a: u64 = a.trim().parse().map_err(|_| usage())?;
    let b: u64 = b.trim().parse().map_err(|_| usage())?;
    if b <= a {
        return Err(usage());
    }
    Ok((a..b).collect())
}

fn cmd_sweep(cfg: SimConfig, out: &Path, range: &str) -> Result<u8, Failure> {
    use rayon::prelude::*;
    let seeds = parse_seed_range(range)?;
    let results: Vec<(u64, Result<String, Failure>)> = seeds
        .par_iter()
        .map(|&seed| {
            let mut cfg = cfg.clone();
            cfg.run.seed = seed;
            (seed, run_one(cfg, &out.join(format!("seed-{seed}"))))
        })
        .collect();
    let mut failed = None;
    for (seed, result) in results {
        match result {
            Ok(line) => println!("seed {seed}: {line}"),
            Err(f) => {
                eprintln!("seed {seed}: {}", f.message);
                failed = Some(f.code);
            }
        }
    }
    match failed {
        Some(code) => Err(Failure::new(code, "one or more seeds failed")),
        None => Ok(0),
    }
}

fn cmd_test_strategy(mut cfg: SimConfig, strategy: &str, dir: &Path) -> Result<u8, Failure> {
    cfg.strategy.rule = Some(strategy.to_string());
    run_one(cfg, dir).map(|line| println!("{line}"))?;

    // The run wrote nav.csv; summarize the strategy fund's column.
    let nav = SeriesFrame::read_csv(&dir.join("nav.csv")).map_err(input_err)?;
    let series = nav.column("strategy").ok_or_else(|| {
        Failure::new(3, "nav.csv has no `strategy` column despite the rule being set".to_string())
    })?;
    let stats = summary_stats(&series).ok_or_else(|| {
        Failure::new(
            3,
            "strategy NAV contains non-positive values (fund went insolvent?); \
             no summary computed — see nav.csv",
        )
    })?;
    let path = dir.join("strategy_summary.csv");
    let rows = [
        ("total_return", stats.total_return),
        ("annualized_volatility", stats.annualized_volatility),
        ("max_drawdown", stats.max_drawdown),
    ];
    let mut body = String::from("statistic,value\n");
    for (name, value) in rows {
        body.push_str(&format!("{name},{value}\n"));
        println!("{strategy} {name}: {value:.6}");
    }
    std::fs::write(&path, body)
        .map_err(|e| Failure::new(3, format!("cannot write {}: {e}", path.display())))?;
    Ok(0)
}

fn cmd_validate(prices: &Path, volumes: &Path, dir: &Path) -> Result<u8, Failure> {
    let price_frame = SeriesFrame::read_csv(prices).map_err(input_err)?;
    let volume_frame = SeriesFrame::read_csv(volumes).map_err(input_err)?;
    let report = stylized_report_from_frames(&price_frame, &volume_frame, &FactThresholds::default())
        .map_err(|e| match e {
            mecosim::Error::InsufficientData { .. } => Failure::new(1, e.to_string()),
            other => input_err(other),
        })?;

    ensure_dir(dir)?;
    let facts = dir.join("stylized_facts.csv");
    report.write_csv(&facts).map_err(|e| write_err(&facts, e))?;
    write_validation_charts(&price_frame, &volume_frame, &report, dir)?;

    for (name, verdict) in report.verdicts.all() {
        println!("{name}: {}", verdict.as_str());
    }
    if report.verdicts.all_pass() {
        println!("overall: pass");
        Ok(0)
    } else {
        println!("overall: fail");
        Ok(1)
    }
}

/// Three static SVGs next to the facts CSV: the aggregate index level, the
/// return autocorrelations against their confidence band, and the daily
/// return histogram.
fn write_validation_charts(
    prices: &SeriesFrame,
    volumes: &SeriesFrame,
    report: &mecosim::validation::StylizedFactsReport,
    dir: &Path,
) -> Result<(), Failure> {
    let p: Vec<Vec<f64>> =
        (0..prices.entities().len()).map(|i| prices.column_by_index(i)).collect();
    let v: Vec<Vec<f64>> =
        (0..volumes.entities().len()).map(|i| volumes.column_by_index(i)).collect();
    let (level, _) = market_aggregate(&p, &v).map_err(input_err)?;

    let mut files = vec![(
        "market_level.svg",
        charts::line_chart(
            "Aggregate market index",
            "day",
            "level",
            &[("index".to_string(), level.clone())],
        ),
    )];
    if let (Some(r), Some(a)) = (&report.acf_returns, &report.acf_abs_returns) {
        let band = vec![r.band; r.values.len()];
        let neg_band: Vec<f64> = band.iter().map(|b| -b).collect();
        files.push((
            "returns_acf.svg",
            charts::line_chart(
                "Return autocorrelation by lag",
                "lag",
                "acf",
                &[
                    ("acf(r)".to_string(), r.values.clone()),
                    ("acf(|r|)".to_string(), a.values.clone()),
                    ("95% band".to_string(), band),
                    ("-95% band".to_string(), neg_band),
                ],
            ),
        ));
    }
    if let Ok(returns) = log_returns(&level, 1) {
        files.push((
            "returns_hist.svg",
            charts::histogram("Daily log returns", "log return", &returns, 60),
        ));
    }
    for (name, svg) in files {
        let path = dir.join(name);
        std::fs::write(&path, svg)
            .map_err(|e| Failure::new(3, format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn cmd_synth_data(stocks: usize, quarters: u32, seed: u64, dir: &Path) -> Result<u8, Failure> {
    let table = synthesize_fundamentals(&SynthConfig {
        n_stocks: stocks,
        n_quarters: quarters,
        seed,
    })
    .map_err(input_err)?;
    ensure_dir(dir)?;
    let path = dir.join("fundamentals.csv");
    table.write_csv(&path).map_err(|e| write_err(&path, e))?;
    println!(
        "wrote {} stocks x {quarters} quarters to {}",
        table.n_stocks(),
        path.display()
    );
    Ok(0)
}
