use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hftsim_core::harness::{self, SweepSpec, VariantSelection, WORKERS_ENV};
use hftsim_core::{engine, replay, LiquidityReport, MarketParams, MetricsConfig};

mod output;

#[derive(Parser)]
#[command(name = "hftsim", version, about = "Artificial market simulator with an optional market-making HFT")]
struct Cli {
    /// Worker threads for multi-run commands (defaults to all cores).
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one market and print its liquidity report.
    Run(RunArgs),
    /// Vary one parameter over a value list, with and/or without the HFT.
    Sweep(SweepArgs),
    /// Check that returns show fat tails and volatility clustering.
    Validate(ValidateArgs),
    /// Compute the liquidity report from an event log.
    Replay(ReplayArgs),
}

#[derive(Args, Clone)]
struct ParamArgs {
    /// `key = value` configuration file applied over the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one parameter, e.g. `--set est=0.01`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Multiply `t_end` (rounded to whole days); other dynamics are unchanged.
    #[arg(long)]
    scale: Option<f64>,
    /// Sampling interval in steps for the volatility estimate.
    #[arg(long, default_value_t = 1)]
    volatility_interval: u64,
}

impl ParamArgs {
    fn params(&self) -> Result<MarketParams> {
        let mut p = MarketParams::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            p.apply_config(&text).with_context(|| format!("in {}", path.display()))?;
        }
        for kv in &self.overrides {
            let (k, v) = kv
                .split_once('=')
                .with_context(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
            p.set(k.trim(), v.trim())?;
        }
        if let Some(f) = self.scale {
            p = p.scaled(f)?;
        }
        Ok(p)
    }

    fn metrics(&self) -> MetricsConfig {
        MetricsConfig {
            volatility_interval: self.volatility_interval.max(1),
            ..MetricsConfig::default()
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Include the HFT (same as `--set hft=true`).
    #[arg(long)]
    hft: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Stream the order-flow log to this file.
    #[arg(long)]
    event_log: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Parameter to vary.
    #[arg(long, required_unless_present = "from_manifest")]
    param: Option<String>,
    /// Named value list (only `table2` exists).
    #[arg(long, conflicts_with = "values")]
    preset: Option<String>,
    /// Explicit comma-separated values.
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    runs: u32,
    /// Market variants: both, with, without.
    #[arg(long, default_value = "both")]
    hft: String,
    #[arg(long, default_value_t = 0)]
    master_seed: u64,
    /// CSV destination (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a JSON manifest that reproduces the report.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Re-run the sweep recorded in a manifest; other sweep flags are ignored.
    #[arg(long)]
    from_manifest: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, default_value_t = 10)]
    runs: u32,
    #[arg(long, default_value_t = 0)]
    master_seed: u64,
    /// Judge event logs instead of fresh simulations.
    #[arg(long, num_args = 1..)]
    replay: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct ReplayArgs {
    event_log: PathBuf,
    #[arg(long, default_value_t = 1)]
    volatility_interval: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

fn print_report(report: &LiquidityReport, format: Format) -> Result<()> {
    let mut out = io::stdout().lock();
    match format {
        Format::Text => output::write_report(&mut out, report)?,
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(report)?)?,
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let mut params = args.params.params()?;
    params.hft |= args.hft;
    if let Some(seed) = args.seed {
        params.seed = seed;
    }
    let trace = match &args.event_log {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            engine::run_logged(&params, BufWriter::new(file))
                .with_context(|| format!("writing {}", path.display()))?
        }
        None => engine::run(&params)?,
    };
    print_report(&LiquidityReport::from_trace(&trace, &args.params.metrics()), args.format)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: SweepArgs, workers: Option<usize>) -> Result<ExitCode> {
    let spec = if let Some(path) = &args.from_manifest {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        SweepSpec::from_manifest(&text).with_context(|| format!("parsing {}", path.display()))?
    } else {
        let parameter = args.param.clone().expect("clap enforces --param");
        let values = match (&args.preset, args.values.is_empty()) {
            (Some(p), _) if p == "table2" => harness::table2_preset(&parameter)
                .with_context(|| format!("no table2 preset for `{parameter}`"))?,
            (Some(p), _) => bail!("unknown preset `{p}` (expected table2)"),
            (None, false) => args.values.clone(),
            (None, true) => bail!("give --preset table2 or --values"),
        };
        SweepSpec {
            parameter,
            values,
            runs: args.runs,
            base: args.params.params()?,
            variants: args.hft.parse::<VariantSelection>()?.variants(),
            master_seed: args.master_seed,
            metrics: args.params.metrics(),
        }
    };

    let report = harness::run_sweep(&spec, workers)?;
    match &args.out {
        Some(path) => harness::emit(&report, path, args.manifest.as_deref())?,
        None => {
            io::stdout().write_all(harness::csv_string(&report)?.as_bytes())?;
            if let Some(m) = &args.manifest {
                let json = serde_json::to_string_pretty(&harness::Manifest::of(&report))?;
                fs::write(m, json).with_context(|| format!("writing {}", m.display()))?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn replay_file(path: &Path) -> Result<hftsim_core::RunTrace> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    replay(BufReader::new(file)).with_context(|| format!("replaying {}", path.display()))
}

fn cmd_validate(args: ValidateArgs, workers: Option<usize>) -> Result<ExitCode> {
    let metrics = args.params.metrics();
    let verdict = if args.replay.is_empty() {
        let params = args.params.params()?;
        harness::validate_stylized(&params, args.runs, args.master_seed, &metrics, workers)?
    } else {
        let facts = args
            .replay
            .iter()
            .map(|p| {
                replay_file(p)
                    .map(|t| hftsim_core::metrics::stylized_facts(&t.prices, metrics.return_interval))
            })
            .collect::<Result<Vec<_>>>()?;
        harness::stylized_verdict(&facts)
    };
    let mut out = io::stdout().lock();
    match args.format {
        Format::Text => output::write_verdict(&mut out, &verdict)?,
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&verdict)?)?,
    }
    Ok(if verdict.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn cmd_replay(args: ReplayArgs) -> Result<ExitCode> {
    let trace = replay_file(&args.event_log)?;
    let metrics = MetricsConfig {
        volatility_interval: args.volatility_interval.max(1),
        ..MetricsConfig::default()
    };
    print_report(&LiquidityReport::from_trace(&trace, &metrics), args.format)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a, cli.workers),
        Command::Validate(a) => cmd_validate(a, cli.workers),
        Command::Replay(a) => cmd_replay(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
