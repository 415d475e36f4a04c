mod config;
mod error;
mod run;

use clap::{Args, Parser, Subcommand};
use corpscale_core::benchmark::RankWeighting;
use corpscale_core::ingest::{GroupLevel, ImpactMetric, SizeMetric, DEFAULT_MIN_GROUP_SIZE};
use corpscale_core::report::OutputFormat;
use corpscale_core::Execution;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use config::{BootstrapConfig, Command, MapKind, RunConfig};
use error::CliError;

/// Power-law benchmarks of company environmental impact against company size.
#[derive(Parser)]
#[command(name = "corpscale", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit log-log lines per group and print a table (with an All row).
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        boot: BootArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Score every company against its group benchmark.
    Score {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        fits: FitsArg,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Impact saved if companies above their benchmark were capped at it.
    Savings {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        fits: FitsArg,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Rank size metrics by mean adjusted R² across groups.
    Rank {
        #[command(flatten)]
        data: DataArgs,
        /// Weight group adjusted R² by group size.
        #[arg(long)]
        weighted: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Per-country residual statistics and outlier flags.
    Dispersion {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        fits: FitsArg,
        /// Emit (country, value) pairs for map rendering instead.
        #[arg(long, value_parser = parse_map)]
        map: Option<MapKind>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Generate a synthetic dataset from a JSON spec file.
    Synth {
        #[arg(long)]
        spec: String,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Scatter bundles (SVG, CSV, JSON) and coverage summaries.
    Report {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        fits: FitsArg,
        /// Group to plot.
        #[arg(long, conflicts_with = "coverage")]
        scatter: Option<String>,
        /// Totals and distinct counts of the admitted records.
        #[arg(long)]
        coverage: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Re-run the configuration recorded in the header of a previous output.
    Replay {
        /// Output file of an earlier run.
        from: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        sequential: bool,
    },
}

#[derive(Args)]
struct DataArgs {
    /// Company CSV file.
    #[arg(long)]
    input: String,
    #[arg(long, default_value = "emissions")]
    impact: ImpactMetric,
    /// Size metric; `fit` uses all four when omitted, other commands revenue.
    #[arg(long)]
    size: Option<SizeMetric>,
    #[arg(long, default_value = "sector")]
    level: GroupLevel,
    /// Minimum companies per group [default: 10, or 3 with --fits].
    #[arg(long)]
    min_group: Option<usize>,
    /// Heteroskedasticity-consistent (HC1) standard errors.
    #[arg(long)]
    robust_se: bool,
    /// Print every rejected row and dropped record to stderr.
    #[arg(long)]
    audit: bool,
}

#[derive(Args)]
struct FitsArg {
    /// Score against fits from a JSON file instead of fitting the input.
    #[arg(long)]
    fits: Option<String>,
}

#[derive(Args)]
struct BootArgs {
    /// Percentile-bootstrap replicates for slope intervals.
    #[arg(long)]
    bootstrap: Option<usize>,
    #[arg(long, default_value_t = 0.95)]
    ci_level: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct OutArgs {
    #[arg(long, default_value = "text", value_parser = parse_format)]
    format: OutputFormat,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run on one thread (outputs are identical either way).
    #[arg(long)]
    sequential: bool,
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
        .map_err(|_| format!("unknown format {s:?}; use text, csv, json or svg"))
}

fn parse_map(s: &str) -> Result<MapKind, String> {
    serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
        .map_err(|_| format!("unknown map value {s:?}; use count or mean"))
}

fn base(command: Command, data: Option<DataArgs>, fits: Option<String>, format: OutputFormat) -> RunConfig {
    let default_min = if fits.is_some() { run::MIN_GROUP_WITH_FITS } else { DEFAULT_MIN_GROUP_SIZE };
    let (input, impact, size, level, min_group_size, robust_se, audit) = match data {
        Some(d) => (
            Some(d.input),
            d.impact,
            d.size,
            d.level,
            d.min_group.unwrap_or(default_min),
            d.robust_se,
            d.audit,
        ),
        None => (None, ImpactMetric::Emissions, None, GroupLevel::Sector, default_min, false, false),
    };
    RunConfig {
        command,
        input,
        impact,
        size,
        level,
        min_group_size,
        robust_se,
        bootstrap: None,
        fits,
        weighting: None,
        map: None,
        scatter: None,
        coverage: false,
        spec: None,
        audit,
        format,
    }
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

/// Builds the effective config, or reads it back for `replay`.
fn resolve(cmd: Cmd) -> Result<(RunConfig, Option<PathBuf>, Execution), CliError> {
    Ok(match cmd {
        Cmd::Fit { data, boot, out } => {
            let mut cfg = base(Command::Fit, Some(data), None, out.format);
            cfg.bootstrap = boot.bootstrap.map(|replicates| BootstrapConfig {
                replicates,
                level: boot.ci_level,
                seed: boot.seed,
            });
            (cfg, out.out, execution(out.sequential))
        }
        Cmd::Score { data, fits, out } => {
            (base(Command::Score, Some(data), fits.fits, out.format), out.out, execution(out.sequential))
        }
        Cmd::Savings { data, fits, out } => {
            (base(Command::Savings, Some(data), fits.fits, out.format), out.out, execution(out.sequential))
        }
        Cmd::Rank { data, weighted, out } => {
            let mut cfg = base(Command::Rank, Some(data), None, out.format);
            cfg.weighting = Some(if weighted { RankWeighting::BySize } else { RankWeighting::Unweighted });
            (cfg, out.out, execution(out.sequential))
        }
        Cmd::Dispersion { data, fits, map, out } => {
            let mut cfg = base(Command::Dispersion, Some(data), fits.fits, out.format);
            cfg.map = map;
            (cfg, out.out, execution(out.sequential))
        }
        Cmd::Synth { spec, out } => {
            let mut cfg = base(Command::Synth, None, None, out.format);
            cfg.spec = Some(spec);
            (cfg, out.out, execution(out.sequential))
        }
        Cmd::Report { data, fits, scatter, coverage, out } => {
            let mut cfg = base(Command::Report, Some(data), fits.fits, out.format);
            cfg.scatter = scatter;
            cfg.coverage = coverage;
            (cfg, out.out, execution(out.sequential))
        }
        Cmd::Replay { from, out, sequential } => {
            let text = std::fs::read_to_string(&from).map_err(|e| CliError::io(&from, e))?;
            (RunConfig::from_output(&text)?, out, execution(sequential))
        }
    })
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::io(p, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut diag = |line: String| eprintln!("{line}");
    let result = resolve(cli.command).and_then(|(cfg, out, exec)| {
        let bytes = run::run(&cfg, exec, &mut diag)?;
        write_output(out.as_deref(), &bytes)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(e.exit as u8)
        }
    }
}
