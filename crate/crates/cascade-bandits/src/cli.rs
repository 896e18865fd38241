//! Command-line entry point.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::experiment::{run_experiment, run_misspecification_sweep, ALGORITHMS};
use crate::letor::{ingest, IngestOptions};
use crate::output::{meta_path, ResultTable};

#[derive(Debug, Parser)]
#[command(name = "cascade-bandits", version, about = "Cascading-bandit ranking experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every configured algorithm over replicated instances.
    Run(ExperimentArgs),
    /// Final regret against the prior misspecification shift c.
    Sweep(ExperimentArgs),
    /// Convert an SVMLight ranking file into instance files.
    Ingest(IngestArgs),
    /// Render a results CSV as an SVG line chart.
    Plot(PlotArgs),
    /// Print the available algorithm names.
    ListAlgorithms,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Flat TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set T=500`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Fail instead of dropping replications that error.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Attraction of a relevance-4 document.
    #[arg(long, default_value_t = 0.8)]
    gamma: f64,
    /// Read at most this many queries.
    #[arg(long)]
    limit: Option<usize>,
    /// List length K stored in each instance.
    #[arg(long = "list-len", default_value_t = 10)]
    list_len: usize,
    /// Reuse normalization statistics from another split.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Reject non-contiguous qids.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Also write gnuplot-style data here.
    #[arg(long)]
    data: Option<PathBuf>,
}

const RUN_USAGE: &str = "usage: cascade-bandits run --config <file> [--set key=value ...]\n       \
                         cascade-bandits run --set key=value [--set ...]";

fn load_config(args: &ExperimentArgs, command: &str) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            if !path.is_file() {
                return Err(HarnessError::Usage(format!(
                    "config file {} not found\n{}",
                    path.display(),
                    RUN_USAGE.replace("run", command)
                )));
            }
            ExperimentConfig::from_file(path, &args.set)?
        }
        None if args.set.is_empty() => {
            return Err(HarnessError::Usage(format!(
                "{command} needs --config or at least one --set\n{}",
                RUN_USAGE.replace("run", command)
            )))
        }
        None => ExperimentConfig::with_overrides(&args.set)?,
    };
    cfg.strict |= args.strict;
    Ok(cfg)
}

fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    let w = |out: &mut dyn Write, s: String| {
        writeln!(out, "{s}").map_err(|e| HarnessError::io(std::path::Path::new("<stdout>"), e))
    };
    match command {
        Command::ListAlgorithms => {
            for name in ALGORITHMS {
                w(out, (*name).to_string())?;
            }
        }
        Command::Run(args) => {
            let cfg = load_config(&args, "run")?;
            let table = run_experiment(&cfg)?;
            table.write_csv(&cfg.output)?;
            table.write_meta(&meta_path(&cfg.output))?;
            if let Some(p) = &cfg.plot_data {
                table.write_plot_data(p)?;
            }
            if let Some(p) = &cfg.svg {
                table.write_svg(p)?;
            }
            for alg in table.algorithms() {
                let r = table.final_row(alg).expect("nonempty series");
                w(
                    out,
                    format!(
                        "{alg}: cumulative regret {:.3} ± {:.3} at round {} over {} replications",
                        r.mean_cum_regret, r.stderr, r.round, r.n_reps
                    ),
                )?;
            }
            w(out, format!("wrote {}", cfg.output.display()))?;
        }
        Command::Sweep(args) => {
            let cfg = load_config(&args, "sweep")?;
            let table = run_misspecification_sweep(&cfg)?;
            table.write_csv(&cfg.output)?;
            table.write_meta(&meta_path(&cfg.output))?;
            if let Some(p) = &cfg.svg {
                std::fs::write(p, table.to_svg()).map_err(|e| HarnessError::io(p, e))?;
            }
            for r in &table.rows {
                w(
                    out,
                    format!(
                        "c={} {}: {:.3} ± {:.3}",
                        r.c, r.algorithm, r.final_mean_cum_regret, r.stderr
                    ),
                )?;
            }
            w(out, format!("wrote {}", cfg.output.display()))?;
        }
        Command::Ingest(args) => {
            let opts = IngestOptions {
                gamma: args.gamma,
                list_len: args.list_len,
                limit: args.limit,
                strict: args.strict,
                stats: args.stats,
            };
            let report = ingest(&args.input, &args.output, &opts)?;
            w(
                out,
                format!(
                    "{} queries, {} documents: wrote {} instances ({} skipped), kept {} features, dropped {}",
                    report.queries,
                    report.documents,
                    report.instances_written,
                    report.skipped_queries,
                    report.kept_features,
                    report.dropped_features
                ),
            )?;
        }
        Command::Plot(args) => {
            let table = ResultTable::read_csv(&args.input)?;
            if table.rows.is_empty() {
                return Err(HarnessError::Runtime(format!("{} has no rows", args.input.display())));
            }
            table.write_svg(&args.output)?;
            if let Some(p) = &args.data {
                table.write_plot_data(p)?;
            }
        }
    }
    Ok(())
}

/// Parses `argv` (including the program name) and runs the command.
/// Returns 0 on success, 1 on usage errors and 2 on runtime failures.
pub fn cli_main<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
