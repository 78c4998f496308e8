//! Command-line front end.
//!
//! Exit codes: 0 success, 1 bad input (paths, file contents, configuration),
//! 2 internal failure. Errors print one JSON object to stderr; normal output
//! goes to stdout.

use std::path::PathBuf;

use callforge_cli::config::PipelineConfig;
use callforge_cli::error::{CliError, Result};
use callforge_cli::formats::{self, read_predictions, read_report};
use callforge_cli::manifest::file_entry;
use callforge_cli::stages::{self, load_gold, Runner, REPORT_JSON};
use callforge_core::parser::ParseMode;
use clap::error::ErrorKind as ClapErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "callforge",
    version,
    about = "Forge and evaluate Arabic function-calling datasets"
)]
struct Cli {
    /// JSON config file; omitted settings use built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel stages; defaults to all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Strict,
    DeploymentAware,
}

impl From<ModeArg> for ParseMode {
    fn from(mode: ModeArg) -> ParseMode {
        match mode {
            ModeArg::Strict => ParseMode::Strict,
            ModeArg::DeploymentAware => ParseMode::DeploymentAware,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Markdown,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Count structural problems in a corpus without changing it.
    Audit,
    /// Apply the normalization map and prune plan, drop unusable rows.
    Repair,
    /// Draw the per-sample tool slices offered in prompts.
    Sample {
        /// Tools offered per sample; overrides the config.
        #[arg(long)]
        k: Option<usize>,
        /// Redraw tag for additional epochs; overrides the config.
        #[arg(long)]
        epoch: Option<u64>,
    },
    /// Render training text with control tokens and completion boundaries.
    Serialize,
    /// Partition the corpus into train, validation and test sets.
    Split,
    /// Parse and score predictions against a gold set.
    Evaluate {
        /// Completion grammar to parse with; overrides the config.
        #[arg(long)]
        mode: Option<ModeArg>,
        /// Also write every parsed output to parsed.jsonl.
        #[arg(long)]
        dump_parsed: bool,
    },
    /// Render the metrics report produced by evaluate.
    Report {
        #[arg(long, value_enum, default_value_t = FormatArg::Markdown)]
        format: FormatArg,
    },
    /// Run every stage in order; evaluates too when predictions are set.
    Pipeline {
        /// Completion grammar for the evaluation leg.
        #[arg(long)]
        mode: Option<ModeArg>,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successful terminations, anything else is
            // a caller mistake and follows the input-error contract.
            if matches!(e.kind(), ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            let err = CliError::input(e.to_string());
            err.print_json();
            std::process::exit(err.exit_code());
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            e.print_json();
            std::process::exit(e.exit_code());
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::internal(format!("thread pool: {e}")))?;
    }
    let config = PipelineConfig::load(cli.config.as_deref(), cli.seed)?;
    let runner = Runner::new(config);

    match cli.command {
        Command::Audit => {
            let (corpus_path, load) = runner.load_corpus()?;
            let (inventory_path, inventory) = runner.load_inventory()?;
            let inputs = vec![
                file_entry(&corpus_path, None)?,
                file_entry(&inventory_path, None)?,
            ];
            let report = runner.audit_stage(inputs, &load, &inventory)?;
            print!("{}", report.render_text());
        }
        Command::Repair => {
            let (corpus_path, load) = runner.load_corpus()?;
            let (inventory_path, inventory) = runner.load_inventory()?;
            let inputs = vec![
                file_entry(&corpus_path, None)?,
                file_entry(&inventory_path, None)?,
            ];
            let (rows, inventory) = runner.repair_stage(inputs, load, inventory)?;
            println!("repaired corpus: {} rows, {} tools", rows.len(), inventory.len());
        }
        Command::Sample { k, epoch } => {
            let (corpus_path, load) = runner.load_corpus()?;
            let (inventory_path, inventory) = runner.load_inventory()?;
            let inputs = vec![
                file_entry(&corpus_path, None)?,
                file_entry(&inventory_path, None)?,
            ];
            let sampled = runner.sample_stage(inputs, &load.rows, &inventory, k, epoch)?;
            println!("sampled tool slices for {} samples", sampled.len());
        }
        Command::Serialize => {
            let (corpus_path, load) = runner.load_corpus()?;
            let (inventory_path, inventory) = runner.load_inventory()?;
            let mut inputs = vec![
                file_entry(&corpus_path, None)?,
                file_entry(&inventory_path, None)?,
            ];
            // Use slices from an earlier sample run when present; otherwise
            // every prompt offers the whole inventory.
            let sampled_path = runner.output_dir.join(stages::SAMPLED_TOOLS);
            let sampled = if sampled_path.is_file() {
                let rows: Vec<formats::SampledToolsRow> =
                    formats::read_jsonl_strict(&sampled_path)?;
                inputs.push(file_entry(&sampled_path, Some(rows.len() as u64))?);
                Some(rows)
            } else {
                None
            };
            let examples =
                runner.serialize_stage(inputs, &load.rows, &inventory, sampled.as_deref())?;
            println!("serialized {} examples", examples.len());
        }
        Command::Split => {
            let (corpus_path, load) = runner.load_corpus()?;
            let inputs = vec![file_entry(&corpus_path, None)?];
            let (train, val, test) = runner.split_stage(inputs, &load.rows)?;
            println!("split: {} train, {} val, {} test", train.len(), val.len(), test.len());
        }
        Command::Evaluate { mode, dump_parsed } => {
            let gold_path = runner.config.gold_path()?;
            let predictions_path = runner.config.predictions_path()?;
            let (gold_entry, gold) = load_gold(&gold_path)?;
            let predictions = read_predictions(&predictions_path)?;
            let predictions_entry =
                file_entry(&predictions_path, Some(predictions.len() as u64))?;
            let mode = mode
                .map(ParseMode::from)
                .unwrap_or(runner.config.evaluation.mode);
            let report = runner.evaluate_stage(
                vec![gold_entry, predictions_entry],
                &gold,
                &predictions,
                mode,
                dump_parsed,
            )?;
            println!(
                "evaluated {} records: format validity {:.4}, decision accuracy {:.4}",
                report.n, report.format_validity, report.decision_accuracy
            );
        }
        Command::Report { format } => {
            let report_path = runner.output_dir.join(REPORT_JSON);
            let report = read_report(&report_path)?;
            let inputs = vec![file_entry(&report_path, None)?];
            match format {
                FormatArg::Markdown => {
                    let markdown = runner.report_stage(inputs, &report)?;
                    print!("{markdown}");
                }
                FormatArg::Json => {
                    // Already on disk in JSON form; just echo it.
                    let body = callforge_core::metrics::render_report(
                        &report,
                        callforge_core::metrics::ReportFormat::Json,
                    )
                    .map_err(|e| CliError::input(format!("rendering report: {e}")))?;
                    print!("{body}");
                }
            }
        }
        Command::Pipeline { mode } => {
            let summary = runner.pipeline(mode.map(ParseMode::from))?;
            print!("{}", summary.audit.render_text());
            println!(
                "split: {} train, {} val, {} test",
                summary.train, summary.val, summary.test
            );
            if let Some(n) = summary.evaluated {
                println!("evaluated {n} records; see report.md");
            }
        }
    }
    Ok(())
}
