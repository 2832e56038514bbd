//! Command-line front end: every subcommand is driven by one pipeline config
//! file and resumes from persisted stage artifacts. Exit codes: 0 success,
//! 1 input or config validation failure, 2 stage failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use evibench::error::{Error, ErrorKind, Result};
use evibench::pipeline::{self, PipelineConfig, StageCut, StagePaths};
use evibench::registry::ConceptRegistry;
use evibench::synth::SynthConfig;

#[derive(Parser)]
#[command(
    name = "evibench",
    version,
    about = "Builds and evaluates evidence-conditioned claim verification datasets"
)]
struct Cli {
    /// Log filter used when RUST_LOG is unset (error, warn, info, debug).
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read, validate, and patient-split the case corpus.
    IngestCases(StageArgs),
    /// Segment articles into evidence units, assign pools, split articles.
    BuildEvidence(StageArgs),
    /// Construct the labeled verifier row set and its diagnostics.
    BuildSupervision(StageArgs),
    /// Materialize every configured evidence condition.
    ApplyInterventions(StageArgs),
    /// Score every condition under its channel masks.
    Score(StageArgs),
    /// Select thresholds, write metric reports and bootstrap summaries.
    Evaluate(StageArgs),
    /// Print the against-baseline comparison report.
    Compare(StageArgs),
    /// Print supervision diagnostics.
    Diagnostics(StageArgs),
    /// Generate a seeded synthetic corpus.
    Synth(SynthArgs),
    /// Run every stage in order and write the run manifest last.
    RunAll(StageArgs),
}

#[derive(Args)]
struct StageArgs {
    /// Pipeline config file (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Recompute from scratch instead of resuming from artifacts.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Case count; the bundled worked-example fixture counts toward it.
    #[arg(long, default_value_t = 200)]
    cases: usize,
    #[arg(long, default_value_t = 24)]
    articles: usize,
    /// Probability that a concept is present in a generated report.
    #[arg(long, default_value_t = 0.5)]
    prevalence: f64,
    /// Fraction of absent concepts stated with an explicit negation.
    #[arg(long, default_value_t = 0.45)]
    negation_rate: f64,
    /// Fraction of reports naming the concept directly in the findings.
    #[arg(long, default_value_t = 0.3)]
    direct_mention_rate: f64,
    /// Leave out the bundled worked-example fixture.
    #[arg(long)]
    no_fixture: bool,
    /// Concept registry TOML; the bundled registry when absent.
    #[arg(long)]
    registry: Option<PathBuf>,
    /// Output path for cases (JSONL).
    #[arg(long)]
    out_cases: PathBuf,
    /// Output path for articles (JSONL).
    #[arg(long)]
    out_articles: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let env = env_logger::Env::default().default_filter_or(&cli.log_level);
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e.kind() {
                ErrorKind::Validation => ExitCode::from(1),
                ErrorKind::Stage => ExitCode::from(2),
            }
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::IngestCases(a) => stage(&a, StageCut::Ingest),
        Command::BuildEvidence(a) => stage(&a, StageCut::Evidence),
        Command::BuildSupervision(a) => stage(&a, StageCut::Supervision),
        Command::ApplyInterventions(a) => stage(&a, StageCut::Interventions),
        Command::Score(a) => stage(&a, StageCut::Scoring),
        Command::Evaluate(a) => stage(&a, StageCut::Evaluation),
        Command::Compare(a) => {
            let config = PipelineConfig::from_toml_path(&a.config)?;
            pipeline::run_through(&config, StageCut::Evaluation, a.force)?;
            print_file(&StagePaths::new(&config.output_root).comparison())
        }
        Command::Diagnostics(a) => {
            let config = PipelineConfig::from_toml_path(&a.config)?;
            pipeline::run_through(&config, StageCut::Supervision, a.force)?;
            print_file(&StagePaths::new(&config.output_root).diagnostics())
        }
        Command::Synth(a) => synth(&a),
        Command::RunAll(a) => {
            let config = PipelineConfig::from_toml_path(&a.config)?;
            let manifest = pipeline::run_pipeline_with(&config, a.force)?;
            println!("run complete: config digest {}", manifest.config_digest);
            println!(
                "manifest: {}",
                StagePaths::new(&config.output_root).manifest().display()
            );
            Ok(())
        }
    }
}

fn stage(args: &StageArgs, cut: StageCut) -> Result<()> {
    let config = PipelineConfig::from_toml_path(&args.config)?;
    pipeline::run_through(&config, cut, args.force)
}

fn print_file(path: &Path) -> Result<()> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    print!("{raw}");
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<()> {
    let registry = match &args.registry {
        None => ConceptRegistry::bundled(),
        Some(path) => {
            let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            ConceptRegistry::from_toml_str(&raw)?
        }
    };
    let synth = SynthConfig {
        seed: args.seed,
        n_cases: args.cases,
        n_articles: args.articles,
        prevalence: args.prevalence,
        negation_rate: args.negation_rate,
        direct_mention_rate: args.direct_mention_rate,
        include_worked_example: !args.no_fixture,
    };
    let (n_cases, n_articles) =
        pipeline::write_synthetic_corpus(&synth, &registry, &args.out_cases, &args.out_articles)?;
    println!(
        "wrote {n_cases} cases to {} and {n_articles} articles to {}",
        args.out_cases.display(),
        args.out_articles.display()
    );
    Ok(())
}
