//! The `cooplab` command line: one binary, one subcommand per workflow.
//!
//! Every command is scriptable. Success exits 0; failures print
//! `error[<category>]: <message>` to stderr and exit with the category's
//! code: usage 2, config 3, io 4, network 5, protocol 6, data 7,
//! incomplete 8.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::analysis::heatmap::{render_heatmap, HeatmapStyle};
use crate::analysis::ingest::{ingest_human_data, HumanSchema, IngestError};
use crate::analysis::{
    compare_matrices_region, extractor_accuracy, read_annotations, region_average, AnalysisError,
    AnnotationError, ExtractorAccuracyError, Region,
};
use crate::equilibrium::{nash_matrix, replicator_matrix, ReplicatorParams};
use crate::game::{GridError, GridSpec};
use crate::llm::client::{ChatModel, HttpChatModel, LlmError};
use crate::llm::mock::{MockExtractor, MockPolicy, MockVerdictMode};
use crate::llm::Stage;
use crate::matrix::{CooperationMatrix, MatrixError};
use crate::phenotype::{
    deviation_report, mixture_matrix, phenotype_matrix, MixtureError, MixtureWeights, Phenotype,
};
use crate::runner::config::{AgentSpec, ConfigError, RunConfig};
use crate::runner::{self, RunError, RunOptions, RunStatus};

/// Entry point for the binary.
pub fn run() -> i32 {
    run_from(std::env::args())
}

/// Parses and dispatches; separated from [`run`] so tests can drive it.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {}", e.category, e.message);
            e.code
        }
    }
}

#[derive(Parser)]
#[command(
    name = "cooplab",
    version,
    about = "Cooperation matrices for dyadic games: equilibria, phenotypes, and chat-model agents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the Nash cooperation matrix for a grid
    Nash(NashArgs),
    /// Write a phenotype or mixture cooperation matrix, or validate rules
    Phenotype(PhenotypeArgs),
    /// Run a configured experiment (chat endpoint or synthetic agent)
    Simulate(SimulateArgs),
    /// Run the pipeline offline against the built-in scripted models
    MockRun(MockRunArgs),
    /// Compare two matrices: mean squared displacement and Pearson r
    Compare(CompareArgs),
    /// Average a matrix over a named cell region
    RegionAverage(RegionAverageArgs),
    /// Render a matrix as an SVG heatmap
    Render(RenderArgs),
    /// Measure extraction accuracy on an annotated answer set
    ValidateExtractor(ValidateExtractorArgs),
    /// Convert an observed-play dataset into matrix CSV files
    Ingest(IngestArgs),
}

#[derive(Args)]
struct NashArgs {
    /// Grid: original, extended, or NxM (S rows x T columns from 0)
    #[arg(long, default_value = "original")]
    grid: String,
    /// Initial cooperator fraction for the basin rule
    #[arg(long, default_value_t = 0.5)]
    x0: f64,
    /// analytic (closed form) or replicator (iterated dynamics)
    #[arg(long, default_value = "analytic")]
    method: String,
    /// Stopping tolerance for the replicator method
    #[arg(long, default_value_t = 0.1)]
    tol: f64,
    /// Iteration cap for the replicator method
    #[arg(long, default_value_t = 1000)]
    t_max: u32,
    /// Where to write per-cell outcome kinds (replicator method)
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    /// Output matrix CSV
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PhenotypeArgs {
    /// paper, or a full list like optimist=0.2,pessimist=0.21,...
    #[arg(long, default_value = "paper")]
    weights: String,
    /// Use a single phenotype rule instead of a mixture
    #[arg(long)]
    phenotype: Option<String>,
    #[arg(long, default_value = "original")]
    grid: String,
    /// Output matrix CSV
    #[arg(long, required_unless_present = "validate")]
    out: Option<PathBuf>,
    /// Observed matrix CSV: run the SD-normalized rule validation instead
    #[arg(long, requires = "sd")]
    validate: Option<PathBuf>,
    /// Per-game standard deviation matrix CSV for --validate
    #[arg(long)]
    sd: Option<PathBuf>,
    #[arg(long, default_value_t = false)]
    json: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Run configuration (TOML)
    #[arg(long, conflicts_with = "resume")]
    config: Option<PathBuf>,
    /// Resume an interrupted run from its directory
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Stop after this many rounds (resume later)
    #[arg(long)]
    max_rounds: Option<u32>,
}

#[derive(Args)]
struct MockRunArgs {
    #[arg(long, default_value = "3x3")]
    grid: String,
    #[arg(long, default_value_t = 5)]
    plays: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "runs/mock")]
    out_dir: PathBuf,
    /// Generator policy: cooperate, defect, random, or flaky
    #[arg(long, default_value = "cooperate")]
    policy: String,
    /// For the flaky policy: garble answers with seed % N == 0
    #[arg(long, default_value_t = 3)]
    invalid_every: u64,
    /// Verifier behavior: good, bad, or gibberish
    #[arg(long, default_value = "good")]
    verifier: String,
    /// Pipeline stage: simple, double, multi-step, verified
    #[arg(long, default_value = "verified")]
    stage: String,
    #[arg(long, default_value_t = 2)]
    concurrency: usize,
    #[arg(long)]
    max_rounds: Option<u32>,
    /// Resume a previous mock run directory instead of starting fresh
    #[arg(long, conflicts_with_all = ["grid", "plays", "seed"])]
    resume: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    a: PathBuf,
    b: PathBuf,
    /// Cell region the metrics are computed over
    #[arg(long, default_value = "original")]
    region: String,
    #[arg(long, default_value_t = false)]
    json: bool,
}

#[derive(Args)]
struct RegionAverageArgs {
    matrix: PathBuf,
    #[arg(long, default_value = "all")]
    region: String,
    #[arg(long, default_value_t = false)]
    json: bool,
}

#[derive(Args)]
struct RenderArgs {
    matrix: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Outline the cells of the original experimental window
    #[arg(long, default_value_t = false)]
    outline_original: bool,
    #[arg(long, default_value_t = 24)]
    cell_px: u32,
}

#[derive(Args)]
struct ValidateExtractorArgs {
    /// JSONL file of {"long_answer": ..., "gold": "a"|"b"|"neither"}
    #[arg(long)]
    annotations: PathBuf,
    /// Chat-completions endpoint URL for the extractor model
    #[arg(long, required_unless_present = "mock")]
    endpoint: Option<String>,
    #[arg(long, required_unless_present = "mock")]
    model: Option<String>,
    /// Environment variable holding the bearer token
    #[arg(long)]
    api_key_env: Option<String>,
    /// Use the built-in scripted extractor (no network)
    #[arg(long, default_value_t = false)]
    mock: bool,
    #[arg(long, default_value_t = false)]
    json: bool,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// aggregate, rows, or auto
    #[arg(long, default_value = "auto")]
    schema: String,
    /// Target grid the dataset must cover
    #[arg(long, default_value = "original")]
    grid: String,
    /// Output matrix CSV of per-game cooperation rates
    #[arg(long)]
    out: PathBuf,
    /// Output matrix CSV of per-game standard deviations, when available
    #[arg(long)]
    sd_out: Option<PathBuf>,
    /// Write the preprocessing report as JSON
    #[arg(long)]
    report: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

#[derive(Debug)]
struct CliError {
    category: &'static str,
    code: i32,
    message: String,
}

impl CliError {
    fn new(category: &'static str, code: i32, message: impl Into<String>) -> Self {
        CliError {
            category,
            code,
            message: message.into(),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        CliError::new("usage", 2, message)
    }

    fn config(message: impl Into<String>) -> Self {
        CliError::new("config", 3, message)
    }

    fn data(message: impl Into<String>) -> Self {
        CliError::new("data", 7, message)
    }
}

impl From<GridError> for CliError {
    fn from(e: GridError) -> Self {
        CliError::config(e.to_string())
    }
}

impl From<MixtureError> for CliError {
    fn from(e: MixtureError) -> Self {
        CliError::config(e.to_string())
    }
}

impl From<MatrixError> for CliError {
    fn from(e: MatrixError) -> Self {
        match e {
            MatrixError::Io(io) => CliError::new("io", 4, io.to_string()),
            other => CliError::data(other.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        CliError::data(e.to_string())
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Io(io) => CliError::new("io", 4, io.to_string()),
            other => CliError::data(other.to_string()),
        }
    }
}

impl From<AnnotationError> for CliError {
    fn from(e: AnnotationError) -> Self {
        match e {
            AnnotationError::Io(io) => CliError::new("io", 4, io.to_string()),
            other => CliError::data(other.to_string()),
        }
    }
}

impl From<LlmError> for CliError {
    fn from(e: LlmError) -> Self {
        match &e {
            LlmError::Transport { .. } | LlmError::Http { .. } => {
                CliError::new("network", 5, e.to_string())
            }
            LlmError::Protocol(_) => CliError::new("protocol", 6, e.to_string()),
            LlmError::MissingCredentials(_) => CliError::config(e.to_string()),
        }
    }
}

impl From<ExtractorAccuracyError> for CliError {
    fn from(e: ExtractorAccuracyError) -> Self {
        match e {
            ExtractorAccuracyError::Llm { cause, .. } => cause.into(),
            other => CliError::data(other.to_string()),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::config(e.to_string())
    }
}

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Config(c) => c.into(),
            RunError::Io(io) => CliError::new("io", 4, io.to_string()),
            RunError::Llm(l) => l.into(),
            RunError::Suspended { .. } => CliError::new("network", 5, e.to_string()),
            RunError::AttemptsExhausted { .. } | RunError::MissingCell { .. } => {
                CliError::new("incomplete", 8, e.to_string())
            }
            RunError::AlreadyInitialized(_) | RunError::NotARunDir(_) => {
                CliError::usage(e.to_string())
            }
            other => CliError::data(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new("io", 4, e.to_string())
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Nash(args) => cmd_nash(args),
        Command::Phenotype(args) => cmd_phenotype(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::MockRun(args) => cmd_mock_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::RegionAverage(args) => cmd_region_average(args),
        Command::Render(args) => cmd_render(args),
        Command::ValidateExtractor(args) => cmd_validate_extractor(args),
        Command::Ingest(args) => cmd_ingest(args),
    }
}

fn parse_grid(text: &str) -> Result<GridSpec, CliError> {
    let spec = match text {
        "original" => GridSpec::original(),
        "extended" => GridSpec::extended(),
        other => {
            let (n_s, n_t) = other
                .split_once('x')
                .and_then(|(a, b)| Some((a.parse::<i32>().ok()?, b.parse::<i32>().ok()?)))
                .ok_or_else(|| {
                    CliError::usage(format!(
                        "bad grid {other:?}; expected original, extended, or NxM"
                    ))
                })?;
            if n_s < 1 || n_t < 1 {
                return Err(CliError::usage("grid dimensions must be at least 1"));
            }
            GridSpec::new(0, n_s - 1, 0, n_t - 1)
        }
    };
    spec.validate()?;
    Ok(spec)
}

fn parse_region(text: &str) -> Result<Region, CliError> {
    text.parse().map_err(CliError::usage)
}

fn parse_stage(text: &str) -> Result<Stage, CliError> {
    match text {
        "simple" => Ok(Stage::Simple),
        "double" => Ok(Stage::Double),
        "multi-step" | "multi_step" => Ok(Stage::MultiStep),
        "verified" => Ok(Stage::Verified),
        other => Err(CliError::usage(format!(
            "unknown stage {other:?}; expected simple, double, multi-step, or verified"
        ))),
    }
}

fn parse_phenotype(text: &str) -> Result<Phenotype, CliError> {
    match text {
        "optimist" => Ok(Phenotype::Optimist),
        "pessimist" => Ok(Phenotype::Pessimist),
        "envious" => Ok(Phenotype::Envious),
        "trustful" => Ok(Phenotype::Trustful),
        "undefined" => Ok(Phenotype::Undefined),
        other => Err(CliError::usage(format!("unknown phenotype {other:?}"))),
    }
}

fn parse_weights(text: &str) -> Result<MixtureWeights, CliError> {
    if text == "paper" {
        return Ok(MixtureWeights::paper());
    }
    let mut weights = MixtureWeights {
        optimist: 0.0,
        pessimist: 0.0,
        envious: 0.0,
        trustful: 0.0,
        undefined: 0.0,
    };
    for part in text.split(',') {
        let (name, value) = part
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("bad weight {part:?}; expected name=value")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("bad weight value {value:?}")))?;
        match name.trim() {
            "optimist" => weights.optimist = value,
            "pessimist" => weights.pessimist = value,
            "envious" => weights.envious = value,
            "trustful" => weights.trustful = value,
            "undefined" => weights.undefined = value,
            other => return Err(CliError::usage(format!("unknown phenotype {other:?}"))),
        }
    }
    weights.validate()?;
    Ok(weights)
}

fn cmd_nash(args: NashArgs) -> Result<(), CliError> {
    let grid = parse_grid(&args.grid)?;
    let matrix = match args.method.as_str() {
        "analytic" => {
            if !(0.0..=1.0).contains(&args.x0) {
                return Err(CliError::usage("--x0 must lie in [0,1]"));
            }
            nash_matrix(&grid, args.x0)
        }
        "replicator" => {
            let params = ReplicatorParams {
                x0: args.x0,
                tol: args.tol,
                t_max: args.t_max,
            };
            let (matrix, results) = replicator_matrix(&grid, &params);
            if let Some(path) = &args.diagnostics {
                let rows: Vec<serde_json::Value> = results
                    .iter()
                    .map(|(s, t, r)| {
                        serde_json::json!({
                            "s": s,
                            "t": t,
                            "outcome": r.outcome,
                            "terminal_x": r.terminal_x,
                            "steps": r.steps,
                            "periodic_pair": r.periodic_pair,
                        })
                    })
                    .collect();
                std::fs::write(path, serde_json::to_vec_pretty(&rows).expect("serializes"))?;
            }
            matrix
        }
        other => {
            return Err(CliError::usage(format!(
                "unknown method {other:?}; expected analytic or replicator"
            )))
        }
    };
    matrix.write_csv(&args.out)?;
    println!("wrote {} ({} cells)", args.out.display(), matrix.cells().len());
    Ok(())
}

fn cmd_phenotype(args: PhenotypeArgs) -> Result<(), CliError> {
    let grid = parse_grid(&args.grid)?;
    if let Some(observed_path) = &args.validate {
        let sd_path = args.sd.as_ref().expect("clap enforces --sd");
        let observed = CooperationMatrix::read_csv(observed_path)?;
        let sd = CooperationMatrix::read_csv(sd_path)?;
        let report = deviation_report(&observed, &sd)
            .map_err(|e| CliError::data(e.to_string()))?;
        if args.json {
            let rows: Vec<serde_json::Value> = report
                .iter()
                .map(|(ph, entry)| {
                    serde_json::json!({
                        "phenotype": ph.name(),
                        "mean_deviation": entry.mean_deviation,
                        "pass": entry.pass,
                        "compared_cells": entry.compared_cells,
                        "skipped_cells": entry.skipped_cells,
                    })
                })
                .collect();
            println!("{}", serde_json::to_string_pretty(&rows).expect("serializes"));
        } else {
            for (ph, entry) in &report {
                println!(
                    "{:<10} mean deviation {:.3} SD ({}; {} cells, {} skipped)",
                    ph.name(),
                    entry.mean_deviation,
                    if entry.pass { "pass" } else { "fail" },
                    entry.compared_cells,
                    entry.skipped_cells,
                );
            }
        }
        return Ok(());
    }

    let matrix = match &args.phenotype {
        Some(name) => phenotype_matrix(parse_phenotype(name)?, &grid),
        None => mixture_matrix(&parse_weights(&args.weights)?, &grid)?,
    };
    let out = args.out.expect("clap enforces --out without --validate");
    matrix.write_csv(&out)?;
    println!("wrote {} ({} cells)", out.display(), matrix.cells().len());
    Ok(())
}

fn report_run(status: RunStatus) -> Result<(), CliError> {
    match status {
        RunStatus::Complete(outcome) => {
            let diag = &outcome.diagnostics;
            println!(
                "run complete: {} rounds, {} attempts, {} relaxed games",
                diag.rounds, diag.total_attempts, diag.relaxed_games
            );
            println!("matrix: {}", outcome.run_dir.join(runner::MATRIX_FILE).display());
            println!("log: {}", outcome.run_dir.join(runner::LOG_FILE).display());
            Ok(())
        }
        RunStatus::Interrupted { rounds, run_dir } => {
            println!(
                "run interrupted after {rounds} rounds; resume with --resume {}",
                run_dir.display()
            );
            Ok(())
        }
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let options = RunOptions {
        stop_after_rounds: args.max_rounds,
    };
    let status = match (&args.config, &args.resume) {
        (Some(config_path), None) => {
            let config = RunConfig::load(config_path)?;
            runner::start(&config, options)?
        }
        (None, Some(run_dir)) => runner::resume(run_dir, options)?,
        _ => return Err(CliError::usage("pass exactly one of --config or --resume")),
    };
    report_run(status)
}

fn cmd_mock_run(args: MockRunArgs) -> Result<(), CliError> {
    let options = RunOptions {
        stop_after_rounds: args.max_rounds,
    };
    if let Some(run_dir) = &args.resume {
        return report_run(runner::resume(run_dir, options)?);
    }
    let generator = match args.policy.as_str() {
        "cooperate" => MockPolicy::Cooperate,
        "defect" => MockPolicy::Defect,
        "random" => MockPolicy::Random,
        "flaky" => MockPolicy::FlakyCooperate {
            invalid_every: args.invalid_every,
        },
        other => {
            return Err(CliError::usage(format!(
                "unknown policy {other:?}; expected cooperate, defect, random, or flaky"
            )))
        }
    };
    let verifier = match args.verifier.as_str() {
        "good" => MockVerdictMode::AlwaysGood,
        "bad" => MockVerdictMode::AlwaysBad,
        "gibberish" => MockVerdictMode::Gibberish,
        other => {
            return Err(CliError::usage(format!(
                "unknown verifier behavior {other:?}; expected good, bad, or gibberish"
            )))
        }
    };
    let config = RunConfig {
        schema_version: 1,
        seed: args.seed,
        plays_per_game: args.plays,
        concurrency: args.concurrency,
        out_dir: args.out_dir,
        grid: parse_grid(&args.grid)?,
        agent: AgentSpec::Mock {
            generator,
            verifier,
            stage: parse_stage(&args.stage)?,
        },
    };
    report_run(runner::start(&config, options)?)
}

fn cmd_compare(args: CompareArgs) -> Result<(), CliError> {
    let a = CooperationMatrix::read_csv(&args.a)?;
    let b = CooperationMatrix::read_csv(&args.b)?;
    let region = parse_region(&args.region)?;
    let result = compare_matrices_region(&a, &b, region)?;
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&serde_json::json!({
                "msd": result.msd,
                "pearson_r": result.pearson_r,
                "n_cells": result.n_cells,
                "region": region.name(),
            }))
            .expect("serializes")
        );
    } else {
        println!("msd {:.6}", result.msd);
        match result.pearson_r {
            Some(r) => println!("pearson_r {r:.6}"),
            None => println!("pearson_r undefined (constant input)"),
        }
        println!("n_cells {}", result.n_cells);
    }
    Ok(())
}

fn cmd_region_average(args: RegionAverageArgs) -> Result<(), CliError> {
    let matrix = CooperationMatrix::read_csv(&args.matrix)?;
    let region = parse_region(&args.region)?;
    let mean = region_average(&matrix, region)?;
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&serde_json::json!({
                "mean": mean,
                "region": region.name(),
            }))
            .expect("serializes")
        );
    } else {
        println!("{mean:.6}");
    }
    Ok(())
}

fn cmd_render(args: RenderArgs) -> Result<(), CliError> {
    let matrix = CooperationMatrix::read_csv(&args.matrix)?;
    let style = HeatmapStyle {
        cell_px: args.cell_px.max(4),
        outline_original: args.outline_original,
    };
    std::fs::write(&args.out, render_heatmap(&matrix, &style))?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_validate_extractor(args: ValidateExtractorArgs) -> Result<(), CliError> {
    let answers = read_annotations(&args.annotations)?;
    let accuracy = if args.mock {
        extractor_accuracy(&answers, &MockExtractor, "mock-extractor")?
    } else {
        let endpoint = args.endpoint.expect("clap enforces --endpoint");
        let model = args.model.expect("clap enforces --model");
        let mut http = HttpChatModel::new(endpoint);
        if let Some(var) = &args.api_key_env {
            http = http.with_key_from_env(var)?;
        }
        let extractor: &dyn ChatModel = &http;
        extractor_accuracy(&answers, extractor, &model)?
    };
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&serde_json::json!({
                "accuracy": accuracy,
                "n_answers": answers.len(),
            }))
            .expect("serializes")
        );
    } else {
        println!("accuracy {accuracy:.4} over {} answers", answers.len());
    }
    Ok(())
}

fn cmd_ingest(args: IngestArgs) -> Result<(), CliError> {
    let schema: HumanSchema = args.schema.parse().map_err(CliError::usage)?;
    let grid = parse_grid(&args.grid)?;
    let outcome = ingest_human_data(&args.input, schema, &grid)?;
    outcome.matrix.write_csv(&args.out)?;
    println!("wrote {}", args.out.display());
    match (&args.sd_out, &outcome.sd) {
        (Some(path), Some(sd)) => {
            sd.write_csv(path)?;
            println!("wrote {}", path.display());
        }
        (Some(_), None) => {
            return Err(CliError::data(
                "dataset carries no standard deviations; drop --sd-out or use the rows schema",
            ))
        }
        _ => {}
    }
    if let Some(path) = &args.report {
        std::fs::write(
            path,
            serde_json::to_vec_pretty(&outcome.report).expect("serializes"),
        )?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
