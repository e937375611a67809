//! Experiment orchestration: grid x plays, the validity loop with replay,
//! adaptive verifier relaxation, persistence, and resume.
//!
//! A run proceeds in rounds. Each round plans one attempt per missing play
//! slot of every incomplete game, executes the plan concurrently up to the
//! configured cap, then applies results in plan order behind a single
//! writer. Every play derives its random stream from (run seed, game,
//! attempt index), so results never depend on completion order or on where
//! a run was interrupted.
//!
//! Relaxation: when the number of incomplete games stays the same across
//! two consecutive rounds, the verifier is disabled for exactly those games
//! for the rest of the run, and their subsequent plays are flagged.

pub mod config;
pub mod log;
pub mod state;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::equilibrium::nash_cooperation;
use crate::game::{Choice, Game, GridSpec};
use crate::llm::client::{
    ChatModel, CompletionRequest, HttpChatModel, LlmError, GENERATION_MAX_TOKENS,
    GENERATION_TEMPERATURE,
};
use crate::llm::extract::{extract_choice, parse_extractor_reply, verify_logic, Extracted, Verdict};
use crate::llm::mock::{MockExtractor, MockGenerator, MockVerifier};
use crate::llm::{build_prompt, Label, LabelMapping, Stage};
use crate::matrix::CooperationMatrix;
use crate::phenotype::{MixtureWeights, Phenotype};

use config::{AgentSpec, ConfigError, RunConfig};
use log::{read_play_log, LogError, PlayLogWriter, PlayRecord, LOG_SCHEMA_VERSION};
use state::{RunState, StateError};

pub const CONFIG_FILE: &str = "config.toml";
pub const LOG_FILE: &str = "plays.jsonl";
pub const STATE_FILE: &str = "state.json";
pub const MATRIX_FILE: &str = "matrix.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";

/// Failed attempts allowed per play slot before the run aborts.
pub const MAX_SLOT_FAILURES: u32 = 50;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("run suspended after endpoint failure; resume from {run_dir}: {cause}")]
    Suspended { run_dir: PathBuf, cause: LlmError },
    #[error("game (S={s},T={t}) exhausted {failures} attempts on play slot {slot}")]
    AttemptsExhausted {
        s: i32,
        t: i32,
        slot: u32,
        failures: u32,
    },
    #[error("no valid plays for cell (S={s},T={t})")]
    MissingCell { s: i32, t: i32 },
    #[error("{0} already holds a run; resume it instead")]
    AlreadyInitialized(PathBuf),
    #[error("{0} is not a run directory")]
    NotARunDir(PathBuf),
}

/// Knobs for driving a run programmatically.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Stop cleanly once this many rounds have completed; the run can be
    /// resumed later.
    pub stop_after_rounds: Option<u32>,
}

/// How a run ended.
#[derive(Debug)]
pub enum RunStatus {
    Complete(RunOutcome),
    /// Stopped at a round barrier by [`RunOptions::stop_after_rounds`].
    Interrupted { rounds: u32, run_dir: PathBuf },
}

#[derive(Debug)]
pub struct RunOutcome {
    pub matrix: CooperationMatrix,
    pub diagnostics: Diagnostics,
    pub run_dir: PathBuf,
}

#[derive(Clone, Debug, Serialize)]
pub struct Diagnostics {
    pub rounds: u32,
    pub relaxed_games: usize,
    pub total_attempts: u64,
    pub games: Vec<GameDiagnostics>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GameDiagnostics {
    pub s: i32,
    pub t: i32,
    pub valid: u32,
    pub attempts: u32,
    pub relaxed: bool,
    pub bypassed_valid: u32,
    pub bypass_fraction: f64,
}

/// Starts a fresh run in `config.out_dir`.
pub fn start(config: &RunConfig, options: RunOptions) -> Result<RunStatus, RunError> {
    config.validate()?;
    let run_dir = config.out_dir.clone();
    std::fs::create_dir_all(&run_dir)?;
    if run_dir.join(STATE_FILE).exists() {
        return Err(RunError::AlreadyInitialized(run_dir));
    }
    config.save(&run_dir.join(CONFIG_FILE))?;
    let state = RunState::fresh(&config.grid, config.plays_per_game);
    state.save(&run_dir.join(STATE_FILE))?;
    run_loop(config, state, &run_dir, options)
}

/// Resumes a previously started run from its directory.
pub fn resume(run_dir: &Path, options: RunOptions) -> Result<RunStatus, RunError> {
    let config_path = run_dir.join(CONFIG_FILE);
    if !config_path.exists() {
        return Err(RunError::NotARunDir(run_dir.to_path_buf()));
    }
    let config = RunConfig::load(&config_path)?;
    let state = RunState::load(
        &run_dir.join(STATE_FILE),
        &config.grid,
        config.plays_per_game,
    )?;
    run_loop(&config, state, run_dir, options)
}

/// Average cooperation per cell over the valid records. Every grid cell
/// must have at least one valid play; records off the grid are ignored.
pub fn aggregate_matrix(
    records: &[PlayRecord],
    grid: &GridSpec,
) -> Result<CooperationMatrix, RunError> {
    let mut cooperations = vec![0u64; grid.len()];
    let mut totals = vec![0u64; grid.len()];
    for record in records.iter().filter(|r| r.valid) {
        if let Some(i) = grid.index_of(record.s, record.t) {
            totals[i] += 1;
            if record.choice == Some(Choice::Cooperate) {
                cooperations[i] += 1;
            }
        }
    }
    let mut cells = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        if totals[i] == 0 {
            let (s, t) = grid.st_at(i);
            return Err(RunError::MissingCell { s, t });
        }
        cells.push(cooperations[i] as f64 / totals[i] as f64);
    }
    Ok(CooperationMatrix::from_cells(*grid, cells).expect("means lie in [0,1]"))
}

/// Random stream seed for one play, from (run seed, game, attempt index).
pub fn play_seed(run_seed: u64, s: i32, t: i32, attempt: u32) -> u64 {
    let mut z = run_seed ^ 0xa076_1d64_78bd_642f;
    for v in [s as i64 as u64, t as i64 as u64, u64::from(attempt)] {
        z = splitmix(z ^ v);
    }
    z
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

// ---------------------------------------------------------------------------
// Agents
// ---------------------------------------------------------------------------

enum RunnerAgent {
    Direct(DirectAgent),
    Pipeline(Pipeline),
}

enum DirectAgent {
    Nash {
        x0: f64,
    },
    Phenotype(Phenotype),
    Mixture(MixtureWeights),
    Scripted {
        default: Choice,
        table: HashMap<(i32, i32), Choice>,
    },
}

impl DirectAgent {
    fn decide(&self, game: &Game, rng: &mut ChaCha8Rng) -> Choice {
        match self {
            DirectAgent::Nash { x0 } => {
                let p = nash_cooperation(game, *x0);
                if rng.gen_bool(p) {
                    Choice::Cooperate
                } else {
                    Choice::Defect
                }
            }
            DirectAgent::Phenotype(ph) => ph.decide(game, rng),
            DirectAgent::Mixture(weights) => weights.draw(rng).decide(game, rng),
            DirectAgent::Scripted { default, table } => {
                *table.get(&(game.s, game.t)).unwrap_or(default)
            }
        }
    }
}

struct Pipeline {
    stage: Stage,
    generator: Box<dyn ChatModel>,
    generator_model: String,
    extractor: Option<Box<dyn ChatModel>>,
    extractor_model: String,
    verifier: Option<Box<dyn ChatModel>>,
    verifier_model: String,
}

fn build_agent(spec: &AgentSpec) -> Result<RunnerAgent, RunError> {
    Ok(match spec {
        AgentSpec::Nash { x0 } => RunnerAgent::Direct(DirectAgent::Nash { x0: *x0 }),
        AgentSpec::Phenotype { phenotype } => {
            RunnerAgent::Direct(DirectAgent::Phenotype(*phenotype))
        }
        AgentSpec::Mixture { weights } => RunnerAgent::Direct(DirectAgent::Mixture(*weights)),
        AgentSpec::Scripted { default, table } => RunnerAgent::Direct(DirectAgent::Scripted {
            default: *default,
            table: table.iter().map(|c| ((c.s, c.t), c.choice)).collect(),
        }),
        AgentSpec::Llm {
            endpoint,
            model,
            stage,
            extractor_endpoint,
            extractor_model,
            verifier_endpoint,
            verifier_model,
            api_key_env,
            timeout_s,
            retry,
        } => {
            let build_endpoint = |url: &str| -> Result<Box<dyn ChatModel>, RunError> {
                let mut endpoint = HttpChatModel::new(url)
                    .with_timeout(Duration::from_secs(*timeout_s))
                    .with_retry(*retry);
                if let Some(var) = api_key_env {
                    endpoint = endpoint.with_key_from_env(var)?;
                }
                Ok(Box::new(endpoint))
            };
            let generator = build_endpoint(endpoint)?;
            let extractor = match stage {
                Stage::Simple => None,
                _ => Some(build_endpoint(
                    extractor_endpoint.as_deref().unwrap_or(endpoint),
                )?),
            };
            let verifier = match stage {
                Stage::Verified => Some(build_endpoint(
                    verifier_endpoint.as_deref().unwrap_or(endpoint),
                )?),
                _ => None,
            };
            RunnerAgent::Pipeline(Pipeline {
                stage: *stage,
                generator,
                generator_model: model.clone(),
                extractor,
                extractor_model: extractor_model.clone().unwrap_or_else(|| model.clone()),
                verifier,
                verifier_model: verifier_model.clone().unwrap_or_else(|| model.clone()),
            })
        }
        AgentSpec::Mock {
            generator,
            verifier,
            stage,
        } => RunnerAgent::Pipeline(Pipeline {
            stage: *stage,
            generator: Box::new(MockGenerator::new(*generator)),
            generator_model: "mock-player".into(),
            extractor: Some(Box::new(MockExtractor)),
            extractor_model: "mock-extractor".into(),
            verifier: Some(Box::new(MockVerifier::new(*verifier))),
            verifier_model: "mock-verifier".into(),
        }),
    })
}

// ---------------------------------------------------------------------------
// Round execution
// ---------------------------------------------------------------------------

struct PlannedPlay {
    game_idx: usize,
    attempt: u32,
    seed: u64,
    relaxed: bool,
}

struct AttemptOutput {
    mapping: LabelMapping,
    long_answer: String,
    verdict: Option<Verdict>,
    extracted: Option<Extracted>,
    choice: Option<Choice>,
    verifier_bypassed: bool,
    error: Option<LlmError>,
    ts_start_ms: u64,
    ts_end_ms: u64,
}

impl AttemptOutput {
    fn is_valid(&self) -> bool {
        self.error.is_none() && self.choice.is_some()
    }
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn run_play(agent: &RunnerAgent, game: &Game, planned: &PlannedPlay) -> AttemptOutput {
    let ts_start_ms = now_ms();
    let mut rng = ChaCha8Rng::seed_from_u64(planned.seed);
    let mapping = LabelMapping::random(&mut rng);
    let mut output = match agent {
        RunnerAgent::Direct(agent) => {
            let choice = agent.decide(game, &mut rng);
            let label = mapping.label_for(choice);
            AttemptOutput {
                mapping,
                long_answer: String::new(),
                verdict: None,
                extracted: Some(match label {
                    Label::A => Extracted::A,
                    Label::B => Extracted::B,
                }),
                choice: Some(choice),
                verifier_bypassed: false,
                error: None,
                ts_start_ms,
                ts_end_ms: 0,
            }
        }
        RunnerAgent::Pipeline(pipeline) => run_pipeline_play(pipeline, game, mapping, planned),
    };
    output.ts_start_ms = ts_start_ms;
    output.ts_end_ms = now_ms();
    output
}

fn run_pipeline_play(
    pipeline: &Pipeline,
    game: &Game,
    mapping: LabelMapping,
    planned: &PlannedPlay,
) -> AttemptOutput {
    let blank = |long_answer: String| AttemptOutput {
        mapping,
        long_answer,
        verdict: None,
        extracted: None,
        choice: None,
        verifier_bypassed: false,
        error: None,
        ts_start_ms: 0,
        ts_end_ms: 0,
    };

    let bundle = build_prompt(game, mapping, pipeline.stage);
    let request = CompletionRequest::new(&pipeline.generator_model, &bundle.system, &bundle.user)
        .with_params(GENERATION_TEMPERATURE, GENERATION_MAX_TOKENS)
        .with_seed(planned.seed);
    let long_answer = match pipeline.generator.complete(&request) {
        Ok(response) => response.text,
        Err(e) => {
            let mut out = blank(String::new());
            out.error = Some(e);
            return out;
        }
    };

    let mut verdict = None;
    let mut verifier_bypassed = false;
    if pipeline.stage == Stage::Verified {
        if planned.relaxed {
            verifier_bypassed = true;
        } else {
            let verifier = pipeline.verifier.as_deref().expect("verifier configured");
            match verify_logic(
                &long_answer,
                game,
                mapping,
                verifier,
                &pipeline.verifier_model,
                Some(planned.seed),
            ) {
                Ok(v) => {
                    verdict = Some(v);
                    if v != Verdict::Good {
                        let mut out = blank(long_answer);
                        out.verdict = verdict;
                        return out;
                    }
                }
                Err(e) => {
                    let mut out = blank(long_answer);
                    out.error = Some(e);
                    return out;
                }
            }
        }
    }

    let extracted = match pipeline.stage {
        Stage::Simple => parse_extractor_reply(&long_answer),
        _ => {
            let extractor = pipeline.extractor.as_deref().expect("extractor configured");
            match extract_choice(
                &long_answer,
                extractor,
                &pipeline.extractor_model,
                Some(planned.seed),
            ) {
                Ok(x) => x,
                Err(e) => {
                    let mut out = blank(long_answer);
                    out.verdict = verdict;
                    out.verifier_bypassed = verifier_bypassed;
                    out.error = Some(e);
                    return out;
                }
            }
        }
    };
    let choice = extracted.label().map(|label| mapping.choice_for(label));
    AttemptOutput {
        mapping,
        long_answer,
        verdict,
        extracted: Some(extracted),
        choice,
        verifier_bypassed,
        error: None,
        ts_start_ms: 0,
        ts_end_ms: 0,
    }
}

fn execute_round(
    agent: &RunnerAgent,
    games: &[Game],
    plan: &[PlannedPlay],
    concurrency: usize,
) -> Vec<AttemptOutput> {
    let slots: Mutex<Vec<Option<AttemptOutput>>> =
        Mutex::new(plan.iter().map(|_| None).collect());
    let cursor = AtomicUsize::new(0);
    let workers = concurrency.clamp(1, plan.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = cursor.fetch_add(1, Ordering::SeqCst);
                if i >= plan.len() {
                    break;
                }
                let output = run_play(agent, &games[plan[i].game_idx], &plan[i]);
                slots.lock().expect("results lock")[i] = Some(output);
            });
        }
    });
    slots
        .into_inner()
        .expect("results lock")
        .into_iter()
        .map(|o| o.expect("every planned play produced an output"))
        .collect()
}

// ---------------------------------------------------------------------------
// The round loop
// ---------------------------------------------------------------------------

fn run_loop(
    config: &RunConfig,
    mut state: RunState,
    run_dir: &Path,
    options: RunOptions,
) -> Result<RunStatus, RunError> {
    let agent = build_agent(&config.agent)?;
    let games = config.grid.games().map_err(ConfigError::Grid)?;
    let stage = config.agent.stage();
    let mut log = PlayLogWriter::append_to(&run_dir.join(LOG_FILE))?;
    let state_path = run_dir.join(STATE_FILE);
    let plays = config.plays_per_game;

    loop {
        let incomplete: Vec<usize> = (0..games.len())
            .filter(|&i| state.games[i].valid < plays)
            .collect();
        if incomplete.is_empty() {
            return finish(config, &state, run_dir);
        }
        if let Some(limit) = options.stop_after_rounds {
            if state.rounds >= limit {
                return Ok(RunStatus::Interrupted {
                    rounds: state.rounds,
                    run_dir: run_dir.to_path_buf(),
                });
            }
        }
        for &gi in &incomplete {
            let progress = &state.games[gi];
            let slot = progress.valid as usize;
            if progress.slot_failures[slot] >= MAX_SLOT_FAILURES {
                return Err(RunError::AttemptsExhausted {
                    s: progress.s,
                    t: progress.t,
                    slot: slot as u32,
                    failures: progress.slot_failures[slot],
                });
            }
        }

        let mut plan = Vec::new();
        for &gi in &incomplete {
            let progress = &state.games[gi];
            let missing = plays - progress.valid;
            for j in 0..missing {
                let attempt = progress.attempts + j;
                plan.push(PlannedPlay {
                    game_idx: gi,
                    attempt,
                    seed: play_seed(config.seed, progress.s, progress.t, attempt),
                    relaxed: progress.relaxed,
                });
            }
        }

        let round = state.rounds + 1;
        let outputs = execute_round(&agent, &games, &plan, config.concurrency);

        let mut fatal: Option<LlmError> = None;
        for (planned, output) in plan.iter().zip(outputs) {
            let progress = &mut state.games[planned.game_idx];
            let slot = progress.valid.min(plays - 1);
            let valid = output.is_valid();
            let record = PlayRecord {
                schema_version: LOG_SCHEMA_VERSION,
                round,
                s: progress.s,
                t: progress.t,
                r: config.grid.r,
                p: config.grid.p,
                slot,
                attempt: planned.attempt,
                mapping: output.mapping,
                stage,
                long_answer: output.long_answer,
                verdict: output.verdict,
                extracted: output.extracted,
                choice: output.choice,
                verifier_bypassed: output.verifier_bypassed,
                valid,
                error: output.error.as_ref().map(|e| e.to_string()),
                play_seed: planned.seed,
                ts_start_ms: output.ts_start_ms,
                ts_end_ms: output.ts_end_ms,
            };
            log.write(&record)?;
            progress.attempts += 1;
            if valid {
                progress.valid += 1;
                if output.choice == Some(Choice::Cooperate) {
                    progress.cooperations += 1;
                }
                if output.verifier_bypassed {
                    progress.bypassed_valid += 1;
                }
            } else if output.error.is_none() {
                // endpoint failures suspend the run instead of counting
                // toward the per-slot replay budget
                progress.slot_failures[slot as usize] += 1;
            }
            if let Some(e) = output.error {
                fatal = Some(e);
            }
        }

        state.rounds += 1;
        if fatal.is_none() {
            let invalid_now = state.games.iter().filter(|g| g.valid < plays).count();
            if invalid_now > 0 && state.prev_invalid == Some(invalid_now) {
                for progress in state.games.iter_mut().filter(|g| g.valid < plays) {
                    progress.relaxed = true;
                }
            }
            state.prev_invalid = Some(invalid_now);
        }
        state.save(&state_path)?;

        if let Some(cause) = fatal {
            return Err(RunError::Suspended {
                run_dir: run_dir.to_path_buf(),
                cause,
            });
        }
    }
}

fn finish(config: &RunConfig, state: &RunState, run_dir: &Path) -> Result<RunStatus, RunError> {
    let records = read_play_log(&run_dir.join(LOG_FILE))?;
    let matrix = aggregate_matrix(&records, &config.grid)?;
    matrix
        .write_csv(&run_dir.join(MATRIX_FILE))
        .map_err(|e| RunError::Io(std::io::Error::other(e)))?;
    let diagnostics = Diagnostics {
        rounds: state.rounds,
        relaxed_games: state.games.iter().filter(|g| g.relaxed).count(),
        total_attempts: state.games.iter().map(|g| u64::from(g.attempts)).sum(),
        games: state
            .games
            .iter()
            .map(|g| GameDiagnostics {
                s: g.s,
                t: g.t,
                valid: g.valid,
                attempts: g.attempts,
                relaxed: g.relaxed,
                bypassed_valid: g.bypassed_valid,
                bypass_fraction: g.bypass_fraction(),
            })
            .collect(),
    };
    std::fs::write(
        run_dir.join(DIAGNOSTICS_FILE),
        serde_json::to_vec_pretty(&diagnostics).expect("diagnostics serialize"),
    )?;
    Ok(RunStatus::Complete(RunOutcome {
        matrix,
        diagnostics,
        run_dir: run_dir.to_path_buf(),
    }))
}
