//! Python bindings for the cooplab laboratory.
//!
//! Exposes the core types and operations in-process: games and their
//! taxonomy, equilibrium computation, phenotype mixtures, cooperation
//! matrices with CSV and SVG output, comparison metrics, prompt building,
//! and the offline mock experiment runner.
//!
//! ```text
//! import cooplab_py as cl
//! nash = cl.nash_matrix("original")
//! print(nash.mean(), cl.classify_game(2, 12))
//! ```

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cooplab::analysis::heatmap::{render_heatmap as render_svg, HeatmapStyle};
use cooplab::analysis::{compare_matrices_region, region_average, Region};
use cooplab::equilibrium::{
    classify_stability, interior_fixed_point, nash_cooperation, nash_matrix as nash_grid,
    replicator_step, simulate_replicator, ReplicatorParams, StabilityClass,
};
use cooplab::game::{Choice, Game, GridSpec};
use cooplab::llm::mock::{MockPolicy, MockVerdictMode};
use cooplab::llm::{build_prompt, LabelMapping, Stage};
use cooplab::matrix::CooperationMatrix;
use cooplab::phenotype::{mixture_matrix, MixtureWeights, Phenotype, ALL_PHENOTYPES};
use cooplab::runner::config::{AgentSpec, RunConfig};
use cooplab::runner::{self, RunOptions, RunStatus};

fn value_err(message: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(message.to_string())
}

fn parse_choice(text: &str) -> PyResult<Choice> {
    match text.to_ascii_lowercase().as_str() {
        "cooperate" | "c" => Ok(Choice::Cooperate),
        "defect" | "d" => Ok(Choice::Defect),
        other => Err(value_err(format!("unknown choice {other:?}"))),
    }
}

fn parse_grid(text: &str) -> PyResult<GridSpec> {
    let grid = match text {
        "original" => GridSpec::original(),
        "extended" => GridSpec::extended(),
        other => {
            let parsed = other
                .split_once('x')
                .and_then(|(a, b)| Some((a.parse::<i32>().ok()?, b.parse::<i32>().ok()?)));
            match parsed {
                Some((n_s, n_t)) if n_s >= 1 && n_t >= 1 => GridSpec::new(0, n_s - 1, 0, n_t - 1),
                _ => {
                    return Err(value_err(format!(
                        "bad grid {other:?}; expected original, extended, or NxM"
                    )))
                }
            }
        }
    };
    grid.validate().map_err(value_err)?;
    Ok(grid)
}

fn parse_region(text: &str) -> PyResult<Region> {
    text.parse().map_err(value_err)
}

fn parse_stage(text: &str) -> PyResult<Stage> {
    match text {
        "simple" => Ok(Stage::Simple),
        "double" => Ok(Stage::Double),
        "multi-step" | "multi_step" => Ok(Stage::MultiStep),
        "verified" => Ok(Stage::Verified),
        other => Err(value_err(format!("unknown stage {other:?}"))),
    }
}

fn parse_phenotype(text: &str) -> PyResult<Phenotype> {
    ALL_PHENOTYPES
        .into_iter()
        .find(|ph| ph.name() == text)
        .ok_or_else(|| value_err(format!("unknown phenotype {text:?}")))
}

/// Grid of average cooperation rates indexed by (S, T).
#[pyclass(name = "CooperationMatrix")]
#[derive(Clone)]
struct PyMatrix {
    inner: CooperationMatrix,
}

#[pymethods]
impl PyMatrix {
    /// Load a matrix from `S,T,value` CSV.
    #[staticmethod]
    fn read_csv(path: PathBuf) -> PyResult<Self> {
        CooperationMatrix::read_csv(&path)
            .map(|inner| PyMatrix { inner })
            .map_err(|e| PyIOError::new_err(e.to_string()))
    }

    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        self.inner
            .write_csv(&path)
            .map_err(|e| PyIOError::new_err(e.to_string()))
    }

    /// Cell value at (s, t), or None outside the grid.
    fn get(&self, s: i32, t: i32) -> Option<f64> {
        self.inner.get(s, t)
    }

    /// Row-major cell values (S ascending, then T).
    fn cells(&self) -> Vec<f64> {
        self.inner.cells().to_vec()
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    /// (s_min, s_max, t_min, t_max, step) of the underlying grid.
    fn bounds(&self) -> (i32, i32, i32, i32, i32) {
        let g = self.inner.grid();
        (g.s_min, g.s_max, g.t_min, g.t_max, g.step)
    }

    fn __len__(&self) -> usize {
        self.inner.cells().len()
    }

    fn __repr__(&self) -> String {
        let g = self.inner.grid();
        format!(
            "CooperationMatrix(S {}..={}, T {}..={}, mean {:.4})",
            g.s_min,
            g.s_max,
            g.t_min,
            g.t_max,
            self.inner.mean()
        )
    }
}

/// Classify a game into harmony, snowdrift, stag_hunt, prisoners_dilemma,
/// or non_standard.
#[pyfunction]
#[pyo3(signature = (s, t, r = 10, p = 5))]
fn classify_game(s: i32, t: i32, r: i32, p: i32) -> String {
    Game::new(r, s, t, p).class().name().to_string()
}

/// Payoff for playing `mine` against `other`.
#[pyfunction]
#[pyo3(signature = (s, t, mine, other, r = 10, p = 5))]
fn payoff(s: i32, t: i32, mine: &str, other: &str, r: i32, p: i32) -> PyResult<i32> {
    Ok(Game::new(r, s, t, p).payoff(parse_choice(mine)?, parse_choice(other)?))
}

/// One clamped step of the unit-time replicator map.
#[pyfunction]
#[pyo3(name = "replicator_step", signature = (x, s, t, r = 10, p = 5))]
fn replicator_step_py(x: f64, s: i32, t: i32, r: i32, p: i32) -> f64 {
    replicator_step(x, &Game::new(r, s, t, p))
}

/// Iterate the replicator map; returns a dict with terminal_x, outcome,
/// steps, and periodic_pair.
#[pyfunction]
#[pyo3(signature = (s, t, x0 = 0.5, tol = 0.1, t_max = 1000, r = 10, p = 5))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    s: i32,
    t: i32,
    x0: f64,
    tol: f64,
    t_max: u32,
    r: i32,
    p: i32,
) -> PyResult<Bound<'py, PyDict>> {
    let result = simulate_replicator(&Game::new(r, s, t, p), &ReplicatorParams { x0, tol, t_max });
    let dict = PyDict::new(py);
    dict.set_item("terminal_x", result.terminal_x)?;
    dict.set_item(
        "outcome",
        match result.outcome {
            cooplab::equilibrium::Outcome::TotalCooperation => "total_cooperation",
            cooplab::equilibrium::Outcome::TotalDefection => "total_defection",
            cooplab::equilibrium::Outcome::MixedEquilibrium => "mixed_equilibrium",
            cooplab::equilibrium::Outcome::Periodic => "periodic",
            cooplab::equilibrium::Outcome::MaxIterations => "max_iterations",
        },
    )?;
    dict.set_item("steps", result.steps)?;
    dict.set_item("periodic_pair", result.periodic_pair)?;
    Ok(dict)
}

/// Interior fixed point (P-S)/(R-T-S+P) when strictly inside (0,1).
#[pyfunction]
#[pyo3(name = "interior_fixed_point", signature = (s, t, r = 10, p = 5))]
fn interior_fixed_point_py(s: i32, t: i32, r: i32, p: i32) -> Option<f64> {
    interior_fixed_point(&Game::new(r, s, t, p))
}

/// Stability structure: dict with kind and interior_x.
#[pyfunction]
#[pyo3(signature = (s, t, r = 10, p = 5))]
fn stability<'py>(py: Python<'py>, s: i32, t: i32, r: i32, p: i32) -> PyResult<Bound<'py, PyDict>> {
    let dict = PyDict::new(py);
    match classify_stability(&Game::new(r, s, t, p)) {
        StabilityClass::DefectionDominant => {
            dict.set_item("kind", "defection_dominant")?;
            dict.set_item("interior_x", Option::<f64>::None)?;
        }
        StabilityClass::CooperationDominant => {
            dict.set_item("kind", "cooperation_dominant")?;
            dict.set_item("interior_x", Option::<f64>::None)?;
        }
        StabilityClass::Bistable { interior_x } => {
            dict.set_item("kind", "bistable")?;
            dict.set_item("interior_x", interior_x)?;
        }
        StabilityClass::MixedStable { interior_x } => {
            dict.set_item("kind", "mixed_stable")?;
            dict.set_item("interior_x", interior_x)?;
        }
    }
    Ok(dict)
}

/// Analytic cooperation prediction for one game.
#[pyfunction]
#[pyo3(signature = (s, t, x0 = 0.5, r = 10, p = 5))]
fn nash(s: i32, t: i32, x0: f64, r: i32, p: i32) -> PyResult<f64> {
    if !(0.0..=1.0).contains(&x0) {
        return Err(value_err("x0 must lie in [0,1]"));
    }
    Ok(nash_cooperation(&Game::new(r, s, t, p), x0))
}

/// Analytic Nash cooperation matrix over a named grid.
#[pyfunction]
#[pyo3(signature = (grid = "original", x0 = 0.5))]
fn nash_matrix(grid: &str, x0: f64) -> PyResult<PyMatrix> {
    if !(0.0..=1.0).contains(&x0) {
        return Err(value_err("x0 must lie in [0,1]"));
    }
    Ok(PyMatrix {
        inner: nash_grid(&parse_grid(grid)?, x0),
    })
}

/// Expected cooperation rate of one phenotype rule on one game.
#[pyfunction]
#[pyo3(signature = (phenotype, s, t, r = 10, p = 5))]
fn phenotype_rate(phenotype: &str, s: i32, t: i32, r: i32, p: i32) -> PyResult<f64> {
    Ok(parse_phenotype(phenotype)?.cooperation_rate(&Game::new(r, s, t, p)))
}

/// Mixture cooperation matrix. `weights` maps phenotype names to shares
/// and defaults to the observed population (20/21/30/17/12).
#[pyfunction]
#[pyo3(signature = (grid = "original", weights = None))]
fn mixture(grid: &str, weights: Option<std::collections::HashMap<String, f64>>) -> PyResult<PyMatrix> {
    let weights = match weights {
        None => MixtureWeights::paper(),
        Some(map) => {
            let mut w = MixtureWeights {
                optimist: 0.0,
                pessimist: 0.0,
                envious: 0.0,
                trustful: 0.0,
                undefined: 0.0,
            };
            for (name, value) in map {
                match name.as_str() {
                    "optimist" => w.optimist = value,
                    "pessimist" => w.pessimist = value,
                    "envious" => w.envious = value,
                    "trustful" => w.trustful = value,
                    "undefined" => w.undefined = value,
                    other => return Err(value_err(format!("unknown phenotype {other:?}"))),
                }
            }
            w
        }
    };
    let matrix = mixture_matrix(&weights, &parse_grid(grid)?).map_err(value_err)?;
    Ok(PyMatrix { inner: matrix })
}

/// MSD and Pearson r between two matrices over a named region.
#[pyfunction]
#[pyo3(signature = (a, b, region = "all"))]
fn compare<'py>(
    py: Python<'py>,
    a: &PyMatrix,
    b: &PyMatrix,
    region: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let result =
        compare_matrices_region(&a.inner, &b.inner, parse_region(region)?).map_err(value_err)?;
    let dict = PyDict::new(py);
    dict.set_item("msd", result.msd)?;
    dict.set_item("pearson_r", result.pearson_r)?;
    dict.set_item("n_cells", result.n_cells)?;
    Ok(dict)
}

/// Mean of a matrix over a named region.
#[pyfunction]
#[pyo3(signature = (matrix, region = "all"))]
fn region_mean(matrix: &PyMatrix, region: &str) -> PyResult<f64> {
    region_average(&matrix.inner, parse_region(region)?).map_err(value_err)
}

/// Render a matrix to an SVG file.
#[pyfunction]
#[pyo3(signature = (matrix, path, outline_original = false, cell_px = 24))]
fn render(matrix: &PyMatrix, path: PathBuf, outline_original: bool, cell_px: u32) -> PyResult<()> {
    let style = HeatmapStyle {
        cell_px: cell_px.max(4),
        outline_original,
    };
    std::fs::write(&path, render_svg(&matrix.inner, &style))
        .map_err(|e| PyIOError::new_err(e.to_string()))
}

/// Build the system and user prompt for one play.
#[pyfunction]
#[pyo3(signature = (s, t, b_cooperates = false, stage = "verified", r = 10, p = 5))]
fn prompt<'py>(
    py: Python<'py>,
    s: i32,
    t: i32,
    b_cooperates: bool,
    stage: &str,
    r: i32,
    p: i32,
) -> PyResult<Bound<'py, PyDict>> {
    let mapping = if b_cooperates {
        LabelMapping::BCooperates
    } else {
        LabelMapping::ACooperates
    };
    let bundle = build_prompt(&Game::new(r, s, t, p), mapping, parse_stage(stage)?);
    let dict = PyDict::new(py);
    dict.set_item("system", bundle.system)?;
    dict.set_item("user", bundle.user)?;
    Ok(dict)
}

/// Run the offline scripted-model experiment; returns a summary dict.
#[pyfunction]
#[pyo3(signature = (out_dir, grid = "3x3", plays = 5, seed = 0, policy = "cooperate", verifier = "good", stage = "verified", concurrency = 2))]
#[allow(clippy::too_many_arguments)]
fn mock_run<'py>(
    py: Python<'py>,
    out_dir: PathBuf,
    grid: &str,
    plays: u32,
    seed: u64,
    policy: &str,
    verifier: &str,
    stage: &str,
    concurrency: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let generator = match policy {
        "cooperate" => MockPolicy::Cooperate,
        "defect" => MockPolicy::Defect,
        "random" => MockPolicy::Random,
        "flaky" => MockPolicy::FlakyCooperate { invalid_every: 3 },
        other => return Err(value_err(format!("unknown policy {other:?}"))),
    };
    let verifier = match verifier {
        "good" => MockVerdictMode::AlwaysGood,
        "bad" => MockVerdictMode::AlwaysBad,
        "gibberish" => MockVerdictMode::Gibberish,
        other => return Err(value_err(format!("unknown verifier behavior {other:?}"))),
    };
    let config = RunConfig {
        schema_version: 1,
        seed,
        plays_per_game: plays,
        concurrency,
        out_dir,
        grid: parse_grid(grid)?,
        agent: AgentSpec::Mock {
            generator,
            verifier,
            stage: parse_stage(stage)?,
        },
    };
    let outcome = match runner::start(&config, RunOptions::default()).map_err(value_err)? {
        RunStatus::Complete(outcome) => outcome,
        RunStatus::Interrupted { .. } => unreachable!("no round cap configured"),
    };
    let dict = PyDict::new(py);
    dict.set_item("rounds", outcome.diagnostics.rounds)?;
    dict.set_item("relaxed_games", outcome.diagnostics.relaxed_games)?;
    dict.set_item("total_attempts", outcome.diagnostics.total_attempts)?;
    dict.set_item("mean", outcome.matrix.mean())?;
    dict.set_item(
        "matrix_csv",
        outcome.run_dir.join(runner::MATRIX_FILE).to_string_lossy(),
    )?;
    dict.set_item(
        "log",
        outcome.run_dir.join(runner::LOG_FILE).to_string_lossy(),
    )?;
    dict.set_item(
        "matrix",
        PyMatrix {
            inner: outcome.matrix,
        },
    )?;
    Ok(dict)
}

#[pymodule]
fn cooplab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyMatrix>()?;
    m.add_function(wrap_pyfunction!(classify_game, m)?)?;
    m.add_function(wrap_pyfunction!(payoff, m)?)?;
    m.add_function(wrap_pyfunction!(nash, m)?)?;
    m.add_function(wrap_pyfunction!(nash_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(stability, m)?)?;
    m.add_function(wrap_pyfunction!(phenotype_rate, m)?)?;
    m.add_function(wrap_pyfunction!(mixture, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(region_mean, m)?)?;
    m.add_function(wrap_pyfunction!(render, m)?)?;
    m.add_function(wrap_pyfunction!(prompt, m)?)?;
    m.add_function(wrap_pyfunction!(mock_run, m)?)?;
    m.add_function(wrap_pyfunction!(replicator_step_py, m)?)?;
    m.add_function(wrap_pyfunction!(interior_fixed_point_py, m)?)?;
    Ok(())
}
