//! Matrix comparison metrics, region aggregates, dataset ingestion, and
//! heatmap rendering.

pub mod heatmap;
pub mod ingest;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::client::{ChatModel, LlmError};
use crate::llm::extract::{extract_choice, Extracted};
use crate::matrix::CooperationMatrix;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("matrices are on different grids")]
    GridMismatch,
    #[error("region selects no cells")]
    EmptyRegion,
}

/// Agreement metrics between two cooperation matrices.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ComparisonResult {
    /// Mean over cells of the squared difference.
    pub msd: f64,
    /// Sample correlation over the flattened cells; absent when either
    /// input is constant.
    pub pearson_r: Option<f64>,
    pub n_cells: usize,
}

/// Named cell regions of the (S, T) plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    /// Every cell of the matrix.
    All,
    /// The grid of the original experiments: S in 0..=10, T in 5..=15.
    Original,
    /// Cells with S >= T, where cooperation also maximizes own payoff.
    HarmonyScore,
}

impl Region {
    pub fn contains(&self, s: i32, t: i32) -> bool {
        match self {
            Region::All => true,
            Region::Original => (0..=10).contains(&s) && (5..=15).contains(&t),
            Region::HarmonyScore => s >= t,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Region::All => "all",
            Region::Original => "original",
            Region::HarmonyScore => "harmony-score",
        }
    }
}

impl std::str::FromStr for Region {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        match text {
            "all" => Ok(Region::All),
            "original" => Ok(Region::Original),
            "harmony-score" => Ok(Region::HarmonyScore),
            other => Err(format!(
                "unknown region {other:?}; expected all, original, or harmony-score"
            )),
        }
    }
}

/// MSD and Pearson correlation over all shared cells.
pub fn compare_matrices(
    a: &CooperationMatrix,
    b: &CooperationMatrix,
) -> Result<ComparisonResult, AnalysisError> {
    compare_matrices_region(a, b, Region::All)
}

/// MSD and Pearson correlation over the cells a region selects.
pub fn compare_matrices_region(
    a: &CooperationMatrix,
    b: &CooperationMatrix,
    region: Region,
) -> Result<ComparisonResult, AnalysisError> {
    if !a.grid().same_geometry(b.grid()) {
        return Err(AnalysisError::GridMismatch);
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for ((s, t, x), (_, _, y)) in a.iter().zip(b.iter()) {
        if region.contains(s, t) {
            xs.push(x);
            ys.push(y);
        }
    }
    if xs.is_empty() {
        return Err(AnalysisError::EmptyRegion);
    }
    let msd = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / xs.len() as f64;
    Ok(ComparisonResult {
        msd,
        pearson_r: pearson(&xs, &ys),
        n_cells: xs.len(),
    })
}

/// Sample Pearson correlation; `None` when either input has zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 || var_y == 0.0 {
        None
    } else {
        Some(cov / (var_x * var_y).sqrt())
    }
}

/// Mean of the cells a region selects.
pub fn region_average(m: &CooperationMatrix, region: Region) -> Result<f64, AnalysisError> {
    region_average_by(m, |s, t| region.contains(s, t))
}

/// Mean of the cells a predicate selects.
pub fn region_average_by<F: Fn(i32, i32) -> bool>(
    m: &CooperationMatrix,
    predicate: F,
) -> Result<f64, AnalysisError> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (s, t, v) in m.iter() {
        if predicate(s, t) {
            sum += v;
            n += 1;
        }
    }
    if n == 0 {
        Err(AnalysisError::EmptyRegion)
    } else {
        Ok(sum / n as f64)
    }
}

/// A long answer with its human-annotated gold choice.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnnotatedAnswer {
    pub long_answer: String,
    pub gold: Gold,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gold {
    A,
    B,
    Neither,
}

impl Gold {
    fn matches(&self, extracted: Extracted) -> bool {
        matches!(
            (self, extracted),
            (Gold::A, Extracted::A) | (Gold::B, Extracted::B) | (Gold::Neither, Extracted::Invalid)
        )
    }
}

#[derive(Debug, Error)]
pub enum ExtractorAccuracyError {
    #[error("annotated answer set is empty")]
    Empty,
    #[error("extraction failed on answer {index}: {cause}")]
    Llm { index: usize, cause: LlmError },
}

/// Fraction of annotated answers where the extractor recovers the gold
/// choice; a gold of `Neither` counts as recovered when extraction reports
/// the answer invalid.
pub fn extractor_accuracy(
    answers: &[AnnotatedAnswer],
    extractor: &dyn ChatModel,
    extractor_model: &str,
) -> Result<f64, ExtractorAccuracyError> {
    if answers.is_empty() {
        return Err(ExtractorAccuracyError::Empty);
    }
    let mut hits = 0usize;
    for (idx, answer) in answers.iter().enumerate() {
        let extracted = extract_choice(&answer.long_answer, extractor, extractor_model, None)
            .map_err(|cause| ExtractorAccuracyError::Llm { index: idx, cause })?;
        if answer.gold.matches(extracted) {
            hits += 1;
        }
    }
    Ok(hits as f64 / answers.len() as f64)
}

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad annotation at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Reads annotated answers from JSONL with fields `long_answer` and `gold`.
pub fn read_annotations(path: &std::path::Path) -> Result<Vec<AnnotatedAnswer>, AnnotationError> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let answer: AnnotatedAnswer =
            serde_json::from_str(line).map_err(|e| AnnotationError::Parse {
                line: idx + 1,
                message: e.to_string(),
            })?;
        out.push(answer);
    }
    Ok(out)
}
