//! Ingestion of observed-play datasets into cooperation matrices.
//!
//! Two columnar layouts are supported:
//!
//! - aggregate: header `S,T,coop_rate` or `S,T,coop_rate,sd`, one row per
//!   game;
//! - rows: header `S,T,choice`, one row per decision with choice 1 for
//!   cooperation and 0 for defection. Per-game means and sample standard
//!   deviations (n-1 denominator) are computed here.
//!
//! Every cell of the target grid must be covered; rows outside the grid or
//! with out-of-range values are collected and reported together.

use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::game::GridSpec;
use crate::matrix::CooperationMatrix;

/// Declared dataset layout; `Auto` sniffs the header line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HumanSchema {
    Aggregate,
    Rows,
    Auto,
}

impl std::str::FromStr for HumanSchema {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        match text {
            "aggregate" => Ok(HumanSchema::Aggregate),
            "rows" => Ok(HumanSchema::Rows),
            "auto" => Ok(HumanSchema::Auto),
            other => Err(format!(
                "unknown schema {other:?}; expected aggregate, rows, or auto"
            )),
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("unknown dataset header {header:?}; expected \"S,T,coop_rate[,sd]\" or \"S,T,choice\"")]
    UnknownSchema { header: String },
    #[error("dataset is empty")]
    Empty,
    #[error("{} bad rows: {}", offenders.len(), offenders.join("; "))]
    BadRows { offenders: Vec<String> },
    #[error("dataset misses {} cells: {}", cells.len(), cells.join(", "))]
    MissingCells { cells: Vec<String> },
    #[error("duplicate row for cell (S={s},T={t})")]
    DuplicateCell { s: i32, t: i32 },
}

/// What the ingester did, for auditing preprocessing choices.
#[derive(Clone, Debug, Serialize)]
pub struct IngestReport {
    pub schema: String,
    pub rows_read: usize,
    pub cells_filled: usize,
    /// Decisions per game: min and max (rows schema only).
    pub decisions_min: Option<usize>,
    pub decisions_max: Option<usize>,
    /// Cells whose standard deviation is zero and will be skipped by
    /// deviation-based validation.
    pub zero_sd_cells: usize,
    pub notes: Vec<String>,
}

/// The ingested per-game means, the per-game standard deviations when the
/// data carries them, and a preprocessing report.
#[derive(Clone, Debug)]
pub struct IngestOutcome {
    pub matrix: CooperationMatrix,
    pub sd: Option<CooperationMatrix>,
    pub report: IngestReport,
}

/// Ingests a dataset file onto `grid` (typically the original grid).
pub fn ingest_human_data(
    path: &Path,
    schema: HumanSchema,
    grid: &GridSpec,
) -> Result<IngestOutcome, IngestError> {
    let text = std::fs::read_to_string(path)?;
    ingest_human_text(&text, schema, grid)
}

pub fn ingest_human_text(
    text: &str,
    schema: HumanSchema,
    grid: &GridSpec,
) -> Result<IngestOutcome, IngestError> {
    let mut lines = text.lines();
    let header = lines.next().map(str::trim).unwrap_or_default();
    let normalized = header
        .split(',')
        .map(|c| c.trim().to_ascii_lowercase())
        .collect::<Vec<_>>();
    let layout = match (&schema, normalized.as_slice()) {
        (HumanSchema::Aggregate | HumanSchema::Auto, [s, t, rate])
            if s == "s" && t == "t" && rate == "coop_rate" =>
        {
            Layout::Aggregate { with_sd: false }
        }
        (HumanSchema::Aggregate | HumanSchema::Auto, [s, t, rate, sd])
            if s == "s" && t == "t" && rate == "coop_rate" && sd == "sd" =>
        {
            Layout::Aggregate { with_sd: true }
        }
        (HumanSchema::Rows | HumanSchema::Auto, [s, t, choice])
            if s == "s" && t == "t" && choice == "choice" =>
        {
            Layout::Rows
        }
        _ => {
            return Err(IngestError::UnknownSchema {
                header: header.to_string(),
            })
        }
    };

    let mut offenders = Vec::new();
    let mut rows_read = 0usize;
    let mut cells: Vec<CellAccumulator> = vec![CellAccumulator::default(); grid.len()];

    for (idx, raw) in lines.enumerate() {
        let line_no = idx + 2;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        rows_read += 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        match parse_row(&fields, layout, grid) {
            Ok((s, t, value)) => {
                let cell = &mut cells[grid.index_of(s, t).expect("validated on parse")];
                match (layout, value) {
                    (Layout::Rows, RowValue::Choice(c)) => {
                        cell.n += 1;
                        cell.sum += u64::from(c);
                    }
                    (Layout::Aggregate { .. }, RowValue::Rate { rate, sd }) => {
                        if cell.rate.is_some() {
                            return Err(IngestError::DuplicateCell { s, t });
                        }
                        cell.rate = Some(rate);
                        cell.sd = sd;
                    }
                    _ => unreachable!("row value matches layout"),
                }
            }
            Err(reason) => offenders.push(format!("line {line_no}: {reason}")),
        }
    }

    if rows_read == 0 {
        return Err(IngestError::Empty);
    }
    if !offenders.is_empty() {
        return Err(IngestError::BadRows { offenders });
    }

    let mut missing = Vec::new();
    for (i, cell) in cells.iter().enumerate() {
        let covered = match layout {
            Layout::Rows => cell.n > 0,
            Layout::Aggregate { .. } => cell.rate.is_some(),
        };
        if !covered {
            let (s, t) = grid.st_at(i);
            missing.push(format!("(S={s},T={t})"));
        }
    }
    if !missing.is_empty() {
        return Err(IngestError::MissingCells { cells: missing });
    }

    let mut means = Vec::with_capacity(grid.len());
    let mut sds = Vec::with_capacity(grid.len());
    let mut have_sd = true;
    let mut decisions_min = usize::MAX;
    let mut decisions_max = 0usize;
    for cell in &cells {
        match layout {
            Layout::Rows => {
                let n = cell.n as f64;
                let mean = cell.sum as f64 / n;
                means.push(mean);
                // sample standard deviation of the binary outcomes
                let sd = if cell.n > 1 {
                    let ones = cell.sum as f64;
                    let sq_dev = ones * (1.0 - mean) * (1.0 - mean)
                        + (n - ones) * mean * mean;
                    (sq_dev / (n - 1.0)).sqrt()
                } else {
                    0.0
                };
                sds.push(sd);
                decisions_min = decisions_min.min(cell.n as usize);
                decisions_max = decisions_max.max(cell.n as usize);
            }
            Layout::Aggregate { with_sd } => {
                means.push(cell.rate.expect("coverage checked"));
                if with_sd {
                    sds.push(cell.sd.expect("sd column parsed"));
                } else {
                    have_sd = false;
                }
            }
        }
    }

    let matrix = CooperationMatrix::from_cells(*grid, means).expect("validated rates");
    let sd = if have_sd {
        Some(CooperationMatrix::from_cells(*grid, sds.clone()).expect("validated sds"))
    } else {
        None
    };
    let zero_sd_cells = sds.iter().filter(|v| **v == 0.0).count();
    let mut notes = Vec::new();
    if layout == Layout::Rows {
        notes.push("per-game sd computed from binary decisions with the n-1 denominator".into());
    }
    if sd.is_none() {
        notes.push("no sd column; deviation validation unavailable for this dataset".into());
    }
    let report = IngestReport {
        schema: match layout {
            Layout::Aggregate { .. } => "aggregate".into(),
            Layout::Rows => "rows".into(),
        },
        rows_read,
        cells_filled: grid.len(),
        decisions_min: (layout == Layout::Rows).then_some(decisions_min),
        decisions_max: (layout == Layout::Rows).then_some(decisions_max),
        zero_sd_cells: if have_sd { zero_sd_cells } else { 0 },
        notes,
    };
    Ok(IngestOutcome { matrix, sd, report })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Layout {
    Aggregate { with_sd: bool },
    Rows,
}

enum RowValue {
    Choice(u8),
    Rate { rate: f64, sd: Option<f64> },
}

#[derive(Clone, Default)]
struct CellAccumulator {
    n: u64,
    sum: u64,
    rate: Option<f64>,
    sd: Option<f64>,
}

fn parse_row(
    fields: &[&str],
    layout: Layout,
    grid: &GridSpec,
) -> Result<(i32, i32, RowValue), String> {
    let expected = match layout {
        Layout::Aggregate { with_sd: true } => 4,
        _ => 3,
    };
    if fields.len() != expected {
        return Err(format!("expected {expected} columns, got {}", fields.len()));
    }
    let s: i32 = fields[0].parse().map_err(|_| format!("bad S {:?}", fields[0]))?;
    let t: i32 = fields[1].parse().map_err(|_| format!("bad T {:?}", fields[1]))?;
    if !grid.contains(s, t) {
        return Err(format!("payoffs (S={s},T={t}) are outside the target grid"));
    }
    let value = match layout {
        Layout::Rows => {
            let choice: u8 = fields[2]
                .parse()
                .map_err(|_| format!("bad choice {:?}", fields[2]))?;
            if choice > 1 {
                return Err(format!("choice must be 0 or 1, got {choice}"));
            }
            RowValue::Choice(choice)
        }
        Layout::Aggregate { with_sd } => {
            let rate: f64 = fields[2]
                .parse()
                .map_err(|_| format!("bad coop_rate {:?}", fields[2]))?;
            if !(0.0..=1.0).contains(&rate) {
                return Err(format!("coop_rate {rate} is outside [0,1]"));
            }
            let sd = if with_sd {
                let sd: f64 = fields[3]
                    .parse()
                    .map_err(|_| format!("bad sd {:?}", fields[3]))?;
                if !(0.0..=1.0).contains(&sd) {
                    return Err(format!("sd {sd} is outside [0,1]"));
                }
                Some(sd)
            } else {
                None
            };
            RowValue::Rate { rate, sd }
        }
    };
    Ok((s, t, value))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_cell_grid() -> GridSpec {
        GridSpec::new(8, 8, 7, 7)
    }

    #[test]
    fn aggregate_rows_map_directly() {
        let grid = one_cell_grid();
        let outcome =
            ingest_human_text("S,T,coop_rate\n8,7,0.9\n", HumanSchema::Aggregate, &grid).unwrap();
        assert_eq!(outcome.matrix.get(8, 7), Some(0.9));
        assert!(outcome.sd.is_none());
    }

    #[test]
    fn row_level_means_and_sample_sd() {
        let grid = one_cell_grid();
        let mut text = String::from("S,T,choice\n");
        for i in 0..10 {
            text.push_str(&format!("8,7,{}\n", u8::from(i < 7)));
        }
        let outcome = ingest_human_text(&text, HumanSchema::Rows, &grid).unwrap();
        assert!((outcome.matrix.get(8, 7).unwrap() - 0.7).abs() < 1e-15);
        // sample variance of 7 ones and 3 zeros is 2.1/9
        let sd = outcome.sd.unwrap().get(8, 7).unwrap();
        assert!((sd - 0.48304589153964794).abs() < 1e-12);
        assert_eq!(outcome.report.decisions_min, Some(10));
    }

    #[test]
    fn auto_sniffs_both_layouts() {
        let grid = one_cell_grid();
        let agg = ingest_human_text("S,T,coop_rate,sd\n8,7,0.5,0.2\n", HumanSchema::Auto, &grid)
            .unwrap();
        assert_eq!(agg.report.schema, "aggregate");
        assert_eq!(agg.sd.unwrap().get(8, 7), Some(0.2));
        let rows = ingest_human_text("S,T,choice\n8,7,1\n", HumanSchema::Auto, &grid).unwrap();
        assert_eq!(rows.report.schema, "rows");
    }

    #[test]
    fn missing_cells_are_named() {
        let grid = GridSpec::new(0, 0, 5, 6);
        let err = ingest_human_text("S,T,coop_rate\n0,6,0.5\n", HumanSchema::Aggregate, &grid)
            .unwrap_err();
        match err {
            IngestError::MissingCells { cells } => assert_eq!(cells, vec!["(S=0,T=5)"]),
            other => panic!("expected missing cells, got {other:?}"),
        }
    }

    #[test]
    fn offending_rows_are_listed() {
        let grid = one_cell_grid();
        let err = ingest_human_text(
            "S,T,coop_rate\n8,7,1.4\n9,9,0.5\n",
            HumanSchema::Aggregate,
            &grid,
        )
        .unwrap_err();
        match err {
            IngestError::BadRows { offenders } => {
                assert_eq!(offenders.len(), 2);
                assert!(offenders[0].contains("line 2"));
                assert!(offenders[1].contains("outside the target grid"));
            }
            other => panic!("expected bad rows, got {other:?}"),
        }
    }

    #[test]
    fn unknown_header_is_rejected() {
        let err = ingest_human_text(
            "S,T,rate\n8,7,0.5\n",
            HumanSchema::Auto,
            &one_cell_grid(),
        )
        .unwrap_err();
        assert!(matches!(err, IngestError::UnknownSchema { .. }));
    }

    #[test]
    fn duplicate_aggregate_cell_is_rejected() {
        let err = ingest_human_text(
            "S,T,coop_rate\n8,7,0.5\n8,7,0.6\n",
            HumanSchema::Aggregate,
            &one_cell_grid(),
        )
        .unwrap_err();
        assert!(matches!(err, IngestError::DuplicateCell { s: 8, t: 7 }));
    }
}
