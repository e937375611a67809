//! Cooperation matrices over an (S, T) grid and their CSV form.
//!
//! The on-disk format is `S,T,value` with one row per cell, emitted
//! row-major (S ascending, then T). Values are written with the shortest
//! decimal representation that round-trips, so save/load is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::game::GridSpec;

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("cell value {value} at (S={s},T={t}) is outside [0,1]")]
    ValueOutOfRange { s: i32, t: i32, value: f64 },
    #[error("expected {expected} cells, got {got}")]
    CellCount { expected: usize, got: usize },
    #[error("matrices are on different grids")]
    GridMismatch,
    #[error("missing cell (S={s},T={t})")]
    MissingCell { s: i32, t: i32 },
    #[error("duplicate cell (S={s},T={t})")]
    DuplicateCell { s: i32, t: i32 },
    #[error("csv parse error on line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("values of S or T are not evenly spaced")]
    UnevenGrid,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Grid of average cooperation rates indexed by (S, T).
#[derive(Clone, Debug, PartialEq)]
pub struct CooperationMatrix {
    grid: GridSpec,
    cells: Vec<f64>,
}

impl CooperationMatrix {
    /// Builds a matrix by evaluating `f` on every (s, t) cell.
    pub fn from_fn<F: FnMut(i32, i32) -> f64>(grid: GridSpec, mut f: F) -> Self {
        let mut cells = Vec::with_capacity(grid.len());
        for s in grid.s_values() {
            for t in grid.t_values() {
                cells.push(f(s, t));
            }
        }
        CooperationMatrix { grid, cells }
    }

    /// Wraps row-major cell values, validating count and range.
    pub fn from_cells(grid: GridSpec, cells: Vec<f64>) -> Result<Self, MatrixError> {
        if cells.len() != grid.len() {
            return Err(MatrixError::CellCount {
                expected: grid.len(),
                got: cells.len(),
            });
        }
        for (i, &v) in cells.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                let (s, t) = grid.st_at(i);
                return Err(MatrixError::ValueOutOfRange { s, t, value: v });
            }
        }
        Ok(CooperationMatrix { grid, cells })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Row-major cell values.
    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn get(&self, s: i32, t: i32) -> Option<f64> {
        self.grid.index_of(s, t).map(|i| self.cells[i])
    }

    /// Iterates (s, t, value) in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (i32, i32, f64)> + '_ {
        self.cells.iter().enumerate().map(|(i, &v)| {
            let (s, t) = self.grid.st_at(i);
            (s, t, v)
        })
    }

    /// Mean over all cells.
    pub fn mean(&self) -> f64 {
        self.cells.iter().sum::<f64>() / self.cells.len() as f64
    }

    /// Serializes to the `S,T,value` CSV format.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("S,T,value\n");
        for (s, t, v) in self.iter() {
            // `{}` on f64 prints the shortest string that parses back to
            // the same bits, which is what makes the round-trip exact.
            let _ = writeln!(out, "{s},{t},{v}");
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), MatrixError> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Parses the `S,T,value` format. Rows may arrive in any order but
    /// must cover an evenly spaced rectangular grid exactly once.
    pub fn from_csv(text: &str) -> Result<Self, MatrixError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == "S,T,value" => {}
            other => {
                return Err(MatrixError::Csv {
                    line: 1,
                    message: format!(
                        "expected header \"S,T,value\", got {:?}",
                        other.map(|(_, h)| h).unwrap_or_default()
                    ),
                })
            }
        }
        let mut rows: Vec<(i32, i32, f64)> = Vec::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let parse = |field: Option<&str>, what: &str| -> Result<String, MatrixError> {
                field.map(|f| f.trim().to_string()).ok_or(MatrixError::Csv {
                    line: line_no,
                    message: format!("missing {what} column"),
                })
            };
            let s: i32 = parse(parts.next(), "S")?
                .parse()
                .map_err(|e| MatrixError::Csv {
                    line: line_no,
                    message: format!("bad S: {e}"),
                })?;
            let t: i32 = parse(parts.next(), "T")?
                .parse()
                .map_err(|e| MatrixError::Csv {
                    line: line_no,
                    message: format!("bad T: {e}"),
                })?;
            let v: f64 = parse(parts.next(), "value")?
                .parse()
                .map_err(|e| MatrixError::Csv {
                    line: line_no,
                    message: format!("bad value: {e}"),
                })?;
            if parts.next().is_some() {
                return Err(MatrixError::Csv {
                    line: line_no,
                    message: "too many columns".into(),
                });
            }
            rows.push((s, t, v));
        }
        let grid = infer_grid(&rows)?;
        let mut cells = vec![None; grid.len()];
        for &(s, t, v) in &rows {
            let i = grid.index_of(s, t).ok_or(MatrixError::MissingCell { s, t })?;
            if cells[i].replace(v).is_some() {
                return Err(MatrixError::DuplicateCell { s, t });
            }
        }
        let mut out = Vec::with_capacity(cells.len());
        for (i, v) in cells.into_iter().enumerate() {
            let (s, t) = grid.st_at(i);
            out.push(v.ok_or(MatrixError::MissingCell { s, t })?);
        }
        CooperationMatrix::from_cells(grid, out)
    }

    pub fn read_csv(path: &Path) -> Result<Self, MatrixError> {
        let text = fs::read_to_string(path)?;
        CooperationMatrix::from_csv(&text)
    }
}

/// Reconstructs the grid geometry from the distinct S and T values.
fn infer_grid(rows: &[(i32, i32, f64)]) -> Result<GridSpec, MatrixError> {
    if rows.is_empty() {
        return Err(MatrixError::CellCount {
            expected: 1,
            got: 0,
        });
    }
    let mut s_vals: Vec<i32> = rows.iter().map(|r| r.0).collect();
    let mut t_vals: Vec<i32> = rows.iter().map(|r| r.1).collect();
    s_vals.sort_unstable();
    s_vals.dedup();
    t_vals.sort_unstable();
    t_vals.dedup();
    let step_of = |vals: &[i32]| -> Result<i32, MatrixError> {
        if vals.len() < 2 {
            return Ok(0);
        }
        let step = vals[1] - vals[0];
        for w in vals.windows(2) {
            if w[1] - w[0] != step {
                return Err(MatrixError::UnevenGrid);
            }
        }
        Ok(step)
    };
    let s_step = step_of(&s_vals)?;
    let t_step = step_of(&t_vals)?;
    let step = match (s_step, t_step) {
        (0, 0) => 1,
        (0, t) => t,
        (s, 0) => s,
        (s, t) if s == t => s,
        _ => return Err(MatrixError::UnevenGrid),
    };
    let mut grid = GridSpec::new(
        s_vals[0],
        *s_vals.last().unwrap(),
        t_vals[0],
        *t_vals.last().unwrap(),
    );
    grid.step = step;
    Ok(grid)
}
