//! Resumable run state, snapshotted at every round barrier.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::GridSpec;

pub const STATE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StateError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("corrupt state file: {0}")]
    Corrupt(String),
    #[error("state does not match the configured grid")]
    GridMismatch,
}

/// Progress of one game within a run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GameProgress {
    pub s: i32,
    pub t: i32,
    /// Valid plays collected so far.
    pub valid: u32,
    /// Of those, plays that cooperated.
    pub cooperations: u32,
    /// Valid plays that skipped verification.
    pub bypassed_valid: u32,
    /// Total attempts so far, valid or not.
    pub attempts: u32,
    /// Failed attempts charged to each play slot.
    pub slot_failures: Vec<u32>,
    /// Whether the verifier is disabled for this game.
    pub relaxed: bool,
}

impl GameProgress {
    fn new(s: i32, t: i32, plays_per_game: u32) -> Self {
        GameProgress {
            s,
            t,
            valid: 0,
            cooperations: 0,
            bypassed_valid: 0,
            attempts: 0,
            slot_failures: vec![0; plays_per_game as usize],
            relaxed: false,
        }
    }

    /// Fraction of this game's valid plays that bypassed verification.
    pub fn bypass_fraction(&self) -> f64 {
        if self.valid == 0 {
            0.0
        } else {
            self.bypassed_valid as f64 / self.valid as f64
        }
    }
}

/// Snapshot of a run between rounds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunState {
    pub schema_version: u32,
    /// Rounds completed so far.
    pub rounds: u32,
    /// Incomplete-game count after the previous round, once one exists.
    pub prev_invalid: Option<usize>,
    /// One entry per grid cell, in grid order.
    pub games: Vec<GameProgress>,
}

impl RunState {
    pub fn fresh(grid: &GridSpec, plays_per_game: u32) -> Self {
        let mut games = Vec::with_capacity(grid.len());
        for s in grid.s_values() {
            for t in grid.t_values() {
                games.push(GameProgress::new(s, t, plays_per_game));
            }
        }
        RunState {
            schema_version: STATE_SCHEMA_VERSION,
            rounds: 0,
            prev_invalid: None,
            games,
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), StateError> {
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_vec_pretty(self).expect("state serializes"))?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path, grid: &GridSpec, plays_per_game: u32) -> Result<Self, StateError> {
        let bytes = std::fs::read(path)?;
        let state: RunState =
            serde_json::from_slice(&bytes).map_err(|e| StateError::Corrupt(e.to_string()))?;
        if state.schema_version != STATE_SCHEMA_VERSION {
            return Err(StateError::Corrupt(format!(
                "unsupported state schema_version {}",
                state.schema_version
            )));
        }
        if state.games.len() != grid.len() {
            return Err(StateError::GridMismatch);
        }
        for (i, game) in state.games.iter().enumerate() {
            if grid.st_at(i) != (game.s, game.t)
                || game.slot_failures.len() != plays_per_game as usize
                || game.valid > plays_per_game
            {
                return Err(StateError::GridMismatch);
            }
        }
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_round_trips() {
        let grid = GridSpec::new(0, 1, 0, 1);
        let mut state = RunState::fresh(&grid, 3);
        state.rounds = 2;
        state.games[1].valid = 3;
        state.games[1].cooperations = 2;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.json");
        state.save(&path).unwrap();
        let back = RunState::load(&path, &grid, 3).unwrap();
        assert_eq!(back.rounds, 2);
        assert_eq!(back.games[1].cooperations, 2);
    }

    #[test]
    fn corrupt_and_mismatched_state_is_rejected() {
        let grid = GridSpec::new(0, 1, 0, 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.json");
        std::fs::write(&path, b"{ not json").unwrap();
        assert!(matches!(
            RunState::load(&path, &grid, 3),
            Err(StateError::Corrupt(_))
        ));
        RunState::fresh(&grid, 3).save(&path).unwrap();
        assert!(matches!(
            RunState::load(&path, &GridSpec::new(0, 2, 0, 2), 3),
            Err(StateError::GridMismatch)
        ));
        assert!(matches!(
            RunState::load(&path, &grid, 4),
            Err(StateError::GridMismatch)
        ));
    }

    #[test]
    fn bypass_fraction() {
        let mut g = GameProgress::new(0, 0, 4);
        assert_eq!(g.bypass_fraction(), 0.0);
        g.valid = 4;
        g.bypassed_valid = 1;
        assert_eq!(g.bypass_fraction(), 0.25);
    }
}
