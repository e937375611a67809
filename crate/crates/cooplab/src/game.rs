//! Games, payoffs, parameter grids, and the game-class taxonomy.
//!
//! A [`Game`] is one payoff configuration of the symmetric 2x2 game with
//! payoffs R (mutual cooperation), S (sucker), T (temptation) and
//! P (mutual defection). Grids hold R and P fixed and sweep S and T over
//! integer ranges. Payoffs are stored as exact integers so that the class
//! predicates never depend on floating-point comparisons.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default reward for mutual cooperation on the grid.
pub const DEFAULT_R: i32 = 10;
/// Default punishment for mutual defection on the grid.
pub const DEFAULT_P: i32 = 5;

/// One of the two actions available to a player.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    Cooperate,
    Defect,
}

impl Choice {
    /// 1 for cooperation, 0 for defection; the unit used by every aggregate.
    pub fn as_unit(self) -> f64 {
        match self {
            Choice::Cooperate => 1.0,
            Choice::Defect => 0.0,
        }
    }
}

/// A single payoff configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Game {
    /// Reward for mutual cooperation.
    pub r: i32,
    /// Sucker's payoff: cooperating against a defector.
    pub s: i32,
    /// Temptation: defecting against a cooperator.
    pub t: i32,
    /// Punishment for mutual defection.
    pub p: i32,
}

impl Game {
    pub fn new(r: i32, s: i32, t: i32, p: i32) -> Self {
        Game { r, s, t, p }
    }

    /// Game with the default R and P and the given (S, T).
    pub fn from_st(s: i32, t: i32) -> Self {
        Game::new(DEFAULT_R, s, t, DEFAULT_P)
    }

    /// Payoff earned by `mine` against `other`.
    pub fn payoff(&self, mine: Choice, other: Choice) -> i32 {
        match (mine, other) {
            (Choice::Cooperate, Choice::Cooperate) => self.r,
            (Choice::Cooperate, Choice::Defect) => self.s,
            (Choice::Defect, Choice::Cooperate) => self.t,
            (Choice::Defect, Choice::Defect) => self.p,
        }
    }

    /// Classifies the game into one of the four classical quadrants.
    ///
    /// The predicates are strict where the taxonomy is strict; equality and
    /// out-of-quadrant configurations land in [`GameClass::NonStandard`].
    pub fn class(&self) -> GameClass {
        let Game { r, s, t, p } = *self;
        if s > p && r > t {
            GameClass::Harmony
        } else if t > r && r > s && s > p {
            GameClass::Snowdrift
        } else if r > t && t >= p && p > s {
            GameClass::StagHunt
        } else if t > r && p > s {
            GameClass::PrisonersDilemma
        } else {
            GameClass::NonStandard
        }
    }
}

/// The classical taxonomy of symmetric 2x2 games.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GameClass {
    /// S > P and R > T: cooperation dominates.
    Harmony,
    /// T > R > S > P: anti-coordination.
    Snowdrift,
    /// R > T >= P > S: coordination.
    StagHunt,
    /// T > R and P > S: defection dominates.
    PrisonersDilemma,
    /// Boundary or out-of-quadrant configuration.
    NonStandard,
}

impl GameClass {
    pub fn name(&self) -> &'static str {
        match self {
            GameClass::Harmony => "harmony",
            GameClass::Snowdrift => "snowdrift",
            GameClass::StagHunt => "stag_hunt",
            GameClass::PrisonersDilemma => "prisoners_dilemma",
            GameClass::NonStandard => "non_standard",
        }
    }
}

/// Inclusive integer ranges for S and T plus the fixed R and P.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub s_min: i32,
    pub s_max: i32,
    pub t_min: i32,
    pub t_max: i32,
    /// Stride between consecutive S (and T) values.
    #[serde(default = "default_step")]
    pub step: i32,
    #[serde(default = "default_r")]
    pub r: i32,
    #[serde(default = "default_p")]
    pub p: i32,
}

fn default_step() -> i32 {
    1
}
fn default_r() -> i32 {
    DEFAULT_R
}
fn default_p() -> i32 {
    DEFAULT_P
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GridError {
    #[error("invalid grid bounds: s {s_min}..={s_max}, t {t_min}..={t_max}")]
    InvalidBounds {
        s_min: i32,
        s_max: i32,
        t_min: i32,
        t_max: i32,
    },
    #[error("grid step must be >= 1, got {0}")]
    InvalidStep(i32),
    #[error("grid payoffs must be non-negative: R={r}, P={p}")]
    NegativePayoff { r: i32, p: i32 },
}

impl GridSpec {
    pub fn new(s_min: i32, s_max: i32, t_min: i32, t_max: i32) -> Self {
        GridSpec {
            s_min,
            s_max,
            t_min,
            t_max,
            step: 1,
            r: DEFAULT_R,
            p: DEFAULT_P,
        }
    }

    /// The grid of the original experiments: S in 0..=10, T in 5..=15.
    pub fn original() -> Self {
        GridSpec::new(0, 10, 5, 15)
    }

    /// The extended grid: S and T both in 0..=20.
    pub fn extended() -> Self {
        GridSpec::new(0, 20, 0, 20)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if self.s_min > self.s_max || self.t_min > self.t_max {
            return Err(GridError::InvalidBounds {
                s_min: self.s_min,
                s_max: self.s_max,
                t_min: self.t_min,
                t_max: self.t_max,
            });
        }
        if self.step < 1 {
            return Err(GridError::InvalidStep(self.step));
        }
        if self.r < 0 || self.p < 0 || self.s_min < 0 || self.t_min < 0 {
            return Err(GridError::NegativePayoff {
                r: self.r,
                p: self.p,
            });
        }
        Ok(())
    }

    pub fn s_values(&self) -> impl Iterator<Item = i32> + '_ {
        (self.s_min..=self.s_max).step_by(self.step as usize)
    }

    pub fn t_values(&self) -> impl Iterator<Item = i32> + '_ {
        (self.t_min..=self.t_max).step_by(self.step as usize)
    }

    pub fn n_s(&self) -> usize {
        ((self.s_max - self.s_min) / self.step + 1) as usize
    }

    pub fn n_t(&self) -> usize {
        ((self.t_max - self.t_min) / self.step + 1) as usize
    }

    /// Total number of grid cells.
    pub fn len(&self) -> usize {
        self.n_s() * self.n_t()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Whether (s, t) is a cell of this grid.
    pub fn contains(&self, s: i32, t: i32) -> bool {
        s >= self.s_min
            && s <= self.s_max
            && t >= self.t_min
            && t <= self.t_max
            && (s - self.s_min) % self.step == 0
            && (t - self.t_min) % self.step == 0
    }

    /// Row-major cell index of (s, t): S ascending, then T ascending.
    pub fn index_of(&self, s: i32, t: i32) -> Option<usize> {
        if !self.contains(s, t) {
            return None;
        }
        let si = ((s - self.s_min) / self.step) as usize;
        let ti = ((t - self.t_min) / self.step) as usize;
        Some(si * self.n_t() + ti)
    }

    /// The (s, t) pair at a row-major index.
    pub fn st_at(&self, index: usize) -> (i32, i32) {
        let si = (index / self.n_t()) as i32;
        let ti = (index % self.n_t()) as i32;
        (self.s_min + si * self.step, self.t_min + ti * self.step)
    }

    /// Builds the ordered list of games: row-major, S ascending then T.
    pub fn games(&self) -> Result<Vec<Game>, GridError> {
        self.validate()?;
        let mut out = Vec::with_capacity(self.len());
        for s in self.s_values() {
            for t in self.t_values() {
                out.push(Game::new(self.r, s, t, self.p));
            }
        }
        Ok(out)
    }

    /// True when the two specs describe the same (S, T) lattice, ignoring R and P.
    pub fn same_geometry(&self, other: &GridSpec) -> bool {
        self.s_min == other.s_min
            && self.s_max == other.s_max
            && self.t_min == other.t_min
            && self.t_max == other.t_max
            && self.step == other.step
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn payoff_table() {
        let g = Game::from_st(6, 11);
        assert_eq!(g.payoff(Choice::Cooperate, Choice::Cooperate), 10);
        assert_eq!(g.payoff(Choice::Cooperate, Choice::Defect), 6);
        assert_eq!(g.payoff(Choice::Defect, Choice::Cooperate), 11);
        assert_eq!(g.payoff(Choice::Defect, Choice::Defect), 5);
    }

    #[test]
    fn classify_quadrants() {
        assert_eq!(Game::from_st(8, 7).class(), GameClass::Harmony);
        assert_eq!(Game::from_st(2, 12).class(), GameClass::PrisonersDilemma);
        assert_eq!(Game::from_st(7, 12).class(), GameClass::Snowdrift);
        assert_eq!(Game::from_st(2, 7).class(), GameClass::StagHunt);
        // equality on every strict inequality
        assert_eq!(Game::from_st(5, 10).class(), GameClass::NonStandard);
    }

    #[test]
    fn classify_boundaries() {
        // T = P is still a stag hunt; T < P is not.
        assert_eq!(Game::from_st(2, 5).class(), GameClass::StagHunt);
        assert_eq!(Game::from_st(2, 3).class(), GameClass::NonStandard);
        // S = R breaks the snowdrift chain.
        assert_eq!(Game::from_st(10, 12).class(), GameClass::NonStandard);
        assert_eq!(Game::from_st(12, 15).class(), GameClass::NonStandard);
    }

    #[test]
    fn classes_partition_the_extended_grid() {
        // Independent census of each quadrant, counted from the inequality
        // definitions directly.
        let grid = GridSpec::extended();
        let mut counts = std::collections::HashMap::new();
        for game in grid.games().unwrap() {
            *counts.entry(game.class()).or_insert(0usize) += 1;
        }
        assert_eq!(counts[&GameClass::Harmony], 150); // S in 6..=20, T in 0..=9
        assert_eq!(counts[&GameClass::Snowdrift], 40); // S in 6..=9, T in 11..=20
        assert_eq!(counts[&GameClass::StagHunt], 25); // S in 0..=4, T in 5..=9
        assert_eq!(counts[&GameClass::PrisonersDilemma], 50); // S in 0..=4, T in 11..=20
        assert_eq!(counts[&GameClass::NonStandard], 441 - 150 - 40 - 25 - 50);
        assert_eq!(counts.values().sum::<usize>(), 441);
    }

    #[test]
    fn strict_quadrants_on_original_grid() {
        // On the original grid the four strict classes occupy exactly the
        // cells inside their quadrant bounds, which all avoid S=5 and T=10.
        for game in GridSpec::original().games().unwrap() {
            let (s, t) = (game.s, game.t);
            let expected = if s > 5 && t < 10 {
                GameClass::Harmony
            } else if t > 10 && s > 5 && s < 10 {
                GameClass::Snowdrift
            } else if s < 5 && (5..10).contains(&t) {
                GameClass::StagHunt
            } else if t > 10 && s < 5 {
                GameClass::PrisonersDilemma
            } else {
                GameClass::NonStandard
            };
            assert_eq!(game.class(), expected, "at (S={s}, T={t})");
            if game.class() != GameClass::NonStandard && !(s > 5 && t < 10) {
                // outside the harmony quadrant, strict classes avoid the axes
                assert!(s != 5 && t != 10, "class on a tie axis at (S={s}, T={t})");
            }
        }
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(GridSpec::original().games().unwrap().len(), 121);
        assert_eq!(GridSpec::extended().games().unwrap().len(), 441);
        assert_eq!(GridSpec::new(3, 3, 3, 3).games().unwrap().len(), 1);
    }

    #[test]
    fn grid_is_row_major_and_deterministic() {
        let spec = GridSpec::original();
        let games = spec.games().unwrap();
        assert_eq!((games[0].s, games[0].t), (0, 5));
        assert_eq!((games[1].s, games[1].t), (0, 6));
        assert_eq!((games[11].s, games[11].t), (1, 5));
        assert_eq!(games, spec.games().unwrap());
        for (i, g) in games.iter().enumerate() {
            assert_eq!(spec.index_of(g.s, g.t), Some(i));
            assert_eq!(spec.st_at(i), (g.s, g.t));
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(GridSpec::new(5, 3, 0, 10).validate().is_err());
        let mut spec = GridSpec::original();
        spec.step = 0;
        assert_eq!(spec.validate(), Err(GridError::InvalidStep(0)));
    }

    #[test]
    fn stepped_grid() {
        let mut spec = GridSpec::new(0, 10, 0, 10);
        spec.step = 5;
        assert_eq!(spec.n_s(), 3);
        assert_eq!(spec.len(), 9);
        assert!(spec.contains(5, 10));
        assert!(!spec.contains(4, 10));
    }
}
