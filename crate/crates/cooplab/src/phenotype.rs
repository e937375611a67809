//! Behavioral phenotype decision rules and mixture populations.
//!
//! Each phenotype is a fixed rule over the payoff structure; a mixture of
//! phenotypes yields a deterministic expected cooperation rate per game.
//! The undefined phenotype has no rule and cooperates with probability one
//! half: expected rate 0.5 in matrices, a fair coin draw as a live agent.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{Choice, Game, GridSpec};
use crate::matrix::CooperationMatrix;

/// Mean normalized deviation below which a phenotype's predictions are
/// considered consistent with observed play (99% confidence, in SD units).
pub const DEVIATION_THRESHOLD: f64 = 2.575;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phenotype {
    /// Cooperates when R > T: plays for the best possible outcome.
    Optimist,
    /// Cooperates when S > P: maximizes the worst possible outcome.
    Pessimist,
    /// Cooperates when S >= T: never lets the other player get ahead.
    Envious,
    /// Always cooperates.
    Trustful,
    /// No consistent rule; cooperates at random.
    Undefined,
}

/// All phenotypes, in the order mixture sums are evaluated.
pub const ALL_PHENOTYPES: [Phenotype; 5] = [
    Phenotype::Optimist,
    Phenotype::Pessimist,
    Phenotype::Envious,
    Phenotype::Trustful,
    Phenotype::Undefined,
];

impl Phenotype {
    pub fn name(&self) -> &'static str {
        match self {
            Phenotype::Optimist => "optimist",
            Phenotype::Pessimist => "pessimist",
            Phenotype::Envious => "envious",
            Phenotype::Trustful => "trustful",
            Phenotype::Undefined => "undefined",
        }
    }

    /// Expected cooperation rate of this phenotype on `game`.
    pub fn cooperation_rate(&self, game: &Game) -> f64 {
        match self {
            Phenotype::Optimist => bool_rate(game.r > game.t),
            Phenotype::Pessimist => bool_rate(game.s > game.p),
            Phenotype::Envious => bool_rate(game.s >= game.t),
            Phenotype::Trustful => 1.0,
            Phenotype::Undefined => 0.5,
        }
    }

    /// One live decision; only the undefined phenotype consults the RNG.
    pub fn decide<R: Rng>(&self, game: &Game, rng: &mut R) -> Choice {
        let cooperate = match self {
            Phenotype::Undefined => rng.gen_bool(0.5),
            other => other.cooperation_rate(game) == 1.0,
        };
        if cooperate {
            Choice::Cooperate
        } else {
            Choice::Defect
        }
    }
}

fn bool_rate(cooperates: bool) -> f64 {
    if cooperates {
        1.0
    } else {
        0.0
    }
}

/// Population shares per phenotype. Must be non-negative and sum to one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureWeights {
    pub optimist: f64,
    pub pessimist: f64,
    pub envious: f64,
    pub trustful: f64,
    pub undefined: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum MixtureError {
    #[error("phenotype weight for {name} is negative: {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("phenotype weights sum to {sum}, expected 1")]
    BadSum { sum: f64 },
}

impl MixtureWeights {
    /// The shares observed in the human population: 20% optimist,
    /// 21% pessimist, 30% envious, 17% trustful, 12% undefined.
    pub fn paper() -> Self {
        MixtureWeights {
            optimist: 0.20,
            pessimist: 0.21,
            envious: 0.30,
            trustful: 0.17,
            undefined: 0.12,
        }
    }

    /// Weight 1 on a single phenotype.
    pub fn pure(phenotype: Phenotype) -> Self {
        let mut w = MixtureWeights {
            optimist: 0.0,
            pessimist: 0.0,
            envious: 0.0,
            trustful: 0.0,
            undefined: 0.0,
        };
        *w.get_mut(phenotype) = 1.0;
        w
    }

    pub fn get(&self, phenotype: Phenotype) -> f64 {
        match phenotype {
            Phenotype::Optimist => self.optimist,
            Phenotype::Pessimist => self.pessimist,
            Phenotype::Envious => self.envious,
            Phenotype::Trustful => self.trustful,
            Phenotype::Undefined => self.undefined,
        }
    }

    fn get_mut(&mut self, phenotype: Phenotype) -> &mut f64 {
        match phenotype {
            Phenotype::Optimist => &mut self.optimist,
            Phenotype::Pessimist => &mut self.pessimist,
            Phenotype::Envious => &mut self.envious,
            Phenotype::Trustful => &mut self.trustful,
            Phenotype::Undefined => &mut self.undefined,
        }
    }

    pub fn validate(&self) -> Result<(), MixtureError> {
        for ph in ALL_PHENOTYPES {
            let value = self.get(ph);
            if value < 0.0 || !value.is_finite() {
                return Err(MixtureError::Negative {
                    name: ph.name(),
                    value,
                });
            }
        }
        let sum: f64 = ALL_PHENOTYPES.iter().map(|ph| self.get(*ph)).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(MixtureError::BadSum { sum });
        }
        Ok(())
    }

    /// Expected cooperation rate of the mixture on one game.
    pub fn cooperation_rate(&self, game: &Game) -> f64 {
        ALL_PHENOTYPES
            .iter()
            .fold(0.0, |acc, ph| acc + self.get(*ph) * ph.cooperation_rate(game))
    }

    /// Draws a phenotype according to the weights.
    pub fn draw<R: Rng>(&self, rng: &mut R) -> Phenotype {
        let mut roll = rng.gen_range(0.0..1.0);
        for ph in ALL_PHENOTYPES {
            let w = self.get(ph);
            if roll < w {
                return ph;
            }
            roll -= w;
        }
        Phenotype::Undefined
    }
}

/// Expected cooperation matrix of a phenotype mixture over a grid.
pub fn mixture_matrix(
    weights: &MixtureWeights,
    grid: &GridSpec,
) -> Result<CooperationMatrix, MixtureError> {
    weights.validate()?;
    Ok(CooperationMatrix::from_fn(*grid, |s, t| {
        weights.cooperation_rate(&Game::new(grid.r, s, t, grid.p))
    }))
}

/// Cooperation matrix of a single phenotype over a grid.
pub fn phenotype_matrix(phenotype: Phenotype, grid: &GridSpec) -> CooperationMatrix {
    CooperationMatrix::from_fn(*grid, |s, t| {
        phenotype.cooperation_rate(&Game::new(grid.r, s, t, grid.p))
    })
}

/// Outcome of validating one prediction matrix against observed play.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DeviationEntry {
    /// Mean over games of |predicted - observed| / sd.
    pub mean_deviation: f64,
    /// Whether the mean falls below [`DEVIATION_THRESHOLD`].
    pub pass: bool,
    /// Games compared.
    pub compared_cells: usize,
    /// Games skipped because the observed sample had zero variance.
    pub skipped_cells: usize,
}

#[derive(Debug, Error)]
pub enum DeviationError {
    #[error("matrices are on different grids")]
    GridMismatch,
    #[error("every cell has zero standard deviation")]
    AllCellsSkipped,
}

/// Mean SD-normalized deviation between predicted and observed rates.
/// Cells with zero observed standard deviation are excluded and counted.
pub fn deviation(
    predicted: &CooperationMatrix,
    observed: &CooperationMatrix,
    sd: &CooperationMatrix,
) -> Result<DeviationEntry, DeviationError> {
    if !predicted.grid().same_geometry(observed.grid())
        || !predicted.grid().same_geometry(sd.grid())
    {
        return Err(DeviationError::GridMismatch);
    }
    let mut sum = 0.0;
    let mut compared = 0usize;
    let mut skipped = 0usize;
    for ((p, o), sd) in predicted
        .cells()
        .iter()
        .zip(observed.cells())
        .zip(sd.cells())
    {
        if *sd == 0.0 {
            skipped += 1;
            continue;
        }
        sum += (p - o).abs() / sd;
        compared += 1;
    }
    if compared == 0 {
        return Err(DeviationError::AllCellsSkipped);
    }
    let mean_deviation = sum / compared as f64;
    Ok(DeviationEntry {
        mean_deviation,
        pass: mean_deviation < DEVIATION_THRESHOLD,
        compared_cells: compared,
        skipped_cells: skipped,
    })
}

/// Per-phenotype deviation report against one observed dataset.
pub fn deviation_report(
    observed: &CooperationMatrix,
    sd: &CooperationMatrix,
) -> Result<Vec<(Phenotype, DeviationEntry)>, DeviationError> {
    ALL_PHENOTYPES
        .iter()
        .map(|ph| {
            let predicted = phenotype_matrix(*ph, observed.grid());
            deviation(&predicted, observed, sd).map(|entry| (*ph, entry))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    #[test]
    fn rule_examples() {
        assert_eq!(
            Phenotype::Envious.cooperation_rate(&Game::from_st(7, 7)),
            1.0
        );
        assert_eq!(
            Phenotype::Optimist.cooperation_rate(&Game::from_st(3, 12)),
            0.0
        );
        for (s, t) in [(0, 0), (20, 20), (3, 17)] {
            assert_eq!(
                Phenotype::Trustful.cooperation_rate(&Game::from_st(s, t)),
                1.0
            );
        }
    }

    #[test]
    fn rules_partition_the_plane() {
        for game in GridSpec::extended().games().unwrap() {
            assert_eq!(
                Phenotype::Envious.cooperation_rate(&game) == 1.0,
                game.s >= game.t
            );
            assert_eq!(
                Phenotype::Optimist.cooperation_rate(&game) == 1.0,
                game.t < game.r
            );
            assert_eq!(
                Phenotype::Pessimist.cooperation_rate(&game) == 1.0,
                game.s > game.p
            );
        }
    }

    #[test]
    fn paper_mixture_cells_are_exact() {
        let w = MixtureWeights::paper();
        // 0.20 + 0.21 + 0.30 + 0.17 + 0.12*0.5 summed in phenotype order.
        assert_eq!(w.cooperation_rate(&Game::from_st(8, 7)), 0.94);
        // 0.17 + 0.12*0.5
        assert_eq!(w.cooperation_rate(&Game::from_st(2, 12)), 0.23);
    }

    #[test]
    fn pure_trustful_matrix_is_all_ones() {
        let m = mixture_matrix(&MixtureWeights::pure(Phenotype::Trustful), &GridSpec::original())
            .unwrap();
        assert!(m.cells().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn invalid_weights_are_rejected() {
        let mut w = MixtureWeights::paper();
        w.envious = -0.1;
        assert!(matches!(w.validate(), Err(MixtureError::Negative { .. })));
        let mut w = MixtureWeights::paper();
        w.trustful = 0.5;
        assert!(matches!(w.validate(), Err(MixtureError::BadSum { .. })));
    }

    #[test]
    fn deviation_examples() {
        let grid = GridSpec::new(0, 0, 5, 5);
        let m = |v: f64| CooperationMatrix::from_cells(grid, vec![v]).unwrap();
        let identical = deviation(&m(0.4), &m(0.4), &m(0.5)).unwrap();
        assert_eq!(identical.mean_deviation, 0.0);
        assert!(identical.pass);

        let two_sd = deviation(&m(1.0), &m(0.0), &m(0.5)).unwrap();
        assert_eq!(two_sd.mean_deviation, 2.0);
        assert!(two_sd.pass);

        let wide = deviation(&m(1.0), &m(0.0), &m(0.3)).unwrap();
        assert!((wide.mean_deviation - 10.0 / 3.0).abs() < 1e-12);
        assert!(!wide.pass);
    }

    #[test]
    fn deviation_skips_zero_sd_cells() {
        let grid = GridSpec::new(0, 0, 5, 6);
        let m = |v: Vec<f64>| CooperationMatrix::from_cells(grid, v).unwrap();
        let entry = deviation(
            &m(vec![1.0, 0.3]),
            &m(vec![0.0, 0.3]),
            &m(vec![0.5, 0.0]),
        )
        .unwrap();
        assert_eq!(entry.compared_cells, 1);
        assert_eq!(entry.skipped_cells, 1);
        assert_eq!(entry.mean_deviation, 2.0);
    }

    #[test]
    fn undefined_agent_draws_fairly() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let game = Game::from_st(3, 3);
        let n = 10_000;
        let coop = (0..n)
            .filter(|_| Phenotype::Undefined.decide(&game, &mut rng) == Choice::Cooperate)
            .count();
        let frac = coop as f64 / n as f64;
        assert!((0.48..=0.52).contains(&frac), "got {frac}");
    }

    proptest! {
        #[test]
        fn mixture_cells_stay_in_unit_interval(
            a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0, d in 0.0f64..1.0,
        ) {
            // Normalize four raw draws into valid five-way weights.
            let raw = [a, b, c, d, 1.0];
            let sum: f64 = raw.iter().sum();
            let w = MixtureWeights {
                optimist: raw[0] / sum,
                pessimist: raw[1] / sum,
                envious: raw[2] / sum,
                trustful: raw[3] / sum,
                undefined: raw[4] / sum,
            };
            let m = mixture_matrix(&w, &GridSpec::new(0, 6, 0, 6));
            prop_assume!(m.is_ok());
            for (_, _, v) in m.unwrap().iter() {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
