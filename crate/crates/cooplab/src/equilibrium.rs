//! Nash-equilibrium cooperation rates for 2x2 games.
//!
//! Two routes are implemented and kept independent so that one can be used
//! as an oracle for the other:
//!
//! - [`simulate_replicator`]: discrete replicator dynamics with unit time
//!   step, iterated until one of the stopping outcomes fires;
//! - [`classify_stability`] / [`nash_cooperation`]: closed-form fixed points
//!   of the same flow plus boundary and interior stability analysis.
//!
//! The unit time step is part of the iteration's definition, and it brings
//! the usual pathologies of explicit one-step discretizations: for payoff
//! spreads large enough that `x*(1-x*)*|R-T-S+P| >= 2` the interior fixed
//! point of the flow is locally unstable under the map, and trajectories
//! land in period-two orbits, longer cycles, or overshoot onto a clamped
//! boundary. The closed-form route has no such artifacts, so the two
//! routes disagree on part of the extended grid; see the grid diagnostics.

use serde::{Deserialize, Serialize};

use crate::game::Game;

/// Parameters of the replicator iteration. The time step is fixed at 1.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ReplicatorParams {
    /// Initial cooperator fraction.
    pub x0: f64,
    /// Stopping tolerance epsilon.
    pub tol: f64,
    /// Maximum number of iterations.
    pub t_max: u32,
}

impl Default for ReplicatorParams {
    fn default() -> Self {
        ReplicatorParams {
            x0: 0.5,
            tol: 0.1,
            t_max: 1_000,
        }
    }
}

/// How a replicator run terminated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    TotalCooperation,
    TotalDefection,
    MixedEquilibrium,
    Periodic,
    MaxIterations,
}

/// Result of one replicator run.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EquilibriumResult {
    /// Terminal cooperator fraction. 1 and 0 for the total outcomes, the
    /// cycle average for [`Outcome::Periodic`], the raw final iterate for
    /// [`Outcome::MaxIterations`].
    pub terminal_x: f64,
    pub outcome: Outcome,
    /// Iterations performed before stopping.
    pub steps: u32,
    /// The two oscillation values when the run ended periodic.
    pub periodic_pair: Option<(f64, f64)>,
}

/// Average payoff of a cooperator in a population with cooperator share `x`.
pub fn payoff_cooperate(game: &Game, x: f64) -> f64 {
    x * game.r as f64 + (1.0 - x) * game.s as f64
}

/// Average payoff of a defector in a population with cooperator share `x`.
pub fn payoff_defect(game: &Game, x: f64) -> f64 {
    x * game.t as f64 + (1.0 - x) * game.p as f64
}

/// Instantaneous advantage of cooperation, `g(x) = pi_C(x) - pi_D(x)`.
pub fn advantage(game: &Game, x: f64) -> f64 {
    payoff_cooperate(game, x) - payoff_defect(game, x)
}

/// One step of the discrete replicator map, clamped to [0, 1].
///
/// With a unit time step the update can overshoot the unit interval for
/// large payoff spreads; clamping keeps the state admissible and preserves
/// the boundary fixed points and the sign of the update.
pub fn replicator_step(x: f64, game: &Game) -> f64 {
    let next = x + x * (1.0 - x) * advantage(game, x);
    next.clamp(0.0, 1.0)
}

/// Iterates the replicator map until one of the stopping outcomes fires.
///
/// Checked in order on each iterate: total cooperation (`x >= 1 - tol`),
/// total defection (`x <= tol`), mixed equilibrium (`|pi_C - pi_D| <= tol`
/// with x strictly interior), then a period-two orbit (`x_t` equal to
/// `x_{t-2}` within 1e-9 while differing from `x_{t-1}`), whose reported
/// value is the average of the two oscillation points.
pub fn simulate_replicator(game: &Game, params: &ReplicatorParams) -> EquilibriumResult {
    const PERIOD_EPS: f64 = 1e-9;
    let mut x = params.x0;
    let mut prev1: Option<f64> = None;
    let mut prev2: Option<f64> = None;
    let mut steps = 0u32;
    loop {
        if x >= 1.0 - params.tol {
            return EquilibriumResult {
                terminal_x: 1.0,
                outcome: Outcome::TotalCooperation,
                steps,
                periodic_pair: None,
            };
        }
        if x <= params.tol {
            return EquilibriumResult {
                terminal_x: 0.0,
                outcome: Outcome::TotalDefection,
                steps,
                periodic_pair: None,
            };
        }
        if advantage(game, x).abs() <= params.tol && x > 0.0 && x < 1.0 {
            return EquilibriumResult {
                terminal_x: x,
                outcome: Outcome::MixedEquilibrium,
                steps,
                periodic_pair: None,
            };
        }
        if let (Some(p1), Some(p2)) = (prev1, prev2) {
            if (x - p2).abs() < PERIOD_EPS && (x - p1).abs() >= PERIOD_EPS {
                return EquilibriumResult {
                    terminal_x: (p1 + x) / 2.0,
                    outcome: Outcome::Periodic,
                    steps,
                    periodic_pair: Some((p1, x)),
                };
            }
        }
        if steps >= params.t_max {
            return EquilibriumResult {
                terminal_x: x,
                outcome: Outcome::MaxIterations,
                steps,
                periodic_pair: None,
            };
        }
        prev2 = prev1;
        prev1 = Some(x);
        x = replicator_step(x, game);
        steps += 1;
    }
}

/// Interior fixed point `x* = (P - S) / (R - T - S + P)` when it lies
/// strictly inside (0, 1); the existence test is done in exact integer
/// arithmetic via the sign conditions `(P-S)*D > 0` and `(R-T)*D > 0`.
pub fn interior_fixed_point(game: &Game) -> Option<f64> {
    let d = i64::from(game.r) - i64::from(game.t) - i64::from(game.s) + i64::from(game.p);
    if d == 0 {
        return None;
    }
    let ps = i64::from(game.p) - i64::from(game.s);
    let rt = i64::from(game.r) - i64::from(game.t);
    if ps * d > 0 && rt * d > 0 {
        Some(ps as f64 / d as f64)
    } else {
        None
    }
}

/// Stability structure of a game's replicator flow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum StabilityClass {
    /// x = 0 is the only stable state.
    DefectionDominant,
    /// x = 1 is the only stable state.
    CooperationDominant,
    /// Both boundaries stable; the interior point is the basin boundary.
    Bistable { interior_x: f64 },
    /// The interior point is the unique stable state.
    MixedStable { interior_x: f64 },
}

/// Classifies boundary and interior stability from the payoff signs.
///
/// Ties are folded into the class whose behavior they limit to: S = P games
/// follow the sign of g at the opposite boundary (T vs R), T = R games the
/// sign of g at zero (S vs P), and the fully neutral S = P, T = R game is
/// reported as mixed at one half.
pub fn classify_stability(game: &Game) -> StabilityClass {
    let s = game.s;
    let t = game.t;
    let r = game.r;
    let p = game.p;
    if s > p && t < r {
        StabilityClass::CooperationDominant
    } else if s < p && t > r {
        StabilityClass::DefectionDominant
    } else if s < p && t < r {
        // D > 0 is implied, so the interior point always exists here.
        StabilityClass::Bistable {
            interior_x: interior_fixed_point(game).expect("interior point in coordination region"),
        }
    } else if s > p && t > r {
        StabilityClass::MixedStable {
            interior_x: interior_fixed_point(game)
                .expect("interior point in anti-coordination region"),
        }
    } else if s == p && t == r {
        StabilityClass::MixedStable { interior_x: 0.5 }
    } else if s == p {
        if t > r {
            StabilityClass::DefectionDominant
        } else {
            StabilityClass::CooperationDominant
        }
    } else if s > p {
        // t == r
        StabilityClass::CooperationDominant
    } else {
        StabilityClass::DefectionDominant
    }
}

/// Analytic cooperation prediction from stability: 1 under cooperation
/// dominance, 0 under defection dominance, x* when the interior point is
/// stable, and the basin rule in the bistable region (1 when x0 lies above
/// the interior point, 0 below, 0.5 exactly on it).
pub fn nash_cooperation(game: &Game, x0: f64) -> f64 {
    match classify_stability(game) {
        StabilityClass::CooperationDominant => 1.0,
        StabilityClass::DefectionDominant => 0.0,
        StabilityClass::MixedStable { interior_x } => interior_x,
        StabilityClass::Bistable { interior_x } => {
            if x0 > interior_x {
                1.0
            } else if x0 < interior_x {
                0.0
            } else {
                0.5
            }
        }
    }
}

/// Analytic Nash cooperation matrix over a grid.
pub fn nash_matrix(grid: &crate::game::GridSpec, x0: f64) -> crate::matrix::CooperationMatrix {
    crate::matrix::CooperationMatrix::from_fn(*grid, |s, t| {
        nash_cooperation(&Game::new(grid.r, s, t, grid.p), x0)
    })
}

/// Cooperation matrix from replicator runs, alongside the per-cell results
/// so outcome kinds (periodic cells, max-iteration cells) stay inspectable.
pub fn replicator_matrix(
    grid: &crate::game::GridSpec,
    params: &ReplicatorParams,
) -> (
    crate::matrix::CooperationMatrix,
    Vec<(i32, i32, EquilibriumResult)>,
) {
    let mut results = Vec::with_capacity(grid.len());
    let matrix = crate::matrix::CooperationMatrix::from_fn(*grid, |s, t| {
        let result = simulate_replicator(&Game::new(grid.r, s, t, grid.p), params);
        results.push((s, t, result));
        result.terminal_x
    });
    (matrix, results)
}
