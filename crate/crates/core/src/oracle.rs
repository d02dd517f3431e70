//! Slow reference implementations.
//!
//! Nothing here goes through the engine's lookup tables or the `rules`
//! transition functions: neighbors are enumerated coordinate by coordinate and
//! the probability formulas are written out again, so a disagreement with the
//! engine points at one side or the other.

use crate::engine::{choose_rule, Engine, RuleChoice};
use crate::grid::Grid;
use crate::rng::{RngStream, StreamRole};
use crate::rules::{ProbabilityFamily, ProbabilityFunction, RuleParams, ThresholdMode};

const NEIGHBOR_OFFSETS: [(i64, i64); 8] = [(-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1)];

fn cell(grid: &Grid, row: i64, col: i64) -> u8 {
    let h = grid.height() as i64;
    let w = grid.width() as i64;
    let r = ((row % h) + h) % h;
    let c = ((col % w) + w) % w;
    grid.cells()[(r * w + c) as usize]
}

/// Count of neighbors of `(row, col)` holding `state`.
fn neighbors_in_state(grid: &Grid, row: i64, col: i64, state: u8) -> u32 {
    NEIGHBOR_OFFSETS
        .iter()
        .filter(|(dr, dc)| cell(grid, row + dr, col + dc) == state)
        .count() as u32
}

fn probability(pf: &ProbabilityFunction, x: u32) -> f64 {
    let k = pf.k() as u32;
    if x > k {
        return 0.0;
    }
    let (kf, xf) = (k as f64, x as f64);
    match pf.family() {
        ProbabilityFamily::Zero => 0.0,
        ProbabilityFamily::Logarithmic if x <= 1 => 0.0,
        ProbabilityFamily::Logarithmic => xf.log(kf),
        ProbabilityFamily::Exponential if x == 0 => 0.0,
        ProbabilityFamily::Exponential => (xf - kf).exp(),
        ProbabilityFamily::Linear if k == 0 => 0.0,
        ProbabilityFamily::Linear => xf / kf,
        ProbabilityFamily::Table(t) => t[x as usize],
    }
}

/// Probability that the cell flips under one `g` application.
fn cell_flip_probability(grid: &Grid, params: &RuleParams, row: i64, col: i64) -> f64 {
    let k = params.k() as u32;
    if cell(grid, row, col) == 1 {
        let zeros = neighbors_in_state(grid, row, col, 0);
        if zeros <= k {
            probability(params.phi(), zeros)
        } else {
            0.0
        }
    } else {
        let ones = neighbors_in_state(grid, row, col, 1);
        if ones <= k {
            probability(params.psi(), ones)
        } else {
            0.0
        }
    }
}

/// Reference step with an explicit rule choice.
pub fn naive_apply(grid: &Grid, params: &RuleParams, rng: &RngStream, t: u64, rule: RuleChoice) -> Grid {
    let (w, h) = (grid.width() as i64, grid.height() as i64);
    let k = params.k() as u32;
    let mut next = Vec::with_capacity(grid.len());
    for row in 0..h {
        for col in 0..w {
            let state = cell(grid, row, col);
            let new_state = match rule {
                RuleChoice::F => {
                    if state == 1 {
                        if neighbors_in_state(grid, row, col, 0) > k {
                            0
                        } else {
                            1
                        }
                    } else {
                        let ones = neighbors_in_state(grid, row, col, 1);
                        let target = 8 - k.min(8);
                        let fires = match params.mode() {
                            ThresholdMode::AtLeast => ones >= target,
                            ThresholdMode::Exact => ones == target,
                        };
                        if fires {
                            1
                        } else {
                            0
                        }
                    }
                }
                RuleChoice::G => {
                    let u = rng.uniform(t, StreamRole::Cell, (row * w + col) as u64);
                    if u < cell_flip_probability(grid, params, row, col) {
                        1 - state
                    } else {
                        state
                    }
                }
            };
            next.push(new_state);
        }
    }
    Grid::from_cells(grid.width(), grid.height(), next).expect("same shape as input")
}

/// Reference for `engine::step`: same rule coin, same variates.
pub fn naive_step(grid: &Grid, params: &RuleParams, rng: &RngStream, t: u64) -> Grid {
    naive_apply(grid, params, rng, t, choose_rule(rng, t, params.p()))
}

/// Exact per-cell probability of changing state, conditioned on a `g` step.
pub fn flip_probability_map(grid: &Grid, params: &RuleParams) -> Vec<f64> {
    let (w, h) = (grid.width() as i64, grid.height() as i64);
    (0..h)
        .flat_map(|row| (0..w).map(move |col| (row, col)))
        .map(|(row, col)| cell_flip_probability(grid, params, row, col))
        .collect()
}

/// Per-cell flip frequency over `trials` independent engine `g` steps from
/// `grid`; trial `i` uses step counter `i` of the seed's stream.
pub fn monte_carlo_flip_check(grid: &Grid, params: &RuleParams, trials: u64, seed: u64) -> Vec<f64> {
    let engine = Engine::new(params.clone(), seed);
    let mut flips = vec![0u64; grid.len()];
    let mut next = grid.clone();
    for trial in 0..trials.max(1) {
        engine.apply_into(grid, &mut next, trial, RuleChoice::G);
        for ((f, &a), &b) in flips.iter_mut().zip(grid.cells()).zip(next.cells()) {
            *f += (a != b) as u64;
        }
    }
    flips.iter().map(|&f| f as f64 / trials.max(1) as f64).collect()
}
