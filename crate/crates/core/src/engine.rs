//! Synchronous time evolution.
//!
//! Each step draws one coin to pick the rule for the whole grid (`g` with
//! probability `p`, otherwise `f`), then computes every cell from the current
//! buffer into a second buffer. On `g` steps cell `i` uses
//! `uniform(step, Cell, i)`; the variate is defined for every cell whether or
//! not the cell could flip, so the stream layout never depends on grid content.

use std::fmt;
use std::hash::Hasher;

use fnv::FnvHasher;
use rayon::prelude::*;

use crate::grid::{CellState, Grid};
use crate::rng::{RngStream, StepStream, StreamRole};
use crate::rules::{f_transition, RuleParams};

/// Default step cap.
pub const DEFAULT_MAX_STEPS: u64 = 50_000;

/// With `workers = 0`, grids smaller than this stay on the calling thread.
const AUTO_PARALLEL_MIN_CELLS: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RuleChoice {
    F,
    G,
}

impl RuleChoice {
    fn tag(self) -> u8 {
        match self {
            RuleChoice::F => 0,
            RuleChoice::G => 1,
        }
    }
}

impl fmt::Display for RuleChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleChoice::F => "F",
            RuleChoice::G => "G",
        })
    }
}

/// `G` when the step's rule coin lands below `p`. Exactly one draw per step.
pub fn choose_rule(rng: &RngStream, step: u64, p: f64) -> RuleChoice {
    if rng.uniform(step, StreamRole::RuleCoin, 0) < p {
        RuleChoice::G
    } else {
        RuleChoice::F
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EngineConfig {
    pub max_steps: u64,
    /// Density after every step, starting with the initial grid.
    pub record_density_trace: bool,
    /// Rule trace plus the trajectory hash.
    pub record_trajectory: bool,
    pub snapshot_every: Option<u64>,
    /// 0 = automatic, 1 = calling thread only, n = dedicated pool of n threads.
    pub workers: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            max_steps: DEFAULT_MAX_STEPS,
            record_density_trace: false,
            record_trajectory: false,
            snapshot_every: None,
            workers: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    AllZero,
    AllOne,
    Timeout,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::AllZero => "all_zero",
            Outcome::AllOne => "all_one",
            Outcome::Timeout => "timeout",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all_zero" => Ok(Outcome::AllZero),
            "all_one" => Ok(Outcome::AllOne),
            "timeout" => Ok(Outcome::Timeout),
            other => Err(format!("unknown outcome `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub outcome: Outcome,
    /// Steps executed until the grid first became homogeneous, or `max_steps`.
    pub iterations: u64,
    pub density_trace: Option<Vec<f64>>,
    pub rule_trace: Option<Vec<RuleChoice>>,
    /// See [`TrajectoryHasher`]; present when trajectories are recorded.
    pub trajectory_hash: Option<u64>,
    pub final_grid: Grid,
}

/// Order-sensitive FNV-1a digest of a run.
///
/// Byte layout: width and height as u64 LE, the initial cells (one byte each,
/// row-major), then for every executed step `t` (0-based): `t` as u64 LE, the
/// rule tag (0 = F, 1 = G) and the resulting cells.
pub struct TrajectoryHasher(FnvHasher);

impl TrajectoryHasher {
    pub fn new(initial: &Grid) -> Self {
        let mut h = FnvHasher::default();
        h.write(&(initial.width() as u64).to_le_bytes());
        h.write(&(initial.height() as u64).to_le_bytes());
        h.write(initial.cells());
        TrajectoryHasher(h)
    }

    pub fn record(&mut self, step: u64, rule: RuleChoice, grid: &Grid) {
        self.0.write(&step.to_le_bytes());
        self.0.write(&[rule.tag()]);
        self.0.write(grid.cells());
    }

    pub fn finish(&self) -> u64 {
        self.0.finish()
    }
}

/// Outcome of one step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepInfo {
    pub rule: RuleChoice,
    pub ones: usize,
}

/// Per-row scratch buffers.
struct RowScratch {
    colsum: Vec<u8>,
    ones: Vec<u8>,
}

impl RowScratch {
    fn new(width: usize) -> Self {
        RowScratch {
            colsum: vec![0; width],
            ones: vec![0; width],
        }
    }
}

/// A compiled rule set ready to advance grids.
pub struct Engine {
    params: RuleParams,
    rng: RngStream,
    /// Next state under `f`, indexed by `[state][one-neighbors]`.
    f_table: [[u8; 9]; 2],
    /// Flip probability under `g`, indexed by `[state][one-neighbors]`.
    g_table: [[f64; 9]; 2],
    workers: usize,
    pool: Option<rayon::ThreadPool>,
}

impl Engine {
    pub fn new(params: RuleParams, seed: u64) -> Self {
        Self::with_workers(params, seed, 1)
    }

    /// Panics if a dedicated thread pool cannot be created.
    pub fn with_workers(params: RuleParams, seed: u64, workers: usize) -> Self {
        let mut f_table = [[0u8; 9]; 2];
        let mut g_table = [[0f64; 9]; 2];
        for ones in 0..=8u8 {
            for state in [CellState::Zero, CellState::One] {
                let opposite = if state == CellState::One { 8 - ones } else { ones };
                f_table[state as usize][ones as usize] = f_transition(state, opposite, params.k(), params.mode()).bit();
                g_table[state as usize][ones as usize] = params.g_flip_probability(state, opposite);
            }
        }
        let pool = (workers > 1).then(|| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .expect("failed to build engine thread pool")
        });
        Engine {
            params,
            rng: RngStream::new(seed),
            f_table,
            g_table,
            workers,
            pool,
        }
    }

    pub fn params(&self) -> &RuleParams {
        &self.params
    }

    pub fn rng(&self) -> &RngStream {
        &self.rng
    }

    /// Advances `src` by one step into `dst`, which must have the same shape.
    pub fn step_into(&self, src: &Grid, dst: &mut Grid, t: u64) -> StepInfo {
        let rule = choose_rule(&self.rng, t, self.params.p());
        let ones = self.apply_into(src, dst, t, rule);
        StepInfo { rule, ones }
    }

    /// Applies `rule` to every cell, bypassing the rule coin. Returns the
    /// number of ones in `dst`.
    pub fn apply_into(&self, src: &Grid, dst: &mut Grid, t: u64, rule: RuleChoice) -> usize {
        assert_eq!(
            (src.width(), src.height()),
            (dst.width(), dst.height()),
            "double buffer shape mismatch"
        );
        let width = src.width();
        let stream = self.rng.at_step(t);
        let out = dst.cells_mut();
        let parallel = match self.workers {
            0 => src.len() >= AUTO_PARALLEL_MIN_CELLS && rayon::current_num_threads() > 1,
            1 => false,
            _ => true,
        };
        if !parallel {
            let mut scratch = RowScratch::new(width);
            return out
                .chunks_mut(width)
                .enumerate()
                .map(|(r, row)| self.update_row(src, r, row, &mut scratch, rule, &stream))
                .sum();
        }
        let mut work = move || -> usize {
            out.par_chunks_mut(width)
                .enumerate()
                .map_init(
                    || RowScratch::new(width),
                    |scratch, (r, row)| self.update_row(src, r, row, scratch, rule, &stream),
                )
                .sum()
        };
        match &self.pool {
            Some(pool) => pool.install(work),
            None => work(),
        }
    }

    fn update_row(
        &self,
        src: &Grid,
        r: usize,
        out: &mut [u8],
        scratch: &mut RowScratch,
        rule: RuleChoice,
        stream: &StepStream,
    ) -> usize {
        src.row_one_counts(r, &mut scratch.colsum, &mut scratch.ones);
        let mid = src.row(r);
        let mut ones_total = 0usize;
        match rule {
            RuleChoice::F => {
                for ((o, &s), &n) in out.iter_mut().zip(mid).zip(&scratch.ones) {
                    *o = self.f_table[s as usize][n as usize];
                    ones_total += *o as usize;
                }
            }
            RuleChoice::G => {
                let base = (r * src.width()) as u64;
                for (c, ((o, &s), &n)) in out.iter_mut().zip(mid).zip(&scratch.ones).enumerate() {
                    let q = self.g_table[s as usize][n as usize];
                    // u in [0, 1): q = 0 never flips and q = 1 always does,
                    // so the variate only needs evaluating in between.
                    let flip = if q <= 0.0 {
                        false
                    } else if q >= 1.0 {
                        true
                    } else {
                        stream.uniform(StreamRole::Cell, base + c as u64) < q
                    };
                    *o = s ^ flip as u8;
                    ones_total += *o as usize;
                }
            }
        }
        ones_total
    }

    /// Allocating single step.
    pub fn step(&self, grid: &Grid, t: u64) -> Grid {
        let mut next = grid.clone();
        self.step_into(grid, &mut next, t);
        next
    }

    pub fn run(&self, initial: &Grid, cfg: &EngineConfig) -> RunResult {
        self.run_observed(initial, cfg, |_, _| {})
    }

    /// Like [`Engine::run`], calling `observer(steps_done, grid)` at step 0 and
    /// every `cfg.snapshot_every` steps.
    pub fn run_observed(&self, initial: &Grid, cfg: &EngineConfig, mut observer: impl FnMut(u64, &Grid)) -> RunResult {
        let max_steps = cfg.max_steps.max(1);
        let n = initial.len();
        let mut density_trace = cfg.record_density_trace.then(|| vec![initial.density()]);
        let mut rule_trace = cfg.record_trajectory.then(Vec::new);
        let mut hasher = cfg.record_trajectory.then(|| TrajectoryHasher::new(initial));
        let snapshot = |steps: u64| cfg.snapshot_every.is_some_and(|k| k > 0 && steps.is_multiple_of(k));

        if snapshot(0) {
            observer(0, initial);
        }
        let finish = |outcome, iterations, grid: Grid, dt, rt, h: Option<TrajectoryHasher>| RunResult {
            outcome,
            iterations,
            density_trace: dt,
            rule_trace: rt,
            trajectory_hash: h.map(|h| h.finish()),
            final_grid: grid,
        };
        match initial.homogeneous_state() {
            Some(CellState::Zero) => {
                return finish(Outcome::AllZero, 0, initial.clone(), density_trace, rule_trace, hasher)
            }
            Some(CellState::One) => {
                return finish(Outcome::AllOne, 0, initial.clone(), density_trace, rule_trace, hasher)
            }
            None => {}
        }

        let mut cur = initial.clone();
        let mut next = initial.clone();
        for t in 0..max_steps {
            let info = self.step_into(&cur, &mut next, t);
            std::mem::swap(&mut cur, &mut next);
            let done = t + 1;
            if let Some(trace) = density_trace.as_mut() {
                trace.push(info.ones as f64 / n as f64);
            }
            if let Some(trace) = rule_trace.as_mut() {
                trace.push(info.rule);
            }
            if let Some(h) = hasher.as_mut() {
                h.record(t, info.rule, &cur);
            }
            if snapshot(done) {
                observer(done, &cur);
            }
            if info.ones == 0 {
                return finish(Outcome::AllZero, done, cur, density_trace, rule_trace, hasher);
            }
            if info.ones == n {
                return finish(Outcome::AllOne, done, cur, density_trace, rule_trace, hasher);
            }
        }
        finish(Outcome::Timeout, max_steps, cur, density_trace, rule_trace, hasher)
    }
}

/// One synchronous step of `grid` at time `t`.
pub fn step(grid: &Grid, params: &RuleParams, rng: &RngStream, t: u64) -> Grid {
    Engine::new(params.clone(), rng.seed()).step(grid, t)
}

/// Evolves `initial` until it becomes homogeneous or `cfg.max_steps` elapse.
pub fn run(initial: &Grid, params: &RuleParams, cfg: &EngineConfig, seed: u64) -> RunResult {
    Engine::with_workers(params.clone(), seed, cfg.workers).run(initial, cfg)
}

/// Digest of the trajectory of a fully recorded run.
pub fn trajectory_hash(initial: &Grid, params: &RuleParams, cfg: &EngineConfig, seed: u64) -> u64 {
    let cfg = EngineConfig {
        record_trajectory: true,
        ..cfg.clone()
    };
    run(initial, params, &cfg, seed)
        .trajectory_hash
        .expect("trajectory recording was requested")
}
