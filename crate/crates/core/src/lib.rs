//! Temporally stochastic 2D cellular automaton.
//!
//! A binary grid with periodic boundaries evolves under one of two rules per
//! step, chosen by a coin with probability `p`: the deterministic threshold
//! rule `f`, or the stochastic rule `g`, which flips a cell with a probability
//! depending on how many of its Moore neighbors disagree with it. Runs are
//! seeded and bit-reproducible regardless of thread count.
//!
//! ```
//! use tsca_core::{random_density, run, EngineConfig, Outcome, ProbabilityFamily, RuleParams, ThresholdMode};
//!
//! let params = RuleParams::from_families(
//!     4,
//!     ProbabilityFamily::Logarithmic,
//!     ProbabilityFamily::Exponential,
//!     0.2,
//!     ThresholdMode::AtLeast,
//! )
//! .unwrap();
//! let grid = random_density(64, 64, 0.1, 7).unwrap();
//! let result = run(&grid, &params, &EngineConfig::default(), 7);
//! assert_eq!(result.outcome, Outcome::AllZero);
//! ```

pub mod config;
pub mod engine;
pub mod experiments;
pub mod grid;
pub mod initcfg;
pub mod oracle;
pub mod render;
pub mod rng;
pub mod rules;

pub use config::{parse_config, Config, ConfigError, InitialSource, RawConfig};
pub use engine::{choose_rule, run, step, trajectory_hash, Engine, EngineConfig, Outcome, RuleChoice, RunResult};
pub use experiments::{
    classification_accuracy, preset, run_experiment, write_csv, Accuracy, ExperimentError, ExperimentSpec, InitialSpec,
    OutcomeTally, Preset, TrialRecord,
};
pub use grid::{CellState, Grid, GridError, GridParseError};
pub use initcfg::{block_minority, load_grid, random_density, save_grid, BlockKind, BlockShape, InitError};
pub use rng::{RngStream, StreamRole};
pub use rules::{
    eval_phi, eval_psi, f_transition, g_transition, ProbabilityFamily, ProbabilityFunction, RuleError, RuleParams,
    ThresholdMode,
};
