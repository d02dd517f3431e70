//! Flat `key = value` run and sweep configuration.
//!
//! ```text
//! # comments start with '#'
//! width = 200
//! height = 200
//! K = 4
//! phi = linear
//! psi = linear
//! p = 0.1
//! rho = 0.40, 0.45, 0.50     # lists make sweeps
//! trials = 40
//! out_csv = sweep.csv
//! ```
//!
//! `K`, `p`, `rho` and `block_count` accept comma-separated lists. `phi` and
//! `psi` take `log | exp | linear | zero | table:v0,...,vK` and are never lists.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;

use thiserror::Error;

use crate::engine::{EngineConfig, DEFAULT_MAX_STEPS};
use crate::experiments::{ExperimentSpec, InitialSpec};
use crate::grid::{CellState, MIN_DIM};
use crate::initcfg::{self, BlockKind, BlockShape, InitError};
use crate::rules::{ProbabilityFamily, ProbabilityFunction, RuleParams, ThresholdMode, MAX_K};

pub const KEYS: [&str; 20] = [
    "width",
    "height",
    "K",
    "p",
    "phi",
    "psi",
    "mode",
    "rho",
    "block_state",
    "block_count",
    "block_shape",
    "block_anchor",
    "grid_file",
    "seed",
    "trials",
    "max_steps",
    "snapshot_every",
    "out_csv",
    "out_dir",
    "workers",
];

const LIST_KEYS: [&str; 4] = ["K", "p", "rho", "block_count"];

pub const DEFAULT_SIDE: usize = 100;
pub const DEFAULT_RHO: f64 = 0.5;

/// Where a setting came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    Line(usize),
    /// Command-line override.
    Override,
    /// Cross-key validation with no single source line.
    Config,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line(n) => write!(f, "line {n}"),
            Location::Override => f.write_str("override"),
            Location::Config => f.write_str("config"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigErrorKind {
    #[error("expected `key = value`")]
    Syntax,
    #[error("unknown key")]
    UnknownKey,
    #[error("duplicate key (first set on line {0})")]
    Duplicate(usize),
    #[error("cannot parse `{value}` as {expected}")]
    Type { value: String, expected: &'static str },
    #[error("{0}")]
    Range(String),
    #[error("conflicts with `{0}`")]
    Conflict(String),
    #[error("takes a single value here, got {0}")]
    NotSingle(usize),
    #[error("required")]
    Missing,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{location}: `{key}`: {kind}")]
pub struct ConfigError {
    pub location: Location,
    pub key: String,
    pub kind: ConfigErrorKind,
}

/// Initial-grid source of a config.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialSource {
    Random {
        rho: Vec<f64>,
    },
    Block {
        state: CellState,
        counts: Vec<usize>,
        kind: BlockKind,
        anchor: (usize, usize),
    },
    File(PathBuf),
}

/// A validated configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    /// Ignored for file-based initial grids.
    pub width: usize,
    pub height: usize,
    pub k: Vec<u8>,
    pub p: Vec<f64>,
    pub phi: ProbabilityFamily,
    pub psi: ProbabilityFamily,
    pub mode: ThresholdMode,
    pub initial: InitialSource,
    pub seed: u64,
    pub trials: usize,
    pub max_steps: u64,
    pub snapshot_every: Option<u64>,
    pub out_csv: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub workers: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            width: DEFAULT_SIDE,
            height: DEFAULT_SIDE,
            k: vec![4],
            p: vec![0.2],
            phi: ProbabilityFamily::Logarithmic,
            psi: ProbabilityFamily::Exponential,
            mode: ThresholdMode::AtLeast,
            initial: InitialSource::Random { rho: vec![DEFAULT_RHO] },
            seed: 0,
            trials: 1,
            max_steps: DEFAULT_MAX_STEPS,
            snapshot_every: None,
            out_csv: None,
            out_dir: None,
            workers: 0,
        }
    }
}

/// Unvalidated key/value pairs, in first-seen order.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    entries: Vec<(String, String, Location)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        let mut seen: HashMap<String, usize> = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError {
                location: Location::Line(line_no),
                key: content.to_string(),
                kind: ConfigErrorKind::Syntax,
            })?;
            let (key, value) = (key.trim(), value.trim());
            let err = |kind| ConfigError {
                location: Location::Line(line_no),
                key: key.to_string(),
                kind,
            };
            if !KEYS.contains(&key) {
                return Err(err(ConfigErrorKind::UnknownKey));
            }
            if let Some(&first) = seen.get(key) {
                return Err(err(ConfigErrorKind::Duplicate(first)));
            }
            seen.insert(key.to_string(), line_no);
            raw.entries
                .push((key.to_string(), value.to_string(), Location::Line(line_no)));
        }
        Ok(raw)
    }

    /// Sets `key`, replacing any value from the file.
    pub fn set_override(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if !KEYS.contains(&key) {
            return Err(ConfigError {
                location: Location::Override,
                key: key.to_string(),
                kind: ConfigErrorKind::UnknownKey,
            });
        }
        self.entries.retain(|(k, _, _)| k != key);
        self.entries
            .push((key.to_string(), value.trim().to_string(), Location::Override));
        Ok(())
    }

    /// Parses a `key=value` override.
    pub fn set_override_pair(&mut self, pair: &str) -> Result<(), ConfigError> {
        let (k, v) = pair.split_once('=').ok_or_else(|| ConfigError {
            location: Location::Override,
            key: pair.to_string(),
            kind: ConfigErrorKind::Syntax,
        })?;
        self.set_override(k.trim(), v)
    }

    fn get(&self, key: &str) -> Option<(&str, Location)> {
        self.entries
            .iter()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, loc)| (v.as_str(), *loc))
    }

    pub fn validate(&self) -> Result<Config, ConfigError> {
        let mut cfg = Config::default();
        let v = Validator { raw: self };

        let width = v.scalar::<usize>("width", "a positive integer")?;
        let height = v.scalar::<usize>("height", "a positive integer")?;
        for (key, val) in [("width", width), ("height", height)] {
            if let Some((n, loc)) = val {
                if n < MIN_DIM {
                    return Err(v.range(key, loc, format!("must be at least {MIN_DIM}")));
                }
            }
        }
        cfg.width = width.map_or(DEFAULT_SIDE, |x| x.0);
        cfg.height = height.map_or(DEFAULT_SIDE, |x| x.0);

        if let Some((ks, loc)) = v.list::<u8>("K", "an integer")? {
            if let Some(&k) = ks.iter().find(|&&k| k > MAX_K) {
                return Err(v.range("K", loc, format!("{k} is outside 0..=8")));
            }
            cfg.k = ks;
        }
        if let Some((ps, loc)) = v.list::<f64>("p", "a number")? {
            if let Some(&p) = ps.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(v.range("p", loc, format!("{p} is outside [0, 1]")));
            }
            cfg.p = ps;
        }
        for key in ["phi", "psi"] {
            if let Some((text, loc)) = self.get(key) {
                let fam: ProbabilityFamily = text.parse().map_err(|e: crate::rules::RuleError| ConfigError {
                    location: loc,
                    key: key.to_string(),
                    kind: ConfigErrorKind::Range(e.to_string()),
                })?;
                // tables must fit every K in the sweep
                for &k in &cfg.k {
                    ProbabilityFunction::new(fam.clone(), k)
                        .map_err(|e| v.range(key, loc, format!("{e} (K = {k})")))?;
                }
                if key == "phi" {
                    cfg.phi = fam;
                } else {
                    cfg.psi = fam;
                }
            }
        }
        if let Some((text, loc)) = self.get("mode") {
            cfg.mode = text
                .parse()
                .map_err(|_| v.type_err("mode", loc, text, "at_least or exact"))?;
        }

        cfg.initial = self.validate_initial(&v)?;
        if let InitialSource::File(_) = cfg.initial {
            for key in ["width", "height"] {
                if let Some((_, loc)) = self.get(key) {
                    return Err(v.conflict(key, loc, "grid_file"));
                }
            }
        }

        if let Some((s, _)) = v.scalar::<u64>("seed", "a non-negative integer")? {
            cfg.seed = s;
        }
        if let Some((t, loc)) = v.scalar::<usize>("trials", "a positive integer")? {
            if t == 0 {
                return Err(v.range("trials", loc, "must be at least 1".into()));
            }
            cfg.trials = t;
        }
        if let Some((m, loc)) = v.scalar::<u64>("max_steps", "a positive integer")? {
            if m == 0 {
                return Err(v.range("max_steps", loc, "must be at least 1".into()));
            }
            cfg.max_steps = m;
        }
        if let Some((s, loc)) = v.scalar::<u64>("snapshot_every", "a positive integer")? {
            if s == 0 {
                return Err(v.range("snapshot_every", loc, "must be at least 1".into()));
            }
            cfg.snapshot_every = Some(s);
        }
        cfg.out_csv = v.path("out_csv")?;
        cfg.out_dir = v.path("out_dir")?;
        if let Some((w, _)) = v.scalar::<usize>("workers", "a non-negative integer")? {
            cfg.workers = w;
        }
        Ok(cfg)
    }

    fn validate_initial(&self, v: &Validator<'_>) -> Result<InitialSource, ConfigError> {
        let rho = self.get("rho");
        let grid_file = self.get("grid_file");
        let block_count = self.get("block_count");

        if let Some((path, loc)) = grid_file {
            for other in ["rho", "block_count", "block_state", "block_shape", "block_anchor"] {
                if self.get(other).is_some() {
                    return Err(v.conflict("grid_file", loc, other));
                }
            }
            if path.is_empty() {
                return Err(v.type_err("grid_file", loc, path, "a path"));
            }
            return Ok(InitialSource::File(PathBuf::from(path)));
        }
        if block_count.is_none() {
            for key in ["block_state", "block_shape", "block_anchor"] {
                if let Some((_, loc)) = self.get(key) {
                    return Err(ConfigError {
                        location: loc,
                        key: key.to_string(),
                        kind: ConfigErrorKind::Conflict("requires `block_count`".into()),
                    });
                }
            }
            let mut rhos = vec![DEFAULT_RHO];
            if let Some((rs, loc)) = v.list::<f64>("rho", "a number")? {
                if let Some(&r) = rs.iter().find(|r| !(0.0..=1.0).contains(*r)) {
                    return Err(v.range("rho", loc, format!("{r} is outside [0, 1]")));
                }
                rhos = rs;
            }
            return Ok(InitialSource::Random { rho: rhos });
        }
        if let Some((_, loc)) = rho {
            return Err(v.conflict("rho", loc, "block_count"));
        }
        let (counts, count_loc) = v
            .list::<usize>("block_count", "a positive integer")?
            .expect("checked above");
        if counts.contains(&0) {
            return Err(v.range("block_count", count_loc, "must be at least 1".into()));
        }
        let state = match v.scalar::<u8>("block_state", "0 or 1")? {
            None => CellState::Zero,
            Some((b, loc)) => {
                CellState::from_bit(b).ok_or_else(|| v.range("block_state", loc, "must be 0 or 1".into()))?
            }
        };
        let kind = match self.get("block_shape") {
            None => BlockKind::Square,
            Some((text, loc)) => text
                .parse()
                .map_err(|_| v.type_err("block_shape", loc, text, "run or square"))?,
        };
        let anchor = match self.get("block_anchor") {
            None => (0, 0),
            Some((text, loc)) => {
                let parts: Option<Vec<usize>> = text.split(',').map(|s| s.trim().parse().ok()).collect();
                match parts.as_deref() {
                    Some(&[r, c]) => (r, c),
                    _ => return Err(v.type_err("block_anchor", loc, text, "`row,col`")),
                }
            }
        };
        Ok(InitialSource::Block {
            state,
            counts,
            kind,
            anchor,
        })
    }
}

struct Validator<'a> {
    raw: &'a RawConfig,
}

impl Validator<'_> {
    fn err(&self, key: &str, location: Location, kind: ConfigErrorKind) -> ConfigError {
        ConfigError {
            location,
            key: key.to_string(),
            kind,
        }
    }

    fn type_err(&self, key: &str, loc: Location, value: &str, expected: &'static str) -> ConfigError {
        self.err(
            key,
            loc,
            ConfigErrorKind::Type {
                value: value.to_string(),
                expected,
            },
        )
    }

    fn range(&self, key: &str, loc: Location, msg: String) -> ConfigError {
        self.err(key, loc, ConfigErrorKind::Range(msg))
    }

    fn conflict(&self, key: &str, loc: Location, other: &str) -> ConfigError {
        self.err(key, loc, ConfigErrorKind::Conflict(format!("`{other}`")))
    }

    fn scalar<T: std::str::FromStr>(
        &self,
        key: &str,
        expected: &'static str,
    ) -> Result<Option<(T, Location)>, ConfigError> {
        match self.raw.get(key) {
            None => Ok(None),
            Some((text, loc)) => text
                .parse::<T>()
                .map(|x| Some((x, loc)))
                .map_err(|_| self.type_err(key, loc, text, expected)),
        }
    }

    fn list<T: std::str::FromStr>(
        &self,
        key: &str,
        expected: &'static str,
    ) -> Result<Option<(Vec<T>, Location)>, ConfigError> {
        debug_assert!(LIST_KEYS.contains(&key));
        match self.raw.get(key) {
            None => Ok(None),
            Some((text, loc)) => text
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<T>()
                        .map_err(|_| self.type_err(key, loc, s.trim(), expected))
                })
                .collect::<Result<Vec<_>, _>>()
                .map(|v| Some((v, loc))),
        }
    }

    fn path(&self, key: &str) -> Result<Option<PathBuf>, ConfigError> {
        match self.raw.get(key) {
            None => Ok(None),
            Some(("", loc)) => Err(self.type_err(key, loc, "", "a path")),
            Some((text, _)) => Ok(Some(PathBuf::from(text))),
        }
    }
}

pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    RawConfig::parse(text)?.validate()
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

impl Config {
    /// Canonical text form; `parse_config(&cfg.to_text())` returns `cfg`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if !matches!(self.initial, InitialSource::File(_)) {
            let _ = writeln!(s, "width = {}", self.width);
            let _ = writeln!(s, "height = {}", self.height);
        }
        let _ = writeln!(s, "K = {}", join(&self.k));
        let _ = writeln!(s, "p = {}", join(&self.p));
        let _ = writeln!(s, "phi = {}", self.phi);
        let _ = writeln!(s, "psi = {}", self.psi);
        let _ = writeln!(s, "mode = {}", self.mode);
        match &self.initial {
            InitialSource::Random { rho } => {
                let _ = writeln!(s, "rho = {}", join(rho));
            }
            InitialSource::Block {
                state,
                counts,
                kind,
                anchor,
            } => {
                let _ = writeln!(s, "block_state = {state}");
                let _ = writeln!(s, "block_count = {}", join(counts));
                let _ = writeln!(s, "block_shape = {kind}");
                let _ = writeln!(s, "block_anchor = {},{}", anchor.0, anchor.1);
            }
            InitialSource::File(p) => {
                let _ = writeln!(s, "grid_file = {}", p.display());
            }
        }
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "max_steps = {}", self.max_steps);
        if let Some(n) = self.snapshot_every {
            let _ = writeln!(s, "snapshot_every = {n}");
        }
        if let Some(p) = &self.out_csv {
            let _ = writeln!(s, "out_csv = {}", p.display());
        }
        if let Some(p) = &self.out_dir {
            let _ = writeln!(s, "out_dir = {}", p.display());
        }
        let _ = writeln!(s, "workers = {}", self.workers);
        s
    }

    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            max_steps: self.max_steps,
            record_density_trace: false,
            record_trajectory: false,
            snapshot_every: self.snapshot_every,
            workers: self.workers,
        }
    }

    pub fn rule_params(&self, k: u8, p: f64) -> RuleParams {
        RuleParams::from_families(k, self.phi.clone(), self.psi.clone(), p, self.mode)
            .expect("validated configuration yields valid rule parameters")
    }

    /// Fails unless every list-valued key holds exactly one value.
    pub fn require_single(&self) -> Result<(), ConfigError> {
        let single = |key: &str, n: usize| {
            if n == 1 {
                Ok(())
            } else {
                Err(ConfigError {
                    location: Location::Config,
                    key: key.to_string(),
                    kind: ConfigErrorKind::NotSingle(n),
                })
            }
        };
        single("K", self.k.len())?;
        single("p", self.p.len())?;
        match &self.initial {
            InitialSource::Random { rho } => single("rho", rho.len()),
            InitialSource::Block { counts, .. } => single("block_count", counts.len()),
            InitialSource::File(_) => Ok(()),
        }
    }

    /// One experiment per point of the `K x p x initial` cross product, in
    /// that nesting order. Grid files are read once.
    pub fn experiment_specs(&self) -> Result<Vec<ExperimentSpec>, InitError> {
        let (width, height, initials): (usize, usize, Vec<(String, InitialSpec)>) = match &self.initial {
            InitialSource::Random { rho } => (
                self.width,
                self.height,
                rho.iter()
                    .map(|&r| (format!("rho={r}"), InitialSpec::Random { rho: r }))
                    .collect(),
            ),
            InitialSource::Block {
                state,
                counts,
                kind,
                anchor,
            } => (
                self.width,
                self.height,
                counts
                    .iter()
                    .map(|&count| {
                        (
                            format!("block={count}"),
                            InitialSpec::Block {
                                minority: *state,
                                count,
                                shape: BlockShape {
                                    kind: *kind,
                                    anchor: *anchor,
                                },
                            },
                        )
                    })
                    .collect(),
            ),
            InitialSource::File(path) => {
                let grid = initcfg::load_grid(path)?;
                (
                    grid.width(),
                    grid.height(),
                    vec![(format!("file={}", path.display()), InitialSpec::Fixed(grid))],
                )
            }
        };
        let mut specs = Vec::new();
        for &k in &self.k {
            for &p in &self.p {
                for (label, initial) in &initials {
                    specs.push(ExperimentSpec {
                        name: format!("K={k} p={p} {label}"),
                        width,
                        height,
                        params: self.rule_params(k, p),
                        initial: initial.clone(),
                        trials: self.trials,
                        seed_base: self.seed,
                        engine: self.engine_config(),
                    });
                }
            }
        }
        Ok(specs)
    }

    /// Config equivalent of an experiment template. `None` for fixed-grid templates.
    pub fn from_experiment(spec: &ExperimentSpec) -> Option<Self> {
        let initial = match &spec.initial {
            InitialSpec::Random { rho } => InitialSource::Random { rho: vec![*rho] },
            InitialSpec::Block { minority, count, shape } => InitialSource::Block {
                state: *minority,
                counts: vec![*count],
                kind: shape.kind,
                anchor: shape.anchor,
            },
            InitialSpec::Fixed(_) => return None,
        };
        Some(Config {
            width: spec.width,
            height: spec.height,
            k: vec![spec.params.k()],
            p: vec![spec.params.p()],
            phi: spec.params.phi().family().clone(),
            psi: spec.params.psi().family().clone(),
            mode: spec.params.mode(),
            initial,
            seed: spec.seed_base,
            trials: spec.trials,
            max_steps: spec.engine.max_steps,
            snapshot_every: spec.engine.snapshot_every,
            out_csv: None,
            out_dir: None,
            workers: spec.engine.workers,
        })
    }
}
