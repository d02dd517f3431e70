//! Batch harness: repeated seeded trials, aggregation and CSV output.

use std::fmt;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{Engine, EngineConfig, Outcome};
use crate::grid::{CellState, Grid};
use crate::initcfg::{self, BlockKind, BlockShape, InitError};
use crate::rules::{ProbabilityFamily, RuleParams, ThresholdMode};

pub const CSV_HEADER: [&str; 9] = [
    "seed",
    "K",
    "rho_initial",
    "p",
    "phi",
    "psi",
    "mode",
    "outcome",
    "iterations",
];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: InitError,
    },
    #[error("experiment needs at least one trial")]
    NoTrials,
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

/// How each trial's initial grid is produced.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialSpec {
    Random {
        rho: f64,
    },
    Block {
        minority: CellState,
        count: usize,
        shape: BlockShape,
    },
    /// The same grid for every trial.
    Fixed(Grid),
}

impl InitialSpec {
    pub fn generate(&self, width: usize, height: usize, seed: u64) -> Result<Grid, InitError> {
        match self {
            InitialSpec::Random { rho } => initcfg::random_density(width, height, *rho, seed),
            InitialSpec::Block { minority, count, shape } => {
                initcfg::block_minority(width, height, *minority, *count, *shape)
            }
            InitialSpec::Fixed(g) => Ok(g.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub params: RuleParams,
    pub initial: InitialSpec,
    pub trials: usize,
    /// Trial `i` uses seed `seed_base + i` for both its initial grid and its run.
    pub seed_base: u64,
    pub engine: EngineConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub seed: u64,
    pub k: u8,
    pub rho_initial: f64,
    pub p: f64,
    pub phi: ProbabilityFamily,
    pub psi: ProbabilityFamily,
    pub mode: ThresholdMode,
    pub outcome: Outcome,
    pub iterations: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

fn run_trial(spec: &ExperimentSpec, trial: usize) -> Result<TrialRecord, ExperimentError> {
    let seed = spec.seed_base.wrapping_add(trial as u64);
    let initial = spec
        .initial
        .generate(spec.width, spec.height, seed)
        .map_err(|source| ExperimentError::Trial { trial, source })?;
    let engine = Engine::with_workers(spec.params.clone(), seed, spec.engine.workers);
    let result = engine.run(&initial, &spec.engine);
    Ok(TrialRecord {
        seed,
        k: spec.params.k(),
        rho_initial: initial.density(),
        p: spec.params.p(),
        phi: spec.params.phi().family().clone(),
        psi: spec.params.psi().family().clone(),
        mode: spec.params.mode(),
        outcome: result.outcome,
        iterations: result.iterations,
    })
}

/// One record per trial, ordered by trial index.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<TrialRecord>, ExperimentError> {
    run_experiment_with(spec, Execution::Parallel)
}

pub fn run_experiment_with(spec: &ExperimentSpec, execution: Execution) -> Result<Vec<TrialRecord>, ExperimentError> {
    if spec.trials == 0 {
        return Err(ExperimentError::NoTrials);
    }
    match execution {
        Execution::Parallel => (0..spec.trials).into_par_iter().map(|t| run_trial(spec, t)).collect(),
        Execution::Sequential => (0..spec.trials).map(|t| run_trial(spec, t)).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Accuracy {
    /// Fraction of non-timeout records classified correctly.
    pub value: f64,
    pub correct: usize,
    pub evaluated: usize,
    /// Excluded from `value`.
    pub timeouts: usize,
    /// No records were evaluated; `value` is 1.0 by convention.
    pub vacuous: bool,
}

/// A record is correct when it ends all-1 exactly when `rho_initial > rho_threshold`.
pub fn classification_accuracy(records: &[TrialRecord], rho_threshold: f64) -> Accuracy {
    let mut correct = 0;
    let mut evaluated = 0;
    let mut timeouts = 0;
    for r in records {
        let expect_one = r.rho_initial > rho_threshold;
        match r.outcome {
            Outcome::Timeout => timeouts += 1,
            o => {
                evaluated += 1;
                if (o == Outcome::AllOne) == expect_one {
                    correct += 1;
                }
            }
        }
    }
    let vacuous = evaluated == 0;
    Accuracy {
        value: if vacuous {
            1.0
        } else {
            correct as f64 / evaluated as f64
        },
        correct,
        evaluated,
        timeouts,
        vacuous,
    }
}

/// Outcome counts over a record set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OutcomeTally {
    pub all_zero: usize,
    pub all_one: usize,
    pub timeout: usize,
}

impl OutcomeTally {
    pub fn of(records: &[TrialRecord]) -> Self {
        let mut t = OutcomeTally::default();
        for r in records {
            match r.outcome {
                Outcome::AllZero => t.all_zero += 1,
                Outcome::AllOne => t.all_one += 1,
                Outcome::Timeout => t.timeout += 1,
            }
        }
        t
    }
}

impl fmt::Display for OutcomeTally {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} all_zero, {} all_one, {} timeout",
            self.all_zero, self.all_one, self.timeout
        )
    }
}

/// Named parameterizations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preset {
    AffinityDefault,
    SelfHealing,
    Transformation,
    DensityLinear,
    DensityExponential,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::AffinityDefault,
        Preset::SelfHealing,
        Preset::Transformation,
        Preset::DensityLinear,
        Preset::DensityExponential,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::AffinityDefault => "affinity_default",
            Preset::SelfHealing => "self_healing",
            Preset::Transformation => "transformation",
            Preset::DensityLinear => "density_linear",
            Preset::DensityExponential => "density_exponential",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| ExperimentError::UnknownPreset(s.to_string()))
    }
}

/// Experiment template for a named preset.
///
/// The affinity presets use 1000x1000 grids and are slow; callers usually
/// shrink `width`/`height` before running them.
pub fn preset(which: Preset) -> ExperimentSpec {
    use ProbabilityFamily::*;
    let affinity = |k| RuleParams::from_families(k, Logarithmic, Exponential, 0.2, ThresholdMode::AtLeast).unwrap();
    let density =
        |fam: ProbabilityFamily| RuleParams::from_families(4, fam.clone(), fam, 0.1, ThresholdMode::AtLeast).unwrap();
    let (width, params, initial, trials) = match which {
        Preset::AffinityDefault => (1000, affinity(4), InitialSpec::Random { rho: 0.475 }, 1),
        Preset::SelfHealing => (1000, affinity(4), InitialSpec::Random { rho: 0.632275 }, 1),
        Preset::Transformation => (
            1000,
            affinity(3),
            InitialSpec::Block {
                minority: CellState::Zero,
                count: 25,
                shape: BlockShape {
                    kind: BlockKind::Square,
                    anchor: (498, 498),
                },
            },
            1,
        ),
        Preset::DensityLinear => (200, density(Linear), InitialSpec::Random { rho: 0.5036035 }, 100),
        Preset::DensityExponential => (100, density(Exponential), InitialSpec::Random { rho: 0.513014 }, 100),
    };
    ExperimentSpec {
        name: which.name().to_string(),
        width,
        height: width,
        params,
        initial,
        trials,
        seed_base: 0,
        engine: EngineConfig::default(),
    }
}

/// Writes records as CSV under [`CSV_HEADER`]; byte output is a pure function of the records.
pub fn write_csv(records: &[TrialRecord], path: impl AsRef<Path>) -> Result<(), ExperimentError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_csv_to(records, file).map_err(|source| ExperimentError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_csv_to<W: Write>(records: &[TrialRecord], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.seed.to_string(),
            r.k.to_string(),
            format!("{:.6}", r.rho_initial),
            r.p.to_string(),
            r.phi.to_string(),
            r.psi.to_string(),
            r.mode.to_string(),
            r.outcome.to_string(),
            r.iterations.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(initial: InitialSpec, trials: usize) -> ExperimentSpec {
        let mut spec = preset(Preset::AffinityDefault);
        spec.width = 24;
        spec.height = 24;
        spec.initial = initial;
        spec.trials = trials;
        spec
    }

    fn record(rho: f64, outcome: Outcome) -> TrialRecord {
        TrialRecord {
            seed: 0,
            k: 4,
            rho_initial: rho,
            p: 0.1,
            phi: ProbabilityFamily::Linear,
            psi: ProbabilityFamily::Linear,
            mode: ThresholdMode::AtLeast,
            outcome,
            iterations: 10,
        }
    }

    #[test]
    fn zero_density_trial() {
        let recs = run_experiment(&small(InitialSpec::Random { rho: 0.0 }, 1)).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!((recs[0].outcome, recs[0].iterations), (Outcome::AllZero, 0));
        assert_eq!(recs[0].rho_initial, 0.0);
    }

    #[test]
    fn seeds_follow_trial_index() {
        let mut spec = small(InitialSpec::Random { rho: 0.3 }, 5);
        spec.seed_base = 100;
        let recs = run_experiment(&spec).unwrap();
        assert_eq!(
            recs.iter().map(|r| r.seed).collect::<Vec<_>>(),
            vec![100, 101, 102, 103, 104]
        );
        assert!(recs.iter().all(|r| r.rho_initial == 173.0 / 576.0));
    }

    #[test]
    fn parallel_matches_sequential() {
        let spec = small(InitialSpec::Random { rho: 0.5 }, 8);
        assert_eq!(
            run_experiment_with(&spec, Execution::Parallel).unwrap(),
            run_experiment_with(&spec, Execution::Sequential).unwrap()
        );
    }

    #[test]
    fn errors_carry_trial_index() {
        let spec = small(
            InitialSpec::Block {
                minority: CellState::Zero,
                count: 7,
                shape: BlockShape::default(),
            },
            2,
        );
        assert!(matches!(
            run_experiment(&spec),
            Err(ExperimentError::Trial { trial: 0, .. })
        ));
        let mut spec = small(InitialSpec::Random { rho: 0.5 }, 0);
        spec.trials = 0;
        assert!(matches!(run_experiment(&spec), Err(ExperimentError::NoTrials)));
    }

    #[test]
    fn accuracy() {
        let recs: Vec<_> = (0..10).map(|_| record(0.3, Outcome::AllZero)).collect();
        assert_eq!(classification_accuracy(&recs, 0.5).value, 1.0);

        let mut recs: Vec<_> = (0..63).map(|_| record(0.5036035, Outcome::AllOne)).collect();
        recs.extend((0..37).map(|_| record(0.5036035, Outcome::AllZero)));
        let acc = classification_accuracy(&recs, 0.5);
        assert_eq!(acc.value, 0.63);
        assert!(!acc.vacuous);

        let empty = classification_accuracy(&[], 0.5);
        assert_eq!(empty.value, 1.0);
        assert!(empty.vacuous);

        let recs = vec![
            record(0.7, Outcome::AllOne),
            record(0.7, Outcome::Timeout),
            record(0.2, Outcome::AllOne),
        ];
        let acc = classification_accuracy(&recs, 0.5);
        assert_eq!((acc.correct, acc.evaluated, acc.timeouts), (1, 2, 1));
        assert_eq!(acc.value, 0.5);
    }

    #[test]
    fn presets() {
        assert_eq!(preset(Preset::AffinityDefault).params.p(), 0.2);
        assert_eq!(preset(Preset::SelfHealing).params.k(), 4);
        assert_eq!(preset(Preset::Transformation).params.k(), 3);
        let lin = preset(Preset::DensityLinear);
        assert_eq!(lin.params.phi().family(), &ProbabilityFamily::Linear);
        assert_eq!(lin.params.psi().family(), &ProbabilityFamily::Linear);
        assert_eq!(lin.params.p(), 0.1);
        assert_eq!((lin.width, lin.height), (200, 200));
        let exp = preset(Preset::DensityExponential);
        assert_eq!(exp.params.phi().family(), &ProbabilityFamily::Exponential);
        assert_eq!((exp.width, exp.height), (100, 100));
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!(matches!(
            "healing".parse::<Preset>(),
            Err(ExperimentError::UnknownPreset(_))
        ));
    }

    #[test]
    fn csv_output() {
        let mut buf = Vec::new();
        write_csv_to(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "seed,K,rho_initial,p,phi,psi,mode,outcome,iterations\n"
        );

        let mut r = record(0.123456789, Outcome::AllOne);
        r.phi = ProbabilityFamily::Table(vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let mut buf = Vec::new();
        write_csv_to(&[r.clone()], &mut buf).unwrap();
        let mut rdr = csv::Reader::from_reader(&buf[..]);
        let row = rdr.records().next().unwrap().unwrap();
        assert_eq!(&row[0], "0");
        assert_eq!(&row[1], "4");
        assert_eq!(&row[2], "0.123457");
        assert_eq!(row[3].parse::<f64>().unwrap(), r.p);
        assert_eq!(row[4].parse::<ProbabilityFamily>().unwrap(), r.phi);
        assert_eq!(&row[5], "linear");
        assert_eq!(&row[6], "at_least");
        assert_eq!(row[7].parse::<Outcome>().unwrap(), Outcome::AllOne);
        assert_eq!(&row[8], "10");
    }

    #[test]
    fn csv_files_are_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let spec = small(InitialSpec::Random { rho: 0.4 }, 4);
        let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        write_csv(&run_experiment(&spec).unwrap(), &a).unwrap();
        write_csv(&run_experiment(&spec).unwrap(), &b).unwrap();
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
        assert!(matches!(
            write_csv(&[], dir.path().join("no/such/dir.csv")),
            Err(ExperimentError::Io { .. })
        ));
    }
}
