//! The deterministic threshold rule `f`, the stochastic rule `g`,
//! and the support-indexed probability functions that drive `g`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::grid::CellState;

/// Largest meaningful threshold: a cell has eight Moore neighbors.
pub const MAX_K: u8 = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RuleError {
    #[error("K = {0} is outside 0..=8")]
    KOutOfRange(u8),
    #[error("support x = {x} is outside 0..={k}")]
    SupportOutOfRange { x: u8, k: u8 },
    #[error("probability table has {actual} entries, expected K + 1 = {expected}")]
    TableLength { expected: usize, actual: usize },
    #[error("probability table entry {index} = {value} is outside [0, 1]")]
    TableValue { index: usize, value: f64 },
    #[error("p = {0} is outside [0, 1]")]
    POutOfRange(f64),
    #[error("phi and psi are built for K = {phi}/{psi}, rule uses K = {k}")]
    KMismatch { k: u8, phi: u8, psi: u8 },
    #[error("unknown probability function `{0}` (expected log, exp, linear, zero or table:v0,...,vK)")]
    UnknownFamily(String),
    #[error("unknown threshold mode `{0}` (expected at_least or exact)")]
    UnknownMode(String),
}

/// Shape of a probability function over the support `x ∈ {0..K}`.
#[derive(Clone, Debug, PartialEq)]
pub enum ProbabilityFamily {
    Zero,
    /// 0 for `x <= 1`, `ln x / ln K` above.
    Logarithmic,
    /// 0 at `x = 0`, `e^(x - K)` above.
    Exponential,
    /// `x / K`.
    Linear,
    /// Explicit values for `x = 0..=K`.
    Table(Vec<f64>),
}

impl ProbabilityFamily {
    fn value(&self, k: u8, x: u8) -> f64 {
        let (kf, xf) = (k as f64, x as f64);
        match self {
            ProbabilityFamily::Zero => 0.0,
            ProbabilityFamily::Logarithmic => {
                if x <= 1 {
                    0.0
                } else {
                    xf.ln() / kf.ln()
                }
            }
            ProbabilityFamily::Exponential => {
                if x == 0 {
                    0.0
                } else {
                    (xf - kf).exp()
                }
            }
            // K = 0 leaves only x = 0, taken as no support
            ProbabilityFamily::Linear => {
                if k == 0 {
                    0.0
                } else {
                    xf / kf
                }
            }
            ProbabilityFamily::Table(t) => t[x as usize],
        }
    }
}

impl fmt::Display for ProbabilityFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbabilityFamily::Zero => f.write_str("zero"),
            ProbabilityFamily::Logarithmic => f.write_str("log"),
            ProbabilityFamily::Exponential => f.write_str("exp"),
            ProbabilityFamily::Linear => f.write_str("linear"),
            ProbabilityFamily::Table(t) => {
                f.write_str("table:")?;
                for (i, v) in t.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for ProbabilityFamily {
    type Err = RuleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zero" => Ok(ProbabilityFamily::Zero),
            "log" => Ok(ProbabilityFamily::Logarithmic),
            "exp" => Ok(ProbabilityFamily::Exponential),
            "linear" => Ok(ProbabilityFamily::Linear),
            _ => {
                let body = s
                    .strip_prefix("table:")
                    .ok_or_else(|| RuleError::UnknownFamily(s.to_string()))?;
                let values = body
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| RuleError::UnknownFamily(s.to_string()))?;
                if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
                    return Err(RuleError::TableValue { index, value });
                }
                Ok(ProbabilityFamily::Table(values))
            }
        }
    }
}

/// A probability function bound to a threshold `K`, with values precomputed
/// for every support `0..=K`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityFunction {
    family: ProbabilityFamily,
    k: u8,
    values: [f64; 9],
}

impl ProbabilityFunction {
    pub fn new(family: ProbabilityFamily, k: u8) -> Result<Self, RuleError> {
        if k > MAX_K {
            return Err(RuleError::KOutOfRange(k));
        }
        if let ProbabilityFamily::Table(t) = &family {
            if t.len() != k as usize + 1 {
                return Err(RuleError::TableLength {
                    expected: k as usize + 1,
                    actual: t.len(),
                });
            }
            if let Some((index, &value)) = t.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
                return Err(RuleError::TableValue { index, value });
            }
        }
        let mut values = [0.0; 9];
        for x in 0..=k {
            values[x as usize] = family.value(k, x);
        }
        Ok(ProbabilityFunction { family, k, values })
    }

    pub fn family(&self) -> &ProbabilityFamily {
        &self.family
    }

    pub fn k(&self) -> u8 {
        self.k
    }

    /// Probability at support `x`; `x` must lie in `0..=K`.
    pub fn eval(&self, x: u8) -> Result<f64, RuleError> {
        if x > self.k {
            return Err(RuleError::SupportOutOfRange { x, k: self.k });
        }
        Ok(self.values[x as usize])
    }

    /// Values for `x = 0..=K`.
    pub fn values(&self) -> &[f64] {
        &self.values[..=self.k as usize]
    }
}

/// `phi`: chance that a 1-cell with `x` zero-neighbors becomes 0 under `g`.
pub fn eval_phi(phi: &ProbabilityFunction, x: u8) -> Result<f64, RuleError> {
    phi.eval(x)
}

/// `psi`: chance that a 0-cell with `x` one-neighbors becomes 1 under `g`.
pub fn eval_psi(psi: &ProbabilityFunction, x: u8) -> Result<f64, RuleError> {
    psi.eval(x)
}

/// How `f` reads its 0 → 1 condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum ThresholdMode {
    /// At least `8 - K` one-neighbors.
    #[default]
    AtLeast,
    /// Exactly `8 - K` one-neighbors.
    Exact,
}

impl fmt::Display for ThresholdMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThresholdMode::AtLeast => "at_least",
            ThresholdMode::Exact => "exact",
        })
    }
}

impl FromStr for ThresholdMode {
    type Err = RuleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "at_least" => Ok(ThresholdMode::AtLeast),
            "exact" => Ok(ThresholdMode::Exact),
            _ => Err(RuleError::UnknownMode(s.to_string())),
        }
    }
}

/// The model's four parameters plus the reading of `f`.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleParams {
    k: u8,
    phi: ProbabilityFunction,
    psi: ProbabilityFunction,
    p: f64,
    mode: ThresholdMode,
}

impl RuleParams {
    pub fn new(
        k: u8,
        phi: ProbabilityFunction,
        psi: ProbabilityFunction,
        p: f64,
        mode: ThresholdMode,
    ) -> Result<Self, RuleError> {
        if k > MAX_K {
            return Err(RuleError::KOutOfRange(k));
        }
        if phi.k() != k || psi.k() != k {
            return Err(RuleError::KMismatch {
                k,
                phi: phi.k(),
                psi: psi.k(),
            });
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(RuleError::POutOfRange(p));
        }
        Ok(RuleParams { k, phi, psi, p, mode })
    }

    /// Builds both probability functions for `k` from their families.
    pub fn from_families(
        k: u8,
        phi: ProbabilityFamily,
        psi: ProbabilityFamily,
        p: f64,
        mode: ThresholdMode,
    ) -> Result<Self, RuleError> {
        let phi = ProbabilityFunction::new(phi, k)?;
        let psi = ProbabilityFunction::new(psi, k)?;
        Self::new(k, phi, psi, p, mode)
    }

    pub fn k(&self) -> u8 {
        self.k
    }

    pub fn phi(&self) -> &ProbabilityFunction {
        &self.phi
    }

    pub fn psi(&self) -> &ProbabilityFunction {
        &self.psi
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn mode(&self) -> ThresholdMode {
        self.mode
    }

    pub fn with_p(mut self, p: f64) -> Result<Self, RuleError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(RuleError::POutOfRange(p));
        }
        self.p = p;
        Ok(self)
    }

    pub fn with_mode(mut self, mode: ThresholdMode) -> Self {
        self.mode = mode;
        self
    }

    /// Probability that a cell in `state` with `x_opposite` opposite neighbors
    /// flips under one application of `g`.
    pub fn g_flip_probability(&self, state: CellState, x_opposite: u8) -> f64 {
        if x_opposite > self.k {
            return 0.0;
        }
        match state {
            CellState::One => self.phi.values[x_opposite as usize],
            CellState::Zero => self.psi.values[x_opposite as usize],
        }
    }
}

/// Deterministic rule `f` for one cell.
///
/// A 1-cell with more than `K` zero-neighbors becomes 0; a 0-cell with
/// `8 - K` one-neighbors (at least or exactly, per `mode`) becomes 1.
pub fn f_transition(state: CellState, x_opposite: u8, k: u8, mode: ThresholdMode) -> CellState {
    match state {
        CellState::One if x_opposite > k => CellState::Zero,
        CellState::Zero => {
            let need = MAX_K.saturating_sub(k);
            let fires = match mode {
                ThresholdMode::AtLeast => x_opposite >= need,
                ThresholdMode::Exact => x_opposite == need,
            };
            if fires {
                CellState::One
            } else {
                CellState::Zero
            }
        }
        s => s,
    }
}

/// Stochastic rule `g` for one cell, given a uniform variate `u ∈ [0, 1)`.
///
/// Supports beyond `K` leave the cell unchanged.
pub fn g_transition(state: CellState, x_opposite: u8, params: &RuleParams, u: f64) -> CellState {
    if u < params.g_flip_probability(state, x_opposite) {
        state.flipped()
    } else {
        state
    }
}
