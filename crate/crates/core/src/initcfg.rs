//! Initial configurations: random at an exact density, minority blocks, and files.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::grid::{CellState, Grid, GridError, GridParseError};
use crate::rng::{RngStream, StreamRole};

#[derive(Debug, Error)]
pub enum InitError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("rho = {0} is outside [0, 1]")]
    RhoOutOfRange(f64),
    #[error("block of {count} cells does not fit in {cells} cells")]
    BlockTooLarge { count: usize, cells: usize },
    #[error("block count must be positive")]
    EmptyBlock,
    #[error("square block needs a perfect-square count, got {0}")]
    NotSquare(usize),
    #[error("square block of side {side} exceeds the {width}x{height} grid")]
    SquareTooWide { side: usize, width: usize, height: usize },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: GridParseError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum BlockKind {
    /// `count` cells laid out row-major from the anchor.
    Run,
    /// A `sqrt(count)` square with its top-left corner at the anchor.
    #[default]
    Square,
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BlockKind::Run => "run",
            BlockKind::Square => "square",
        })
    }
}

impl FromStr for BlockKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "run" => Ok(BlockKind::Run),
            "square" => Ok(BlockKind::Square),
            other => Err(format!("unknown block shape `{other}` (expected run or square)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct BlockShape {
    pub kind: BlockKind,
    /// `(row, col)` of the first block cell.
    pub anchor: (usize, usize),
}

/// A grid with exactly `round(rho * width * height)` ones, placed by a seeded
/// partial Fisher-Yates shuffle over cell indices.
///
/// Draw `i` of the shuffle is `below(step 0, Init, i, N - i)` of the seed's stream.
pub fn random_density(width: usize, height: usize, rho: f64, seed: u64) -> Result<Grid, InitError> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(InitError::RhoOutOfRange(rho));
    }
    let n = width * height;
    let ones = ((rho * n as f64).round() as usize).min(n);
    let stream = RngStream::new(seed).at_step(0);
    let mut order: Vec<u32> = (0..n as u32).collect();
    for i in 0..ones {
        let j = i + stream.below(StreamRole::Init, i as u64, (n - i) as u64) as usize;
        order.swap(i, j);
    }
    let mut cells = vec![0u8; n];
    for &idx in &order[..ones] {
        cells[idx as usize] = 1;
    }
    Ok(Grid::from_cells(width, height, cells)?)
}

fn exact_sqrt(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n).then_some(r)
}

/// `count` cells of `minority` on a background of the opposite state.
/// Blocks wrap across the periodic boundary.
pub fn block_minority(
    width: usize,
    height: usize,
    minority: CellState,
    count: usize,
    shape: BlockShape,
) -> Result<Grid, InitError> {
    let mut grid = Grid::filled(width, height, minority.flipped())?;
    let n = width * height;
    if count == 0 {
        return Err(InitError::EmptyBlock);
    }
    if count > n {
        return Err(InitError::BlockTooLarge { count, cells: n });
    }
    let (ar, ac) = (shape.anchor.0 as i64, shape.anchor.1 as i64);
    match shape.kind {
        BlockKind::Run => {
            let start = grid.index_of(ar, ac);
            for k in 0..count {
                let i = (start + k) % n;
                grid.set((i / width) as i64, (i % width) as i64, minority);
            }
        }
        BlockKind::Square => {
            let side = exact_sqrt(count).ok_or(InitError::NotSquare(count))?;
            if side > width.min(height) {
                return Err(InitError::SquareTooWide { side, width, height });
            }
            for dr in 0..side as i64 {
                for dc in 0..side as i64 {
                    grid.set(ar + dr, ac + dc, minority);
                }
            }
        }
    }
    Ok(grid)
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<Grid, InitError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| InitError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Grid::from_text(&text).map_err(|source| InitError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

pub fn save_grid(grid: &Grid, path: impl AsRef<Path>) -> Result<(), InitError> {
    let path = path.as_ref();
    fs::write(path, grid.to_text()).map_err(|source| InitError::Io {
        path: path.to_path_buf(),
        source,
    })
}
