//! Binary toroidal lattice.
//!
//! Cells are stored row-major as one byte per cell (`index = row * width + col`).
//! Every deterministic iteration order in the crate refers to this index.

use std::fmt;

use thiserror::Error;

/// Smallest accepted side length. Below this the wrapped Moore neighborhood
/// would visit the same physical cell more than once.
pub const MIN_DIM: usize = 3;

/// State of a single cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum CellState {
    Zero = 0,
    One = 1,
}

impl CellState {
    #[inline]
    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            0 => Some(CellState::Zero),
            1 => Some(CellState::One),
            _ => None,
        }
    }

    #[inline]
    pub fn bit(self) -> u8 {
        self as u8
    }

    #[inline]
    pub fn flipped(self) -> Self {
        match self {
            CellState::Zero => CellState::One,
            CellState::One => CellState::Zero,
        }
    }
}

impl fmt::Display for CellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bit())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GridError {
    #[error("grid dimensions {width}x{height} are below the {MIN_DIM}x{MIN_DIM} minimum")]
    TooSmall { width: usize, height: usize },
    #[error("cell buffer holds {actual} cells, expected {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("cell {index} holds {value}, expected 0 or 1")]
    InvalidCell { index: usize, value: u8 },
}

/// What went wrong while reading the text grid format.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("malformed header, expected `<width> <height>`")]
    MalformedHeader,
    #[error("invalid character {0:?}, expected '0' or '1'")]
    InvalidChar(char),
    #[error("row has {actual} cells, expected {expected}")]
    WrongLength { expected: usize, actual: usize },
    #[error("expected {expected} rows, found {actual}")]
    MissingRows { expected: usize, actual: usize },
    #[error("unexpected content after the last row")]
    TrailingContent,
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Parse failure with a 1-based line and column.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, column {column}: {kind}")]
pub struct GridParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Grid {
    width: usize,
    height: usize,
    cells: Vec<u8>,
}

impl Grid {
    /// A grid with every cell set to `state`.
    pub fn filled(width: usize, height: usize, state: CellState) -> Result<Self, GridError> {
        check_dims(width, height)?;
        Ok(Grid {
            width,
            height,
            cells: vec![state.bit(); width * height],
        })
    }

    pub fn from_cells(width: usize, height: usize, cells: Vec<u8>) -> Result<Self, GridError> {
        check_dims(width, height)?;
        if cells.len() != width * height {
            return Err(GridError::LengthMismatch {
                expected: width * height,
                actual: cells.len(),
            });
        }
        if let Some((index, &value)) = cells.iter().enumerate().find(|(_, &v)| v > 1) {
            return Err(GridError::InvalidCell { index, value });
        }
        Ok(Grid { width, height, cells })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    /// Always false; grids have at least nine cells.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Raw row-major cell bits, each 0 or 1.
    #[inline]
    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[u8] {
        &self.cells[row * self.width..(row + 1) * self.width]
    }

    /// Row-major index of a wrapped coordinate.
    #[inline]
    pub fn index_of(&self, row: i64, col: i64) -> usize {
        let r = row.rem_euclid(self.height as i64) as usize;
        let c = col.rem_euclid(self.width as i64) as usize;
        r * self.width + c
    }

    /// State at `(row mod height, col mod width)`; any integer coordinate is accepted.
    #[inline]
    pub fn get(&self, row: i64, col: i64) -> CellState {
        // cells only ever hold 0 or 1
        if self.cells[self.index_of(row, col)] == 0 {
            CellState::Zero
        } else {
            CellState::One
        }
    }

    #[inline]
    pub fn set(&mut self, row: i64, col: i64, state: CellState) {
        let i = self.index_of(row, col);
        self.cells[i] = state.bit();
    }

    pub fn count_ones(&self) -> usize {
        self.cells.iter().map(|&c| c as usize).sum()
    }

    /// Fraction of cells in state 1.
    pub fn density(&self) -> f64 {
        self.count_ones() as f64 / self.cells.len() as f64
    }

    /// `Some(state)` when every cell holds `state`.
    pub fn homogeneous_state(&self) -> Option<CellState> {
        let first = self.cells[0];
        if self.cells.iter().all(|&c| c == first) {
            CellState::from_bit(first)
        } else {
            None
        }
    }

    /// Number of the 8 Moore neighbors whose state differs from the cell's own.
    pub fn opposite_neighbor_count(&self, row: i64, col: i64) -> u8 {
        let center = self.cells[self.index_of(row, col)];
        let mut count = 0u8;
        for dr in -1..=1 {
            for dc in -1..=1 {
                if (dr, dc) != (0, 0) && self.cells[self.index_of(row + dr, col + dc)] != center {
                    count += 1;
                }
            }
        }
        count
    }

    /// Fills `out[c]` with the number of state-1 Moore neighbors of `(row, c)`.
    ///
    /// This is the fast path used by the engine: column sums over the three
    /// rows, then a sliding horizontal window minus the center.
    /// `colsum` is scratch space of at least `width` bytes.
    pub fn row_one_counts(&self, row: usize, colsum: &mut [u8], out: &mut [u8]) {
        let w = self.width;
        let up = self.row(if row == 0 { self.height - 1 } else { row - 1 });
        let mid = self.row(row);
        let down = self.row(if row + 1 == self.height { 0 } else { row + 1 });
        let colsum = &mut colsum[..w];
        let out = &mut out[..w];
        for (((s, &a), &b), &c) in colsum.iter_mut().zip(up).zip(mid).zip(down) {
            *s = a + b + c;
        }
        out[0] = colsum[w - 1] + colsum[0] + colsum[1] - mid[0];
        for c in 1..w - 1 {
            out[c] = colsum[c - 1] + colsum[c] + colsum[c + 1] - mid[c];
        }
        out[w - 1] = colsum[w - 2] + colsum[w - 1] + colsum[0] - mid[w - 1];
    }

    /// Mutable access for the engine's double buffer. Callers must only write 0 or 1.
    #[inline]
    pub(crate) fn cells_mut(&mut self) -> &mut [u8] {
        &mut self.cells
    }

    /// Every cell inverted.
    pub fn flipped(&self) -> Grid {
        Grid {
            width: self.width,
            height: self.height,
            cells: self.cells.iter().map(|&c| c ^ 1).collect(),
        }
    }

    /// Text format: `<width> <height>` header, then one line of `0`/`1` per row.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity((self.width + 1) * (self.height + 1) + 16);
        s.push_str(&format!("{} {}\n", self.width, self.height));
        for r in 0..self.height {
            s.extend(self.row(r).iter().map(|&c| if c == 0 { '0' } else { '1' }));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, GridParseError> {
        let err = |line, column, kind| GridParseError { line, column, kind };
        let mut lines = text.split('\n');
        let header = lines.next().unwrap_or("");
        let (width, height) = parse_header(header).ok_or_else(|| err(1, 1, ParseErrorKind::MalformedHeader))?;
        check_dims(width, height).map_err(|e| err(1, 1, e.into()))?;

        let mut cells = Vec::with_capacity(width * height);
        for r in 0..height {
            let line_no = r + 2;
            let line = match lines.next() {
                // the empty piece after the final newline is not a row
                Some(l) if !(l.is_empty() && lines.clone().next().is_none()) => l,
                _ => {
                    return Err(err(
                        line_no,
                        1,
                        ParseErrorKind::MissingRows {
                            expected: height,
                            actual: r,
                        },
                    ))
                }
            };
            let mut len = 0;
            for (c, ch) in line.chars().enumerate() {
                match ch {
                    '0' => cells.push(0),
                    '1' => cells.push(1),
                    other => return Err(err(line_no, c + 1, ParseErrorKind::InvalidChar(other))),
                }
                len += 1;
            }
            if len != width {
                return Err(err(
                    line_no,
                    len.min(width) + 1,
                    ParseErrorKind::WrongLength {
                        expected: width,
                        actual: len,
                    },
                ));
            }
        }
        // A final newline is expected but tolerated when missing.
        match (lines.next(), lines.next()) {
            (None, _) | (Some(""), None) => {}
            _ => return Err(err(height + 2, 1, ParseErrorKind::TrailingContent)),
        }
        Ok(Grid { width, height, cells })
    }
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let (w, h) = line.split_once(' ')?;
    let num = |s: &str| -> Option<usize> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        s.parse().ok()
    };
    Some((num(w)?, num(h)?))
}

fn check_dims(width: usize, height: usize) -> Result<(), GridError> {
    if width < MIN_DIM || height < MIN_DIM {
        Err(GridError::TooSmall { width, height })
    } else {
        Ok(())
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Grid {}x{}", self.width, self.height)?;
        for r in 0..self.height.min(32) {
            let row: String = self
                .row(r)
                .iter()
                .take(64)
                .map(|&c| if c == 0 { '.' } else { '#' })
                .collect();
            writeln!(f, "{row}")?;
        }
        Ok(())
    }
}
