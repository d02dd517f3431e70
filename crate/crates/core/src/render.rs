//! Plain-text PGM (P2) snapshots: state 0 is white (255), state 1 black (0).

use std::fs;
use std::io;
use std::path::Path;

use crate::grid::Grid;

pub fn to_pgm(grid: &Grid) -> String {
    let mut s = format!("P2\n{} {}\n255\n", grid.width(), grid.height());
    for r in 0..grid.height() {
        let row: Vec<&str> = grid.row(r).iter().map(|&c| if c == 0 { "255" } else { "0" }).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

pub fn write_pgm(grid: &Grid, path: impl AsRef<Path>) -> io::Result<()> {
    fs::write(path, to_pgm(grid))
}
