//! Bars-and-Stripes images.
//!
//! Pixel `(r, c)` of an `rows x cols` image maps to qubit `r * cols + c`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::qsim::{self, MAX_QUBITS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasSpec {
    rows: usize,
    cols: usize,
}

impl BasSpec {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Argument(format!("grid {rows}x{cols} is empty")));
        }
        if rows * cols > MAX_QUBITS {
            return Err(Error::Size(rows * cols));
        }
        Ok(Self { rows, cols })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn n_pixels(&self) -> usize {
        self.rows * self.cols
    }

    pub fn qubit(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    /// `2^rows + 2^cols - 2`.
    pub fn pattern_count(&self) -> usize {
        (1 << self.rows) + (1 << self.cols) - 2
    }

    /// Validity predicate on a basis index.
    pub fn is_valid_index(&self, index: usize) -> bool {
        let px = |r: usize, c: usize| qsim::bit_of(index, self.qubit(r, c));
        let stripes = (1..self.rows).all(|r| (0..self.cols).all(|c| px(r, c) == px(0, c)));
        let bars = (1..self.cols).all(|c| (0..self.rows).all(|r| px(r, c) == px(r, 0)));
        stripes || bars
    }
}

/// True iff every row is identical or every column is identical.
pub fn is_bas(bits: &[u8], spec: &BasSpec) -> Result<bool> {
    if bits.len() != spec.n_pixels() {
        return Err(Error::Argument(format!(
            "bitstring has {} pixels, grid needs {}",
            bits.len(),
            spec.n_pixels()
        )));
    }
    Ok(spec.is_valid_index(qsim::bits_to_index(bits)?))
}

/// All valid patterns, sorted by basis index. Built constructively from
/// stripe (row-constant) and bar (column-constant) generators.
pub fn enumerate_bas(spec: &BasSpec) -> Vec<usize> {
    let (rows, cols) = (spec.rows, spec.cols);
    let mut out = Vec::with_capacity(spec.pattern_count() + 2);
    // each row is a copy of the column pattern `cols_on`
    for cols_on in 0..1usize << cols {
        let mut idx = 0;
        for r in 0..rows {
            idx |= cols_on << (r * cols);
        }
        out.push(idx);
    }
    // each column is a copy of the row pattern `rows_on`
    let full_row = (1usize << cols) - 1;
    for rows_on in 0..1usize << rows {
        let idx = (0..rows)
            .filter(|r| rows_on >> r & 1 == 1)
            .fold(0, |acc, r| acc | full_row << (r * cols));
        out.push(idx);
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Uniform over valid patterns, zero elsewhere.
pub fn target_distribution(spec: &BasSpec) -> Vec<f64> {
    let valid = enumerate_bas(spec);
    let w = 1.0 / valid.len() as f64;
    let mut pi = vec![0.0; 1 << spec.n_pixels()];
    for idx in valid {
        pi[idx] = w;
    }
    pi
}

/// `count` i.i.d. uniform draws from the valid patterns.
pub fn sample_dataset<R: Rng + ?Sized>(spec: &BasSpec, count: usize, rng: &mut R) -> Vec<usize> {
    let valid = enumerate_bas(spec);
    (0..count)
        .map(|_| valid[rng.gen_range(0..valid.len())])
        .collect()
}

/// Pattern dump, one row-major bitstring per line.
pub fn dump_patterns(spec: &BasSpec) -> String {
    enumerate_bas(spec)
        .into_iter()
        .map(|idx| qsim::format_bitstring(idx, spec.n_pixels()) + "\n")
        .collect()
}
