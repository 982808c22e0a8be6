//! Protomatrices, edge-spreading splits, spatial coupling and code rates.
//!
//! A [`Protomatrix`] stores parallel-edge multiplicities between H-CNs (rows)
//! and P-VNs (columns). A [`SplitSet`] spreads a base matrix over `W + 1`
//! parts, and the coupling constructors stack those parts into terminated,
//! tail-biting or convolutional-window layouts.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Small nonnegative integer matrix of edge multiplicities (at most 255 per cell).
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Protomatrix {
    rows: usize,
    cols: usize,
    entries: Vec<u8>,
}

impl Protomatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Protomatrix {
            rows,
            cols,
            entries: vec![0; rows * cols],
        }
    }

    /// Builds a matrix from row slices. All rows must have the same length.
    pub fn from_rows<R: AsRef<[u32]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Protomatrix::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected_rows: rows.len(),
                    expected_cols: cols,
                    rows: rows.len(),
                    cols: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v)?;
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.entries[row * self.cols + col] as u32
    }

    pub fn set(&mut self, row: usize, col: usize, value: u32) -> Result<()> {
        if value > u8::MAX as u32 {
            return Err(Error::EntryTooLarge {
                row,
                col,
                value: value as u64,
            });
        }
        self.entries[row * self.cols + col] = value as u8;
        Ok(())
    }

    pub fn row(&self, row: usize) -> impl Iterator<Item = u32> + '_ {
        self.entries[row * self.cols..(row + 1) * self.cols]
            .iter()
            .map(|&v| v as u32)
    }

    pub fn row_weight(&self, row: usize) -> u32 {
        self.row(row).sum()
    }

    pub fn col_weight(&self, col: usize) -> u32 {
        (0..self.rows).map(|i| self.get(i, col)).sum()
    }

    pub fn row_weights(&self) -> Vec<u32> {
        (0..self.rows).map(|i| self.row_weight(i)).collect()
    }

    pub fn max_entry(&self) -> u32 {
        self.entries.iter().copied().max().unwrap_or(0) as u32
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&v| v == 0)
    }

    pub fn same_shape(&self, other: &Protomatrix) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    fn shape_error(&self, other: &Protomatrix) -> Error {
        Error::DimensionMismatch {
            expected_rows: self.rows,
            expected_cols: self.cols,
            rows: other.rows,
            cols: other.cols,
        }
    }

    /// Element-wise sum.
    pub fn checked_add(&self, other: &Protomatrix) -> Result<Protomatrix> {
        if !self.same_shape(other) {
            return Err(self.shape_error(other));
        }
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j) + other.get(i, j))?;
            }
        }
        Ok(out)
    }

    /// Checks that every row weighs `order + 2`, the H-CN degree of an
    /// order-`order` Hadamard check node.
    pub fn check_hadamard_rows(&self, order: u32) -> Result<()> {
        let expected = order + 2;
        for i in 0..self.rows {
            let weight = self.row_weight(i);
            if weight != expected {
                return Err(Error::RowWeight {
                    row: i,
                    weight,
                    order,
                    expected,
                });
            }
        }
        Ok(())
    }

    /// Copies `block` into this matrix with its top-left corner at `(row0, col0)`.
    fn paste(&mut self, block: &Protomatrix, row0: usize, col0: usize) {
        for i in 0..block.rows {
            let dst = (row0 + i) * self.cols + col0;
            let src = i * block.cols;
            self.entries[dst..dst + block.cols].copy_from_slice(&block.entries[src..src + block.cols]);
        }
    }

    /// Extracts the `rows x cols` block starting at `(row0, col0)`.
    pub fn block(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> Protomatrix {
        let mut out = Protomatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                out.entries[i * cols + j] = self.entries[(row0 + i) * self.cols + col0 + j];
            }
        }
        out
    }
}

impl fmt::Debug for Protomatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Protomatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            let row: Vec<String> = self.row(i).map(|v| v.to_string()).collect();
            write!(f, "{}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

impl fmt::Display for Protomatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).map(|v| v.to_string()).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// A base protomatrix together with its edge-spreading parts `B_0 ... B_W`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SplitSet {
    base: Protomatrix,
    parts: Vec<Protomatrix>,
}

impl SplitSet {
    /// Pairs a base with its parts. Only shapes are checked here; call
    /// [`SplitSet::validate`] for the sum constraint.
    pub fn new(base: Protomatrix, parts: Vec<Protomatrix>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidParameter("a split needs at least one part".into()));
        }
        if let Some(bad) = parts.iter().find(|p| !p.same_shape(&base)) {
            return Err(base.shape_error(bad));
        }
        Ok(SplitSet { base, parts })
    }

    /// Builds a split whose base is the element-wise sum of `parts`.
    pub fn from_parts(parts: Vec<Protomatrix>) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidParameter("a split needs at least one part".into()))?;
        let mut base = Protomatrix::zeros(first.rows(), first.cols());
        for p in &parts {
            base = base.checked_add(p)?;
        }
        SplitSet::new(base, parts)
    }

    /// The degenerate split `{B, 0, ..., 0}`.
    pub fn trivial(base: Protomatrix, width: usize) -> Self {
        let mut parts = vec![base.clone()];
        parts.extend((0..width).map(|_| Protomatrix::zeros(base.rows(), base.cols())));
        SplitSet { base, parts }
    }

    pub fn base(&self) -> &Protomatrix {
        &self.base
    }

    pub fn parts(&self) -> &[Protomatrix] {
        &self.parts
    }

    pub fn part(&self, i: usize) -> &Protomatrix {
        &self.parts[i]
    }

    pub(crate) fn parts_mut(&mut self) -> &mut [Protomatrix] {
        &mut self.parts
    }

    /// Coupling width `W` (number of parts minus one).
    pub fn width(&self) -> usize {
        self.parts.len() - 1
    }

    /// Entries of every part at one cell, in part order.
    pub fn composition(&self, row: usize, col: usize) -> Vec<u32> {
        self.parts.iter().map(|p| p.get(row, col)).collect()
    }

    /// Checks that the parts sum to the base, reporting the first offending cell
    /// in row-major order.
    pub fn validate(&self) -> Result<()> {
        validate_split(self)
    }
}

/// Checks `sum(parts) == base` entry by entry.
pub fn validate_split(split: &SplitSet) -> Result<()> {
    let base = &split.base;
    if let Some(bad) = split.parts.iter().find(|p| !p.same_shape(base)) {
        return Err(base.shape_error(bad));
    }
    for i in 0..base.rows() {
        for j in 0..base.cols() {
            let sum: u32 = split.parts.iter().map(|p| p.get(i, j)).sum();
            if sum != base.get(i, j) {
                return Err(Error::SplitSum {
                    row: i,
                    col: j,
                    base: base.get(i, j),
                    sum,
                });
            }
        }
    }
    Ok(())
}

/// How a coupled chain of protographs is closed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layout {
    Terminated,
    TailBiting,
    /// The leading `sections x sections` block corner of the semi-infinite
    /// convolutional protomatrix.
    ConvolutionalWindow,
}

/// A coupled protomatrix with its block geometry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoupledProtomatrix {
    pub layout: Layout,
    pub coupling_length: usize,
    pub width: usize,
    /// Row count `m` and column count `n` of one block.
    pub block_rows: usize,
    pub block_cols: usize,
    /// Row weight `d` of the base matrix (the largest possible row weight).
    pub base_row_weight: u32,
    pub matrix: Protomatrix,
}

impl CoupledProtomatrix {
    /// Effective per-row weights `d_1 <= d`.
    pub fn row_weights(&self) -> Vec<u32> {
        self.matrix.row_weights()
    }

    pub fn block(&self, block_row: usize, block_col: usize) -> Protomatrix {
        self.matrix.block(
            block_row * self.block_rows,
            block_col * self.block_cols,
            self.block_rows,
            self.block_cols,
        )
    }
}

fn base_row_weight(split: &SplitSet) -> u32 {
    split.base().row_weights().into_iter().max().unwrap_or(0)
}

/// Stacks `L` copies of the split into the banded terminated matrix of size
/// `m(L+W) x nL`: block `(t, s)` holds `B_{t-s}` when `0 <= t-s <= W`.
pub fn couple_terminated(split: &SplitSet, coupling_length: usize) -> Result<CoupledProtomatrix> {
    if coupling_length == 0 {
        return Err(Error::InvalidParameter("coupling length must be at least 1".into()));
    }
    let (m, n, w) = (split.base().rows(), split.base().cols(), split.width());
    let mut matrix = Protomatrix::zeros(m * (coupling_length + w), n * coupling_length);
    for s in 0..coupling_length {
        for (i, part) in split.parts().iter().enumerate() {
            matrix.paste(part, (s + i) * m, s * n);
        }
    }
    Ok(CoupledProtomatrix {
        layout: Layout::Terminated,
        coupling_length,
        width: w,
        block_rows: m,
        block_cols: n,
        base_row_weight: base_row_weight(split),
        matrix,
    })
}

/// Couples `L > W` copies with end-to-end wrap-around; the result is `mL x nL`.
pub fn couple_tailbiting(split: &SplitSet, coupling_length: usize) -> Result<CoupledProtomatrix> {
    let w = split.width();
    if coupling_length <= w {
        return Err(Error::InvalidParameter(format!(
            "tail-biting coupling needs L > W (L = {coupling_length}, W = {w})"
        )));
    }
    let (m, n) = (split.base().rows(), split.base().cols());
    let mut matrix = Protomatrix::zeros(m * coupling_length, n * coupling_length);
    for s in 0..coupling_length {
        for (i, part) in split.parts().iter().enumerate() {
            matrix.paste(part, ((s + i) % coupling_length) * m, s * n);
        }
    }
    Ok(CoupledProtomatrix {
        layout: Layout::TailBiting,
        coupling_length,
        width: w,
        block_rows: m,
        block_cols: n,
        base_row_weight: base_row_weight(split),
        matrix,
    })
}

/// The first `sections` block rows and columns of the semi-infinite
/// convolutional protomatrix.
pub fn convolutional_window(split: &SplitSet, sections: usize) -> Result<CoupledProtomatrix> {
    if sections == 0 {
        return Err(Error::InvalidParameter("window must span at least one section".into()));
    }
    let (m, n, w) = (split.base().rows(), split.base().cols(), split.width());
    let mut matrix = Protomatrix::zeros(m * sections, n * sections);
    for s in 0..sections {
        for (i, part) in split.parts().iter().enumerate() {
            if s + i < sections {
                matrix.paste(part, (s + i) * m, s * n);
            }
        }
    }
    Ok(CoupledProtomatrix {
        layout: Layout::ConvolutionalWindow,
        coupling_length: sections,
        width: w,
        block_rows: m,
        block_cols: n,
        base_row_weight: base_row_weight(split),
        matrix,
    })
}

/// An exact code rate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rate(Ratio<i128>);

impl Rate {
    pub fn new(numerator: i128, denominator: i128) -> Self {
        Rate(Ratio::new(numerator, denominator))
    }

    pub fn numerator(&self) -> i128 {
        *self.0.numer()
    }

    pub fn denominator(&self) -> i128 {
        *self.0.denom()
    }

    pub fn ratio(&self) -> Ratio<i128> {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.numerator() as f64 / self.denominator() as f64
    }

    /// Decimal rendering with `places` digits, rounding half to even.
    pub fn round_half_even(&self, places: u32) -> String {
        let (p, q) = (self.numerator(), self.denominator());
        let negative = p < 0;
        let p = p.abs();
        let scale = 10i128.pow(places);
        let scaled = p * scale;
        let mut digits = scaled / q;
        let twice_rem = 2 * (scaled % q);
        if twice_rem > q || (twice_rem == q && digits % 2 == 1) {
            digits += 1;
        }
        let int_part = digits / scale;
        let frac = digits % scale;
        let sign = if negative && digits != 0 { "-" } else { "" };
        if places == 0 {
            format!("{sign}{int_part}")
        } else {
            format!("{sign}{int_part}.{frac:0width$}", width = places as usize)
        }
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{} (~{})", self.numerator(), self.denominator(), self.round_half_even(4))
    }
}

/// Number of D1H-VNs attached to each H-CN for a Hadamard order.
pub fn hadamard_parity_count(order: u32) -> i128 {
    let q = 1i128 << order;
    if order.is_multiple_of(2) {
        q - order as i128 - 2
    } else {
        q - 2
    }
}

/// Rate of the PLDPC-Hadamard block code, `(n-m)/(n + m * parity_count)`.
pub fn rate_block(base: &Protomatrix, order: u32) -> Result<Rate> {
    base.check_hadamard_rows(order)?;
    let (m, n) = (base.rows() as i128, base.cols() as i128);
    positive_rate(n - m, n + m * hadamard_parity_count(order))
}

/// Rate of the terminated coupled code of length `L` and width `W`.
pub fn rate_terminated(base: &Protomatrix, order: u32, width: usize, coupling_length: usize) -> Result<Rate> {
    base.check_hadamard_rows(order)?;
    if coupling_length == 0 {
        return Err(Error::InvalidParameter("coupling length must be at least 1".into()));
    }
    let (m, n) = (base.rows() as i128, base.cols() as i128);
    let (l, w) = (coupling_length as i128, width as i128);
    let checks = m * (l + w);
    positive_rate(n * l - checks, n * l + checks * hadamard_parity_count(order))
}

fn positive_rate(numerator: i128, denominator: i128) -> Result<Rate> {
    if numerator <= 0 || denominator <= 0 {
        return Err(Error::NonPositiveRate {
            numerator,
            denominator,
        });
    }
    Ok(Rate::new(numerator, denominator))
}

/// A split together with its declared Hadamard order; the unit of the
/// plain-text interchange format.
///
/// The format is a header line `m n W r` followed by `W + 1` blocks of `m`
/// rows with `n` whitespace-separated integers. Blank lines and `#` comments
/// are ignored. The base is the sum of the blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeDesign {
    pub order: u32,
    pub split: SplitSet,
}

impl CodeDesign {
    pub fn new(order: u32, split: SplitSet) -> Self {
        CodeDesign { order, split }
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        std::fs::read_to_string(path)?.parse()
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_string())?;
        Ok(())
    }
}

impl fmt::Display for CodeDesign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base = self.split.base();
        writeln!(f, "{} {} {} {}", base.rows(), base.cols(), self.split.width(), self.order)?;
        for (i, part) in self.split.parts().iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{part}")?;
        }
        Ok(())
    }
}

impl FromStr for CodeDesign {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        let parse_ints = |line_no: usize, line: &str| -> Result<Vec<u32>> {
            line.split_whitespace()
                .map(|tok| {
                    tok.parse::<u32>().map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("expected a nonnegative integer, found {tok:?}"),
                    })
                })
                .collect()
        };

        let (line_no, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let header = parse_ints(line_no, header)?;
        if header.len() != 4 {
            return Err(Error::Parse {
                line: line_no,
                message: "header must be `m n W r`".into(),
            });
        }
        let (m, n, w, order) = (header[0] as usize, header[1] as usize, header[2] as usize, header[3]);
        let mut parts = Vec::with_capacity(w + 1);
        for _ in 0..=w {
            let mut rows = Vec::with_capacity(m);
            for _ in 0..m {
                let (line_no, line) = lines.next().ok_or(Error::Parse {
                    line: line_no,
                    message: format!("expected {} blocks of {m} rows", w + 1),
                })?;
                let row = parse_ints(line_no, line)?;
                if row.len() != n {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("expected {n} entries, found {}", row.len()),
                    });
                }
                rows.push(row);
            }
            parts.push(if m == 0 {
                Protomatrix::zeros(0, n)
            } else {
                Protomatrix::from_rows(&rows)?
            });
        }
        if let Some((line_no, _)) = lines.next() {
            return Err(Error::Parse {
                line: line_no,
                message: "trailing data after the last block".into(),
            });
        }
        Ok(CodeDesign {
            order,
            split: SplitSet::from_parts(parts)?,
        })
    }
}
