//! Two-step quasi-cyclic lifting.
//!
//! Every edge of a protomatrix cell becomes a cyclic `z1 x z1` permutation
//! (distinct offsets within a cell), and every `1` of that permutation
//! becomes a `z2 x z2` circulant. Expanded row `(u*z1 + a)*z2 + x` of an
//! edge at cell `(u, v)` with offset `o` and shifts `s` connects to column
//! `(v*z1 + (a+o) % z1)*z2 + (x + s[a]) % z2`.

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pexit::mix;
use crate::protograph::Protomatrix;

/// One protograph edge after lifting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftedEdge {
    pub row: usize,
    pub col: usize,
    /// Stage-1 cyclic offset in `[0, z1)`.
    pub offset: u32,
    /// Stage-2 circulant shift for each stage-1 row, each in `[0, z2)`.
    pub shifts: Vec<u32>,
}

/// Sparse expansion of a lifted protomatrix.
#[derive(Clone, PartialEq, Eq)]
pub struct QcParityMatrix {
    base_rows: usize,
    base_cols: usize,
    z1: usize,
    z2: usize,
    edges: Vec<LiftedEdge>,
    // first edge of each base row; edges are ordered by (row, col)
    row_start: Vec<usize>,
    row_ptr: Vec<usize>,
    row_cols: Vec<u32>,
    col_ptr: Vec<usize>,
    col_rows: Vec<u32>,
}

impl fmt::Debug for QcParityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "QcParityMatrix {{ base: {}x{}, z1: {}, z2: {}, edges: {} }}",
            self.base_rows,
            self.base_cols,
            self.z1,
            self.z2,
            self.edges.len()
        )
    }
}

/// Outcome of a girth search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Girth {
    Exact(usize),
    /// No cycle of length up to and including the bound exists.
    Above(usize),
}

impl Girth {
    /// True when the girth is known to be at least `g`.
    pub fn at_least(self, g: usize) -> bool {
        match self {
            Girth::Exact(x) => x >= g,
            Girth::Above(x) => x + 2 >= g,
        }
    }
}

impl fmt::Display for Girth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Girth::Exact(g) => write!(f, "{g}"),
            Girth::Above(g) => write!(f, ">{g}"),
        }
    }
}

/// What [`lift_screened`] had to do to find a lift.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LiftReport {
    pub attempts: usize,
    pub girth: Girth,
    /// Whether the returned lift reached the requested girth.
    pub met: bool,
}

/// Lifts `proto` with factors `z1` and `z2`. Deterministic in `seed`.
pub fn lift(proto: &Protomatrix, z1: usize, z2: usize, seed: u64) -> Result<QcParityMatrix> {
    if z2 == 0 || z1 == 0 {
        return Err(Error::InvalidParameter("lifting factors must be positive".into()));
    }
    let max_entry = proto.max_entry();
    if (max_entry as usize) > z1 {
        return Err(Error::LiftTooSmall { z1, max_entry });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..proto.rows() {
        for v in 0..proto.cols() {
            let b = proto.get(u, v) as usize;
            if b == 0 {
                continue;
            }
            for offset in sample(&mut rng, z1, b).into_iter() {
                let shifts = (0..z1).map(|_| rng.random_range(0..z2 as u32)).collect();
                edges.push(LiftedEdge {
                    row: u,
                    col: v,
                    offset: offset as u32,
                    shifts,
                });
            }
        }
    }
    QcParityMatrix::from_edges(proto.rows(), proto.cols(), z1, z2, edges)
}

/// Draws lifts until one has girth at least `min_girth`, trying at most
/// `retries` seeds derived from `seed`. If none qualifies the first lift with
/// the largest girth seen is returned and `met` is false.
pub fn lift_screened(
    proto: &Protomatrix,
    z1: usize,
    z2: usize,
    seed: u64,
    min_girth: usize,
    retries: usize,
) -> Result<(QcParityMatrix, LiftReport)> {
    let bound = min_girth.max(4);
    let mut best: Option<(QcParityMatrix, Girth)> = None;
    let rank = |g: Girth| match g {
        Girth::Exact(x) => x,
        Girth::Above(x) => x + 2,
    };
    for attempt in 0..retries.max(1) {
        let h = lift(proto, z1, z2, mix(seed, attempt as u64))?;
        let g = h.girth(bound);
        if g.at_least(min_girth) {
            return Ok((
                h,
                LiftReport {
                    attempts: attempt + 1,
                    girth: g,
                    met: true,
                },
            ));
        }
        if best.as_ref().is_none_or(|(_, b)| rank(g) > rank(*b)) {
            best = Some((h, g));
        }
    }
    let (h, girth) = best.expect("at least one attempt");
    Ok((
        h,
        LiftReport {
            attempts: retries.max(1),
            girth,
            met: false,
        },
    ))
}

impl QcParityMatrix {
    /// Builds the expansion from explicit edges.
    pub fn from_edges(base_rows: usize, base_cols: usize, z1: usize, z2: usize, mut edges: Vec<LiftedEdge>) -> Result<Self> {
        for e in &edges {
            if e.row >= base_rows || e.col >= base_cols {
                return Err(Error::InvalidParameter(format!("edge at ({}, {}) outside the base", e.row, e.col)));
            }
            if e.offset as usize >= z1 || e.shifts.len() != z1 || e.shifts.iter().any(|&s| s as usize >= z2) {
                return Err(Error::InvalidParameter(format!("edge at ({}, {}) has out-of-range permutation data", e.row, e.col)));
            }
        }
        edges.sort_by_key(|e| (e.row, e.col));
        for w in edges.windows(2) {
            if (w[0].row, w[0].col, w[0].offset) == (w[1].row, w[1].col, w[1].offset) {
                return Err(Error::InvalidParameter(format!("repeated offset in cell ({}, {})", w[0].row, w[0].col)));
            }
        }
        let mut row_start = vec![0; base_rows + 1];
        for e in &edges {
            row_start[e.row + 1] += 1;
        }
        for u in 0..base_rows {
            row_start[u + 1] += row_start[u];
        }

        let block = z1 * z2;
        let m = base_rows * block;
        let n = base_cols * block;
        let mut row_ptr = Vec::with_capacity(m + 1);
        let mut row_cols = Vec::with_capacity(edges.len() * block);
        row_ptr.push(0);
        for u in 0..base_rows {
            let row_edges = &edges[row_start[u]..row_start[u + 1]];
            for a in 0..z1 {
                for x in 0..z2 {
                    for e in row_edges {
                        row_cols.push(column_of(e, a, x, z1, z2) as u32);
                    }
                    row_ptr.push(row_cols.len());
                }
            }
        }

        let mut col_ptr = vec![0usize; n + 1];
        for &c in &row_cols {
            col_ptr[c as usize + 1] += 1;
        }
        for j in 0..n {
            col_ptr[j + 1] += col_ptr[j];
        }
        let mut fill = col_ptr.clone();
        let mut col_rows = vec![0u32; row_cols.len()];
        for i in 0..m {
            for &c in &row_cols[row_ptr[i]..row_ptr[i + 1]] {
                col_rows[fill[c as usize]] = i as u32;
                fill[c as usize] += 1;
            }
        }

        Ok(QcParityMatrix {
            base_rows,
            base_cols,
            z1,
            z2,
            edges,
            row_start,
            row_ptr,
            row_cols,
            col_ptr,
            col_rows,
        })
    }

    pub fn base_rows(&self) -> usize {
        self.base_rows
    }

    pub fn base_cols(&self) -> usize {
        self.base_cols
    }

    pub fn z1(&self) -> usize {
        self.z1
    }

    pub fn z2(&self) -> usize {
        self.z2
    }

    pub fn rows(&self) -> usize {
        self.base_rows * self.z1 * self.z2
    }

    pub fn cols(&self) -> usize {
        self.base_cols * self.z1 * self.z2
    }

    pub fn edges(&self) -> &[LiftedEdge] {
        &self.edges
    }

    /// Edges of base row `u`, ordered by column.
    pub fn row_edges(&self, u: usize) -> &[LiftedEdge] {
        &self.edges[self.row_start[u]..self.row_start[u + 1]]
    }

    /// Index into [`edges`](Self::edges) of the first edge of base row `u`.
    pub fn row_edge_start(&self, u: usize) -> usize {
        self.row_start[u]
    }

    /// Base row of expanded row `i`.
    pub fn base_row_of(&self, i: usize) -> usize {
        i / (self.z1 * self.z2)
    }

    /// Columns of expanded row `i`. Slot `k` belongs to the `k`-th edge of
    /// the base row.
    pub fn row(&self, i: usize) -> &[u32] {
        &self.row_cols[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    /// Rows of expanded column `j`, ascending.
    pub fn col(&self, j: usize) -> &[u32] {
        &self.col_rows[self.col_ptr[j]..self.col_ptr[j + 1]]
    }

    /// `H·v` over GF(2).
    pub fn syndrome(&self, bits: &[u8]) -> Result<Vec<u8>> {
        if bits.len() != self.cols() {
            return Err(Error::LengthMismatch {
                expected: self.cols(),
                got: bits.len(),
            });
        }
        Ok((0..self.rows())
            .map(|i| self.row(i).iter().fold(0u8, |acc, &c| acc ^ (bits[c as usize] & 1)))
            .collect())
    }

    /// Dense 0/1 expansion. Only sensible for small matrices.
    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let block = self.z1 * self.z2;
        let mut h = vec![vec![0u8; self.cols()]; self.rows()];
        for e in &self.edges {
            for a in 0..self.z1 {
                let b = (a + e.offset as usize) % self.z1;
                for x in 0..self.z2 {
                    let y = (x + e.shifts[a] as usize) % self.z2;
                    h[e.row * block + a * self.z2 + x][e.col * block + b * self.z2 + y] ^= 1;
                }
            }
        }
        h
    }

    /// Number of permutations in each cell, i.e. the lifted protomatrix.
    pub fn block_sums(&self) -> Protomatrix {
        let mut p = Protomatrix::zeros(self.base_rows, self.base_cols);
        for e in &self.edges {
            let v = p.get(e.row, e.col) + 1;
            p.set(e.row, e.col, v).expect("edge count fits a cell");
        }
        p
    }

    /// Breadth-first girth search bounded by `max_cycle`.
    ///
    /// Stage-2 circulants make all rows of one `z2` block equivalent, so
    /// searches start only from the first row of each block.
    pub fn girth(&self, max_cycle: usize) -> Girth {
        let m = self.rows();
        let total = m + self.cols();
        let depth = max_cycle / 2;
        let mut best = usize::MAX;
        let mut dist = vec![u32::MAX; total];
        let mut parent = vec![u32::MAX; total];
        let mut touched = Vec::new();
        let mut queue = VecDeque::new();
        for s in (0..m).step_by(self.z2) {
            for &v in &touched {
                dist[v] = u32::MAX;
                parent[v] = u32::MAX;
            }
            touched.clear();
            queue.clear();
            dist[s] = 0;
            touched.push(s);
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                let du = dist[u] as usize;
                if du >= depth || 2 * du >= best {
                    break;
                }
                let neighbours: Box<dyn Iterator<Item = usize>> = if u < m {
                    Box::new(self.row(u).iter().map(|&c| c as usize + m))
                } else {
                    Box::new(self.col(u - m).iter().map(|&r| r as usize))
                };
                for w in neighbours {
                    if parent[u] as usize == w {
                        continue;
                    }
                    if dist[w] == u32::MAX {
                        dist[w] = du as u32 + 1;
                        parent[w] = u as u32;
                        touched.push(w);
                        queue.push_back(w);
                    } else {
                        best = best.min(du + dist[w] as usize + 1);
                    }
                }
            }
        }
        if best <= max_cycle {
            Girth::Exact(best)
        } else {
            Girth::Above(max_cycle)
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_string())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        std::fs::read_to_string(path)?.parse()
    }
}

fn column_of(e: &LiftedEdge, a: usize, x: usize, z1: usize, z2: usize) -> usize {
    let b = (a + e.offset as usize) % z1;
    let y = (x + e.shifts[a] as usize) % z2;
    (e.col * z1 + b) * z2 + y
}

impl fmt::Display for QcParityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {} {} {}", self.base_rows, self.base_cols, self.z1, self.z2)?;
        for e in &self.edges {
            write!(f, "{} {} {}", e.row, e.col, e.offset)?;
            for s in &e.shifts {
                write!(f, " {s}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl FromStr for QcParityMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let numbers = |line: usize, text: &str| -> Result<Vec<usize>> {
            text.split_whitespace()
                .map(|tok| {
                    tok.parse().map_err(|_| Error::Parse {
                        line,
                        message: format!("not a number: {tok}"),
                    })
                })
                .collect()
        };
        let (line, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let h = numbers(line, header)?;
        let [m, n, z1, z2] = h[..] else {
            return Err(Error::Parse {
                line,
                message: "header needs m n z1 z2".into(),
            });
        };
        let mut edges = Vec::new();
        for (line, text) in lines {
            let v = numbers(line, text)?;
            if v.len() != 3 + z1 {
                return Err(Error::Parse {
                    line,
                    message: format!("edge line needs {} numbers, found {}", 3 + z1, v.len()),
                });
            }
            edges.push(LiftedEdge {
                row: v[0],
                col: v[1],
                offset: v[2] as u32,
                shifts: v[3..].iter().map(|&x| x as u32).collect(),
            });
        }
        QcParityMatrix::from_edges(m, n, z1, z2, edges)
    }
}
