//! Streaming encoder and pipeline decoder for the convolutional code.
//!
//! The base matrix is lifted once and each lifted edge inherits the part
//! index of its protograph edge: inside a cell the first `B_0(u,v)` edges
//! belong to part 0, the next `B_1(u,v)` to part 1, and so on. H-CN `c` of
//! frame `t` then connects, through slot `k`, to one bit of frame
//! `t - back(c, k)` with `back` in `[0, W]`.

mod decoder;
mod encoder;
pub mod framing;

pub use decoder::{decode_block_layered, BlockDecision, DecodedFrame, LlrFrame, PipelineDecoder};
pub use encoder::{failing_checks, verify_window, Encoder};

use crate::error::{Error, Result};
use crate::gf2::BitMatrix;
use crate::hadamard::HadamardCode;
use crate::lifting::{lift_screened, LiftReport, QcParityMatrix};
use crate::pexit::mix;
use crate::protograph::CodeDesign;

/// Lifts tried before giving up on an invertible parity system.
pub const LIFT_ATTEMPTS: usize = 32;
/// Girth screening applied to every candidate lift.
pub const GIRTH_TARGET: usize = 6;
pub const GIRTH_RETRIES: usize = 100;

/// A lifted convolutional code ready for encoding and decoding.
#[derive(Clone, Debug)]
pub struct ConvCode {
    design: CodeDesign,
    hadamard: HadamardCode,
    lift: QcParityMatrix,
    report: Option<LiftReport>,
    width: usize,
    // per slot `c * d + k`
    back: Vec<u8>,
    cols: Vec<u32>,
    solver: Solver,
}

/// Row-reduced parity system for the bits of the newest frame.
#[derive(Clone, Debug)]
pub(crate) struct Solver {
    pub(crate) transform: BitMatrix,
    /// Reduced rows restricted to the information columns.
    pub(crate) info_part: BitMatrix,
    pub(crate) pivots: Vec<usize>,
    pub(crate) info_cols: Vec<usize>,
}

impl ConvCode {
    /// Lifts the base of `design` and checks that the streaming encoder can
    /// be built, resampling the lift when it cannot.
    pub fn new(design: &CodeDesign, z1: usize, z2: usize, seed: u64) -> Result<Self> {
        for attempt in 0..LIFT_ATTEMPTS {
            let (lift, report) = lift_screened(
                design.split.base(),
                z1,
                z2,
                mix(seed, attempt as u64),
                GIRTH_TARGET,
                GIRTH_RETRIES,
            )?;
            match Self::from_lift(design, lift) {
                Ok(mut code) => {
                    code.report = Some(report);
                    return Ok(code);
                }
                Err(Error::SingularParity { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::SingularParity { attempts: LIFT_ATTEMPTS })
    }

    /// Uses an existing lift of the base matrix.
    pub fn from_lift(design: &CodeDesign, lift: QcParityMatrix) -> Result<Self> {
        design.split.validate()?;
        let base = design.split.base();
        base.check_hadamard_rows(design.order)?;
        let hadamard = HadamardCode::new(design.order)?;
        if lift.block_sums() != *base {
            return Err(Error::InvalidParameter("lift does not match the base matrix".into()));
        }
        let width = design.split.width();
        let d = hadamard.degree();
        let parts = design.split.parts();

        let mut back = Vec::with_capacity(lift.rows() * d);
        let mut cols = Vec::with_capacity(lift.rows() * d);
        let mut part_of_edge = vec![0u8; lift.edges().len()];
        for u in 0..base.rows() {
            let start = lift.row_edge_start(u);
            let edges = lift.row_edges(u);
            let mut k = 0;
            while k < edges.len() {
                let v = edges[k].col;
                let mut slot = k;
                for (i, p) in parts.iter().enumerate() {
                    for _ in 0..p.get(u, v) {
                        part_of_edge[start + slot] = i as u8;
                        slot += 1;
                    }
                }
                k = slot;
            }
        }
        let newest: Vec<u8> = (0..base.rows())
            .map(|u| {
                let s = lift.row_edge_start(u);
                part_of_edge[s..s + lift.row_edges(u).len()].iter().copied().min().unwrap_or(0)
            })
            .collect();
        for i in 0..lift.rows() {
            let u = lift.base_row_of(i);
            let s = lift.row_edge_start(u);
            for (k, &c) in lift.row(i).iter().enumerate() {
                back.push(part_of_edge[s + k] - newest[u]);
                cols.push(c);
            }
        }

        let solver = Solver::new(&lift, &back, &cols, d)?;
        Ok(ConvCode {
            design: design.clone(),
            hadamard,
            lift,
            report: None,
            width,
            back,
            cols,
            solver,
        })
    }

    pub fn design(&self) -> &CodeDesign {
        &self.design
    }

    pub fn hadamard(&self) -> &HadamardCode {
        &self.hadamard
    }

    pub fn lift(&self) -> &QcParityMatrix {
        &self.lift
    }

    /// Girth screening result when the lift was drawn by [`ConvCode::new`].
    pub fn lift_report(&self) -> Option<LiftReport> {
        self.report
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Bits per P block (`N`).
    pub fn p_len(&self) -> usize {
        self.lift.cols()
    }

    /// H-CNs per frame (`M`).
    pub fn checks(&self) -> usize {
        self.lift.rows()
    }

    /// Bits per D block.
    pub fn d_len(&self) -> usize {
        self.checks() * self.hadamard.parity_count()
    }

    /// Information bits per frame.
    pub fn info_len(&self) -> usize {
        self.solver.info_cols.len()
    }

    /// Transmitted bits per frame.
    pub fn frame_len(&self) -> usize {
        self.p_len() + self.d_len()
    }

    /// Columns of a P block that carry information bits.
    pub fn info_columns(&self) -> &[usize] {
        &self.solver.info_cols
    }

    /// Extracts the information bits from a P block.
    pub fn info_of(&self, p: &[u8]) -> Vec<u8> {
        self.solver.info_cols.iter().map(|&c| p[c]).collect()
    }

    /// Frame offset and column of slot `k` of H-CN `c`.
    #[inline]
    pub fn slot(&self, c: usize, k: usize) -> (usize, usize) {
        let s = c * self.hadamard.degree() + k;
        (self.back[s] as usize, self.cols[s] as usize)
    }
}

impl Solver {
    fn new(lift: &QcParityMatrix, back: &[u8], cols: &[u32], d: usize) -> Result<Self> {
        let m = lift.rows();
        let n = lift.cols();
        let mut a = BitMatrix::zeros(m, n);
        for c in 0..m {
            for k in 0..d {
                if back[c * d + k] == 0 {
                    a.flip(c, cols[c * d + k] as usize);
                }
            }
        }
        // highest columns first: the last M columns become parity whenever
        // they form an invertible block
        let e = a.echelon(None);
        if e.rank() < m {
            return Err(Error::SingularParity { attempts: 1 });
        }
        let mut is_pivot = vec![false; n];
        for &p in &e.pivots {
            is_pivot[p] = true;
        }
        let info_cols: Vec<usize> = (0..n).filter(|&j| !is_pivot[j]).collect();
        let mut info_part = BitMatrix::zeros(m, info_cols.len());
        for r in 0..m {
            for (k, &j) in info_cols.iter().enumerate() {
                if e.reduced.get(r, j) {
                    info_part.set(r, k, true);
                }
            }
        }
        Ok(Solver {
            transform: e.transform,
            info_part,
            pivots: e.pivots,
            info_cols,
        })
    }
}
