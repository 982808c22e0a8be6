//! Layered protograph EXIT analysis of terminated coupled codes.

mod jfunc;
mod mi;
pub mod records;

pub use jfunc::{j_of_sigma, saturation_sigma, sigma_of_j};
pub use mi::{hadamard_mi, mix, MiSampleConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hadamard::HadamardCode;
use crate::protograph::{couple_terminated, rate_terminated, CodeDesign};

/// `I_app(j)` above this counts as fully known.
pub const CONVERGED_MI: f64 = 1.0 - 1e-6;

/// A-priori MI at or above this on every slot of a row lets the row skip
/// sampling: each extrinsic output is then 1 to well below `1e-30`.
const SATURATED_MI: f64 = 1.0 - 1e-12;

/// Channel LLR spread for a rate and `E_b/N_0` in dB: `σ² = 8R·10^(dB/10)`.
pub fn sigma_lch(rate: f64, ebn0_db: f64) -> f64 {
    (8.0 * rate * 10f64.powf(ebn0_db / 10.0)).sqrt()
}

/// Extrinsic MI map of a single H-CN.
pub trait CheckTransfer: Sync {
    /// `a_priori` has one entry per information slot; `stream` identifies
    /// the call for reproducible sampling.
    fn transfer(&self, sigma_ch: f64, a_priori: &[f64], stream: u64) -> Vec<f64>;
}

/// The Monte-Carlo Hadamard decoder transfer.
#[derive(Clone, Debug)]
pub struct MonteCarloTransfer {
    pub code: HadamardCode,
    pub sampling: MiSampleConfig,
}

impl CheckTransfer for MonteCarloTransfer {
    fn transfer(&self, sigma_ch: f64, a_priori: &[f64], stream: u64) -> Vec<f64> {
        hadamard_mi(&self.code, sigma_ch, a_priori, &self.sampling, stream)
    }
}

/// Where a short boundary row's known slots sit in `I_ah`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Padding {
    Leading,
    Trailing,
}

#[derive(Clone, Debug)]
struct Row {
    /// `(column, multiplicity)` for every nonzero entry, by column.
    entries: Vec<(usize, u32)>,
    pad: usize,
    side: Padding,
}

/// Analysis settings shared by single runs, threshold searches and the GA.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PexitConfig {
    pub max_iter: usize,
    pub step_db: f64,
    pub sampling: MiSampleConfig,
}

impl Default for PexitConfig {
    fn default() -> Self {
        PexitConfig {
            max_iter: 150,
            step_db: 0.05,
            sampling: MiSampleConfig::default(),
        }
    }
}

/// Result of one fixed-`E_b/N_0` run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub converged: bool,
    pub iterations: usize,
}

/// Per-column a-posteriori spreads and per-edge a-priori MI of a
/// terminated code at one `E_b/N_0`.
pub struct PexitState<'a, T: CheckTransfer> {
    transfer: &'a T,
    degree: usize,
    rows: Vec<Row>,
    /// `I_av`, laid out like `rows[i].entries`.
    i_av: Vec<Vec<f64>>,
    sigma_app2: Vec<f64>,
    sigma_ch: f64,
    stream: u64,
    sweeps: usize,
    decreases: usize,
}

impl<'a, T: CheckTransfer> PexitState<'a, T> {
    /// Builds the state for `design` coupled over `coupling_length` sections.
    pub fn new(design: &CodeDesign, coupling_length: usize, ebn0_db: f64, transfer: &'a T, stream: u64) -> Result<Self> {
        let split = &design.split;
        let base = split.base();
        base.check_hadamard_rows(design.order)?;
        let coupled = couple_terminated(split, coupling_length)?;
        let rate = rate_terminated(base, design.order, split.width(), coupling_length)?.to_f64();
        let m = base.rows();
        let degree = design.order as usize + 2;
        let mat = &coupled.matrix;
        let rows = (0..mat.rows())
            .map(|i| {
                let entries: Vec<(usize, u32)> =
                    (0..mat.cols()).filter_map(|j| Some((j, mat.get(i, j))).filter(|e| e.1 > 0)).collect();
                let weight: u32 = entries.iter().map(|e| e.1).sum();
                let side = if i / m < split.width() { Padding::Leading } else { Padding::Trailing };
                Row {
                    pad: degree - weight as usize,
                    entries,
                    side,
                }
            })
            .collect::<Vec<_>>();
        let i_av = rows.iter().map(|r| vec![0.0; r.entries.len()]).collect();
        let sigma_ch = sigma_lch(rate, ebn0_db);
        Ok(PexitState {
            transfer,
            degree,
            i_av,
            sigma_app2: vec![sigma_ch * sigma_ch; mat.cols()],
            rows,
            sigma_ch,
            stream,
            sweeps: 0,
            decreases: 0,
        })
    }

    pub fn sigma_ch(&self) -> f64 {
        self.sigma_ch
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// A-posteriori spreads `σ_app(j)`.
    pub fn sigma_app(&self) -> Vec<f64> {
        self.sigma_app2.iter().map(|v| v.sqrt()).collect()
    }

    /// `I_app(j) = J(σ_app(j))`.
    pub fn i_app(&self) -> Vec<f64> {
        self.sigma_app2.iter().map(|v| j_of_sigma(v.sqrt())).collect()
    }

    /// `I_av(i, j)` for every nonzero entry of row `i`, by column.
    pub fn i_av_row(&self, row: usize) -> Vec<(usize, f64)> {
        self.rows[row].entries.iter().map(|e| e.0).zip(self.i_av[row].iter().copied()).collect()
    }

    /// Number of row updates so far that lowered some `σ_app(j)`. Only
    /// sampling noise can cause one.
    pub fn decreases(&self) -> usize {
        self.decreases
    }

    pub fn is_converged(&self) -> bool {
        self.i_app().iter().all(|&v| v > CONVERGED_MI)
    }

    /// One layered pass over all rows; returns whether every P-VN is fully
    /// known afterwards.
    pub fn sweep(&mut self) -> bool {
        for i in 0..self.rows.len() {
            self.update_row(i);
        }
        self.sweeps += 1;
        self.is_converged()
    }

    fn update_row(&mut self, i: usize) {
        let row = &self.rows[i];
        if row.entries.is_empty() {
            return;
        }
        let prior_sq: Vec<f64> = self.i_av[i].iter().map(|&v| sigma_of_j(v).powi(2)).collect();
        let mut i_ah = Vec::with_capacity(self.degree);
        if row.side == Padding::Leading {
            i_ah.resize(row.pad, 1.0);
        }
        for (&(j, b), &p2) in row.entries.iter().zip(&prior_sq) {
            let i_ev = J_ext(self.sigma_app2[j], p2);
            i_ah.extend(std::iter::repeat_n(i_ev, b as usize));
        }
        if row.side == Padding::Trailing {
            i_ah.resize(self.degree, 1.0);
        }
        let i_eh = if i_ah.iter().all(|&v| v >= SATURATED_MI) {
            vec![1.0; self.degree]
        } else {
            let stream = mix(mix(self.stream, self.sweeps as u64), i as u64);
            self.transfer.transfer(self.sigma_ch, &i_ah, stream)
        };
        let mut slot = if row.side == Padding::Leading { row.pad } else { 0 };
        let mut decreased = false;
        for (k, (&(j, b), &p2)) in row.entries.iter().zip(&prior_sq).enumerate() {
            let mean = i_eh[slot..slot + b as usize].iter().sum::<f64>() / b as f64;
            slot += b as usize;
            let b = b as f64;
            let temp2 = (self.sigma_app2[j] - b * p2).max(0.0);
            let new_sq = sigma_of_j(mean).powi(2);
            decreased |= new_sq < p2;
            self.sigma_app2[j] = temp2 + b * new_sq;
            self.i_av[i][k] = mean;
        }
        if decreased {
            self.decreases += 1;
        }
    }
}

/// `J(sqrt(σ_app² - σ_prior²))`: the P-VN to H-CN extrinsic MI.
#[allow(non_snake_case)]
fn J_ext(sigma_app2: f64, prior2: f64) -> f64 {
    j_of_sigma((sigma_app2 - prior2).max(0.0).sqrt())
}

/// Runs up to `cfg.max_iter` layered sweeps at `ebn0_db`.
pub fn layered_pexit_converges_with<T: CheckTransfer>(
    design: &CodeDesign,
    coupling_length: usize,
    ebn0_db: f64,
    max_iter: usize,
    transfer: &T,
    stream: u64,
) -> Result<Outcome> {
    let mut state = PexitState::new(design, coupling_length, ebn0_db, transfer, stream)?;
    for it in 1..=max_iter {
        if state.sweep() {
            return Ok(Outcome {
                converged: true,
                iterations: it,
            });
        }
    }
    Ok(Outcome {
        converged: false,
        iterations: max_iter,
    })
}

fn db_stream(ebn0_db: f64) -> u64 {
    // Quantize to 1e-6 dB so that 0.1 - 0.05 and 0.05 share a stream.
    (ebn0_db * 1e6).round() as i64 as u64
}

/// Layered PEXIT with the Monte-Carlo Hadamard transfer.
pub fn layered_pexit_converges(design: &CodeDesign, coupling_length: usize, ebn0_db: f64, cfg: &PexitConfig) -> Result<Outcome> {
    let transfer = MonteCarloTransfer {
        code: HadamardCode::new(design.order)?,
        sampling: cfg.sampling,
    };
    layered_pexit_converges_with(design, coupling_length, ebn0_db, cfg.max_iter, &transfer, db_stream(ebn0_db))
}

/// One rung of a descending `E_b/N_0` ladder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub ebn0_db: f64,
    pub outcome: Outcome,
}

/// `E_b/N_0` of rung `k` of a ladder.
pub fn ladder_db(start_db: f64, step_db: f64, k: usize) -> f64 {
    let v = start_db - k as f64 * step_db;
    (v * 1e9).round() / 1e9
}

/// Walks down from `start_db` in steps of `cfg.step_db` until the first
/// failure (or `max_levels` rungs) and returns every rung visited.
pub fn descend(design: &CodeDesign, coupling_length: usize, start_db: f64, cfg: &PexitConfig, max_levels: usize) -> Result<Vec<Level>> {
    let mut levels = Vec::new();
    for k in 0..max_levels {
        let ebn0_db = ladder_db(start_db, cfg.step_db, k);
        let outcome = layered_pexit_converges(design, coupling_length, ebn0_db, cfg)?;
        levels.push(Level { ebn0_db, outcome });
        if !outcome.converged {
            break;
        }
    }
    Ok(levels)
}

/// Threshold and the ladder that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub threshold_db: f64,
    pub levels: Vec<Level>,
}

/// Lowest converging rung of the ladder from `start_db`: the first failing
/// rung plus one step.
pub fn threshold_search(design: &CodeDesign, coupling_length: usize, start_db: f64, cfg: &PexitConfig) -> Result<ThresholdReport> {
    let levels = descend(design, coupling_length, start_db, cfg, usize::MAX)?;
    let last = levels.last().expect("at least one rung");
    if !levels[0].outcome.converged {
        return Err(Error::StartTooLow { start_db });
    }
    let threshold_db = if last.outcome.converged {
        last.ebn0_db
    } else {
        ladder_db(last.ebn0_db, -cfg.step_db, 1)
    };
    Ok(ThresholdReport { threshold_db, levels })
}
