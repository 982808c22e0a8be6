//! Monte-Carlo extrinsic mutual information of one H-CN.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::jfunc::sigma_of_j;
use crate::hadamard::{HadamardCode, MapDecoder, LLR_SATURATION};

/// Samples per independently seeded chunk.
const CHUNK: usize = 4096;

/// SplitMix64 finalizer used to derive independent stream seeds.
pub fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Monte-Carlo sampling parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiSampleConfig {
    pub samples: usize,
    pub seed: u64,
}

impl Default for MiSampleConfig {
    fn default() -> Self {
        MiSampleConfig {
            samples: 100_000,
            seed: 0,
        }
    }
}

/// A-priori LLR model of one information slot.
#[derive(Clone, Copy, Debug)]
enum Slot {
    Known,
    Gaussian(f64),
}

/// Extrinsic MI at the `d` information slots of an H-CN whose parity bits
/// see a channel with LLR spread `sigma_ch` and whose information slots
/// see consistent Gaussian a-priori LLRs with MI `a_priori[k]`. Slots with
/// MI 1 receive `±100`.
///
/// `stream` selects an independent random stream below `cfg.seed`; the
/// result depends only on `(cfg, stream)`, not on the thread count.
pub fn hadamard_mi(code: &HadamardCode, sigma_ch: f64, a_priori: &[f64], cfg: &MiSampleConfig, stream: u64) -> Vec<f64> {
    let d = code.degree();
    assert_eq!(a_priori.len(), d, "one a-priori MI per information slot");
    let slots: Vec<Slot> = a_priori
        .iter()
        .map(|&mi| if mi >= 1.0 { Slot::Known } else { Slot::Gaussian(sigma_of_j(mi.max(0.0))) })
        .collect();
    let samples = cfg.samples.max(1);
    let chunks = samples.div_ceil(CHUNK);
    let base = mix(cfg.seed, stream);
    let sums: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = CHUNK.min(samples - c * CHUNK);
            chunk_loss(code, sigma_ch, &slots, n, mix(base, c as u64))
        })
        .collect();
    let mut loss = vec![0.0; d];
    for s in &sums {
        for (l, v) in loss.iter_mut().zip(s) {
            *l += v;
        }
    }
    loss.iter().map(|l| (1.0 - l / samples as f64).clamp(0.0, 1.0)).collect()
}

fn chunk_loss(code: &HadamardCode, sigma_ch: f64, slots: &[Slot], n: usize, seed: u64) -> Vec<f64> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let q = code.len();
    let r = code.order() as usize;
    let d = code.degree();
    let mut dec = MapDecoder::new(code.clone());
    // per position: mean and spread of the LLR given bit 0
    let mut mean = vec![0.5 * sigma_ch * sigma_ch; q];
    let mut spread = vec![sigma_ch; q];
    for (&p, slot) in code.info_positions().iter().zip(slots) {
        (mean[p], spread[p]) = match *slot {
            Slot::Known => (LLR_SATURATION, 0.0),
            Slot::Gaussian(s) => (0.5 * s * s, s),
        };
    }
    let mut sign = vec![1.0; q];
    let mut lam = vec![0.0; q];
    let mut bits = vec![0u8; d];
    let mut sample = vec![0.0; d];
    let mut loss = vec![0.0; d];
    for _ in 0..n {
        // random codeword (s, j); its ±1 pattern by Sylvester doubling
        let word: u64 = rng.random();
        sign[0] = if word & 1 == 0 { 1.0 } else { -1.0 };
        for k in 0..r {
            let flip = if (word >> (k + 1)) & 1 == 0 { 1.0 } else { -1.0 };
            let (lo, hi) = sign.split_at_mut(1 << k);
            for (h, &l) in hi[..1 << k].iter_mut().zip(lo.iter()) {
                *h = l * flip;
            }
        }
        for i in 0..q {
            let noise: f64 = rng.sample(StandardNormal);
            lam[i] = (sign[i] * mean[i] + spread[i] * noise).clamp(-LLR_SATURATION, LLR_SATURATION);
        }
        for (b, &p) in bits.iter_mut().zip(code.info_positions()) {
            *b = (sign[p] < 0.0) as u8;
        }
        dec.info_loss_into(&lam, &bits, &mut sample);
        for (l, s) in loss.iter_mut().zip(&sample) {
            *l += s;
        }
    }
    loss
}
