//! BPSK over AWGN and a Monte-Carlo BER harness for the pipeline decoder.

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{ConvCode, Encoder, LlrFrame, PipelineDecoder};
use crate::error::{Error, Result};
use crate::hadamard::LLR_SATURATION;
use crate::pexit::mix;

/// BPSK (`0 -> +1`, `1 -> -1`) over real AWGN at a given `E_b/N_0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Channel {
    pub ebn0_db: f64,
    pub rate: f64,
    noise_var: f64,
}

impl Channel {
    pub fn new(rate: f64, ebn0_db: f64) -> Result<Self> {
        if !(rate > 0.0) || !ebn0_db.is_finite() {
            return Err(Error::InvalidParameter(format!("bad channel: rate {rate}, {ebn0_db} dB")));
        }
        let noise_var = 1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0));
        Ok(Channel { ebn0_db, rate, noise_var })
    }

    /// A channel without noise; LLRs are saturated.
    pub fn noiseless(rate: f64) -> Self {
        Channel {
            ebn0_db: f64::INFINITY,
            rate,
            noise_var: 0.0,
        }
    }

    /// `σ_n²` per unit-energy symbol.
    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    /// Variance of the channel LLR, `8R·10^(E_b/N_0 / 10)`.
    pub fn llr_var(&self) -> f64 {
        4.0 / self.noise_var
    }

    /// Channel LLRs `2y/σ_n²` for the given bits.
    pub fn transmit<R: Rng>(&self, bits: &[u8], rng: &mut R) -> Vec<f64> {
        if self.noise_var == 0.0 {
            return bits.iter().map(|&b| if b & 1 == 0 { LLR_SATURATION } else { -LLR_SATURATION }).collect();
        }
        let sd = self.noise_var.sqrt();
        let scale = 2.0 / self.noise_var;
        bits.iter()
            .map(|&b| {
                let x = if b & 1 == 0 { 1.0 } else { -1.0 };
                let n: f64 = rng.sample(StandardNormal);
                scale * (x + sd * n)
            })
            .collect()
    }
}

/// Settings of one BER campaign.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BerConfig {
    pub processors: usize,
    pub ebn0_db: Vec<f64>,
    pub min_bit_errors: u64,
    pub max_bits: u64,
    pub seed: u64,
    /// Skip noise entirely (loopback checks).
    pub noiseless: bool,
}

impl Default for BerConfig {
    fn default() -> Self {
        BerConfig {
            processors: 20,
            ebn0_db: Vec::new(),
            min_bit_errors: 100,
            max_bits: 100_000_000,
            seed: 0,
            noiseless: false,
        }
    }
}

/// One grid point. `seconds` is wall-clock time and the only field that is
/// not reproducible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    #[serde(rename = "codeId")]
    pub code_id: String,
    pub ebn0_db: f64,
    pub bits: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub ber: f64,
    pub fer: f64,
    #[serde(rename = "I")]
    pub processors: usize,
    pub max_iter: usize,
    pub seed: u64,
    pub seconds: f64,
    /// No error was seen; only an upper bound (see [`wilson`]) is known.
    pub upper_bound: bool,
}

impl BerRecord {
    /// Two-sided 95% Wilson interval for the bit error rate.
    pub fn ber_interval(&self) -> (f64, f64) {
        wilson(self.bit_errors, self.bits)
    }
}

/// Wilson score interval at 95% confidence.
pub fn wilson(errors: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    if errors == 0 {
        // rule of three
        return (0.0, (3.0 / trials as f64).min(1.0));
    }
    let z = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = errors as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * ((p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt()) / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Simulates every grid point (in parallel) and returns records in grid
/// order.
pub fn run_ber(code: &ConvCode, code_id: &str, cfg: &BerConfig) -> Result<Vec<BerRecord>> {
    if cfg.processors == 0 {
        return Err(Error::InvalidParameter("need at least one processor".into()));
    }
    cfg.ebn0_db
        .par_iter()
        .map(|&db| run_point(code, code_id, cfg, db))
        .collect()
}

fn run_point(code: &ConvCode, code_id: &str, cfg: &BerConfig, ebn0_db: f64) -> Result<BerRecord> {
    let start = Instant::now();
    let rate = code.info_len() as f64 / code.frame_len() as f64;
    let channel = if cfg.noiseless {
        Channel::noiseless(rate)
    } else {
        Channel::new(rate, ebn0_db)?
    };
    let seed = mix(cfg.seed, (ebn0_db * 1e6).round() as i64 as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut encoder = Encoder::new(code);
    let mut pipe = PipelineDecoder::new(code, cfg.processors)?;
    let skip = pipe.latency() as u64;
    let mut sent: std::collections::VecDeque<Vec<u8>> = Default::default();
    let (mut bits, mut bit_errors, mut frame_errors) = (0u64, 0u64, 0u64);
    let mut frames = 0u64;
    let mut t = 0u64;
    let mut tx = Vec::with_capacity(code.frame_len());
    while bit_errors < cfg.min_bit_errors && bits < cfg.max_bits {
        t += 1;
        let info: Vec<u8> = (0..code.info_len()).map(|_| rng.random_range(0..2u8)).collect();
        let (p, d) = encoder.encode_step(&info)?;
        sent.push_back(info);
        tx.clear();
        tx.extend_from_slice(&p);
        tx.extend_from_slice(&d);
        let mut llr = channel.transmit(&tx, &mut rng);
        let d_llr = llr.split_off(code.p_len());
        let Some(out) = pipe.push(LlrFrame::new(code, t, llr, d_llr)?)? else {
            continue;
        };
        let info = sent.pop_front().expect("one message per frame");
        if out.t <= skip {
            continue;
        }
        let errs = code.info_of(&out.hard).iter().zip(&info).filter(|(a, b)| a != b).count() as u64;
        bits += info.len() as u64;
        bit_errors += errs;
        frame_errors += (errs > 0) as u64;
        frames += 1;
    }
    let n = bits.max(1) as f64;
    Ok(BerRecord {
        code_id: code_id.to_string(),
        ebn0_db,
        bits,
        bit_errors,
        frame_errors,
        ber: bit_errors as f64 / n,
        fer: frame_errors as f64 / frames.max(1) as f64,
        processors: cfg.processors,
        max_iter: cfg.processors,
        seed: cfg.seed,
        seconds: start.elapsed().as_secs_f64(),
        upper_bound: bit_errors == 0,
    })
}

/// Appends records to a CSV file, writing the header for a new file.
pub fn append_csv(path: impl AsRef<Path>, records: &[BerRecord]) -> Result<()> {
    let path = path.as_ref();
    let fresh = !path.exists() || std::fs::metadata(path)?.len() == 0;
    let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    for r in records {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<BerRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
    r.deserialize().map(|x| x.map_err(|e| Error::Io(e.to_string()))).collect()
}

pub fn write_json(path: impl AsRef<Path>, records: &[BerRecord]) -> Result<()> {
    let text = serde_json::to_string_pretty(records).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn noiseless_signs_match() {
        let ch = Channel::new(0.05, 60.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let bits: Vec<u8> = (0..1000).map(|i| (i % 3 == 0) as u8).collect();
        let llr = ch.transmit(&bits, &mut rng);
        assert!(bits.iter().zip(&llr).all(|(&b, &l)| (l < 0.0) == (b == 1)));
    }

    #[test]
    fn llr_moments_match_the_consistent_gaussian() {
        let rate = 4.0 / 81.0;
        let ch = Channel::new(rate, -0.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let llr = ch.transmit(&vec![0u8; 1_000_000], &mut rng);
        let n = llr.len() as f64;
        let mean = llr.iter().sum::<f64>() / n;
        let var = llr.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let s2 = 8.0 * rate * 10f64.powf(-0.04);
        assert!((ch.llr_var() - s2).abs() < 1e-12);
        assert!((mean / (s2 / 2.0) - 1.0).abs() < 0.01, "{mean}");
        assert!((var / s2 - 1.0).abs() < 0.01, "{var}");
    }

    #[test]
    fn wilson_interval_brackets_the_estimate() {
        let (lo, hi) = wilson(10, 1000);
        assert!(lo < 0.01 && 0.01 < hi);
        assert_eq!(wilson(0, 100).0, 0.0);
    }

    #[test]
    fn noiseless_run_has_no_errors_and_is_reproducible() {
        let code = ConvCode::new(&fixtures::r4_optimized(), 4, 16, 1).unwrap();
        let cfg = BerConfig {
            processors: 2,
            ebn0_db: vec![0.0],
            max_bits: 20 * 256,
            noiseless: true,
            ..BerConfig::default()
        };
        let a = run_ber(&code, "r4", &cfg).unwrap();
        assert_eq!(a[0].bit_errors, 0);
        assert!(a[0].upper_bound);
        assert_eq!(a[0].bits, 20 * 256);
        let b = run_ber(&code, "r4", &cfg).unwrap();
        let strip = |r: &BerRecord| BerRecord { seconds: 0.0, ..r.clone() };
        assert_eq!(strip(&a[0]), strip(&b[0]));
    }

    #[test]
    fn csv_and_json_round_trip() {
        let rec = BerRecord {
            code_id: "x".into(),
            ebn0_db: -1.2,
            bits: 100,
            bit_errors: 3,
            frame_errors: 1,
            ber: 0.03,
            fer: 0.5,
            processors: 4,
            max_iter: 4,
            seed: 7,
            seconds: 0.25,
            upper_bound: false,
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ber.csv");
        append_csv(&p, std::slice::from_ref(&rec)).unwrap();
        append_csv(&p, std::slice::from_ref(&rec)).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("codeId,ebn0_db,bits,bit_errors,frame_errors,ber,fer,I,max_iter,seed,seconds"));
        assert_eq!(read_csv(&p).unwrap(), vec![rec.clone(), rec.clone()]);
        let j = dir.path().join("ber.json");
        write_json(&j, std::slice::from_ref(&rec)).unwrap();
        let back: Vec<BerRecord> = serde_json::from_str(&std::fs::read_to_string(j).unwrap()).unwrap();
        assert_eq!(back, vec![rec]);
    }
}
