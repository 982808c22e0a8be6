use std::collections::VecDeque;

use super::{failing_checks, ConvCode};
use crate::error::{Error, Result};
use crate::hadamard::{MapDecoder, LLR_SATURATION};

/// Channel and working LLRs of one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct LlrFrame {
    pub t: u64,
    pub p_llr: Vec<f64>,
    pub d_llr: Vec<f64>,
    pub app: Vec<f64>,
    /// Extrinsic LLR of every slot of this frame's H-CNs (`check * d + k`).
    pub ext: Vec<f64>,
    /// A-posteriori LLRs of the D bits, refreshed by block decoding.
    pub d_app: Vec<f64>,
}

impl LlrFrame {
    /// `t` starts at 1; earlier frames are known all-zero blocks.
    pub fn new(code: &ConvCode, t: u64, p_llr: Vec<f64>, d_llr: Vec<f64>) -> Result<Self> {
        if t == 0 {
            return Err(Error::InvalidParameter("frame index starts at 1".into()));
        }
        if p_llr.len() != code.p_len() {
            return Err(Error::LengthMismatch {
                expected: code.p_len(),
                got: p_llr.len(),
            });
        }
        if d_llr.len() != code.d_len() {
            return Err(Error::LengthMismatch {
                expected: code.d_len(),
                got: d_llr.len(),
            });
        }
        if let Some(i) = p_llr.iter().chain(&d_llr).position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteLlr(i));
        }
        Ok(LlrFrame {
            t,
            app: p_llr.clone(),
            ext: vec![0.0; code.checks() * code.hadamard().degree()],
            d_app: d_llr.clone(),
            p_llr,
            d_llr,
        })
    }

    /// Hard decisions of the P bits.
    pub fn hard(&self) -> Vec<u8> {
        self.app.iter().map(|&v| (v < 0.0) as u8).collect()
    }
}

/// Scratch space for one layered pass.
struct Layer {
    dec: MapDecoder,
    lam: Vec<f64>,
    out: Vec<f64>,
    raw: Vec<f64>,
}

impl Layer {
    fn new(code: &ConvCode) -> Self {
        let q = code.hadamard().len();
        Layer {
            dec: MapDecoder::new(code.hadamard().clone()),
            lam: vec![0.0; q],
            out: vec![0.0; q],
            raw: vec![0.0; code.hadamard().degree()],
        }
    }

    /// One pass over the H-CNs of the last frame of `frames`, which must be
    /// consecutive and include every stored frame the checks reach.
    fn pass(&mut self, code: &ConvCode, frames: &mut [LlrFrame], with_parity: bool) {
        let owner = frames.len() - 1;
        let owner_t = frames[owner].t;
        let had = code.hadamard();
        let d = had.degree();
        let q_par = had.parity_count();
        let info = had.info_positions();
        let parity = had.parity_positions();
        for c in 0..code.checks() {
            for (k, &pos) in parity.iter().enumerate() {
                self.lam[pos] = frames[owner].d_llr[c * q_par + k].clamp(-LLR_SATURATION, LLR_SATURATION);
            }
            for k in 0..d {
                let (back, col) = code.slot(c, k);
                if (back as u64) >= owner_t {
                    // before the stream start: a known zero
                    self.lam[info[k]] = LLR_SATURATION;
                    continue;
                }
                let f = owner.checked_sub(back).expect("window holds every referenced frame");
                let raw = frames[f].app[col] - frames[owner].ext[c * d + k];
                self.raw[k] = raw;
                self.lam[info[k]] = raw.clamp(-LLR_SATURATION, LLR_SATURATION);
            }
            if with_parity {
                self.dec.app_into(&self.lam, &mut self.out);
                for (k, &pos) in parity.iter().enumerate() {
                    frames[owner].d_app[c * q_par + k] = self.out[pos];
                }
                for k in 0..d {
                    self.out[k] = self.out[info[k]] - self.lam[info[k]];
                }
            } else {
                self.dec.ext_info_into(&self.lam, &mut self.out[..d]);
            }
            for k in 0..d {
                let (back, col) = code.slot(c, k);
                if (back as u64) >= owner_t {
                    continue;
                }
                let ext = self.out[k];
                frames[owner].ext[c * d + k] = ext;
                frames[owner - back].app[col] = self.raw[k] + ext;
            }
        }
    }
}

/// Result of [`decode_block_layered`].
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDecision {
    /// Hard decisions of every frame passed in, oldest first.
    pub hard: Vec<Vec<u8>>,
    pub iterations: usize,
    /// Whether the final hard decisions satisfy every H-CN of the window.
    pub satisfied: bool,
}

/// Layered decoding of the H-CNs owned by the newest of `frames`.
///
/// `frames` are consecutive in time, oldest first; frames before the
/// stream start may be omitted.
pub fn decode_block_layered(code: &ConvCode, frames: &mut [LlrFrame], max_iter: usize, early_stop: bool) -> Result<BlockDecision> {
    let Some(last) = frames.last() else {
        return Err(Error::InvalidParameter("empty window".into()));
    };
    let owner_t = last.t;
    let needed = (code.width() as u64 + 1).min(owner_t) as usize;
    if frames.len() < needed || frames.windows(2).any(|w| w[1].t != w[0].t + 1) {
        return Err(Error::InvalidParameter("window must hold consecutive frames covering the coupling width".into()));
    }
    let mut layer = Layer::new(code);
    let mut iterations = 0;
    let mut satisfied = false;
    for _ in 0..max_iter {
        layer.pass(code, frames, true);
        iterations += 1;
        satisfied = window_satisfied(code, frames);
        if early_stop && satisfied {
            break;
        }
    }
    if max_iter == 0 {
        satisfied = window_satisfied(code, frames);
    }
    Ok(BlockDecision {
        hard: frames.iter().map(LlrFrame::hard).collect(),
        iterations,
        satisfied,
    })
}

fn window_satisfied(code: &ConvCode, frames: &[LlrFrame]) -> bool {
    let w = code.width();
    let owner = frames.len() - 1;
    let zero = vec![0u8; code.p_len()];
    let hard: Vec<Vec<u8>> = (0..=w)
        .map(|i| {
            let back = w - i;
            if back as u64 >= frames[owner].t || back > owner {
                zero.clone()
            } else {
                frames[owner - back].hard()
            }
        })
        .collect();
    let refs: Vec<&[u8]> = hard.iter().map(|b| &b[..]).collect();
    let d: Vec<u8> = frames[owner].d_app.iter().map(|&v| (v < 0.0) as u8).collect();
    failing_checks(code, &refs, &d).map(|f| f.is_empty()).unwrap_or(false)
}

/// Decoded output of the pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodedFrame {
    pub t: u64,
    pub hard: Vec<u8>,
}

/// `I` cascaded layered processors over a shift register of `(W+1)·I`
/// frames. Frame `t` leaves when frame `t + (W+1)·I` arrives.
pub struct PipelineDecoder<'a> {
    code: &'a ConvCode,
    processors: usize,
    window: VecDeque<LlrFrame>,
    head: u64,
    last_input: u64,
    layer: Layer,
}

impl<'a> PipelineDecoder<'a> {
    pub fn new(code: &'a ConvCode, processors: usize) -> Result<Self> {
        if processors == 0 {
            return Err(Error::InvalidParameter("need at least one processor".into()));
        }
        Ok(PipelineDecoder {
            code,
            processors,
            window: VecDeque::new(),
            head: 0,
            last_input: 0,
            layer: Layer::new(code),
        })
    }

    /// Frames held in the shift register, `(W+1)·I`.
    pub fn latency(&self) -> usize {
        (self.code.width() + 1) * self.processors
    }

    /// Shifts in the next frame. Returns the frame leaving the register.
    pub fn push(&mut self, frame: LlrFrame) -> Result<Option<DecodedFrame>> {
        if frame.t != self.last_input + 1 || self.last_input < self.head {
            return Err(Error::InvalidParameter(format!(
                "expected frame {}, got {}",
                self.last_input + 1,
                frame.t
            )));
        }
        self.last_input = frame.t;
        Ok(self.shift(Some(frame)))
    }

    /// Drains the register, returning the remaining frames in order.
    pub fn finish(&mut self) -> Vec<DecodedFrame> {
        let mut out = Vec::new();
        while !self.window.is_empty() {
            out.extend(self.shift(None));
        }
        out
    }

    fn shift(&mut self, frame: Option<LlrFrame>) -> Option<DecodedFrame> {
        self.head += 1;
        if let Some(f) = frame {
            self.window.push_back(f);
        }
        let s = self.latency() as u64;
        let leaving = match self.window.front() {
            Some(f) if f.t + s <= self.head => self.window.pop_front().map(|f| DecodedFrame { t: f.t, hard: f.hard() }),
            _ => None,
        };
        let w = self.code.width() as u64;
        let frames = self.window.make_contiguous();
        if let Some(first) = frames.first().map(|f| f.t) {
            // oldest processor first
            for p in (0..self.processors as u64).rev() {
                let Some(owner_t) = self.head.checked_sub(p * (w + 1)) else {
                    continue;
                };
                if owner_t < first || owner_t > self.last_input {
                    continue;
                }
                let hi = (owner_t - first) as usize;
                let lo = (owner_t.saturating_sub(w).max(first) - first) as usize;
                self.layer.pass(self.code, &mut frames[lo..=hi], false);
            }
        }
        leaving
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::tests::small_code;
    use crate::codec::Encoder;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noiseless(code: &ConvCode, t: u64, p: &[u8], d: &[u8], mag: f64) -> LlrFrame {
        let llr = |b: &u8| if *b == 0 { mag } else { -mag };
        LlrFrame::new(code, t, p.iter().map(llr).collect(), d.iter().map(llr).collect()).unwrap()
    }

    fn encode_stream(code: &ConvCode, frames: usize, seed: u64) -> Vec<(Vec<u8>, Vec<u8>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut enc = Encoder::new(code);
        (0..frames)
            .map(|_| {
                let info: Vec<u8> = (0..code.info_len()).map(|_| rng.random_range(0..2)).collect();
                enc.encode_step(&info).unwrap()
            })
            .collect()
    }

    #[test]
    fn all_zero_block_converges_at_once() {
        let code = small_code();
        let zp = vec![0u8; code.p_len()];
        let zd = vec![0u8; code.d_len()];
        let mut frames = vec![noiseless(&code, 1, &zp, &zd, 50.0), noiseless(&code, 2, &zp, &zd, 50.0)];
        let out = decode_block_layered(&code, &mut frames, 10, true).unwrap();
        assert_eq!(out.iterations, 1);
        assert!(out.satisfied);
        assert!(out.hard.iter().flatten().all(|&b| b == 0));
    }

    #[test]
    fn noiseless_block_reproduces_codeword() {
        let code = small_code();
        let s = encode_stream(&code, 3, 3);
        let mut frames: Vec<LlrFrame> = s[1..].iter().enumerate().map(|(i, (p, d))| noiseless(&code, i as u64 + 2, p, d, 8.0)).collect();
        let out = decode_block_layered(&code, &mut frames, 5, true).unwrap();
        assert!(out.satisfied);
        assert_eq!(out.hard[0], s[1].0);
        assert_eq!(out.hard[1], s[2].0);
    }

    #[test]
    fn saturated_wrong_bit_is_corrected() {
        let code = small_code();
        let s = encode_stream(&code, 2, 9);
        let mut frames: Vec<LlrFrame> = s.iter().enumerate().map(|(i, (p, d))| noiseless(&code, i as u64 + 1, p, d, 4.0)).collect();
        // a newest-frame bit touched by at least two checks of the window
        let col = (0..code.p_len())
            .find(|&j| (0..code.checks()).filter(|&c| (0..code.hadamard().degree()).any(|k| code.slot(c, k) == (0, j))).count() >= 2)
            .unwrap();
        let wrong = if s[1].0[col] == 0 { -LLR_SATURATION } else { LLR_SATURATION };
        frames[1].p_llr[col] = wrong;
        frames[1].app[col] = wrong;
        let out = decode_block_layered(&code, &mut frames, 20, true).unwrap();
        assert!(out.satisfied, "{} iterations", out.iterations);
        assert_eq!(out.hard[1], s[1].0);
    }

    #[test]
    fn channel_information_is_conserved() {
        let code = small_code();
        let s = encode_stream(&code, 4, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut frames: Vec<LlrFrame> = s
            .iter()
            .enumerate()
            .map(|(i, (p, d))| {
                let mut f = noiseless(&code, i as u64 + 1, p, d, 1.0);
                for v in f.p_llr.iter_mut().chain(f.d_llr.iter_mut()) {
                    *v += rng.random_range(-2.0..2.0);
                }
                f.app = f.p_llr.clone();
                f
            })
            .collect();
        for t in 0..frames.len() {
            let lo = t.saturating_sub(code.width());
            decode_block_layered(&code, &mut frames[lo..=t], 3, false).unwrap();
        }
        let d = code.hadamard().degree();
        let mut acc: Vec<Vec<f64>> = frames.iter().map(|f| f.app.clone()).collect();
        for (o, f) in frames.iter().enumerate() {
            for c in 0..code.checks() {
                for k in 0..d {
                    let (back, col) = code.slot(c, k);
                    if back <= o {
                        acc[o - back][col] -= f.ext[c * d + k];
                    }
                }
            }
        }
        for (a, f) in acc.iter().zip(&frames) {
            for (x, y) in a.iter().zip(&f.p_llr) {
                assert!((x - y).abs() < 1e-9, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn pipeline_is_fifo_with_fixed_latency() {
        let code = small_code();
        let s = encode_stream(&code, 12, 4);
        let mut pipe = PipelineDecoder::new(&code, 3).unwrap();
        let lat = pipe.latency() as u64;
        assert_eq!(lat, 6);
        let mut out = Vec::new();
        for (i, (p, d)) in s.iter().enumerate() {
            let t = i as u64 + 1;
            let got = pipe.push(noiseless(&code, t, p, d, 20.0)).unwrap();
            match got {
                Some(f) => {
                    assert_eq!(f.t + lat, t);
                    out.push(f);
                }
                None => assert!(t <= lat),
            }
        }
        out.extend(pipe.finish());
        assert_eq!(out.iter().map(|f| f.t).collect::<Vec<_>>(), (1..=12).collect::<Vec<_>>());
        for (f, (p, _)) in out.iter().zip(&s) {
            assert_eq!(&f.hard, p);
        }
    }

    #[test]
    fn zero_stream_through_pipeline() {
        let code = small_code();
        let zp = vec![0u8; code.p_len()];
        let zd = vec![0u8; code.d_len()];
        let mut pipe = PipelineDecoder::new(&code, 2).unwrap();
        let mut n = 0;
        for t in 1..=8 {
            if let Some(f) = pipe.push(noiseless(&code, t, &zp, &zd, 30.0)).unwrap() {
                assert!(f.hard.iter().all(|&b| b == 0));
                n += 1;
            }
        }
        assert_eq!(n, 8 - 4);
    }

    #[test]
    fn single_processor_equals_one_block_pass_per_frame() {
        let code = small_code();
        let s = encode_stream(&code, 6, 21);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let frames: Vec<LlrFrame> = s
            .iter()
            .enumerate()
            .map(|(i, (p, d))| {
                let mut f = noiseless(&code, i as u64 + 1, p, d, 1.5);
                for v in f.p_llr.iter_mut().chain(f.d_llr.iter_mut()) {
                    *v += rng.random_range(-3.0..3.0);
                }
                f.app = f.p_llr.clone();
                f.d_app = f.d_llr.clone();
                f
            })
            .collect();
        let mut pipe = PipelineDecoder::new(&code, 1).unwrap();
        let mut out = Vec::new();
        for f in frames.clone() {
            out.extend(pipe.push(f).unwrap());
        }
        out.extend(pipe.finish());

        let mut manual = frames;
        for t in 0..manual.len() {
            let lo = t.saturating_sub(code.width());
            decode_block_layered(&code, &mut manual[lo..=t], 1, false).unwrap();
        }
        for (o, m) in out.iter().zip(&manual) {
            assert_eq!(o.hard, m.hard());
        }
    }

    #[test]
    fn out_of_order_frame_is_rejected() {
        let code = small_code();
        let zp = vec![0u8; code.p_len()];
        let zd = vec![0u8; code.d_len()];
        let mut pipe = PipelineDecoder::new(&code, 1).unwrap();
        assert!(pipe.push(noiseless(&code, 2, &zp, &zd, 1.0)).is_err());
    }
}
