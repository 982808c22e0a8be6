use std::collections::VecDeque;

use super::ConvCode;
use crate::error::{Error, Result};
use crate::gf2::pack;

/// Streaming encoder. Blocks before the first frame are all-zero.
#[derive(Clone, Debug)]
pub struct Encoder<'a> {
    code: &'a ConvCode,
    // newest first
    history: VecDeque<Vec<u8>>,
    t: u64,
}

impl<'a> Encoder<'a> {
    pub fn new(code: &'a ConvCode) -> Self {
        let history = (0..code.width()).map(|_| vec![0u8; code.p_len()]).collect();
        Encoder { code, history, t: 0 }
    }

    /// Index of the last encoded frame (0 before the first step).
    pub fn time(&self) -> u64 {
        self.t
    }

    /// Encodes one frame of `info_len()` bits into its P and D blocks.
    pub fn encode_step(&mut self, info: &[u8]) -> Result<(Vec<u8>, Vec<u8>)> {
        let code = self.code;
        if info.len() != code.info_len() {
            return Err(Error::LengthMismatch {
                expected: code.info_len(),
                got: info.len(),
            });
        }
        let m = code.checks();
        let d = code.hadamard().degree();

        // contribution of older frames to every check
        let mut h = vec![0u8; m];
        for (c, hc) in h.iter_mut().enumerate() {
            for k in 0..d {
                let (back, col) = code.slot(c, k);
                if back > 0 {
                    *hc ^= self.history[back - 1][col];
                }
            }
        }

        let solver = &code.solver;
        let mut p = vec![0u8; code.p_len()];
        for (&col, &bit) in solver.info_cols.iter().zip(info) {
            p[col] = bit & 1;
        }
        let info_words = pack(info);
        let h_words = pack(&h);
        for (r, &piv) in solver.pivots.iter().enumerate() {
            let a: u32 = solver.transform.row_words(r).iter().zip(&h_words).map(|(x, y)| (x & y).count_ones()).sum();
            let b: u32 = solver.info_part.row_words(r).iter().zip(&info_words).map(|(x, y)| (x & y).count_ones()).sum();
            p[piv] = ((a + b) & 1) as u8;
        }

        let q_par = code.hadamard().parity_count();
        let mut dbits = vec![0u8; code.d_len()];
        let mut word = vec![0u8; d];
        for c in 0..m {
            for (k, w) in word.iter_mut().enumerate() {
                let (back, col) = code.slot(c, k);
                *w = if back == 0 { p[col] } else { self.history[back - 1][col] };
            }
            code.hadamard()
                .encode_parity_into(&word, &mut dbits[c * q_par..(c + 1) * q_par])
                .expect("solved frame satisfies every parity check");
        }

        if code.width() > 0 {
            self.history.pop_back();
            self.history.push_front(p.clone());
        }
        self.t += 1;
        Ok((p, dbits))
    }
}

/// Every H-CN of the newest frame whose induced word is not a Hadamard
/// codeword. `p_blocks` holds `W + 1` P blocks, oldest first.
pub fn failing_checks(code: &ConvCode, p_blocks: &[&[u8]], d_block: &[u8]) -> Result<Vec<usize>> {
    let w = code.width();
    if p_blocks.len() != w + 1 {
        return Err(Error::LengthMismatch {
            expected: w + 1,
            got: p_blocks.len(),
        });
    }
    for b in p_blocks {
        if b.len() != code.p_len() {
            return Err(Error::LengthMismatch {
                expected: code.p_len(),
                got: b.len(),
            });
        }
    }
    if d_block.len() != code.d_len() {
        return Err(Error::LengthMismatch {
            expected: code.d_len(),
            got: d_block.len(),
        });
    }
    let had = code.hadamard();
    let d = had.degree();
    let q_par = had.parity_count();
    let mut word = vec![0u8; had.len()];
    let mut bad = Vec::new();
    for c in 0..code.checks() {
        for k in 0..d {
            let (back, col) = code.slot(c, k);
            word[had.info_positions()[k]] = p_blocks[w - back][col] & 1;
        }
        for (k, &pos) in had.parity_positions().iter().enumerate() {
            word[pos] = d_block[c * q_par + k] & 1;
        }
        if !had.is_codeword(&word) {
            bad.push(c);
        }
    }
    Ok(bad)
}

/// `Ok(())` when every H-CN of the window is satisfied, otherwise the index
/// of the first failing H-CN.
pub fn verify_window(code: &ConvCode, p_blocks: &[&[u8]], d_block: &[u8]) -> Result<std::result::Result<(), usize>> {
    Ok(match failing_checks(code, p_blocks, d_block)?.first() {
        None => Ok(()),
        Some(&c) => Err(c),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::tests::small_code;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_info(code: &ConvCode, rng: &mut ChaCha8Rng) -> Vec<u8> {
        (0..code.info_len()).map(|_| rng.random_range(0..2)).collect()
    }

    fn window<'b>(blocks: &'b [Vec<u8>], t: usize, w: usize, zero: &'b [u8]) -> Vec<&'b [u8]> {
        // blocks[0] is frame 1
        (0..=w)
            .map(|i| {
                let f = t as i64 - (w - i) as i64;
                if f < 1 { zero } else { &blocks[f as usize - 1][..] }
            })
            .collect()
    }

    #[test]
    fn zero_stream_gives_zero_output() {
        let code = small_code();
        let mut enc = Encoder::new(&code);
        let zero = vec![0u8; code.info_len()];
        for _ in 0..5 {
            let (p, d) = enc.encode_step(&zero).unwrap();
            assert!(p.iter().all(|&b| b == 0));
            assert!(d.iter().all(|&b| b == 0));
        }
    }

    #[test]
    fn first_frame_checks_see_a_zero_past() {
        let code = small_code();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut enc = Encoder::new(&code);
        let (p, d) = enc.encode_step(&random_info(&code, &mut rng)).unwrap();
        let zero = vec![0u8; code.p_len()];
        assert_eq!(verify_window(&code, &[&zero, &p], &d).unwrap(), Ok(()));
        // P(1) alone determines D(1)
        let mut p_alt = p.clone();
        p_alt[0] ^= 1;
        assert_ne!(verify_window(&code, &[&zero, &p_alt], &d).unwrap(), Ok(()));
    }

    #[test]
    fn random_stream_passes_every_window() {
        let code = small_code();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut enc = Encoder::new(&code);
        let mut ps = Vec::new();
        let zero = vec![0u8; code.p_len()];
        for t in 1..=30 {
            let (p, d) = enc.encode_step(&random_info(&code, &mut rng)).unwrap();
            assert_eq!(code.info_of(&p).len(), code.info_len());
            ps.push(p);
            let win = window(&ps, t, code.width(), &zero);
            assert_eq!(verify_window(&code, &win, &d).unwrap(), Ok(()), "frame {t}");
        }
    }

    #[test]
    fn info_bits_appear_in_p() {
        let code = small_code();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut enc = Encoder::new(&code);
        for _ in 0..3 {
            let info = random_info(&code, &mut rng);
            let (p, _) = enc.encode_step(&info).unwrap();
            assert_eq!(code.info_of(&p), info);
        }
    }

    #[test]
    fn linear_over_streams() {
        let code = small_code();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (mut ea, mut eb, mut ex) = (Encoder::new(&code), Encoder::new(&code), Encoder::new(&code));
        for _ in 0..10 {
            let a = random_info(&code, &mut rng);
            let b = random_info(&code, &mut rng);
            let x: Vec<u8> = a.iter().zip(&b).map(|(p, q)| p ^ q).collect();
            let (pa, da) = ea.encode_step(&a).unwrap();
            let (pb, db) = eb.encode_step(&b).unwrap();
            let (px, dx) = ex.encode_step(&x).unwrap();
            assert!(pa.iter().zip(&pb).zip(&px).all(|((p, q), r)| p ^ q == *r));
            assert!(da.iter().zip(&db).zip(&dx).all(|((p, q), r)| p ^ q == *r));
        }
    }

    #[test]
    fn flipped_p_bit_fails_exactly_its_checks() {
        let code = small_code();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut enc = Encoder::new(&code);
        let mut ps = Vec::new();
        let mut last_d = Vec::new();
        for _ in 0..3 {
            let (p, d) = enc.encode_step(&random_info(&code, &mut rng)).unwrap();
            ps.push(p);
            last_d = d;
        }
        let zero = vec![0u8; code.p_len()];
        let w = code.width();
        for (back, col) in [(0usize, 5usize), (w, 300), (0, 703)] {
            let mut blocks: Vec<Vec<u8>> = window(&ps, 3, w, &zero).into_iter().map(|b| b.to_vec()).collect();
            blocks[w - back][col] ^= 1;
            let refs: Vec<&[u8]> = blocks.iter().map(|b| &b[..]).collect();
            let got = failing_checks(&code, &refs, &last_d).unwrap();
            // adjacency oracle: checks with a slot on that bit
            let want: Vec<usize> = (0..code.checks())
                .filter(|&c| (0..code.hadamard().degree()).any(|k| code.slot(c, k) == (back, col)))
                .collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn flipped_d_bit_fails_one_check() {
        let code = small_code();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut enc = Encoder::new(&code);
        let (p, mut d) = enc.encode_step(&random_info(&code, &mut rng)).unwrap();
        d[1234] ^= 1;
        let zero = vec![0u8; code.p_len()];
        let got = failing_checks(&code, &[&zero, &p], &d).unwrap();
        assert_eq!(got, vec![1234 / code.hadamard().parity_count()]);
    }

    #[test]
    fn wrong_info_length_is_rejected() {
        let code = small_code();
        let mut enc = Encoder::new(&code);
        assert!(matches!(enc.encode_step(&[0, 1]), Err(Error::LengthMismatch { .. })));
    }
}
