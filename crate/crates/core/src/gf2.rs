//! Dense bit-packed matrices over GF(2).

/// Row-major GF(2) matrix, 64 columns per word.
#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    words: Vec<u64>,
}

impl std::fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows.min(32) {
            let line: String = (0..self.cols.min(96)).map(|c| if self.get(r, c) { '1' } else { '.' }).collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// Reduced row echelon form of `A` together with the row operations.
#[derive(Clone, Debug)]
pub struct Echelon {
    /// `R = T·A`, with an identity at the pivot columns of the first `rank` rows.
    pub reduced: BitMatrix,
    /// Accumulated row operations `T` (square, invertible).
    pub transform: BitMatrix,
    /// Pivot column of each of the first `rank` rows of `reduced`.
    pub pivots: Vec<usize>,
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = cols.div_ceil(64);
        BitMatrix {
            rows,
            cols,
            stride,
            words: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        (self.words[r * self.stride + c / 64] >> (c % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        let w = &mut self.words[r * self.stride + c / 64];
        if v {
            *w |= 1 << (c % 64);
        } else {
            *w &= !(1 << (c % 64));
        }
    }

    #[inline]
    pub fn flip(&mut self, r: usize, c: usize) {
        self.words[r * self.stride + c / 64] ^= 1 << (c % 64);
    }

    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.words[r * self.stride..(r + 1) * self.stride]
    }

    /// `row[dst] ^= row[src]`.
    pub fn xor_row(&mut self, dst: usize, src: usize) {
        debug_assert_ne!(dst, src);
        let s = self.stride;
        let (a, b) = if dst < src {
            let (lo, hi) = self.words.split_at_mut(src * s);
            (&mut lo[dst * s..(dst + 1) * s], &hi[..s])
        } else {
            let (lo, hi) = self.words.split_at_mut(dst * s);
            (&mut hi[..s], &lo[src * s..(src + 1) * s])
        };
        for (x, y) in a.iter_mut().zip(b) {
            *x ^= y;
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for k in 0..self.stride {
            self.words.swap(a * self.stride + k, b * self.stride + k);
        }
    }

    /// `A·x` for a 0/1 vector `x`.
    pub fn mul_vec(&self, x: &[u8]) -> Vec<u8> {
        assert_eq!(x.len(), self.cols);
        let packed = pack(x);
        (0..self.rows)
            .map(|r| {
                let ones: u32 = self.row_words(r).iter().zip(&packed).map(|(a, b)| (a & b).count_ones()).sum();
                (ones & 1) as u8
            })
            .collect()
    }

    /// Gauss-Jordan elimination. Pivot columns are searched in the order
    /// given by `column_order` (all columns, highest index first, when
    /// `None`).
    pub fn echelon(&self, column_order: Option<&[usize]>) -> Echelon {
        let default: Vec<usize>;
        let order = match column_order {
            Some(o) => o,
            None => {
                default = (0..self.cols).rev().collect();
                &default
            }
        };
        let mut reduced = self.clone();
        let mut transform = BitMatrix::identity(self.rows);
        let mut pivots = Vec::new();
        let mut rank = 0;
        for &c in order {
            if rank == self.rows {
                break;
            }
            let Some(p) = (rank..self.rows).find(|&r| reduced.get(r, c)) else {
                continue;
            };
            reduced.swap_rows(rank, p);
            transform.swap_rows(rank, p);
            for r in 0..self.rows {
                if r != rank && reduced.get(r, c) {
                    reduced.xor_row(r, rank);
                    transform.xor_row(r, rank);
                }
            }
            pivots.push(c);
            rank += 1;
        }
        Echelon {
            reduced,
            transform,
            pivots,
        }
    }

    pub fn rank(&self) -> usize {
        self.echelon(None).rank()
    }
}

/// Packs 0/1 bytes into little-endian 64-bit words.
pub fn pack(bits: &[u8]) -> Vec<u64> {
    let mut out = vec![0u64; bits.len().div_ceil(64)];
    for (i, &b) in bits.iter().enumerate() {
        if b & 1 == 1 {
            out[i / 64] |= 1 << (i % 64);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> BitMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = BitMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, rng.random_bool(0.5));
            }
        }
        m
    }

    #[test]
    fn identity_rank() {
        assert_eq!(BitMatrix::identity(70).rank(), 70);
    }

    #[test]
    fn dependent_rows_lower_rank() {
        let mut m = random(5, 130, 1);
        m.xor_row(4, 4 - 1);
        // row 4 = row 3 ^ row 4 still independent; copy row 0 over row 4 instead
        for c in 0..130 {
            let v = m.get(0, c);
            m.set(4, c, v);
        }
        assert_eq!(m.rank(), 4);
    }

    #[test]
    fn transform_reproduces_reduced_form() {
        let a = random(20, 45, 7);
        let e = a.echelon(None);
        for c in 0..a.cols() {
            let col: Vec<u8> = (0..a.rows()).map(|r| a.get(r, c) as u8).collect();
            let got = e.transform.mul_vec(&col);
            let want: Vec<u8> = (0..a.rows()).map(|r| e.reduced.get(r, c) as u8).collect();
            assert_eq!(got, want);
        }
        for (k, &p) in e.pivots.iter().enumerate() {
            for r in 0..a.rows() {
                assert_eq!(e.reduced.get(r, p), r == k);
            }
        }
    }

    #[test]
    fn pivots_prefer_high_columns() {
        let a = random(8, 40, 3);
        let e = a.echelon(None);
        assert_eq!(e.rank(), 8);
        assert!(e.pivots.iter().all(|&p| p >= 30), "{:?}", e.pivots);
    }

    #[test]
    fn matrix_vector_product() {
        let mut a = BitMatrix::zeros(2, 3);
        a.set(0, 0, true);
        a.set(0, 2, true);
        a.set(1, 1, true);
        assert_eq!(a.mul_vec(&[1, 1, 1]), vec![0, 1]);
    }
}
