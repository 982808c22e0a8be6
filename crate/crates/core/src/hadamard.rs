//! Hadamard code arithmetic.
//!
//! For order `r` the code has length `q = 2^r` and `2q` codewords
//! `c_{s,j}(i) = s ^ parity(i & j)` (columns of `+H_q` and `-H_q` with
//! `+1 -> 0`, `-1 -> 1`). For even `r` the bits at positions
//! `{0, 1, 2, 4, ..., 2^(r-1), 2^r - 1}` form a single-parity-check word,
//! which is what lets an H-CN take `r + 2` P-VN bits as its systematic input.
//!
//! LLRs use `ln(P(0) / P(1))` and are clamped to `±LLR_SATURATION` before
//! decoding.

use crate::error::{Error, Result};

/// Magnitude at which all LLRs entering a decoder are clamped.
pub const LLR_SATURATION: f64 = 100.0;

/// Largest order for which the sign matrix is materialized.
pub const MAX_MATRIX_ORDER: u32 = 14;

/// Largest order for which the full codeword list is materialized.
pub const MAX_ENUMERATION_ORDER: u32 = 10;

#[inline]
fn parity(x: usize) -> u8 {
    (x.count_ones() & 1) as u8
}

/// Bit `i` of codeword `(s, j)`.
#[inline]
pub fn codeword_bit(sign: u8, column: usize, i: usize) -> u8 {
    sign ^ parity(i & column)
}

/// Sylvester-Hadamard matrix of order `r`, entries `±1`.
pub fn hadamard_matrix(order: u32) -> Result<Vec<Vec<i8>>> {
    if order > MAX_MATRIX_ORDER {
        return Err(Error::UnsupportedOrder(order));
    }
    let mut h = vec![vec![1i8]];
    for _ in 0..order {
        let half = h.len();
        let mut next = vec![vec![0i8; 2 * half]; 2 * half];
        for i in 0..half {
            for j in 0..half {
                let v = h[i][j];
                next[i][j] = v;
                next[i][j + half] = v;
                next[i + half][j] = v;
                next[i + half][j + half] = -v;
            }
        }
        h = next;
    }
    Ok(h)
}

/// All `2^(r+1)` codewords, `+H` columns first, then `-H` columns.
pub fn codeword_set(order: u32) -> Result<Vec<Vec<u8>>> {
    if order > MAX_ENUMERATION_ORDER {
        return Err(Error::UnsupportedOrder(order));
    }
    let q = 1usize << order;
    let mut out = Vec::with_capacity(2 * q);
    for sign in 0..2u8 {
        for j in 0..q {
            out.push((0..q).map(|i| codeword_bit(sign, j, i)).collect());
        }
    }
    Ok(out)
}

/// In-place fast Walsh-Hadamard transform (Sylvester ordering, unnormalized).
pub fn fwht(v: &mut [f64]) {
    let n = v.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for chunk in v.chunks_exact_mut(2 * h) {
            let (x, y) = chunk.split_at_mut(h);
            for (a, b) in x.iter_mut().zip(y.iter_mut()) {
                let (u, w) = (*a, *b);
                *a = u + w;
                *b = u - w;
            }
        }
        h *= 2;
    }
}

#[inline]
fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// An even-order Hadamard code with its systematic (SPC) positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HadamardCode {
    order: u32,
    info_positions: Vec<usize>,
    parity_positions: Vec<usize>,
}

/// A-posteriori LLRs at every code position and extrinsic LLRs at the
/// information positions.
#[derive(Clone, Debug, PartialEq)]
pub struct MapOutput {
    pub app: Vec<f64>,
    pub ext_info: Vec<f64>,
}

impl HadamardCode {
    /// Builds the code. Odd orders (non-systematic encoding) are rejected.
    pub fn new(order: u32) -> Result<Self> {
        if order < 2 || order % 2 == 1 || order > MAX_MATRIX_ORDER {
            return Err(Error::UnsupportedOrder(order));
        }
        let q = 1usize << order;
        let mut info_positions = vec![0];
        info_positions.extend((0..order).map(|k| 1usize << k));
        info_positions.push(q - 1);
        let parity_positions = (0..q).filter(|i| !info_positions.contains(i)).collect();
        Ok(HadamardCode {
            order,
            info_positions,
            parity_positions,
        })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Code length `q = 2^r`.
    pub fn len(&self) -> usize {
        1 << self.order
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of systematic positions, `d = r + 2`.
    pub fn degree(&self) -> usize {
        self.info_positions.len()
    }

    /// Number of D1H-VN bits per H-CN, `2^r - r - 2`.
    pub fn parity_count(&self) -> usize {
        self.parity_positions.len()
    }

    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    pub fn parity_positions(&self) -> &[usize] {
        &self.parity_positions
    }

    /// Codeword index `(s, j)` whose info positions carry `info`, or
    /// `SpcViolation` if the bits do not XOR to zero.
    pub fn codeword_index(&self, info: &[u8]) -> Result<(u8, usize)> {
        if info.len() != self.degree() {
            return Err(Error::LengthMismatch {
                expected: self.degree(),
                got: info.len(),
            });
        }
        if info.iter().fold(0u8, |acc, &b| acc ^ (b & 1)) != 0 {
            return Err(Error::SpcViolation);
        }
        let sign = info[0] & 1;
        let column = (0..self.order as usize).fold(0usize, |j, k| j | (((info[k + 1] & 1) ^ sign) as usize) << k);
        Ok((sign, column))
    }

    /// Systematic encoding: `s = info[0]`, `j_k = info[2^k] ^ s`.
    pub fn encode_systematic(&self, info: &[u8]) -> Result<Vec<u8>> {
        let (sign, column) = self.codeword_index(info)?;
        Ok((0..self.len()).map(|i| codeword_bit(sign, column, i)).collect())
    }

    /// Writes only the parity (D1H-VN) bits of the systematic codeword.
    pub fn encode_parity_into(&self, info: &[u8], out: &mut [u8]) -> Result<()> {
        let (sign, column) = self.codeword_index(info)?;
        for (o, &p) in out.iter_mut().zip(&self.parity_positions) {
            *o = codeword_bit(sign, column, p);
        }
        Ok(())
    }

    /// Membership test for a full `q`-bit word.
    pub fn is_codeword(&self, word: &[u8]) -> bool {
        if word.len() != self.len() {
            return false;
        }
        let sign = word[0] & 1;
        let column = (0..self.order as usize).fold(0usize, |j, k| j | (((word[1 << k] & 1) ^ sign) as usize) << k);
        word.iter()
            .enumerate()
            .all(|(i, &b)| (b & 1) == codeword_bit(sign, column, i))
    }

    fn clamp_input(&self, llr: &[f64]) -> Result<Vec<f64>> {
        if llr.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: llr.len(),
            });
        }
        llr.iter()
            .enumerate()
            .map(|(i, &v)| {
                if v.is_finite() {
                    Ok(v.clamp(-LLR_SATURATION, LLR_SATURATION))
                } else {
                    Err(Error::NonFiniteLlr(i))
                }
            })
            .collect()
    }

    fn output(&self, clamped: &[f64], app: Vec<f64>) -> MapOutput {
        let ext_info = self
            .info_positions
            .iter()
            .map(|&p| app[p] - clamped[p])
            .collect();
        MapOutput { app, ext_info }
    }

    /// Exact symbol-MAP decoding by enumerating all `2q` codewords.
    pub fn decode_map_reference(&self, llr: &[f64]) -> Result<MapOutput> {
        let lam = self.clamp_input(llr)?;
        let q = self.len();
        let mut metrics = Vec::with_capacity(2 * q);
        for sign in 0..2u8 {
            for j in 0..q {
                let m: f64 = (0..q)
                    .map(|i| if codeword_bit(sign, j, i) == 0 { lam[i] } else { -lam[i] })
                    .sum();
                metrics.push((sign, j, 0.5 * m));
            }
        }
        let app = (0..q)
            .map(|k| {
                let (mut zero, mut one) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
                for &(sign, j, m) in &metrics {
                    if codeword_bit(sign, j, k) == 0 {
                        zero = ln_add_exp(zero, m);
                    } else {
                        one = ln_add_exp(one, m);
                    }
                }
                zero - one
            })
            .collect();
        Ok(self.output(&lam, app))
    }

    /// Exact symbol-MAP decoding through Walsh-Hadamard butterflies.
    pub fn decode_map(&self, llr: &[f64]) -> Result<MapOutput> {
        let lam = self.clamp_input(llr)?;
        let mut dec = MapDecoder::new(self.clone());
        let mut app = vec![0.0; self.len()];
        dec.app_into(&lam, &mut app);
        Ok(self.output(&lam, app))
    }
}

/// In-place `exp` for arguments in `[-708, 709]` (values outside are
/// clamped), accurate to a few ulp. Branch-free so the loop vectorizes.
fn exp_in_place(xs: &mut [f64]) {
    const LN2_HI: f64 = 6.931_471_803_691_238_2e-1;
    const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
    // 1.5 * 2^52: adding it rounds to an integer kept in the low mantissa bits
    const SHIFTER: f64 = 6_755_399_441_055_744.0;
    for v in xs.iter_mut() {
        let x = v.clamp(-708.0, 709.0);
        let t = x * std::f64::consts::LOG2_E + SHIFTER;
        let k = t - SHIFTER;
        let r = (x - k * LN2_HI) - k * LN2_LO;
        // Taylor series to degree 12 on |r| <= ln(2)/2
        let mut p = 1.0 / 479_001_600.0;
        p = p * r + 1.0 / 39_916_800.0;
        p = p * r + 1.0 / 3_628_800.0;
        p = p * r + 1.0 / 362_880.0;
        p = p * r + 1.0 / 40_320.0;
        p = p * r + 1.0 / 5_040.0;
        p = p * r + 1.0 / 720.0;
        p = p * r + 1.0 / 120.0;
        p = p * r + 1.0 / 24.0;
        p = p * r + 1.0 / 6.0;
        p = p * r + 0.5;
        p = p * r + 1.0;
        p = p * r + 1.0;
        let scale = f64::from_bits(t.to_bits().wrapping_add(1023) << 52);
        *v = p * scale;
    }
}

/// Pairwise `(N, D)` butterfly; `add` is `+` in the exponential domain and
/// `ln_add_exp` in the log domain.
#[inline(always)]
fn butterfly(num: &mut [f64], den: &mut [f64], add: impl Fn(f64, f64) -> f64) {
    let q = num.len();
    let mut h = 1;
    while h < q {
        for (nc, dc) in num.chunks_exact_mut(2 * h).zip(den.chunks_exact_mut(2 * h)) {
            let (nx, ny) = nc.split_at_mut(h);
            let (dx, dy) = dc.split_at_mut(h);
            for i in 0..h {
                let (a, b, c, d) = (nx[i], dx[i], ny[i], dy[i]);
                nx[i] = add(a, c);
                dx[i] = add(b, d);
                ny[i] = add(a, d);
                dy[i] = add(b, c);
            }
        }
        h *= 2;
    }
}

/// Allocation-free MAP decoder for hot loops.
///
/// Inputs must already be finite and clamped. Codeword metrics are
/// `±F_j / 2` with `F = WHT(λ)`. For position `k`, `N_k` sums the
/// exponentiated metrics of codewords with bit `k` = 0 and `D_k` those with
/// bit `k` = 1; the APP is `ln(N_k / D_k)`. All positions are covered by a
/// `q log q` butterfly whose "negative" branch swaps the two accumulators
/// instead of subtracting, so only positive terms are ever added. The
/// information positions alone are cheaper as direct masked sums. The
/// exponential domain is tried first and the log domain is used when a sum
/// underflows.
#[derive(Clone, Debug)]
pub struct MapDecoder {
    code: HadamardCode,
    spectrum: Vec<f64>,
    num: Vec<f64>,
    den: Vec<f64>,
    /// `info_bits[k * q + j]` is bit `info_positions[k]` of codeword `(0, j)`.
    info_bits: Vec<f64>,
    info_num: Vec<f64>,
    info_den: Vec<f64>,
}

const UNDERFLOW: f64 = 1e-290;

impl MapDecoder {
    pub fn new(code: HadamardCode) -> Self {
        let q = code.len();
        let info_bits = code
            .info_positions
            .iter()
            .flat_map(|&p| (0..q).map(move |j| codeword_bit(0, j, p) as f64))
            .collect();
        let d = code.degree();
        MapDecoder {
            code,
            spectrum: vec![0.0; q],
            num: vec![0.0; q],
            den: vec![0.0; q],
            info_bits,
            info_num: vec![0.0; d],
            info_den: vec![0.0; d],
        }
    }

    pub fn code(&self) -> &HadamardCode {
        &self.code
    }

    /// Fills `num`/`den` with the scaled metric exponentials of the `+` and
    /// `-` codewords.
    fn metrics(&mut self, lam: &[f64]) {
        self.spectrum.copy_from_slice(lam);
        fwht(&mut self.spectrum);
        let peak = self.spectrum.iter().fold(0.0f64, |m, &f| m.max(f.abs())) * 0.5;
        for ((n, d), &f) in self.num.iter_mut().zip(self.den.iter_mut()).zip(&self.spectrum) {
            *n = 0.5 * f - peak;
            *d = -0.5 * f - peak;
        }
        exp_in_place(&mut self.num);
        exp_in_place(&mut self.den);
    }

    fn log_domain_butterfly(&mut self) {
        for ((n, d), &f) in self.num.iter_mut().zip(self.den.iter_mut()).zip(&self.spectrum) {
            *n = 0.5 * f;
            *d = -0.5 * f;
        }
        butterfly(&mut self.num, &mut self.den, ln_add_exp);
    }

    /// Leaves `N_k`, `D_k` for every position in `num`/`den`. Returns `true`
    /// for the exponential domain, `false` when they hold logarithms.
    fn all_positions(&mut self, lam: &[f64]) -> bool {
        self.metrics(lam);
        butterfly(&mut self.num, &mut self.den, |a, b| a + b);
        let smallest = self.num.iter().chain(self.den.iter()).fold(f64::INFINITY, |m, &v| m.min(v));
        if smallest >= UNDERFLOW {
            return true;
        }
        self.log_domain_butterfly();
        false
    }

    /// Like [`Self::all_positions`] but only for the information positions,
    /// left in `info_num`/`info_den`.
    fn info_positions(&mut self, lam: &[f64]) -> bool {
        self.metrics(lam);
        let q = self.num.len();
        let mut smallest = f64::INFINITY;
        for (k, bits) in self.info_bits.chunks_exact(q).enumerate() {
            // four independent lanes so the reduction vectorizes
            let (mut n4, mut d4) = ([0.0; 4], [0.0; 4]);
            for ((a, b), m) in self.num.chunks_exact(4).zip(self.den.chunks_exact(4)).zip(bits.chunks_exact(4)) {
                for l in 0..4 {
                    // multiplying by an exact 0 or 1 keeps tiny terms exact
                    n4[l] += a[l] * (1.0 - m[l]) + b[l] * m[l];
                    d4[l] += b[l] * (1.0 - m[l]) + a[l] * m[l];
                }
            }
            let n = (n4[0] + n4[1]) + (n4[2] + n4[3]);
            let d = (d4[0] + d4[1]) + (d4[2] + d4[3]);
            self.info_num[k] = n;
            self.info_den[k] = d;
            smallest = smallest.min(n).min(d);
        }
        if smallest >= UNDERFLOW {
            return true;
        }
        self.log_domain_butterfly();
        for (k, &p) in self.code.info_positions.iter().enumerate() {
            self.info_num[k] = self.num[p];
            self.info_den[k] = self.den[p];
        }
        false
    }

    /// A-posteriori LLRs at all `q` positions.
    pub fn app_into(&mut self, lam: &[f64], app: &mut [f64]) {
        if self.all_positions(lam) {
            for ((a, n), d) in app.iter_mut().zip(&self.num).zip(&self.den) {
                *a = (n / d).ln();
            }
        } else {
            for ((a, n), d) in app.iter_mut().zip(&self.num).zip(&self.den) {
                *a = n - d;
            }
        }
    }

    /// Extrinsic LLRs at the `d` information positions only.
    pub fn ext_info_into(&mut self, lam: &[f64], ext: &mut [f64]) {
        let exp_domain = self.info_positions(lam);
        for (k, (e, &p)) in ext.iter_mut().zip(&self.code.info_positions).enumerate() {
            let (n, d) = (self.info_num[k], self.info_den[k]);
            let app = if exp_domain { (n / d).ln() } else { n - d };
            *e = app - lam[p];
        }
    }

    /// Per-sample mutual-information loss `log2(1 + exp(-(1 - 2u) e))` at
    /// every information position, where `u` is the transmitted bit and `e`
    /// the extrinsic LLR.
    pub fn info_loss_into(&mut self, lam: &[f64], bits: &[u8], loss: &mut [f64]) {
        let exp_domain = self.info_positions(lam);
        let info = &self.code.info_positions;
        if exp_domain {
            // exp(-e) = (D / N) * exp(λ), avoiding a log and a second exp
            let mut scale = [0.0; MAX_MATRIX_ORDER as usize + 2];
            let scale = &mut scale[..info.len()];
            for (s, &p) in scale.iter_mut().zip(info) {
                *s = lam[p];
            }
            exp_in_place(scale);
            for (k, &p) in info.iter().enumerate() {
                let (n, d) = (self.info_num[k], self.info_den[k]);
                let rho = d / n * scale[k];
                let rho = if bits[k] == 0 { rho } else { 1.0 / rho };
                loss[k] = if rho < 1e300 {
                    rho.ln_1p() * std::f64::consts::LOG2_E
                } else {
                    stable_loss(n.ln() - d.ln() - lam[p], bits[k])
                };
            }
        } else {
            for (k, &p) in info.iter().enumerate() {
                loss[k] = stable_loss(self.info_num[k] - self.info_den[k] - lam[p], bits[k]);
            }
        }
    }
}

fn stable_loss(ext: f64, bit: u8) -> f64 {
    let x = if bit == 0 { ext } else { -ext };
    let v = if x > 0.0 { (-x).exp().ln_1p() } else { -x + x.exp().ln_1p() };
    v * std::f64::consts::LOG2_E
}
