//! The J-function relating the spread of a consistent Gaussian LLR
//! (mean `σ²/2`, variance `σ²`) to its mutual information with the bit.

use std::sync::OnceLock;

use crate::hadamard::LLR_SATURATION;

const NODES: usize = 64;
const INVERSE_TOL: f64 = 1e-8;

/// Spread whose mean LLR equals the saturation value.
pub fn saturation_sigma() -> f64 {
    (2.0 * LLR_SATURATION).sqrt()
}

/// Gauss-Hermite nodes and weights for the weight `exp(-x²)`.
fn gauss_hermite() -> &'static [(f64, f64)] {
    static TABLE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = NODES;
        let pim4 = std::f64::consts::PI.powf(-0.25);
        let mut out = vec![(0.0, 0.0); n];
        let mut z = 0.0f64;
        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * (n as f64).powf(0.426) / z,
                2 => 1.86 * z - 0.86 * out[0].0,
                3 => 1.91 * z - 0.91 * out[1].0,
                _ => 2.0 * z - out[i - 2].0,
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                // orthonormal Hermite recurrence
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    p1 = z * (2.0 / (j + 1) as f64).sqrt() * p2 - (j as f64 / (j + 1) as f64).sqrt() * p3;
                }
                pp = (2.0 * n as f64).sqrt() * p2;
                let step = p1 / pp;
                z -= step;
                if step.abs() < 1e-15 {
                    break;
                }
            }
            let w = 2.0 / (pp * pp);
            out[i] = (z, w);
            out[n - 1 - i] = (-z, w);
        }
        out
    })
}

/// `log2(1 + exp(-x))` without overflow.
#[inline]
pub(crate) fn log2_one_plus_exp_neg(x: f64) -> f64 {
    let v = if x > 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    };
    v * std::f64::consts::LOG2_E
}

/// `J(σ)`, evaluated by 64-node Gauss-Hermite quadrature.
pub fn j_of_sigma(sigma: f64) -> f64 {
    if !(sigma > 0.0) {
        return 0.0;
    }
    let mean = 0.5 * sigma * sigma;
    let scale = std::f64::consts::SQRT_2 * sigma;
    let loss: f64 = gauss_hermite()
        .iter()
        .map(|&(x, w)| w * log2_one_plus_exp_neg(mean + scale * x))
        .sum::<f64>()
        / std::f64::consts::PI.sqrt();
    (1.0 - loss).clamp(0.0, 1.0)
}

/// `J⁻¹(I)` by bisection. Values at or above `J(saturation_sigma())` map
/// to the saturation spread.
pub fn sigma_of_j(mi: f64) -> f64 {
    if mi <= 0.0 {
        return 0.0;
    }
    let hi_sigma = saturation_sigma();
    if mi >= j_of_sigma(hi_sigma) {
        return hi_sigma;
    }
    let (mut lo, mut hi) = (0.0, hi_sigma);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = j_of_sigma(mid);
        if (v - mi).abs() <= INVERSE_TOL * 1e-2 || hi - lo < 1e-13 {
            return mid;
        }
        if v < mi {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
