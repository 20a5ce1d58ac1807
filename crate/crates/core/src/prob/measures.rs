//! Information measures on raw probability slices.
//!
//! Everything here works in nats; the typed wrappers in the parent module
//! convert to bits at the public boundary.

use crate::error::{Error, Result};

pub const LN_2: f64 = std::f64::consts::LN_2;

#[inline]
pub fn to_bits(nats: f64) -> f64 {
    nats / LN_2
}

#[inline]
pub fn to_nats(bits: f64) -> f64 {
    bits * LN_2
}

/// `x ln x` with the convention `0 ln 0 = 0`.
#[inline]
pub fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// `x ln(x / y)`, zero when `x` is zero.
#[inline]
pub fn xlogxy(x: f64, y: f64) -> f64 {
    if x > 0.0 {
        x * (x / y).ln()
    } else {
        0.0
    }
}

pub fn entropy_nats(p: &[f64]) -> f64 {
    -p.iter().map(|&x| xlogx(x)).sum::<f64>()
}

pub fn kl_nats(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch(p.len(), q.len()));
    }
    let mut d = 0.0;
    for (i, (&a, &b)) in p.iter().zip(q).enumerate() {
        if a > 0.0 {
            if b <= 0.0 {
                return Err(Error::AbsoluteContinuityViolation { index: i, p: a });
            }
            d += a * (a / b).ln();
        }
    }
    Ok(d.max(0.0))
}

/// Mutual information of a row-major `rows x cols` joint table.
pub fn mutual_information_nats(joint: &[f64], rows: usize, cols: usize) -> f64 {
    debug_assert_eq!(joint.len(), rows * cols);
    let mut pr = vec![0.0; rows];
    let mut pc = vec![0.0; cols];
    for i in 0..rows {
        for j in 0..cols {
            let v = joint[i * cols + j];
            pr[i] += v;
            pc[j] += v;
        }
    }
    let mut mi = 0.0;
    for i in 0..rows {
        for j in 0..cols {
            let v = joint[i * cols + j];
            if v > 0.0 {
                mi += v * (v / (pr[i] * pc[j])).ln();
            }
        }
    }
    mi.max(0.0)
}

/// Mutual information `I(P_in, W)` of an input pmf and a row-major channel.
pub fn channel_mutual_information_nats(input: &[f64], channel: &[f64], outputs: usize) -> f64 {
    let joint: Vec<f64> = input
        .iter()
        .enumerate()
        .flat_map(|(i, &p)| channel[i * outputs..(i + 1) * outputs].iter().map(move |&w| p * w))
        .collect();
    mutual_information_nats(&joint, input.len(), outputs)
}

/// Numerically stable `ln Σ exp(v)`; returns `-inf` for an empty or all `-inf` slice.
pub fn log_sum_exp(v: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let m = v.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.into_iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Binary entropy in bits.
pub fn h2(p: f64) -> f64 {
    to_bits(entropy_nats(&[p, 1.0 - p]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conventions() {
        assert_eq!(xlogx(0.0), 0.0);
        assert_eq!(entropy_nats(&[1.0, 0.0]), 0.0);
        assert!((h2(0.5) - 1.0).abs() < 1e-15);
        assert!(kl_nats(&[0.5, 0.5], &[1.0, 0.0]).is_err());
        assert_eq!(log_sum_exp([f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert!((log_sum_exp([0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
    }
}
