//! Relay encoders and decoders acting on explicit sequences.

use rand::Rng;

use super::codebook::{Codebook, Symbol};
use crate::error::{Error, Result};
use crate::prob::{JointPmf, Metric, MetricKind};

/// Relative tolerance under which two decoding scores count as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

pub(crate) fn tied(a: f64, b: f64) -> bool {
    if !(a.is_finite() && b.is_finite()) {
        return a == b;
    }
    (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// Joint counts of `(a_i, b_i)`, row-major with `cols` columns.
pub(crate) fn joint_counts(a: &[Symbol], b: &[Symbol], rows: usize, cols: usize) -> Vec<usize> {
    let mut c = vec![0usize; rows * cols];
    for (&x, &y) in a.iter().zip(b) {
        c[x as usize * cols + y as usize] += 1;
    }
    c
}

/// Entrywise `(1 ± ε)` test of a joint type against `target`; zero-target cells must be empty.
pub(crate) fn is_typical(counts: &[usize], target: &[f64], n: usize, eps: f64) -> bool {
    counts.iter().zip(target).all(|(&c, &p)| {
        let f = c as f64 / n as f64;
        if p == 0.0 {
            c == 0
        } else {
            f >= (1.0 - eps) * p - 1e-15 && f <= (1.0 + eps) * p + 1e-15
        }
    })
}

/// `Σ N(x,z) ln V(z|x)` for a joint count table over `(X, Z)`.
pub(crate) fn metric_score(counts: &[usize], log_v: &[f64]) -> f64 {
    counts
        .iter()
        .zip(log_v)
        .filter(|(&c, _)| c > 0)
        .map(|(&c, &l)| c as f64 * l)
        .sum()
}

/// Empirical mutual information (nats) of a joint count table.
pub(crate) fn empirical_mi(counts: &[usize], rows: usize, cols: usize) -> f64 {
    let n: usize = counts.iter().sum();
    let mut r = vec![0usize; rows];
    let mut c = vec![0usize; cols];
    for (k, &v) in counts.iter().enumerate() {
        r[k / cols] += v;
        c[k % cols] += v;
    }
    let nf = n as f64;
    let mut mi = 0.0;
    for (k, &v) in counts.iter().enumerate() {
        if v > 0 {
            let v = v as f64;
            mi += v / nf * (v * nf / (r[k / cols] as f64 * c[k % cols] as f64)).ln();
        }
    }
    mi.max(0.0)
}

/// Outcome of typicality compression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RelayChoice {
    pub index: usize,
    /// No codeword was jointly typical; `index` was drawn uniformly.
    pub fallback: bool,
}

/// Picks uniformly among the codewords jointly typical with `y` under the
/// target `P_{YZ}` (codewords are `Z` sequences); falls back to a uniform
/// index when there are none.
pub fn relay_compress_typicality(
    y: &[Symbol],
    codebook: &Codebook,
    joint: &JointPmf,
    eps: f64,
    rng: &mut impl Rng,
) -> RelayChoice {
    let (ny, nz) = (joint.rows(), joint.cols());
    let typical: Vec<usize> = codebook
        .iter()
        .enumerate()
        .filter(|(_, z)| is_typical(&joint_counts(y, z, ny, nz), joint.probs(), y.len(), eps))
        .map(|(i, _)| i)
        .collect();
    if typical.is_empty() {
        RelayChoice {
            index: rng.gen_range(0..codebook.len()),
            fallback: true,
        }
    } else {
        RelayChoice {
            index: typical[rng.gen_range(0..typical.len())],
            fallback: false,
        }
    }
}

/// Index of the codeword with the smallest total distortion `Σ d0(y_i, z_i)`;
/// ties go to the smallest index.
pub fn relay_compress_mindist(y: &[Symbol], codebook: &Codebook, d0: &Metric) -> Result<usize> {
    d0.require(MetricKind::Distortion)?;
    let nz = d0.output().len();
    let d = d0.as_flat();
    let mut best = (0, f64::INFINITY);
    for (i, z) in codebook.iter().enumerate() {
        let counts = joint_counts(y, z, d0.input().len(), nz);
        let v: f64 = counts.iter().zip(d).map(|(&c, &d)| c as f64 * d).sum();
        if v < best.1 && !tied(v, best.1) {
            best = (i, v);
        }
    }
    Ok(best.0)
}

/// Decoding rule applied to the relay output.
#[derive(Debug, Clone, PartialEq)]
pub enum DecoderRule {
    /// `argmax_m Σ ln V(z_i | x_i(m))`.
    MaxMetric(Metric),
    /// The unique codeword with `(1/n) Σ log2 V >= θ - ε`.
    Threshold { metric: Metric, theta: f64, eps: f64 },
    /// Maximum empirical mutual information.
    Mmi,
    /// Maximum metric with the true end-to-end law; resolved by the simulator.
    MatchedMl,
}

impl DecoderRule {
    pub fn name(&self) -> &'static str {
        match self {
            DecoderRule::MaxMetric(_) => "max_metric",
            DecoderRule::Threshold { .. } => "threshold",
            DecoderRule::Mmi => "mmi",
            DecoderRule::MatchedMl => "matched_ml",
        }
    }
}

/// Decodes `z` against the transmitter codebook. Max-metric and MMI ties go to
/// the smallest index; the threshold rule fails unless exactly one codeword passes.
pub fn decode(z: &[Symbol], codebook: &Codebook, rule: &DecoderRule) -> Result<usize> {
    let argmax = |score: &dyn Fn(&[Symbol]) -> f64| {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, x) in codebook.iter().enumerate() {
            let s = score(x);
            if s > best.1 && !tied(s, best.1) {
                best = (i, s);
            }
        }
        best.0
    };
    match rule {
        DecoderRule::MaxMetric(v) => {
            v.require(MetricKind::Decoding)?;
            let (nx, nz, lv) = (v.input().len(), v.output().len(), v.log_values());
            Ok(argmax(&|x| metric_score(&joint_counts(x, z, nx, nz), &lv)))
        }
        DecoderRule::Mmi => {
            let size = |s: &[Symbol]| s.iter().copied().max().unwrap_or(0) as usize + 1;
            let nx = codebook.iter().map(size).max().unwrap_or(1);
            let nz = size(z);
            Ok(argmax(&|x| empirical_mi(&joint_counts(x, z, nx, nz), nx, nz)))
        }
        DecoderRule::Threshold { metric, theta, eps } => {
            metric.require(MetricKind::Decoding)?;
            let (nx, nz, lv) = (metric.input().len(), metric.output().len(), metric.log_values());
            let level = threshold_level_nats(*theta, *eps, z.len());
            let passing: Vec<usize> = codebook
                .iter()
                .enumerate()
                .filter(|(_, x)| metric_score(&joint_counts(x, z, nx, nz), &lv) >= level)
                .map(|(i, _)| i)
                .collect();
            match passing.as_slice() {
                [i] => Ok(*i),
                _ => Err(Error::DecodeFailure { passing: passing.len() }),
            }
        }
        DecoderRule::MatchedMl => Err(Error::DecoderConfig(
            "matched_ml needs the end-to-end channel; run it through simulate".into(),
        )),
    }
}

/// Total-score level (nats) a codeword must reach under the threshold rule.
pub(crate) fn threshold_level_nats(theta: f64, eps: f64, n: usize) -> f64 {
    let level = (theta - eps) * std::f64::consts::LN_2 * n as f64;
    level - TIE_TOLERANCE * level.abs().max(1.0)
}

/// Threshold level `θ = E[log2 V(Z|X)]` under the joint `P_{XZ}`.
pub fn threshold_level(p_xz: &JointPmf, metric: &Metric) -> Result<f64> {
    metric.require(MetricKind::Decoding)?;
    p_xz.first().ensure_compatible(metric.input())?;
    p_xz.second().ensure_compatible(metric.output())?;
    Ok(p_xz
        .probs()
        .iter()
        .zip(metric.as_flat())
        .filter(|(&p, _)| p > 0.0)
        .map(|(&p, &v)| p * v.log2())
        .sum())
}
