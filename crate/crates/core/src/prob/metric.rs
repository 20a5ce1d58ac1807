use super::Alphabet;
use crate::error::{Error, Result};

/// Smallest admissible entry of a decoding metric; keeps `log V` finite.
pub const MIN_DECODING_VALUE: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    /// Likelihood-like weights `V(z|x) > 0`, larger is better.
    Decoding,
    /// Costs `d0(y,z) ≥ 0`, smaller is better.
    Distortion,
}

/// A dense metric matrix, one row per input symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    kind: MetricKind,
    input: Alphabet,
    output: Alphabet,
    values: Vec<f64>,
}

impl Metric {
    pub fn new(
        kind: MetricKind,
        input: Alphabet,
        output: Alphabet,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if rows.len() != input.len() || rows.iter().any(|r| r.len() != output.len()) {
            return Err(Error::InvalidMetric(format!(
                "metric must be {}x{}",
                input.len(),
                output.len()
            )));
        }
        let values = rows.concat();
        for (k, &v) in values.iter().enumerate() {
            let (i, j) = (k / output.len(), k % output.len());
            match kind {
                MetricKind::Decoding if !(v.is_finite() && v >= MIN_DECODING_VALUE) => {
                    return Err(Error::InvalidMetric(format!(
                        "decoding metric entry [{i}][{j}] = {v} must be strictly positive (>= {MIN_DECODING_VALUE:e}) and finite"
                    )));
                }
                MetricKind::Distortion if !(v.is_finite() && v >= 0.0) => {
                    return Err(Error::InvalidMetric(format!(
                        "distortion entry [{i}][{j}] = {v} must be finite and nonnegative"
                    )));
                }
                _ => {}
            }
        }
        Ok(Self {
            kind,
            input,
            output,
            values,
        })
    }

    pub fn decoding(input: Alphabet, output: Alphabet, rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(MetricKind::Decoding, input, output, rows)
    }

    pub fn distortion(input: Alphabet, output: Alphabet, rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(MetricKind::Distortion, input, output, rows)
    }

    /// Hamming distortion between two copies of `alphabet`.
    pub fn hamming(alphabet: &Alphabet, output_name: &str) -> Self {
        let n = alphabet.len();
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
            .collect();
        Self::distortion(alphabet.clone(), alphabet.renamed(output_name), rows)
            .expect("hamming distortion is valid")
    }

    /// Decoding metric with the channel's transition probabilities as weights.
    /// Zero transitions are floored at [`MIN_DECODING_VALUE`].
    pub fn matched(channel: &super::Channel) -> Self {
        let values = channel
            .as_flat()
            .iter()
            .map(|&w| w.max(MIN_DECODING_VALUE))
            .collect();
        Self {
            kind: MetricKind::Decoding,
            input: channel.input().clone(),
            output: channel.output().clone(),
            values,
        }
    }

    pub fn constant(kind: MetricKind, input: Alphabet, output: Alphabet, value: f64) -> Result<Self> {
        let rows = vec![vec![value; output.len()]; input.len()];
        Self::new(kind, input, output, rows)
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    pub fn input(&self) -> &Alphabet {
        &self.input
    }

    pub fn output(&self) -> &Alphabet {
        &self.output
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.output.len() + j]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.output.len()).map(|r| r.to_vec()).collect()
    }

    /// Natural log of every entry (decoding metrics only).
    pub fn log_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.ln()).collect()
    }

    pub(crate) fn require(&self, kind: MetricKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::InvalidMetric(format!(
                "expected a {kind:?} metric, got {:?}",
                self.kind
            )))
        }
    }

    /// `c·V^γ`, used to check scale and power invariance.
    pub fn scaled_power(&self, c: f64, gamma: f64) -> Result<Self> {
        let rows = self
            .to_rows()
            .into_iter()
            .map(|r| r.into_iter().map(|v| c * v.powf(gamma)).collect())
            .collect();
        Self::new(self.kind, self.input.clone(), self.output.clone(), rows)
    }
}
