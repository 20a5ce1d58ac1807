use super::{measures, Alphabet};
use crate::error::{Error, Result};

/// Tolerance on the total mass of a probability vector at construction.
pub const MASS_TOLERANCE: f64 = 1e-12;

pub(crate) fn check_probability_vector(what: &str, probs: &[f64]) -> Result<()> {
    for (i, &p) in probs.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "{what}: entry {i} is {p}, expected a finite nonnegative number"
            )));
        }
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::InvalidDistribution(format!(
            "{what}: entries sum to {total}, expected 1"
        )));
    }
    Ok(())
}

/// Rescales nonnegative weights to unit mass in place; returns the original mass.
pub(crate) fn normalize_in_place(v: &mut [f64]) -> f64 {
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter_mut().for_each(|x| *x /= total);
    }
    total
}

/// A probability mass function over a finite alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    alphabet: Alphabet,
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(alphabet: Alphabet, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != alphabet.len() {
            return Err(Error::InvalidDistribution(format!(
                "pmf over {alphabet} has {} entries",
                probs.len()
            )));
        }
        check_probability_vector(&format!("pmf over {}", alphabet.name()), &probs)?;
        Ok(Self { alphabet, probs })
    }

    /// Builds a pmf from nonnegative weights by explicit renormalization.
    pub fn normalize(alphabet: Alphabet, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != alphabet.len() {
            return Err(Error::InvalidDistribution(format!(
                "weights over {alphabet} have {} entries",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let mut probs = weights;
        if normalize_in_place(&mut probs) <= 0.0 {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        Ok(Self { alphabet, probs })
    }

    pub fn uniform(alphabet: Alphabet) -> Self {
        let n = alphabet.len();
        Self {
            alphabet,
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(alphabet: Alphabet, index: usize) -> Result<Self> {
        if index >= alphabet.len() {
            return Err(Error::SymbolOutOfRange {
                symbol: index,
                size: alphabet.len(),
            });
        }
        let mut probs = vec![0.0; alphabet.len()];
        probs[index] = 1.0;
        Ok(Self { alphabet, probs })
    }

    /// Bernoulli pmf `(1 - p, p)` over `{0, 1}`.
    pub fn bernoulli(name: &str, p: f64) -> Result<Self> {
        Self::new(Alphabet::indexed(name, 2), vec![1.0 - p, p])
    }

    /// Internal constructor for solver output; clamps round-off and renormalizes.
    pub(crate) fn from_solver(alphabet: Alphabet, mut probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), alphabet.len());
        probs.iter_mut().for_each(|p| *p = p.max(0.0));
        normalize_in_place(&mut probs);
        Self { alphabet, probs }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// Entropy in bits.
    pub fn entropy(&self) -> f64 {
        measures::to_bits(measures::entropy_nats(&self.probs))
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| i)
    }

    pub fn total_variation(&self, other: &Pmf) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}
