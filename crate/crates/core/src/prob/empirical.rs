use super::{Alphabet, JointPmf, Pmf};
use crate::error::{Error, Result};

/// Symbol counts of one sequence, or of a pair of aligned sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalType {
    alphabets: Vec<Alphabet>,
    counts: Vec<usize>,
    n: usize,
}

fn check_symbols(seq: &[usize], size: usize) -> Result<()> {
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    match seq.iter().find(|&&s| s >= size) {
        Some(&symbol) => Err(Error::SymbolOutOfRange { symbol, size }),
        None => Ok(()),
    }
}

impl EmpiricalType {
    pub fn of(seq: &[usize], alphabet: &Alphabet) -> Result<Self> {
        check_symbols(seq, alphabet.len())?;
        let mut counts = vec![0usize; alphabet.len()];
        for &s in seq {
            counts[s] += 1;
        }
        Ok(Self {
            alphabets: vec![alphabet.clone()],
            counts,
            n: seq.len(),
        })
    }

    pub fn of_pair(a: &[usize], b: &[usize], first: &Alphabet, second: &Alphabet) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::LengthMismatch(a.len(), b.len()));
        }
        check_symbols(a, first.len())?;
        check_symbols(b, second.len())?;
        let cols = second.len();
        let mut counts = vec![0usize; first.len() * cols];
        for (&x, &y) in a.iter().zip(b) {
            counts[x * cols + y] += 1;
        }
        Ok(Self {
            alphabets: vec![first.clone(), second.clone()],
            counts,
            n: a.len(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn alphabets(&self) -> &[Alphabet] {
        &self.alphabets
    }

    pub fn is_joint(&self) -> bool {
        self.alphabets.len() == 2
    }

    fn frequencies(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.n as f64).collect()
    }

    /// Induced pmf of a single-sequence type.
    pub fn to_pmf(&self) -> Result<Pmf> {
        if self.is_joint() {
            return Err(Error::InvalidArgument("joint type has no single pmf".into()));
        }
        Ok(Pmf::from_solver(self.alphabets[0].clone(), self.frequencies()))
    }

    /// Induced joint pmf of a paired type.
    pub fn to_joint(&self) -> Result<JointPmf> {
        if !self.is_joint() {
            return Err(Error::InvalidArgument("not a joint type".into()));
        }
        Ok(JointPmf::from_solver(
            self.alphabets[0].clone(),
            self.alphabets[1].clone(),
            self.frequencies(),
        ))
    }
}
