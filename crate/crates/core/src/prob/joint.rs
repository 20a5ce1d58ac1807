use super::pmf::{check_probability_vector, normalize_in_place};
use super::{measures, Alphabet, Channel, Pmf};
use crate::error::{Error, Result};

/// Which variable of a bivariate joint an operation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    First,
    Second,
}

/// A joint pmf over `first × second`, stored row-major (first index slow).
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    first: Alphabet,
    second: Alphabet,
    probs: Vec<f64>,
}

/// Result of a Bayes reversal: the conditional channel plus the conditioning
/// symbols that had zero mass and received a uniform row.
#[derive(Debug, Clone, PartialEq)]
pub struct Conditional {
    pub channel: Channel,
    pub zero_mass: Vec<usize>,
}

impl JointPmf {
    pub fn new(first: Alphabet, second: Alphabet, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != first.len() || rows.iter().any(|r| r.len() != second.len()) {
            return Err(Error::InvalidDistribution(format!(
                "joint table must be {}x{}",
                first.len(),
                second.len()
            )));
        }
        Self::from_flat(first, second, rows.concat())
    }

    pub fn from_flat(first: Alphabet, second: Alphabet, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != first.len() * second.len() {
            return Err(Error::InvalidDistribution(format!(
                "joint table has {} entries, expected {}",
                probs.len(),
                first.len() * second.len()
            )));
        }
        check_probability_vector("joint pmf", &probs)?;
        Ok(Self {
            first,
            second,
            probs,
        })
    }

    pub(crate) fn from_solver(first: Alphabet, second: Alphabet, mut probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), first.len() * second.len());
        probs.iter_mut().for_each(|p| *p = p.max(0.0));
        normalize_in_place(&mut probs);
        Self {
            first,
            second,
            probs,
        }
    }

    /// `p(a) k(b|a)`.
    pub fn from_channel(k: &Channel, p: &Pmf) -> Result<Self> {
        k.input().ensure_compatible(p.alphabet())?;
        let probs = (0..k.inputs())
            .flat_map(|a| k.row(a).iter().map(move |&w| p.get(a) * w))
            .collect();
        Ok(Self::from_solver(p.alphabet().clone(), k.output().clone(), probs))
    }

    pub fn product(p: &Pmf, q: &Pmf) -> Self {
        let probs = p
            .probs()
            .iter()
            .flat_map(|&a| q.probs().iter().map(move |&b| a * b))
            .collect();
        Self {
            first: p.alphabet().clone(),
            second: q.alphabet().clone(),
            probs,
        }
    }

    pub fn first(&self) -> &Alphabet {
        &self.first
    }

    pub fn second(&self) -> &Alphabet {
        &self.second
    }

    pub fn rows(&self) -> usize {
        self.first.len()
    }

    pub fn cols(&self) -> usize {
        self.second.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.probs[a * self.cols() + b]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.probs.chunks(self.cols()).map(|r| r.to_vec()).collect()
    }

    pub fn marginal(&self, axis: Axis) -> Pmf {
        let (r, c) = (self.rows(), self.cols());
        match axis {
            Axis::First => {
                let v = (0..r).map(|a| self.probs[a * c..(a + 1) * c].iter().sum()).collect();
                Pmf::from_solver(self.first.clone(), v)
            }
            Axis::Second => {
                let mut v = vec![0.0; c];
                for a in 0..r {
                    for b in 0..c {
                        v[b] += self.probs[a * c + b];
                    }
                }
                Pmf::from_solver(self.second.clone(), v)
            }
        }
    }

    /// Conditional channel given `axis`: `First` yields `P(second | first)`,
    /// `Second` yields `P(first | second)`.
    pub fn condition(&self, axis: Axis) -> Conditional {
        let (r, c) = (self.rows(), self.cols());
        let (given, other, n_given, n_other) = match axis {
            Axis::First => (&self.first, &self.second, r, c),
            Axis::Second => (&self.second, &self.first, c, r),
        };
        let mut rows = vec![0.0; n_given * n_other];
        let mut zero_mass = Vec::new();
        for g in 0..n_given {
            let entry = |o: usize| match axis {
                Axis::First => self.probs[g * c + o],
                Axis::Second => self.probs[o * c + g],
            };
            let mass: f64 = (0..n_other).map(entry).sum();
            for o in 0..n_other {
                rows[g * n_other + o] = if mass > 0.0 {
                    entry(o) / mass
                } else {
                    1.0 / n_other as f64
                };
            }
            if mass <= 0.0 {
                zero_mass.push(g);
            }
        }
        Conditional {
            channel: Channel::from_solver(given.clone(), other.clone(), rows),
            zero_mass,
        }
    }

    pub fn transpose(&self) -> JointPmf {
        let (r, c) = (self.rows(), self.cols());
        let mut probs = vec![0.0; r * c];
        for a in 0..r {
            for b in 0..c {
                probs[b * r + a] = self.probs[a * c + b];
            }
        }
        JointPmf {
            first: self.second.clone(),
            second: self.first.clone(),
            probs,
        }
    }

    /// Joint of `first` and the output of `k` applied to `second`:
    /// `Σ_b p(a,b) k(c|b)`.
    pub fn push_second(&self, k: &Channel) -> Result<JointPmf> {
        self.second.ensure_compatible(k.input())?;
        let (r, c, o) = (self.rows(), self.cols(), k.outputs());
        let mut probs = vec![0.0; r * o];
        for a in 0..r {
            for b in 0..c {
                let p = self.probs[a * c + b];
                if p == 0.0 {
                    continue;
                }
                for z in 0..o {
                    probs[a * o + z] += p * k.get(b, z);
                }
            }
        }
        Ok(JointPmf::from_solver(self.first.clone(), k.output().clone(), probs))
    }

    /// Mutual information in bits.
    pub fn mutual_information(&self) -> f64 {
        measures::to_bits(measures::mutual_information_nats(
            &self.probs,
            self.rows(),
            self.cols(),
        ))
    }

    pub fn entropy(&self) -> f64 {
        measures::to_bits(measures::entropy_nats(&self.probs))
    }

    pub fn product_of_marginals(&self) -> JointPmf {
        JointPmf::product(&self.marginal(Axis::First), &self.marginal(Axis::Second))
    }
}
