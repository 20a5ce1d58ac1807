use super::pmf::{check_probability_vector, normalize_in_place};
use super::{Alphabet, Pmf};
use crate::error::{Error, Result};

/// A row-stochastic kernel `W(out | in)`, stored row-major with one row per
/// input symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    input: Alphabet,
    output: Alphabet,
    rows: Vec<f64>,
}

impl Channel {
    pub fn new(input: Alphabet, output: Alphabet, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != input.len() {
            return Err(Error::InvalidDistribution(format!(
                "channel {} -> {} has {} rows, expected {}",
                input.name(),
                output.name(),
                rows.len(),
                input.len()
            )));
        }
        let mut flat = Vec::with_capacity(input.len() * output.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != output.len() {
                return Err(Error::InvalidDistribution(format!(
                    "channel row {i} has {} entries, expected {}",
                    row.len(),
                    output.len()
                )));
            }
            check_probability_vector(&format!("channel row {i}"), row)?;
            flat.extend_from_slice(row);
        }
        Ok(Self {
            input,
            output,
            rows: flat,
        })
    }

    pub fn from_flat(input: Alphabet, output: Alphabet, rows: Vec<f64>) -> Result<Self> {
        let cols = output.len();
        if rows.len() != input.len() * cols {
            return Err(Error::InvalidDistribution(format!(
                "channel matrix has {} entries, expected {}",
                rows.len(),
                input.len() * cols
            )));
        }
        for (i, row) in rows.chunks(cols).enumerate() {
            check_probability_vector(&format!("channel row {i}"), row)?;
        }
        Ok(Self {
            input,
            output,
            rows,
        })
    }

    /// Solver-side constructor: clamps negatives and renormalizes each row.
    pub(crate) fn from_solver(input: Alphabet, output: Alphabet, mut rows: Vec<f64>) -> Self {
        let cols = output.len();
        debug_assert_eq!(rows.len(), input.len() * cols);
        for row in rows.chunks_mut(cols) {
            row.iter_mut().for_each(|p| *p = p.max(0.0));
            if normalize_in_place(row) <= 0.0 {
                row.iter_mut().for_each(|p| *p = 1.0 / cols as f64);
            }
        }
        Self {
            input,
            output,
            rows,
        }
    }

    pub fn identity(alphabet: Alphabet, output_name: &str) -> Self {
        let n = alphabet.len();
        let mut rows = vec![0.0; n * n];
        for i in 0..n {
            rows[i * n + i] = 1.0;
        }
        let output = alphabet.renamed(output_name);
        Self {
            input: alphabet,
            output,
            rows,
        }
    }

    /// Binary symmetric channel with crossover `p` between `{0,1}` alphabets.
    pub fn bsc(p: f64, input_name: &str, output_name: &str) -> Result<Self> {
        Self::new(
            Alphabet::indexed(input_name, 2),
            Alphabet::indexed(output_name, 2),
            vec![vec![1.0 - p, p], vec![p, 1.0 - p]],
        )
    }

    /// Channel whose every row equals `out`.
    pub fn constant(input: Alphabet, out: &Pmf) -> Self {
        let rows = (0..input.len()).flat_map(|_| out.probs().iter().copied()).collect();
        Self {
            input,
            output: out.alphabet().clone(),
            rows,
        }
    }

    pub fn input(&self) -> &Alphabet {
        &self.input
    }

    pub fn output(&self) -> &Alphabet {
        &self.output
    }

    pub fn inputs(&self) -> usize {
        self.input.len()
    }

    pub fn outputs(&self) -> usize {
        self.output.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.outputs();
        &self.rows[i * c..(i + 1) * c]
    }

    pub fn get(&self, input: usize, output: usize) -> f64 {
        self.rows[input * self.outputs() + output]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.rows
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows.chunks(self.outputs()).map(|r| r.to_vec()).collect()
    }

    /// Output pmf `Σ_x W(y|x) p(x)`.
    pub fn apply(&self, p: &Pmf) -> Result<Pmf> {
        self.input.ensure_compatible(p.alphabet())?;
        let c = self.outputs();
        let mut out = vec![0.0; c];
        for (x, &px) in p.probs().iter().enumerate() {
            for (o, w) in out.iter_mut().zip(self.row(x)) {
                *o += px * w;
            }
        }
        Ok(Pmf::from_solver(self.output.clone(), out))
    }

    /// Cascade `self` followed by `next`: `(next ∘ self)(z|x) = Σ_y next(z|y) self(y|x)`.
    pub fn then(&self, next: &Channel) -> Result<Channel> {
        self.output.ensure_compatible(next.input())?;
        let (a, b, c) = (self.inputs(), self.outputs(), next.outputs());
        let mut rows = vec![0.0; a * c];
        for x in 0..a {
            for y in 0..b {
                let w = self.rows[x * b + y];
                if w == 0.0 {
                    continue;
                }
                for z in 0..c {
                    rows[x * c + z] += w * next.rows[y * c + z];
                }
            }
        }
        Ok(Channel::from_solver(self.input.clone(), next.output.clone(), rows))
    }

    pub fn is_identity(&self) -> bool {
        self.inputs() == self.outputs()
            && (0..self.inputs())
                .all(|i| (0..self.outputs()).all(|j| self.get(i, j) == if i == j { 1.0 } else { 0.0 }))
    }
}
