use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::prob::Pmf;
use crate::simplex::rng_for;

/// Sequence symbols are alphabet indices.
pub type Symbol = u16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CodebookStyle {
    /// Every symbol drawn i.i.d. from the input distribution.
    #[default]
    Iid,
    /// Uniform random permutations of one fixed `n`-type.
    ConstantComposition,
}

/// `count` codewords of length `n`, stored row by row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebook {
    n: usize,
    words: Vec<Symbol>,
}

impl Codebook {
    pub fn from_words(n: usize, words: Vec<Symbol>) -> Self {
        assert!(n > 0 && words.len().is_multiple_of(n), "codebook storage must hold whole words");
        Self { n, words }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.words.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn word(&self, i: usize) -> &[Symbol] {
        &self.words[i * self.n..(i + 1) * self.n]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[Symbol]> {
        self.words.chunks(self.n)
    }
}

/// Nearest `n`-type to `p` in sup-norm: floors plus largest remainders.
/// Symbols outside the support of `p` get count zero.
pub fn nearest_type(p: &[f64], n: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = p.iter().map(|&q| (q * n as f64).floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
    let rem = |i: usize| p[i] * n as f64 - counts[i] as f64;
    order.sort_by(|&a, &b| rem(b).partial_cmp(&rem(a)).unwrap().then(a.cmp(&b)));
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

pub(crate) fn sample_iid(p: &[f64], n: usize, rng: &mut impl Rng) -> Vec<Symbol> {
    let dist = WeightedIndex::new(p).expect("pmf has positive mass");
    (0..n).map(|_| dist.sample(rng) as Symbol).collect()
}

pub(crate) fn constant_word(counts: &[usize]) -> Vec<Symbol> {
    counts
        .iter()
        .enumerate()
        .flat_map(|(s, &c)| std::iter::repeat_n(s as Symbol, c))
        .collect()
}

pub(crate) fn fill_codebook(
    p: &[f64],
    n: usize,
    count: usize,
    style: CodebookStyle,
    rng: &mut impl Rng,
) -> Codebook {
    let mut words = Vec::with_capacity(n * count);
    match style {
        CodebookStyle::Iid => {
            let dist = WeightedIndex::new(p).expect("pmf has positive mass");
            words.extend((0..n * count).map(|_| dist.sample(rng) as Symbol));
        }
        CodebookStyle::ConstantComposition => {
            let base = constant_word(&nearest_type(p, n));
            for _ in 0..count {
                let mut w = base.clone();
                w.shuffle(rng);
                words.extend(w);
            }
        }
    }
    Codebook { n, words }
}

/// Random codebook of `count` words of length `n` with symbols from `p`.
pub fn generate_codebook(p: &Pmf, n: usize, count: usize, style: CodebookStyle, seed: u64) -> Codebook {
    assert!(n >= 1 && count >= 1, "codebook needs n >= 1 and count >= 1");
    fill_codebook(p.probs(), n, count, style, &mut rng_for(seed, 0))
}
