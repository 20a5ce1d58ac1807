//! Exact random-coding averages over the codebooks, by the method of types.
//!
//! Given the transmitted word and the relay output, every other codeword is
//! independent of them, so only the law of its joint type with a fixed
//! sequence matters. Grouping positions into classes by the fixed sequence's
//! symbols, the per-class symbol counts of a random codeword are multinomial
//! (i.i.d. codebooks) or sequentially hypergeometric (constant composition).
//! Enumerating those counts yields the exact probabilities a trial needs;
//! the remaining randomness is sampled.

/// `ln k!` for `k <= n`.
pub(crate) fn ln_factorials(n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n + 1];
    for k in 1..=n {
        t[k] = t[k - 1] + (k as f64).ln();
    }
    t
}

/// Accumulates `ln Σ exp(l_i)` without underflow.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogSum {
    max: f64,
    sum: f64,
}

impl LogSum {
    pub fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    pub fn add(&mut self, l: f64) {
        if l == f64::NEG_INFINITY {
            return;
        }
        if l > self.max {
            self.sum = self.sum * (self.max - l).exp() + 1.0;
            self.max = l;
        } else {
            self.sum += (l - self.max).exp();
        }
    }

    pub fn ln(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// `ln P(no success in count independent tries)` for success probability
/// `exp(ln_p)` and `count = exp(ln_count)`.
pub(crate) fn ln_none(ln_p: f64, ln_count: f64) -> f64 {
    if ln_p == f64::NEG_INFINITY || ln_count == f64::NEG_INFINITY {
        0.0
    } else if ln_p >= 0.0 {
        f64::NEG_INFINITY
    } else if ln_p < -30.0 {
        -(ln_count + ln_p).exp()
    } else {
        ln_count.exp() * (-ln_p.exp()).ln_1p()
    }
}

/// Law of a random codeword's symbols.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Law<'a> {
    /// I.i.d. with these probabilities.
    Iid(&'a [f64]),
    /// Uniform permutation of a word with these symbol counts.
    Pool(&'a [usize]),
}

impl Law<'_> {
    fn parts(&self) -> usize {
        match self {
            Law::Iid(p) => p.len(),
            Law::Pool(c) => c.len(),
        }
    }

    fn support(&self) -> usize {
        match self {
            Law::Iid(p) => p.iter().filter(|&&q| q > 0.0).count(),
            Law::Pool(c) => c.iter().filter(|&&q| q > 0).count(),
        }
    }
}

/// Number of count tables [`for_each_split`] visits, bounded by the number of
/// compositions of each class.
pub(crate) fn split_count(classes: &[usize], law: Law) -> f64 {
    let s = law.support().max(1);
    classes
        .iter()
        .map(|&c| {
            // C(c + s - 1, s - 1)
            (1..s).fold(1.0, |acc, i| acc * (c + i) as f64 / i as f64)
        })
        .product()
}

/// Upper estimate of [`split_count`] over all ways to split `n` positions into `k` classes.
pub(crate) fn split_count_bound(n: usize, k: usize, law: Law) -> f64 {
    let k = k.max(1);
    let even = vec![n.div_ceil(k); k];
    split_count(&even, law)
}

struct Walker<'a, F> {
    classes: &'a [usize],
    parts: usize,
    ln_p: Vec<f64>,
    pool: Option<Vec<usize>>,
    lf: &'a [f64],
    counts: Vec<usize>,
    f: F,
}

impl<F: FnMut(&[usize], f64)> Walker<'_, F> {
    fn class(&mut self, c: usize, ln_prob: f64) {
        if c == self.classes.len() {
            (self.f)(&self.counts, ln_prob);
            return;
        }
        let size = self.classes[c];
        let base = match &self.pool {
            None => self.lf[size],
            Some(pool) => {
                let total: usize = pool.iter().sum();
                self.lf[size] + self.lf[total - size] - self.lf[total]
            }
        };
        self.part(c, 0, size, ln_prob + base);
    }

    fn part(&mut self, c: usize, x: usize, remaining: usize, ln_prob: f64) {
        let last = x + 1 == self.parts;
        let cap = match &self.pool {
            None if self.ln_p[x] == f64::NEG_INFINITY => 0,
            None => remaining,
            Some(pool) => remaining.min(pool[x]),
        };
        let (lo, hi) = if last { (remaining, remaining) } else { (0, cap) };
        if lo > cap {
            return;
        }
        for k in lo..=hi {
            let term = match &self.pool {
                None => {
                    let lp = if k == 0 { 0.0 } else { k as f64 * self.ln_p[x] };
                    lp - self.lf[k]
                }
                Some(pool) => {
                    let r = pool[x];
                    self.lf[r] - self.lf[k] - self.lf[r - k]
                }
            };
            self.counts[c * self.parts + x] = k;
            if let Some(pool) = &mut self.pool {
                pool[x] -= k;
            }
            if last {
                self.class(c + 1, ln_prob + term);
            } else {
                self.part(c, x + 1, remaining - k, ln_prob + term);
            }
            if let Some(pool) = &mut self.pool {
                pool[x] += k;
            }
        }
    }
}

/// Visits every table of per-class symbol counts (flat, `class * parts + symbol`)
/// of a random codeword with the given law, with its log-probability.
/// `lf` must hold `ln k!` up to the codeword length.
pub(crate) fn for_each_split(classes: &[usize], law: Law, lf: &[f64], f: impl FnMut(&[usize], f64)) {
    let parts = law.parts();
    let (ln_p, pool) = match law {
        Law::Iid(p) => (p.iter().map(|&q| if q > 0.0 { q.ln() } else { f64::NEG_INFINITY }).collect(), None),
        Law::Pool(c) => (Vec::new(), Some(c.to_vec())),
    };
    let mut w = Walker {
        classes,
        parts,
        ln_p,
        pool,
        lf,
        counts: vec![0; classes.len() * parts],
        f,
    };
    w.class(0, 0.0);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iid_splits_sum_to_one() {
        let lf = ln_factorials(20);
        let p = [0.2, 0.0, 0.8];
        let mut total = LogSum::new();
        let mut visits = 0;
        for_each_split(&[3, 5, 2], Law::Iid(&p), &lf, |c, l| {
            assert_eq!(c[1] + c[4] + c[7], 0);
            total.add(l);
            visits += 1;
        });
        assert!(total.ln().abs() < 1e-12);
        assert_eq!(visits as f64, split_count(&[3, 5, 2], Law::Iid(&p)));
    }

    #[test]
    fn pool_splits_are_hypergeometric() {
        let lf = ln_factorials(20);
        let pool = [3, 2];
        let mut total = LogSum::new();
        let mut first_all_zero = 0.0;
        for_each_split(&[2, 3], Law::Pool(&pool), &lf, |c, l| {
            total.add(l);
            assert_eq!(c[0] + c[2], 3);
            if c[0] == 0 {
                first_all_zero += l.exp();
            }
        });
        assert!(total.ln().abs() < 1e-12);
        // First class holds both copies of symbol 1: 1 / C(5, 2).
        assert!((first_all_zero - 0.1).abs() < 1e-12);
    }

    #[test]
    fn split_count_matches_compositions() {
        assert_eq!(split_count(&[4], Law::Iid(&[0.5, 0.5])), 5.0);
        assert_eq!(split_count(&[2, 3], Law::Iid(&[0.2, 0.3, 0.5])), 60.0);
    }

    #[test]
    fn ln_none_matches_direct_power() {
        let p: f64 = 0.01;
        assert!((ln_none(p.ln(), 50f64.ln()) - 50.0 * (1.0 - p).ln()).abs() < 1e-12);
        assert!((ln_none(-100.0, 80.0) + (-20.0f64).exp()).abs() < 1e-20);
        assert_eq!(ln_none(f64::NEG_INFINITY, 10.0), 0.0);
    }
}
