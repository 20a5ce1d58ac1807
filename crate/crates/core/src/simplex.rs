//! Probability-simplex utilities: projection, seeded random points and a
//! multi-start projected-gradient ascent over products of simplices.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

/// Deterministic generator for `(seed, stream)`; independent streams never overlap.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform point on the simplex (Dirichlet(1, ..., 1)).
pub fn dirichlet_uniform(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Euclidean projection onto the probability simplex, in place.
pub fn project_to_simplex(v: &mut [f64]) {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            tau = t;
        }
    }
    v.iter_mut().for_each(|x| *x = (*x - tau).max(0.0));
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
}

/// Settings for [`maximize`].
#[derive(Debug, Clone)]
pub struct AscentOptions {
    pub restarts: usize,
    pub iterations: usize,
    /// Base step; iteration `k` uses `step / sqrt(k)` before backtracking.
    pub step: f64,
    pub fd_step: f64,
    pub seed: u64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            restarts: 10,
            iterations: 500,
            step: 0.1,
            fd_step: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AscentResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub runs: usize,
}

fn block_offsets(blocks: &[usize]) -> Vec<usize> {
    let mut offs = Vec::with_capacity(blocks.len() + 1);
    let mut o = 0;
    offs.push(0);
    for &b in blocks {
        o += b;
        offs.push(o);
    }
    offs
}

/// Maximizes `f` over a product of simplices (block sizes `blocks`).
///
/// Gradients are finite differences taken toward each vertex, which keeps
/// every probe inside the simplex. `retract` maps a point into the feasible
/// subset and is applied to every start and every accepted step. Runs start
/// from each point in `seeds` and from `opts.restarts` random points; the best
/// final value wins, earliest run first on ties.
pub fn maximize<F, R>(
    blocks: &[usize],
    f: F,
    retract: R,
    seeds: Vec<Vec<f64>>,
    opts: &AscentOptions,
) -> AscentResult
where
    F: Fn(&[f64]) -> f64 + Sync,
    R: Fn(&mut [f64]) + Sync,
{
    let offs = block_offsets(blocks);
    let dim = *offs.last().unwrap();
    let mut starts = seeds;
    for r in 0..opts.restarts {
        let mut rng = rng_for(opts.seed, 0x5eed_0000 + r as u64);
        let mut x = Vec::with_capacity(dim);
        for &b in blocks {
            x.extend(dirichlet_uniform(&mut rng, b));
        }
        starts.push(x);
    }
    let runs = starts.len();

    let results: Vec<(Vec<f64>, f64, usize)> = starts
        .into_par_iter()
        .map(|mut x| {
            debug_assert_eq!(x.len(), dim);
            retract(&mut x);
            let mut fx = f(&x);
            let mut iters = 0;
            let mut stalls = 0;
            let mut grad = vec![0.0; dim];
            let mut probe = x.clone();
            for k in 1..=opts.iterations {
                iters = k;
                let h = opts.fd_step;
                let scale = h / (1.0 + h);
                for w in offs.windows(2) {
                    for i in w[0]..w[1] {
                        probe.copy_from_slice(&x);
                        for j in w[0]..w[1] {
                            probe[j] = (x[j] + if j == i { h } else { 0.0 }) / (1.0 + h);
                        }
                        grad[i] = (f(&probe) - fx) / scale;
                    }
                }
                let mut t = opts.step / (k as f64).sqrt();
                let mut accepted = false;
                for _ in 0..12 {
                    let mut cand: Vec<f64> = x.iter().zip(&grad).map(|(a, g)| a + t * g).collect();
                    for w in offs.windows(2) {
                        project_to_simplex(&mut cand[w[0]..w[1]]);
                    }
                    retract(&mut cand);
                    let fc = f(&cand);
                    if fc > fx + 1e-14 {
                        let gain = fc - fx;
                        x = cand;
                        fx = fc;
                        accepted = true;
                        stalls = if gain < 1e-12 { stalls + 1 } else { 0 };
                        break;
                    }
                    t *= 0.5;
                }
                if !accepted {
                    stalls += 1;
                }
                if stalls >= 5 {
                    break;
                }
            }
            (x, fx, iters)
        })
        .collect();

    let mut best = 0;
    for (i, r) in results.iter().enumerate() {
        if r.1 > results[best].1 + 1e-13 {
            best = i;
        }
    }
    let iterations = results.iter().map(|r| r.2).sum();
    let (point, value, _) = results.into_iter().nth(best).unwrap();
    AscentResult {
        point,
        value,
        iterations,
        runs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_examples() {
        let mut v = vec![0.5, 0.5];
        project_to_simplex(&mut v);
        assert_eq!(v, vec![0.5, 0.5]);
        let mut v = vec![2.0, 0.0, -1.0];
        project_to_simplex(&mut v);
        assert_eq!(v, vec![1.0, 0.0, 0.0]);
        let mut v = vec![0.4, 0.4, 0.4];
        project_to_simplex(&mut v);
        for x in v {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn ascent_finds_entropy_maximum() {
        let f = |x: &[f64]| crate::prob::measures::entropy_nats(x);
        let r = maximize(&[3], f, |_| {}, vec![], &AscentOptions { restarts: 3, ..Default::default() });
        assert!((r.value - 3f64.ln()).abs() < 1e-6, "{}", r.value);
    }

    #[test]
    fn streams_are_reproducible() {
        let a = dirichlet_uniform(&mut rng_for(7, 3), 4);
        let b = dirichlet_uniform(&mut rng_for(7, 3), 4);
        let c = dirichlet_uniform(&mut rng_for(7, 4), 4);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
