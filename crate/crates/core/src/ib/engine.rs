//! Alternating minimization for the bottleneck Lagrangian
//! `I(Y;Z) - β I(X;Z|S)` over test channels `Q(z|y)`, for a joint `p(x,s,y)`.
//! With a single state this is the classical information bottleneck.

use rand_chacha::ChaCha8Rng;

use crate::prob::measures::{log_sum_exp, xlogxy};
use crate::simplex::dirichlet_uniform;

/// Joint law of relevance `X`, decoder state `S` and observation `Y`.
/// Cells `r = x * ns + s` index the pair `(x, s)`.
#[derive(Debug, Clone)]
pub(crate) struct Model {
    pub nx: usize,
    pub ns: usize,
    pub ny: usize,
    /// `p(x,s,y)` laid out `[y][r]`.
    joint: Vec<f64>,
    py: Vec<f64>,
    pr: Vec<f64>,
    ps: Vec<f64>,
    /// `p(x,s | y)` laid out `[y][r]`; zero rows where `p(y) = 0`.
    post: Vec<f64>,
}

/// One solution of the alternating scheme; information values in nats.
#[derive(Debug, Clone)]
pub(crate) struct Point {
    /// Test channel, `ny × k` row-major.
    pub q: Vec<f64>,
    pub k: usize,
    pub i_yz: f64,
    pub i_xz: f64,
    pub beta: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl Model {
    pub fn new(nx: usize, ns: usize, ny: usize, p: impl Fn(usize, usize, usize) -> f64) -> Self {
        let nr = nx * ns;
        let mut joint = vec![0.0; ny * nr];
        for x in 0..nx {
            for s in 0..ns {
                for y in 0..ny {
                    joint[y * nr + x * ns + s] = p(x, s, y);
                }
            }
        }
        let py: Vec<f64> = joint.chunks(nr).map(|r| r.iter().sum()).collect();
        let mut pr = vec![0.0; nr];
        for row in joint.chunks(nr) {
            for (a, b) in pr.iter_mut().zip(row) {
                *a += b;
            }
        }
        let mut ps = vec![0.0; ns];
        for (r, &m) in pr.iter().enumerate() {
            ps[r % ns] += m;
        }
        let mut post = joint.clone();
        for (y, row) in post.chunks_mut(nr).enumerate() {
            if py[y] > 0.0 {
                row.iter_mut().for_each(|v| *v /= py[y]);
            }
        }
        Self {
            nx,
            ns,
            ny,
            joint,
            py,
            pr,
            ps,
            post,
        }
    }

    /// Two-variable model from a row-major `p(x,y)`.
    pub fn from_xy(pxy: &[f64], nx: usize, ny: usize) -> Self {
        Self::new(nx, 1, ny, |x, _, y| pxy[x * ny + y])
    }

    fn nr(&self) -> usize {
        self.nx * self.ns
    }

    /// `(I(Y;Z), I(X;Z|S))` in nats for test channel `q` with `k` outputs.
    pub fn evaluate(&self, q: &[f64], k: usize) -> (f64, f64) {
        let (qz, prz, psz) = self.marginals(q, k);
        let mut i_yz = 0.0;
        for y in 0..self.ny {
            for z in 0..k {
                i_yz += self.py[y] * xlogxy(q[y * k + z], qz[z]);
            }
        }
        let mut i_xz = 0.0;
        for r in 0..self.nr() {
            let s = r % self.ns;
            for z in 0..k {
                let pj = prz[r * k + z];
                if pj > 0.0 {
                    i_xz += pj * ((pj * self.ps[s]) / (self.pr[r] * psz[s * k + z])).ln();
                }
            }
        }
        (i_yz.max(0.0), i_xz.max(0.0))
    }

    /// `q(z)`, `p(r,z)` and `p(s,z)` induced by `q`.
    fn marginals(&self, q: &[f64], k: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let nr = self.nr();
        let mut qz = vec![0.0; k];
        let mut prz = vec![0.0; nr * k];
        for y in 0..self.ny {
            let row = &q[y * k..(y + 1) * k];
            for z in 0..k {
                qz[z] += self.py[y] * row[z];
            }
            for r in 0..nr {
                let p = self.joint[y * nr + r];
                if p > 0.0 {
                    for z in 0..k {
                        prz[r * k + z] += p * row[z];
                    }
                }
            }
        }
        let mut psz = vec![0.0; self.ns * k];
        for r in 0..nr {
            for z in 0..k {
                psz[(r % self.ns) * k + z] += prz[r * k + z];
            }
        }
        (qz, prz, psz)
    }

    /// `I(X;Y|S)` in nats, the ceiling of the relevance term.
    pub fn relevance_ceiling(&self) -> f64 {
        let mut id = vec![0.0; self.ny * self.ny];
        for y in 0..self.ny {
            id[y * self.ny + y] = 1.0;
        }
        self.evaluate(&id, self.ny).1
    }

    /// One update `Q(z|y) ∝ q(z) exp(β Σ_r p(r|y) log p(x|z,s))`.
    fn update(&self, q: &[f64], k: usize, beta: f64) -> Vec<f64> {
        let nr = self.nr();
        let (qz, prz, psz) = self.marginals(q, k);
        let log_r: Vec<f64> = (0..nr * k)
            .map(|i| {
                let (r, z) = (i / k, i % k);
                let pj = prz[i];
                if pj > 0.0 {
                    (pj / psz[(r % self.ns) * k + z]).ln()
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let mut out = vec![0.0; self.ny * k];
        let mut w = vec![0.0; k];
        for y in 0..self.ny {
            let post = &self.post[y * nr..(y + 1) * nr];
            for z in 0..k {
                if qz[z] <= 0.0 {
                    w[z] = f64::NEG_INFINITY;
                    continue;
                }
                let mut acc = 0.0;
                for r in 0..nr {
                    if post[r] > 0.0 {
                        acc += post[r] * log_r[r * k + z];
                    }
                }
                w[z] = qz[z].ln() + beta * acc;
            }
            let lse = log_sum_exp(w.iter().copied());
            if !lse.is_finite() {
                out[y * k..(y + 1) * k].copy_from_slice(&q[y * k..(y + 1) * k]);
                continue;
            }
            for z in 0..k {
                out[y * k + z] = (w[z] - lse).exp();
            }
        }
        out
    }

    /// Iterates from `q` until the Lagrangian changes by less than `tol`.
    pub fn solve(&self, beta: f64, mut q: Vec<f64>, k: usize, max_iter: usize, tol: f64) -> Point {
        let (mut i_yz, mut i_xz) = self.evaluate(&q, k);
        let mut l = i_yz - beta * i_xz;
        let mut converged = false;
        let mut iterations = 0;
        for it in 1..=max_iter {
            iterations = it;
            q = self.update(&q, k, beta);
            let (a, b) = self.evaluate(&q, k);
            let nl = a - beta * b;
            i_yz = a;
            i_xz = b;
            let delta = (l - nl).abs();
            l = nl;
            if delta < tol {
                converged = true;
                break;
            }
        }
        Point {
            q,
            k,
            i_yz,
            i_xz,
            beta: Some(beta),
            iterations,
            converged,
        }
    }

    pub fn random_channel(&self, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..self.ny).flat_map(|_| dirichlet_uniform(rng, k)).collect()
    }

    /// Deterministic point from a hard assignment `y -> z`.
    pub fn hard_point(&self, assign: &[usize], k: usize) -> Point {
        let mut q = vec![0.0; self.ny * k];
        for (y, &z) in assign.iter().enumerate() {
            q[y * k + z] = 1.0;
        }
        let (i_yz, i_xz) = self.evaluate(&q, k);
        Point {
            q,
            k,
            i_yz,
            i_xz,
            beta: None,
            iterations: 0,
            converged: true,
        }
    }

    /// Groups observations with identical posteriors `p(x,s|y)`; the merged
    /// map is a sufficient statistic and attains the relevance ceiling.
    pub fn sufficient_groups(&self) -> Vec<usize> {
        let nr = self.nr();
        let mut reps: Vec<usize> = Vec::new();
        let mut assign = vec![0; self.ny];
        for y in 0..self.ny {
            let row = &self.post[y * nr..(y + 1) * nr];
            let found = reps.iter().position(|&o| {
                self.post[o * nr..(o + 1) * nr]
                    .iter()
                    .zip(row)
                    .all(|(a, b)| (a - b).abs() <= 1e-12)
            });
            assign[y] = match found {
                Some(g) => g,
                None => {
                    reps.push(y);
                    reps.len() - 1
                }
            };
        }
        assign
    }
}

/// Time-sharing of two test channels: outputs of `a` then of `b`, weighted
/// `theta` and `1 - theta`. Both information terms mix linearly.
pub(crate) fn mixture(model: &Model, a: &Point, b: &Point, theta: f64) -> Point {
    let k = a.k + b.k;
    let mut q = vec![0.0; model.ny * k];
    for y in 0..model.ny {
        for z in 0..a.k {
            q[y * k + z] = theta * a.q[y * a.k + z];
        }
        for z in 0..b.k {
            q[y * k + a.k + z] = (1.0 - theta) * b.q[y * b.k + z];
        }
    }
    let (i_yz, i_xz) = model.evaluate(&q, k);
    Point {
        q,
        k,
        i_yz,
        i_xz,
        beta: None,
        iterations: a.iterations + b.iterations,
        converged: a.converged && b.converged,
    }
}
