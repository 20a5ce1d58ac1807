//! Lower bound for a relay that encodes by minimum `d0` distortion over a
//! codebook drawn from `P_Z`.
//!
//! With both marginals of `Q_{YZ}` fixed, `I_Q(Y;Z) = KL(Q ‖ P_Y × P_Z)`.
//! Stage 1 finds the least expected distortion `d*` over couplings with
//! `KL <= B`; stage 2 minimizes `I(X;Z)` over the couplings attaining it.

use super::{joint_of, MismatchQuery};
use crate::error::{Error, Result};
use crate::ib::{check_bottleneck, outer_options};
use crate::ot::{sinkhorn, transport};
use crate::prob::measures::{to_bits, to_nats};
use crate::prob::{Channel, MetricKind, Pmf};
use crate::rate::{InputSpec, RateResult, SolverOptions};
use crate::roots::{bracket_up, solve_increasing, LAMBDA_CAP};
use crate::simplex::maximize;

const SINKHORN_TOL: f64 = 1e-13;
const SINKHORN_ITERS: usize = 100_000;
const MIRROR_ITERS: usize = 20_000;

/// Fixed-input relay problem on flat arrays.
struct Problem {
    nx: usize,
    ny: usize,
    nz: usize,
    px: Vec<f64>,
    py: Vec<f64>,
    pz: Vec<f64>,
    /// `P_{X|Y}` laid out `[y][x]`.
    post: Vec<f64>,
    d0: Vec<f64>,
    limit: f64,
}

#[derive(Debug, Clone)]
struct Outcome {
    rate: f64,
    coupling: Vec<f64>,
    d_star: f64,
    kl: f64,
    tie_set: bool,
    converged: bool,
    gamma: Option<f64>,
    mu: Option<f64>,
    iterations: usize,
}

impl Problem {
    fn new(channel: &Channel, px: &[f64], d0: &[f64], pz: &[f64], bottleneck: f64) -> Self {
        let (nx, ny) = (channel.inputs(), channel.outputs());
        let mut py = vec![0.0; ny];
        let mut post = vec![0.0; ny * nx];
        for x in 0..nx {
            for y in 0..ny {
                let p = px[x] * channel.get(x, y);
                py[y] += p;
                post[y * nx + x] = p;
            }
        }
        for y in 0..ny {
            if py[y] > 0.0 {
                for x in 0..nx {
                    post[y * nx + x] /= py[y];
                }
            }
        }
        Self {
            nx,
            ny,
            nz: pz.len(),
            px: px.to_vec(),
            py,
            pz: pz.to_vec(),
            post,
            d0: d0.to_vec(),
            limit: to_nats(bottleneck),
        }
    }

    fn product_log(&self, k: usize) -> f64 {
        let (y, z) = (k / self.nz, k % self.nz);
        if self.py[y] > 0.0 && self.pz[z] > 0.0 {
            self.py[y].ln() + self.pz[z].ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    fn kl(&self, q: &[f64]) -> f64 {
        q.iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(k, &v)| v * (v.ln() - self.product_log(k)))
            .sum::<f64>()
            .max(0.0)
    }

    fn distortion(&self, q: &[f64]) -> f64 {
        q.iter().zip(&self.d0).map(|(q, d)| q * d).sum()
    }

    fn xz(&self, q: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nx * self.nz];
        for y in 0..self.ny {
            for z in 0..self.nz {
                let v = q[y * self.nz + z];
                if v == 0.0 {
                    continue;
                }
                for x in 0..self.nx {
                    out[x * self.nz + z] += self.post[y * self.nx + x] * v;
                }
            }
        }
        out
    }

    /// `I(X;Z)` in nats under the coupling `q` of `(Y, Z)`.
    fn relevance(&self, q: &[f64]) -> f64 {
        let xz = self.xz(q);
        let mut s = 0.0;
        for x in 0..self.nx {
            for z in 0..self.nz {
                let v = xz[x * self.nz + z];
                if v > 0.0 {
                    s += v * (v / (self.px[x] * self.pz[z])).ln();
                }
            }
        }
        s.max(0.0)
    }

    /// Gradient of `I(X;Z)` in `q(y,z)`, up to a per-row constant.
    fn relevance_gradient(&self, q: &[f64]) -> Vec<f64> {
        let xz = self.xz(q);
        let log_ratio: Vec<f64> = (0..self.nx * self.nz)
            .map(|k| {
                let (x, z) = (k / self.nz, k % self.nz);
                let v = xz[k];
                if v > 0.0 {
                    (v / (self.px[x] * self.pz[z])).ln()
                } else {
                    0.0
                }
            })
            .collect();
        (0..self.ny * self.nz)
            .map(|k| {
                let (y, z) = (k / self.nz, k % self.nz);
                (0..self.nx)
                    .map(|x| self.post[y * self.nx + x] * log_ratio[x * self.nz + z])
                    .sum()
            })
            .collect()
    }

    fn scale(&self, log_k: &[f64], warm: Option<&[f64]>) -> crate::ot::Scaling {
        sinkhorn(&self.py, &self.pz, log_k, warm, SINKHORN_TOL, SINKHORN_ITERS)
    }

    fn solve(&self) -> Outcome {
        let cells = self.ny * self.nz;
        let lp = transport(&self.py, &self.pz, &self.d0);
        let scale_c = self.d0.iter().fold(1.0f64, |m, &d| m.max(d.abs()));
        let reduced = lp.reduced_costs(&self.py, &self.pz, &self.d0);
        let face: Vec<bool> = reduced.iter().map(|&r| r <= 1e-9 * scale_c).collect();

        // Least-KL coupling supported on the optimal face.
        let face_kernel: Vec<f64> = (0..cells)
            .map(|k| if face[k] { self.product_log(k) } else { f64::NEG_INFINITY })
            .collect();
        let face_point = self.scale(&face_kernel, None);
        let mut iterations = face_point.iterations;
        let face_kl = self.kl(&face_point.plan);

        if face_kl > self.limit + 1e-12 {
            // The bottleneck binds; the entropic solution is the unique minimizer.
            let warm = std::cell::RefCell::new(None::<Vec<f64>>);
            let converged = std::cell::Cell::new(true);
            let its = std::cell::Cell::new(0usize);
            let plan_at = |s: f64| {
                let log_k: Vec<f64> = (0..cells).map(|k| self.product_log(k) - s * self.d0[k]).collect();
                let sc = self.scale(&log_k, warm.borrow().as_deref());
                converged.set(converged.get() && sc.converged);
                its.set(its.get() + sc.iterations);
                *warm.borrow_mut() = Some(sc.g.clone());
                sc.plan
            };
            let kl_at = |s: f64| self.kl(&plan_at(s));
            let s = match bracket_up(kl_at, 1.0, self.limit) {
                Some((hi, khi)) => solve_increasing(kl_at, 0.0, 0.0, hi, khi, self.limit, 1e-13).0,
                None => LAMBDA_CAP,
            };
            let mut q = plan_at(s);
            // Stay on the feasible side of the bottleneck.
            if self.kl(&q) > self.limit {
                let (mut lo, mut hi) = (0.0, s);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if kl_at(mid) > self.limit {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                q = plan_at(lo);
            }
            iterations += its.get();
            return Outcome {
                rate: self.relevance(&q),
                d_star: self.distortion(&q),
                kl: self.kl(&q),
                coupling: q,
                tie_set: false,
                converged: converged.get() && face_point.converged,
                gamma: Some(1.0 / s),
                mu: None,
                iterations,
            };
        }

        let d_star = lp.cost;
        let support = face.iter().filter(|&&f| f).count();
        let basis = self.py.iter().filter(|&&p| p > 0.0).count() + self.pz.iter().filter(|&&p| p > 0.0).count() - 1;
        if support <= basis {
            // The face holds a single coupling.
            let q = lp.plan;
            return Outcome {
                rate: self.relevance(&q),
                d_star,
                kl: self.kl(&q),
                coupling: q,
                tie_set: false,
                converged: face_point.converged,
                gamma: None,
                mu: None,
                iterations,
            };
        }

        // Stage 2: min I(X;Z) + μ KL over the face, by mirror descent.
        let descend = |mu: f64, start: &[f64]| -> (Vec<f64>, usize, bool) {
            let eta = 1.0 / (1.0 + mu);
            let mut q = start.to_vec();
            let mut warm: Option<Vec<f64>> = None;
            let mut obj = self.relevance(&q) + mu * self.kl(&q);
            let mut ok = true;
            for it in 1..=MIRROR_ITERS {
                let g = self.relevance_gradient(&q);
                let log_k: Vec<f64> = (0..cells)
                    .map(|k| {
                        if face[k] && q[k] > 0.0 {
                            eta * q[k].ln() + (1.0 - eta) * self.product_log(k) - eta * g[k]
                        } else {
                            f64::NEG_INFINITY
                        }
                    })
                    .collect();
                let sc = self.scale(&log_k, warm.as_deref());
                ok &= sc.converged;
                warm = Some(sc.g);
                q = sc.plan;
                let next = self.relevance(&q) + mu * self.kl(&q);
                let done = (obj - next).abs() < 1e-15;
                obj = next;
                if done {
                    return (q, it, ok);
                }
            }
            (q, MIRROR_ITERS, false)
        };
        let (mut q, its, mut ok) = descend(0.0, &face_point.plan);
        iterations += its;
        let mut mu_used = 0.0;
        if self.kl(&q) > self.limit {
            let mut kl_of = |mu: f64| {
                let (qq, its, good) = descend(mu, &face_point.plan);
                iterations += its;
                ok &= good;
                -self.kl(&qq)
            };
            let k0 = -self.kl(&q);
            if let Some((hi, khi)) = bracket_up(&mut kl_of, 1.0, -self.limit) {
                mu_used = solve_increasing(&mut kl_of, 0.0, k0, hi, khi, -self.limit, 1e-12).0;
            } else {
                mu_used = LAMBDA_CAP;
            }
            let (qq, _, _) = descend(mu_used, &face_point.plan);
            q = if self.kl(&qq) <= self.limit + 1e-10 { qq } else { face_point.plan.clone() };
        }
        Outcome {
            rate: self.relevance(&q),
            d_star,
            kl: self.kl(&q),
            coupling: q,
            tie_set: true,
            converged: ok,
            gamma: None,
            mu: Some(mu_used),
            iterations,
        }
    }
}

fn relay_result(q: &MismatchQuery, p_z: &Pmf, px: &[f64], o: Outcome) -> RateResult {
    let joint = joint_of(q.channel.output(), p_z.alphabet(), o.coupling.clone());
    let cond = joint.condition(crate::prob::Axis::First);
    let mut r = RateResult::new(to_bits(o.rate));
    r.input = Some(Pmf::from_solver(q.channel.input().clone(), px.to_vec()));
    r.test_channel = Some(cond.channel);
    r.coupling = Some(joint);
    r.achieved_bottleneck = Some(to_bits(o.kl));
    r.ledger.d_star = Some(o.d_star);
    r.ledger.slack.insert("bottleneck".into(), to_bits(o.kl) - q.bottleneck);
    r.converged = o.converged;
    r.iterations = o.iterations;
    if let Some(g) = o.gamma {
        r.multipliers.insert("gamma".into(), g);
    }
    if let Some(mu) = o.mu {
        r.multipliers.insert("mu".into(), mu);
    }
    if o.tie_set {
        r.diagnostics
            .push("distortion minimizers are not unique; I(X;Z) minimized over the optimal face".into());
    }
    r
}

/// Mismatched-relay lower bound: `min I(X;Z)` over the couplings of
/// `(P_Y, P_Z)` that minimize `E[d0]` subject to `I(Y;Z) <= B`, maximized
/// over `P_X` when requested. The relay test channel of the query is unused.
pub fn mismatched_relay_rate(q: &MismatchQuery, p_z: &Pmf, opts: &SolverOptions) -> Result<RateResult> {
    check_bottleneck(q.bottleneck)?;
    q.metric.require(MetricKind::Distortion)?;
    q.channel.output().ensure_compatible(q.metric.input())?;
    q.metric.output().ensure_compatible(p_z.alphabet())?;
    let d0 = q.metric.as_flat();
    let pz = p_z.probs();
    let run = |px: &[f64]| -> Result<Outcome> {
        let o = Problem::new(&q.channel, px, d0, pz, q.bottleneck).solve();
        if o.kl > to_nats(q.bottleneck) + 1e-9 {
            return Err(Error::InfeasibleCoupling);
        }
        Ok(o)
    };
    match &q.input {
        InputSpec::Fixed(p) => {
            q.channel.input().ensure_compatible(p.alphabet())?;
            let o = run(p.probs())?;
            Ok(relay_result(q, p_z, p.probs(), o))
        }
        InputSpec::Optimize => {
            let nx = q.channel.inputs();
            let f = |v: &[f64]| run(v).map_or(0.0, |o| to_bits(o.rate));
            let uniform = vec![1.0 / nx as f64; nx];
            let best = maximize(&[nx], f, |_| {}, vec![uniform], &outer_options(opts));
            let o = run(&best.point)?;
            let mut r = relay_result(q, p_z, &best.point, o);
            r.iterations += best.iterations;
            r.restarts_used = best.runs;
            Ok(r)
        }
    }
}
