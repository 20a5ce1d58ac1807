//! Fixed relay test channel, mismatched decoder.
//!
//! For a coupling `Q_{XY}` of `(P_X, P_Y)` the induced `Q_{XZ} = Q_{XY} A`
//! has marginals `(P_X, P_Z)`, so `I(X;Z) = KL(Q_{XZ} ‖ P_X × P_Z)`. This is
//! convex in `Q_{XY}` and 1-smooth relative to negative entropy, so mirror
//! descent with unit step followed by a Sinkhorn projection decreases it.

use crate::error::{Error, Result};
use crate::ib::{check_bottleneck, outer_options};
use crate::ot::sinkhorn;
use crate::prob::measures::{channel_mutual_information_nats, to_bits, LN_2};
use crate::prob::{Channel, Metric, MetricKind, Pmf};
use crate::rate::{InputSpec, RateResult, SolverOptions};
use crate::roots::{bracket_up, solve_increasing, LAMBDA_CAP};
use crate::simplex::maximize;

use super::{cascade_joint, joint_of};

const SINKHORN_TOL: f64 = 1e-14;
const SINKHORN_ITERS: usize = 50_000;
const MIRROR_ITERS: usize = 20_000;

struct Problem<'a> {
    nx: usize,
    ny: usize,
    nz: usize,
    px: Vec<f64>,
    py: Vec<f64>,
    pz: Vec<f64>,
    relay: &'a [f64],
    /// `c(x,y) = Σ_z A(z|y) ln V(z|x)`.
    cost: Vec<f64>,
    target: f64,
}

struct Inner {
    value: f64,
    plan: Vec<f64>,
    lambda: f64,
    converged: bool,
    iterations: usize,
}

impl<'a> Problem<'a> {
    fn new(px: &[f64], channel: &Channel, relay: &'a [f64], logv: &[f64]) -> Self {
        let (nx, ny) = (channel.inputs(), channel.outputs());
        let nz = relay.len() / ny;
        let mut pxy = vec![0.0; nx * ny];
        let mut py = vec![0.0; ny];
        for x in 0..nx {
            for y in 0..ny {
                pxy[x * ny + y] = px[x] * channel.get(x, y);
                py[y] += pxy[x * ny + y];
            }
        }
        let mut pz = vec![0.0; nz];
        for y in 0..ny {
            for z in 0..nz {
                pz[z] += py[y] * relay[y * nz + z];
            }
        }
        let cost: Vec<f64> = (0..nx * ny)
            .map(|k| {
                let (x, y) = (k / ny, k % ny);
                (0..nz)
                    .filter(|&z| relay[y * nz + z] > 0.0)
                    .map(|z| relay[y * nz + z] * logv[x * nz + z])
                    .sum()
            })
            .collect();
        let target = pxy.iter().zip(&cost).map(|(p, c)| p * c).sum();
        Self {
            nx,
            ny,
            nz,
            px: px.to_vec(),
            py,
            pz,
            relay,
            cost,
            target,
        }
    }

    fn metric(&self, q: &[f64]) -> f64 {
        q.iter().zip(&self.cost).map(|(q, c)| q * c).sum()
    }

    fn xz(&self, q: &[f64]) -> Vec<f64> {
        cascade_joint(&vec![1.0; self.nx], q, self.ny, self.relay, self.nz)
    }

    /// `I(X;Z)` in nats and its gradient in `Q_{XY}`.
    fn objective(&self, q: &[f64]) -> (f64, Vec<f64>) {
        let xz = self.xz(q);
        let mut value = 0.0;
        let log_ratio: Vec<f64> = (0..self.nx * self.nz)
            .map(|k| {
                let (x, z) = (k / self.nz, k % self.nz);
                if xz[k] > 0.0 {
                    let l = (xz[k] / (self.px[x] * self.pz[z])).ln();
                    value += xz[k] * l;
                    l
                } else {
                    0.0
                }
            })
            .collect();
        let grad = (0..self.nx * self.ny)
            .map(|k| {
                let (x, y) = (k / self.ny, k % self.ny);
                (0..self.nz)
                    .map(|z| self.relay[y * self.nz + z] * log_ratio[x * self.nz + z])
                    .sum()
            })
            .collect();
        (value.max(0.0), grad)
    }

    fn product(&self) -> Vec<f64> {
        (0..self.nx * self.ny).map(|k| self.px[k / self.ny] * self.py[k % self.ny]).collect()
    }

    /// Minimizes `I(X;Z) - λ <c, Q>` from `start`.
    fn descend(&self, lambda: f64, start: &[f64]) -> (Vec<f64>, usize, bool) {
        let mut q = start.to_vec();
        let mut warm: Option<Vec<f64>> = None;
        let (mut prev, mut grad) = self.objective(&q);
        prev -= lambda * self.metric(&q);
        let mut ok = true;
        for it in 1..=MIRROR_ITERS {
            let log_k: Vec<f64> = (0..q.len())
                .map(|k| {
                    if q[k] > 0.0 {
                        q[k].ln() - grad[k] + lambda * self.cost[k]
                    } else {
                        f64::NEG_INFINITY
                    }
                })
                .collect();
            let s = sinkhorn(&self.px, &self.py, &log_k, warm.as_deref(), SINKHORN_TOL, SINKHORN_ITERS);
            ok &= s.converged;
            warm = Some(s.g);
            q = s.plan;
            let (v, g) = self.objective(&q);
            let cur = v - lambda * self.metric(&q);
            grad = g;
            if (prev - cur).abs() < 1e-15 {
                return (q, it, ok);
            }
            prev = cur;
        }
        (q, MIRROR_ITERS, false)
    }

    /// `min I(X;Z)` over couplings with `<c, Q> >= <c, P_XY>`.
    fn solve(&self) -> Inner {
        let product = self.product();
        if self.metric(&product) >= self.target - 1e-15 {
            return Inner {
                value: 0.0,
                plan: product,
                lambda: 0.0,
                converged: true,
                iterations: 0,
            };
        }
        // Each solve starts from the interior product point: multiplicative
        // updates recover slowly from near-zero entries of a warm start.
        let state = std::cell::RefCell::new((product.clone(), 0usize, true));
        let at = |lambda: f64| {
            let (q, its, ok) = self.descend(lambda, &product);
            let m = self.metric(&q);
            let mut st = state.borrow_mut();
            st.1 += its;
            st.2 &= ok;
            st.0 = q;
            m
        };
        let m0 = self.metric(&product);
        let lambda = match bracket_up(at, 1.0, self.target) {
            Some((hi, mhi)) => solve_increasing(at, 0.0, m0, hi, mhi, self.target, 1e-13).0,
            None => LAMBDA_CAP,
        };
        at(lambda);
        let (q, iterations, converged) = state.into_inner();
        Inner {
            value: self.objective(&q).0,
            plan: q,
            lambda,
            converged: converged && lambda < LAMBDA_CAP,
            iterations,
        }
    }
}

/// Rate with a fixed relay test channel `A = Q_{Z|Y}` and a mismatched decoder
/// with metric `V(z|x)`: `min I(X;Z)` over couplings `Q_{XY}` of `(P_X, P_Y)`
/// whose induced `Q_{XZ}` satisfies `E[ln V] >= E_P[ln V]`, and 0 once
/// `I(P_Y, A) >= B`. Maximized over `P_X` when requested.
pub fn mismatched_relay_decoder_rate(
    input: &InputSpec,
    channel: &Channel,
    relay_q: &Channel,
    metric: &Metric,
    bottleneck: f64,
    opts: &SolverOptions,
) -> Result<RateResult> {
    check_bottleneck(bottleneck)?;
    metric.require(MetricKind::Decoding)?;
    channel.input().ensure_compatible(metric.input())?;
    channel.output().ensure_compatible(relay_q.input())?;
    relay_q.output().ensure_compatible(metric.output())?;
    let logv = metric.log_values();
    let relay = relay_q.as_flat();
    let guard = |px: &[f64]| {
        let py = Pmf::from_solver(channel.output().clone(), channel_output(channel, px));
        to_bits(channel_mutual_information_nats(py.probs(), relay, relay_q.outputs()))
    };
    let evaluate = |px: &[f64]| -> Option<Inner> {
        if guard(px) >= bottleneck {
            None
        } else {
            Some(Problem::new(px, channel, relay, &logv).solve())
        }
    };
    let (px, inner, iterations, runs) = match input {
        InputSpec::Fixed(p) => {
            channel.input().ensure_compatible(p.alphabet())?;
            let px = p.probs().to_vec();
            let inner = evaluate(&px);
            (px, inner, 0, 1)
        }
        InputSpec::Optimize => {
            let nx = channel.inputs();
            let f = |v: &[f64]| evaluate(v).map_or(0.0, |i| to_bits(i.value));
            let uniform = vec![1.0 / nx as f64; nx];
            let best = maximize(&[nx], f, |_| {}, vec![uniform], &outer_options(opts));
            let inner = evaluate(&best.point);
            (best.point, inner, best.iterations, best.runs)
        }
    };
    let iyz = guard(&px);
    let mut r = match inner {
        None => {
            let mut r = RateResult::zero();
            r.diagnostics.push(format!("I(Y;Z) = {iyz} >= B = {bottleneck}: rate is 0"));
            r
        }
        Some(inner) => {
            if !inner.converged && inner.lambda < LAMBDA_CAP {
                return Err(Error::NonConvergence {
                    solver: "mismatched_relay_decoder_rate",
                    detail: format!("mirror descent did not settle within {MIRROR_ITERS} iterations"),
                });
            }
            let p = Problem::new(&px, channel, relay, &logv);
            let mut r = RateResult::new(to_bits(inner.value)).with_multiplier("lambda", inner.lambda);
            r.ledger.d = Some(-p.target / LN_2);
            r.ledger.slack.insert("metric".into(), (p.target - p.metric(&inner.plan)) / LN_2);
            let (mut rx, mut ry) = (0.0f64, 0.0f64);
            for x in 0..p.nx {
                let s: f64 = inner.plan[x * p.ny..(x + 1) * p.ny].iter().sum();
                rx = rx.max((s - p.px[x]).abs());
            }
            for y in 0..p.ny {
                let s: f64 = (0..p.nx).map(|x| inner.plan[x * p.ny + y]).sum();
                ry = ry.max((s - p.py[y]).abs());
            }
            r.ledger.slack.insert("x_marginal".into(), rx);
            r.ledger.slack.insert("y_marginal".into(), ry);
            r.coupling = Some(joint_of(channel.input(), channel.output(), inner.plan));
            r.converged = inner.converged;
            r.iterations = inner.iterations;
            r
        }
    };
    r.input = Some(Pmf::from_solver(channel.input().clone(), px));
    r.test_channel = Some(relay_q.clone());
    r.achieved_bottleneck = Some(iyz);
    r.ledger.slack.insert("bottleneck".into(), iyz - bottleneck);
    r.iterations += iterations;
    r.restarts_used = runs;
    Ok(r)
}

fn channel_output(channel: &Channel, px: &[f64]) -> Vec<f64> {
    (0..channel.outputs())
        .map(|y| (0..channel.inputs()).map(|x| px[x] * channel.get(x, y)).sum())
        .collect()
}
