//! Outer maximization of LM and GMI values over the input distribution and
//! the relay test channel, subject to `I(Y;Z) <= B`.

use super::lm::lm_result;
use super::{cascade_joint, joint_of, Inner, MismatchQuery, TestChannelSpec};
use crate::error::Result;
use crate::ib::{capacity_at, outer_options};
use crate::prob::measures::{channel_mutual_information_nats, to_bits, to_nats};
use crate::prob::{Channel, Pmf};
use crate::rate::{InputSpec, RateResult, SolverOptions};
use crate::simplex::{maximize, AscentOptions};

/// Maps the flat search vector to `(P_X, Q_{Z|Y})`.
struct Layout<'a> {
    q: &'a MismatchQuery,
    nx: usize,
    ny: usize,
    nz: usize,
    fixed_px: Option<Vec<f64>>,
    fixed_relay: Option<Vec<f64>>,
    limit: f64,
}

impl<'a> Layout<'a> {
    fn new(q: &'a MismatchQuery) -> Self {
        Self {
            q,
            nx: q.channel.inputs(),
            ny: q.channel.outputs(),
            nz: q.metric.output().len(),
            fixed_px: match &q.input {
                InputSpec::Fixed(p) => Some(p.probs().to_vec()),
                InputSpec::Optimize => None,
            },
            fixed_relay: match &q.relay_test_channel {
                TestChannelSpec::Fixed(c) => Some(c.as_flat().to_vec()),
                TestChannelSpec::Optimize => None,
            },
            limit: to_nats(q.bottleneck) + 1e-9 * std::f64::consts::LN_2,
        }
    }

    fn blocks(&self) -> Vec<usize> {
        let mut b = Vec::new();
        if self.fixed_px.is_none() {
            b.push(self.nx);
        }
        if self.fixed_relay.is_none() {
            b.extend(std::iter::repeat_n(self.nz, self.ny));
        }
        b
    }

    fn split<'v>(&'v self, v: &'v [f64]) -> (&'v [f64], &'v [f64]) {
        let (px, rest) = match &self.fixed_px {
            Some(p) => (p.as_slice(), v),
            None => v.split_at(self.nx),
        };
        let relay = match &self.fixed_relay {
            Some(r) => r.as_slice(),
            None => rest,
        };
        (px, relay)
    }

    fn pack(&self, px: &[f64], relay: &[f64]) -> Vec<f64> {
        let mut v = Vec::new();
        if self.fixed_px.is_none() {
            v.extend_from_slice(px);
        }
        if self.fixed_relay.is_none() {
            v.extend_from_slice(relay);
        }
        v
    }

    fn py(&self, px: &[f64]) -> Vec<f64> {
        let w = self.q.channel.as_flat();
        (0..self.ny)
            .map(|y| (0..self.nx).map(|x| px[x] * w[x * self.ny + y]).sum())
            .collect()
    }

    fn bottleneck(&self, px: &[f64], relay: &[f64]) -> f64 {
        channel_mutual_information_nats(&self.py(px), relay, self.nz)
    }

    /// Shrinks relay rows toward the output marginal until `I(Y;Z) <= B`.
    /// `I(Y;Z)` is decreasing along this path, so bisection applies.
    fn retract(&self, v: &mut [f64]) {
        if self.fixed_relay.is_some() {
            return;
        }
        let off = if self.fixed_px.is_none() { self.nx } else { 0 };
        let px: Vec<f64> = match &self.fixed_px {
            Some(p) => p.clone(),
            None => v[..self.nx].to_vec(),
        };
        let relay = v[off..].to_vec();
        if self.bottleneck(&px, &relay) <= self.limit {
            return;
        }
        let py = self.py(&px);
        let mut qz = vec![0.0; self.nz];
        for y in 0..self.ny {
            for z in 0..self.nz {
                qz[z] += py[y] * relay[y * self.nz + z];
            }
        }
        let mix = |t: f64| -> Vec<f64> {
            (0..self.ny * self.nz)
                .map(|k| (1.0 - t) * relay[k] + t * qz[k % self.nz])
                .collect()
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let t = 0.5 * (lo + hi);
            if self.bottleneck(&px, &mix(t)) <= self.limit {
                hi = t;
            } else {
                lo = t;
            }
        }
        v[off..].copy_from_slice(&mix(hi));
    }

    fn inner(&self, px: &[f64], relay: &[f64]) -> Inner {
        let pxz = cascade_joint(px, self.q.channel.as_flat(), self.ny, relay, self.nz);
        Inner::new(pxz, self.nx, self.nz, self.q.metric.log_values())
    }

    fn start_points(&self, opts: &SolverOptions) -> Vec<Vec<f64>> {
        let px = self
            .fixed_px
            .clone()
            .unwrap_or_else(|| vec![1.0 / self.nx as f64; self.nx]);
        let mut seeds = Vec::new();
        if self.fixed_relay.is_none() {
            let pmf = Pmf::from_solver(self.q.channel.input().clone(), px.clone());
            if let Ok(r) = capacity_at(&self.q.channel, &pmf, self.q.bottleneck, self.nz, &opts.inner()) {
                // Time-sharing solutions can carry more outputs than the metric.
                if let Some(t) = r.test_channel.filter(|t| t.outputs() == self.nz) {
                    seeds.push(self.pack(&px, t.as_flat()));
                }
            }
            if self.nz == self.ny {
                let id: Vec<f64> = (0..self.ny * self.nz)
                    .map(|k| if k / self.nz == k % self.nz { 1.0 } else { 0.0 })
                    .collect();
                seeds.push(self.pack(&px, &id));
            }
        } else if self.fixed_px.is_none() {
            seeds.push(self.pack(&px, &[]));
        }
        seeds
    }

    fn result(&self, v: &[f64], value_bits: f64) -> RateResult {
        let (px, relay) = self.split(v);
        let mut r = RateResult::new(value_bits);
        r.input = Some(Pmf::from_solver(self.q.channel.input().clone(), px.to_vec()));
        r.test_channel = Some(Channel::from_solver(
            self.q.channel.output().clone(),
            self.q.metric.output().clone(),
            relay.to_vec(),
        ));
        let iyz = to_bits(self.bottleneck(px, relay));
        r.achieved_bottleneck = Some(iyz);
        r.ledger.slack.insert("bottleneck".into(), iyz - self.q.bottleneck);
        r
    }
}

fn ascent_options(opts: &SolverOptions) -> AscentOptions {
    AscentOptions {
        restarts: opts.restarts,
        ..outer_options(opts)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Gmi,
    Lm,
}

/// Runs the outer search; returns the best point and the ascent statistics.
fn search(
    layout: &Layout,
    kind: Kind,
    seeds: Vec<Vec<f64>>,
    opts: &SolverOptions,
) -> (Vec<f64>, f64, usize, usize) {
    let relay_fixed = layout.fixed_relay.is_some();
    let value = |v: &[f64]| -> f64 {
        let (px, relay) = layout.split(v);
        if relay_fixed {
            let excess = layout.bottleneck(px, relay) - layout.limit;
            if excess > 0.0 {
                return -1.0 - excess;
            }
        }
        let inner = layout.inner(px, relay);
        to_bits(match kind {
            Kind::Gmi => inner.gmi_dual_max().0,
            Kind::Lm => inner.lm_solve().value,
        })
    };
    let blocks = layout.blocks();
    if blocks.is_empty() {
        return (Vec::new(), value(&[]), 0, 1);
    }
    let best = maximize(&blocks, value, |v| layout.retract(v), seeds, &ascent_options(opts));
    (best.point, best.value, best.iterations, best.runs)
}

fn trivial(layout: &Layout, note: &str) -> RateResult {
    let px = layout
        .fixed_px
        .clone()
        .unwrap_or_else(|| vec![1.0 / layout.nx as f64; layout.nx]);
    let relay = layout.fixed_relay.clone().unwrap_or_else(|| {
        (0..layout.ny * layout.nz)
            .map(|k| if k % layout.nz == 0 { 1.0 } else { 0.0 })
            .collect()
    });
    let mut r = layout.result(&layout.pack(&px, &relay), 0.0);
    r.diagnostics.push(note.to_string());
    r
}

fn finish(
    q: &MismatchQuery,
    layout: &Layout,
    kind: Kind,
    point: &[f64],
    value: f64,
    iterations: usize,
    runs: usize,
) -> RateResult {
    let (px, relay) = layout.split(point);
    if value < 0.0 {
        let mut r = trivial(layout, "fixed relay test channel exceeds the bottleneck for every input tried");
        r.input = Some(Pmf::from_solver(q.channel.input().clone(), px.to_vec()));
        return r;
    }
    let inner = layout.inner(px, relay);
    let joint = joint_of(q.channel.input(), q.metric.output(), inner.pxz.clone());
    let mut r = match kind {
        Kind::Lm => {
            let sol = inner.lm_solve();
            let mut r = lm_result(&inner, &sol, &joint);
            r.rate = value;
            r
        }
        Kind::Gmi => {
            let (_, lambda, _) = inner.gmi_dual_max();
            let mut r = RateResult::new(value).with_multiplier("lambda", lambda);
            r.ledger.d = Some(-to_bits(inner.anchor()));
            r.ledger.theta = Some(to_bits(inner.anchor()));
            r.coupling = Some(joint);
            r
        }
    };
    let base = layout.result(point, value);
    r.input = base.input;
    r.test_channel = base.test_channel;
    r.achieved_bottleneck = base.achieved_bottleneck;
    r.ledger.slack.extend(base.ledger.slack);
    r.iterations += iterations;
    r.restarts_used = runs;
    r
}

/// GMI rate: the GMI dual value maximized over `P_X` and `P_{Z|Y}` (each when
/// requested) subject to `I(Y;Z) <= B`.
pub fn gmi_rate(q: &MismatchQuery, opts: &SolverOptions) -> Result<RateResult> {
    q.validate_decoding()?;
    let layout = Layout::new(q);
    if let Some(r) = degenerate(q, &layout) {
        return Ok(r);
    }
    let seeds = layout.start_points(opts);
    let (point, value, iterations, runs) = search(&layout, Kind::Gmi, seeds, opts);
    Ok(finish(q, &layout, Kind::Gmi, &point, value, iterations, runs))
}

/// LM rate: the LM inner value maximized over `P_X` and `P_{Z|Y}` subject to
/// `I(Y;Z) <= B`. The search is seeded with the GMI optimum and only accepts
/// improving steps, so the result never falls below [`gmi_rate`].
pub fn lm_rate(q: &MismatchQuery, opts: &SolverOptions) -> Result<RateResult> {
    q.validate_decoding()?;
    let layout = Layout::new(q);
    if let Some(r) = degenerate(q, &layout) {
        return Ok(r);
    }
    let gmi = gmi_rate(q, opts)?;
    let gmi_point = layout.pack(
        gmi.input.as_ref().unwrap().probs(),
        gmi.test_channel.as_ref().unwrap().as_flat(),
    );
    let mut seeds = vec![gmi_point];
    seeds.extend(layout.start_points(opts));
    let (point, value, iterations, runs) = search(&layout, Kind::Lm, seeds, opts);
    let mut r = finish(q, &layout, Kind::Lm, &point, value, iterations, runs);
    r.multipliers.insert("gmi".into(), gmi.rate);
    Ok(r)
}

fn degenerate(q: &MismatchQuery, layout: &Layout) -> Option<RateResult> {
    if q.bottleneck == 0.0 && layout.fixed_relay.is_none() {
        return Some(trivial(layout, "B = 0 forces Z independent of Y"));
    }
    if let (Some(px), Some(relay)) = (&layout.fixed_px, &layout.fixed_relay) {
        if layout.bottleneck(px, relay) > layout.limit {
            return Some(trivial(layout, "fixed relay test channel exceeds the bottleneck"));
        }
    }
    None
}
