//! Mismatched-decoding and mismatched-relay rates.
//!
//! Inner problems (`lm_rate_inner`, `gmi_primal`, `gmi_dual`) act on a fixed
//! joint `P_{XZ}` and a decoding metric `V(z|x)`. Outer problems maximize the
//! inner value over the input distribution and the relay test channel under
//! the bottleneck `I(Y;Z) <= B`.

mod compound;
mod gmi;
mod lm;
mod outer;
mod relay;
mod relay_decoder;

pub use compound::{compound_ib_rate, si_decoder_rate};
pub use gmi::{gmi_dual, gmi_dual_objective, gmi_primal};
pub use lm::{lm_rate_inner, lm_rate_p2p};
pub use outer::{gmi_rate, lm_rate};
pub use relay::mismatched_relay_rate;
pub use relay_decoder::mismatched_relay_decoder_rate;

use crate::error::{Error, Result};
use crate::prob::{Alphabet, Channel, JointPmf, Metric, MetricKind, Pmf};
use crate::rate::InputSpec;

/// Relay test channel `P_{Z|Y}`: fixed, or optimized by the solver.
#[derive(Debug, Clone, PartialEq)]
pub enum TestChannelSpec {
    Fixed(Channel),
    Optimize,
}

impl From<Channel> for TestChannelSpec {
    fn from(c: Channel) -> Self {
        TestChannelSpec::Fixed(c)
    }
}

/// Query shared by the outer mismatched solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct MismatchQuery {
    /// `P_{Y|X}`.
    pub channel: Channel,
    pub relay_test_channel: TestChannelSpec,
    pub input: InputSpec,
    /// Decoding metric `V(z|x)` or relay distortion `d0(y,z)`.
    pub metric: Metric,
    /// Bottleneck `B`, bits.
    pub bottleneck: f64,
}

impl MismatchQuery {
    pub fn new(
        channel: Channel,
        relay_test_channel: impl Into<TestChannelSpec>,
        input: impl Into<InputSpec>,
        metric: Metric,
        bottleneck: f64,
    ) -> Self {
        Self {
            channel,
            relay_test_channel: relay_test_channel.into(),
            input: input.into(),
            metric,
            bottleneck,
        }
    }

    /// Checks `X -> Y -> Z` chaining against a decoding metric over `(X, Z)`.
    pub(crate) fn validate_decoding(&self) -> Result<()> {
        crate::ib::check_bottleneck(self.bottleneck)?;
        self.metric.require(MetricKind::Decoding)?;
        self.channel.input().ensure_compatible(self.metric.input())?;
        if let InputSpec::Fixed(p) = &self.input {
            self.channel.input().ensure_compatible(p.alphabet())?;
        }
        if let TestChannelSpec::Fixed(r) = &self.relay_test_channel {
            self.channel.output().ensure_compatible(r.input())?;
            r.output().ensure_compatible(self.metric.output())?;
        }
        Ok(())
    }
}

/// A finite family of channels `P_{Y|X,s}` sharing input and output alphabets.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFamily {
    states: Alphabet,
    channels: Vec<Channel>,
    prior: Option<Pmf>,
}

impl StateFamily {
    pub fn new(states: Alphabet, channels: Vec<Channel>, prior: Option<Pmf>) -> Result<Self> {
        if channels.len() != states.len() {
            return Err(Error::InvalidArgument(format!(
                "{} states but {} channels",
                states.len(),
                channels.len()
            )));
        }
        let first = &channels[0];
        for c in &channels[1..] {
            first.input().ensure_compatible(c.input())?;
            first.output().ensure_compatible(c.output())?;
        }
        if let Some(p) = &prior {
            states.ensure_compatible(p.alphabet())?;
        }
        Ok(Self {
            states,
            channels,
            prior,
        })
    }

    pub fn states(&self) -> &Alphabet {
        &self.states
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn prior(&self) -> Option<&Pmf> {
        self.prior.as_ref()
    }

    pub fn input(&self) -> &Alphabet {
        self.channels[0].input()
    }

    pub fn output(&self) -> &Alphabet {
        self.channels[0].output()
    }
}

/// Flat view of an inner problem: `P_{XZ}` and `ln V` on `nx × nz`.
#[derive(Debug, Clone)]
pub(crate) struct Inner {
    pub nx: usize,
    pub nz: usize,
    pub pxz: Vec<f64>,
    pub px: Vec<f64>,
    pub pz: Vec<f64>,
    pub logv: Vec<f64>,
}

impl Inner {
    pub fn new(pxz: Vec<f64>, nx: usize, nz: usize, logv: Vec<f64>) -> Self {
        let mut px = vec![0.0; nx];
        let mut pz = vec![0.0; nz];
        for x in 0..nx {
            for z in 0..nz {
                px[x] += pxz[x * nz + z];
                pz[z] += pxz[x * nz + z];
            }
        }
        Self {
            nx,
            nz,
            pxz,
            px,
            pz,
            logv,
        }
    }

    /// `E_P[ln V]`.
    pub fn anchor(&self) -> f64 {
        self.expect(&self.pxz)
    }

    pub fn expect(&self, q: &[f64]) -> f64 {
        q.iter().zip(&self.logv).filter(|(q, _)| **q > 0.0).map(|(q, l)| q * l).sum()
    }

    /// `KL(q ‖ P_X × P_Z)` in nats.
    pub fn kl_to_product(&self, q: &[f64]) -> f64 {
        let mut s = 0.0;
        for x in 0..self.nx {
            for z in 0..self.nz {
                let v = q[x * self.nz + z];
                if v > 0.0 {
                    s += v * (v / (self.px[x] * self.pz[z])).ln();
                }
            }
        }
        s.max(0.0)
    }

    /// Largest marginal deviation of `q` from `(P_X, P_Z)`.
    pub fn marginal_residuals(&self, q: &[f64]) -> (f64, f64) {
        let (mut rx, mut rz) = (0.0f64, 0.0f64);
        for x in 0..self.nx {
            let s: f64 = q[x * self.nz..(x + 1) * self.nz].iter().sum();
            rx = rx.max((s - self.px[x]).abs());
        }
        for z in 0..self.nz {
            let s: f64 = (0..self.nx).map(|x| q[x * self.nz + z]).sum();
            rz = rz.max((s - self.pz[z]).abs());
        }
        (rx, rz)
    }
}

/// Validates a joint against a decoding metric and flattens it.
pub(crate) fn inner_from(p_xz: &JointPmf, metric: &Metric) -> Result<Inner> {
    metric.require(MetricKind::Decoding)?;
    p_xz.first().ensure_compatible(metric.input())?;
    p_xz.second().ensure_compatible(metric.output())?;
    Ok(Inner::new(
        p_xz.probs().to_vec(),
        p_xz.rows(),
        p_xz.cols(),
        metric.log_values(),
    ))
}

/// `P_{XZ}(x,z) = Σ_y P_X(x) W(y|x) Q(z|y)`, flat.
pub(crate) fn cascade_joint(px: &[f64], w: &[f64], ny: usize, q: &[f64], nz: usize) -> Vec<f64> {
    let nx = px.len();
    let mut out = vec![0.0; nx * nz];
    for x in 0..nx {
        for y in 0..ny {
            let p = px[x] * w[x * ny + y];
            if p == 0.0 {
                continue;
            }
            for z in 0..nz {
                out[x * nz + z] += p * q[y * nz + z];
            }
        }
    }
    out
}

pub(crate) fn joint_of(first: &Alphabet, second: &Alphabet, probs: Vec<f64>) -> JointPmf {
    JointPmf::from_solver(first.clone(), second.clone(), probs)
}
