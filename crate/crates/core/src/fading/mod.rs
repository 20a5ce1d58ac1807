//! GMI of the Gaussian fast-fading channel `Y = H X + N` with imperfect CSI
//! and weighted nearest-neighbour decoding, behind an oblivious relay.
//!
//! The estimate `Ĥ` and the error `Δ = H - Ĥ` are independent circularly
//! symmetric complex Gaussians with variances `ρ²` and `1 - ρ²`, so
//! `|Ĥ|² = ρ² U` and `|H|² = V` with `U, V ~ Exp(1)`. The relay quantizes with
//! Gaussian noise of variance `q`; the rate at `q` is
//!
//! ```text
//! E[log2(1 + ρ² U Γ / ((1 - ρ²) Γ + σ² + q))]
//! ```
//!
//! subject to `E[log2((V Γ + σ² + q) / q)] <= B`. Both sides decrease in `q`,
//! so the optimum sits where the constraint is tight.

mod quadrature;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

pub use quadrature::GaussLaguerre;

use crate::error::{Error, Result};
use crate::prob::measures::LN_2;
use crate::rate::RateResult;
use crate::simplex::rng_for;

/// Disagreement between `n` and `2n` nodes that triggers `QuadratureUnstable`.
pub const QUADRATURE_CHECK: f64 = 1e-3;
const Q_RELATIVE_TOL: f64 = 1e-8;
const Q_MAX_ITERATIONS: usize = 200;

/// Channel-estimation uncertainty model. Only the independent Gaussian split
/// is implemented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Uncertainty {
    #[default]
    IndependentGaussian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FadingModel {
    /// Input power `Γ`, linear.
    pub gamma: f64,
    /// Noise variance `σ²`.
    pub sigma2: f64,
    /// Estimation quality `ρ ∈ [0, 1]`.
    pub rho: f64,
    /// Bottleneck, bits.
    pub bottleneck: f64,
    pub model: Uncertainty,
}

impl FadingModel {
    pub fn new(gamma: f64, sigma2: f64, rho: f64, bottleneck: f64) -> Result<Self> {
        let m = Self {
            gamma,
            sigma2,
            rho,
            bottleneck,
            model: Uncertainty::IndependentGaussian,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidArgument(what));
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return bad(format!("gamma = {} must be finite and > 0", self.gamma));
        }
        if !(self.sigma2.is_finite() && self.sigma2 > 0.0) {
            return bad(format!("sigma2 = {} must be finite and > 0", self.sigma2));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return bad(format!("rho = {} must lie in [0, 1]", self.rho));
        }
        crate::ib::check_bottleneck(self.bottleneck)
    }

    fn error_variance(&self) -> f64 {
        1.0 - self.rho * self.rho
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadratureSpec {
    GaussLaguerre { nodes: usize },
    MonteCarlo { samples: usize, seed: u64 },
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec::GaussLaguerre { nodes: 64 }
    }
}

impl QuadratureSpec {
    pub fn monte_carlo(seed: u64) -> Self {
        QuadratureSpec::MonteCarlo { samples: 100_000, seed }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            QuadratureSpec::GaussLaguerre { nodes } if nodes < 8 => Err(Error::InvalidArgument(format!(
                "Gauss-Laguerre needs at least 8 nodes, got {nodes}"
            ))),
            QuadratureSpec::MonteCarlo { samples, .. } if samples < 10_000 => Err(Error::InvalidArgument(format!(
                "Monte Carlo needs at least 10^4 samples, got {samples}"
            ))),
            _ => Ok(()),
        }
    }
}

/// Samples of `(|Ĥ|², |H|²)`, or quadrature nodes shared by both.
enum Measure {
    Rule(GaussLaguerre),
    Samples { estimate: Vec<f64>, total: Vec<f64> },
}

impl Measure {
    fn build(spec: &QuadratureSpec, rho: f64) -> Self {
        match *spec {
            QuadratureSpec::GaussLaguerre { nodes } => Measure::Rule(GaussLaguerre::new(nodes)),
            QuadratureSpec::MonteCarlo { samples, seed } => {
                let mut rng = rng_for(seed, 0xfad);
                let (s_hat, s_err) = (rho / 2f64.sqrt(), (1.0 - rho * rho).max(0.0).sqrt() / 2f64.sqrt());
                let mut estimate = Vec::with_capacity(samples);
                let mut total = Vec::with_capacity(samples);
                for _ in 0..samples {
                    let g: [f64; 4] = [
                        rng.sample(StandardNormal),
                        rng.sample(StandardNormal),
                        rng.sample(StandardNormal),
                        rng.sample(StandardNormal),
                    ];
                    let (hr, hi) = (s_hat * g[0], s_hat * g[1]);
                    let (tr, ti) = (hr + s_err * g[2], hi + s_err * g[3]);
                    estimate.push(hr * hr + hi * hi);
                    total.push(tr * tr + ti * ti);
                }
                Measure::Samples { estimate, total }
            }
        }
    }

    /// `E[f(|Ĥ|²)]` where `|Ĥ|² = ρ² U`.
    fn over_estimate(&self, rho: f64, f: impl Fn(f64) -> f64) -> f64 {
        match self {
            Measure::Rule(r) => r.integrate(|u| f(rho * rho * u)),
            Measure::Samples { estimate, .. } => estimate.iter().map(|&v| f(v)).sum::<f64>() / estimate.len() as f64,
        }
    }

    /// `E[f(|H|²)]`.
    fn over_total(&self, f: impl Fn(f64) -> f64) -> f64 {
        match self {
            Measure::Rule(r) => r.integrate(f),
            Measure::Samples { total, .. } => total.iter().map(|&v| f(v)).sum::<f64>() / total.len() as f64,
        }
    }
}

fn objective_term(m: &FadingModel, q: f64, h2: f64) -> f64 {
    (1.0 + h2 * m.gamma / (m.error_variance() * m.gamma + m.sigma2 + q)).ln()
}

fn constraint_term(m: &FadingModel, q: f64, h2: f64) -> f64 {
    ((h2 * m.gamma + m.sigma2 + q) / q).ln()
}

fn matched_term(m: &FadingModel, q: f64, h2: f64) -> f64 {
    ((h2 * m.gamma + m.sigma2 + q) / (m.sigma2 + q)).ln()
}

/// Smallest `q` with `E[log2((|H|²Γ + σ² + q)/q)] <= B`: doubling bracket from
/// `q = 1`, then bisection on `ln q` to relative tolerance 1e-8.
fn solve_q(m: &FadingModel, measure: &Measure) -> (f64, usize) {
    let b = m.bottleneck * LN_2;
    let g = |q: f64| measure.over_total(|h| constraint_term(m, q, h));
    let (mut lo, mut hi) = (1.0, 1.0);
    if g(1.0) > b {
        while g(hi) > b {
            lo = hi;
            hi *= 2.0;
        }
    } else {
        while g(lo) <= b && lo > f64::MIN_POSITIVE * 1e10 {
            hi = lo;
            lo *= 0.5;
        }
    }
    let mut iterations = 0;
    while hi / lo - 1.0 > Q_RELATIVE_TOL && iterations < Q_MAX_ITERATIONS {
        iterations += 1;
        let mid = (lo * hi).sqrt();
        if g(mid) > b {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (hi, iterations)
}

struct Evaluation {
    rate: f64,
    q: f64,
    constraint: f64,
    iterations: usize,
    std_error: Option<f64>,
}

fn evaluate(m: &FadingModel, spec: &QuadratureSpec) -> Evaluation {
    let measure = Measure::build(spec, m.rho);
    let (q, iterations) = solve_q(m, &measure);
    let rate = measure.over_estimate(m.rho, |h| objective_term(m, q, h)) / LN_2;
    let constraint = measure.over_total(|h| constraint_term(m, q, h)) / LN_2;
    let std_error = match &measure {
        Measure::Rule(_) => None,
        Measure::Samples { estimate, total } => Some(delta_method_error(m, q, estimate, total)),
    };
    Evaluation {
        rate,
        q,
        constraint,
        iterations,
        std_error,
    }
}

/// Standard error of the plug-in rate, including the noise in `q*` that the
/// sampled constraint induces (first-order delta method).
fn delta_method_error(m: &FadingModel, q: f64, estimate: &[f64], total: &[f64]) -> f64 {
    let n = estimate.len() as f64;
    let c = m.error_variance() * m.gamma + m.sigma2 + q;
    // d/dq of the per-sample objective and constraint terms.
    let df: f64 = estimate.iter().map(|&h| -h * m.gamma / (c * (c + h * m.gamma))).sum::<f64>() / n;
    let dg: f64 = total
        .iter()
        .map(|&h| 1.0 / (h * m.gamma + m.sigma2 + q) - 1.0 / q)
        .sum::<f64>()
        / n;
    let k = df / dg;
    let vals: Vec<f64> = estimate
        .iter()
        .zip(total)
        .map(|(&e, &t)| objective_term(m, q, e) - k * constraint_term(m, q, t))
        .collect();
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt() / LN_2
}

/// GMI rate of the fading channel at the optimal relay quantization noise.
/// Gauss–Laguerre results are checked against a rule with twice the nodes.
pub fn fading_gmi_rate(m: &FadingModel, quad: &QuadratureSpec) -> Result<RateResult> {
    m.validate()?;
    quad.validate()?;
    if m.rho == 0.0 || m.bottleneck == 0.0 {
        let mut r = RateResult::zero();
        r.achieved_bottleneck = Some(0.0);
        r.diagnostics.push(if m.rho == 0.0 {
            "rho = 0: the estimate carries no information".into()
        } else {
            "B = 0: the relay sends nothing".into()
        });
        return Ok(r);
    }
    let e = evaluate(m, quad);
    if let QuadratureSpec::GaussLaguerre { nodes } = *quad {
        let check = evaluate(m, &QuadratureSpec::GaussLaguerre { nodes: 2 * nodes });
        if (check.rate - e.rate).abs() > QUADRATURE_CHECK {
            return Err(Error::QuadratureUnstable {
                primary: e.rate,
                check: check.rate,
            });
        }
    }
    let mut r = RateResult::new(e.rate.max(0.0)).with_multiplier("q", e.q);
    r.achieved_bottleneck = Some(e.constraint);
    r.ledger.slack.insert("bottleneck".into(), e.constraint - m.bottleneck);
    r.iterations = e.iterations;
    r.std_error = e.std_error;
    Ok(r)
}

/// Matched rate `E[log2((|H|²Γ + σ² + q)/(σ² + q))]` at quantization noise `q`.
pub fn matched_fading_rate(m: &FadingModel, q: f64, quad: &QuadratureSpec) -> Result<f64> {
    m.validate()?;
    quad.validate()?;
    if !(q >= 0.0) {
        return Err(Error::InvalidArgument(format!("q = {q} must be >= 0")));
    }
    let value = |spec: &QuadratureSpec| Measure::build(spec, m.rho).over_total(|h| matched_term(m, q, h)) / LN_2;
    let v = value(quad);
    if let QuadratureSpec::GaussLaguerre { nodes } = *quad {
        let check = value(&QuadratureSpec::GaussLaguerre { nodes: 2 * nodes });
        if (check - v).abs() > QUADRATURE_CHECK {
            return Err(Error::QuadratureUnstable { primary: v, check });
        }
    }
    Ok(v.max(0.0))
}

/// One row of a fading sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingRow {
    pub rho: f64,
    pub bottleneck: f64,
    pub rate: f64,
}

/// Rates over the grid `rhos × bottlenecks`, ordered by `ρ` then `B`
/// ascending.
pub fn fading_curve(
    gamma: f64,
    sigma2: f64,
    rhos: &[f64],
    bottlenecks: &[f64],
    quad: &QuadratureSpec,
) -> Result<Vec<FadingRow>> {
    let mut rhos = rhos.to_vec();
    let mut bs = bottlenecks.to_vec();
    for v in rhos.iter().chain(&bs) {
        if !v.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite grid value {v}")));
        }
    }
    rhos.sort_by(f64::total_cmp);
    bs.sort_by(f64::total_cmp);
    let grid: Vec<(f64, f64)> = rhos.iter().flat_map(|&r| bs.iter().map(move |&b| (r, b))).collect();
    grid.par_iter()
        .map(|&(rho, b)| {
            let m = FadingModel::new(gamma, sigma2, rho, b)?;
            Ok(FadingRow {
                rho,
                bottleneck: b,
                rate: fading_gmi_rate(&m, quad)?.rate,
            })
        })
        .collect()
}
