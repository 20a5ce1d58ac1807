//! Matched oblivious-relay solvers: the bottleneck capacity
//! `C(B) = max I(X;Z) s.t. I(Y;Z) <= B`, the remote rate-distortion function
//! under log-loss, and a grid oracle for small alphabets.

pub(crate) mod engine;
pub(crate) mod frontier;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::prob::measures::{to_bits, to_nats, xlogxy};
use crate::prob::{Alphabet, Axis, Channel, JointPmf, Pmf};
use crate::rate::{InputSpec, RateResult, SolverOptions};
use crate::simplex::{maximize, AscentOptions};
use engine::Model;
use frontier::Target;

/// Query for [`ib_capacity`].
#[derive(Debug, Clone, PartialEq)]
pub struct IbQuery {
    /// `P_{Y|X}`.
    pub channel: Channel,
    pub input: InputSpec,
    /// Bottleneck `B`, bits.
    pub bottleneck: f64,
    /// `|Z|`; defaults to `|Y| + 1`.
    pub z_cardinality: Option<usize>,
}

impl IbQuery {
    pub fn new(channel: Channel, input: impl Into<InputSpec>, bottleneck: f64) -> Self {
        Self {
            channel,
            input: input.into(),
            bottleneck,
            z_cardinality: None,
        }
    }

    pub fn with_z_cardinality(mut self, k: usize) -> Self {
        self.z_cardinality = Some(k);
        self
    }

    pub fn z_cardinality(&self) -> usize {
        self.z_cardinality.unwrap_or(self.channel.outputs() + 1)
    }

    fn validate(&self) -> Result<()> {
        check_bottleneck(self.bottleneck)?;
        if self.z_cardinality() == 0 {
            return Err(Error::InvalidArgument("z_cardinality must be at least 1".into()));
        }
        if let InputSpec::Fixed(p) = &self.input {
            self.channel.input().ensure_compatible(p.alphabet())?;
        }
        Ok(())
    }
}

pub(crate) fn check_bottleneck(b: f64) -> Result<()> {
    if b.is_finite() && b >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("bottleneck B = {b} must be finite and >= 0")))
    }
}

pub(crate) fn z_alphabet(k: usize) -> Alphabet {
    Alphabet::indexed("Z", k)
}

fn xy_model(channel: &Channel, px: &Pmf) -> Model {
    let (nx, ny) = (channel.inputs(), channel.outputs());
    Model::new(nx, 1, ny, |x, _, y| px.get(x) * channel.get(x, y))
}

/// Settings for outer searches over input distributions and test channels.
pub(crate) fn outer_options(opts: &SolverOptions) -> AscentOptions {
    AscentOptions {
        restarts: opts.outer_restarts,
        iterations: opts.outer_iterations,
        step: opts.outer_step,
        fd_step: 1e-4,
        seed: opts.seed,
    }
}

/// Packs a frontier solution as a result. `rate_is_relevance` selects which
/// coordinate is the reported rate.
pub(crate) fn frontier_result(
    sol: frontier::Solution,
    y: &Alphabet,
    rate_is_relevance: bool,
) -> RateResult {
    let p = &sol.point;
    let rate = to_bits(if rate_is_relevance { p.i_xz } else { p.i_yz });
    let mut r = RateResult::new(rate);
    r.test_channel = Some(Channel::from_solver(y.clone(), z_alphabet(p.k), p.q.clone()));
    r.achieved_bottleneck = Some(to_bits(p.i_yz));
    if let Some(beta) = p.beta {
        r.multipliers.insert("beta".into(), beta);
    }
    r.converged = p.converged;
    r.iterations = sol.iterations;
    r.restarts_used = sol.restarts;
    r.diagnostics = sol.diagnostics;
    r
}

fn constant_result(y: &Alphabet, k: usize) -> RateResult {
    let mut q = vec![0.0; y.len() * k];
    for row in q.chunks_mut(k) {
        row[0] = 1.0;
    }
    let mut r = RateResult::zero();
    r.test_channel = Some(Channel::from_solver(y.clone(), z_alphabet(k), q));
    r.achieved_bottleneck = Some(0.0);
    r
}

pub(crate) fn capacity_at(channel: &Channel, px: &Pmf, b: f64, k: usize, opts: &SolverOptions) -> Result<RateResult> {
    let y = channel.output();
    if b == 0.0 {
        let mut r = constant_result(y, k);
        r.input = Some(px.clone());
        return Ok(r.with_slack("bottleneck", -b));
    }
    let model = xy_model(channel, px);
    let sol = frontier::solve(&model, k, Target::Relevance { bottleneck: to_nats(b) }, opts);
    if !sol.any_converged {
        return Err(Error::NonConvergence {
            solver: "ib_capacity",
            detail: format!("no alternating-minimization run met tolerance {:e}", opts.tolerance),
        });
    }
    let ceiling = to_bits(model.relevance_ceiling());
    let mut r = frontier_result(sol, y, true);
    debug_assert!(r.rate <= ceiling + 1e-9 && r.rate <= b + 1e-9);
    r.rate = r.rate.min(ceiling);
    r.input = Some(px.clone());
    let slack = r.achieved_bottleneck.unwrap() - b;
    Ok(r.with_slack("bottleneck", slack))
}

/// Bottleneck capacity `max I(X;Z)` over test channels `P_{Z|Y}` with
/// `I(Y;Z) <= B`, optionally also over `P_X`.
pub fn ib_capacity(q: &IbQuery, opts: &SolverOptions) -> Result<RateResult> {
    q.validate()?;
    let k = q.z_cardinality();
    match &q.input {
        InputSpec::Fixed(px) => capacity_at(&q.channel, px, q.bottleneck, k, opts),
        InputSpec::Optimize => {
            let nx = q.channel.inputs();
            let inner = opts.inner();
            let f = |v: &[f64]| {
                let px = Pmf::from_solver(q.channel.input().clone(), v.to_vec());
                capacity_at(&q.channel, &px, q.bottleneck, k, &inner).map_or(0.0, |r| r.rate)
            };
            let uniform = vec![1.0 / nx as f64; nx];
            let best = maximize(&[nx], f, |_| {}, vec![uniform], &outer_options(opts));
            let px = Pmf::from_solver(q.channel.input().clone(), best.point);
            let mut r = capacity_at(&q.channel, &px, q.bottleneck, k, opts)?;
            r.iterations += best.iterations;
            r.restarts_used = best.runs;
            Ok(r.note("input distribution optimized by projected gradient ascent"))
        }
    }
}

/// Remote rate-distortion under log-loss: `min I(Y;Z)` subject to
/// `H(X|Z) <= D`, for a source `(X, Y)` with `X` first. Bits throughout.
pub fn remote_rd_logloss(source: &JointPmf, distortion: f64, opts: &SolverOptions) -> Result<RateResult> {
    if !distortion.is_finite() {
        return Err(Error::InvalidArgument(format!("distortion {distortion} must be finite")));
    }
    let y = source.second();
    let k = y.len() + 1;
    let hx = source.marginal(Axis::First).entropy();
    let hx_given_y = source.entropy() - source.marginal(Axis::Second).entropy();
    if distortion < hx_given_y - 1e-9 {
        return Err(Error::InfeasibleDistortion {
            distortion,
            minimum: hx_given_y,
        });
    }
    if distortion >= hx {
        return Ok(constant_result(y, k).with_slack("distortion", hx - distortion));
    }
    let model = Model::from_xy(source.probs(), source.rows(), source.cols());
    let relevance = to_nats(hx - distortion).min(model.relevance_ceiling());
    let sol = frontier::solve(&model, k, Target::Rate { relevance }, opts);
    if !sol.any_converged {
        return Err(Error::NonConvergence {
            solver: "remote_rd_logloss",
            detail: format!("no alternating-minimization run met tolerance {:e}", opts.tolerance),
        });
    }
    let conditional = hx - to_bits(sol.point.i_xz);
    let r = frontier_result(sol, y, false);
    Ok(r.with_slack("distortion", conditional - distortion))
}

/// Points per oracle grid beyond which [`ib_bruteforce_oracle`] refuses to run.
pub const ORACLE_GRID_BUDGET: u64 = 50_000_000;

fn simplex_grid(k: usize, m: usize) -> Vec<Vec<f64>> {
    let step = 1.0 / m as f64;
    match k {
        1 => vec![vec![1.0]],
        2 => (0..=m).map(|i| vec![i as f64 * step, (m - i) as f64 * step]).collect(),
        _ => (0..=m)
            .flat_map(|i| (0..=m - i).map(move |j| vec![i as f64 * step, j as f64 * step, (m - i - j) as f64 * step]))
            .collect(),
    }
}

/// Exhaustive search over test channels whose rows lie on a grid of spacing
/// `grid_step`; returns the best feasible `I(X;Z)` in bits.
pub fn ib_bruteforce_oracle(q: &IbQuery, grid_step: f64) -> Result<f64> {
    q.validate()?;
    let px = match &q.input {
        InputSpec::Fixed(p) => p,
        InputSpec::Optimize => {
            return Err(Error::InvalidArgument("the grid oracle needs a fixed input pmf".into()))
        }
    };
    let (ny, k) = (q.channel.outputs(), q.z_cardinality());
    if ny > 2 || k > 3 {
        return Err(Error::AlphabetTooLarge(format!(
            "grid oracle supports |Y| <= 2 and |Z| <= 3, got |Y| = {ny}, |Z| = {k}"
        )));
    }
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(Error::InvalidArgument(format!("grid step {grid_step} must lie in (0, 1]")));
    }
    let m = (1.0 / grid_step).round().max(1.0) as usize;
    let rows = simplex_grid(k, m);
    let points = (rows.len() as u64).saturating_pow(ny as u32);
    if points > ORACLE_GRID_BUDGET {
        return Err(Error::GridTooFine {
            points: points as f64,
            budget: ORACLE_GRID_BUDGET as f64,
        });
    }
    let limit = to_nats(q.bottleneck) + 1e-9 * std::f64::consts::LN_2;
    let py = q.channel.apply(px)?;
    let (ch, nx) = (&q.channel, q.channel.inputs());
    // Direct evaluation with stack buffers; the grid is large.
    let eval = |rows: [&[f64]; 2]| {
        let mut qz = [0.0f64; 3];
        for y in 0..ny {
            for z in 0..k {
                qz[z] += py.get(y) * rows[y][z];
            }
        }
        let mut iy = 0.0;
        for y in 0..ny {
            for z in 0..k {
                iy += py.get(y) * xlogxy(rows[y][z], qz[z]);
            }
        }
        if iy > limit {
            return 0.0;
        }
        let mut ix = 0.0;
        for x in 0..nx {
            for z in 0..k {
                let pzx: f64 = (0..ny).map(|y| ch.get(x, y) * rows[y][z]).sum();
                ix += px.get(x) * xlogxy(pzx, qz[z]);
            }
        }
        ix
    };
    let best = if ny == 1 {
        rows.iter().map(|r| eval([r, r])).fold(0.0, f64::max)
    } else {
        rows.par_iter()
            .map(|a| rows.iter().fold(0.0f64, |acc, b| acc.max(eval([a, b]))))
            .reduce(|| 0.0, f64::max)
    };
    Ok(to_bits(best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::measures::h2;

    fn bsc_query(p: f64, b: f64) -> IbQuery {
        let ch = Channel::bsc(p, "X", "Y").unwrap();
        let px = Pmf::uniform(ch.input().clone());
        IbQuery::new(ch, px, b)
    }

    #[test]
    fn saturated_bottleneck_gives_mutual_information() {
        let r = ib_capacity(&bsc_query(0.1, 1.0), &SolverOptions::default()).unwrap();
        assert!((r.rate - (1.0 - h2(0.1))).abs() < 1e-9, "{}", r.rate);
    }

    #[test]
    fn zero_bottleneck_gives_constant_channel() {
        let r = ib_capacity(&bsc_query(0.1, 0.0), &SolverOptions::default()).unwrap();
        assert_eq!(r.rate, 0.0);
        let t = r.test_channel.unwrap();
        assert_eq!(t.row(0), t.row(1));
    }

    #[test]
    fn oracle_rejects_large_alphabets() {
        let q = bsc_query(0.1, 1.0).with_z_cardinality(4);
        assert!(matches!(ib_bruteforce_oracle(&q, 0.1), Err(Error::AlphabetTooLarge(_))));
        let q = bsc_query(0.1, 1.0);
        assert!(matches!(ib_bruteforce_oracle(&q, 1e-3), Err(Error::GridTooFine { .. })));
    }

    #[test]
    fn remote_rd_endpoints() {
        let ch = Channel::bsc(0.1, "X", "Y").unwrap();
        let px = Pmf::uniform(ch.input().clone());
        let src = JointPmf::from_channel(&ch, &px).unwrap();
        let opts = SolverOptions::default();
        assert_eq!(remote_rd_logloss(&src, 1.0, &opts).unwrap().rate, 0.0);
        assert!(matches!(
            remote_rd_logloss(&src, 0.2, &opts),
            Err(Error::InfeasibleDistortion { .. })
        ));
        let r = remote_rd_logloss(&src, h2(0.1), &opts).unwrap();
        assert!((r.rate - 1.0).abs() < 1e-6, "{}", r.rate);
    }
}
