//! State-dependent channels: compound worst case and decoder side information.

use rayon::prelude::*;

use super::StateFamily;
use crate::error::{Error, Result};
use crate::ib::engine::Model;
use crate::ib::frontier::{self, Target};
use crate::ib::{capacity_at, check_bottleneck, frontier_result, outer_options};
use crate::prob::measures::{to_bits, to_nats};
use crate::prob::Pmf;
use crate::rate::{InputSpec, RateResult, SolverOptions};
use crate::simplex::maximize;

fn check_input(family: &StateFamily, input: &InputSpec) -> Result<()> {
    if let InputSpec::Fixed(p) = input {
        family.input().ensure_compatible(p.alphabet())?;
    }
    Ok(())
}

/// Per-state IB values at one input distribution.
fn state_values(family: &StateFamily, px: &Pmf, b: f64, k: usize, opts: &SolverOptions) -> Result<Vec<RateResult>> {
    family
        .channels()
        .par_iter()
        .map(|c| capacity_at(c, px, b, k, opts))
        .collect()
}

fn worst(values: &[RateResult]) -> usize {
    let mut best = 0;
    for (s, r) in values.iter().enumerate() {
        if r.rate < values[best].rate {
            best = s;
        }
    }
    best
}

fn compound_at(family: &StateFamily, px: &Pmf, b: f64, k: usize, opts: &SolverOptions) -> Result<RateResult> {
    let values = state_values(family, px, b, k, opts)?;
    let s = worst(&values);
    let mut r = values[s].clone();
    for (i, v) in values.iter().enumerate() {
        r.multipliers
            .insert(format!("state[{}]", family.states().symbols()[i]), v.rate);
    }
    r.diagnostics
        .push(format!("worst state: {}", family.states().symbols()[s]));
    Ok(r)
}

fn optimize_input(
    nx: usize,
    seed: Vec<f64>,
    f: impl Fn(&[f64]) -> f64 + Sync,
    opts: &SolverOptions,
) -> crate::simplex::AscentResult {
    let uniform = vec![1.0 / nx as f64; nx];
    let mut seeds = vec![seed];
    if seeds[0] != uniform {
        seeds.push(uniform);
    }
    maximize(&[nx], f, |_| {}, seeds, &outer_options(opts))
}

/// Compound bottleneck rate over a state family, with the relay test channel
/// chosen per state. With `encoder_knows_state` the input distribution is
/// also chosen per state (min over states of the per-state optimum); without
/// it one input serves every state.
pub fn compound_ib_rate(
    family: &StateFamily,
    bottleneck: f64,
    input: &InputSpec,
    encoder_knows_state: bool,
    opts: &SolverOptions,
) -> Result<RateResult> {
    check_bottleneck(bottleneck)?;
    check_input(family, input)?;
    let k = family.output().len() + 1;
    let alphabet = family.input().clone();
    let nx = alphabet.len();
    let decoupled = "per-state relay test channels decouple the inner problem into per-state bottleneck capacities";
    let (px, iterations, runs) = match input {
        InputSpec::Fixed(p) => (p.clone(), 0, 1),
        InputSpec::Optimize => {
            let inner = opts.inner();
            let f = |v: &[f64]| {
                let p = Pmf::from_solver(alphabet.clone(), v.to_vec());
                state_values(family, &p, bottleneck, k, &inner)
                    .map_or(0.0, |vals| vals.iter().map(|r| r.rate).fold(f64::INFINITY, f64::min))
            };
            let best = optimize_input(nx, vec![1.0 / nx as f64; nx], f, opts);
            (Pmf::from_solver(alphabet.clone(), best.point), best.iterations, best.runs)
        }
    };
    let mut r = compound_at(family, &px, bottleneck, k, opts)?;
    r.iterations += iterations;
    r.restarts_used = runs;
    r.diagnostics.push(decoupled.into());
    if !encoder_knows_state || matches!(input, InputSpec::Fixed(_)) {
        return Ok(r);
    }

    // Informed encoder: each state gets its own input, seeded at the shared optimum.
    let inner = opts.inner();
    let per_state: Vec<Result<RateResult>> = family
        .channels()
        .iter()
        .map(|c| {
            let f = |v: &[f64]| {
                let p = Pmf::from_solver(alphabet.clone(), v.to_vec());
                capacity_at(c, &p, bottleneck, k, &inner).map_or(0.0, |r| r.rate)
            };
            let best = optimize_input(nx, px.probs().to_vec(), f, opts);
            let p = Pmf::from_solver(alphabet.clone(), best.point);
            let at_best = capacity_at(c, &p, bottleneck, k, opts)?;
            let at_shared = capacity_at(c, &px, bottleneck, k, opts)?;
            Ok(if at_best.rate >= at_shared.rate { at_best } else { at_shared })
        })
        .collect();
    let per_state = per_state.into_iter().collect::<Result<Vec<_>>>()?;
    let s = worst(&per_state);
    let mut informed = per_state[s].clone();
    for (i, v) in per_state.iter().enumerate() {
        informed
            .multipliers
            .insert(format!("state[{}]", family.states().symbols()[i]), v.rate);
    }
    informed.multipliers.insert("uninformed".into(), r.rate);
    informed.rate = informed.rate.max(r.rate);
    informed.iterations += r.iterations;
    informed.restarts_used = r.restarts_used;
    informed.diagnostics.push(format!(
        "encoder knows the state; worst state: {}",
        family.states().symbols()[s]
    ));
    informed.diagnostics.push(decoupled.into());
    Ok(informed)
}

/// Oblivious relay with state known at the decoder: `max I(X;Z|S)` over
/// `P_{Z|Y}` with `I(Y;Z) <= B`, where `Y` depends on `(X, S)` and `S` has the
/// family prior. `|Z| = |Y| + 1`.
pub fn si_decoder_rate(
    family: &StateFamily,
    bottleneck: f64,
    input: &InputSpec,
    opts: &SolverOptions,
) -> Result<RateResult> {
    check_bottleneck(bottleneck)?;
    check_input(family, input)?;
    let prior = family
        .prior()
        .ok_or_else(|| Error::InvalidArgument("side-information rate needs a state prior".into()))?
        .clone();
    let (nx, ns, ny) = (family.input().len(), family.states().len(), family.output().len());
    let k = ny + 1;
    let model = |px: &[f64]| {
        Model::new(nx, ns, ny, |x, s, y| {
            px[x] * prior.get(s) * family.channels()[s].get(x, y)
        })
    };
    let at = |px: &[f64], opts: &SolverOptions| -> Result<RateResult> {
        let m = model(px);
        if bottleneck == 0.0 {
            let mut r = RateResult::zero();
            r.achieved_bottleneck = Some(0.0);
            return Ok(r.with_slack("bottleneck", 0.0));
        }
        let sol = frontier::solve(&m, k, Target::Relevance { bottleneck: to_nats(bottleneck) }, opts);
        if !sol.any_converged {
            return Err(Error::NonConvergence {
                solver: "si_decoder_rate",
                detail: format!("no alternating-minimization run met tolerance {:e}", opts.tolerance),
            });
        }
        let ceiling = to_bits(m.relevance_ceiling());
        let mut r = frontier_result(sol, family.output(), true);
        r.rate = r.rate.min(ceiling);
        let slack = r.achieved_bottleneck.unwrap() - bottleneck;
        Ok(r.with_slack("bottleneck", slack))
    };
    let (px, iterations, runs) = match input {
        InputSpec::Fixed(p) => (p.probs().to_vec(), 0, 1),
        InputSpec::Optimize => {
            let inner = opts.inner();
            let f = |v: &[f64]| at(v, &inner).map_or(0.0, |r| r.rate);
            let best = optimize_input(nx, vec![1.0 / nx as f64; nx], f, opts);
            (best.point, best.iterations, best.runs)
        }
    };
    let mut r = at(&px, opts)?;
    r.input = Some(Pmf::from_solver(family.input().clone(), px));
    r.iterations += iterations;
    r.restarts_used = runs;
    Ok(r)
}
