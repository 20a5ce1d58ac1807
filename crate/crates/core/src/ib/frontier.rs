//! Constrained points on the bottleneck frontier, found by a β sweep,
//! bisection on β, and a time-sharing fallback on the concave envelope.

use rayon::prelude::*;

use super::engine::{mixture, Model, Point};
use crate::rate::SolverOptions;
use crate::simplex::rng_for;

/// Feasibility slack on the information constraints, nats.
const FEAS: f64 = 1e-9 * std::f64::consts::LN_2;
const TIE: f64 = 1e-12;
/// Largest β reached when the sweep extends past `beta_max` (weakly correlated
/// models only become informative at β of order one over the squared maximal
/// correlation).
const BETA_CAP: f64 = 1e9;

#[derive(Debug, Clone, Copy)]
pub(crate) enum Target {
    /// Maximize `I(X;Z|S)` subject to `I(Y;Z) <= bottleneck` (nats).
    Relevance { bottleneck: f64 },
    /// Minimize `I(Y;Z)` subject to `I(X;Z|S) >= relevance` (nats).
    Rate { relevance: f64 },
}

impl Target {
    fn feasible(&self, p: &Point) -> bool {
        match *self {
            Target::Relevance { bottleneck } => p.i_yz <= bottleneck + FEAS,
            Target::Rate { relevance } => p.i_xz >= relevance - FEAS,
        }
    }

    fn better(&self, a: &Point, b: &Point) -> bool {
        match *self {
            Target::Relevance { .. } => {
                a.i_xz > b.i_xz + TIE || ((a.i_xz - b.i_xz).abs() <= TIE && a.i_yz < b.i_yz - TIE)
            }
            Target::Rate { .. } => {
                a.i_yz < b.i_yz - TIE || ((a.i_yz - b.i_yz).abs() <= TIE && a.i_xz > b.i_xz + TIE)
            }
        }
    }

    /// Constraint coordinate of a point and its target level.
    fn coordinate(&self, p: &Point) -> (f64, f64) {
        match *self {
            Target::Relevance { bottleneck } => (p.i_yz, bottleneck),
            Target::Rate { relevance } => (p.i_xz, relevance),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Solution {
    pub point: Point,
    pub iterations: usize,
    pub restarts: usize,
    pub any_converged: bool,
    pub diagnostics: Vec<String>,
}

struct Solver<'a> {
    model: &'a Model,
    k: usize,
    opts: &'a SolverOptions,
}

impl Solver<'_> {
    /// Best Lagrangian value over warm starts plus seeded random starts.
    fn solve_at(&self, beta: f64, tag: u64, warm: &[&Point], random: usize) -> (Point, usize) {
        let mut starts: Vec<Vec<f64>> = warm.iter().map(|p| p.q.clone()).collect();
        for r in 0..random {
            let mut rng = rng_for(self.opts.seed, (tag << 16) | r as u64);
            starts.push(self.model.random_channel(self.k, &mut rng));
        }
        let sols: Vec<Point> = starts
            .into_par_iter()
            .map(|q| {
                self.model
                    .solve(beta, q, self.k, self.opts.max_iterations, self.opts.tolerance)
            })
            .collect();
        let iters = sols.iter().map(|p| p.iterations).sum();
        let mut best = 0;
        for (i, p) in sols.iter().enumerate() {
            let (lb, lp) = (
                sols[best].i_yz - beta * sols[best].i_xz,
                p.i_yz - beta * p.i_xz,
            );
            if lp < lb - TIE {
                best = i;
            }
        }
        (sols.into_iter().nth(best).unwrap(), iters)
    }
}

pub(crate) fn solve(model: &Model, k: usize, target: Target, opts: &SolverOptions) -> Solution {
    let solver = Solver { model, k, opts };
    let mut iterations = 0;
    let mut any_converged = false;
    let mut diagnostics = Vec::new();
    let ceiling = model.relevance_ceiling();

    let mut pool: Vec<Point> = vec![model.hard_point(&vec![0; model.ny], k)];
    let groups = model.sufficient_groups();
    if groups.iter().max().map_or(0, |g| g + 1) <= k {
        pool.push(model.hard_point(&groups, k));
    }

    // β sweep with warm start from the previous grid point. Past `beta_max`
    // it continues at the same ratio while the constraint is still slack.
    let n = opts.beta_points.max(2);
    let ratio = (opts.beta_max / opts.beta_min).ln() / (n - 1) as f64;
    let mut sweep: Vec<Point> = Vec::with_capacity(n);
    let mut saturated = 0;
    for i in 0.. {
        let beta = opts.beta_min * (ratio * i as f64).exp();
        if i >= n {
            let slack = sweep.last().is_some_and(|p| match target {
                Target::Relevance { .. } => target.feasible(p),
                Target::Rate { .. } => !target.feasible(p),
            });
            if !slack || beta > BETA_CAP {
                break;
            }
        }
        let warm: Vec<&Point> = sweep.last().into_iter().collect();
        let (p, it) = solver.solve_at(beta, i as u64, &warm, opts.restarts);
        iterations += it;
        any_converged |= p.converged;
        let sat = p.i_xz >= ceiling - 1e-12;
        sweep.push(p);
        saturated = if sat { saturated + 1 } else { 0 };
        if saturated >= 3 {
            break;
        }
    }
    pool.extend(sweep.iter().cloned());

    // Bisection on log β between the last feasible and first infeasible sweep points.
    let bracket = match target {
        Target::Relevance { .. } => sweep
            .windows(2)
            .rposition(|w| target.feasible(&w[0]) && !target.feasible(&w[1])),
        Target::Rate { .. } => sweep
            .windows(2)
            .position(|w| !target.feasible(&w[0]) && target.feasible(&w[1])),
    };
    if let Some(i) = bracket {
        let (mut lo, mut hi) = (sweep[i].clone(), sweep[i + 1].clone());
        for step in 0..100u64 {
            let (bl, bh) = (lo.beta.unwrap(), hi.beta.unwrap());
            if bh / bl - 1.0 < 1e-13 {
                break;
            }
            let beta = (bl * bh).sqrt();
            let (p, it) = solver.solve_at(beta, 1_000_000 + step, &[&lo, &hi], 2);
            iterations += it;
            any_converged |= p.converged;
            let (c, t) = target.coordinate(&p);
            let close = (c - t).abs() <= opts.bottleneck_tolerance * std::f64::consts::LN_2;
            let low_side = match target {
                Target::Relevance { .. } => target.feasible(&p),
                Target::Rate { .. } => !target.feasible(&p),
            };
            pool.push(p.clone());
            if low_side {
                lo = p;
            } else {
                hi = p;
            }
            if close {
                break;
            }
        }
    }

    let mut best: Option<&Point> = None;
    for p in pool.iter().filter(|p| target.feasible(p)) {
        if best.is_none_or(|b| target.better(p, b)) {
            best = Some(p);
        }
    }
    let mut point = best.expect("the constant channel is always feasible").clone();

    // Concave envelope over pairs; time-share when it beats every single point.
    let mut env: Option<(usize, usize, f64, f64)> = None;
    for (a, pa) in pool.iter().enumerate() {
        for (b, pb) in pool.iter().enumerate() {
            let (ca, t) = target.coordinate(pa);
            let (cb, _) = target.coordinate(pb);
            if !(ca < t && cb > t) {
                continue;
            }
            let theta = (cb - t) / (cb - ca);
            let value = match target {
                Target::Relevance { .. } => theta * pa.i_xz + (1.0 - theta) * pb.i_xz,
                Target::Rate { .. } => -(theta * pa.i_yz + (1.0 - theta) * pb.i_yz),
            };
            if env.is_none_or(|e| value > e.3) {
                env = Some((a, b, theta, value));
            }
        }
    }
    if let Some((a, b, theta, value)) = env {
        let current = match target {
            Target::Relevance { .. } => point.i_xz,
            Target::Rate { .. } => -point.i_yz,
        };
        if value > current + 1e-7 * std::f64::consts::LN_2 {
            let m = mixture(model, &pool[a], &pool[b], theta);
            if target.feasible(&m) && target.better(&m, &point) {
                diagnostics.push(format!(
                    "time-sharing of two frontier points (weight {theta:.6}) beats every single β solution"
                ));
                point = m;
            }
        }
    }

    Solution {
        point,
        iterations,
        restarts: opts.restarts,
        any_converged,
        diagnostics,
    }
}
