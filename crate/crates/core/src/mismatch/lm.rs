use super::{inner_from, joint_of, Inner};
use crate::error::{Error, Result};
use crate::prob::measures::{to_bits, LN_2};
use crate::prob::{Channel, JointPmf, Metric, Pmf};
use crate::rate::RateResult;
use crate::roots::{bracket_up, solve_increasing, LAMBDA_CAP};
use crate::ot::sinkhorn;

/// Minimizer of the LM inner problem, nats.
#[derive(Debug, Clone)]
pub(crate) struct LmSolution {
    pub value: f64,
    pub plan: Vec<f64>,
    pub lambda: f64,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

const SINKHORN_TOL: f64 = 1e-13;
const SINKHORN_ITERS: usize = 50_000;

impl Inner {
    fn tilt_kernel(&self, lambda: f64) -> Vec<f64> {
        (0..self.nx * self.nz)
            .map(|k| {
                let (x, z) = (k / self.nz, k % self.nz);
                if self.px[x] > 0.0 && self.pz[z] > 0.0 {
                    self.px[x].ln() + self.pz[z].ln() + lambda * self.logv[k]
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect()
    }

    /// `min KL(Q ‖ P_X × P_Z)` over couplings of `(P_X, P_Z)` with
    /// `E_Q[ln V] >= E_P[ln V]`. The minimizer is the I-projection of the
    /// tilted kernel `P_X P_Z V^λ`; `λ` is found by root solving.
    pub fn lm_solve(&self) -> LmSolution {
        let target = self.anchor();
        let product: Vec<f64> = (0..self.nx * self.nz)
            .map(|k| self.px[k / self.nz] * self.pz[k % self.nz])
            .collect();
        if self.expect(&product) >= target - 1e-15 {
            return LmSolution {
                value: 0.0,
                plan: product,
                lambda: 0.0,
                f: vec![0.0; self.nx],
                g: vec![0.0; self.nz],
                converged: true,
                iterations: 0,
            };
        }
        let warm = std::cell::RefCell::new(None::<Vec<f64>>);
        let iterations = std::cell::Cell::new(0usize);
        let all_converged = std::cell::Cell::new(true);
        let scale = |lambda: f64| {
            let s = sinkhorn(
                &self.px,
                &self.pz,
                &self.tilt_kernel(lambda),
                warm.borrow().as_deref(),
                SINKHORN_TOL,
                SINKHORN_ITERS,
            );
            iterations.set(iterations.get() + s.iterations);
            all_converged.set(all_converged.get() && s.converged);
            *warm.borrow_mut() = Some(s.g.clone());
            s
        };
        let e = |lambda: f64| self.expect(&scale(lambda).plan);
        let e0 = self.expect(&product);
        let (lambda, capped) = match bracket_up(e, 1.0, target) {
            Some((hi, ehi)) => (solve_increasing(e, 0.0, e0, hi, ehi, target, 1e-14).0, false),
            None => (LAMBDA_CAP, true),
        };
        let s = scale(lambda);
        LmSolution {
            value: self.kl_to_product(&s.plan),
            plan: s.plan,
            lambda,
            f: s.f,
            g: s.g,
            converged: all_converged.get() && !capped,
            iterations: iterations.get(),
        }
    }
}

fn check_input_marginal(p_x: &Pmf, p_xz: &JointPmf) -> Result<()> {
    p_x.alphabet().ensure_compatible(p_xz.first())?;
    for x in 0..p_x.len() {
        let m: f64 = (0..p_xz.cols()).map(|z| p_xz.get(x, z)).sum();
        if (m - p_x.get(x)).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "X-marginal of the joint ({m}) differs from P_X({x}) = {}",
                p_x.get(x)
            )));
        }
    }
    Ok(())
}

pub(crate) fn lm_result(inner: &Inner, sol: &LmSolution, p_xz: &JointPmf) -> RateResult {
    let target = inner.anchor();
    let (rx, rz) = inner.marginal_residuals(&sol.plan);
    let mut r = RateResult::new(to_bits(sol.value)).with_multiplier("lambda", sol.lambda);
    for (x, f) in sol.f.iter().enumerate().filter(|(_, f)| f.is_finite()) {
        r.multipliers.insert(format!("a[{x}]"), *f);
    }
    for (z, g) in sol.g.iter().enumerate().filter(|(_, g)| g.is_finite()) {
        r.multipliers.insert(format!("nu[{z}]"), *g);
    }
    r.converged = sol.converged;
    r.iterations = sol.iterations;
    r.ledger.d = Some(-target / LN_2);
    r.ledger.theta = Some(target / LN_2);
    r.ledger.slack.insert("metric".into(), (target - inner.expect(&sol.plan)) / LN_2);
    r.ledger.slack.insert("x_marginal".into(), rx);
    r.ledger.slack.insert("z_marginal".into(), rz);
    r.coupling = Some(joint_of(p_xz.first(), p_xz.second(), sol.plan.clone()));
    r
}

/// LM rate of a fixed joint: `min I(P_X, Q_{Z|X})` over `Q` with `Z`-marginal
/// `P_Z` and `E_Q[log V] >= E_P[log V]`.
pub fn lm_rate_inner(p_x: &Pmf, p_xz: &JointPmf, metric: &Metric) -> Result<RateResult> {
    check_input_marginal(p_x, p_xz)?;
    let inner = inner_from(p_xz, metric)?;
    let sol = inner.lm_solve();
    if !sol.converged && sol.lambda < LAMBDA_CAP {
        return Err(Error::NonConvergence {
            solver: "lm_rate_inner",
            detail: format!("Sinkhorn scaling did not reach tolerance {SINKHORN_TOL:e}"),
        });
    }
    let mut r = lm_result(&inner, &sol, p_xz);
    r.input = Some(p_x.clone());
    Ok(r)
}

/// Point-to-point LM rate: [`lm_rate_inner`] with the channel output as `Z`.
pub fn lm_rate_p2p(channel: &Channel, metric: &Metric, p_x: &Pmf) -> Result<RateResult> {
    let joint = JointPmf::from_channel(channel, p_x)?;
    lm_rate_inner(p_x, &joint, metric)
}
