use super::{inner_from, joint_of, Inner};
use crate::error::Result;
use crate::prob::measures::{log_sum_exp, to_bits, LN_2};
use crate::prob::{JointPmf, Metric};
use crate::rate::RateResult;
use crate::roots::{bracket_up, solve_increasing, LAMBDA_CAP};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

impl Inner {
    /// `ln Σ_x P_X(x) V(z|x)^λ` for output `z`.
    fn log_partition(&self, z: usize, lambda: f64) -> f64 {
        log_sum_exp(
            (0..self.nx)
                .filter(|&x| self.px[x] > 0.0)
                .map(|x| self.px[x].ln() + lambda * self.logv[x * self.nz + z]),
        )
    }

    /// GMI dual objective at `λ`, nats.
    pub fn gmi_objective(&self, lambda: f64) -> f64 {
        let mut s = lambda * self.anchor();
        for z in 0..self.nz {
            if self.pz[z] > 0.0 {
                s -= self.pz[z] * self.log_partition(z, lambda);
            }
        }
        s
    }

    /// Golden-section maximization of the concave dual; returns `(value, λ)`.
    pub fn gmi_dual_max(&self) -> (f64, f64, usize) {
        let mut hi = 64.0;
        let mut iterations = 0;
        loop {
            let (mut a, mut b) = (0.0, hi);
            let mut c = b - INV_PHI * (b - a);
            let mut d = a + INV_PHI * (b - a);
            let (mut fc, mut fd) = (self.gmi_objective(c), self.gmi_objective(d));
            while b - a > 1e-10 {
                iterations += 1;
                if fc >= fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - INV_PHI * (b - a);
                    fc = self.gmi_objective(c);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + INV_PHI * (b - a);
                    fd = self.gmi_objective(d);
                }
            }
            let lambda = 0.5 * (a + b);
            if lambda > 0.99 * hi && hi < LAMBDA_CAP {
                hi *= 2.0;
                continue;
            }
            let value = self.gmi_objective(lambda);
            let zero = self.gmi_objective(0.0);
            return if zero >= value {
                (zero.max(0.0), 0.0, iterations)
            } else {
                (value, lambda, iterations)
            };
        }
    }

    /// Tilted joint `T_λ(x,z) = P_Z(z) P_X(x) V^λ / Σ_x' P_X(x') V(z|x')^λ`.
    pub fn tilted(&self, lambda: f64) -> Vec<f64> {
        let mut t = vec![0.0; self.nx * self.nz];
        for z in 0..self.nz {
            if self.pz[z] == 0.0 {
                continue;
            }
            let lz = self.log_partition(z, lambda);
            for x in 0..self.nx {
                if self.px[x] > 0.0 {
                    t[x * self.nz + z] =
                        self.pz[z] * (self.px[x].ln() + lambda * self.logv[x * self.nz + z] - lz).exp();
                }
            }
        }
        t
    }
}

/// GMI dual objective `E_P[log2 (V^λ / Σ_x' P_X(x') V(z|x')^λ)]` at one `λ`, bits.
pub fn gmi_dual_objective(p_xz: &JointPmf, metric: &Metric, lambda: f64) -> Result<f64> {
    Ok(to_bits(inner_from(p_xz, metric)?.gmi_objective(lambda)))
}

/// GMI through its one-parameter dual, maximized over `λ >= 0`.
pub fn gmi_dual(p_xz: &JointPmf, metric: &Metric) -> Result<RateResult> {
    let inner = inner_from(p_xz, metric)?;
    let (value, lambda, iterations) = inner.gmi_dual_max();
    let mut r = RateResult::new(to_bits(value)).with_multiplier("lambda", lambda);
    r.iterations = iterations;
    r.ledger.d = Some(-inner.anchor() / LN_2);
    r.ledger.theta = Some(inner.anchor() / LN_2);
    Ok(r)
}

/// GMI as `min KL(T ‖ P_X × P_Z)` over joints with `Z`-marginal `P_Z` and
/// `E_T[log V] >= E_P[log V]`; the `X`-marginal is left free.
pub fn gmi_primal(p_xz: &JointPmf, metric: &Metric) -> Result<RateResult> {
    let inner = inner_from(p_xz, metric)?;
    let target = inner.anchor();
    let e = |lambda: f64| inner.expect(&inner.tilted(lambda));
    let e0 = e(0.0);
    let mut r = RateResult::zero();
    let lambda = if e0 >= target - 1e-15 {
        0.0
    } else {
        match bracket_up(e, 1.0, target) {
            Some((hi, ehi)) => solve_increasing(e, 0.0, e0, hi, ehi, target, 1e-15).0,
            None => {
                r.converged = false;
                r.diagnostics.push(format!("metric constraint not reached at λ = {LAMBDA_CAP}"));
                LAMBDA_CAP
            }
        }
    };
    let t = inner.tilted(lambda);
    r.rate = to_bits(inner.kl_to_product(&t));
    r.multipliers.insert("lambda".into(), lambda);
    r.ledger.d = Some(-target / LN_2);
    r.ledger.theta = Some(target / LN_2);
    r.ledger.slack.insert("metric".into(), (target - inner.expect(&t)) / LN_2);
    r.ledger.slack.insert("z_marginal".into(), inner.marginal_residuals(&t).1);
    r.coupling = Some(joint_of(p_xz.first(), p_xz.second(), t));
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{Alphabet, Channel, MetricKind, Pmf};

    fn cascade() -> (JointPmf, Channel) {
        let w = Channel::bsc(0.1, "X", "Y").unwrap();
        let q = Channel::bsc(0.1, "Y", "Z").unwrap();
        let wz = w.then(&q).unwrap();
        let px = Pmf::uniform(w.input().clone());
        (JointPmf::from_channel(&wz, &px).unwrap(), wz)
    }

    #[test]
    fn matched_metric_gives_mutual_information() {
        let (j, wz) = cascade();
        let m = Metric::matched(&wz);
        let d = gmi_dual(&j, &m).unwrap();
        let p = gmi_primal(&j, &m).unwrap();
        let exact = j.mutual_information();
        assert!((exact - (1.0 - crate::prob::measures::h2(0.18))).abs() < 1e-12);
        assert!((d.rate - exact).abs() < 1e-12, "{}", d.rate);
        assert!((p.rate - exact).abs() < 1e-10, "{}", p.rate);
        assert!((d.multipliers["lambda"] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn constant_metric_gives_zero() {
        let (j, _) = cascade();
        let m = Metric::constant(MetricKind::Decoding, Alphabet::indexed("X", 2), Alphabet::indexed("Z", 2), 0.3)
            .unwrap();
        assert_eq!(gmi_dual(&j, &m).unwrap().rate, 0.0);
        assert_eq!(gmi_primal(&j, &m).unwrap().rate, 0.0);
        assert_eq!(gmi_dual_objective(&j, &m, 0.0).unwrap(), 0.0);
    }
}
