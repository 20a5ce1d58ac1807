//! Gauss–Laguerre rule for `∫_0^∞ e^{-u} f(u) du`.

/// Nodes and weights of the `n`-point rule.
#[derive(Debug, Clone)]
pub struct GaussLaguerre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLaguerre {
    /// Newton iteration on the three-term recurrence, with the usual
    /// asymptotic initial guesses for the roots of `L_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "rule needs at least one node");
        let nf = n as f64;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let mut z = 0.0f64;
        for i in 0..n {
            z = match i {
                0 => 3.0 / (1.0 + 2.4 * nf),
                1 => z + 15.0 / (1.0 + 2.5 * nf),
                _ => {
                    let ai = (i - 1) as f64;
                    z + (1.0 + 2.55 * ai) / (1.9 * ai) * (z - nodes[i - 2])
                }
            };
            let mut dp = 0.0;
            let mut p2 = 0.0;
            for _ in 0..100 {
                let (mut p1, mut p0) = (1.0f64, 0.0f64);
                for j in 0..n {
                    let jf = j as f64;
                    let p = p0;
                    p0 = p1;
                    p1 = ((2.0 * jf + 1.0 - z) * p0 - jf * p) / (jf + 1.0);
                    p2 = p0;
                }
                // p1 = L_n(z), p2 = L_{n-1}(z)
                dp = nf * (p1 - p2) / z;
                let step = p1 / dp;
                z -= step;
                if step.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            nodes[i] = z;
            // w_i = -1 / (n L'_n(z_i) L_{n-1}(z_i))
            weights[i] = -1.0 / (dp * nf * p2);
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&u, &w)| w * f(u)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_are_factorials() {
        for n in [8, 64, 128] {
            let rule = GaussLaguerre::new(n);
            let mut fact = 1.0;
            for k in 0..12u32 {
                if k > 0 {
                    fact *= k as f64;
                }
                let m = rule.integrate(|u| u.powi(k as i32));
                assert!((m - fact).abs() <= 1e-10 * fact, "n={n} k={k}: {m} vs {fact}");
            }
            let s: f64 = rule.weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-11, "{s}");
            assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn exponential_integral() {
        // ∫ e^{-u} / (1 + u) du = e E1(1)
        let rule = GaussLaguerre::new(128);
        let v = rule.integrate(|u| 1.0 / (1.0 + u));
        assert!((v - std::f64::consts::E * 0.219_383_934_395_520_3).abs() < 1e-6, "{v}");
    }
}
