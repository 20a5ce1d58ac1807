//! Result and query types shared by every rate solver.

use std::collections::BTreeMap;

use crate::prob::{Channel, JointPmf, Pmf};

/// Residuals and anchors of the constraints active at a reported solution.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstraintLedger {
    /// Metric anchor `-E_P[log2 V]`, bits.
    pub d: Option<f64>,
    /// Minimal expected relay distortion.
    pub d_star: Option<f64>,
    /// Named residuals; nonpositive or near zero at a feasible solution.
    pub slack: BTreeMap<String, f64>,
    /// Threshold-decoder level `E_P[log2 V]`, bits per symbol.
    pub theta: Option<f64>,
}

/// A computed rate with the solver state that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct RateResult {
    /// Rate in bits.
    pub rate: f64,
    pub test_channel: Option<Channel>,
    /// `I(Y;Z)` of the returned test channel, bits.
    pub achieved_bottleneck: Option<f64>,
    pub input: Option<Pmf>,
    /// Minimizing joint of an inner problem (LM, GMI or relay coupling).
    pub coupling: Option<JointPmf>,
    pub multipliers: BTreeMap<String, f64>,
    pub ledger: ConstraintLedger,
    pub converged: bool,
    pub iterations: usize,
    pub restarts_used: usize,
    /// Standard error of a Monte Carlo estimate of `rate`, bits.
    pub std_error: Option<f64>,
    pub diagnostics: Vec<String>,
}

impl RateResult {
    pub fn new(rate: f64) -> Self {
        Self {
            rate,
            test_channel: None,
            achieved_bottleneck: None,
            input: None,
            coupling: None,
            multipliers: BTreeMap::new(),
            ledger: ConstraintLedger::default(),
            converged: true,
            iterations: 0,
            restarts_used: 0,
            std_error: None,
            diagnostics: Vec::new(),
        }
    }

    pub fn zero() -> Self {
        Self::new(0.0)
    }

    pub(crate) fn with_multiplier(mut self, name: &str, value: f64) -> Self {
        self.multipliers.insert(name.to_string(), value);
        self
    }

    pub(crate) fn with_slack(mut self, name: &str, value: f64) -> Self {
        self.ledger.slack.insert(name.to_string(), value);
        self
    }

    pub(crate) fn note(mut self, text: impl Into<String>) -> Self {
        self.diagnostics.push(text.into());
        self
    }
}

/// Input distribution: fixed, or optimized by the solver.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSpec {
    Fixed(Pmf),
    Optimize,
}

impl From<Pmf> for InputSpec {
    fn from(p: Pmf) -> Self {
        InputSpec::Fixed(p)
    }
}

/// Tuning shared by the iterative solvers. Defaults follow the documented
/// algorithm settings; tests and the CLI may lower them for speed.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub seed: u64,
    /// Random restarts per inner bottleneck solve.
    pub restarts: usize,
    pub beta_points: usize,
    pub beta_min: f64,
    pub beta_max: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Target accuracy on the bottleneck constraint after β bisection.
    pub bottleneck_tolerance: f64,
    pub outer_restarts: usize,
    pub outer_iterations: usize,
    pub outer_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 10,
            beta_points: 64,
            beta_min: 1e-3,
            beta_max: 1e3,
            max_iterations: 5000,
            tolerance: 1e-10,
            bottleneck_tolerance: 1e-6,
            outer_restarts: 5,
            outer_iterations: 500,
            outer_step: 0.1,
        }
    }
}

impl SolverOptions {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    /// Reduced settings used for objective evaluations inside outer loops.
    pub(crate) fn inner(&self) -> Self {
        Self {
            restarts: self.restarts.min(2),
            beta_points: self.beta_points.min(24),
            max_iterations: self.max_iterations.min(1000),
            tolerance: self.tolerance.max(1e-11),
            ..self.clone()
        }
    }
}
