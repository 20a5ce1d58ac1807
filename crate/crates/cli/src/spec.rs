//! The JSON spec file: schema, defaults and validation into solver queries.
//!
//! Matrices are row-major with one row per conditioning symbol: `channel[x][y]`
//! is `P(y|x)`, `relay_test_channel[y][z]` is `P(z|y)`, decoding metrics are
//! indexed `[x][z]` and relay distortions `[y][z]`. Alphabets default to
//! indexed symbols sized from the matrices.

use std::collections::BTreeMap;
use std::path::Path;

use bottleneck_core::fading::{FadingModel, QuadratureSpec};
use bottleneck_core::mismatch::{StateFamily, TestChannelSpec};
use bottleneck_core::prob::{Alphabet, Channel, Metric, MetricKind, Pmf, MASS_TOLERANCE, MIN_DECODING_VALUE};
use bottleneck_core::sim::{CodebookStyle, Engine, DEFAULT_BUDGET, DEFAULT_EPSILON};
use bottleneck_core::InputSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Numbers {
    One(f64),
    Many(Vec<f64>),
}

impl Numbers {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Numbers::One(v) => vec![*v],
            Numbers::Many(v) => v.clone(),
        }
    }
}

/// A probability vector, or one of the keywords `"uniform"` and `"optimize"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PmfField {
    Values(Vec<f64>),
    Keyword(String),
}

/// A stochastic matrix, or the keyword `"optimize"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixField {
    Values(Vec<Vec<f64>>),
    Keyword(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    /// `"decoding"` or `"distortion"`.
    pub kind: String,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFamilySpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<String>>,
    pub channels: Vec<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub encoder_knows_state: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FadingSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    pub rho: Numbers,
    /// `"gauss-laguerre"` or `"monte-carlo"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    pub n: usize,
    pub trials: usize,
    /// `"typicality"` or `"min_distortion"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relay: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Relay distortion `d0[y][z]` for the min-distortion relay.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relay_distortion: Option<Vec<Vec<f64>>>,
    /// `"matched_ml"`, `"max_metric"`, `"threshold"` or `"mmi"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decoder: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_epsilon: Option<f64>,
    /// `"iid"` or `"constant_composition"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub codebook: Option<String>,
    /// `"auto"`, `"explicit"` or `"ensemble"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub engine: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphabets: Option<BTreeMap<String, Vec<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_pmf: Option<PmfField>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relay_test_channel: Option<MatrixField>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state_family: Option<StateFamilySpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fading: Option<FadingSpec>,
    #[serde(rename = "B", skip_serializing_if = "Option::is_none")]
    pub bottleneck: Option<Numbers>,
    #[serde(rename = "R", skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_cardinality: Option<usize>,
    /// Log-loss distortion level for `remote-rd`, bits.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distortion: Option<f64>,
    /// Relay codebook distribution for `relay-mismatch` and min-distortion simulation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_z: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

pub fn parse_str(text: &str) -> Result<SpecFile, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
}

pub fn load(path: &Path) -> Result<SpecFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_str(&text)
}

fn invalid(key: impl Into<String>, rule: impl Into<String>) -> CliError {
    CliError::Validation {
        key: key.into(),
        rule: rule.into(),
    }
}

fn check_vector(key: &str, v: &[f64]) -> Result<(), CliError> {
    for (i, &p) in v.iter().enumerate() {
        if !(p.is_finite() && p >= 0.0) {
            return Err(invalid(format!("{key}[{i}]"), format!("entries must be finite and nonnegative, found {p}")));
        }
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(invalid(key, format!("entries sum to {total}; must sum to 1 (tolerance {MASS_TOLERANCE:e})")));
    }
    Ok(())
}

fn check_shape(key: &str, m: &[Vec<f64>], rows: usize, cols: usize, what: &str) -> Result<(), CliError> {
    if m.len() != rows {
        return Err(invalid(key, format!("has {} rows; {what} needs {rows}", m.len())));
    }
    for (i, r) in m.iter().enumerate() {
        if r.len() != cols {
            return Err(invalid(format!("{key}[{i}]"), format!("has {} entries; {what} needs {cols}", r.len())));
        }
    }
    Ok(())
}

fn check_stochastic(key: &str, m: &[Vec<f64>]) -> Result<(), CliError> {
    for (i, r) in m.iter().enumerate() {
        check_vector(&format!("{key}[{i}]"), r)?;
    }
    Ok(())
}

fn number(key: &str, v: f64, rule: &str, ok: bool) -> Result<f64, CliError> {
    if v.is_finite() && ok {
        Ok(v)
    } else {
        Err(invalid(key, format!("{rule}, found {v}")))
    }
}

fn keyword<'a>(key: &str, value: &'a str, allowed: &[&str]) -> Result<&'a str, CliError> {
    if allowed.contains(&value) {
        Ok(value)
    } else {
        Err(invalid(key, format!("\"{value}\" is not one of {}", allowed.join(", "))))
    }
}

/// Validated view of a spec file. Accessors build solver inputs and record
/// every default they fill in.
pub struct Context {
    pub spec: SpecFile,
    pub seed: u64,
    defaults: Vec<(String, String)>,
}

impl Context {
    pub fn new(spec: SpecFile, seed_flag: Option<u64>, seed_env: Option<u64>) -> Self {
        let mut defaults = Vec::new();
        let seed = match (seed_flag, seed_env, spec.seed) {
            (Some(s), _, _) | (None, Some(s), _) | (None, None, Some(s)) => s,
            (None, None, None) => {
                defaults.push(("seed".into(), "0".into()));
                0
            }
        };
        let mut spec = spec;
        spec.seed = Some(seed);
        Self { spec, seed, defaults }
    }

    fn default(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        if !self.defaults.iter().any(|(k, _)| k == key) {
            self.defaults.push((key.into(), value));
        }
    }

    pub fn defaults(&self) -> &[(String, String)] {
        &self.defaults
    }

    /// Alphabet `name` with `size` symbols, from `alphabets` when declared there.
    fn alphabet(&mut self, name: &str, size: usize, source: &str) -> Result<Alphabet, CliError> {
        let declared = self.spec.alphabets.as_ref().and_then(|a| a.get(name)).cloned();
        match declared {
            Some(symbols) => {
                if symbols.len() != size {
                    return Err(invalid(
                        source,
                        format!("implies {size} symbols for alphabet {name}, but alphabets.{name} lists {}", symbols.len()),
                    ));
                }
                Alphabet::new(name, symbols).map_err(|e| invalid(format!("alphabets.{name}"), e.to_string()))
            }
            None => {
                let a = Alphabet::indexed(name, size);
                self.spec
                    .alphabets
                    .get_or_insert_with(BTreeMap::new)
                    .insert(name.into(), a.symbols().to_vec());
                Ok(a)
            }
        }
    }

    fn raw_channel(&self) -> Result<&Vec<Vec<f64>>, CliError> {
        self.spec
            .channel
            .as_ref()
            .ok_or_else(|| invalid("channel", "required for this command"))
    }

    pub fn channel(&mut self) -> Result<Channel, CliError> {
        let rows = self.raw_channel()?.clone();
        if rows.is_empty() || rows[0].is_empty() {
            return Err(invalid("channel", "must be a nonempty matrix"));
        }
        check_shape("channel", &rows, rows.len(), rows[0].len(), "a rectangular matrix")?;
        check_stochastic("channel", &rows)?;
        let x = self.alphabet("X", rows.len(), "channel")?;
        let y = self.alphabet("Y", rows[0].len(), "channel")?;
        Channel::new(x, y, rows).map_err(|e| invalid("channel", e.to_string()))
    }

    fn pmf_on(&self, key: &str, v: &[f64], alphabet: &Alphabet) -> Result<Pmf, CliError> {
        if v.len() != alphabet.len() {
            return Err(invalid(
                key,
                format!("has {} entries; alphabet {} has {}", v.len(), alphabet.name(), alphabet.len()),
            ));
        }
        check_vector(key, v)?;
        Pmf::new(alphabet.clone(), v.to_vec()).map_err(|e| invalid(key, e.to_string()))
    }

    /// Input distribution; `"optimize"` is accepted only when `allow_optimize`.
    pub fn input(&mut self, x: &Alphabet, allow_optimize: bool) -> Result<InputSpec, CliError> {
        let field = match self.spec.input_pmf.clone() {
            Some(f) => f,
            None => {
                let kw = if allow_optimize { "optimize" } else { "uniform" };
                self.default("input_pmf", kw);
                self.spec.input_pmf = Some(PmfField::Keyword(kw.into()));
                PmfField::Keyword(kw.into())
            }
        };
        match field {
            PmfField::Values(v) => Ok(InputSpec::Fixed(self.pmf_on("input_pmf", &v, x)?)),
            PmfField::Keyword(k) => match keyword("input_pmf", &k, &["uniform", "optimize"])? {
                "uniform" => Ok(InputSpec::Fixed(Pmf::uniform(x.clone()))),
                _ if allow_optimize => Ok(InputSpec::Optimize),
                _ => Err(invalid("input_pmf", "this command needs a fixed input distribution")),
            },
        }
    }

    pub fn fixed_input(&mut self, x: &Alphabet) -> Result<Pmf, CliError> {
        match self.input(x, false)? {
            InputSpec::Fixed(p) => Ok(p),
            InputSpec::Optimize => unreachable!("optimize rejected above"),
        }
    }

    /// `B` as a single nonnegative value.
    pub fn bottleneck(&self) -> Result<f64, CliError> {
        match self.bottlenecks()?.as_slice() {
            [b] => Ok(*b),
            _ => Err(invalid("B", "this command takes a single value")),
        }
    }

    pub fn bottlenecks(&self) -> Result<Vec<f64>, CliError> {
        let v = self
            .spec
            .bottleneck
            .as_ref()
            .ok_or_else(|| invalid("B", "required for this command"))?
            .values();
        if v.is_empty() {
            return Err(invalid("B", "must list at least one value"));
        }
        for (i, &b) in v.iter().enumerate() {
            number(&format!("B[{i}]"), b, "bottleneck must be finite and nonnegative", b >= 0.0)?;
        }
        Ok(v)
    }

    pub fn z_cardinality(&mut self, y: &Alphabet) -> Result<usize, CliError> {
        match self.spec.z_cardinality {
            Some(0) => Err(invalid("z_cardinality", "must be at least 1")),
            Some(k) => Ok(k),
            None => {
                let k = y.len() + 1;
                self.default("z_cardinality", k);
                self.spec.z_cardinality = Some(k);
                Ok(k)
            }
        }
    }

    fn matrix_on(&mut self, key: &str, rows: &[Vec<f64>], first: &Alphabet, second: &str) -> Result<Alphabet, CliError> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(invalid(key, "must be a nonempty matrix"));
        }
        check_shape(key, rows, first.len(), rows[0].len(), &format!("one row per symbol of {}", first.name()))?;
        self.alphabet(second, rows[0].len(), key)
    }

    pub fn relay_test_channel(&mut self, y: &Alphabet) -> Result<TestChannelSpec, CliError> {
        let field = self.spec.relay_test_channel.clone().unwrap_or_else(|| {
            self.default("relay_test_channel", "optimize");
            self.spec.relay_test_channel = Some(MatrixField::Keyword("optimize".into()));
            MatrixField::Keyword("optimize".into())
        });
        match field {
            MatrixField::Keyword(k) => {
                keyword("relay_test_channel", &k, &["optimize"])?;
                Ok(TestChannelSpec::Optimize)
            }
            MatrixField::Values(rows) => {
                let z = self.matrix_on("relay_test_channel", &rows, y, "Z")?;
                check_stochastic("relay_test_channel", &rows)?;
                Channel::new(y.clone(), z, rows)
                    .map(TestChannelSpec::Fixed)
                    .map_err(|e| invalid("relay_test_channel", e.to_string()))
            }
        }
    }

    pub fn fixed_relay_test_channel(&mut self, y: &Alphabet) -> Result<Channel, CliError> {
        if !matches!(self.spec.relay_test_channel, Some(MatrixField::Values(_))) {
            return Err(invalid("relay_test_channel", "this command needs a fixed matrix"));
        }
        match self.relay_test_channel(y)? {
            TestChannelSpec::Fixed(c) => Ok(c),
            TestChannelSpec::Optimize => unreachable!("fixed matrix checked above"),
        }
    }

    /// The `metric` block, which must be of `kind` with rows over `rows` and
    /// columns over the alphabet named `cols`.
    pub fn metric(&mut self, kind: MetricKind, rows: &Alphabet, cols: &str) -> Result<Metric, CliError> {
        let spec = self.spec.metric.clone().ok_or_else(|| invalid("metric", "required for this command"))?;
        let name = match kind {
            MetricKind::Decoding => "decoding",
            MetricKind::Distortion => "distortion",
        };
        keyword("metric.kind", &spec.kind, &["decoding", "distortion"])?;
        if spec.kind != name {
            return Err(invalid("metric.kind", format!("this command needs a {name} metric, found {}", spec.kind)));
        }
        self.metric_matrix("metric.values", &spec.values, kind, rows, cols)
    }

    fn metric_matrix(
        &mut self,
        key: &str,
        values: &[Vec<f64>],
        kind: MetricKind,
        rows: &Alphabet,
        cols: &str,
    ) -> Result<Metric, CliError> {
        let z = self.matrix_on(key, values, rows, cols)?;
        for (i, r) in values.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                let at = format!("{key}[{i}][{j}]");
                match kind {
                    MetricKind::Decoding if !(v.is_finite() && v >= MIN_DECODING_VALUE) => {
                        return Err(invalid(
                            at,
                            format!("decoding metric entries must be strictly positive (>= {MIN_DECODING_VALUE:e}), found {v}"),
                        ));
                    }
                    MetricKind::Distortion if !(v.is_finite() && v >= 0.0) => {
                        return Err(invalid(at, format!("distortions must be finite and nonnegative, found {v}")));
                    }
                    _ => {}
                }
            }
        }
        Metric::new(kind, rows.clone(), z, values.to_vec()).map_err(|e| invalid(key, e.to_string()))
    }

    pub fn p_z(&mut self, z: &Alphabet) -> Result<Pmf, CliError> {
        let v = self.spec.p_z.clone().ok_or_else(|| invalid("p_z", "required for this command"))?;
        self.pmf_on("p_z", &v, z)
    }

    pub fn distortion(&self) -> Result<f64, CliError> {
        let d = self.spec.distortion.ok_or_else(|| invalid("distortion", "required for this command"))?;
        number("distortion", d, "must be finite and nonnegative", d >= 0.0)
    }

    pub fn state_family(&mut self, need_prior: bool) -> Result<(StateFamily, bool), CliError> {
        let sf = self
            .spec
            .state_family
            .clone()
            .ok_or_else(|| invalid("state_family", "required for this command"))?;
        if sf.channels.is_empty() {
            return Err(invalid("state_family.channels", "must list at least one channel"));
        }
        let first = &sf.channels[0];
        if first.is_empty() || first[0].is_empty() {
            return Err(invalid("state_family.channels[0]", "must be a nonempty matrix"));
        }
        let x = self.alphabet("X", first.len(), "state_family.channels[0]")?;
        let y = self.alphabet("Y", first[0].len(), "state_family.channels[0]")?;
        let states = match &sf.states {
            Some(s) => {
                if s.len() != sf.channels.len() {
                    return Err(invalid(
                        "state_family.states",
                        format!("lists {} states for {} channels", s.len(), sf.channels.len()),
                    ));
                }
                Alphabet::new("S", s.clone()).map_err(|e| invalid("state_family.states", e.to_string()))?
            }
            None => {
                let a = self.alphabet("S", sf.channels.len(), "state_family.channels")?;
                if let Some(f) = self.spec.state_family.as_mut() {
                    f.states = Some(a.symbols().to_vec());
                }
                a
            }
        };
        let mut channels = Vec::new();
        for (s, rows) in sf.channels.iter().enumerate() {
            let key = format!("state_family.channels[{s}]");
            check_shape(&key, rows, x.len(), y.len(), "every state channel")?;
            check_stochastic(&key, rows)?;
            channels.push(Channel::new(x.clone(), y.clone(), rows.clone()).map_err(|e| invalid(&key, e.to_string()))?);
        }
        let prior = match &sf.prior {
            Some(p) => Some(self.pmf_on("state_family.prior", p, &states)?),
            None if need_prior => return Err(invalid("state_family.prior", "required for this command")),
            None => None,
        };
        let informed = match sf.encoder_knows_state {
            Some(b) => b,
            None => {
                self.default("state_family.encoder_knows_state", false);
                if let Some(f) = self.spec.state_family.as_mut() {
                    f.encoder_knows_state = Some(false);
                }
                false
            }
        };
        let family = StateFamily::new(states, channels, prior).map_err(|e| invalid("state_family", e.to_string()))?;
        Ok((family, informed))
    }

    /// Fading grid: `(gamma, sigma2, rhos, quadrature)`.
    pub fn fading(&mut self) -> Result<(f64, f64, Vec<f64>, QuadratureSpec), CliError> {
        let mut f = self.spec.fading.clone().ok_or_else(|| invalid("fading", "required for this command"))?;
        let gamma = *f.gamma.get_or_insert_with(|| {
            self.defaults.push(("fading.gamma".into(), "1".into()));
            1.0
        });
        let sigma2 = *f.sigma2.get_or_insert_with(|| {
            self.defaults.push(("fading.sigma2".into(), "1".into()));
            1.0
        });
        let scheme = f.quadrature.get_or_insert_with(|| {
            self.defaults.push(("fading.quadrature".into(), "gauss-laguerre".into()));
            "gauss-laguerre".into()
        });
        let quad = match keyword("fading.quadrature", scheme, &["gauss-laguerre", "monte-carlo"])? {
            "gauss-laguerre" => {
                let nodes = *f.nodes.get_or_insert_with(|| {
                    self.defaults.push(("fading.nodes".into(), "64".into()));
                    64
                });
                if nodes < 8 {
                    return Err(invalid("fading.nodes", format!("must be at least 8, found {nodes}")));
                }
                QuadratureSpec::GaussLaguerre { nodes }
            }
            _ => {
                let samples = *f.samples.get_or_insert_with(|| {
                    self.defaults.push(("fading.samples".into(), "100000".into()));
                    100_000
                });
                if samples < 10_000 {
                    return Err(invalid("fading.samples", format!("must be at least 10000, found {samples}")));
                }
                QuadratureSpec::MonteCarlo {
                    samples,
                    seed: self.seed,
                }
            }
        };
        let rhos = f.rho.values();
        if rhos.is_empty() {
            return Err(invalid("fading.rho", "must list at least one value"));
        }
        // Surface model errors with their keys before any grid evaluation.
        let b = self.bottlenecks()?[0];
        number("fading.gamma", gamma, "must be positive", gamma > 0.0)?;
        number("fading.sigma2", sigma2, "must be positive", sigma2 > 0.0)?;
        for (i, &r) in rhos.iter().enumerate() {
            let key = format!("fading.rho[{i}]");
            number(&key, r, "must lie in [0, 1]", (0.0..=1.0).contains(&r))?;
            FadingModel::new(gamma, sigma2, r, b).map_err(|e| invalid(&key, e.to_string()))?;
        }
        self.spec.fading = Some(f);
        Ok((gamma, sigma2, rhos, quad))
    }

    pub fn rate(&self) -> Result<f64, CliError> {
        let r = self.spec.rate.ok_or_else(|| invalid("R", "required for this command"))?;
        number("R", r, "rate must be finite and nonnegative", r >= 0.0)
    }

    pub fn simulation(&mut self) -> Result<SimulationSpec, CliError> {
        let mut s = self
            .spec
            .simulation
            .clone()
            .ok_or_else(|| invalid("simulation", "required for this command"))?;
        if s.n == 0 {
            return Err(invalid("simulation.n", "blocklength must be at least 1"));
        }
        if s.trials == 0 {
            return Err(invalid("simulation.trials", "must be at least 1"));
        }
        let mut fill = |key: &str, slot: &mut Option<String>, value: &str| {
            if slot.is_none() {
                *slot = Some(value.into());
                self.defaults.push((format!("simulation.{key}"), value.into()));
            }
        };
        fill("relay", &mut s.relay, "typicality");
        fill("decoder", &mut s.decoder, "matched_ml");
        fill("codebook", &mut s.codebook, "iid");
        fill("engine", &mut s.engine, "auto");
        keyword("simulation.relay", s.relay.as_deref().unwrap(), &["typicality", "min_distortion"])?;
        keyword("simulation.decoder", s.decoder.as_deref().unwrap(), &["matched_ml", "max_metric", "threshold", "mmi"])?;
        keyword("simulation.codebook", s.codebook.as_deref().unwrap(), &["iid", "constant_composition"])?;
        keyword("simulation.engine", s.engine.as_deref().unwrap(), &["auto", "explicit", "ensemble"])?;
        if s.relay.as_deref() == Some("typicality") && s.epsilon.is_none() {
            s.epsilon = Some(DEFAULT_EPSILON);
            self.default("simulation.epsilon", DEFAULT_EPSILON);
        }
        if let Some(e) = s.epsilon {
            number("simulation.epsilon", e, "must lie in (0, 1)", e > 0.0 && e < 1.0)?;
        }
        if s.decoder.as_deref() == Some("threshold") && s.threshold_epsilon.is_none() {
            s.threshold_epsilon = Some(DEFAULT_EPSILON);
            self.default("simulation.threshold_epsilon", DEFAULT_EPSILON);
        }
        if let Some(e) = s.threshold_epsilon {
            number("simulation.threshold_epsilon", e, "must be finite and nonnegative", e >= 0.0)?;
        }
        if s.budget.is_none() {
            s.budget = Some(DEFAULT_BUDGET);
            self.default("simulation.budget", DEFAULT_BUDGET);
        }
        let budget = s.budget.unwrap();
        number("simulation.budget", budget, "must be positive", budget > 0.0)?;
        self.spec.simulation = Some(s.clone());
        Ok(s)
    }

    pub fn relay_distortion(&mut self, y: &Alphabet, values: &[Vec<f64>]) -> Result<Metric, CliError> {
        self.metric_matrix("simulation.relay_distortion", values, MetricKind::Distortion, y, "Z")
    }

    pub fn record_theta(&mut self, theta: f64) {
        if let Some(s) = self.spec.simulation.as_mut() {
            if s.theta.is_none() {
                s.theta = Some(theta);
                self.defaults.push(("simulation.theta".into(), format!("{theta}")));
            }
        }
    }
}

pub fn codebook_style(s: &SimulationSpec) -> CodebookStyle {
    match s.codebook.as_deref() {
        Some("constant_composition") => CodebookStyle::ConstantComposition,
        _ => CodebookStyle::Iid,
    }
}

pub fn engine(s: &SimulationSpec) -> Engine {
    match s.engine.as_deref() {
        Some("explicit") => Engine::Explicit,
        Some("ensemble") => Engine::Ensemble,
        _ => Engine::Auto,
    }
}
