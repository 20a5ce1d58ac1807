//! Monte Carlo random coding over the relay channel: a random codebook at the
//! transmitter, a random compression codebook at the relay, a decoder at the
//! destination, and a Wilson interval on the empirical error rate.
//!
//! Two engines produce the same statistics. The explicit engine draws both
//! codebooks and runs the encoders on them, which is only possible while
//! `2^{nR}` and `2^{nB}` are small. The ensemble engine averages over the
//! codebooks exactly (see [`ensemble`]) and samples only the transmitted word,
//! the channel noise and the relay's pick, so desk-scale blocklengths with
//! astronomically many codewords stay cheap.
//!
//! Each trial draws from its own streams `(seed, 4 * trial + role)`, with
//! roles 0 transmitter codebook and message, 1 relay codebook, 2 channel
//! noise and 3 tie-breaking and selection; results do not depend on how
//! trials are scheduled.

mod codebook;
mod coding;
pub(crate) mod ensemble;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use codebook::{generate_codebook, nearest_type, Codebook, CodebookStyle, Symbol};
pub use coding::{
    decode, relay_compress_mindist, relay_compress_typicality, threshold_level, DecoderRule, RelayChoice,
    TIE_TOLERANCE,
};

use codebook::{constant_word, fill_codebook, sample_iid};
use coding::{empirical_mi, is_typical, joint_counts, metric_score, threshold_level_nats, tied};
use ensemble::{for_each_split, ln_factorials, ln_none, split_count_bound, Law, LogSum};

use crate::error::{Error, Result};
use crate::prob::{Channel, JointPmf, Metric, MetricKind, Pmf};
use crate::simplex::rng_for;

/// Default work budget, in symbol operations per [`simulate`] call.
pub const DEFAULT_BUDGET: f64 = 1e9;
/// Default typicality slack.
pub const DEFAULT_EPSILON: f64 = 0.05;
/// Largest codebook the explicit engine will materialize.
pub const EXPLICIT_MAX_CODEWORDS: f64 = (1u64 << 22) as f64;
/// 97.5% standard normal quantile.
const Z975: f64 = 1.959_963_984_540_054;

/// How the relay maps its observation to a compression index.
#[derive(Debug, Clone, PartialEq)]
pub enum RelaySpec {
    /// Jointly typical codeword under `P_Y × P_{Z|Y}`; codebook i.i.d. `P_Z`.
    Typicality { test_channel: Channel, eps: f64 },
    /// Minimum total distortion `d0(y, z)`; codebook i.i.d. `p_z`.
    MinDistortion { d0: Metric, p_z: Pmf },
}

impl RelaySpec {
    pub fn name(&self) -> &'static str {
        match self {
            RelaySpec::Typicality { .. } => "typicality",
            RelaySpec::MinDistortion { .. } => "min_distortion",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    /// Explicit when the codebooks fit the budget, ensemble otherwise.
    #[default]
    Auto,
    Explicit,
    Ensemble,
}

impl Engine {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::Auto => "auto",
            Engine::Explicit => "explicit",
            Engine::Ensemble => "ensemble",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub channel: Channel,
    pub input: Pmf,
    pub relay: RelaySpec,
    pub decoder: DecoderRule,
    /// Message rate, bits per symbol; `⌈2^{nR}⌉` messages.
    pub rate: f64,
    /// Relay link rate, bits per symbol; `⌈2^{nB}⌉` compression codewords.
    pub bottleneck: f64,
    pub n: usize,
    pub codebook_style: CodebookStyle,
    pub trials: usize,
    pub seed: u64,
    pub budget: f64,
    pub engine: Engine,
}

impl SimConfig {
    /// Configuration with i.i.d. codebooks, the default budget and automatic engine choice.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        channel: Channel,
        input: Pmf,
        relay: RelaySpec,
        decoder: DecoderRule,
        rate: f64,
        bottleneck: f64,
        n: usize,
        trials: usize,
        seed: u64,
    ) -> Self {
        Self {
            channel,
            input,
            relay,
            decoder,
            rate,
            bottleneck,
            n,
            codebook_style: CodebookStyle::Iid,
            trials,
            seed,
            budget: DEFAULT_BUDGET,
            engine: Engine::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub error_estimate: f64,
    /// Wilson 95% interval.
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: usize,
    pub errors: usize,
    /// Fraction of trials where the typicality relay found no typical codeword.
    pub relay_failure_rate: f64,
    pub seed: u64,
    /// Engine that ran; never `Auto`.
    pub engine: Engine,
    pub messages: f64,
    pub relay_codewords: f64,
}

/// Wilson score interval at 95% for `errors` out of `trials`.
pub fn wilson_interval(errors: usize, trials: usize) -> (f64, f64) {
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z975 * Z975;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z975 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).clamp(0.0, p), (center + half).clamp(p, 1.0))
}

/// `⌈2^{n r}⌉` and its natural log.
fn codeword_count(n: usize, r: f64) -> (f64, f64) {
    let bits = n as f64 * r;
    if bits < 52.0 {
        let m = bits.exp2().ceil();
        (m, m.ln())
    } else {
        (bits.exp2(), bits * std::f64::consts::LN_2)
    }
}

enum Relay {
    Typical { target: Vec<f64>, eps: f64 },
    MinDist { d: Vec<f64> },
}

enum Dec {
    Metric(Vec<f64>),
    Threshold { log_v: Vec<f64>, level: f64 },
    Mmi,
}

/// A validated configuration, flattened for the trial loops.
struct Plan {
    n: usize,
    nx: usize,
    ny: usize,
    nz: usize,
    px: Vec<f64>,
    pz: Vec<f64>,
    rows: Vec<WeightedIndex<f64>>,
    relay: Relay,
    dec: Dec,
    style: CodebookStyle,
    cc_type: Vec<usize>,
    m: f64,
    ln_m: f64,
    k: f64,
    ln_k: f64,
    seed: u64,
}

fn validate(cfg: &SimConfig) -> Result<Plan> {
    let bad = |m: String| Err(Error::InvalidArgument(m));
    if cfg.n == 0 {
        return bad("blocklength n must be at least 1".into());
    }
    if cfg.trials == 0 {
        return bad("trials must be at least 1".into());
    }
    if !(cfg.rate.is_finite() && cfg.rate >= 0.0) {
        return bad(format!("rate R = {} must be finite and nonnegative", cfg.rate));
    }
    if !(cfg.bottleneck.is_finite() && cfg.bottleneck >= 0.0) {
        return bad(format!("bottleneck B = {} must be finite and nonnegative", cfg.bottleneck));
    }
    if !(cfg.budget > 0.0) {
        return bad(format!("budget {} must be positive", cfg.budget));
    }
    let w = &cfg.channel;
    w.input().ensure_compatible(cfg.input.alphabet())?;
    if w.inputs().max(w.outputs()) > Symbol::MAX as usize {
        return Err(Error::AlphabetTooLarge(format!(
            "simulation alphabets are limited to {} symbols",
            Symbol::MAX
        )));
    }
    let py = w.apply(&cfg.input)?;
    let (relay, pz, z_alphabet, end_to_end) = match &cfg.relay {
        RelaySpec::Typicality { test_channel, eps } => {
            w.output().ensure_compatible(test_channel.input())?;
            if !(*eps > 0.0 && *eps < 1.0) {
                return bad(format!("typicality slack eps = {eps} must lie in (0, 1)"));
            }
            let joint = JointPmf::from_channel(test_channel, &py)?;
            let pz = test_channel.apply(&py)?;
            let relay = Relay::Typical {
                target: joint.probs().to_vec(),
                eps: *eps,
            };
            (relay, pz, test_channel.output().clone(), Some(w.then(test_channel)?))
        }
        RelaySpec::MinDistortion { d0, p_z } => {
            d0.require(MetricKind::Distortion)?;
            w.output().ensure_compatible(d0.input())?;
            d0.output().ensure_compatible(p_z.alphabet())?;
            let relay = Relay::MinDist { d: d0.as_flat().to_vec() };
            (relay, p_z.clone(), d0.output().clone(), None)
        }
    };
    if z_alphabet.len() > Symbol::MAX as usize {
        return Err(Error::AlphabetTooLarge(format!(
            "simulation alphabets are limited to {} symbols",
            Symbol::MAX
        )));
    }
    let check_metric = |v: &Metric| -> Result<Vec<f64>> {
        v.require(MetricKind::Decoding)?;
        w.input().ensure_compatible(v.input())?;
        z_alphabet.ensure_compatible(v.output())?;
        Ok(v.log_values())
    };
    let dec = match &cfg.decoder {
        DecoderRule::MaxMetric(v) => Dec::Metric(check_metric(v)?),
        DecoderRule::Threshold { metric, theta, eps } => {
            if !(theta.is_finite() && eps.is_finite() && *eps >= 0.0) {
                return Err(Error::DecoderConfig(format!(
                    "threshold level {theta} and slack {eps} must be finite, slack nonnegative"
                )));
            }
            Dec::Threshold {
                log_v: check_metric(metric)?,
                level: threshold_level_nats(*theta, *eps, cfg.n),
            }
        }
        DecoderRule::Mmi => Dec::Mmi,
        DecoderRule::MatchedMl => match end_to_end {
            Some(e) => Dec::Metric(Metric::matched(&e).log_values()),
            None => {
                return Err(Error::DecoderConfig(
                    "matched_ml needs the end-to-end law P(z|x), which a min-distortion relay does not define; use max_metric"
                        .into(),
                ))
            }
        },
    };
    let rows = (0..w.inputs())
        .map(|x| WeightedIndex::new(w.row(x)).expect("channel rows are distributions"))
        .collect();
    let (m, ln_m) = codeword_count(cfg.n, cfg.rate);
    let (k, ln_k) = codeword_count(cfg.n, cfg.bottleneck);
    Ok(Plan {
        n: cfg.n,
        nx: w.inputs(),
        ny: w.outputs(),
        nz: z_alphabet.len(),
        px: cfg.input.probs().to_vec(),
        pz: pz.probs().to_vec(),
        rows,
        relay,
        dec,
        style: cfg.codebook_style,
        cc_type: nearest_type(cfg.input.probs(), cfg.n),
        m,
        ln_m,
        k,
        ln_k,
        seed: cfg.seed,
    })
}

#[derive(Debug, Clone, Copy, Default)]
struct Trial {
    error: bool,
    relay_failure: bool,
}

struct Streams {
    tx: ChaCha8Rng,
    relay: ChaCha8Rng,
    noise: ChaCha8Rng,
    ties: ChaCha8Rng,
}

impl Streams {
    fn new(seed: u64, trial: usize) -> Self {
        let s = |role: u64| rng_for(seed, ((trial as u64) << 2) | role);
        Self {
            tx: s(0),
            relay: s(1),
            noise: s(2),
            ties: s(3),
        }
    }
}

impl Plan {
    fn channel(&self, x: &[Symbol], rng: &mut impl Rng) -> Vec<Symbol> {
        x.iter().map(|&s| self.rows[s as usize].sample(rng) as Symbol).collect()
    }

    fn explicit_work(&self, trials: usize) -> f64 {
        trials as f64 * self.n as f64 * (self.m + self.k)
    }

    fn tx_law(&self) -> Law<'_> {
        match self.style {
            CodebookStyle::Iid => Law::Iid(&self.px),
            CodebookStyle::ConstantComposition => Law::Pool(&self.cc_type),
        }
    }

    fn ensemble_work(&self, trials: usize) -> f64 {
        let relay = split_count_bound(self.n, self.ny, Law::Iid(&self.pz)) * (self.ny * self.nz) as f64;
        let dec = split_count_bound(self.n, self.nz, self.tx_law()) * (self.nx * self.nz) as f64;
        trials as f64 * (relay + dec + self.n as f64)
    }

    fn explicit_trial(&self, t: usize) -> Trial {
        let mut s = Streams::new(self.seed, t);
        let (m, k) = (self.m as usize, self.k as usize);
        let book = fill_codebook(&self.px, self.n, m, self.style, &mut s.tx);
        let msg = s.tx.gen_range(0..m);
        let relay_book = fill_codebook(&self.pz, self.n, k, CodebookStyle::Iid, &mut s.relay);
        let y = self.channel(book.word(msg), &mut s.noise);
        let (w, relay_failure) = match &self.relay {
            Relay::Typical { target, eps } => {
                let typical: Vec<usize> = relay_book
                    .iter()
                    .enumerate()
                    .filter(|(_, z)| is_typical(&joint_counts(&y, z, self.ny, self.nz), target, self.n, *eps))
                    .map(|(i, _)| i)
                    .collect();
                if typical.is_empty() {
                    (s.ties.gen_range(0..k), true)
                } else {
                    (typical[s.ties.gen_range(0..typical.len())], false)
                }
            }
            Relay::MinDist { d } => {
                let mut best = (0, f64::INFINITY);
                for (i, z) in relay_book.iter().enumerate() {
                    let v: f64 = joint_counts(&y, z, self.ny, self.nz)
                        .iter()
                        .zip(d)
                        .map(|(&c, &d)| c as f64 * d)
                        .sum();
                    if v < best.1 && !tied(v, best.1) {
                        best = (i, v);
                    }
                }
                (best.0, false)
            }
        };
        let z = relay_book.word(w);
        let score = |x: &[Symbol]| match &self.dec {
            Dec::Metric(lv) | Dec::Threshold { log_v: lv, .. } => {
                metric_score(&joint_counts(x, z, self.nx, self.nz), lv)
            }
            Dec::Mmi => empirical_mi(&joint_counts(x, z, self.nx, self.nz), self.nx, self.nz),
        };
        let decoded = match &self.dec {
            Dec::Threshold { level, .. } => {
                let mut passing = book.iter().enumerate().filter(|(_, x)| score(x) >= *level);
                match (passing.next(), passing.next()) {
                    (Some((i, _)), None) => Some(i),
                    _ => None,
                }
            }
            _ => {
                let mut best = (0, f64::NEG_INFINITY);
                for (i, x) in book.iter().enumerate() {
                    let v = score(x);
                    if v > best.1 && !tied(v, best.1) {
                        best = (i, v);
                    }
                }
                Some(best.0)
            }
        };
        Trial {
            error: decoded != Some(msg),
            relay_failure,
        }
    }

    /// Positions of `seq` grouped by symbol.
    fn classes(seq: &[Symbol], size: usize) -> Vec<Vec<usize>> {
        let mut c = vec![Vec::new(); size];
        for (i, &s) in seq.iter().enumerate() {
            c[s as usize].push(i);
        }
        c
    }

    /// Writes a uniformly arranged sequence with `counts[class * parts + symbol]`
    /// symbols in each class.
    fn arrange(classes: &[Vec<usize>], counts: &[usize], parts: usize, n: usize, rng: &mut impl Rng) -> Vec<Symbol> {
        let mut out = vec![0; n];
        for (c, pos) in classes.iter().enumerate() {
            let mut fill: Vec<Symbol> = (0..parts)
                .flat_map(|s| std::iter::repeat_n(s as Symbol, counts[c * parts + s]))
                .collect();
            fill.shuffle(rng);
            for (&p, &s) in pos.iter().zip(&fill) {
                out[p] = s;
            }
        }
        out
    }

    /// Draws one entry of `items` with probability proportional to `exp(ln_w)`.
    fn pick(items: &[(Vec<usize>, f64)], ln_total: f64, u: f64) -> &[usize] {
        let mut acc = 0.0;
        for (c, l) in items {
            acc += (l - ln_total).exp();
            if acc >= u {
                return c;
            }
        }
        &items.last().expect("nonempty selection").0
    }

    /// Relay output given `y`, averaging over the relay codebook.
    fn ensemble_relay(&self, y: &[Symbol], lf: &[f64], s: &mut Streams) -> (Vec<Symbol>, bool) {
        let classes = Self::classes(y, self.ny);
        let sizes: Vec<usize> = classes.iter().map(Vec::len).collect();
        let law = Law::Iid(&self.pz);
        match &self.relay {
            Relay::Typical { target, eps } => {
                let mut typical = Vec::new();
                let mut mass = LogSum::new();
                for_each_split(&sizes, law, lf, |c, l| {
                    if is_typical(c, target, self.n, *eps) {
                        typical.push((c.to_vec(), l));
                        mass.add(l);
                    }
                });
                let ln_fail = ln_none(mass.ln(), self.ln_k);
                if s.ties.gen::<f64>() < ln_fail.exp() {
                    return (sample_iid(&self.pz, self.n, &mut s.relay), true);
                }
                let counts = Self::pick(&typical, mass.ln(), s.ties.gen()).to_vec();
                (Self::arrange(&classes, &counts, self.nz, self.n, &mut s.relay), false)
            }
            Relay::MinDist { d } => {
                let mut items: Vec<(f64, Vec<usize>, f64)> = Vec::new();
                for_each_split(&sizes, law, lf, |c, l| {
                    let v: f64 = c.iter().zip(d).map(|(&k, &d)| k as f64 * d).sum();
                    items.push((v, c.to_vec(), l));
                });
                items.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                // Groups of tied distortion values, in increasing order.
                let mut groups: Vec<(usize, usize)> = Vec::new();
                for i in 0..items.len() {
                    match groups.last_mut() {
                        Some(g) if tied(items[g.0].0, items[i].0) => g.1 = i + 1,
                        _ => groups.push((i, i + 1)),
                    }
                }
                let group_mass: Vec<f64> = groups
                    .iter()
                    .map(|&(a, b)| {
                        let mut m = LogSum::new();
                        items[a..b].iter().for_each(|it| m.add(it.2));
                        m.ln()
                    })
                    .collect();
                // ln P(D > d_j) from the upper tail, ln P(D <= d_j) from the lower.
                let mut upper = vec![f64::NEG_INFINITY; groups.len()];
                let mut acc = LogSum::new();
                for j in (0..groups.len()).rev() {
                    upper[j] = acc.ln();
                    acc.add(group_mass[j]);
                }
                let u = s.ties.gen::<f64>();
                let mut lower = LogSum::new();
                let mut chosen = groups.len() - 1;
                for j in 0..groups.len() {
                    lower.add(group_mass[j]);
                    let ln_f = lower.ln();
                    // ln P(all K codewords exceed d_j)
                    let ln_all_above = if ln_f < -30.0 {
                        -(self.ln_k + ln_f).exp()
                    } else if ln_f < (0.5f64).ln() {
                        self.ln_k.exp() * (-ln_f.exp()).ln_1p()
                    } else {
                        self.ln_k.exp() * upper[j]
                    };
                    if -ln_all_above.exp_m1() >= u {
                        chosen = j;
                        break;
                    }
                }
                let (a, b) = groups[chosen];
                let pool: Vec<(Vec<usize>, f64)> = items[a..b].iter().map(|it| (it.1.clone(), it.2)).collect();
                let counts = Self::pick(&pool, group_mass[chosen], s.ties.gen()).to_vec();
                (Self::arrange(&classes, &counts, self.nz, self.n, &mut s.relay), false)
            }
        }
    }

    fn ensemble_trial(&self, t: usize, lf: &[f64]) -> Trial {
        let mut s = Streams::new(self.seed, t);
        let x = match self.style {
            CodebookStyle::Iid => sample_iid(&self.px, self.n, &mut s.tx),
            CodebookStyle::ConstantComposition => {
                let mut w = constant_word(&self.cc_type);
                w.shuffle(&mut s.tx);
                w
            }
        };
        let u_msg: f64 = s.tx.gen();
        let y = self.channel(&x, &mut s.noise);
        let (z, relay_failure) = self.ensemble_relay(&y, lf, &mut s);

        // Competitors: per z-class counts over X.
        let sizes: Vec<usize> = Self::classes(&z, self.nz).iter().map(Vec::len).collect();
        let (nx, nz) = (self.nx, self.nz);
        let transposed = |c: &[usize]| -> Vec<usize> {
            let mut t = vec![0; nx * nz];
            for zc in 0..nz {
                for xs in 0..nx {
                    t[xs * nz + zc] = c[zc * nx + xs];
                }
            }
            t
        };
        let score = |table: &[usize]| match &self.dec {
            Dec::Metric(lv) | Dec::Threshold { log_v: lv, .. } => metric_score(table, lv),
            Dec::Mmi => empirical_mi(table, nx, nz),
        };
        let truth = score(&joint_counts(&x, &z, nx, nz));

        // Messages before and after the true one.
        let (ln_before, ln_after) = if self.m < 2f64.powi(52) {
            let before = (u_msg * self.m).floor().min(self.m - 1.0);
            ((before).ln(), (self.m - 1.0 - before).ln())
        } else {
            (u_msg.ln() + self.ln_m, (-u_msg).ln_1p() + self.ln_m)
        };
        let ln_correct = match &self.dec {
            Dec::Threshold { level, .. } => {
                if truth < *level {
                    f64::NEG_INFINITY
                } else {
                    let mut pass = LogSum::new();
                    for_each_split(&sizes, self.tx_law(), lf, |c, l| {
                        if score(&transposed(c)) >= *level {
                            pass.add(l);
                        }
                    });
                    let ln_others = if self.m < 2f64.powi(52) { (self.m - 1.0).ln() } else { self.ln_m };
                    ln_none(pass.ln(), ln_others)
                }
            }
            _ => {
                let (mut gt, mut ge) = (LogSum::new(), LogSum::new());
                for_each_split(&sizes, self.tx_law(), lf, |c, l| {
                    let v = score(&transposed(c));
                    if tied(v, truth) {
                        ge.add(l);
                    } else if v > truth {
                        gt.add(l);
                        ge.add(l);
                    }
                });
                ln_none(ge.ln(), ln_before) + ln_none(gt.ln(), ln_after)
            }
        };
        let p_error = -ln_correct.exp_m1();
        Trial {
            error: s.ties.gen::<f64>() < p_error,
            relay_failure,
        }
    }
}

/// Runs `cfg.trials` independent random-coding trials and reports the error rate.
pub fn simulate(cfg: &SimConfig) -> Result<SimOutcome> {
    let plan = validate(cfg)?;
    let explicit_work = plan.explicit_work(cfg.trials);
    let explicit_fits =
        plan.m <= EXPLICIT_MAX_CODEWORDS && plan.k <= EXPLICIT_MAX_CODEWORDS && explicit_work <= cfg.budget;
    let engine = match cfg.engine {
        Engine::Explicit if !explicit_fits => {
            return Err(Error::BudgetExceeded {
                required: explicit_work,
                budget: cfg.budget,
            })
        }
        Engine::Explicit => Engine::Explicit,
        Engine::Auto if explicit_fits => Engine::Explicit,
        _ => {
            let work = plan.ensemble_work(cfg.trials);
            if work > cfg.budget {
                return Err(Error::BudgetExceeded {
                    required: work.min(explicit_work),
                    budget: cfg.budget,
                });
            }
            Engine::Ensemble
        }
    };
    let lf = ln_factorials(plan.n);
    let trials: Vec<Trial> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| match engine {
            Engine::Explicit => plan.explicit_trial(t),
            _ => plan.ensemble_trial(t, &lf),
        })
        .collect();
    let errors = trials.iter().filter(|t| t.error).count();
    let failures = trials.iter().filter(|t| t.relay_failure).count();
    let (ci_low, ci_high) = wilson_interval(errors, cfg.trials);
    Ok(SimOutcome {
        error_estimate: errors as f64 / cfg.trials as f64,
        ci_low,
        ci_high,
        trials: cfg.trials,
        errors,
        relay_failure_rate: failures as f64 / cfg.trials as f64,
        seed: cfg.seed,
        engine,
        messages: plan.m,
        relay_codewords: plan.k,
    })
}
