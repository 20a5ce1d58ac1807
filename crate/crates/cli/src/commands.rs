//! Command dispatch: spec -> solver call -> report.

use std::f64::consts::LN_2;

use bottleneck_core::fading::fading_curve;
use bottleneck_core::ib::{ib_capacity, remote_rd_logloss, IbQuery};
use bottleneck_core::mismatch::{
    compound_ib_rate, gmi_rate, lm_rate, lm_rate_p2p, mismatched_relay_decoder_rate, mismatched_relay_rate,
    si_decoder_rate, MismatchQuery, TestChannelSpec,
};
use bottleneck_core::prob::{JointPmf, MetricKind};
use bottleneck_core::sim::{simulate, threshold_level, DecoderRule, RelaySpec, SimConfig};
use bottleneck_core::{InputSpec, RateResult, SolverOptions};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::format::num;
use crate::spec::{self, Context};
use crate::{Cli, CliError, Command};

/// Everything a command produced, ready for printing.
pub struct Report {
    pub command: Command,
    /// `(label, value)` lines of the human summary.
    pub lines: Vec<(String, String)>,
    pub defaults: Vec<(String, String)>,
    pub diagnostics: Vec<String>,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub json: Value,
    pub converged: bool,
}

impl Report {
    pub fn summary(&self) -> String {
        let mut s = format!("command: {}\n", self.command.name());
        for (k, v) in &self.lines {
            s += &format!("{k}: {v}\n");
        }
        if !self.defaults.is_empty() {
            let d: Vec<String> = self.defaults.iter().map(|(k, v)| format!("{k}={v}")).collect();
            s += &format!("defaults: {}\n", d.join(" "));
        }
        for d in &self.diagnostics {
            s += &format!("note: {d}\n");
        }
        s
    }

    pub fn csv(&self) -> String {
        let mut s = self.header.join(",") + "\n";
        for r in &self.rows {
            s += &(r.join(",") + "\n");
        }
        s
    }
}

struct Units {
    nats: bool,
}

impl Units {
    fn rate(&self, bits: f64) -> f64 {
        if self.nats {
            bits * LN_2
        } else {
            bits
        }
    }

    fn label(&self) -> &'static str {
        if self.nats {
            "nats"
        } else {
            "bits"
        }
    }
}

fn options(ctx: &Context, cli: &Cli) -> SolverOptions {
    let mut o = SolverOptions::with_seed(ctx.seed);
    if let Some(r) = cli.restarts {
        o.restarts = r.max(1);
    }
    o
}

fn rows_of(m: &[Vec<f64>]) -> Value {
    json!(m)
}

fn rate_json(r: &RateResult, u: &Units) -> Value {
    let mut o = Map::new();
    o.insert("rate".into(), json!(u.rate(r.rate)));
    o.insert("achieved_bottleneck".into(), json!(r.achieved_bottleneck.map(|b| u.rate(b))));
    o.insert("std_error".into(), json!(r.std_error.map(|e| u.rate(e))));
    o.insert("converged".into(), json!(r.converged));
    o.insert("iterations".into(), json!(r.iterations));
    o.insert("restarts_used".into(), json!(r.restarts_used));
    o.insert("multipliers".into(), json!(r.multipliers));
    o.insert(
        "ledger".into(),
        json!({"d": r.ledger.d, "d_star": r.ledger.d_star, "theta": r.ledger.theta, "slack": r.ledger.slack}),
    );
    o.insert("input".into(), json!(r.input.as_ref().map(|p| p.probs().to_vec())));
    o.insert("test_channel".into(), json!(r.test_channel.as_ref().map(|c| rows_of(&c.to_rows()))));
    o.insert("coupling".into(), json!(r.coupling.as_ref().map(|j| rows_of(&j.to_rows()))));
    o.insert("diagnostics".into(), json!(r.diagnostics));
    Value::Object(o)
}

fn optional(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Report for a single rate at one bottleneck value.
fn single(command: Command, b: Option<f64>, r: RateResult, u: &Units) -> Report {
    let mut lines = vec![("rate".to_string(), format!("{} {}", num(u.rate(r.rate)), u.label()))];
    if let Some(a) = r.achieved_bottleneck {
        lines.push(("achieved_bottleneck".into(), format!("{} {}", num(u.rate(a)), u.label())));
    }
    if let Some(e) = r.std_error {
        lines.push(("std_error".into(), format!("{} {}", num(u.rate(e)), u.label())));
    }
    if let Some(p) = &r.input {
        let v: Vec<String> = p.probs().iter().map(|&q| num(q)).collect();
        lines.push(("input".into(), v.join(" ")));
    }
    lines.push(("converged".into(), r.converged.to_string()));
    Report {
        command,
        lines,
        defaults: Vec::new(),
        diagnostics: r.diagnostics.clone(),
        header: vec!["B", "rate", "achieved_bottleneck", "converged"],
        rows: vec![vec![
            optional(b),
            num(u.rate(r.rate)),
            optional(r.achieved_bottleneck.map(|a| u.rate(a))),
            r.converged.to_string(),
        ]],
        json: json!({ "result": rate_json(&r, u) }),
        converged: r.converged,
    }
}

/// Runs the command named on the command line.
pub fn execute(cli: &Cli, env_seed: Option<u64>) -> Result<Report, CliError> {
    let spec = spec::load(&cli.spec)?;
    execute_spec(cli, spec, env_seed)
}

pub fn execute_spec(cli: &Cli, spec: spec::SpecFile, env_seed: Option<u64>) -> Result<Report, CliError> {
    let mut ctx = Context::new(spec, cli.seed, env_seed);
    let u = Units { nats: cli.nats };
    let opts = options(&ctx, cli);
    let c = cli.command;
    let mut report = match c {
        Command::IbCapacity => {
            let w = ctx.channel()?;
            let input = ctx.input(w.input(), true)?;
            let b = ctx.bottleneck()?;
            let k = ctx.z_cardinality(w.output())?;
            let r = ib_capacity(&IbQuery::new(w, input, b).with_z_cardinality(k), &opts)?;
            single(c, Some(b), r, &u)
        }
        Command::Sweep => sweep(&mut ctx, &opts, &u)?,
        Command::RemoteRd => {
            let w = ctx.channel()?;
            let px = ctx.fixed_input(w.input())?;
            let d = ctx.distortion()?;
            let source = JointPmf::from_channel(&w, &px)?;
            let r = remote_rd_logloss(&source, d, &opts)?;
            let achieved = d + r.ledger.slack.get("distortion").copied().unwrap_or(0.0);
            let mut rep = single(c, None, r, &u);
            rep.header = vec!["D", "rate", "achieved_distortion", "converged"];
            rep.rows[0][0] = num(d);
            rep.rows[0][2] = num(achieved);
            rep.lines.insert(1, ("achieved_distortion".into(), format!("{} bits", num(achieved))));
            rep
        }
        Command::LmRate | Command::GmiRate => {
            let w = ctx.channel()?;
            let input = ctx.input(w.input(), true)?;
            let relay = ctx.relay_test_channel(w.output())?;
            let metric = ctx.metric(MetricKind::Decoding, w.input(), "Z")?;
            let b = ctx.bottleneck()?;
            let q = MismatchQuery::new(w, relay, input, metric, b);
            let r = if c == Command::LmRate { lm_rate(&q, &opts)? } else { gmi_rate(&q, &opts)? };
            single(c, Some(b), r, &u)
        }
        Command::RelayMismatch => {
            let w = ctx.channel()?;
            let input = ctx.input(w.input(), true)?;
            let metric = ctx.metric(MetricKind::Distortion, w.output(), "Z")?;
            let p_z = ctx.p_z(metric.output())?;
            let b = ctx.bottleneck()?;
            let q = MismatchQuery::new(w, TestChannelSpec::Optimize, input, metric, b);
            single(c, Some(b), mismatched_relay_rate(&q, &p_z, &opts)?, &u)
        }
        Command::RelayDecoderMismatch => {
            let w = ctx.channel()?;
            let input = ctx.input(w.input(), true)?;
            let relay = ctx.fixed_relay_test_channel(w.output())?;
            let metric = ctx.metric(MetricKind::Decoding, w.input(), "Z")?;
            let b = ctx.bottleneck()?;
            single(c, Some(b), mismatched_relay_decoder_rate(&input, &w, &relay, &metric, b, &opts)?, &u)
        }
        Command::Compound | Command::SiDecoder => {
            let (family, informed) = ctx.state_family(c == Command::SiDecoder)?;
            let input = ctx.input(family.input(), true)?;
            let b = ctx.bottleneck()?;
            let r = if c == Command::Compound {
                compound_ib_rate(&family, b, &input, informed, &opts)?
            } else {
                si_decoder_rate(&family, b, &input, &opts)?
            };
            single(c, Some(b), r, &u)
        }
        Command::LmP2p => {
            let w = ctx.channel()?;
            let px = ctx.fixed_input(w.input())?;
            let metric = ctx.metric(MetricKind::Decoding, w.input(), "Y")?;
            single(c, None, lm_rate_p2p(&w, &metric, &px)?, &u)
        }
        Command::Fading => fading(&mut ctx, &u)?,
        Command::Simulate => sim(&mut ctx)?,
    };
    let mut spec_json = serde_json::to_value(&ctx.spec).expect("spec serializes");
    if let Value::Object(o) = &mut spec_json {
        o.remove("seed");
        o.insert("seed".into(), json!(ctx.seed));
    }
    report.defaults = ctx.defaults().to_vec();
    let defaults: Map<String, Value> = report.defaults.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    let mut top = Map::new();
    top.insert("command".into(), json!(c.name()));
    top.insert("units".into(), json!(u.label()));
    top.insert("spec".into(), spec_json);
    top.insert("defaults".into(), Value::Object(defaults));
    if let Value::Object(extra) = std::mem::take(&mut report.json) {
        top.extend(extra);
    }
    report.json = Value::Object(top);
    Ok(report)
}

fn sweep(ctx: &mut Context, opts: &SolverOptions, u: &Units) -> Result<Report, CliError> {
    let w = ctx.channel()?;
    let input = ctx.input(w.input(), true)?;
    let k = ctx.z_cardinality(w.output())?;
    let mut bs = ctx.bottlenecks()?;
    bs.sort_by(f64::total_cmp);
    let results: Vec<RateResult> = bs
        .par_iter()
        .map(|&b| ib_capacity(&IbQuery::new(w.clone(), input.clone(), b).with_z_cardinality(k), opts))
        .collect::<Result<_, _>>()?;
    let rows: Vec<Vec<String>> = bs
        .iter()
        .zip(&results)
        .map(|(&b, r)| {
            vec![
                num(b),
                num(u.rate(r.rate)),
                optional(r.achieved_bottleneck.map(|a| u.rate(a))),
                r.converged.to_string(),
            ]
        })
        .collect();
    let lines = bs
        .iter()
        .zip(&results)
        .map(|(&b, r)| (format!("B={}", num(b)), format!("{} {}", num(u.rate(r.rate)), u.label())))
        .collect();
    let mut diagnostics = Vec::new();
    if matches!(input, InputSpec::Optimize) {
        diagnostics.push("input distribution optimized separately at each B".into());
    }
    Ok(Report {
        command: Command::Sweep,
        lines,
        defaults: Vec::new(),
        diagnostics,
        header: vec!["B", "rate", "achieved_bottleneck", "converged"],
        rows,
        json: json!({ "results": results.iter().map(|r| rate_json(r, u)).collect::<Vec<_>>() }),
        converged: results.iter().all(|r| r.converged),
    })
}

fn fading(ctx: &mut Context, u: &Units) -> Result<Report, CliError> {
    let (gamma, sigma2, rhos, quad) = ctx.fading()?;
    let bs = ctx.bottlenecks()?;
    let rows = fading_curve(gamma, sigma2, &rhos, &bs, &quad)?;
    let lines = rows
        .iter()
        .map(|r| {
            let label = if rows.len() == 1 {
                "rate".to_string()
            } else {
                format!("rho={} B={}", num(r.rho), num(r.bottleneck))
            };
            (label, format!("{} {}", num(u.rate(r.rate)), u.label()))
        })
        .collect();
    let table: Vec<Value> = rows
        .iter()
        .map(|r| json!({"rho": r.rho, "B": r.bottleneck, "rate": u.rate(r.rate)}))
        .collect();
    Ok(Report {
        command: Command::Fading,
        lines,
        defaults: Vec::new(),
        diagnostics: Vec::new(),
        header: vec!["rho", "B", "rate"],
        rows: rows
            .iter()
            .map(|r| vec![num(r.rho), num(r.bottleneck), num(u.rate(r.rate))])
            .collect(),
        json: json!({ "rows": table }),
        converged: true,
    })
}

fn sim(ctx: &mut Context) -> Result<Report, CliError> {
    let w = ctx.channel()?;
    let px = ctx.fixed_input(w.input())?;
    let rate = ctx.rate()?;
    let b = ctx.bottleneck()?;
    let s = ctx.simulation()?;
    let relay = match s.relay.as_deref() {
        Some("min_distortion") => {
            let values = s.relay_distortion.clone().ok_or_else(|| CliError::Validation {
                key: "simulation.relay_distortion".into(),
                rule: "required with a min_distortion relay".into(),
            })?;
            let d0 = ctx.relay_distortion(w.output(), &values)?;
            let p_z = ctx.p_z(d0.output())?;
            RelaySpec::MinDistortion { d0, p_z }
        }
        _ => RelaySpec::Typicality {
            test_channel: ctx.fixed_relay_test_channel(w.output())?,
            eps: s.epsilon.expect("filled by validation"),
        },
    };
    let decoder = match s.decoder.as_deref() {
        Some("max_metric") => DecoderRule::MaxMetric(ctx.metric(MetricKind::Decoding, w.input(), "Z")?),
        Some("threshold") => {
            let metric = ctx.metric(MetricKind::Decoding, w.input(), "Z")?;
            let theta = match (s.theta, &relay) {
                (Some(t), _) => t,
                (None, RelaySpec::Typicality { test_channel, .. }) => {
                    let p_xz = JointPmf::from_channel(&w.then(test_channel)?, &px)?;
                    let t = threshold_level(&p_xz, &metric)?;
                    ctx.record_theta(t);
                    t
                }
                (None, RelaySpec::MinDistortion { .. }) => {
                    return Err(CliError::Validation {
                        key: "simulation.theta".into(),
                        rule: "required with a min_distortion relay (no end-to-end law to average over)".into(),
                    })
                }
            };
            DecoderRule::Threshold {
                metric,
                theta,
                eps: s.threshold_epsilon.expect("filled by validation"),
            }
        }
        Some("mmi") => DecoderRule::Mmi,
        _ => DecoderRule::MatchedMl,
    };
    let mut cfg = SimConfig::new(w, px, relay, decoder, rate, b, s.n, s.trials, ctx.seed);
    cfg.codebook_style = spec::codebook_style(&s);
    cfg.engine = spec::engine(&s);
    cfg.budget = s.budget.expect("filled by validation");
    let out = simulate(&cfg)?;
    let lines = vec![
        ("error_estimate".to_string(), num(out.error_estimate)),
        ("ci95".into(), format!("[{}, {}]", num(out.ci_low), num(out.ci_high))),
        ("errors".into(), format!("{} of {}", out.errors, out.trials)),
        ("relay_failure_rate".into(), num(out.relay_failure_rate)),
        ("engine".into(), out.engine.name().into()),
        ("seed".into(), out.seed.to_string()),
    ];
    let row = vec![
        num(rate),
        num(b),
        s.n.to_string(),
        out.trials.to_string(),
        out.errors.to_string(),
        num(out.error_estimate),
        num(out.ci_low),
        num(out.ci_high),
        num(out.relay_failure_rate),
        out.engine.name().to_string(),
    ];
    Ok(Report {
        command: Command::Simulate,
        lines,
        defaults: Vec::new(),
        diagnostics: Vec::new(),
        header: vec![
            "R",
            "B",
            "n",
            "trials",
            "errors",
            "error_estimate",
            "ci_low",
            "ci_high",
            "relay_failure_rate",
            "engine",
        ],
        rows: vec![row],
        json: json!({"result": {
            "error_estimate": out.error_estimate,
            "ci_low": out.ci_low,
            "ci_high": out.ci_high,
            "trials": out.trials,
            "errors": out.errors,
            "relay_failure_rate": out.relay_failure_rate,
            "seed": out.seed,
            "engine": out.engine.name(),
            "messages": out.messages,
            "relay_codewords": out.relay_codewords,
        }}),
        converged: true,
    })
}
