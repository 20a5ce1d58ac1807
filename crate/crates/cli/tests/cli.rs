use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bottleneck_cli::CliError;
use bottleneck_core::Error;
use serde_json::Value;

const COMMANDS: [(&str, &str); 12] = [
    ("ib-capacity", "bsc_ib.json"),
    ("remote-rd", "remote_rd.json"),
    ("lm-rate", "mismatch.json"),
    ("gmi-rate", "mismatch.json"),
    ("relay-mismatch", "relay_mismatch.json"),
    ("relay-decoder-mismatch", "relay_decoder.json"),
    ("compound", "compound.json"),
    ("si-decoder", "si.json"),
    ("lm-p2p", "lm_p2p.json"),
    ("fading", "fading.json"),
    ("sweep", "bsc_sweep.json"),
    ("simulate", "simulate.json"),
];

const SMALL_SIM: &str = r#"{
  "channel": [[0.9, 0.1], [0.1, 0.9]],
  "input_pmf": "uniform",
  "relay_test_channel": [[0.98, 0.02], [0.02, 0.98]],
  "R": 0.3,
  "B": 1.0,
  "simulation": {"n": 60, "trials": 200, "epsilon": 0.2}
}"#;

fn spec(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("specs").join(name)
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn write_spec(name: &str, body: &str) -> PathBuf {
    let path = scratch(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str], env_seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bottleneck"));
    cmd.args(args).env_remove("BOTTLENECK_SEED");
    if let Some(s) = env_seed {
        cmd.env("BOTTLENECK_SEED", s);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(command: &str, path: &Path, extra: &[&str]) -> Value {
    let mut args = vec![command, path.to_str().unwrap(), "--json"];
    args.extend_from_slice(extra);
    let o = run(&args, None);
    assert!(o.status.success(), "{command}: {}", stderr(&o));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn summary_rate(text: &str) -> f64 {
    let line = text.lines().find(|l| l.starts_with("rate: ")).expect("rate line");
    line["rate: ".len()..].split_whitespace().next().unwrap().parse().unwrap()
}

#[test]
fn bsc_capacity_summary() {
    let o = run(&["ib-capacity", spec("bsc_ib.json").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!((summary_rate(&text) - 0.531).abs() < 1e-3, "{text}");
    assert!(text.contains("converged: true"));
    assert!(text.contains("defaults: seed=0"));
}

#[test]
fn sweep_writes_monotone_rows() {
    let out = scratch("sweep.csv");
    let o = run(&["sweep", spec("bsc_sweep.json").to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("B,rate,achieved_bottleneck,converged"));
    let rates: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(rates.len(), 5);
    assert!(rates.windows(2).all(|w| w[1] >= w[0]), "{rates:?}");
    assert!((rates[4] - 0.531).abs() < 1e-3);
}

#[test]
fn fading_without_estimate_is_zero() {
    let o = run(&["fading", spec("fading_no_csi.json").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("rate: 0.000000000 bits"), "{}", stdout(&o));
}

#[test]
fn csv_has_nine_significant_digits() {
    let out = scratch("ib.csv");
    let o = run(&["ib-capacity", spec("bsc_ib.json").to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(&out).unwrap();
    let row = csv.lines().nth(1).unwrap();
    for field in row.split(',').take(3) {
        let digits = field.replace('.', "").trim_start_matches('0').len();
        assert!(digits >= 9 || field == "0.000000000", "{field}");
    }
}

#[test]
fn row_sum_violation_names_the_key() {
    let path = write_spec("bad_row.json", r#"{"channel": [[0.9, 0.1], [0.2, 0.78]], "input_pmf": [0.5, 0.5], "B": 0.5}"#);
    let o = run(&["ib-capacity", path.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("channel[1]") && err.contains("0.98"), "{err}");
}

#[test]
fn zero_metric_entry_is_rejected() {
    let body = r#"{
      "channel": [[0.9, 0.1], [0.3, 0.7]],
      "input_pmf": [0.4, 0.6],
      "metric": {"kind": "decoding", "values": [[0.6, 0.4], [0.0, 1.0]]}
    }"#;
    let path = write_spec("zero_metric.json", body);
    let o = run(&["lm-p2p", path.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("metric.values[1][0]") && err.contains("strictly positive"), "{err}");
}

#[test]
fn malformed_and_missing_inputs() {
    let unknown = write_spec("unknown.json", r#"{"channel": [[1.0]], "B": 1, "colour": 3}"#);
    assert_eq!(run(&["ib-capacity", unknown.to_str().unwrap()], None).status.code(), Some(2));
    let broken = write_spec("broken.json", "{\"channel\": [[0.5, 0.5]");
    assert_eq!(run(&["ib-capacity", broken.to_str().unwrap()], None).status.code(), Some(2));
    let no_b = write_spec("no_b.json", r#"{"channel": [[0.9, 0.1], [0.1, 0.9]]}"#);
    let o = run(&["ib-capacity", no_b.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains('B'));
    let missing = scratch("does_not_exist.json");
    assert_eq!(run(&["ib-capacity", missing.to_str().unwrap()], None).status.code(), Some(1));
}

#[test]
fn exit_codes_by_error_kind() {
    let stalled = CliError::Solver(Error::NonConvergence {
        solver: "ib_capacity",
        detail: "test".into(),
    });
    assert_eq!(stalled.exit_code(), 3);
    assert_eq!(CliError::Io("x".into()).exit_code(), 1);
    assert_eq!(CliError::Parse("x".into()).exit_code(), 2);
    let invalid = CliError::Validation {
        key: "B".into(),
        rule: "x".into(),
    };
    assert_eq!(invalid.exit_code(), 2);
    assert_eq!(CliError::Solver(Error::InvalidArgument("x".into())).exit_code(), 2);
}

#[test]
fn nats_scale_rates_by_ln2() {
    for (command, file) in COMMANDS.iter().filter(|(c, _)| *c != "simulate") {
        let bits = json(command, &spec(file), &[]);
        let nats = json(command, &spec(file), &["--nats"]);
        assert_eq!(bits["units"], "bits");
        assert_eq!(nats["units"], "nats");
        let pairs: Vec<(&Value, &Value)> = match (&bits.get("result"), &bits.get("results")) {
            (Some(r), _) => vec![(r, &nats["result"])],
            (None, Some(Value::Array(rs))) => rs.iter().zip(nats["results"].as_array().unwrap()).collect(),
            _ => bits["rows"].as_array().unwrap().iter().zip(nats["rows"].as_array().unwrap()).collect(),
        };
        for (b, n) in pairs {
            for key in ["rate", "achieved_bottleneck"] {
                if let (Some(vb), Some(vn)) = (b[key].as_f64(), n[key].as_f64()) {
                    let want = vb * std::f64::consts::LN_2;
                    assert!((vn - want).abs() <= 1e-12, "{command} {key}: {vn} vs {want}");
                }
            }
        }
    }
}

#[test]
fn json_spec_round_trips() {
    for (command, file) in [("lm-rate", "mismatch.json"), ("fading", "fading.json"), ("compound", "compound.json")] {
        let first = json(command, &spec(file), &[]);
        let canonical = scratch(&format!("{command}-canonical.json"));
        std::fs::write(&canonical, serde_json::to_string(&first["spec"]).unwrap()).unwrap();
        let second = json(command, &canonical, &[]);
        assert_eq!(first["spec"], second["spec"], "{command}");
        assert_eq!(first["result"], second["result"], "{command}");
        assert_eq!(first["rows"], second["rows"], "{command}");
    }
}

#[test]
fn seed_precedence() {
    let path = write_spec("small_sim.json", SMALL_SIM);
    let p = path.to_str().unwrap();
    let csv = |name: &str, extra: &[&str], env: Option<&str>| {
        let out = scratch(name);
        let mut args = vec!["simulate", p, "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        let o = run(&args, env);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(out).unwrap()
    };
    let flag = csv("seed-flag.csv", &["--seed", "5"], None);
    let env = csv("seed-env.csv", &[], Some("5"));
    let both = csv("seed-both.csv", &["--seed", "5"], Some("9"));
    assert_eq!(flag, env);
    assert_eq!(flag, both);

    let dump = |extra: &[&str], env: Option<&str>| -> Value {
        let mut args = vec!["simulate", p, "--json"];
        args.extend_from_slice(extra);
        serde_json::from_slice(&run(&args, env).stdout).unwrap()
    };
    assert_eq!(dump(&["--seed", "7"], Some("9"))["spec"]["seed"], 7);
    assert_eq!(dump(&[], Some("9"))["spec"]["seed"], 9);
    let defaulted = dump(&[], None);
    assert_eq!(defaulted["spec"]["seed"], 0);
    assert!(defaulted["defaults"].get("seed").is_some());

    assert_eq!(run(&["simulate", p], Some("minus one")).status.code(), Some(2));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let path = write_spec("repeat_sim.json", SMALL_SIM);
    for (command, file) in [("simulate", path.clone()), ("sweep", spec("bsc_sweep.json")), ("fading", spec("fading.json"))] {
        let outs: Vec<Vec<u8>> = (0..2)
            .map(|i| {
                let out = scratch(&format!("repeat-{command}-{i}.csv"));
                let o = run(&[command, file.to_str().unwrap(), "--seed", "3", "--out", out.to_str().unwrap()], None);
                assert!(o.status.success(), "{}", stderr(&o));
                std::fs::read(out).unwrap()
            })
            .collect();
        assert_eq!(outs[0], outs[1], "{command}");
    }
}
