//! End-to-end tests driving the compiled binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use approx::assert_abs_diff_eq;
use searchmkt::contracts::Thresholds;
use searchmkt::engine::{SupportReport, TraceRow};
use searchmkt_cli::commands::{PayoffSetArtifact, SweepReport};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_searchmkt"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn thresholds_artifact_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", r#"{"prior": {"family": "uniform01"}}"#);
    let out = run(&["thresholds", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let t: Thresholds = serde_json::from_str(&stdout(&out)).unwrap();
    assert_abs_diff_eq!(t.k_star, 0.0857864376, epsilon = 1e-9);
    assert_abs_diff_eq!(t.capital_k, 0.125, epsilon = 1e-12);
    assert_abs_diff_eq!(t.epsilon, 0.0563491870, epsilon = 1e-9);
    assert_abs_diff_eq!(t.k_double_star, 0.1020168594, epsilon = 1e-9);
}

#[test]
fn simulate_is_deterministic_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        r#"{"prior": {"family": "uniform01"}, "k": 0.02,
            "y": {"brokers": [0.0], "agent": 0.78}, "trials": 3000, "seed": 11}"#,
    );
    let args = ["simulate", "--config", cfg.to_str().unwrap(), "--format", "csv"];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    assert_eq!(first.stdout, second.stdout, "same seed must give identical bytes");
    let text = stdout(&first);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "component,mean,se,trials,seed");
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 5, "row {line:?}");
        assert_eq!(fields[3], "3000");
        assert_eq!(fields[4], "11");
    }
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        r#"{"prior": {"family": "uniform01"}, "k": 0.02,
            "y": {"brokers": [0.0], "agent": 0.78}, "trials": 1000, "seed": 11}"#,
    );
    let base = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    let overridden = run(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "12"]);
    assert_eq!(code(&base), 0);
    assert_eq!(code(&overridden), 0);
    assert_ne!(base.stdout, overridden.stdout, "a new seed must change the draws");
    assert!(stdout(&overridden).contains("\"seed\": 12"));
}

#[test]
fn trace_sidecar_holds_parseable_episode_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        r#"{"prior": {"family": "uniform01"}, "k": 0.02,
            "y": {"brokers": [0.0], "agent": 0.78}, "trials": 500,
            "trace_episodes": 8}"#,
    );
    let artifact = dir.path().join("sim.json");
    let out = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        artifact.to_str().unwrap(),
        "--trace",
        "--seed",
        "3",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let trace = std::fs::read_to_string(dir.path().join("sim.json.trace.jsonl")).unwrap();
    let rows: Vec<TraceRow> =
        trace.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(!rows.is_empty());
    assert_eq!(rows.iter().map(|r| r.episode).max().unwrap(), 7);
    for episode in 0..8 {
        let ep: Vec<&TraceRow> = rows.iter().filter(|r| r.episode == episode).collect();
        // Periods count from one and only the last row stops.
        assert_eq!(ep.first().unwrap().period, 1);
        assert!(ep.iter().rev().skip(1).all(|r| !r.stopped));
        assert!(ep.last().unwrap().stopped);
    }
    // Tracing to stdout has nowhere to put the sidecar.
    let no_out = run(&["simulate", "--config", cfg.to_str().unwrap(), "--trace"]);
    assert_eq!(code(&no_out), 1);
    assert!(stderr(&no_out).contains("--out"));
}

#[test]
fn thresholds_hold_their_ordering_for_a_beta_prior() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        r#"{"prior": {"family": "beta", "alpha": 2.0, "beta": 2.0}}"#,
    );
    let out = run(&["thresholds", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let t: Thresholds = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(0.0 < t.k_star && t.k_star < t.k_double_star);
    assert!(t.k_double_star <= t.capital_k + 1e-9);
    assert_abs_diff_eq!(t.capital_k, 0.09375, epsilon = 1e-6);
    assert!(t.epsilon > 0.0);
}

#[test]
fn malformed_json_reports_a_parse_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", r#"{"prior": {"family": "#);
    let out = run(&["thresholds", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("run.json"), "{}", stderr(&out));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        r#"{"prior": {"family": "uniform01"}, "kk": 0.02}"#,
    );
    let out = run(&["thresholds", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(err.contains("unknown field `kk`"), "{err}");
}

#[test]
fn loose_tolerances_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        r#"{"prior": {"family": "uniform01"}, "tolerance": 1e-3}"#,
    );
    let out = run(&["thresholds", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("looser"), "{}", stderr(&out));
}

#[test]
fn missing_config_is_a_usage_error() {
    let out = run(&["thresholds"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("--config"));
}

#[test]
fn verify_exit_codes_split_pass_from_failure() {
    let dir = tempfile::tempdir().unwrap();
    // Full extraction held up by the reward promise: supported.
    let gap = (1.0 - 0.2_f64.sqrt()) - 0.4;
    let pass_cfg = write_config(
        dir.path(),
        "pass.json",
        &format!(
            r#"{{"prior": {{"family": "uniform01"}}, "k": 0.1,
                "y": {{"brokers": [{gap}], "agent": 0.4}},
                "mode": {{"kind": "monopoly_triangle", "nu": {gap}}}}}"#
        ),
    );
    let out = run(&["verify", "--config", pass_cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rep: SupportReport = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(rep.pass && rep.broker_ic);

    // Zero-profit play above the threshold cost: a broker defects.
    let fail_cfg = write_config(
        dir.path(),
        "fail.json",
        r#"{"prior": {"family": "uniform01"}, "k": 0.1,
            "y": {"brokers": [0.0], "agent": 0.4},
            "mode": {"kind": "monopoly_triangle", "nu": 0.0}}"#,
    );
    let out = run(&["verify", "--config", fail_cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    let rep: SupportReport = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(!rep.pass && !rep.broker_ic);
    assert!(rep.states.iter().all(|s| s.worst_gain > 0.0));
}

#[test]
fn payoff_set_artifact_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        r#"{"prior": {"family": "uniform01"}, "k": 0.02, "n": 2}"#,
    );
    let artifact = dir.path().join("set.json");
    let out = run(&[
        "payoff-set",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        artifact.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = std::fs::read_to_string(&artifact).unwrap();
    let art: PayoffSetArtifact = serde_json::from_str(&text).unwrap();
    assert_eq!(art.descriptor.n, 2);
    assert!(art.welfare.exact);
    assert_abs_diff_eq!(art.welfare.agent_attained.hi, 0.8, epsilon = 1e-9);
    assert_abs_diff_eq!(art.welfare.surplus_attained.lo, 0.48, epsilon = 1e-9);
    // Re-encoding the parsed artifact reproduces the bytes exactly.
    let again = serde_json::to_string_pretty(&art).unwrap() + "\n";
    assert_eq!(text, again);
}

#[test]
fn minimax_scan_reports_the_low_cost_regime() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        r#"{"prior": {"family": "uniform01"}, "k": 0.02, "scan_points": 120}"#,
    );
    let out = run(&["minimax", "--config", cfg.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "y1,bound,excess");
    assert_eq!(lines.count(), 120);

    let json = run(&["minimax", "--config", cfg.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(v["regime"], "nu_zero");
    assert_eq!(v["nu"], 0.0);

    // Too coarse a scan is refused.
    let coarse = write_config(
        dir.path(),
        "coarse.json",
        r#"{"prior": {"family": "uniform01"}, "k": 0.02, "scan_points": 40}"#,
    );
    let out = run(&["minimax", "--config", coarse.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
}

#[test]
fn aps_occupancy_csv_matches_the_grid_shape() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        r#"{"prior": {"family": "uniform01"}, "k": 0.1,
            "grid": {"nx": 50, "ny": 50}, "max_rounds": 60}"#,
    );
    let json = run(&["aps", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&json), 0, "{}", stderr(&json));
    let v: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(v["converged"], true);
    assert!(v["hausdorff_cells"].as_f64().unwrap() <= 2.0);
    assert_eq!(v["reference_regime"], "nu_full_surplus");

    let csv = run(&["aps", "--config", cfg.to_str().unwrap(), "--format", "csv"]);
    let text = stdout(&csv);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 51, "header plus one row per guarantee level");
    assert!(lines.iter().all(|l| l.split(',').count() == 51));

    let tiny = write_config(
        dir.path(),
        "tiny.json",
        r#"{"prior": {"family": "uniform01"}, "k": 0.1, "grid": {"nx": 10, "ny": 10}}"#,
    );
    let out = run(&["aps", "--config", tiny.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
}

#[test]
fn sweep_table_flips_regime_at_the_threshold_cost() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        r#"{"prior": {"family": "uniform01"},
            "k_grid": {"start": 0.02, "stop": 0.12, "points": 6}, "n": 1}"#,
    );
    let out = run(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: SweepReport = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report.rows.len(), 6);
    let k_star = 0.0857864376;
    for row in &report.rows {
        let label = format!("{:?}", row.minimax_regime);
        if row.k < k_star {
            assert_eq!(label, "NuZero", "k={}", row.k);
            assert!(row.phi < 0.0);
        } else {
            assert_eq!(label, "NuFullSurplus", "k={}", row.k);
            assert!(row.phi > 0.0);
        }
        assert!(row.autarky <= row.mccall + 1e-12);
        assert!(row.agent_lo <= row.agent_hi && row.surplus_lo <= row.surplus_hi);
    }

    let csv = run(&["sweep", "--config", cfg.to_str().unwrap(), "--format", "csv"]);
    let text = stdout(&csv);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "k,autarky,mccall,phi,minimax_regime,set_regime,surplus_lo,surplus_hi,agent_lo,agent_hi,exact"
    );
    assert_eq!(lines.count(), 6);
}
