use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_qubdoe");

fn qubdoe(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("QUBDOE_THREADS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn first_order(dir: &Path, g: f64, c: f64) -> String {
    let path = dir.join("room.json");
    let text = format!(
        r#"{{"nodes": [{{"id": "air", "capacity": {c}}}],
            "branches": [{{"id": "g", "from": "REF", "to": "air", "conductance": {g}, "temperature_source": "T_o"}}],
            "flow_sources": [{{"node": "air", "source_name": "P"}}]}}"#
    );
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn check_reports_sizes() {
    let o = qubdoe(&["check", "bundled:bungalow"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "OK: 17 nodes, 27 branches");
}

#[test]
fn simulate_then_estimate_recovers_g() {
    let dir = tempfile::tempdir().unwrap();
    let model = first_order(dir.path(), 85.0, 4e6);
    let trace = dir.path().join("trace.csv");
    let o = qubdoe(&[
        "simulate",
        &model,
        "--ph",
        "1500",
        "--tqub",
        "14400",
        "--out",
        trace.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(o.stdout.is_empty());

    let o = qubdoe(&["estimate", "--trace", trace.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("H_qub_W_per_K,"));
    let h: f64 = lines.next().unwrap().split(',').next().unwrap().parse().unwrap();
    assert!((h - 85.0).abs() / 85.0 < 1e-6, "{h}");
}

#[test]
fn eig_and_gains_produce_tables() {
    let o = qubdoe(&["eig", "bundled:ladder", "--ph", "800"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("mode_index,tau_s,"));
    assert!(text.lines().count() > 1);

    let o = qubdoe(&["gains", "bundled:house", "--area", "120"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!stdout(&o).is_empty());
}

#[test]
fn sweep_output_does_not_depend_on_thread_count() {
    let args = [
        "sweep",
        "bundled:bungalow",
        "--p0",
        "500",
        "--ph-range",
        "600:2000:6:log",
        "--t-range",
        "3600:43200:6",
    ];
    let run = |threads: &str| {
        Command::new(BIN)
            .args(args)
            .env("QUBDOE_THREADS", threads)
            .output()
            .unwrap()
    };
    let one = run("1");
    assert!(one.status.success(), "{}", stderr(&one));
    for threads in ["2", "4", "0"] {
        assert_eq!(run(threads).stdout, one.stdout, "{threads} threads");
    }
}

#[test]
fn malformed_model_leaves_no_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("broken.json");
    std::fs::write(&model, r#"{"nodes": [{"id": "a", "capacity": -1}], "branches": []}"#).unwrap();
    let out = dir.path().join("grid.csv");
    let o = qubdoe(&[
        "sweep",
        model.to_str().unwrap(),
        "--ph-range",
        "100:200:3",
        "--t-range",
        "3600:7200:2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!out.exists());
    let err = stderr(&o);
    assert!(err.starts_with("error: input: "), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn exit_codes() {
    assert_eq!(qubdoe(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        qubdoe(&["sweep", "bundled:bungalow", "--ph-range", "1:2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(qubdoe(&["check", "/nonexistent/model.json"]).status.code(), Some(3));
    assert_eq!(qubdoe(&["check", "bundled:castle"]).status.code(), Some(3));
    let o = qubdoe(&[
        "optimum",
        "bundled:bungalow",
        "--p0",
        "500",
        "--ph-range",
        "600:2000:4",
        "--t-range",
        "3600:14400:4",
        "--max-power",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("error: numerical: "));
    assert!(qubdoe(&["--help"]).status.success());
}

#[test]
fn optimum_prints_one_line() {
    let o = qubdoe(&[
        "optimum",
        "bundled:bungalow",
        "--p0",
        "500",
        "--ph-range",
        "600:2000:5:log",
        "--t-range",
        "7200:43200:5",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.trim_end().lines().count(), 1);
    assert!(text.starts_with("ph_W="));
}
