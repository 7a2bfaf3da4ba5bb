use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn autoconv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_autoconv"))
        .args(args)
        .env_remove("AUTOCONV_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// The number following `key` on its output line.
fn field(out: &str, key: &str) -> f64 {
    let line = out
        .lines()
        .find(|l| l.starts_with(key))
        .unwrap_or_else(|| panic!("no {key:?} in {out}"));
    line[key.len()..]
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = autoconv(args);
    assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

fn code(args: &[&str]) -> Option<i32> {
    autoconv(args).status.code()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn eval_examples() {
    let out = ok(&["eval", "--n", "1", "--coeffs", "2,2", "--range", "proof"]);
    assert_eq!(field(&out, "range proof: value"), 1.0);
    let out = ok(&["eval", "--n", "2", "--coeffs", "2,2,2,2", "--range", "proof"]);
    assert_eq!(field(&out, "range proof: value"), 1.25);
    assert_eq!(field(&out, "step_sup"), 2.0);
}

#[test]
fn eval_both_ranges_and_theorem_banner() {
    let out = ok(&["eval", "--n", "2", "--coeffs", "2,2,2,2", "--range", "both"]);
    assert!(out.contains("range proof:") && out.contains("range theorem:"));
    assert!(!out.contains("note: theorem range"));
    let out = ok(&["eval", "--n", "1", "--coeffs", "2,2", "--range", "theorem"]);
    assert!(out.starts_with("note: theorem range"));
    assert_eq!(field(&out, "range theorem: value"), 1.0);
}

#[test]
fn eval_reads_profile_files() {
    let dir = tempfile::tempdir().unwrap();
    let lines = dir.path().join("lines.txt");
    fs::write(&lines, "2\n2\n2\n2\n").unwrap();
    let comma = dir.path().join("comma.txt");
    fs::write(&comma, "1, 1, 1, 1\n").unwrap();
    let out = ok(&["eval", "--n", "2", "--file", path_str(&lines)]);
    assert_eq!(field(&out, "range proof: value"), 1.25);
    let out = ok(&["eval", "--n", "2", "--file", path_str(&comma), "--normalize"]);
    assert_eq!(field(&out, "range proof: value"), 1.25);
}

#[test]
fn input_errors_exit_with_two() {
    assert_eq!(code(&["eval", "--n", "1", "--coeffs", "2,-2"]), Some(2));
    assert_eq!(code(&["eval", "--n", "1", "--coeffs", "1,1"]), Some(2));
    assert_eq!(code(&["eval", "--n", "2", "--coeffs", "2,2"]), Some(2));
    assert_eq!(code(&["eval", "--n", "1", "--coeffs", "2,abc"]), Some(2));
    assert_eq!(code(&["eval", "--n", "1", "--file", "/nonexistent/profile.txt"]), Some(2));
    assert_eq!(code(&["eval", "--n", "1"]), Some(2));
    assert_eq!(code(&["convert", "--c", "0"]), Some(2));
    assert_eq!(code(&["convert", "--c", "-1"]), Some(2));
    assert_eq!(code(&["convert", "--sigma", "-2"]), Some(2));
    assert_eq!(code(&["certify", "--n", "0", "--m", "4"]), Some(2));
    assert_eq!(code(&["certify", "--n", "5", "--m", "4", "--method", "cell-quadratic"]), Some(2));
    assert_eq!(code(&["search", "--n", "1", "--restarts", "0"]), Some(2));
    assert_eq!(code(&["frobnicate"]), Some(2));
    assert_eq!(code(&["--threads", "0", "convert", "--c", "2"]), Some(2));
}

#[test]
fn convert_examples() {
    let out = ok(&["convert", "--c", "1.2748"]);
    assert!((field(&out, "c 1.2748 sigma") - 1.2525).abs() < 1e-3);
    let out = ok(&["convert", "--sigma", "1.1509"]);
    assert!((field(&out, "sigma 1.1509 c") - 1.5100).abs() < 2e-3);
    let out = ok(&["convert", "--c", "2"]);
    assert_eq!(field(&out, "c 2 sigma"), 1.0);
}

#[test]
fn convert_reports_step_function() {
    let out = ok(&["convert", "--n", "1", "--coeffs", "2,2"]);
    let nodes: Vec<&str> = out.lines().skip(1).take_while(|l| !l.starts_with("step_sup")).collect();
    assert_eq!(nodes, ["-0.5,0", "-0.25,1", "0,2", "0.25,1", "0.5,0"]);
    assert_eq!(field(&out, "step_sup"), 2.0);
}

#[test]
fn certify_examples() {
    let out = ok(&["certify", "--n", "1", "--m", "64", "--method", "global-lipschitz"]);
    assert!(out.contains("certified_bound 0.875000\n"), "{out}");
    let out = ok(&["certify", "--n", "2", "--m", "64", "--method", "cell-quadratic"]);
    assert!(field(&out, "certified_bound") >= 1.05);
    assert!(field(&out, "implied sigma <=") < 1.35);
}

#[test]
fn negative_bounds_print_rounded_down() {
    let out = ok(&["certify", "--n", "1", "--m", "4", "--method", "global-lipschitz"]);
    assert!(out.contains("certified_bound -1.000000\n"), "{out}");
    assert!(out.contains("implied sigma: none"));
}

#[test]
fn certificates_are_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    ok(&["--threads", "1", "certify", "--n", "2", "--m", "24", "--output", path_str(&a)]);
    let o = Command::new(env!("CARGO_BIN_EXE_autoconv"))
        .args(["certify", "--n", "2", "--m", "24", "--output", path_str(&b)])
        .env("AUTOCONV_THREADS", "3")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let cert: serde_json::Value = serde_json::from_slice(&fs::read(&a).unwrap()).unwrap();
    assert_eq!(cert["schema_version"], 1);
    assert!(cert.get("elapsed_s").is_none());

    ok(&["certify", "--n", "2", "--m", "24", "--record-timing", "--output", path_str(&b)]);
    let timed: serde_json::Value = serde_json::from_slice(&fs::read(&b).unwrap()).unwrap();
    assert!(timed["elapsed_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn interrupted_certify_resumes_to_the_same_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("ckpt.json");
    let full = dir.path().join("full.json");
    let resumed = dir.path().join("resumed.json");
    ok(&["certify", "--n", "2", "--m", "16", "--output", path_str(&full)]);
    let args = ["certify", "--n", "2", "--m", "16", "--checkpoint", path_str(&ckpt)];
    let out = ok(&[&args[..], &["--stop-after-chunks", "4"]].concat());
    assert!(out.contains("interrupted after 4 chunks"));
    assert!(!resumed.exists());
    ok(&[&args[..], &["--output", path_str(&resumed)]].concat());
    assert_eq!(fs::read(&full).unwrap(), fs::read(&resumed).unwrap());
    // a completed checkpoint replays its certificate
    fs::remove_file(&resumed).unwrap();
    ok(&[&args[..], &["--output", path_str(&resumed)]].concat());
    assert_eq!(fs::read(&full).unwrap(), fs::read(&resumed).unwrap());
}

#[test]
fn checkpoint_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("ckpt.json");
    ok(&["certify", "--n", "2", "--m", "16", "--checkpoint", path_str(&ckpt), "--stop-after-chunks", "2"]);
    // different mesh
    assert_eq!(code(&["certify", "--n", "2", "--m", "18", "--checkpoint", path_str(&ckpt)]), Some(3));
    // corrupted cursor
    let text = fs::read_to_string(&ckpt).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["next_chunk"] = serde_json::json!("99,99");
    fs::write(&ckpt, v.to_string()).unwrap();
    assert_eq!(code(&["certify", "--n", "2", "--m", "16", "--checkpoint", path_str(&ckpt)]), Some(3));
    // not a checkpoint at all
    fs::write(&ckpt, "garbage").unwrap();
    assert_eq!(code(&["certify", "--n", "2", "--m", "16", "--checkpoint", path_str(&ckpt)]), Some(3));
}

#[test]
fn search_examples_and_reproducibility() {
    let out = ok(&["search", "--n", "1", "--restarts", "100", "--seed", "7"]);
    assert!((field(&out, "best value") - 1.0).abs() <= 1e-6);

    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let csv = dir.path().join("runs.csv");
    let common = ["search", "--n", "2", "--restarts", "200", "--seed", "7"];
    ok(&[&common[..], &["--output", path_str(&a), "--csv", path_str(&csv)]].concat());
    ok(&[&["--threads", "2"][..], &common[..], &["--output", path_str(&b)]].concat());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let result: serde_json::Value = serde_json::from_slice(&fs::read(&a).unwrap()).unwrap();
    assert_eq!(result["schema_version"], 1);
    assert!(result["best_value"].as_f64().unwrap() <= 1.104);
    let csv = fs::read_to_string(&csv).unwrap();
    assert_eq!(csv.lines().count(), 201);
    assert!(csv.starts_with("restart,"));
}

#[test]
fn run_reports_are_self_describing() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    ok(&["certify", "--n", "1", "--m", "64", "--method", "global-lipschitz", "--report", path_str(&report)]);
    let v: serde_json::Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["inputs"]["m"], 64);
    assert_eq!(v["outputs"]["certificate"]["certified_bound"], 0.875);
    assert_eq!(v["derived"]["lower_bound_c"], 0.875);
    let sigma = v["derived"]["upper_bound_sigma"].as_f64().unwrap();
    assert!((sigma - (2.0f64 / 0.875).sqrt()).abs() < 1e-12);
    assert!(v["environment"]["version"].is_string());
    assert!(v["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert!(v["command"][0].as_str().unwrap().ends_with("autoconv"));

    ok(&["search", "--n", "1", "--restarts", "5", "--report", path_str(&report)]);
    let v: serde_json::Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert_eq!(v["inputs"]["config"]["restarts"], 5);
    assert!(v["derived"]["upper_bound_a_n"].as_f64().unwrap() >= 1.0 - 1e-12);

    ok(&["eval", "--n", "1", "--coeffs", "2,2", "--report", path_str(&report)]);
    let v: serde_json::Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert_eq!(v["outputs"]["evaluations"][0]["value"], 1.0);
}
