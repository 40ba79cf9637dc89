use std::process::{Command, Output};

fn binoconv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_binoconv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn price_prints_json() {
    let o = binoconv(&["price", "--payoff", "call:100", "--scheme", "crr", "--n", "1"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    // one-step CRR: u = e^{0.2}, p = (e^{0.05} − d)/(u − d)
    let (u, d) = (0.2f64.exp(), (-0.2f64).exp());
    let p = (0.05f64.exp() - d) / (u - d);
    let expect = (-0.05f64).exp() * p * (100.0 * u - 100.0);
    assert!((v["price"].as_f64().unwrap() - expect).abs() < 1e-12);
    assert_eq!(v["reference_source"], "closed_form");

    let r = binoconv(&["price", "--payoff", "call:100", "--n", "50", "--mode", "repform", "--sigma", "0.3"]);
    assert!(r.status.success());
    let w: serde_json::Value = serde_json::from_str(&stdout(&r)).unwrap();
    assert_eq!(w["mode"], "repform");
}

#[test]
fn study_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = binoconv(&[
        "study",
        "--payoff",
        "digital_gt:95",
        "--ladder",
        "100,200,400,800",
        "--mode",
        "EXPANSION_CHECK",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "n,approx_price,reference_price,error,predicted_error,residual");
    assert_eq!(lines.count(), 4);
    assert!(dir.path().join("s.csv.json").exists());
    assert!(String::from_utf8_lossy(&o.stderr).contains("residual check"));
}

#[test]
fn study_from_config_file_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.cfg");
    std::fs::write(&cfg, "payoff_id = put:100\nscheme = jr\nn_ladder = 10,20,40\n").unwrap();
    let o = binoconv(&["study", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",,")));
    // flags override the file
    let o = binoconv(&["study", "--config", cfg.to_str().unwrap(), "--ladder", "5,6"]);
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "payoff = call:100\n").unwrap();
    assert_eq!(binoconv(&["study", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(binoconv(&["study", "--ladder", "200,100"]).status.code(), Some(2));
    assert_eq!(binoconv(&["price", "--payoff", "swap:1", "--n", "5"]).status.code(), Some(2));
    assert_eq!(binoconv(&["smooth", "--alpha", "0.5", "--ladder", "10,20"]).status.code(), Some(2));
    assert_eq!(binoconv(&["expand"]).status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_3() {
    let o = binoconv(&["price", "--payoff", "call:100", "--scheme", "custom:20", "--n", "4"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no-arbitrage"));
}

#[test]
fn smooth_with_richardson() {
    let o = binoconv(&["smooth", "--ladder", "50,100,200", "--richardson"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 4);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("richardson n = 50"));
    assert!(err.contains("predicted constant"));
}

#[test]
fn expand_prints_terms() {
    let o = binoconv(&["expand", "--strike", "100", "--scheme", "crr", "--n", "100"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    // S₀ = K with n even puts the strike on the middle node
    assert_eq!(v["on_node"], true);
    assert_eq!(v["delta_n"], 1.0);
    assert!((v["d1"].as_f64().unwrap() - 0.35).abs() < 1e-12);
}
