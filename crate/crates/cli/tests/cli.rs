use std::process::Command;

use hypermetric::verify::InequalityReport;
use hypermetric_cli::{run, FalsifyOutput, KEstimateOutput};

fn call(args: &[&str]) -> (i32, String, String) {
    let mut argv = vec!["hypermetric"];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn dist_prints_six_decimals() {
    let (code, out, _) = call(&["dist", "--domain", "ball:2", "--metric", "h", "--c", "2", "--points", "0,0", "0.5,0"]);
    assert_eq!(code, 0);
    assert_eq!(out, "0.881374\n");
    let (_, out, _) = call(&["dist", "--metric", "j", "--precision", "15", "--points", "0,0", "0.5,0"]);
    assert_eq!(out, format!("{:.15}\n", 2f64.ln()));
}

#[test]
fn dist_accepts_negative_coordinates() {
    let (code, out, _) = call(&["dist", "--domain", "halfspace:2", "--metric", "rho-halfspace", "--points", "-0.5,1", "0.5,1"]);
    assert_eq!(code, 0);
    assert_eq!(out, format!("{:.6}\n", 1.5f64.acosh()));
}

#[test]
fn usage_errors_exit_two() {
    let bad: [&[&str]; 9] = [
        &["dist", "--domain", "torus:2", "--points", "0,0", "0.5,0"],
        &["dist", "--metric", "d", "--points", "0,0", "0.5,0"],
        &["dist", "--c", "0", "--points", "0,0", "0.5,0"],
        &["dist", "--points", "0,0"],
        &["dist", "--points", "0,0", "x,1"],
        &["dist", "--precision", "16", "--points", "0,0", "0.5,0"],
        &["scan-triangle", "--count", "0"],
        &["verify-suite", "--suite", "nope"],
        &["frobnicate"],
    ];
    for args in bad {
        let (code, out, err) = call(args);
        assert_eq!(code, 2, "{args:?}");
        assert!(out.is_empty() && !err.is_empty(), "{args:?}");
    }
}

#[test]
fn help_exits_zero() {
    let (code, out, _) = call(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("verify-suite"));
}

#[test]
fn suite_mismatch_is_an_error() {
    let (code, _, err) = call(&["verify-suite", "--suite", "T4_6", "--domain", "interval:0:1", "--count", "10"]);
    assert_eq!(code, 2);
    assert!(err.contains("not applicable"));
    let (code, _, _) = call(&["verify-suite", "--suite", "T4_6", "--domain", "ball:2", "--c", "1.5", "--count", "10"]);
    assert_eq!(code, 2);
}

#[test]
fn falsify_finds_subsharp_violation() {
    let (code, out, _) = call(&["falsify", "--domain", "ball:2", "--c", "1.9"]);
    assert_eq!(code, 1);
    let f: FalsifyOutput = serde_json::from_str(&out).unwrap();
    let v = f.collinear.unwrap();
    assert_eq!(v.r, 0.998);
    assert!(v.lhs < v.rhs);
    let (code, out, _) = call(&["falsify", "--c", "2"]);
    assert_eq!(code, 0);
    assert!(!serde_json::from_str::<FalsifyOutput>(&out).unwrap().found);
    let (code, _, _) = call(&["falsify", "--domain", "halfspace:2", "--c", "1.9"]);
    assert_eq!(code, 2);
}

#[test]
fn falsify_phi() {
    let (code, out, _) = call(&["falsify", "--metric", "phi", "--grid", "0.9"]);
    assert_eq!(code, 1);
    let w = serde_json::from_str::<FalsifyOutput>(&out).unwrap().phi.unwrap();
    assert!((w.lhs - 4.416549).abs() < 1e-5 && (w.rhs - 5.783825).abs() < 1e-5);
    let (code, out, _) = call(&["falsify", "--metric", "phi", "--grid", "1e-12"]);
    assert_eq!(code, 0);
    assert!(!serde_json::from_str::<FalsifyOutput>(&out).unwrap().found);
    let (code, _, _) = call(&["falsify", "--metric", "phi", "--grid", "1.5"]);
    assert_eq!(code, 2);
}

#[test]
fn verify_suite_passes_and_round_trips() {
    let args = ["verify-suite", "--suite", "T4_6", "--domain", "ball:2", "--c", "2", "--count", "10000", "--seed", "42"];
    let (code, out, _) = call(&args);
    assert_eq!(code, 0);
    let report: InequalityReport = serde_json::from_str(&out).unwrap();
    assert!(report.pass);
    assert_eq!(report.sample_count, 10_000);
    assert_eq!(report.seed, 42);
    assert_eq!(serde_json::to_string_pretty(&report).unwrap() + "\n", out);
    let (_, again, _) = call(&args);
    assert_eq!(out, again);
}

#[test]
fn failing_scan_exits_one_and_tolerance_overrides() {
    let (code, out, _) = call(&["scan-triangle", "--metric", "phi", "--count", "5000", "--seed", "3"]);
    assert_eq!(code, 1);
    let report: InequalityReport = serde_json::from_str(&out).unwrap();
    assert!(!report.pass && report.min_slack < 0.0);
    let (code, out, _) = call(&["scan-triangle", "--metric", "phi", "--count", "5000", "--seed", "3", "--tolerance", "100"]);
    assert_eq!(code, 0);
    assert_eq!(serde_json::from_str::<InequalityReport>(&out).unwrap().tolerance, 100.0);
}

#[test]
fn csv_has_one_row_per_sample() {
    let (code, out, _) = call(&["scan-triangle", "--domain", "ball:3", "--count", "250", "--output", "csv"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap(), "index,slack,p0_0,p0_1,p0_2,p1_0,p1_1,p1_2,p2_0,p2_1,p2_2");
    assert_eq!(lines.count(), 250);
    let (code, out, _) = call(&["verify-suite", "--suite", "local-h-j-lower", "--domain", "interval:0:1", "--count", "40", "--output", "csv"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 41);
    let (code, _, _) = call(&["dist", "--output", "csv", "--points", "0,0", "0.5,0"]);
    assert_eq!(code, 2);
}

#[test]
fn k_estimate_reports_exact_value() {
    let (code, out, _) = call(&["k-estimate", "--domain", "halfspace:2", "--points", "0,1", "1,1", "--output", "json"]);
    assert_eq!(code, 0);
    let k: KEstimateOutput = serde_json::from_str(&out).unwrap();
    let exact = k.exact.unwrap();
    assert!((exact - 1.5f64.acosh()).abs() < 1e-15);
    assert!((k.estimate.value - exact).abs() / exact < 0.01);
    assert_eq!(k.estimate.refinement_history.len(), 3);
    let (code, out, _) = call(&["k-estimate", "--domain", "ball:2", "--points", "0,0", "0,0.5", "--refinements", "0"]);
    assert_eq!(code, 0);
    let v: f64 = out.trim().parse().unwrap();
    assert!((v - 2f64.ln()).abs() < 0.02);
    let (code, _, err) = call(&["k-estimate", "--domain", "ball:2", "--points", "0,0", "0,0.5", "--node-cap", "10"]);
    assert_eq!(code, 2);
    assert!(err.contains("cap"));
}

#[test]
fn dilatation_of_radial_stretch() {
    let (code, out, _) = call(&["dilatation", "--map", "stretch", "--z", "0.5,0", "--pairs", "2000"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let h = v["estimate"]["h_hat"].as_f64().unwrap();
    assert!((h - 2.0).abs() < 3e-3);
    assert_eq!(v["bound_holds"], serde_json::Value::Bool(true));
    let (code, _, _) = call(&["dilatation", "--map", "automorphism", "--z", "0,0"]);
    assert_eq!(code, 2);
    let (code, out, _) = call(&["dilatation", "--map", "automorphism", "--center", "-0.3,0.2", "--z", "0,0", "--pairs", "0"]);
    assert_eq!(code, 0);
    assert!(out.contains("\"bound_holds\": null"));
}

#[test]
fn uniformity_estimate_runs() {
    let (code, out, _) = call(&["uniformity", "--domain", "ball:2", "--count", "4", "--refinements", "1"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["u_hat"].as_f64().unwrap() >= 1.0);
}

#[test]
fn thread_count_does_not_change_output() {
    let bin = env!("CARGO_BIN_EXE_hypermetric");
    let args = ["verify-suite", "--suite", "ball-sandwich", "--count", "5000", "--seed", "5"];
    let outputs: Vec<Vec<u8>> = ["1", "3"]
        .iter()
        .map(|n| {
            let o = Command::new(bin).args(args).env("HYPERMETRIC_THREADS", n).output().unwrap();
            assert_eq!(o.status.code(), Some(0));
            o.stdout
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
    let o = Command::new(bin).args(args).env("HYPERMETRIC_THREADS", "many").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
