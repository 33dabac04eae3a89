use std::process::{Command, Output};

use serde_json::Value;

fn cploss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cploss"))
        .args(args)
        .output()
        .expect("spawn cploss")
}

fn json(args: &[&str]) -> Value {
    let out = cploss(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn csv_rows(text: &[u8]) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_reader(text);
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|c| c.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

const BOOSTING_IDENTITY: &str = r#"{"weight":{"name":"boosting"},"link":{"name":"identity"}}"#;

#[test]
fn reports_carry_schema_and_command() {
    let v = json(&["catalog"]);
    assert_eq!(v["schema"], "cploss/1");
    assert_eq!(v["command"], "catalog");
    let names: Vec<&str> = v["weights"]
        .as_array()
        .unwrap()
        .iter()
        .map(|w| w["name"].as_str().unwrap())
        .collect();
    for n in ["log", "square", "boosting"] {
        assert!(names.contains(&n), "{n} missing from {names:?}");
    }
}

#[test]
fn boosting_identity_violations_lie_outside_middle() {
    let v = json(&["check-convexity", "--loss", BOOSTING_IDENTITY]);
    assert_eq!(v["convex"], false);
    let viol = v["violations"].as_array().unwrap();
    assert!(!viol.is_empty());
    for p in viol {
        let x = p["x"].as_f64().unwrap();
        assert!(!(0.25 + 1e-9..=0.75 - 1e-9).contains(&x), "violation at {x}");
    }
}

#[test]
fn strict_negative_certificate_exits_one() {
    let out = cploss(&["check-convexity", "--loss", BOOSTING_IDENTITY, "--strict"]);
    assert_eq!(out.status.code(), Some(1));
    // still a complete report
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["convex"], false);
    let ok = cploss(&["check-convexity", "--loss", "log", "--strict"]);
    assert_eq!(ok.status.code(), Some(0));
}

#[test]
fn oracle_agrees_on_log_logit() {
    let v = json(&[
        "check-convexity",
        "--loss",
        r#"{"weight":{"name":"log"},"link":{"name":"logit"}}"#,
        "--oracle",
    ]);
    assert_eq!(v["convex"], true);
    assert_eq!(v["method"], "oracle");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(
        cploss(&["eval", "--loss", "nosuch", "--y", "1", "--etahat", "0.5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        cploss(&["eval", "--loss", "log", "--y", "1", "--etahat", "1.5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        cploss(&["robustness", "--c0", "0.3", "--alpha", "0.7"]).status.code(),
        Some(2)
    );
    assert_eq!(cploss(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(cploss(&["regret-bound", "--x=-0.5"]).status.code(), Some(2));
}

#[test]
fn negative_label_is_accepted() {
    let v = json(&["eval", "--loss", "log", "--y", "-1", "--etahat", "0.3"]);
    assert_eq!(v["y"], -1);
    assert!((v["value"].as_f64().unwrap() + 0.7f64.ln()).abs() < 1e-12);
}

#[test]
fn composite_eval_uses_link() {
    let v = json(&["eval", "--loss", "log", "--y", "1", "--v", "0", "--link", "logit"]);
    assert!((v["value"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-12);
}

#[test]
fn surrogate_experiment_reports_eight_place_alphas() {
    let v = json(&["surrogate-experiment"]);
    let got: Vec<&str> = v["cells"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["alpha_star_8dp"].as_str().unwrap())
        .collect();
    assert_eq!(got[0], "0.66666667");
    assert_eq!(got[1], "0.81779258");
    let third: f64 = got[2].parse().unwrap();
    assert!((third - 1.0).abs() < 1e-6);
    assert_eq!(got[3], "0.77763471");
}

#[test]
fn regret_bound_at_zero_is_zero() {
    let v = json(&["regret-bound", "--x", "0"]);
    assert_eq!(v["bound"].as_f64(), Some(0.0));
}

#[test]
fn regret_curve_csv_round_trips() {
    let out = cploss(&["regret-bound", "--curve", "--points", "11", "--format", "csv"]);
    assert!(out.status.success());
    let (header, rows) = csv_rows(&out.stdout);
    assert_eq!(header, ["x", "bound"]);
    assert_eq!(rows.len(), 11);
    assert!(rows.windows(2).all(|w| w[1][1] >= w[0][1]));
    assert_eq!(rows[0], vec![0.0, 0.0]);
}

#[test]
fn region_file_output_matches_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("region.csv");
    let p = path.to_str().unwrap();
    let summary = json(&["region", "--link", "logit", "--grid", "9", "--out", p]);
    assert_eq!(summary["row_count"], 9);
    let (header, rows) = csv_rows(&std::fs::read(&path).unwrap());
    assert_eq!(header, ["x", "lower", "upper"]);
    let inline = json(&["region", "--link", "logit", "--grid", "9"]);
    let inline_rows = inline["rows"].as_array().unwrap();
    for (a, b) in rows.iter().zip(inline_rows) {
        for (x, y) in a.iter().zip(b.as_array().unwrap()) {
            assert_eq!(*x, y.as_f64().unwrap());
        }
    }
    // at one half both bounds equal one
    assert_eq!(rows[4][0], 0.5);
    assert!((rows[4][1] - 1.0).abs() < 1e-12 && (rows[4][2] - 1.0).abs() < 1e-12);
}

#[test]
fn check_proper_reads_csv_tables() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let mut text = String::from("etahat,ell_pos,ell_neg\n");
    for i in 1..200 {
        let e = i as f64 / 200.0;
        text.push_str(&format!("{e},{},{}\n", (1.0 - e) * (1.0 - e), e * e));
    }
    std::fs::write(&path, text).unwrap();
    let v = json(&["check-proper", "--partials", path.to_str().unwrap()]);
    assert_eq!(v["proper"], true);
    assert_eq!(v["source"], "table");

    // swapped partials are improper
    let mut bad = String::from("etahat,ell_pos,ell_neg\n");
    for i in 1..200 {
        let e = i as f64 / 200.0;
        bad.push_str(&format!("{e},{},{}\n", e * e, (1.0 - e) * (1.0 - e)));
    }
    std::fs::write(&path, bad).unwrap();
    let out = cploss(&["check-proper", "--partials", path.to_str().unwrap(), "--strict"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reconstruct_log_from_lower_half() {
    let dir = tempfile::tempdir().unwrap();
    let half = dir.path().join("h.json");
    std::fs::write(&half, r#"{"ell_neg":"-ln(1-p)"}"#).unwrap();
    let out = cploss(&[
        "reconstruct-symmetric",
        "--half",
        half.to_str().unwrap(),
        "--side",
        "lower",
        "--grid",
        "19",
        "--format",
        "csv",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = csv_rows(&out.stdout);
    for r in &rows[1..rows.len() - 1] {
        assert!((r[1] + (1.0 - r[0]).ln()).abs() < 1e-6, "{r:?}");
        assert!((r[2] + r[0].ln()).abs() < 1e-6, "{r:?}");
    }
}

#[test]
fn robustness_schemas() {
    let v = json(&["robustness", "--c0", "0.3", "--alpha", "0.1"]);
    let iv = v["interval"].as_array().unwrap();
    assert!((iv[0].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert!((iv[1].as_f64().unwrap() - 0.3).abs() < 1e-12);
    let v = json(&["robustness", "--weight", "square", "--alpha", "0.1", "--grid", "99"]);
    assert_eq!(v["weight"], "square");
    assert_eq!(v["nonrobust_union"].as_array().unwrap().len(), 2);
}

#[test]
fn calibration_verdicts() {
    let cost = r#"{"weight":{"name":"cost","params":{"c0":0.3}}}"#;
    assert_eq!(
        json(&["check-calibration", "--loss", cost, "--c", "0.3"])["verdict"],
        "calibrated"
    );
    assert_eq!(
        json(&["check-calibration", "--loss", cost, "--c", "0.6"])["verdict"],
        "not_calibrated"
    );
    assert_eq!(
        cploss(&["check-calibration", "--loss", cost, "--c", "0.6", "--strict"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn margin_link_logistic_is_sigmoid() {
    let out = cploss(&["margin-link", "--phi", "logistic", "--grid", "21", "--format", "csv"]);
    let (header, rows) = csv_rows(&out.stdout);
    assert_eq!(header, ["v", "q"]);
    for r in rows {
        assert!((r[1] - 1.0 / (1.0 + (-r[0]).exp())).abs() < 1e-8);
    }
}
