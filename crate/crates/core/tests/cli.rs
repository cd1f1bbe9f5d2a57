use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kaehlerlab"))
}

#[test]
fn list_prints_the_catalog() {
    let out = bin().arg("list").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("linear_c2       1  1 Flat             0 TotallyGeodesic"));
    assert!(text.contains("graph_c3        1  2 Flat             0 Generic"));

    let out = bin().args(["list", "--format", "json"]).output().unwrap();
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 5);
    assert_eq!(rows[4]["expected_class"], "parallel");
}

#[test]
fn unknown_case_is_a_config_error_without_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let status = bin().args(["run", "--case", "foo", "--out"]).arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(64));
    assert!(!out.exists());
}

#[test]
fn config_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{not json").unwrap();
    let cases: [&[&str]; 5] = [
        &["run", "--tol", "no_such_check=1e-3"],
        &["run", "--tol", "gauss_equation"],
        &["run", "--points", "0"],
        &["run", "--bogus-flag"],
        &["run", "--case", "linear_c2", "--out", "/nonexistent-dir/r.json"],
    ];
    for args in cases {
        let status = bin().args(args).output().unwrap().status;
        assert_eq!(status.code(), Some(64), "{args:?}");
    }
    let status = bin().args(["run", "--config"]).arg(&bad).output().unwrap().status;
    assert_eq!(status.code(), Some(64));
}

#[test]
fn json_report_layout() {
    let out = bin()
        .args(["run", "--case", "veronese_cp2", "--case", "linear_c2", "--points", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["schema"], 1);
    let cases = r["cases"].as_array().unwrap();
    // catalog order regardless of flag order
    assert_eq!(cases[0]["name"], "linear_c2");
    assert_eq!(cases[1]["ambient"]["kind"], "fubini_study");
    assert_eq!(cases[1]["ambient"]["c"], 4.0);
    let point = &cases[1]["points"][0];
    assert_eq!(point["u"].as_array().unwrap().len(), 2);
    let check = &point["checks"][0];
    for key in ["id", "residual", "tolerance", "passed"] {
        assert!(check.get(key).is_some(), "{key}");
    }
    assert_eq!(point["recurrence"]["class"], "parallel");
    assert_eq!(point["theorems"]["status"], "checked");
}

#[test]
fn seed_falls_back_to_environment() {
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut cmd = bin();
        cmd.args(["run", "--case", "graph_z2_c2", "--points", "2"]);
        if let Some(f) = flag {
            cmd.args(["--seed", f]);
        }
        match env {
            Some(v) => cmd.env("KAEHLERLAB_SEED", v),
            None => cmd.env_remove("KAEHLERLAB_SEED"),
        };
        let out = cmd.output().unwrap();
        let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        r["seed"].as_u64().unwrap()
    };
    assert_eq!(run(None, None), 42);
    assert_eq!(run(Some("9"), None), 9);
    assert_eq!(run(Some("9"), Some("3")), 3);
}

#[test]
fn classification_mismatch_exits_2() {
    // with no room for rounding, the Veronese surface is no longer seen as parallel
    let status = bin()
        .args(["run", "--case", "veronese_cp2", "--points", "2", "--tol", "recurrence.tol=0"])
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(2));
}

#[test]
fn text_format_is_a_table() {
    let out = bin()
        .args(["run", "--case", "graph_z3_c2", "--points", "2", "--format", "text"])
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("case"));
    assert!(lines[1].starts_with("graph_z3_c2") && lines[1].contains("non_recurrent"));
}
