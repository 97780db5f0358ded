use std::process::{Command, Output};

fn butterfly(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_butterfly"))
        .args(args)
        .env_remove("BUTTERFLY_CONFIG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn rows(o: &Output) -> Vec<Vec<f64>> {
    stdout(o).lines().map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect()
}

#[test]
fn spectrum_unit_denominators() {
    let o = butterfly(&["spectrum", "--qmax", "1"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "0,1,2,-4,4\n1,1,2,-4,4\n");
}

#[test]
fn spectrum_half_frequency_row() {
    let o = butterfly(&["spectrum", "--qmax", "2"]);
    let half = rows(&o).into_iter().find(|r| r[0] == 1.0 && r[1] == 2.0).unwrap();
    let s = 8f64.sqrt();
    let want = [-s, 0.0, 0.0, s];
    for (got, want) in half[3..].iter().zip(want) {
        assert!((got - want).abs() < 1e-12, "{half:?}");
    }
}

#[test]
fn spectrum_edges_bounded_by_coupling() {
    let o = butterfly(&["spectrum", "--qmax", "5", "--lambda", "3"]);
    assert!(o.status.success());
    for row in rows(&o) {
        assert_eq!(row[2], 3.0);
        assert!(row[3..].iter().all(|x| x.abs() <= 5.0));
    }
}

#[test]
fn spectrum_json() {
    let o = butterfly(&["spectrum", "--qmax", "1", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v[0]["theta"], "0/1");
    assert_eq!(v[1]["edges"][1], 4.0);
}

#[test]
fn slope_one_butterfly_has_eight_straight_polylines() {
    let o = butterfly(&["butterfly", "--tmax", "1", "--qmax", "1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.matches("newpath").count(), 8);
    assert_eq!(text.matches("lineto").count(), 8);
    assert!(text.contains("newpath \n-4.000000000000e+00 0.000000000000e+00 moveto \n4.000000000000e+00 8.000000000000e+00 lineto \nstroke \n"));
    assert!(text.contains("newpath \n4.000000000000e+00 0.000000000000e+00 moveto \n-4.000000000000e+00 8.000000000000e+00 lineto \nstroke \n"));
}

#[test]
fn no_mirror_keeps_only_positive_labels() {
    let o = butterfly(&["butterfly", "--tmax", "1", "--qmax", "1", "--no-mirror", "--format", "csv"]);
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("polyline_id,x,y"));
    assert_eq!(text.lines().count(), 1 + 2 * 2);
}

#[test]
fn butterfly_svg() {
    let o = butterfly(&["butterfly", "--tmax", "2", "--qmax", "10", "--format", "svg"]);
    let text = stdout(&o);
    assert!(text.starts_with("<?xml") && text.trim_end().ends_with("</svg>"));
    assert!(text.matches("<path").count() > 8);
}

#[test]
fn twenty_levels_complete() {
    let o = butterfly(&["butterfly", "--tmax", "20", "--qmax", "50", "--format", "csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn verify_passes_through_slope_four() {
    let o = butterfly(&["verify", "--tmax", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], true);
    let rep = v["reports"].as_array().unwrap().iter().find(|r| r["label"]["t"] == 4 && r["label"]["s"] == 1).unwrap();
    let matched: Vec<&str> =
        rep["matches"].as_array().unwrap().iter().map(|m| m["predicted"].as_str().unwrap()).collect();
    assert_eq!(matched, ["2/7", "1/3", "2/5", "3/7"]);
    assert_eq!(rep["pseudo_jumps"][0], "3/8");
}

#[test]
fn verify_slope_one_is_trivial() {
    let o = butterfly(&["verify", "--tmax", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).starts_with("PASS"));
}

#[test]
fn verify_other_couplings() {
    for lambda in ["1.6", "3.0"] {
        let o = butterfly(&["verify", "--tmax", "5", "--lambda", lambda]);
        assert_eq!(o.status.code(), Some(0), "lambda {lambda}: {}", stderr(&o));
    }
}

#[test]
fn verify_failure_exits_one() {
    // Slope 8 needs finer sampling than denominators up to 50 provide.
    let o = butterfly(&["verify", "--tmin", "8", "--tmax", "8", "--qmax", "50"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("FAIL"));
}

#[test]
fn full_window_zoom_matches_butterfly() {
    let a = butterfly(&["butterfly", "--tmax", "3", "--qmax", "20"]);
    let b = butterfly(&["zoom", "--window", "0", "1", "--tmax", "3", "--qmax", "20"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn empty_window_warns() {
    let o = butterfly(&["zoom", "--window", "1/1000", "1/999", "--qmax", "50"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning"));
    let text = stdout(&o);
    assert!(text.starts_with("%!PS-Adobe-3.0 EPSF-3.0\n"));
    assert!(!text.contains("newpath"));
}

#[test]
fn zoom_on_wingtip_shows_closure_offset() {
    let o = butterfly(&["zoom", "-t", "4", "-s", "1", "--window", "1/4", "1/3", "--no-mirror", "--format", "csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    // Points at theta = 2/7 sit at y = 8 (2/7 - 1/4) / (1/3 - 1/4) = 24/7.
    let y = 24.0 / 7.0;
    let mut xs: Vec<f64> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect::<Vec<_>>())
        .filter(|r| (r[2] - y).abs() < 1e-9)
        .map(|r| r[1])
        .collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    assert_eq!(xs.len(), 2, "{xs:?}");
    assert!(xs[1] - xs[0] > 1e-6);
}

#[test]
fn wing_formats() {
    let csv = butterfly(&["wing", "-t", "2", "-s", "0", "--qmax", "6"]);
    assert!(stdout(&csv).starts_with("t,s,segment,p,q,left,right\n2,0,0,0,1,"));
    let json = butterfly(&["wing", "-t", "-2", "-s", "-1", "--qmax", "6", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v["label"]["t"], -2);
    assert_eq!(v["segments"].as_array().unwrap().len(), 2);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["verify", "--tmin", "3", "--tmax", "2"][..],
        &["spectrum", "--qmax", "0"],
        &["spectrum", "--lambda", "-1"],
        &["spectrum", "--format", "eps"],
        &["wing", "-t", "2", "-s", "5"],
        &["wing", "-t", "6", "-s", "1", "--qmax", "3"],
        &["zoom", "--window", "1/2", "1/3"],
        &["frobnicate"],
        &["spectrum", "--qmax", "abc"],
    ] {
        let o = butterfly(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn output_file_and_idempotence() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig.eps");
    let p = path.to_str().unwrap();
    assert!(butterfly(&["butterfly", "--tmax", "2", "--qmax", "15", "--out", p]).status.success());
    let first = std::fs::read(&path).unwrap();
    assert!(butterfly(&["butterfly", "--tmax", "2", "--qmax", "15", "--out", p, "--jobs", "1"]).status.success());
    assert_eq!(std::fs::read(&path).unwrap(), first);
    assert!(first.starts_with(b"%!PS-Adobe-3.0 EPSF-3.0\n%%BoundingBox: -400 0 400 800\n"));
}

#[test]
fn unwritable_output_is_runtime_error() {
    let o = butterfly(&["spectrum", "--qmax", "1", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn config_file_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("butterfly.conf");
    std::fs::write(&cfg, "# defaults for this test\nqmax = 1\nlambda = 3\n").unwrap();

    let via_env =
        Command::new(env!("CARGO_BIN_EXE_butterfly")).arg("spectrum").env("BUTTERFLY_CONFIG", &cfg).output().unwrap();
    assert_eq!(stdout(&via_env), "0,1,3,-5,5\n1,1,3,-5,5\n");

    let flag_wins = butterfly(&["spectrum", "--config", cfg.to_str().unwrap(), "--lambda", "2"]);
    assert_eq!(stdout(&flag_wins), "0,1,2,-4,4\n1,1,2,-4,4\n");

    std::fs::write(&cfg, "qmax = 1\ncolour = blue\n").unwrap();
    let bad = butterfly(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("line 2"));
}
