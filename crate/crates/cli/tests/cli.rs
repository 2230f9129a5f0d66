//! End-to-end checks of the binary: exit codes, artifact contents, and
//! reproducibility, all through the public command-line surface.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn avoidlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_avoidlab"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, contents: &str) {
    fs::write(dir.join(name), contents).unwrap();
}

#[test]
fn construct_r8_matches_the_known_family_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let out = avoidlab(tmp.path(), &["construct", "--R", "8"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(tmp.path().join("AR8.txt")).unwrap();
    assert!(text.contains("band 4 4.125"), "{text}");
    assert!(text.contains("band 0 0.0625"), "{text}");
    assert!(stdout(&out).contains("measure 0.509765625"));

    let manifest = fs::read_to_string(tmp.path().join("AR8.txt.manifest.json")).unwrap();
    let m: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(m["command"], "construct");
    assert_eq!(m["outputs"][0], "AR8.txt");

    let again = avoidlab(tmp.path(), &["construct", "--R", "8", "--out", "AR8_again.txt"]);
    assert!(again.status.success());
    assert_eq!(
        fs::read(tmp.path().join("AR8.txt")).unwrap(),
        fs::read(tmp.path().join("AR8_again.txt")).unwrap(),
        "same command, same bytes"
    );
}

#[test]
fn verify_passes_the_construction_and_rejects_a_tampered_set() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(avoidlab(tmp.path(), &["construct", "--R", "8"]).status.success());
    let ok = avoidlab(
        tmp.path(),
        &["verify", "--set", "AR8.txt", "--config", "corner", "--samples", "20000"],
    );
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    assert!(stdout(&ok).contains("certificate PASS"));

    // bands (4, 4.125) and (3, 3.2) are 0.8 apart: the separation case
    // fails and a corner straddling the pair exists
    write(tmp.path(), "tampered.txt", "bounds 0 8 0 8\nband 4 4.125\nband 3 3.2\n");
    let bad = avoidlab(
        tmp.path(),
        &["verify", "--set", "tampered.txt", "--config", "corner", "--samples", "200000"],
    );
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("FAIL"));
    assert!(stderr(&bad).contains("witness"), "{}", stderr(&bad));
}

#[test]
fn verify_checks_box_unions_against_both_configurations() {
    let tmp = tempfile::tempdir().unwrap();
    // two low flat boxes a unit apart: a corner jump between them needs
    // t near 1, which lifts the third point out of both; the triangle
    // area tops out at 0.12
    write(
        tmp.path(),
        "sparse.txt",
        "bounds 0 8 0 8\nbox 0 0.2 0 0.2\nbox 1 1.2 0 0.2\n",
    );
    for config in ["corner", "triangle"] {
        let out = avoidlab(tmp.path(), &["verify", "--set", "sparse.txt", "--config", config]);
        assert_eq!(out.status.code(), Some(0), "{config}: {}", stderr(&out));
    }
    // the full square contains plenty of both
    write(tmp.path(), "full.txt", "bounds 0 8 0 8\nbox 0 8 0 8\n");
    for config in ["corner", "triangle"] {
        let out = avoidlab(tmp.path(), &["verify", "--set", "full.txt", "--config", config]);
        assert_eq!(out.status.code(), Some(2), "{config} should fail");
        assert!(stderr(&out).contains("feasible triple"));
    }
}

#[test]
fn form_eval_writes_the_documented_schema() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(avoidlab(tmp.path(), &["construct", "--R", "8"]).status.success());
    let out = avoidlab(
        tmp.path(),
        &[
            "form-eval", "--set", "AR8.txt", "--kind", "n0", "--lambda", "1", "--h", "0.0625",
            "--out", "form.csv",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(tmp.path().join("form.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("kind,lambda,eps,value,quad_error"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "n0");
    // the band family carries no corners, so the exact form vanishes
    assert_eq!(row[3].parse::<f64>().unwrap(), 0.0);
    assert!(tmp.path().join("form.csv.manifest.json").exists());

    let missing_eps = avoidlab(
        tmp.path(),
        &["form-eval", "--set", "AR8.txt", "--kind", "neps", "--lambda", "1", "--h", "0.0625"],
    );
    assert_eq!(missing_eps.status.code(), Some(1));
}

#[test]
fn scans_emit_their_schemas_on_stdout_without_an_out_flag() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "boxes.txt",
        "bounds 0 6 0 6\nbox 0.5 5 0.5 3\nbox 1 4 3.5 5.5\n",
    );
    let err = avoidlab(
        tmp.path(),
        &[
            "error-scan", "--set", "boxes.txt", "--h", "0.25", "--eps", "0.125", "--n-lambda", "16",
        ],
    );
    assert!(err.status.success(), "{}", stderr(&err));
    assert!(stdout(&err).starts_with("eps,lambda,diff,integral,normalized\n"));

    let uni = avoidlab(
        tmp.path(),
        &[
            "uniform-scan", "--set", "boxes.txt", "--h", "0.0625", "--lambda", "1", "--eps",
            "1,0.5,0.25",
        ],
    );
    assert!(uni.status.success(), "{}", stderr(&uni));
    assert!(stdout(&uni).starts_with("eps,diff,resolvable,below_noise\n"));
    assert!(stderr(&uni).contains("uniform-scan: exact value"));

    let st = avoidlab(
        tmp.path(),
        &["structured-scan", "--set", "boxes.txt", "--h", "0.25", "--n-lambda", "2"],
    );
    assert!(st.status.success(), "{}", stderr(&st));
    assert!(stdout(&st).starts_with("lambda,corner_ratio,directional_ratio\n"));
}

#[test]
fn multiplier_diag_produces_csv_and_a_selfcontained_svg() {
    let tmp = tempfile::tempdir().unwrap();
    let out = avoidlab(
        tmp.path(),
        &[
            "multiplier", "--mode", "diag", "--points", "5", "--out", "m.csv", "--svg", "m.svg",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(tmp.path().join("m.csv")).unwrap();
    assert!(csv.starts_with("xi,eta,re,im,abs\n"));
    assert_eq!(csv.lines().count(), 6);
    let svg = fs::read_to_string(tmp.path().join("m.svg")).unwrap();
    assert!(svg.starts_with("<?xml version=\"1.0\""));
    assert!(svg.contains("version=\"1.1\""));
    assert!(!svg.contains("href"));

    let grid_svg = avoidlab(
        tmp.path(),
        &["multiplier", "--mode", "grid", "--svg", "g.svg"],
    );
    assert_eq!(grid_svg.status.code(), Some(1), "grid mode takes no svg");
}

#[test]
fn energy_methods_agree_on_a_square() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "sq.txt", "bounds 0 1 0 1\nbox 0 1 0 1\n");
    let grid = avoidlab(
        tmp.path(),
        &["energy", "--set", "sq.txt", "--method", "grid", "--h", "0.015625"],
    );
    assert!(grid.status.success(), "{}", stderr(&grid));
    let gv: f64 = stdout(&grid).lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();

    let bp = avoidlab(
        tmp.path(),
        &[
            "backprojection", "--set", "sq.txt", "--h", "0.015625", "--angles", "32",
        ],
    );
    assert!(bp.status.success(), "{}", stderr(&bp));
    let row = stdout(&bp);
    let rel: f64 = row.lines().nth(1).unwrap().split(',').nth(3).unwrap().parse().unwrap();
    assert!(gv > 0.0);
    assert!(rel < 0.05, "grid and backprojection disagree: {row}");
}

#[test]
fn graham_extracts_the_doubled_area_12_triangle_on_the_full_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let mut grid = String::from("24\n");
    for x in 0..24 {
        for y in 0..24 {
            grid.push_str(&format!("{x} {y}\n"));
        }
    }
    write(tmp.path(), "grid24.txt", &grid);
    let out = avoidlab(
        tmp.path(),
        &[
            "graham", "--grid", "grid24.txt", "--beta", "1.0", "--r", "2", "--N", "3", "--out",
            "trace.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("doubled area 12"));
    let csv = fs::read_to_string(tmp.path().join("trace.csv")).unwrap();
    assert!(csv.starts_with("step,name,detail\n"));
    assert!(csv.contains("triangle"));
}

#[test]
fn transfer_reports_the_sampled_density() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "boxes.txt", "bounds 0 6 0 6\nbox 0 6 0 3\n");
    let out = avoidlab(
        tmp.path(),
        &[
            "transfer", "--set", "boxes.txt", "--n", "4", "--t", "64", "--trials", "200",
            "--seed", "1", "--grid-out", "grid.txt", "--out", "t.csv",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(tmp.path().join("t.csv")).unwrap();
    assert!(csv.starts_with(
        "n,t,density,ambient_density,achieved_half_density,region_ok,offset_x,offset_y\n"
    ));
    // a 4x4 grid at pitch 1/8 fits inside the half-plane box somewhere
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[4], "true", "{csv}");
    let grid = fs::read_to_string(tmp.path().join("grid.txt")).unwrap();
    assert_eq!(grid.lines().next(), Some("4"));
}

#[test]
fn search_writes_a_recheckable_set_and_history() {
    let tmp = tempfile::tempdir().unwrap();
    let out = avoidlab(
        tmp.path(),
        &[
            "search", "--R", "8", "--config", "corner", "--steps", "60", "--seed", "11",
            "--init", "bands",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("re-check PASS"));
    let set = fs::read_to_string(tmp.path().join("search_R8_corner.txt")).unwrap();
    assert!(set.starts_with("bounds 0 8 0 8"));
    let hist = fs::read_to_string(tmp.path().join("search_R8_corner_history.csv")).unwrap();
    assert!(hist.starts_with("step,temperature,proposal,accepted,measure,best_measure\n"));
    assert_eq!(hist.lines().count(), 62, "init plus one row per step");
    // the run seeded from the band family never drops below its measure
    let best: f64 = hist
        .lines()
        .last()
        .unwrap()
        .split(',')
        .last()
        .unwrap()
        .parse()
        .unwrap();
    assert!(best >= 0.509765625);
    assert!(tmp.path().join("search_R8_corner.txt.manifest.json").exists());
}

#[test]
fn report_summarizes_a_single_point_with_overlays() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "density.csv", "R,measure\n8,0.509765625\n");
    let out = avoidlab(
        tmp.path(),
        &[
            "report", "--input", "density.csv", "--lower", "0.125", "--out", "summary.csv",
            "--svg", "density.svg",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(tmp.path().join("summary.csv")).unwrap();
    assert!(csv.starts_with(
        "R,measure,delta_hat,consistency,band_measure,overlay_lower,overlay_quarter,overlay_third,overlay_half\n"
    ));
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[2].parse::<f64>().unwrap(), 0.509765625 / 64.0);
    assert_eq!(row[4].parse::<f64>().unwrap(), 0.509765625);
    assert!((row[5].parse::<f64>().unwrap() - 0.125 * 8.0 * 8f64.ln()).abs() < 1e-12);
    assert_eq!(row[6], "", "unprovided overlays stay blank");
    let svg = fs::read_to_string(tmp.path().join("density.svg")).unwrap();
    assert!(svg.contains("circle"), "single point still gets a marker");

    write(tmp.path(), "noisy.csv", "R,measure\n8,not-a-number\n");
    let bad = avoidlab(tmp.path(), &["report", "--input", "noisy.csv"]);
    assert_eq!(bad.status.code(), Some(1), "malformed cells are a usage error");
    write(tmp.path(), "headless.csv", "side,area\n8,0.5\n");
    let bad2 = avoidlab(tmp.path(), &["report", "--input", "headless.csv"]);
    assert_eq!(bad2.status.code(), Some(1), "missing columns are a usage error");
}

#[test]
fn unknown_flags_exit_1_and_help_exits_0() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = avoidlab(tmp.path(), &["construct", "--bogus"]);
    assert_eq!(bad.status.code(), Some(1));
    let help = avoidlab(tmp.path(), &["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(stdout(&help).contains("construct"));
    let none = avoidlab(tmp.path(), &[]);
    assert_eq!(none.status.code(), Some(1), "missing subcommand is a usage error");
}
