// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::process::Command;

fn gparity(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_gparity"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn data_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[test]
fn phases_table_sums_to_quarter_turn() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gparity(&["phases", "8", "--out", tmp.path().to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let lines = data_lines(&tmp.path().join("phases_r8.csv"));
    assert_eq!(lines[0], "index,angle_rad,cumulative_rad");
    assert_eq!(lines.len(), 10);
    let total: f64 = lines[9].rsplit(',').next().unwrap().parse().unwrap();
    assert!((total - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    // the written table loads back as a phase file
    let back = gparity::synthesis::read_phase_csv(
        std::fs::read(tmp.path().join("phases_r8.csv"))
            .unwrap()
            .as_slice(),
    )
    .unwrap();
    assert_eq!(back.angles, gparity::analytic_phases(8).unwrap().angles);
}

#[test]
fn r2_phases_match_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(
        gparity(&["phases", "2", "--out", tmp.path().to_str().unwrap()])
            .status
            .success()
    );
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("phases_r2.json")).unwrap())
            .unwrap();
    let a: Vec<f64> = serde_json::from_value(doc["result"]["phases"]["angles"].clone()).unwrap();
    assert!((a[1] - 0.954_930).abs() < 1e-6);
    assert!((a[0] - 0.307_933).abs() < 1e-6);
    assert_eq!(doc["tool"], "gparity");
    assert_eq!(doc["seed"], 0);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(gparity(&["phases", "1"]).status.code(), Some(2));
    assert_eq!(gparity(&["phases"]).status.code(), Some(2));
    assert_eq!(
        gparity(&["--engine", "warp", "prepare"]).status.code(),
        Some(2)
    );
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    std::fs::write(&cfg, r#"{"r": 5, "colour": "blue"}"#).unwrap();
    let out = gparity(&["--config", cfg.to_str().unwrap(), "prepare"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn truncation_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gparity(&[
        "--dim",
        "16",
        "--out",
        tmp.path().to_str().unwrap(),
        "prepare",
        "--nbar",
        "40",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn response_boundary_row() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    assert!(
        gparity(&["response", "8", "--k", "3", "--m-min", "3", "--m-max", "3", "--out", dir])
            .status
            .success()
    );
    let lines = data_lines(&tmp.path().join("response_r8_k3.csv"));
    let cells: Vec<f64> = lines[1].split(',').map(|c| c.parse().unwrap()).collect();
    // m, theta, Re R00, Im R00, Re R10, Im R10, target
    assert!((cells[2] - 1.0).abs() < 1e-12 && cells[3].abs() < 1e-12);
    assert!(cells[4].abs() < 1e-12 && cells[5].abs() < 1e-12);
}

#[test]
fn config_file_with_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"r": 5, "nbar": 50.0, "s": 1, "device": "noiseless", "phase_error": {"mode": "none"}}"#,
    )
    .unwrap();
    let dir = tmp.path().join("out");
    let out = gparity(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "prepare",
        "--r",
        "7",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("prepare.json")).unwrap()).unwrap();
    assert_eq!(doc["config"]["r"], 7);
    assert_eq!(doc["config"]["nbar"], 50.0);
    let p = doc["result"]["p_succ"].as_f64().unwrap();
    assert!((p * 7.0 - 1.0).abs() < 0.2, "p_succ {p}");
    assert!(doc["result"].get("wall_time").is_none());
    assert!(dir.join("prepare.timing").exists());
    assert!(data_lines(&dir.join("prepare_photon.csv"))[0] == "n,probability");
}

#[test]
fn sweep_and_pert_compare_write_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    let out = gparity(&[
        "--out", dir, "--jobs", "2", "sweep", "--axis", "r", "--values", "2,3,4", "--nbar", "8",
        "--s", "1",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let lines = data_lines(&tmp.path().join("sweep_r.csv"));
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("axis,value,r,nbar"));
    let inv: Vec<f64> = lines[1..]
        .iter()
        .map(|l| 1.0 / l.split(',').nth(8).unwrap().parse::<f64>().unwrap())
        .collect();
    assert!(inv.windows(2).all(|w| w[1] > w[0]), "{inv:?}");

    let bad = gparity(&["--out", dir, "pert-compare", "--nbar-values", "4"]);
    assert_eq!(bad.status.code(), Some(2));
    let ok = gparity(&[
        "--out",
        dir,
        "--engine",
        "lindblad",
        "pert-compare",
        "--nbar-values",
        "4",
        "--s",
        "1",
    ]);
    assert!(
        ok.status.success(),
        "{}",
        String::from_utf8_lossy(&ok.stderr)
    );
    let lines = data_lines(&tmp.path().join("pert_compare.csv"));
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("label,nbar,r,s,engine,F_full,F_pert,F_naive"));
}

#[test]
fn phase_file_drives_response() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    assert!(gparity(&["phases", "6", "--out", dir]).status.success());
    let json = tmp.path().join("phases_r6.json");
    let out = gparity(&[
        "response",
        "6",
        "--phases",
        json.to_str().unwrap(),
        "--out",
        dir,
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let garbage = tmp.path().join("junk.csv");
    std::fs::write(&garbage, "nope\n").unwrap();
    assert_eq!(
        gparity(&[
            "response",
            "6",
            "--phases",
            garbage.to_str().unwrap(),
            "--out",
            dir
        ])
        .status
        .code(),
        Some(2)
    );
}
