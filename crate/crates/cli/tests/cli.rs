use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use num_complex::Complex64;
use oudisp_core::estimates::dispersive_report;
use oudisp_core::field::{read_field, GaussianState, GridSpec};
use oudisp_core::propagator::TimePoint;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_oudisp"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = bin();
    cmd.args(args).arg("--quiet");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn run_config(text: &str, extra: &[&str]) -> (Output, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, text).unwrap();
    let mut args = vec!["--config", cfg.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = run(&args, &[]);
    (out, dir)
}

/// Data rows of a CSV report as (header, rows).
fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn check_system_matches_golden_files() {
    for preset in ["sk", "kolmogorov", "ou"] {
        let cfg = configs().join(format!("check-{preset}.toml"));
        let out = run(&["--config", cfg.to_str().unwrap()], &[]);
        assert!(out.status.success());
        let golden =
            Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("tests/golden/check-{preset}.csv"));
        assert_eq!(
            String::from_utf8(out.stdout).unwrap(),
            std::fs::read_to_string(golden).unwrap(),
            "{preset}"
        );
    }
}

#[test]
fn check_system_reports_closed_form_determinants() {
    let cfg = configs().join("check-sk.toml");
    let out = run(&["--config", cfg.to_str().unwrap()], &[]);
    let (header, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap());
    let (t, det) = (column(&header, "t"), column(&header, "det_qt"));
    for row in &rows {
        let t: f64 = row[t].parse().unwrap();
        let expected = (-2.0 * t).exp() / 16.0 * ((2.0 * t).cosh() + (2.0 * t).cos() - 2.0);
        let got: f64 = row[det].parse().unwrap();
        assert!((got - expected).abs() <= 1e-10 * expected);
        assert_eq!(row[column(&header, "hypoelliptic")], "true");
        assert_eq!(row[column(&header, "has_invariant_measure")], "true");
    }
    let at_one = rows
        .iter()
        .find(|r| r[t] == "1.0000000000000000e0")
        .unwrap();
    let det: f64 = at_one[column(&header, "det_qt")].parse().unwrap();
    assert!((det - 0.0113855).abs() < 1e-7);
}

#[test]
fn propagated_hermite_field_file() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("prop.csv");
    let cfg = configs().join("propagate-hermite.toml");
    let out = run(
        &[
            "--config",
            cfg.to_str().unwrap(),
            "--output",
            report.to_str().unwrap(),
        ],
        &[],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (header, rows) = parse_csv(&std::fs::read_to_string(&report).unwrap());
    let name = &rows[0][column(&header, "field")];
    let file = std::fs::File::open(dir.path().join(name)).unwrap();
    let f = read_field(file).unwrap();
    // e^{-2iπ/2} He₂ = 1 - x².
    let grid = *f.grid();
    for (j, z) in f.samples().iter().enumerate() {
        let x = grid.coord(j);
        let err = (z - Complex64::new(1.0 - x * x, 0.0)).norm();
        assert!(err * (-x * x / 4.0).exp() <= 1e-6, "x = {x}: {err}");
    }
}

#[test]
fn dispersive_scan_matches_library() {
    let cfg = configs().join("dispersive-gaussian.toml");
    let out = run(&["--config", cfg.to_str().unwrap()], &[]);
    assert!(out.status.success());
    let (header, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 6);
    let grid = GridSpec::new(1, 16.0, 2048).unwrap();
    let phi = GaussianState::new(Complex64::new(0.5, 0.0), Complex64::new(1.0, 0.0))
        .unwrap()
        .eval_phi(&grid);
    for row in rows {
        let p: f64 = row[column(&header, "p")].parse().unwrap();
        let t: f64 = row[column(&header, "t")].parse().unwrap();
        let ratio: f64 = row[column(&header, "ratio")].parse().unwrap();
        let lib = dispersive_report(&phi, p, &TimePoint::new(t).unwrap()).unwrap();
        assert!((ratio - lib.ratio).abs() <= 1e-12, "p={p} t={t}");
        assert!(ratio <= 1.0 + 1e-6);
        if p == 2.0 {
            assert!((ratio - 1.0).abs() <= 1e-6);
        }
    }
}

#[test]
fn json_and_csv_agree() {
    let cfg = configs().join("dispersive-gaussian.toml");
    let csv = run(&["--config", cfg.to_str().unwrap()], &[]);
    let json = run(
        &["--config", cfg.to_str().unwrap(), "--format", "json"],
        &[],
    );
    let (header, rows) = parse_csv(&String::from_utf8(csv.stdout).unwrap());
    let doc: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(doc["command"], "dispersive-scan");
    for (k, row) in rows.iter().enumerate() {
        let from_csv: f64 = row[column(&header, "ratio")].parse().unwrap();
        assert_eq!(doc["rows"][k]["ratio"].as_f64().unwrap(), from_csv);
    }
    assert!(doc["rows"][0]["p_prime"].is_null());
}

#[test]
fn uncertainty_scan_is_seeded_and_bounded() {
    let cfg = configs().join("uncertainty.toml");
    let a = run(&["--config", cfg.to_str().unwrap(), "--seed", "3"], &[]);
    let b = run(
        &["--config", cfg.to_str().unwrap(), "--seed", "3"],
        &[("OU_DISPERSION_THREADS", "1")],
    );
    let c = run(&["--config", cfg.to_str().unwrap(), "--seed", "4"], &[]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let (header, rows) = parse_csv(&String::from_utf8(a.stdout).unwrap());
    assert_eq!(rows.len(), 4000);
    let product = column(&header, "product");
    for row in rows {
        assert!(row[product].parse::<f64>().unwrap() <= 1.0 / 16.0 + 1e-9);
    }
}

#[test]
fn oscillator_routes_agree() {
    let cfg = configs().join("oscillator.toml");
    let out = run(&["--config", cfg.to_str().unwrap()], &[]);
    let (header, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 8);
    for row in rows {
        assert!(
            row[column(&header, "route_rel_diff")]
                .parse::<f64>()
                .unwrap()
                <= 1e-6
        );
        assert!(
            row[column(&header, "riccati_residual")]
                .parse::<f64>()
                .unwrap()
                <= 1e-12
        );
    }
}

#[test]
fn kernel_check_masses() {
    let cfg = configs().join("kernel-kolmogorov.toml");
    let out = run(&["--config", cfg.to_str().unwrap()], &[]);
    let (header, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 6);
    for row in rows {
        assert!(row[column(&header, "mass_err")].parse::<f64>().unwrap() <= 1e-8);
        assert!(row[column(&header, "max_rel_diff")].parse::<f64>().unwrap() <= 1e-10);
    }
}

#[test]
fn validation_failures_exit_one() {
    let (out, _dir) = run_config("command = \"propagate\"\nbogus = 1\n", &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    let (out, _dir) = run_config("command = \"dispersive-scan\"\n", &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("datum"));

    let out = run(&["check-system"], &[("OU_DISPERSION_THREADS", "zero")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("OU_DISPERSION_THREADS"));

    let out = run(&["--format", "xml", "check-system"], &[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn numerical_failures_exit_two_with_error_name() {
    let hermite = "[[datum]]\nkind = \"hermite\"\nindex = [1]\n";
    let cases = [
        (format!("command = \"propagate\"\ntimes = [{PI}]\n{hermite}"), "SingularTime"),
        (
            format!(
                "command = \"propagate\"\ntimes = [0.01]\n[grid]\ndim = 1\nextent = 16.0\npoints = 64\n{hermite}"
            ),
            "GridAliasing",
        ),
        (
            "command = \"kernel-check\"\n[system]\npreset = \"custom\"\nq = [[1.0, 0.0], [0.0, 0.0]]\nb = [[0.0, 0.0], [0.0, 0.0]]\n[grid]\ndim = 2\nextent = 8.0\npoints = 64\n"
                .to_string(),
            "NotHypoelliptic",
        ),
    ];
    for (text, name) in cases {
        let (out, _dir) = run_config(&text, &[]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert!(
            String::from_utf8_lossy(&out.stderr).contains(name),
            "{name}"
        );
    }
}

#[test]
fn printed_config_reparses() {
    let cfg = configs().join("oscillator.toml");
    let first = run(&["--config", cfg.to_str().unwrap(), "--print-config"], &[]);
    let (second, _dir) = run_config(
        &String::from_utf8(first.stdout.clone()).unwrap(),
        &["--print-config"],
    );
    assert_eq!(first.stdout, second.stdout);
}
