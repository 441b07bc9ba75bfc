use std::path::Path;
use std::process::{Command, Output};

use vacua::io::csv::Table;
use vacua::io::run::turning_points;

fn vacua(dir: &Path, args: &[&str], envs: &[(&str, &str)]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vacua"))
        .current_dir(dir)
        .args(args)
        .envs(envs.iter().copied())
        .output()
        .unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    vacua(dir, args, &[]).status.code().unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(d, &["--help"]), 0);
    assert_eq!(code(d, &["solve", "--bogus"]), 2);
    assert_eq!(code(d, &["solve", "--profile", "nope"]), 2);
    assert_eq!(
        code(d, &["solve", "--profile", "inverse_linear", "--t0", "-100"]),
        2
    );
    assert_eq!(code(d, &["solve", "--tol", "0.5"]), 2);
    assert_eq!(
        code(
            d,
            &[
                "solve",
                "--profile",
                "lorentzian",
                "--path",
                "sigma",
                "--samples",
                "50"
            ]
        ),
        3
    );
    let threads = vacua(
        d,
        &["solve", "--samples", "10"],
        &[("VACUA_THREADS", "zero")],
    );
    assert_eq!(threads.status.code(), Some(2));
}

#[test]
fn config_file_is_strict() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.json"), r#"{"profile": "tanh1", "colour": 3}"#).unwrap();
    assert_eq!(code(d, &["solve", "--config", "bad.json"]), 2);
    std::fs::write(
        d.join("good.json"),
        r#"{"profile": "tanh2", "params": {"k": 2.0}, "samples": 40}"#,
    )
    .unwrap();
    assert_eq!(
        code(
            d,
            &[
                "solve",
                "--config",
                "good.json",
                "--k",
                "0.5",
                "--out",
                "o.csv"
            ]
        ),
        0
    );
    assert_eq!(Table::read(&d.join("o.csv")).unwrap().rows.len(), 40);
}

#[test]
fn squeezed_overlay_plot() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(
        code(d, &["solve", "--samples", "800", "--out", "vacuum.csv"]),
        0
    );
    assert_eq!(
        code(
            d,
            &[
                "solve",
                "--samples",
                "800",
                "--r",
                "0.3",
                "--out",
                "squeezed.csv"
            ]
        ),
        0
    );
    let sq = |f: &str| -> Vec<f64> {
        let t = Table::read(&d.join(f)).unwrap();
        t.column("sigma").unwrap().iter().map(|s| s * s).collect()
    };
    assert_eq!(turning_points(&sq("vacuum.csv")), 0);
    assert!(turning_points(&sq("squeezed.csv")) > 10);

    let args = [
        "plot",
        "vacuum.csv",
        "squeezed.csv",
        "--x",
        "t",
        "--y",
        "sigma",
        "--square",
        "--out",
        "fig.svg",
    ];
    assert_eq!(code(d, &args), 0);
    let first = std::fs::read_to_string(d.join("fig.svg")).unwrap();
    assert_eq!(first.matches("<polyline").count(), 2);
    assert_eq!(code(d, &args), 0);
    assert_eq!(first, std::fs::read_to_string(d.join("fig.svg")).unwrap());
    assert_eq!(
        code(
            d,
            &[
                "plot",
                "vacuum.csv",
                "--x",
                "t",
                "--y",
                "missing",
                "--out",
                "x.svg"
            ]
        ),
        2
    );
}

#[test]
fn sweep_writes_points_in_grid_order() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = [
        "sweep",
        "--profile",
        "tanh2",
        "--t0",
        "-8",
        "--t1",
        "8",
        "--samples",
        "100",
        "--param",
        "k",
        "--values",
        "2,0.5,1",
        "--out",
        "grid",
    ];
    let out = vacua(d, &args, &[("VACUA_THREADS", "2")]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("grid/manifest.json")).unwrap())
            .unwrap();
    let values: Vec<f64> = manifest["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["value"].as_f64().unwrap())
        .collect();
    assert_eq!(values, vec![2.0, 0.5, 1.0]);
    for i in 0..3 {
        assert!(d.join(format!("grid/point_{i:03}.csv")).exists());
    }
}

#[test]
fn validate_reports_every_check() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(d, &["validate", "--out", "report.json"]), 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    let checks = report.as_array().unwrap();
    assert!(checks.len() >= 10);
    assert!(checks.iter().all(|c| c["pass"].as_bool().unwrap()));
}
