use std::process::{Command, Output};

use serde_json::Value;

fn roundoff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roundoff"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

#[test]
fn hilbert_naive_report() {
    let v = json(&roundoff(&[
        "run",
        "--instance",
        "hilbert:m=20",
        "--solver",
        "naive",
    ]));
    let eta = v["eta"].as_f64().unwrap();
    assert!((1e-6..=1e-4).contains(&eta), "{eta}");
    assert!(v["gamma_growth"].is_null());
    assert_eq!(v["norm"], "inf");
    assert_eq!(v["residual_mode"], "double_double");
}

#[test]
fn wilkinson_report_matches_bound_scale() {
    let v = json(&roundoff(&[
        "run",
        "--instance",
        "wilkinson:m=53",
        "--solver",
        "ge-partial",
        "--seed",
        "42",
    ]));
    let eta = v["eta"].as_f64().unwrap();
    let bound = v["bounds"]["bound_eta_ge"].as_f64().unwrap();
    assert!(eta > 1e-4 && eta < 1e-2, "{eta}");
    assert!((bound - 3.77e-2).abs() < 1e-4, "{bound}");
    assert!(eta <= bound);
}

#[test]
fn skeel4_naive_is_stable() {
    let v = json(&roundoff(&[
        "run",
        "--instance",
        "skeel4:eps=1e-12",
        "--solver",
        "naive",
    ]));
    let gamma = v["gamma_naive"].as_f64().unwrap();
    assert!((gamma - 1.0).abs() < 1e-6);
    assert!(v["eta"].as_f64().unwrap() <= 10.0 * gamma * f64::EPSILON / 2.0);
}

#[test]
fn refinement_block_and_output_file() {
    let dir = std::env::temp_dir().join(format!("roundoff-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let out = roundoff(&[
        "run",
        "--instance",
        "skeel3:eps=1e-4",
        "--solver",
        "ge-nopivot",
        "--refine",
        "1",
        "--residual",
        "working",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["refinement"]["steps"], 1);
    assert!(v["refinement"].get("note").is_none());
    let omegas: Vec<f64> = v["refinement"]["omegas"]
        .as_array()
        .unwrap()
        .iter()
        .map(|w| w.as_f64().unwrap())
        .collect();
    assert!(omegas[1] < omegas[0]);
    assert_eq!(v["premise"]["holds"], true);
    assert_eq!(v["residual_mode"], "working");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn identical_runs_are_byte_identical() {
    let args = [
        "run",
        "--instance",
        "wilkinson:m=20",
        "--seed",
        "3",
        "--format",
        "csv",
    ];
    let a = roundoff(&args);
    let b = roundoff(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn sweep_csv() {
    let out = roundoff(&[
        "sweep",
        "--instance",
        "skeel3:eps=?",
        "--solver",
        "ge-nopivot",
        "--from",
        "1e-6",
        "--to",
        "1e-2",
        "--points",
        "5",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "parameter,omega_0,omega_1,premise_value,premise_holds"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 5);
    assert!(rows[0].starts_with("1e-6,"));
    assert!(rows.iter().all(|r| r.ends_with(",true")));

    let out = roundoff(&[
        "sweep",
        "--instance",
        "skeel3:eps=?",
        "--from",
        "1e-6",
        "--to",
        "1e-2",
        "--points",
        "3",
        "--format",
        "json",
    ]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
}

#[test]
fn scalar_demo_csv() {
    let out = roundoff(&[
        "scalar-demo",
        "--xmin",
        "-0.5",
        "--xmax",
        "0.5",
        "--points",
        "3",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "x,err_naive,err_stable");
    assert!(text.lines().any(|l| l == "0e0,0e0,0e0"));
}

#[test]
fn gallery_list_names_families() {
    let out = roundoff(&["gallery-list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["hilbert", "wilkinson", "skeel4", "skeel3", "cancel2"] {
        assert!(text.contains(name));
    }
}

#[test]
fn exit_codes() {
    // configuration errors
    assert_eq!(
        roundoff(&["run", "--instance", "nosuch:m=2"]).status.code(),
        Some(2)
    );
    assert_eq!(
        roundoff(&[
            "run",
            "--instance",
            "skeel4:eps=1e-3",
            "--solver",
            "cholesky"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        roundoff(&[
            "run",
            "--instance",
            "hilbert:m=3",
            "--solver",
            "naive",
            "--refine",
            "1"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        roundoff(&["run", "--instance", "hilbert:m=3", "--solver", "qr"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        roundoff(&[
            "sweep",
            "--instance",
            "skeel3:eps=1e-3",
            "--from",
            "1e-3",
            "--to",
            "1e-2"
        ])
        .status
        .code(),
        Some(2)
    );

    // numeric failures
    let dir = std::env::temp_dir().join(format!("roundoff-exit-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let singular = dir.join("singular.txt");
    std::fs::write(&singular, "3 3\n1 2 3\n2 4 6\n0 0 1\n").unwrap();
    let spec = format!("file:{}", singular.display());
    let out = roundoff(&["run", "--instance", &spec]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("singular"));
    let indefinite = dir.join("indefinite.txt");
    std::fs::write(&indefinite, "2 2\n-1 0\n0 -1\n").unwrap();
    let spec = format!("file:{}", indefinite.display());
    assert_eq!(
        roundoff(&["run", "--instance", &spec, "--solver", "cholesky"])
            .status
            .code(),
        Some(3)
    );
    std::fs::remove_dir_all(&dir).unwrap();
}
