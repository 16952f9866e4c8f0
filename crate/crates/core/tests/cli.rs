use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dephase(args: &[&str], dir: &Path, threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dephase"));
    cmd.args(args).arg("--out").arg(dir);
    match threads {
        Some(n) => cmd.env("DEPHASE_THREADS", n),
        None => cmd.env_remove("DEPHASE_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn semiclassical_is_reproducible_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "semiclassical",
        "--seed",
        "7",
        "--set",
        "t_max=5",
        "--set",
        "ensembles=[3, 130]",
    ];
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let out = dephase(&args, &a, Some("1"));
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("seed = 7"));
    assert!(dephase(&args, &b, Some("4")).status.success());
    for name in ["member_0.csv", "member_1.csv", "ensemble_3.csv", "ensemble_130.csv"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    let (header, _) = read_csv(&a.join("member_0.csv"));
    assert_eq!(header, ["t", "sx", "sy", "sz"]);
}

#[test]
fn unperturbed_field_gives_a_cosine() {
    let tmp = tempfile::tempdir().unwrap();
    let out = dephase(
        &[
            "semiclassical",
            "--set",
            "field.bstep=0",
            "--set",
            "ensembles=[1]",
            "--set",
            "members=[]",
            "--set",
            "t_max=10",
        ],
        tmp.path(),
        None,
    );
    assert!(out.status.success());
    let (_, rows) = read_csv(&tmp.path().join("ensemble_1.csv"));
    for row in rows {
        assert!((num(&row[1]) - num(&row[0]).cos()).abs() < 1e-10);
    }
}

#[test]
fn gamma_at_zero_and_config_file_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(
        &cfg,
        "seed = 3\n[gamma]\ngrid = { times = [0.0, 1.0] }\n[gamma.reservoir]\neta = 10.0\n",
    )
    .unwrap();
    let out_dir = tmp.path().join("o");
    let out = Command::new(env!("CARGO_BIN_EXE_dephase"))
        .args(["gamma", "--config"])
        .arg(&cfg)
        .args(["--set", "reservoir.eta=100", "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&out_dir.join("gamma.csv"));
    assert_eq!(header, ["t", "gamma_quadrature", "closed_form", "regime"]);
    assert_eq!(num(&rows[0][1]), 0.0);
    assert_eq!(rows[0][3], "");
    // η = 100 (the override) puts t = 1/T on the thermal boundary
    assert_eq!(rows[1][3], "thermal");
    let g = num(&rows[1][1]);
    assert!((g - 1.1787493076380683).abs() < 1e-8 * g);
}

#[test]
fn json_format_writes_json_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let out = dephase(
        &[
            "collective",
            "--format",
            "json",
            "--set",
            "grid.points=3",
            "--set",
            "transits=[0.0]",
        ],
        tmp.path(),
        None,
    );
    assert!(out.status.success());
    let v: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("collective_3d.json")).unwrap()).unwrap();
    assert_eq!(v["columns"][3], "gamma_plus");
    for row in v["rows"].as_array().unwrap() {
        assert_eq!(row[4], 0.0);
        let (g, p) = (row[2].as_f64().unwrap(), row[3].as_f64().unwrap());
        assert!((p - 4.0 * g).abs() <= 1e-12 * p);
    }
}

#[test]
fn register_columns_follow_the_size_laws() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(
        dephase(&["register", "--set", "grid.times=[0.0, 0.5, 2.0]"], tmp.path(), None)
            .status
            .success()
    );
    let (header, rows) = read_csv(&tmp.path().join("register.csv"));
    assert_eq!(header, ["t", "gamma", "abs_rho_7_0"]);
    assert!((num(&rows[0][2]) - 0.5).abs() < 1e-15);
    for row in &rows {
        let expected = 0.5 * (-9.0 * num(&row[1])).exp();
        assert!((num(&row[2]) - expected).abs() < 1e-14);
    }

    let enc = tmp.path().join("enc");
    assert!(dephase(&["register", "--set", "encoding.enabled=true"], &enc, None)
        .status
        .success());
    let (header, rows) = read_csv(&enc.join("register.csv"));
    assert_eq!(header.last().unwrap(), "fidelity");
    for row in rows {
        assert!(num(row.last().unwrap()) >= 1.0 - 1e-10);
        assert!((num(&row[2]) - 0.5).abs() < 1e-15);
    }
}

#[test]
fn scaling_reports_and_prints_bound() {
    let tmp = tempfile::tempdir().unwrap();
    let out = dephase(
        &["scaling", "--set", "model=\"linear\"", "--set", "rate=0"],
        tmp.path(),
        None,
    );
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("L_max = 99"));
    let (header, rows) = read_csv(&tmp.path().join("scaling.csv"));
    assert_eq!(header, ["L", "eps", "k"]);
    assert!(rows.iter().all(|r| r[2] == "1"));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("scaling.json")).unwrap()).unwrap();
    assert_eq!(report["l_max"], 99);
}

#[test]
fn validation_errors_exit_2_and_write_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        vec!["gamma", "--set", "reservoir.eta=-1"],
        vec!["gamma", "--set", "unknown=1"],
        vec!["register", "--set", "n_qubits=13"],
        vec!["semiclassical", "--set", "field.p_up=0.95"],
        vec!["scaling", "--set", "target_p=1.5"],
        vec!["collective", "--set", "reservoir.dimension=2"],
    ] {
        let dir = tmp.path().join("never");
        let out = dephase(&args, &dir, None);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!dir.exists(), "{args:?}");
    }
    let out = dephase(&["gamma"], tmp.path(), Some("zero"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn io_errors_exit_4() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let out = dephase(&["scaling"], &blocker, None);
    assert_eq!(out.status.code(), Some(4));
    let out = Command::new(env!("CARGO_BIN_EXE_dephase"))
        .args(["gamma", "--config", "/nonexistent/run.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
}
