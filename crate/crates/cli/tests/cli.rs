use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn beamtrack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beamtrack"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn static_run_writes_csv_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "trials = 50\nslots = 12\nm = 8\nalgorithms = rbct, ls\n");
    let out = dir.path().join("out");
    let res = beamtrack(&[
        "static-mse",
        "--config",
        &cfg,
        "--seed",
        "9",
        "--trials",
        "5",
        "--threads",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = fs::read_to_string(out.join("static_mse.csv")).unwrap();
    assert!(csv.contains("# seed = 9") && csv.contains("# trials = 5"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 12 * 2);
    assert!(out.join("static_mse.gp").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "trials = 6\nslots = 30\nm = 8\nomega_list = 0.01, 0.02\n");
    let mut tables = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "2")] {
        let out = dir.path().join(name);
        let res = beamtrack(&[
            "dynamic",
            "--config",
            &cfg,
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(res.status.success());
        tables.push(fs::read(out.join("dynamic.csv")).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
}

#[test]
fn analysis_prints_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "x_true = 0.1\nx_hat = 0.1\n");
    let out = dir.path().join("out");
    let res = beamtrack(&["analysis", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(res.status.success());
    let stdout = String::from_utf8(res.stdout).unwrap();
    assert!(stdout.contains("is_stable=true"));
    assert!(stdout.contains("max_sym_eigenvalue="));
}

#[test]
fn bad_configs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "trials = 3\nbogus = 1\n");
    let res = beamtrack(&["crlb-surface", "--config", &cfg]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("bogus"));

    let cfg = write_config(dir.path(), "mode = dynamic\n");
    let res = beamtrack(&["static-mse", "--config", &cfg]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("does not match"));

    let res = beamtrack(&["dynamic", "--config", "/nonexistent/run.cfg"]);
    assert!(!res.status.success());
}
