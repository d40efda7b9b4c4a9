use std::path::Path;
use std::process::{Command, Output};

fn rrm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rrm"))
        .args(args)
        .env_remove("RRM_MAX_N")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn out_arg(dir: &Path) -> &str {
    dir.to_str().unwrap()
}

#[test]
fn help_documents_every_flag() {
    let p = stdout(&rrm(&["perturbation", "--help"]));
    for flag in ["--example", "--domain", "--grid", "--ratio", "--levels", "--eps", "--beta", "--out", "--gnuplot", "--max-n"] {
        assert!(p.contains(flag), "perturbation help lacks {flag}");
    }
    let t = stdout(&rrm(&["transmission", "--help"]));
    for flag in ["--domain", "--levels", "--beta", "--k", "--out", "--gnuplot", "--max-n"] {
        assert!(t.contains(flag), "transmission help lacks {flag}");
    }
}

#[test]
fn unknown_flags_and_bad_combinations_are_usage_errors() {
    for args in [
        &["transmission", "--frobnicate"][..],
        &["verify", "everything"],
        &["perturbation", "--example", "5.2", "--domain", "unit-square"],
        &["perturbation", "--ratio", "0.3"],
        &["perturbation", "--levels", "6..3"],
        &["transmission", "--domain", "disc"],
    ] {
        let o = rrm(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn desk_cap_and_override() {
    let dir = tempfile::tempdir().unwrap();
    let o = rrm(&["transmission", "--levels", "7", "--out", out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("desk-scale cap"));

    let o = Command::new(env!("CARGO_BIN_EXE_rrm"))
        .args(["transmission", "--levels", "2", "--k", "1", "--out", out_arg(dir.path())])
        .env("RRM_MAX_N", "8")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"));
}

#[test]
fn perturbation_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = rrm(&["perturbation", "--example", "5.3", "--levels", "2..3", "--out", out_arg(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("perturbation-5.3.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("# rrm ") && header.contains("manifest-sha256="));
    assert!(lines.next().unwrap().starts_with("eps,n,h,"));
    assert_eq!(lines.count(), 2);

    let manifest = std::fs::read_to_string(dir.path().join("perturbation-5.3.manifest.json")).unwrap();
    let m: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(m["config"]["exact"], "example-5.3-reduced");
    assert!(header.ends_with(m["hash"].as_str().unwrap()));
    for key in ["command", "outputs", "wall_clock_seconds", "version"] {
        assert!(m.get(key).is_some(), "manifest lacks {key}");
    }
}

#[test]
fn identical_flags_give_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["transmission", "--domain", "l-shape", "--levels", "2,3", "--k", "3", "--gnuplot"];
    for d in [&a, &b] {
        let mut full = args.to_vec();
        full.extend(["--out", out_arg(d.path())]);
        assert!(rrm(&full).status.success());
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("transmission-l-shape.dat")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert!(String::from_utf8(read(&a)).unwrap().lines().nth(1).unwrap().starts_with("# index lambda_n4"));
}

#[test]
fn verify_grisvard_passes() {
    let o = rrm(&["verify", "grisvard"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("8 checks, 0 failed"));
}

#[test]
fn verify_interpolation_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = rrm(&["verify", "interpolation", "--out", out_arg(dir.path())]);
    assert!(o.status.success(), "{}", stdout(&o));
    let text = std::fs::read_to_string(dir.path().join("interpolation-unit-square-uniform.csv")).unwrap();
    assert_eq!(text.lines().nth(1), Some("h,error_k0,error_k1,error_k2,rate_k0,rate_k1,rate_k2"));
}
