use std::fs;
use std::path::Path;
use std::process::Command;

const CHEAP: &str = "verify.green_h = 0.03125\ntolerances.green = 0.05\nverify.draws = 4\n";

fn magwave(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_magwave")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn write_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, format!("{CHEAP}{extra}")).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn verify_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ok");
    let cfg = write_config(tmp.path(), "");
    let ok = magwave(&["verify", "--config", &cfg, "--out", out.to_str().unwrap(), "--workers", "2", "--seed", "5"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(out.join("verify.csv").exists() && out.join("manifest.txt").exists());
    assert!(fs::read_to_string(out.join("manifest.txt")).unwrap().contains("run.seed = 5"));

    let broken = write_config(tmp.path(), "potentials.gauge = linear\n");
    let bad = magwave(&["verify", "--config", &broken, "--out", tmp.path().join("bad").to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "probes.sigma = 12\n");
    let r = magwave(&["go-decay", "--config", &cfg]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("probes.sigma"));
    let missing = magwave(&["recover", "--config", tmp.path().join("absent.cfg").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(magwave(&["stability", "--workers", "0"]).status.code(), Some(2));
    assert_eq!(magwave(&["frobnicate"]).status.code(), Some(2));
}
