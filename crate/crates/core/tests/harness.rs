use std::fs;
use std::path::Path;

use magwave::harness::{
    cmd_go_decay, cmd_recover, cmd_stability, cmd_verify, read_recover_summary, ExperimentConfig, RunManifest,
    GO_DECAY_CSV_HEADER, VERIFY_CSV_HEADER,
};
use magwave::xray::STABILITY_CSV_HEADER;

/// Cheap settings on top of the desk defaults; `extra` lines override.
fn config(out: &Path, extra: &str) -> ExperimentConfig {
    let text = format!(
        "output.dir = {}\nverify.green_h = 0.03125\ntolerances.green = 0.05\nverify.draws = 6\n\
         probes.m_max = 2\nprobes.n1 = 4\nprobes.dp = 0.015625\nrecover.grid = 4, 12, 12\n{extra}",
        out.display()
    );
    ExperimentConfig::parse(&text).unwrap()
}

fn verify_table(dir: &Path) -> Vec<(String, f64, bool)> {
    let text = fs::read_to_string(dir.join("verify.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(VERIFY_CSV_HEADER));
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].parse().unwrap(), f[3] == "true")
        })
        .collect()
}

#[test]
fn desk_config_passes_every_identity_check() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cmd_verify(&config(tmp.path(), "")).unwrap();
    let rows = verify_table(tmp.path());
    let names: Vec<&str> = rows.iter().map(|r| r.0.as_str()).collect();
    assert_eq!(
        names,
        [
            "fbg_parseval",
            "cn_unitarity",
            "gauge_invariance",
            "transport",
            "telescoping",
            "fourier_slice",
            "green_identity"
        ]
    );
    assert!(out.pass, "{rows:?}");
    assert_eq!(out.manifest.files.len(), 1);
}

#[test]
fn broken_gauge_fails_the_gauge_check_only() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cmd_verify(&config(tmp.path(), "potentials.gauge = linear\n")).unwrap();
    assert!(!out.pass);
    let failed: Vec<String> = verify_table(tmp.path()).into_iter().filter(|r| !r.2).map(|r| r.0).collect();
    assert_eq!(failed, ["gauge_invariance"]);
}

#[test]
fn zero_potentials_pass_trivially() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cmd_verify(&config(tmp.path(), "potentials.a1.kind = zero\npotentials.b.kind = zero\n")).unwrap();
    assert!(out.pass);
    for (name, measured, _) in verify_table(tmp.path()) {
        if ["transport", "telescoping", "fourier_slice"].contains(&name.as_str()) {
            assert_eq!(measured, 0.0, "{name}");
        }
    }
}

#[test]
fn recover_is_deterministic_and_reproducible_from_its_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let a = cmd_recover(&config(&tmp.path().join("a"), "")).unwrap();
    let b = cmd_recover(&config(&tmp.path().join("b"), "run.workers = 3\n")).unwrap();
    assert!(a.pass);
    assert_eq!(a.manifest.files, b.manifest.files);

    let read = RunManifest::read(&a.dir).unwrap();
    assert_eq!(read.files, a.manifest.files);
    let again = ExperimentConfig::parse(&read.config)
        .unwrap()
        .with("output.dir", tmp.path().join("c").to_str().unwrap())
        .unwrap();
    let c = cmd_recover(&again).unwrap();
    assert_eq!(c.manifest.files, a.manifest.files);

    let s = read_recover_summary(&a.dir).unwrap();
    assert!(s.retained > 0 && s.true_norm > 0.0 && s.rel_error.is_finite());
    let payload = fs::read(a.dir.join("beta23.bin")).unwrap();
    assert_eq!(payload.len(), 8 * 4 * 12 * 12);
}

#[test]
fn identical_potentials_recover_the_zero_field() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cmd_recover(&config(tmp.path(), "potentials.eps = 0\n")).unwrap();
    let s = read_recover_summary(&out.dir).unwrap();
    assert_eq!((s.parseval_norm, s.recon_norm, s.true_norm, s.rel_error), (0.0, 0.0, 0.0, 0.0));
    let payload = fs::read(out.dir.join("beta23.bin")).unwrap();
    assert!(payload.iter().all(|&b| b == 0));
}

#[test]
fn go_decay_single_and_duplicate_sigma() {
    let tmp = tempfile::tempdir().unwrap();
    let single = cmd_go_decay(&config(&tmp.path().join("s"), "probes.sigma = 6.5\n")).unwrap();
    let text = fs::read_to_string(single.dir.join("go_decay.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], GO_DECAY_CSV_HEADER);
    assert_eq!(lines.len(), 2);
    let f: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(f.len(), 5);
    assert_eq!(f[4], "");
    assert!(f[1].parse::<f64>().unwrap() > 0.0 && f[3].parse::<f64>().unwrap() > 0.0);

    let dup = cmd_go_decay(&config(&tmp.path().join("d"), "probes.sigma = 5, 6.5, 6.5\n")).unwrap();
    let text = fs::read_to_string(dup.dir.join("go_decay.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| !r.ends_with(',')));
}

#[test]
fn stability_table_has_one_row_per_member() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cmd_stability(&config(tmp.path(), "stability.battery = 1\n")).unwrap();
    let text = fs::read_to_string(out.dir.join("stability.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], STABILITY_CSV_HEADER);
    assert_eq!(lines.len(), 4);
    assert_eq!(out.manifest.checksum("stability.csv").map(str::len), Some(64));
}
