use std::fs::File;
use std::process::Command;

use sidmrs::fec::CodeSpec;
use sidmrs::harness::{read_csv, read_dataset, read_json, ReceiverKind, CSV_COLUMNS};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sidmrs"))
}

#[test]
fn sweep_writes_csv_and_json_mirror() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let run = bin()
        .args([
            "sweep",
            "--receiver",
            "one_shot",
            "--snr-start",
            "-2",
            "--snr-stop",
            "4",
            "--snr-step",
            "3",
        ])
        .args(["--drops", "3", "--seed", "7", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(run.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
    let points = read_csv(text.as_bytes()).unwrap();
    assert_eq!(
        points.iter().map(|p| p.snr_db).collect::<Vec<_>>(),
        vec![-2.0, 1.0, 4.0]
    );
    let json = read_json(File::open(dir.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(json.receiver, ReceiverKind::OneShot);
    assert_eq!(json.scenario.master_seed, 7);
    assert_eq!(json.points.len(), 3);
    assert_eq!(json.points[2].bler, points[2].bler);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "dmrs_scheme = orthogonal\nreceiver = one_shot\nsnr_start = 0\nsnr_stop = 0\ndrops = 2\n",
    )
    .unwrap();
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .args(["--drops", "1", "--snr-stop", "10", "--snr-step", "10"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let points = read_csv(out.stdout.as_slice()).unwrap();
    assert_eq!(points.len(), 2);
    assert!(points.iter().all(|p| p.drops == 1 && p.n_d == 936));
}

#[test]
fn invalid_combinations_fail_cleanly() {
    let out = bin()
        .args(["sweep", "--scheme", "orthogonal", "--drops", "1"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("orthogonal"));
    let out = bin().args(["sweep", "--drops", "0"]).output().unwrap();
    assert!(!out.status.success());
    let out = bin().args(["export", "--records", "1"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn export_writes_dataset_and_alist() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("train.sipd");
    let run = bin()
        .args([
            "export",
            "--records",
            "4",
            "--snr-start",
            "0",
            "--snr-stop",
            "10",
            "--out",
        ])
        .arg(&path)
        .output()
        .unwrap();
    assert!(run.status.success());
    let (header, records) = read_dataset(File::open(&path).unwrap()).unwrap();
    assert_eq!(header.record_count, 4);
    assert_eq!(records.len(), 4);
    let alist = std::fs::read_to_string(dir.path().join("train.user0.alist")).unwrap();
    assert_eq!(alist, header.alist[0]);
    let code = CodeSpec::from_alist(&alist).unwrap();
    assert_eq!(code.n(), 2016);
}

#[test]
fn selftest_passes() {
    let out = bin().arg("selftest").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 5);
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}
