use std::process::Command;

fn interplay() -> Command {
    Command::new(env!("CARGO_BIN_EXE_interplay"))
}

#[test]
fn verify_writes_a_passing_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report");
    let status = interplay()
        .args(["verify", "--games", "6", "--max-players", "7", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(out.join("report.json")).unwrap();
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(report.to_string().contains("shapley_efficiency"));
}

#[test]
fn train_then_analyze_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let status = interplay()
        .args([
            "train",
            "--samples",
            "120",
            "--epochs",
            "1",
            "--dropout",
            "0.5",
            "--out",
        ])
        .arg(&run)
        .status()
        .unwrap();
    assert!(status.success());
    for f in ["model.bin", "steps.csv", "config.toml"] {
        assert!(run.join(f).exists(), "{f} missing");
    }
    let out = interplay()
        .args([
            "analyze",
            "--samples",
            "120",
            "-m",
            "30",
            "--pairs",
            "3",
            "--images",
            "2",
            "--checkpoint",
        ])
        .arg(run.join("model.bin"))
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn bad_config_exits_with_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "kind = \"lambda_sweep\"\nnot_a_field = 1\n").unwrap();
    let out = interplay()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}
