use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shadowrdm"))
}

fn error_json(out: &std::process::Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("an error line");
    serde_json::from_str(line).unwrap_or_else(|_| panic!("not JSON: {stderr}"))
}

#[test]
fn successful_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("entropy.toml");
    std::fs::write(
        &config,
        r#"
schema_version = 1
kind = "entropy-sweep"
seeds = [0, 1]
[entropy-sweep]
n_modes = [4]
sigma = [0.1]
ansatze = ["uccsd"]
"#,
    )
    .unwrap();
    let out = dir.path().join("run");
    let status = bin()
        .args(["entropy-sweep", "--threads", "2", "--seed-offset", "3", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(csv.lines().next().unwrap().starts_with("experiment,config_hash,seed"));
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed_offset"], 3);
    assert_eq!(meta["seeds"], serde_json::json!([3, 4]));
    assert_eq!(meta["telemetry"]["threads"], 2);
}

#[test]
fn failures_exit_nonzero_with_error_json() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "schema_version = 1\nkind = \"ratio-sweep\"\nseeds = []\n").unwrap();
    let out = bin().args(["ratio-sweep", "--config"]).arg(&bad).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    let err = error_json(&out);
    assert_eq!(err["error"], "config");
    assert!(err["message"].as_str().unwrap().contains("seeds"));

    let out = bin()
        .args(["qse-shots", "--config"])
        .arg(dir.path().join("missing.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert_eq!(error_json(&out)["error"], "io");

    std::fs::write(&bad, "schema_version = ").unwrap();
    let out = bin().args(["ratio-sweep", "--config"]).arg(&bad).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(error_json(&out)["error"], "config-parse");
}

#[test]
fn subcommand_must_match_config_kind() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(
        &config,
        "schema_version = 1\nkind = \"entropy-sweep\"\nseeds = [0]\n[entropy-sweep]\nn_modes = [4]\nsigma = [0.1]\n",
    )
    .unwrap();
    let out = bin().args(["ratio-sweep", "--config"]).arg(&config).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    assert_eq!(error_json(&out)["error"], "config");
}
