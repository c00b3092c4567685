use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_uavbs"))
}

fn smoke_config() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/smoke.toml")
}

#[test]
fn all_subcommands_produce_their_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = smoke_config();
    let cfg = cfg.to_str().unwrap();
    for sub in ["train", "evaluate", "sweep", "oracle-check"] {
        let o = bin().args([sub, "--config", cfg, "--seed", "5", "--out", out]).output().unwrap();
        assert!(o.status.success(), "{sub}: {}", String::from_utf8_lossy(&o.stderr));
    }
    for f in [
        "agent.ckpt",
        "training_log.csv",
        "slots.csv",
        "summary.csv",
        "pairwise.csv",
        "sweep.csv",
        "oracle_check.csv",
    ] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    let header = std::fs::read_to_string(dir.path().join("training_log.csv")).unwrap();
    assert!(header.starts_with("episode,cumulative_reward,final_throughput_bpshz,best_throughput_bpshz,wall_ms"));
}

#[test]
fn failures_print_one_parseable_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[agent]\ngamma = 1.5\n").unwrap();
    let o = bin()
        .args(["evaluate", "--config", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!o.status.success());
    let err = String::from_utf8(o.stderr).unwrap();
    let lines: Vec<&str> = err.lines().collect();
    assert_eq!(lines.len(), 1, "{err}");
    assert!(lines[0].starts_with("error kind=invalid message="), "{err}");
    assert!(lines[0].contains("agent.gamma"));

    // evaluating the agent without a checkpoint
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[scenario]\nslots = 1\n[baseline]\nsolvers = [\"drl\"]\n").unwrap();
    let o = bin()
        .args(["evaluate", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8(o.stderr).unwrap().starts_with("error kind=checkpoint"));
}
