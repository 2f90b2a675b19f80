//! End-to-end checks of the `qvdp` binary: exit codes, error messages and
//! byte-identical reruns.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qvdp"))
}

fn tmp(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qvdp-bin-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

const SMALL_CONFIG: &str = "\
[params]
gamma2 = 0.2
drive = 1.0
detuning = 0.4

[truncation]
n_max = 10
frame = \"lab\"

[steady]
n_phi = 32

[effective]
delta_min = 0.0
delta_max = 1.0
n_delta = 4
";

#[test]
fn steady_and_effective_run_and_are_deterministic() {
    let dir = tmp("ok");
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, SMALL_CONFIG).unwrap();
    for sub in ["steady", "effective"] {
        for out in ["a", "b"] {
            let status = bin()
                .args([
                    sub,
                    "--config",
                    cfg.to_str().unwrap(),
                    "--out",
                    dir.join(out).to_str().unwrap(),
                    "--workers",
                    "1",
                ])
                .status()
                .unwrap();
            assert!(status.success(), "{sub} failed");
        }
    }
    for name in ["phase_distribution.csv", "steady_summary.json", "effective.csv"] {
        let a = std::fs::read(dir.join("a").join(name)).unwrap();
        let b = std::fs::read(dir.join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between reruns");
    }
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    let dir = tmp("badcfg");
    let cfg = dir.join("bad.toml");
    std::fs::write(&cfg, "[params]\ngamma2 = -0.5\ndrive = 1.0\ndetuning = 0.0\n").unwrap();
    let out = bin()
        .args(["steady", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("gamma2"), "stderr was: {msg}");
}

#[test]
fn resource_errors_exit_3() {
    let dir = tmp("resource");
    let cfg = dir.join("big.toml");
    std::fs::write(
        &cfg,
        "[params]\ngamma2 = 0.1\ndrive = 0.0\ndetuning = 0.0\n\
         [truncation]\nn_max = 60\nframe = \"lab\"\n\
         [resources]\nmax_bytes = 1000000\n",
    )
    .unwrap();
    let out = bin()
        .args(["steady", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_config_file_exits_2() {
    let out = bin()
        .args(["spectrum", "--config", "/nonexistent/x.toml", "--out", "/tmp/qvdp-none"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
