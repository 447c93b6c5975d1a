use std::path::Path;
use std::process::Command;

const CONFIG: &str = r#"
name = "tiny"
tx_antennas = 4
users = 1
antennas = 2
rho = 0.8
ptx_db = [-5.0, 5.0]
subset_sizes = [16]
blocks = 4
bits_per_user = 2000
seed = 7
total_rate = 0.375

[ldpc]
n = 256
rate = 0.375
"#;

fn simulate(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_simulate"))
        .args(args)
        .output()
        .unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn config_run_writes_one_row_per_power() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    std::fs::write(&cfg, CONFIG).unwrap();
    let out = dir.path().join("results");
    let run = simulate(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(String::from_utf8_lossy(&run.stdout).contains("ptx_db"));
    let rows = csv_rows(&out.join("tiny.csv"));
    assert_eq!(
        rows[0].join(","),
        "ptx_db,rho,sc_rate,ldpc_rate,ber,fer,bits,errors,blocks,seed"
    );
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1][1], "0.8");
    assert!(out.join("tiny.json").exists());
}

#[test]
fn flags_override_file_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    std::fs::write(&cfg, CONFIG).unwrap();
    let out = dir.path().join("results");
    let run = simulate(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--rho",
        "0.2",
        "--ptx-db",
        "-10,0,10",
        "--sc-rate",
        "0.5",
        "--seed",
        "11",
        "--blocks",
        "2",
    ]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let rows = csv_rows(&out.join("tiny.csv"));
    assert_eq!(rows.len(), 4);
    for row in &rows[1..] {
        assert_eq!(row[1], "0.2");
        assert_eq!(row[2], "0.5");
        assert_eq!(row[3], "0.75");
        assert_eq!(row[8], "2");
        assert_eq!(row[9], "11");
    }
}

#[test]
fn errors_exit_nonzero_with_message() {
    let run = simulate(&["--no-such-flag"]);
    assert!(!run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("Usage"));

    let run = simulate(&["--config", "/definitely/missing.toml"]);
    assert!(!run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("missing.toml"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        CONFIG.replace("n = 256\nrate = 0.375", "n = 256\nrate = 0.5"),
    )
    .unwrap();
    let run = simulate(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!run.status.success());
}

#[test]
fn selftest_passes() {
    let run = simulate(&["--selftest"]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stdout)
    );
    assert!(!String::from_utf8_lossy(&run.stdout).contains("FAIL"));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for name in ["fig4.toml", "fig5.toml"] {
        let cfg = spatial_coding::sim::SweepConfig::load(&dir.join(name)).unwrap();
        cfg.validate().unwrap();
        cfg.check_rates(cfg.ldpc.rate.unwrap()).unwrap();
    }
}
