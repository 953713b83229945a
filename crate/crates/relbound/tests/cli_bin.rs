//! End-to-end checks of the `relbound` binary: exit codes, output formats,
//! config-file handling, and the coupling-table dump.

use std::io::Write;
use std::process::Command;

fn relbound() -> Command {
    Command::new(env!("CARGO_BIN_EXE_relbound"))
}

#[test]
fn help_and_version_exit_cleanly() {
    for flag in ["--help", "--version"] {
        let out = relbound().arg(flag).output().unwrap();
        assert!(out.status.success(), "{flag} failed: {out:?}");
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn bad_configuration_exits_with_code_one() {
    let out = relbound()
        .args(["--system", "no-such-system"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("no-such-system"), "stderr: {err}");

    // A malformed state label is also a configuration error.
    let out = relbound()
        .args(["--system", "positronium", "--states", "1Z9Q9"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn coupling_table_dump_prints_both_sides() {
    let out = relbound()
        .args(["--dump-coupling-table", "1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("side=left"));
    assert!(text.contains("side=right"));
    assert!(text.contains("F=1"));
}

#[test]
fn small_spectrum_run_produces_json() {
    let out = relbound()
        .args([
            "--system",
            "positronium",
            "--states",
            "1S0F0",
            "--grids",
            "96",
            "--format",
            "json",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("stdout should be valid JSON");
    let records = report["records"].as_array().unwrap();
    assert_eq!(records.len(), 1);
    let energy = records[0]["epsilon"].as_f64().unwrap();
    // On a coarse grid the ground state only needs to be in the right ballpark
    // of the Bohr value, -alpha^2/4 in units of m1 (reported in eV here).
    let bohr = -0.25 * relbound::ALPHA.powi(2) * relbound::M_ELECTRON * 1e6;
    assert!(energy < 0.0);
    assert!((energy - bohr).abs() < 0.2 * bohr.abs(), "{energy} vs {bohr}");
}

#[test]
fn config_file_drives_a_run_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "# sample run").unwrap();
    writeln!(f, "system = positronium").unwrap();
    writeln!(f, "states = 1S0F0").unwrap();
    writeln!(f, "grids = 96").unwrap();
    writeln!(f, "format = csv").unwrap();
    drop(f);

    let out = relbound()
        .args(["--config", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().next().unwrap().starts_with("label,unit,epsilon"), "csv header: {text}");

    // The --format flag takes precedence over the file entry.
    let out = relbound()
        .args(["--config", path.to_str().unwrap(), "--format", "json"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(serde_json::from_slice::<serde_json::Value>(&out.stdout).is_ok());
}
