use std::path::Path;
use std::process::{Command, Output};

fn ellipnls(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ellipnls"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

/// Data rows of a CSV, after the `#` metadata and the header.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn coeffs_row_for_the_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = ellipnls(
        &["coeffs", "--param", "a=-1", "--param", "c1=-2"],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = rows(&read(dir.path(), "coeffs.csv"));
    assert_eq!(
        table[0],
        [
            "R1",
            "nan",
            "-16.0",
            "8.0",
            "-1.5999999999999999",
            "0.26",
            "0.0"
        ]
    );
    let inv = read(dir.path(), "invariants.csv");
    assert!(inv.contains("g2z,-0.64"), "{inv}");
}

#[test]
fn every_csv_echoes_parameters_and_version() {
    let dir = tempfile::tempdir().unwrap();
    let out = ellipnls(&["reproduce-appendix"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let mut seen = 0;
    for entry in std::fs::read_dir(dir.path()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "csv") {
            let text = std::fs::read_to_string(&path).unwrap();
            assert!(
                text.starts_with(&format!("# ellipnls {}", env!("CARGO_PKG_VERSION"))),
                "{path:?}"
            );
            for key in ["a", "c1", "c2", "c3", "h0", "f0", "phi0", "gamma2"] {
                assert!(
                    text.contains(&format!("\n# {key}=")),
                    "{path:?} lacks {key}"
                );
            }
            seen += 1;
        }
    }
    assert!(seen >= 15);
    let summary = read(dir.path(), "summary.txt");
    assert!(summary.contains("DISCREPANCY") && summary.contains("Lz matches the stated 2.85"));
}

#[test]
fn bad_input_exits_one_with_error_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = ellipnls(&["h-profile", "--param", "a=0"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let record: serde_json::Value =
        serde_json::from_str(read(dir.path(), "error.json").trim()).unwrap();
    assert_eq!(record["command"], "h-profile");
    assert_eq!(record["error"], "invalid-input");
    let stderr: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(stderr, record);

    let out = ellipnls(&["coeffs", "--param", "no_such_key=1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "gamma2 = \"unscaled\"\n\n[params]\nc3 = 0.12\n\n[period_t]\nn = 11\n",
    )
    .unwrap();
    let out = ellipnls(
        &[
            "period-t",
            "--config",
            cfg.to_str().unwrap(),
            "--param",
            "period_t.periods=1",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let text = read(dir.path(), "period_t.csv");
    assert!(text.contains("# c3=0.12\n") && text.contains("# gamma2=unscaled\n"));
    assert_eq!(rows(&text).len(), 11);
}

#[test]
fn thread_count_does_not_change_output() {
    let run = |threads: &str| {
        let dir = tempfile::tempdir().unwrap();
        let status = Command::new(env!("CARGO_BIN_EXE_ellipnls"))
            .args([
                "region",
                "--param",
                "region.nf=60",
                "--param",
                "region.nz=60",
                "--out",
            ])
            .arg(dir.path())
            .env("ELLIPNLS_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.code().is_some());
        (
            read(dir.path(), "region.csv"),
            read(dir.path(), "region_boundary.csv"),
        )
    };
    assert_eq!(run("1"), run("4"));
}
