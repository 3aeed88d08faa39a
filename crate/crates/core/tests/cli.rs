use std::path::Path;
use std::process::Command;

fn ergolab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ergolab"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

const FREE_SCAN: &str = r#"
experiment = "lyapunov-scan"

[function]
variant = "trig"
constant = 0.0

[scan]
e_min = -3.0
e_max = 3.0
count = 61
"#;

#[test]
fn free_scan_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "scan.toml", FREE_SCAN);
    let out = ergolab()
        .args(["lyapunov-scan", cfg.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = dir.path().join("lyapunov-scan_scan.csv");
    let text = std::fs::read_to_string(&table).unwrap();
    assert!(text.starts_with("# experiment = \"lyapunov-scan\""));
    assert!(text.contains("\nE_re,E_im,gamma,raw,std_error\n"));
    let rows = csv_rows(&table);
    assert_eq!(rows.len(), 61);
    for r in &rows {
        if r[0].abs() <= 2.0 {
            assert!(r[2] <= 0.02, "gamma({}) = {}", r[0], r[2]);
        }
        if (r[0].abs() - 3.0).abs() < 1e-12 {
            assert!(r[2] >= 0.2, "gamma({}) = {}", r[0], r[2]);
        }
    }
    let report = std::fs::read_to_string(dir.path().join("lyapunov-scan_report.txt")).unwrap();
    assert!(report.contains("\nkind = \"lyapunov-scan\"\n"));
    assert!(report.contains("\nseed = 0\n"));
}

#[test]
fn measure_summary_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "m.toml",
        "experiment = \"measure\"\n[function]\nvariant = \"trig\"\nconstant = 0.0\n",
    );
    let out = ergolab()
        .args(["measure", cfg.to_str().unwrap(), "--delta-gamma", "0.05", "--seed", "5", "--steps", "20000"])
        .args(["--out-dir", dir.path().to_str().unwrap(), "--prefix", "free"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("M_hat = 4.00 (delta_gamma=0.05)"), "{stdout}");
    assert!(stdout.contains("seed: 5"));
    assert!(stdout.contains("verdict within_interval: pass"));
    let nodes = std::fs::read_to_string(dir.path().join("free_nodes.csv")).unwrap();
    assert!(nodes.contains("# seed = 5\n"));
    assert!(nodes.contains("# steps = 20000\n"));
    assert!(nodes.contains("\nE,gamma,std_error,below\n"));
}

#[test]
fn subcommand_selects_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "w.toml",
        "experiment = \"measure\"\n[function]\nvariant = \"trig\"\ncos = [[1.0]]\n",
    );
    let out = ergolab()
        .args(["sc-weight", cfg.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("sc-weight_weights.csv"));
    assert_eq!(rows.len(), 201);
    assert_eq!(rows[0][1], 0.0);
    assert_eq!(rows[200][1], 0.0);
    assert!(rows[100][1] > 0.0);
}

#[test]
fn unknown_key_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &format!("lyapnov_N = 10\n{FREE_SCAN}"));
    let out = ergolab().args(["lyapunov-scan", cfg.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lyapnov_N"));
}

#[test]
fn stage_failure_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "m.toml",
        "experiment = \"m-function\"\n[function]\nvariant = \"trig\"\nconstant = 0.0\n\
         [m_function]\nenergy = [0.0, 1.0]\nmax_iter = 3\n",
    );
    let out = ergolab()
        .args(["m-function", cfg.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("m-function: omega=0"), "{stderr}");
    assert!(stderr.contains("did not converge"), "{stderr}");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "scan.toml", &FREE_SCAN.replace("count = 61", "count = 11"));
    let run = || {
        let out = ergolab()
            .args(["lyapunov-scan", cfg.to_str().unwrap(), "--steps", "5000"])
            .args(["--out-dir", dir.path().to_str().unwrap()])
            .output()
            .unwrap();
        assert!(out.status.success());
        (
            std::fs::read(dir.path().join("lyapunov-scan_scan.csv")).unwrap(),
            std::fs::read(dir.path().join("lyapunov-scan_report.txt")).unwrap(),
        )
    };
    assert_eq!(run(), run());
}
