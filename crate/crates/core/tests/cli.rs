use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rdjc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdjc"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all = vec!["--out", dir.to_str().unwrap()];
    all.extend_from_slice(args);
    rdjc(&all)
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn algebra_check_passes_by_default() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["algebra-check"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("all identities hold"));
    assert!(dir.path().join("algebra.csv").exists());
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn impossible_tolerance_fails_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["--tol", "1e-20", "algebra-check"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn lambda_below_bound_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["--lambda", "-0.7", "algebra-check"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("-1/2"));
}

#[test]
fn bad_config_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[params]\nkapa = 0.1\n").unwrap();
    let out = run_in(dir.path(), &["--config", cfg.to_str().unwrap(), "ladder"]);
    assert_eq!(code(&out), 2);
    let out = run_in(dir.path(), &["--preset", "fig9", "ladder"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = run_in(&blocker.join("sub"), &["algebra-check"]);
    assert_eq!(code(&out), 5);
}

#[test]
fn fig1_ladder_table_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["--preset", "fig1", "ladder"]);
    assert_eq!(code(&out), 0);
    let rows = csv_rows(&dir.path().join("doublets_vs_lambda.csv"));
    assert_eq!(rows.len(), 19 * 301);
    let svg = fs::read_to_string(dir.path().join("doublets_vs_lambda.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    // first λ is the critical point, where rung 1 collapses onto the cavity
    assert_eq!(rows[0][..5], ["-0.5", "1", "odd", "0", "0"]);
}

#[test]
fn fig2_writes_one_table_per_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["--preset", "fig2", "--format", "csv", "ladder"]);
    assert_eq!(code(&out), 0);
    let tables: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("doublets_vs_detuning") && n.ends_with(".csv"))
        .collect();
    assert_eq!(tables.len(), 4, "{tables:?}");
    // λ = −1/2: the first rung is degenerate on resonance
    let rows = csv_rows(&dir.path().join("doublets_vs_detuning_lambda-0.5.csv"));
    let n1 = rows.iter().find(|r| r[0] == "0" && r[1] == "1").unwrap();
    assert_eq!(n1[3], n1[4]);
}

#[test]
fn fig3_spectra_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["--preset", "fig3a", "spectrum"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for l in ["0", "0.5", "-0.5"] {
        for ext in ["csv", "json", "svg"] {
            assert!(dir.path().join(format!("spectrum_lambda{l}_delta0.{ext}")).exists());
        }
    }
    let rows = csv_rows(&dir.path().join("spectrum_lambda0.5_delta0.csv"));
    assert_eq!(rows.len(), 2001);
    assert!(rows.iter().all(|r| r[1].parse::<f64>().unwrap() >= 0.0));

    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["--preset", "fig3b", "--format", "json", "spectrum"]);
    assert_eq!(code(&out), 0);
    let json: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("spectrum_") && n.ends_with(".json"))
        .collect();
    assert_eq!(json.len(), 2);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--lambda", "0.9", "--delta", "0.7", "spectrum"];
    assert_eq!(code(&run_in(a.path(), &args)), 0);
    assert_eq!(code(&run_in(b.path(), &args)), 0);
    for name in [
        "spectrum_lambda0.9_delta0.7.csv",
        "spectrum_lambda0.9_delta0.7.json",
        "spectrum_lambda0.9_delta0.7.svg",
    ] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    // the manifest records the output directory, which differs
    let strip = |p: &Path| {
        let m: serde_json::Value = serde_json::from_slice(&fs::read(p.join("manifest.json")).unwrap()).unwrap();
        m["outputs"].clone()
    };
    assert_eq!(strip(a.path()), strip(b.path()));
}

#[test]
fn g2_single_pump_and_empty_cavity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("g2.toml");
    fs::write(
        &cfg,
        "[g2]\nlambdas = [0.0]\n[g2.pump_grid]\nkind = \"values\"\nvalues = [0.0, 0.05]\n",
    )
    .unwrap();
    let out = run_in(dir.path(), &["--config", cfg.to_str().unwrap(), "g2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("g2_vs_pump.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0], ["0", "0", "NaN"]);
    let g2: f64 = rows[1][2].parse().unwrap();
    assert!(g2 > 0.0 && g2 < 1.0, "{g2}");
    let json: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("g2_vs_pump.json")).unwrap()).unwrap();
    assert!(json.to_string().contains("null"));

    let single = dir.path().join("one.toml");
    fs::write(&single, "[g2]\nlambdas = [0.5]\n[g2.pump_grid]\nkind = \"values\"\nvalues = [0.05]\n").unwrap();
    let sub = dir.path().join("one");
    let out = run_in(&sub, &["--config", single.to_str().unwrap(), "g2"]);
    assert_eq!(code(&out), 0);
    assert_eq!(csv_rows(&sub.join("g2_vs_pump.csv")).len(), 1);
    assert!(fs::read_to_string(sub.join("g2_vs_pump.svg")).unwrap().contains("<circle"));
}
