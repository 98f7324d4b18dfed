use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dirty-mac")).args(args).current_dir(dir).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

/// Rows of a CSV as header-indexed string maps.
fn read_csv(path: &Path) -> Vec<std::collections::HashMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    r.records()
        .map(|rec| header.iter().cloned().zip(rec.unwrap().iter().map(String::from)).collect())
        .collect()
}

fn f(row: &std::collections::HashMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap_or_else(|_| panic!("{key} = {:?}", row[key]))
}

#[test]
fn roots_report_and_csv() {
    let dir = TempDir::new().unwrap();
    let o = run(&["roots", "--out", "r"], dir.path());
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("0.425"), "{text}");
    let rows = read_csv(&dir.path().join("r/roots.csv"));
    let get = |name: &str| rows.iter().find(|r| r["quantity"] == name).unwrap();
    assert!((f(get("x_star"), "value") - 1.655).abs() < 1e-3);
    assert!((f(get("u_star"), "value") - 1.832).abs() < 5e-3);
    for name in ["x_star", "snr_star", "u_star"] {
        assert!(f(get(name), "residual").abs() < 1e-9);
    }
}

#[test]
fn gap_sweep_peaks_and_zero_region() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "g.toml", "snr = \"lin:0.005:10:2000\"\nratio = [1, 4]\n");
    let o = run(&["gaps", "--config", &cfg, "--out", "g"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&dir.path().join("g/gaps.csv"));
    let equal: Vec<_> = rows.iter().filter(|r| f(r, "ratio") == 1.0).collect();
    let argmax = |key: &str| equal.iter().max_by(|a, b| f(a, key).total_cmp(&f(b, key))).unwrap();
    let z = argmax("zeta");
    assert!((f(z, "zeta") - 0.167).abs() < 1e-3 && (f(z, "snr") - 1.155).abs() < 0.01);
    let e = argmax("eta");
    assert!((f(e, "eta") - 0.085).abs() < 1e-3 && (f(e, "snr") - 0.5).abs() < 0.01);
    // With P₂ = 4P₁ the one-helper regime N ≤ √(P₁P₂) − min(P₁,P₂) is P₁ ≥ 1.
    for r in rows.iter().filter(|r| f(r, "ratio") == 4.0 && f(r, "p1") >= 1.0) {
        assert_eq!(f(r, "zeta"), 0.0);
    }
    for r in &rows {
        assert!(f(r, "inner") <= f(r, "outer") + 1e-9 && f(r, "helper_inner") <= f(r, "outer") + 1e-9);
    }
}

#[test]
fn region_shapes() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "r.toml", "p1 = 3\np2 = 1\nn = 1\n");
    let o = run(&["regions", "--config", &cfg, "--out", "r"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let index = read_csv(&dir.path().join("r/regions.csv"));
    let region = |channel: &str| {
        let file = &index.iter().find(|r| r["channel"] == channel).unwrap()["file"];
        read_csv(&dir.path().join("r").join(file))
    };
    let of = |rows: &[std::collections::HashMap<String, String>], rec: &str| {
        rows.iter().filter(|r| r["record"] == rec).cloned().collect::<Vec<_>>()
    };
    let single = region("single_dirty");
    let corner = (0.5 * (4.0f64 / 2.0).log2(), 0.5);
    assert!(of(&single, "outer_vertex").iter().any(|v| (f(v, "r1") - corner.0).abs() < 1e-12 && (f(v, "r2") - corner.1).abs() < 1e-12));
    let doubly = region("doubly_dirty");
    let constraints = of(&doubly, "outer_constraint");
    assert_eq!(constraints.len(), 1);
    assert_eq!((f(&constraints[0], "a"), f(&constraints[0], "b")), (1.0, 1.0));
    let common = region("common");
    assert_eq!(of(&common, "outer_vertex").len(), 5);
    assert_eq!(of(&common, "inner_vertex").len(), 5);
}

#[test]
fn envelope_dominates_curve() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "e.toml", "mode = \"symmetric\"\nsnr = \"lin:0.05:5:100\"\n");
    assert_eq!(code(&run(&["envelope", "--config", &cfg, "--out", "e"], dir.path())), 0);
    let rows = read_csv(&dir.path().join("e/envelope.csv"));
    assert_eq!(rows.len(), 101);
    for r in &rows {
        assert!(f(r, "envelope") >= f(r, "raw") - 1e-12 && f(r, "envelope") <= f(r, "outer") + 1e-12);
    }
}

#[test]
fn simulation_checks_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.toml",
        "presets = [\"thm2\", \"common\", \"helper_lemma4\", \"thm3_helper\"]\np1 = 10\np2 = 10.5\nn = 1\nsamples = 200000\nseed = 5\n",
    );
    let a = run(&["simulate", "--config", &cfg, "--out", "a"], dir.path());
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    let b = run(&["simulate", "--config", &cfg, "--out", "b"], dir.path());
    assert_eq!(code(&b), 0);
    let bytes = |d: &str| std::fs::read(dir.path().join(d).join("simulate.csv")).unwrap();
    assert_eq!(bytes("a"), bytes("b"));
    let rows = read_csv(&dir.path().join("a/simulate.csv"));
    let thm2 = rows.iter().find(|r| r["preset"] == "thm2").unwrap();
    assert!(f(thm2, "invariance_rate_diff") < 1e-3);
    let common = rows.iter().find(|r| r["preset"] == "common").unwrap();
    assert!((f(common, "residual_power") / f(common, "residual_predicted") - 1.0).abs() < 0.02);
    let helper = rows.iter().find(|r| r["preset"] == "helper_lemma4").unwrap();
    assert!(f(helper, "numeric_rate") >= f(helper, "analytic_bound").max(0.0) - 1e-4);
    // The strong-helper scheme needs P₁ ≥ P₂((P₂+N)/P₂)², which fails here.
    let helper3 = rows.iter().find(|r| r["preset"] == "thm3_helper").unwrap();
    assert_eq!(helper3["status"], "invalid");
    assert!(rows.iter().filter(|r| r["status"] != "invalid").all(|r| r["status"] == "ok"));
}

#[test]
fn tables_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "p1 = [1, 5]\np2 = \"log:0.5:8:3\"\nsnr = \"log:0.01:100:300\"\n");
    for out in ["x", "y"] {
        for cmd in ["regions", "gaps", "envelope"] {
            assert_eq!(code(&run(&[cmd, "--config", &cfg, "--out", out], dir.path())), 0);
        }
    }
    for name in ["regions.csv", "region_0.csv", "region_17.csv", "gaps.csv", "envelope.csv"] {
        let read = |d: &str| std::fs::read(dir.path().join(d).join(name)).unwrap();
        assert_eq!(read("x"), read("y"), "{name}");
    }
}

#[test]
fn exit_codes_for_bad_input() {
    let dir = TempDir::new().unwrap();
    let bad = write_config(dir.path(), "bad.toml", "p1 = []\n");
    assert_eq!(code(&run(&["gaps", "--config", &bad], dir.path())), 3);
    let typo = write_config(dir.path(), "typo.toml", "snrs = [1]\n");
    assert_eq!(code(&run(&["gaps", "--config", &typo], dir.path())), 3);
    assert_eq!(code(&run(&["gaps", "--config", "missing.toml"], dir.path())), 3);
    assert_eq!(code(&run(&["simulate", "--samples", "100000"], dir.path())), 3);
    assert_eq!(code(&run(&["simulate", "--seed", "1", "--samples", "5"], dir.path())), 3);
    assert_eq!(code(&run(&["frobnicate"], dir.path())), 3);
    assert_eq!(code(&run(&["--help"], dir.path())), 0);
    std::fs::write(dir.path().join("blocker"), "").unwrap();
    assert_eq!(code(&run(&["roots", "--out", "blocker/sub"], dir.path())), 1);
}
