use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const TORSION_1D: &str = r#"
[domain]
kind = "interval"
a = -1.0
b = 1.0

[problem]
s = 0.5
nonlinearity = { kind = "constant", value = 1.0 }

[grid]
h = 0.0009765625
"#;

const DISK_POWER: &str = r#"
[domain]
kind = "disk"
radius = 1.0

[problem]
s = 0.5
nonlinearity = { kind = "power", p = 5.0 }

[grid]
nodes = 32
"#;

const DISK_SCAN: &str = r#"
[domain]
kind = "disk"
radius = 1.0

[problem]
s = 0.5
nonlinearity = { kind = "power", p = 2.0 }

[grid]
nodes = 48

[scan]
p = [2.0, 3.0, 5.0]
"#;

struct Run {
    dir: TempDir,
}

impl Run {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn out(&self) -> PathBuf {
        self.dir.path().join("out")
    }

    fn exec(&self, cmd: &str, config: &str) -> Output {
        let cfg = self.dir.path().join("run.toml");
        fs::write(&cfg, config).unwrap();
        Command::new(env!("CARGO_BIN_EXE_fracpoh"))
            .arg(cmd)
            .arg(&cfg)
            .arg("--out")
            .arg(self.out())
            .env("FRACPOH_THREADS", "1")
            .output()
            .unwrap()
    }

    fn json(&self, name: &str) -> Value {
        serde_json::from_str(&fs::read_to_string(self.out().join(name)).unwrap()).unwrap()
    }
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("terminated by signal")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn solve_torsion() {
    let run = Run::new();
    let o = run.exec("solve", &TORSION_1D.replace("0.0009765625", "0.00390625"));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(run.out().join("u.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x,u"));
    assert_eq!(csv.lines().count(), 1 + 511);
    assert_eq!(run.json("solve_report.json")["converged"], true);
    assert!(run.out().join("resolved_config.toml").exists());
}

#[test]
fn invalid_order_is_a_config_error_without_output() {
    let run = Run::new();
    let o = run.exec("solve", &TORSION_1D.replace("s = 0.5", "s = 1.5"));
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("problem.s"), "{}", stderr(&o));
    assert!(!run.out().exists());
}

#[test]
fn parse_errors_carry_line_numbers() {
    let run = Run::new();
    let o = run.exec("solve", &TORSION_1D.replace("b = 1.0", "b = = 1.0"));
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("line 5"), "{}", stderr(&o));
    assert!(!run.out().exists());
}

#[test]
fn missing_config_file() {
    let o = Command::new(env!("CARGO_BIN_EXE_fracpoh"))
        .args(["solve", "/nonexistent/run.toml"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn supercritical_power_does_not_converge() {
    let run = Run::new();
    let o = run.exec("solve", DISK_POWER);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let rep = run.json("solve_report.json");
    assert_eq!(rep["converged"], false);
    assert!(rep["residual_history"].as_array().unwrap().len() > 1);
}

#[test]
fn verify_torsion() {
    let run = Run::new();
    let o = run.exec("verify", TORSION_1D);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let poh = run.json("pohozaev.json");
    assert!(poh["relative_residual"].as_f64().unwrap().abs() <= 1e-3);
    let rhs = poh["term_r"].as_f64().unwrap();
    assert!((rhs - std::f64::consts::PI).abs() < 1e-3, "{rhs}");
    for f in ["trace.csv", "scaling.json", "logfit.json", "verdict.json"] {
        assert!(run.out().join(f).exists(), "{f}");
    }
    assert_eq!(run.json("verdict.json")["pass"], true);
}

#[test]
fn verify_zero_right_side() {
    let run = Run::new();
    let o = run.exec("verify", &TORSION_1D.replace("value = 1.0", "value = 0.0"));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let poh = run.json("pohozaev.json");
    for key in ["term_a", "term_b", "term_r", "residual", "relative_residual"] {
        assert_eq!(poh[key].as_f64(), Some(0.0), "{key}");
    }
}

#[test]
fn verify_coarse_grid_exceeds_tolerance() {
    let run = Run::new();
    let o = run.exec("verify", &TORSION_1D.replace("0.0009765625", "0.0625"));
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let v = run.json("verdict.json");
    assert_eq!(v["pass"], false);
    assert!(v["pohozaev_relative_residual"].as_f64().unwrap().is_finite());
    // torsion is reproduced exactly, so the coarse grid shows in the scaling check
    assert!(v["scaling_relative_error"].as_f64().unwrap() > v["scaling_tol"].as_f64().unwrap());
}

#[test]
fn window_deeper_than_domain_is_a_config_error() {
    let run = Run::new();
    let cfg = DISK_POWER.replace("p = 5.0", "p = 2.0").replace("nodes = 32", "nodes = 8");
    let o = run.exec("verify", &cfg);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("verify.window"), "{}", stderr(&o));
    assert!(!run.out().exists());
}

fn scan_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn scan_classifies_exponents() {
    let run = Run::new();
    let o = run.exec("scan", DISK_SCAN);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = scan_rows(&run.out().join("scan.csv"));
    let classes: Vec<&str> = rows.iter().map(|r| r[2].as_str()).collect();
    assert_eq!(
        classes,
        ["subcritical_violating", "critical", "supercritical_strict"]
    );
    let scan = run.json("scan.json");
    assert_eq!(scan["critical_exponent"].as_f64(), Some(3.0));
    for row in scan["rows"].as_array().unwrap() {
        assert_eq!(row["violation"], false);
    }
}

#[test]
fn scan_at_the_critical_exponent_has_zero_gap() {
    let run = Run::new();
    let cfg = DISK_SCAN.replace("p = [2.0, 3.0, 5.0]", "p = [3.0]\ngap_points = 50");
    let o = run.exec("scan", &cfg);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = scan_rows(&run.out().join("scan.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn scan_with_empty_grid() {
    let run = Run::new();
    let o = run.exec("scan", &DISK_SCAN.replace("p = [2.0, 3.0, 5.0]", "p = []"));
    assert_eq!(code(&o), 1);
    assert!(!run.out().exists());
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let a = Run::new();
    let b = Run::new();
    assert_eq!(code(&a.exec("verify", TORSION_1D)), 0);
    assert_eq!(code(&b.exec("verify", TORSION_1D)), 0);
    let mut names: Vec<_> = fs::read_dir(a.out())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() >= 7);
    for name in names {
        let x = fs::read(a.out().join(&name)).unwrap();
        let y = fs::read(b.out().join(&name)).unwrap();
        assert!(x == y, "{name:?} differs");
    }
}

#[test]
fn trace_and_diagnostics_write_reports() {
    let run = Run::new();
    let cfg = TORSION_1D.replace("0.0009765625", "0.00390625");
    assert_eq!(code(&run.exec("trace", &cfg)), 0);
    assert_eq!(run.json("trace.json")["flagged"].as_u64(), Some(0));
    for row in scan_rows(&run.out().join("trace.csv")) {
        let q: f64 = row[3].parse().unwrap();
        assert!((q - 2f64.sqrt()).abs() < 1e-3, "{q}");
    }
    assert_eq!(code(&run.exec("diagnostics", &cfg)), 0);
    assert!(run.out().join("diagnostics.json").exists());
}
