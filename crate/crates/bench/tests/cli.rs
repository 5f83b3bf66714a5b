use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mgr_core::sparse::io::{write_matrix_file, write_vector_file};
use mgr_core::sparse::{CsrMatrix, Field, FieldLayout};

fn mgr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mgr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: serde_json::Value) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(&body).unwrap()).unwrap();
    path
}

#[test]
fn run_writes_one_report_row_per_step() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(
        tmp.path(),
        serde_json::json!({
            "problem": {"type": "staircase", "n": 8},
            "schedule": vec![86400.0; 10],
            "output": {"dir": out, "snapshot_every": 5}
        }),
    );
    let o = mgr(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let reports = fs::read_to_string(out.join("reports.csv")).unwrap();
    assert_eq!(reports.lines().count(), 11);
    assert!(reports.lines().skip(1).all(|l| l.ends_with(",true")));
    assert_eq!(fs::read_to_string(out.join("timings.csv")).unwrap().lines().count(), 11);
    for step in [0, 5, 10] {
        assert!(out.join(format!("cells_{step:05}.csv")).exists());
        assert!(out.join(format!("nodes_{step:05}.csv")).exists());
    }
    let echo: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(echo["problem"]["n"], 8);
}

#[test]
fn misspelled_field_exits_with_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        serde_json::json!({"problem": {"type": "staircase", "n": 4}, "schedule": [1.0], "newton": {"max_newtn": 3}}),
    );
    let o = mgr(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("max_newtn") && err.contains("newton"), "{err}");
}

#[test]
fn missing_config_file_is_a_config_error() {
    let o = mgr(&["run", "--config", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failing_newton_exits_with_solver_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        serde_json::json!({
            "problem": {"type": "staircase", "n": 4},
            "schedule": [86400.0],
            "newton": {"max_newton": 1, "rtol": 1e-14, "atol": 1e-300}
        }),
    );
    let o = mgr(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
}

fn identity_files(dir: &Path, n: usize, layout_n: usize) -> [PathBuf; 4] {
    let a = dir.join("A.mtx");
    let b = dir.join("b.mtx");
    let l = dir.join("layout.json");
    let s = dir.join("solver.json");
    write_matrix_file(&a, &CsrMatrix::identity(n)).unwrap();
    write_vector_file(&b, &(0..n).map(|i| i as f64 + 1.0).collect::<Vec<_>>()).unwrap();
    fs::write(
        &l,
        serde_json::to_string(&FieldLayout::interleaved_flow(layout_n / 2)).unwrap(),
    )
    .unwrap();
    let solver = serde_json::json!({
        "mgr": {"levels": [{
            "f_fields": [Field::S], "c_fields": [Field::P], "f_relax": {"type": "jacobi"}
        }]}
    });
    fs::write(&s, solver.to_string()).unwrap();
    [a, b, l, s]
}

#[test]
fn identity_system_solves_in_one_iteration() {
    let tmp = tempfile::tempdir().unwrap();
    let [a, b, l, s] = identity_files(tmp.path(), 10, 10);
    let o = mgr(&[
        "solve",
        "--matrix",
        a.to_str().unwrap(),
        "--rhs",
        b.to_str().unwrap(),
        "--layout",
        l.to_str().unwrap(),
        "--solver",
        s.to_str().unwrap(),
    ]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{text}{}", String::from_utf8_lossy(&o.stderr));
    assert!(text.contains("iterations: 1\n"), "{text}");
}

#[test]
fn layout_size_mismatch_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let [a, b, l, s] = identity_files(tmp.path(), 10, 8);
    let o = mgr(&[
        "solve",
        "--matrix",
        a.to_str().unwrap(),
        "--rhs",
        b.to_str().unwrap(),
        "--layout",
        l.to_str().unwrap(),
        "--solver",
        s.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("layout"));
}

#[test]
fn exported_jacobian_round_trips_through_solve() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        serde_json::json!({"problem": {"type": "staircase", "n": 6}, "schedule": [86400.0]}),
    );
    let dir = tmp.path().join("sys");
    let o = mgr(&[
        "export",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout).to_string();
    let in_process: usize = text
        .lines()
        .find_map(|l| l.strip_prefix("in-process GMRES iterations: "))
        .unwrap()
        .parse()
        .unwrap();
    let p = |f: &str| dir.join(f).to_str().unwrap().to_string();
    let o = mgr(&[
        "solve",
        "--matrix",
        &p("A.mtx"),
        "--rhs",
        &p("b.mtx"),
        "--layout",
        &p("layout.json"),
        "--solver",
        &p("solver.json"),
    ]);
    let solved = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0));
    assert!(
        solved.contains(&format!("iterations: {in_process}\n")),
        "{solved} vs {in_process}"
    );
    assert!(in_process > 1);
}

#[test]
fn jacobian_check_prints_small_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        serde_json::json!({"problem": {"type": "staircase", "n": 3}, "schedule": [86400.0]}),
    );
    let o = mgr(&["check", "jacobian", "--config", cfg.to_str().unwrap()]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let err: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("max relative error: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(err <= 1e-5);
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(mgr(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn problem_file_is_resolved_next_to_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let problem = serde_json::json!({
        "mesh": {"nx": 3, "ny": 3, "nz": 2, "hx": 10.0, "hy": 10.0, "hz": 5.0},
        "fixed_sides": [{"side": "z_min", "components": [true, true, true]}],
        "sources": [
            {"cell": 17, "kind": {"type": "rate", "q_w": 1e-4, "q_nw": 0.0}},
            {"cell": 0, "kind": {"type": "producer", "q_total": 1e-4}}
        ],
        "initial_saturation": 0.3
    });
    fs::write(tmp.path().join("box.json"), problem.to_string()).unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(
        tmp.path(),
        serde_json::json!({
            "problem": {"type": "from_file", "path": "box.json"},
            "schedule": [3600.0, 3600.0],
            "output": {"dir": out}
        }),
    );
    let o = mgr(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(out.join("reports.csv")).unwrap().lines().count(), 3);
}

#[test]
fn problem_file_with_wrong_permeability_count_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let problem = serde_json::json!({
        "mesh": {"nx": 2, "ny": 2, "nz": 2, "hx": 1.0, "hy": 1.0, "hz": 1.0},
        "perm": [[1e-15, 1e-15, 1e-15]]
    });
    fs::write(tmp.path().join("p.json"), problem.to_string()).unwrap();
    let cfg = write_config(
        tmp.path(),
        serde_json::json!({"problem": {"type": "from_file", "path": "p.json"}, "schedule": [1.0]}),
    );
    let o = mgr(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("perm"));
}
