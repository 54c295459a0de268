use std::fs;
use std::io::BufReader;
use std::process::{Command, Output};

use soc_amg::sparse::market::read_matrix_market;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_soc-amg")).args(args).output().expect("spawn soc-amg")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn assemble_writes_a_loadable_system() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["assemble", "--dim", "2", "--alpha", "4", "--cells", "6", "--bc", "dirichlet", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let a = read_matrix_market(BufReader::new(fs::File::open(dir.path().join("A.mtx")).unwrap())).unwrap();
    assert_eq!(a.nrows(), 25);
    assert_eq!(fs::read_to_string(dir.path().join("rhs.txt")).unwrap().lines().count(), 25);
    assert_eq!(fs::read_to_string(dir.path().join("coords.txt")).unwrap().lines().count(), 25);
}

#[test]
fn strength_reports_and_exports_edges() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("edges.txt");
    let o = run(&[
        "strength",
        "--gamma1",
        "2",
        "--gamma2",
        "20",
        "--soc",
        "dlap",
        "--scaling",
        "sa",
        "--classifier",
        "gap",
        "--theta",
        "0.3",
        "--edges",
        edges.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("DLap/SA/Gap"));
    let n_edges: usize = text
        .lines()
        .find(|l| l.starts_with("strong edges"))
        .and_then(|l| l.split_whitespace().last())
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(fs::read_to_string(&edges).unwrap().lines().count(), n_edges);
}

#[test]
fn solve_prints_a_report() {
    let o = run(&["solve", "--gamma1", "1", "--smoother", "jacobi:0.6"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("iterations,converged"));
    assert!(text.lines().any(|l| l.contains(",true,")));
}

#[test]
fn sweep_with_config_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"family": "tensor2d", "gamma1": [1.0], "gamma2": [1.0, 5.0],
            "drop": {"soc": "A", "scaling": "SA", "classifier": "Val", "theta": 0.16, "theta_gap": 0.16, "lumping": "diagonal"}}"#,
    )
    .unwrap();
    let csv = dir.path().join("out.csv");
    // every point fails with a zero diagonal, yet the exit code is 0
    let o = run(&["sweep", "--config", cfg.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert!(o.status.success());
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().skip(1).all(|l| l.contains("error")));

    let o = run(&["sweep", "--config", cfg.to_str().unwrap(), "--pipeline", "DLap/Sgn/Val"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().skip(1).all(|l| l.ends_with(",ok")));
}

#[test]
fn sweep_rejects_broken_config() {
    let o = run(&["sweep", "--pipeline", "A/Sgn/Gap", "--points", "2"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("invalid configuration"));
}

#[test]
fn geo_small_grid() {
    let o = run(&["geo", "--alpha", "9", "--abar", "3", "--levels", "3", "--n", "27"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("28x28x28 -> 10x10x28 -> 4x4x10"), "{text}");
}

#[test]
fn stencil_prints_classes() {
    let o = run(&["stencil", "--dim", "2", "--alpha", "1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("A/SA"));
    assert!(text.contains("0.125000"));
}
