use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_surface-pinn"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn small_train(problem: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "--threads",
        "1",
        "train",
        "--problem",
        problem,
        "--out",
        out.to_str().unwrap(),
        "--iterations",
        "6",
        "--log-every",
        "2",
        "--surface-points",
        "60",
        "--deterministic",
    ];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn tableau_two_stages() {
    let o = run(&["tableau", "2"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let c1 = 0.5 - 3f64.sqrt() / 6.0;
    assert!(s.contains(&format!("{c1:.16}")), "{s}");
    let residual: f64 = s
        .lines()
        .find_map(|l| l.strip_prefix("order residual "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(residual <= 1e-13);
}

#[test]
fn tableau_one_stage_is_midpoint() {
    let s = stdout(&run(&["tableau", "1"]));
    let rows: Vec<Vec<f64>> = s
        .lines()
        .skip(1)
        .take(2)
        .map(|l| {
            l.split(|c: char| c == '|' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse().unwrap())
                .collect()
        })
        .collect();
    assert_eq!(rows, vec![vec![0.5, 0.5], vec![1.0]]);
}

#[test]
fn stage_ceiling_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = small_train("sphere-discrete-short", dir.path(), &["--stages", "100"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("q <= 32"), "{}", stderr(&o));
}

#[test]
fn config_errors_name_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "problem = \"sphere-continuous\"\n\n[training]\nlearning_rat = 0.1\n").unwrap();
    let o = run(&["train", "--config", cfg.to_str().unwrap(), "--out", "unused"]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("line 4") && e.contains("learning_rat"), "{e}");
}

#[test]
fn train_writes_run_directory_and_manifest_reproduces_it() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let o = small_train("sphere-discrete-short", &a, &["--layers", "3,8,8,9", "--stages", "8"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["checkpoint.txt", "optimizer.txt", "log.csv", "manifest.toml"] {
        assert!(a.join(f).exists(), "{f}");
    }
    let log = std::fs::read_to_string(a.join("log.csv")).unwrap();
    assert!(log.starts_with("iter,total,pde,ng,hess,init,seconds\n"));
    let manifest = std::fs::read_to_string(a.join("manifest.toml")).unwrap();
    assert!(manifest.contains("[run]") && manifest.contains("iterations_completed = 6"));

    let b = dir.path().join("b");
    let o = run(&[
        "--threads",
        "1",
        "train",
        "--config",
        a.join("manifest.toml").to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["checkpoint.txt", "optimizer.txt", "log.csv"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn eval_reports_errors_and_dumps_fields() {
    let dir = tempfile::tempdir().unwrap();
    let o = small_train("sphere-continuous", dir.path(), &["--layers", "4,8,1", "--time-levels", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = dir.path().join("manifest.toml");
    let o = run(&["eval", "--config", manifest.to_str().unwrap(), "--points", "50"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let errors = std::fs::read_to_string(dir.path().join("errors.csv")).unwrap();
    let lines: Vec<&str> = errors.lines().collect();
    assert_eq!(lines[0], "t,err,n_eval,seed");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("0.25,") && lines[4].starts_with("1,"));
    for t in ["0.25", "0.5", "0.75", "1"] {
        let f = std::fs::read_to_string(dir.path().join(format!("fields_t{t}.csv"))).unwrap();
        let mut rows = f.lines();
        assert_eq!(rows.next(), Some("x,y,z,t,u_pred,u_exact,abs_err"));
        assert_eq!(rows.count(), 50);
    }
}

#[test]
fn eval_without_exact_solution_dumps_fields_only() {
    let dir = tempfile::tempdir().unwrap();
    let o = small_train("torus-heating", dir.path(), &["--layers", "4,8,1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let ckpt = dir.path().join("checkpoint.txt");
    let o = run(&[
        "eval",
        "--problem",
        "torus-heating",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--points",
        "20",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("heat content"));
    let errors = std::fs::read_to_string(dir.path().join("errors.csv")).unwrap();
    assert_eq!(errors.trim(), "t,err,n_eval,seed");
    for t in ["0", "0.75", "1.5", "2.25", "3"] {
        let f = std::fs::read_to_string(dir.path().join(format!("fields_t{t}.csv"))).unwrap();
        let row = f.lines().nth(1).unwrap();
        assert!(row.ends_with(",,"), "{row}");
    }
}

#[test]
fn eval_missing_checkpoint_fails() {
    let o = run(&["eval", "--problem", "sphere-continuous", "--checkpoint", "/nonexistent/ckpt.txt"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn non_finite_loss_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "problem = \"sphere-continuous\"\n[weights]\nresidual = 1e308\n[overrides]\ntime_levels = 2\n",
    )
    .unwrap();
    let o = run(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("run").to_str().unwrap(),
        "--layers",
        "4,4,1",
        "--iterations",
        "3",
        "--learning-rate",
        "1e3",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("not finite"), "{}", stderr(&o));
}

#[test]
fn verify_writes_theorem_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["verify", "--surface", "sphere", "--trials", "0", "--out", out]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("theorem.csv")).unwrap();
    assert_eq!(csv.trim(), "trial,estimate,lhs,rhs,constant,margin,holds");

    let o = run(&["verify", "--surface", "torus", "--trials", "2", "--seed", "5", "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("theorem.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.ends_with(",true")));
    let constant: f64 = rows[2].split(',').nth(4).unwrap().parse().unwrap();
    assert!((constant - 4.8).abs() < 1e-9);

    let o = run(&["verify", "--surface", "cube"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn fd_check_small_network() {
    let o = run(&["fd-check", "4x20"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    let value: f64 = s
        .split("discrepancy ")
        .nth(1)
        .and_then(|r| r.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!(value <= 1e-6, "{s}");
}
