use surfpinn::bench::{problem, ProblemSpec};
use surfpinn::network::MlpParams;
use surfpinn::sampling::CollocationSet;
use surfpinn::trainer::{BatchMode, RunFiles, TrainingConfig, LOG_HEADER};

fn small_problem() -> (ProblemSpec, CollocationSet) {
    let mut p = problem("sphere-continuous").unwrap();
    p.counts.surface_points = 40;
    p.counts.time_levels = 5;
    p.counts.initial = 20;
    let set = p.collocation().unwrap();
    (p, set)
}

fn config(iterations: usize) -> TrainingConfig {
    TrainingConfig {
        iterations,
        batch_mode: BatchMode::MiniBatch(50),
        seed: 11,
        log_every: 5,
        checkpoint_every: 10,
        record_time: false,
        ..TrainingConfig::default()
    }
}

fn single_thread<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn identical_seeds_give_identical_files() {
    let (p, set) = small_problem();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let files = RunFiles::new(d.path()).unwrap();
        let net = MlpParams::init(&[4, 12, 12, 1], 5).unwrap();
        single_thread(|| p.train(&set, net, &config(30), Some(&files)).unwrap());
    }
    for f in ["checkpoint.txt", "optimizer.txt", "log.csv"] {
        let a = std::fs::read(dirs[0].path().join(f)).unwrap();
        let b = std::fs::read(dirs[1].path().join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn resumed_run_matches_uninterrupted_run() {
    let (p, set) = small_problem();
    let net = MlpParams::init(&[4, 10, 1], 2).unwrap();
    let whole = p.train(&set, net.clone(), &config(20), None).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let files = RunFiles::new(dir.path()).unwrap();
    p.train(&set, net, &config(12), Some(&files)).unwrap();
    let (params, state) = files.resume().unwrap();
    assert_eq!(state.step, 12);
    let rest = p.train_from(&set, params, state, &config(8), None).unwrap();

    assert_eq!(whole.params.as_flat(), rest.params.as_flat());
    assert_eq!(whole.state, rest.state);
}

#[test]
fn log_csv_columns() {
    let (p, set) = small_problem();
    let dir = tempfile::tempdir().unwrap();
    let files = RunFiles::new(dir.path()).unwrap();
    let net = MlpParams::init(&[4, 6, 1], 1).unwrap();
    let out = p.train(&set, net, &config(11), Some(&files)).unwrap();
    let text = std::fs::read_to_string(files.log()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(LOG_HEADER));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    let iters: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    assert_eq!(iters, vec![0.0, 4.0, 9.0, 10.0]);
    for (row, rec) in rows.iter().zip(&out.log.records) {
        assert_eq!(row.len(), 7);
        assert_eq!(row[1], rec.loss.total);
        assert_eq!(row[6], 0.0);
    }
}

#[test]
fn collocation_csv_lists_every_point() {
    let (_, set) = small_problem();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("points.csv");
    set.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("set,x,y,z,t"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), set.interior.len() + set.initial.len() + set.eval.len());
    assert_eq!(rows.iter().filter(|r| r.starts_with("interior,")).count(), 200);
    assert_eq!(rows.iter().filter(|r| r.starts_with("initial,")).count(), 20);
}
