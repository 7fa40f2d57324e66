use std::fs;

use dsebo::harness::{run_experiment, summarize, sweep, SweepParam};
use dsebo::trace::read_csv;
use dsebo::{
    run_dsebo, simple_regret, BaseFunction, BaseFunctionKind, DseboConfig, ExperimentConfig,
    HighDimFunction, Objective, SharedEmbedding,
};
use proptest::prelude::*;

fn quick(function: &str, algorithm: &str) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(function, 60, 6, algorithm);
    c.budget = 25;
    c.repetitions = 3;
    c.seed = 11;
    c.fixed_dim = Some(4);
    c.mab.arms = Some(vec![3, 6]);
    c.model.n_uniform = Some(64);
    c.model.n_local = Some(64);
    c
}

#[test]
fn summary_matches_trace_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&quick("griewank", "dsebo"), dir.path()).unwrap();
    let finals: Vec<f64> = (0..3)
        .map(|r| {
            let rows = read_csv(&dir.path().join(format!("run_{r:03}.csv"))).unwrap();
            assert_eq!(rows.len(), 25);
            rows.last().unwrap().best
        })
        .collect();
    let mean = finals.iter().sum::<f64>() / 3.0;
    assert!((out.summary.convergence_mean - mean).abs() <= 1e-12);
    let again = summarize(dir.path()).unwrap();
    assert!((again.convergence_mean - mean).abs() <= 1e-12);
    assert_eq!(again.best_solution, finals.iter().copied().fold(f64::INFINITY, f64::min));
}

#[test]
fn every_trace_is_a_running_minimum() {
    let dir = tempfile::tempdir().unwrap();
    for alg in ["dsebo", "fixed_embedding", "random_search", "mab:c_ucb"] {
        let sub = dir.path().join(alg.replace(':', "_"));
        run_experiment(&quick("levy", alg), &sub).unwrap();
        for r in 0..3 {
            let rows = read_csv(&sub.join(format!("run_{r:03}.csv"))).unwrap();
            assert_eq!(rows.len(), 25, "{alg}");
            let mut best = f64::INFINITY;
            for (i, row) in rows.iter().enumerate() {
                best = best.min(row.f);
                assert_eq!(row.iter, i + 1);
                assert_eq!(row.best.to_bits(), best.to_bits(), "{alg} row {i}");
            }
        }
    }
}

#[test]
fn experiment_writes_exactly_traces_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick("sphere", "random_search");
    cfg.repetitions = 2;
    run_experiment(&cfg, dir.path()).unwrap();
    let mut csvs: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    csvs.sort();
    assert_eq!(csvs, ["run_000.csv", "run_001.csv", "summary.csv"]);
}

#[test]
fn bad_names_fail_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let err = run_experiment(&quick("ackley", "dsebo"), &out).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(!out.exists());
}

#[test]
fn d_h_sweep_respects_clipped_bound() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick("rosenbrock", "dsebo");
    cfg.repetitions = 1;
    cfg.budget = 40;
    cfg.dsebo.beta = Some(40.0);
    let rows = sweep(&cfg, SweepParam::DH, &[20.0, 40.0, 120.0], dir.path()).unwrap();
    assert_eq!(rows.len(), 3);
    for (v, cap) in [(20, 20), (40, 40), (120, 60)] {
        let trace = read_csv(&dir.path().join(format!("d_h={v}")).join("run_000.csv")).unwrap();
        assert!(trace.iter().all(|r| r.dim <= cap), "d_h={v}");
        assert!(trace.iter().any(|r| r.dim > 5), "d_h={v} never expanded");
    }
}

#[test]
fn larger_beta_gives_smaller_steps() {
    let f = HighDimFunction::new(BaseFunction::new(BaseFunctionKind::Sphere, 10).unwrap(), 200, 0.1, 1e4)
        .unwrap();
    let mean_step = |beta: f64| {
        let mut cfg = DseboConfig::for_dimension(200, 150, 2);
        cfg.beta = beta;
        cfg.acquisition.n_uniform = 100;
        cfg.acquisition.n_local = 100;
        run_dsebo(&f, &cfg).unwrap().expansions.mean_delta().unwrap()
    };
    assert!(mean_step(32.0) < mean_step(12.0));
}

#[test]
fn regret_of_a_run_is_nonincreasing() {
    let f = HighDimFunction::new(BaseFunction::new(BaseFunctionKind::Levy, 5).unwrap(), 50, 0.1, 1e4).unwrap();
    let mut cfg = DseboConfig::for_dimension(50, 30, 0);
    cfg.acquisition.n_uniform = 64;
    cfg.acquisition.n_local = 64;
    let trace = run_dsebo(&f, &cfg).unwrap();
    let regret = simple_regret(&trace.values(), f.optimum_value().unwrap());
    assert_eq!(regret.len(), 30);
    assert!(regret.windows(2).all(|w| w[1] <= w[0]));
    // The tail penalty is subtracted, so values may dip below the optimum by
    // at most the tail bound.
    assert!(regret.iter().all(|&r| r >= -f.tail_bound()));
}

#[test]
fn embedding_dump_survives_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let emb = SharedEmbedding::new(40, 7, 5).unwrap();
    let path = dir.path().join("emb.bin");
    emb.write_dump(fs::File::create(&path).unwrap()).unwrap();
    let bytes = fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], b"DSEB");
    assert_eq!(bytes.len(), 4 + 3 * 4 + 40 * 7 * 8);
    let back = SharedEmbedding::read_dump(fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(back.entries(), emb.entries());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn optimum_placement(kind_idx in 0usize..5, d_f in 1usize..8, extra in 1usize..50, c in -0.2f64..0.2) {
        let kind = [
            BaseFunctionKind::Sphere,
            BaseFunctionKind::Rosenbrock,
            BaseFunctionKind::Levy,
            BaseFunctionKind::Griewank,
            BaseFunctionKind::DixonPrice,
        ][kind_idx];
        let f = HighDimFunction::new(BaseFunction::new(kind, d_f).unwrap(), d_f + extra, c, 1e4).unwrap();
        if let Some(x) = f.optimizer() {
            prop_assert!((f.evaluate(&x) - f.optimum_value().unwrap()).abs() < 1e-9);
        }
    }
}
