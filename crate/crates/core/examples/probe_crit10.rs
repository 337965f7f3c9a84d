use lowcoh::*;
use lowcoh::bench::{ExperimentConfig, Method, SchemePoint, run_cs_experiment, aggregate};
use std::time::Instant;
fn main() {
    // Experiment 1: T = 2, m in {6, 10, 16}, n = 60, d = 30.
    let cfg = ExperimentConfig {
        scheme: vec![
            SchemePoint { m: 6, n: 60, d: Some(30) },
            SchemePoint { m: 10, n: 60, d: Some(30) },
            SchemePoint { m: 16, n: 60, d: Some(30) },
        ],
        methods: vec![Method::DmcmP, Method::Random],
        repeats: 1,
        trials_per_point: 200,
        sparsity_levels: vec![2],
        master_seed: 11,
        ..ExperimentConfig::default()
    };
    let t0 = Instant::now();
    let records = run_cs_experiment(&cfg).unwrap();
    println!("experiment 1 took {:.1}s", t0.elapsed().as_secs_f64());
    for row in aggregate(&records) {
        println!("  {} m={:2} T={:?}: mean_err={:.4} fail={:.3}",
            row.method, row.m, row.sparsity, row.mean_error.unwrap(), row.failure_rate.unwrap());
    }
    // Experiment 2: m = 18, n = 180, d = 90, T in 1..=4.
    let cfg2 = ExperimentConfig {
        scheme: vec![SchemePoint { m: 18, n: 180, d: Some(90) }],
        methods: vec![Method::DmcmP, Method::Random],
        repeats: 1,
        trials_per_point: 200,
        sparsity_levels: vec![1, 2, 3, 4],
        master_seed: 12,
        ..ExperimentConfig::default()
    };
    let t0 = Instant::now();
    let records = run_cs_experiment(&cfg2).unwrap();
    println!("experiment 2 took {:.1}s", t0.elapsed().as_secs_f64());
    for row in aggregate(&records) {
        println!("  {} m={:2} T={:?}: mean_err={:.4} fail={:.3}",
            row.method, row.m, row.sparsity, row.mean_error.unwrap(), row.failure_rate.unwrap());
    }
}
