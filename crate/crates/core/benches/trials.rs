//! Sequential against rayon trial maps on a coupled signal/EKF workload.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ekbf_core::dynamics::{simulate_coupled, PathBundle, Recording};
use ekbf_core::harness::parallel::{map_trials, map_trials_sequential};
use ekbf_core::harness::{ExperimentConfig, Problem};

const CONFIG: &str = r#"{
  "model": {
    "variant": "quadratic-cubic",
    "Q1": [[2.0, 0.0], [0.0, 3.0]],
    "q": [0.5, -0.3],
    "Q2": [[1.0, 0.2], [0.2, 1.0]],
    "beta": 1.0,
    "R1": [[0.5, 0.0], [0.0, 0.5]]
  },
  "sim": {"dt": 0.01, "T": 2.0, "n_trials": 64, "seed": 3},
  "init": {"x0": [1.0, -1.0], "xhat0": [0.0, 0.0]}
}"#;

fn trial(cfg: &ExperimentConfig, p: &Problem, k: usize) -> f64 {
    let (n, m) = (p.model.dim(), p.obs.obs_dim());
    let steps = cfg.steps();
    let bundle = PathBundle::from_seed(cfg.sim.dt, steps, n, m, cfg.sim.seed, k as u64).unwrap();
    let inits = [p.filter.clone()];
    let rec = simulate_coupled(&p.model, &p.obs, &p.x0, &inits, &bundle, &Recording::At(vec![steps])).unwrap();
    let last = rec.times.len() - 1;
    rec.signal[last].dist_sq(&rec.filters[0][last].mean)
}

fn bench_trials(c: &mut Criterion) {
    let cfg = ExperimentConfig::from_json(CONFIG).unwrap();
    let p = cfg.problem().unwrap();
    let n = cfg.sim.n_trials;
    let mut group = c.benchmark_group("coupled_trials");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("sequential", n), |b| {
        b.iter(|| black_box(map_trials_sequential(n, |k| trial(&cfg, &p, k))))
    });
    // worker count follows EKBF_THREADS; without the feature this is the sequential path
    group.bench_function(BenchmarkId::new("map_trials", n), |b| {
        b.iter(|| black_box(map_trials(n, |k| trial(&cfg, &p, k))))
    });
    group.finish();
}

criterion_group!(benches, bench_trials);
criterion_main!(benches);
