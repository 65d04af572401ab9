use ccentropy::cubature::IntegrationConfig;
use ccentropy::empirical::rank_with_random_ties;
use ccentropy::gof::{bootstrap_test_ranked, calibrate_percentile, GofConfig, ParamMode};
use ccentropy::measures;
use ccentropy::{CopulaModel, Execution, Family};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn bootstrap(c: &mut Criterion) {
    let model = CopulaModel::new(Family::Clayton, 2, &[1.0]).unwrap();
    let sample = model.sample(100, 1).unwrap();
    let rs = rank_with_random_ties(sample.as_slice(), 2, 1).unwrap();
    let mut g = c.benchmark_group("bootstrap_n100_m200");
    g.sample_size(10);
    for (name, exec) in MODES {
        let cfg = GofConfig::default().with_reps(200).with_exec(exec);
        g.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| bootstrap_test_ranked(&rs, Family::Clayton, cfg).unwrap())
        });
    }
    g.finish();
}

fn calibration(c: &mut Criterion) {
    let model = CopulaModel::product(3);
    let mut g = c.benchmark_group("calibration_k3_n250_m500");
    g.sample_size(10);
    for (name, exec) in MODES {
        let cfg = GofConfig::default().with_reps(500).with_param_mode(ParamMode::KnownParams).with_exec(exec);
        g.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| calibrate_percentile(&model, 250, cfg).unwrap())
        });
    }
    g.finish();
}

fn cubature(c: &mut Criterion) {
    let model = CopulaModel::new(Family::Gaussian, 3, &[0.3, 0.2, 0.5]).unwrap();
    let mut g = c.benchmark_group("cce_gaussian_k3");
    g.sample_size(10);
    for (name, exec) in MODES {
        let cfg = IntegrationConfig::for_dim(3).with_abs_tol(1e-5).with_exec(exec);
        g.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| measures::cce(&model, cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bootstrap, calibration, cubature);
criterion_main!(benches);
