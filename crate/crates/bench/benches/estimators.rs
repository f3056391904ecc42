use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use robreg::mcmc::mcmc_fit;
use robreg::{
    build_basis_with_range, cov_sandwich_hc0, fit_ols, gen_dataset, posterior_beta_continuous,
    posterior_beta_random_x, GroupedData, McmcConfig, MeanShape, RngStream, ScenarioSpec,
    VarianceShape, XMode,
};
use std::hint::black_box;

fn scenario(n: usize) -> robreg::Dataset {
    let spec = ScenarioSpec::new(
        MeanShape::Nonlinear,
        VarianceShape::Unequal,
        n,
        XMode::Random,
    )
    .unwrap();
    gen_dataset(&mut RngStream::new(1, 0), &spec).unwrap()
}

fn classic(c: &mut Criterion) {
    let mut group = c.benchmark_group("ols_hc0");
    for n in [400, 4000] {
        let data = scenario(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &data, |b, d| {
            b.iter(|| {
                let beta = fit_ols(d).unwrap();
                black_box(cov_sandwich_hc0(d, &beta).unwrap())
            })
        });
    }
    group.finish();
}

fn discrete(c: &mut Criterion) {
    let data = scenario(4000).round_covariates(0);
    let grouped = GroupedData::from_dataset(&data).unwrap();
    c.bench_function("discrete_random_x_4000_draws", |b| {
        b.iter(|| {
            black_box(posterior_beta_random_x(&grouped, 4000, &mut RngStream::new(2, 0)).unwrap())
        })
    });
}

fn spline(c: &mut Criterion) {
    let data = scenario(400);
    let x: Vec<f64> = data.x.column(1).iter().copied().collect();
    let basis = build_basis_with_range(&x, 20, -10.0, 10.0).unwrap();
    let config = McmcConfig::default();
    let mut group = c.benchmark_group("spline");
    group.sample_size(10);
    group.bench_function("mcmc_n400_q20", |b| {
        b.iter(|| black_box(mcmc_fit(&data, &basis, &config, &mut RngStream::new(3, 0)).unwrap()))
    });
    let chain = mcmc_fit(&data, &basis, &config, &mut RngStream::new(3, 0)).unwrap();
    group.bench_function("beta_random_x_4000_draws", |b| {
        b.iter(|| {
            black_box(
                posterior_beta_continuous(&data, &chain, XMode::Random, &mut RngStream::new(4, 0))
                    .unwrap(),
            )
        })
    });
    group.finish();
}

criterion_group!(benches, classic, discrete, spline);
criterion_main!(benches);
