use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use vlcsim_bench::{decaying_signal, default_model};
use vlcsim_core::analysis::{optimize_kp, AnalysisOptions, KpGrid};
use vlcsim_core::channel::{dbm_to_watts, fd_relay_cir};
use vlcsim_core::ofdm::{run_monte_carlo, OperatingPoint};
use vlcsim_core::signal::{convolve, convolve_discrete};
use vlcsim_core::{Mode, ModulationScheme};

fn convolution(c: &mut Criterion) {
    let dt = 2.5e-9;
    let frame = decaying_signal(28_800, dt);
    let short = decaying_signal(200, dt);
    let long = decaying_signal(1_001, dt);
    c.bench_function("convolve/frame x 200 taps", |b| {
        b.iter(|| convolve(black_box(&frame), black_box(&short)).unwrap())
    });
    c.bench_function("convolve_discrete/frame x 1001 taps", |b| {
        b.iter(|| convolve_discrete(black_box(&frame), black_box(&long)).unwrap())
    });
}

fn fd_solve(c: &mut Criterion) {
    let model = default_model();
    let budget = model.budget(dbm_to_watts(10.0), 0.5);
    let s = model.settings();
    c.bench_function("fd_relay_cir/default scenario", |b| {
        b.iter(|| {
            fd_relay_cir(
                model.channels(),
                &budget,
                1.0,
                &s.led,
                s.residual_tolerance,
                None,
            )
            .unwrap()
        })
    });
}

fn monte_carlo(c: &mut Criterion) {
    let model = default_model();
    let point = [OperatingPoint {
        power_w: dbm_to_watts(12.0),
        k_p: 0.5,
        noise_variance: model.noise_variance(),
    }];
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);
    group.bench_function("FD 4-QAM 10k bits", |b| {
        b.iter(|| {
            run_monte_carlo(
                &model,
                ModulationScheme::Qam(4),
                Mode::FullDuplex,
                &point,
                10_000,
                1,
            )
            .unwrap()
        })
    });
    group.finish();
}

fn optimize(c: &mut Criterion) {
    let model = default_model();
    let opts = AnalysisOptions::default();
    let grid = KpGrid::with_step(1e-3);
    let mut group = c.benchmark_group("optimize_kp");
    group.sample_size(10);
    group.bench_function("FD BPSK-SIM step 1e-3", |b| {
        b.iter(|| {
            optimize_kp(
                &model,
                Mode::FullDuplex,
                ModulationScheme::BpskSim,
                dbm_to_watts(15.0),
                &grid,
                &opts,
            )
            .unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, convolution, fd_solve, monte_carlo, optimize);
criterion_main!(benches);
