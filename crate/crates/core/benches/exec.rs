//! Sequential against parallel execution on the two heaviest kernels.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::Vector3;

use oisac::channel::{lambert_mode, Aiming, ChannelState, RadiationPattern};
use oisac::exec::Execution;
use oisac::geometry::Scenario;
use oisac::layout_opt::{grid_search_layout, SearchSpace};
use oisac::modem::{run_ber, BerSetup, Constellation, EbN0Reference, FrequencyResponse, OfdmConfig};

const MODES: [Execution; 2] = [Execution::Sequential, Execution::Parallel];

fn ber(c: &mut Criterion) {
    let s = Scenario::table2();
    let pat = RadiationPattern::lambertian(s.semi_angle).unwrap();
    let ch = ChannelState::compute(&s, &pat, &Vector3::new(0.5, 0.5, 0.0), &Aiming::Vertical);
    let cfg = OfdmConfig::new(32, Constellation::Qam16);
    let resp = FrequencyResponse::from_channel(&ch, &cfg);
    let mut setup = BerSetup::new(cfg, resp, 1);
    setup.reference = EbN0Reference::Receive;
    let mut g = c.benchmark_group("run_ber");
    g.sample_size(10);
    for exec in MODES {
        setup.exec = exec;
        g.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &setup, |b, st| {
            b.iter(|| run_ber(st, &[4.0, 8.0], 50_000).unwrap())
        });
    }
    g.finish();
}

fn layout(c: &mut Criterion) {
    let s = Scenario::table2();
    let m0 = lambert_mode(s.semi_angle).unwrap();
    let space = SearchSpace {
        eps_step: 0.1,
        xi_step: 0.1,
        ..SearchSpace::default()
    };
    let mut g = c.benchmark_group("grid_search_layout");
    g.sample_size(10);
    for exec in MODES {
        g.bench_function(BenchmarkId::from_parameter(format!("{exec:?}")), |b| {
            b.iter(|| grid_search_layout(&s, m0, 4, 0.8e-4, &space, 64, exec))
        });
    }
    g.finish();
}

criterion_group!(benches, ber, layout);
criterion_main!(benches);
