//! Hot-kernel benchmarks: the dealiased cubic convolution, field sampling,
//! torus synthesis, and the majorant recursion.  Run with `cargo bench`.

use criterion::{black_box, criterion_group, criterion_main, Criterion};

use qpnls_core::field::{make_initial_state, sample_field, SeedSpec};
use qpnls_core::lattice::{DecayProfile, FourierState, TruncationBox};
use qpnls_core::spectral::{dealias_grid_size, SpectralGrid};
use qpnls_core::tree::{majorant_series, MajorantMode, HORIZON_Z};

fn state_on(nu: usize, radius: i64) -> FourierState {
    let bx = TruncationBox::new(nu, radius).unwrap();
    let profile = DecayProfile::new(vec![3.0; nu], vec![1.0; nu], 1.0).unwrap();
    let field = sample_field(SeedSpec::new(7, 0), bx);
    make_initial_state(&field, &profile, 0.1).unwrap()
}

fn bench_cubic_term(c: &mut Criterion) {
    for (nu, radius) in [(1usize, 8i64), (2, 3)] {
        let state = state_on(nu, radius);
        let mut grid = SpectralGrid::new(nu, dealias_grid_size(radius));
        let mut out = state.amps.clone();
        c.bench_function(&format!("cubic_term_nu{nu}_n{radius}"), |b| {
            b.iter(|| {
                grid.cubic_term(&state.bx, black_box(&state.amps), &mut out);
                black_box(out[0])
            })
        });
    }
}

fn bench_sample_field(c: &mut Criterion) {
    let bx = TruncationBox::new(2, 8).unwrap();
    c.bench_function("sample_field_nu2_n8", |b| {
        let mut i = 0u64;
        b.iter(|| {
            i += 1;
            black_box(sample_field(SeedSpec::new(7, i), bx).draws[0])
        })
    });
}

fn bench_synthesize(c: &mut Criterion) {
    let state = state_on(2, 8);
    let mut grid = SpectralGrid::new(2, dealias_grid_size(8));
    c.bench_function("synthesize_nu2_n8", |b| {
        b.iter(|| black_box(grid.synthesize(&state.bx, &state.amps)[0]))
    });
}

fn bench_majorant(c: &mut Criterion) {
    c.bench_function("majorant_series_k12", |b| {
        b.iter(|| majorant_series(black_box(12), HORIZON_Z, MajorantMode::Functional).unwrap())
    });
}

criterion_group!(
    kernels,
    bench_cubic_term,
    bench_sample_field,
    bench_synthesize,
    bench_majorant
);
criterion_main!(kernels);
