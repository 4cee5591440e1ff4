//! Rayon pool vs a single worker on the hot paths. Without the `parallel` feature only the
//! sequential loops exist and a single `sequential` series is recorded.

use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use fiolab::fio::{apply_fio_direct, SymbolSpec};
use fiolab::grid::{Grid, SampledFunction};
use fiolab::phase::PhaseSpec;
use fiolab::spaces::{stft_norms, Exponent, NormRequest, SpaceKind, Weight};
use fiolab::tfr::{gaussian_window, stft_with, StftLattice};
use fiolab::Complex64;

fn chirp(grid: Grid) -> SampledFunction {
    SampledFunction::from_fn(grid, |t| {
        Complex64::from_polar((-PI * t[0] * t[0] / 16.0).exp(), PI * 0.3 * t[0] * t[0])
    })
}

fn compare<F: Fn() + Sync>(c: &mut Criterion, name: &str, f: F) {
    let mut group = c.benchmark_group(name);
    group.sample_size(10);
    #[cfg(feature = "parallel")]
    {
        group.bench_function("parallel", |b| b.iter(&f));
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("thread pool");
        group.bench_function("sequential", |b| single.install(|| b.iter(&f)));
    }
    #[cfg(not(feature = "parallel"))]
    group.bench_function("sequential", |b| b.iter(&f));
    group.finish();
}

fn benches(c: &mut Criterion) {
    let grid = Grid::new(1, 1024, 1.0 / 32.0).unwrap();
    let f = chirp(grid);
    let g = gaussian_window(grid);
    compare(c, "stft_full_1024", || {
        black_box(stft_with(&f, &g, StftLattice::full()).unwrap());
    });

    let wide = Grid::new(1, 1 << 14, 1.0 / 32.0).unwrap();
    let f = chirp(wide);
    let g = gaussian_window(wide);
    let lattice = StftLattice::for_unit_window(&wide, 0.25);
    let reqs: Vec<NormRequest> = [(1.0, f64::INFINITY), (2.0, 2.0), (f64::INFINITY, 1.0)]
        .iter()
        .map(|&(p, q)| {
            let e = |v: f64| if v.is_finite() { Exponent::Finite(v) } else { Exponent::Infinity };
            NormRequest { kind: SpaceKind::Modulation, p: e(p), q: e(q), weight: Weight::new(0.5, 0.5, 1) }
        })
        .collect();
    compare(c, "modulation_norms_16k", || {
        black_box(stft_norms(&f, &g, lattice, &reqs).unwrap());
    });

    let small = Grid::default_1d();
    let f = chirp(small);
    let phi = PhaseSpec::mild_growth(0.5, 1).unwrap();
    let sigma = SymbolSpec::power(0.5, 0.5);
    compare(c, "fio_direct_512", || {
        black_box(apply_fio_direct(&sigma, &phi, &f).unwrap());
    });
}

criterion_group!(stft_benches, benches);
criterion_main!(stft_benches);
