use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use polaron_core::fock::{ground_state, FockBasis, Hamiltonian, LanczosOptions, LinearOperator, ModeSet};
use polaron_core::grid::convolve;
use polaron_core::pekar::{minimize, MinimizeOptions};
use polaron_core::profiles::{sample_problem, sweep_problem};
use polaron_core::{Complex64, Grid};
use std::hint::black_box;

fn convolution(c: &mut Criterion) {
    let mut g = c.benchmark_group("convolve");
    for n in [256, 1024, 4096] {
        let grid = Grid::new(n, 32.0).unwrap();
        let p = sample_problem(&grid).unwrap();
        let (f, v) = (p.potential().clone(), p.coupling().clone());
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| convolve(black_box(&f), black_box(&v)).unwrap())
        });
    }
    g.finish();
}

fn sweep_hamiltonian(alpha: f64, cutoff: usize) -> Hamiltonian {
    let grid = Grid::new(64, 16.0).unwrap();
    let p = sweep_problem(&grid).unwrap();
    let modes = ModeSet::lowest(&grid, 3).unwrap();
    let basis = FockBasis::new(modes.len(), cutoff).unwrap();
    Hamiltonian::new(&p, &modes, &basis, alpha).unwrap()
}

fn matvec(c: &mut Criterion) {
    let mut g = c.benchmark_group("hamiltonian_apply");
    for cutoff in [6, 10, 14] {
        let h = sweep_hamiltonian(1.0, cutoff);
        let x: Vec<Complex64> = (0..h.dim()).map(|i| Complex64::new((i as f64).sin(), 0.0)).collect();
        let mut y = vec![Complex64::default(); h.dim()];
        g.bench_with_input(BenchmarkId::from_parameter(h.dim()), &cutoff, |b, _| {
            b.iter(|| h.apply_into(black_box(&x), &mut y))
        });
    }
    g.finish();
}

fn lanczos(c: &mut Criterion) {
    let mut g = c.benchmark_group("ground_state");
    g.sample_size(10);
    let h = sweep_hamiltonian(1.0, 8);
    let opts = LanczosOptions::default();
    g.bench_function(BenchmarkId::from_parameter(h.dim()), |b| {
        b.iter(|| ground_state(black_box(&h), &opts, None).unwrap())
    });
    g.finish();
}

fn pekar(c: &mut Criterion) {
    let mut g = c.benchmark_group("minimize");
    g.sample_size(10);
    for n in [256, 1024] {
        let grid = Grid::new(n, 32.0).unwrap();
        let p = sample_problem(&grid).unwrap();
        let opts = MinimizeOptions::default();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| minimize(black_box(&p), &opts).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, convolution, matvec, lanczos, pekar);
criterion_main!(benches);
