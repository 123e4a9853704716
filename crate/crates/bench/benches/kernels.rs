use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use lowmach_core::compressible::{init_state, StepLog};
use lowmach_core::diagnostics::vortex_patch;
use lowmach_core::field::sample_cells;
use lowmach_core::{
    assemble_neumann_laplacian, build_grid, spectral_decompose, wave_propagate, AcousticState, CompressibleSolver,
    ExtensionField, Grid, HelmholtzProjector, IllPreparedData, IncompressibleSolver, MotionPath, PathKind,
    PressureLaw, Viscosity,
};

fn grid() -> Grid {
    build_grid(2, 1.0, 0.2, 1.0 / 32.0).unwrap()
}

fn projection(c: &mut Criterion) {
    let g = grid();
    let projector = HelmholtzProjector::new(&g).unwrap();
    let u = vortex_patch(&g, [0.0, 0.5], 0.3);
    c.bench_function("helmholtz_project h=1/32", |b| b.iter(|| projector.project(black_box(&u)).unwrap()));
}

fn compressible_step(c: &mut Criterion) {
    let g = grid();
    let law = PressureLaw::new(1.0, 2.0, 1.0).unwrap();
    let path = MotionPath::new(PathKind::Linear { velocity: [0.1, 0.0] }, 1.0);
    let solver = CompressibleSolver::new(g.clone(), law, Viscosity::new(0.01, 0.0).unwrap(), path, None, 0.3).unwrap();
    let data = IllPreparedData {
        density_perturbation: sample_cells(&g, 0.0, |p| 0.1 * (-(p[0] * p[0] + p[1] * p[1]) / 0.1).exp()),
        velocity: vortex_patch(&g, [0.0, 0.5], 0.3),
    };
    let st = init_state(&g, &law, &data, 0.1, &path.eval(0.0).unwrap()).unwrap();
    let dt = solver.stable_dt(&st);
    c.bench_function("compressible_step h=1/32", |b| {
        b.iter(|| solver.step(black_box(&st), dt, &mut StepLog::default()).unwrap())
    });
}

fn incompressible_step(c: &mut Criterion) {
    let g = grid();
    let path = MotionPath::new(PathKind::Linear { velocity: [0.1, 0.0] }, 1.0);
    let ext = ExtensionField::new(&g, 0.8).unwrap();
    let solver =
        IncompressibleSolver::new(g.clone(), Viscosity::new(0.01, 0.0).unwrap(), 1.0, path, Some(ext), 0.3).unwrap();
    let st = solver.initial_state(&vortex_patch(&g, [0.0, 0.5], 0.3)).unwrap();
    let dt = solver.stable_dt(&st);
    c.bench_function("incompressible_step h=1/32", |b| b.iter(|| solver.step(black_box(&st), dt).unwrap()));
}

fn spectral(c: &mut Criterion) {
    let g = build_grid(2, 1.0, 0.2, 1.0 / 16.0).unwrap();
    let lap = assemble_neumann_laplacian(&g).unwrap();
    let mut group = c.benchmark_group("spectral");
    group.sample_size(10);
    group.bench_function("decompose h=1/16", |b| b.iter(|| spectral_decompose(black_box(&lap), 200).unwrap()));
    let spec = spectral_decompose(&lap, 200).unwrap();
    let state = AcousticState {
        r: sample_cells(&g, 0.0, |p| (-(p[0] * p[0] + p[1] * p[1]) / 0.1).exp()),
        psi: vec![0.0; g.n_cells()],
        eps: 0.1,
        t: 0.0,
    };
    group.bench_function("wave_propagate 200 modes", |b| {
        b.iter(|| wave_propagate(&spec, 2.0, 0.1, black_box(&state), 1.0))
    });
    group.finish();
}

criterion_group!(benches, projection, compressible_step, incompressible_step, spectral);
criterion_main!(benches);
