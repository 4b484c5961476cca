//! Benchmarks for the numeric kernels that dominate end-to-end runtime:
//! solver stepping, jet propagation through the surrogate, and the fused
//! loss/gradient evaluation.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};

use firefront::autodiff::{jet_backward, jet_forward, JetWorkspace};
use firefront::fdsolver::{
    apply_initial, extract_dataset, Grid, InitialCondition, ParamSource, Sampling, Solver,
};
use firefront::model::{PhysConstants, PhysParams};
use firefront::net::{MlpArch, MlpParams};
use firefront::pinn::{loss_gradient, Batches, LossWeights};
use firefront::stochastic::{GpSampler, GpSpec};

fn bench_solver_step(c: &mut Criterion) {
    let constants = PhysConstants::canonical();
    let ic = InitialCondition { t_p: 2.0, center: vec![30.0], gamma: 5.0, e0: 0.3, x0: 0.7 };
    let theta = PhysParams::new_1d(0.41, 0.25, 0.61);
    let grid = Grid::new_1d(100.0, 801, 200.0, 401).unwrap();
    let solver = Solver::new(grid.clone(), &ic, constants, &theta, None).unwrap();
    let state = apply_initial(&grid, &ic, constants.t_ambient).unwrap();
    let dt = solver.sim_dt();

    let mut group = c.benchmark_group("solver");
    group.throughput(Throughput::Elements(grid.n_nodes() as u64));
    group.bench_function("step_1d_801", |b| {
        b.iter(|| solver.step(&state, &theta, dt).unwrap())
    });

    let ic2 = InitialCondition { t_p: 2.0, center: vec![30.0, 50.0], gamma: 5.0, e0: 0.3, x0: 0.7 };
    let theta2 = PhysParams::new_2d(0.74, 0.41, 0.35, 0.2, 0.4);
    let grid2 = Grid::new_2d(100.0, 321, 100.0, 321, 200.0, 33).unwrap();
    let solver2 = Solver::new(grid2.clone(), &ic2, constants, &theta2, None).unwrap();
    let state2 = apply_initial(&grid2, &ic2, constants.t_ambient).unwrap();
    let dt2 = solver2.sim_dt();
    group.throughput(Throughput::Elements(grid2.n_nodes() as u64));
    group.bench_function("step_2d_321x321", |b| {
        b.iter(|| solver2.step(&state2, &theta2, dt2).unwrap())
    });
    group.finish();
}

fn bench_jets(c: &mut Criterion) {
    let arch = MlpArch::new(vec![2, 20, 20, 20, 20, 3]);
    let params = MlpParams::init(&arch, 7).unwrap();
    let mut ws = JetWorkspace::new(&arch, 1);
    let input = [0.37, 0.61];
    let seeds = [0.01, 0.005];
    let mut grad = vec![0.0; params.len()];

    let mut group = c.benchmark_group("jets");
    group.bench_function("forward_1d", |b| {
        b.iter(|| jet_forward(&params, &input, &seeds, &mut ws))
    });
    group.bench_function("forward_backward_1d", |b| {
        b.iter(|| {
            jet_forward(&params, &input, &seeds, &mut ws);
            let out_bar = ws.output_adjoint_mut();
            out_bar[0] = 1.0;
            out_bar[5] = 0.3;
            jet_backward(&params, &mut ws, &mut grad);
        })
    });
    group.finish();
}

fn bench_loss_gradient(c: &mut Criterion) {
    let constants = PhysConstants::canonical();
    let ic = InitialCondition { t_p: 2.0, center: vec![30.0], gamma: 5.0, e0: 0.3, x0: 0.7 };
    let theta = PhysParams::new_1d(0.41, 0.25, 0.61);
    let grid = Grid::new_1d(100.0, 201, 200.0, 101).unwrap();
    let solver = Solver::new(grid, &ic, constants, &theta, None).unwrap();
    let traj = solver.simulate(&ic, ParamSource::Constant(&theta)).unwrap();
    let ds = extract_dataset(&traj, &Sampling { dx: 2.0, dy: None, dt: 4.0 }).unwrap();
    let batches = Batches::from_dataset(&ds).unwrap();
    let arch = MlpArch::new(vec![2, 20, 20, 20, 20, 3]);
    let params = MlpParams::init(&arch, 3).unwrap();
    let weights = LossWeights::default();

    let mut group = c.benchmark_group("loss");
    group.throughput(Throughput::Elements(batches.points.len() as u64));
    group.bench_function("gradient_2601_points", |b| {
        b.iter_batched(
            || vec![0.0; batches.grad_len(&params)],
            |mut grad| {
                loss_gradient(&batches, &params, &theta, &constants, &weights, &mut grad).unwrap()
            },
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

fn bench_gp(c: &mut Criterion) {
    let spec = GpSpec {
        delta: 0.05,
        zeta: 0.005,
        seed: 7,
        times: (0..401).map(|i| i as f64 * 0.0025).collect(),
    };
    let mut group = c.benchmark_group("gp");
    group.bench_function("factor_401", |b| b.iter(|| GpSampler::new(&spec).unwrap()));
    let sampler = GpSampler::new(&spec).unwrap();
    group.bench_function("draw_401", |b| {
        let mut stream = 0u64;
        b.iter(|| {
            stream += 1;
            sampler.draw(0.41, 7, stream)
        })
    });
    group.finish();
}

criterion_group!(benches, bench_solver_step, bench_jets, bench_loss_gradient, bench_gp);
criterion_main!(benches);
