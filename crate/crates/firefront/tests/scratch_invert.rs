//! Temporary inversion experiment (deleted before release).

use firefront::fdsolver::*;
use firefront::model::*;
use firefront::net::MlpArch;
use firefront::optim::*;
use firefront::pinn::LossWeights;
use std::time::Instant;

#[test]
fn invert_1d_desk() {
    let theta_star = PhysParams::new_1d(0.41, 0.25, 0.61);
    let c = PhysConstants::canonical();
    let ic = InitialCondition { t_p: 2.0, center: vec![30.0], gamma: 5.0, e0: 0.3, x0: 0.7 };
    let grid = Grid::new_1d(100.0, 801, 200.0, 401).unwrap();
    let solver = Solver::new(grid, &ic, c, &theta_star, None).unwrap();
    let t0 = Instant::now();
    let traj = solver.simulate(&ic, ParamSource::Constant(&theta_star)).unwrap();
    println!("simulate: {:.2?}", t0.elapsed());
    let ds = extract_dataset(&traj, &Sampling { dx: 2.0, dy: None, dt: 2.0 }).unwrap();
    println!("dataset: {} records", ds.records.len());

    let arch = MlpArch::new(vec![2, 20, 20, 20, 20, 3]);
    let schedule = Schedule {
        adam_iters: 10_000,
        lbfgs: LbfgsOptions { max_iters: 3000, ..Default::default() },
        log_every: 100,
        ..Default::default()
    };
    let mut trace = Vec::new();
    let t0 = Instant::now();
    let out = train(
        &ds,
        &arch,
        &schedule,
        &c,
        &LossWeights::default(),
        42,
        &mut trace,
        None,
    )
    .unwrap();
    let dt = t0.elapsed();
    println!(
        "train: {:.2?} ({} evals, {:.1} ms/eval)",
        dt,
        out.evals,
        dt.as_secs_f64() * 1000.0 / out.evals as f64
    );
    for row in &trace {
        if row.iteration % 1000 == 0 || (row.iteration > 10_000 && row.iteration % 200 == 0) {
            println!(
                "iter {:>6}: L={:.3e} (D={:.3e} P={:.3e} B={:.3e}) theta={:?}",
                row.iteration,
                row.loss.total,
                row.loss.data,
                row.loss.pde,
                row.loss.bi,
                row.theta.iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>()
            );
        }
    }
    println!("lbfgs status: {:?}", out.lbfgs);
    println!("theta_hat = {:?}", out.theta_hat.to_vec());
    println!("theta*    = {:?}", theta_star.to_vec());
}
