//! Optimization of the joint vector (network parameters, physical
//! parameters): Adam for exploration, then L-BFGS to finish.

pub mod adam;
pub mod lbfgs;

pub use adam::{AdamParams, AdamState};
pub use lbfgs::{lbfgs, LbfgsOptions, LbfgsOutcome, LbfgsStatus};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdsolver::{Dataset, Tag};
use crate::model::{PhysConstants, PhysParams};
use crate::net::{MlpArch, MlpParams};
use crate::pinn::{loss_gradient, Batches, LossBreakdown, LossWeights, TrainPoint};

/// Hybrid training schedule. The physical parameters start from a flat
/// initial guess (1.0 per component by default) and are optimized jointly
/// with the network, unconstrained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub adam_iters: u64,
    pub adam: AdamParams,
    pub lbfgs: LbfgsOptions,
    /// Initial guess for every physical-parameter component.
    pub theta_init: f64,
    /// Trace cadence during the Adam phase (1 = every iteration).
    pub log_every: u64,
    /// Adam minibatch size; 0 trains full-batch. The L-BFGS phase is
    /// always full-batch (it needs a deterministic objective).
    pub batch_size: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            adam_iters: 40_000,
            adam: AdamParams::default(),
            lbfgs: LbfgsOptions::default(),
            theta_init: 1.0,
            log_every: 1,
            batch_size: 0,
        }
    }
}

/// One trace record: the data behind the parameter-convergence plots.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: u64,
    pub loss: LossBreakdown,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub theta_hat: PhysParams,
    pub params: MlpParams,
    pub final_loss: LossBreakdown,
    pub lbfgs: Option<LbfgsStatus>,
    pub evals: usize,
}

/// Checkpoint sink: fires with (iteration, network, theta).
pub type CheckpointFn<'a> = &'a mut dyn FnMut(u64, &MlpParams, &PhysParams) -> Result<()>;

/// Train the surrogate against a dataset and recover the physical
/// parameters. Trace rows stream into `trace`, which the caller keeps
/// even if training aborts.
#[allow(clippy::too_many_arguments)]
pub fn train(
    dataset: &Dataset,
    arch: &MlpArch,
    schedule: &Schedule,
    constants: &PhysConstants,
    weights: &LossWeights,
    init_seed: u64,
    trace: &mut Vec<TraceRow>,
    mut checkpoint: Option<(u64, CheckpointFn<'_>)>,
) -> Result<TrainOutcome> {
    arch.validate()?;
    constants.validate()?;
    let batches = Batches::from_dataset(dataset)?;
    let dim = batches.dim;
    if arch.n_inputs() != dim + 1 || arch.n_outputs() != 3 {
        return Err(Error::Config(format!(
            "architecture {:?} does not fit a {dim}D dataset (needs {} inputs, 3 outputs)",
            arch.widths,
            dim + 1
        )));
    }

    let mut params = MlpParams::init(arch, init_seed)?;
    let n_net = params.len();
    let n_theta = 2 * dim + 1;
    let mut joint = Vec::with_capacity(n_net + n_theta);
    joint.extend_from_slice(params.as_flat());
    joint.extend(std::iter::repeat_n(schedule.theta_init, n_theta));

    let mut grad = vec![0.0; n_net + n_theta];
    let mut evals = 0usize;
    let mut adam_state = AdamState::new(n_net + n_theta, schedule.adam);
    let mut minibatch_rng = ChaCha12Rng::seed_from_u64(init_seed);
    minibatch_rng.set_stream(0x6d62); // distinct from weight-init stream
    let mut indices: Vec<usize> = (0..batches.points.len()).collect();
    let use_minibatch =
        schedule.batch_size > 0 && schedule.batch_size < batches.points.len();

    for it in 0..schedule.adam_iters {
        params.as_flat_mut().copy_from_slice(&joint[..n_net]);
        let theta = PhysParams::from_slice(dim, &joint[n_net..])?;
        let breakdown = if use_minibatch {
            indices.shuffle(&mut minibatch_rng);
            let sub = subset_batches(&batches, &indices[..schedule.batch_size]);
            loss_gradient(&sub, &params, &theta, constants, weights, &mut grad)?
        } else {
            loss_gradient(&batches, &params, &theta, constants, weights, &mut grad)?
        };
        evals += 1;

        if it % schedule.log_every == 0 {
            trace.push(TraceRow {
                iteration: it,
                loss: breakdown,
                theta: joint[n_net..].to_vec(),
            });
        }
        if let Some((every, cb)) = checkpoint.as_mut() {
            if *every > 0 && it % *every == 0 {
                cb(it, &params, &theta)?;
            }
        }
        adam_state.step(&mut joint, &grad)?;
    }

    let adam_iters = schedule.adam_iters;
    let mut lbfgs_status = None;
    if schedule.lbfgs.max_iters > 0 {
        // the objective and the per-iteration callback both touch the
        // trace, so share it through a RefCell
        let shared = std::cell::RefCell::new((trace, None::<LossBreakdown>, params, evals));
        let objective = |x: &[f64], g: &mut [f64]| -> Result<f64> {
            let mut cell = shared.borrow_mut();
            let (_, last, params, evals) = &mut *cell;
            params.as_flat_mut().copy_from_slice(&x[..n_net]);
            let theta = PhysParams::from_slice(dim, &x[n_net..])?;
            let breakdown = loss_gradient(&batches, params, &theta, constants, weights, g)?;
            *evals += 1;
            *last = Some(breakdown);
            Ok(breakdown.total)
        };
        let on_iter = |k: usize, _f: f64, x: &[f64]| {
            let mut cell = shared.borrow_mut();
            let loss = cell.1.expect("objective runs before on_iter");
            cell.0.push(TraceRow {
                iteration: adam_iters + k as u64,
                loss,
                theta: x[n_net..].to_vec(),
            });
        };
        let out = lbfgs(objective, joint, &schedule.lbfgs, on_iter)?;
        joint = out.x;
        lbfgs_status = Some(out.status);
        let inner = shared.into_inner();
        params = inner.2;
        evals = inner.3;
    }

    params.as_flat_mut().copy_from_slice(&joint[..n_net]);
    let theta_hat = PhysParams::from_slice(dim, &joint[n_net..])?;
    let final_loss = loss_gradient(&batches, &params, &theta_hat, constants, weights, &mut grad)?;
    evals += 1;

    Ok(TrainOutcome {
        theta_hat,
        params,
        final_loss,
        lbfgs: lbfgs_status,
        evals,
    })
}

fn subset_batches(batches: &Batches, chosen: &[usize]) -> Batches {
    let mut points: Vec<TrainPoint> = chosen.iter().map(|&i| batches.points[i]).collect();
    points.sort_by(|a, b| {
        (a.tag as u8, a.input[2], a.input[1], a.input[0])
            .partial_cmp(&(b.tag as u8, b.input[2], b.input[1], b.input[0]))
            .expect("finite coordinates")
    });
    let n_pde = points.iter().filter(|p| p.tag == Tag::Interior).count();
    let n_bi = points.len() - n_pde;
    Batches {
        dim: batches.dim,
        n_data: points.len(),
        n_pde,
        n_bi,
        points,
        deriv_seeds: batches.deriv_seeds.clone(),
    }
}
