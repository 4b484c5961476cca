//! Residual definitions, the composite data + PDE + boundary/initial loss,
//! and its gradient over network and physical parameters.
//!
//! Conventions (fixed, documented here once):
//! - The data term averages the squared prediction error, summed over the
//!   three state variables, over every record in the dataset.
//! - Collocation points are the interior records' coordinates; the
//!   boundary/initial term uses the boundary- and initial-tagged records
//!   with their stored values as targets.
//! - `total = lambda_s * data + lambda_u * (pde + bi)`, with each term a
//!   plain mean. Empty point sets contribute zero.
//! - Points are reduced in a canonical sorted order with a fixed chunk
//!   size, so the loss and gradient are bitwise reproducible and
//!   independent of record order and thread scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autodiff::{jet_backward, jet_forward, Jet2, JetWorkspace};
use crate::error::{Error, Result};
use crate::fdsolver::{Dataset, Tag};
use crate::model::{rate_endothermic_ext_d, rate_exothermic_ext_d, PhysConstants, PhysParams};
use crate::net::MlpParams;

/// Penalty weights on the supervised and unsupervised loss parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda_s: f64,
    pub lambda_u: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { lambda_s: 1.0, lambda_u: 1.0 }
    }
}

/// PDE residuals at one collocation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
}

impl Residuals {
    pub fn squared_sum(&self) -> f64 {
        self.f1 * self.f1 + self.f2 * self.f2 + self.f3 * self.f3
    }
}

/// Evaluate the three governing-equation residuals from the state jets
/// (ordered temperature, endothermic fuel, exothermic fuel). Jets must
/// carry derivatives with respect to the physical coordinates.
pub fn residuals(jets: &[Jet2; 3], theta: &PhysParams, constants: &PhysConstants) -> Residuals {
    let [t, e, x] = jets;
    let k = &constants.kinetics;
    let (r_e, _) = rate_endothermic_ext_d(t.val, k);
    let (r_x, _) = rate_exothermic_ext_d(t.val, k);
    let mut transport = theta.dispersion[0] * t.dxx - theta.velocity[0] * t.dx;
    if theta.dim() == 2 {
        transport += theta.dispersion[1] * t.dyy - theta.velocity[1] * t.dy;
    }
    let f1 = t.dt - constants.alpha1 * transport + constants.alpha2 * e.val * r_e
        - constants.alpha3 * x.val * r_x
        + constants.alpha4 * theta.heat_loss * (t.val - constants.t_ambient);
    let f2 = e.dt + e.val * r_e;
    let f3 = x.dt + x.val * r_x;
    Residuals { f1, f2, f3 }
}

/// One training sample prepared for the network: normalized inputs in
/// engine order (x[, y], t; trailing entry unused in 1D), raw targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainPoint {
    pub input: [f64; 3],
    pub target: [f64; 3],
    pub tag: Tag,
}

/// The three logical batches of the loss, stored as one canonical list of
/// points with tags. `n_data` counts every point, `n_pde` the interior
/// collocation points, `n_bi` the boundary/initial points.
#[derive(Debug, Clone)]
pub struct Batches {
    pub dim: usize,
    pub points: Vec<TrainPoint>,
    /// Chain-rule seeds mapping network inputs to physical coordinates:
    /// `(1/lx[, 1/ly], 1/t_end)` in engine order.
    pub deriv_seeds: Vec<f64>,
    pub n_data: usize,
    pub n_pde: usize,
    pub n_bi: usize,
}

impl Batches {
    /// Build canonical batches from a dataset: inputs normalized onto the
    /// unit box, points sorted so the reduction order is independent of
    /// record order.
    pub fn from_dataset(ds: &Dataset) -> Result<Self> {
        if ds.records.is_empty() {
            return Err(Error::Config("dataset has no records".into()));
        }
        let norm = ds.norm;
        let t_scale = if norm.t_end > 0.0 { 1.0 / norm.t_end } else { 0.0 };
        let mut points = Vec::with_capacity(ds.records.len());
        for r in &ds.records {
            let input = if ds.dim == 1 {
                [r.x / norm.lx, r.t * t_scale, 0.0]
            } else {
                [r.x / norm.lx, r.y / norm.ly, r.t * t_scale]
            };
            points.push(TrainPoint {
                input,
                target: [r.state.temp, r.state.endo, r.state.exo],
                tag: r.tag,
            });
        }
        points.sort_by(|a, b| {
            (a.tag as u8, a.input[2], a.input[1], a.input[0])
                .partial_cmp(&(b.tag as u8, b.input[2], b.input[1], b.input[0]))
                .expect("finite coordinates")
        });
        let n_pde = points.iter().filter(|p| p.tag == Tag::Interior).count();
        let n_bi = points.len() - n_pde;
        if n_pde == 0 || n_bi == 0 {
            return Err(Error::Config(format!(
                "batches need both interior and boundary/initial points, got {n_pde}/{n_bi}"
            )));
        }
        let deriv_seeds = if ds.dim == 1 {
            vec![1.0 / norm.lx, t_scale]
        } else {
            vec![1.0 / norm.lx, 1.0 / norm.ly, t_scale]
        };
        Ok(Self { dim: ds.dim, n_data: points.len(), points, deriv_seeds, n_pde, n_bi })
    }

    /// Joint gradient length: network parameters then physical parameters.
    pub fn grad_len(&self, params: &MlpParams) -> usize {
        params.len() + 2 * self.dim + 1
    }
}

/// Per-term loss values. `data`, `pde` and `bi` are plain means; `total`
/// applies the weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub data: f64,
    pub pde: f64,
    pub bi: f64,
}

/// Points per reduction chunk; fixed so sums are bitwise reproducible.
const CHUNK: usize = 512;

struct BlockOut {
    sum_data: f64,
    sum_pde: f64,
    sum_bi: f64,
    grad: Option<Vec<f64>>,
}

/// Composite loss without gradients.
pub fn total_loss(
    batches: &Batches,
    params: &MlpParams,
    theta: &PhysParams,
    constants: &PhysConstants,
    weights: &LossWeights,
) -> Result<LossBreakdown> {
    evaluate(batches, params, theta, constants, weights, None)
}

/// Composite loss plus its gradient over `[network params..., theta...]`.
/// `grad` must be sized via [`Batches::grad_len`] and is overwritten.
pub fn loss_gradient(
    batches: &Batches,
    params: &MlpParams,
    theta: &PhysParams,
    constants: &PhysConstants,
    weights: &LossWeights,
    grad: &mut [f64],
) -> Result<LossBreakdown> {
    evaluate(batches, params, theta, constants, weights, Some(grad))
}

fn evaluate(
    batches: &Batches,
    params: &MlpParams,
    theta: &PhysParams,
    constants: &PhysConstants,
    weights: &LossWeights,
    grad: Option<&mut [f64]>,
) -> Result<LossBreakdown> {
    if theta.dim() != batches.dim {
        return Err(Error::Dimension(format!(
            "theta dim {} does not match batch dim {}",
            theta.dim(),
            batches.dim
        )));
    }
    let n_net = params.len();
    let n_theta = theta.len();
    let with_grad = grad.is_some();
    if let Some(g) = &grad {
        if g.len() != n_net + n_theta {
            return Err(Error::Dimension(format!(
                "gradient buffer has {} entries, expected {}",
                g.len(),
                n_net + n_theta
            )));
        }
    }

    let w_data = 2.0 * weights.lambda_s / batches.n_data as f64;
    let w_pde = if batches.n_pde > 0 { 2.0 * weights.lambda_u / batches.n_pde as f64 } else { 0.0 };
    let w_bi = if batches.n_bi > 0 { 2.0 * weights.lambda_u / batches.n_bi as f64 } else { 0.0 };

    let blocks: Vec<BlockOut> = batches
        .points
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut ws = JetWorkspace::new(params.arch(), batches.dim);
            let mut out = BlockOut {
                sum_data: 0.0,
                sum_pde: 0.0,
                sum_bi: 0.0,
                grad: with_grad.then(|| vec![0.0; n_net + n_theta]),
            };
            for p in chunk {
                accumulate_point(
                    p, batches, params, theta, constants, &mut ws, &mut out, w_data, w_pde, w_bi,
                    with_grad,
                );
            }
            out
        })
        .collect();

    let mut sum_data = 0.0;
    let mut sum_pde = 0.0;
    let mut sum_bi = 0.0;
    if let Some(g) = grad {
        g.iter_mut().for_each(|v| *v = 0.0);
        for b in &blocks {
            sum_data += b.sum_data;
            sum_pde += b.sum_pde;
            sum_bi += b.sum_bi;
            for (gi, bi) in g.iter_mut().zip(b.grad.as_ref().unwrap()) {
                *gi += bi;
            }
        }
    } else {
        for b in &blocks {
            sum_data += b.sum_data;
            sum_pde += b.sum_pde;
            sum_bi += b.sum_bi;
        }
    }

    let data = sum_data / batches.n_data as f64;
    let pde = if batches.n_pde > 0 { sum_pde / batches.n_pde as f64 } else { 0.0 };
    let bi = if batches.n_bi > 0 { sum_bi / batches.n_bi as f64 } else { 0.0 };
    let breakdown = LossBreakdown {
        total: weights.lambda_s * data + weights.lambda_u * (pde + bi),
        data,
        pde,
        bi,
    };
    if !breakdown.total.is_finite() {
        let term = if !data.is_finite() {
            "data term"
        } else if !pde.is_finite() {
            "PDE term"
        } else {
            "boundary/initial term"
        };
        return Err(Error::Numeric(format!("{term} is non-finite")));
    }
    Ok(breakdown)
}

#[allow(clippy::too_many_arguments)]
fn accumulate_point(
    p: &TrainPoint,
    batches: &Batches,
    params: &MlpParams,
    theta: &PhysParams,
    constants: &PhysConstants,
    ws: &mut JetWorkspace,
    out: &mut BlockOut,
    w_data: f64,
    w_pde: f64,
    w_bi: f64,
    with_grad: bool,
) {
    let dim = batches.dim;
    let n_in = dim + 1;
    jet_forward(params, &p.input[..n_in], &batches.deriv_seeds, ws);
    let jets = [ws.output_jet(0), ws.output_jet(1), ws.output_jet(2)];

    // squared prediction error, every point
    let err = [
        jets[0].val - p.target[0],
        jets[1].val - p.target[1],
        jets[2].val - p.target[2],
    ];
    let err_sq = err.iter().map(|e| e * e).sum::<f64>();
    out.sum_data += err_sq;

    let interior = p.tag == Tag::Interior;
    let mut res = Residuals { f1: 0.0, f2: 0.0, f3: 0.0 };
    if interior {
        res = residuals(&jets, theta, constants);
        out.sum_pde += res.squared_sum();
    } else {
        out.sum_bi += err_sq;
    }

    if !with_grad {
        return;
    }

    let mut val_bar = [w_data * err[0], w_data * err[1], w_data * err[2]];
    let mut dt_bar = [0.0; 3];
    let mut t_space_bar = Jet2::default(); // dx/dy/dxx/dyy adjoints of T

    if interior {
        let k = &constants.kinetics;
        let (r_e, dr_e) = rate_endothermic_ext_d(jets[0].val, k);
        let (r_x, dr_x) = rate_exothermic_ext_d(jets[0].val, k);
        let (f1, f2, f3) = (w_pde * res.f1, w_pde * res.f2, w_pde * res.f3);
        let a1 = constants.alpha1;

        dt_bar = [f1, f2, f3];
        t_space_bar.dxx = -f1 * a1 * theta.dispersion[0];
        t_space_bar.dx = f1 * a1 * theta.velocity[0];
        if dim == 2 {
            t_space_bar.dyy = -f1 * a1 * theta.dispersion[1];
            t_space_bar.dy = f1 * a1 * theta.velocity[1];
        }
        // temperature value enters through both rates and the loss term
        val_bar[0] += f1
            * (constants.alpha2 * jets[1].val * dr_e - constants.alpha3 * jets[2].val * dr_x
                + constants.alpha4 * theta.heat_loss)
            + f2 * jets[1].val * dr_e
            + f3 * jets[2].val * dr_x;
        val_bar[1] += f1 * constants.alpha2 * r_e + f2 * r_e;
        val_bar[2] += -f1 * constants.alpha3 * r_x + f3 * r_x;

        // physical-parameter partials (F1 is linear in each component)
        let g = out.grad.as_mut().unwrap();
        let gt = &mut g[params.len()..];
        gt[0] += -f1 * a1 * jets[0].dxx;
        if dim == 2 {
            gt[1] += -f1 * a1 * jets[0].dyy;
            gt[2] += f1 * a1 * jets[0].dx;
            gt[3] += f1 * a1 * jets[0].dy;
        } else {
            gt[1] += f1 * a1 * jets[0].dx;
        }
        gt[2 * dim] += f1 * constants.alpha4 * (jets[0].val - constants.t_ambient);
    } else {
        for (vb, e) in val_bar.iter_mut().zip(&err) {
            *vb += w_bi * e;
        }
    }

    let n_out = 3;
    let t_lane = dim + 1;
    {
        let out_bar = ws.output_adjoint_mut();
        for kk in 0..3 {
            out_bar[kk] = val_bar[kk];
            out_bar[t_lane * n_out + kk] = dt_bar[kk];
        }
        out_bar[n_out] = t_space_bar.dx;
        out_bar[(dim + 2) * n_out] = t_space_bar.dxx;
        if dim == 2 {
            out_bar[2 * n_out] = t_space_bar.dy;
            out_bar[(dim + 3) * n_out] = t_space_bar.dyy;
        }
    }
    let g = out.grad.as_mut().unwrap();
    jet_backward(params, ws, &mut g[..params.len()]);
}
