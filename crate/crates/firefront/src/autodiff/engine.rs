//! Layer-wise jet propagation through the surrogate network and the
//! matching reverse pass.
//!
//! Jets are stored lane-major per layer: lane 0 is the value, lanes
//! `1..=dim` the spatial first derivatives, lane `dim+1` the time
//! derivative, and lanes `dim+2..` the pure spatial second derivatives
//! (lane `dim+2+s` pairs with first-derivative lane `1+s`). The linear
//! layers act identically on every lane (bias on the value lane only);
//! the sigmoid couples lanes through its Taylor rules.

use crate::autodiff::Jet2;
use crate::net::{Activation, MlpArch, MlpParams};

/// Reusable buffers for one point's forward and backward sweep. The
/// recorded pre-activation jets are the tape the reverse pass consumes.
pub struct JetWorkspace {
    dim: usize,
    lanes: usize,
    widths: Vec<usize>,
    /// Activations per layer (index 0 = network input), lane-major.
    act: Vec<Vec<f64>>,
    /// Pre-activations per processing layer, lane-major.
    pre: Vec<Vec<f64>>,
    /// Adjoint scratch, same shapes.
    act_bar: Vec<Vec<f64>>,
    pre_bar: Vec<Vec<f64>>,
    hidden_activation: Activation,
    output_activation: Activation,
}

impl JetWorkspace {
    pub fn new(arch: &MlpArch, dim: usize) -> Self {
        let lanes = 2 + 2 * dim;
        let widths = arch.widths.clone();
        let act = widths.iter().map(|w| vec![0.0; w * lanes]).collect();
        let pre = widths[1..].iter().map(|w| vec![0.0; w * lanes]).collect();
        let act_bar = widths.iter().map(|w| vec![0.0; w * lanes]).collect();
        let pre_bar = widths[1..].iter().map(|w| vec![0.0; w * lanes]).collect();
        Self {
            dim,
            lanes,
            widths,
            act,
            pre,
            act_bar,
            pre_bar,
            hidden_activation: arch.hidden_activation,
            output_activation: arch.output_activation,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lanes(&self) -> usize {
        self.lanes
    }

    fn t_lane(&self) -> usize {
        self.dim + 1
    }

    fn second_lane(&self, s: usize) -> usize {
        self.dim + 2 + s
    }

    /// Output value of neuron `k` in the last layer.
    pub fn output_value(&self, k: usize) -> f64 {
        self.act.last().unwrap()[k]
    }

    /// Assemble the jet of output neuron `k`.
    pub fn output_jet(&self, k: usize) -> Jet2 {
        let out = self.act.last().unwrap();
        let w = *self.widths.last().unwrap();
        let lane = |c: usize| out[c * w + k];
        Jet2 {
            val: lane(0),
            dx: lane(1),
            dy: if self.dim == 2 { lane(2) } else { 0.0 },
            dt: lane(self.t_lane()),
            dxx: lane(self.second_lane(0)),
            dyy: if self.dim == 2 { lane(self.second_lane(1)) } else { 0.0 },
        }
    }

    /// Lane-major mutable view of the output adjoint buffer
    /// (`lanes x n_out`), zeroed.
    pub fn output_adjoint_mut(&mut self) -> &mut [f64] {
        let buf = self.act_bar.last_mut().unwrap();
        buf.iter_mut().for_each(|v| *v = 0.0);
        buf
    }
}

/// Forward sweep. `input` holds the raw network inputs (x[, y], t);
/// `seeds` holds the first-derivative seed of each input coordinate, which
/// is 1 for derivatives with respect to the raw inputs or the chain-rule
/// factor (e.g. `1/Lx`) for derivatives with respect to the underlying
/// physical coordinates.
pub fn jet_forward(params: &MlpParams, input: &[f64], seeds: &[f64], ws: &mut JetWorkspace) {
    let lanes = ws.lanes;
    let n_in = ws.widths[0];
    debug_assert_eq!(input.len(), n_in);
    debug_assert_eq!(seeds.len(), n_in);

    let a0 = &mut ws.act[0];
    a0.iter_mut().for_each(|v| *v = 0.0);
    for j in 0..n_in {
        a0[j] = input[j];
        // coordinate j drives first-derivative lane 1 + j
        a0[(1 + j) * n_in + j] = seeds[j];
    }

    let n_layers = ws.widths.len() - 1;
    for l in 0..n_layers {
        let (n_prev, n_out) = (ws.widths[l], ws.widths[l + 1]);
        let w = params.weights(l);
        let b = params.biases(l);
        let (before, after) = ws.act.split_at_mut(l + 1);
        let a_prev = &before[l];
        let z = &mut ws.pre[l];
        // linear map on every lane, bias on the value lane
        for c in 0..lanes {
            let src = &a_prev[c * n_prev..(c + 1) * n_prev];
            let dst = &mut z[c * n_out..(c + 1) * n_out];
            for o in 0..n_out {
                let row = &w[o * n_prev..(o + 1) * n_prev];
                let mut acc = if c == 0 { b[o] } else { 0.0 };
                for i in 0..n_prev {
                    acc += row[i] * src[i];
                }
                dst[o] = acc;
            }
        }
        let activation = if l == n_layers - 1 {
            ws.output_activation
        } else {
            ws.hidden_activation
        };
        let a_next = &mut after[0];
        match activation {
            Activation::Linear => a_next.copy_from_slice(z),
            Activation::Sigmoid => sigmoid_lanes(z, a_next, n_out, ws.dim),
        }
    }
}

/// Taylor rules of the logistic sigmoid applied neuron-wise across lanes.
fn sigmoid_lanes(z: &[f64], a: &mut [f64], width: usize, dim: usize) {
    let t_lane = dim + 1;
    for n in 0..width {
        let s = crate::net::sigmoid_stable(z[n]);
        let s1 = s * (1.0 - s);
        let s2 = s1 * (1.0 - 2.0 * s);
        a[n] = s;
        for g in 1..=t_lane {
            a[g * width + n] = s1 * z[g * width + n];
        }
        for sdir in 0..dim {
            let h = (dim + 2 + sdir) * width + n;
            let zg = z[(1 + sdir) * width + n];
            a[h] = s2 * zg * zg + s1 * z[h];
        }
    }
}

/// Reverse sweep. `out_bar` is the lane-major adjoint of the network
/// output jets (`lanes x n_out`, as produced by
/// [`JetWorkspace::output_adjoint_mut`]); gradients accumulate into
/// `grad`, whose layout matches the flat parameter vector.
pub fn jet_backward(params: &MlpParams, ws: &mut JetWorkspace, grad: &mut [f64]) {
    let lanes = ws.lanes;
    let dim = ws.dim;
    let t_lane = dim + 1;
    let n_layers = ws.widths.len() - 1;
    debug_assert_eq!(grad.len(), params.len());

    for l in (0..n_layers).rev() {
        let (n_prev, n_out) = (ws.widths[l], ws.widths[l + 1]);
        let activation = if l == n_layers - 1 {
            ws.output_activation
        } else {
            ws.hidden_activation
        };

        // adjoint through the activation: act_bar[l+1] -> pre_bar[l]
        {
            let a_bar = &ws.act_bar[l + 1];
            let z = &ws.pre[l];
            let z_bar = &mut ws.pre_bar[l];
            match activation {
                Activation::Linear => z_bar.copy_from_slice(a_bar),
                Activation::Sigmoid => {
                    for n in 0..n_out {
                        let s = crate::net::sigmoid_stable(z[n]);
                        let s1 = s * (1.0 - s);
                        let s2 = s1 * (1.0 - 2.0 * s);
                        let s3 = s2 * (1.0 - 2.0 * s) - 2.0 * s1 * s1;
                        // value lane collects contributions from every lane
                        let mut zv = a_bar[n] * s1;
                        for g in 1..=t_lane {
                            zv += a_bar[g * n_out + n] * s2 * z[g * n_out + n];
                        }
                        for sdir in 0..dim {
                            let h = (dim + 2 + sdir) * n_out + n;
                            let zg = z[(1 + sdir) * n_out + n];
                            zv += a_bar[h] * (s3 * zg * zg + s2 * z[h]);
                        }
                        z_bar[n] = zv;
                        for g in 1..=t_lane {
                            let mut v = a_bar[g * n_out + n] * s1;
                            if g >= 1 && g <= dim {
                                let h = (dim + 2 + (g - 1)) * n_out + n;
                                v += a_bar[h] * 2.0 * s2 * z[g * n_out + n];
                            }
                            z_bar[g * n_out + n] = v;
                        }
                        for sdir in 0..dim {
                            let h = (dim + 2 + sdir) * n_out + n;
                            z_bar[h] = a_bar[h] * s1;
                        }
                    }
                }
            }
        }

        // parameter gradients and adjoint through the linear map
        let w = params.weights(l);
        let off = params.layer_offset(l);
        let (gw, gb) = grad[off..off + (n_prev + 1) * n_out].split_at_mut(n_prev * n_out);
        let a_prev = &ws.act[l];
        let z_bar = &ws.pre_bar[l];
        for o in 0..n_out {
            gb[o] += z_bar[o];
        }
        for c in 0..lanes {
            let zb = &z_bar[c * n_out..(c + 1) * n_out];
            let ap = &a_prev[c * n_prev..(c + 1) * n_prev];
            for o in 0..n_out {
                let zbo = zb[o];
                if zbo == 0.0 {
                    continue;
                }
                let row = &mut gw[o * n_prev..(o + 1) * n_prev];
                for i in 0..n_prev {
                    row[i] += zbo * ap[i];
                }
            }
        }
        if l > 0 {
            let a_bar_prev = &mut ws.act_bar[l];
            a_bar_prev.iter_mut().for_each(|v| *v = 0.0);
            for c in 0..lanes {
                let zb = &z_bar[c * n_out..(c + 1) * n_out];
                let ab = &mut a_bar_prev[c * n_prev..(c + 1) * n_prev];
                for o in 0..n_out {
                    let zbo = zb[o];
                    if zbo == 0.0 {
                        continue;
                    }
                    let row = &w[o * n_prev..(o + 1) * n_prev];
                    for i in 0..n_prev {
                        ab[i] += zbo * row[i];
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::MlpArch;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    /// Scalar probe built from the output jets with fixed coefficients,
    /// used to exercise every lane of the backward pass.
    fn probe(params: &MlpParams, dim: usize, input: &[f64]) -> f64 {
        let mut ws = JetWorkspace::new(params.arch(), dim);
        jet_forward(params, input, &[1.0; 3][..dim + 1], &mut ws);
        let mut acc = 0.0;
        for k in 0..3 {
            let j = ws.output_jet(k);
            let lin = 0.3 * j.val + 0.7 * j.dt - 0.4 * j.dx + 0.2 * j.dxx
                + if dim == 2 { 0.5 * j.dy - 0.6 * j.dyy } else { 0.0 };
            acc += lin * lin;
        }
        acc
    }

    fn probe_grad(params: &MlpParams, dim: usize, input: &[f64]) -> Vec<f64> {
        let mut ws = JetWorkspace::new(params.arch(), dim);
        jet_forward(params, input, &vec![1.0; dim + 1], &mut ws);
        let n_out = 3;
        let mut seeds = [(0.0, [0.0; 6]); 3];
        for (k, s) in seeds.iter_mut().enumerate() {
            let j = ws.output_jet(k);
            let lin = 0.3 * j.val + 0.7 * j.dt - 0.4 * j.dx + 0.2 * j.dxx
                + if dim == 2 { 0.5 * j.dy - 0.6 * j.dyy } else { 0.0 };
            s.0 = 2.0 * lin;
            s.1 = [0.3, 0.7, -0.4, 0.2, 0.5, -0.6];
        }
        {
            let t_lane = dim + 1;
            let out_bar = ws.output_adjoint_mut();
            for (k, (scale, coef)) in seeds.iter().enumerate() {
                out_bar[k] += scale * coef[0];
                out_bar[t_lane * n_out + k] += scale * coef[1];
                out_bar[n_out + k] += scale * coef[2];
                out_bar[(dim + 2) * n_out + k] += scale * coef[3];
                if dim == 2 {
                    out_bar[2 * n_out + k] += scale * coef[4];
                    out_bar[(dim + 3) * n_out + k] += scale * coef[5];
                }
            }
        }
        let mut grad = vec![0.0; params.len()];
        jet_backward(params, &mut ws, &mut grad);
        grad
    }

    #[test]
    fn backward_matches_finite_differences_over_all_parameters() {
        for (dim, widths) in [(1usize, vec![2, 8, 7, 3]), (2usize, vec![3, 8, 7, 3])] {
            let arch = MlpArch::new(widths);
            let params = MlpParams::init(&arch, 31 + dim as u64).unwrap();
            let mut rng = ChaCha12Rng::seed_from_u64(4);
            let input: Vec<f64> = (0..dim + 1).map(|_| rng.gen_range(0.1..0.9)).collect();
            let grad = probe_grad(&params, dim, &input);
            let h = 1e-5;
            let mut checked = 0;
            for i in (0..params.len()).step_by(3) {
                let mut hi = params.clone();
                hi.as_flat_mut()[i] += h;
                let mut lo = params.clone();
                lo.as_flat_mut()[i] -= h;
                let fd = (probe(&hi, dim, &input) - probe(&lo, dim, &input)) / (2.0 * h);
                if fd.abs() > 1e-7 || grad[i].abs() > 1e-7 {
                    assert_relative_eq!(grad[i], fd, max_relative = 1e-5, epsilon = 1e-9);
                    checked += 1;
                }
            }
            assert!(checked > 20, "only {checked} coordinates exercised");
        }
    }

    #[test]
    fn value_only_adjoint_reduces_to_plain_backprop() {
        // With adjoints only on the value lane, the gradient must equal
        // finite differences of the plain forward pass.
        let arch = MlpArch::new(vec![2, 6, 3]);
        let params = MlpParams::init(&arch, 9).unwrap();
        let input = [0.2, 0.6];
        let mut ws = JetWorkspace::new(&arch, 1);
        jet_forward(&params, &input, &[1.0, 1.0], &mut ws);
        let v0 = ws.output_value(1);
        {
            let out_bar = ws.output_adjoint_mut();
            out_bar[1] = 1.0; // d/d(output 1 value)
        }
        let mut grad = vec![0.0; params.len()];
        jet_backward(&params, &mut ws, &mut grad);
        let h = 1e-6;
        for i in [0, 3, 7, 12, params.len() - 2] {
            let mut hi = params.clone();
            hi.as_flat_mut()[i] += h;
            let mut lo = params.clone();
            lo.as_flat_mut()[i] -= h;
            let fd = (hi.forward(&input).unwrap()[1] - lo.forward(&input).unwrap()[1]) / (2.0 * h);
            assert_relative_eq!(grad[i], fd, max_relative = 1e-6, epsilon = 1e-10);
        }
        let _ = v0;
    }

    #[test]
    fn chain_rule_seeds_scale_first_and_second_derivatives() {
        let arch = MlpArch::new(vec![2, 10, 3]);
        let params = MlpParams::init(&arch, 21).unwrap();
        let input = [0.45, 0.3];
        let mut raw = JetWorkspace::new(&arch, 1);
        jet_forward(&params, &input, &[1.0, 1.0], &mut raw);
        let mut scaled = JetWorkspace::new(&arch, 1);
        let (sx, st) = (0.01, 0.005);
        jet_forward(&params, &input, &[sx, st], &mut scaled);
        for k in 0..3 {
            let a = raw.output_jet(k);
            let b = scaled.output_jet(k);
            assert_relative_eq!(b.dx, a.dx * sx, max_relative = 1e-13);
            assert_relative_eq!(b.dt, a.dt * st, max_relative = 1e-13);
            assert_relative_eq!(b.dxx, a.dxx * sx * sx, max_relative = 1e-13);
        }
    }
}
