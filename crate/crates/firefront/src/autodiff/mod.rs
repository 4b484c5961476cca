//! Derivative machinery.
//!
//! Forward mode: [`Jet2`] carries a value, first derivatives along the
//! tagged input directions (x[, y], t) and the pure second derivatives
//! along the spatial directions — exactly the derivatives the PDE
//! residuals consume. No mixed second-order terms are propagated.
//!
//! Reverse mode: [`engine`] runs the jet-augmented forward pass through
//! the surrogate network layer by layer, records the pre-activation jets,
//! and back-propagates adjoints of any scalar built from the output jets
//! into gradients with respect to every weight and bias. Combined with the
//! analytic parameter partials of the residuals (module `pinn`), one
//! backward sweep yields the full gradient over network and physical
//! parameters.

pub mod engine;

use crate::error::{Error, Result};
use crate::net::MlpParams;
pub use engine::{jet_backward, jet_forward, JetWorkspace};

/// Second-order forward-mode carrier for a scalar field over
/// spatiotemporal inputs. Unused lanes (`dy`, `dyy` in 1D) stay zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub val: f64,
    pub dt: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dyy: f64,
}

impl Jet2 {
    pub fn constant(val: f64) -> Self {
        Self { val, ..Default::default() }
    }

    /// Seed for the x coordinate: d/dx = 1.
    pub fn var_x(val: f64) -> Self {
        Self { val, dx: 1.0, ..Default::default() }
    }

    pub fn var_y(val: f64) -> Self {
        Self { val, dy: 1.0, ..Default::default() }
    }

    pub fn var_t(val: f64) -> Self {
        Self { val, dt: 1.0, ..Default::default() }
    }

    pub fn exp(self) -> Self {
        let e = self.val.exp();
        Self {
            val: e,
            dt: e * self.dt,
            dx: e * self.dx,
            dy: e * self.dy,
            dxx: e * (self.dx * self.dx + self.dxx),
            dyy: e * (self.dy * self.dy + self.dyy),
        }
    }

    pub fn recip(self) -> Self {
        let inv = 1.0 / self.val;
        let inv2 = inv * inv;
        let inv3 = inv2 * inv;
        Self {
            val: inv,
            dt: -self.dt * inv2,
            dx: -self.dx * inv2,
            dy: -self.dy * inv2,
            dxx: -self.dxx * inv2 + 2.0 * self.dx * self.dx * inv3,
            dyy: -self.dyy * inv2 + 2.0 * self.dy * self.dy * inv3,
        }
    }

    /// Logistic sigmoid with jet propagation.
    pub fn sigmoid(self) -> Self {
        let s = crate::net::sigmoid_stable(self.val);
        let s1 = s * (1.0 - s);
        let s2 = s1 * (1.0 - 2.0 * s);
        Self {
            val: s,
            dt: s1 * self.dt,
            dx: s1 * self.dx,
            dy: s1 * self.dy,
            dxx: s2 * self.dx * self.dx + s1 * self.dxx,
            dyy: s2 * self.dy * self.dy + s1 * self.dyy,
        }
    }
}

impl std::ops::Add for Jet2 {
    type Output = Jet2;
    fn add(self, rhs: Jet2) -> Jet2 {
        Jet2 {
            val: self.val + rhs.val,
            dt: self.dt + rhs.dt,
            dx: self.dx + rhs.dx,
            dy: self.dy + rhs.dy,
            dxx: self.dxx + rhs.dxx,
            dyy: self.dyy + rhs.dyy,
        }
    }
}

impl std::ops::Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: Jet2) -> Jet2 {
        Jet2 {
            val: self.val - rhs.val,
            dt: self.dt - rhs.dt,
            dx: self.dx - rhs.dx,
            dy: self.dy - rhs.dy,
            dxx: self.dxx - rhs.dxx,
            dyy: self.dyy - rhs.dyy,
        }
    }
}

impl std::ops::Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        Jet2 {
            val: -self.val,
            dt: -self.dt,
            dx: -self.dx,
            dy: -self.dy,
            dxx: -self.dxx,
            dyy: -self.dyy,
        }
    }
}

impl std::ops::Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: Jet2) -> Jet2 {
        // (fg)'' = f''g + 2f'g' + fg'' along each pure direction
        Jet2 {
            val: self.val * rhs.val,
            dt: self.dt * rhs.val + self.val * rhs.dt,
            dx: self.dx * rhs.val + self.val * rhs.dx,
            dy: self.dy * rhs.val + self.val * rhs.dy,
            dxx: self.dxx * rhs.val + 2.0 * self.dx * rhs.dx + self.val * rhs.dxx,
            dyy: self.dyy * rhs.val + 2.0 * self.dy * rhs.dy + self.val * rhs.dyy,
        }
    }
}

impl std::ops::Div for Jet2 {
    type Output = Jet2;
    #[allow(clippy::suspicious_arithmetic_impl)] // division via reciprocal
    fn div(self, rhs: Jet2) -> Jet2 {
        self * rhs.recip()
    }
}

impl std::ops::Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, k: f64) -> Jet2 {
        Jet2 {
            val: self.val * k,
            dt: self.dt * k,
            dx: self.dx * k,
            dy: self.dy * k,
            dxx: self.dxx * k,
            dyy: self.dyy * k,
        }
    }
}

/// Exact input-derivatives of the surrogate network at one point: one jet
/// per output (temperature, endothermic fuel, exothermic fuel).
///
/// `input` is `(x, t)` for a two-input network or `(x, y, t)` for a
/// three-input one; derivatives are taken with respect to these raw
/// network inputs.
pub fn net_jets(params: &MlpParams, input: &[f64]) -> Result<[Jet2; 3]> {
    let dim = match params.arch().n_inputs() {
        2 => 1,
        3 => 2,
        n => {
            return Err(Error::Dimension(format!(
                "jet evaluation expects 2 or 3 network inputs, found {n}"
            )))
        }
    };
    if params.arch().n_outputs() != 3 {
        return Err(Error::Dimension(format!(
            "jet evaluation expects 3 network outputs, found {}",
            params.arch().n_outputs()
        )));
    }
    if input.len() != params.arch().n_inputs() {
        return Err(Error::Dimension(format!(
            "input has {} coordinates, network expects {}",
            input.len(),
            params.arch().n_inputs()
        )));
    }
    let mut ws = JetWorkspace::new(params.arch(), dim);
    let seeds = vec![1.0; dim + 1];
    jet_forward(params, input, &seeds, &mut ws);
    Ok([ws.output_jet(0), ws.output_jet(1), ws.output_jet(2)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::MlpArch;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn jet_arithmetic_is_exact_on_quadratics() {
        // f(x, y, t) = 3x^2 - 2xy + y^2 + 5t - x + 7, evaluated with jet
        // arithmetic, must match the symbolic derivatives to machine
        // precision (degree <= 2 means Taylor rules are exact).
        let (x0, y0, t0) = (1.3, -0.7, 2.1);
        let x = Jet2::var_x(x0);
        let y = Jet2::var_y(y0);
        let t = Jet2::var_t(t0);
        let c = Jet2::constant;
        let f = x * x * c(3.0) + (-(x * y * c(2.0))) + y * y + t * c(5.0) - x + c(7.0);
        assert_abs_diff_eq!(f.val, 3.0 * x0 * x0 - 2.0 * x0 * y0 + y0 * y0 + 5.0 * t0 - x0 + 7.0);
        assert_abs_diff_eq!(f.dx, 6.0 * x0 - 2.0 * y0 - 1.0);
        assert_abs_diff_eq!(f.dy, -2.0 * x0 + 2.0 * y0);
        assert_abs_diff_eq!(f.dt, 5.0);
        assert_abs_diff_eq!(f.dxx, 6.0);
        assert_abs_diff_eq!(f.dyy, 2.0);
    }

    #[test]
    fn jet_division_and_exp_match_finite_differences() {
        let g = |x: f64, t: f64| (x * 0.3 + t * t * 0.1).exp() / (1.0 + x * x);
        let (x0, t0) = (0.4, 0.9);
        let xj = Jet2::var_x(x0);
        let tj = Jet2::var_t(t0);
        let f = (xj * Jet2::constant(0.3) + tj * tj * Jet2::constant(0.1)).exp()
            / (Jet2::constant(1.0) + xj * xj);
        let h = 1e-5;
        let fd_x = (g(x0 + h, t0) - g(x0 - h, t0)) / (2.0 * h);
        let fd_t = (g(x0, t0 + h) - g(x0, t0 - h)) / (2.0 * h);
        let h2 = 1e-4;
        let fd_xx = (g(x0 + h2, t0) - 2.0 * g(x0, t0) + g(x0 - h2, t0)) / (h2 * h2);
        assert_relative_eq!(f.val, g(x0, t0), max_relative = 1e-14);
        assert_relative_eq!(f.dx, fd_x, max_relative = 1e-8);
        assert_relative_eq!(f.dt, fd_t, max_relative = 1e-8);
        assert_relative_eq!(f.dxx, fd_xx, max_relative = 1e-6);
    }

    #[test]
    fn zero_network_has_zero_jets() {
        let arch = MlpArch::new(vec![2, 10, 10, 3]);
        let p = MlpParams::zeros(&arch).unwrap();
        let jets = net_jets(&p, &[0.3, 0.8]).unwrap();
        for j in jets {
            assert_eq!(j, Jet2::constant(0.0));
        }
    }

    fn fd_first(p: &MlpParams, input: &[f64], coord: usize, out: usize, h: f64) -> f64 {
        let mut hi = input.to_vec();
        let mut lo = input.to_vec();
        hi[coord] += h;
        lo[coord] -= h;
        (p.forward(&hi).unwrap()[out] - p.forward(&lo).unwrap()[out]) / (2.0 * h)
    }

    fn fd_second(p: &MlpParams, input: &[f64], coord: usize, out: usize, h: f64) -> f64 {
        let mut hi = input.to_vec();
        let mut lo = input.to_vec();
        hi[coord] += h;
        lo[coord] -= h;
        (p.forward(&hi).unwrap()[out] - 2.0 * p.forward(input).unwrap()[out]
            + p.forward(&lo).unwrap()[out])
            / (h * h)
    }

    #[test]
    fn network_jets_match_finite_differences_1d() {
        let arch = MlpArch::new(vec![2, 20, 20, 20, 20, 3]);
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        for trial in 0..50 {
            let p = MlpParams::init(&arch, trial).unwrap();
            let input = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let jets = net_jets(&p, &input).unwrap();
            for (out, jet) in jets.iter().enumerate() {
                assert_relative_eq!(jet.val, p.forward(&input).unwrap()[out], max_relative = 1e-14);
                let fd_dx = fd_first(&p, &input, 0, out, 1e-5);
                let fd_dt = fd_first(&p, &input, 1, out, 1e-5);
                assert_relative_eq!(jet.dx, fd_dx, max_relative = 1e-6, epsilon = 1e-10);
                assert_relative_eq!(jet.dt, fd_dt, max_relative = 1e-6, epsilon = 1e-10);
                let fd_dxx = fd_second(&p, &input, 0, out, 1e-3);
                assert_relative_eq!(jet.dxx, fd_dxx, max_relative = 1e-4, epsilon = 1e-7);
                assert_eq!(jet.dy, 0.0);
                assert_eq!(jet.dyy, 0.0);
            }
        }
    }

    #[test]
    fn network_jets_match_finite_differences_2d() {
        let arch = MlpArch::new(vec![3, 20, 20, 20, 20, 3]);
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        for trial in 0..50 {
            let p = MlpParams::init(&arch, 1000 + trial).unwrap();
            let input = [
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..1.0),
            ];
            let jets = net_jets(&p, &input).unwrap();
            for (out, jet) in jets.iter().enumerate() {
                assert_relative_eq!(jet.dx, fd_first(&p, &input, 0, out, 1e-5), max_relative = 1e-6, epsilon = 1e-10);
                assert_relative_eq!(jet.dy, fd_first(&p, &input, 1, out, 1e-5), max_relative = 1e-6, epsilon = 1e-10);
                assert_relative_eq!(jet.dt, fd_first(&p, &input, 2, out, 1e-5), max_relative = 1e-6, epsilon = 1e-10);
                assert_relative_eq!(jet.dxx, fd_second(&p, &input, 0, out, 1e-3), max_relative = 1e-4, epsilon = 1e-7);
                assert_relative_eq!(jet.dyy, fd_second(&p, &input, 1, out, 1e-3), max_relative = 1e-4, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn sigmoid_output_head_jets_also_match_finite_differences() {
        let mut arch = MlpArch::new(vec![2, 10, 3]);
        arch.output_activation = crate::net::Activation::Sigmoid;
        let p = MlpParams::init(&arch, 5).unwrap();
        let input = [0.35, 0.6];
        let jets = net_jets(&p, &input).unwrap();
        for (out, jet) in jets.iter().enumerate() {
            assert_relative_eq!(jet.dx, fd_first(&p, &input, 0, out, 1e-5), max_relative = 1e-6, epsilon = 1e-12);
            assert_relative_eq!(jet.dxx, fd_second(&p, &input, 0, out, 1e-3), max_relative = 1e-4, epsilon = 1e-9);
        }
    }
}
