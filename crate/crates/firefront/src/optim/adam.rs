//! Adam with bias correction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self { lr: 3e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First/second moment estimates over one flat parameter vector.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub hyper: AdamParams,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamState {
    pub fn new(n: usize, hyper: AdamParams) -> Self {
        Self { hyper, m: vec![0.0; n], v: vec![0.0; n], step: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update of `x` in place.
    pub fn step(&mut self, x: &mut [f64], grad: &[f64]) -> Result<()> {
        if grad.len() != self.m.len() || x.len() != self.m.len() {
            return Err(Error::Dimension(format!(
                "adam state sized {} got x {} and grad {}",
                self.m.len(),
                x.len(),
                grad.len()
            )));
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numeric("non-finite gradient in Adam step".into()));
        }
        self.step += 1;
        let h = self.hyper;
        let bc1 = 1.0 - h.beta1.powi(self.step as i32);
        let bc2 = 1.0 - h.beta2.powi(self.step as i32);
        for i in 0..x.len() {
            let g = grad[i];
            self.m[i] = h.beta1 * self.m[i] + (1.0 - h.beta1) * g;
            self.v[i] = h.beta2 * self.v[i] + (1.0 - h.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            x[i] -= h.lr * m_hat / (v_hat.sqrt() + h.eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut st = AdamState::new(4, AdamParams::default());
        let mut x = vec![1.0, -2.0, 0.5, 3.0];
        let before = x.clone();
        st.step(&mut x, &[0.0; 4]).unwrap();
        assert_eq!(x, before);
    }

    #[test]
    fn first_step_magnitude_is_the_learning_rate_up_to_eps() {
        // With bias correction, the first update is
        // -lr * g / (|g| + eps) per coordinate.
        let hyper = AdamParams { lr: 0.01, ..Default::default() };
        let mut st = AdamState::new(3, hyper);
        let mut x = vec![0.0; 3];
        let g = [2.5, -0.03, 1e-3];
        st.step(&mut x, &g).unwrap();
        for i in 0..3 {
            let expected = -hyper.lr * g[i] / (g[i].abs() + hyper.eps);
            assert_relative_eq!(x[i], expected, max_relative = 1e-12);
            assert!(x[i].abs() <= hyper.lr * (1.0 + 1e-9));
        }
    }

    #[test]
    fn identical_runs_produce_identical_iterates() {
        let run = || {
            let mut st = AdamState::new(2, AdamParams::default());
            let mut x = vec![1.0, -1.0];
            for k in 0..200 {
                // deterministic pseudo-gradient
                let g = [x[0] * 0.3 + (k as f64 * 0.1).sin(), x[1] - 0.2];
                st.step(&mut x, &g).unwrap();
            }
            x
        };
        let a = run();
        let b = run();
        assert_eq!(a[0].to_bits(), b[0].to_bits());
        assert_eq!(a[1].to_bits(), b[1].to_bits());
    }

    #[test]
    fn rejects_non_finite_gradients() {
        let mut st = AdamState::new(2, AdamParams::default());
        let mut x = vec![0.0; 2];
        assert!(st.step(&mut x, &[f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn converges_on_a_quadratic_bowl() {
        let hyper = AdamParams { lr: 0.05, ..Default::default() };
        let mut st = AdamState::new(2, hyper);
        let mut x = vec![4.0, -3.0];
        for _ in 0..3000 {
            let g = [2.0 * (x[0] - 1.0), 2.0 * (x[1] + 2.0)];
            st.step(&mut x, &g).unwrap();
        }
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-3);
        assert_relative_eq!(x[1], -2.0, epsilon = 1e-3);
    }
}
