//! Fully-connected feed-forward surrogate network.
//!
//! Parameters live in one flat vector with fixed layer-major ordering
//! (`W^1` row-major, `b^1`, `W^2`, `b^2`, ...). Gradients produced by the
//! autodiff machinery use the same ordering, so the optimizer can treat
//! network parameters and physical parameters as one joint vector.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Linear,
}

/// Layer widths plus activation kinds. Hidden layers default to the
/// logistic sigmoid; the output layer is affine unless configured
/// otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpArch {
    pub widths: Vec<usize>,
    #[serde(default = "sigmoid")]
    pub hidden_activation: Activation,
    #[serde(default = "linear")]
    pub output_activation: Activation,
}

fn sigmoid() -> Activation {
    Activation::Sigmoid
}

fn linear() -> Activation {
    Activation::Linear
}

impl MlpArch {
    pub fn new(widths: Vec<usize>) -> Self {
        Self {
            widths,
            hidden_activation: Activation::Sigmoid,
            output_activation: Activation::Linear,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.len() < 2 {
            return Err(Error::Config("architecture needs at least two layers".into()));
        }
        if self.widths.contains(&0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        Ok(())
    }

    pub fn n_inputs(&self) -> usize {
        self.widths[0]
    }

    pub fn n_outputs(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn n_layers(&self) -> usize {
        self.widths.len() - 1
    }
}

/// Total parameter count: `sum over layers of (fan_in + 1) * fan_out`.
pub fn count_params(arch: &MlpArch) -> usize {
    arch.widths.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
}

/// Network parameters as a flat vector plus the architecture that shapes it.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    arch: MlpArch,
    data: Vec<f64>,
    /// Flat offset of each layer's weight block.
    offsets: Vec<usize>,
}

impl MlpParams {
    pub fn zeros(arch: &MlpArch) -> Result<Self> {
        arch.validate()?;
        let n = count_params(arch);
        Ok(Self {
            arch: arch.clone(),
            data: vec![0.0; n],
            offsets: layer_offsets(arch),
        })
    }

    /// Glorot-uniform weights (`+-sqrt(6/(fan_in+fan_out))`), zero biases,
    /// reproducible from the seed.
    pub fn init(arch: &MlpArch, seed: u64) -> Result<Self> {
        let mut p = Self::zeros(arch)?;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        for l in 0..arch.n_layers() {
            let (n_in, n_out) = (arch.widths[l], arch.widths[l + 1]);
            let bound = (6.0 / (n_in + n_out) as f64).sqrt();
            let off = p.offsets[l];
            for w in &mut p.data[off..off + n_in * n_out] {
                *w = rng.gen_range(-bound..bound);
            }
            // biases stay zero
        }
        Ok(p)
    }

    pub fn from_flat(arch: &MlpArch, data: Vec<f64>) -> Result<Self> {
        arch.validate()?;
        let expected = count_params(arch);
        if data.len() != expected {
            return Err(Error::Dimension(format!(
                "flat vector has {} entries, architecture needs {expected}",
                data.len()
            )));
        }
        Ok(Self {
            arch: arch.clone(),
            data,
            offsets: layer_offsets(arch),
        })
    }

    pub fn arch(&self) -> &MlpArch {
        &self.arch
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Weight matrix of layer `l`, row-major `(n_out x n_in)`.
    pub fn weights(&self, l: usize) -> &[f64] {
        let (n_in, n_out) = (self.arch.widths[l], self.arch.widths[l + 1]);
        &self.data[self.offsets[l]..self.offsets[l] + n_in * n_out]
    }

    pub fn biases(&self, l: usize) -> &[f64] {
        let (n_in, n_out) = (self.arch.widths[l], self.arch.widths[l + 1]);
        let start = self.offsets[l] + n_in * n_out;
        &self.data[start..start + n_out]
    }

    /// Flat offset of layer `l`'s weight block; biases follow the weights.
    pub fn layer_offset(&self, l: usize) -> usize {
        self.offsets[l]
    }

    /// Plain forward evaluation.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.arch.n_inputs() {
            return Err(Error::Dimension(format!(
                "input has {} entries, network expects {}",
                input.len(),
                self.arch.n_inputs()
            )));
        }
        let mut act = input.to_vec();
        let last = self.arch.n_layers() - 1;
        for l in 0..=last {
            let (n_in, n_out) = (self.arch.widths[l], self.arch.widths[l + 1]);
            let w = self.weights(l);
            let b = self.biases(l);
            let mut next = vec![0.0; n_out];
            for o in 0..n_out {
                let row = &w[o * n_in..(o + 1) * n_in];
                let mut z = b[o];
                for (wi, ai) in row.iter().zip(&act) {
                    z += wi * ai;
                }
                next[o] = z;
            }
            let activation = if l == last {
                self.arch.output_activation
            } else {
                self.arch.hidden_activation
            };
            if activation == Activation::Sigmoid {
                for v in &mut next {
                    *v = sigmoid_stable(*v);
                }
            }
            act = next;
        }
        Ok(act)
    }
}

fn layer_offsets(arch: &MlpArch) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(arch.n_layers());
    let mut off = 0;
    for w in arch.widths.windows(2) {
        offsets.push(off);
        off += (w[0] + 1) * w[1];
    }
    offsets
}

/// Overflow-safe logistic sigmoid.
#[inline]
pub fn sigmoid_stable(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn parameter_counts_match_known_architectures() {
        assert_eq!(count_params(&MlpArch::new(vec![2, 20, 20, 20, 20, 3])), 1383);
        assert_eq!(count_params(&MlpArch::new(vec![3, 20, 20, 20, 20, 3])), 1403);
        assert_eq!(count_params(&MlpArch::new(vec![1, 1])), 2);
    }

    #[test]
    fn zero_network_outputs_zero() {
        let arch = MlpArch::new(vec![2, 8, 3]);
        let p = MlpParams::zeros(&arch).unwrap();
        let out = p.forward(&[0.3, -1.2]).unwrap();
        // hidden sigmoids saturate to 1/2, but output weights are zero
        assert_eq!(out, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_weights_with_output_bias_is_input_independent() {
        let arch = MlpArch::new(vec![2, 4, 3]);
        let mut p = MlpParams::zeros(&arch).unwrap();
        let n = p.len();
        // output biases are the last three flat entries
        p.as_flat_mut()[n - 3..].copy_from_slice(&[0.5, -1.0, 2.0]);
        for input in [[0.0, 0.0], [1.0, -4.0], [100.0, 3.0]] {
            assert_eq!(p.forward(&input).unwrap(), vec![0.5, -1.0, 2.0]);
        }
    }

    #[test]
    fn forward_is_deterministic() {
        let arch = MlpArch::new(vec![2, 20, 20, 3]);
        let p = MlpParams::init(&arch, 42).unwrap();
        let a = p.forward(&[0.25, 0.75]).unwrap();
        let b = p.forward(&[0.25, 0.75]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn init_is_reproducible_and_sized() {
        let arch = MlpArch::new(vec![2, 20, 20, 20, 20, 3]);
        let a = MlpParams::init(&arch, 7).unwrap();
        let b = MlpParams::init(&arch, 7).unwrap();
        assert_eq!(a.as_flat(), b.as_flat());
        assert_eq!(a.len(), 1383);
        assert_ne!(a.as_flat(), MlpParams::init(&arch, 8).unwrap().as_flat());
    }

    #[test]
    fn init_weights_have_near_zero_mean() {
        // Monte-Carlo check of the initializer: the sample mean of a
        // 20-wide layer's weights should sit within 3 sigma of zero for
        // the uniform(-b, b) scheme (sd = b/sqrt(3)).
        let arch = MlpArch::new(vec![20, 20, 20, 20, 20, 20, 20, 20, 20, 20, 20, 20, 20, 20, 3]);
        let p = MlpParams::init(&arch, 3).unwrap();
        let w: Vec<f64> = (0..13).flat_map(|l| p.weights(l).to_vec()).collect();
        assert!(w.len() >= 10_000 / 2);
        let n = w.len() as f64;
        let mean = w.iter().sum::<f64>() / n;
        let bound = (6.0 / 40.0f64).sqrt();
        let sd = bound / 3.0f64.sqrt();
        assert!(mean.abs() < 3.0 * sd / n.sqrt(), "mean {mean}");
    }

    #[test]
    fn init_biases_are_zero() {
        let arch = MlpArch::new(vec![2, 20, 3]);
        let p = MlpParams::init(&arch, 11).unwrap();
        assert!(p.biases(0).iter().all(|&b| b == 0.0));
        assert!(p.biases(1).iter().all(|&b| b == 0.0));
    }

    #[test]
    fn hidden_activations_stay_in_the_open_unit_interval() {
        let arch = MlpArch::new(vec![2, 30, 1]);
        let mut p = MlpParams::init(&arch, 5).unwrap();
        // stretch the weights toward (but not past) f64 saturation
        for w in p.as_flat_mut().iter_mut() {
            *w *= 5.0;
        }
        // reconstruct hidden activations by hand
        let w = p.weights(0).to_vec();
        let b = p.biases(0).to_vec();
        for input in [[0.9, 0.1], [-3.0, 2.0]] {
            for o in 0..30 {
                let z = b[o] + w[o * 2] * input[0] + w[o * 2 + 1] * input[1];
                let a = sigmoid_stable(z);
                assert!(a > 0.0 && a < 1.0);
            }
        }
    }

    #[test]
    fn sigmoid_stable_handles_extremes() {
        assert_eq!(sigmoid_stable(1000.0), 1.0);
        assert_eq!(sigmoid_stable(-1000.0), 0.0);
        assert_relative_eq!(sigmoid_stable(0.0), 0.5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn flat_round_trip_is_lossless(seed in 0u64..1000) {
            let arch = MlpArch::new(vec![3, 7, 5, 3]);
            let p = MlpParams::init(&arch, seed).unwrap();
            let flat = p.as_flat().to_vec();
            let back = MlpParams::from_flat(&arch, flat.clone()).unwrap();
            prop_assert_eq!(back.as_flat(), &flat[..]);
            // views agree with the flat layout
            let mut rebuilt = Vec::new();
            for l in 0..arch.n_layers() {
                rebuilt.extend_from_slice(back.weights(l));
                rebuilt.extend_from_slice(back.biases(l));
            }
            prop_assert_eq!(rebuilt, flat);
        }
    }
}
