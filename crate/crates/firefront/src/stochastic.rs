//! Time-correlated Gaussian-process fluctuations of the physical
//! parameters, used to manufacture noisy datasets.
//!
//! Fluctuations are zero-mean with covariance
//! `K_ij = (delta * nominal)^2 * exp(-|t_j - t_i| / zeta)` and are applied
//! independently per parameter component. Draws are reproducible: the same
//! seed yields the same series, and each component uses its own RNG stream.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ParamSeries, PhysParams};

/// Specification of one Gaussian-process fluctuation model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpSpec {
    /// Relative fluctuation magnitude (fraction of the nominal value).
    pub delta: f64,
    /// Correlation time, in the same units as `times`.
    pub zeta: f64,
    pub seed: u64,
    /// Ordered sample times.
    pub times: Vec<f64>,
}

impl GpSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.delta.is_finite() || self.delta < 0.0 {
            return Err(Error::Config(format!("delta must be >= 0, got {}", self.delta)));
        }
        if !self.zeta.is_finite() || self.zeta <= 0.0 {
            return Err(Error::Config(format!("zeta must be > 0, got {}", self.zeta)));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("sample times must be strictly increasing".into()));
        }
        Ok(())
    }
}

/// Dense lower-triangular Cholesky factor of the exponential-kernel
/// covariance, reusable across draws.
pub struct GpSampler {
    n: usize,
    sigma: f64,
    /// Lower factor of the unit-variance kernel, row-major.
    factor: Vec<f64>,
}

impl GpSampler {
    /// Factor the kernel for the given spec. The diagonal jitter schedule
    /// starts at 1e-12 and grows tenfold up to 1e-6 (relative to unit
    /// variance) before giving up.
    pub fn new(spec: &GpSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.times.len();
        let mut kernel = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = (-(spec.times[i] - spec.times[j]).abs() / spec.zeta).exp();
                kernel[i * n + j] = v;
                kernel[j * n + i] = v;
            }
        }
        let mut jitter = 0.0;
        let mut next_jitter = 1e-12;
        loop {
            match cholesky_lower(&kernel, n, jitter) {
                Some(factor) => {
                    return Ok(Self { n, sigma: spec.delta, factor });
                }
                None if next_jitter <= 1e-6 => {
                    jitter = next_jitter;
                    next_jitter *= 10.0;
                }
                None => {
                    return Err(Error::Numeric(
                        "covariance factorization failed after maximum jitter".into(),
                    ));
                }
            }
        }
    }

    /// One zero-mean draw scaled for the given nominal value, using the
    /// RNG stream `stream` of `seed`.
    pub fn draw(&self, nominal: f64, seed: u64, stream: u64) -> Vec<f64> {
        let scale = self.sigma * nominal;
        if scale == 0.0 {
            return vec![0.0; self.n];
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let z: Vec<f64> = (0..self.n).map(|_| StandardNormal.sample(&mut rng)).collect();
        (0..self.n)
            .map(|i| {
                let row = &self.factor[i * self.n..i * self.n + i + 1];
                scale * row.iter().zip(&z).map(|(l, zi)| l * zi).sum::<f64>()
            })
            .collect()
    }
}

/// In-place dense Cholesky of `kernel + jitter*I`; returns the lower factor
/// or `None` on a non-positive pivot.
fn cholesky_lower(kernel: &[f64], n: usize, jitter: f64) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = kernel[i * n + j];
            if i == j {
                sum += jitter;
            }
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// One fluctuation draw `Delta ~ N(0, K)` around zero for the given nominal
/// magnitude (stream 0 of the spec's seed).
pub fn sample_gp(spec: &GpSpec, nominal: f64) -> Result<Vec<f64>> {
    Ok(GpSampler::new(spec)?.draw(nominal, spec.seed, 0))
}

/// Fluctuate every component of `theta_star` independently:
/// `theta(t) = theta* + Delta_theta(t)`, one GP stream per component.
pub fn perturb_params(theta_star: &PhysParams, spec: &GpSpec) -> Result<ParamSeries> {
    theta_star.validate()?;
    let sampler = GpSampler::new(spec)?;
    let nominal = theta_star.to_vec();
    let draws: Vec<Vec<f64>> = nominal
        .iter()
        .enumerate()
        .map(|(c, &v)| sampler.draw(v, spec.seed, c as u64))
        .collect();
    let values = (0..spec.times.len())
        .map(|i| {
            nominal
                .iter()
                .enumerate()
                .map(|(c, &v)| v + draws[c][i])
                .collect()
        })
        .collect();
    Ok(ParamSeries { dim: theta_star.dim(), times: spec.times.clone(), values })
}
