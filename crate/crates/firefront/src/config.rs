//! Run configuration: one TOML document describing simulation, sampling,
//! noise, network, training and seeds. Every command writes its fully
//! resolved configuration next to its outputs so a run can be repeated
//! exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdsolver::{Grid, InitialCondition, Sampling};
use crate::model::{PhysConstants, PhysParams};
use crate::net::{Activation, MlpArch};
use crate::optim::{AdamParams, LbfgsOptions, Schedule};
use crate::pinn::LossWeights;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSection {
    pub dim: usize,
    pub lx: f64,
    pub nx: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ly: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
    pub t_end: f64,
    pub nt: usize,
    /// Explicit internal step; omitted means automatic subdivision under
    /// the stability bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim_dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSection {
    pub enabled: bool,
    /// Relative fluctuation magnitude.
    pub delta: f64,
    /// Correlation time in dimensionless units (t / t_end).
    pub zeta: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { enabled: false, delta: 0.05, zeta: 0.005 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetSection {
    pub widths: Vec<usize>,
    #[serde(default = "default_output_activation")]
    pub output_activation: Activation,
}

fn default_output_activation() -> Activation {
    Activation::Linear
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSection {
    pub adam_iters: u64,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub epsilon: f64,
    pub lbfgs_max_iters: usize,
    #[serde(default = "default_memory")]
    pub lbfgs_memory: usize,
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
    #[serde(default = "default_step_tol")]
    pub step_tol: f64,
    #[serde(default = "default_theta_init")]
    pub theta_init: f64,
    #[serde(default = "default_log_every")]
    pub log_every: u64,
    #[serde(default)]
    pub checkpoint_every: u64,
    /// Adam minibatch size; 0 = full batch.
    #[serde(default)]
    pub batch_size: usize,
    #[serde(default = "default_lambda")]
    pub lambda_s: f64,
    #[serde(default = "default_lambda")]
    pub lambda_u: f64,
}

fn default_lr() -> f64 {
    3e-4
}
fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}
fn default_memory() -> usize {
    10
}
fn default_grad_tol() -> f64 {
    1e-9
}
fn default_step_tol() -> f64 {
    1e-12
}
fn default_theta_init() -> f64 {
    1.0
}
fn default_log_every() -> u64 {
    1
}
fn default_lambda() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedsSection {
    /// Network weight initialization.
    pub init: u64,
    /// Gaussian-process parameter fluctuations.
    pub noise: u64,
}

impl Default for SeedsSection {
    fn default() -> Self {
        Self { init: 1, noise: 2 }
    }
}

/// The complete run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    #[serde(default = "default_version")]
    pub version: u32,
    pub grid: GridSection,
    pub initial: InitialCondition,
    #[serde(default = "PhysConstants::canonical")]
    pub constants: PhysConstants,
    /// True parameters for data generation and error reporting.
    pub theta: PhysParams,
    pub sampling: Sampling,
    #[serde(default)]
    pub noise: NoiseSection,
    pub net: NetSection,
    pub train: TrainSection,
    #[serde(default)]
    pub seeds: SeedsSection,
}

fn default_version() -> u32 {
    1
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Config = toml::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("config serialization failed: {e}")))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        let g = &self.grid;
        match g.dim {
            1 => Grid::new_1d(g.lx, g.nx, g.t_end, g.nt),
            2 => {
                let ly = g.ly.ok_or_else(|| Error::Config("2D grid requires ly".into()))?;
                let ny = g.ny.ok_or_else(|| Error::Config("2D grid requires ny".into()))?;
                Grid::new_2d(g.lx, g.nx, ly, ny, g.t_end, g.nt)
            }
            d => Err(Error::Config(format!("grid dim must be 1 or 2, got {d}"))),
        }
    }

    pub fn arch(&self) -> MlpArch {
        MlpArch {
            widths: self.net.widths.clone(),
            hidden_activation: Activation::Sigmoid,
            output_activation: self.net.output_activation,
        }
    }

    pub fn schedule(&self) -> Schedule {
        let t = &self.train;
        Schedule {
            adam_iters: t.adam_iters,
            adam: AdamParams {
                lr: t.learning_rate,
                beta1: t.beta1,
                beta2: t.beta2,
                eps: t.epsilon,
            },
            lbfgs: LbfgsOptions {
                memory: t.lbfgs_memory,
                grad_tol: t.grad_tol,
                step_tol: t.step_tol,
                max_iters: t.lbfgs_max_iters,
                ..Default::default()
            },
            theta_init: t.theta_init,
            log_every: t.log_every,
            batch_size: t.batch_size,
        }
    }

    pub fn loss_weights(&self) -> LossWeights {
        LossWeights { lambda_s: self.train.lambda_s, lambda_u: self.train.lambda_u }
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        self.initial.validate(&grid)?;
        self.constants.validate()?;
        self.theta.validate()?;
        if self.theta.dim() != grid.dim {
            return Err(Error::Config(format!(
                "theta has {} spatial components but the grid is {}D",
                self.theta.dim(),
                grid.dim
            )));
        }
        let arch = self.arch();
        arch.validate()?;
        if arch.n_inputs() != grid.dim + 1 || arch.n_outputs() != 3 {
            return Err(Error::Config(format!(
                "net.widths {:?} does not fit a {}D problem (needs {} inputs and 3 outputs)",
                arch.widths,
                grid.dim,
                grid.dim + 1
            )));
        }
        if self.noise.enabled
            && (self.noise.delta.is_nan() || self.noise.delta < 0.0 || !self.noise.zeta.is_finite() || self.noise.zeta <= 0.0)
        {
            return Err(Error::Config(format!(
                "noise requires delta >= 0 and zeta > 0, got {} / {}",
                self.noise.delta, self.noise.zeta
            )));
        }
        if let Some(dt) = self.grid.sim_dt {
            // full stability validation happens at solver construction;
            // reject nonsense early
            if !dt.is_finite() || dt <= 0.0 {
                return Err(Error::Config(format!("grid.sim_dt must be > 0, got {dt}")));
            }
        }
        Ok(())
    }

    /// Canonical 1D configuration (domain and nominal parameters of the
    /// reference setup; desk-scale schedule).
    pub fn default_1d() -> Config {
        Config {
            version: 1,
            grid: GridSection {
                dim: 1,
                lx: 100.0,
                nx: 801,
                ly: None,
                ny: None,
                t_end: 200.0,
                nt: 401,
                sim_dt: None,
            },
            initial: InitialCondition {
                t_p: 2.0,
                center: vec![30.0],
                gamma: 5.0,
                e0: 0.3,
                x0: 0.7,
            },
            constants: PhysConstants::canonical(),
            theta: PhysParams::new_1d(0.41, 0.25, 0.61),
            sampling: Sampling { dx: 2.0, dy: None, dt: 2.0 },
            noise: NoiseSection::default(),
            net: NetSection {
                widths: vec![2, 20, 20, 20, 20, 3],
                output_activation: Activation::Linear,
            },
            train: TrainSection {
                adam_iters: 10_000,
                learning_rate: 3e-4,
                beta1: 0.9,
                beta2: 0.999,
                epsilon: 1e-8,
                lbfgs_max_iters: 2_000,
                lbfgs_memory: 10,
                grad_tol: 1e-9,
                step_tol: 1e-12,
                theta_init: 1.0,
                log_every: 1,
                checkpoint_every: 0,
                batch_size: 0,
                lambda_s: 1.0,
                lambda_u: 1.0,
            },
            seeds: SeedsSection::default(),
        }
    }

    /// Canonical 2D configuration (desk-scale sampling and schedule).
    pub fn default_2d() -> Config {
        let mut cfg = Config::default_1d();
        cfg.grid = GridSection {
            dim: 2,
            lx: 100.0,
            nx: 321,
            ly: Some(100.0),
            ny: Some(321),
            t_end: 200.0,
            nt: 33,
            sim_dt: None,
        };
        cfg.initial = InitialCondition {
            t_p: 2.0,
            center: vec![30.0, 50.0],
            gamma: 5.0,
            e0: 0.3,
            x0: 0.7,
        };
        cfg.theta = PhysParams::new_2d(0.74, 0.41, 0.35, 0.2, 0.4);
        cfg.sampling = Sampling { dx: 6.25, dy: Some(6.25), dt: 6.25 };
        cfg.net.widths = vec![3, 20, 20, 20, 20, 3];
        cfg.train.adam_iters = 15_000;
        cfg
    }
}
