//! Wildfire front simulation and physics-informed parameter recovery.
//!
//! The crate forward-simulates a dimensionless reaction–advection–diffusion
//! model of wildfire spread, manufactures (optionally noisy) observation
//! datasets from the trajectories, and recovers the physical parameters —
//! dispersion, wind velocity and the heat-loss coefficient — by training a
//! small fully-connected surrogate network against a composite data + PDE +
//! boundary/initial loss with a hybrid Adam → L-BFGS schedule.
//!
//! Module map:
//! - [`model`]: reaction kinetics and the governing equations.
//! - [`fdsolver`]: explicit finite-difference simulator and dataset extraction.
//! - [`stochastic`]: time-correlated Gaussian-process parameter fluctuations.
//! - [`net`]: the feed-forward surrogate network.
//! - [`autodiff`]: second-order forward jets through the network and the
//!   reverse pass producing parameter gradients.
//! - [`pinn`]: residuals, the composite loss, and its gradient.
//! - [`optim`]: Adam, L-BFGS and the hybrid training loop.
//! - [`harness`]: scripted case studies and the dataset-size ablation.
//! - [`config`]: run configuration, validation and canonical defaults.
//! - [`io`]: columnar text files and manifests.

pub mod autodiff;
pub mod config;
pub mod error;
pub mod fdsolver;
pub mod harness;
pub mod io;
pub mod model;
pub mod net;
pub mod optim;
pub mod pinn;
pub mod stochastic;

pub use error::{Error, Result};
pub use model::{Kinetics, PhysConstants, PhysParams, StatePoint};
