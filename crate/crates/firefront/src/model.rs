//! Dimensionless wildfire spreading model: Arrhenius reaction kinetics and
//! the right-hand sides of the coupled temperature/fuel balance equations.
//!
//! The temperature equation combines dispersion, advection, an endothermic
//! sink (fuel moisture evaporation), an exothermic source (combustible
//! oxidation) and a convective loss toward ambient. The two fuel mass
//! fractions decay pointwise at their reaction rates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reaction constants for the endothermic and exothermic pathways.
///
/// `c1`/`b1` are the pre-exponential rate and activation temperature of the
/// endothermic (moisture) reaction, `c2`/`b2` those of the exothermic
/// (combustible) reaction, and `r_o` the oxygen-supply frequency limiting
/// the exothermic rate. All values are dimensionless after scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kinetics {
    pub c1: f64,
    pub b1: f64,
    pub c2: f64,
    pub b2: f64,
    pub r_o: f64,
}

impl Kinetics {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("c1", self.c1),
            ("b1", self.b1),
            ("c2", self.c2),
            ("b2", self.b2),
            ("r_o", self.r_o),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!(
                    "kinetics constant {name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Fixed lumped coefficients of the energy balance plus ambient temperature.
///
/// `alpha1` scales dispersion/advection, `alpha2` the endothermic sink,
/// `alpha3` the exothermic source, and `alpha4` the convective loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysConstants {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub alpha4: f64,
    /// Ambient temperature (dimensionless).
    pub t_ambient: f64,
    pub kinetics: Kinetics,
}

impl PhysConstants {
    /// The canonical default constant set, version 1.
    ///
    /// These values are artifact-chosen (the dimensionless scales are not
    /// published with the model); they are tuned so that the default 1D run
    /// ignites at the initial spot and drives a right-moving front across a
    /// substantial fraction of the domain within the simulated window.
    /// Every experiment is self-consistent: data generation and inversion
    /// use the same set.
    pub fn canonical() -> Self {
        Self {
            alpha1: 0.5,
            alpha2: 1.0,
            alpha3: 6.0,
            alpha4: 0.05,
            t_ambient: 1.0,
            kinetics: Kinetics {
                c1: 1.0,
                b1: 10.0,
                c2: 0.65,
                b2: 8.0,
                r_o: 0.4,
            },
        }
    }

    /// Version tag of [`PhysConstants::canonical`]; recorded in manifests.
    pub const CANONICAL_VERSION: u32 = 1;

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("alpha3", self.alpha3),
            ("alpha4", self.alpha4),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if !self.t_ambient.is_finite() || self.t_ambient <= 0.0 {
            return Err(Error::Config(format!(
                "t_ambient must be finite and > 0, got {}",
                self.t_ambient
            )));
        }
        self.kinetics.validate()
    }
}

/// The learnable physical parameter vector: dispersion `D`, velocity `u`
/// (one component each per spatial dimension) and the overall heat-loss
/// coefficient `U`.
///
/// Serialization order is fixed: `[Dx, (Dy,) ux, (uy,) U]`. Gradients and
/// optimizer state use the same ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    pub dispersion: Vec<f64>,
    pub velocity: Vec<f64>,
    pub heat_loss: f64,
}

impl PhysParams {
    pub fn new_1d(d: f64, u: f64, heat_loss: f64) -> Self {
        Self {
            dispersion: vec![d],
            velocity: vec![u],
            heat_loss,
        }
    }

    pub fn new_2d(dx: f64, dy: f64, ux: f64, uy: f64, heat_loss: f64) -> Self {
        Self {
            dispersion: vec![dx, dy],
            velocity: vec![ux, uy],
            heat_loss,
        }
    }

    pub fn dim(&self) -> usize {
        self.dispersion.len()
    }

    /// Number of scalar components: `2*dim + 1`.
    pub fn len(&self) -> usize {
        2 * self.dim() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        if dim != 1 && dim != 2 {
            return Err(Error::Dimension(format!(
                "spatial dimensionality must be 1 or 2, got {dim}"
            )));
        }
        if self.velocity.len() != dim {
            return Err(Error::Dimension(format!(
                "velocity has {} components but dispersion has {dim}",
                self.velocity.len()
            )));
        }
        for v in self.to_vec() {
            if !v.is_finite() {
                return Err(Error::Config("non-finite physical parameter".into()));
            }
        }
        Ok(())
    }

    /// Flatten in the fixed order `[Dx, (Dy,) ux, (uy,) U]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.dispersion);
        v.extend_from_slice(&self.velocity);
        v.push(self.heat_loss);
        v
    }

    pub fn from_slice(dim: usize, values: &[f64]) -> Result<Self> {
        if values.len() != 2 * dim + 1 {
            return Err(Error::Dimension(format!(
                "expected {} parameter components for dim {dim}, got {}",
                2 * dim + 1,
                values.len()
            )));
        }
        Ok(Self {
            dispersion: values[..dim].to_vec(),
            velocity: values[dim..2 * dim].to_vec(),
            heat_loss: values[2 * dim],
        })
    }

    /// Component labels in serialization order.
    pub fn component_names(dim: usize) -> &'static [&'static str] {
        match dim {
            1 => &["D", "u", "U"],
            _ => &["Dx", "Dy", "ux", "uy", "U"],
        }
    }
}

/// State variables at a single point: temperature and the two fuel
/// mass fractions (endothermic = moisture, exothermic = combustibles).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatePoint {
    pub temp: f64,
    pub endo: f64,
    pub exo: f64,
}

/// A parameter time series `theta(t)` aligned to a set of sample times,
/// used when the physical parameters fluctuate during data generation.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSeries {
    pub dim: usize,
    pub times: Vec<f64>,
    /// One row per time level, each in [`PhysParams`] serialization order.
    pub values: Vec<Vec<f64>>,
}

impl ParamSeries {
    pub fn constant(theta: &PhysParams, times: Vec<f64>) -> Self {
        let row = theta.to_vec();
        Self {
            dim: theta.dim(),
            values: vec![row; times.len()],
            times,
        }
    }

    pub fn at(&self, level: usize) -> Result<PhysParams> {
        let row = self
            .values
            .get(level)
            .ok_or_else(|| Error::Dimension(format!("no parameter row at level {level}")))?;
        PhysParams::from_slice(self.dim, row)
    }
}

/// Endothermic Arrhenius rate `c1 * exp(-b1/T)`.
pub fn rate_endothermic(temp: f64, k: &Kinetics) -> Result<f64> {
    if !temp.is_finite() || temp <= 0.0 {
        return Err(Error::Domain(format!(
            "endothermic rate requires finite T > 0, got {temp}"
        )));
    }
    Ok(k.c1 * (-k.b1 / temp).exp())
}

/// Exothermic rate `a*r_o/(a + r_o)` with `a = c2 * exp(-b2/T)`: the
/// Arrhenius rate harmonically limited by oxygen supply. Returns 0 when
/// both `c2` and `r_o` vanish (no oxidation pathway).
pub fn rate_exothermic(temp: f64, k: &Kinetics) -> Result<f64> {
    if !temp.is_finite() || temp <= 0.0 {
        return Err(Error::Domain(format!(
            "exothermic rate requires finite T > 0, got {temp}"
        )));
    }
    let a = k.c2 * (-k.b2 / temp).exp();
    let den = a + k.r_o;
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(a * k.r_o / den)
}

/// Endothermic rate extended by zero across `T <= 0`.
///
/// For `b1 > 0` this is the smooth continuation of `c1*exp(-b1/T)` (the rate
/// and all its derivatives vanish as `T -> 0+`), which keeps residual
/// evaluation finite when a surrogate prediction undershoots zero.
#[inline]
pub fn rate_endothermic_ext(temp: f64, k: &Kinetics) -> f64 {
    if temp <= 0.0 {
        0.0
    } else {
        k.c1 * (-k.b1 / temp).exp()
    }
}

/// Extended endothermic rate and its temperature derivative.
#[inline]
pub fn rate_endothermic_ext_d(temp: f64, k: &Kinetics) -> (f64, f64) {
    if temp <= 0.0 {
        return (0.0, 0.0);
    }
    let r = k.c1 * (-k.b1 / temp).exp();
    (r, r * k.b1 / (temp * temp))
}

/// Exothermic rate extended by zero across `T <= 0`; see
/// [`rate_endothermic_ext`].
#[inline]
pub fn rate_exothermic_ext(temp: f64, k: &Kinetics) -> f64 {
    if temp <= 0.0 {
        return 0.0;
    }
    let a = k.c2 * (-k.b2 / temp).exp();
    let den = a + k.r_o;
    if den == 0.0 {
        0.0
    } else {
        a * k.r_o / den
    }
}

/// Extended exothermic rate and its temperature derivative.
#[inline]
pub fn rate_exothermic_ext_d(temp: f64, k: &Kinetics) -> (f64, f64) {
    if temp <= 0.0 {
        return (0.0, 0.0);
    }
    let a = k.c2 * (-k.b2 / temp).exp();
    let den = a + k.r_o;
    if den == 0.0 {
        return (0.0, 0.0);
    }
    let r = a * k.r_o / den;
    // d/dT [a r_o/(a+r_o)] = a' r_o^2/(a+r_o)^2, a' = a b2/T^2
    let da = a * k.b2 / (temp * temp);
    (r, da * k.r_o * k.r_o / (den * den))
}

/// Time derivatives `(dT/dt, dE/dt, dX/dt)` of the governing equations at a
/// point, given the spatial gradient and Laplacian of temperature there.
///
/// `grad_temp` and `lap_temp` carry one component per spatial dimension;
/// the dispersion and advection contractions are component-wise
/// (`Dx*T_xx + Dy*T_yy` and `ux*T_x + uy*T_y`).
pub fn rhs(
    point: &StatePoint,
    grad_temp: &[f64],
    lap_temp: &[f64],
    theta: &PhysParams,
    constants: &PhysConstants,
) -> Result<(f64, f64, f64)> {
    let dim = theta.dim();
    if grad_temp.len() != dim || lap_temp.len() != dim {
        return Err(Error::Dimension(format!(
            "gradient/Laplacian must have {dim} components, got {}/{}",
            grad_temp.len(),
            lap_temp.len()
        )));
    }
    let r_e = rate_endothermic(point.temp, &constants.kinetics)?;
    let r_x = rate_exothermic(point.temp, &constants.kinetics)?;
    Ok(rhs_raw(point, grad_temp, lap_temp, theta, constants, r_e, r_x))
}

/// Shared right-hand-side arithmetic, rates supplied by the caller.
#[inline]
pub(crate) fn rhs_raw(
    point: &StatePoint,
    grad_temp: &[f64],
    lap_temp: &[f64],
    theta: &PhysParams,
    constants: &PhysConstants,
    r_e: f64,
    r_x: f64,
) -> (f64, f64, f64) {
    let mut transport = 0.0;
    for i in 0..theta.dim() {
        transport += theta.dispersion[i] * lap_temp[i] - theta.velocity[i] * grad_temp[i];
    }
    let d_temp = constants.alpha1 * transport - constants.alpha2 * point.endo * r_e
        + constants.alpha3 * point.exo * r_x
        - constants.alpha4 * theta.heat_loss * (point.temp - constants.t_ambient);
    (d_temp, -point.endo * r_e, -point.exo * r_x)
}
