//! Explicit finite-difference forward simulator (1D and 2D) and dataset
//! extraction.
//!
//! Spatial discretization: 3-point (1D) / 5-point (2D) central stencil for
//! the dispersion term, first-order upwinding for advection selected by the
//! sign of each velocity component (central differencing on a zero
//! component). Time integration: explicit forward Euler. The internal step
//! may subdivide the frame interval to satisfy the stability bound
//! `dt <= 0.5 * min(h^2 / (2*alpha1*sum(D)), h / (alpha1*max|u|))`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    rate_endothermic_ext, rate_exothermic_ext, ParamSeries, PhysConstants, PhysParams, StatePoint,
};

/// Structured space-time grid. Spacings derive from extents and node
/// counts: `dx = lx/(nx-1)`, `dt = t_end/(nt-1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub lx: f64,
    pub nx: usize,
    /// Unused in 1D (zero).
    #[serde(default)]
    pub ly: f64,
    /// 1 in 1D.
    #[serde(default = "one")]
    pub ny: usize,
    pub t_end: f64,
    pub nt: usize,
}

fn one() -> usize {
    1
}

impl Grid {
    pub fn new_1d(lx: f64, nx: usize, t_end: f64, nt: usize) -> Result<Self> {
        let g = Self { dim: 1, lx, nx, ly: 0.0, ny: 1, t_end, nt };
        g.validate()?;
        Ok(g)
    }

    pub fn new_2d(lx: f64, nx: usize, ly: f64, ny: usize, t_end: f64, nt: usize) -> Result<Self> {
        let g = Self { dim: 2, lx, nx, ly, ny, t_end, nt };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::Config(format!("grid dim must be 1 or 2, got {}", self.dim)));
        }
        if self.nx < 3 || !self.lx.is_finite() || self.lx <= 0.0 {
            return Err(Error::Config(format!(
                "grid requires nx >= 3 and lx > 0, got nx={} lx={}",
                self.nx, self.lx
            )));
        }
        if self.dim == 2 && (self.ny < 3 || !self.ly.is_finite() || self.ly <= 0.0) {
            return Err(Error::Config(format!(
                "2D grid requires ny >= 3 and ly > 0, got ny={} ly={}",
                self.ny, self.ly
            )));
        }
        if self.dim == 1 && self.ny != 1 {
            return Err(Error::Config("1D grid must have ny = 1".into()));
        }
        if self.nt == 0 {
            return Err(Error::Config("grid requires nt >= 1".into()));
        }
        if self.nt > 1 && (!self.t_end.is_finite() || self.t_end <= 0.0) {
            return Err(Error::Config(format!("t_end must be > 0, got {}", self.t_end)));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        self.lx / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        if self.dim == 2 {
            self.ly / (self.ny - 1) as f64
        } else {
            0.0
        }
    }

    /// Frame interval; zero for a single-frame grid.
    pub fn dt(&self) -> f64 {
        if self.nt > 1 {
            self.t_end / (self.nt - 1) as f64
        } else {
            0.0
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nx * self.ny
    }

    /// Node coordinate, exact at nodes where the extent divides evenly.
    pub fn x_at(&self, ix: usize) -> f64 {
        self.lx * ix as f64 / (self.nx - 1) as f64
    }

    pub fn y_at(&self, iy: usize) -> f64 {
        if self.dim == 2 {
            self.ly * iy as f64 / (self.ny - 1) as f64
        } else {
            0.0
        }
    }

    pub fn t_at(&self, k: usize) -> f64 {
        if self.nt > 1 {
            self.t_end * k as f64 / (self.nt - 1) as f64
        } else {
            0.0
        }
    }

    pub fn frame_times(&self) -> Vec<f64> {
        (0..self.nt).map(|k| self.t_at(k)).collect()
    }

    fn on_spatial_boundary(&self, ix: usize, iy: usize) -> bool {
        if self.dim == 1 {
            ix == 0 || ix == self.nx - 1
        } else {
            ix == 0 || ix == self.nx - 1 || iy == 0 || iy == self.ny - 1
        }
    }
}

/// Gaussian ignition spot over uniform fuel beds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    /// Pyrolysis-temperature amplitude above ambient.
    pub t_p: f64,
    /// Ignition center, one coordinate per spatial dimension.
    pub center: Vec<f64>,
    /// Ignition radius.
    pub gamma: f64,
    /// Uniform endothermic fuel fraction.
    pub e0: f64,
    /// Uniform exothermic fuel fraction.
    pub x0: f64,
}

impl InitialCondition {
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if self.center.len() != grid.dim {
            return Err(Error::Dimension(format!(
                "ignition center has {} coordinates for a {}D grid",
                self.center.len(),
                grid.dim
            )));
        }
        if !self.gamma.is_finite() || self.gamma <= 0.0 {
            return Err(Error::Config(format!("gamma must be > 0, got {}", self.gamma)));
        }
        for (v, name) in [(self.e0, "e0"), (self.x0, "x0")] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0,1], got {v}")));
            }
        }
        let inside_x = (0.0..=grid.lx).contains(&self.center[0]);
        let inside_y = grid.dim == 1 || (0.0..=grid.ly).contains(&self.center[1]);
        if !inside_x || !inside_y {
            return Err(Error::Config(format!(
                "ignition center {:?} lies outside the domain",
                self.center
            )));
        }
        Ok(())
    }

    /// Dirichlet boundary values implied by this initial condition.
    pub fn boundary_state(&self, t_ambient: f64) -> StatePoint {
        StatePoint { temp: t_ambient, endo: self.e0, exo: self.x0 }
    }
}

/// Discretized fields over the grid at one time level, row-major
/// (`index = iy*nx + ix`).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub temp: Vec<f64>,
    pub endo: Vec<f64>,
    pub exo: Vec<f64>,
}

impl FieldState {
    pub fn uniform(n: usize, value: StatePoint) -> Self {
        Self {
            temp: vec![value.temp; n],
            endo: vec![value.endo; n],
            exo: vec![value.exo; n],
        }
    }

    pub fn at(&self, idx: usize) -> StatePoint {
        StatePoint { temp: self.temp[idx], endo: self.endo[idx], exo: self.exo[idx] }
    }

    fn all_finite(&self) -> bool {
        self.temp.iter().chain(&self.endo).chain(&self.exo).all(|v| v.is_finite())
    }
}

/// Parameters used while stepping: fixed, or a per-frame time series.
#[derive(Debug, Clone)]
pub enum ParamSource<'a> {
    Constant(&'a PhysParams),
    Series(&'a ParamSeries),
}

/// Parameter provenance stored with a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamsUsed {
    Constant(PhysParams),
    Series(ParamSeries),
}

impl ParamsUsed {
    pub fn nominal(&self) -> PhysParams {
        match self {
            ParamsUsed::Constant(p) => p.clone(),
            // Mean over the series as the representative value.
            ParamsUsed::Series(s) => {
                let n = s.values.len().max(1) as f64;
                let mut acc = vec![0.0; 2 * s.dim + 1];
                for row in &s.values {
                    for (a, v) in acc.iter_mut().zip(row) {
                        *a += v;
                    }
                }
                for a in &mut acc {
                    *a /= n;
                }
                PhysParams::from_slice(s.dim, &acc).expect("series rows sized with dim")
            }
        }
    }
}

/// Full simulated evolution: one [`FieldState`] per time level.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid,
    pub frames: Vec<FieldState>,
    pub params_used: ParamsUsed,
    pub constants: PhysConstants,
    pub boundary: StatePoint,
}

impl Trajectory {
    /// Frame index nearest to dimensionless time `s` in [0,1].
    pub fn frame_at_fraction(&self, s: f64) -> usize {
        ((self.grid.nt - 1) as f64 * s).round() as usize
    }
}

/// Stability bound on the internal time step for the given parameters
/// (before the safety factor).
fn raw_stable_dt(grid: &Grid, theta: &PhysParams, c: &PhysConstants) -> f64 {
    let h = if grid.dim == 2 { grid.dx().min(grid.dy()) } else { grid.dx() };
    let d_sum: f64 = theta.dispersion.iter().map(|d| d.abs()).sum();
    let u_max = theta.velocity.iter().fold(0.0f64, |m, u| m.max(u.abs()));
    let mut bound = f64::INFINITY;
    if c.alpha1 * d_sum > 0.0 {
        bound = bound.min(h * h / (2.0 * c.alpha1 * d_sum));
    }
    if c.alpha1 * u_max > 0.0 {
        bound = bound.min(h / (c.alpha1 * u_max));
    }
    bound
}

/// Largest admissible internal step (safety factor 0.5 applied).
pub fn stable_dt(grid: &Grid, theta: &PhysParams, c: &PhysConstants) -> f64 {
    0.5 * raw_stable_dt(grid, theta, c)
}

/// Explicit solver bound to a grid, constant set and Dirichlet boundary.
///
/// Stability is checked at construction: an explicit `sim_dt` that violates
/// the bound (or does not divide the frame interval) is a configuration
/// error. Without one, the frame interval is subdivided automatically.
#[derive(Debug, Clone)]
pub struct Solver {
    pub grid: Grid,
    pub constants: PhysConstants,
    pub boundary: StatePoint,
    substeps: usize,
    sim_dt: f64,
}

impl Solver {
    pub fn new(
        grid: Grid,
        ic: &InitialCondition,
        constants: PhysConstants,
        theta: &PhysParams,
        sim_dt: Option<f64>,
    ) -> Result<Self> {
        grid.validate()?;
        ic.validate(&grid)?;
        constants.validate()?;
        theta.validate()?;
        if theta.dim() != grid.dim {
            return Err(Error::Dimension(format!(
                "parameter dim {} does not match grid dim {}",
                theta.dim(),
                grid.dim
            )));
        }
        let boundary = ic.boundary_state(constants.t_ambient);
        let frame_dt = grid.dt();
        let bound = stable_dt(&grid, theta, &constants);
        let (substeps, sim_dt) = if grid.nt <= 1 {
            (1, 0.0)
        } else if let Some(dt) = sim_dt {
            if !dt.is_finite() || dt <= 0.0 {
                return Err(Error::Config(format!("sim_dt must be > 0, got {dt}")));
            }
            let ratio = frame_dt / dt;
            let k = ratio.round();
            if k < 1.0 || (ratio - k).abs() > 1e-9 * k {
                return Err(Error::Config(format!(
                    "sim_dt {dt} must divide the frame interval {frame_dt}"
                )));
            }
            if dt > bound {
                return Err(Error::Config(format!(
                    "sim_dt {dt} violates the stability bound {bound:.6e} \
                     (0.5 * min(h^2/(2*alpha1*sum D), h/(alpha1*max|u|)))"
                )));
            }
            (k as usize, dt)
        } else {
            let k = if bound.is_finite() { (frame_dt / bound).ceil().max(1.0) as usize } else { 1 };
            (k, frame_dt / k as f64)
        };
        Ok(Self { grid, constants, boundary, substeps, sim_dt })
    }

    pub fn sim_dt(&self) -> f64 {
        self.sim_dt
    }

    pub fn substeps_per_frame(&self) -> usize {
        self.substeps
    }

    /// One explicit Euler step of size `dt`; Dirichlet values re-imposed.
    pub fn step(&self, state: &FieldState, theta: &PhysParams, dt: f64) -> Result<FieldState> {
        if theta.dim() != self.grid.dim {
            return Err(Error::Dimension(format!(
                "parameter dim {} does not match grid dim {}",
                theta.dim(),
                self.grid.dim
            )));
        }
        let mut out = FieldState::uniform(self.grid.n_nodes(), self.boundary);
        self.step_into(state, theta, dt, &mut out);
        Ok(out)
    }

    fn step_into(&self, state: &FieldState, theta: &PhysParams, dt: f64, out: &mut FieldState) {
        match self.grid.dim {
            1 => self.step_1d(state, theta, dt, out),
            _ => self.step_2d(state, theta, dt, out),
        }
        // Dirichlet boundaries exactly
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let bc = self.boundary;
        let mut pin = |idx: usize| {
            out.temp[idx] = bc.temp;
            out.endo[idx] = bc.endo;
            out.exo[idx] = bc.exo;
        };
        if self.grid.dim == 1 {
            pin(0);
            pin(nx - 1);
        } else {
            for ix in 0..nx {
                pin(ix);
                pin((ny - 1) * nx + ix);
            }
            for iy in 0..ny {
                pin(iy * nx);
                pin(iy * nx + nx - 1);
            }
        }
    }

    fn step_1d(&self, state: &FieldState, theta: &PhysParams, dt: f64, out: &mut FieldState) {
        let nx = self.grid.nx;
        let dx = self.grid.dx();
        let inv_dx2 = 1.0 / (dx * dx);
        let inv_dx = 1.0 / dx;
        let c = &self.constants;
        let k = &c.kinetics;
        let d = theta.dispersion[0];
        let u = theta.velocity[0];
        let heat = theta.heat_loss;
        let t = &state.temp;
        for i in 1..nx - 1 {
            let lap = (t[i - 1] - 2.0 * t[i] + t[i + 1]) * inv_dx2;
            let grad = upwind(t[i - 1], t[i], t[i + 1], u, inv_dx);
            let r_e = rate_endothermic_ext(t[i], k);
            let r_x = rate_exothermic_ext(t[i], k);
            let d_temp = c.alpha1 * (d * lap - u * grad) - c.alpha2 * state.endo[i] * r_e
                + c.alpha3 * state.exo[i] * r_x
                - c.alpha4 * heat * (t[i] - c.t_ambient);
            out.temp[i] = t[i] + dt * d_temp;
            out.endo[i] = state.endo[i] * (1.0 - dt * r_e);
            out.exo[i] = state.exo[i] * (1.0 - dt * r_x);
        }
    }

    fn step_2d(&self, state: &FieldState, theta: &PhysParams, dt: f64, out: &mut FieldState) {
        let nx = self.grid.nx;
        let ny = self.grid.ny;
        let inv_dx = 1.0 / self.grid.dx();
        let inv_dy = 1.0 / self.grid.dy();
        let inv_dx2 = inv_dx * inv_dx;
        let inv_dy2 = inv_dy * inv_dy;
        let c = self.constants;
        let k = c.kinetics;
        let (d_x, d_y) = (theta.dispersion[0], theta.dispersion[1]);
        let (u_x, u_y) = (theta.velocity[0], theta.velocity[1]);
        let heat = theta.heat_loss;
        let t = &state.temp;
        let endo = &state.endo;
        let exo = &state.exo;
        // Interior rows are independent; parallелize over rows with
        // per-node arithmetic identical to the serial order.
        out.temp
            .par_chunks_mut(nx)
            .zip(out.endo.par_chunks_mut(nx))
            .zip(out.exo.par_chunks_mut(nx))
            .enumerate()
            .for_each(|(iy, ((t_row, e_row), x_row))| {
                if iy == 0 || iy == ny - 1 {
                    return; // pinned afterwards
                }
                let row = iy * nx;
                for ix in 1..nx - 1 {
                    let idx = row + ix;
                    let lap_x = (t[idx - 1] - 2.0 * t[idx] + t[idx + 1]) * inv_dx2;
                    let lap_y = (t[idx - nx] - 2.0 * t[idx] + t[idx + nx]) * inv_dy2;
                    let grad_x = upwind(t[idx - 1], t[idx], t[idx + 1], u_x, inv_dx);
                    let grad_y = upwind(t[idx - nx], t[idx], t[idx + nx], u_y, inv_dy);
                    let r_e = rate_endothermic_ext(t[idx], &k);
                    let r_x = rate_exothermic_ext(t[idx], &k);
                    let transport = d_x * lap_x + d_y * lap_y - u_x * grad_x - u_y * grad_y;
                    let d_temp = c.alpha1 * transport - c.alpha2 * endo[idx] * r_e
                        + c.alpha3 * exo[idx] * r_x
                        - c.alpha4 * heat * (t[idx] - c.t_ambient);
                    t_row[ix] = t[idx] + dt * d_temp;
                    e_row[ix] = endo[idx] * (1.0 - dt * r_e);
                    x_row[ix] = exo[idx] * (1.0 - dt * r_x);
                }
            });
    }

    /// Run the full simulation. With a parameter series, the values at each
    /// frame's start time apply throughout that frame's internal substeps.
    pub fn simulate(&self, ic: &InitialCondition, params: ParamSource) -> Result<Trajectory> {
        ic.validate(&self.grid)?;
        if let ParamSource::Series(s) = &params {
            if s.times.len() != self.grid.nt || s.values.len() != self.grid.nt {
                return Err(Error::Dimension(format!(
                    "parameter series has {} levels, grid has {}",
                    s.times.len(),
                    self.grid.nt
                )));
            }
        }
        let mut state = apply_initial(&self.grid, ic, self.constants.t_ambient)?;
        // Frame 0 satisfies the Dirichlet values exactly as well.
        impose_boundary(&self.grid, &self.boundary, &mut state);
        let mut frames = Vec::with_capacity(self.grid.nt);
        frames.push(state.clone());
        for level in 1..self.grid.nt {
            let theta_level;
            let theta = match &params {
                ParamSource::Constant(p) => *p,
                ParamSource::Series(s) => {
                    theta_level = s.at(level - 1)?;
                    &theta_level
                }
            };
            for _ in 0..self.substeps {
                let mut out = FieldState::uniform(self.grid.n_nodes(), self.boundary);
                self.step_into(&state, theta, self.sim_dt, &mut out);
                state = out;
            }
            if !state.all_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite field while stepping to time level {level}"
                )));
            }
            frames.push(state.clone());
        }
        let params_used = match params {
            ParamSource::Constant(p) => ParamsUsed::Constant(p.clone()),
            ParamSource::Series(s) => ParamsUsed::Series(s.clone()),
        };
        Ok(Trajectory {
            grid: self.grid.clone(),
            frames,
            params_used,
            constants: self.constants,
            boundary: self.boundary,
        })
    }
}

#[inline]
fn upwind(prev: f64, here: f64, next: f64, velocity: f64, inv_h: f64) -> f64 {
    if velocity > 0.0 {
        (here - prev) * inv_h
    } else if velocity < 0.0 {
        (next - here) * inv_h
    } else {
        // average of the one-sided differences
        (next - prev) * (0.5 * inv_h)
    }
}

fn impose_boundary(grid: &Grid, bc: &StatePoint, state: &mut FieldState) {
    let (nx, ny) = (grid.nx, grid.ny);
    let mut pin = |idx: usize| {
        state.temp[idx] = bc.temp;
        state.endo[idx] = bc.endo;
        state.exo[idx] = bc.exo;
    };
    if grid.dim == 1 {
        pin(0);
        pin(nx - 1);
    } else {
        for ix in 0..nx {
            pin(ix);
            pin((ny - 1) * nx + ix);
        }
        for iy in 0..ny {
            pin(iy * nx);
            pin(iy * nx + nx - 1);
        }
    }
}

/// Build the initial fields: a Gaussian temperature spot
/// `T = T_p * exp(-r^2/gamma^2) + T_a` over uniform fuel beds.
pub fn apply_initial(grid: &Grid, ic: &InitialCondition, t_ambient: f64) -> Result<FieldState> {
    ic.validate(grid)?;
    let n = grid.n_nodes();
    let mut state = FieldState::uniform(n, StatePoint { temp: t_ambient, endo: ic.e0, exo: ic.x0 });
    let inv_g2 = 1.0 / (ic.gamma * ic.gamma);
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let mut r2 = (grid.x_at(ix) - ic.center[0]).powi(2);
            if grid.dim == 2 {
                r2 += (grid.y_at(iy) - ic.center[1]).powi(2);
            }
            state.temp[iy * grid.nx + ix] = ic.t_p * (-r2 * inv_g2).exp() + t_ambient;
        }
    }
    Ok(state)
}

/// Requested sampling intervals for dataset extraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub dx: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dy: Option<f64>,
    pub dt: f64,
}

/// Record classification within a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tag {
    Interior,
    Boundary,
    Initial,
}

impl Tag {
    pub fn as_str(&self) -> &'static str {
        match self {
            Tag::Interior => "interior",
            Tag::Boundary => "boundary",
            Tag::Initial => "initial",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "interior" => Some(Tag::Interior),
            "boundary" => Some(Tag::Boundary),
            "initial" => Some(Tag::Initial),
            _ => None,
        }
    }
}

/// One labeled spatiotemporal sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub x: f64,
    /// Zero in 1D.
    pub y: f64,
    pub t: f64,
    pub state: StatePoint,
    pub tag: Tag,
}

/// Coordinate normalization metadata: domain extents mapping physical
/// coordinates onto the unit box fed to the surrogate network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoordMap {
    pub lx: f64,
    pub ly: f64,
    pub t_end: f64,
}

impl CoordMap {
    pub fn from_grid(grid: &Grid) -> Self {
        Self { lx: grid.lx, ly: grid.ly, t_end: grid.t_end }
    }

    /// Normalized network inputs `(x/lx, [y/ly,] t/t_end)`.
    pub fn normalize(&self, x: f64, y: f64, t: f64, dim: usize) -> Vec<f64> {
        let tt = if self.t_end > 0.0 { t / self.t_end } else { 0.0 };
        if dim == 1 {
            vec![x / self.lx, tt]
        } else {
            vec![x / self.lx, y / self.ly, tt]
        }
    }
}

/// Labeled spatiotemporal samples extracted from a trajectory.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub dim: usize,
    pub spacing: Sampling,
    pub norm: CoordMap,
    pub records: Vec<Record>,
}

impl Dataset {
    pub fn count(&self, tag: Tag) -> usize {
        self.records.iter().filter(|r| r.tag == tag).count()
    }
}

fn stride_of(name: &str, requested: f64, base: f64, span_nodes: usize) -> Result<usize> {
    if base <= 0.0 {
        return if span_nodes == 0 {
            Ok(1)
        } else {
            Err(Error::Config(format!("{name}: simulation spacing is zero")))
        };
    }
    let ratio = requested / base;
    let k = ratio.round();
    if k < 1.0 || !k.is_finite() || (ratio - k).abs() > 1e-9 * k {
        return Err(Error::Config(format!(
            "{name} = {requested} is not an integer multiple of the simulation spacing {base}"
        )));
    }
    let stride = k as usize;
    if !span_nodes.is_multiple_of(stride) {
        return Err(Error::Config(format!(
            "{name} = {requested} does not tile the domain extent (stride {stride} over {span_nodes} intervals)"
        )));
    }
    Ok(stride)
}

/// Uniformly subsample a trajectory into a tagged dataset. Requested
/// spacings must be integer multiples of the simulation spacings and tile
/// the extents so both boundaries are retained.
pub fn extract_dataset(traj: &Trajectory, sampling: &Sampling) -> Result<Dataset> {
    let grid = &traj.grid;
    let sx = stride_of("sampling dx", sampling.dx, grid.dx(), grid.nx - 1)?;
    let sy = if grid.dim == 2 {
        let dy = sampling.dy.ok_or_else(|| Error::Config("2D sampling requires dy".into()))?;
        stride_of("sampling dy", dy, grid.dy(), grid.ny - 1)?
    } else {
        1
    };
    let st = if grid.nt > 1 {
        stride_of("sampling dt", sampling.dt, grid.dt(), grid.nt - 1)?
    } else {
        1
    };
    let n_records =
        ((grid.nx - 1) / sx + 1) * ((grid.ny.max(1) - 1) / sy + 1) * ((grid.nt - 1) / st + 1);
    let mut records = Vec::with_capacity(n_records);
    for (level, frame) in traj.frames.iter().enumerate().step_by(st) {
        let t = grid.t_at(level);
        for iy in (0..grid.ny).step_by(sy) {
            for ix in (0..grid.nx).step_by(sx) {
                let tag = if grid.on_spatial_boundary(ix, iy) {
                    Tag::Boundary
                } else if level == 0 {
                    Tag::Initial
                } else {
                    Tag::Interior
                };
                records.push(Record {
                    x: grid.x_at(ix),
                    y: grid.y_at(iy),
                    t,
                    state: frame.at(iy * grid.nx + ix),
                    tag,
                });
            }
        }
    }
    debug_assert_eq!(records.len(), n_records);
    Ok(Dataset {
        dim: grid.dim,
        spacing: *sampling,
        norm: CoordMap::from_grid(grid),
        records,
    })
}
