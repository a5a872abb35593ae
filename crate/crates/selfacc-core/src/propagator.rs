//! Time stepping on periodic grids.
//!
//! Two schemes, both second order in `dt`: Strang-split spectral stepping
//! (exact kinetic part, potential frozen at the half step) and Crank-Nicolson
//! with a three-point Laplacian and lagged nonlinearity. Gain and loss make
//! the evolution non-unitary on purpose; an optional absorbing layer keeps
//! outflow from wrapping around the periodic boundary.

use crate::diagnostics;
use crate::error::CoreError;
use crate::field::ComplexWaveField;
use crate::grid::Grid1D;
use crate::potential::{ComovingPotential, NonlinearTerm};
use crate::C64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    SplitStep,
    CrankNicolson,
}

impl Scheme {
    pub fn parse(s: &str) -> Result<Self, CoreError> {
        match s {
            "split-step" => Ok(Scheme::SplitStep),
            "crank-nicolson" => Ok(Scheme::CrankNicolson),
            other => Err(CoreError::invalid_parameter(format!(
                "unknown scheme `{other}` (expected split-step or crank-nicolson)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::SplitStep => "split-step",
            Scheme::CrankNicolson => "crank-nicolson",
        }
    }
}

/// Quartic-ramp absorbing layer hugging both domain edges: amplitudes are
/// multiplied by `exp(-strength ramp^4 dt)` after every step, with `ramp`
/// rising linearly from 0 at the layer's inner edge to 1 at the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbsorberSpec {
    pub width: f64,
    pub strength: f64,
}

impl AbsorberSpec {
    pub fn new(width: f64, strength: f64) -> Result<Self, CoreError> {
        if !width.is_finite() || width <= 0.0 || !strength.is_finite() || strength < 0.0 {
            return Err(CoreError::invalid_parameter(
                "absorber needs width > 0 and strength >= 0",
            ));
        }
        Ok(AbsorberSpec { width, strength })
    }

    fn factors(&self, grid: Grid1D, dt: f64) -> Vec<f64> {
        (0..grid.n())
            .map(|j| {
                let x = grid.x(j);
                let d_edge = (x - grid.x_min()).min(grid.x_max() - x);
                let ramp = (1.0 - d_edge / self.width).max(0.0);
                (-self.strength * ramp.powi(4) * dt).exp()
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct PropagatorConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub n_steps: usize,
    pub t0: f64,
    /// Record every this many steps (the initial and final states are
    /// always recorded).
    pub record_stride: usize,
    pub store_fields: bool,
    pub absorber: Option<AbsorberSpec>,
    pub overflow_ceiling: f64,
}

impl PropagatorConfig {
    pub fn new(scheme: Scheme, dt: f64, n_steps: usize) -> Self {
        PropagatorConfig {
            scheme,
            dt,
            n_steps,
            t0: 0.0,
            record_stride: 1,
            store_fields: false,
            absorber: None,
            overflow_ceiling: 1e12,
        }
    }

    fn validate(&self, grid: Grid1D) -> Result<(), CoreError> {
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(CoreError::invalid_parameter("dt must be positive"));
        }
        if !self.t0.is_finite() {
            return Err(CoreError::invalid_parameter("t0 must be finite"));
        }
        if self.record_stride == 0 {
            return Err(CoreError::invalid_parameter("record stride must be >= 1"));
        }
        if !(self.overflow_ceiling > 0.0) {
            return Err(CoreError::invalid_parameter(
                "overflow ceiling must be positive",
            ));
        }
        if let Some(ab) = &self.absorber {
            AbsorberSpec::new(ab.width, ab.strength)?;
            if 2.0 * ab.width >= grid.length() {
                return Err(CoreError::invalid_parameter(
                    "absorbing layers may not cover the whole domain",
                ));
            }
        }
        Ok(())
    }
}

/// Time series produced by [`propagate`]. `fields` is populated only when
/// the config asks for stored fields.
#[derive(Debug, Clone)]
pub struct PropagationRecord {
    pub scheme: Scheme,
    pub grid: Grid1D,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub centroids: Vec<Option<f64>>,
    pub peaks: Vec<f64>,
    pub max_abs: Vec<f64>,
    pub fields: Vec<ComplexWaveField>,
    pub warnings: Vec<String>,
}

impl PropagationRecord {
    fn new(scheme: Scheme, grid: Grid1D) -> Self {
        PropagationRecord {
            scheme,
            grid,
            times: Vec::new(),
            norms: Vec::new(),
            centroids: Vec::new(),
            peaks: Vec::new(),
            max_abs: Vec::new(),
            fields: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn push(&mut self, t: f64, field: &ComplexWaveField, store: bool) {
        self.times.push(t);
        self.norms.push(diagnostics::norm(field));
        self.centroids.push(diagnostics::centroid(field).ok());
        self.peaks.push(diagnostics::peak_position(field).x);
        self.max_abs.push(field.max_abs());
        if store {
            self.fields.push(field.clone());
        }
    }

    pub fn final_field(&self) -> Option<&ComplexWaveField> {
        self.fields.last()
    }
}

/// Propagation stopped early; the partial record tells how far it got.
#[derive(Debug)]
pub struct PropagationAbort {
    pub error: CoreError,
    pub partial: PropagationRecord,
}

trait Stepper {
    /// Advances the field from `t` to `t + dt` in place.
    fn step(&mut self, field: &mut ComplexWaveField, t: f64) -> Result<(), CoreError>;
}

pub fn propagate(
    initial: &ComplexWaveField,
    potential: &ComovingPotential,
    nonlinear: Option<&NonlinearTerm>,
    cfg: &PropagatorConfig,
) -> Result<PropagationRecord, Box<PropagationAbort>> {
    let grid = initial.grid();
    let mut record = PropagationRecord::new(cfg.scheme, grid);
    let abort = |error, partial| Err(Box::new(PropagationAbort { error, partial }));

    if let Err(e) = cfg.validate(grid) {
        return abort(e, record);
    }

    // A gain rate comparable to 1/dt means the potential split can no
    // longer track growth accurately; flag it up front.
    let vi_max = (0..grid.n())
        .map(|j| potential.u_lab(grid.x(j), cfg.t0).im.abs())
        .fold(0.0f64, f64::max);
    if cfg.dt * vi_max >= 0.5 {
        record.warnings.push(format!(
            "dt * max|V_I| = {:.3} at t0; gain/loss is marginally resolved",
            cfg.dt * vi_max
        ));
    }

    let mut stepper: Box<dyn Stepper> = match cfg.scheme {
        Scheme::SplitStep => Box::new(SplitStep::new(grid, potential, nonlinear, cfg.dt)),
        Scheme::CrankNicolson => Box::new(CrankNicolson::new(grid, potential, nonlinear, cfg.dt)),
    };
    let damp = cfg.absorber.as_ref().map(|ab| ab.factors(grid, cfg.dt));

    let mut field = initial.clone();
    record.push(cfg.t0, &field, cfg.store_fields);

    for step in 1..=cfg.n_steps {
        let t = cfg.t0 + (step - 1) as f64 * cfg.dt;
        if let Err(e) = stepper.step(&mut field, t) {
            return abort(e, record);
        }
        if let Some(d) = &damp {
            for (a, f) in field.amps_mut().iter_mut().zip(d.iter()) {
                *a *= *f;
            }
        }
        let m = field.max_abs();
        if !m.is_finite() {
            return abort(CoreError::NonFinite { step }, record);
        }
        if m > cfg.overflow_ceiling {
            return abort(
                CoreError::Overflow {
                    step,
                    max_abs: m,
                    ceiling: cfg.overflow_ceiling,
                },
                record,
            );
        }
        if step % cfg.record_stride == 0 || step == cfg.n_steps {
            record.push(cfg.t0 + step as f64 * cfg.dt, &field, cfg.store_fields);
        }
    }
    Ok(record)
}

/// One Strang-split step; plans FFTs on every call, so prefer [`propagate`]
/// for long runs.
pub fn step_splitstep(
    field: &mut ComplexWaveField,
    potential: &ComovingPotential,
    nonlinear: Option<&NonlinearTerm>,
    t: f64,
    dt: f64,
) -> Result<(), CoreError> {
    SplitStep::new(field.grid(), potential, nonlinear, dt).step(field, t)
}

/// One Crank-Nicolson step.
pub fn step_crank_nicolson(
    field: &mut ComplexWaveField,
    potential: &ComovingPotential,
    nonlinear: Option<&NonlinearTerm>,
    t: f64,
    dt: f64,
) -> Result<(), CoreError> {
    CrankNicolson::new(field.grid(), potential, nonlinear, dt).step(field, t)
}

struct SplitStep<'a> {
    grid: Grid1D,
    potential: &'a ComovingPotential,
    nonlinear: Option<NonlinearTerm>,
    dt: f64,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    scratch: Vec<C64>,
    kinetic: Vec<C64>,
    u_row: Vec<C64>,
    /// Potential row is time-independent when the frame does not accelerate.
    static_row: bool,
    row_ready: bool,
}

impl<'a> SplitStep<'a> {
    fn new(
        grid: Grid1D,
        potential: &'a ComovingPotential,
        nonlinear: Option<&NonlinearTerm>,
        dt: f64,
    ) -> Self {
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(grid.n());
        let ifft = planner.plan_fft_inverse(grid.n());
        let scratch_len = fft
            .get_inplace_scratch_len()
            .max(ifft.get_inplace_scratch_len());
        let kinetic = (0..grid.n())
            .map(|j| {
                let k = grid.k(j);
                C64::cis(-0.5 * k * k * dt)
            })
            .collect();
        SplitStep {
            grid,
            potential,
            nonlinear: nonlinear.copied(),
            dt,
            fft,
            ifft,
            scratch: vec![C64::new(0.0, 0.0); scratch_len],
            kinetic,
            u_row: vec![C64::new(0.0, 0.0); grid.n()],
            static_row: potential.frame().a == 0.0,
            row_ready: false,
        }
    }

    fn half_potential(&self, field: &mut ComplexWaveField) {
        let half = 0.5 * self.dt;
        let nl = self.nonlinear;
        for (a, u) in field.amps_mut().iter_mut().zip(self.u_row.iter()) {
            let v_nl = nl.map_or(0.0, |n| n.potential_of(*a));
            // exp(-i (V_R + nl) h) * exp(V_I h)
            let factor = C64::from_polar((u.im * half).exp(), -(u.re + v_nl) * half);
            *a *= factor;
        }
    }
}

impl Stepper for SplitStep<'_> {
    fn step(&mut self, field: &mut ComplexWaveField, t: f64) -> Result<(), CoreError> {
        if !self.static_row || !self.row_ready {
            let t_mid = t + 0.5 * self.dt;
            for (j, u) in self.u_row.iter_mut().enumerate() {
                *u = self.potential.u_lab(self.grid.x(j), t_mid);
            }
            self.row_ready = true;
        }
        self.half_potential(field);
        self.fft
            .process_with_scratch(field.amps_mut(), &mut self.scratch);
        for (a, k) in field.amps_mut().iter_mut().zip(self.kinetic.iter()) {
            *a *= *k;
        }
        self.ifft
            .process_with_scratch(field.amps_mut(), &mut self.scratch);
        let inv_n = 1.0 / self.grid.n() as f64;
        for a in field.amps_mut() {
            *a *= inv_n;
        }
        self.half_potential(field);
        Ok(())
    }
}

struct CrankNicolson<'a> {
    grid: Grid1D,
    potential: &'a ComovingPotential,
    nonlinear: Option<NonlinearTerm>,
    dt: f64,
    /// Off-diagonal of `I + i dt/2 H`: `-i dt / (4 dx^2)`.
    off: C64,
    u_row: Vec<C64>,
    static_row: bool,
    row_ready: bool,
    diag: Vec<C64>,
    rhs: Vec<C64>,
    // Thomas workspace for the cyclic solve.
    cp: Vec<C64>,
    y: Vec<C64>,
    z: Vec<C64>,
}

impl<'a> CrankNicolson<'a> {
    fn new(
        grid: Grid1D,
        potential: &'a ComovingPotential,
        nonlinear: Option<&NonlinearTerm>,
        dt: f64,
    ) -> Self {
        let n = grid.n();
        let dx2 = grid.dx() * grid.dx();
        CrankNicolson {
            grid,
            potential,
            nonlinear: nonlinear.copied(),
            dt,
            off: C64::new(0.0, -dt / (4.0 * dx2)),
            u_row: vec![C64::new(0.0, 0.0); n],
            static_row: potential.frame().a == 0.0,
            row_ready: false,
            diag: vec![C64::new(0.0, 0.0); n],
            rhs: vec![C64::new(0.0, 0.0); n],
            cp: vec![C64::new(0.0, 0.0); n],
            y: vec![C64::new(0.0, 0.0); n],
            z: vec![C64::new(0.0, 0.0); n],
        }
    }

    /// Periodic tridiagonal solve (constant off-diagonal `off`, diagonal
    /// `diag`) by rank-one correction of an open-chain Thomas solve.
    fn solve_cyclic(&mut self) -> Result<(), CoreError> {
        let n = self.grid.n();
        let off = self.off;
        let gamma = -self.diag[0];
        if gamma.norm_sqr() < 1e-300 {
            return Err(CoreError::SolveFailure("degenerate corner pivot".into()));
        }
        // Modified open-chain diagonal endpoints.
        let b0 = self.diag[0] - gamma;
        let bn = self.diag[n - 1] - off * off / gamma;

        // Forward sweep on two right-hand sides at once: the actual rhs
        // (into y) and the corner-correction vector u = (gamma, 0, .., off)
        // (into z).
        let mut beta = b0;
        if beta.norm_sqr() < 1e-300 {
            return Err(CoreError::SolveFailure("zero pivot".into()));
        }
        self.y[0] = self.rhs[0] / beta;
        self.z[0] = gamma / beta;
        for i in 1..n {
            self.cp[i - 1] = off / beta;
            let b_i = if i == n - 1 { bn } else { self.diag[i] };
            beta = b_i - off * self.cp[i - 1];
            if beta.norm_sqr() < 1e-300 {
                return Err(CoreError::SolveFailure("zero pivot".into()));
            }
            let u_i = if i == n - 1 {
                off
            } else {
                C64::new(0.0, 0.0)
            };
            self.y[i] = (self.rhs[i] - off * self.y[i - 1]) / beta;
            self.z[i] = (u_i - off * self.z[i - 1]) / beta;
        }
        for i in (0..n - 1).rev() {
            self.y[i] = self.y[i] - self.cp[i] * self.y[i + 1];
            self.z[i] = self.z[i] - self.cp[i] * self.z[i + 1];
        }
        // x = y - z (v . y) / (1 + v . z), v = (1, 0, .., off/gamma).
        let vy = self.y[0] + off / gamma * self.y[n - 1];
        let vz = C64::new(1.0, 0.0) + self.z[0] + off / gamma * self.z[n - 1];
        if vz.norm_sqr() < 1e-300 {
            return Err(CoreError::SolveFailure(
                "singular cyclic correction".into(),
            ));
        }
        let coef = vy / vz;
        for i in 0..n {
            self.y[i] = self.y[i] - coef * self.z[i];
        }
        Ok(())
    }
}

impl Stepper for CrankNicolson<'_> {
    fn step(&mut self, field: &mut ComplexWaveField, t: f64) -> Result<(), CoreError> {
        let n = self.grid.n();
        let dx2 = self.grid.dx() * self.grid.dx();
        if !self.static_row || !self.row_ready {
            let t_mid = t + 0.5 * self.dt;
            for (j, u) in self.u_row.iter_mut().enumerate() {
                *u = self.potential.u_lab(self.grid.x(j), t_mid);
            }
            self.row_ready = true;
        }
        let half_i = C64::new(0.0, 0.5 * self.dt);
        let amps = field.amps();
        for j in 0..n {
            // Diagonal of H with the nonlinearity lagged at the current field.
            let v_nl = self.nonlinear.map_or(0.0, |nl| nl.potential_of(amps[j]));
            let h_jj = C64::new(1.0 / dx2 + v_nl, 0.0) + self.u_row[j];
            self.diag[j] = C64::new(1.0, 0.0) + half_i * h_jj;
            let left = amps[(j + n - 1) % n];
            let right = amps[(j + 1) % n];
            // (I - i dt/2 H) psi.
            self.rhs[j] =
                (C64::new(1.0, 0.0) - half_i * h_jj) * amps[j] - self.off * (left + right);
        }
        self.solve_cyclic()?;
        field.amps_mut().copy_from_slice(&self.y);
        Ok(())
    }
}
