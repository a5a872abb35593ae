//! Residual checks: algebraic balances on the comoving profiles, and
//! finite-difference defects of candidate waves against the evolution
//! equation itself. The latter drive a refinement ladder used to settle
//! constructions that admit more than one plausible closed form: the
//! candidate whose defect shrinks at the stencil's order is the solution;
//! a defect that saturates exposes an imposter.

use crate::error::CoreError;
use crate::family::{SolutionFamily, PSI_FLOOR};
use crate::frame::FrameParams;
use crate::potential::{ComovingPotential, NonlinearTerm};
use crate::profiles::{AuxiliaryG, EnvelopeProfile, Profile};
use crate::C64;
use serde::Serialize;

/// Below this a ladder level is considered at the rounding floor.
pub const RESIDUAL_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResidualReport {
    pub l_inf: f64,
    /// Root-mean-square over the evaluated samples.
    pub l2: f64,
    pub sample_count: usize,
    /// Samples dropped because an ingredient could not be evaluated there.
    pub skipped: usize,
}

impl ResidualReport {
    fn from_values(values: &[f64], skipped: usize) -> Self {
        let l_inf = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let l2 = if values.is_empty() {
            0.0
        } else {
            (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
        };
        ResidualReport {
            l_inf,
            l2,
            sample_count: values.len(),
            skipped,
        }
    }
}

/// Defect of `G^2 = psi^3 (psi'' + 2 (mu - a q - V_R) psi)` at each sample.
pub fn ode_residual_g(
    envelope: &EnvelopeProfile,
    g: &AuxiliaryG,
    v_real: &Profile,
    frame: FrameParams,
    samples: &[f64],
) -> ResidualReport {
    let mut values = Vec::with_capacity(samples.len());
    let mut skipped = 0usize;
    for &q in samples {
        let gv = match g.g(q) {
            Ok(v) => v,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        let psi = envelope.psi(q);
        let rhs = psi.powi(3)
            * (envelope.d2psi(q)
                + 2.0 * (frame.mu - frame.a * q - v_real.eval(q)) * psi);
        values.push(gv * gv - rhs);
    }
    ResidualReport::from_values(&values, skipped)
}

/// Defect of `V_I = G' / (2 psi^2)`; samples where the envelope is below
/// the division floor are skipped rather than amplified.
pub fn ode_residual_vi(
    envelope: &EnvelopeProfile,
    g: &AuxiliaryG,
    v_imag: &Profile,
    samples: &[f64],
) -> ResidualReport {
    let mut values = Vec::with_capacity(samples.len());
    let mut skipped = 0usize;
    for &q in samples {
        let psi = envelope.psi(q);
        if psi.abs() < PSI_FLOOR {
            skipped += 1;
            continue;
        }
        let dg = match g.dg(q) {
            Ok(v) => v,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        values.push(v_imag.eval(q) - dg / (2.0 * psi * psi));
    }
    ResidualReport::from_values(&values, skipped)
}

/// Anything that can be sampled as a lab-frame wave.
pub trait WaveSampler {
    fn eval(&self, x: f64, t: f64) -> Result<C64, CoreError>;
}

impl WaveSampler for SolutionFamily {
    fn eval(&self, x: f64, t: f64) -> Result<C64, CoreError> {
        self.eval_lab(x, t)
    }
}

/// A family's wave with the time-phase rate replaced: identical envelope
/// and transverse phase, but `S(t)` accrues with `mu` instead of the
/// family's own value. Used to pit alternative rates against the evolution
/// equation.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedMuWave<'a> {
    family: &'a SolutionFamily,
    mu: f64,
}

impl<'a> ShiftedMuWave<'a> {
    pub fn new(family: &'a SolutionFamily, mu: f64) -> Self {
        ShiftedMuWave { family, mu }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

impl WaveSampler for ShiftedMuWave<'_> {
    fn eval(&self, x: f64, t: f64) -> Result<C64, CoreError> {
        // S(t) = a^2 t^3 / 6 - mu t, so swapping the rate multiplies the
        // wave by exp(i (mu_family - mu) t).
        let base = self.family.eval_lab(x, t)?;
        let delta = self.family.frame().mu - self.mu;
        Ok(base * C64::cis(delta * t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StencilOrder {
    Second,
    Fourth,
}

/// Where and how finely to probe the evolution equation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PdeProbe {
    pub x_lo: f64,
    pub x_hi: f64,
    pub n_samples: usize,
    pub t: f64,
    pub dx: f64,
    pub dt: f64,
    pub order: StencilOrder,
}

impl PdeProbe {
    fn validate(&self) -> Result<(), CoreError> {
        if !(self.x_lo.is_finite() && self.x_hi.is_finite()) || self.x_hi <= self.x_lo {
            return Err(CoreError::invalid_parameter(
                "probe window must be a finite interval",
            ));
        }
        if self.n_samples == 0 {
            return Err(CoreError::invalid_parameter("probe needs samples"));
        }
        if !(self.dx > 0.0) || !(self.dt > 0.0) {
            return Err(CoreError::invalid_parameter(
                "probe steps must be positive",
            ));
        }
        if !self.t.is_finite() {
            return Err(CoreError::invalid_parameter("probe time must be finite"));
        }
        Ok(())
    }

    fn halved(&self) -> Self {
        PdeProbe {
            dx: self.dx / 2.0,
            dt: self.dt / 2.0,
            ..*self
        }
    }
}

/// Finite-difference defect of `i dPsi/dt + (1/2) d2Psi/dx2 - U Psi
/// - sigma |Psi|^p Psi` sampled across the probe window. Samples where the
/// wave cannot be evaluated (at the point or at any stencil neighbour) are
/// skipped and counted.
pub fn pde_residual<W: WaveSampler + ?Sized>(
    wave: &W,
    potential: &ComovingPotential,
    nonlinear: Option<&NonlinearTerm>,
    probe: &PdeProbe,
) -> Result<ResidualReport, CoreError> {
    probe.validate()?;
    let n = probe.n_samples;
    let step = if n > 1 {
        (probe.x_hi - probe.x_lo) / (n - 1) as f64
    } else {
        0.0
    };
    let mut values = Vec::with_capacity(n);
    let mut skipped = 0usize;
    'samples: for i in 0..n {
        let x = probe.x_lo + step * i as f64;
        let t = probe.t;
        let (dx, dt) = (probe.dx, probe.dt);

        macro_rules! sample {
            ($xx:expr, $tt:expr) => {
                match wave.eval($xx, $tt) {
                    Ok(v) => v,
                    Err(_) => {
                        skipped += 1;
                        continue 'samples;
                    }
                }
            };
        }

        let center = sample!(x, t);
        let (d_t, d_xx) = match probe.order {
            StencilOrder::Second => {
                let tp = sample!(x, t + dt);
                let tm = sample!(x, t - dt);
                let xp = sample!(x + dx, t);
                let xm = sample!(x - dx, t);
                (
                    (tp - tm) / (2.0 * dt),
                    (xp - 2.0 * center + xm) / (dx * dx),
                )
            }
            StencilOrder::Fourth => {
                let tp1 = sample!(x, t + dt);
                let tp2 = sample!(x, t + 2.0 * dt);
                let tm1 = sample!(x, t - dt);
                let tm2 = sample!(x, t - 2.0 * dt);
                let xp1 = sample!(x + dx, t);
                let xp2 = sample!(x + 2.0 * dx, t);
                let xm1 = sample!(x - dx, t);
                let xm2 = sample!(x - 2.0 * dx, t);
                (
                    (-tp2 + 8.0 * tp1 - 8.0 * tm1 + tm2) / (12.0 * dt),
                    (-xp2 + 16.0 * xp1 - 30.0 * center + 16.0 * xm1 - xm2)
                        / (12.0 * dx * dx),
                )
            }
        };
        let u = potential.u_lab(x, t);
        let nl = nonlinear.map_or(0.0, |term| term.potential_of(center));
        let r = C64::i() * d_t + 0.5 * d_xx - (u + nl) * center;
        values.push(r.norm());
    }
    Ok(ResidualReport::from_values(&values, skipped))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LadderLevel {
    pub dx: f64,
    pub dt: f64,
    pub l_inf: f64,
    pub l2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualLadder {
    pub label: String,
    pub levels: Vec<LadderLevel>,
    /// Mean observed convergence order between consecutive levels, when at
    /// least one pair sits above the rounding floor.
    pub estimated_order: Option<f64>,
    pub final_l_inf: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConvergenceCriteria {
    /// The finest level must land below this.
    pub residual_threshold: f64,
    /// Order the stencil should exhibit on a genuine solution.
    pub expected_order: f64,
    pub order_tolerance: f64,
}

impl Default for ConvergenceCriteria {
    fn default() -> Self {
        ConvergenceCriteria {
            residual_threshold: 1e-4,
            expected_order: 2.0,
            order_tolerance: 0.5,
        }
    }
}

/// Runs `pde_residual` on `n_levels` copies of the probe, halving both
/// steps per level, and judges the sequence against the criteria.
pub fn residual_ladder<W: WaveSampler + ?Sized>(
    wave: &W,
    potential: &ComovingPotential,
    nonlinear: Option<&NonlinearTerm>,
    base: &PdeProbe,
    n_levels: usize,
    label: &str,
    criteria: &ConvergenceCriteria,
) -> Result<ResidualLadder, CoreError> {
    if n_levels < 3 {
        return Err(CoreError::invalid_parameter(
            "order estimation needs at least 3 ladder levels",
        ));
    }
    let mut probe = *base;
    let mut levels = Vec::with_capacity(n_levels);
    for _ in 0..n_levels {
        let report = pde_residual(wave, potential, nonlinear, &probe)?;
        if report.sample_count == 0 {
            return Err(CoreError::Inconclusive(format!(
                "{label}: every probe sample was skipped"
            )));
        }
        levels.push(LadderLevel {
            dx: probe.dx,
            dt: probe.dt,
            l_inf: report.l_inf,
            l2: report.l2,
        });
        probe = probe.halved();
    }
    let mut orders = Vec::new();
    for pair in levels.windows(2) {
        if pair[0].l_inf > RESIDUAL_FLOOR && pair[1].l_inf > RESIDUAL_FLOOR {
            orders.push((pair[0].l_inf / pair[1].l_inf).log2());
        }
    }
    let estimated_order = if orders.is_empty() {
        None
    } else {
        Some(orders.iter().sum::<f64>() / orders.len() as f64)
    };
    let final_l_inf = levels.last().map(|l| l.l_inf).unwrap_or(f64::INFINITY);
    let floor_hit = final_l_inf <= RESIDUAL_FLOOR;
    let order_ok = match estimated_order {
        Some(o) => (o - criteria.expected_order).abs() <= criteria.order_tolerance,
        None => floor_hit,
    };
    Ok(ResidualLadder {
        label: label.to_string(),
        levels,
        estimated_order,
        final_l_inf,
        converged: final_l_inf <= criteria.residual_threshold && (order_ok || floor_hit),
    })
}

/// Outcome of pitting candidate constructions against each other.
#[derive(Debug, Clone, Serialize)]
pub struct DecisionRecord {
    pub what: String,
    pub ladders: Vec<ResidualLadder>,
    pub selected: Option<usize>,
    pub rule: String,
}

impl DecisionRecord {
    pub fn require_selection(&self) -> Result<usize, CoreError> {
        self.selected.ok_or_else(|| {
            CoreError::Inconclusive(format!("{}: {}", self.what, self.rule))
        })
    }
}

/// Selects the candidate whose ladder converges. More than one converged
/// candidate only yields a selection when the ladders are numerically
/// identical (the candidates coincide); otherwise the decision is left
/// open rather than guessed.
pub fn adjudicate(what: &str, ladders: Vec<ResidualLadder>) -> DecisionRecord {
    let winners: Vec<usize> = ladders
        .iter()
        .enumerate()
        .filter(|(_, l)| l.converged)
        .map(|(i, _)| i)
        .collect();
    let (selected, rule) = match winners.as_slice() {
        [] => (None, "no candidate's residual ladder converged".to_string()),
        [only] => (
            Some(*only),
            format!(
                "unique converged residual ladder ({})",
                ladders[*only].label
            ),
        ),
        [first, rest @ ..] => {
            let same = rest.iter().all(|&i| {
                ladders[i].levels.len() == ladders[*first].levels.len()
                    && ladders[i]
                        .levels
                        .iter()
                        .zip(ladders[*first].levels.iter())
                        .all(|(a, b)| a.l_inf == b.l_inf && a.l2 == b.l2)
            });
            if same {
                (
                    Some(*first),
                    "converged ladders are identical; kept the first".to_string(),
                )
            } else {
                (
                    None,
                    "multiple distinct converged ladders; no selection".to_string(),
                )
            }
        }
    };
    DecisionRecord {
        what: what.to_string(),
        ladders,
        selected,
        rule,
    }
}
