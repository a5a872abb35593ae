use crate::error::CoreError;
use crate::family::SolutionFamily;
use crate::frame::FrameParams;
use crate::grid::Grid1D;
use crate::profiles::Profile;
use crate::C64;
use serde::Serialize;

/// Step used to difference `V_R` for force expectations.
const FORCE_FD_STEP: f64 = 1e-6;

/// Complex potential specified in the comoving coordinate and evaluated in
/// the lab through `q = x - a t^2 / 2`.
#[derive(Debug, Clone)]
pub struct ComovingPotential {
    v_real: Profile,
    v_imag: Profile,
    frame: FrameParams,
}

impl ComovingPotential {
    pub fn new(v_real: Profile, v_imag: Profile, frame: FrameParams) -> Self {
        ComovingPotential {
            v_real,
            v_imag,
            frame,
        }
    }

    /// The potential a family rides on. For synthesized families the gain
    /// evaluates to NaN wherever the current is undefined; propagation will
    /// stop with a non-finite field rather than silently patching it.
    pub fn from_family(f: &SolutionFamily) -> Self {
        ComovingPotential {
            v_real: f.v_real(),
            v_imag: f.v_imag(),
            frame: f.frame(),
        }
    }

    pub fn free() -> Self {
        ComovingPotential {
            v_real: Profile::zero(),
            v_imag: Profile::zero(),
            frame: FrameParams { a: 0.0, mu: 0.0 },
        }
    }

    /// Spatially uniform gain (or loss, for negative `gamma`) and nothing else.
    pub fn uniform_gain(gamma: f64) -> Self {
        ComovingPotential {
            v_real: Profile::zero(),
            v_imag: Profile::constant(gamma),
            frame: FrameParams { a: 0.0, mu: 0.0 },
        }
    }

    pub fn frame(&self) -> FrameParams {
        self.frame
    }

    pub fn v_real_at_q(&self, q: f64) -> f64 {
        self.v_real.eval(q)
    }

    pub fn v_imag_at_q(&self, q: f64) -> f64 {
        self.v_imag.eval(q)
    }

    /// Lab-frame value `V_R(q) + i V_I(q)` at position `x`, time `t`.
    pub fn u_lab(&self, x: f64, t: f64) -> C64 {
        let q = self.frame.q_of(x, t);
        C64::new(self.v_real.eval(q), self.v_imag.eval(q))
    }

    /// One row of lab-frame values over a grid.
    pub fn u_row(&self, grid: Grid1D, t: f64) -> Vec<C64> {
        (0..grid.n()).map(|j| self.u_lab(grid.x(j), t)).collect()
    }

    /// `d V_R / d x` in the lab frame (equals the comoving derivative).
    pub fn dv_real_dx(&self, x: f64, t: f64) -> f64 {
        let q = self.frame.q_of(x, t);
        let h = FORCE_FD_STEP;
        (self.v_real.eval(q + h) - self.v_real.eval(q - h)) / (2.0 * h)
    }
}

/// Self-interaction `sigma |Psi|^p Psi` added to the linear equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonlinearTerm {
    pub sigma: f64,
    pub p: f64,
}

impl NonlinearTerm {
    pub fn new(sigma: f64, p: f64) -> Result<Self, CoreError> {
        if !sigma.is_finite() || !p.is_finite() || p <= 0.0 {
            return Err(CoreError::invalid_parameter(
                "nonlinear term needs finite sigma and p > 0",
            ));
        }
        Ok(NonlinearTerm { sigma, p })
    }

    /// `sigma |amp|^p` for one amplitude.
    pub fn potential_of(&self, amp: C64) -> f64 {
        if self.p == 2.0 {
            self.sigma * amp.norm_sqr()
        } else {
            self.sigma * amp.norm_sqr().powf(0.5 * self.p)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lab_evaluation_follows_the_frame() {
        let fam = SolutionFamily::dark_soliton(1.0, 2.0).unwrap();
        let pot = ComovingPotential::from_family(&fam);
        // V_R = -a q with q = x - t^2 at a = 2.
        let u = pot.u_lab(3.0, 1.0);
        assert!((u.re - (-2.0 * 2.0)).abs() < 1e-14);
        let vi = 3.0 / std::f64::consts::SQRT_2 * (1.0 / 2.0f64.cosh().powi(2));
        assert!((u.im - vi).abs() < 1e-14);
    }

    #[test]
    fn force_matches_analytic_slope() {
        let fam = SolutionFamily::const_intensity_inv_harm(1.0, 1.0, 1.0).unwrap();
        let pot = ComovingPotential::from_family(&fam);
        // V_R = -q^2 so dV/dx = -2 q; at t = 0, q = x.
        assert!((pot.dv_real_dx(1.5, 0.0) + 3.0).abs() < 1e-8);
    }

    #[test]
    fn uniform_gain_is_flat() {
        let pot = ComovingPotential::uniform_gain(0.25);
        for x in [-7.0, 0.0, 3.2] {
            let u = pot.u_lab(x, 5.0);
            assert_eq!(u.re, 0.0);
            assert_eq!(u.im, 0.25);
        }
    }

    #[test]
    fn nonlinear_term_validation_and_value() {
        assert!(NonlinearTerm::new(0.1, 0.0).is_err());
        assert!(NonlinearTerm::new(f64::NAN, 2.0).is_err());
        let nl = NonlinearTerm::new(0.5, 2.0).unwrap();
        assert!((nl.potential_of(C64::new(3.0, 4.0)) - 12.5).abs() < 1e-12);
        let quartic = NonlinearTerm::new(2.0, 4.0).unwrap();
        assert!((quartic.potential_of(C64::new(0.0, 2.0)) - 32.0).abs() < 1e-12);
    }
}
