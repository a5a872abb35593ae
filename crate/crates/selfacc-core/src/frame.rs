use crate::error::CoreError;
use serde::Serialize;

/// Uniformly accelerating frame: acceleration `a` and the frequency offset
/// `mu` that fixes the secular part of the phase.
///
/// The frame centre follows `x_c(t) = a t^2 / 2` and the comoving coordinate
/// is `q = x - x_c(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameParams {
    pub a: f64,
    pub mu: f64,
}

impl FrameParams {
    pub fn new(a: f64, mu: f64) -> Result<Self, CoreError> {
        if !a.is_finite() || !mu.is_finite() {
            return Err(CoreError::invalid_parameter(
                "frame parameters must be finite",
            ));
        }
        Ok(FrameParams { a, mu })
    }

    pub fn x_center(&self, t: f64) -> f64 {
        0.5 * self.a * t * t
    }

    pub fn q_of(&self, x: f64, t: f64) -> f64 {
        x - self.x_center(t)
    }

    /// Secular phase `S(t) = a^2 t^3 / 6 - mu t`.
    pub fn s_of_t(&self, t: f64) -> f64 {
        self.a * self.a * t * t * t / 6.0 - self.mu * t
    }

    /// Instantaneous frame velocity `a t`.
    pub fn velocity(&self, t: f64) -> f64 {
        self.a * t
    }

    /// Same frame with a replaced frequency offset.
    pub fn with_mu(&self, mu: f64) -> Self {
        FrameParams { a: self.a, mu }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert!(FrameParams::new(f64::NAN, 0.0).is_err());
        assert!(FrameParams::new(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn secular_phase_values() {
        let f = FrameParams::new(1.0, 0.0).unwrap();
        assert!((f.s_of_t(1.0) - 1.0 / 6.0).abs() < 1e-16);
        let g = FrameParams::new(2.0, 0.5).unwrap();
        // 4 * 27 / 6 - 0.5 * 3 = 18 - 1.5
        assert!((g.s_of_t(3.0) - 16.5).abs() < 1e-12);
    }

    #[test]
    fn comoving_coordinate() {
        let f = FrameParams::new(2.0, 0.0).unwrap();
        assert!((f.x_center(3.0) - 9.0).abs() < 1e-15);
        assert!((f.q_of(10.0, 3.0) - 1.0).abs() < 1e-15);
        assert!((f.velocity(3.0) - 6.0).abs() < 1e-15);
    }
}
