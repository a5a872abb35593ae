use crate::error::CoreError;
use serde::Serialize;
use std::f64::consts::PI;

/// Uniform spatial grid on `[x_min, x_max)` with periodic identification of
/// the endpoints. Point `j` sits at `x_min + j dx` with `dx = (x_max - x_min)/n`;
/// the right endpoint itself is not stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n: usize,
}

impl Grid1D {
    /// Fewer points than this cannot resolve anything of interest and tends
    /// to hide indexing bugs, so it is rejected outright.
    pub const MIN_POINTS: usize = 16;

    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self, CoreError> {
        if !x_min.is_finite() || !x_max.is_finite() {
            return Err(CoreError::invalid_parameter("grid bounds must be finite"));
        }
        if x_max <= x_min {
            return Err(CoreError::invalid_parameter(format!(
                "grid needs x_max > x_min, got [{x_min}, {x_max}]"
            )));
        }
        if n < Self::MIN_POINTS {
            return Err(CoreError::invalid_parameter(format!(
                "grid needs at least {} points, got {n}",
                Self::MIN_POINTS
            )));
        }
        Ok(Grid1D { x_min, x_max, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        debug_assert!(j < self.n);
        self.x_min + j as f64 * self.dx()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Wavenumber of FFT bin `j` in standard ordering: non-negative
    /// frequencies first, then the negative ones.
    pub fn k(&self, j: usize) -> f64 {
        debug_assert!(j < self.n);
        let dk = 2.0 * PI / self.length();
        if j <= self.n / 2 {
            j as f64 * dk
        } else {
            (j as f64 - self.n as f64) * dk
        }
    }

    /// Nyquist wavenumber; spectral content beyond it aliases.
    pub fn k_max(&self) -> f64 {
        PI / self.dx()
    }

    /// Index of the grid point nearest to `x`, clamped to the domain.
    pub fn nearest_index(&self, x: f64) -> usize {
        let j = ((x - self.x_min) / self.dx()).round();
        if j <= 0.0 {
            0
        } else {
            (j as usize).min(self.n - 1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_tiny_and_inverted_grids() {
        assert!(Grid1D::new(0.0, 1.0, 8).is_err());
        assert!(Grid1D::new(1.0, 0.0, 64).is_err());
        assert!(Grid1D::new(0.0, f64::INFINITY, 64).is_err());
        assert!(Grid1D::new(0.0, 1.0, 16).is_ok());
    }

    #[test]
    fn spacing_and_points() {
        let g = Grid1D::new(-2.0, 2.0, 16).unwrap();
        assert_eq!(g.dx(), 0.25);
        assert_eq!(g.x(0), -2.0);
        assert_eq!(g.x(15), 1.75);
        assert_eq!(g.xs().len(), 16);
    }

    #[test]
    fn wavenumbers_follow_fft_ordering() {
        let g = Grid1D::new(0.0, 1.0, 16).unwrap();
        let dk = 2.0 * PI;
        assert!((g.k(0) - 0.0).abs() < 1e-15);
        assert!((g.k(1) - dk).abs() < 1e-12);
        assert!((g.k(8) - 8.0 * dk).abs() < 1e-12);
        assert!((g.k(9) + 7.0 * dk).abs() < 1e-12);
        assert!((g.k(15) + dk).abs() < 1e-12);
        assert!((g.k_max() - 8.0 * dk).abs() < 1e-12);
    }

    #[test]
    fn nearest_index_clamps() {
        let g = Grid1D::new(0.0, 1.0, 16).unwrap();
        assert_eq!(g.nearest_index(-5.0), 0);
        assert_eq!(g.nearest_index(5.0), 15);
        assert_eq!(g.nearest_index(0.26), 4);
    }
}
