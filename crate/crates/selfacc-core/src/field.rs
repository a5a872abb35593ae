use crate::error::CoreError;
use crate::grid::Grid1D;
use crate::C64;

/// Complex amplitudes sampled on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexWaveField {
    grid: Grid1D,
    amps: Vec<C64>,
}

impl ComplexWaveField {
    pub fn new(grid: Grid1D, amps: Vec<C64>) -> Result<Self, CoreError> {
        if amps.len() != grid.n() {
            return Err(CoreError::GridMismatch(format!(
                "amplitude count {} does not match grid size {}",
                amps.len(),
                grid.n()
            )));
        }
        Ok(ComplexWaveField { grid, amps })
    }

    pub fn from_fn(grid: Grid1D, mut f: impl FnMut(f64) -> C64) -> Self {
        let amps = (0..grid.n()).map(|j| f(grid.x(j))).collect();
        ComplexWaveField { grid, amps }
    }

    pub fn zeros(grid: Grid1D) -> Self {
        ComplexWaveField {
            grid,
            amps: vec![C64::new(0.0, 0.0); grid.n()],
        }
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn density(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.amps
            .iter()
            .map(|a| a.norm_sqr())
            .fold(0.0f64, f64::max)
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.amps.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_must_match_grid() {
        let g = Grid1D::new(0.0, 1.0, 16).unwrap();
        assert!(ComplexWaveField::new(g, vec![C64::new(1.0, 0.0); 15]).is_err());
        assert!(ComplexWaveField::new(g, vec![C64::new(1.0, 0.0); 16]).is_ok());
    }

    #[test]
    fn max_abs_and_finiteness() {
        let g = Grid1D::new(0.0, 1.0, 16).unwrap();
        let mut f = ComplexWaveField::from_fn(g, |x| C64::new(x, -x));
        let expect = (2.0f64).sqrt() * 15.0 / 16.0;
        assert!((f.max_abs() - expect).abs() < 1e-14);
        assert!(f.is_finite());
        f.amps_mut()[3] = C64::new(f64::NAN, 0.0);
        assert!(!f.is_finite());
    }
}
