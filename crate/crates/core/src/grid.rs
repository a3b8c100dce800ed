use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Uniform periodic-box discretization: `resolution` points per axis on a
/// cube of edge `box_length` (viscosity-1 units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    box_length: f64,
    resolution: usize,
    spacing: f64,
}

impl Grid {
    /// `resolution` must be at least 8, even, and 2^a 3^b smooth (the
    /// verification suites run the 32 / 48 / 64 ladder).
    pub fn new(box_length: f64, resolution: usize) -> Result<Self> {
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(CoreError::InvalidGrid(format!(
                "box_length must be positive, got {box_length}"
            )));
        }
        let mut m = resolution;
        while m % 2 == 0 {
            m /= 2;
        }
        while m % 3 == 0 {
            m /= 3;
        }
        if resolution < 8 || resolution % 2 != 0 || m != 1 {
            return Err(CoreError::InvalidGrid(format!(
                "resolution must be even, 2^a 3^b smooth and >= 8, got {resolution}"
            )));
        }
        // Round box_length to an exact multiple of the spacing (at most one
        // ulp) so spacing * resolution == box_length holds exactly.
        let spacing = box_length / resolution as f64;
        let box_length = spacing * resolution as f64;
        Ok(Self {
            box_length,
            resolution,
            spacing,
        })
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Total number of grid points.
    pub fn n_points(&self) -> usize {
        self.resolution * self.resolution * self.resolution
    }

    pub fn volume(&self) -> f64 {
        self.box_length * self.box_length * self.box_length
    }

    /// Volume element of the quadrature cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing * self.spacing * self.spacing
    }

    pub fn center(&self) -> [f64; 3] {
        let c = 0.5 * self.box_length;
        [c, c, c]
    }

    /// Physical coordinates along one axis.
    pub fn coords(&self) -> Vec<f64> {
        (0..self.resolution).map(|i| i as f64 * self.spacing).collect()
    }

    /// Signed integer mode numbers in FFT storage order.
    pub fn mode_numbers(&self) -> Vec<i64> {
        let n = self.resolution as i64;
        (0..n).map(|i| if 2 * i < n { i } else { i - n }).collect()
    }

    /// Angular wavenumbers 2*pi*m/L in FFT order, Nyquist mode included
    /// with negative sign (used for |k|^2 symbols).
    pub fn wavenumbers(&self) -> Vec<f64> {
        let base = 2.0 * std::f64::consts::PI / self.box_length;
        self.mode_numbers().iter().map(|&m| m as f64 * base).collect()
    }

    /// Wavenumbers for first derivatives: the Nyquist mode is zeroed to keep
    /// odd-order spectral derivatives of real data real.
    pub fn deriv_wavenumbers(&self) -> Vec<f64> {
        let n = self.resolution;
        let mut k = self.wavenumbers();
        k[n / 2] = 0.0;
        k
    }

    /// Companion grid of the parabolic rescaling x -> lambda x: same sample
    /// count on a box whose edge is divided by `lambda`.
    pub fn rescaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(CoreError::IncommensurateScale(lambda));
        }
        Grid::new(self.box_length / lambda, self.resolution)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_times_resolution_is_exact() {
        for &n in &[8usize, 16, 24, 32, 48, 64, 96, 128] {
            let g = Grid::new(2.0 * std::f64::consts::PI, n).unwrap();
            assert_eq!(g.spacing() * n as f64, g.box_length());
        }
    }

    #[test]
    fn rejects_bad_resolutions() {
        assert!(Grid::new(1.0, 7).is_err());
        assert!(Grid::new(1.0, 20).is_err());
        assert!(Grid::new(1.0, 9).is_err());
        assert!(Grid::new(1.0, 4).is_err());
        assert!(Grid::new(-1.0, 16).is_err());
        assert!(Grid::new(1.0, 48).is_ok());
    }

    #[test]
    fn wavenumber_layout() {
        let g = Grid::new(2.0 * std::f64::consts::PI, 8).unwrap();
        let m = g.mode_numbers();
        assert_eq!(m, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        let kd = g.deriv_wavenumbers();
        assert_eq!(kd[4], 0.0);
        assert_eq!(kd[1], 1.0);
    }
}
