//! Complex fields on a grid and their elementary algebra.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::GridFft;
use crate::grid::{Configuration, Grid};
use crate::interp::Stencil;

/// Norms at or below this are treated as zero.
pub const UNDERFLOW_NORM: f64 = 1e-300;

/// A wave function sampled on a grid at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: Grid,
    values: Vec<Complex64>,
    time: f64,
}

impl WaveFunction {
    pub fn new(grid: Grid, values: Vec<Complex64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        Ok(WaveFunction { grid, values, time })
    }

    pub fn from_fn(grid: &Grid, time: f64, f: impl Fn(&Configuration) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        WaveFunction { grid: grid.clone(), values, time }
    }

    pub fn zeros(grid: &Grid, time: f64) -> Self {
        WaveFunction { grid: grid.clone(), values: vec![Complex64::new(0.0, 0.0); grid.len()], time }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    #[inline]
    pub fn time(&self) -> f64 {
        self.time
    }

    pub(crate) fn set_time(&mut self, time: f64) {
        self.time = time;
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    /// `Σ|ψ|² Δx^d`.
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(Complex64::norm_sqr).sum::<f64>() * self.grid.cell_volume()
    }

    /// Rescales to unit norm; the ray is unchanged.
    pub fn normalize(&self) -> Result<Self> {
        let n2 = self.norm_sq();
        if !(n2 > UNDERFLOW_NORM) {
            return Err(Error::ZeroNorm(n2));
        }
        let mut out = self.scaled(Complex64::new(1.0 / n2.sqrt(), 0.0));
        // one more pass pulls the residual down to a few ulps
        let n2 = out.norm_sq();
        out.values.iter_mut().for_each(|z| *z /= n2.sqrt());
        Ok(out)
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        WaveFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|z| z * factor).collect(),
            time: self.time,
        }
    }

    /// `Σ conj(ψ) φ Δx^d`.
    pub fn inner(&self, other: &WaveFunction) -> Result<Complex64> {
        self.grid.check_same(&other.grid)?;
        let sum: Complex64 =
            self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum();
        Ok(sum * self.grid.cell_volume())
    }

    /// `a·self + b·other` on a shared grid.
    pub fn combine(&self, a: Complex64, other: &WaveFunction, b: Complex64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(WaveFunction { grid: self.grid.clone(), values, time: self.time })
    }

    /// `‖self − other‖₂`.
    pub fn l2_distance(&self, other: &WaveFunction) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum();
        Ok((s * self.grid.cell_volume()).sqrt())
    }

    /// Pointwise `|ψ|²`.
    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(Complex64::norm_sqr).collect()
    }

    pub fn max_density(&self) -> f64 {
        self.values.iter().map(Complex64::norm_sqr).fold(0.0, f64::max)
    }

    /// Spectral gradient, one complex field per axis.
    pub fn gradient(&self) -> Vec<Vec<Complex64>> {
        self.gradient_with(&mut GridFft::new(&self.grid))
    }

    pub fn gradient_with(&self, fft: &mut GridFft) -> Vec<Vec<Complex64>> {
        let mut spectrum = self.values.clone();
        fft.forward(&mut spectrum);
        (0..self.grid.dim()).map(|axis| spectral_derivative(&self.grid, &spectrum, axis, fft)).collect()
    }

    /// Value at an off-grid point (cubic / bicubic interpolation).
    pub fn value_at(&self, q: &Configuration) -> Complex64 {
        Stencil::new(&self.grid, q).apply(&self.values)
    }
}

/// Inverse transform of `i k_axis · spectrum`. The Nyquist bin is dropped.
pub(crate) fn spectral_derivative(
    grid: &Grid,
    spectrum: &[Complex64],
    axis: usize,
    fft: &mut GridFft,
) -> Vec<Complex64> {
    let ax = grid.axis(axis);
    let n = ax.points;
    let stride = grid.stride(axis);
    let k: Vec<f64> = (0..n).map(|j| if j == n / 2 { 0.0 } else { ax.wave_number(j) }).collect();
    let mut out: Vec<Complex64> = spectrum
        .iter()
        .enumerate()
        .map(|(flat, z)| {
            let j = (flat / stride) % n;
            z * Complex64::new(0.0, k[j])
        })
        .collect();
    fft.inverse(&mut out);
    out
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn gaussian(grid: &Grid, x0: f64, sigma: f64) -> WaveFunction {
        let a = (2.0 * PI * sigma * sigma).powf(-0.25);
        WaveFunction::from_fn(grid, 0.0, |q| {
            let d = q.coord(0) - x0;
            Complex64::new(a * (-d * d / (4.0 * sigma * sigma)).exp(), 0.0)
        })
    }

    fn fd4(values: &[Complex64], h: f64) -> Vec<Complex64> {
        let n = values.len();
        (0..n)
            .map(|j| {
                let at = |o: isize| values[((j as isize + o).rem_euclid(n as isize)) as usize];
                (at(-2) - at(-1) * 8.0 + at(1) * 8.0 - at(2)) / (12.0 * h)
            })
            .collect()
    }

    #[test]
    fn normalize_scales_back_to_unit_norm() {
        let g = Grid::line(40.0, 512).unwrap();
        let psi = gaussian(&g, 0.0, 1.0);
        let doubled = psi.scaled(Complex64::new(2.0, 0.0));
        let back = doubled.normalize().unwrap();
        assert!((back.norm_sq() - 1.0).abs() <= 1e-12);
        assert!(back.l2_distance(&psi).unwrap() < 1e-12);
        let same = psi.normalize().unwrap();
        assert!(same.l2_distance(&psi).unwrap() < 1e-12);
    }

    #[test]
    fn zero_field_has_no_direction() {
        let g = Grid::line(10.0, 64).unwrap();
        assert!(matches!(WaveFunction::zeros(&g, 0.0).normalize(), Err(Error::ZeroNorm(_))));
    }

    #[test]
    fn inner_products() {
        let g = Grid::line(40.0, 512).unwrap();
        let psi = gaussian(&g, 0.0, 0.5);
        assert!((psi.inner(&psi).unwrap() - 1.0).norm() < 1e-12);
        let i_psi = psi.scaled(Complex64::i());
        assert!((psi.inner(&i_psi).unwrap() - Complex64::i()).norm() < 1e-12);
        // twenty widths apart
        let far = gaussian(&g, 10.0, 0.5);
        assert!(psi.inner(&far).unwrap().norm() < 1e-12);
        let other = WaveFunction::zeros(&Grid::line(20.0, 512).unwrap(), 0.0);
        assert_eq!(psi.inner(&other), Err(Error::GridMismatch));
    }

    #[test]
    fn density_of_plane_wave_and_gaussian() {
        let l = 8.0 * PI;
        let g = Grid::line(l, 256).unwrap();
        let wave = WaveFunction::from_fn(&g, 0.0, |q| Complex64::from_polar(1.0, 2.0 * q.coord(0)))
            .normalize()
            .unwrap();
        for r in wave.density() {
            assert!((r - 1.0 / l).abs() < 1e-14);
        }
        let g = Grid::line(40.0, 512).unwrap();
        let psi = gaussian(&g, 0.0, 1.0);
        // x = 0 is grid index N/2
        assert!((psi.density()[256] - (2.0 * PI).powf(-0.5)).abs() < 1e-14);
        let rotated = psi.scaled(Complex64::from_polar(1.0, 0.7));
        for (a, b) in psi.density().iter().zip(rotated.density()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn gradient_of_fourier_mode_and_constant() {
        let g = Grid::line(8.0 * PI, 256).unwrap();
        let wave = WaveFunction::from_fn(&g, 0.0, |q| Complex64::from_polar(1.0, 2.0 * q.coord(0)));
        let grad = wave.gradient();
        for (d, v) in grad[0].iter().zip(wave.values()) {
            assert!((d - v * Complex64::new(0.0, 2.0)).norm() < 1e-10);
        }
        let flat = WaveFunction::from_fn(&g, 0.0, |_| Complex64::new(0.3, -0.2));
        assert!(flat.gradient()[0].iter().all(|d| d.norm() < 1e-14));
    }

    #[test]
    fn gradient_of_gaussian_matches_closed_form_and_finite_differences() {
        let g = Grid::line(40.0, 512).unwrap();
        let psi = gaussian(&g, 0.0, 1.0);
        let grad = psi.gradient();
        // x = 1 is index 256 + 12.8: not on the grid, so check the nearest
        // on-grid point x = 1.015625 (index 269) against the closed form.
        let j = 269;
        let x = g.axis(0).coord(j);
        let expected = -x / 2.0 * psi.values()[j];
        assert!((grad[0][j] - expected).norm() < 1e-8);
        let fd = fd4(psi.values(), g.axis(0).spacing());
        let worst = grad[0].iter().zip(&fd).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(worst <= 1e-6, "spectral vs 4th-order FD: {worst:e}");
    }

    #[test]
    fn gradient_in_two_dimensions() {
        let g = Grid::plane((2.0 * PI, 32), (4.0 * PI, 64)).unwrap();
        let psi = WaveFunction::from_fn(&g, 0.0, |q| {
            Complex64::from_polar(1.0, 3.0 * q.coord(0) - 0.5 * q.coord(1))
        });
        let grad = psi.gradient();
        for (i, v) in psi.values().iter().enumerate() {
            assert!((grad[0][i] - v * Complex64::new(0.0, 3.0)).norm() < 1e-10);
            assert!((grad[1][i] - v * Complex64::new(0.0, -0.5)).norm() < 1e-10);
        }
    }
}
