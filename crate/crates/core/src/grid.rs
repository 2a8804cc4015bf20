//! Periodic uniform lattices and points in configuration space.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported configuration-space dimension.
pub const MAX_DIM: usize = 2;

/// Smallest number of points allowed along an axis.
pub const MIN_POINTS: usize = 16;

/// One periodic axis: `points` samples covering `[-extent/2, extent/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub extent: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(extent: f64, points: usize) -> Result<Self> {
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::InvalidGrid(format!("extent must be positive, got {extent}")));
        }
        if points < MIN_POINTS || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points must be a power of two >= {MIN_POINTS}, got {points}"
            )));
        }
        Ok(Axis { extent, points })
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.extent / self.points as f64
    }

    #[inline]
    pub fn lower(&self) -> f64 {
        -0.5 * self.extent
    }

    /// Coordinate of grid index `j`.
    #[inline]
    pub fn coord(&self, j: usize) -> f64 {
        self.lower() + j as f64 * self.spacing()
    }

    pub fn coords(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(move |j| self.coord(j))
    }

    /// Wave number of FFT bin `j` (standard ordering: non-negative first).
    #[inline]
    pub fn wave_number(&self, j: usize) -> f64 {
        let n = self.points as isize;
        let j = j as isize;
        let signed = if j < n / 2 { j } else { j - n };
        2.0 * PI * signed as f64 / self.extent
    }

    pub fn wave_numbers(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.wave_number(j)).collect()
    }

    /// Maps `x` into the fundamental domain `[-L/2, L/2)`.
    #[inline]
    pub fn wrap(&self, x: f64) -> f64 {
        let l = self.extent;
        let shifted = (x - self.lower()).rem_euclid(l);
        // rem_euclid can return exactly `l` for tiny negative inputs.
        let shifted = if shifted >= l { 0.0 } else { shifted };
        self.lower() + shifted
    }
}

/// A periodic uniform lattice in one or two dimensions.
///
/// Values on the grid are stored row-major: axis 0 varies slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    axes: Vec<Axis>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > MAX_DIM {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2, got {}",
                axes.len()
            )));
        }
        Ok(Grid { axes })
    }

    pub fn line(extent: f64, points: usize) -> Result<Self> {
        Grid::new(vec![Axis::new(extent, points)?])
    }

    pub fn plane(x: (f64, usize), y: (f64, usize)) -> Result<Self> {
        Grid::new(vec![Axis::new(x.0, x.1)?, Axis::new(y.0, y.1)?])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    #[inline]
    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    #[inline]
    pub fn axis(&self, i: usize) -> &Axis {
        &self.axes[i]
    }

    /// Total number of lattice points.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume element `Δx^d`.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::spacing).product()
    }

    /// Row-major stride of axis `i`.
    #[inline]
    pub fn stride(&self, i: usize) -> usize {
        self.axes[i + 1..].iter().map(|a| a.points).product()
    }

    /// Multi-index of flat index `flat`.
    pub fn unflatten(&self, flat: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        let mut rem = flat;
        for i in (0..self.dim()).rev() {
            let n = self.axes[i].points;
            idx[i] = rem % n;
            rem /= n;
        }
        idx
    }

    /// Configuration of the lattice point with flat index `flat`.
    pub fn point(&self, flat: usize) -> Configuration {
        let idx = self.unflatten(flat);
        let mut coords = [0.0; MAX_DIM];
        for (i, c) in coords.iter_mut().enumerate().take(self.dim()) {
            *c = self.axes[i].coord(idx[i]);
        }
        Configuration::from_slice(&coords[..self.dim()])
    }

    /// Reduces every coordinate into the fundamental domain.
    pub fn wrap(&self, q: Configuration) -> Configuration {
        let mut out = q;
        for i in 0..self.dim() {
            out.coords[i] = self.axes[i].wrap(q.coords[i]);
        }
        out
    }

    pub fn contains(&self, q: &Configuration) -> bool {
        q.dim() == self.dim()
            && (0..self.dim()).all(|i| {
                let a = &self.axes[i];
                let x = q.coords[i];
                x >= a.lower() && x < -a.lower()
            })
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// A point in configuration space (one or two real coordinates).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    coords: [f64; MAX_DIM],
    dim: usize,
}

impl Configuration {
    pub fn from_slice(coords: &[f64]) -> Self {
        assert!(
            (1..=MAX_DIM).contains(&coords.len()),
            "configuration dimension must be 1 or 2"
        );
        let mut c = [0.0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Configuration { coords: c, dim: coords.len() }
    }

    pub fn x(x: f64) -> Self {
        Configuration::from_slice(&[x])
    }

    pub fn xy(x: f64, y: f64) -> Self {
        Configuration::from_slice(&[x, y])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.coords[i]
    }

    /// `self + h * v` componentwise.
    #[inline]
    pub(crate) fn displaced(&self, v: &[f64; MAX_DIM], h: f64) -> Self {
        let mut out = *self;
        for i in 0..self.dim {
            out.coords[i] += h * v[i];
        }
        out
    }
}
