use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Configuration, Grid, MAX_DIM};

/// Planck's constant and the mass attached to each configuration axis.
///
/// An infinite mass is allowed and freezes its axis: no kinetic energy and
/// zero guiding velocity along it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub hbar: f64,
    masses: Vec<f64>,
}

impl PhysicalParams {
    pub fn new(hbar: f64, masses: Vec<f64>) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidParams(format!("hbar must be positive, got {hbar}")));
        }
        if masses.is_empty() || masses.len() > MAX_DIM {
            return Err(Error::InvalidParams("need one mass per axis".into()));
        }
        if let Some(m) = masses.iter().find(|m| m.is_nan() || **m <= 0.0) {
            return Err(Error::InvalidParams(format!("masses must be positive, got {m}")));
        }
        Ok(PhysicalParams { hbar, masses })
    }

    /// `ħ = 1` and unit mass along each of `dim` axes.
    pub fn natural(dim: usize) -> Self {
        PhysicalParams::new(1.0, vec![1.0; dim]).expect("natural units are valid")
    }

    #[inline]
    pub fn mass(&self, axis: usize) -> f64 {
        self.masses[axis]
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn dim(&self) -> usize {
        self.masses.len()
    }

    /// `ħ / m` for an axis; zero for a frozen axis.
    #[inline]
    pub fn hbar_over_mass(&self, axis: usize) -> f64 {
        self.hbar / self.masses[axis]
    }

    pub(crate) fn check_grid(&self, grid: &Grid) -> Result<()> {
        if self.dim() == grid.dim() {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "{} masses for a {}-dimensional grid",
                self.dim(),
                grid.dim()
            )))
        }
    }
}

/// Real potential energy sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    grid: Grid,
    values: Vec<f64>,
}

impl Potential {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "potential has {} values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("potential values must be finite".into()));
        }
        Ok(Potential { grid, values })
    }

    pub fn zero(grid: &Grid) -> Self {
        Potential { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(&Configuration) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        Potential::new(grid.clone(), values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Adds a constant energy offset.
    pub fn shifted(&self, offset: f64) -> Result<Self> {
        Potential::new(self.grid.clone(), self.values.iter().map(|v| v + offset).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_params() {
        assert!(PhysicalParams::new(0.0, vec![1.0]).is_err());
        assert!(PhysicalParams::new(1.0, vec![-1.0]).is_err());
        assert!(PhysicalParams::new(1.0, vec![]).is_err());
        let frozen = PhysicalParams::new(1.0, vec![f64::INFINITY, 2.0]).unwrap();
        assert_eq!(frozen.hbar_over_mass(0), 0.0);
        assert_eq!(frozen.hbar_over_mass(1), 0.5);
    }

    #[test]
    fn potential_rejects_non_finite_values() {
        let g = Grid::line(1.0, 16).unwrap();
        let mut v = vec![0.0; 16];
        v[3] = f64::INFINITY;
        assert!(Potential::new(g.clone(), v).is_err());
        assert!(Potential::new(g, vec![0.0; 15]).is_err());
    }
}
