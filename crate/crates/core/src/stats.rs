//! Goodness-of-fit statistics against grid densities.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::grid::{Axis, Configuration, Grid};

/// Kolmogorov–Smirnov 99% critical coefficient: reject above `1.63/√n`.
pub const KS_COEFF_99: f64 = 1.63;

pub fn ks_critical_99(n: usize) -> f64 {
    KS_COEFF_99 / (n as f64).sqrt()
}

/// Sup-norm distance between the empirical CDF of `samples` and `cdf`.
///
/// # Panics
/// If `samples` is empty.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    assert!(!samples.is_empty(), "KS statistic of an empty sample");
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |d: f64, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// Upper 99% point of the χ² distribution.
pub fn chi2_critical_99(dof: usize) -> f64 {
    ChiSquared::new(dof as f64).expect("positive degrees of freedom").inverse_cdf(0.99)
}

/// Pearson statistic for observed counts against equal expected counts.
pub fn chi2_uniform(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    let expected = n as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum()
}

/// CDF of a periodic 1D density given at grid nodes, linear between nodes.
#[derive(Debug, Clone)]
pub struct GridCdf {
    lower: f64,
    spacing: f64,
    /// Node values, with the periodic image of node 0 appended.
    nodes: Vec<f64>,
    cumulative: Vec<f64>,
}

impl GridCdf {
    /// `values` need not be normalized but must be nonnegative with a
    /// positive total.
    pub fn new(axis: &Axis, values: &[f64]) -> Result<Self> {
        if values.len() != axis.points {
            return Err(Error::InvalidArgument("density length does not match axis".into()));
        }
        let h = axis.spacing();
        let mut nodes = values.to_vec();
        nodes.push(values[0]);
        let mut cumulative = Vec::with_capacity(nodes.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in nodes.windows(2) {
            acc += 0.5 * h * (w[0] + w[1]);
            cumulative.push(acc);
        }
        if !(acc > 0.0) || nodes.iter().any(|v| *v < 0.0) {
            return Err(Error::InvalidArgument("density must be nonnegative and not all zero".into()));
        }
        Ok(GridCdf { lower: axis.lower(), spacing: h, nodes, cumulative })
    }

    pub fn total(&self) -> f64 {
        *self.cumulative.last().expect("nonempty")
    }

    fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Unnormalized integral from the lower edge to `x`.
    pub fn integral(&self, x: f64) -> f64 {
        let u = (x - self.lower) / self.spacing;
        if u <= 0.0 {
            return 0.0;
        }
        let j = u.floor() as usize;
        if j >= self.cells() {
            return self.total();
        }
        let f = u - j as f64;
        let (a, b) = (self.nodes[j], self.nodes[j + 1]);
        self.cumulative[j] + self.spacing * (a * f + 0.5 * (b - a) * f * f)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.integral(x) / self.total()
    }

    /// Smallest `x` with `cdf(x) = p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let target = p.clamp(0.0, 1.0) * self.total();
        let j = self.cumulative.partition_point(|c| *c < target).saturating_sub(1).min(self.cells() - 1);
        let (a, b) = (self.nodes[j], self.nodes[j + 1]);
        let rem = (target - self.cumulative[j]) / self.spacing;
        // solve a f + (b − a) f²/2 = rem on [0, 1]
        let slope = b - a;
        let f = if slope.abs() < 1e-14 * a.abs().max(1e-300) {
            if a > 0.0 { rem / a } else { 0.0 }
        } else {
            let disc = (a * a + 2.0 * slope * rem).max(0.0);
            (disc.sqrt() - a) / slope
        };
        self.lower + (j as f64 + f.clamp(0.0, 1.0)) * self.spacing
    }

    /// Integral over `[a, b]` of the hat function centred on node `i`,
    /// per unit node value.
    fn hat_weights(&self, a: f64, b: f64) -> Vec<f64> {
        let n = self.cells();
        let h = self.spacing;
        let antiderivative = |u: f64| -> f64 {
            // ∫_{-∞}^{u} hat(s) ds for the unit hat on [-h, h]
            if u <= -h {
                0.0
            } else if u <= 0.0 {
                (u + h).powi(2) / (2.0 * h)
            } else if u <= h {
                h - (h - u).powi(2) / (2.0 * h)
            } else {
                h
            }
        };
        let mut w = vec![0.0; n];
        for node in 0..=n {
            let x = self.lower + node as f64 * h;
            let v = antiderivative(b - x) - antiderivative(a - x);
            w[node % n] += v;
        }
        w
    }
}

/// Pearson χ² against a 1D grid density with `bins` equiprobable bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chi2Outcome {
    pub statistic: f64,
    pub bins: usize,
    pub dof: usize,
    pub critical: f64,
}

impl Chi2Outcome {
    pub fn pass(&self) -> bool {
        self.statistic <= self.critical
    }
}

pub fn chi2_equiprobable_1d(samples: &[f64], cdf: &GridCdf, bins: usize) -> Result<Chi2Outcome> {
    if bins < 2 || samples.is_empty() {
        return Err(Error::InvalidArgument("need at least two bins and one sample".into()));
    }
    let mut counts = vec![0usize; bins];
    for &x in samples {
        let b = ((cdf.cdf(x) * bins as f64) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let dof = bins - 1;
    Ok(Chi2Outcome { statistic: chi2_uniform(&counts), bins, dof, critical: chi2_critical_99(dof) })
}

/// Pearson χ² against a 2D grid density.
///
/// The plane is cut into `bins_x` equiprobable columns of the x-marginal,
/// and each column into `bins_y` equiprobable cells of its own y-profile,
/// with the density taken bilinear between nodes.
pub fn chi2_equiprobable_2d(
    samples: &[Configuration],
    grid: &Grid,
    density: &[f64],
    bins_x: usize,
    bins_y: usize,
) -> Result<Chi2Outcome> {
    if grid.dim() != 2 || density.len() != grid.len() {
        return Err(Error::InvalidArgument("2D density expected".into()));
    }
    if bins_x < 1 || bins_y < 1 || bins_x * bins_y < 2 || samples.is_empty() {
        return Err(Error::InvalidArgument("need at least two bins and one sample".into()));
    }
    let (ax, ay) = (grid.axis(0), grid.axis(1));
    let (nx, ny) = (ax.points, ay.points);
    let marginal: Vec<f64> =
        (0..nx).map(|i| density[i * ny..(i + 1) * ny].iter().sum::<f64>() * ay.spacing()).collect();
    let mcdf = GridCdf::new(ax, &marginal)?;
    let mut edges: Vec<f64> = (0..=bins_x).map(|k| mcdf.quantile(k as f64 / bins_x as f64)).collect();
    edges[0] = ax.lower();
    edges[bins_x] = -ax.lower();
    let column_cdfs: Vec<GridCdf> = edges
        .windows(2)
        .map(|w| {
            let weights = mcdf.hat_weights(w[0], w[1]);
            let profile: Vec<f64> = (0..ny)
                .map(|j| (0..nx).map(|i| weights[i] * density[i * ny + j]).sum::<f64>().max(0.0))
                .collect();
            GridCdf::new(ay, &profile)
        })
        .collect::<Result<_>>()?;
    let mut counts = vec![0usize; bins_x * bins_y];
    for q in samples {
        let col = ((mcdf.cdf(q.coord(0)) * bins_x as f64) as usize).min(bins_x - 1);
        let row = ((column_cdfs[col].cdf(q.coord(1)) * bins_y as f64) as usize).min(bins_y - 1);
        counts[col * bins_y + row] += 1;
    }
    let bins = bins_x * bins_y;
    let dof = bins - 1;
    Ok(Chi2Outcome { statistic: chi2_uniform(&counts), bins, dof, critical: chi2_critical_99(dof) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_single_sample_at_median() {
        assert!((ks_statistic(&[0.0], |x| 0.5 + 0.5 * x.clamp(-1.0, 1.0)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ks_at_quantiles_is_small() {
        let n = 999;
        let samples: Vec<f64> = (1..=n).map(|i| i as f64 / (n + 1) as f64).collect();
        let d = ks_statistic(&samples, |x| x.clamp(0.0, 1.0));
        assert!(d <= 1.0 / (n + 1) as f64 + 1e-12);
    }

    #[test]
    fn chi2_critical_values() {
        // tabulated upper 1% points
        assert!((chi2_critical_99(1) - 6.635).abs() < 1e-3);
        assert!((chi2_critical_99(49) - 74.919).abs() < 1e-3);
        assert!((chi2_critical_99(99) - 134.642).abs() < 1e-3);
    }

    #[test]
    fn grid_cdf_of_uniform_density_is_linear() {
        let axis = Axis::new(10.0, 16).unwrap();
        let cdf = GridCdf::new(&axis, &[0.1; 16]).unwrap();
        assert!((cdf.total() - 1.0).abs() < 1e-14);
        for &x in &[-5.0, -2.3, 0.0, 4.1] {
            assert!((cdf.cdf(x) - (x + 5.0) / 10.0).abs() < 1e-14);
            assert!((cdf.quantile(cdf.cdf(x)) - x).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_cdf_quantile_inverts_on_sloped_cells() {
        let axis = Axis::new(8.0, 64).unwrap();
        let values: Vec<f64> = axis.coords().map(|x| (-x * x / 2.0).exp()).collect();
        let cdf = GridCdf::new(&axis, &values).unwrap();
        for k in 1..20 {
            let p = k as f64 / 20.0;
            assert!((cdf.cdf(cdf.quantile(p)) - p).abs() < 1e-12);
        }
        assert!((cdf.cdf(0.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn hat_weights_partition_the_integral() {
        let axis = Axis::new(8.0, 32).unwrap();
        let values: Vec<f64> = axis.coords().map(|x| 1.0 + 0.5 * x.sin()).collect();
        let cdf = GridCdf::new(&axis, &values).unwrap();
        let (a, b) = (-1.3, 2.71);
        let w = cdf.hat_weights(a, b);
        let via_weights: f64 = w.iter().zip(&values).map(|(w, v)| w * v).sum();
        assert!((via_weights - (cdf.integral(b) - cdf.integral(a))).abs() < 1e-12);
    }
}
