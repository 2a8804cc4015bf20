//! Quantum-equilibrium ensembles and the statistics that test equivariance.
//!
//! Samples are drawn from `|ψ|²` by rejection against a flat envelope. Each
//! sample owns an RNG stream (ChaCha8, stream = sample index, key = master
//! seed), so results do not depend on how work is scheduled.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Configuration, Grid};
use crate::guidance::Integrator;
use crate::interp::Stencil;
use crate::stats::{self, GridCdf};
use crate::tdse::Propagator;
use crate::wavefunction::WaveFunction;

/// Envelope height relative to the largest grid density; interpolated
/// densities between nodes may slightly exceed the node maximum.
pub const ENVELOPE_MARGIN: f64 = 1.05;

/// Lowest acceptable expected acceptance rate of the rejection sampler.
pub const MIN_ACCEPTANCE: f64 = 1e-6;

/// Allowance added to the KS 99% critical value for solver and integrator
/// error in equivariance checks (0.0163 + 0.0137 = 0.03 at n = 10⁴).
pub const INTEGRATION_MARGIN: f64 = 0.0137;

/// The RNG for sample `index` under `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub samples: Vec<Configuration>,
    pub seed: u64,
    /// Time stamp of the wave function the samples were drawn from.
    pub source_time: f64,
}

impl Ensemble {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Draws `n` configurations from `|ψ|²`.
pub fn sample(psi: &WaveFunction, n: usize, seed: u64) -> Result<Ensemble> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let grid = psi.grid();
    let envelope = psi.max_density() * ENVELOPE_MARGIN;
    let volume: f64 = grid.axes().iter().map(|a| a.extent).product();
    let acceptance = psi.norm_sq() / (envelope * volume);
    if !(acceptance >= MIN_ACCEPTANCE) {
        return Err(Error::EnvelopeFailure(acceptance));
    }
    let samples = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            loop {
                let q = uniform_point(grid, &mut rng);
                let rho = Stencil::new(grid, &q).apply(psi.values()).norm_sqr();
                if rng.random::<f64>() * envelope < rho {
                    break q;
                }
            }
        })
        .collect();
    Ok(Ensemble { samples, seed, source_time: psi.time() })
}

fn uniform_point(grid: &Grid, rng: &mut ChaCha8Rng) -> Configuration {
    let mut c = [0.0; crate::grid::MAX_DIM];
    for (i, a) in grid.axes().iter().enumerate() {
        c[i] = a.lower() + a.extent * rng.random::<f64>();
    }
    grid.wrap(Configuration::from_slice(&c[..grid.dim()]))
}

/// Draws `n` points uniformly from a union of intervals (1D), each sample on
/// its own stream as in [`sample`].
pub fn sample_uniform_intervals(intervals: &[(f64, f64)], n: usize, seed: u64) -> Result<Ensemble> {
    let total: f64 = intervals.iter().map(|(a, b)| b - a).sum();
    if intervals.is_empty() || intervals.iter().any(|(a, b)| !(b > a)) || n == 0 {
        return Err(Error::InvalidArgument("need nonempty intervals and n >= 1".into()));
    }
    let samples = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let mut u = rng.random::<f64>() * total;
            for &(a, b) in intervals {
                if u < b - a {
                    return Configuration::x(a + u);
                }
                u -= b - a;
            }
            let (a, b) = intervals[intervals.len() - 1];
            Configuration::x(a + 0.5 * (b - a))
        })
        .collect();
    Ok(Ensemble { samples, seed, source_time: 0.0 })
}

/// Outcome of one goodness-of-fit comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub n: usize,
    /// KS statistic (1D comparisons).
    pub ks: Option<f64>,
    /// χ² statistic (2D comparisons) and its bin count.
    pub chi2: Option<f64>,
    pub bins: Option<usize>,
    /// 99% critical value of the statistic.
    pub critical: f64,
    /// Allowance for discretization error added on top of `critical`.
    pub margin: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl StatReport {
    pub fn statistic(&self) -> f64 {
        self.ks.or(self.chi2).unwrap_or(f64::NAN)
    }

    fn ks(n: usize, statistic: f64, margin: f64) -> Self {
        let critical = stats::ks_critical_99(n);
        let threshold = critical + margin;
        StatReport {
            n,
            ks: Some(statistic),
            chi2: None,
            bins: None,
            critical,
            margin,
            threshold,
            pass: statistic <= threshold,
        }
    }
}

/// KS of `samples` against the CDF of a 1D density, with a fixed threshold.
pub fn ks_report(samples: &[f64], cdf: &GridCdf, margin: f64) -> Result<StatReport> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    Ok(StatReport::ks(samples.len(), stats::ks_statistic(samples, |x| cdf.cdf(x)), margin))
}

/// Compares configurations with `|ψ|²`: KS in 1D, χ² with about `√n`
/// equiprobable cells in 2D.
pub fn compare_with_density(points: &[Configuration], psi: &WaveFunction, margin: f64) -> Result<StatReport> {
    let grid = psi.grid();
    let density = psi.density();
    match grid.dim() {
        1 => {
            let xs: Vec<f64> = points.iter().map(|q| q.coord(0)).collect();
            ks_report(&xs, &GridCdf::new(grid.axis(0), &density)?, margin)
        }
        _ => {
            let per_axis = ((points.len() as f64).powf(0.25).round() as usize).max(2);
            let out = stats::chi2_equiprobable_2d(points, grid, &density, per_axis, per_axis)?;
            let threshold = out.critical + margin;
            Ok(StatReport {
                n: points.len(),
                ks: None,
                chi2: Some(out.statistic),
                bins: Some(out.bins),
                critical: out.critical,
                margin,
                threshold,
                pass: out.statistic <= threshold,
            })
        }
    }
}

/// Transports `ensemble` through `frames` and compares the end positions
/// with the density of the last frame.
pub fn check_transport<I>(
    frames: I,
    ensemble: &Ensemble,
    integrator: &Integrator,
    margin: f64,
) -> Result<(StatReport, Vec<Configuration>)>
where
    I: IntoIterator<Item = Result<WaveFunction>>,
{
    let mut last = None;
    let tracked = frames.into_iter().map(|f| {
        if let Ok(frame) = &f {
            last = Some(frame.clone());
        }
        f
    });
    let trajectories = integrator.integrate_many(tracked, &ensemble.samples, usize::MAX)?;
    let last = last.ok_or_else(|| Error::InvalidArgument("no frames".into()))?;
    let ends: Vec<Configuration> = trajectories.iter().map(|t| *t.last()).collect();
    Ok((compare_with_density(&ends, &last, margin)?, ends))
}

/// Samples `|ψ₀|²`, integrates every trajectory to time `t_final`, and
/// compares the end points with `|ψ_T|²`.
///
/// `t_final` is rounded to a whole number of propagator steps.
pub fn equivariance_check(
    psi0: &WaveFunction,
    prop: &Propagator,
    t_final: f64,
    n: usize,
    seed: u64,
) -> Result<StatReport> {
    let margin = if t_final > 0.0 { INTEGRATION_MARGIN } else { 0.0 };
    equivariance_check_with(psi0, prop, t_final, n, seed, margin)
}

pub fn equivariance_check_with(
    psi0: &WaveFunction,
    prop: &Propagator,
    t_final: f64,
    n: usize,
    seed: u64,
    margin: f64,
) -> Result<StatReport> {
    if !(t_final >= 0.0) {
        return Err(Error::InvalidArgument(format!("final time must be >= 0, got {t_final}")));
    }
    let ensemble = sample(psi0, n, seed)?;
    let nsteps = (t_final / prop.dt()).round() as usize;
    if nsteps == 0 {
        return compare_with_density(&ensemble.samples, psi0, margin);
    }
    let integrator = Integrator::new(prop.params().clone());
    let (report, _) = check_transport(prop.frames(psi0, nsteps, 1)?, &ensemble, &integrator, margin)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use crate::params::{PhysicalParams, Potential};
    use crate::tdse::{CoherentState, FreeGaussian};

    #[test]
    fn plane_wave_samples_are_uniform() {
        let grid = Grid::line(8.0 * std::f64::consts::PI, 256).unwrap();
        let psi = WaveFunction::from_fn(&grid, 0.0, |q| Complex64::from_polar(1.0, 2.0 * q.coord(0))).normalize().unwrap();
        let n = 10_000;
        let ens = sample(&psi, n, 11).unwrap();
        let l = grid.axis(0).extent;
        let xs: Vec<f64> = ens.samples.iter().map(|q| q.coord(0)).collect();
        let d = stats::ks_statistic(&xs, |x| (x + l / 2.0) / l);
        assert!(d <= stats::ks_critical_99(n), "KS {d}");
    }

    #[test]
    fn narrow_gaussian_stays_within_six_sigma() {
        let grid = Grid::line(20.0, 1024).unwrap();
        let psi = FreeGaussian::new(0.0, 0.1, 0.0, 1.0, 1.0).unwrap().sample(&grid, 0.0);
        let ens = sample(&psi, 5_000, 3).unwrap();
        assert!(ens.samples.iter().all(|q| q.coord(0).abs() <= 0.6));
    }

    #[test]
    fn sampling_is_deterministic() {
        let grid = Grid::line(40.0, 512).unwrap();
        let psi = FreeGaussian::new(1.0, 1.0, 0.0, 1.0, 1.0).unwrap().sample(&grid, 0.0);
        let a = sample(&psi, 500, 99).unwrap();
        let b = sample(&psi, 500, 99).unwrap();
        assert_eq!(a, b);
        let c = sample(&psi, 500, 100).unwrap();
        assert_ne!(a.samples, c.samples);
        // a prefix of a larger draw is the smaller draw
        let d = sample(&psi, 700, 99).unwrap();
        assert_eq!(&d.samples[..500], &a.samples[..]);
    }

    #[test]
    fn pathological_peak_fails_the_envelope() {
        // a single lit node out of 2^21: expected acceptance ~ 5e-7
        let grid = Grid::plane((10.0, 2048), (10.0, 1024)).unwrap();
        let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
        values[12345] = Complex64::new(1.0, 0.0);
        let psi = WaveFunction::new(grid, values, 0.0).unwrap();
        assert!(matches!(sample(&psi, 10, 0), Err(Error::EnvelopeFailure(_))));
    }

    #[test]
    fn null_transport_and_stationary_state_pass() {
        let params = PhysicalParams::natural(1);
        let grid = Grid::line(40.0, 512).unwrap();
        let psi = FreeGaussian::new(0.0, 1.0, 0.0, 1.0, 1.0).unwrap().sample(&grid, 0.0);
        let prop = Propagator::new(params.clone(), Potential::zero(&grid), 1e-3).unwrap();
        let r = equivariance_check(&psi, &prop, 0.0, 10_000, 5).unwrap();
        assert!(r.pass && r.margin == 0.0, "{r:?}");

        let grid = Grid::line(20.0, 256).unwrap();
        let v = Potential::from_fn(&grid, |q| 0.5 * q.coord(0).powi(2)).unwrap();
        let prop = Propagator::new(params, v, 1e-2).unwrap();
        let ground = CoherentState { omega: 1.0, displacement: 0.0, hbar: 1.0, mass: 1.0 }.sample(&grid, 0.0);
        let r = equivariance_check_with(&ground, &prop, 5.0, 10_000, 5, 0.0).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn uniform_intervals() {
        let ens = sample_uniform_intervals(&[(-1.25, -0.75), (0.75, 1.25)], 1000, 1).unwrap();
        assert!(ens.samples.iter().all(|q| (q.coord(0).abs() - 1.0).abs() <= 0.25));
        let left = ens.samples.iter().filter(|q| q.coord(0) < 0.0).count();
        assert!((400..600).contains(&left));
        assert!(sample_uniform_intervals(&[(1.0, 0.0)], 10, 1).is_err());
    }
}
