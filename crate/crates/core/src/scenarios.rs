//! Preset experiments: two slits, free Gaussian, harmonic oscillator and the
//! ideal measurement.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::ensemble::{self, Ensemble};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::params::{PhysicalParams, Potential};
use crate::subsystem::MeasurementSetup;
use crate::tdse::{CoherentState, FreeGaussian, Propagator};
use crate::wavefunction::WaveFunction;

/// Largest relative density allowed at the box edge.
pub const EDGE_TAIL: f64 = 1e-12;

/// Preset names, in listing order.
pub const NAMES: [&str; 4] = ["two_slit", "free_gaussian", "harmonic", "measurement"];

/// Time stepping and ensemble size used when a run does not override them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunDefaults {
    pub dt: f64,
    pub nsteps: usize,
    pub stride: usize,
    pub n_samples: usize,
}

impl RunDefaults {
    pub fn duration(&self) -> f64 {
        self.dt * self.nsteps as f64
    }
}

/// Parameters a scenario was built from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kind {
    TwoSlit { separation: f64, slit_width: f64 },
    FreeGaussian { x0: f64, sigma0: f64, k0: f64 },
    Harmonic { omega: f64, displacement: f64 },
    Measurement { weights: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: &'static str,
    pub kind: Kind,
    pub grid: Grid,
    pub psi0: WaveFunction,
    pub potential: Potential,
    pub params: PhysicalParams,
    pub defaults: RunDefaults,
    /// Present for the measurement scenario only.
    pub measurement: Option<MeasurementSetup>,
}

impl Scenario {
    pub fn propagator(&self, dt: f64) -> Result<Propagator> {
        Propagator::new(self.params.clone(), self.potential.clone(), dt)
    }

    /// Uniform samples over the slit openings, for two-slit scenarios.
    pub fn uniform_in_slits(&self, n: usize, seed: u64) -> Result<Ensemble> {
        match self.kind {
            Kind::TwoSlit { separation, slit_width } => {
                ensemble::sample_uniform_intervals(&slit_intervals(separation, slit_width), n, seed)
            }
            _ => Err(Error::InvalidArgument(format!("{} has no slits", self.name))),
        }
    }
}

fn checked_psi0(psi: WaveFunction) -> Result<WaveFunction> {
    let psi = psi.normalize()?;
    let peak = psi.max_density();
    let grid = psi.grid().clone();
    let edge = (0..grid.len())
        .filter(|&i| {
            let idx = grid.unflatten(i);
            (0..grid.dim()).any(|a| idx[a] == 0 || idx[a] + 1 == grid.axis(a).points)
        })
        .map(|i| psi.values()[i].norm_sqr())
        .fold(0.0, f64::max);
    if edge > EDGE_TAIL * peak {
        return Err(Error::Resolution(format!(
            "initial state reaches the box edge ({:e} of peak)",
            edge / peak
        )));
    }
    Ok(psi)
}

/// `[centre − s, centre + s]` for both slits.
pub fn slit_intervals(separation: f64, slit_width: f64) -> [(f64, f64); 2] {
    let c = 0.5 * separation;
    [(-c - slit_width, -c + slit_width), (c - slit_width, c + slit_width)]
}

/// Transverse two-slit model: `ψ₀(y) ∝ g(y − d/2) + g(y + d/2)` with
/// `g(y) = exp(−y²/2s²)`, no potential.
pub fn two_slit(separation: f64, slit_width: f64, extent: f64, points: usize) -> Result<Scenario> {
    if !(slit_width > 0.0 && separation > 2.0 * slit_width) {
        return Err(Error::Resolution(format!(
            "slits of width {slit_width} at separation {separation} overlap"
        )));
    }
    let grid = Grid::line(extent, points)?;
    let dx = grid.axis(0).spacing();
    if dx > slit_width / 8.0 {
        return Err(Error::Resolution(format!("spacing {dx} does not resolve slit width {slit_width}")));
    }
    let c = 0.5 * separation;
    let g = |y: f64| (-y * y / (2.0 * slit_width * slit_width)).exp();
    // evaluate as g(|y| − c) + g(|y| + c) so the profile is exactly even
    let psi = WaveFunction::from_fn(&grid, 0.0, |q| {
        let y = q.coord(0).abs();
        Complex64::new(g(y - c) + g(y + c), 0.0)
    });
    Ok(Scenario {
        name: "two_slit",
        kind: Kind::TwoSlit { separation, slit_width },
        psi0: checked_psi0(psi)?,
        potential: Potential::zero(&grid),
        params: PhysicalParams::natural(1),
        defaults: RunDefaults { dt: 1e-3, nsteps: 1000, stride: 2, n_samples: 10_000 },
        grid,
        measurement: None,
    })
}

pub fn default_two_slit() -> Result<Scenario> {
    two_slit(2.0, 0.25, 48.0, 2048)
}

/// Free packet matching [`FreeGaussian`] with `ħ = m = 1`.
pub fn free_gaussian(x0: f64, sigma0: f64, k0: f64, extent: f64, points: usize) -> Result<Scenario> {
    let grid = Grid::line(extent, points)?;
    let dx = grid.axis(0).spacing();
    if !(sigma0 >= 4.0 * dx) {
        return Err(Error::Resolution(format!("width {sigma0} below four grid spacings ({dx})")));
    }
    let params = PhysicalParams::natural(1);
    let packet = FreeGaussian::new(x0, sigma0, k0, params.hbar, params.mass(0))?;
    Ok(Scenario {
        name: "free_gaussian",
        kind: Kind::FreeGaussian { x0, sigma0, k0 },
        psi0: checked_psi0(packet.sample(&grid, 0.0))?,
        potential: Potential::zero(&grid),
        params,
        defaults: RunDefaults { dt: 1e-3, nsteps: 2000, stride: 10, n_samples: 10_000 },
        grid,
        measurement: None,
    })
}

pub fn default_free_gaussian() -> Result<Scenario> {
    free_gaussian(0.0, 1.0, 0.0, 40.0, 512)
}

/// `V = ½mω²x²` with the ground state displaced by `displacement`.
pub fn harmonic(omega: f64, displacement: f64, extent: f64, points: usize) -> Result<Scenario> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidParams(format!("omega must be positive, got {omega}")));
    }
    let grid = Grid::line(extent, points)?;
    let params = PhysicalParams::natural(1);
    let width = (params.hbar / (2.0 * params.mass(0) * omega)).sqrt();
    let dx = grid.axis(0).spacing();
    if width < 4.0 * dx {
        return Err(Error::Resolution(format!("ground-state width {width} below four grid spacings ({dx})")));
    }
    let state = CoherentState { omega, displacement, hbar: params.hbar, mass: params.mass(0) };
    let m = params.mass(0);
    let potential = Potential::from_fn(&grid, |q| 0.5 * m * omega * omega * q.coord(0).powi(2))?;
    Ok(Scenario {
        name: "harmonic",
        kind: Kind::Harmonic { omega, displacement },
        psi0: checked_psi0(state.sample(&grid, 0.0))?,
        potential,
        params,
        defaults: RunDefaults { dt: 1e-3, nsteps: 5000, stride: 10, n_samples: 10_000 },
        grid,
        measurement: None,
    })
}

pub fn default_harmonic() -> Result<Scenario> {
    harmonic(1.0, 2.0, 20.0, 256)
}

/// Knobs of the default measurement: Gaussian position modes on the system
/// axis, a Gaussian pointer on the other.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementConfig {
    pub coeffs: Vec<Complex64>,
    /// Density width of each system mode.
    pub mode_width: f64,
    /// Distance between neighbouring mode centres.
    pub mode_spacing: f64,
    pub pointer_width: f64,
    pub coupling: f64,
    pub duration: f64,
    pub pointer_mass: f64,
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        let c = Complex64::new(0.5f64.sqrt(), 0.0);
        MeasurementConfig {
            coeffs: vec![c, c],
            mode_width: 0.4,
            mode_spacing: 6.0,
            pointer_width: 0.5,
            coupling: 4.0,
            duration: 1.0,
            pointer_mass: 2.0,
        }
    }
}

fn pow2_at_least(x: f64) -> usize {
    (x.ceil().max(16.0) as usize).next_power_of_two()
}

impl MeasurementConfig {
    /// Mode `a` sits at `mode_spacing·(a − (n−1)/2)` with eigenvalue
    /// `2a − (n−1)`; the grid is sized to hold every mode and packet.
    pub fn build(&self) -> Result<MeasurementSetup> {
        let n = self.coeffs.len();
        if n == 0 {
            return Err(Error::InvalidSetup("no modes".into()));
        }
        if self.mode_spacing < 12.0 * self.mode_width {
            return Err(Error::InvalidSetup("mode supports of 6 widths must not overlap".into()));
        }
        let half_span = 0.5 * self.mode_spacing * (n - 1) as f64;
        let x_extent = 2.0 * (half_span + 12.0 * self.mode_width).max(8.0);
        let x_points = pow2_at_least(x_extent / (self.mode_width / 3.2));
        let eigenvalues: Vec<f64> = (0..n).map(|a| 2.0 * a as f64 - (n - 1) as f64).collect();
        let reach = self.coupling.abs() * (n - 1) as f64 * self.duration;
        let y_extent = 2.0 * (reach + 12.0 * self.pointer_width);
        let y_points = pow2_at_least(y_extent / (self.pointer_width / 12.8));
        let grid = Grid::plane((x_extent, x_points), (y_extent, y_points))?;
        let system = Grid::new(vec![*grid.axis(0)])?;
        let modes = (0..n)
            .map(|a| {
                let centre = self.mode_spacing * a as f64 - half_span;
                FreeGaussian::new(centre, self.mode_width, 0.0, 1.0, 1.0)
                    .map(|g| g.sample(&system, 0.0))
                    .and_then(|m| m.normalize())
            })
            .collect::<Result<Vec<_>>>()?;
        MeasurementSetup::new(
            grid,
            modes,
            eigenvalues,
            self.coeffs.clone(),
            self.pointer_width,
            self.coupling,
            self.duration,
            self.pointer_mass,
            1.0,
        )
    }
}

/// Default measurement with the given coefficients.
pub fn measurement(coeffs: &[Complex64]) -> Result<MeasurementSetup> {
    MeasurementConfig { coeffs: coeffs.to_vec(), ..Default::default() }.build()
}

/// The measurement as a scenario: `psi0` is the state right after the
/// coupling, evolved freely with the system axis frozen.
pub fn measurement_scenario(setup: MeasurementSetup) -> Result<Scenario> {
    let grid = setup.grid().clone();
    let nsteps = 500;
    Ok(Scenario {
        name: "measurement",
        kind: Kind::Measurement { weights: setup.weights() },
        psi0: setup.measurement_state(0.0),
        potential: Potential::zero(&grid),
        params: setup.params(),
        defaults: RunDefaults { dt: setup.duration() / nsteps as f64, nsteps, stride: 1, n_samples: 10_000 },
        grid,
        measurement: Some(setup),
    })
}

pub fn default_measurement() -> Result<Scenario> {
    measurement_scenario(MeasurementConfig::default().build()?)
}

/// Preset by name with default parameters.
pub fn by_name(name: &str) -> Result<Scenario> {
    match name {
        "two_slit" => default_two_slit(),
        "free_gaussian" => default_free_gaussian(),
        "harmonic" => default_harmonic(),
        "measurement" => default_measurement(),
        other => Err(Error::InvalidArgument(format!("unknown scenario `{other}`"))),
    }
}

/// Period of the coherent-state centre.
pub fn harmonic_period(omega: f64) -> f64 {
    2.0 * PI / omega
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Configuration;
    use crate::guidance::Integrator;

    #[test]
    fn two_slit_is_even_and_dark_between_slits() {
        let s = default_two_slit().unwrap();
        let v = s.psi0.values();
        let n = v.len();
        // index j ↔ −x is n − j for j ≥ 1
        for j in 1..n {
            assert_eq!(v[j], v[n - j]);
        }
        let centre = s.psi0.density()[n / 2];
        assert!(centre / s.psi0.max_density() < 1e-3);
        assert!((s.psi0.norm_sq() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_slit_preconditions() {
        assert!(matches!(two_slit(2.0, 0.25, 48.0, 512), Err(Error::Resolution(_))));
        assert!(matches!(two_slit(0.5, 0.25, 48.0, 2048), Err(Error::Resolution(_))));
    }

    #[test]
    fn two_slit_shows_fringes() {
        let s = default_two_slit().unwrap();
        let prop = s.propagator(s.defaults.dt).unwrap();
        let frames = prop.evolve(&s.psi0, s.defaults.nsteps, s.defaults.nsteps).unwrap();
        let rho = frames.last().density();
        let peak = rho.iter().copied().fold(0.0, f64::max);
        let maxima = (1..rho.len() - 1)
            .filter(|&j| rho[j] > rho[j - 1] && rho[j] > rho[j + 1] && rho[j] > 0.01 * peak)
            .count();
        assert!(maxima >= 5, "{maxima} maxima");
    }

    #[test]
    fn uniform_in_slits_stays_in_the_openings() {
        let s = default_two_slit().unwrap();
        let e = s.uniform_in_slits(1000, 3).unwrap();
        for q in &e.samples {
            let y = q.coord(0).abs();
            assert!((0.75..=1.25).contains(&y));
        }
        assert!(default_free_gaussian().unwrap().uniform_in_slits(10, 3).is_err());
    }

    #[test]
    fn free_gaussian_defaults_and_parity() {
        let s = default_free_gaussian().unwrap();
        assert!(free_gaussian(0.0, 0.2, 0.0, 40.0, 512).is_err());
        assert!(matches!(free_gaussian(15.0, 1.0, 0.0, 40.0, 512), Err(Error::Resolution(_))));
        let prop = s.propagator(1e-2).unwrap();
        let frames = prop.evolve(&s.psi0, 200, 50).unwrap();
        for f in frames.frames() {
            let rho = f.density();
            let n = rho.len();
            for j in 1..n {
                assert!((rho[j] - rho[n - j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn coherent_state_rides_the_classical_orbit() {
        let s = default_harmonic().unwrap();
        let prop = s.propagator(1e-3).unwrap();
        let steps = 3142;
        let frames = prop.evolve(&s.psi0, steps, steps).unwrap();
        let last = frames.last();
        let t = last.time();
        let centroid: f64 = last
            .density()
            .iter()
            .enumerate()
            .map(|(j, r)| r * s.grid.axis(0).coord(j))
            .sum::<f64>()
            * s.grid.cell_volume();
        assert!((centroid - 2.0 * t.cos()).abs() < 1e-3, "{centroid} at t = {t}");
        // split-step result stays on the exact coherent state
        let exact = CoherentState { omega: 1.0, displacement: 2.0, hbar: 1.0, mass: 1.0 }.sample(&s.grid, t);
        assert!(last.l2_distance(&exact).unwrap() < 1e-4);
    }

    #[test]
    fn coherent_state_trajectories_are_rigid() {
        let s = default_harmonic().unwrap();
        let prop = s.propagator(1e-2).unwrap();
        let frames = prop.evolve(&s.psi0, 300, 1).unwrap();
        let integrator = Integrator::new(s.params.clone());
        for &q0 in &[1.2, 2.0, 2.9] {
            let traj = integrator.integrate(&frames, Configuration::x(q0)).unwrap();
            for (t, q) in traj.times.iter().zip(&traj.points) {
                let expected = q0 - 2.0 + 2.0 * t.cos();
                assert!((q.coord(0) - expected).abs() < 1e-3, "q0 {q0} t {t}");
            }
        }
    }

    #[test]
    fn construction_is_deterministic() {
        for name in NAMES {
            let a = by_name(name).unwrap();
            let b = by_name(name).unwrap();
            assert_eq!(a.psi0, b.psi0);
            assert!((a.psi0.norm_sq() - 1.0).abs() < 1e-10);
        }
        assert!(by_name("three_slit").is_err());
    }
}
