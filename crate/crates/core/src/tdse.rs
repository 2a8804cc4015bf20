//! Time evolution under `iħ ∂ψ/∂t = Hψ` with `H = −Σ ħ²/2m ∇² + V`.
//!
//! Strang splitting: half potential kick, full kinetic drift in Fourier
//! space, half potential kick. Every factor is a pure phase, so each step is
//! unitary up to roundoff; the kinetic factor is exact on the mesh.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::GridFft;
use crate::grid::Grid;
use crate::params::{PhysicalParams, Potential};
use crate::wavefunction::WaveFunction;

/// Above this value of `dt·max|V|/ħ` the potential phase wraps too fast per step.
pub const STABILITY_LIMIT: f64 = 0.1;

/// Default time step.
pub const DEFAULT_DT: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct Propagator {
    grid: Grid,
    params: PhysicalParams,
    potential: Potential,
    dt: f64,
    half_kick: Vec<Complex64>,
    drift: Vec<Complex64>,
}

impl Propagator {
    /// `dt` may be negative (backward evolution) but not zero.
    pub fn new(params: PhysicalParams, potential: Potential, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt != 0.0) {
            return Err(Error::InvalidArgument(format!("time step must be nonzero, got {dt}")));
        }
        let grid = potential.grid().clone();
        params.check_grid(&grid)?;
        let hbar = params.hbar;
        let stiffness = dt.abs() * potential.max_abs() / hbar;
        if stiffness >= STABILITY_LIMIT {
            log::warn!(
                "dt·max|V|/ħ = {stiffness:.3} exceeds {STABILITY_LIMIT}; potential phase may be under-resolved"
            );
        }
        let half_kick = potential
            .values()
            .iter()
            .map(|v| Complex64::from_polar(1.0, -v * dt / (2.0 * hbar)))
            .collect();
        let per_axis: Vec<Vec<f64>> = (0..grid.dim())
            .map(|i| {
                let c = params.hbar_over_mass(i) / 2.0;
                grid.axis(i).wave_numbers().iter().map(|k| c * k * k).collect()
            })
            .collect();
        let drift = (0..grid.len())
            .map(|flat| {
                let idx = grid.unflatten(flat);
                // ħk²/2m summed over axes, i.e. kinetic energy / ħ
                let omega: f64 = (0..grid.dim()).map(|i| per_axis[i][idx[i]]).sum();
                Complex64::from_polar(1.0, -omega * dt)
            })
            .collect();
        Ok(Propagator { grid, params, potential, dt, half_kick, drift })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Same physics, different step.
    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        Propagator::new(self.params.clone(), self.potential.clone(), dt)
    }

    /// Advances `psi` by one step.
    pub fn step(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        self.stepper().step(psi)
    }

    /// A stepping handle with its own FFT workspace.
    pub fn stepper(&self) -> Stepper<'_> {
        Stepper { prop: self, fft: GridFft::new(&self.grid) }
    }

    /// Evolves `nsteps` steps keeping every `stride`-th state (and the first).
    pub fn evolve(&self, psi0: &WaveFunction, nsteps: usize, stride: usize) -> Result<FrameSequence> {
        let frames: Result<Vec<_>> = self.frames(psi0, nsteps, stride)?.collect();
        FrameSequence::new(frames?)
    }

    /// Lazy version of [`Propagator::evolve`].
    ///
    /// `nsteps` must be a positive multiple of `stride` so that frames stay
    /// uniformly spaced and the final state is included.
    pub fn frames(&self, psi0: &WaveFunction, nsteps: usize, stride: usize) -> Result<Frames<'_>> {
        if nsteps == 0 || stride == 0 {
            return Err(Error::InvalidArgument("nsteps and stride must be at least 1".into()));
        }
        if nsteps % stride != 0 {
            return Err(Error::InvalidArgument(format!(
                "nsteps ({nsteps}) must be a multiple of stride ({stride})"
            )));
        }
        self.grid.check_same(psi0.grid())?;
        Ok(Frames {
            stepper: self.stepper(),
            state: Some(psi0.clone()),
            t0: psi0.time(),
            remaining: nsteps / stride + 1,
            emitted: 0,
            stride,
        })
    }

    /// `⟨ψ|H|ψ⟩ / ⟨ψ|ψ⟩`.
    pub fn energy(&self, psi: &WaveFunction) -> Result<f64> {
        self.grid.check_same(psi.grid())?;
        let mut spectrum = psi.values().to_vec();
        GridFft::new(&self.grid).forward(&mut spectrum);
        let kinetic_weights: Vec<Vec<f64>> = (0..self.grid.dim())
            .map(|i| {
                let c = self.params.hbar * self.params.hbar_over_mass(i) / 2.0;
                self.grid.axis(i).wave_numbers().iter().map(|k| c * k * k).collect()
            })
            .collect();
        let n = self.grid.len() as f64;
        // Parseval: Σ|ψ|² = Σ|ψ̂|²/N with the unnormalized forward transform
        let kinetic: f64 = spectrum
            .iter()
            .enumerate()
            .map(|(flat, z)| {
                let idx = self.grid.unflatten(flat);
                let e: f64 = (0..self.grid.dim()).map(|i| kinetic_weights[i][idx[i]]).sum();
                e * z.norm_sqr()
            })
            .sum::<f64>()
            / n;
        let potential: f64 =
            psi.values().iter().zip(self.potential.values()).map(|(z, v)| v * z.norm_sqr()).sum();
        let norm: f64 = psi.values().iter().map(Complex64::norm_sqr).sum();
        Ok((kinetic + potential) / norm)
    }
}

/// A propagator paired with a private FFT workspace.
pub struct Stepper<'a> {
    prop: &'a Propagator,
    fft: GridFft,
}

impl Stepper<'_> {
    pub fn step(&mut self, psi: &WaveFunction) -> Result<WaveFunction> {
        self.prop.grid.check_same(psi.grid())?;
        let mut out = psi.clone();
        self.step_in_place(&mut out);
        Ok(out)
    }

    pub fn step_in_place(&mut self, psi: &mut WaveFunction) {
        let t = psi.time() + self.prop.dt;
        let v = psi.values_mut();
        for (z, k) in v.iter_mut().zip(&self.prop.half_kick) {
            *z *= k;
        }
        self.fft.forward(v);
        for (z, d) in v.iter_mut().zip(&self.prop.drift) {
            *z *= d;
        }
        self.fft.inverse(v);
        for (z, k) in v.iter_mut().zip(&self.prop.half_kick) {
            *z *= k;
        }
        psi.set_time(t);
    }
}

/// Iterator over evolved frames, produced on demand.
pub struct Frames<'a> {
    stepper: Stepper<'a>,
    state: Option<WaveFunction>,
    t0: f64,
    remaining: usize,
    emitted: usize,
    stride: usize,
}

impl Iterator for Frames<'_> {
    type Item = Result<WaveFunction>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        let state = self.state.as_mut()?;
        if self.emitted > 0 {
            for _ in 0..self.stride {
                self.stepper.step_in_place(state);
            }
            // pin the timestamp to the uniform lattice instead of accumulating
            let t = self.t0 + (self.emitted * self.stride) as f64 * self.stepper.prop.dt;
            state.set_time(t);
        }
        self.remaining -= 1;
        self.emitted += 1;
        if self.remaining == 0 {
            self.state.take().map(Ok)
        } else {
            Some(Ok(state.clone()))
        }
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

/// Uniformly spaced snapshots of one evolution, forward or backward in time.
#[derive(Debug, Clone)]
pub struct FrameSequence {
    frames: Vec<WaveFunction>,
    dt: f64,
}

impl FrameSequence {
    pub fn new(frames: Vec<WaveFunction>) -> Result<Self> {
        let Some(first) = frames.first() else {
            return Err(Error::InvalidArgument("frame sequence is empty".into()));
        };
        let dt = if frames.len() > 1 { frames[1].time() - first.time() } else { 0.0 };
        if frames.len() > 1 && !(dt.is_finite() && dt != 0.0) {
            return Err(Error::InvalidArgument("frame times must be distinct".into()));
        }
        for (i, f) in frames.iter().enumerate() {
            first.grid().check_same(f.grid())?;
            let expected = first.time() + i as f64 * dt;
            if (f.time() - expected).abs() > 1e-9 * dt.abs().max(1.0) {
                return Err(Error::InvalidArgument(format!(
                    "frame {i} at t = {} breaks uniform spacing",
                    f.time()
                )));
            }
        }
        Ok(FrameSequence { frames, dt })
    }

    pub fn frames(&self) -> &[WaveFunction] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<WaveFunction> {
        self.frames
    }

    /// Spacing between stored frames; zero for a single frame.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn first(&self) -> &WaveFunction {
        &self.frames[0]
    }

    pub fn last(&self) -> &WaveFunction {
        &self.frames[self.frames.len() - 1]
    }

    pub fn times(&self) -> Vec<f64> {
        self.frames.iter().map(WaveFunction::time).collect()
    }
}

/// Exact free-particle Gaussian packet.
///
/// At `t = 0`: `(2πσ₀²)^(-1/4) exp(−(x−x₀)²/4σ₀² + ik₀(x−x₀))`, so `σ₀` is the
/// standard deviation of the density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeGaussian {
    pub x0: f64,
    pub sigma0: f64,
    pub k0: f64,
    pub hbar: f64,
    pub mass: f64,
}

impl FreeGaussian {
    pub fn new(x0: f64, sigma0: f64, k0: f64, hbar: f64, mass: f64) -> Result<Self> {
        if !(sigma0.is_finite() && sigma0 > 0.0) {
            return Err(Error::InvalidArgument(format!("sigma0 must be positive, got {sigma0}")));
        }
        Ok(FreeGaussian { x0, sigma0, k0, hbar, mass })
    }

    /// `ħt / 2mσ₀²`
    fn tau(&self, t: f64) -> f64 {
        self.hbar * t / (2.0 * self.mass * self.sigma0 * self.sigma0)
    }

    /// Density standard deviation `σ₀√(1 + (ħt/2mσ₀²)²)`.
    pub fn width(&self, t: f64) -> f64 {
        self.sigma0 * (1.0 + self.tau(t).powi(2)).sqrt()
    }

    pub fn center(&self, t: f64) -> f64 {
        self.x0 + self.hbar * self.k0 * t / self.mass
    }

    /// Value at `x` (on the infinite line) and time `t`.
    pub fn value(&self, x: f64, t: f64) -> Complex64 {
        let s2 = self.sigma0 * self.sigma0;
        let a = Complex64::new(s2, self.hbar * t / (2.0 * self.mass));
        let s = x - self.x0;
        let b = Complex64::new(2.0 * s2 * self.k0, s);
        let exponent = b * b / (4.0 * a) - s2 * self.k0 * self.k0;
        let prefactor = (2.0 * std::f64::consts::PI * s2).powf(-0.25) * (Complex64::new(s2, 0.0) / a).sqrt();
        prefactor * exponent.exp()
    }

    /// Bohmian trajectory through `q0` at `t = 0`: the packet stretches about
    /// its moving center.
    pub fn trajectory(&self, q0: f64, t: f64) -> f64 {
        self.center(t) + (q0 - self.x0) * self.width(t) / self.sigma0
    }

    /// Guiding velocity at `(x, t)`.
    pub fn velocity(&self, x: f64, t: f64) -> f64 {
        let tau = self.tau(t);
        let rate = self.hbar / (2.0 * self.mass * self.sigma0 * self.sigma0);
        self.hbar * self.k0 / self.mass + (x - self.center(t)) * rate * tau / (1.0 + tau * tau)
    }

    pub fn sample(&self, grid: &Grid, t: f64) -> WaveFunction {
        WaveFunction::from_fn(grid, t, |q| self.value(q.coord(0), t))
    }
}

/// `analytic_free_gaussian` sampled on a 1D grid.
pub fn analytic_free_gaussian(
    grid: &Grid,
    x0: f64,
    sigma0: f64,
    k0: f64,
    t: f64,
    params: &PhysicalParams,
) -> Result<WaveFunction> {
    Ok(FreeGaussian::new(x0, sigma0, k0, params.hbar, params.mass(0))?.sample(grid, t))
}

/// Coherent state of `V = ½mω²x²`: the ground state displaced by `d`,
/// released from rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentState {
    pub omega: f64,
    pub displacement: f64,
    pub hbar: f64,
    pub mass: f64,
}

impl CoherentState {
    pub fn center(&self, t: f64) -> f64 {
        self.displacement * (self.omega * t).cos()
    }

    pub fn momentum(&self, t: f64) -> f64 {
        -self.mass * self.omega * self.displacement * (self.omega * t).sin()
    }

    pub fn value(&self, x: f64, t: f64) -> Complex64 {
        let (h, m, w) = (self.hbar, self.mass, self.omega);
        let xc = self.center(t);
        let pc = self.momentum(t);
        let amp = (m * w / (std::f64::consts::PI * h)).powf(0.25) * (-m * w * (x - xc).powi(2) / (2.0 * h)).exp();
        let phase = pc * (x - 0.5 * xc) / h - 0.5 * w * t;
        Complex64::from_polar(amp, phase)
    }

    pub fn sample(&self, grid: &Grid, t: f64) -> WaveFunction {
        WaveFunction::from_fn(grid, t, |q| self.value(q.coord(0), t))
    }
}
