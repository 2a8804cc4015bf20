//! The guiding equation `dQ/dt = (ħ/m) Im(∇ψ/ψ)(Q)` and its integration.
//!
//! `ψ` and `∇ψ` are formed on the grid (spectrally) and interpolated to the
//! configuration separately; the ratio is taken last. Near nodes the
//! denominator is regularized by `ε·max|ψ|²`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::GridFft;
use crate::grid::{Configuration, Grid, MAX_DIM};
use crate::interp::Stencil;
use crate::params::PhysicalParams;
use crate::tdse::FrameSequence;
use crate::wavefunction::WaveFunction;

/// Default node regularization, as a fraction of the peak density.
pub const DEFAULT_NODE_EPS: f64 = 1e-12;

/// Below this fraction of the peak density the phase is not differentiated.
pub const POLAR_DENSITY_FLOOR: f64 = 1e-6;

/// Velocity components; entries past the configuration dimension are zero.
pub type Velocity = [f64; MAX_DIM];

/// A frame with its gradient precomputed, ready for off-grid evaluation.
#[derive(Debug, Clone)]
pub struct GuidedFrame {
    grid: Grid,
    time: f64,
    psi: Vec<Complex64>,
    grad: Vec<Vec<Complex64>>,
    max_density: f64,
}

impl GuidedFrame {
    /// Gradients are skipped on frozen (infinite-mass) axes.
    pub fn new(frame: &WaveFunction, params: &PhysicalParams, fft: &mut GridFft) -> Result<Self> {
        params.check_grid(frame.grid())?;
        let mut spectrum = frame.values().to_vec();
        fft.forward(&mut spectrum);
        let grad = (0..frame.grid().dim())
            .map(|axis| {
                if params.hbar_over_mass(axis) == 0.0 {
                    Vec::new()
                } else {
                    crate::wavefunction::spectral_derivative(frame.grid(), &spectrum, axis, fft)
                }
            })
            .collect();
        Ok(GuidedFrame {
            grid: frame.grid().clone(),
            time: frame.time(),
            psi: frame.values().to_vec(),
            grad,
            max_density: frame.max_density(),
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    fn sample(&self, stencil: &Stencil) -> (Complex64, [Complex64; MAX_DIM]) {
        let zero = Complex64::new(0.0, 0.0);
        let mut g = [zero; MAX_DIM];
        for (axis, field) in self.grad.iter().enumerate() {
            if !field.is_empty() {
                g[axis] = stencil.apply(field);
            }
        }
        (stencil.apply(&self.psi), g)
    }
}

#[inline]
fn guiding_velocity(
    psi: Complex64,
    grad: &[Complex64; MAX_DIM],
    reference_density: f64,
    eps: f64,
    params: &PhysicalParams,
) -> Velocity {
    let denom = psi.norm_sqr() + eps * reference_density;
    let mut v = [0.0; MAX_DIM];
    for (axis, out) in v.iter_mut().enumerate().take(params.dim()) {
        let c = params.hbar_over_mass(axis);
        if c != 0.0 && denom > 0.0 {
            *out = c * (psi.conj() * grad[axis]).im / denom;
        }
    }
    v
}

/// The guiding velocity field of one wave function.
#[derive(Debug, Clone)]
pub struct VelocityField {
    frame: GuidedFrame,
    params: PhysicalParams,
    eps_node: f64,
}

impl VelocityField {
    pub fn new(frame: &WaveFunction, params: &PhysicalParams) -> Result<Self> {
        let prepared = GuidedFrame::new(frame, params, &mut GridFft::new(frame.grid()))?;
        Ok(VelocityField { frame: prepared, params: params.clone(), eps_node: DEFAULT_NODE_EPS })
    }

    pub fn with_regularization(mut self, eps_node: f64) -> Self {
        self.eps_node = eps_node;
        self
    }

    pub fn regularization(&self) -> f64 {
        self.eps_node
    }

    /// `(ħ/m) Im(ψ*∇ψ) / (|ψ|² + ε max|ψ|²)` at `q`.
    pub fn velocity(&self, q: &Configuration) -> Velocity {
        let stencil = Stencil::new(&self.frame.grid, q);
        let (psi, grad) = self.frame.sample(&stencil);
        guiding_velocity(psi, &grad, self.frame.max_density, self.eps_node, &self.params)
    }

    /// Density at `q` relative to the peak density.
    pub fn relative_density(&self, q: &Configuration) -> f64 {
        let psi = Stencil::new(&self.frame.grid, q).apply(&self.frame.psi);
        psi.norm_sqr() / self.frame.max_density
    }
}

/// Free-function form of [`VelocityField::velocity`].
pub fn velocity(field: &VelocityField, q: &Configuration) -> Velocity {
    field.velocity(q)
}

/// `∇S/m` from the phase of `ψ = R e^{iS/ħ}`.
///
/// The phase is unwrapped locally along each axis and differentiated with a
/// sixth-order central difference, independently of [`VelocityField`].
#[derive(Debug, Clone)]
pub struct PolarField {
    grid: Grid,
    params: PhysicalParams,
    density: Vec<f64>,
    max_density: f64,
    phase_gradient: Vec<Vec<f64>>,
}

const FD6: [f64; 7] = [-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];

fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI { PI } else { w }
}

impl PolarField {
    pub fn new(frame: &WaveFunction, params: &PhysicalParams) -> Result<Self> {
        params.check_grid(frame.grid())?;
        let grid = frame.grid().clone();
        let phase: Vec<f64> = frame.values().iter().map(|z| z.arg()).collect();
        let phase_gradient = (0..grid.dim())
            .map(|axis| {
                let n = grid.axis(axis).points as isize;
                let stride = grid.stride(axis);
                let h = grid.axis(axis).spacing();
                (0..grid.len())
                    .map(|flat| {
                        let j = ((flat / stride) as isize) % n;
                        let base = flat - (j as usize) * stride;
                        let at = |o: isize| phase[base + ((j + o).rem_euclid(n) as usize) * stride];
                        // unwrap the 7-point window around the centre
                        let mut window = [0.0; 7];
                        for o in 1..=3isize {
                            window[(3 + o) as usize] =
                                window[(2 + o) as usize] + wrap_angle(at(o) - at(o - 1));
                            window[(3 - o) as usize] =
                                window[(4 - o) as usize] - wrap_angle(at(1 - o) - at(-o));
                        }
                        params.hbar * FD6.iter().zip(&window).map(|(c, w)| c * w).sum::<f64>() / h
                    })
                    .collect()
            })
            .collect();
        Ok(PolarField {
            grid,
            params: params.clone(),
            density: frame.density(),
            max_density: frame.max_density(),
            phase_gradient,
        })
    }

    /// `∇S/m` at `q`; fails with [`Error::NearNode`] where the density is
    /// below [`POLAR_DENSITY_FLOOR`] of its peak.
    pub fn velocity(&self, q: &Configuration) -> Result<Velocity> {
        let stencil = Stencil::new(&self.grid, q);
        let rel = stencil.apply_real(&self.density) / self.max_density;
        if !(rel >= POLAR_DENSITY_FLOOR) {
            return Err(Error::NearNode(rel));
        }
        let mut v = [0.0; MAX_DIM];
        for (axis, out) in v.iter_mut().enumerate().take(self.grid.dim()) {
            *out = stencil.apply_real(&self.phase_gradient[axis]) / self.params.mass(axis);
        }
        Ok(v)
    }
}

/// Free-function form of [`PolarField::velocity`].
pub fn velocity_polar(field: &PolarField, q: &Configuration) -> Result<Velocity> {
    field.velocity(q)
}

/// Time series of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub id: u64,
    pub times: Vec<f64>,
    pub points: Vec<Configuration>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &Configuration {
        self.points.last().expect("trajectories hold at least the initial point")
    }
}

/// RK4 integration of the guiding equation through a frame sequence.
///
/// Between adjacent frames `ψ` (and so `∇ψ`) is interpolated linearly in
/// time. Speeds are capped at `Δx/h` per axis for substep `h`.
#[derive(Debug, Clone)]
pub struct Integrator {
    pub params: PhysicalParams,
    pub eps_node: f64,
    /// RK4 steps per frame interval.
    pub substeps: usize,
}

struct Interval<'a> {
    a: &'a GuidedFrame,
    b: &'a GuidedFrame,
    params: &'a PhysicalParams,
    eps: f64,
    cap: Velocity,
}

impl Interval<'_> {
    #[inline]
    fn velocity(&self, q: &Configuration, s: f64) -> Velocity {
        let stencil = Stencil::new(&self.a.grid, q);
        let (pa, ga) = self.a.sample(&stencil);
        let (psi, grad, reference) = if s == 0.0 {
            (pa, ga, self.a.max_density)
        } else {
            let (pb, gb) = self.b.sample(&stencil);
            let mut g = ga;
            for (x, y) in g.iter_mut().zip(&gb) {
                *x = *x * (1.0 - s) + *y * s;
            }
            (pa * (1.0 - s) + pb * s, g, self.a.max_density * (1.0 - s) + self.b.max_density * s)
        };
        let mut v = guiding_velocity(psi, &grad, reference, self.eps, self.params);
        for (vi, cap) in v.iter_mut().zip(&self.cap) {
            *vi = vi.clamp(-cap, *cap);
        }
        v
    }

    fn advance(&self, grid: &Grid, q: Configuration, substeps: usize) -> Configuration {
        let span = self.b.time - self.a.time;
        let h = span / substeps as f64;
        let mut q = q;
        for k in 0..substeps {
            let s0 = k as f64 / substeps as f64;
            let sm = (k as f64 + 0.5) / substeps as f64;
            let s1 = (k + 1) as f64 / substeps as f64;
            let k1 = self.velocity(&q, s0);
            let k2 = self.velocity(&q.displaced(&k1, 0.5 * h), sm);
            let k3 = self.velocity(&q.displaced(&k2, 0.5 * h), sm);
            let k4 = self.velocity(&q.displaced(&k3, h), s1);
            let mut slope = [0.0; MAX_DIM];
            for i in 0..MAX_DIM {
                slope[i] = (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
            }
            q = grid.wrap(q.displaced(&slope, h));
        }
        q
    }
}

impl Integrator {
    pub fn new(params: PhysicalParams) -> Self {
        Integrator { params, eps_node: DEFAULT_NODE_EPS, substeps: 1 }
    }

    pub fn with_substeps(mut self, substeps: usize) -> Self {
        self.substeps = substeps.max(1);
        self
    }

    pub fn with_regularization(mut self, eps_node: f64) -> Self {
        self.eps_node = eps_node;
        self
    }

    /// One trajectory sampled at every frame time.
    pub fn integrate(&self, frames: &FrameSequence, q0: Configuration) -> Result<Trajectory> {
        let mut out = self.integrate_many(frames.frames().iter().cloned().map(Ok), &[q0], 1)?;
        Ok(out.pop().expect("one start point gives one trajectory"))
    }

    /// Integrates all start points in lockstep while frames stream past.
    ///
    /// Only two frames are held at a time. Positions are recorded at every
    /// `record_every`-th frame plus the last one. Trajectory `i` gets id `i`.
    pub fn integrate_many<I>(
        &self,
        frames: I,
        starts: &[Configuration],
        record_every: usize,
    ) -> Result<Vec<Trajectory>>
    where
        I: IntoIterator<Item = Result<WaveFunction>>,
    {
        let record_every = record_every.max(1);
        let mut frames = frames.into_iter();
        let first = frames
            .next()
            .ok_or_else(|| Error::InvalidArgument("frame sequence is empty".into()))??;
        let grid = first.grid().clone();
        self.params.check_grid(&grid)?;
        if let Some(bad) = starts.iter().find(|q| q.dim() != grid.dim()) {
            return Err(Error::InvalidArgument(format!(
                "start point of dimension {} on a {}-dimensional grid",
                bad.dim(),
                grid.dim()
            )));
        }
        let mut fft = GridFft::new(&grid);
        let mut prev = GuidedFrame::new(&first, &self.params, &mut fft)?;
        let mut trajectories: Vec<Trajectory> = starts
            .iter()
            .enumerate()
            .map(|(id, q)| Trajectory { id: id as u64, times: vec![prev.time], points: vec![grid.wrap(*q)] })
            .collect();
        let mut current: Vec<Configuration> = trajectories.iter().map(|t| t.points[0]).collect();
        let mut index = 0usize;
        let mut pending = false;
        for frame in frames {
            let frame = frame?;
            grid.check_same(frame.grid())?;
            let next = GuidedFrame::new(&frame, &self.params, &mut fft)?;
            let span = next.time - prev.time;
            if !(span > 0.0) {
                return Err(Error::InvalidArgument("frame times must increase".into()));
            }
            let h = span / self.substeps as f64;
            let mut cap = [f64::INFINITY; MAX_DIM];
            for (i, c) in cap.iter_mut().enumerate().take(grid.dim()) {
                *c = grid.axis(i).spacing() / h;
            }
            let interval = Interval { a: &prev, b: &next, params: &self.params, eps: self.eps_node, cap };
            current.par_iter_mut().for_each(|q| *q = interval.advance(&grid, *q, self.substeps));
            index += 1;
            pending = true;
            if index % record_every == 0 {
                record(&mut trajectories, &current, next.time);
                pending = false;
            }
            prev = next;
        }
        if pending {
            record(&mut trajectories, &current, prev.time);
        }
        Ok(trajectories)
    }
}

fn record(trajectories: &mut [Trajectory], current: &[Configuration], t: f64) {
    for (traj, q) in trajectories.iter_mut().zip(current) {
        traj.times.push(t);
        traj.points.push(*q);
    }
}

/// Integrates one trajectory with default settings (one RK4 step per frame).
pub fn integrate(frames: &FrameSequence, q0: Configuration, params: &PhysicalParams) -> Result<Trajectory> {
    Integrator::new(params.clone()).integrate(frames, q0)
}

/// Probability current `J_k = (ħ/m_k) Im(ψ*∇_kψ)` on the grid, per axis.
pub fn probability_current(psi: &WaveFunction, params: &PhysicalParams) -> Result<Vec<Vec<f64>>> {
    params.check_grid(psi.grid())?;
    let grad = psi.gradient();
    Ok(grad
        .iter()
        .enumerate()
        .map(|(axis, g)| {
            let c = params.hbar_over_mass(axis);
            psi.values().iter().zip(g).map(|(p, d)| c * (p.conj() * d).im).collect()
        })
        .collect())
}

fn current_divergence(psi: &WaveFunction, params: &PhysicalParams) -> Result<Vec<f64>> {
    let grid = psi.grid();
    let mut fft = GridFft::new(grid);
    let current = probability_current(psi, params)?;
    let mut divergence = vec![0.0; grid.len()];
    for (axis, j) in current.iter().enumerate() {
        if params.hbar_over_mass(axis) == 0.0 {
            continue;
        }
        let mut spectrum: Vec<Complex64> = j.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        fft.forward(&mut spectrum);
        let d = crate::wavefunction::spectral_derivative(grid, &spectrum, axis, &mut fft);
        divergence.iter_mut().zip(&d).for_each(|(acc, z)| *acc += z.re);
    }
    Ok(divergence)
}

/// L¹ norm of `∂ρ/∂t + ∇·J` at the centre of an odd, evenly spaced window
/// of 3 or 5 frames. `∂ρ/∂t` is a centred difference of order 2 or 4;
/// the divergence is spectral.
pub fn continuity_residual(window: &[WaveFunction], params: &PhysicalParams) -> Result<f64> {
    let weights: &[f64] = match window.len() {
        3 => &[-0.5, 0.0, 0.5],
        5 => &[1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0],
        n => return Err(Error::InvalidArgument(format!("continuity window of {n} frames"))),
    };
    let middle = &window[window.len() / 2];
    for f in window {
        f.grid().check_same(middle.grid())?;
    }
    let dt = (window[window.len() - 1].time() - window[0].time()) / (window.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument("frames must be time-ordered".into()));
    }
    let mut residual = current_divergence(middle, params)?;
    for (f, w) in window.iter().zip(weights) {
        if *w != 0.0 {
            let c = w / dt;
            residual.iter_mut().zip(f.values()).for_each(|(r, z)| *r += c * z.norm_sqr());
        }
    }
    Ok(residual.iter().map(|r| r.abs()).sum::<f64>() * middle.grid().cell_volume())
}

/// Largest continuity residual over every interior frame of a sequence,
/// with the five-frame window when there are enough frames.
pub fn max_continuity_residual(frames: &FrameSequence, params: &PhysicalParams) -> Result<f64> {
    let f = frames.frames();
    let width = if f.len() >= 5 { 5 } else { 3 };
    let mut worst: f64 = 0.0;
    for w in f.windows(width) {
        worst = worst.max(continuity_residual(w, params)?);
    }
    Ok(worst)
}
