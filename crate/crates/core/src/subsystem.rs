//! Conditional wave functions and an ideal measurement on the `(x, y)` =
//! (system, pointer) plane.
//!
//! The measurement couples impulsively at `t = 0⁺`: the pointer packet of
//! branch `α` receives momentum `Mλα`, then drifts freely with pointer mass
//! `M` while the system axis is frozen (infinite mass). The exact state is
//!
//! ```text
//! Ψ_t(x, y) = Σ_α c_α ψ_α(x) Φ_α(y, t)
//! ```
//!
//! with `Φ_α(·, t)` a free Gaussian centred at `λαt`. Trajectories follow
//! the ordinary guiding equation in this field.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::{self, StatReport};
use crate::error::{Error, Result};
use crate::grid::{Configuration, Grid};
use crate::guidance::{Integrator, Trajectory};
use crate::interp::Stencil;
use crate::params::PhysicalParams;
use crate::stats::{self, GridCdf};
use crate::tdse::{FreeGaussian, Propagator};
use crate::wavefunction::WaveFunction;

/// Slices with norm² below this are null.
pub const NULL_SLICE_NORM: f64 = 1e-14;

/// Pointer supports are truncated at this many packet widths.
pub const SUPPORT_WIDTHS: f64 = 4.0;

/// Minimum number of runs in an outcome class for a conditional test.
pub const MIN_CONDITIONAL_SAMPLES: usize = 100;

/// Largest admissible KS distance for the conditional-law tests.
pub const FCP_MAX_KS: f64 = 0.05;

/// Largest tolerated share of runs whose pointer lands in no support.
pub const MAX_UNCLASSIFIED: f64 = 1e-3;

/// `ψ(x) = Ψ(x, Y)` as an unnormalized ray representative.
///
/// `Y` between grid rows is handled with the same cubic stencil used for
/// trajectories.
pub fn conditional_wavefunction(psi: &WaveFunction, y: f64) -> Result<WaveFunction> {
    let grid = psi.grid();
    if grid.dim() != 2 {
        return Err(Error::InvalidArgument("conditional slices need a 2D wave function".into()));
    }
    let system = Grid::new(vec![*grid.axis(0)])?;
    let pointer = Grid::new(vec![*grid.axis(1)])?;
    let stencil = Stencil::new(&pointer, &Configuration::x(y));
    let ny = grid.axis(1).points;
    let values: Vec<Complex64> =
        psi.values().chunks_exact(ny).map(|row| stencil.apply(row)).collect();
    let slice = WaveFunction::new(system, values, psi.time())?;
    let n2 = slice.norm_sq();
    if !(n2 >= NULL_SLICE_NORM) {
        return Err(Error::NullSlice(n2));
    }
    Ok(slice)
}

/// `|⟨ψ̂, φ̂⟩|` for the normalized rays of `a` and `b`: 1 iff they coincide.
pub fn ray_fidelity(a: &WaveFunction, b: &WaveFunction) -> Result<f64> {
    Ok(a.normalize()?.inner(&b.normalize()?)?.norm())
}

/// Parameters of one ideal measurement.
#[derive(Debug, Clone)]
pub struct MeasurementSetup {
    grid: Grid,
    modes: Vec<WaveFunction>,
    eigenvalues: Vec<f64>,
    coeffs: Vec<Complex64>,
    pointer_width: f64,
    coupling: f64,
    duration: f64,
    pointer_mass: f64,
    hbar: f64,
}

impl MeasurementSetup {
    /// `modes` live on the x-axis of `grid`; the pointer `Φ₀` is a centred
    /// Gaussian of density width `pointer_width` on the y-axis.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        grid: Grid,
        modes: Vec<WaveFunction>,
        eigenvalues: Vec<f64>,
        coeffs: Vec<Complex64>,
        pointer_width: f64,
        coupling: f64,
        duration: f64,
        pointer_mass: f64,
        hbar: f64,
    ) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidSetup(m));
        if grid.dim() != 2 {
            return bad("measurement grid must be two-dimensional".into());
        }
        if modes.is_empty() || modes.len() != eigenvalues.len() || modes.len() != coeffs.len() {
            return bad("need one eigenvalue and one coefficient per mode".into());
        }
        let system = Grid::new(vec![*grid.axis(0)])?;
        for (a, m) in modes.iter().enumerate() {
            if m.grid() != &system {
                return bad(format!("mode {a} is not on the system axis"));
            }
            if (m.norm_sq() - 1.0).abs() > 1e-10 {
                return bad(format!("mode {a} is not normalized"));
            }
            for (b, other) in modes.iter().enumerate().skip(a + 1) {
                let overlap = m.inner(other)?.norm();
                if overlap > 1e-10 {
                    return bad(format!("modes {a} and {b} overlap by {overlap:e}"));
                }
            }
        }
        let weight: f64 = coeffs.iter().map(Complex64::norm_sqr).sum();
        if (weight - 1.0).abs() > 1e-12 {
            return bad(format!("Σ|c|² = {weight}, expected 1"));
        }
        for v in [pointer_width, duration, pointer_mass, hbar] {
            if !(v.is_finite() && v > 0.0) {
                return bad("pointer width, duration, pointer mass and ħ must be positive".into());
            }
        }
        if !(coupling.is_finite() && coupling != 0.0) {
            return bad("coupling must be nonzero".into());
        }
        let setup = MeasurementSetup {
            grid,
            modes,
            eigenvalues,
            coeffs,
            pointer_width,
            coupling,
            duration,
            pointer_mass,
            hbar,
        };
        let width = setup.pointer_width_at(duration);
        for (a, &x) in setup.eigenvalues.iter().enumerate() {
            for &y in &setup.eigenvalues[a + 1..] {
                let gap = (coupling * (x - y)).abs() * duration;
                if gap < 2.0 * SUPPORT_WIDTHS * width {
                    return bad(format!(
                        "pointer positions {gap} apart cannot be resolved at width {width}"
                    ));
                }
            }
        }
        Ok(setup)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn system_grid(&self) -> Grid {
        Grid::new(vec![*self.grid.axis(0)]).expect("axis is valid")
    }

    pub fn modes(&self) -> &[WaveFunction] {
        &self.modes
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn pointer_width(&self) -> f64 {
        self.pointer_width
    }

    pub fn pointer_mass(&self) -> f64 {
        self.pointer_mass
    }

    /// Frozen system axis, massive pointer.
    pub fn params(&self) -> PhysicalParams {
        PhysicalParams::new(self.hbar, vec![f64::INFINITY, self.pointer_mass])
            .expect("validated at construction")
    }

    /// Born weights `|c_a|²`.
    pub fn weights(&self) -> Vec<f64> {
        self.coeffs.iter().map(Complex64::norm_sqr).collect()
    }

    /// Pointer packet of branch `a`.
    pub fn pointer_packet(&self, a: usize) -> FreeGaussian {
        let k0 = self.pointer_mass * self.coupling * self.eigenvalues[a] / self.hbar;
        FreeGaussian { x0: 0.0, sigma0: self.pointer_width, k0, hbar: self.hbar, mass: self.pointer_mass }
    }

    /// Pointer centre of branch `a` at time `t`: `λαt`.
    pub fn pointer_center(&self, a: usize, t: f64) -> f64 {
        self.pointer_packet(a).center(t)
    }

    pub fn pointer_width_at(&self, t: f64) -> f64 {
        FreeGaussian { x0: 0.0, sigma0: self.pointer_width, k0: 0.0, hbar: self.hbar, mass: self.pointer_mass }
            .width(t)
    }

    /// System state `ψ = Σ c_α ψ_α`.
    pub fn system_state(&self) -> WaveFunction {
        let mut acc = WaveFunction::zeros(&self.system_grid(), 0.0);
        for (m, c) in self.modes.iter().zip(&self.coeffs) {
            for (z, v) in acc.values_mut().iter_mut().zip(m.values()) {
                *z += c * v;
            }
        }
        acc
    }

    /// `Ψ₀ = ψ(x)Φ₀(y)` before the coupling acts.
    pub fn ready_state(&self) -> WaveFunction {
        let psi = self.system_state();
        let ay = self.grid.axis(1);
        let pointer: Vec<Complex64> = ay
            .coords()
            .map(|y| FreeGaussian { k0: 0.0, ..self.pointer_packet(0) }.value(y, 0.0))
            .collect();
        let values = psi.values().iter().flat_map(|p| pointer.iter().map(move |f| p * f)).collect();
        WaveFunction::new(self.grid.clone(), values, 0.0).expect("sizes match")
    }

    /// `Ψ_t = Σ c_α ψ_α(x) Φ_α(y, t)` for `0 ≤ t ≤ T`; at `t = 0` this is the
    /// state just after the impulsive coupling.
    pub fn measurement_state(&self, t: f64) -> WaveFunction {
        let ay = self.grid.axis(1);
        let ny = ay.points;
        let mut values = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        for (a, (mode, c)) in self.modes.iter().zip(&self.coeffs).enumerate() {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let packet = self.pointer_packet(a);
            let column: Vec<Complex64> = ay.coords().map(|y| c * packet.value(y, t)).collect();
            for (row, m) in values.chunks_exact_mut(ny).zip(mode.values()) {
                for (z, f) in row.iter_mut().zip(&column) {
                    *z += m * f;
                }
            }
        }
        WaveFunction::new(self.grid.clone(), values, t).expect("sizes match")
    }

    /// `frames + 1` closed-form states evenly spaced on `[0, t_end]`.
    pub fn frames(&self, frames: usize, t_end: f64) -> impl Iterator<Item = Result<WaveFunction>> + '_ {
        let frames = frames.max(1);
        (0..=frames).map(move |k| Ok(self.measurement_state(t_end * k as f64 / frames as f64)))
    }

    /// Outcome whose truncated pointer support contains `y` at the end of
    /// the measurement.
    pub fn classify(&self, y: f64) -> Option<usize> {
        let half = SUPPORT_WIDTHS * self.pointer_width_at(self.duration);
        (0..self.modes.len()).find(|&a| (y - self.pointer_center(a, self.duration)).abs() <= half)
    }

    /// L² distance between the closed form at `T` and a split-step evolution
    /// of the post-coupling state over `steps` steps.
    pub fn split_step_deviation(&self, steps: usize) -> Result<f64> {
        let steps = steps.max(1);
        let prop = Propagator::new(
            self.params(),
            crate::params::Potential::zero(&self.grid),
            self.duration / steps as f64,
        )?;
        let frames = prop.evolve(&self.measurement_state(0.0), steps, steps)?;
        frames.last().l2_distance(&self.measurement_state(self.duration))
    }
}

/// One simulated measurement.
#[derive(Debug, Clone)]
pub struct Run {
    /// Index of the registered mode, `None` when unclassified.
    pub outcome: Option<usize>,
    pub trajectory: Trajectory,
    /// Conditional wave function of the system at the end of the run.
    pub conditional: Option<WaveFunction>,
}

impl Run {
    pub fn final_position(&self) -> Configuration {
        *self.trajectory.last()
    }
}

#[derive(Debug, Clone)]
pub struct MeasurementRuns {
    pub runs: Vec<Run>,
    pub seed: u64,
    pub frames: usize,
}

/// Default number of frame intervals across the measurement.
pub const DEFAULT_FRAMES: usize = 400;

/// Samples `(X₀, Y₀)` from `|Ψ₀|²`, integrates the guiding equation across
/// the measurement and classifies every run by its final pointer position.
pub fn run_measurement(setup: &MeasurementSetup, n: usize, seed: u64) -> Result<MeasurementRuns> {
    run_measurement_with(setup, n, seed, DEFAULT_FRAMES, 8)
}

/// As [`run_measurement`], with explicit frame count and trajectory
/// recording interval.
pub fn run_measurement_with(
    setup: &MeasurementSetup,
    n: usize,
    seed: u64,
    frames: usize,
    record_every: usize,
) -> Result<MeasurementRuns> {
    let initial = setup.measurement_state(0.0);
    let ensemble = ensemble::sample(&initial, n, seed)?;
    let integrator = Integrator::new(setup.params());
    let trajectories =
        integrator.integrate_many(setup.frames(frames, setup.duration), &ensemble.samples, record_every)?;
    let runs = classify_runs(setup, trajectories, &setup.measurement_state(setup.duration))?;
    Ok(MeasurementRuns { runs, seed, frames })
}

/// Reads the outcome and final conditional wave function of each trajectory
/// from `last`, the state at the end of the measurement.
pub fn classify_runs(setup: &MeasurementSetup, trajectories: Vec<Trajectory>, last: &WaveFunction) -> Result<Vec<Run>> {
    setup.grid.check_same(last.grid())?;
    if (last.time() - setup.duration).abs() > 1e-9 * setup.duration {
        return Err(Error::InvalidArgument(format!(
            "outcomes are read at t = {}, got a state at t = {}",
            setup.duration,
            last.time()
        )));
    }
    Ok(trajectories
        .into_iter()
        .map(|trajectory| {
            let y = trajectory.last().coord(1);
            let outcome = setup.classify(y);
            let conditional = conditional_wavefunction(last, y).ok();
            Run { outcome, trajectory, conditional }
        })
        .collect())
}

/// Transports `|Ψ₀|²` samples through the closed-form field to time `t` and
/// compares the end points with `|Ψ_t|²` (χ² on the plane).
pub fn equivariance_at(
    setup: &MeasurementSetup,
    t: f64,
    n: usize,
    seed: u64,
    frames: usize,
) -> Result<StatReport> {
    if !(t > 0.0 && t <= setup.duration) {
        return Err(Error::InvalidArgument(format!("time {t} outside (0, {}]", setup.duration)));
    }
    let ensemble = ensemble::sample(&setup.measurement_state(0.0), n, seed)?;
    let integrator = Integrator::new(setup.params());
    let (report, _) = ensemble::check_transport(setup.frames(frames, t), &ensemble, &integrator, 0.0)?;
    Ok(report)
}

/// `|⟨ψ̂_T, ψ_a⟩|` for a classified run.
pub fn collapse_fidelity(setup: &MeasurementSetup, run: &Run) -> Option<f64> {
    let a = run.outcome?;
    let conditional = run.conditional.as_ref()?;
    ray_fidelity(conditional, &setup.modes[a]).ok()
}

/// Outcome counts against the Born weights.
///
/// Unclassified runs are counted but kept out of the frequencies, so
/// `Σ counts + unclassified = n` while the frequencies sum to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BornReport {
    pub n: usize,
    pub counts: Vec<usize>,
    pub unclassified: usize,
    /// `counts[a] / (n − unclassified)`.
    pub frequencies: Vec<f64>,
    pub weights: Vec<f64>,
    /// Three binomial standard deviations per outcome.
    pub tolerances: Vec<f64>,
    pub unclassified_fraction: f64,
    pub pass: bool,
}

pub fn born_report(setup: &MeasurementSetup, output: &MeasurementRuns) -> BornReport {
    let n = output.runs.len();
    let mut counts = vec![0usize; setup.modes.len()];
    let mut unclassified = 0;
    for run in &output.runs {
        match run.outcome {
            Some(a) => counts[a] += 1,
            None => unclassified += 1,
        }
    }
    let weights = setup.weights();
    let classified = (n - unclassified).max(1) as f64;
    let frequencies: Vec<f64> = counts.iter().map(|&c| c as f64 / classified).collect();
    let tolerances: Vec<f64> = weights.iter().map(|p| 3.0 * (p * (1.0 - p) / classified).sqrt()).collect();
    let unclassified_fraction = unclassified as f64 / n as f64;
    let pass = frequencies
        .iter()
        .zip(&weights)
        .zip(&tolerances)
        .all(|((f, p), tol)| (f - p).abs() <= *tol)
        && unclassified_fraction < MAX_UNCLASSIFIED;
    BornReport { n, counts, unclassified, frequencies, weights, tolerances, unclassified_fraction, pass }
}

/// Share of classified runs whose conditional wave function has fidelity at
/// least `min_fidelity` with the registered mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseReport {
    pub n: usize,
    pub classified: usize,
    pub min_fidelity: f64,
    pub required_share: f64,
    pub share: f64,
    pub worst: f64,
    pub unclassified_fraction: f64,
    pub pass: bool,
}

pub const COLLAPSE_MIN_FIDELITY: f64 = 0.999;
pub const COLLAPSE_REQUIRED_SHARE: f64 = 0.99;

pub fn collapse_report(setup: &MeasurementSetup, output: &MeasurementRuns) -> CollapseReport {
    let fidelities: Vec<f64> = output.runs.iter().filter_map(|r| collapse_fidelity(setup, r)).collect();
    let classified = output.runs.iter().filter(|r| r.outcome.is_some()).count();
    let good = fidelities.iter().filter(|f| **f >= COLLAPSE_MIN_FIDELITY).count();
    let share = if classified == 0 { 0.0 } else { good as f64 / classified as f64 };
    let n = output.runs.len();
    let unclassified_fraction = (n - classified) as f64 / n as f64;
    CollapseReport {
        n,
        classified,
        min_fidelity: COLLAPSE_MIN_FIDELITY,
        required_share: COLLAPSE_REQUIRED_SHARE,
        share,
        worst: fidelities.iter().copied().fold(f64::INFINITY, f64::min),
        unclassified_fraction,
        pass: share >= COLLAPSE_REQUIRED_SHARE && unclassified_fraction < MAX_UNCLASSIFIED,
    }
}

fn conditional_ks(samples: &[f64], mode: &WaveFunction, max_ks: f64) -> Result<StatReport> {
    if samples.len() < MIN_CONDITIONAL_SAMPLES {
        return Err(Error::InsufficientSamples { needed: MIN_CONDITIONAL_SAMPLES, got: samples.len() });
    }
    let cdf = GridCdf::new(mode.grid().axis(0), &mode.density())?;
    let ks = stats::ks_statistic(samples, |x| cdf.cdf(x));
    let critical = stats::ks_critical_99(samples.len());
    Ok(StatReport {
        n: samples.len(),
        ks: Some(ks),
        chi2: None,
        bins: None,
        critical,
        margin: max_ks - critical,
        threshold: max_ks,
        pass: ks <= max_ks,
    })
}

/// KS of `{X_T : outcome = a}` against `|ψ_a|²`.
pub fn fcp_check(setup: &MeasurementSetup, output: &MeasurementRuns, a: usize, max_ks: f64) -> Result<StatReport> {
    let xs: Vec<f64> = output
        .runs
        .iter()
        .filter(|r| r.outcome == Some(a))
        .map(|r| r.final_position().coord(0))
        .collect();
    conditional_ks(&xs, &setup.modes[a], max_ks)
}

/// Splits outcome class `a` by the side of the pointer centre on which `Y_T`
/// landed and runs the conditional KS test on both halves.
pub fn split_check(
    setup: &MeasurementSetup,
    output: &MeasurementRuns,
    a: usize,
    max_ks: f64,
) -> Result<(StatReport, StatReport)> {
    let center = setup.pointer_center(a, setup.duration);
    let (mut below, mut above) = (Vec::new(), Vec::new());
    for r in output.runs.iter().filter(|r| r.outcome == Some(a)) {
        let q = r.final_position();
        if q.coord(1) < center { below.push(q.coord(0)) } else { above.push(q.coord(0)) }
    }
    Ok((conditional_ks(&below, &setup.modes[a], max_ks)?, conditional_ks(&above, &setup.modes[a], max_ks)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios;

    fn two_modes(c: [f64; 2]) -> MeasurementSetup {
        scenarios::measurement(&[Complex64::new(c[0], 0.0), Complex64::new(c[1], 0.0)]).unwrap()
    }

    #[test]
    fn product_state_slices_to_the_system_factor() {
        let setup = two_modes([0.6, 0.8]);
        let ready = setup.ready_state();
        let psi = setup.system_state();
        for &y in &[0.0, 0.37, -0.81] {
            let slice = conditional_wavefunction(&ready, y).unwrap();
            assert!(ray_fidelity(&slice, &psi).unwrap() >= 1.0 - 1e-10);
        }
    }

    #[test]
    fn null_slice_far_from_every_packet() {
        let setup = two_modes([0.6, 0.8]);
        let state = setup.measurement_state(setup.duration());
        let edge = setup.grid().axis(1).lower();
        assert!(matches!(conditional_wavefunction(&state, edge), Err(Error::NullSlice(_))));
    }

    #[test]
    fn post_measurement_slice_selects_the_branch() {
        let setup = two_modes([0.3f64.sqrt(), 0.7f64.sqrt()]);
        let state = setup.measurement_state(setup.duration());
        let y = setup.pointer_center(1, setup.duration()) + 0.3;
        let slice = conditional_wavefunction(&state, y).unwrap();
        assert!(ray_fidelity(&slice, &setup.modes()[1]).unwrap() > 1.0 - 1e-10);
        // the same ray under a global phase
        let rotated = conditional_wavefunction(&state.scaled(Complex64::from_polar(1.0, 1.1)), y).unwrap();
        assert!((ray_fidelity(&rotated, &setup.modes()[1]).unwrap()
            - ray_fidelity(&slice, &setup.modes()[1]).unwrap())
        .abs()
            < 1e-14);
    }

    #[test]
    fn state_is_unit_norm_and_starts_as_a_product() {
        let setup = two_modes([0.3f64.sqrt(), 0.7f64.sqrt()]);
        for k in 0..=4 {
            let t = setup.duration() * k as f64 / 4.0;
            assert!((setup.measurement_state(t).norm_sq() - 1.0).abs() < 1e-10);
        }
        let ready = setup.ready_state();
        let kicked = setup.measurement_state(0.0);
        for (a, b) in ready.density().iter().zip(kicked.density()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_mode_moves_only_the_pointer() {
        let setup = two_modes([1.0, 0.0]);
        let t = 0.5 * setup.duration();
        let state = setup.measurement_state(t);
        let y = setup.pointer_center(0, t);
        assert!((y - setup.coupling() * setup.eigenvalues()[0] * t).abs() < 1e-12);
        let slice = conditional_wavefunction(&state, y).unwrap();
        assert!(ray_fidelity(&slice, &setup.modes()[0]).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn pointer_packets_separate() {
        let setup = two_modes([0.6, 0.8]);
        let t = setup.duration();
        let pointer = Grid::new(vec![*setup.grid().axis(1)]).unwrap();
        let p0 = setup.pointer_packet(0).sample(&pointer, t);
        let p1 = setup.pointer_packet(1).sample(&pointer, t);
        let envelope_overlap: f64 =
            p0.values().iter().zip(p1.values()).map(|(a, b)| a.norm() * b.norm()).sum::<f64>()
                * pointer.cell_volume();
        let d = setup.pointer_center(1, t) - setup.pointer_center(0, t);
        let s = setup.pointer_width_at(t);
        let expected = (-d * d / (8.0 * s * s)).exp();
        assert!((envelope_overlap - expected).abs() < 1e-3 * expected, "{envelope_overlap} vs {expected}");
        assert!(envelope_overlap < 1e-6);
        assert!(p0.inner(&p1).unwrap().norm() < 1e-10);
    }

    #[test]
    fn closed_form_agrees_with_split_step() {
        let setup = two_modes([0.3f64.sqrt(), 0.7f64.sqrt()]);
        let dev = setup.split_step_deviation(100).unwrap();
        assert!(dev <= 1e-6, "{dev:e}");
    }

    #[test]
    fn validation() {
        let setup = two_modes([0.6, 0.8]);
        let base = |coeffs: Vec<Complex64>, coupling: f64| {
            MeasurementSetup::new(
                setup.grid().clone(),
                setup.modes().to_vec(),
                setup.eigenvalues().to_vec(),
                coeffs,
                setup.pointer_width(),
                coupling,
                setup.duration(),
                setup.pointer_mass(),
                1.0,
            )
        };
        let ok = vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
        assert!(base(ok.clone(), setup.coupling()).is_ok());
        assert!(base(vec![Complex64::new(0.6, 0.0), Complex64::new(0.6, 0.0)], 4.0).is_err());
        // too weak a coupling cannot separate the pointer packets
        assert!(matches!(base(ok, 0.5), Err(Error::InvalidSetup(_))));
    }

    #[test]
    fn conditioning_needs_enough_runs() {
        let setup = two_modes([1.0, 0.0]);
        let out = run_measurement_with(&setup, 200, 1, 200, 20).unwrap();
        for r in &out.runs {
            assert_eq!(r.outcome, Some(0), "{:?}", r.trajectory.points);
        }
        assert!(matches!(
            fcp_check(&setup, &out, 1, FCP_MAX_KS),
            Err(Error::InsufficientSamples { got: 0, .. })
        ));
        let f = collapse_fidelity(&setup, &out.runs[0]).unwrap();
        assert!(f >= 1.0 - 1e-9);
        let born = born_report(&setup, &out);
        assert_eq!(born.frequencies, vec![1.0, 0.0]);
        assert_eq!(born.counts.iter().sum::<usize>() + born.unclassified, born.n);
    }
}
