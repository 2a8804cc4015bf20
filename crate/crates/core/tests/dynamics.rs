use num_complex::Complex64;
use pilotwave::guidance::{self, Integrator};
use pilotwave::scenarios;
use pilotwave::tdse::{CoherentState, FreeGaussian, Propagator};
use pilotwave::{Configuration, Grid, PhysicalParams, Potential, WaveFunction};

fn centroid(psi: &WaveFunction) -> f64 {
    let axis = psi.grid().axis(0);
    psi.density().iter().enumerate().map(|(j, r)| r * axis.coord(j)).sum::<f64>() * axis.spacing()
}

#[test]
fn norm_is_conserved_over_a_thousand_steps() {
    for name in ["two_slit", "free_gaussian", "harmonic", "measurement"] {
        let s = scenarios::by_name(name).unwrap();
        let prop = s.propagator(s.defaults.dt).unwrap();
        let frames = prop.evolve(&s.psi0, 1000, 1000).unwrap();
        let drift = (frames.last().norm_sq() - s.psi0.norm_sq()).abs();
        assert!(drift <= 1e-8, "{name}: {drift:e}");
    }
}

#[test]
fn forward_then_backward_returns_home() {
    for name in ["two_slit", "harmonic"] {
        let s = scenarios::by_name(name).unwrap();
        let forward = s.propagator(1e-3).unwrap();
        let backward = forward.with_dt(-1e-3).unwrap();
        let there = forward.evolve(&s.psi0, 1000, 1000).unwrap().last().clone();
        let back = backward.evolve(&there, 1000, 1000).unwrap().last().clone();
        let err = back.l2_distance(&s.psi0).unwrap();
        assert!(err <= 1e-8, "{name}: {err:e}");
    }
}

#[test]
fn split_step_is_second_order_in_time() {
    // a free packet is propagated exactly, so use the oscillator
    let s = scenarios::default_harmonic().unwrap();
    let exact = CoherentState { omega: 1.0, displacement: 2.0, hbar: 1.0, mass: 1.0 }.sample(&s.grid, 1.0);
    let error = |dt: f64| {
        let n = (1.0 / dt).round() as usize;
        let out = s.propagator(dt).unwrap().evolve(&s.psi0, n, n).unwrap();
        out.last().l2_distance(&exact).unwrap()
    };
    let (coarse, fine) = (error(0.02), error(0.01));
    let ratio = coarse / fine;
    assert!((3.4..=4.6).contains(&ratio), "ratio {ratio}");
}

#[test]
fn energy_is_conserved() {
    let s = scenarios::default_harmonic().unwrap();
    let prop = s.propagator(1e-3).unwrap();
    let e0 = prop.energy(&s.psi0).unwrap();
    // ½ħω + ½mω²d²
    assert!((e0 - 2.5).abs() < 1e-8, "{e0}");
    let frames = prop.evolve(&s.psi0, 2000, 500).unwrap();
    for f in frames.frames() {
        assert!((prop.energy(f).unwrap() - e0).abs() < 1e-5);
    }
}

#[test]
fn coherent_centroid_completes_a_period() {
    let s = scenarios::default_harmonic().unwrap();
    let period = scenarios::harmonic_period(1.0);
    let n = 2000;
    let prop = s.propagator(period / n as f64).unwrap();
    let frames = prop.evolve(&s.psi0, n, n / 2).unwrap();
    let half = &frames.frames()[1];
    assert!((centroid(half) + 2.0).abs() < 1e-3, "{}", centroid(half));
    assert!((centroid(frames.last()) - 2.0).abs() < 1e-3);
}

#[test]
fn plane_wave_trajectory_is_uniform_motion() {
    let grid = Grid::line(8.0 * std::f64::consts::PI, 256).unwrap();
    let k = 2.0;
    let psi = WaveFunction::from_fn(&grid, 0.0, |q| Complex64::from_polar(1.0, k * q.coord(0)));
    let prop = Propagator::new(PhysicalParams::natural(1), Potential::zero(&grid), 1e-2).unwrap();
    let frames = prop.evolve(&psi, 100, 1).unwrap();
    let traj = guidance::integrate(&frames, Configuration::x(0.0), &PhysicalParams::natural(1)).unwrap();
    assert!((traj.last().coord(0) - k).abs() < 1e-6);
}

#[test]
fn free_gaussian_trajectories_stretch_with_the_packet() {
    let s = scenarios::default_free_gaussian().unwrap();
    let frames = s.propagator(1e-3).unwrap().evolve(&s.psi0, 2000, 10).unwrap();
    let integrator = Integrator::new(s.params.clone());
    for q0 in [0.5, 1.0, 2.0] {
        let q = integrator.integrate(&frames, Configuration::x(q0)).unwrap().last().coord(0);
        let expected = q0 * 2f64.sqrt();
        assert!(((q - expected) / expected).abs() < 1e-3, "{q0}: {q}");
    }
}

#[test]
fn halving_the_rk4_step_barely_moves_the_endpoint() {
    let s = scenarios::default_free_gaussian().unwrap();
    let frames = s.propagator(1e-3).unwrap().evolve(&s.psi0, 2000, 10).unwrap();
    let base = Integrator::new(s.params.clone());
    let q0 = Configuration::x(1.3);
    let a = base.integrate(&frames, q0).unwrap().last().coord(0);
    let b = base.clone().with_substeps(2).integrate(&frames, q0).unwrap().last().coord(0);
    assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
}

#[test]
fn continuity_holds_on_free_gaussian_and_two_slit() {
    for name in ["free_gaussian", "two_slit"] {
        let s = scenarios::by_name(name).unwrap();
        let d = s.defaults;
        let frames = s.propagator(d.dt).unwrap().evolve(&s.psi0, d.nsteps, d.stride).unwrap();
        let worst = guidance::max_continuity_residual(&frames, &s.params).unwrap();
        assert!(worst <= 1e-3, "{name}: {worst:e}");
    }
}

#[test]
fn continuity_windows_on_an_exact_packet() {
    let grid = Grid::line(40.0, 512).unwrap();
    let g = FreeGaussian::new(-1.0, 1.0, 1.5, 1.0, 1.0).unwrap();
    let dt = 1e-2;
    let frames: Vec<WaveFunction> = (0..5).map(|k| g.sample(&grid, 1.0 + k as f64 * dt)).collect();
    let params = PhysicalParams::natural(1);
    let second = guidance::continuity_residual(&frames[1..4], &params).unwrap();
    let fourth = guidance::continuity_residual(&frames, &params).unwrap();
    assert!(fourth < 1e-2 * second && fourth < 1e-7, "{second:e} {fourth:e}");
    assert!(guidance::continuity_residual(&frames[..2], &params).is_err());
}
