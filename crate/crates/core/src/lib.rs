//! Pilot-wave dynamics on periodic grids.
//!
//! Wave functions evolve under the Schrödinger equation with a second-order
//! split-step spectral scheme ([`tdse`]); configurations move with the
//! guiding velocity `(ħ/m) Im(∇ψ/ψ)` ([`guidance`]). Ensembles drawn from
//! `|ψ|²` ([`ensemble`]) make the statistical statements testable, and
//! [`subsystem`] builds conditional wave functions and an ideal
//! measurement on a system ⊗ pointer configuration space.
//!
//! The guide in `book/` walks through each piece with runnable snippets.

pub mod ensemble;
pub mod error;
pub mod fft;
pub mod grid;
pub mod guidance;
pub mod interp;
pub mod params;
pub mod scenarios;
pub mod stats;
pub mod subsystem;
pub mod tdse;
pub mod wavefunction;

pub use error::{Error, Result};
pub use grid::{Axis, Configuration, Grid};
pub use params::{PhysicalParams, Potential};
pub use wavefunction::WaveFunction;

pub use num_complex::Complex64;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/grids.md")]
    mod grids {}
    #[doc = include_str!("../../../book/src/evolution.md")]
    mod evolution {}
    #[doc = include_str!("../../../book/src/guidance.md")]
    mod guidance {}
    #[doc = include_str!("../../../book/src/ensembles.md")]
    mod ensembles {}
    #[doc = include_str!("../../../book/src/measurement.md")]
    mod measurement {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
}
