//! Quantum-noise shadow imaging.
//!
//! An opaque object placed in a squeezed-vacuum beam replaces the squeezed
//! fluctuations behind it with ordinary vacuum. Mixing the probe with a strong
//! local oscillator on a beam splitter and differencing the two camera ports
//! turns that change into a map of quadrature-noise variance that is immune to
//! the camera's dark noise. This crate simulates and analyses such data:
//!
//! - [`field`]: pixel lattices, Gaussian modes, masks and angular-spectrum
//!   propagation.
//! - [`theory`]: closed-form per-pixel and binned variance maps, SNR
//!   expressions and photon budgets.
//! - [`montecarlo`]: seeded synthesis of homodyne kinetic clusters and of
//!   classical intensity frames with dark noise.
//! - [`analysis`]: binning, variance estimation, transmission maps,
//!   cross-sections and the similarity score.
//! - [`runner`]: the four experiments (`theory`, `simulate`, `classical`,
//!   `sweep`) driven by an [`config::ExperimentConfig`].

pub mod analysis;
pub mod config;
pub mod disc;
mod error;
pub mod field;
pub mod io;
pub mod map;
pub mod montecarlo;
mod parallel;
pub mod runner;
pub mod theory;


pub use disc::DetectionDisc;
pub use error::{Error, Result};
pub use field::{ComplexField, Grid, Mask};
pub use map::{MapRole, ScalarMap};
