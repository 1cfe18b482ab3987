//! Point vortices coupled to a gyroscopic spray of massive particles.
//!
//! Regularised Biot-Savart kernels, discrete signed and phase-space
//! measures, exact Wasserstein distances, time integrators, conserved
//! quantities and the experiment drivers built on top of them.

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod dynamics;
pub mod experiments;
pub mod geometry;
pub mod kernels;
pub mod measures;
pub mod rng;
pub mod transport;

pub use geometry::{Vec2, Window};
