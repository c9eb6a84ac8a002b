//! Simulation and numerical verification toolkit for disordered pinning
//! models and their continuum limit.
//!
//! * [`renewal`]: heavy-tailed renewal kernels, renewal functions, samplers.
//! * [`closed_sets`]: finite-resolution closed subsets of ℝ, g/d maps, the
//!   Fell–Matheron metric and dyadic diagnostics.
//! * [`discrete`]: disorder, exact quenched partition functions, chaos
//!   expansion and exact sampling of the conditioned pinning measure.
//! * [`continuum`]: Brownian environments, the continuum partition function
//!   surface, regenerative-set and CDPM samplers.
//! * [`analysis`]: statistics and the experiment suite.

pub mod analysis;
pub mod closed_sets;
pub mod continuum;
pub mod convolution;
pub mod discrete;
mod error;
pub mod quad;
pub mod renewal;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
