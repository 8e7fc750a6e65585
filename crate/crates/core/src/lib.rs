//! Numerical toolkit for the Ornstein-Uhlenbeck Schrödinger group `e^{it𝓛}`,
//! `𝓛 = Δ - <x, ∇>`, and the linear drift-diffusion operators
//! `tr(Q ∇²) + <Bx, ∇>` it belongs to.

pub mod error;
pub mod estimates;
pub mod field;
pub mod kernels;
pub mod lti;
pub mod propagator;

pub use error::{Error, Result};
