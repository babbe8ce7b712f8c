//! Harmonic-function inductive biases for neural networks: exactly harmonic
//! holomorphic and multiholomorphic networks, curl-driven divergence-free
//! networks, PINN-family baselines and a simulated quantum holomorphic
//! network, together with the oracles used to score them.

pub mod diffcore;
pub mod error;
pub mod geometry;
pub mod losses;
pub mod nets;
pub mod oracle;
pub mod qsim;
pub mod train;

pub use error::{Error, Result};
