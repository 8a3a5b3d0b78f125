//! Stability exponents of stochastic discount factors.
//!
//! The exponent `L = lim (1/n) ln E prod Phi_t` decides whether the forward
//! pricing recursion `h = V h + g` has a unique solution (`L < 0`) or none at all.
//! It is computed here three ways: in closed form for the Gaussian models, as
//! `ln r(V)` on finite (or discretized) state spaces, and by Monte Carlo over
//! simulated SDF paths for the long-run risk models, whose wealth-consumption
//! ratio is solved on a grid first.

pub mod config;
pub mod error;
pub mod grid;
pub mod io;
pub mod markov;
pub mod models;
pub mod montecarlo;
pub mod numeric;
pub mod pricing;
pub mod quadrature;
pub mod recursive;
mod rng;
pub mod spectral;
pub mod stability;
pub mod sweep;

pub use error::{Error, Result};
pub use rng::derive_seed;
