//! Optimal compound Poisson approximation of infinite-activity Lévy measures
//! and jump-adapted weak simulation of Lévy-driven SDEs.

pub mod approx;
pub mod error;
pub mod jump_adapted;
pub mod levy_measure;
pub mod mc;
pub mod quadrature;
pub mod schemes;

pub use error::{LevyError, Result};
