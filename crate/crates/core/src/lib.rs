//! Numerical machinery for state-dependent delay differential equations
//!
//! ```text
//! x'(t) = f(x(t), x(t - τ(t)))
//! τ'(t) = g(x(t), x(η(t)), …, x(η^{M-1}(t)), τ(t)),   η(t) = t - τ(t)
//! ```
//!
//! The crate integrates the system directly, lifts solutions into the
//! weighted sequence space `l_c^∞`, runs the λ-perturbed contraction scheme
//! on complex time disks and measures analyticity through Cauchy-integral
//! Taylor coefficients.

pub mod assumptions;
pub mod complexext;
pub mod delaycore;
pub mod error;
pub mod example41;
pub mod lift;
pub mod models;
pub mod seqspace;

pub use error::{Error, ErrorKind, Result};
