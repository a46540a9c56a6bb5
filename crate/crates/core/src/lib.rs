//! Simulation and estimation toolkit for a collisional quantum thermometer and
//! time-optimal holonomic gates in a dissipative Λ-system.
//!
//! The crate is organized around a small dense complex linear-algebra core
//! ([`qcore`]), a GKLS master-equation integrator ([`dynamics`]), classical and
//! quantum Fisher-information machinery ([`qfi`]), conjugate-Bayesian oracles
//! ([`stats`]), the collisional thermometer model ([`collisional`]), a
//! grid-based sequential Bayesian engine ([`bayes`]) and the Λ-system gate
//! simulator ([`holonomic`]).
//!
//! All numerical code is generic over the scalar type through the [`Real`]
//! trait (`f32` or `f64`); the concrete aliases below fix `f64`, which is what
//! the CLI and the acceptance suite use.

pub mod bayes;
pub mod collisional;
pub mod dynamics;
pub mod error;
pub mod holonomic;
pub mod math;
pub mod qcore;
pub mod qfi;
pub mod real;
pub mod stats;

pub use error::{Error, Result};
pub use real::Real;

/// Complex scalar over `T`.
pub type C<T> = num_complex::Complex<T>;

/// Double-precision complex matrix.
pub type Mat64 = qcore::CMat<f64>;
/// Single-precision complex matrix.
pub type Mat32 = qcore::CMat<f32>;
/// Double-precision ket.
pub type Ket64 = qcore::Ket<f64>;
/// Double-precision density matrix.
pub type Density64 = qcore::DensityMatrix<f64>;
/// Double-precision complex scalar.
pub type C64 = num_complex::Complex<f64>;
