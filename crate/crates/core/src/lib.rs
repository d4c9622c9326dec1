//! Numerical laboratory for long-time attractors of 1D Hamiltonian field
//! equations: point-coupled wave and Klein-Gordon systems, nonlinear
//! Klein-Gordon kinks and solitons, and adiabatic soliton dynamics.

// `!(x > 0.0)` is used on purpose so NaN fails validation; stencil loops
// index several arrays at once.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod adiabatic;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod fields;
pub mod integrator;
pub mod lamb;
pub mod numerics;
pub mod orbits;
pub mod output;
pub mod solitons;
pub mod spectrum;

pub use config::{parse_config, to_canonical, ConfigError, RunConfig};
pub use error::{Error, Result};
pub use fields::{
    energy, force, metric_dist, momentum, seminorm_dist, Family, FieldState, Grid1D, ModelSpec, PolynomialPotential,
    Seminorm,
};
pub use num_complex::Complex64;
