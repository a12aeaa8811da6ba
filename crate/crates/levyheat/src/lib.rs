//! Heat content of Lévy processes and its small-time asymptotics.
//!
//! The crate computes `H_g^μ(t) = ∫ E^x g(X_t) μ(dx)` for several families
//! of Lévy processes, with deterministic (Fourier/quadrature) and
//! Monte-Carlo estimators, and evaluates the limit constants that govern
//! `H(t) - H(0)` as `t → 0`.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod density;
pub mod error;
pub mod geometry;
pub mod heatcontent;
pub mod levy_models;
pub mod quadrature;
pub mod runner;
pub mod special;

pub use error::{Error, Result};
