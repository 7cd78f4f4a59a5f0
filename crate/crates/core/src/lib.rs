//! Numerical laboratory for Beltrami flows on flat model domains.
//!
//! A Beltrami field satisfies `curl(X) = λ·X` and `div(X) = 0`. This crate
//! builds exact Beltrami fields on the flat 3-torus and the Euclidean solid
//! ball, integrates their field lines, and provides the analyzers used to
//! probe the structure of such flows empirically:
//!
//! - [`domain`] — the two model geometries, their metrics and uniform sampling
//! - [`field`] — the field catalog (ABC flows, the spheromak eigenfield)
//! - [`expr`] — parser and symbolic differentiation for user-supplied fields
//! - [`calculus`] — finite-difference operators and Beltrami residuals
//! - [`flow`] — field-line integration, classification, recurrence ensembles
//! - [`nodal`] — zero sets, order of zeros, box-counting dimension, nodal domains
//! - [`boundary`] — restriction to the boundary sphere and gradient dynamics

pub mod bessel;
pub mod boundary;
pub mod calculus;
pub mod domain;
pub mod error;
pub mod expr;
pub mod field;
pub mod flow;
pub mod nodal;
pub mod rng;

pub use domain::{Domain, Vec3};
pub use error::Error;
pub use field::BeltramiField;

/// Shorthand for results with the crate error type.
pub type Result<T> = std::result::Result<T, Error>;

/// 3×3 real matrix used for Jacobians and derived-field data.
pub type Mat3 = nalgebra::Matrix3<f64>;
