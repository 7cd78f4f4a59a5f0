//! Crate-wide error type. Every message names the operation that failed so
//! CLI output can point at the responsible module.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("domain::wrap: unsupported on {0} (wrapping is a torus operation)")]
    UnsupportedOperation(String),

    #[error("domain::distance: point {point:?} outside {domain}")]
    OutsideDomain { domain: String, point: [f64; 3] },

    #[error("field::{op}: {msg}")]
    Parameter { op: String, msg: String },

    #[error("field::abc_field: incompatible domain, ABC flows require a 2π-periodic 3-torus (got {0})")]
    IncompatibleDomain(String),

    #[error("field::catalog_lookup: {msg}; valid formats: \"abc:A,B,C\", \"spheromak:R,B0\", \"expr:<file>\"")]
    Catalog { msg: String },

    #[error("expr::parse_field: syntax error at offset {offset}: {msg}")]
    Parse { offset: usize, msg: String },

    #[error("expr::parse_field: unknown identifier `{name}` at offset {offset} (variables x,y,z; functions sin, cos, exp, sqrt, ln)")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("calculus::fd_partial: stencil exits the ball even at step {step:.3e} (limit {limit:.3e})")]
    StencilOutOfDomain { step: f64, limit: f64 },

    #[error("flow::integrate: trajectory escaped the ball at t = {t:.6} (|p| - R = {excess:.3e}, field not tangent?)")]
    Escape { t: f64, excess: f64 },

    #[error("flow::integrate: step size underflow at t = {t:.6} (h = {h:.3e}), field too stiff at this tolerance")]
    StepUnderflow { t: f64, h: f64 },

    #[error("nodal::zero_order: all partial derivatives up to order {max_order} are below tolerance at {point:?}; order undetermined (possible violation of the finite-order property)")]
    OrderUndetermined { max_order: usize, point: [f64; 3] },

    #[error("nodal::rank_identities_at_zero: {0:?} lies on the boundary; rank identities are interior-only")]
    InteriorOnly([f64; 3]),

    #[error("nodal::box_counting_dimension: {0}")]
    InsufficientData(String),

    #[error("nodal::box_counting_dimension: zero set is empty")]
    EmptyZeroSet,

    #[error("nodal::count_nodal_domains: every grid cell is excluded; field is zero to tolerance everywhere")]
    DegenerateField,

    #[error("boundary::restrict_to_boundary: field is not tangent to the sphere (max radial component {max_radial:.3e} > {threshold:.3e})")]
    NotTangent { max_radial: f64, threshold: f64 },

    #[error("boundary::recover_potential: restricted 1-form is not closed (path defect {defect:.3e} > {threshold:.3e})")]
    NotClosed { defect: f64, threshold: f64 },

    #[error("{module}::{op}: {msg}")]
    Invalid {
        module: String,
        op: String,
        msg: String,
    },

    #[error("{op}: io error: {msg}")]
    Io { op: String, msg: String },
}

impl Error {
    pub fn parameter(op: &str, msg: impl Into<String>) -> Self {
        Error::Parameter {
            op: op.to_string(),
            msg: msg.into(),
        }
    }

    pub fn invalid(module: &str, op: &str, msg: impl Into<String>) -> Self {
        Error::Invalid {
            module: module.to_string(),
            op: op.to_string(),
            msg: msg.into(),
        }
    }
}
