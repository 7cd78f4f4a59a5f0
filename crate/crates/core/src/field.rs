//! Catalog of exact Beltrami fields.
//!
//! Each field carries an analytic evaluation, an analytic Jacobian, and a
//! constant curl eigenvalue λ. The analytic curl is assembled from the
//! Jacobian entries, so the Beltrami identity `curl X = λX` is a genuine
//! cross-check between two independent formula sets rather than a tautology.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::bessel;
use crate::domain::{Domain, Vec3};
use crate::error::Error;
use crate::expr::{self, ExprField, MultiIndex};
use crate::rng;
use crate::{Mat3, Result};

/// Evaluation backend of a catalog field.
pub trait FieldEval: Send + Sync + fmt::Debug {
    fn eval(&self, p: Vec3) -> Vec3;
    fn jacobian(&self, p: Vec3) -> Mat3;

    /// Exact partial `∂^α X^component` where the backend can supply one.
    fn partial(&self, _component: usize, _alpha: MultiIndex, _p: Vec3) -> Option<f64> {
        None
    }
}

/// What kind of catalog entry a field is; used by reporting and by checks
/// that only apply to specific constructions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldMeta {
    Abc(AbcParams),
    Spheromak { radius: f64, amplitude: f64 },
    Expr,
}

/// ABC-flow coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbcParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// An exact Beltrami field: `curl X = λ·X`, `div X = 0`.
#[derive(Debug, Clone)]
pub struct BeltramiField {
    name: String,
    domain: Domain,
    lambda: f64,
    tangent_to_boundary: bool,
    /// Scalar multiple applied on top of the backend (see [`scale_field`]).
    factor: f64,
    /// Characteristic magnitude of the unscaled backend field.
    base_scale: f64,
    meta: FieldMeta,
    backend: Arc<dyn FieldEval>,
}

impl BeltramiField {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// The constant curl eigenvalue.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn tangent_to_boundary(&self) -> bool {
        self.tangent_to_boundary
    }

    pub fn meta(&self) -> FieldMeta {
        self.meta
    }

    /// Characteristic magnitude, used to normalize residuals.
    pub fn scale(&self) -> f64 {
        self.factor.abs() * self.base_scale
    }

    pub fn is_zero_field(&self) -> bool {
        self.scale() < 1e-300
    }

    pub fn eval(&self, p: Vec3) -> Vec3 {
        self.backend.eval(p) * self.factor
    }

    pub fn jacobian(&self, p: Vec3) -> Mat3 {
        self.backend.jacobian(p) * self.factor
    }

    /// Analytic curl assembled from the Jacobian entries.
    pub fn curl(&self, p: Vec3) -> Vec3 {
        let j = self.jacobian(p);
        Vec3::new(
            j[(2, 1)] - j[(1, 2)],
            j[(0, 2)] - j[(2, 0)],
            j[(1, 0)] - j[(0, 1)],
        )
    }

    /// Analytic divergence (trace of the Jacobian).
    pub fn divergence(&self, p: Vec3) -> f64 {
        self.jacobian(p).trace()
    }

    /// Exact high-order partial where the backend supplies one.
    pub fn partial(&self, component: usize, alpha: MultiIndex, p: Vec3) -> Option<f64> {
        self.backend
            .partial(component, alpha, p)
            .map(|v| v * self.factor)
    }
}

/// The ABC flow `X = (A sin z + C cos y, B sin x + A cos z, C sin y + B cos x)`
/// on the 2π-periodic torus; a curl eigenfield with λ = 1.
pub fn abc_field(params: AbcParams, domain: Domain) -> Result<BeltramiField> {
    if params.a == 0.0 && params.b == 0.0 && params.c == 0.0 {
        return Err(Error::parameter(
            "abc_field",
            "A, B, C must not all be zero (the zero field is excluded)",
        ));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    match &domain {
        Domain::Torus3 { periods } if periods.iter().all(|&p| (p - two_pi).abs() < 1e-12) => {}
        other => return Err(Error::IncompatibleDomain(other.to_string())),
    }
    let backend = Arc::new(AbcBackend { params });
    let base_scale = estimate_scale(&*backend, &domain);
    Ok(BeltramiField {
        name: format!("abc:{},{},{}", params.a, params.b, params.c),
        domain,
        lambda: 1.0,
        tangent_to_boundary: false,
        factor: 1.0,
        base_scale,
        meta: FieldMeta::Abc(params),
        backend,
    })
}

/// The lowest tangent curl eigenfield of the solid ball (the spheromak).
///
/// `λ·R` is the first positive root of the spherical Bessel function `j1`,
/// found by bisection at construction time, which makes the field exactly
/// tangent to the boundary sphere.
pub fn spheromak_field(radius: f64, amplitude: f64) -> Result<BeltramiField> {
    if !(radius > 0.0) {
        return Err(Error::parameter("spheromak_field", "radius must be positive"));
    }
    if amplitude == 0.0 {
        return Err(Error::parameter(
            "spheromak_field",
            "amplitude must be nonzero (the zero field is excluded)",
        ));
    }
    let lambda = bessel::first_j1_root() / radius;
    let domain = Domain::Ball3 { radius };
    let backend = Arc::new(SpheromakBackend {
        b0: amplitude,
        lambda,
    });
    let base_scale = estimate_scale(&*backend, &domain);
    Ok(BeltramiField {
        name: format!("spheromak:{radius},{amplitude}"),
        domain,
        lambda,
        tangent_to_boundary: true,
        factor: 1.0,
        base_scale,
        meta: FieldMeta::Spheromak { radius, amplitude },
        backend,
    })
}

/// Multiply a field by a nonzero constant; λ is unchanged by linearity.
pub fn scale_field(field: &BeltramiField, c: f64) -> Result<BeltramiField> {
    if c == 0.0 {
        return Err(Error::parameter(
            "scale_field",
            "scaling by zero would produce the excluded zero field",
        ));
    }
    let mut scaled = field.clone();
    scaled.factor *= c;
    Ok(scaled)
}

/// Wrap a parsed expression field, estimating its (assumed constant) λ
/// pointwise as ⟨curl X, X⟩/⟨X, X⟩ away from zeros.
pub fn from_expr(name: impl Into<String>, expr_field: ExprField) -> BeltramiField {
    let domain = expr_field.domain().clone();
    let backend = Arc::new(ExprBackend::new(expr_field));
    let base_scale = estimate_scale(&*backend, &domain);
    let lambda = estimate_lambda(&*backend, &domain, base_scale);
    let tangent = match &domain {
        Domain::Ball3 { radius } => {
            max_radial_component(&*backend, *radius) <= 1e-10 * base_scale.max(1e-300)
        }
        Domain::Torus3 { .. } => false,
    };
    BeltramiField {
        name: name.into(),
        domain,
        lambda,
        tangent_to_boundary: tangent,
        factor: 1.0,
        base_scale,
        meta: FieldMeta::Expr,
        backend,
    }
}

/// Build a field from a catalog name: `abc:A,B,C`, `spheromak:R,B0`, or
/// `expr:<file>` (the file holds three expressions).
pub fn catalog_lookup(spec: &str) -> Result<BeltramiField> {
    catalog_lookup_in(spec, None)
}

/// Catalog lookup with an optional domain override for expression fields.
pub fn catalog_lookup_in(spec: &str, expr_domain: Option<Domain>) -> Result<BeltramiField> {
    let (head, rest) = spec
        .split_once(':')
        .ok_or_else(|| Error::Catalog {
            msg: format!("`{spec}` has no `kind:params` separator"),
        })?;
    match head {
        "abc" => {
            let vals = parse_params(rest, 3, "abc")?;
            abc_field(
                AbcParams {
                    a: vals[0],
                    b: vals[1],
                    c: vals[2],
                },
                Domain::torus_2pi(),
            )
        }
        "spheromak" => {
            let vals = parse_params(rest, 2, "spheromak")?;
            spheromak_field(vals[0], vals[1])
        }
        "expr" => {
            let source = std::fs::read_to_string(rest).map_err(|e| Error::Io {
                op: format!("field::catalog_lookup({rest})"),
                msg: e.to_string(),
            })?;
            let domain = expr_domain.unwrap_or_else(Domain::torus_2pi);
            let parsed = expr::parse_field(&source, domain)?;
            Ok(from_expr(format!("expr:{rest}"), parsed))
        }
        other => Err(Error::Catalog {
            msg: format!("unknown field kind `{other}`"),
        }),
    }
}

/// Build an expression field directly from inline source (used by tests and
/// the CLI's `expr:` handling when the argument is not a file).
pub fn expr_field_from_source(source: &str, domain: Domain) -> Result<BeltramiField> {
    let parsed = expr::parse_field(source, domain)?;
    Ok(from_expr(format!("expr({source})"), parsed))
}

fn parse_params(rest: &str, expected: usize, kind: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = rest.split(',').collect();
    if parts.len() != expected {
        return Err(Error::Catalog {
            msg: format!(
                "`{kind}` takes {expected} comma-separated parameters, got {}",
                parts.len()
            ),
        });
    }
    parts
        .iter()
        .map(|s| {
            s.trim().parse::<f64>().map_err(|_| Error::Catalog {
                msg: format!("`{s}` is not a number in `{kind}:{rest}`"),
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Backends

#[derive(Debug)]
struct AbcBackend {
    params: AbcParams,
}

impl FieldEval for AbcBackend {
    fn eval(&self, p: Vec3) -> Vec3 {
        let AbcParams { a, b, c } = self.params;
        Vec3::new(
            a * p.z.sin() + c * p.y.cos(),
            b * p.x.sin() + a * p.z.cos(),
            c * p.y.sin() + b * p.x.cos(),
        )
    }

    fn jacobian(&self, p: Vec3) -> Mat3 {
        let AbcParams { a, b, c } = self.params;
        Mat3::new(
            0.0,
            -c * p.y.sin(),
            a * p.z.cos(),
            b * p.x.cos(),
            0.0,
            -a * p.z.sin(),
            -b * p.x.sin(),
            c * p.y.cos(),
            0.0,
        )
    }

    fn partial(&self, component: usize, alpha: MultiIndex, p: Vec3) -> Option<f64> {
        let AbcParams { a, b, c } = self.params;
        // Each component is a sum of single-variable trig terms, so any
        // mixed partial vanishes and pure ones cycle through ±sin/±cos.
        let terms: [[(f64, bool, usize); 2]; 3] = [
            [(a, true, 2), (c, false, 1)],
            [(b, true, 0), (a, false, 2)],
            [(c, true, 1), (b, false, 0)],
        ];
        let mut total = 0.0;
        for &(coef, is_sin, axis) in &terms[component] {
            let others_zero = (0..3).all(|i| i == axis || alpha[i] == 0);
            if !others_zero {
                continue;
            }
            let k = alpha[axis] % 4;
            let x = p[axis];
            let val = if is_sin {
                match k {
                    0 => x.sin(),
                    1 => x.cos(),
                    2 => -x.sin(),
                    _ => -x.cos(),
                }
            } else {
                match k {
                    0 => x.cos(),
                    1 => -x.sin(),
                    2 => -x.cos(),
                    _ => x.sin(),
                }
            };
            total += coef * val;
        }
        Some(total)
    }
}

/// Spheromak in the smooth Cartesian form
/// `B/B0 = λ²·q(λr)·z·p + λ·s(λr)·(−y, x, 0) + (0, 0, s(λr) + j1'(λr))`,
/// with `s = j1(u)/u` and `q = (s − j1')/u²` both smooth and even, so the
/// formulas have no axis or origin singularities.
#[derive(Debug)]
struct SpheromakBackend {
    b0: f64,
    lambda: f64,
}

impl FieldEval for SpheromakBackend {
    fn eval(&self, p: Vec3) -> Vec3 {
        let l = self.lambda;
        let u = l * p.norm();
        let s = bessel::j1_over_u(u);
        let q = bessel::q(u);
        let w = Vec3::new(-p.y, p.x, 0.0);
        let axial = Vec3::new(0.0, 0.0, s + bessel::j1_prime(u));
        (p * (l * l * q * p.z) + w * (l * s) + axial) * self.b0
    }

    fn jacobian(&self, p: Vec3) -> Mat3 {
        let l = self.lambda;
        let u = l * p.norm();
        let s = bessel::j1_over_u(u);
        let q = bessel::q(u);
        let q2 = bessel::q2(u);
        let t2 = bessel::j1_second_over_u(u);
        let w = Vec3::new(-p.y, p.x, 0.0);
        let l2 = l * l;
        let l3 = l2 * l;
        let l4 = l2 * l2;

        let mut m = Mat3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let mut v = l4 * q2 * p[j] * p.z * p[i];
                if j == 2 {
                    v += l2 * q * p[i];
                }
                if i == j {
                    v += l2 * q * p.z;
                }
                v -= l3 * q * p[j] * w[i];
                if i == 2 {
                    v += l2 * (t2 - q) * p[j];
                }
                m[(i, j)] = v;
            }
        }
        // rotational part ∂_j w_i of λ·s·(−y, x, 0)
        m[(0, 1)] -= l * s;
        m[(1, 0)] += l * s;
        m * self.b0
    }
}

#[derive(Debug)]
struct ExprBackend {
    field: ExprField,
}

impl ExprBackend {
    fn new(field: ExprField) -> Self {
        ExprBackend { field }
    }
}

impl FieldEval for ExprBackend {
    fn eval(&self, p: Vec3) -> Vec3 {
        self.field.eval(p)
    }

    fn jacobian(&self, p: Vec3) -> Mat3 {
        self.field.jacobian(p)
    }

    fn partial(&self, component: usize, alpha: MultiIndex, p: Vec3) -> Option<f64> {
        self.field.partial(component, alpha).map(|e| e.eval(p))
    }
}

// ---------------------------------------------------------------------------
// Construction-time estimates

/// Deterministic lattice over the domain used for scale and λ estimates.
fn probe_points(domain: &Domain) -> Vec<Vec3> {
    let n = 7;
    let mut pts = Vec::new();
    match domain {
        Domain::Torus3 { periods } => {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        // offset breaks symmetry with typical zero loci
                        let f = |idx: usize, l: f64| (idx as f64 + 0.37) / n as f64 * l;
                        pts.push(Vec3::new(
                            f(i, periods[0]),
                            f(j, periods[1]),
                            f(k, periods[2]),
                        ));
                    }
                }
            }
        }
        Domain::Ball3 { radius } => {
            pts.push(Vec3::zeros());
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let f = |idx: usize| ((idx as f64 + 0.37) / n as f64 * 2.0 - 1.0) * radius;
                        let p = Vec3::new(f(i), f(j), f(k));
                        if p.norm() <= 0.98 * radius {
                            pts.push(p);
                        }
                    }
                }
            }
        }
    }
    pts
}

fn estimate_scale(backend: &dyn FieldEval, domain: &Domain) -> f64 {
    probe_points(domain)
        .into_iter()
        .map(|p| backend.eval(p).norm())
        .fold(0.0, f64::max)
}

fn estimate_lambda(backend: &dyn FieldEval, domain: &Domain, scale: f64) -> f64 {
    if scale <= 0.0 {
        return 0.0;
    }
    let mut ratios: Vec<f64> = probe_points(domain)
        .into_iter()
        .filter_map(|p| {
            let x = backend.eval(p);
            let n2 = x.norm_squared();
            if n2 < 1e-8 * scale * scale {
                return None;
            }
            let j = backend.jacobian(p);
            let curl = Vec3::new(
                j[(2, 1)] - j[(1, 2)],
                j[(0, 2)] - j[(2, 0)],
                j[(1, 0)] - j[(0, 1)],
            );
            Some(curl.dot(&x) / n2)
        })
        .collect();
    if ratios.is_empty() {
        return 0.0;
    }
    ratios.sort_by(|a, b| a.total_cmp(b));
    ratios[ratios.len() / 2]
}

fn max_radial_component(backend: &dyn FieldEval, radius: f64) -> f64 {
    let mut rng = rng::stream(0, "field::tangency-probe");
    let mut max = 0.0_f64;
    for _ in 0..512 {
        let z = 2.0 * rng.random::<f64>() - 1.0;
        let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
        let rho = (1.0 - z * z).max(0.0).sqrt();
        let n = Vec3::new(rho * phi.cos(), rho * phi.sin(), z);
        max = max.max(backend.eval(n * radius).dot(&n).abs());
    }
    max
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    pub(crate) fn degenerate_abc() -> BeltramiField {
        catalog_lookup("abc:1,0,-1").unwrap()
    }

    fn fd_jacobian(field: &BeltramiField, p: Vec3, h: f64) -> Mat3 {
        let mut m = Mat3::zeros();
        for j in 0..3 {
            let mut dp = Vec3::zeros();
            dp[j] = h;
            let col = (field.eval(p + dp) - field.eval(p - dp)) / (2.0 * h);
            for i in 0..3 {
                m[(i, j)] = col[i];
            }
        }
        m
    }

    #[test]
    fn abc_values_by_direct_substitution() {
        let f = degenerate_abc();
        assert_relative_eq!(
            f.eval(Vec3::zeros()),
            Vec3::new(-1.0, 1.0, 0.0),
            epsilon = 1e-15
        );
        let zero = f.eval(Vec3::new(0.0, 0.0, PI / 2.0));
        assert!(zero.norm() < 1e-15);
    }

    #[test]
    fn abc_rejects_bad_inputs() {
        assert!(abc_field(
            AbcParams { a: 0.0, b: 0.0, c: 0.0 },
            Domain::torus_2pi()
        )
        .is_err());
        let wrong = Domain::torus([1.0, 1.0, 1.0]).unwrap();
        assert!(abc_field(AbcParams { a: 1.0, b: 1.0, c: 1.0 }, wrong).is_err());
    }

    #[test]
    fn abc_is_a_curl_eigenfield() {
        let f = catalog_lookup("abc:1,1,1").unwrap();
        let pts = f.domain().sample_uniform(100, 3);
        for p in pts {
            let x = f.eval(p);
            let c = f.curl(p);
            assert!(
                (c - x * f.lambda()).norm() <= 1e-12 * (x.norm() + 1.0),
                "residual at {p:?}"
            );
            assert!(f.divergence(p).abs() < 1e-14);
        }
    }

    #[test]
    fn abc_analytic_partials_match_jacobian() {
        let f = catalog_lookup("abc:1,2,-0.5").unwrap();
        let p = Vec3::new(0.9, 1.7, 2.3);
        let j = f.jacobian(p);
        for i in 0..3 {
            for (axis, alpha) in [[1, 0, 0], [0, 1, 0], [0, 0, 1]].iter().enumerate() {
                let d = f.partial(i, *alpha, p).unwrap();
                assert_relative_eq!(d, j[(i, axis)], epsilon = 1e-14);
            }
        }
        // a third-order pure partial: ∂z³ (A sin z) = −A cos z
        let d3 = f.partial(0, [0, 0, 3], p).unwrap();
        assert_relative_eq!(d3, -1.0 * p.z.cos(), epsilon = 1e-14);
    }

    #[test]
    fn spheromak_center_value() {
        let f = spheromak_field(1.0, 1.0).unwrap();
        let v = f.eval(Vec3::zeros());
        assert_relative_eq!(v.z, 2.0 / 3.0, epsilon = 1e-12);
        assert!(v.x.abs() < 1e-15 && v.y.abs() < 1e-15);
    }

    #[test]
    fn spheromak_is_tangent_to_the_sphere() {
        let f = spheromak_field(1.0, 1.0).unwrap();
        let mut rng = crate::rng::stream(5, "spheromak-tangency-test");
        for _ in 0..200 {
            let z = 2.0 * rng.random::<f64>() - 1.0;
            let phi = 2.0 * PI * rng.random::<f64>();
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let n = Vec3::new(rho * phi.cos(), rho * phi.sin(), z);
            let radial = f.eval(n).dot(&n).abs();
            assert!(radial < 1e-10, "radial component {radial} at {n:?}");
        }
    }

    #[test]
    fn spheromak_vanishes_at_boundary_poles() {
        let f = spheromak_field(2.0, 1.5).unwrap();
        for sign in [1.0, -1.0] {
            let v = f.eval(Vec3::new(0.0, 0.0, 2.0 * sign));
            assert!(v.norm() < 1e-12, "pole value {v:?}");
        }
    }

    #[test]
    fn spheromak_beltrami_identity() {
        let f = spheromak_field(1.0, 1.0).unwrap();
        let pts = f.domain().sample_uniform(100, 11);
        for p in pts {
            let x = f.eval(p);
            let c = f.curl(p);
            assert!(
                (c - x * f.lambda()).norm() <= 1e-12 * (x.norm() + 1.0),
                "residual {:.3e} at {p:?}",
                (c - x * f.lambda()).norm()
            );
            assert!(f.divergence(p).abs() < 1e-13);
        }
    }

    #[test]
    fn analytic_jacobians_match_finite_differences() {
        for spec in ["abc:1,1,1", "abc:1,0,-1", "spheromak:1,1"] {
            let f = catalog_lookup(spec).unwrap();
            let pts = f.domain().sample_uniform(20, 17);
            for p in pts {
                // shrink ball samples so the FD stencil stays inside
                let p = match f.domain() {
                    Domain::Ball3 { .. } => p * 0.9,
                    _ => p,
                };
                let a = f.jacobian(p);
                let b = fd_jacobian(&f, p, 1e-5);
                let denom = a.norm().max(1.0);
                assert!(
                    (a - b).norm() / denom < 1e-6,
                    "{spec}: jacobian mismatch {:.3e} at {p:?}",
                    (a - b).norm() / denom
                );
            }
        }
    }

    #[test]
    fn scaling_behaves_linearly() {
        let f = degenerate_abc();
        let same = scale_field(&f, 1.0).unwrap();
        let doubled = scale_field(&f, 2.0).unwrap();
        let flipped = scale_field(&f, -1.0).unwrap();
        let p = Vec3::new(0.5, 1.0, 1.5);
        assert_eq!(f.eval(p), same.eval(p));
        assert_relative_eq!(doubled.eval(p), f.eval(p) * 2.0, epsilon = 1e-15);
        assert_relative_eq!(flipped.eval(p), -f.eval(p), epsilon = 1e-15);
        assert_eq!(doubled.lambda(), f.lambda());
        assert!(scale_field(&f, 0.0).is_err());

        // Beltrami residual still holds after scaling.
        let x = doubled.eval(p);
        let c = doubled.curl(p);
        assert!((c - x * doubled.lambda()).norm() <= 1e-12 * (x.norm() + 1.0));
    }

    #[test]
    fn catalog_errors_list_valid_formats() {
        let err = catalog_lookup("abc:1,0").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("abc:A,B,C"), "{msg}");
        assert!(catalog_lookup("pasta:1").is_err());
        assert!(catalog_lookup("abc:1,0,zebra").is_err());
    }

    #[test]
    fn catalog_builds_expected_fields() {
        let f = catalog_lookup("abc:1,0,-1").unwrap();
        assert_eq!(f.lambda(), 1.0);
        let s = catalog_lookup("spheromak:1,1").unwrap();
        assert_relative_eq!(s.lambda(), 4.493409457909064, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_abc_first_integral() {
        // H = sin z − cos y equals the first component; ∇H·X = 0 pointwise.
        let f = degenerate_abc();
        let pts = f.domain().sample_uniform(200, 23);
        for p in pts {
            let x = f.eval(p);
            assert_relative_eq!(x.x, p.z.sin() - p.y.cos(), epsilon = 1e-14);
            let grad_h = Vec3::new(0.0, p.y.sin(), p.z.cos());
            assert!(grad_h.dot(&x).abs() < 1e-12);
        }
    }

    #[test]
    fn expr_lambda_estimation() {
        // the degenerate ABC written as expressions should estimate λ ≈ 1
        let f =
            expr_field_from_source("sin(z)-cos(y), cos(z), -sin(y)", Domain::torus_2pi()).unwrap();
        assert_relative_eq!(f.lambda(), 1.0, epsilon = 1e-10);

        // a non-Beltrami field gets λ ≈ 0 and stays usable for residuals
        let g = expr_field_from_source("sin(z),0,0", Domain::torus_2pi()).unwrap();
        assert!(g.lambda().abs() < 1e-10);
    }

    #[test]
    fn expr_field_matches_catalog_pointwise() {
        let cat = degenerate_abc();
        let f =
            expr_field_from_source("sin(z)-cos(y), cos(z), -sin(y)", Domain::torus_2pi()).unwrap();
        let pts = cat.domain().sample_uniform(100, 31);
        for p in pts {
            assert!((cat.eval(p) - f.eval(p)).norm() < 1e-12);
        }
    }
}
