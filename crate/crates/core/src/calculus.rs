//! Finite-difference differential operators and the pointwise residuals
//! that certify a field as Beltrami / a stationary Euler solution.
//!
//! All derivatives are central differences with Richardson extrapolation
//! over steps h, h/2, ... Residuals are normalized so thresholds stay
//! meaningful under field scaling.

use crate::domain::{Domain, Vec3};
use crate::error::Error;
use crate::field::BeltramiField;
use crate::{Mat3, Result};

/// Finite-difference configuration.
#[derive(Debug, Clone, Copy)]
pub struct FdScheme {
    /// Base step; the per-order effective step grows from this.
    pub base_step: f64,
    /// Richardson levels (1 = plain central difference).
    pub extrapolation_levels: usize,
}

impl FdScheme {
    /// Default scheme: `base_step = 1e-3 ×` domain scale, two levels.
    pub fn for_domain(domain: &Domain) -> Self {
        FdScheme {
            base_step: 1e-3 * domain.scale(),
            extrapolation_levels: 2,
        }
    }

    pub fn with_step(base_step: f64) -> Self {
        FdScheme {
            base_step,
            extrapolation_levels: 2,
        }
    }
}

/// Relative step floor near the ball boundary; shrinking below this errors.
const MIN_BALL_STEP_REL: f64 = 1e-8;

fn binomial(n: usize, k: usize) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// One-axis central stencil for the n-th derivative on spacing h:
/// offsets (n/2 − k)·h and signed binomial weights, k = 0..=n.
fn axis_stencil(n: usize) -> Vec<(f64, f64)> {
    (0..=n)
        .map(|k| {
            let offset = n as f64 / 2.0 - k as f64;
            let weight = if k % 2 == 0 { 1.0 } else { -1.0 } * binomial(n, k);
            (offset, weight)
        })
        .collect()
}

/// Raw tensor-product central estimate of `∂^α f` at step h.
fn central_estimate(f: &dyn Fn(Vec3) -> f64, alpha: [usize; 3], p: Vec3, h: f64) -> f64 {
    let sx = axis_stencil(alpha[0]);
    let sy = axis_stencil(alpha[1]);
    let sz = axis_stencil(alpha[2]);
    let mut acc = 0.0;
    for &(ox, wx) in &sx {
        for &(oy, wy) in &sy {
            for &(oz, wz) in &sz {
                let q = p + Vec3::new(ox, oy, oz) * h;
                acc += wx * wy * wz * f(q);
            }
        }
    }
    let order = alpha[0] + alpha[1] + alpha[2];
    acc / h.powi(order as i32)
}

/// Largest stencil excursion from `p` for multi-index `alpha` at step h.
fn stencil_radius(alpha: [usize; 3], h: f64) -> f64 {
    let r2: f64 = alpha.iter().map(|&a| (a as f64 / 2.0).powi(2)).sum();
    r2.sqrt() * h
}

/// Pick a step that keeps the whole stencil inside the ball.
fn fit_step_in_ball(p: Vec3, radius: f64, alpha: [usize; 3], mut h: f64) -> Result<f64> {
    let room = radius - p.norm();
    let limit = MIN_BALL_STEP_REL * radius;
    while stencil_radius(alpha, h) > room {
        h *= 0.5;
        if h < limit {
            return Err(Error::StencilOutOfDomain { step: h, limit });
        }
    }
    Ok(h)
}

fn effective_step(base: f64, order: usize, domain_scale: f64) -> f64 {
    // Higher orders divide by h^n; widen the step to keep roundoff at bay.
    let grown = base * 3.0_f64.powi(order.saturating_sub(1) as i32);
    grown.min(domain_scale / 8.0)
}

/// Richardson-extrapolated `∂^α f(p)`, |α| ≤ 6.
pub fn fd_partial(
    f: &dyn Fn(Vec3) -> f64,
    alpha: [usize; 3],
    p: Vec3,
    scheme: &FdScheme,
    domain: &Domain,
) -> Result<f64> {
    let order = alpha[0] + alpha[1] + alpha[2];
    if order == 0 {
        return Ok(f(p));
    }
    if order > 6 {
        return Err(Error::invalid(
            "calculus",
            "fd_partial",
            format!("|alpha| = {order} exceeds the supported maximum 6"),
        ));
    }
    let mut h = effective_step(scheme.base_step, order, domain.scale());
    if let Domain::Ball3 { radius } = domain {
        h = fit_step_in_ball(p, *radius, alpha, h)?;
    }
    let levels = scheme.extrapolation_levels.max(1);

    // Central schemes expand in h²; the standard ratio-4 Richardson table.
    let g: &dyn Fn(Vec3) -> f64 = match domain {
        Domain::Torus3 { .. } => &|q| f(domain.canonical(q)),
        Domain::Ball3 { .. } => f,
    };
    let mut table: Vec<f64> = (0..levels)
        .map(|l| central_estimate(g, alpha, p, h / 2.0_f64.powi(l as i32)))
        .collect();
    for j in 1..levels {
        for i in (j..levels).rev() {
            let pow = 4.0_f64.powi(j as i32);
            table[i] = (pow * table[i] - table[i - 1]) / (pow - 1.0);
        }
    }
    Ok(table[levels - 1])
}

/// Vector-field Jacobian by central differences + one Richardson level pair.
pub fn fd_jacobian(
    eval: &dyn Fn(Vec3) -> Vec3,
    p: Vec3,
    scheme: &FdScheme,
    domain: &Domain,
) -> Result<Mat3> {
    let mut h = scheme.base_step;
    if let Domain::Ball3 { radius } = domain {
        h = fit_step_in_ball(p, *radius, [1, 1, 1], h)?;
    }
    let g: &dyn Fn(Vec3) -> Vec3 = match domain {
        Domain::Torus3 { .. } => &|q| eval(domain.canonical(q)),
        Domain::Ball3 { .. } => eval,
    };
    let column = |j: usize, step: f64| -> Vec3 {
        let mut dp = Vec3::zeros();
        dp[j] = step;
        (g(p + dp) - g(p - dp)) / (2.0 * step)
    };
    let mut m = Mat3::zeros();
    for j in 0..3 {
        let coarse = column(j, h);
        let fine = column(j, h / 2.0);
        let col = (fine * 4.0 - coarse) / 3.0;
        for i in 0..3 {
            m[(i, j)] = col[i];
        }
    }
    Ok(m)
}

pub fn fd_curl(
    eval: &dyn Fn(Vec3) -> Vec3,
    p: Vec3,
    scheme: &FdScheme,
    domain: &Domain,
) -> Result<Vec3> {
    let j = fd_jacobian(eval, p, scheme, domain)?;
    Ok(Vec3::new(
        j[(2, 1)] - j[(1, 2)],
        j[(0, 2)] - j[(2, 0)],
        j[(1, 0)] - j[(0, 1)],
    ))
}

pub fn fd_divergence(
    eval: &dyn Fn(Vec3) -> Vec3,
    p: Vec3,
    scheme: &FdScheme,
    domain: &Domain,
) -> Result<f64> {
    Ok(fd_jacobian(eval, p, scheme, domain)?.trace())
}

fn require_nonzero_field(field: &BeltramiField, op: &str) -> Result<()> {
    if field.is_zero_field() {
        return Err(Error::invalid(
            "calculus",
            op,
            "the zero vector field is excluded from residual analysis",
        ));
    }
    Ok(())
}

/// `(‖curl_FD X − λX‖ + |div_FD X|) / (‖X‖ + scale)` at one point.
pub fn beltrami_residual(field: &BeltramiField, p: Vec3, scheme: &FdScheme) -> Result<f64> {
    require_nonzero_field(field, "beltrami_residual")?;
    let eval = |q: Vec3| field.eval(q);
    let j = fd_jacobian(&eval, p, scheme, field.domain())?;
    let curl = Vec3::new(
        j[(2, 1)] - j[(1, 2)],
        j[(0, 2)] - j[(2, 0)],
        j[(1, 0)] - j[(0, 1)],
    );
    let x = field.eval(p);
    let num = (curl - x * field.lambda()).norm() + j.trace().abs();
    Ok(num / (x.norm() + field.scale()))
}

/// `‖X × curl_FD X‖ / (‖X‖² + scale²)` at one point; vanishes identically
/// for Beltrami fields without reference to λ.
pub fn collinearity_residual(field: &BeltramiField, p: Vec3, scheme: &FdScheme) -> Result<f64> {
    require_nonzero_field(field, "collinearity_residual")?;
    let eval = |q: Vec3| field.eval(q);
    let curl = fd_curl(&eval, p, scheme, field.domain())?;
    let x = field.eval(p);
    let s = field.scale();
    Ok(x.cross(&curl).norm() / (x.norm_squared() + s * s))
}

/// Max Beltrami and collinearity residuals over uniform sample points.
pub fn max_residuals(field: &BeltramiField, n: usize, seed: u64) -> Result<(f64, f64)> {
    use rayon::prelude::*;
    let scheme = FdScheme::for_domain(field.domain());
    let pts: Vec<Vec3> = field
        .domain()
        .sample_uniform(n, seed)
        .into_iter()
        .map(|p| match field.domain() {
            // keep the FD stencil comfortably inside the ball
            Domain::Ball3 { .. } => p * 0.9,
            _ => p,
        })
        .collect();
    let residuals: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|&p| {
            let b = beltrami_residual(field, p, &scheme)?;
            let c = collinearity_residual(field, p, &scheme)?;
            Ok((b, c))
        })
        .collect::<Result<_>>()?;
    let max_b = residuals.iter().map(|r| r.0).fold(0.0, f64::max);
    let max_c = residuals.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok((max_b, max_c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{catalog_lookup, expr_field_from_source};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn torus() -> Domain {
        Domain::torus_2pi()
    }

    #[test]
    fn first_partial_of_cosine() {
        let d = torus();
        let s = FdScheme::for_domain(&d);
        let f = |p: Vec3| p.z.cos();
        let v = fd_partial(&f, [0, 0, 1], Vec3::new(0.0, 0.0, PI / 2.0), &s, &d).unwrap();
        assert_relative_eq!(v, -1.0, epsilon = 1e-8);
    }

    #[test]
    fn partial_of_first_integral_component() {
        // ∂_y (sin z − cos y) = sin y, which vanishes at y = 0
        let d = torus();
        let s = FdScheme::for_domain(&d);
        let f = |p: Vec3| p.z.sin() - p.y.cos();
        let v = fd_partial(&f, [0, 1, 0], Vec3::new(0.0, 0.0, PI / 2.0), &s, &d).unwrap();
        assert!(v.abs() < 1e-8, "{v}");
    }

    #[test]
    fn second_partial_of_cosine() {
        let d = torus();
        let s = FdScheme::for_domain(&d);
        let f = |p: Vec3| p.y.cos();
        let v = fd_partial(&f, [0, 2, 0], Vec3::zeros(), &s, &d).unwrap();
        assert_relative_eq!(v, -1.0, epsilon = 1e-5);
    }

    #[test]
    fn scheme_is_exact_on_low_degree_polynomials() {
        let d = torus();
        let s = FdScheme::for_domain(&d);
        let f = |p: Vec3| p.x.powi(3) + 2.0 * p.x * p.x * p.y - p.y * p.z + 7.0;
        // coordinates away from the seam so canonicalization is the identity
        let p = Vec3::new(0.8, 1.3, 1.1);
        let dx = fd_partial(&f, [1, 0, 0], p, &s, &d).unwrap();
        assert_relative_eq!(dx, 3.0 * p.x * p.x + 4.0 * p.x * p.y, epsilon = 1e-10);
        let dxy = fd_partial(&f, [1, 1, 0], p, &s, &d).unwrap();
        assert_relative_eq!(dxy, 4.0 * p.x, epsilon = 1e-10);
        let dyz = fd_partial(&f, [0, 1, 1], p, &s, &d).unwrap();
        assert_relative_eq!(dyz, -1.0, epsilon = 1e-10);
    }

    #[test]
    fn ball_stencil_shrinks_then_errors() {
        let d = Domain::ball(1.0).unwrap();
        let s = FdScheme::for_domain(&d);
        let f = |p: Vec3| p.x * p.x;
        // near the boundary the step shrinks but the derivative still works
        let p = Vec3::new(0.0, 0.0, 1.0 - 1e-4);
        let v = fd_partial(&f, [1, 0, 0], p, &s, &d).unwrap();
        assert_relative_eq!(v, 0.0, epsilon = 1e-8);
        // exactly on the boundary there is no room at all
        let err = fd_partial(&f, [0, 0, 1], Vec3::new(0.0, 0.0, 1.0), &s, &d);
        assert!(matches!(err, Err(Error::StencilOutOfDomain { .. })));
    }

    #[test]
    fn beltrami_residual_small_for_catalog_fields() {
        for spec in ["abc:1,0,-1", "abc:1,1,1"] {
            let f = catalog_lookup(spec).unwrap();
            let s = FdScheme::for_domain(f.domain());
            for p in f.domain().sample_uniform(100, 7) {
                let r = beltrami_residual(&f, p, &s).unwrap();
                assert!(r < 1e-6, "{spec}: residual {r} at {p:?}");
                let c = collinearity_residual(&f, p, &s).unwrap();
                assert!(c < 1e-6, "{spec}: collinearity {c} at {p:?}");
            }
        }
    }

    #[test]
    fn spheromak_residual_small_in_interior() {
        let f = catalog_lookup("spheromak:1,1").unwrap();
        let s = FdScheme::for_domain(f.domain());
        for p in f.domain().sample_uniform(100, 9) {
            let p = p * 0.9; // |p| < 0.9R keeps the stencil inside
            let r = beltrami_residual(&f, p, &s).unwrap();
            assert!(r < 1e-6, "residual {r} at {p:?}");
        }
    }

    #[test]
    fn non_beltrami_control_is_flagged() {
        let f = expr_field_from_source("sin(z),0,0", torus()).unwrap();
        let s = FdScheme::for_domain(f.domain());
        // at z = 0 the curl is (0, 1, 0) while λX ≈ 0
        let r = beltrami_residual(&f, Vec3::new(1.0, 1.0, 0.0), &s).unwrap();
        assert!(r >= 0.3, "expected a large residual, got {r}");
    }

    #[test]
    fn collinearity_of_shear_field_by_hand() {
        // X = (y, 0, 0): curl X = (0, 0, −1), X × curl X = (0, y, 0)
        let f = expr_field_from_source("y,0,0", torus()).unwrap();
        let s = FdScheme::for_domain(f.domain());
        for y in [0.5, 1.0, 2.0] {
            let p = Vec3::new(0.0, y, 0.0);
            let r = collinearity_residual(&f, p, &s).unwrap();
            let scale = f.scale();
            let expected = y / (y * y + scale * scale);
            assert_relative_eq!(r, expected, max_relative = 1e-6);
        }
    }

    #[test]
    fn collinearity_vanishes_where_field_vanishes() {
        let f = expr_field_from_source("y,0,0", torus()).unwrap();
        let s = FdScheme::for_domain(f.domain());
        let r = collinearity_residual(&f, Vec3::new(0.3, 0.0, 0.9), &s).unwrap();
        assert!(r < 1e-12);
    }

    #[test]
    fn zero_field_is_rejected() {
        let f = expr_field_from_source("0,0,0", torus()).unwrap();
        let s = FdScheme::for_domain(f.domain());
        assert!(beltrami_residual(&f, Vec3::zeros(), &s).is_err());
    }

    #[test]
    fn fd_jacobian_matches_analytic() {
        let f = catalog_lookup("abc:1,1,1").unwrap();
        let s = FdScheme::for_domain(f.domain());
        let eval = |q: Vec3| f.eval(q);
        for p in f.domain().sample_uniform(30, 13) {
            let a = f.jacobian(p);
            let b = fd_jacobian(&eval, p, &s, f.domain()).unwrap();
            assert!((a - b).norm() / a.norm().max(1.0) < 1e-6);
        }
    }
}
