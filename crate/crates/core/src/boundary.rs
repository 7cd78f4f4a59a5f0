//! Restriction of a tangent ball field to the boundary sphere and the
//! gradient dynamics that live there.
//!
//! The restricted 1-form `ω = R·a_θ dθ + R·sinθ·a_φ dφ` of a Beltrami field
//! is closed; on the sphere that makes the restriction a gradient field.
//! This module verifies closedness on a grid, recovers the potential by
//! explicit path integration (path independence is itself the test), takes
//! a census of boundary zeros against the 2N lower bound, and traces
//! boundary field lines to their forward and backward limit zeros.

use std::sync::Arc;

use nalgebra::{Matrix2, Vector2, SVD};
use rand::Rng;
use serde::Serialize;

use crate::domain::{Domain, Vec3};
use crate::error::Error;
use crate::field::BeltramiField;
use crate::flow::{integrate_projected, IntegratorOptions, Projection};
use crate::rng;
use crate::Result;

/// Pole caps excluded from (θ,φ) grids used for derivatives.
pub const THETA_MIN: f64 = 0.05;

/// 8-point Gauss–Legendre nodes and weights on [−1, 1].
const GL8_X: [f64; 8] = [
    -0.9602898564975363,
    -0.7966664774136267,
    -0.5255324099163290,
    -0.1834346424956498,
    0.1834346424956498,
    0.5255324099163290,
    0.7966664774136267,
    0.9602898564975363,
];
const GL8_W: [f64; 8] = [
    0.1012285362903763,
    0.2223810344533745,
    0.3137066458778873,
    0.3626837833783620,
    0.3626837833783620,
    0.3137066458778873,
    0.2223810344533745,
    0.1012285362903763,
];

pub fn sphere_point(radius: f64, theta: f64, phi: f64) -> Vec3 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vec3::new(radius * st * cp, radius * st * sp, radius * ct)
}

fn frame(theta: f64, phi: f64) -> (Vec3, Vec3) {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let e_theta = Vec3::new(ct * cp, ct * sp, -st);
    let e_phi = Vec3::new(-sp, cp, 0.0);
    (e_theta, e_phi)
}

type Component = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

enum Source {
    Ambient(BeltramiField),
    Analytic { a_theta: Component, a_phi: Component },
}

/// A tangent vector field on the boundary sphere in the orthonormal frame
/// (ê_θ, ê_φ).
pub struct SurfaceField {
    radius: f64,
    scale: f64,
    source: Source,
}

impl SurfaceField {
    /// Build from closed-form frame components (test and control fields).
    pub fn from_components<F, G>(radius: f64, a_theta: F, a_phi: G) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        let mut scale = 0.0_f64;
        for i in 0..32 {
            for j in 0..64 {
                let theta = THETA_MIN + (i as f64 + 0.5) / 32.0 * (std::f64::consts::PI - 2.0 * THETA_MIN);
                let phi = (j as f64 + 0.5) / 64.0 * 2.0 * std::f64::consts::PI;
                let a = a_theta(theta, phi).hypot(a_phi(theta, phi));
                scale = scale.max(a);
            }
        }
        SurfaceField {
            radius,
            scale: scale.max(1e-300),
            source: Source::Analytic {
                a_theta: Arc::new(a_theta),
                a_phi: Arc::new(a_phi),
            },
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn ambient(&self) -> Option<&BeltramiField> {
        match &self.source {
            Source::Ambient(f) => Some(f),
            Source::Analytic { .. } => None,
        }
    }

    /// Frame components (a_θ, a_φ) at a boundary point.
    pub fn components(&self, theta: f64, phi: f64) -> (f64, f64) {
        match &self.source {
            Source::Ambient(field) => {
                let p = sphere_point(self.radius, theta, phi);
                let v = field.eval(p);
                let (e_theta, e_phi) = frame(theta, phi);
                (v.dot(&e_theta), v.dot(&e_phi))
            }
            Source::Analytic { a_theta, a_phi } => (a_theta(theta, phi), a_phi(theta, phi)),
        }
    }

    pub fn speed(&self, theta: f64, phi: f64) -> f64 {
        let (a, b) = self.components(theta, phi);
        a.hypot(b)
    }
}

/// Restrict a tangent Beltrami ball field to its boundary sphere. Fails if
/// the radial component anywhere on a 64×128 probe grid exceeds 1e-8·scale.
pub fn restrict_to_boundary(field: &BeltramiField) -> Result<SurfaceField> {
    let radius = match field.domain() {
        Domain::Ball3 { radius } => *radius,
        other => {
            return Err(Error::invalid(
                "boundary",
                "restrict_to_boundary",
                format!("field lives on {other}, not a ball"),
            ))
        }
    };
    let scale = field.scale().max(1e-300);
    let mut max_radial = 0.0_f64;
    for i in 0..64 {
        for j in 0..128 {
            let theta = (i as f64 + 0.5) / 64.0 * std::f64::consts::PI;
            let phi = (j as f64 + 0.5) / 128.0 * 2.0 * std::f64::consts::PI;
            let n = sphere_point(1.0, theta, phi);
            let radial = field.eval(n * radius).dot(&n).abs();
            max_radial = max_radial.max(radial);
        }
    }
    let threshold = 1e-8 * scale;
    if max_radial > threshold {
        return Err(Error::NotTangent {
            max_radial,
            threshold,
        });
    }
    Ok(SurfaceField {
        radius,
        scale,
        source: Source::Ambient(field.clone()),
    })
}

/// Maximum radial component of a ball field over the probe grid (reported
/// as the tangency figure of merit).
pub fn max_radial_component(field: &BeltramiField) -> Result<f64> {
    let radius = match field.domain() {
        Domain::Ball3 { radius } => *radius,
        other => {
            return Err(Error::invalid(
                "boundary",
                "max_radial_component",
                format!("field lives on {other}, not a ball"),
            ))
        }
    };
    let mut max_radial = 0.0_f64;
    for i in 0..64 {
        for j in 0..128 {
            let theta = (i as f64 + 0.5) / 64.0 * std::f64::consts::PI;
            let phi = (j as f64 + 0.5) / 128.0 * 2.0 * std::f64::consts::PI;
            let n = sphere_point(1.0, theta, phi);
            max_radial = max_radial.max(field.eval(n * radius).dot(&n).abs());
        }
    }
    Ok(max_radial)
}

fn band_thetas(n_theta: usize) -> Vec<f64> {
    let lo = THETA_MIN;
    let hi = std::f64::consts::PI - THETA_MIN;
    (0..n_theta)
        .map(|i| lo + (hi - lo) * i as f64 / (n_theta - 1) as f64)
        .collect()
}

fn phis(n_phi: usize) -> Vec<f64> {
    (0..n_phi)
        .map(|j| 2.0 * std::f64::consts::PI * j as f64 / n_phi as f64)
        .collect()
}

/// Max |∂_θ ω_φ − ∂_φ ω_θ| / (R²·scale) over the pole-free grid, with the
/// 1-form components ω_θ = R·a_θ and ω_φ = R·sinθ·a_φ.
pub fn closedness_residual(sf: &SurfaceField, n_theta: usize, n_phi: usize) -> f64 {
    let r = sf.radius;
    let thetas = band_thetas(n_theta);
    let phi_list = phis(n_phi);
    let dtheta = thetas[1] - thetas[0];
    let dphi = phi_list[1] - phi_list[0];

    let omega_theta = |t: f64, p: f64| r * sf.components(t, p).0;
    let omega_phi = |t: f64, p: f64| r * t.sin() * sf.components(t, p).1;

    let mut max_res = 0.0_f64;
    for i in 1..n_theta - 1 {
        for (j, &phi) in phi_list.iter().enumerate() {
            let theta = thetas[i];
            let d_theta_omega_phi =
                (omega_phi(thetas[i + 1], phi) - omega_phi(thetas[i - 1], phi)) / (2.0 * dtheta);
            let phi_prev = phi_list[(j + n_phi - 1) % n_phi];
            let phi_next = phi_list[(j + 1) % n_phi];
            let d_phi_omega_theta =
                (omega_theta(theta, phi_next) - omega_theta(theta, phi_prev)) / (2.0 * dphi);
            let res = (d_theta_omega_phi - d_phi_omega_theta).abs();
            max_res = max_res.max(res);
        }
    }
    max_res / (r * r * sf.scale)
}

/// Potential evaluator: line integrals of the restricted 1-form along
/// meridian-then-parallel paths from a base point, composite 8-point Gauss
/// quadrature with 4 panels per arc.
pub struct PotentialMap<'a> {
    sf: &'a SurfaceField,
    base_theta: f64,
    base_phi: f64,
}

impl<'a> PotentialMap<'a> {
    pub fn new(sf: &'a SurfaceField, base_theta: f64, base_phi: f64) -> Self {
        PotentialMap {
            sf,
            base_theta,
            base_phi,
        }
    }

    fn quad(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let panels = 4;
        let mut acc = 0.0;
        for p in 0..panels {
            let lo = a + (b - a) * p as f64 / panels as f64;
            let hi = a + (b - a) * (p + 1) as f64 / panels as f64;
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            for (x, w) in GL8_X.iter().zip(GL8_W.iter()) {
                acc += w * half * f(mid + half * x);
            }
        }
        acc
    }

    fn meridian(&self, phi: f64, theta_a: f64, theta_b: f64) -> f64 {
        let r = self.sf.radius;
        self.quad(theta_a, theta_b, |t| r * self.sf.components(t, phi).0)
    }

    fn parallel(&self, theta: f64, phi_a: f64, phi_b: f64) -> f64 {
        let r = self.sf.radius;
        self.quad(phi_a, phi_b, |p| {
            r * theta.sin() * self.sf.components(theta, p).1
        })
    }

    /// f(θ,φ): base → (θ, φ₀) along the meridian, then along the parallel.
    pub fn eval(&self, theta: f64, phi: f64) -> f64 {
        self.meridian(self.base_phi, self.base_theta, theta)
            + self.parallel(theta, self.base_phi, phi)
    }

    /// Same endpoint through the other path (parallel first).
    pub fn eval_alt(&self, theta: f64, phi: f64) -> f64 {
        self.parallel(self.base_theta, self.base_phi, phi)
            + self.meridian(phi, self.base_theta, theta)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PotentialReport {
    pub base_theta: f64,
    pub base_phi: f64,
    pub n_theta: usize,
    pub n_phi: usize,
    /// Row-major f values over the (θ, φ) grid.
    pub values: Vec<f64>,
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
    pub path_defect: f64,
    pub gradient_defect: f64,
}

/// Recover the potential on the pole-free grid; errors when the two path
/// orders disagree beyond 1e-5·scale·R.
pub fn recover_potential(
    sf: &SurfaceField,
    base: (f64, f64),
    n_theta: usize,
    n_phi: usize,
) -> Result<PotentialReport> {
    let map = PotentialMap::new(sf, base.0, base.1);
    let thetas = band_thetas(n_theta);
    let phi_list = phis(n_phi);
    let r = sf.radius;

    let mut values = Vec::with_capacity(n_theta * n_phi);
    let mut path_defect = 0.0_f64;
    for &theta in &thetas {
        for &phi in &phi_list {
            let f1 = map.eval(theta, phi);
            let f2 = map.eval_alt(theta, phi);
            path_defect = path_defect.max((f1 - f2).abs());
            values.push(f1);
        }
    }
    let threshold = 1e-5 * sf.scale * r;
    if path_defect > threshold {
        return Err(Error::NotClosed {
            defect: path_defect,
            threshold,
        });
    }

    // gradient consistency at grid nodes, via small-step differences of the
    // quadrature evaluator so the check is not limited by grid spacing
    let h = 1e-4;
    let mut gradient_defect = 0.0_f64;
    for &theta in &thetas {
        for &phi in &phi_list {
            let (a_theta, a_phi) = sf.components(theta, phi);
            let g_theta = (map.eval(theta + h, phi) - map.eval(theta - h, phi)) / (2.0 * h * r);
            let g_phi = (map.eval(theta, phi + h) - map.eval(theta, phi - h))
                / (2.0 * h * r * theta.sin());
            gradient_defect = gradient_defect
                .max((g_theta - a_theta).abs())
                .max((g_phi - a_phi).abs());
        }
    }

    Ok(PotentialReport {
        base_theta: base.0,
        base_phi: base.1,
        n_theta,
        n_phi,
        values,
        thetas,
        phis: phi_list,
        path_defect,
        gradient_defect,
    })
}

// ---------------------------------------------------------------------------
// Zero census

#[derive(Debug, Clone, Serialize)]
pub struct SurfaceZero {
    pub theta: f64,
    pub phi: f64,
    pub cartesian: [f64; 3],
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CensusReport {
    pub zeros: Vec<SurfaceZero>,
    pub count: usize,
    /// 2N with N the number of boundary components (1 for the ball).
    pub two_n: usize,
    pub meets_lower_bound: bool,
    /// Fraction of probe-grid points with ‖a‖ below the zero tolerance
    /// (nowhere-density proxy; must be ≪ 1 for a nonzero field).
    pub zero_fraction: f64,
}

fn newton_on_sphere(
    sf: &SurfaceField,
    mut theta: f64,
    mut phi: f64,
    tol_abs: f64,
) -> Option<(f64, f64)> {
    let clamp = |t: f64| t.clamp(1e-4, std::f64::consts::PI - 1e-4);
    let h = 1e-6;
    for _ in 0..60 {
        let (a, b) = sf.components(theta, phi);
        let fx = Vector2::new(a, b);
        if fx.norm() < tol_abs {
            return Some((theta, phi));
        }
        let (at1, bt1) = sf.components(clamp(theta + h), phi);
        let (at0, bt0) = sf.components(clamp(theta - h), phi);
        let (ap1, bp1) = sf.components(theta, phi + h);
        let (ap0, bp0) = sf.components(theta, phi - h);
        let j = Matrix2::new(
            (at1 - at0) / (2.0 * h),
            (ap1 - ap0) / (2.0 * h),
            (bt1 - bt0) / (2.0 * h),
            (bp1 - bp0) / (2.0 * h),
        );
        let svd = SVD::new(j, true, true);
        let eps = (1e-6 * svd.singular_values[0]).max(1e-300);
        let step = svd.solve(&fx, eps).ok()?;
        let f0 = fx.norm();
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..10 {
            let nt = clamp(theta - t * step[0]);
            let np = phi - t * step[1];
            let (na, nb) = sf.components(nt, np);
            if na.hypot(nb) < (1.0 - 0.25 * t) * f0 {
                theta = nt;
                phi = np;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            return None;
        }
    }
    let (a, b) = sf.components(theta, phi);
    (a.hypot(b) < tol_abs).then_some((theta, phi))
}

/// Census of boundary zeros: 2-variable Newton from low-‖a‖ grid cells,
/// pole detection in ambient Cartesian coordinates, clustering, and the
/// comparison with the 2N lower bound.
pub fn boundary_zero_census(
    sf: &SurfaceField,
    n_theta: usize,
    n_phi: usize,
    refine_tol: f64,
) -> CensusReport {
    let r = sf.radius;
    let scale = sf.scale;
    let thetas = band_thetas(n_theta);
    let phi_list = phis(n_phi);
    let cell_angle = (thetas[1] - thetas[0]).max(phi_list[1] - phi_list[0]);
    let tol_abs = refine_tol * scale;

    let mut zero_count_on_grid = 0usize;
    let mut seeds = Vec::new();
    let seed_threshold = 4.0 * scale * cell_angle;
    for &theta in &thetas {
        for &phi in &phi_list {
            let speed = sf.speed(theta, phi);
            if speed < 1e-6 * scale {
                zero_count_on_grid += 1;
            }
            if speed < seed_threshold {
                seeds.push((theta, phi));
            }
        }
    }
    let zero_fraction = zero_count_on_grid as f64 / (n_theta * n_phi) as f64;

    let mut points: Vec<(f64, f64, Vec3, f64)> = Vec::new();
    for (theta, phi) in seeds {
        if let Some((t, p)) = newton_on_sphere(sf, theta, phi, tol_abs) {
            let cart = sphere_point(r, t, p);
            points.push((t, p, cart, sf.speed(t, p)));
        }
    }
    // pole zeros are detected in Cartesian coordinates, the (θ,φ) chart is
    // singular there
    for (pole_theta, z) in [(0.0, r), (std::f64::consts::PI, -r)] {
        let speed = match sf.ambient() {
            Some(field) => field.eval(Vec3::new(0.0, 0.0, z)).norm(),
            None => (0..4)
                .map(|k| sf.speed(if z > 0.0 { 1e-5 } else { std::f64::consts::PI - 1e-5 },
                                  k as f64 * std::f64::consts::FRAC_PI_2))
                .fold(0.0, f64::max),
        };
        if speed < 1e-6 * scale {
            points.push((pole_theta, 0.0, Vec3::new(0.0, 0.0, z), speed));
        }
    }

    // cluster in Cartesian coordinates
    let eps = 2.0 * r * cell_angle;
    let mut representatives: Vec<SurfaceZero> = Vec::new();
    let mut cluster_of: Vec<usize> = Vec::new();
    let mut cartesians: Vec<Vec3> = Vec::new();
    for (theta, phi, cart, residual) in points {
        let mut assigned = None;
        for (idx, &c) in cartesians.iter().enumerate() {
            if (c - cart).norm() <= eps {
                assigned = Some(cluster_of[idx]);
                break;
            }
        }
        match assigned {
            Some(cluster) => {
                cluster_of.push(cluster);
                cartesians.push(cart);
                if residual < representatives[cluster].residual {
                    representatives[cluster] = SurfaceZero {
                        theta,
                        phi,
                        cartesian: [cart.x, cart.y, cart.z],
                        residual,
                    };
                }
            }
            None => {
                cluster_of.push(representatives.len());
                cartesians.push(cart);
                representatives.push(SurfaceZero {
                    theta,
                    phi,
                    cartesian: [cart.x, cart.y, cart.z],
                    residual,
                });
            }
        }
    }

    let count = representatives.len();
    let two_n = 2;
    CensusReport {
        zeros: representatives,
        count,
        two_n,
        meets_lower_bound: count >= two_n,
        zero_fraction,
    }
}

// ---------------------------------------------------------------------------
// Boundary field lines

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryTrace {
    pub start_theta: f64,
    pub start_phi: f64,
    /// Index into the census zeros of the forward / backward limit, when
    /// the endpoint is within the assignment tolerance.
    pub p_plus: Option<usize>,
    pub p_minus: Option<usize>,
    pub constant: bool,
    pub f_increasing: bool,
    /// Smallest increment of f between consecutive moving samples.
    pub f_margin: f64,
    /// min over t ∈ [1, T] of |γ(t) − γ(0)| (embedded-line proxy).
    pub min_self_return: f64,
    pub horizon_used: f64,
}

/// Trace a boundary field line from (θ,φ): sphere-projected integration of
/// the ambient field, limit assignment to the nearest census zero, and
/// monotonicity of the recovered potential along the line.
pub fn trace_boundary_line(
    sf: &SurfaceField,
    potential: &PotentialMap<'_>,
    zeros: &[SurfaceZero],
    start: (f64, f64),
    horizon: f64,
) -> Result<BoundaryTrace> {
    let field = sf.ambient().ok_or_else(|| {
        Error::invalid(
            "boundary",
            "trace_boundary_line",
            "tracing requires a field restricted from the ball, not a synthetic surface field",
        )
    })?;
    let r = sf.radius;
    let p0 = sphere_point(r, start.0, start.1);
    let assignment_tol = 1e-3 * r;

    if sf.speed(start.0, start.1) < 1e-8 * sf.scale {
        return Ok(BoundaryTrace {
            start_theta: start.0,
            start_phi: start.1,
            p_plus: None,
            p_minus: None,
            constant: true,
            f_increasing: true,
            f_margin: 0.0,
            min_self_return: 0.0,
            horizon_used: horizon,
        });
    }

    let eval = |q: Vec3| field.eval(q);
    let nearest_zero = |p: Vec3| -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, z) in zeros.iter().enumerate() {
            let d = (p - Vec3::new(z.cartesian[0], z.cartesian[1], z.cartesian[2])).norm();
            if best.map(|(_, bd)| d < bd).unwrap_or(true) {
                best = Some((i, d));
            }
        }
        best.and_then(|(i, d)| (d < assignment_tol).then_some(i))
    };

    let mut horizon_used = horizon;
    let mut assigned: [Option<usize>; 2] = [None, None];
    let mut forward_traj = None;
    let mut backward_traj = None;
    // limit assignment with one horizon-doubling retry
    for attempt in 0..2 {
        let t = horizon * (attempt + 1) as f64;
        let opts = IntegratorOptions::new(1e-10, r);
        let fwd = integrate_projected(
            &eval,
            field.name(),
            p0,
            t,
            &opts,
            Projection::Sphere { radius: r },
            field.domain(),
        )?;
        let bwd = integrate_projected(
            &eval,
            field.name(),
            p0,
            -t,
            &opts,
            Projection::Sphere { radius: r },
            field.domain(),
        )?;
        assigned = [nearest_zero(fwd.end_point()), nearest_zero(bwd.end_point())];
        horizon_used = t;
        forward_traj = Some(fwd);
        backward_traj = Some(bwd);
        if assigned[0].is_some() && assigned[1].is_some() {
            break;
        }
    }
    let fwd = forward_traj.unwrap();
    let bwd = backward_traj.unwrap();

    // potential must increase along real time; sample every few outputs
    let f_of = |p: Vec3| {
        let theta = (p.z / r).clamp(-1.0, 1.0).acos();
        let phi = p.y.atan2(p.x);
        potential.eval(theta, phi)
    };
    // df/dt = ‖a‖² along a gradient line, so increments are only resolvable
    // above rounding when the speed is well clear of zero
    let moving = |p: Vec3| field.eval(p).norm() > 1e-4 * sf.scale;
    let mut f_margin = f64::INFINITY;
    let mut f_increasing = true;
    let mut check_series = |samples: Vec<(f64, Vec3)>, forward: bool| {
        let stride = 4.max(samples.len() / 400);
        let pts: Vec<&(f64, Vec3)> = samples.iter().step_by(stride).collect();
        for w in pts.windows(2) {
            let (_, a) = *w[0];
            let (_, b) = *w[1];
            if !(moving(a) && moving(b)) {
                continue;
            }
            let df = if forward {
                f_of(b) - f_of(a)
            } else {
                f_of(a) - f_of(b) // stored backward in time
            };
            if df <= 0.0 {
                f_increasing = false;
            }
            f_margin = f_margin.min(df);
        }
    };
    check_series(fwd.samples.clone(), true);
    check_series(bwd.samples.clone(), false);

    let min_self_return = fwd
        .samples
        .iter()
        .filter(|(t, _)| *t >= 1.0)
        .map(|&(_, p)| (p - p0).norm())
        .fold(f64::INFINITY, f64::min);

    Ok(BoundaryTrace {
        start_theta: start.0,
        start_phi: start.1,
        p_plus: assigned[0],
        p_minus: assigned[1],
        constant: false,
        f_increasing,
        f_margin: if f_margin.is_finite() { f_margin } else { 0.0 },
        min_self_return,
        horizon_used,
    })
}

// ---------------------------------------------------------------------------
// Full analysis

#[derive(Debug, Clone)]
pub struct BoundaryOptions {
    pub grid_theta: usize,
    pub grid_phi: usize,
    pub potential_theta: usize,
    pub potential_phi: usize,
    pub refine_tol: f64,
    pub n_traces: usize,
    pub horizon: f64,
    pub seed: u64,
}

impl Default for BoundaryOptions {
    fn default() -> Self {
        BoundaryOptions {
            grid_theta: 64,
            grid_phi: 128,
            potential_theta: 48,
            potential_phi: 96,
            refine_tol: 1e-9,
            n_traces: 20,
            horizon: 100.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryReport {
    pub field: String,
    pub radius: f64,
    pub boundary_components: usize,
    pub max_radial_component: f64,
    pub closedness_residual: f64,
    pub census: CensusReport,
    pub potential: PotentialReport,
    pub traces: Vec<BoundaryTrace>,
}

/// Run the whole boundary suite on a tangent ball field.
pub fn analyze(field: &BeltramiField, opts: &BoundaryOptions) -> Result<BoundaryReport> {
    let sf = restrict_to_boundary(field)?;
    let max_radial = max_radial_component(field)?;
    let closedness = closedness_residual(&sf, opts.grid_theta, opts.grid_phi);
    let census = boundary_zero_census(&sf, opts.grid_theta, opts.grid_phi, opts.refine_tol);
    let base = (std::f64::consts::FRAC_PI_2, 0.0);
    let potential = recover_potential(&sf, base, opts.potential_theta, opts.potential_phi)?;
    let map = PotentialMap::new(&sf, base.0, base.1);

    let mut rng = rng::stream(opts.seed, "boundary::traces");
    let mut traces = Vec::with_capacity(opts.n_traces);
    let zero_tol = 1e-6 * sf.scale();
    while traces.len() < opts.n_traces {
        // uniform on the sphere, restricted to the pole-free band and away
        // from census zeros
        let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
        let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
        let theta = z.clamp(-1.0, 1.0).acos();
        if theta < THETA_MIN || theta > std::f64::consts::PI - THETA_MIN {
            continue;
        }
        if sf.speed(theta, phi) < zero_tol {
            continue;
        }
        traces.push(trace_boundary_line(
            &sf,
            &map,
            &census.zeros,
            (theta, phi),
            opts.horizon,
        )?);
    }

    Ok(BoundaryReport {
        field: field.name().to_string(),
        radius: sf.radius(),
        boundary_components: field.domain().boundary_components(),
        max_radial_component: max_radial,
        closedness_residual: closedness,
        census,
        potential,
        traces,
    })
}
