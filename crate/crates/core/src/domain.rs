//! Model geometries: the flat 3-torus and the Euclidean solid ball.
//!
//! Both carry flat metrics, so geodesic distances have closed forms: the
//! torus distance is the per-axis wrapped minimum combined Euclidean-style,
//! and the ball is convex so geodesics are chords. Uniform sampling is with
//! respect to the Riemannian (here: Lebesgue) measure.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::rng;
use crate::Result;

pub type Vec3 = nalgebra::Vector3<f64>;

/// Relative membership tolerance for the closed ball.
pub const BALL_MEMBERSHIP_TOL: f64 = 1e-12;

/// A flat model domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Domain {
    Torus3 { periods: [f64; 3] },
    Ball3 { radius: f64 },
}

impl std::fmt::Display for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Domain::Torus3 { periods } => {
                write!(f, "torus3({}, {}, {})", periods[0], periods[1], periods[2])
            }
            Domain::Ball3 { radius } => write!(f, "ball3({radius})"),
        }
    }
}

impl Domain {
    /// The 2π-periodic torus every catalog ABC flow lives on.
    pub fn torus_2pi() -> Self {
        let p = 2.0 * std::f64::consts::PI;
        Domain::Torus3 { periods: [p, p, p] }
    }

    pub fn torus(periods: [f64; 3]) -> Result<Self> {
        if periods.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::parameter("domain", "torus periods must be positive"));
        }
        Ok(Domain::Torus3 { periods })
    }

    pub fn ball(radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::parameter("domain", "ball radius must be positive"));
        }
        Ok(Domain::Ball3 { radius })
    }

    /// Number of connected boundary components (N in the boundary census).
    pub fn boundary_components(&self) -> usize {
        match self {
            Domain::Torus3 { .. } => 0,
            Domain::Ball3 { .. } => 1,
        }
    }

    /// Characteristic length used to scale steps and tolerances.
    pub fn scale(&self) -> f64 {
        match self {
            Domain::Torus3 { periods } => periods.iter().cloned().fold(0.0, f64::max),
            Domain::Ball3 { radius } => *radius,
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Domain::Torus3 { periods } => periods.iter().product(),
            Domain::Ball3 { radius } => 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3),
        }
    }

    /// Reduce raw coordinates to the canonical torus representative in
    /// `[0, period)` per axis. Errors on the ball, which has no deck group.
    pub fn wrap(&self, p: Vec3) -> Result<Vec3> {
        match self {
            Domain::Torus3 { periods } => {
                let mut q = p;
                for i in 0..3 {
                    q[i] = wrap_coord(p[i], periods[i]);
                }
                Ok(q)
            }
            Domain::Ball3 { .. } => Err(Error::UnsupportedOperation(self.to_string())),
        }
    }

    /// Canonical representative where one exists; identity on the ball.
    pub fn canonical(&self, p: Vec3) -> Vec3 {
        match self {
            Domain::Torus3 { .. } => self.wrap(p).expect("wrap is total on the torus"),
            Domain::Ball3 { .. } => p,
        }
    }

    pub fn contains(&self, p: Vec3) -> bool {
        match self {
            Domain::Torus3 { .. } => true,
            Domain::Ball3 { radius } => p.norm() <= radius * (1.0 + BALL_MEMBERSHIP_TOL),
        }
    }

    /// Geodesic distance between two points of the domain.
    pub fn distance(&self, p: Vec3, q: Vec3) -> Result<f64> {
        if !self.contains(p) {
            return Err(Error::OutsideDomain {
                domain: self.to_string(),
                point: [p.x, p.y, p.z],
            });
        }
        if !self.contains(q) {
            return Err(Error::OutsideDomain {
                domain: self.to_string(),
                point: [q.x, q.y, q.z],
            });
        }
        Ok(self.distance_unchecked(p, q))
    }

    /// Same as [`Domain::distance`] but skips the membership check; inner
    /// loops call this with points the integrator already keeps in-domain.
    pub fn distance_unchecked(&self, p: Vec3, q: Vec3) -> f64 {
        match self {
            Domain::Torus3 { periods } => {
                let mut acc = 0.0;
                for i in 0..3 {
                    let d = axis_distance(p[i], q[i], periods[i]);
                    acc += d * d;
                }
                acc.sqrt()
            }
            Domain::Ball3 { .. } => (p - q).norm(),
        }
    }

    /// `n` i.i.d. points uniform w.r.t. volume, deterministic in `seed`.
    pub fn sample_uniform(&self, n: usize, seed: u64) -> Vec<Vec3> {
        let mut rng = rng::stream(seed, "domain::sample_uniform");
        (0..n).map(|_| self.sample_one(&mut rng)).collect()
    }

    pub fn sample_one<R: Rng>(&self, rng: &mut R) -> Vec3 {
        match self {
            Domain::Torus3 { periods } => Vec3::new(
                rng.random::<f64>() * periods[0],
                rng.random::<f64>() * periods[1],
                rng.random::<f64>() * periods[2],
            ),
            Domain::Ball3 { radius } => {
                // Radius by inverse CDF (cube root), direction by the
                // cylinder-projection map, both rejection-free so the
                // draw count per point is fixed.
                let r = radius * rng.random::<f64>().cbrt();
                let z = 2.0 * rng.random::<f64>() - 1.0;
                let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
                let rho = (1.0 - z * z).max(0.0).sqrt();
                Vec3::new(r * rho * phi.cos(), r * rho * phi.sin(), r * z)
            }
        }
    }

    /// Distance from a point to the boundary (infinite on the torus).
    pub fn boundary_distance(&self, p: Vec3) -> f64 {
        match self {
            Domain::Torus3 { .. } => f64::INFINITY,
            Domain::Ball3 { radius } => radius - p.norm(),
        }
    }
}

fn wrap_coord(x: f64, period: f64) -> f64 {
    let mut r = x % period;
    if r < 0.0 {
        r += period;
    }
    // x % period can round to exactly `period` for tiny negative x.
    if r >= period {
        r -= period;
    }
    r
}

/// Wrapped distance along one torus axis: min(|Δ| mod L, L − |Δ| mod L).
pub fn axis_distance(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).abs() % period;
    d.min(period - d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn wrap_identity_and_periodicity() {
        let t = Domain::torus_2pi();
        let w = t.wrap(Vec3::new(0.0, 0.0, 0.0)).unwrap();
        assert_eq!(w, Vec3::new(0.0, 0.0, 0.0));

        let w = t.wrap(Vec3::new(2.0 * PI + 0.1, 0.0, 0.0)).unwrap();
        assert_relative_eq!(w.x, 0.1, epsilon = 1e-12);

        let w = t.wrap(Vec3::new(-0.1, 4.0 * PI, PI)).unwrap();
        assert_relative_eq!(w.x, 2.0 * PI - 0.1, epsilon = 1e-12);
        assert_relative_eq!(w.y, 0.0, epsilon = 1e-12);
        assert_relative_eq!(w.z, PI, epsilon = 1e-12);
    }

    #[test]
    fn wrap_rejected_on_ball() {
        let b = Domain::ball(1.0).unwrap();
        assert!(b.wrap(Vec3::zeros()).is_err());
    }

    #[test]
    fn torus_distance_wraps_around() {
        let t = Domain::torus_2pi();
        let d = t
            .distance(Vec3::zeros(), Vec3::new(2.0 * PI - 0.1, 0.0, 0.0))
            .unwrap();
        assert_relative_eq!(d, 0.1, epsilon = 1e-12);

        let far = t.distance(Vec3::zeros(), Vec3::new(PI, PI, PI)).unwrap();
        assert_relative_eq!(far, PI * 3.0_f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn ball_distance_is_euclidean() {
        let b = Domain::ball(1.0).unwrap();
        let d = b
            .distance(Vec3::zeros(), Vec3::new(0.0, 0.0, 0.5))
            .unwrap();
        assert_relative_eq!(d, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn distance_rejects_outside_points() {
        let b = Domain::ball(1.0).unwrap();
        assert!(b
            .distance(Vec3::zeros(), Vec3::new(0.0, 0.0, 1.5))
            .is_err());
    }

    #[test]
    fn empty_sample() {
        assert!(Domain::torus_2pi().sample_uniform(0, 1).is_empty());
    }

    #[test]
    fn torus_sample_means_match_lln() {
        // Component means → (π, π, π) within 3σ/√n, σ = 2π/√12.
        let n = 100_000;
        let pts = Domain::torus_2pi().sample_uniform(n, 42);
        let sigma = 2.0 * PI / 12.0_f64.sqrt();
        let bound = 3.0 * sigma / (n as f64).sqrt();
        for axis in 0..3 {
            let mean: f64 = pts.iter().map(|p| p[axis]).sum::<f64>() / n as f64;
            assert!(
                (mean - PI).abs() < bound,
                "axis {axis}: mean {mean} not within {bound} of π"
            );
        }
    }

    #[test]
    fn ball_sample_volume_ratio() {
        // P(|p| ≤ R/2) = 1/8 within 3·√(p(1−p)/n).
        let n = 100_000;
        let pts = Domain::ball(1.0).unwrap().sample_uniform(n, 42);
        let frac = pts.iter().filter(|p| p.norm() <= 0.5).count() as f64 / n as f64;
        let bound = 3.0 * (0.125 * 0.875 / n as f64).sqrt();
        assert!(
            (frac - 0.125).abs() < bound,
            "fraction {frac} not within {bound} of 0.125"
        );
    }

    #[test]
    fn sampling_is_bit_identical_per_seed() {
        let a = Domain::ball(2.0).unwrap().sample_uniform(64, 9);
        let b = Domain::ball(2.0).unwrap().sample_uniform(64, 9);
        assert_eq!(a, b);
    }

    #[test]
    fn domain_json_shape() {
        let t = Domain::torus_2pi();
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.starts_with(r#"{"kind":"torus3","periods":"#), "{s}");
        let b = Domain::ball(1.5).unwrap();
        assert_eq!(
            serde_json::to_string(&b).unwrap(),
            r#"{"kind":"ball3","radius":1.5}"#
        );
        let back: Domain = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
    }
}
