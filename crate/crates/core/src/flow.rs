//! Field-line integration and the dynamics experiments built on it:
//! trajectory classification, the Poincaré-recurrence ensemble, and the
//! volume-preservation check.
//!
//! The integrator is an adaptive Dormand–Prince 5(4) pair. Steps are capped
//! at the dense-output spacing and always land exactly on output times, so
//! samples carry no interpolation error; between samples, searches use cubic
//! Hermite interpolants built from the field values at the endpoints.
//!
//! State is kept in raw (unwrapped) coordinates: wrapping happens at the
//! reporting boundary. This keeps flow-map differencing meaningful and costs
//! nothing for periodic fields.

use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{Domain, Vec3};
use crate::error::Error;
use crate::field::BeltramiField;
use crate::Result;

/// Dense-output spacing default (time units).
pub const DEFAULT_DT_OUT: f64 = 0.05;

#[derive(Debug, Clone, Copy)]
pub struct IntegratorOptions {
    /// Relative error tolerance.
    pub rtol: f64,
    /// Absolute error floor.
    pub atol: f64,
    /// Dense output spacing.
    pub dt_out: f64,
    /// Hard cap on the step size.
    pub max_step: f64,
}

impl IntegratorOptions {
    pub fn new(tol: f64, domain_scale: f64) -> Self {
        IntegratorOptions {
            rtol: tol,
            atol: tol * domain_scale.max(1e-12),
            dt_out: DEFAULT_DT_OUT,
            max_step: DEFAULT_DT_OUT,
        }
    }

    /// Endpoint-only integration: one output sample at `t_end`.
    pub fn endpoint(tol: f64, domain_scale: f64, t_end: f64) -> Self {
        IntegratorOptions {
            rtol: tol,
            atol: tol * domain_scale.max(1e-12),
            dt_out: t_end.abs().max(1e-12),
            max_step: DEFAULT_DT_OUT,
        }
    }
}

/// How the state is constrained after each accepted step.
#[derive(Debug, Clone, Copy)]
pub enum Projection {
    /// No constraint (torus; raw coordinates).
    None,
    /// Renormalize into the closed ball when drift exceeds 1e-12·R; error
    /// if the trajectory escapes by more than 1e-6·R.
    Ball { radius: f64 },
    /// Renormalize onto the sphere every step (boundary field lines).
    Sphere { radius: f64 },
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct IntegratorStats {
    pub steps: u64,
    pub rejected: u64,
    pub max_error_estimate: f64,
}

/// Trajectory classification per the constant/periodic/non-periodic
/// trichotomy, with `Indeterminate` for insufficient horizons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Classification {
    Constant,
    Periodic { period: f64 },
    NonPeriodic,
    Indeterminate,
}

/// A time-stamped field line in raw coordinates.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub field_name: String,
    pub start: Vec3,
    /// (time, position) samples, strictly monotone in |time|, raw coords.
    pub samples: Vec<(f64, Vec3)>,
    pub stats: IntegratorStats,
    pub classification: Classification,
}

impl Trajectory {
    pub fn duration(&self) -> f64 {
        self.samples.last().map(|s| s.0.abs()).unwrap_or(0.0)
    }

    pub fn end_point(&self) -> Vec3 {
        self.samples.last().map(|s| s.1).unwrap_or(self.start)
    }

    /// Samples with positions reduced to canonical domain representatives.
    pub fn wrapped_samples(&self, domain: &Domain) -> Vec<(f64, Vec3)> {
        self.samples
            .iter()
            .map(|&(t, p)| (t, domain.canonical(p)))
            .collect()
    }
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b5 − b4 (error estimator weights)
const D1: f64 = 71.0 / 57600.0;
const D3: f64 = -71.0 / 16695.0;
const D4: f64 = 71.0 / 1920.0;
const D5: f64 = -17253.0 / 339200.0;
const D6: f64 = 22.0 / 525.0;
const D7: f64 = -1.0 / 40.0;

struct DpStep {
    y_new: Vec3,
    err: f64,
}

fn dp_step(f: &dyn Fn(Vec3) -> Vec3, y: Vec3, h: f64, rtol: f64, atol: f64) -> DpStep {
    let k1 = f(y);
    let k2 = f(y + k1 * (A21 * h));
    let k3 = f(y + (k1 * A31 + k2 * A32) * h);
    let k4 = f(y + (k1 * A41 + k2 * A42 + k3 * A43) * h);
    let k5 = f(y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * h);
    let k6 = f(y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * h);
    let y_new = y + (k1 * B1 + k3 * B3 + k4 * B4 + k5 * B5 + k6 * B6) * h;
    let k7 = f(y_new);
    let e = (k1 * D1 + k3 * D3 + k4 * D4 + k5 * D5 + k6 * D6 + k7 * D7) * h;
    let mut err2 = 0.0;
    for i in 0..3 {
        let sc = atol + rtol * y[i].abs().max(y_new[i].abs());
        let r = e[i] / sc;
        err2 += r * r;
    }
    DpStep {
        y_new,
        err: (err2 / 3.0).sqrt(),
    }
}

/// Integrate the field line of `field` from `p0` to signed time `t_end`.
pub fn integrate(field: &BeltramiField, p0: Vec3, t_end: f64, tol: f64) -> Result<Trajectory> {
    let opts = IntegratorOptions::new(tol, field.domain().scale());
    integrate_with(field, p0, t_end, &opts)
}

pub fn integrate_with(
    field: &BeltramiField,
    p0: Vec3,
    t_end: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    let projection = match field.domain() {
        Domain::Torus3 { .. } => Projection::None,
        Domain::Ball3 { radius } => Projection::Ball { radius: *radius },
    };
    let eval = |q: Vec3| field.eval(q);
    integrate_projected(&eval, field.name(), p0, t_end, opts, projection, field.domain())
}

/// Low-level entry: integrate an arbitrary evaluation closure under a
/// projection rule. The boundary analyzer drives this with a sphere
/// constraint; everything else goes through [`integrate_with`].
#[allow(clippy::too_many_arguments)]
pub fn integrate_projected(
    eval: &dyn Fn(Vec3) -> Vec3,
    name: &str,
    p0: Vec3,
    t_end: f64,
    opts: &IntegratorOptions,
    projection: Projection,
    domain: &Domain,
) -> Result<Trajectory> {
    if !domain.contains(p0) {
        return Err(Error::invalid(
            "flow",
            "integrate",
            format!("start point {p0:?} outside {domain}"),
        ));
    }
    let mut traj = Trajectory {
        field_name: name.to_string(),
        start: p0,
        samples: vec![(0.0, p0)],
        stats: IntegratorStats::default(),
        classification: Classification::Indeterminate,
    };
    if t_end == 0.0 {
        return Ok(traj);
    }
    let sigma = t_end.signum();
    let mut t = 0.0_f64;
    let mut y = p0;
    let mut out_index: u64 = 1;
    let mut next_out = next_output_time(out_index, opts.dt_out, t_end, sigma);
    let mut h_abs = (opts.max_step.min(opts.dt_out) * 0.25).min(t_end.abs());
    let h_floor = 1e-14 * t_end.abs().max(1.0);

    while (t_end - t) * sigma > 1e-12 * t_end.abs().max(1.0) {
        let gap = (next_out - t).abs();
        let step = h_abs.min(opts.max_step).min(gap).max(h_floor);
        let h = sigma * step;
        let result = dp_step(eval, y, h, opts.rtol, opts.atol);

        if result.err <= 1.0 {
            t += h;
            y = result.y_new;
            traj.stats.steps += 1;
            traj.stats.max_error_estimate = traj.stats.max_error_estimate.max(result.err);
            match projection {
                Projection::None => {}
                Projection::Ball { radius } => {
                    let r = y.norm();
                    if r > radius * (1.0 + 1e-6) {
                        return Err(Error::Escape {
                            t,
                            excess: r - radius,
                        });
                    }
                    if r > radius * (1.0 + 1e-12) {
                        y *= radius / r;
                    }
                }
                Projection::Sphere { radius } => {
                    let r = y.norm();
                    if r > 0.0 {
                        y *= radius / r;
                    }
                }
            }
            if (next_out - t).abs() <= 1e-9 * opts.dt_out.max(1e-9) {
                traj.samples.push((t, y));
                out_index += 1;
                next_out = next_output_time(out_index, opts.dt_out, t_end, sigma);
            }
        } else {
            traj.stats.rejected += 1;
        }

        let factor = if result.err > 0.0 {
            (0.9 * result.err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h_abs = (step * factor).min(opts.max_step);
        if h_abs < h_floor {
            return Err(Error::StepUnderflow { t, h: h_abs });
        }
    }
    if traj
        .samples
        .last()
        .map(|&(ts, _)| (ts - t).abs() > 1e-9)
        .unwrap_or(true)
    {
        traj.samples.push((t, y));
    }
    Ok(traj)
}

fn next_output_time(index: u64, dt_out: f64, t_end: f64, sigma: f64) -> f64 {
    let cand = sigma * (index as f64) * dt_out;
    if cand.abs() >= t_end.abs() {
        t_end
    } else {
        cand
    }
}

/// Endpoint of the flow map φ_T(p), in raw coordinates.
pub fn flow_map(field: &BeltramiField, p: Vec3, t_end: f64, tol: f64) -> Result<Vec3> {
    let opts = IntegratorOptions::endpoint(tol, field.domain().scale(), t_end);
    Ok(integrate_with(field, p, t_end, &opts)?.end_point())
}

// ---------------------------------------------------------------------------
// Classification

/// Cubic Hermite interpolation of a trajectory segment.
fn hermite(p0: Vec3, v0: Vec3, p1: Vec3, v1: Vec3, dt: f64, s: f64) -> Vec3 {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    p0 * h00 + v0 * (h10 * dt) + p1 * h01 + v1 * (h11 * dt)
}

/// Minimize the distance to `target` over one Hermite segment by golden
/// section; returns (parameter, distance).
fn min_distance_on_segment(
    domain: &Domain,
    p0: Vec3,
    v0: Vec3,
    p1: Vec3,
    v1: Vec3,
    dt: f64,
    target: Vec3,
) -> (f64, f64) {
    let g = |s: f64| domain.distance_unchecked(hermite(p0, v0, p1, v1, dt, s), target);
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let (mut a, mut b) = (0.0_f64, 1.0_f64);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (g(c), g(d));
    for _ in 0..40 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = g(d);
        }
    }
    let s = 0.5 * (a + b);
    let dist = g(s).min(g(0.0)).min(g(1.0));
    (s, dist)
}

/// One refined distance-to-target event inside a trajectory.
#[derive(Debug, Clone, Copy)]
struct ReturnEvent {
    time: f64,
    distance: f64,
}

/// Refined local minima of distance-to-`target` with distance below `eps`,
/// restricted to |t| in [t_min, ∞). Runs of consecutive below-threshold
/// samples merge into one event.
fn return_events(
    field: &BeltramiField,
    traj: &Trajectory,
    target: Vec3,
    eps: f64,
    t_min: f64,
) -> Vec<ReturnEvent> {
    let domain = field.domain();
    let n = traj.samples.len();
    if n < 2 {
        return Vec::new();
    }
    let dist: Vec<f64> = traj
        .samples
        .iter()
        .map(|&(_, p)| domain.distance_unchecked(p, target))
        .collect();

    let mut refined: Vec<ReturnEvent> = Vec::new();
    for i in 0..n - 1 {
        let (t0, p0) = traj.samples[i];
        let (t1, p1) = traj.samples[i + 1];
        if t1.abs() < t_min {
            continue;
        }
        let seg_len = (p1 - p0).norm();
        if dist[i].min(dist[i + 1]) > eps + seg_len {
            continue;
        }
        let dt = t1 - t0;
        let v0 = field.eval(p0);
        let v1 = field.eval(p1);
        let (s, d) = min_distance_on_segment(domain, p0, v0, p1, v1, dt, target);
        if d < eps {
            let t = t0 + s * dt;
            if t.abs() >= t_min {
                refined.push(ReturnEvent { time: t, distance: d });
            }
        }
    }
    refined.sort_by(|a, b| a.time.abs().total_cmp(&b.time.abs()));

    // merge refinements belonging to the same dip
    let window = 2.0 * DEFAULT_DT_OUT;
    let mut events: Vec<ReturnEvent> = Vec::new();
    for ev in refined {
        match events.last_mut() {
            Some(last) if (ev.time - last.time).abs() <= window => {
                if ev.distance < last.distance {
                    *last = ev;
                }
            }
            _ => events.push(ev),
        }
    }
    events
}

/// Classify a trajectory: constant by zero speed, periodic by a double
/// return with consistent period, indeterminate on short horizons,
/// otherwise non-periodic.
pub fn classify(
    field: &BeltramiField,
    traj: &Trajectory,
    return_eps: f64,
    min_period: f64,
) -> Classification {
    let zero_speed = 1e-10 * field.scale().max(1e-300);
    if field.eval(traj.start).norm() < zero_speed {
        return Classification::Constant;
    }
    if traj.duration() < 2.0 * min_period {
        return Classification::Indeterminate;
    }
    let events = return_events(field, traj, traj.start, return_eps, min_period);
    if events.len() >= 2 {
        let t1 = events[0].time.abs();
        let t2 = events[1].time.abs() - t1;
        if (t2 - t1).abs() <= 0.01 * t1 {
            return Classification::Periodic { period: t1 };
        }
    }
    Classification::NonPeriodic
}

// ---------------------------------------------------------------------------
// Recurrence ensemble

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReturnStat {
    pub distance: f64,
    pub time: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointRecord {
    pub start: [f64; 3],
    pub forward: Option<ReturnStat>,
    pub backward: Option<ReturnStat>,
    pub forward_recurrent: bool,
    pub backward_recurrent: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecurrenceReport {
    pub field: String,
    pub n: usize,
    pub horizon: f64,
    pub eps: f64,
    pub seed: u64,
    pub recurrent_fraction_forward: f64,
    pub recurrent_fraction_backward: f64,
    pub points: Vec<PointRecord>,
}

#[derive(Debug, Clone, Copy)]
pub struct RecurrenceOptions {
    pub tol: f64,
    pub dt_out: f64,
}

impl Default for RecurrenceOptions {
    fn default() -> Self {
        RecurrenceOptions {
            tol: 1e-8,
            dt_out: DEFAULT_DT_OUT,
        }
    }
}

/// Best (smallest) distance back to `start` over |t| ∈ [horizon/4, horizon].
fn best_return(
    field: &BeltramiField,
    traj: &Trajectory,
    start: Vec3,
    window_lo: f64,
) -> ReturnStat {
    let domain = field.domain();
    let n = traj.samples.len();
    let dist: Vec<f64> = traj
        .samples
        .iter()
        .map(|&(_, p)| domain.distance_unchecked(p, start))
        .collect();

    let mut best = ReturnStat {
        distance: f64::INFINITY,
        time: 0.0,
    };
    for i in 0..n {
        let (t, _) = traj.samples[i];
        if t.abs() >= window_lo && dist[i] < best.distance {
            best = ReturnStat {
                distance: dist[i],
                time: t,
            };
        }
    }
    // refine segments that could dip below the sample-level minimum
    for i in 0..n.saturating_sub(1) {
        let (t0, p0) = traj.samples[i];
        let (t1, p1) = traj.samples[i + 1];
        if t1.abs() < window_lo {
            continue;
        }
        let seg_len = (p1 - p0).norm();
        if dist[i].min(dist[i + 1]) > best.distance + seg_len {
            continue;
        }
        let dt = t1 - t0;
        let v0 = field.eval(p0);
        let v1 = field.eval(p1);
        let (s, d) = min_distance_on_segment(domain, p0, v0, p1, v1, dt, start);
        let t = t0 + s * dt;
        if d < best.distance && t.abs() >= window_lo {
            best = ReturnStat { distance: d, time: t };
        }
    }
    best
}

/// Monte-Carlo recurrence proxy: sample `n` starts, integrate to ±T, and
/// record the best return distance over |t| ∈ [T/4, T] in each direction.
pub fn recurrence_experiment(
    field: &BeltramiField,
    n: usize,
    horizon: f64,
    eps: f64,
    seed: u64,
    opts: &RecurrenceOptions,
) -> Result<RecurrenceReport> {
    if n == 0 || horizon <= 0.0 || eps <= 0.0 {
        return Err(Error::invalid(
            "flow",
            "recurrence_experiment",
            "need n ≥ 1, T > 0, eps > 0",
        ));
    }
    let starts = field.domain().sample_uniform(n, seed);
    let window_lo = horizon / 4.0;
    let mut int_opts = IntegratorOptions::new(opts.tol, field.domain().scale());
    int_opts.dt_out = opts.dt_out;
    int_opts.max_step = opts.dt_out;

    let points: Vec<PointRecord> = starts
        .par_iter()
        .map(|&p| {
            let mut record = PointRecord {
                start: [p.x, p.y, p.z],
                forward: None,
                backward: None,
                forward_recurrent: false,
                backward_recurrent: false,
                error: None,
            };
            for (dir, sign) in [(0, 1.0), (1, -1.0)] {
                match integrate_with(field, p, sign * horizon, &int_opts) {
                    Ok(traj) => {
                        let stat = best_return(field, &traj, p, window_lo);
                        let recurrent = stat.distance < eps;
                        if dir == 0 {
                            record.forward = Some(stat);
                            record.forward_recurrent = recurrent;
                        } else {
                            record.backward = Some(stat);
                            record.backward_recurrent = recurrent;
                        }
                    }
                    Err(e) => {
                        record.error = Some(e.to_string());
                    }
                }
            }
            record
        })
        .collect();

    let nf = points.iter().filter(|r| r.forward_recurrent).count();
    let nb = points.iter().filter(|r| r.backward_recurrent).count();
    Ok(RecurrenceReport {
        field: field.name().to_string(),
        n,
        horizon,
        eps,
        seed,
        recurrent_fraction_forward: nf as f64 / n as f64,
        recurrent_fraction_backward: nb as f64 / n as f64,
        points,
    })
}

// ---------------------------------------------------------------------------
// Volume preservation

/// |det Dφ_T − 1| with the flow-map Jacobian taken by central differences
/// of 6 auxiliary trajectories from p ± h·e_i.
pub fn volume_preservation_check(
    field: &BeltramiField,
    p: Vec3,
    t_end: f64,
    h: f64,
) -> Result<f64> {
    if t_end == 0.0 {
        return Ok(0.0); // φ_0 is the identity
    }
    let tol = 1e-13;
    let mut m = crate::Mat3::zeros();
    for j in 0..3 {
        let mut dp = Vec3::zeros();
        dp[j] = h;
        let fwd = flow_map(field, p + dp, t_end, tol)?;
        let bwd = flow_map(field, p - dp, t_end, tol)?;
        let col = (fwd - bwd) / (2.0 * h);
        for i in 0..3 {
            m[(i, j)] = col[i];
        }
    }
    Ok((m.determinant() - 1.0).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{catalog_lookup, expr_field_from_source, scale_field};
    use std::f64::consts::PI;

    fn degenerate() -> BeltramiField {
        catalog_lookup("abc:1,0,-1").unwrap()
    }

    #[test]
    fn zero_start_stays_constant() {
        let f = degenerate();
        let p = Vec3::new(0.0, 0.0, PI / 2.0);
        let traj = integrate(&f, p, 10.0, 1e-10).unwrap();
        assert!((traj.end_point() - p).norm() < 1e-12);
        let c = classify(&f, &traj, 0.05, 1.0);
        assert_eq!(c, Classification::Constant);
    }

    #[test]
    fn first_integral_is_conserved() {
        let f = degenerate();
        let h = |p: Vec3| p.z.sin() - p.y.cos();
        let p0 = Vec3::new(0.0, 1.0, 1.0);
        let traj = integrate(&f, p0, 100.0, 1e-10).unwrap();
        let h0 = h(p0);
        let drift = traj
            .samples
            .iter()
            .map(|&(_, p)| (h(p) - h0).abs())
            .fold(0.0, f64::max);
        assert!(drift < 1e-6, "first-integral drift {drift}");
    }

    #[test]
    fn spheromak_axis_moves_toward_north_pole() {
        let f = catalog_lookup("spheromak:1,1").unwrap();
        let traj = integrate(&f, Vec3::new(0.0, 0.0, 0.5), 3.0, 1e-10).unwrap();
        let mut prev = 0.5;
        for &(t, p) in traj.samples.iter().skip(1) {
            assert!(p.z > prev, "z not increasing at t={t}");
            assert!(p.x.abs() < 1e-9 && p.y.abs() < 1e-9);
            prev = p.z;
        }
        assert!(traj.end_point().z > 0.5);
    }

    #[test]
    fn ball_trajectories_stay_inside() {
        let f = catalog_lookup("spheromak:1,1").unwrap();
        for p in f.domain().sample_uniform(10, 3) {
            let traj = integrate(&f, p, 20.0, 1e-8).unwrap();
            for &(_, q) in &traj.samples {
                assert!(q.norm() <= 1.0 + 1e-9, "|q| = {} at {q:?}", q.norm());
            }
        }
    }

    #[test]
    fn time_reversal_returns_to_start() {
        let f = catalog_lookup("abc:1,1,1").unwrap();
        for p in f.domain().sample_uniform(5, 21) {
            let fwd = flow_map(&f, p, 10.0, 1e-12).unwrap();
            let back = flow_map(&f, fwd, -10.0, 1e-12).unwrap();
            let defect = (back - p).norm();
            assert!(defect < 1e-6 * f.scale(), "defect {defect}");
        }
    }

    #[test]
    fn flow_property_composition() {
        let f = degenerate();
        let p = Vec3::new(0.4, 2.0, 0.9);
        for (s, t) in [(1.0, 1.0), (1.0, 2.0), (2.0, 1.0)] {
            let direct = flow_map(&f, p, s + t, 1e-12).unwrap();
            let mid = flow_map(&f, p, t, 1e-12).unwrap();
            let composed = flow_map(&f, mid, s, 1e-12).unwrap();
            assert!(
                (direct - composed).norm() < 1e-8,
                "composition defect {} for s={s}, t={t}",
                (direct - composed).norm()
            );
        }
    }

    #[test]
    fn short_horizon_is_indeterminate() {
        let f = catalog_lookup("abc:1,1,1").unwrap();
        let traj = integrate(&f, Vec3::zeros(), 1.0, 1e-8).unwrap();
        let c = classify(&f, &traj, 0.05, 1.0);
        assert_eq!(c, Classification::Indeterminate);
    }

    #[test]
    fn periodic_orbit_is_detected() {
        // circular field line of X = (−y, x, 0) around the z axis,
        // shifted to live inside the torus cell; period 2π
        let f = expr_field_from_source("-(y-3), x-3, 0", Domain::torus_2pi()).unwrap();
        let start = Vec3::new(4.0, 3.0, 1.0);
        let traj = integrate(&f, start, 20.0, 1e-10).unwrap();
        match classify(&f, &traj, 0.01, 1.0) {
            Classification::Periodic { period } => {
                assert!((period - 2.0 * PI).abs() < 1e-3, "period {period}");
            }
            other => panic!("expected periodic, got {other:?}"),
        }
    }

    #[test]
    fn classification_is_scale_invariant() {
        let f = degenerate();
        let doubled = scale_field(&f, 2.0).unwrap();
        let p = Vec3::new(0.0, 1.0, 1.0);
        let t1 = integrate(&f, p, 60.0, 1e-10).unwrap();
        let t2 = integrate(&doubled, p, 30.0, 1e-10).unwrap();
        let c1 = classify(&f, &t1, 0.05, 1.0);
        let c2 = classify(&doubled, &t2, 0.05, 0.5);
        let same = matches!(
            (c1, c2),
            (Classification::Constant, Classification::Constant)
                | (Classification::Periodic { .. }, Classification::Periodic { .. })
                | (Classification::NonPeriodic, Classification::NonPeriodic)
                | (Classification::Indeterminate, Classification::Indeterminate)
        );
        assert!(same, "{c1:?} vs {c2:?}");
    }

    #[test]
    fn volume_is_preserved_for_divergence_free_fields() {
        let f = degenerate();
        let defect = volume_preservation_check(&f, Vec3::new(1.0, 2.0, 3.0), 10.0, 1e-4).unwrap();
        assert!(defect < 1e-4, "defect {defect}");

        let t0 = volume_preservation_check(&f, Vec3::new(1.0, 2.0, 3.0), 0.0, 1e-4).unwrap();
        assert!(t0 == 0.0);
    }

    #[test]
    fn expanding_control_has_exponential_determinant() {
        // X = (x, 0, 0): Dφ_T = diag(e^T, 1, 1)
        let f = expr_field_from_source("x,0,0", Domain::torus_2pi()).unwrap();
        let v = volume_preservation_check(&f, Vec3::new(1.0, 1.0, 1.0), 10.0, 1e-4).unwrap();
        let expected = (10.0_f64).exp() - 1.0;
        assert!(
            (v - expected).abs() / expected < 1e-3,
            "got {v}, expected ≈ {expected}"
        );
    }

    #[test]
    fn recurrence_trivial_for_zero_speed_points() {
        let f = degenerate();
        // a point exactly on the zero circle
        let p = Vec3::new(1.0, 0.0, PI / 2.0);
        let traj = integrate(&f, p, 40.0, 1e-8).unwrap();
        let stat = best_return(&f, &traj, p, 10.0);
        assert!(stat.distance < 1e-12);
    }

    #[test]
    fn recurrence_report_is_deterministic() {
        let f = degenerate();
        let opts = RecurrenceOptions::default();
        let a = recurrence_experiment(&f, 8, 30.0, 0.2, 5, &opts).unwrap();
        let b = recurrence_experiment(&f, 8, 30.0, 0.2, 5, &opts).unwrap();
        for (x, y) in a.points.iter().zip(b.points.iter()) {
            assert_eq!(x.start, y.start);
            assert_eq!(
                x.forward.map(|s| (s.distance, s.time)),
                y.forward.map(|s| (s.distance, s.time))
            );
        }
    }
}
