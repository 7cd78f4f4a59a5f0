//! The zero set K of a field and its geometry: Newton-refined zero
//! locations, the order of each zero, the rank/symmetry/trace identities of
//! the derived matrix Dh at interior zeros, box-counting dimension of the
//! zero cloud, and the nodal-domain count of the complement.

use nalgebra::SVD;
use rayon::prelude::*;
use serde::Serialize;

use crate::calculus::{fd_partial, FdScheme};
use crate::domain::{axis_distance, Domain, Vec3};
use crate::error::Error;
use crate::field::BeltramiField;
use crate::{Mat3, Result};

/// Default relative refinement tolerance for Newton on ‖X‖.
pub const DEFAULT_REFINE_TOL: f64 = 1e-10;

/// Singular values below this fraction of σ_max count as zero for rank.
pub const RANK_THRESHOLD: f64 = 1e-6;

/// Derived-field data at a zero: `M_ij = ∂_j h^i` with `h^i = ∂^β X^i`.
#[derive(Debug, Clone, Serialize)]
pub struct RankData {
    pub matrix: [[f64; 3]; 3],
    pub singular_values: [f64; 3],
    pub rank: usize,
    pub symmetry_defect: f64,
    pub trace_abs: f64,
    pub frobenius: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZeroRecord {
    pub location: [f64; 3],
    pub residual: f64,
    /// Order of the zero; `None` when undetermined up to the order cap.
    pub order: Option<usize>,
    /// Witness multi-index β with |β| = order − 1.
    pub beta: Option<[usize; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank_data: Option<RankData>,
    pub cluster: usize,
}

impl ZeroRecord {
    pub fn point(&self) -> Vec3 {
        Vec3::new(self.location[0], self.location[1], self.location[2])
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ZeroSet {
    pub records: Vec<ZeroRecord>,
    pub n_clusters: usize,
    pub grid_res: usize,
    pub cell_size: f64,
    pub cluster_eps: f64,
    /// Continuation-densified curve points (geometry only, not analyzed).
    #[serde(skip)]
    pub cloud: Vec<Vec3>,
    pub cloud_size: usize,
    /// (scale, occupied boxes) pairs, largest scale first.
    pub box_counts: Vec<(f64, usize)>,
    pub fitted_dimension: Option<f64>,
}

impl ZeroSet {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// All positions: refined records plus the densified cloud.
    pub fn all_points(&self) -> Vec<Vec3> {
        let mut pts: Vec<Vec3> = self.records.iter().map(|r| r.point()).collect();
        pts.extend(self.cloud.iter().copied());
        pts
    }

    pub fn cluster_points(&self, cluster: usize) -> Vec<Vec3> {
        self.records
            .iter()
            .filter(|r| r.cluster == cluster)
            .map(|r| r.point())
            .collect()
    }
}

/// Pseudoinverse Newton step solving `J·s ≈ fx`; rank-deficient Jacobians
/// (zero curves) fall back to the least-squares step automatically.
fn pinv_step(j: Mat3, fx: Vec3) -> Vec3 {
    let svd = SVD::new(j, true, true);
    let sigma_max = svd.singular_values[0];
    let eps = (RANK_THRESHOLD * sigma_max).max(1e-300);
    svd.solve(&fx, eps).unwrap_or_else(|_| Vec3::zeros())
}

/// Damped Gauss–Newton from `seed` to residual below `tol_abs`.
fn newton_refine(field: &BeltramiField, seed: Vec3, tol_abs: f64) -> Option<Vec3> {
    let mut x = seed;
    let mut fx = field.eval(x);
    for _ in 0..80 {
        if fx.norm() < tol_abs {
            return Some(clamp_to_domain(field.domain(), x));
        }
        let j = field.jacobian(x);
        let step = pinv_step(j, fx);
        if !step.iter().all(|v| v.is_finite()) || step.norm() == 0.0 {
            return None;
        }
        // 0.5-backtracking on the residual norm
        let f0 = fx.norm();
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..12 {
            let cand = clamp_to_domain(field.domain(), x - step * t);
            let fc = field.eval(cand);
            if fc.norm() < (1.0 - 0.25 * t) * f0 {
                x = cand;
                fx = fc;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            return None;
        }
    }
    if fx.norm() < tol_abs {
        Some(clamp_to_domain(field.domain(), x))
    } else {
        None
    }
}

fn clamp_to_domain(domain: &Domain, p: Vec3) -> Vec3 {
    match domain {
        Domain::Torus3 { .. } => p,
        Domain::Ball3 { radius } => {
            let r = p.norm();
            if r > *radius {
                p * (*radius / r)
            } else {
                p
            }
        }
    }
}

/// Max Frobenius norm of the Jacobian over a coarse deterministic lattice;
/// converts residual magnitudes to distances for seeding thresholds.
fn jacobian_scale(field: &BeltramiField) -> f64 {
    let n = 5;
    let mut max = 0.0_f64;
    match field.domain() {
        Domain::Torus3 { periods } => {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let p = Vec3::new(
                            (i as f64 + 0.5) / n as f64 * periods[0],
                            (j as f64 + 0.5) / n as f64 * periods[1],
                            (k as f64 + 0.5) / n as f64 * periods[2],
                        );
                        max = max.max(field.jacobian(p).norm());
                    }
                }
            }
        }
        Domain::Ball3 { radius } => {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let f = |idx: usize| ((idx as f64 + 0.5) / n as f64 * 2.0 - 1.0) * radius;
                        let p = Vec3::new(f(i), f(j), f(k));
                        if p.norm() <= 0.95 * radius {
                            max = max.max(field.jacobian(p).norm());
                        }
                    }
                }
            }
        }
    }
    max.max(1e-300)
}

struct Grid {
    origin: Vec3,
    cell: f64,
    n: usize,
}

fn domain_grid(domain: &Domain, grid_res: usize) -> Grid {
    match domain {
        Domain::Torus3 { periods } => Grid {
            origin: Vec3::zeros(),
            // wrapping assumes a cubic cell; catalog tori are cubic
            cell: periods[0] / grid_res as f64,
            n: grid_res,
        },
        Domain::Ball3 { radius } => Grid {
            origin: Vec3::new(-radius, -radius, -radius),
            cell: 2.0 * radius / grid_res as f64,
            n: grid_res,
        },
    }
}

/// Locate the zero set: grid cells with locally small ‖X‖ seed a damped
/// Newton, converged points are deduplicated and clustered by ε-graph
/// connectivity with ε = 2·cell size.
pub fn find_zeros(field: &BeltramiField, grid_res: usize, refine_tol: f64) -> Result<ZeroSet> {
    if grid_res < 8 {
        return Err(Error::invalid("nodal", "find_zeros", "grid_res must be ≥ 8"));
    }
    if field.is_zero_field() {
        return Err(Error::invalid(
            "nodal",
            "find_zeros",
            "the zero vector field is excluded",
        ));
    }
    let domain = field.domain();
    let grid = domain_grid(domain, grid_res);
    let tol_abs = refine_tol * field.scale();
    let threshold = 2.0 * grid.cell * 3.0_f64.sqrt() * jacobian_scale(field);

    // corner lattice shared between cells
    let n = grid.n;
    let nc = n + 1;
    let corner = |i: usize, j: usize, k: usize| -> Vec3 {
        grid.origin + Vec3::new(i as f64, j as f64, k as f64) * grid.cell
    };
    let corner_norms: Vec<f64> = (0..nc * nc * nc)
        .into_par_iter()
        .map(|idx| {
            let i = idx / (nc * nc);
            let j = (idx / nc) % nc;
            let k = idx % nc;
            let p = corner(i, j, k);
            if domain.contains(p) {
                field.eval(p).norm()
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let cn = |i: usize, j: usize, k: usize| corner_norms[(i * nc + j) * nc + k];

    let seeds: Vec<Vec3> = (0..n * n * n)
        .into_par_iter()
        .filter_map(|idx| {
            let i = idx / (n * n);
            let j = (idx / n) % n;
            let k = idx % n;
            let center = grid.origin
                + Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * grid.cell;
            let mut best = f64::INFINITY;
            let mut best_p = center;
            if domain.contains(center) {
                best = field.eval(center).norm();
            }
            for (di, dj, dk) in [
                (0, 0, 0),
                (0, 0, 1),
                (0, 1, 0),
                (0, 1, 1),
                (1, 0, 0),
                (1, 0, 1),
                (1, 1, 0),
                (1, 1, 1),
            ] {
                let v = cn(i + di, j + dj, k + dk);
                if v < best {
                    best = v;
                    best_p = corner(i + di, j + dj, k + dk);
                }
            }
            (best < threshold).then_some(best_p)
        })
        .collect();

    let refined: Vec<Vec3> = seeds
        .par_iter()
        .filter_map(|&s| newton_refine(field, s, tol_abs))
        .map(|p| domain.canonical(p))
        .collect();

    // dedup at a resolution far below the cluster scale
    let dedup_eps = (1e-6 * domain.scale()).max(1e-300);
    let mut kept: Vec<Vec3> = Vec::new();
    {
        let mut buckets: std::collections::HashMap<(i64, i64, i64), Vec<usize>> =
            std::collections::HashMap::new();
        for p in refined {
            let key = (
                (p.x / dedup_eps).floor() as i64,
                (p.y / dedup_eps).floor() as i64,
                (p.z / dedup_eps).floor() as i64,
            );
            let mut duplicate = false;
            'search: for dx in -1..=1i64 {
                for dy in -1..=1i64 {
                    for dz in -1..=1i64 {
                        if let Some(ids) = buckets.get(&(key.0 + dx, key.1 + dy, key.2 + dz)) {
                            for &id in ids {
                                if domain.distance_unchecked(kept[id], p) < dedup_eps {
                                    duplicate = true;
                                    break 'search;
                                }
                            }
                        }
                    }
                }
            }
            if !duplicate {
                buckets.entry(key).or_default().push(kept.len());
                kept.push(p);
            }
        }
    }

    let cluster_eps = 2.0 * grid.cell;
    let labels = cluster_points(&kept, domain, cluster_eps);
    let n_clusters = labels.iter().copied().max().map(|m| m + 1).unwrap_or(0);

    let records: Vec<ZeroRecord> = kept
        .par_iter()
        .zip(labels.par_iter())
        .map(|(&p, &cluster)| {
            let residual = field.eval(p).norm();
            let (order, beta) = match zero_order(field, p, 6) {
                Ok((m, b)) => (Some(m), Some(b)),
                Err(_) => (None, None),
            };
            let rank_data = beta.and_then(|b| rank_identities_at_zero(field, p, b).ok());
            ZeroRecord {
                location: [p.x, p.y, p.z],
                residual,
                order,
                beta,
                rank_data,
                cluster,
            }
        })
        .collect();

    Ok(ZeroSet {
        records,
        n_clusters,
        grid_res,
        cell_size: grid.cell,
        cluster_eps,
        cloud: Vec::new(),
        cloud_size: 0,
        box_counts: Vec::new(),
        fitted_dimension: None,
    })
}

/// ε-graph connected components via union-find over spatial hash buckets.
fn cluster_points(points: &[Vec3], domain: &Domain, eps: f64) -> Vec<usize> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut a: usize) -> usize {
        while parent[a] != a {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        a
    }
    let keyer = |p: Vec3| {
        (
            (p.x / eps).floor() as i64,
            (p.y / eps).floor() as i64,
            (p.z / eps).floor() as i64,
        )
    };
    let mut buckets: std::collections::HashMap<(i64, i64, i64), Vec<usize>> =
        std::collections::HashMap::new();
    for (id, &p) in points.iter().enumerate() {
        buckets.entry(keyer(p)).or_default().push(id);
    }
    // canonical points cluster across the torus seam through wrapped images
    let key_images = |p: Vec3| -> Vec<(i64, i64, i64)> {
        let mut keys = vec![keyer(p)];
        if let Domain::Torus3 { periods } = domain {
            for sx in [-1.0, 0.0, 1.0] {
                for sy in [-1.0, 0.0, 1.0] {
                    for sz in [-1.0, 0.0, 1.0] {
                        if sx == 0.0 && sy == 0.0 && sz == 0.0 {
                            continue;
                        }
                        let q =
                            p + Vec3::new(sx * periods[0], sy * periods[1], sz * periods[2]);
                        keys.push(keyer(q));
                    }
                }
            }
        }
        keys.sort_unstable();
        keys.dedup();
        keys
    };
    for (id, &p) in points.iter().enumerate() {
        for base in key_images(p) {
            for dx in -1..=1i64 {
                for dy in -1..=1i64 {
                    for dz in -1..=1i64 {
                        let key = (base.0 + dx, base.1 + dy, base.2 + dz);
                        if let Some(ids) = buckets.get(&key) {
                            for &other in ids {
                                if other != id
                                    && domain.distance_unchecked(points[other], p) <= eps
                                {
                                    let ra = find(&mut parent, id);
                                    let rb = find(&mut parent, other);
                                    if ra != rb {
                                        parent[ra.max(rb)] = ra.min(rb);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    // relabel roots in first-appearance order
    let mut label_of_root: std::collections::HashMap<usize, usize> =
        std::collections::HashMap::new();
    let mut labels = vec![0usize; n];
    for id in 0..n {
        let root = find(&mut parent, id);
        let next = label_of_root.len();
        let lbl = *label_of_root.entry(root).or_insert(next);
        labels[id] = lbl;
    }
    labels
}

// ---------------------------------------------------------------------------
// Order of a zero and rank identities

/// Value of `∂^α X^component` at p: analytic when the backend has one,
/// finite differences otherwise. |α| = 1 always uses the analytic Jacobian.
fn partial_value(
    field: &BeltramiField,
    component: usize,
    alpha: [usize; 3],
    p: Vec3,
) -> Result<(f64, bool)> {
    let order: usize = alpha.iter().sum();
    if order == 1 {
        let axis = alpha.iter().position(|&a| a == 1).unwrap();
        return Ok((field.jacobian(p)[(component, axis)], true));
    }
    if let Some(v) = field.partial(component, alpha, p) {
        return Ok((v, true));
    }
    if order > crate::expr::MAX_SYMBOLIC_ORDER {
        log::warn!(
            "nodal: falling back to finite differences for |alpha| = {order} > symbolic cap"
        );
    }
    let scheme = FdScheme::for_domain(field.domain());
    let f = move |q: Vec3| field.eval(q)[component];
    let v = fd_partial(&f, alpha, p, &scheme, field.domain())?;
    Ok((v, false))
}

fn multi_indices(order: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for a in 0..=order {
        for b in 0..=(order - a) {
            out.push([a, b, order - a - b]);
        }
    }
    out
}

/// Order of a zero: the smallest m ≤ max_order with a nonvanishing m-th
/// partial of some component. Returns the order and a witness β, |β| = m−1.
pub fn zero_order(field: &BeltramiField, p: Vec3, max_order: usize) -> Result<(usize, [usize; 3])> {
    let scale = field.scale().max(1e-300);
    let lam = field.lambda().abs().max(1.0);
    for m in 1..=max_order {
        let tol_analytic = 1e-7 * scale * lam.powi(m as i32);
        let tol_fd = 1e-4 * scale * lam.powi(m as i32);
        let mut best: Option<(f64, [usize; 3])> = None;
        for alpha in multi_indices(m) {
            for component in 0..3 {
                let (v, analytic) = partial_value(field, component, alpha, p)?;
                let tol = if analytic { tol_analytic } else { tol_fd };
                if v.abs() > tol && best.map(|(b, _)| v.abs() > b).unwrap_or(true) {
                    best = Some((v.abs(), alpha));
                }
            }
        }
        if let Some((_, alpha)) = best {
            let axis = alpha.iter().position(|&a| a > 0).unwrap();
            let mut beta = alpha;
            beta[axis] -= 1;
            return Ok((m, beta));
        }
    }
    Err(Error::OrderUndetermined {
        max_order,
        point: [p.x, p.y, p.z],
    })
}

/// The matrix `M_ij = ∂_j h^i` with `h^i = ∂^β X^i` at an interior zero,
/// with its singular values, rank, symmetry defect and |trace|.
pub fn rank_identities_at_zero(
    field: &BeltramiField,
    p: Vec3,
    beta: [usize; 3],
) -> Result<RankData> {
    if let Domain::Ball3 { radius } = field.domain() {
        if p.norm() >= radius * (1.0 - 1e-9) {
            return Err(Error::InteriorOnly([p.x, p.y, p.z]));
        }
    }
    let mut m = Mat3::zeros();
    if beta == [0, 0, 0] {
        m = field.jacobian(p);
    } else {
        for i in 0..3 {
            for j in 0..3 {
                let mut alpha = beta;
                alpha[j] += 1;
                let (v, _) = partial_value(field, i, alpha, p)?;
                m[(i, j)] = v;
            }
        }
    }
    let svd = SVD::new(m, false, false);
    let sv = svd.singular_values;
    let sigma_max = sv[0].max(1e-300);
    let rank = (0..3).filter(|&i| sv[i] > RANK_THRESHOLD * sigma_max).count();
    let mut symmetry_defect = 0.0_f64;
    for i in 0..3 {
        for j in 0..3 {
            symmetry_defect = symmetry_defect.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    let mut matrix = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            matrix[i][j] = m[(i, j)];
        }
    }
    Ok(RankData {
        matrix,
        singular_values: [sv[0], sv[1], sv[2]],
        rank,
        symmetry_defect,
        trace_abs: m.trace().abs(),
        frobenius: m.norm(),
    })
}

// ---------------------------------------------------------------------------
// Continuation densification and box counting

/// The unit null direction of the Jacobian when the zero lies on a curve
/// (σ₃ ≈ 0 but σ₂ is not), otherwise `None`.
fn curve_direction(field: &BeltramiField, p: Vec3) -> Option<Vec3> {
    let j = field.jacobian(p);
    let svd = SVD::new(j, false, true);
    let sv = svd.singular_values;
    let sigma_max = sv[0].max(1e-300);
    if sv[2] < RANK_THRESHOLD * sigma_max && sv[1] > RANK_THRESHOLD * sigma_max {
        let vt = svd.v_t.unwrap();
        Some(Vec3::new(vt[(2, 0)], vt[(2, 1)], vt[(2, 2)]))
    } else {
        None
    }
}

/// Walk a zero curve by stepping along the Jacobian null direction and
/// re-Newtoning, until the loop closes, the walk leaves the domain, or a
/// point cap is reached.
fn walk_curve(
    field: &BeltramiField,
    start: Vec3,
    step: f64,
    cap: usize,
    tol_abs: f64,
) -> Vec<Vec3> {
    let domain = field.domain();
    let mut out = Vec::new();
    for sign in [1.0, -1.0] {
        let mut x = start;
        let mut dir = match curve_direction(field, x) {
            Some(d) => d * sign,
            None => return out,
        };
        for count in 0..cap {
            let predictor = x + dir * step;
            let Some(refined) = newton_refine(field, predictor, tol_abs) else {
                break;
            };
            if !domain.contains(refined) {
                break;
            }
            if count > 8 && domain.distance_unchecked(refined, start) < 0.5 * step {
                return out; // loop closed; the other direction would retrace it
            }
            out.push(refined);
            let Some(next_dir) = curve_direction(field, refined) else {
                break;
            };
            dir = if next_dir.dot(&dir) >= 0.0 {
                next_dir
            } else {
                -next_dir
            };
            x = refined;
        }
    }
    out
}

/// Densify curve clusters by continuation until each has at least
/// `target_per_cluster` points (isolated zeros are left as they are).
pub fn densify_curves(field: &BeltramiField, zs: &mut ZeroSet, target_per_cluster: usize) {
    let domain = field.domain();
    let step = domain.scale() / 512.0;
    let tol_abs = DEFAULT_REFINE_TOL * field.scale();
    let mut cloud: Vec<Vec3> = Vec::new();
    for cluster in 0..zs.n_clusters {
        let members = zs.cluster_points(cluster);
        if members.len() >= target_per_cluster {
            continue;
        }
        let rep = members[0];
        if curve_direction(field, rep).is_none() {
            continue; // isolated zero (or a higher-dimensional stratum)
        }
        let walked = walk_curve(field, rep, step, 4 * target_per_cluster, tol_abs);
        cloud.extend(walked.into_iter().map(|p| domain.canonical(p)));
    }
    zs.cloud.extend(cloud);
    zs.cloud_size = zs.cloud.len();
}

/// The geometric scale ladder L/2^k, k = 2..=7.
pub fn default_scales(domain: &Domain) -> Vec<f64> {
    let l = domain.scale();
    (2..=7).map(|k| l / 2.0_f64.powi(k)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterDimension {
    pub cluster: usize,
    pub points: usize,
    pub slope: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DimensionReport {
    pub rows: Vec<(f64, usize)>,
    pub aggregate_slope: f64,
    pub per_cluster: Vec<ClusterDimension>,
}

/// Occupied-box counts of a point cloud at the given scales plus the
/// least-squares slope of log N against log(1/ε).
pub fn box_counting_points(
    points: &[Vec3],
    domain: &Domain,
    scales: &[f64],
) -> Result<(Vec<(f64, usize)>, f64)> {
    if points.is_empty() {
        return Err(Error::EmptyZeroSet);
    }
    let usable: Vec<f64> = scales
        .iter()
        .copied()
        .filter(|&s| s > 0.0 && s <= domain.scale())
        .collect();
    if usable.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need ≥ 3 usable scales, got {}",
            usable.len()
        )));
    }
    let origin = match domain {
        Domain::Torus3 { .. } => Vec3::zeros(),
        Domain::Ball3 { radius } => Vec3::new(-radius, -radius, -radius),
    };
    let mut rows: Vec<(f64, usize)> = usable
        .iter()
        .map(|&eps| {
            let mut boxes: std::collections::HashSet<(i64, i64, i64)> =
                std::collections::HashSet::new();
            for &p in points {
                let q = domain.canonical(p) - origin;
                boxes.insert((
                    (q.x / eps).floor() as i64,
                    (q.y / eps).floor() as i64,
                    (q.z / eps).floor() as i64,
                ));
            }
            (eps, boxes.len())
        })
        .collect();
    rows.sort_by(|a, b| b.0.total_cmp(&a.0));

    let xs: Vec<f64> = rows.iter().map(|r| (1.0 / r.0).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| (r.1 as f64).ln()).collect();
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(ys.iter())
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    Ok((rows, sxy / sxx))
}

/// Box-counting dimension of the zero set: aggregate and per-cluster
/// slopes. Writes the aggregate table into the `ZeroSet`.
pub fn box_counting_dimension(
    field: &BeltramiField,
    zs: &mut ZeroSet,
    scales: &[f64],
) -> Result<DimensionReport> {
    if zs.is_empty() {
        return Err(Error::EmptyZeroSet);
    }
    let domain = field.domain().clone();
    if zs.cloud.is_empty() {
        densify_curves(field, zs, 500);
    }
    let (rows, aggregate_slope) = box_counting_points(&zs.all_points(), &domain, scales)?;

    // per-cluster slopes over the records plus nearby cloud points
    let mut per_cluster = Vec::new();
    for cluster in 0..zs.n_clusters {
        let mut pts = zs.cluster_points(cluster);
        let eps = zs.cluster_eps;
        for &c in &zs.cloud {
            if pts
                .iter()
                .any(|&p| domain.distance_unchecked(p, c) <= 4.0 * eps)
            {
                pts.push(c);
            }
        }
        let (_, slope) = box_counting_points(&pts, &domain, scales)?;
        per_cluster.push(ClusterDimension {
            cluster,
            points: pts.len(),
            slope,
        });
    }
    zs.box_counts = rows.clone();
    zs.fitted_dimension = Some(aggregate_slope);
    Ok(DimensionReport {
        rows,
        aggregate_slope,
        per_cluster,
    })
}

// ---------------------------------------------------------------------------
// Nodal domains

#[derive(Debug, Clone, Serialize)]
pub struct NodalReport {
    pub domains: usize,
    pub grid_res: usize,
    pub total_cells: usize,
    pub excluded_cells: usize,
    pub zero_margin: f64,
}

/// Distance from a point to an axis-aligned cell, wrap-aware on the torus.
fn point_cell_distance(domain: &Domain, p: Vec3, lo: Vec3, hi: Vec3) -> f64 {
    let mut acc = 0.0;
    match domain {
        Domain::Torus3 { periods } => {
            for i in 0..3 {
                let x = p[i];
                let d = if within_wrapped(x, lo[i], hi[i], periods[i]) {
                    0.0
                } else {
                    axis_distance(x, lo[i], periods[i]).min(axis_distance(x, hi[i], periods[i]))
                };
                acc += d * d;
            }
        }
        Domain::Ball3 { .. } => {
            for i in 0..3 {
                let d = (lo[i] - p[i]).max(p[i] - hi[i]).max(0.0);
                acc += d * d;
            }
        }
    }
    acc.sqrt()
}

fn within_wrapped(x: f64, lo: f64, hi: f64, period: f64) -> bool {
    let w = |v: f64| v.rem_euclid(period);
    let (x, lo, hi) = (w(x), w(lo), w(hi));
    if lo <= hi {
        x >= lo && x <= hi
    } else {
        x >= lo || x <= hi
    }
}

/// Count connected components of the grid complement of the zero set:
/// cells within `zero_margin` of a refined zero are excluded, the rest are
/// flood-filled with 6-connectivity (periodic wrap on the torus, interior
/// cells only in the ball).
pub fn count_nodal_domains(
    field: &BeltramiField,
    grid_res: usize,
    zero_margin: Option<f64>,
) -> Result<NodalReport> {
    if grid_res < 32 {
        return Err(Error::invalid(
            "nodal",
            "count_nodal_domains",
            "grid_res must be ≥ 32",
        ));
    }
    let domain = field.domain();
    let grid = domain_grid(domain, grid_res);
    let margin = zero_margin.unwrap_or(1.5 * grid.cell * 3.0_f64.sqrt());
    let zeros = find_zeros(field, grid_res, DEFAULT_REFINE_TOL)?;

    let n = grid.n;
    let idx = |i: usize, j: usize, k: usize| (i * n + j) * n + k;

    let mut included = vec![false; n * n * n];
    let mut total = 0usize;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let center = grid.origin
                    + Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * grid.cell;
                let inside = match domain {
                    Domain::Torus3 { .. } => true,
                    Domain::Ball3 { radius } => center.norm() < *radius,
                };
                if inside {
                    included[idx(i, j, k)] = true;
                    total += 1;
                }
            }
        }
    }

    // exclude cells near zeros
    let mut excluded = vec![false; n * n * n];
    let reach = (margin / grid.cell).ceil() as i64 + 1;
    for rec in &zeros.records {
        let p = rec.point();
        let rel = p - grid.origin;
        let ci = (rel.x / grid.cell).floor() as i64;
        let cj = (rel.y / grid.cell).floor() as i64;
        let ck = (rel.z / grid.cell).floor() as i64;
        for di in -reach..=reach {
            for dj in -reach..=reach {
                for dk in -reach..=reach {
                    let (i, j, k) = match domain {
                        Domain::Torus3 { .. } => (
                            (ci + di).rem_euclid(n as i64) as usize,
                            (cj + dj).rem_euclid(n as i64) as usize,
                            (ck + dk).rem_euclid(n as i64) as usize,
                        ),
                        Domain::Ball3 { .. } => {
                            let (i, j, k) = (ci + di, cj + dj, ck + dk);
                            if i < 0
                                || j < 0
                                || k < 0
                                || i >= n as i64
                                || j >= n as i64
                                || k >= n as i64
                            {
                                continue;
                            }
                            (i as usize, j as usize, k as usize)
                        }
                    };
                    if excluded[idx(i, j, k)] || !included[idx(i, j, k)] {
                        continue;
                    }
                    let lo = grid.origin + Vec3::new(i as f64, j as f64, k as f64) * grid.cell;
                    let hi = lo + Vec3::new(grid.cell, grid.cell, grid.cell);
                    if point_cell_distance(domain, p, lo, hi) <= margin {
                        excluded[idx(i, j, k)] = true;
                    }
                }
            }
        }
    }

    let excluded_count = excluded.iter().filter(|&&e| e).count();
    let free = |i: usize, j: usize, k: usize| included[idx(i, j, k)] && !excluded[idx(i, j, k)];
    let any_free = (0..n)
        .any(|i| (0..n).any(|j| (0..n).any(|k| free(i, j, k))));
    if !any_free {
        return Err(Error::DegenerateField);
    }

    // flood fill with 6-connectivity
    let mut visited = vec![false; n * n * n];
    let mut components = 0usize;
    let mut stack: Vec<(usize, usize, usize)> = Vec::new();
    for si in 0..n {
        for sj in 0..n {
            for sk in 0..n {
                if !free(si, sj, sk) || visited[idx(si, sj, sk)] {
                    continue;
                }
                components += 1;
                visited[idx(si, sj, sk)] = true;
                stack.push((si, sj, sk));
                while let Some((i, j, k)) = stack.pop() {
                    let neighbors: [(i64, i64, i64); 6] = [
                        (-1, 0, 0),
                        (1, 0, 0),
                        (0, -1, 0),
                        (0, 1, 0),
                        (0, 0, -1),
                        (0, 0, 1),
                    ];
                    for (di, dj, dk) in neighbors {
                        let (ni, nj, nk) = match domain {
                            Domain::Torus3 { .. } => (
                                (i as i64 + di).rem_euclid(n as i64) as usize,
                                (j as i64 + dj).rem_euclid(n as i64) as usize,
                                (k as i64 + dk).rem_euclid(n as i64) as usize,
                            ),
                            Domain::Ball3 { .. } => {
                                let (a, b, c) = (i as i64 + di, j as i64 + dj, k as i64 + dk);
                                if a < 0
                                    || b < 0
                                    || c < 0
                                    || a >= n as i64
                                    || b >= n as i64
                                    || c >= n as i64
                                {
                                    continue;
                                }
                                (a as usize, b as usize, c as usize)
                            }
                        };
                        if free(ni, nj, nk) && !visited[idx(ni, nj, nk)] {
                            visited[idx(ni, nj, nk)] = true;
                            stack.push((ni, nj, nk));
                        }
                    }
                }
            }
        }
    }

    Ok(NodalReport {
        domains: components,
        grid_res,
        total_cells: total,
        excluded_cells: excluded_count,
        zero_margin: margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{catalog_lookup, expr_field_from_source, scale_field};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn degenerate() -> BeltramiField {
        catalog_lookup("abc:1,0,-1").unwrap()
    }

    /// Distance to the analytic zero circles of abc:1,0,-1:
    /// {(x, 0, π/2)} ∪ {(x, π, 3π/2)}.
    fn circle_distance(p: Vec3) -> f64 {
        let two_pi = 2.0 * PI;
        let d1 = (axis_distance(p.y, 0.0, two_pi).powi(2)
            + axis_distance(p.z, PI / 2.0, two_pi).powi(2))
        .sqrt();
        let d2 = (axis_distance(p.y, PI, two_pi).powi(2)
            + axis_distance(p.z, 3.0 * PI / 2.0, two_pi).powi(2))
        .sqrt();
        d1.min(d2)
    }

    #[test]
    fn degenerate_abc_zeros_lie_on_the_two_circles() {
        let f = degenerate();
        let zs = find_zeros(&f, 48, DEFAULT_REFINE_TOL).unwrap();
        assert!(!zs.records.is_empty());
        assert_eq!(zs.n_clusters, 2, "expected 2 clusters");
        for rec in &zs.records {
            let d = circle_distance(rec.point());
            assert!(d < 1e-8, "zero {:?} is {d:.2e} from the circles", rec.location);
            assert!(rec.residual < DEFAULT_REFINE_TOL * f.scale() * 1.01);
        }
    }

    #[test]
    fn spheromak_interior_has_no_zeros() {
        let f = catalog_lookup("spheromak:1,1").unwrap();
        let zs = find_zeros(&f, 32, DEFAULT_REFINE_TOL).unwrap();
        for rec in &zs.records {
            assert!(
                rec.point().norm() > 1.0 - 1e-3,
                "interior zero at {:?}",
                rec.location
            );
        }
    }

    #[test]
    fn order_one_zero_of_degenerate_abc() {
        let f = degenerate();
        let p = Vec3::new(0.0, 0.0, PI / 2.0);
        let (order, beta) = zero_order(&f, p, 6).unwrap();
        assert_eq!(order, 1);
        assert_eq!(beta, [0, 0, 0]);
    }

    #[test]
    fn order_two_synthetic_zero() {
        let f = expr_field_from_source("x^2,0,0", Domain::torus_2pi()).unwrap();
        let (order, beta) = zero_order(&f, Vec3::zeros(), 6).unwrap();
        assert_eq!(order, 2);
        assert_eq!(beta.iter().sum::<usize>(), 1);
    }

    #[test]
    fn order_one_at_spheromak_boundary_pole() {
        let f = catalog_lookup("spheromak:1,1").unwrap();
        let (order, _) = zero_order(&f, Vec3::new(0.0, 0.0, 1.0), 6).unwrap();
        assert_eq!(order, 1);
    }

    #[test]
    fn rank_identities_at_the_known_zero() {
        let f = degenerate();
        let p = Vec3::new(0.0, 0.0, PI / 2.0);
        let rd = rank_identities_at_zero(&f, p, [0, 0, 0]).unwrap();
        // hand-computed Jacobian [[0,0,0],[0,0,−1],[0,−1,0]]
        assert_relative_eq!(rd.matrix[1][2], -1.0, epsilon = 1e-12);
        assert_relative_eq!(rd.matrix[2][1], -1.0, epsilon = 1e-12);
        assert_eq!(rd.rank, 2);
        assert!(rd.symmetry_defect < 1e-8);
        assert!(rd.trace_abs < 1e-8);

        let q = Vec3::new(0.0, PI, 3.0 * PI / 2.0);
        let rd = rank_identities_at_zero(&f, q, [0, 0, 0]).unwrap();
        assert_eq!(rd.rank, 2);
        assert!(rd.symmetry_defect < 1e-8);
        assert!(rd.trace_abs < 1e-8);
    }

    #[test]
    fn boundary_zero_is_interior_only() {
        let f = catalog_lookup("spheromak:1,1").unwrap();
        let err = rank_identities_at_zero(&f, Vec3::new(0.0, 0.0, 1.0), [0, 0, 0]);
        assert!(matches!(err, Err(Error::InteriorOnly(_))));
    }

    #[test]
    fn abc111_zeros_have_rank_at_least_two() {
        let f = catalog_lookup("abc:1,1,1").unwrap();
        let zs = find_zeros(&f, 32, DEFAULT_REFINE_TOL).unwrap();
        assert!(!zs.records.is_empty());
        for rec in &zs.records {
            assert_eq!(rec.order, Some(1), "order at {:?}", rec.location);
            let rd = rec.rank_data.as_ref().unwrap();
            assert!(rd.rank >= 2, "rank {} at {:?}", rd.rank, rec.location);
            assert!(rd.symmetry_defect < 1e-6 * rd.frobenius);
            assert!(rd.trace_abs < 1e-6 * rd.frobenius);
        }
    }

    #[test]
    fn zero_set_is_scale_invariant() {
        let f = degenerate();
        let g = scale_field(&f, -3.0).unwrap();
        let za = find_zeros(&f, 24, DEFAULT_REFINE_TOL).unwrap();
        let zb = find_zeros(&g, 24, DEFAULT_REFINE_TOL).unwrap();
        assert_eq!(za.n_clusters, zb.n_clusters);
        let domain = f.domain();
        for rec in &za.records {
            let p = rec.point();
            let nearest = zb
                .records
                .iter()
                .map(|r| domain.distance_unchecked(r.point(), p))
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 1e-6, "no matching zero near {:?}", rec.location);
        }
    }

    #[test]
    fn synthetic_circle_cloud_has_dimension_one() {
        // two analytic circles sampled at 10⁴ points
        let domain = Domain::torus_2pi();
        let mut pts = Vec::new();
        for i in 0..5000 {
            let t = 2.0 * PI * i as f64 / 5000.0;
            pts.push(Vec3::new(t, 0.0, PI / 2.0));
            pts.push(Vec3::new(t, PI, 3.0 * PI / 2.0));
        }
        let (rows, slope) = box_counting_points(&pts, &domain, &default_scales(&domain)).unwrap();
        assert!(slope > 0.9 && slope < 1.1, "slope {slope}");
        // counts nondecreasing as the scale shrinks
        for w in rows.windows(2) {
            assert!(w[0].0 > w[1].0);
            assert!(w[0].1 <= w[1].1);
        }
    }

    #[test]
    fn single_point_has_dimension_zero() {
        let domain = Domain::torus_2pi();
        let pts = vec![Vec3::new(1.0, 2.0, 3.0)];
        let (_, slope) = box_counting_points(&pts, &domain, &default_scales(&domain)).unwrap();
        assert!(slope.abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn degenerate_abc_zero_set_dimension() {
        let f = degenerate();
        let mut zs = find_zeros(&f, 48, DEFAULT_REFINE_TOL).unwrap();
        let report = box_counting_dimension(&f, &mut zs, &default_scales(f.domain())).unwrap();
        assert!(
            report.aggregate_slope > 0.85 && report.aggregate_slope < 1.15,
            "aggregate slope {}",
            report.aggregate_slope
        );
        for c in &report.per_cluster {
            assert!(c.points >= 500, "cluster {} has {} points", c.cluster, c.points);
        }
    }

    #[test]
    fn box_counting_rejects_thin_ladders() {
        let domain = Domain::torus_2pi();
        let pts = vec![Vec3::zeros()];
        let err = box_counting_points(&pts, &domain, &[1.0, 0.5]);
        assert!(matches!(err, Err(Error::InsufficientData(_))));
        let err = box_counting_points(&[], &domain, &default_scales(&domain));
        assert!(matches!(err, Err(Error::EmptyZeroSet)));
    }

    #[test]
    fn nodal_count_one_for_degenerate_abc() {
        let f = degenerate();
        let report = count_nodal_domains(&f, 48, None).unwrap();
        assert_eq!(report.domains, 1);
        assert!(report.excluded_cells > 0);
    }

    #[test]
    fn nodal_count_two_for_plane_control() {
        let f = expr_field_from_source("sin(z),0,0", Domain::torus_2pi()).unwrap();
        let report = count_nodal_domains(&f, 48, None).unwrap();
        assert_eq!(report.domains, 2);
    }

    #[test]
    fn nodal_count_one_for_spheromak() {
        let f = catalog_lookup("spheromak:1,1").unwrap();
        let report = count_nodal_domains(&f, 48, None).unwrap();
        assert_eq!(report.domains, 1);
    }

    #[test]
    fn grid_resolution_is_rejected_when_too_low() {
        let f = degenerate();
        assert!(count_nodal_domains(&f, 16, None).is_err());
        assert!(find_zeros(&f, 4, DEFAULT_REFINE_TOL).is_err());
    }
}
