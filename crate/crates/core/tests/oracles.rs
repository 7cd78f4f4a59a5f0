//! Independent oracles: results obtained by brute force or alternative
//! routes, checked against the implementation.

use beltrami_core::domain::{Domain, Vec3};
use beltrami_core::field::{abc_field, catalog_lookup, AbcParams};
use beltrami_core::nodal;
use beltrami_core::Mat3;

/// Test-local finite-difference Jacobian, independent of the library path.
fn fd_jacobian(eval: &dyn Fn(Vec3) -> Vec3, p: Vec3, h: f64) -> Mat3 {
    let mut m = Mat3::zeros();
    for j in 0..3 {
        let mut dp = Vec3::zeros();
        dp[j] = h;
        let col = (eval(p + dp) - eval(p - dp)) / (2.0 * h);
        for i in 0..3 {
            m[(i, j)] = col[i];
        }
    }
    m
}

/// Brute force: dense grid scan plus plain Newton with an FD Jacobian,
/// fully independent of `nodal::find_zeros`.
fn brute_force_zeros(eval: &dyn Fn(Vec3) -> Vec3, grid: usize, two_pi: f64) -> Vec<Vec3> {
    let cell = two_pi / grid as f64;
    let mut seeds = Vec::new();
    for i in 0..grid {
        for j in 0..grid {
            for k in 0..grid {
                let p = Vec3::new(i as f64, j as f64, k as f64) * cell;
                if eval(p).norm() < 3.0 * cell {
                    seeds.push(p);
                }
            }
        }
    }
    let mut zeros: Vec<Vec3> = Vec::new();
    'seed: for s in seeds {
        let mut x = s;
        for _ in 0..40 {
            let fx = eval(x);
            if fx.norm() < 1e-10 {
                break;
            }
            let j = fd_jacobian(eval, x, 1e-6);
            match j.try_inverse() {
                Some(inv) => x -= inv * fx,
                None => continue 'seed,
            }
        }
        if eval(x).norm() >= 1e-10 {
            continue;
        }
        // canonicalize and dedupe
        for c in x.iter_mut() {
            *c = c.rem_euclid(two_pi);
        }
        let dup = zeros.iter().any(|z| {
            (0..3).all(|i| {
                let d = (z[i] - x[i]).abs() % two_pi;
                d.min(two_pi - d) < 1e-4
            })
        });
        if !dup {
            zeros.push(x);
        }
    }
    zeros
}

#[test]
fn abc111_zero_count_matches_brute_force() {
    let field = catalog_lookup("abc:1,1,1").unwrap();
    let eval = |p: Vec3| field.eval(p);
    let two_pi = 2.0 * std::f64::consts::PI;

    let oracle = brute_force_zeros(&eval, 200, two_pi);
    assert!(!oracle.is_empty(), "oracle found no zeros");

    let zs = nodal::find_zeros(&field, 32, 1e-10).unwrap();
    assert_eq!(
        zs.records.len(),
        oracle.len(),
        "found {} zeros, oracle says {}",
        zs.records.len(),
        oracle.len()
    );
    // isolated zeros: one cluster each
    assert_eq!(zs.n_clusters, oracle.len());

    let domain = field.domain();
    for z in &oracle {
        let nearest = zs
            .records
            .iter()
            .map(|r| domain.distance_unchecked(r.point(), *z))
            .fold(f64::INFINITY, f64::min);
        assert!(nearest < 1e-6, "oracle zero {z:?} unmatched ({nearest:.2e})");
    }
}

#[test]
fn abc_fd_curl_oracle_for_several_parameter_sets() {
    // curl X = X for every ABC field; checked by a test-local FD curl
    let params = [
        AbcParams { a: 1.0, b: 1.0, c: 1.0 },
        AbcParams { a: 1.0, b: 0.0, c: -1.0 },
        AbcParams { a: 0.5, b: 2.0, c: -0.7 },
    ];
    for prm in params {
        let field = abc_field(prm, Domain::torus_2pi()).unwrap();
        let eval = |p: Vec3| field.eval(p);
        for p in field.domain().sample_uniform(100, 99) {
            let j = fd_jacobian(&eval, p, 1e-5);
            let curl = Vec3::new(
                j[(2, 1)] - j[(1, 2)],
                j[(0, 2)] - j[(2, 0)],
                j[(1, 0)] - j[(0, 1)],
            );
            let x = field.eval(p);
            let residual = (curl - x).norm() / (x.norm() + 1.0);
            assert!(residual < 1e-6, "residual {residual} for {prm:?} at {p:?}");
        }
    }
}

#[test]
fn spheromak_lambda_against_dense_scan() {
    // independent root bracket scan for j1 on [0.1, 6] at resolution 1e-5
    let j1 = |x: f64| x.sin() / (x * x) - x.cos() / x;
    let mut root = None;
    let mut x = 0.1;
    while x < 6.0 {
        let next = x + 1e-5;
        if j1(x) > 0.0 && j1(next) <= 0.0 {
            root = Some(0.5 * (x + next));
            break;
        }
        x = next;
    }
    let expected = root.expect("scan found no root");
    let field = catalog_lookup("spheromak:1,1").unwrap();
    assert!(
        (field.lambda() - expected).abs() < 1e-4,
        "lambda {} vs scanned {expected}",
        field.lambda()
    );
}
