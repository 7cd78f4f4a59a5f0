//! Spherical Bessel function `j1`, its derivatives, and the smooth even
//! combinations the spheromak field is built from.
//!
//! Everything is derived from the closed form `j1(x) = sin x/x² − cos x/x`,
//! with a power-series fallback near zero where the closed forms cancel
//! catastrophically. The series for all functions here come from
//! `j1(u) = Σ_k (−1)^k 2(k+1) u^{2k+1}/(2k+3)!`.

/// Below this argument magnitude the power series is used. The closed forms
/// divide by high powers of `u`, which amplifies cancellation for small
/// arguments; the series terms are monotone decreasing for |u| ≤ 2.
const SERIES_CUTOFF: f64 = 2.0;

fn even_series(u: f64, coeff: impl Fn(usize) -> f64) -> f64 {
    // coeff(m) multiplies u^{2m}/(2m+5)!-style terms; the closure returns the
    // full coefficient including the factorial, so this is a plain sum.
    let u2 = u * u;
    let mut term = 1.0;
    let mut acc = 0.0;
    for m in 0..24 {
        let c = coeff(m);
        let t = c * term;
        acc += t;
        if t.abs() < 1e-22 * acc.abs().max(1e-300) {
            break;
        }
        term *= u2;
    }
    acc
}

fn inv_factorial(n: usize) -> f64 {
    let mut f = 1.0;
    for k in 2..=n {
        f *= k as f64;
    }
    1.0 / f
}

fn sign(m: usize) -> f64 {
    if m % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `j1(u) = sin u/u² − cos u/u`.
pub fn j1(u: f64) -> f64 {
    if u.abs() < SERIES_CUTOFF {
        u * even_series(u, |k| sign(k) * 2.0 * (k + 1) as f64 * inv_factorial(2 * k + 3))
    } else {
        u.sin() / (u * u) - u.cos() / u
    }
}

/// First derivative `j1'(u)`.
pub fn j1_prime(u: f64) -> f64 {
    if u.abs() < SERIES_CUTOFF {
        even_series(u, |k| {
            sign(k) * 2.0 * ((k + 1) * (2 * k + 1)) as f64 * inv_factorial(2 * k + 3)
        })
    } else {
        let (s, c) = u.sin_cos();
        s / u + 2.0 * c / (u * u) - 2.0 * s / (u * u * u)
    }
}

/// `s(u) = j1(u)/u`, smooth and even, `s(0) = 1/3`.
pub fn j1_over_u(u: f64) -> f64 {
    if u.abs() < SERIES_CUTOFF {
        even_series(u, |k| sign(k) * 2.0 * (k + 1) as f64 * inv_factorial(2 * k + 3))
    } else {
        let (s, c) = u.sin_cos();
        s / (u * u * u) - c / (u * u)
    }
}

/// `q(u) = (j1(u)/u − j1'(u))/u²`, smooth and even, `q(0) = 1/15`.
pub fn q(u: f64) -> f64 {
    if u.abs() < SERIES_CUTOFF {
        even_series(u, |m| {
            sign(m) * 4.0 * ((m + 1) * (m + 2)) as f64 * inv_factorial(2 * m + 5)
        })
    } else {
        let (s, c) = u.sin_cos();
        let u3 = u * u * u;
        let u4 = u3 * u;
        let u5 = u4 * u;
        3.0 * s / u5 - 3.0 * c / u4 - s / u3
    }
}

/// `q2(u) = q'(u)/u`, smooth and even, `q2(0) = −1/105`.
pub fn q2(u: f64) -> f64 {
    if u.abs() < SERIES_CUTOFF {
        even_series(u, |j| {
            -sign(j) * 8.0 * ((j + 1) * (j + 2) * (j + 3)) as f64 * inv_factorial(2 * j + 7)
        })
    } else {
        let (s, c) = u.sin_cos();
        let u4 = u * u * u * u;
        let u5 = u4 * u;
        let u6 = u5 * u;
        let u7 = u6 * u;
        -15.0 * s / u7 + 15.0 * c / u6 + 6.0 * s / u5 - c / u4
    }
}

/// `t2(u) = j1''(u)/u`, smooth and even, `t2(0) = −1/5`.
pub fn j1_second_over_u(u: f64) -> f64 {
    if u.abs() < SERIES_CUTOFF {
        even_series(u, |m| {
            -sign(m) * 4.0 * ((m + 1) * (m + 2) * (2 * m + 3)) as f64 * inv_factorial(2 * m + 5)
        })
    } else {
        let (s, c) = u.sin_cos();
        let u2 = u * u;
        let u3 = u2 * u;
        let u4 = u3 * u;
        let u5 = u4 * u;
        c / u2 - 3.0 * s / u3 - 6.0 * c / u4 + 6.0 * s / u5
    }
}

/// First positive root of `j1`, found by bisection on [4, 5] to 1e-14.
pub fn first_j1_root() -> f64 {
    let (mut lo, mut hi) = (4.0_f64, 5.0_f64);
    debug_assert!(j1(lo) > 0.0 && j1(hi) < 0.0);
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if j1(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn j1_known_values() {
        // j1(1) = sin 1 − cos 1
        assert_relative_eq!(j1(1.0), 1.0_f64.sin() - 1.0_f64.cos(), epsilon = 1e-15);
        // small-argument limit j1(u)/u → 1/3
        assert_relative_eq!(j1_over_u(0.0), 1.0 / 3.0, epsilon = 1e-16);
        assert_relative_eq!(j1_prime(0.0), 1.0 / 3.0, epsilon = 1e-16);
        assert_relative_eq!(q(0.0), 1.0 / 15.0, epsilon = 1e-16);
        assert_relative_eq!(q2(0.0), -1.0 / 105.0, epsilon = 1e-16);
        assert_relative_eq!(j1_second_over_u(0.0), -0.2, epsilon = 1e-16);
    }

    #[test]
    fn series_matches_closed_forms_inside_cutoff() {
        // Independent closed forms, evaluated where their cancellation is
        // still mild, against the series the implementation uses there.
        let u = 1.9_f64;
        let (s, c) = u.sin_cos();
        let (u2, u3) = (u * u, u * u * u);
        let (u4, u5) = (u3 * u, u3 * u2);
        let (u6, u7) = (u5 * u, u5 * u2);
        assert_relative_eq!(j1(u), s / u2 - c / u, max_relative = 1e-13);
        assert_relative_eq!(
            j1_prime(u),
            s / u + 2.0 * c / u2 - 2.0 * s / u3,
            max_relative = 1e-12
        );
        assert_relative_eq!(j1_over_u(u), s / u3 - c / u2, max_relative = 1e-13);
        assert_relative_eq!(
            q(u),
            3.0 * s / u5 - 3.0 * c / u4 - s / u3,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            q2(u),
            -15.0 * s / u7 + 15.0 * c / u6 + 6.0 * s / u5 - c / u4,
            max_relative = 1e-11
        );
        assert_relative_eq!(
            j1_second_over_u(u),
            c / u2 - 3.0 * s / u3 - 6.0 * c / u4 + 6.0 * s / u5,
            max_relative = 1e-12
        );
    }

    #[test]
    fn derivative_consistency_by_finite_differences() {
        let h = 1e-6;
        for &u in &[0.3, 0.9, 2.1, 4.4] {
            let fd = (j1(u + h) - j1(u - h)) / (2.0 * h);
            assert_relative_eq!(fd, j1_prime(u), max_relative = 1e-8);
            let fd_q = (q(u + h) - q(u - h)) / (2.0 * h);
            assert_relative_eq!(fd_q, u * q2(u), max_relative = 1e-6);
            let fd_s = (j1_over_u(u + h) - j1_over_u(u - h)) / (2.0 * h);
            // s'(u) = −u·q(u)
            assert_relative_eq!(fd_s, -u * q(u), max_relative = 1e-6);
        }
    }

    #[test]
    fn divergence_identity() {
        // u²·q2 + 3q + t2 ≡ 0 is what makes the spheromak divergence-free.
        for &u in &[0.0, 0.2, 0.7, 1.9, 4.49, 6.0] {
            let v = u * u * q2(u) + 3.0 * q(u) + j1_second_over_u(u);
            assert!(v.abs() < 1e-14, "identity violated at u={u}: {v}");
        }
    }

    #[test]
    fn root_is_a_root_and_matches_reference() {
        let r = first_j1_root();
        assert!(j1(r).abs() < 1e-14);
        // DLMF 10.21: first positive zero of j1.
        assert_relative_eq!(r, 4.493409457909064, epsilon = 1e-12);
        assert!(j1_prime(r) < 0.0);
    }
}
