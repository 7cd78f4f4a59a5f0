//! Property-based invariants over the geometry and expression layers.

use beltrami_core::domain::{Domain, Vec3};
use beltrami_core::expr::{self, Expr};
use proptest::prelude::*;

fn torus() -> Domain {
    Domain::torus_2pi()
}

fn coord() -> impl Strategy<Value = f64> {
    -50.0..50.0f64
}

proptest! {
    #[test]
    fn wrap_is_idempotent(x in coord(), y in coord(), z in coord()) {
        let t = torus();
        let once = t.wrap(Vec3::new(x, y, z)).unwrap();
        let twice = t.wrap(once).unwrap();
        prop_assert!((once - twice).norm() < 1e-12);
        for i in 0..3 {
            prop_assert!(once[i] >= 0.0 && once[i] < 2.0 * std::f64::consts::PI);
        }
    }

    #[test]
    fn torus_distance_is_a_metric(
        a in prop::array::uniform3(coord()),
        b in prop::array::uniform3(coord()),
        c in prop::array::uniform3(coord()),
    ) {
        let t = torus();
        let pa = Vec3::from(a);
        let pb = Vec3::from(b);
        let pc = Vec3::from(c);
        let dab = t.distance(pa, pb).unwrap();
        let dba = t.distance(pb, pa).unwrap();
        prop_assert!((dab - dba).abs() < 1e-12, "symmetry: {dab} vs {dba}");
        prop_assert!(dab >= 0.0);
        // zero iff canonical representatives coincide
        let same = (t.canonical(pa) - t.canonical(pb)).norm() < 1e-12;
        prop_assert_eq!(dab < 1e-12, same);
        // triangle inequality
        let dac = t.distance(pa, pc).unwrap();
        let dcb = t.distance(pc, pb).unwrap();
        prop_assert!(dab <= dac + dcb + 1e-12, "triangle: {dab} > {dac} + {dcb}");
    }

    #[test]
    fn ball_distance_is_a_metric(
        a in prop::array::uniform3(-0.57f64..0.57),
        b in prop::array::uniform3(-0.57f64..0.57),
        c in prop::array::uniform3(-0.57f64..0.57),
    ) {
        let d = Domain::ball(1.0).unwrap();
        let pa = Vec3::from(a);
        let pb = Vec3::from(b);
        let pc = Vec3::from(c);
        let dab = d.distance(pa, pb).unwrap();
        prop_assert!((dab - d.distance(pb, pa).unwrap()).abs() < 1e-12);
        let dac = d.distance(pa, pc).unwrap();
        let dcb = d.distance(pc, pb).unwrap();
        prop_assert!(dab <= dac + dcb + 1e-12);
    }
}

// A small recursive strategy for expression trees.
fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-4.0..4.0f64).prop_map(Expr::Const),
        Just(Expr::Var(expr::Axis::X)),
        Just(Expr::Var(expr::Axis::Y)),
        Just(Expr::Var(expr::Axis::Z)),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| expr::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| expr::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| expr::mul(a, b)),
            inner.clone().prop_map(expr::neg),
            inner.clone().prop_map(expr::sin),
            inner.clone().prop_map(expr::cos),
            (inner.clone(), 1u8..4u8)
                .prop_map(|(a, k)| expr::pow(a, Expr::Const(k as f64))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn print_then_parse_is_evaluation_equivalent(e in arb_expr()) {
        let printed = e.to_string();
        let back = expr::parse_expr(&printed)
            .unwrap_or_else(|err| panic!("reparse of `{printed}`: {err}"));
        for k in 0..16 {
            let p = Vec3::new(
                0.13 + 0.37 * k as f64,
                0.71 + 0.23 * k as f64,
                0.29 + 0.31 * k as f64,
            );
            let a = e.eval(p);
            let b = back.eval(p);
            if a.is_finite() {
                prop_assert!(
                    (a - b).abs() <= 1e-12 * (1.0 + a.abs()),
                    "`{printed}`: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn symbolic_derivative_matches_finite_differences(e in arb_expr()) {
        let h = 1e-5;
        for axis in expr::Axis::ALL {
            let d = e.derivative(axis);
            for k in 0..4 {
                let p = Vec3::new(
                    0.41 + 0.29 * k as f64,
                    0.23 + 0.37 * k as f64,
                    0.57 + 0.31 * k as f64,
                );
                let mut hi = p;
                let mut lo = p;
                hi[axis.index()] += h;
                lo[axis.index()] -= h;
                let (fh, fl) = (e.eval(hi), e.eval(lo));
                let fd = (fh - fl) / (2.0 * h);
                let sym = d.eval(p);
                if fd.is_finite() && sym.is_finite() && fd.abs() < 1e6 {
                    prop_assert!(
                        (sym - fd).abs() <= 1e-5 * (1.0 + fd.abs().max(sym.abs())),
                        "{e} d{}: sym {sym} vs fd {fd} at {p:?}",
                        axis.name()
                    );
                }
            }
        }
    }
}
