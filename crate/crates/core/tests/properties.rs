mod common;

use banklaine_core::analytic::Polynomial;
use banklaine_core::banklaine::schwarzian;
use banklaine_core::contour::{integrate_along_path, solve_pair, OdeOptions, PathSpec};
use banklaine_core::expr::{BinOp, Constant, Func};
use banklaine_core::gallery;
use banklaine_core::{Analytic, Expr};
use common::*;
use proptest::prelude::*;

#[test]
fn jets_match_finite_differences_at_200_seeded_points() {
    let (worst, which) = jet_suite_worst(200, 11);
    assert!(worst <= 1.0, "{which}: error/bound = {worst}");
}

#[test]
fn third_derivative_stencil_is_exact_on_cubics() {
    let f = expr("z^3");
    assert!(jet_error_ratio(&f, C::new(0.3, -0.2), 1.0) < 1e-2);
}

#[test]
fn multiplicities_sum_to_the_count_on_50_polynomials() {
    for (k, p) in seeded_polynomials(50, 3).iter().enumerate() {
        let (located, count) = multiplicity_check(&p.poly, C::new(0.0, 0.0), 1.0);
        assert_eq!(located, count, "polynomial {k}: roots {:?}", p.roots);
        assert_eq!(count, p.count_inside(1.0), "polynomial {k}: roots {:?}", p.roots);
    }
}

#[test]
fn multiplicities_sum_to_the_count_on_gallery_functions() {
    for e in gallery::entries() {
        for f in [e.e(), e.a()].into_iter().flatten() {
            let (located, count) = multiplicity_check(f.as_ref(), C::new(0.0, 0.0), 5.0);
            assert_eq!(located, count, "{}", e.name);
        }
    }
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        Just(Expr::Var),
        (0.0f64..100.0).prop_map(Expr::real),
        (0.0f64..10.0).prop_map(|y| Expr::Num(C::new(0.0, y))),
        prop_oneof![Just(Constant::I), Just(Constant::Pi), Just(Constant::E)].prop_map(Expr::Const),
    ];
    leaf.prop_recursive(5, 40, 2, |inner| {
        let op = prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div), Just(BinOp::Pow)];
        let func = prop_oneof![
            Just(Func::Exp),
            Just(Func::Log),
            Just(Func::Sin),
            Just(Func::Cos),
            Just(Func::Tan),
            Just(Func::Sinh),
            Just(Func::Cosh),
            Just(Func::Sqrt)
        ];
        prop_oneof![
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            (op, inner.clone(), inner.clone()).prop_map(|(o, a, b)| Expr::bin(o, a, b)),
            (func, inner).prop_map(|(f, a)| Expr::call(f, a)),
        ]
    })
}

fn same_value(a: &Expr, b: &Expr, z: C) -> bool {
    match (a.eval_value(z), b.eval_value(z)) {
        (Ok(x), Ok(y)) => x == y || (x - y).norm() <= 1e-12 * x.norm().max(1.0) || (x.is_nan() && y.is_nan()),
        (Err(_), Err(_)) => true,
        _ => false,
    }
}

proptest! {
    #[test]
    fn printing_then_parsing_round_trips(e in arb_expr()) {
        let text = e.to_string();
        let back = Expr::parse(&text).unwrap();
        prop_assert_eq!(Expr::parse(&back.to_string()).unwrap(), back.clone());
        for z in [C::new(0.3, 0.7), C::new(-1.2, 0.4)] {
            prop_assert!(same_value(&e, &back, z), "{} at {}", text, z);
        }
    }

    #[test]
    fn schwarzian_is_mobius_invariant(
        a in (-2.0f64..2.0, -2.0f64..2.0), b in (-2.0f64..2.0, -2.0f64..2.0),
        c in (-2.0f64..2.0, -2.0f64..2.0), d in (-2.0f64..2.0, -2.0f64..2.0),
        which in 0usize..3, zr in -0.6f64..0.6, zi in -0.6f64..0.6,
    ) {
        let (a, b, c, d) = (C::new(a.0, a.1), C::new(b.0, b.1), C::new(c.0, c.1), C::new(d.0, d.1));
        prop_assume!((a * d - b * c).norm() > 0.2);
        let u = ["tan(z)", "exp(z)", "z + z^3/3"][which];
        let z = C::new(zr, zi);
        let uz = expr(u).eval_value(z).unwrap();
        prop_assume!((c * uz + d).norm() > 0.2);
        let num = |w: C| format!("({:?}+({:?})*i)", w.re, w.im);
        let m = format!("({}*({u})+{})/({}*({u})+{})", num(a), num(b), num(c), num(d));
        let s_u = schwarzian(&expr(u).jet(z, 3).unwrap()).unwrap();
        let s_m = schwarzian(&expr(&m).jet(z, 3).unwrap()).unwrap();
        prop_assert!((s_u - s_m).norm() <= 1e-8 * (1.0 + s_u.norm()), "{} vs {}", s_u, s_m);
    }

    #[test]
    fn reversing_a_path_negates_the_integral(
        pts in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 2..6),
    ) {
        let points: Vec<C> = pts.iter().map(|&(x, y)| C::new(x, y)).collect();
        prop_assume!(points.windows(2).all(|w| (w[1] - w[0]).norm() > 1e-3));
        let path = PathSpec::Polyline { points };
        let f = expr("exp(z)*sin(z) + z^2");
        let forward = integrate_along_path(&f, &path, 1e-11).unwrap();
        let backward = integrate_along_path(&f, &path.reversed(), 1e-11).unwrap();
        prop_assert!((forward + backward).norm() <= 1e-9 * (1.0 + forward.norm()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn wronskian_stays_one_for_polynomial_coefficients(
        coeffs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..4),
        end in (-3.0f64..3.0, -3.0f64..3.0),
    ) {
        let a = Polynomial::new(coeffs.iter().map(|&(x, y)| C::new(x, y)).collect());
        let path = PathSpec::segment(C::new(0.0, 0.0), C::new(end.0, end.1));
        prop_assume!(path.length().unwrap() > 1e-3);
        let (t1, _) = solve_pair(&a, &path, &OdeOptions::with_tol(1e-11)).unwrap();
        prop_assert!(t1.wronskian_drift.unwrap() <= 1e-8);
    }
}
