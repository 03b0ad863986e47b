use cornergrowth::model::{ModelKind, ParamLaw};
use cornergrowth::shape::{empirical_shape, level_curve, shape, shape_geometric_closed_reciprocal, Regime};
use proptest::prelude::*;

fn laws() -> impl Strategy<Value = (ParamLaw<f64>, ParamLaw<f64>)> {
    (0.3f64..1.0, 0.0f64..1.0, 0.3f64..1.0, 0.0f64..1.0)
        .prop_map(|(la, wa, lb, wb)| (ParamLaw::Uniform(la, la + wa + 0.01), ParamLaw::Uniform(lb, lb + wb + 0.01)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exponential_shape_is_one_homogeneous((alpha, beta) in laws(), s in 0.1f64..5.0, t in 0.1f64..5.0, c in 0.2f64..4.0) {
        let g = shape(ModelKind::Exponential, &alpha, &beta, s, t).unwrap().g;
        let gc = shape(ModelKind::Exponential, &alpha, &beta, c * s, c * t).unwrap().g;
        prop_assert!((gc - c * g).abs() <= 1e-9 * gc.abs().max(1.0));
    }

    #[test]
    fn exponential_shape_is_symmetric((alpha, beta) in laws(), s in 0.1f64..5.0, t in 0.1f64..5.0) {
        let g = shape(ModelKind::Exponential, &alpha, &beta, s, t).unwrap().g;
        let h = shape(ModelKind::Exponential, &beta, &alpha, t, s).unwrap().g;
        prop_assert!((g - h).abs() <= 1e-9 * g.max(1.0));
    }

    #[test]
    fn exponential_shape_is_concave((alpha, beta) in laws(), s1 in 0.1f64..5.0, t1 in 0.1f64..5.0, s2 in 0.1f64..5.0, t2 in 0.1f64..5.0) {
        let g = |s: f64, t: f64| shape(ModelKind::Exponential, &alpha, &beta, s, t).unwrap().g;
        let mid = g((s1 + s2) / 2.0, (t1 + t2) / 2.0);
        prop_assert!(mid >= (g(s1, t1) + g(s2, t2)) / 2.0 - 1e-9 * mid.max(1.0));
    }

    #[test]
    fn geometric_shape_grows_in_each_direction(a in 0.2f64..0.6, b in 0.2f64..0.6, s in 0.2f64..3.0, t in 0.2f64..3.0) {
        let (alpha, beta) = (ParamLaw::Uniform(a - 0.1, a), ParamLaw::Uniform(b - 0.1, b));
        let g = |s: f64, t: f64| shape(ModelKind::Geometric, &alpha, &beta, s, t).unwrap().g;
        prop_assert!(g(s + 0.1, t) >= g(s, t) && g(s, t + 0.1) >= g(s, t));
    }
}

#[test]
fn reciprocal_closed_form_off_diagonal() {
    let (q, l, m): (f64, f64, f64) = (0.36, 0.2, 0.1);
    let alpha = ParamLaw::Reciprocal(q.sqrt() - l, q.sqrt());
    let beta = ParamLaw::Reciprocal(q.sqrt() - m, q.sqrt());
    for (s, t) in [(1.0, 2.0), (0.7, 0.4), (3.0, 1.0)] {
        let closed = shape_geometric_closed_reciprocal(q, l, m, s, t).unwrap();
        let num = shape(ModelKind::Geometric, &alpha, &beta, s, t).unwrap();
        assert_eq!(num.regime, Regime::StrictlyConcave);
        assert!((closed - num.g).abs() < 1e-9, "({s}, {t}): {closed} vs {}", num.g);
    }
}

#[test]
fn level_curve_points_sit_on_g_equal_one() {
    let law = ParamLaw::Uniform(0.5, 1.5);
    let g = |s: f64, t: f64| shape(ModelKind::Exponential, &law, &law, s, t).map(|e| e.g);
    for (s, t) in level_curve(g, 25).unwrap() {
        assert!((g(s, t).unwrap() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn empirical_constants_approach_the_law() {
    let law = ParamLaw::Point(0.5f64);
    let e = shape(ModelKind::Geometric, &law, &law, 1.0, 1.0).unwrap();
    let emp = empirical_shape(&[0.5; 50], &[0.5; 50]).unwrap();
    assert!((emp.gamma_mn - e.g).abs() < 1e-12);
    assert!((emp.zeta_mn - e.zeta).abs() < 1e-10);
    assert!((emp.sigma_mn - e.sigma.unwrap()).abs() < 1e-10);
}
