//! Randomized invariants: printer/parser round trips, jet arithmetic
//! identities, and the group axioms of the equivalence transformations.

use approx::assert_relative_eq;
use proptest::prelude::*;

use fkdv5::classify::{classify, Case};
use fkdv5::gauge::apply_equiv;
use fkdv5::series::Series;
use fkdv5::{EquationSpec, EquivTransform, Expr, TimeFn};

/// A random expression rendered as source text. Leaves are the variable or
/// small constants; interior nodes use the binary and unary operators the
/// parser accepts. Denominators and powf bases are kept away from zero.
fn expr_source() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("t".to_string()),
        (-3i32..=3).prop_map(|k| format!("{k}")),
        (1u32..30).prop_map(|k| format!("{}", k as f64 / 10.0)),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})+({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})-({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})*({b})")),
            (inner.clone(), 1u32..5).prop_map(|(a, k)| format!("({a})/({k})")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            (inner.clone(), 1u32..4).prop_map(|(a, k)| format!("({a})^{k}")),
        ]
    })
}

fn sample_ts() -> [f64; 4] {
    [0.3, 0.9, 1.4, 2.2]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// parse → print → parse preserves the function.
    #[test]
    fn printer_round_trip(src in expr_source()) {
        let e1 = Expr::parse(&src).unwrap();
        let printed = e1.to_string();
        let e2 = Expr::parse(&printed)
            .unwrap_or_else(|err| panic!("reparse of {printed:?} failed: {err}"));
        for t in sample_ts() {
            match (e1.eval(t), e2.eval(t)) {
                (Ok(a), Ok(b)) => {
                    prop_assert!(
                        (a - b).abs() <= 1e-12 * (1.0 + a.abs()),
                        "{printed}: {a} vs {b} at t = {t}"
                    );
                }
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{printed}: eval disagreement {a:?} vs {b:?}"),
            }
        }
    }

    /// symbolic differentiation agrees with the jet derivative.
    #[test]
    fn derivative_matches_jet(src in expr_source()) {
        let e = Expr::parse(&src).unwrap();
        let de = e.differentiate();
        for t in sample_ts() {
            if let (Ok(jet), Ok(d)) = (e.eval_series::<2>(t), de.eval(t)) {
                if jet.deriv(1).is_finite() && d.is_finite() {
                    prop_assert!(
                        (jet.deriv(1) - d).abs() <= 1e-9 * (1.0 + d.abs()),
                        "d/dt {src}: jet {} vs symbolic {d} at t = {t}",
                        jet.deriv(1)
                    );
                }
            }
        }
    }

    /// exp(ln f) = f as truncated power series, for positive f.
    #[test]
    fn series_exp_ln_inverse(
        c0 in 0.5f64..3.0,
        c1 in -1.0f64..1.0,
        c2 in -1.0f64..1.0,
        t0 in 0.1f64..2.0,
    ) {
        let f = TimeFn::parse(&format!("{c0}+{c1}*t+{c2}*t^2")).unwrap();
        let jet = f.jet(t0).unwrap();
        prop_assume!(jet.value() > 0.1);
        let back = jet.ln().exp();
        for k in 0..4 {
            assert_relative_eq!(back.deriv(k), jet.deriv(k), max_relative = 1e-10, epsilon = 1e-10);
        }
    }

    /// a restricted equivalence transformation followed by its inverse is the
    /// identity on the equation class.
    #[test]
    fn equiv_transform_invertible(
        d3 in 0.4f64..2.0,
        d4 in -1.0f64..1.0,
        d1m in 0.4f64..2.0,
        d2 in -1.0f64..1.0,
        flip in any::<bool>(),
    ) {
        let s = if flip { -1.0 } else { 1.0 };
        let g = EquivTransform::scaling(s * d3, d4, s * d1m, d2);
        let e = EquationSpec::new(
            2.0,
            TimeFn::parse("0").unwrap(),
            TimeFn::parse("t^2").unwrap(),
            (1.0, 2.0),
        )
        .unwrap();
        let pushed = apply_equiv(&g, &e).unwrap();
        let ginv = g.invert(e.interval);
        let back = apply_equiv(&ginv, &pushed).unwrap();
        prop_assert!((back.interval.0 - 1.0).abs() < 1e-9);
        prop_assert!((back.interval.1 - 2.0).abs() < 1e-9);
        for t in [1.1, 1.5, 1.9] {
            let orig = e.beta.eval(t).unwrap();
            let got = back.beta.eval(t).unwrap();
            prop_assert!((orig - got).abs() <= 1e-9 * (1.0 + orig.abs()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// classification case, sign and exponent are invariants of the
    /// restricted equivalence group.
    #[test]
    fn classification_invariant_under_restricted_group(
        d3 in 0.4f64..2.0,
        d4 in -1.0f64..1.0,
        d1m in 0.4f64..2.0,
        d2 in -1.0f64..1.0,
        flip in any::<bool>(),
        rho_tenths in -25i32..25,
    ) {
        prop_assume!(rho_tenths != 0 && rho_tenths != -10);
        let rho = rho_tenths as f64 / 10.0;
        let s = if flip { -1.0 } else { 1.0 };
        let e = EquationSpec::new(
            2.0,
            TimeFn::parse("0").unwrap(),
            TimeFn::parse(&format!("t^({rho})")).unwrap(),
            (1.0, 2.0),
        )
        .unwrap();
        let g = EquivTransform::scaling(s * d3, d4, s * d1m, d2);
        let pushed = apply_equiv(&g, &e).unwrap();
        let c = classify(&pushed, 1e-7).unwrap();
        prop_assert_eq!(c.case, Case::Power);
        prop_assert_eq!(c.epsilon, 1.0);
        let got = c.rho.unwrap();
        prop_assert!((got - rho).abs() <= 1e-6, "ρ: expected {}, got {}", rho, got);
    }
}

#[test]
fn series_product_rule() {
    // deterministic spot check that the jet product matches Leibniz
    let f = Series::<4>::variable(0.7).exp();
    let g = Series::<4>::variable(0.7).sin_cos().0;
    let p = f.mul(&g);
    let leibniz = f.deriv(1) * g.value() + f.value() * g.deriv(1);
    assert_relative_eq!(p.deriv(1), leibniz, max_relative = 1e-12);
}
