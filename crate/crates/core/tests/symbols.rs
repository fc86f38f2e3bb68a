use proptest::prelude::*;
use std::f64::consts::PI;
use torus_pdo::symbol::{
    bessel_symbol, class_membership, difference_op, exotic, multiplier, separable, x_derivative, ClassQuery,
    MultiIndex, SpaceProfile, Symbol, SymbolClass, SymbolSpec,
};
use torus_pdo::torus::{FreqBox, LatticeFunction, TorusGrid};
use torus_pdo::Complex64;

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[test]
fn difference_matches_binomial_expansion() {
    let p = bessel_symbol(1, 1.5);
    for order in 0..5u32 {
        let d = difference_op(&p, &MultiIndex::new(&[order as i64]).unwrap()).unwrap();
        for xi in [-7.0, 0.0, 3.0, 40.0] {
            let expect: f64 = (0..=order)
                .map(|k| {
                    let sign = if (order - k) % 2 == 0 { 1.0 } else { -1.0 };
                    let t: f64 = xi + k as f64;
                    sign * binomial(order, k) * (1.0 + t * t).powf(0.75)
                })
                .sum();
            assert!((d.eval(&[0.2], &[xi]).re - expect).abs() < 1e-9 * (1.0 + expect.abs()));
        }
    }
}

#[test]
fn symbol_and_lattice_differences_agree_inside_the_box() {
    let freq = FreqBox::new(2, 6).unwrap();
    let p = bessel_symbol(2, -1.0);
    let alpha = MultiIndex::new(&[2, 1]).unwrap();
    let sampled = LatticeFunction::from_fn(freq, |xi| p.eval_lattice(&[0.0, 0.0], xi));
    let lattice = difference_op(&sampled, &alpha).unwrap();
    let symbolic = difference_op(&p, &alpha).unwrap();
    for (i, xi) in freq.frequencies().enumerate() {
        if xi[0] + 2 <= 6 && xi[1] < 6 {
            let want = symbolic.eval_lattice(&[0.0, 0.0], &xi);
            assert!((lattice.values()[i] - want).norm() < 1e-12);
        }
    }
}

#[test]
fn differences_compose() {
    let p = exotic(1, -1.0, 0.5, 2.0).unwrap();
    let a = MultiIndex::new(&[1]).unwrap();
    let b = MultiIndex::new(&[2]).unwrap();
    let ab = difference_op(&difference_op(&p, &a).unwrap(), &b).unwrap();
    let joint = difference_op(&p, &a.add(&b).unwrap()).unwrap();
    for xi in [-5.0, 0.0, 9.0] {
        assert!((ab.eval(&[0.0], &[xi]) - joint.eval(&[0.0], &[xi])).norm() < 1e-12);
    }
    assert!(MultiIndex::new(&[1, -1]).is_err());
}

#[test]
fn spectral_derivative_matches_finite_differences() {
    let grid = TorusGrid::new(1, 128).unwrap();
    let freq = FreqBox::new(1, 3).unwrap();
    let phi = SpaceProfile::ExpCos.function();
    let p = separable(1, phi.clone(), -1.0, "expcos");
    for order in 1..=2 {
        let beta = MultiIndex::new(&[order]).unwrap();
        let d = x_derivative(&p, &beta, grid, freq).unwrap();
        let h = 1e-4;
        for (i, xi) in freq.frequencies().enumerate() {
            let bracket = (1.0 + (xi[0] * xi[0]) as f64).sqrt().recip();
            for k in [0, 17, 64, 101] {
                let x = grid.point(k)[0];
                let f = |t: f64| phi(&[t]).re * bracket;
                let fd = if order == 1 {
                    (f(x + h) - f(x - h)) / (2.0 * h)
                } else {
                    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
                };
                let got = d.get(i, k).re;
                assert!(
                    (got - fd).abs() < 1e-5 * (1.0 + fd.abs()),
                    "order {order} x {x}: {got} vs {fd}"
                );
            }
        }
    }
}

#[test]
fn bessel_constants_are_stable_under_box_doubling() {
    let grid = TorusGrid::new(1, 32).unwrap();
    for s in [-1.0, 0.5, 1.0, 2.0] {
        let query = ClassQuery::new(SymbolClass::classical(s), 3, 2);
        let report = class_membership(&bessel_symbol(1, s), &query, &[16, 32, 64], grid).unwrap();
        assert!(report.pass, "s = {s}: {:?}", report.failures);
        assert!(report.max_growth <= 1.1);
    }
    let grid = TorusGrid::new(2, 8).unwrap();
    let query = ClassQuery::new(SymbolClass::classical(1.0), 2, 1);
    let report = class_membership(&bessel_symbol(2, 1.0), &query, &[8, 16, 32], grid).unwrap();
    assert!(report.pass, "{:?}", report.failures);
}

#[test]
fn misordered_claims_grow() {
    let grid = TorusGrid::new(1, 32).unwrap();
    for (s, claimed) in [(1.0, 0.0), (0.0, -0.5), (-1.0, -2.0)] {
        let query = ClassQuery::new(SymbolClass::classical(claimed), 2, 1);
        let report = class_membership(&bessel_symbol(1, s), &query, &[16, 32, 64], grid).unwrap();
        assert!(!report.pass);
        assert!(report.max_growth >= 1.3, "s = {s}: growth {}", report.max_growth);
    }
    // rho claimed too large for an exotic symbol
    let p = exotic(1, 0.0, 0.5, 1.0).unwrap();
    let wrong = ClassQuery::new(SymbolClass::new(0.0, 1.0, 0.0).unwrap(), 2, 0);
    assert!(!class_membership(&p, &wrong, &[16, 32, 64], grid).unwrap().pass);
    let right = ClassQuery::new(SymbolClass::new(0.0, 0.5, 0.0).unwrap(), 2, 0);
    assert!(class_membership(&p, &right, &[16, 32, 64], grid).unwrap().max_growth < 1.3);
}

#[test]
fn x_dependent_class_check() {
    let grid = TorusGrid::new(1, 32).unwrap();
    let p = separable(1, SpaceProfile::Cos.function(), -1.0, "cos");
    let query = ClassQuery::new(SymbolClass::classical(-1.0), 2, 2);
    let report = class_membership(&p, &query, &[16, 32, 64], grid).unwrap();
    assert!(report.pass, "{:?}", report.failures);
    // the x-derivative constants pick up (2 pi)^|beta|
    let top = report
        .constants
        .iter()
        .filter(|c| c.alpha.is_zero() && c.beta.order() == 2)
        .map(|c| c.per_radius[0])
        .fold(0.0, f64::max);
    assert!((top - 4.0 * PI * PI).abs() < 1e-6 * top);
}

#[test]
fn periodicity_in_x() {
    let p = Symbol::new(1, "periodic", SymbolClass::classical(0.0), |x: &[f64], _xi: &[f64]| {
        Complex64::new((2.0 * PI * x[0]).sin(), 0.0)
    });
    assert!(p.periodicity_defect(64, 3) < 1e-12);
    let q = Symbol::new(1, "ramp", SymbolClass::classical(0.0), |x: &[f64], _xi: &[f64]| {
        Complex64::new(x[0], 0.0)
    });
    assert!(q.periodicity_defect(64, 3) > 0.5);
}

fn spec_strategy() -> impl Strategy<Value = SymbolSpec> {
    let order = -3.0f64..2.0;
    prop_oneof![
        Just(SymbolSpec::Identity),
        order.clone().prop_map(|m| SymbolSpec::Multiplier { m }),
        order.clone().prop_map(|s| SymbolSpec::Bessel { s }),
        (
            order.clone(),
            prop_oneof![
                Just(SpaceProfile::One),
                Just(SpaceProfile::Cos),
                Just(SpaceProfile::Sin),
                Just(SpaceProfile::ExpCos)
            ]
        )
            .prop_map(|(m, phi)| SymbolSpec::Separable { m, phi }),
        (order, 0.1f64..1.0, -2.0f64..2.0).prop_map(|(m, rho, c)| SymbolSpec::Exotic { m, rho, c }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spec_strings_roundtrip(spec in spec_strategy()) {
        let text = spec.to_string();
        let back: SymbolSpec = text.parse().unwrap();
        prop_assert_eq!(back, spec);
        prop_assert!(spec.build(2).is_ok());
    }

    #[test]
    fn multiplier_differences_decay(m in -2.0f64..2.0, xi in 20.0f64..400.0) {
        // |Delta p(xi)| <= C <xi>^(m-1) for <xi>^m, with C about |m|
        let p = multiplier(1, m);
        let d = difference_op(&p, &MultiIndex::unit(1, 0)).unwrap();
        let bound = (m.abs() + 0.1) * (1.0 + xi * xi).powf((m - 1.0) / 2.0) * 2f64.powf(m.abs());
        prop_assert!(d.eval(&[0.0], &[xi]).norm() <= bound);
    }
}

#[test]
fn malformed_specs_are_rejected() {
    for bad in [
        "",
        "multiplier",
        "multiplier:m=x",
        "exotic:m=1",
        "exotic:m=0,rho=0",
        "separable:m=0,phi=tan",
        "nope:m=1",
    ] {
        assert!(bad.parse::<SymbolSpec>().is_err(), "{bad}");
    }
}
