use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use torus_pdo::torus::{forward_ft, inverse_ft, FreqBox, LatticeFunction, PeriodicFunction, TorusGrid};
use torus_pdo::Complex64;

/// `G^-n sum_x exp(-2 pi i x.xi) f(x)`, summed point by point.
fn direct_coefficient(f: &PeriodicFunction, xi: &[i64]) -> Complex64 {
    let grid = f.grid();
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, v) in f.values().iter().enumerate() {
        let x = grid.point(k);
        let phase: f64 = x.iter().zip(xi).map(|(a, &b)| a * b as f64).sum();
        acc += v * Complex64::from_polar(1.0, -2.0 * PI * phase);
    }
    acc * grid.cell_volume()
}

fn sample(grid: TorusGrid, seed: u64) -> PeriodicFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..grid.len())
        .map(|_| Complex64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)))
        .collect();
    PeriodicFunction::new(grid, values).unwrap()
}

#[test]
fn fft_matches_direct_sum() {
    for (n, g, r) in [(1, 64, 20), (2, 16, 5), (3, 8, 3)] {
        let grid = TorusGrid::new(n, g).unwrap();
        let freq = FreqBox::new(n, r).unwrap();
        let f = sample(grid, 11 + n as u64);
        let fast = forward_ft(&f, freq).unwrap();
        for (i, xi) in freq.frequencies().enumerate() {
            let d = direct_coefficient(&f, &xi);
            assert!((fast.values()[i] - d).norm() < 1e-12, "n={n} xi={xi:?}");
        }
    }
}

#[test]
fn inverse_matches_direct_sum() {
    let grid = TorusGrid::new(2, 12).unwrap();
    let freq = FreqBox::new(2, 4).unwrap();
    let phi = LatticeFunction::from_fn(freq, |xi| {
        Complex64::new(xi[0] as f64, 1.0 / (1.0 + xi[1].abs() as f64))
    });
    let f = inverse_ft(&phi, grid).unwrap();
    for k in [0, 7, 50, 143] {
        let x = grid.point(k);
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, xi) in freq.frequencies().enumerate() {
            let phase: f64 = x.iter().zip(&xi).map(|(a, &b)| a * b as f64).sum();
            acc += phi.values()[i] * Complex64::from_polar(1.0, 2.0 * PI * phase);
        }
        assert!((f.values()[k] - acc).norm() < 1e-12);
    }
}

#[test]
fn reference_scale_identities() {
    let grid = TorusGrid::new(1, 1024).unwrap();
    let freq = FreqBox::new(1, 256).unwrap();
    let phi = LatticeFunction::from_fn(freq, |xi| {
        let t = xi[0] as f64;
        Complex64::new((0.3 * t).cos(), (0.7 * t).sin()) / (1.0 + t * t)
    });
    let f = inverse_ft(&phi, grid).unwrap();
    let back = forward_ft(&f, freq).unwrap();
    assert!(back.max_abs_diff(&phi).unwrap() < 1e-10);
    // Parseval: int |f|^2 = sum |phi|^2
    assert!((f.l2_norm().powi(2) - phi.l2_norm_sq()).abs() < 1e-10);
    // characters go to indicators
    for xi0 in [-256i64, -17, 0, 3, 255] {
        let e = PeriodicFunction::from_fn(grid, |x| Complex64::from_polar(1.0, 2.0 * PI * xi0 as f64 * x[0]));
        let c = forward_ft(&e, freq).unwrap();
        let ind = LatticeFunction::indicator(freq, &[xi0]).unwrap();
        assert!(c.max_abs_diff(&ind).unwrap() < 1e-10);
    }
}

#[test]
fn aliasing_band_is_rejected() {
    let grid = TorusGrid::new(1, 16).unwrap();
    let freq = FreqBox::new(1, 8).unwrap();
    assert!(forward_ft(&PeriodicFunction::zeros(grid), freq).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn roundtrip_on_bandlimited_data(
        coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2 * 6 + 1),
        g in 13usize..40,
    ) {
        let grid = TorusGrid::new(1, g).unwrap();
        let freq = FreqBox::new(1, 6).unwrap();
        let phi = LatticeFunction::new(freq, coeffs.iter().map(|&(a, b)| Complex64::new(a, b)).collect()).unwrap();
        let f = inverse_ft(&phi, grid).unwrap();
        let back = forward_ft(&f, freq).unwrap();
        prop_assert!(back.max_abs_diff(&phi).unwrap() < 1e-12);
        prop_assert!((f.l2_norm().powi(2) - phi.l2_norm_sq()).abs() < 1e-12);
    }

    #[test]
    fn translation_is_modulation(shift in 0usize..32, xi0 in -10i64..=10) {
        let grid = TorusGrid::new(1, 32).unwrap();
        let freq = FreqBox::new(1, 12).unwrap();
        let f = sample(grid, 5);
        let shifted = PeriodicFunction::new(
            grid,
            (0..32).map(|k| f.values()[(k + 32 - shift) % 32]).collect(),
        ).unwrap();
        let a = forward_ft(&f, freq).unwrap();
        let b = forward_ft(&shifted, freq).unwrap();
        let t = shift as f64 / 32.0;
        let got = b.get(&[xi0]).unwrap();
        let want = a.get(&[xi0]).unwrap() * Complex64::from_polar(1.0, -2.0 * PI * xi0 as f64 * t);
        prop_assert!((got - want).norm() < 1e-12);
    }
}
