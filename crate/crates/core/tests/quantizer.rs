use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use torus_pdo::hardy::n_sigma;
use torus_pdo::quantizer::{
    adjoint_apply, annulus_kernel_estimate, apply, d_condition_check, kernel, kernel_at, ladder_kernel,
    operator_matrix, t_star_one, AnnulusDecomposition, AnnulusQuery, Cutoff, DConditionQuery, KernelSide, ProbeSet,
    DEFAULT_LADDER_REFINEMENT,
};
use torus_pdo::symbol::{bessel_symbol, exotic, multiplier, separable, SpaceProfile, Symbol, SymbolClass};
use torus_pdo::torus::{forward_ft, FreqBox, PeriodicFunction, TorusGrid};
use torus_pdo::Complex64;

fn random_function(grid: TorusGrid, seed: u64) -> PeriodicFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..grid.len())
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    PeriodicFunction::new(grid, values).unwrap()
}

fn bandlimited(grid: TorusGrid, degree: i64, seed: u64) -> PeriodicFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<(i64, Complex64)> = (-degree..=degree)
        .map(|k| {
            (
                k,
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            )
        })
        .collect();
    PeriodicFunction::from_fn(grid, |x| {
        terms
            .iter()
            .map(|(k, c)| c * Complex64::from_polar(1.0, 2.0 * PI * *k as f64 * x[0]))
            .sum()
    })
}

/// `x`-dependent symbol that is a trigonometric polynomial in `x`.
fn trig_symbol() -> Symbol {
    Symbol::new(1, "trig", SymbolClass::classical(-1.0), |x: &[f64], xi: &[f64]| {
        let b = (1.0 + xi[0] * xi[0]).sqrt();
        Complex64::new(1.0 + 0.5 * (2.0 * PI * x[0]).cos(), 0.3 * (4.0 * PI * x[0]).sin()) / b
    })
}

/// `Op(p) f(x)` from its defining double sum.
fn brute_apply(p: &Symbol, f: &PeriodicFunction, freq: FreqBox) -> Vec<Complex64> {
    let grid = f.grid();
    let points: Vec<Vec<f64>> = grid.points().collect();
    points
        .iter()
        .map(|x| {
            freq.frequencies()
                .map(|xi| {
                    let xr: Vec<f64> = xi.iter().map(|&v| v as f64).collect();
                    let coeff: Complex64 = points
                        .iter()
                        .zip(f.values())
                        .map(|(y, v)| v * Complex64::from_polar(1.0, -2.0 * PI * y[0] * xr[0]))
                        .sum::<Complex64>()
                        * grid.cell_volume();
                    Complex64::from_polar(1.0, 2.0 * PI * x[0] * xr[0]) * p.eval(x, &xr) * coeff
                })
                .sum()
        })
        .collect()
}

#[test]
fn apply_matches_defining_sum() {
    let grid = TorusGrid::new(1, 24).unwrap();
    let freq = FreqBox::new(1, 9).unwrap();
    let f = random_function(grid, 1);
    for p in [trig_symbol(), bessel_symbol(1, 0.7), exotic(1, -0.5, 0.5, 1.0).unwrap()] {
        let fast = apply(&p, &f, freq).unwrap();
        let slow = brute_apply(&p, &f, freq);
        for (a, b) in fast.values().iter().zip(&slow) {
            assert!((a - b).norm() < 1e-11, "{}", p.label());
        }
    }
}

#[test]
fn kernel_slices_match_direct_sums() {
    let grid = TorusGrid::new(1, 32).unwrap();
    let freq = FreqBox::new(1, 10).unwrap();
    let p = trig_symbol();
    let sources = vec![vec![0.0], vec![0.3125], vec![0.71]];
    for cutoff in [Cutoff::None, Cutoff::smooth_for(freq), Cutoff::Octave { t: 8.0 }] {
        let right = kernel(&p, freq, grid, cutoff, KernelSide::Right, &sources).unwrap();
        let left = kernel(&p, freq, grid, cutoff, KernelSide::Left, &sources).unwrap();
        for (s, y) in sources.iter().enumerate() {
            for (k, x) in grid.points().enumerate() {
                let direct: Complex64 = freq
                    .frequencies()
                    .map(|xi| {
                        let w = cutoff.weight(&xi);
                        let t = xi[0] as f64;
                        w * Complex64::from_polar(1.0, 2.0 * PI * (x[0] - y[0]) * t) * p.eval(&x, &[t])
                    })
                    .sum();
                assert!((right.slice(s).values()[k] - direct).norm() < 1e-11);
                assert!((right.slice(s).values()[k] - kernel_at(&p, freq, cutoff, &x, y)).norm() < 1e-11);
                let transposed = kernel_at(&p, freq, cutoff, y, &x);
                assert!((left.slice(s).values()[k] - transposed).norm() < 1e-11);
            }
        }
    }
}

#[test]
fn kernel_quadrature_reproduces_apply() {
    // Op(p) f(x) = int k(x, y) f(y) dy, exact for band-limited f
    let grid = TorusGrid::new(1, 64).unwrap();
    let freq = FreqBox::new(1, 20).unwrap();
    let f = bandlimited(grid, 12, 4);
    for p in [trig_symbol(), multiplier(1, -1.0)] {
        let out = apply(&p, &f, freq).unwrap();
        let sources: Vec<Vec<f64>> = grid.points().collect();
        let field = kernel(&p, freq, grid, Cutoff::None, KernelSide::Left, &sources).unwrap();
        for (k, v) in out.values().iter().enumerate() {
            let quad: Complex64 = field
                .slice(k)
                .values()
                .iter()
                .zip(f.values())
                .map(|(a, b)| a * b)
                .sum::<Complex64>()
                * grid.cell_volume();
            assert!((quad - v).norm() < 1e-9);
        }
    }
}

#[test]
fn bessel_potentials_invert_each_other() {
    let grid = TorusGrid::new(1, 1024).unwrap();
    let freq = FreqBox::new(1, 256).unwrap();
    let f = bandlimited(grid, 200, 9);
    for s in [0.5, 1.0, 2.5] {
        let g = apply(&bessel_symbol(1, -s), &f, freq).unwrap();
        let back = apply(&bessel_symbol(1, s), &g, freq).unwrap();
        assert!(back.max_abs_diff(&f).unwrap() < 1e-9);
    }
    let grid = TorusGrid::new(2, 32).unwrap();
    let freq = FreqBox::new(2, 10).unwrap();
    let f = random_function(grid, 2);
    let f = apply(&multiplier(2, 0.0), &f, freq).unwrap();
    let back = apply(
        &bessel_symbol(2, 1.5),
        &apply(&bessel_symbol(2, -1.5), &f, freq).unwrap(),
        freq,
    )
    .unwrap();
    assert!(back.max_abs_diff(&f).unwrap() < 1e-9);
}

#[test]
fn separable_symbols_factor_through_multiplication() {
    let grid = TorusGrid::new(1, 48).unwrap();
    let freq = FreqBox::new(1, 15).unwrap();
    let f = random_function(grid, 3);
    for profile in [SpaceProfile::Cos, SpaceProfile::ExpCos] {
        let phi = profile.function();
        let composed = apply(&separable(1, phi.clone(), -0.5, "sep"), &f, freq).unwrap();
        let inner = apply(&multiplier(1, -0.5), &f, freq).unwrap();
        let grid_pts: Vec<Vec<f64>> = grid.points().collect();
        for (k, v) in composed.values().iter().enumerate() {
            assert!((v - phi(&grid_pts[k]) * inner.values()[k]).norm() < 1e-12);
        }
    }
}

#[test]
fn adjoint_is_conjugate_transpose() {
    let grid = TorusGrid::new(1, 16).unwrap();
    let freq = FreqBox::new(1, 6).unwrap();
    let p = trig_symbol();
    let a = operator_matrix(&p, freq, grid).unwrap();
    let len = grid.len();
    for b in 0..len {
        let mut e = vec![Complex64::new(0.0, 0.0); len];
        e[b] = Complex64::new(1.0, 0.0);
        let col = adjoint_apply(&p, &PeriodicFunction::new(grid, e).unwrap(), freq).unwrap();
        for (row, v) in col.values().iter().enumerate() {
            assert!((v - a[b * len + row].conj()).norm() < 1e-12);
        }
    }
}

#[test]
fn adjoint_inner_products() {
    let grid = TorusGrid::new(2, 10).unwrap();
    let freq = FreqBox::new(2, 4).unwrap();
    let p = Symbol::new(2, "mixed", SymbolClass::classical(0.0), |x: &[f64], xi: &[f64]| {
        Complex64::from_polar(1.0 + 0.2 * (2.0 * PI * x[1]).sin(), 0.1 * xi[0] + x[0])
            / (1.0 + xi[0] * xi[0] + xi[1] * xi[1]).sqrt()
    });
    for seed in 0..20 {
        let f = random_function(grid, 100 + seed);
        let g = random_function(grid, 200 + seed);
        let lhs = apply(&p, &f, freq).unwrap().inner(&g).unwrap();
        let rhs = f.inner(&adjoint_apply(&p, &g, freq).unwrap()).unwrap();
        assert!((lhs - rhs).norm() < 1e-12, "seed {seed}");
    }
}

#[test]
fn t_star_one_detects_nonconstant_space_profiles() {
    let grid = TorusGrid::new(1, 128).unwrap();
    let freq = FreqBox::new(1, 40).unwrap();
    for m in [-1.0, 0.0, 0.5] {
        let r = t_star_one(&multiplier(1, m), freq, grid, 1e-10).unwrap();
        assert!(r.bmo <= 1e-10 && r.vanishes);
    }
    let r = t_star_one(
        &separable(1, SpaceProfile::Cos.function(), 0.0, "cos"),
        freq,
        grid,
        1e-8,
    )
    .unwrap();
    assert!(!r.vanishes);
    assert!(r.bmo > 0.1);
}

#[test]
fn ladder_reconstructs_truncated_kernel() {
    let grid = TorusGrid::new(1, 256).unwrap();
    let freq = FreqBox::new(1, 64).unwrap();
    let sources = vec![vec![0.0], vec![0.4]];
    for p in [multiplier(1, -1.0), trig_symbol()] {
        let full = kernel(&p, freq, grid, Cutoff::None, KernelSide::Right, &sources).unwrap();
        let ladder = ladder_kernel(&p, freq, grid, DEFAULT_LADDER_REFINEMENT, KernelSide::Right, &sources).unwrap();
        assert!(full.max_abs_diff(&ladder).unwrap() < 1e-8);
    }
}

#[test]
fn octave_pieces_are_frequency_localized() {
    let freq = FreqBox::new(1, 64).unwrap();
    let t = 16.0;
    for xi in freq.frequencies() {
        let b = (1.0 + (xi[0] * xi[0]) as f64).sqrt();
        let w = Cutoff::Octave { t }.weight(&xi);
        if b <= t / 2.0 || b >= t {
            assert_eq!(w, 0.0, "xi = {xi:?}");
        }
    }
}

#[test]
fn kernel_decay_on_a_fine_grid() {
    // At sigma = 1/32 three annuli fit inside the torus.
    let grid = TorusGrid::new(1, 1024).unwrap();
    let freq = FreqBox::new(1, 256).unwrap();
    let p = multiplier(1, -1.0);
    let probes = ProbeSet::standard(1, 0);
    let q = AnnulusQuery::new(1.0 / 32.0, 1.0, KernelSide::Right, Cutoff::smooth_for(freq));
    let est = annulus_kernel_estimate(&p, freq, grid, &[0.0], &q, &probes).unwrap();
    let filled: Vec<f64> = est
        .integrals
        .iter()
        .filter(|a| a.cells > 0)
        .map(|a| a.integral)
        .collect();
    assert_eq!(filled.len(), 3);
    assert!(filled.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn d_condition_is_finite_for_smoothing_multipliers() {
    let grid = TorusGrid::new(1, 256).unwrap();
    let freq = FreqBox::new(1, 64).unwrap();
    let query = DConditionQuery {
        r: 1.0,
        alpha: 1.0,
        omega: 1.0,
        sigmas: vec![0.125, 0.0625],
        centers: vec![vec![0.0], vec![0.37]],
        cutoff: Cutoff::smooth_for(freq),
        holder: true,
    };
    let report = d_condition_check(&multiplier(1, -1.0), freq, grid, &query, &ProbeSet::standard(1, 1)).unwrap();
    assert!(report.finite);
    assert!(report.sum > 0.0 && report.sum.is_finite());
    assert!(report.holder_constant.is_some_and(f64::is_finite));
}

#[test]
fn coefficients_of_outputs_stay_in_the_box() {
    let grid = TorusGrid::new(1, 64).unwrap();
    let freq = FreqBox::new(1, 10).unwrap();
    let wide = FreqBox::new(1, 30).unwrap();
    let out = apply(&multiplier(1, -1.0), &random_function(grid, 8), freq).unwrap();
    let c = forward_ft(&out, wide).unwrap();
    for (xi, v) in wide.frequencies().zip(c.values()) {
        if xi[0].abs() > 10 {
            assert!(v.norm() < 1e-13);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn n_sigma_double_inequality(sigma in 1e-4f64..3.0, n in 1usize..5) {
        let k = n_sigma(sigma, n).unwrap();
        let root = (n as f64).sqrt();
        // beyond sqrt(n) no annulus exists and the count clamps to zero
        prop_assume!(sigma <= root);
        let two_k = (k as f64).exp2();
        prop_assert!(two_k <= root / sigma);
        prop_assert!(root / (2.0 * sigma) < two_k);
    }

    #[test]
    fn annuli_are_disjoint_and_cover_with_the_core(
        z in 0.0f64..1.0,
        sigma in 0.01f64..0.2,
    ) {
        let grid = TorusGrid::new(1, 128).unwrap();
        let dec = AnnulusDecomposition::new(grid, &[z], sigma).unwrap();
        let mut seen = vec![0u32; grid.len()];
        for a in dec.annuli() {
            for &c in &a.cells {
                seen[c] += 1;
            }
        }
        let dist = grid.distances_from(&[z]);
        for (k, count) in seen.iter().enumerate() {
            prop_assert!(*count <= 1);
            let on_boundary = (0..=dec.n_sigma() + 1)
                .any(|j| (dist[k] - (j as f64).exp2() * sigma).abs() < 1e-12);
            if dist[k] >= 2.0 * sigma && !on_boundary {
                prop_assert_eq!(*count, 1);
            }
        }
    }

    #[test]
    fn multipliers_commute(m1 in -2.0f64..1.0, m2 in -2.0f64..1.0, seed in 0u64..1000) {
        let grid = TorusGrid::new(1, 32).unwrap();
        let freq = FreqBox::new(1, 12).unwrap();
        let f = random_function(grid, seed);
        let (a, b) = (multiplier(1, m1), multiplier(1, m2));
        let ab = apply(&a, &apply(&b, &f, freq).unwrap(), freq).unwrap();
        let ba = apply(&b, &apply(&a, &f, freq).unwrap(), freq).unwrap();
        let joint = apply(&multiplier(1, m1 + m2), &f, freq).unwrap();
        prop_assert!(ab.max_abs_diff(&ba).unwrap() < 1e-12);
        prop_assert!(ab.max_abs_diff(&joint).unwrap() < 1e-12);
    }
}
