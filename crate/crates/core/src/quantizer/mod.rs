//! Quantization `Op(p) f(x) = sum_xi exp(2 pi i x.xi) p(x, xi) Ff(xi)` on a
//! truncated frequency box, its grid adjoint, and the kernel diagnostics.

mod annulus;
mod kernel;

pub use annulus::{
    annulus_kernel_estimate, d_condition_check, fit_line, fit_log2_slope, Annulus, AnnulusDecomposition,
    AnnulusEstimate, AnnulusIntegral, AnnulusQuery, DConditionQuery, DConditionReport, DConditionRow, LineFit,
    ProbeSet, ScaleRegime, MIN_FIT_CELLS,
};
pub use kernel::{
    kernel, kernel_at, ladder_kernel, lp_kernel_piece, octave_bump, octave_ladder, smooth_cutoff, Cutoff, KernelField,
    KernelSide, LadderStep, DEFAULT_LADDER_REFINEMENT,
};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hardy::bmo_norm;
use crate::symbol::Symbol;
use crate::torus::{forward_ft, inverse_ft, FreqBox, LatticeFunction, PeriodicFunction, TorusGrid, TwiddleTable, ZERO};

fn check_symbol(p: &Symbol, grid: TorusGrid, freq: FreqBox) -> Result<()> {
    if p.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            found: p.dim(),
        });
    }
    grid.check_band(&freq)
}

/// `Op(p) f` on the grid of `f`, summing over `freq`.
pub fn apply(p: &Symbol, f: &PeriodicFunction, freq: FreqBox) -> Result<PeriodicFunction> {
    check_symbol(p, f.grid(), freq)?;
    let coefficients = forward_ft(f, freq)?;
    apply_coefficients(p, &coefficients, f.grid())
}

/// `sum_xi exp(2 pi i x.xi) p(x, xi) c(xi)` on `grid` for given coefficients `c`.
///
/// Multipliers go through one inverse FFT; general symbols are summed
/// directly, in parallel over grid points.
pub fn apply_coefficients(p: &Symbol, coefficients: &LatticeFunction, grid: TorusGrid) -> Result<PeriodicFunction> {
    let freq = coefficients.freq_box();
    check_symbol(p, grid, freq)?;
    let n = grid.dim();
    let origin = vec![0.0; n];

    if p.is_x_independent() {
        let scaled = coefficients.map_indexed(|xi, c| c * p.eval_lattice(&origin, xi));
        return inverse_ft(&scaled, grid);
    }

    let table = TwiddleTable::new(grid.points_per_axis());
    let freqs: Vec<Vec<i64>> = freq.frequencies().collect();
    let freqs_real: Vec<Vec<f64>> = freqs.iter().map(|xi| xi.iter().map(|&v| v as f64).collect()).collect();
    let coeffs = coefficients.values();
    let values: Vec<Complex64> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let idx = grid.multi_index(k);
            let x = grid.point(k);
            let mut acc = ZERO;
            for (i, c) in coeffs.iter().enumerate() {
                if *c == ZERO {
                    continue;
                }
                let phase = table.get(grid.phase_index(&idx, &freqs[i]));
                acc += phase * p.eval(&x, &freqs_real[i]) * c;
            }
            acc
        })
        .collect();
    PeriodicFunction::new(grid, values)
}

/// Adjoint of `f -> apply(p, f, freq)` with respect to the grid inner product
/// `<u, v> = G^{-n} sum u conj(v)`:
/// `T* g(y) = sum_xi exp(2 pi i y.xi) G^{-n} sum_x exp(-2 pi i x.xi) conj(p(x, xi)) g(x)`.
pub fn adjoint_apply(p: &Symbol, g: &PeriodicFunction, freq: FreqBox) -> Result<PeriodicFunction> {
    let grid = g.grid();
    check_symbol(p, grid, freq)?;
    let n = grid.dim();

    if p.is_x_independent() {
        let origin = vec![0.0; n];
        let coefficients = forward_ft(g, freq)?;
        let scaled = coefficients.map_indexed(|xi, c| c * p.eval_lattice(&origin, xi).conj());
        return inverse_ft(&scaled, grid);
    }

    let table = TwiddleTable::new(grid.points_per_axis());
    let points: Vec<Vec<f64>> = grid.points().collect();
    let indices: Vec<Vec<usize>> = (0..grid.len()).map(|k| grid.multi_index(k)).collect();
    let w = grid.cell_volume();
    let values = g.values();
    let coefficients: Vec<Complex64> = (0..freq.len())
        .into_par_iter()
        .map(|i| {
            let xi = freq.frequency(i);
            let xi_r: Vec<f64> = xi.iter().map(|&v| v as f64).collect();
            let mut acc = ZERO;
            for (k, v) in values.iter().enumerate() {
                let phase = table.get(grid.phase_index(&indices[k], &xi)).conj();
                acc += phase * p.eval(&points[k], &xi_r).conj() * v;
            }
            acc * w
        })
        .collect();
    inverse_ft(&LatticeFunction::new(freq, coefficients)?, grid)
}

/// Dense matrix `A` of `apply` on the grid, `Tf(x_a) = sum_b A[a][b] f(x_b)`,
/// stored row-major. Sized `G^{2n}`; meant for small grids.
pub fn operator_matrix(p: &Symbol, freq: FreqBox, grid: TorusGrid) -> Result<Vec<Complex64>> {
    check_symbol(p, grid, freq)?;
    let len = grid.len();
    let mut columns = Vec::with_capacity(len);
    for b in 0..len {
        let mut e = vec![ZERO; len];
        e[b] = Complex64::new(1.0, 0.0);
        columns.push(apply(p, &PeriodicFunction::new(grid, e)?, freq)?);
    }
    let mut matrix = vec![ZERO; len * len];
    for (b, col) in columns.iter().enumerate() {
        for (a, v) in col.values().iter().enumerate() {
            matrix[a * len + b] = *v;
        }
    }
    Ok(matrix)
}

/// `T*(1)` and its BMO norm; `vanishes` when the norm is within `tolerance`
/// (constants are BMO-null).
#[derive(Debug, Clone, Serialize)]
pub struct TStarOne {
    #[serde(skip)]
    pub function: PeriodicFunction,
    pub bmo: f64,
    pub tolerance: f64,
    pub vanishes: bool,
}

/// Default BMO-null tolerance for exact multiplier cases.
pub const T_STAR_ONE_TOLERANCE: f64 = 1e-8;

pub fn t_star_one(p: &Symbol, freq: FreqBox, grid: TorusGrid, tolerance: f64) -> Result<TStarOne> {
    let one = PeriodicFunction::constant(grid, Complex64::new(1.0, 0.0));
    let function = adjoint_apply(p, &one, freq)?;
    let bmo = bmo_norm(&function);
    Ok(TStarOne {
        function,
        bmo,
        tolerance,
        vanishes: bmo <= tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::{bessel_symbol, multiplier, separable, SpaceProfile};
    use std::f64::consts::PI;

    fn character(grid: TorusGrid, xi: i64) -> PeriodicFunction {
        PeriodicFunction::from_fn(grid, |x| Complex64::from_polar(1.0, 2.0 * PI * x[0] * xi as f64))
    }

    #[test]
    fn identity_symbol_reproduces_bandlimited_input() {
        let grid = TorusGrid::new(1, 64).unwrap();
        let freq = FreqBox::new(1, 20).unwrap();
        let f = PeriodicFunction::from_real(grid, |x| (2.0 * PI * 3.0 * x[0]).cos() + 0.5);
        let out = apply(&multiplier(1, 0.0), &f, freq).unwrap();
        assert!(out.max_abs_diff(&f).unwrap() < 1e-12);
    }

    #[test]
    fn characters_are_eigenfunctions_of_bessel_potentials() {
        let grid = TorusGrid::new(1, 64).unwrap();
        let freq = FreqBox::new(1, 20).unwrap();
        for (s, xi0) in [(2.0, 5), (-1.5, -7), (0.5, 0)] {
            let f = character(grid, xi0);
            let out = apply(&bessel_symbol(1, s), &f, freq).unwrap();
            let expect = f.scale(Complex64::new((1.0 + (xi0 * xi0) as f64).powf(s / 2.0), 0.0));
            assert!(out.max_abs_diff(&expect).unwrap() < 1e-10);
        }
    }

    #[test]
    fn general_path_agrees_with_multiplier_path() {
        let grid = TorusGrid::new(1, 32).unwrap();
        let freq = FreqBox::new(1, 10).unwrap();
        let f = PeriodicFunction::from_real(grid, |x| (2.0 * PI * x[0]).sin().exp());
        let fast = apply(&multiplier(1, -1.0), &f, freq).unwrap();
        let slow_symbol = separable(1, SpaceProfile::One.function(), -1.0, "separable");
        let slow = apply(&slow_symbol, &f, freq).unwrap();
        assert!(fast.max_abs_diff(&slow).unwrap() < 1e-12);
    }

    #[test]
    fn adjoint_of_real_multiplier_is_itself() {
        let grid = TorusGrid::new(1, 32).unwrap();
        let freq = FreqBox::new(1, 12).unwrap();
        let p = bessel_symbol(1, -0.7);
        let g = PeriodicFunction::from_real(grid, |x| (2.0 * PI * 2.0 * x[0]).cos() + x[0].min(0.3));
        let g = apply(&multiplier(1, 0.0), &g, freq).unwrap();
        let a = adjoint_apply(&p, &g, freq).unwrap();
        let t = apply(&p, &g, freq).unwrap();
        assert!(a.max_abs_diff(&t).unwrap() < 1e-10);
    }

    #[test]
    fn t_star_one_of_multiplier_is_constant() {
        let grid = TorusGrid::new(1, 64).unwrap();
        let freq = FreqBox::new(1, 16).unwrap();
        let res = t_star_one(&bessel_symbol(1, -1.0), freq, grid, T_STAR_ONE_TOLERANCE).unwrap();
        assert!(res.vanishes);
        assert!(res.bmo <= 1e-10);
        for v in res.function.values() {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }
}
