//! Uniform grids on the torus `T^n = R^n / Z^n`, truncated frequency boxes in
//! `Z^n`, and the toroidal Fourier transform pair between them.
//!
//! Layout conventions, shared by every array in the crate:
//!
//! * a [`TorusGrid`] with `G` points per axis samples `x_k = k / G`,
//!   `k in {0..G-1}^n`, stored row-major with the last axis fastest;
//! * a [`FreqBox`] of radius `N` enumerates `Z^n ∩ [-N, N]^n`
//!   lexicographically, again with the last axis fastest, so the first entry
//!   is `(-N, .., -N)` and the centre entry is the zero frequency.
//!
//! Integrals are uniform Riemann sums with weight `G^-n`. This rule is exact
//! for trigonometric polynomials whose degree is below `G / 2`, which makes
//! every band-limited identity (inversion, Parseval) exact up to roundoff.

use num_complex::Complex64;
use rustfft::FftDirection;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fft::fft_nd;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `<xi> = (1 + |xi|^2)^(1/2)`.
pub fn japanese_bracket(xi: &[f64]) -> f64 {
    (1.0 + xi.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

pub(crate) fn bracket_int(xi: &[i64]) -> f64 {
    (1.0 + xi.iter().map(|&v| (v * v) as f64).sum::<f64>()).sqrt()
}

/// Distance on the torus: `min_{kappa in Z^n} |x - z + kappa|`.
pub fn periodic_distance(x: &[f64], z: &[f64]) -> f64 {
    x.iter()
        .zip(z)
        .map(|(a, b)| {
            let d = wrap_signed(a - b);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Representative of `t` modulo 1 in `[-1/2, 1/2)`.
pub fn wrap_signed(t: f64) -> f64 {
    let r = t - t.round();
    if r >= 0.5 {
        r - 1.0
    } else {
        r
    }
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(dim - 2) * 2.0 * PI / dim as f64,
    }
}

/// Analytic ball volume `min(omega_n r^n, 1)`, clipped at the torus volume.
pub fn ball_volume(dim: usize, radius: f64) -> f64 {
    (unit_ball_volume(dim) * radius.powi(dim as i32)).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TorusGrid {
    dim: usize,
    points: usize,
}

impl TorusGrid {
    pub fn new(dim: usize, points: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", 0.0, "dimension must be positive"));
        }
        if points == 0 {
            return Err(Error::param("points", 0.0, "grid needs at least one point"));
        }
        Ok(Self { dim, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        (self.points as f64).powi(-(self.dim as i32))
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.points as f64
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim];
        for slot in idx.iter_mut().rev() {
            *slot = flat % self.points;
            flat /= self.points;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &k| acc * self.points + k % self.points)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        self.point_into(flat, &mut x);
        x
    }

    pub fn point_into(&self, mut flat: usize, out: &mut [f64]) {
        let h = self.spacing();
        for slot in out.iter_mut().rev() {
            *slot = (flat % self.points) as f64 * h;
            flat /= self.points;
        }
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    /// Periodic distance from `z` to every grid point.
    pub fn distances_from(&self, z: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        (0..self.len())
            .map(|i| {
                self.point_into(i, &mut x);
                periodic_distance(&x, z)
            })
            .collect()
    }

    /// Grid-counting estimate of `|B(z, r)|` (open ball).
    pub fn ball_measure(&self, z: &[f64], radius: f64) -> f64 {
        let count = self.distances_from(z).iter().filter(|&&d| d < radius).count();
        count as f64 * self.cell_volume()
    }

    pub fn quadrature(&self, values: &[Complex64]) -> Complex64 {
        values.iter().sum::<Complex64>() * self.cell_volume()
    }

    /// Fails unless every frequency of `freq` is resolved without aliasing.
    pub fn check_band(&self, freq: &FreqBox) -> Result<()> {
        if freq.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: freq.dim(),
            });
        }
        if 2 * freq.radius() >= self.points {
            return Err(Error::Aliasing {
                radius: freq.radius(),
                points: self.points,
            });
        }
        Ok(())
    }

    pub(crate) fn check_same(&self, other: &TorusGrid) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        if self.points != other.points {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(())
    }

    /// Flat grid-spectrum slot holding frequency `xi` (taken modulo `G`).
    pub(crate) fn spectrum_slot(&self, xi: &[i64]) -> usize {
        let g = self.points as i64;
        xi.iter()
            .fold(0usize, |acc, &k| acc * self.points + k.rem_euclid(g) as usize)
    }

    /// `k . xi mod G` for grid multi-index `k`, used with [`TwiddleTable`].
    pub(crate) fn phase_index(&self, k: &[usize], xi: &[i64]) -> usize {
        let g = self.points as i64;
        let s: i64 = k.iter().zip(xi).map(|(&a, &b)| a as i64 * b).sum();
        s.rem_euclid(g) as usize
    }
}

/// `exp(2 pi i m / G)` for `m in 0..G`.
pub(crate) struct TwiddleTable(Vec<Complex64>);

impl TwiddleTable {
    pub(crate) fn new(points: usize) -> Self {
        Self(
            (0..points)
                .map(|m| Complex64::from_polar(1.0, 2.0 * PI * m as f64 / points as f64))
                .collect(),
        )
    }

    pub(crate) fn get(&self, m: usize) -> Complex64 {
        self.0[m]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FreqBox {
    dim: usize,
    radius: usize,
}

impl FreqBox {
    pub fn new(dim: usize, radius: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", 0.0, "dimension must be positive"));
        }
        if radius == 0 {
            return Err(Error::param("radius", 0.0, "truncation radius must be positive"));
        }
        Ok(Self { dim, radius })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn len(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn frequency(&self, mut flat: usize) -> Vec<i64> {
        let side = self.side();
        let mut xi = vec![0i64; self.dim];
        for slot in xi.iter_mut().rev() {
            *slot = (flat % side) as i64 - self.radius as i64;
            flat /= side;
        }
        xi
    }

    pub fn index_of(&self, xi: &[i64]) -> Option<usize> {
        if xi.len() != self.dim {
            return None;
        }
        let r = self.radius as i64;
        let side = self.side();
        let mut flat = 0usize;
        for &k in xi {
            if k < -r || k > r {
                return None;
            }
            flat = flat * side + (k + r) as usize;
        }
        Some(flat)
    }

    pub fn zero_index(&self) -> usize {
        (self.len() - 1) / 2
    }

    pub fn frequencies(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.len()).map(move |i| self.frequency(i))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicFunction {
    grid: TorusGrid,
    values: Vec<Complex64>,
}

impl PeriodicFunction {
    pub fn new(grid: TorusGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let mut x = vec![0.0; grid.dim()];
        let values = (0..grid.len())
            .map(|i| {
                grid.point_into(i, &mut x);
                f(&x)
            })
            .collect();
        Self { grid, values }
    }

    pub fn from_real(grid: TorusGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn constant(grid: TorusGrid, c: Complex64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self::constant(grid, ZERO)
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn integral(&self) -> Complex64 {
        self.grid.quadrature(&self.values)
    }

    /// `(int |f|^p)^(1/p)` by grid quadrature; `p = inf` gives the max modulus.
    /// For `0 < p < 1` this is the usual quasi-norm.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.sup_norm();
        }
        let s: f64 = self.values.iter().map(|v| v.norm().powf(p)).sum();
        (s * self.grid.cell_volume()).powf(1.0 / p)
    }

    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (s * self.grid.cell_volume()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `<self, other> = int self * conj(other)`.
    pub fn inner(&self, other: &PeriodicFunction) -> Result<Complex64> {
        self.grid.check_same(&other.grid)?;
        let s: Complex64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum();
        Ok(s * self.grid.cell_volume())
    }

    pub fn max_abs_diff(&self, other: &PeriodicFunction) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &PeriodicFunction, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| v * c)
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeFunction {
    freq: FreqBox,
    values: Vec<Complex64>,
}

impl LatticeFunction {
    pub fn new(freq: FreqBox, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != freq.len() {
            return Err(Error::LengthMismatch {
                expected: freq.len(),
                found: values.len(),
            });
        }
        Ok(Self { freq, values })
    }

    pub fn from_fn(freq: FreqBox, f: impl Fn(&[i64]) -> Complex64) -> Self {
        let values = (0..freq.len()).map(|i| f(&freq.frequency(i))).collect();
        Self { freq, values }
    }

    pub fn zeros(freq: FreqBox) -> Self {
        Self {
            freq,
            values: vec![ZERO; freq.len()],
        }
    }

    /// Indicator of a single frequency; `None` if it lies outside the box.
    pub fn indicator(freq: FreqBox, xi: &[i64]) -> Option<Self> {
        let idx = freq.index_of(xi)?;
        let mut out = Self::zeros(freq);
        out.values[idx] = Complex64::new(1.0, 0.0);
        Some(out)
    }

    pub fn freq_box(&self) -> FreqBox {
        self.freq
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn get(&self, xi: &[i64]) -> Option<Complex64> {
        self.freq.index_of(xi).map(|i| self.values[i])
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn max_abs_diff(&self, other: &LatticeFunction) -> Result<f64> {
        if self.freq != other.freq {
            return Err(Error::LengthMismatch {
                expected: self.freq.len(),
                found: other.freq.len(),
            });
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn map_indexed(&self, f: impl Fn(&[i64], Complex64) -> Complex64) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| f(&self.freq.frequency(i), v))
            .collect();
        Self {
            freq: self.freq,
            values,
        }
    }
}

/// Toroidal Fourier coefficients `int exp(-2 pi i x.xi) f(x) dx` on `freq`.
///
/// Evaluated with a tensor FFT; the result equals the direct quadrature sum.
pub fn forward_ft(f: &PeriodicFunction, freq: FreqBox) -> Result<LatticeFunction> {
    let grid = f.grid();
    grid.check_band(&freq)?;
    let mut spectrum = f.values().to_vec();
    fft_nd(&mut spectrum, grid.dim(), grid.points_per_axis(), FftDirection::Forward);
    let w = grid.cell_volume();
    let values = (0..freq.len())
        .map(|i| spectrum[grid.spectrum_slot(&freq.frequency(i))] * w)
        .collect();
    Ok(LatticeFunction { freq, values })
}

/// `sum_{xi in box} exp(2 pi i x.xi) phi(xi)` sampled on `grid`.
pub fn inverse_ft(phi: &LatticeFunction, grid: TorusGrid) -> Result<PeriodicFunction> {
    let freq = phi.freq_box();
    grid.check_band(&freq)?;
    let mut spectrum = vec![ZERO; grid.len()];
    for (i, v) in phi.values().iter().enumerate() {
        spectrum[grid.spectrum_slot(&freq.frequency(i))] = *v;
    }
    fft_nd(&mut spectrum, grid.dim(), grid.points_per_axis(), FftDirection::Inverse);
    PeriodicFunction::new(grid, spectrum)
}

/// Smallest `C` with `|phi(xi)| <= C <xi>^(-M)` on the box.
pub fn schwartz_decay_report(phi: &LatticeFunction, order: f64) -> Result<f64> {
    if !(order > 0.0) {
        return Err(Error::param("order", order, "decay order must be positive"));
    }
    if phi.values().is_empty() {
        return Err(Error::Empty("lattice function"));
    }
    let freq = phi.freq_box();
    Ok(phi
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| v.norm() * bracket_int(&freq.frequency(i)).powf(order))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn box_enumeration_is_lexicographic() {
        let b = FreqBox::new(2, 1).unwrap();
        assert_eq!(b.len(), 9);
        assert_eq!(b.frequency(0), vec![-1, -1]);
        assert_eq!(b.frequency(1), vec![-1, 0]);
        assert_eq!(b.frequency(b.zero_index()), vec![0, 0]);
        for i in 0..b.len() {
            let xi = b.frequency(i);
            assert_eq!(b.index_of(&xi), Some(i));
            let neg: Vec<i64> = xi.iter().map(|v| -v).collect();
            assert!(b.index_of(&neg).is_some());
        }
        assert_eq!(b.index_of(&[2, 0]), None);
    }

    #[test]
    fn grid_quadrature_of_one_is_one() {
        for (n, g) in [(1, 16), (2, 8), (3, 4)] {
            let grid = TorusGrid::new(n, g).unwrap();
            let one = PeriodicFunction::constant(grid, c(1.0));
            assert!((one.integral() - c(1.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn periodic_distance_bounds() {
        let d = periodic_distance(&[0.9, 0.1], &[0.1, 0.9]);
        assert!((d - (0.08f64).sqrt()).abs() < 1e-14);
        assert!(periodic_distance(&[0.5, 0.5], &[0.0, 0.0]) <= (2.0f64).sqrt() / 2.0 + 1e-15);
        assert_eq!(wrap_signed(0.5), -0.5);
    }

    #[test]
    fn ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert_eq!(ball_volume(1, 0.75), 1.0);
        let grid = TorusGrid::new(1, 1024).unwrap();
        let est = grid.ball_measure(&[0.3], 0.1);
        assert!((est - ball_volume(1, 0.1)).abs() < 2.0 / 1024.0);
    }

    #[test]
    fn constant_has_single_coefficient() {
        let grid = TorusGrid::new(1, 32).unwrap();
        let freq = FreqBox::new(1, 8).unwrap();
        let phi = forward_ft(&PeriodicFunction::constant(grid, c(1.0)), freq).unwrap();
        for (i, v) in phi.values().iter().enumerate() {
            let expect = if i == freq.zero_index() { 1.0 } else { 0.0 };
            assert!((v - c(expect)).norm() < 1e-14);
        }
    }

    #[test]
    fn character_maps_to_indicator() {
        let grid = TorusGrid::new(2, 16).unwrap();
        let freq = FreqBox::new(2, 5).unwrap();
        let xi0 = [3i64, -2];
        let f = PeriodicFunction::from_fn(grid, |x| {
            Complex64::from_polar(1.0, 2.0 * PI * (x[0] * 3.0 - x[1] * 2.0))
        });
        let phi = forward_ft(&f, freq).unwrap();
        let target = LatticeFunction::indicator(freq, &xi0).unwrap();
        assert!(phi.max_abs_diff(&target).unwrap() < 1e-13);
    }

    #[test]
    fn aliasing_and_dimension_errors() {
        let grid = TorusGrid::new(1, 16).unwrap();
        let f = PeriodicFunction::zeros(grid);
        assert!(matches!(
            forward_ft(&f, FreqBox::new(1, 8).unwrap()),
            Err(Error::Aliasing { .. })
        ));
        assert!(matches!(
            forward_ft(&f, FreqBox::new(2, 2).unwrap()),
            Err(Error::DimensionMismatch { .. })
        ));
        let phi = LatticeFunction::zeros(FreqBox::new(1, 8).unwrap());
        assert!(inverse_ft(&phi, grid).is_err());
    }

    #[test]
    fn indicator_of_zero_inverts_to_one() {
        let grid = TorusGrid::new(1, 32).unwrap();
        let freq = FreqBox::new(1, 4).unwrap();
        let f = inverse_ft(&LatticeFunction::indicator(freq, &[0]).unwrap(), grid).unwrap();
        assert!(f.max_abs_diff(&PeriodicFunction::constant(grid, c(1.0))).unwrap() < 1e-14);
    }

    #[test]
    fn decay_report_trivial_cases() {
        let freq = FreqBox::new(2, 6).unwrap();
        let delta = LatticeFunction::indicator(freq, &[0, 0]).unwrap();
        assert_eq!(schwartz_decay_report(&delta, 7.0).unwrap(), 1.0);
        let poly = LatticeFunction::from_fn(freq, |xi| c(bracket_int(xi).powf(-3.0)));
        assert!((schwartz_decay_report(&poly, 3.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(schwartz_decay_report(&poly, 0.0).is_err());
    }
}
