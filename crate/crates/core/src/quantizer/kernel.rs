//! Schwartz kernels `k(x, y) = sum_xi exp(2 pi i (x - y).xi) p(x, xi) w(xi)`
//! with a frequency weight `w` (raw truncation, a smooth cutoff, or one
//! Littlewood-Paley octave).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{LN_2, PI};
use std::io::Write;
use std::sync::OnceLock;

use super::{apply_coefficients, check_symbol};
use crate::error::{Error, Result};
use crate::symbol::Symbol;
use crate::torus::{bracket_int, inverse_ft, FreqBox, LatticeFunction, PeriodicFunction, TorusGrid, ZERO};

/// `chi(r)`: 1 on `[0, 1/2]`, 0 on `[1, inf)`, and in between the
/// infinitely flat transition `h(1-s) / (h(1-s) + h(s))`, `s = 2r - 1`,
/// `h(t) = exp(-1/t)`.
pub fn smooth_cutoff(r: f64) -> f64 {
    if r <= 0.5 {
        return 1.0;
    }
    if r >= 1.0 {
        return 0.0;
    }
    let h = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let s = 2.0 * r - 1.0;
    let a = h(1.0 - s);
    a / (a + h(s))
}

fn octave_normalization() -> f64 {
    static NORM: OnceLock<f64> = OnceLock::new();
    *NORM.get_or_init(|| {
        // trapezoid on a flat-ended integrand; converges faster than any power
        let steps = 8192;
        let h = 2.0 / steps as f64;
        let integral: f64 = (1..steps)
            .map(|i| {
                let s = -1.0 + i as f64 * h;
                (-1.0 / (1.0 - s * s)).exp()
            })
            .sum::<f64>()
            * h;
        1.0 / (integral * LN_2 / 2.0)
    })
}

/// Octave bump `phi(u) = c exp(-1/(1 - s^2))`, `s = 2 log2(u) + 1`, supported
/// in `(1/2, 1)` and normalized so that `int phi(u) du/u = 1`.
pub fn octave_bump(u: f64) -> f64 {
    if u <= 0.5 || u >= 1.0 {
        return 0.0;
    }
    let s = 2.0 * u.log2() + 1.0;
    octave_normalization() * (-1.0 / (1.0 - s * s)).exp()
}

/// One rung `t` of the log-ladder together with its quadrature weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LadderStep {
    pub t: f64,
    pub weight: f64,
}

/// Rungs per octave used by [`ladder_kernel`] unless told otherwise.
pub const DEFAULT_LADDER_REFINEMENT: usize = 256;

/// Refined dyadic ladder `t_i = 2^(i/K)`, `i = 0..=K L`, weights `ln 2 / K`,
/// with `2^L >= 2 max_bracket`. Then
/// `sum_i weight_i phi(b / t_i) = int phi(b/t) dt/t = 1` for `1 <= b <= max_bracket`,
/// up to a trapezoid error that decays faster than any power of `K`.
/// `K = 1` is the plain ladder `t = 2^i`.
pub fn octave_ladder(max_bracket: f64, refinement: usize) -> Result<Vec<LadderStep>> {
    if refinement == 0 {
        return Err(Error::param("refinement", 0.0, "need at least one rung per octave"));
    }
    if !(max_bracket >= 1.0) {
        return Err(Error::param("max_bracket", max_bracket, "brackets are at least 1"));
    }
    let octaves = (2.0 * max_bracket).log2().ceil() as usize;
    let k = refinement as f64;
    Ok((0..=refinement * octaves)
        .map(|i| LadderStep {
            t: (i as f64 / k).exp2(),
            weight: LN_2 / k,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Cutoff {
    /// Raw truncation at the box.
    None,
    /// `chi(<xi> / scale)`.
    Smooth { scale: f64 },
    /// `phi(<xi> / t)`, one octave of the Littlewood-Paley ladder.
    Octave { t: f64 },
}

impl Cutoff {
    /// Smooth cutoff scaled to the box radius.
    pub fn smooth_for(freq: FreqBox) -> Self {
        Cutoff::Smooth {
            scale: freq.radius() as f64,
        }
    }

    pub fn weight(&self, xi: &[i64]) -> f64 {
        match *self {
            Cutoff::None => 1.0,
            Cutoff::Smooth { scale } => smooth_cutoff(bracket_int(xi) / scale),
            Cutoff::Octave { t } => octave_bump(bracket_int(xi) / t),
        }
    }

    pub fn weights(&self, freq: FreqBox) -> Vec<f64> {
        (0..freq.len()).map(|i| self.weight(&freq.frequency(i))).collect()
    }
}

/// Which slice of the kernel is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSide {
    /// `x -> k(x, y)`.
    Right,
    /// `x -> k(y, x)`, the transposed kernel.
    Left,
}

/// Kernel slices through a list of source points, sampled on a grid.
#[derive(Debug, Clone)]
pub struct KernelField {
    grid: TorusGrid,
    side: KernelSide,
    cutoff: Cutoff,
    sources: Vec<Vec<f64>>,
    slices: Vec<PeriodicFunction>,
}

impl KernelField {
    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn side(&self) -> KernelSide {
        self.side
    }

    pub fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    pub fn sources(&self) -> &[Vec<f64>] {
        &self.sources
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn slice(&self, source: usize) -> &PeriodicFunction {
        &self.slices[source]
    }

    /// Slice at `source` minus slice at `base`.
    pub fn difference(&self, source: usize, base: usize) -> PeriodicFunction {
        self.slices[source]
            .zip_with(&self.slices[base], |a, b| a - b)
            .expect("slices share a grid")
    }

    /// Largest entrywise deviation from another field over the same sources.
    pub fn max_abs_diff(&self, other: &KernelField) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        let mut worst: f64 = 0.0;
        for (a, b) in self.slices.iter().zip(&other.slices) {
            worst = worst.max(a.max_abs_diff(b)?);
        }
        Ok(worst)
    }

    /// CSV with columns `source,x_index,re,im`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["source", "x_index", "re", "im"])?;
        for (s, slice) in self.slices.iter().enumerate() {
            for (i, v) in slice.values().iter().enumerate() {
                w.write_record(&[s.to_string(), i.to_string(), v.re.to_string(), v.im.to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))
    }
}

/// Single kernel value by direct summation over the box.
pub fn kernel_at(p: &Symbol, freq: FreqBox, cutoff: Cutoff, x: &[f64], y: &[f64]) -> Complex64 {
    let mut acc = ZERO;
    for xi in freq.frequencies() {
        let w = cutoff.weight(&xi);
        if w == 0.0 {
            continue;
        }
        let phase: f64 = x.iter().zip(y).zip(&xi).map(|((a, b), &k)| (a - b) * k as f64).sum();
        acc += Complex64::from_polar(w, 2.0 * PI * phase) * p.eval_lattice(x, &xi);
    }
    acc
}

fn kernel_slices(
    p: &Symbol,
    freq: FreqBox,
    grid: TorusGrid,
    weights: &[f64],
    side: KernelSide,
    sources: &[Vec<f64>],
) -> Result<Vec<PeriodicFunction>> {
    check_symbol(p, grid, freq)?;
    for y in sources {
        if y.len() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                found: y.len(),
            });
        }
    }
    let phase =
        |y: &[f64], xi: &[i64]| -> f64 { -2.0 * PI * y.iter().zip(xi).map(|(a, &k)| a * k as f64).sum::<f64>() };
    sources
        .par_iter()
        .map(|y| match side {
            KernelSide::Right => {
                let mut c = LatticeFunction::zeros(freq);
                for (i, slot) in c.values_mut().iter_mut().enumerate() {
                    if weights[i] != 0.0 {
                        *slot = Complex64::from_polar(weights[i], phase(y, &freq.frequency(i)));
                    }
                }
                apply_coefficients(p, &c, grid)
            }
            KernelSide::Left => {
                // k(y, x) = sum_eta exp(2 pi i x.eta) exp(-2 pi i y.eta) p(y, -eta) w(-eta)
                let mut c = LatticeFunction::zeros(freq);
                for (i, slot) in c.values_mut().iter_mut().enumerate() {
                    let eta = freq.frequency(i);
                    let neg: Vec<i64> = eta.iter().map(|v| -v).collect();
                    let j = freq.index_of(&neg).expect("boxes are symmetric");
                    if weights[j] != 0.0 {
                        *slot = Complex64::from_polar(weights[j], phase(y, &eta)) * p.eval_lattice(y, &neg);
                    }
                }
                inverse_ft(&c, grid)
            }
        })
        .collect()
}

/// Kernel slices through `sources`, sampled on `grid`.
pub fn kernel(
    p: &Symbol,
    freq: FreqBox,
    grid: TorusGrid,
    cutoff: Cutoff,
    side: KernelSide,
    sources: &[Vec<f64>],
) -> Result<KernelField> {
    let weights = cutoff.weights(freq);
    Ok(KernelField {
        grid,
        side,
        cutoff,
        sources: sources.to_vec(),
        slices: kernel_slices(p, freq, grid, &weights, side, sources)?,
    })
}

/// Frequency-localized kernel piece with weight `phi(<xi> / t)`.
pub fn lp_kernel_piece(
    p: &Symbol,
    freq: FreqBox,
    grid: TorusGrid,
    t: f64,
    side: KernelSide,
    sources: &[Vec<f64>],
) -> Result<KernelField> {
    if !(t >= 1.0) {
        return Err(Error::param("t", t, "octave scale below 1 selects no frequencies"));
    }
    kernel(p, freq, grid, Cutoff::Octave { t }, side, sources)
}

/// Sum of weighted octave pieces over [`octave_ladder`]; approximates the
/// raw truncated kernel.
pub fn ladder_kernel(
    p: &Symbol,
    freq: FreqBox,
    grid: TorusGrid,
    refinement: usize,
    side: KernelSide,
    sources: &[Vec<f64>],
) -> Result<KernelField> {
    let corner = vec![freq.radius() as i64; freq.dim()];
    let ladder = octave_ladder(bracket_int(&corner), refinement)?;
    let mut total = vec![PeriodicFunction::zeros(grid); sources.len()];
    for step in ladder {
        let piece = lp_kernel_piece(p, freq, grid, step.t, side, sources)?;
        for (acc, slice) in total.iter_mut().zip(&piece.slices) {
            for (a, v) in acc.values_mut().iter_mut().zip(slice.values()) {
                *a += v * step.weight;
            }
        }
    }
    Ok(KernelField {
        grid,
        side,
        cutoff: Cutoff::None,
        sources: sources.to_vec(),
        slices: total,
    })
}
