//! Symbols on `T^n x Z^n`: forward differences in frequency, spectral
//! derivatives in space, sampled Hörmander class estimates, and a small
//! catalog of test symbols addressable by spec strings such as
//! `exotic:m=-1,rho=0.5`.
//!
//! Symbols are supplied as maps on `T^n x R^n` and used by restriction to the
//! lattice. Difference operators may therefore query frequencies just outside
//! a truncation box.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftDirection;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fft::fft_nd;
use crate::torus::{bracket_int, japanese_bracket, FreqBox, LatticeFunction, TorusGrid, ZERO};

pub type SymbolFn = dyn Fn(&[f64], &[f64]) -> Complex64 + Send + Sync;
pub type SpaceFn = dyn Fn(&[f64]) -> Complex64 + Send + Sync;

/// Multi-index in `N_0^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: &[i64]) -> Result<Self> {
        if entries.iter().any(|&e| e < 0) {
            return Err(Error::NegativeMultiIndex(entries.to_vec()));
        }
        Ok(Self(entries.iter().map(|&e| e as u32).collect()))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut e = vec![0; dim];
        e[axis] = 1;
        Self(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    /// Total order `|alpha|`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.order() == 0
    }

    pub fn add(&self, other: &MultiIndex) -> Result<MultiIndex> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect()))
    }

    /// Every multi-index of dimension `dim` with `|alpha| <= max_order`,
    /// ordered by total order and then lexicographically.
    pub fn all_up_to(dim: usize, max_order: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; dim];
        fn rec(axis: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if axis == cur.len() {
                out.push(MultiIndex(cur.clone()));
                return;
            }
            for k in 0..=left {
                cur[axis] = k;
                rec(axis + 1, left - k, cur, out);
            }
            cur[axis] = 0;
        }
        rec(0, max_order, &mut cur, &mut out);
        out.sort_by(|a, b| a.order().cmp(&b.order()).then_with(|| b.0.cmp(&a.0)));
        out
    }

    /// Pairs `(gamma, (-1)^{|alpha - gamma|} binom(alpha, gamma))` for `gamma <= alpha`.
    fn difference_stencil(&self) -> Vec<(Vec<i64>, f64)> {
        let mut terms: Vec<(Vec<i64>, f64)> = vec![(Vec::new(), 1.0)];
        for &a in &self.0 {
            let mut next = Vec::with_capacity(terms.len() * (a as usize + 1));
            for (shift, w) in &terms {
                for g in 0..=a {
                    let mut s = shift.clone();
                    s.push(g as i64);
                    let sign = if (a - g) % 2 == 0 { 1.0 } else { -1.0 };
                    next.push((s, w * sign * binomial(a, g)));
                }
            }
            terms = next;
        }
        terms
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "({})", parts.join(" "))
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Claimed Hörmander class `S^m_{rho,delta}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymbolClass {
    pub order: f64,
    pub rho: f64,
    pub delta: f64,
}

impl SymbolClass {
    pub fn new(order: f64, rho: f64, delta: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::param("rho", rho, "must lie in (0, 1]"));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::param("delta", delta, "must lie in [0, 1)"));
        }
        Ok(Self { order, rho, delta })
    }

    /// `S^m_{1,0}`.
    pub fn classical(order: f64) -> Self {
        Self {
            order,
            rho: 1.0,
            delta: 0.0,
        }
    }

    /// Weight exponent `m - rho|alpha| + delta|beta|`.
    pub fn weight_exponent(&self, alpha: &MultiIndex, beta: &MultiIndex) -> f64 {
        self.order - self.rho * alpha.order() as f64 + self.delta * beta.order() as f64
    }
}

#[derive(Clone)]
pub struct Symbol {
    dim: usize,
    label: String,
    class: SymbolClass,
    x_independent: bool,
    eval: Arc<SymbolFn>,
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Symbol")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .field("class", &self.class)
            .field("x_independent", &self.x_independent)
            .finish()
    }
}

impl Symbol {
    pub fn new(
        dim: usize,
        label: impl Into<String>,
        class: SymbolClass,
        eval: impl Fn(&[f64], &[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            label: label.into(),
            class,
            x_independent: false,
            eval: Arc::new(eval),
        }
    }

    /// Symbol depending on the frequency only (a Fourier multiplier).
    pub fn multiplier(
        dim: usize,
        label: impl Into<String>,
        class: SymbolClass,
        eval: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            label: label.into(),
            class,
            x_independent: true,
            eval: Arc::new(move |_x: &[f64], xi: &[f64]| eval(xi)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn class(&self) -> SymbolClass {
        self.class
    }

    pub fn is_x_independent(&self) -> bool {
        self.x_independent
    }

    pub fn eval(&self, x: &[f64], xi: &[f64]) -> Complex64 {
        (self.eval)(x, xi)
    }

    pub fn eval_lattice(&self, x: &[f64], xi: &[i64]) -> Complex64 {
        let xr: Vec<f64> = xi.iter().map(|&v| v as f64).collect();
        (self.eval)(x, &xr)
    }

    /// Largest `|p(x, xi) - p(x + e_j, xi)|` over `samples` seeded random
    /// points `x in [0,1)^n`, `xi in [-32, 32]^n`, and all axes `j`.
    pub fn periodicity_defect(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let x: Vec<f64> = (0..self.dim).map(|_| rng.random::<f64>()).collect();
            let xi: Vec<f64> = (0..self.dim).map(|_| rng.random_range(-32.0..32.0)).collect();
            let base = self.eval(&x, &xi);
            for j in 0..self.dim {
                let mut shifted = x.clone();
                shifted[j] += 1.0;
                worst = worst.max((self.eval(&shifted, &xi) - base).norm());
            }
        }
        worst
    }

    fn relabel(mut self, label: String, class: SymbolClass) -> Self {
        self.label = label;
        self.class = class;
        self
    }
}

/// Frequency-side forward differences `Delta^alpha_xi`.
pub trait ForwardDifference: Sized {
    fn difference(&self, alpha: &MultiIndex) -> Result<Self>;
}

/// `Delta^alpha_xi p`, by iterated forward differences
/// `Delta_{xi_j} p(xi) = p(xi + e_j) - p(xi)`.
pub fn difference_op<T: ForwardDifference>(p: &T, alpha: &MultiIndex) -> Result<T> {
    p.difference(alpha)
}

impl ForwardDifference for LatticeFunction {
    /// Values outside the box are taken to be zero, so compositions of
    /// differences stay exact on the box.
    fn difference(&self, alpha: &MultiIndex) -> Result<Self> {
        let freq = self.freq_box();
        if alpha.dim() != freq.dim() {
            return Err(Error::DimensionMismatch {
                expected: freq.dim(),
                found: alpha.dim(),
            });
        }
        let mut cur = self.clone();
        for (axis, &count) in alpha.entries().iter().enumerate() {
            for _ in 0..count {
                let prev = cur.values().to_vec();
                let vals = cur.values_mut();
                for (i, slot) in vals.iter_mut().enumerate() {
                    let mut xi = freq.frequency(i);
                    xi[axis] += 1;
                    let ahead = freq.index_of(&xi).map_or(ZERO, |k| prev[k]);
                    *slot = ahead - prev[i];
                }
            }
        }
        Ok(cur)
    }
}

impl ForwardDifference for Symbol {
    /// Evaluates the closed form `sum_gamma (-1)^{|alpha-gamma|} binom(alpha,gamma) p(x, xi+gamma)`
    /// of the iterated difference; frequencies are read off the real extension.
    fn difference(&self, alpha: &MultiIndex) -> Result<Self> {
        if alpha.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: alpha.dim(),
            });
        }
        if alpha.is_zero() {
            return Ok(self.clone());
        }
        let stencil = alpha.difference_stencil();
        let base = self.eval.clone();
        let eval = move |x: &[f64], xi: &[f64]| {
            let mut shifted = xi.to_vec();
            let mut acc = ZERO;
            for (gamma, w) in &stencil {
                for (s, (&v, &g)) in shifted.iter_mut().zip(xi.iter().zip(gamma)) {
                    *s = v + g as f64;
                }
                acc += base(x, &shifted) * *w;
            }
            acc
        };
        let class = SymbolClass {
            order: self.class.order - self.class.rho * alpha.order() as f64,
            ..self.class
        };
        let out = Symbol {
            dim: self.dim,
            label: format!("Delta^{alpha} {}", self.label),
            class,
            x_independent: self.x_independent,
            eval: Arc::new(eval),
        };
        Ok(out)
    }
}

/// Samples of a symbol (or one of its derivatives) on `box x grid`;
/// entry `(xi, x)` lives at `xi_index * grid.len() + x_index`.
#[derive(Debug, Clone)]
pub struct SampledSymbol {
    grid: TorusGrid,
    freq: FreqBox,
    values: Vec<Complex64>,
}

impl SampledSymbol {
    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn freq_box(&self) -> FreqBox {
        self.freq
    }

    pub fn get(&self, xi_index: usize, x_index: usize) -> Complex64 {
        self.values[xi_index * self.grid.len() + x_index]
    }

    pub fn slice(&self, xi_index: usize) -> &[Complex64] {
        let g = self.grid.len();
        &self.values[xi_index * g..(xi_index + 1) * g]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

/// `d^beta_x p(., xi)` for every `xi` in the box, computed spectrally on the
/// grid: forward FFT, multiply by `(2 pi i k)^beta`, inverse FFT. Odd-order
/// derivatives drop the Nyquist mode.
pub fn x_derivative(p: &Symbol, beta: &MultiIndex, grid: TorusGrid, freq: FreqBox) -> Result<SampledSymbol> {
    let n = p.dim();
    for (expected, found) in [(n, beta.dim()), (n, grid.dim()), (n, freq.dim())] {
        if expected != found {
            return Err(Error::DimensionMismatch { expected, found });
        }
    }
    let multiplier = spectral_multiplier(grid, beta);
    let columns: Vec<Vec<Complex64>> = (0..freq.len())
        .into_par_iter()
        .map(|i| {
            let xi = freq.frequency(i);
            let xi_r: Vec<f64> = xi.iter().map(|&v| v as f64).collect();
            let mut x = vec![0.0; n];
            let mut col: Vec<Complex64> = (0..grid.len())
                .map(|k| {
                    grid.point_into(k, &mut x);
                    p.eval(&x, &xi_r)
                })
                .collect();
            if let Some(mult) = &multiplier {
                fft_nd(&mut col, n, grid.points_per_axis(), FftDirection::Forward);
                let w = grid.cell_volume();
                for (c, m) in col.iter_mut().zip(mult) {
                    *c *= m * w;
                }
                fft_nd(&mut col, n, grid.points_per_axis(), FftDirection::Inverse);
            }
            col
        })
        .collect();
    Ok(SampledSymbol {
        grid,
        freq,
        values: columns.into_iter().flatten().collect(),
    })
}

fn spectral_multiplier(grid: TorusGrid, beta: &MultiIndex) -> Option<Vec<Complex64>> {
    if beta.is_zero() {
        return None;
    }
    let g = grid.points_per_axis();
    let per_axis: Vec<Vec<Complex64>> = beta
        .entries()
        .iter()
        .map(|&b| {
            (0..g)
                .map(|m| {
                    if b == 0 {
                        return Complex64::new(1.0, 0.0);
                    }
                    let k = if 2 * m < g {
                        m as f64
                    } else if 2 * m == g {
                        if b % 2 == 1 {
                            return ZERO;
                        }
                        (g / 2) as f64
                    } else {
                        m as f64 - g as f64
                    };
                    Complex64::new(0.0, 2.0 * PI * k).powu(b)
                })
                .collect()
        })
        .collect();
    Some(
        (0..grid.len())
            .map(|flat| {
                grid.multi_index(flat)
                    .iter()
                    .zip(&per_axis)
                    .map(|(&m, axis)| axis[m])
                    .product()
            })
            .collect(),
    )
}

/// Parameters of a sampled class-membership sweep.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClassQuery {
    pub class: SymbolClass,
    pub alpha_max: u32,
    pub beta_max: u32,
    /// Constants above this value fail the check.
    pub cap: f64,
    /// Largest allowed ratio of a constant between consecutive radii.
    pub growth_tolerance: f64,
    /// Constants below `zero_floor * max(1, largest constant)` count as zero
    /// when computing growth ratios (they are roundoff from exact zeros).
    pub zero_floor: f64,
}

impl ClassQuery {
    pub fn new(class: SymbolClass, alpha_max: u32, beta_max: u32) -> Self {
        Self {
            class,
            alpha_max,
            beta_max,
            cap: 1e6,
            growth_tolerance: 1.1,
            zero_floor: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassConstant {
    pub alpha: MultiIndex,
    pub beta: MultiIndex,
    /// `C_{alpha beta}` estimated on each box radius of the sweep.
    pub per_radius: Vec<f64>,
    /// Largest ratio between consecutive radii (1 when both are zero).
    pub growth: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SymbolClassReport {
    pub symbol: String,
    pub class: SymbolClass,
    pub radii: Vec<usize>,
    pub grid_points: usize,
    pub constants: Vec<ClassConstant>,
    pub max_constant: f64,
    pub max_growth: f64,
    pub pass: bool,
    pub failures: Vec<String>,
}

/// `C_{alpha beta} = max_{x, xi} |d^beta_x Delta^alpha_xi p| <xi>^{-m + rho|alpha| - delta|beta|}`
/// over one box and grid, for every `|alpha| <= alpha_max`, `|beta| <= beta_max`.
pub fn class_constants(
    p: &Symbol,
    class: SymbolClass,
    alpha_max: u32,
    beta_max: u32,
    freq: FreqBox,
    grid: TorusGrid,
) -> Result<Vec<(MultiIndex, MultiIndex, f64)>> {
    let n = p.dim();
    let mut out = Vec::new();
    for alpha in MultiIndex::all_up_to(n, alpha_max) {
        let diff = difference_op(p, &alpha)?;
        for beta in MultiIndex::all_up_to(n, beta_max) {
            let sampled = x_derivative(&diff, &beta, grid, freq)?;
            let expo = -class.weight_exponent(&alpha, &beta);
            let c = (0..freq.len())
                .map(|i| {
                    let w = bracket_int(&freq.frequency(i)).powf(expo);
                    sampled.slice(i).iter().map(|v| v.norm() * w).fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            out.push((alpha.clone(), beta, c));
        }
    }
    Ok(out)
}

/// Sampled membership test of `p` in the queried class: constants are
/// estimated on each radius of `radii` (typically a doubling ladder) and the
/// claim passes when every constant is finite, below the cap, and grows by no
/// more than `growth_tolerance` between consecutive radii.
pub fn class_membership(p: &Symbol, query: &ClassQuery, radii: &[usize], grid: TorusGrid) -> Result<SymbolClassReport> {
    if radii.is_empty() {
        return Err(Error::Empty("radius ladder"));
    }
    let n = p.dim();
    let mut tables = Vec::with_capacity(radii.len());
    for &r in radii {
        let freq = FreqBox::new(n, r)?;
        tables.push(class_constants(
            p,
            query.class,
            query.alpha_max,
            query.beta_max,
            freq,
            grid,
        )?);
    }

    let max_constant = tables.iter().flatten().map(|(_, _, c)| *c).fold(0.0, f64::max);
    let floor = query.zero_floor * max_constant.max(1.0);

    let mut constants = Vec::new();
    let mut failures = Vec::new();
    for (k, (alpha, beta, _)) in tables[0].iter().enumerate() {
        let per_radius: Vec<f64> = tables.iter().map(|t| t[k].2).collect();
        let growth = per_radius
            .windows(2)
            .map(|w| match (w[0] > floor, w[1] > floor) {
                (_, false) => 1.0,
                (false, true) => f64::INFINITY,
                (true, true) => w[1] / w[0],
            })
            .fold(1.0, f64::max);
        if per_radius.iter().any(|c| !c.is_finite()) {
            failures.push(format!("C{alpha}{beta} is not finite"));
        } else if per_radius.iter().any(|&c| c > query.cap) {
            failures.push(format!("C{alpha}{beta} exceeds cap {}", query.cap));
        }
        if growth > query.growth_tolerance {
            failures.push(format!(
                "C{alpha}{beta} grows by {growth:.4} per refinement (tolerance {})",
                query.growth_tolerance
            ));
        }
        constants.push(ClassConstant {
            alpha: alpha.clone(),
            beta: beta.clone(),
            per_radius,
            growth,
        });
    }
    let max_growth = constants.iter().map(|c| c.growth).fold(1.0, f64::max);
    Ok(SymbolClassReport {
        symbol: p.label().to_string(),
        class: query.class,
        radii: radii.to_vec(),
        grid_points: grid.points_per_axis(),
        constants,
        max_constant,
        max_growth,
        pass: failures.is_empty(),
        failures,
    })
}

/// Bessel potential symbol `<xi>^s`, claimed class `S^s_{1,0}`.
pub fn bessel_symbol(dim: usize, s: f64) -> Symbol {
    Symbol::multiplier(dim, format!("bessel:s={s}"), SymbolClass::classical(s), move |xi| {
        Complex64::new(japanese_bracket(xi).powf(s), 0.0)
    })
}

/// `<xi>^m`.
pub fn multiplier(dim: usize, m: f64) -> Symbol {
    bessel_symbol(dim, m).relabel(format!("multiplier:m={m}"), SymbolClass::classical(m))
}

/// `phi(x) <xi>^m`, claimed class `S^m_{1,0}`.
pub fn separable(dim: usize, phi: Arc<SpaceFn>, m: f64, label: impl Into<String>) -> Symbol {
    Symbol::new(dim, label, SymbolClass::classical(m), move |x, xi| {
        phi(x) * japanese_bracket(xi).powf(m)
    })
}

/// `<xi>^m exp(i c <xi>^(1 - rho))`, claimed class `S^m_{rho,0}`.
pub fn exotic(dim: usize, m: f64, rho: f64, c: f64) -> Result<Symbol> {
    let class = SymbolClass::new(m, rho, 0.0)?;
    let label = if c == 1.0 {
        format!("exotic:m={m},rho={rho}")
    } else {
        format!("exotic:m={m},rho={rho},c={c}")
    };
    Ok(Symbol::multiplier(dim, label, class, move |xi| {
        let b = japanese_bracket(xi);
        Complex64::from_polar(b.powf(m), c * b.powf(1.0 - rho))
    }))
}

/// Space profiles available to `separable` spec strings; all act on `x_1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpaceProfile {
    One,
    Cos,
    Sin,
    ExpCos,
}

impl SpaceProfile {
    pub fn name(&self) -> &'static str {
        match self {
            SpaceProfile::One => "one",
            SpaceProfile::Cos => "cos",
            SpaceProfile::Sin => "sin",
            SpaceProfile::ExpCos => "expcos",
        }
    }

    pub fn function(&self) -> Arc<SpaceFn> {
        match self {
            SpaceProfile::One => Arc::new(|_x: &[f64]| Complex64::new(1.0, 0.0)),
            SpaceProfile::Cos => Arc::new(|x: &[f64]| Complex64::new((2.0 * PI * x[0]).cos(), 0.0)),
            SpaceProfile::Sin => Arc::new(|x: &[f64]| Complex64::new((2.0 * PI * x[0]).sin(), 0.0)),
            SpaceProfile::ExpCos => Arc::new(|x: &[f64]| Complex64::new((2.0 * PI * x[0]).cos().exp(), 0.0)),
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "one" => Some(SpaceProfile::One),
            "cos" => Some(SpaceProfile::Cos),
            "sin" => Some(SpaceProfile::Sin),
            "expcos" => Some(SpaceProfile::ExpCos),
            _ => None,
        }
    }
}

/// Catalog entry, parsed from `name:key=value,...`.
///
/// | spec | symbol |
/// |------|--------|
/// | `identity` | `1` |
/// | `multiplier:m=M` | `<xi>^M` |
/// | `bessel:s=S` | `<xi>^S` |
/// | `separable:m=M,phi=cos` | `phi(x) <xi>^M`, `phi` in `one, cos, sin, expcos` |
/// | `exotic:m=M,rho=R[,c=C]` | `<xi>^M exp(i C <xi>^(1-R))`, `C` defaults to 1 |
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SymbolSpec {
    Identity,
    Multiplier { m: f64 },
    Bessel { s: f64 },
    Separable { m: f64, phi: SpaceProfile },
    Exotic { m: f64, rho: f64, c: f64 },
}

impl SymbolSpec {
    pub fn order(&self) -> f64 {
        match *self {
            SymbolSpec::Identity => 0.0,
            SymbolSpec::Multiplier { m } | SymbolSpec::Separable { m, .. } => m,
            SymbolSpec::Bessel { s } => s,
            SymbolSpec::Exotic { m, .. } => m,
        }
    }

    pub fn rho(&self) -> f64 {
        match *self {
            SymbolSpec::Exotic { rho, .. } => rho,
            _ => 1.0,
        }
    }

    /// Same family with a different order.
    pub fn with_order(&self, order: f64) -> Self {
        match *self {
            SymbolSpec::Identity | SymbolSpec::Multiplier { .. } => SymbolSpec::Multiplier { m: order },
            SymbolSpec::Bessel { .. } => SymbolSpec::Bessel { s: order },
            SymbolSpec::Separable { phi, .. } => SymbolSpec::Separable { m: order, phi },
            SymbolSpec::Exotic { rho, c, .. } => SymbolSpec::Exotic { m: order, rho, c },
        }
    }

    pub fn is_multiplier(&self) -> bool {
        !matches!(self, SymbolSpec::Separable { .. })
    }

    pub fn build(&self, dim: usize) -> Result<Symbol> {
        Ok(match *self {
            SymbolSpec::Identity => multiplier(dim, 0.0).relabel("identity".into(), SymbolClass::classical(0.0)),
            SymbolSpec::Multiplier { m } => multiplier(dim, m),
            SymbolSpec::Bessel { s } => bessel_symbol(dim, s),
            SymbolSpec::Separable { m, phi } => separable(dim, phi.function(), m, self.to_string()),
            SymbolSpec::Exotic { m, rho, c } => exotic(dim, m, rho, c)?,
        })
    }
}

/// Catalog lookup: builds the symbol named by `spec` in dimension `dim`.
pub fn catalog(spec: &SymbolSpec, dim: usize) -> Result<Symbol> {
    spec.build(dim)
}

impl fmt::Display for SymbolSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SymbolSpec::Identity => write!(f, "identity"),
            SymbolSpec::Multiplier { m } => write!(f, "multiplier:m={m}"),
            SymbolSpec::Bessel { s } => write!(f, "bessel:s={s}"),
            SymbolSpec::Separable { m, phi } => write!(f, "separable:m={m},phi={}", phi.name()),
            SymbolSpec::Exotic { m, rho, c: 1.0 } => write!(f, "exotic:m={m},rho={rho}"),
            SymbolSpec::Exotic { m, rho, c } => write!(f, "exotic:m={m},rho={rho},c={c}"),
        }
    }
}

impl FromStr for SymbolSpec {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (name, params) = spec.split_once(':').unwrap_or((spec, ""));
        let malformed = |reason: String| Error::MalformedSymbol {
            spec: spec.to_string(),
            reason,
        };

        let mut pairs: Vec<(&str, &str)> = Vec::new();
        for part in params.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| malformed(format!("expected key=value, got `{part}`")))?;
            pairs.push((k.trim(), v.trim()));
        }
        let allowed: &[&str] = match name {
            "identity" => &[],
            "multiplier" => &["m"],
            "bessel" => &["s"],
            "separable" => &["m", "phi"],
            "exotic" => &["m", "rho", "c"],
            _ => return Err(Error::UnknownSymbol(spec.to_string())),
        };
        if let Some((k, _)) = pairs.iter().find(|(k, _)| !allowed.contains(k)) {
            return Err(malformed(format!("unknown parameter `{k}`")));
        }
        let lookup = |key: &str| pairs.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
        let number = |key: &str, default: Option<f64>| -> Result<f64> {
            match lookup(key) {
                Some(v) => v
                    .parse::<f64>()
                    .map_err(|_| malformed(format!("`{key}` is not a number: `{v}`"))),
                None => default.ok_or_else(|| malformed(format!("missing parameter `{key}`"))),
            }
        };

        let parsed = match name {
            "identity" => SymbolSpec::Identity,
            "multiplier" => SymbolSpec::Multiplier { m: number("m", None)? },
            "bessel" => SymbolSpec::Bessel { s: number("s", None)? },
            "separable" => {
                let phi_name = lookup("phi").unwrap_or("one");
                let phi =
                    SpaceProfile::parse(phi_name).ok_or_else(|| malformed(format!("unknown profile `{phi_name}`")))?;
                SymbolSpec::Separable {
                    m: number("m", Some(0.0))?,
                    phi,
                }
            }
            "exotic" => {
                let rho = number("rho", None)?;
                if !(rho > 0.0 && rho <= 1.0) {
                    return Err(Error::param("rho", rho, "must lie in (0, 1]"));
                }
                SymbolSpec::Exotic {
                    m: number("m", None)?,
                    rho,
                    c: number("c", Some(1.0))?,
                }
            }
            _ => unreachable!(),
        };
        Ok(parsed)
    }
}
