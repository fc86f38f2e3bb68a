//! Dyadic-annulus kernel integrals and the `D_{r,alpha}` / `D_alpha` audits.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use std::io::Write;

use super::kernel::{kernel, Cutoff, KernelSide};
use crate::error::{Error, Result};
use crate::hardy::n_sigma;
use crate::symbol::Symbol;
use crate::torus::{periodic_distance, FreqBox, TorusGrid};

/// One shell `2^j s < |x - z| < 2^(j+1) s` resolved on a grid.
#[derive(Debug, Clone)]
pub struct Annulus {
    pub j: usize,
    pub inner: f64,
    pub outer: f64,
    /// Flat indices of the grid points inside the shell.
    pub cells: Vec<usize>,
    /// Grid-count measure.
    pub measure: f64,
}

/// Open annuli `A_j(z, s)`, `j = 1..=N_s`, around `z` at scale `s`.
#[derive(Debug, Clone)]
pub struct AnnulusDecomposition {
    center: Vec<f64>,
    scale: f64,
    n_sigma: usize,
    annuli: Vec<Annulus>,
}

impl AnnulusDecomposition {
    pub fn new(grid: TorusGrid, center: &[f64], scale: f64) -> Result<Self> {
        let n = grid.dim();
        if center.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: center.len(),
            });
        }
        if !(scale > 0.0) {
            return Err(Error::param("scale", scale, "must be positive"));
        }
        if scale >= (n as f64).sqrt() {
            return Err(Error::NoAnnuli { scale, dim: n });
        }
        let count = n_sigma(scale, n)?;
        let dist = grid.distances_from(center);
        let annuli = (1..=count)
            .map(|j| {
                let inner = (j as f64).exp2() * scale;
                let outer = 2.0 * inner;
                let cells: Vec<usize> = dist
                    .iter()
                    .enumerate()
                    .filter(|(_, &d)| inner < d && d < outer)
                    .map(|(i, _)| i)
                    .collect();
                let measure = cells.len() as f64 * grid.cell_volume();
                Annulus {
                    j,
                    inner,
                    outer,
                    cells,
                    measure,
                }
            })
            .collect();
        Ok(Self {
            center: center.to_vec(),
            scale,
            n_sigma: count,
            annuli,
        })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn n_sigma(&self) -> usize {
        self.n_sigma
    }

    pub fn annuli(&self) -> &[Annulus] {
        &self.annuli
    }
}

/// Points `y` standing in for the supremum over `|y - z| < sigma`:
/// `y = z + fraction * sigma * u` for unit vectors `u` (the `2n` coordinate
/// directions first, then seeded random directions), optionally plus `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSet {
    directions: Vec<Vec<f64>>,
    fraction: f64,
    include_center: bool,
}

impl ProbeSet {
    pub fn radial(dim: usize, count: usize, fraction: f64, seed: u64) -> Self {
        let mut directions: Vec<Vec<f64>> = Vec::new();
        for axis in 0..dim {
            for sign in [1.0, -1.0] {
                let mut u = vec![0.0; dim];
                u[axis] = sign;
                directions.push(u);
            }
        }
        directions.truncate(count);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut attempts = 0;
        while directions.len() < count && attempts < 64 * count {
            attempts += 1;
            let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm < 1e-12 {
                continue;
            }
            let u: Vec<f64> = v.iter().map(|a| a / norm).collect();
            let duplicate = directions
                .iter()
                .any(|w| w.iter().zip(&u).map(|(a, b)| (a - b).abs()).sum::<f64>() < 1e-9);
            if !duplicate {
                directions.push(u);
            }
        }
        Self {
            directions,
            fraction,
            include_center: true,
        }
    }

    /// `8n` directions at `0.9 sigma`, plus the center.
    pub fn standard(dim: usize, seed: u64) -> Self {
        Self::radial(dim, 8 * dim, 0.9, seed)
    }

    /// Only `y = z`.
    pub fn center_only() -> Self {
        Self {
            directions: Vec::new(),
            fraction: 0.0,
            include_center: true,
        }
    }

    pub fn len(&self) -> usize {
        self.directions.len() + usize::from(self.include_center)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self, z: &[f64], sigma: f64) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = self
            .directions
            .iter()
            .map(|u| {
                z.iter()
                    .zip(u)
                    .map(|(a, b)| (a + self.fraction * sigma * b).rem_euclid(1.0))
                    .collect()
            })
            .collect();
        if self.include_center {
            out.push(z.to_vec());
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleRegime {
    /// `sigma >= epsilon`: bound `C_eps 2^-j`.
    Large,
    /// `sigma < epsilon`: bound `C 2^(-j/rho) sigma^(1 - gamma/rho)`.
    Small,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AnnulusQuery {
    pub sigma: f64,
    pub gamma: f64,
    /// Floor on `sigma` for the large-scale regime.
    pub epsilon: f64,
    pub side: KernelSide,
    pub cutoff: Cutoff,
}

impl AnnulusQuery {
    pub fn new(sigma: f64, gamma: f64, side: KernelSide, cutoff: Cutoff) -> Self {
        Self {
            sigma,
            gamma,
            epsilon: 0.25,
            side,
            cutoff,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnnulusIntegral {
    pub j: usize,
    pub inner: f64,
    pub outer: f64,
    pub cells: usize,
    pub measure: f64,
    /// Max over probes of the grid quadrature of the kernel difference.
    pub integral: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnnulusEstimate {
    pub sigma: f64,
    pub gamma: f64,
    pub side: KernelSide,
    pub regime: ScaleRegime,
    pub n_sigma: usize,
    pub target_j_slope: f64,
    pub target_sigma_exponent: f64,
    pub integrals: Vec<AnnulusIntegral>,
}

/// Minimum number of grid cells for an annulus to enter a slope fit.
pub const MIN_FIT_CELLS: usize = 32;

impl AnnulusEstimate {
    /// Least-squares slope of `log2 I_j` against `j` over `j = 1..N-1`,
    /// skipping annuli with fewer than `min_cells` cells or a zero integral.
    pub fn j_slope(&self, min_cells: usize) -> Option<LineFit> {
        let pts: Vec<(f64, f64)> = self
            .integrals
            .iter()
            .filter(|a| a.j < self.n_sigma && a.cells >= min_cells && a.integral > 0.0)
            .map(|a| (a.j as f64, a.integral))
            .collect();
        fit_log2_slope(&pts)
    }

    /// CSV with columns `j,sigma,gamma,side,cells,measure,I_j`.
    pub fn write_csv<W: Write>(estimates: &[AnnulusEstimate], writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["j", "sigma", "gamma", "side", "cells", "measure", "I_j"])?;
        for e in estimates {
            let side = match e.side {
                KernelSide::Right => "right",
                KernelSide::Left => "left",
            };
            for a in &e.integrals {
                w.write_record(&[
                    a.j.to_string(),
                    e.sigma.to_string(),
                    e.gamma.to_string(),
                    side.to_string(),
                    a.cells.to_string(),
                    a.measure.to_string(),
                    a.integral.to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))
    }
}

/// `sup_{y in probes} int_{A_j(z, sigma^gamma)} |k-difference| dx` for
/// `j = 1..N_{sigma^gamma}`; the difference is `k(x,y) - k(x,z)` on the right
/// side and `k(y,x) - k(z,x)` on the left.
pub fn annulus_kernel_estimate(
    p: &Symbol,
    freq: FreqBox,
    grid: TorusGrid,
    z: &[f64],
    query: &AnnulusQuery,
    probes: &ProbeSet,
) -> Result<AnnulusEstimate> {
    if !(query.gamma > 0.0 && query.gamma <= 1.0) {
        return Err(Error::param("gamma", query.gamma, "must lie in (0, 1]"));
    }
    if !(query.sigma > 0.0) {
        return Err(Error::param("sigma", query.sigma, "must be positive"));
    }
    let scale = query.sigma.powf(query.gamma);
    let decomposition = AnnulusDecomposition::new(grid, z, scale)?;

    let mut sources = vec![z.to_vec()];
    sources.extend(probes.points(z, query.sigma));
    let field = kernel(p, freq, grid, query.cutoff, query.side, &sources)?;
    let moduli: Vec<Vec<f64>> = (1..sources.len()).map(|s| field.difference(s, 0).moduli()).collect();

    let w = grid.cell_volume();
    let integrals = decomposition
        .annuli()
        .iter()
        .map(|a| {
            let integral = moduli
                .iter()
                .map(|m| a.cells.iter().map(|&c| m[c]).sum::<f64>() * w)
                .fold(0.0, f64::max);
            AnnulusIntegral {
                j: a.j,
                inner: a.inner,
                outer: a.outer,
                cells: a.cells.len(),
                measure: a.measure,
                integral,
            }
        })
        .collect();

    let rho = p.class().rho;
    let (regime, target_j_slope, target_sigma_exponent) = if query.sigma >= query.epsilon {
        (ScaleRegime::Large, -1.0, 0.0)
    } else {
        (ScaleRegime::Small, -1.0 / rho, 1.0 - query.gamma / rho)
    };
    Ok(AnnulusEstimate {
        sigma: query.sigma,
        gamma: query.gamma,
        side: query.side,
        regime,
        n_sigma: decomposition.n_sigma(),
        target_j_slope,
        target_sigma_exponent,
        integrals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
    pub points: usize,
}

/// Ordinary least squares `y ~ slope x + intercept`; needs two distinct abscissae.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    Some(LineFit {
        slope,
        intercept,
        residual: (rss / n as f64).sqrt(),
        points: n,
    })
}

/// Fit of `log2 value` against `j` for `(j, value)` pairs with positive values.
pub fn fit_log2_slope(points: &[(f64, f64)]) -> Option<LineFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|(_, v)| *v > 0.0)
        .map(|(j, v)| (*j, v.log2()))
        .unzip();
    fit_line(&xs, &ys)
}

#[derive(Debug, Clone, Serialize)]
pub struct DConditionQuery {
    /// Integrability exponent; `f64::INFINITY` for the sup norm.
    pub r: f64,
    pub alpha: f64,
    pub omega: f64,
    pub sigmas: Vec<f64>,
    pub centers: Vec<Vec<f64>>,
    pub cutoff: Cutoff,
    /// Also estimate the `D_alpha` Hölder constant.
    pub holder: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DConditionRow {
    pub sigma: f64,
    pub center: usize,
    pub side: KernelSide,
    pub j: usize,
    pub cells: usize,
    pub measure: f64,
    /// `||k-difference||_{L^r(A_j)} |A_j|^(1/r')`, max over probes.
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DConditionReport {
    pub r: f64,
    pub alpha: f64,
    pub omega: f64,
    /// `d_j` for `j = 1, 2, ...`.
    pub d: Vec<f64>,
    pub sum: f64,
    pub holder_constant: Option<f64>,
    pub finite: bool,
    pub rows: Vec<DConditionRow>,
}

impl DConditionReport {
    /// CSV with columns `j,sigma,center,side,cells,measure,d_j`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["j", "sigma", "center", "side", "cells", "measure", "d_j"])?;
        for row in &self.rows {
            let side = match row.side {
                KernelSide::Right => "right",
                KernelSide::Left => "left",
            };
            w.write_record(&[
                row.j.to_string(),
                row.sigma.to_string(),
                row.center.to_string(),
                side.to_string(),
                row.cells.to_string(),
                row.measure.to_string(),
                row.value.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))
    }
}

/// Smallest `d_j` consistent with the sampled data: for every `sigma`, center
/// `z` and probe `y`, the `L^r` norm of the kernel difference on
/// `A_j(z, sigma^alpha)` times `|A_j|^(1/r')`, for both the kernel and its
/// transpose.
pub fn d_condition_check(
    p: &Symbol,
    freq: FreqBox,
    grid: TorusGrid,
    query: &DConditionQuery,
    probes: &ProbeSet,
) -> Result<DConditionReport> {
    if query.sigmas.is_empty() {
        return Err(Error::Empty("sigma list"));
    }
    if query.centers.is_empty() {
        return Err(Error::Empty("center list"));
    }
    if !(query.r >= 1.0) {
        return Err(Error::param("r", query.r, "must lie in [1, inf]"));
    }
    if !(query.alpha > 0.0 && query.alpha <= 1.0) {
        return Err(Error::param("alpha", query.alpha, "must lie in (0, 1]"));
    }
    let n = grid.dim() as f64;
    let r = query.r;
    let inv_r_conj = if r.is_infinite() { 1.0 } else { 1.0 - 1.0 / r };
    let w = grid.cell_volume();

    let mut rows = Vec::new();
    let mut d: Vec<f64> = Vec::new();
    let mut holder: f64 = 0.0;
    for &sigma in &query.sigmas {
        for (ci, z) in query.centers.iter().enumerate() {
            let decomposition = AnnulusDecomposition::new(grid, z, sigma.powf(query.alpha))?;
            let mut sources = vec![z.clone()];
            sources.extend(probes.points(z, sigma));
            let mut side_moduli = Vec::new();
            for side in [KernelSide::Right, KernelSide::Left] {
                let field = kernel(p, freq, grid, query.cutoff, side, &sources)?;
                let moduli: Vec<Vec<f64>> = (1..sources.len()).map(|s| field.difference(s, 0).moduli()).collect();
                for a in decomposition.annuli() {
                    let value = moduli
                        .iter()
                        .map(|m| {
                            let norm = if r.is_infinite() {
                                a.cells.iter().map(|&c| m[c]).fold(0.0, f64::max)
                            } else {
                                (a.cells.iter().map(|&c| m[c].powf(r)).sum::<f64>() * w).powf(1.0 / r)
                            };
                            if a.cells.is_empty() {
                                0.0
                            } else {
                                norm * a.measure.powf(inv_r_conj)
                            }
                        })
                        .fold(0.0, f64::max);
                    if d.len() < a.j {
                        d.resize(a.j, 0.0);
                    }
                    d[a.j - 1] = d[a.j - 1].max(value);
                    rows.push(DConditionRow {
                        sigma,
                        center: ci,
                        side,
                        j: a.j,
                        cells: a.cells.len(),
                        measure: a.measure,
                        value,
                    });
                }
                side_moduli.push(moduli);
            }

            if query.holder {
                let dist = grid.distances_from(z);
                for (s, y) in sources.iter().enumerate().skip(1) {
                    let dyz = periodic_distance(y, z);
                    if dyz == 0.0 {
                        continue;
                    }
                    let (right, left) = (&side_moduli[0][s - 1], &side_moduli[1][s - 1]);
                    for (k, &dxz) in dist.iter().enumerate() {
                        if dxz > 0.0 && 2.0 * dyz.powf(query.alpha) <= dxz {
                            let c =
                                (right[k] + left[k]) * dxz.powf(n + query.omega / query.alpha) / dyz.powf(query.omega);
                            holder = holder.max(c);
                        }
                    }
                }
            }
        }
    }
    let sum: f64 = d.iter().sum();
    Ok(DConditionReport {
        r,
        alpha: query.alpha,
        omega: query.omega,
        finite: sum.is_finite() && d.iter().all(|v| v.is_finite()),
        sum,
        d,
        holder_constant: query.holder.then_some(holder),
        rows,
    })
}
