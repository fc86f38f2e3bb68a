//! Maximal functions and BMO over a discrete ball family.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::torus::{PeriodicFunction, TorusGrid};

/// Real-valued grid samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarField {
    #[serde(skip)]
    grid: TorusGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Balls `B(c, r)` (open, periodic distance) centered at every grid point for
/// each radius, plus optionally the whole torus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallFamily {
    radii: Vec<f64>,
    whole_torus: bool,
}

impl BallFamily {
    pub fn new(radii: Vec<f64>, whole_torus: bool) -> Self {
        Self { radii, whole_torus }
    }

    /// Radii `2^-k`, `k = 1..=log2 G`, plus the whole torus.
    pub fn dyadic(grid: TorusGrid) -> Self {
        let levels = (grid.points_per_axis() as f64).log2().floor() as i32;
        Self {
            radii: (1..=levels).map(|k| (-k as f64).exp2()).collect(),
            whole_torus: true,
        }
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn whole_torus(&self) -> bool {
        self.whole_torus
    }

    /// Grid offsets (per-axis index shifts in `0..G`) of the points at
    /// periodic distance `< radius` from a grid point.
    fn offsets(grid: TorusGrid, radius: f64) -> Vec<Vec<usize>> {
        let g = grid.points_per_axis();
        let axis_dist: Vec<f64> = (0..g).map(|o| o.min(g - o) as f64 / g as f64).collect();
        (0..grid.len())
            .map(|flat| grid.multi_index(flat))
            .filter(|o| o.iter().map(|&k| axis_dist[k].powi(2)).sum::<f64>() < radius * radius)
            .collect()
    }

    /// Flat indices of `B(x_center, radius)`, as produced for the sweep.
    pub fn members(&self, grid: TorusGrid, center: usize, radius: f64) -> Vec<usize> {
        let c = grid.multi_index(center);
        Self::offsets(grid, radius)
            .iter()
            .map(|o| shifted(grid, &c, o))
            .collect()
    }

    /// For each grid point, the supremum of `stat(ball)` over the balls of
    /// the family that contain it.
    fn sweep(&self, grid: TorusGrid, stat: impl Fn(&[usize]) -> f64 + Sync) -> Vec<f64> {
        let len = grid.len();
        let index: Vec<Vec<usize>> = (0..len).map(|k| grid.multi_index(k)).collect();
        let mut out = vec![f64::NEG_INFINITY; len];
        if self.whole_torus {
            let all: Vec<usize> = (0..len).collect();
            out.iter_mut().for_each(|v| *v = stat(&all));
        }
        for &r in &self.radii {
            let offsets = Self::offsets(grid, r);
            if offsets.is_empty() {
                continue;
            }
            let per_center: Vec<f64> = (0..len)
                .into_par_iter()
                .map(|c| {
                    let members: Vec<usize> = offsets.iter().map(|o| shifted(grid, &index[c], o)).collect();
                    stat(&members)
                })
                .collect();
            // distance is symmetric, so the centers whose ball holds x are x + offsets
            let folded: Vec<f64> = (0..len)
                .into_par_iter()
                .map(|x| {
                    offsets
                        .iter()
                        .map(|o| per_center[shifted(grid, &index[x], o)])
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            for (o, f) in out.iter_mut().zip(folded) {
                *o = o.max(f);
            }
        }
        out.iter_mut().for_each(|v| *v = v.max(0.0));
        out
    }
}

fn shifted(grid: TorusGrid, base: &[usize], offset: &[usize]) -> usize {
    let g = grid.points_per_axis();
    base.iter()
        .zip(offset)
        .fold(0usize, |acc, (&b, &o)| acc * g + (b + o) % g)
}

fn mean(values: &[Complex64], members: &[usize]) -> Complex64 {
    members.iter().map(|&k| values[k]).sum::<Complex64>() / members.len() as f64
}

fn mean_abs_dev(values: &[Complex64], members: &[usize], c: Complex64) -> f64 {
    members.iter().map(|&k| (values[k] - c).norm()).sum::<f64>() / members.len() as f64
}

/// Minimizer of `sum |v_i - c|`: the median for real data, a Weiszfeld
/// geometric median otherwise.
fn l1_center(values: &[Complex64], members: &[usize]) -> Complex64 {
    if members.iter().all(|&k| values[k].im == 0.0) {
        let mut re: Vec<f64> = members.iter().map(|&k| values[k].re).collect();
        let mid = (re.len() - 1) / 2;
        let (_, m, _) = re.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
        return Complex64::new(*m, 0.0);
    }
    let mut c = mean(values, members);
    for _ in 0..200 {
        let (mut num, mut den) = (Complex64::new(0.0, 0.0), 0.0);
        for &k in members {
            let d = (values[k] - c).norm();
            if d > 1e-14 {
                num += values[k] / d;
                den += 1.0 / d;
            }
        }
        if den == 0.0 {
            break;
        }
        let next = num / den;
        let step = (next - c).norm();
        c = next;
        if step < 1e-15 * (1.0 + c.norm()) {
            break;
        }
    }
    c
}

/// `M_p f(x) = sup_{B ni x} (|B|^-1 int_B |f|^p)^(1/p)` over the dyadic family.
pub fn maximal_p(f: &PeriodicFunction, p: f64) -> ScalarField {
    maximal_p_with(f, p, &BallFamily::dyadic(f.grid()))
}

pub fn maximal_p_with(f: &PeriodicFunction, p: f64, family: &BallFamily) -> ScalarField {
    let grid = f.grid();
    let powered: Vec<f64> = f.values().iter().map(|v| v.norm().powf(p)).collect();
    let values = family.sweep(grid, |members| {
        (members.iter().map(|&k| powered[k]).sum::<f64>() / members.len() as f64).powf(1.0 / p)
    });
    ScalarField::new(grid, values)
}

/// `M_inf f(x)`, the supremum over balls of `ess sup_B |f|`.
pub fn maximal_sup(f: &PeriodicFunction) -> ScalarField {
    let grid = f.grid();
    let moduli = f.moduli();
    let values = BallFamily::dyadic(grid).sweep(grid, |members| members.iter().map(|&k| moduli[k]).fold(0.0, f64::max));
    ScalarField::new(grid, values)
}

/// Sharp maximal function with the inner infimum realized by the L1 center
/// (`median`) and, alongside, by the ball mean (`mean`).
#[derive(Debug, Clone, Serialize)]
pub struct SharpMaximal {
    pub median: ScalarField,
    pub mean: ScalarField,
}

pub fn sharp_maximal(f: &PeriodicFunction) -> SharpMaximal {
    sharp_maximal_with(f, &BallFamily::dyadic(f.grid()))
}

pub fn sharp_maximal_with(f: &PeriodicFunction, family: &BallFamily) -> SharpMaximal {
    let grid = f.grid();
    let v = f.values();
    let median = family.sweep(grid, |m| mean_abs_dev(v, m, l1_center(v, m)));
    let mean_based = family.sweep(grid, |m| mean_abs_dev(v, m, mean(v, m)));
    SharpMaximal {
        median: ScalarField::new(grid, median),
        mean: ScalarField::new(grid, mean_based),
    }
}

/// `sup_B |B|^-1 int_B |f - f_B|` over the dyadic family.
pub fn bmo_norm(f: &PeriodicFunction) -> f64 {
    bmo_norm_with(f, &BallFamily::dyadic(f.grid()))
}

pub fn bmo_norm_with(f: &PeriodicFunction, family: &BallFamily) -> f64 {
    let grid = f.grid();
    let v = f.values();
    family
        .sweep(grid, |m| mean_abs_dev(v, m, mean(v, m)))
        .into_iter()
        .fold(0.0, f64::max)
}
