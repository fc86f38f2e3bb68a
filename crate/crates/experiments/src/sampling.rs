//! Seeded per-cell randomness: every `(sigma, atom)` cell owns a ChaCha
//! stream derived from the master seed, so parallel and serial runs agree.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;
use torus_pdo::hardy::{make_atom, Atom, AtomNorm};
use torus_pdo::torus::{PeriodicFunction, TorusGrid};
use torus_pdo::Complex64;

use crate::ExperimentError;

/// Generator for cell `(block, index)` under `seed`.
pub fn cell_rng(seed: u64, block: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((block << 32) | index);
    rng
}

#[derive(Debug, Clone)]
pub struct SeededAtom {
    pub index: usize,
    pub center: Vec<f64>,
    pub seed: u64,
    pub atom: Atom,
}

/// `count` `(p, 2)`-atoms on balls of radius `sigma` with uniformly drawn
/// centers. `block` separates the sigma levels of a ladder.
pub fn draw_atoms(
    grid: TorusGrid,
    sigma: f64,
    p: f64,
    count: usize,
    seed: u64,
    block: u64,
) -> Result<Vec<SeededAtom>, ExperimentError> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = cell_rng(seed, block, i as u64);
            let center: Vec<f64> = (0..grid.dim()).map(|_| rng.random::<f64>()).collect();
            let atom_seed = rng.next_u64();
            let atom = make_atom(grid, &center, sigma, p, AtomNorm::Two, atom_seed)?;
            Ok(SeededAtom {
                index: i,
                center,
                seed: atom_seed,
                atom,
            })
        })
        .collect()
}

/// Real trigonometric polynomial `sum_xi c_xi cos(2 pi x.xi + phase_xi)` over
/// `|xi_k| <= degree`, with coefficients decaying like `<xi>^-1`, normalized to
/// sup norm about 1. The same seed gives the same function on any grid.
pub fn random_trig_polynomial(grid: TorusGrid, degree: usize, seed: u64, block: u64) -> PeriodicFunction {
    let n = grid.dim();
    let mut rng = cell_rng(seed, block, 0);
    let d = degree as i64;
    let side = (2 * degree + 1) as u32;
    let mut terms: Vec<(Vec<f64>, f64, f64)> = Vec::new();
    for flat in 0..side.pow(n as u32) {
        let mut rest = flat;
        let mut xi = vec![0.0; n];
        for k in (0..n).rev() {
            xi[k] = (rest % side) as f64 - d as f64;
            rest /= side;
        }
        let bracket = (1.0 + xi.iter().map(|v| v * v).sum::<f64>()).sqrt();
        let amplitude = rng.random_range(-1.0..1.0) / bracket;
        let phase = rng.random_range(0.0..2.0 * PI);
        terms.push((xi, amplitude, phase));
    }
    let scale: f64 = terms.iter().map(|t| t.1.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    PeriodicFunction::from_fn(grid, |x| {
        let v: f64 = terms
            .iter()
            .map(|(xi, a, ph)| {
                let dot: f64 = xi.iter().zip(x).map(|(a, b)| a * b).sum();
                a * (2.0 * PI * dot + ph).cos()
            })
            .sum();
        Complex64::new(v / scale, 0.0)
    })
}
