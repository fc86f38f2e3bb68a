use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::symbol::MultiIndex;
use crate::torus::{ball_volume, periodic_distance, wrap_signed, PeriodicFunction, TorusGrid};

/// Integrability exponent `q` of an atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomNorm {
    Two,
    Infinity,
}

impl AtomNorm {
    pub fn inv(&self) -> f64 {
        match self {
            AtomNorm::Two => 0.5,
            AtomNorm::Infinity => 0.0,
        }
    }

    pub fn norm(&self, f: &PeriodicFunction) -> f64 {
        match self {
            AtomNorm::Two => f.l2_norm(),
            AtomNorm::Infinity => f.sup_norm(),
        }
    }
}

/// Highest total degree of vanishing moments, `floor(n (1/p - 1))`.
pub fn moment_order(n: usize, p: f64) -> usize {
    (n as f64 * (1.0 / p - 1.0) + 1e-9).floor().max(0.0) as usize
}

/// Grid samples of a `(p, q)`-atom candidate on `B(center, radius)`.
#[derive(Debug, Clone)]
pub struct Atom {
    samples: PeriodicFunction,
    center: Vec<f64>,
    radius: f64,
    p: f64,
    q: AtomNorm,
}

impl Atom {
    pub fn new(samples: PeriodicFunction, center: &[f64], radius: f64, p: f64, q: AtomNorm) -> Result<Self> {
        if center.len() != samples.grid().dim() {
            return Err(Error::DimensionMismatch {
                expected: samples.grid().dim(),
                found: center.len(),
            });
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::param("p", p, "must lie in (0, 1]"));
        }
        if !(radius > 0.0) {
            return Err(Error::param("radius", radius, "must be positive"));
        }
        Ok(Self {
            samples,
            center: center.to_vec(),
            radius,
            p,
            q,
        })
    }

    pub fn samples(&self) -> &PeriodicFunction {
        &self.samples
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> AtomNorm {
        self.q
    }

    pub fn grid(&self) -> TorusGrid {
        self.samples.grid()
    }

    pub fn moment_order(&self) -> usize {
        moment_order(self.grid().dim(), self.p)
    }

    /// `|B|^(1/q - 1/p)` with the analytic ball volume.
    pub fn norm_bound(&self) -> f64 {
        ball_volume(self.grid().dim(), self.radius).powf(self.q.inv() - 1.0 / self.p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AtomReport {
    pub norm: f64,
    pub bound: f64,
    pub moment_order: usize,
    /// Largest `|int a(x) (x - z)^kappa dx|` over `|kappa| <= moment_order`.
    pub max_moment: f64,
    /// Largest `|a|` at grid points outside the ball.
    pub support_leakage: f64,
    pub pass: bool,
}

fn local_coordinates(x: &[f64], z: &[f64]) -> Vec<f64> {
    x.iter().zip(z).map(|(a, b)| wrap_signed(a - b)).collect()
}

fn monomial(u: &[f64], kappa: &MultiIndex) -> f64 {
    u.iter().zip(kappa.entries()).map(|(v, &k)| v.powi(k as i32)).product()
}

pub fn atom_validate(a: &Atom, tolerance: f64) -> AtomReport {
    let grid = a.grid();
    let n = grid.dim();
    let s = a.moment_order();
    let norm = a.q.norm(&a.samples);
    let bound = a.norm_bound();
    let w = grid.cell_volume();

    let monomials = MultiIndex::all_up_to(n, s as u32);
    let mut moments = vec![Complex64::new(0.0, 0.0); monomials.len()];
    let mut leakage: f64 = 0.0;
    let mut x = vec![0.0; n];
    for (k, v) in a.samples.values().iter().enumerate() {
        grid.point_into(k, &mut x);
        if periodic_distance(&x, &a.center) >= a.radius {
            leakage = leakage.max(v.norm());
        }
        let u = local_coordinates(&x, &a.center);
        for (m, kappa) in moments.iter_mut().zip(&monomials) {
            *m += v * monomial(&u, kappa);
        }
    }
    let max_moment = moments.iter().map(|m| m.norm() * w).fold(0.0, f64::max);
    AtomReport {
        norm,
        bound,
        moment_order: s,
        max_moment,
        support_leakage: leakage,
        pass: norm <= bound + tolerance * bound.max(1.0) && max_moment <= tolerance && leakage <= tolerance,
    }
}

const ATOM_ATTEMPTS: usize = 10;

/// Random smooth atom on `B(z, sigma)`: a bump `exp(-1/(1 - (d/sigma)^2))`
/// times a random polynomial in local coordinates, with the monomial moments
/// up to [`moment_order`] projected out and the `L^q` norm saturating
/// `|B|^(1/q - 1/p)`. Deterministic in `seed`; degenerate draws are redrawn
/// from the next stream, up to ten times.
pub fn make_atom(grid: TorusGrid, z: &[f64], sigma: f64, p: f64, q: AtomNorm, seed: u64) -> Result<Atom> {
    let n = grid.dim();
    if z.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: z.len(),
        });
    }
    if !(sigma > 0.0 && sigma < 0.5) {
        return Err(Error::param("sigma", sigma, "atoms need 0 < sigma < 1/2"));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::param("p", p, "must lie in (0, 1]"));
    }
    let s = moment_order(n, p);
    let monomials = MultiIndex::all_up_to(n, s as u32);
    let shape = MultiIndex::all_up_to(n, s as u32 + 2);

    let mut cells = Vec::new();
    let mut weight = Vec::new();
    let mut coords = Vec::new();
    let mut x = vec![0.0; n];
    for k in 0..grid.len() {
        grid.point_into(k, &mut x);
        let d = periodic_distance(&x, z);
        if d < sigma {
            let r = d / sigma;
            cells.push(k);
            weight.push((-1.0 / (1.0 - r * r)).exp());
            coords.push(local_coordinates(&x, z).iter().map(|u| u / sigma).collect::<Vec<f64>>());
        }
    }
    if cells.len() <= monomials.len() {
        return Err(Error::AtomConstruction {
            attempts: 0,
            reason: format!(
                "ball holds {} grid points, not enough for {} moment conditions",
                cells.len(),
                monomials.len()
            ),
        });
    }

    // Gram-Schmidt of the monomials in the bump-weighted inner product
    let basis = {
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for kappa in &monomials {
            let mut v: Vec<f64> = coords.iter().map(|u| monomial(u, kappa)).collect();
            let start = weighted_norm(&v, &weight);
            for _ in 0..2 {
                for b in &basis {
                    let c: f64 = v.iter().zip(b).zip(&weight).map(|((a, b), w)| a * b * w).sum();
                    v.iter_mut().zip(b).for_each(|(a, b)| *a -= c * b);
                }
            }
            let norm = weighted_norm(&v, &weight);
            if norm > 1e-10 * start {
                basis.push(v.iter().map(|a| a / norm).collect());
            }
        }
        basis
    };
    let project_out = |f: &mut [f64]| {
        for b in &basis {
            let c: f64 = f.iter().zip(b).map(|(a, b)| a * b).sum();
            f.iter_mut().zip(b).zip(&weight).for_each(|((a, b), w)| *a -= c * b * w);
        }
    };

    let mut last_reason = String::new();
    for attempt in 0..ATOM_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt as u64);
        let coefficients: Vec<f64> = shape.iter().map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut f: Vec<f64> = coords
            .iter()
            .zip(&weight)
            .map(|(u, w)| {
                w * shape
                    .iter()
                    .zip(&coefficients)
                    .map(|(kappa, c)| c * monomial(u, kappa))
                    .sum::<f64>()
            })
            .collect();
        let before = f.iter().map(|v| v * v).sum::<f64>().sqrt();
        project_out(&mut f);
        project_out(&mut f);
        let after = f.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(after > 1e-6 * before) {
            last_reason = format!("residual {after:e} after moment removal");
            continue;
        }
        let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (&k, v) in cells.iter().zip(&f) {
            values[k] = Complex64::new(*v, 0.0);
        }
        let samples = PeriodicFunction::new(grid, values)?;
        let atom = Atom::new(samples, z, sigma, p, q)?;
        let scale = atom.norm_bound() / q.norm(&atom.samples);
        return Atom::new(atom.samples.scale(Complex64::new(scale, 0.0)), z, sigma, p, q);
    }
    Err(Error::AtomConstruction {
        attempts: ATOM_ATTEMPTS,
        reason: last_reason,
    })
}

fn weighted_norm(v: &[f64], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(a, w)| a * a * w).sum::<f64>().sqrt()
}
