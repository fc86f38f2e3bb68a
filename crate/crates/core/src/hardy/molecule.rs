use num_complex::Complex64;
use serde::Serialize;

use super::atom::{atom_validate, Atom, AtomNorm, AtomReport};
use super::exponents::n_sigma;
use crate::error::{Error, Result};
use crate::torus::{ball_volume, PeriodicFunction};

/// Default pass cap for measured molecule constants.
pub const MOLECULE_CAP: f64 = 1e3;
/// Largest admissible `|int M|`.
pub const CANCELLATION_TOLERANCE: f64 = 1e-8;
/// Tolerance for atom checks on decomposition output.
pub const ATOM_TOLERANCE: f64 = 1e-9;

const ROUNDOFF_BLOCK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MoleculeParams {
    pub p: f64,
    pub beta: f64,
    pub omega: f64,
    pub alpha: f64,
    /// Decay exponent; the midpoint of the admissible window when `None`.
    pub mu: Option<f64>,
    pub cap: f64,
    pub cancellation_tolerance: f64,
}

impl MoleculeParams {
    pub fn new(p: f64, beta: f64, omega: f64, alpha: f64) -> Self {
        Self {
            p,
            beta,
            omega,
            alpha,
            mu: None,
            cap: MOLECULE_CAP,
            cancellation_tolerance: CANCELLATION_TOLERANCE,
        }
    }

    /// `(n/2 + omega - beta) / (n/2 + omega/alpha)`.
    pub fn theta(&self, n: usize) -> f64 {
        let h = n as f64 / 2.0;
        (h + self.omega - self.beta) / (h + self.omega / self.alpha)
    }

    /// `1/q = 1/2 + beta/n`.
    pub fn inv_q(&self, n: usize) -> f64 {
        0.5 + self.beta / n as f64
    }

    pub fn mu_window(&self, n: usize, sigma: f64) -> MuWindow {
        let nf = n as f64;
        let theta = self.theta(n);
        let decay_upper = if sigma < 1.0 {
            Some(if theta < 1.0 {
                2.0 * self.beta / (1.0 - theta)
            } else {
                f64::INFINITY
            })
        } else {
            None
        };
        MuWindow {
            lower: 2.0 * nf / self.p - nf,
            size_upper: nf + 2.0 * self.omega / self.alpha,
            decay_upper,
        }
    }
}

/// Admissible decay exponents: `2n/p - n < mu < n + 2 omega/alpha`, and
/// `mu < 2 beta/(1 - theta)` on small balls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MuWindow {
    pub lower: f64,
    pub size_upper: f64,
    pub decay_upper: Option<f64>,
}

impl MuWindow {
    pub fn upper(&self) -> f64 {
        self.decay_upper.map_or(self.size_upper, |d| d.min(self.size_upper))
    }

    pub fn midpoint(&self) -> Result<f64> {
        let (lo, hi) = (self.lower, self.upper());
        if !(lo < hi) {
            return Err(Error::MoleculeWindow(format!(
                "empty window: 2n/p - n = {lo} is not below the upper limit {hi}"
            )));
        }
        Ok(0.5 * (lo + hi))
    }

    pub fn check(&self, mu: f64) -> Result<()> {
        if !(mu > self.lower) {
            return Err(Error::MoleculeWindow(format!(
                "2n/p - n < mu fails: mu = {mu}, 2n/p - n = {}",
                self.lower
            )));
        }
        if !(mu < self.size_upper) {
            return Err(Error::MoleculeWindow(format!(
                "mu < n + 2 omega/alpha fails: mu = {mu}, bound = {}",
                self.size_upper
            )));
        }
        if let Some(d) = self.decay_upper {
            if !(mu < d) {
                return Err(Error::MoleculeWindow(format!(
                    "mu < 2 beta/(1 - theta) fails: mu = {mu}, bound = {d}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MoleculeBranch {
    /// `sigma >= 1`.
    Large,
    /// `sigma < 1`.
    Small,
}

/// Measured molecule constants against the defining powers of `sigma`.
#[derive(Debug, Clone, Serialize)]
pub struct Molecule {
    pub center: Vec<f64>,
    pub sigma: f64,
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub beta: f64,
    pub omega: f64,
    pub alpha: f64,
    pub theta: f64,
    pub mu: f64,
    pub branch: MoleculeBranch,
    /// `int |M|^2 / sigma^e1`.
    pub c1: f64,
    /// `int |M|^2 |x - z|^mu / sigma^e2`.
    pub c2: f64,
    /// Same ratios with `2n(1/q - 1/p)` in place of `n(1/q - 2/p)` in the
    /// small-ball exponents; equal to `c1`, `c2` on large balls.
    pub c1_alt: f64,
    pub c2_alt: f64,
    pub residual: f64,
    pub l1_norm: f64,
    /// `theta <= alpha`.
    pub theta_within_alpha: bool,
    /// `2 beta/(1 - theta) <= n + 2 omega/alpha`; reported, not enforced.
    pub decay_limit_consistent: bool,
    pub cap: f64,
    pub pass: bool,
}

/// Measures the molecule constants of `m` for the ball `B(z, sigma)`.
/// Fails when `mu` lies outside its window, naming the violated inequality.
pub fn molecule_validate(m: &PeriodicFunction, z: &[f64], sigma: f64, params: &MoleculeParams) -> Result<Molecule> {
    let grid = m.grid();
    let n = grid.dim();
    if z.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: z.len(),
        });
    }
    if !(sigma > 0.0) {
        return Err(Error::param("sigma", sigma, "must be positive"));
    }
    if !(params.p > 0.0 && params.p <= 1.0) {
        return Err(Error::param("p", params.p, "must lie in (0, 1]"));
    }
    let nf = n as f64;
    let window = params.mu_window(n, sigma);
    let mu = match params.mu {
        Some(mu) => mu,
        None => window.midpoint()?,
    };
    window.check(mu)?;

    let theta = params.theta(n);
    let inv_q = params.inv_q(n);
    let inv_p = 1.0 / params.p;
    let w = grid.cell_volume();
    let dist = grid.distances_from(z);
    let sq: Vec<f64> = m.values().iter().map(|v| v.norm_sqr()).collect();
    let mass: f64 = sq.iter().sum::<f64>() * w;
    let weighted: f64 = sq.iter().zip(&dist).map(|(s, d)| s * d.powf(mu)).sum::<f64>() * w;

    let (branch, e1, e2, e1_alt, e2_alt) = if sigma >= 1.0 {
        let e1 = nf * (1.0 - 2.0 * inv_p);
        (MoleculeBranch::Large, e1, mu + e1, e1, mu + e1)
    } else {
        let e1 = nf * (inv_q - 2.0 * inv_p);
        let e1_alt = 2.0 * nf * (inv_q - inv_p);
        (MoleculeBranch::Small, e1, theta * mu + e1, e1_alt, theta * mu + e1_alt)
    };
    let c1 = mass / sigma.powf(e1);
    let c2 = weighted / sigma.powf(e2);
    let residual = m.integral().norm();
    let l1_norm = m.lp_norm(1.0);
    let pass = c1 <= params.cap && c2 <= params.cap && residual <= params.cancellation_tolerance && l1_norm.is_finite();
    Ok(Molecule {
        center: z.to_vec(),
        sigma,
        n,
        p: params.p,
        q: 1.0 / inv_q,
        beta: params.beta,
        omega: params.omega,
        alpha: params.alpha,
        theta,
        mu,
        branch,
        c1,
        c2,
        c1_alt: mass / sigma.powf(e1_alt),
        c2_alt: weighted / sigma.powf(e2_alt),
        residual,
        l1_norm,
        theta_within_alpha: theta <= params.alpha + 1e-12,
        decay_limit_consistent: window.decay_upper.is_none_or(|d| d <= window.size_upper + 1e-12),
        cap: params.cap,
        pass,
    })
}

/// One block `lambda_j a_j` of the decomposition; `a_j` lives on `B(z, 2^(j+1) sigma)`.
#[derive(Debug, Clone)]
pub struct DecompositionBlock {
    pub j: usize,
    pub radius: f64,
    pub lambda: f64,
    pub atom: Atom,
    pub report: AtomReport,
}

/// Decomposition `M = psi_0 + sum_{j>=1} (psi_j + phi_{j-1}) = sum_j lambda_j a_j`
/// with the intermediate pieces kept for inspection.
#[derive(Debug, Clone)]
pub struct AtomicDecomposition {
    pub p: f64,
    pub center: Vec<f64>,
    pub sigma: f64,
    pub n_sigma: usize,
    pub blocks: Vec<DecompositionBlock>,
    /// `psi_j = (M - M_j) chi_{A_j}`, `j = 0..=N`.
    pub psi: Vec<PeriodicFunction>,
    /// `phi_j = nu_j (chi_{A_{j+1}}/|A_{j+1}| - chi_{A_j}/|A_j|)`, `j = 0..N`.
    pub phi: Vec<PeriodicFunction>,
    /// `nu_j = int_{T \ B_j} M`, `j = 0..=N`.
    pub nu: Vec<Complex64>,
    /// Annulus means `M_j`.
    pub means: Vec<Complex64>,
    /// Grid-count measures `|A_j|`.
    pub measures: Vec<f64>,
    /// `(sum |lambda_j|^p)^(1/p)`.
    pub hp_bound: f64,
    /// `max |M - sum lambda_j a_j|` on the grid.
    pub reconstruction_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockSummary {
    pub j: usize,
    pub radius: f64,
    pub lambda: f64,
    pub atom: AtomReport,
}

/// JSON view of an [`AtomicDecomposition`] without grid samples.
#[derive(Debug, Clone, Serialize)]
pub struct DecompositionSummary {
    pub p: f64,
    pub center: Vec<f64>,
    pub sigma: f64,
    pub n_sigma: usize,
    pub hp_bound: f64,
    pub reconstruction_error: f64,
    pub nu: Vec<[f64; 2]>,
    pub means: Vec<[f64; 2]>,
    pub measures: Vec<f64>,
    pub blocks: Vec<BlockSummary>,
}

impl AtomicDecomposition {
    pub fn summary(&self) -> DecompositionSummary {
        DecompositionSummary {
            p: self.p,
            center: self.center.clone(),
            sigma: self.sigma,
            n_sigma: self.n_sigma,
            hp_bound: self.hp_bound,
            reconstruction_error: self.reconstruction_error,
            nu: self.nu.iter().map(|c| [c.re, c.im]).collect(),
            means: self.means.iter().map(|c| [c.re, c.im]).collect(),
            measures: self.measures.clone(),
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockSummary {
                    j: b.j,
                    radius: b.radius,
                    lambda: b.lambda,
                    atom: b.report,
                })
                .collect(),
        }
    }

    pub fn all_atoms_pass(&self) -> bool {
        self.blocks.iter().all(|b| b.report.pass)
    }
}

/// Splits a mean-zero `M` around `B(z, sigma)` into `(p, 2)`-atoms on the
/// balls `B_j = B(z, 2^(j+1) sigma)`, using the core `A_0 = B(z, 2 sigma)`
/// and the half-open shells `A_j = {2^j sigma <= |x - z| < 2^(j+1) sigma}`.
pub fn molecule_decompose(m: &PeriodicFunction, z: &[f64], sigma: f64, p: f64) -> Result<AtomicDecomposition> {
    let grid = m.grid();
    let n = grid.dim();
    if z.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: z.len(),
        });
    }
    if !(sigma > 0.0) {
        return Err(Error::param("sigma", sigma, "must be positive"));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::param("p", p, "must lie in (0, 1]"));
    }
    let total = m.integral();
    if total.norm() > CANCELLATION_TOLERANCE {
        return Err(Error::CancellationViolated {
            residual: total.norm(),
            tolerance: CANCELLATION_TOLERANCE,
        });
    }

    let count = n_sigma(sigma, n)?;
    let w = grid.cell_volume();
    let region: Vec<usize> = grid
        .distances_from(z)
        .iter()
        .map(|&d| {
            let mut j = 0;
            while j < count && d >= (j as f64 + 1.0).exp2() * sigma {
                j += 1;
            }
            j
        })
        .collect();

    let mut cells = vec![0usize; count + 1];
    let mut sums = vec![Complex64::new(0.0, 0.0); count + 1];
    for (&r, v) in region.iter().zip(m.values()) {
        cells[r] += 1;
        sums[r] += v;
    }
    let measures: Vec<f64> = cells.iter().map(|&c| c as f64 * w).collect();
    let means: Vec<Complex64> = sums
        .iter()
        .zip(&cells)
        .map(|(s, &c)| if c == 0 { Complex64::new(0.0, 0.0) } else { s / c as f64 })
        .collect();
    let mut nu = Vec::with_capacity(count + 1);
    let mut inside = Complex64::new(0.0, 0.0);
    for s in &sums {
        inside += s * w;
        nu.push(total - inside);
    }

    let indicator_scaled = |j: usize, c: Complex64| -> Vec<Complex64> {
        region
            .iter()
            .map(|&r| if r == j { c } else { Complex64::new(0.0, 0.0) })
            .collect()
    };
    let psi: Vec<PeriodicFunction> = (0..=count)
        .map(|j| {
            let vals = region
                .iter()
                .zip(m.values())
                .map(|(&r, v)| if r == j { v - means[j] } else { Complex64::new(0.0, 0.0) })
                .collect();
            PeriodicFunction::new(grid, vals)
        })
        .collect::<Result<_>>()?;
    let mut phi = Vec::with_capacity(count);
    for j in 0..count {
        if nu[j].norm() > CANCELLATION_TOLERANCE && (cells[j] == 0 || cells[j + 1] == 0) {
            return Err(Error::param(
                "sigma",
                sigma,
                format!(
                    "annulus {} holds no grid points; refine the grid",
                    if cells[j] == 0 { j } else { j + 1 }
                ),
            ));
        }
        let up = if cells[j + 1] == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            nu[j] / measures[j + 1]
        };
        let down = if cells[j] == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            nu[j] / measures[j]
        };
        let a = indicator_scaled(j + 1, up);
        let b = indicator_scaled(j, down);
        phi.push(PeriodicFunction::new(
            grid,
            a.iter().zip(&b).map(|(x, y)| x - y).collect(),
        )?);
    }

    let m_norm = m.l2_norm();
    let mut blocks = Vec::with_capacity(count + 1);
    let mut reconstruction = vec![Complex64::new(0.0, 0.0); grid.len()];
    for j in 0..=count {
        let block = if j == 0 {
            psi[0].clone()
        } else {
            psi[j].zip_with(&phi[j - 1], |a, b| a + b)?
        };
        let radius = (j as f64 + 1.0).exp2() * sigma;
        let norm_bound = ball_volume(n, radius).powf(0.5 - 1.0 / p);
        // blocks at roundoff level of M are zero; normalizing them would amplify noise
        let block_norm = block.l2_norm();
        let lambda = if block_norm > ROUNDOFF_BLOCK * m_norm {
            block_norm / norm_bound
        } else {
            0.0
        };
        let samples = if lambda > 0.0 {
            block.scale(Complex64::new(1.0 / lambda, 0.0))
        } else {
            PeriodicFunction::zeros(grid)
        };
        for (acc, v) in reconstruction.iter_mut().zip(samples.values()) {
            *acc += v * lambda;
        }
        let atom = Atom::new(samples, z, radius, p, AtomNorm::Two)?;
        let report = atom_validate(&atom, ATOM_TOLERANCE);
        blocks.push(DecompositionBlock {
            j,
            radius,
            lambda,
            atom,
            report,
        });
    }
    let reconstruction_error = m
        .values()
        .iter()
        .zip(&reconstruction)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let hp_bound = blocks.iter().map(|b| b.lambda.abs().powf(p)).sum::<f64>().powf(1.0 / p);

    Ok(AtomicDecomposition {
        p,
        center: z.to_vec(),
        sigma,
        n_sigma: count,
        blocks,
        psi,
        phi,
        nu,
        means,
        measures,
        hp_bound,
        reconstruction_error,
    })
}
