use rayon::prelude::*;
use std::time::Instant;
use torus_pdo::hardy::{
    atom_validate, bmo_norm, critical_exponents, maximal_p, maximal_sup, molecule_decompose, molecule_validate,
    sharp_maximal, BetaRange, MoleculeParams, ThresholdParams,
};
use torus_pdo::quantizer::{
    annulus_kernel_estimate, apply, d_condition_check, fit_line, t_star_one, AnnulusEstimate, AnnulusQuery, Cutoff,
    DConditionQuery, DConditionReport, KernelSide, ProbeSet, MIN_FIT_CELLS,
};
use torus_pdo::symbol::{class_membership, ClassQuery, Symbol, SymbolClass, SymbolSpec};
use torus_pdo::torus::{FreqBox, TorusGrid};
use torus_pdo::Complex64;

use crate::config::{Experiment, ExperimentConfig};
use crate::result::{FitRecord, SweepResult, SweepRow};
use crate::sampling::{cell_rng, draw_atoms, random_trig_polynomial};
use crate::ExperimentError;

type Outcome = Result<SweepResult, ExperimentError>;

/// Runs the experiment named in `cfg`.
pub fn run(cfg: &ExperimentConfig) -> Outcome {
    cfg.validate()?;
    let start = Instant::now();
    let mut result = match cfg.experiment {
        Experiment::KernelDecay => run_kernel_decay(cfg),
        Experiment::Threshold => run_threshold_sweep(cfg),
        Experiment::HpPipeline => run_hp_pipeline(cfg),
        Experiment::SharpMax => run_sharp_maximal_check(cfg),
        Experiment::VerifySymbol => run_verify_symbol(cfg),
        Experiment::MoleculeDecompose => run_molecule_decompose(cfg),
    }?;
    result.metadata.wall_time = start.elapsed();
    Ok(result)
}

/// Row factory for one symbol. With `assert` off every row is informational.
#[derive(Clone)]
struct Rows<'a> {
    cfg: &'a ExperimentConfig,
    symbol: String,
    m: f64,
    rho: f64,
    assert: bool,
}

impl<'a> Rows<'a> {
    fn new(cfg: &'a ExperimentConfig, spec: &SymbolSpec) -> Self {
        Self {
            cfg,
            symbol: spec.to_string(),
            m: spec.order(),
            rho: spec.rho(),
            assert: cfg.assert,
        }
    }

    fn for_spec(&self, spec: &SymbolSpec) -> Self {
        Self {
            symbol: spec.to_string(),
            m: spec.order(),
            rho: spec.rho(),
            ..self.clone()
        }
    }

    fn row(&self, sigma: Option<f64>, statistic: &str, value: f64, tolerance: Option<f64>) -> SweepRow {
        let tolerance = tolerance.filter(|_| self.assert);
        SweepRow {
            experiment: self.cfg.experiment.name().to_string(),
            n: self.cfg.n,
            grid_points: self.cfg.grid_points,
            band: self.cfg.band,
            symbol: self.symbol.clone(),
            m: self.m,
            rho: self.rho,
            delta: self.cfg.delta,
            beta: self.cfg.beta,
            p: self.cfg.p,
            sigma,
            statistic: statistic.to_string(),
            value,
            tolerance,
            pass: tolerance.map(|t| value <= t),
        }
    }

    fn info(&self, sigma: Option<f64>, statistic: &str, value: f64) -> SweepRow {
        self.row(sigma, statistic, value, None)
    }

    fn check(&self, sigma: Option<f64>, statistic: &str, value: f64, tolerance: f64) -> SweepRow {
        self.row(sigma, statistic, value, Some(tolerance))
    }
}

fn discretization(cfg: &ExperimentConfig) -> Result<(TorusGrid, FreqBox), ExperimentError> {
    let grid = TorusGrid::new(cfg.n, cfg.grid_points)?;
    let freq = FreqBox::new(cfg.n, cfg.band)?;
    grid.check_band(&freq)?;
    Ok((grid, freq))
}

fn side_name(side: KernelSide) -> &'static str {
    match side {
        KernelSide::Right => "right",
        KernelSide::Left => "left",
    }
}

fn seeded_centers(cfg: &ExperimentConfig, block: u64) -> Vec<Vec<f64>> {
    use rand::Rng;
    (0..cfg.centers)
        .map(|k| {
            let mut rng = cell_rng(cfg.seed, block, k as u64);
            (0..cfg.n).map(|_| rng.random::<f64>()).collect()
        })
        .collect()
}

fn exponents(cfg: &ExperimentConfig, rho: f64, range: BetaRange) -> Result<ThresholdParams, ExperimentError> {
    Ok(critical_exponents(cfg.n, rho, cfg.delta, cfg.beta, 1.0, rho, range)?)
}

fn check_p0(cfg: &ExperimentConfig, params: &ThresholdParams) -> Result<(), ExperimentError> {
    if cfg.assert && cfg.p < params.p0 {
        return Err(ExperimentError::Precondition(format!(
            "p = {} lies below the critical exponent p0 = {}; rerun with assert = false to explore",
            cfg.p, params.p0
        )));
    }
    Ok(())
}

const BLOCK_CENTERS: u64 = 1 << 20;
const BLOCK_FUNCTIONS: u64 = 1 << 21;

/// Annulus integrals of the kernel differences for every side, gamma and
/// sigma, with least-squares slopes in `j` and the sigma dependence of the
/// normalized constants.
pub fn run_kernel_decay(cfg: &ExperimentConfig) -> Outcome {
    let (grid, freq) = discretization(cfg)?;
    let spec = cfg.symbol_spec()?;
    let symbol = spec.build(cfg.n)?;
    let class = symbol.class();
    let mut result = SweepResult::new(cfg);
    let mut rows = Rows::new(cfg, &spec);

    let lambda = ((cfg.delta - class.rho) / 2.0).max(0.0);
    let bound = -(cfg.n as f64) * ((1.0 - class.rho) / 2.0 + lambda);
    if class.order > bound + 1e-12 && rows.assert {
        rows.assert = false;
        result.notes.push(format!(
            "order {} exceeds the kernel bound {bound}; running in exploratory mode",
            class.order
        ));
    }

    let probes = ProbeSet::radial(cfg.n, cfg.probes * cfg.n, 0.9, cfg.seed);
    let cutoff = Cutoff::smooth_for(freq);
    let z = vec![0.0; cfg.n];
    let mut sigmas = cfg.sigmas.clone();
    sigmas.sort_by(|a, b| b.total_cmp(a));

    for side in [KernelSide::Right, KernelSide::Left] {
        for &gamma in &cfg.gammas {
            let tag = format!("{}:gamma={gamma}", side_name(side));
            let mut estimates: Vec<AnnulusEstimate> = Vec::new();
            for &sigma in &sigmas {
                let query = AnnulusQuery {
                    epsilon: cfg.epsilon,
                    ..AnnulusQuery::new(sigma, gamma, side, cutoff)
                };
                let est = annulus_kernel_estimate(&symbol, freq, grid, &z, &query, &probes)?;
                for a in &est.integrals {
                    result
                        .rows
                        .push(rows.info(Some(sigma), &format!("{tag}:I_{}", a.j), a.integral));
                }
                match est.j_slope(MIN_FIT_CELLS) {
                    Some(fit) if fit.points >= 2 => {
                        result.fits.push(FitRecord {
                            label: format!("{tag}:sigma={sigma}:log2_I_vs_j"),
                            slope: fit.slope,
                            intercept: fit.intercept,
                            residual: fit.residual,
                            points: fit.points,
                            target: Some(est.target_j_slope),
                        });
                        result
                            .rows
                            .push(rows.info(Some(sigma), &format!("{tag}:j_slope"), fit.slope));
                        result.rows.push(rows.check(
                            Some(sigma),
                            &format!("{tag}:j_slope_error"),
                            (fit.slope - est.target_j_slope).abs(),
                            cfg.tolerances.slope,
                        ));
                    }
                    _ => result.notes.push(format!(
                        "{tag}: sigma = {sigma} leaves too few resolved annuli for a j-fit"
                    )),
                }
                estimates.push(est);
            }
            sigma_dependence(&rows, &tag, &estimates, class.rho, &mut result);
        }
    }

    if cfg.centers > 0 {
        let sigma = sigmas[sigmas.len() / 2];
        let query = AnnulusQuery {
            epsilon: cfg.epsilon,
            ..AnnulusQuery::new(sigma, cfg.gammas[0], KernelSide::Right, cutoff)
        };
        let totals = seeded_centers(cfg, BLOCK_CENTERS)
            .par_iter()
            .map(|c| {
                annulus_kernel_estimate(&symbol, freq, grid, c, &query, &probes)
                    .map(|e| e.integrals.iter().map(|a| a.integral).sum::<f64>())
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let (lo, hi) = min_max(&totals);
        result.rows.push(rows.info(Some(sigma), "right:center_spread", hi / lo));
    }
    Ok(result)
}

/// `K(sigma) = max_j I_j 2^(j/rho) sigma^-e` with `e` the target exponent.
fn sigma_dependence(rows: &Rows, tag: &str, estimates: &[AnnulusEstimate], rho: f64, result: &mut SweepResult) {
    let constants: Vec<(f64, f64)> = estimates
        .iter()
        .filter(|e| !e.integrals.is_empty())
        .map(|e| {
            let k = e
                .integrals
                .iter()
                .map(|a| a.integral * (a.j as f64 / rho).exp2())
                .fold(0.0, f64::max);
            (e.sigma, k / e.sigma.powf(e.target_sigma_exponent))
        })
        .collect();
    for &(sigma, k) in &constants {
        result
            .rows
            .push(rows.info(Some(sigma), &format!("{tag}:normalized_constant"), k));
    }
    if constants.len() < 2 {
        return;
    }
    let growth = constants.windows(2).map(|w| w[1].1 / w[0].1).fold(0.0, f64::max);
    result.rows.push(rows.check(
        None,
        &format!("{tag}:sigma_constant_growth"),
        growth,
        rows.cfg.tolerances.sigma_growth,
    ));
    let ks: Vec<f64> = constants.iter().map(|c| c.1).collect();
    let (lo, hi) = min_max(&ks);
    result
        .rows
        .push(rows.info(None, &format!("{tag}:sigma_constant_spread"), hi / lo));

    let first: Vec<(f64, f64)> = estimates
        .iter()
        .filter_map(|e| e.integrals.first().filter(|a| a.j == 1).map(|a| (e.sigma, a.integral)))
        .filter(|(_, i)| *i > 0.0)
        .collect();
    if first.len() >= 2 {
        let xs: Vec<f64> = first.iter().map(|(s, _)| s.log2()).collect();
        let ys: Vec<f64> = first.iter().map(|(_, i)| i.log2()).collect();
        if let Some(fit) = fit_line(&xs, &ys) {
            result.fits.push(FitRecord {
                label: format!("{tag}:log2_I_1_vs_log2_sigma"),
                slope: fit.slope,
                intercept: fit.intercept,
                residual: fit.residual,
                points: fit.points,
                target: estimates.last().map(|e| e.target_sigma_exponent),
            });
            result
                .rows
                .push(rows.info(None, &format!("{tag}:sigma_exponent"), fit.slope));
        }
    }
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    })
}

/// `R(m, sigma) = max_a ||Op(p_m) a||_p` over shared seeded atoms, and the
/// ratio `R(sigma_min) / R(sigma_max)` per order.
pub fn run_threshold_sweep(cfg: &ExperimentConfig) -> Outcome {
    let (grid, freq) = discretization(cfg)?;
    let spec = cfg.symbol_spec()?;
    let params = exponents(cfg, spec.rho(), BetaRange::Strict)?;
    check_p0(cfg, &params)?;
    let mut result = SweepResult::new(cfg);
    let base = Rows::new(cfg, &spec);
    result.rows.push(base.info(None, "p0", params.p0));
    result
        .rows
        .push(base.info(None, "order_threshold", params.order_threshold));

    let mut orders = cfg.orders.clone();
    orders.extend([cfg.bounded_order, cfg.control_order]);
    orders.sort_by(f64::total_cmp);
    orders.dedup();

    let atoms = cfg
        .sigmas
        .iter()
        .enumerate()
        .map(|(k, &s)| draw_atoms(grid, s, cfg.p, cfg.atoms, cfg.seed, k as u64))
        .collect::<Result<Vec<_>, _>>()?;
    let (s_min, s_max) = min_max(&cfg.sigmas);
    let i_min = cfg.sigmas.iter().position(|&s| s == s_min).unwrap_or(0);
    let i_max = cfg.sigmas.iter().position(|&s| s == s_max).unwrap_or(0);

    let mut ratios = Vec::with_capacity(orders.len());
    for &m in &orders {
        let spec_m = spec.with_order(m);
        let symbol = spec_m.build(cfg.n)?;
        let rows = base.for_spec(&spec_m);
        let mut r = Vec::with_capacity(cfg.sigmas.len());
        for (k, &sigma) in cfg.sigmas.iter().enumerate() {
            let norms = atoms[k]
                .par_iter()
                .filter(|a| a.atom.samples().sup_norm() > 0.0)
                .map(|a| apply(&symbol, a.atom.samples(), freq).map(|t| t.lp_norm(cfg.p)))
                .collect::<Result<Vec<f64>, _>>()?;
            let value = norms.into_iter().fold(0.0, f64::max);
            result.rows.push(rows.info(Some(sigma), "R", value));
            r.push(value);
        }
        let ratio = r[i_min] / r[i_max];
        if m <= params.order_threshold + 1e-12 {
            result
                .rows
                .push(rows.check(None, "ratio", ratio, cfg.tolerances.ratio_cap));
        } else {
            result.rows.push(rows.info(None, "ratio", ratio));
        }
        ratios.push((m, ratio));
    }

    let ratio_of = |m: f64| ratios.iter().find(|r| r.0 == m).map(|r| r.1);
    if let (Some(bounded), Some(control)) = (ratio_of(cfg.bounded_order), ratio_of(cfg.control_order)) {
        if cfg.control_order > params.order_threshold && cfg.bounded_order <= params.order_threshold {
            let rows = base.for_spec(&spec.with_order(cfg.control_order));
            result.rows.push(rows.check(
                None,
                "inverse_separation",
                bounded / control,
                1.0 / cfg.tolerances.separation,
            ));
        } else {
            result.notes.push(format!(
                "separation not asserted: bounded order {} and control order {} do not straddle the threshold {}",
                cfg.bounded_order, cfg.control_order, params.order_threshold
            ));
        }
    }
    let violations = ratios.windows(2).filter(|w| w[1].1 < w[0].1).count();
    result
        .rows
        .push(base.info(None, "ratio_monotonicity_violations", violations as f64));
    Ok(result)
}

#[derive(Debug, Default)]
struct PipelineCell {
    molecule_pass: bool,
    c1: f64,
    c2: f64,
    c1_alt: f64,
    c2_alt: f64,
    residual: f64,
    error: Option<String>,
    hp_bound: f64,
    reconstruction: f64,
    atoms_pass: bool,
    mu: f64,
}

fn molecule_params(cfg: &ExperimentConfig, rho: f64) -> MoleculeParams {
    MoleculeParams {
        cap: cfg.tolerances.molecule_cap,
        cancellation_tolerance: cfg.tolerances.reconstruction,
        ..MoleculeParams::new(cfg.p, cfg.beta, 1.0, rho)
    }
}

/// Refuses with [`ExperimentError::Gate`] unless `T*(1)` vanishes in BMO.
fn t_star_gate(
    cfg: &ExperimentConfig,
    symbol: &Symbol,
    freq: FreqBox,
    grid: TorusGrid,
) -> Result<f64, ExperimentError> {
    let gate = t_star_one(symbol, freq, grid, cfg.tolerances.t_star_one)?;
    if !gate.vanishes {
        return Err(ExperimentError::Gate {
            bmo: gate.bmo,
            tolerance: gate.tolerance,
        });
    }
    Ok(gate.bmo)
}

/// Images of seeded atoms checked as molecules and split into atoms.
pub fn run_hp_pipeline(cfg: &ExperimentConfig) -> Outcome {
    let (grid, freq) = discretization(cfg)?;
    let spec = cfg.symbol_spec()?;
    let symbol = spec.build(cfg.n)?;
    let rho = spec.rho();
    let params = exponents(cfg, rho, BetaRange::Inclusive)?;
    check_p0(cfg, &params)?;
    let mut result = SweepResult::new(cfg);
    let rows = Rows::new(cfg, &spec);
    if params.beta_at_boundary {
        result.notes.push(format!(
            "beta = n/2 = {} is the boundary case, admitted here but excluded from the H^p -> L^p sweep",
            cfg.beta
        ));
    }

    let bmo = t_star_gate(cfg, &symbol, freq, grid)?;
    result
        .rows
        .push(rows.check(None, "t_star_one_bmo", bmo, cfg.tolerances.t_star_one));
    let mparams = molecule_params(cfg, rho);
    result.rows.push(rows.info(None, "theta", mparams.theta(cfg.n)));

    let mut bounds = Vec::new();
    for (k, &sigma) in cfg.sigmas.iter().enumerate() {
        let atoms = draw_atoms(grid, sigma, cfg.p, cfg.atoms, cfg.seed, k as u64)?;
        let cells = atoms
            .par_iter()
            .map(|a| -> Result<PipelineCell, ExperimentError> {
                let m = apply(&symbol, a.atom.samples(), freq)?;
                let mol = molecule_validate(&m, &a.center, sigma, &mparams)?;
                let mut cell = PipelineCell {
                    molecule_pass: mol.pass,
                    c1: mol.c1,
                    c2: mol.c2,
                    c1_alt: mol.c1_alt,
                    c2_alt: mol.c2_alt,
                    residual: mol.residual,
                    mu: mol.mu,
                    ..Default::default()
                };
                match molecule_decompose(&m, &a.center, sigma, cfg.p) {
                    Ok(d) => {
                        cell.hp_bound = d.hp_bound;
                        cell.reconstruction = d.reconstruction_error;
                        cell.atoms_pass = d.all_atoms_pass();
                    }
                    Err(e) => cell.error = Some(e.to_string()),
                }
                Ok(cell)
            })
            .collect::<Result<Vec<_>, _>>()?;

        let max = |f: fn(&PipelineCell) -> f64| cells.iter().map(f).fold(0.0, f64::max);
        let count = |f: fn(&PipelineCell) -> bool| cells.iter().filter(|c| f(c)).count() as f64;
        let s = Some(sigma);
        if let Some(c) = cells.first() {
            result.rows.push(rows.info(s, "mu", c.mu));
        }
        result
            .rows
            .push(rows.check(s, "molecule_failures", count(|c| !c.molecule_pass), 0.0));
        let cap = cfg.tolerances.molecule_cap;
        result.rows.push(rows.check(s, "molecule_c1_max", max(|c| c.c1), cap));
        result.rows.push(rows.check(s, "molecule_c2_max", max(|c| c.c2), cap));
        result.rows.push(rows.info(s, "molecule_c1_alt_max", max(|c| c.c1_alt)));
        result.rows.push(rows.info(s, "molecule_c2_alt_max", max(|c| c.c2_alt)));
        result.rows.push(rows.check(
            s,
            "cancellation_residual_max",
            max(|c| c.residual),
            cfg.tolerances.reconstruction,
        ));
        result
            .rows
            .push(rows.check(s, "decomposition_errors", count(|c| c.error.is_some()), 0.0));
        if let Some(e) = cells.iter().find_map(|c| c.error.as_ref()) {
            result.notes.push(format!("sigma = {sigma}: {e}"));
        }
        result.rows.push(rows.check(
            s,
            "reconstruction_error_max",
            max(|c| c.reconstruction),
            cfg.tolerances.reconstruction,
        ));
        result
            .rows
            .push(rows.check(s, "atom_failures", count(|c| c.error.is_none() && !c.atoms_pass), 0.0));
        let hp: Vec<f64> = cells.iter().filter(|c| c.error.is_none()).map(|c| c.hp_bound).collect();
        let (lo, hi) = min_max(&hp);
        result.rows.push(rows.info(s, "hp_bound_min", lo));
        result
            .rows
            .push(rows.check(s, "hp_bound_max", hi, cfg.tolerances.hp_cap));
        bounds.extend(hp);
    }
    if !bounds.is_empty() {
        let (lo, hi) = min_max(&bounds);
        result.rows.push(rows.info(None, "hp_bound_spread", hi / lo));
    }
    Ok(result)
}

/// Sharp maximal function of `Tf` against `M_s f`, the `L^inf -> BMO` ratio
/// at two resolutions, and a D-condition audit of the kernel.
pub fn run_sharp_maximal_check(cfg: &ExperimentConfig) -> Outcome {
    let (grid, freq) = discretization(cfg)?;
    let coarse_cfg = ExperimentConfig {
        grid_points: cfg.grid_points / 2,
        band: cfg.band / 2,
        ..cfg.clone()
    };
    let (coarse_grid, coarse_freq) = discretization(&coarse_cfg)?;
    let spec = cfg.symbol_spec()?;
    let symbol = spec.build(cfg.n)?;
    let rho = spec.rho();
    let mut result = SweepResult::new(cfg);
    let rows = Rows::new(cfg, &spec);
    let tol = cfg.tolerances;

    let probes = ProbeSet::radial(cfg.n, cfg.probes * cfg.n, 0.9, cfg.seed);
    let audit = |grid: TorusGrid, freq: FreqBox| -> Result<DConditionReport, ExperimentError> {
        let query = DConditionQuery {
            r: cfg.r,
            alpha: rho,
            omega: 1.0,
            sigmas: cfg.sigmas.clone(),
            centers: vec![vec![0.0; cfg.n]],
            cutoff: Cutoff::smooth_for(freq),
            holder: false,
        };
        Ok(d_condition_check(&symbol, freq, grid, &query, &probes)?)
    };
    let fine = audit(grid, freq)?;
    let coarse = audit(coarse_grid, coarse_freq)?;
    for (j, d) in fine.d.iter().enumerate() {
        result.rows.push(rows.info(None, &format!("d_{}", j + 1), *d));
    }
    result.rows.push(rows.info(None, "d_sum", fine.sum));
    result.rows.push(rows.info(None, "d_sum_coarse", coarse.sum));
    let nonfinite = f64::from(u8::from(!(fine.finite && coarse.finite)));
    result.rows.push(rows.check(None, "d_sum_nonfinite", nonfinite, 0.0));
    result
        .rows
        .push(rows.check(None, "d_sum_drift", relative_drift(fine.sum, coarse.sum), tol.stability));
    if !fine.finite {
        result
            .notes
            .push("D-condition audit failed; maximal comparisons are exploratory".into());
    }

    let r_dual = if cfg.r > 1.0 {
        cfg.r / (cfg.r - 1.0)
    } else {
        f64::INFINITY
    };
    let s = cfg.p.max(r_dual);
    result.rows.push(rows.info(None, "s", s));

    let degree = (cfg.band / 8).clamp(1, 16);
    let constant = torus_pdo::torus::PeriodicFunction::constant(grid, Complex64::new(1.0, 0.0));
    let t_const = apply(&symbol, &constant, freq)?;
    result.rows.push(rows.check(
        None,
        "constant_input_sharp_sup",
        sharp_maximal(&t_const).median.sup(),
        tol.t_star_one,
    ));

    let mut ratio_max: f64 = 0.0;
    let mut nonfinite_ratios = 0usize;
    let mut violations = 0usize;
    let mut bmo_ratio: f64 = 0.0;
    let mut drift: f64 = 0.0;
    for k in 0..cfg.functions {
        let f = random_trig_polynomial(grid, degree, cfg.seed, BLOCK_FUNCTIONS + k as u64);
        let tf = apply(&symbol, &f, freq)?;
        let sharp = sharp_maximal(&tf).median;
        let ms = if s.is_infinite() {
            maximal_sup(&f)
        } else {
            maximal_p(&f, s)
        };
        let m1 = maximal_p(&f, 1.0);
        for ((sh, m), m1) in sharp.values().iter().zip(ms.values()).zip(m1.values()) {
            if *m > tol.epsilon_floor {
                let ratio = sh / m;
                if ratio.is_finite() {
                    ratio_max = ratio_max.max(ratio);
                } else {
                    nonfinite_ratios += 1;
                }
            }
            if *sh > 2.0 * m1 + 1e-12 {
                violations += 1;
            }
        }
        let sup = f.sup_norm();
        let fine_ratio = bmo_norm(&tf) / sup;
        let fc = random_trig_polynomial(coarse_grid, degree, cfg.seed, BLOCK_FUNCTIONS + k as u64);
        let coarse_ratio = bmo_norm(&apply(&symbol, &fc, coarse_freq)?) / fc.sup_norm();
        bmo_ratio = bmo_ratio.max(fine_ratio);
        drift = drift.max(relative_drift(fine_ratio, coarse_ratio));
    }
    result.rows.push(rows.info(None, "sharp_ratio_max", ratio_max));
    result
        .rows
        .push(rows.check(None, "sharp_ratio_nonfinite", nonfinite_ratios as f64, 0.0));
    result
        .rows
        .push(rows.check(None, "sharp_over_2m1_violations", violations as f64, 0.0));
    result.rows.push(rows.info(None, "bmo_over_sup_max", bmo_ratio));
    if cfg.functions > 0 {
        result
            .rows
            .push(rows.check(None, "bmo_over_sup_drift", drift, tol.stability));
    }
    Ok(result)
}

fn relative_drift(fine: f64, coarse: f64) -> f64 {
    let scale = fine.abs().max(coarse.abs());
    if scale == 0.0 {
        0.0
    } else {
        (fine - coarse).abs() / scale
    }
}

/// Sampled class membership of the configured symbol, plus the same symbol
/// claimed one order too low, which must show growing constants.
pub fn run_verify_symbol(cfg: &ExperimentConfig) -> Outcome {
    let spec = cfg.symbol_spec()?;
    let symbol = spec.build(cfg.n)?;
    let grid = TorusGrid::new(cfg.n, cfg.class_grid)?;
    let mut result = SweepResult::new(cfg);
    let rows = Rows::new(cfg, &spec);
    let tol = cfg.tolerances;
    let query = |order: f64| -> Result<ClassQuery, ExperimentError> {
        Ok(ClassQuery {
            cap: tol.class_cap,
            growth_tolerance: tol.class_growth,
            ..ClassQuery::new(SymbolClass::new(order, spec.rho(), cfg.delta)?, 2, 2)
        })
    };
    let report = class_membership(&symbol, &query(spec.order())?, &cfg.class_radii, grid)?;
    for (i, &r) in cfg.class_radii.iter().enumerate() {
        let c = report.constants.iter().map(|c| c.per_radius[i]).fold(0.0, f64::max);
        result.rows.push(rows.info(None, &format!("max_constant@N={r}"), c));
    }
    result
        .rows
        .push(rows.check(None, "class_max_constant", report.max_constant, tol.class_cap));
    result
        .rows
        .push(rows.check(None, "class_max_growth", report.max_growth, tol.class_growth));
    result.notes.extend(report.failures.iter().cloned());

    let wrong = class_membership(&symbol, &query(spec.order() - 1.0)?, &cfg.class_radii, grid)?;
    result
        .rows
        .push(rows.info(None, "misordered_max_growth", wrong.max_growth));
    result.rows.push(rows.check(
        None,
        "misordered_inverse_growth",
        1.0 / wrong.max_growth,
        1.0 / tol.misordered_growth,
    ));
    result.details = Some(serde_json::json!({
        "claimed": report,
        "misordered": wrong,
    }));
    Ok(result)
}

/// One seeded atom, its image as a molecule, and the full decomposition.
pub fn run_molecule_decompose(cfg: &ExperimentConfig) -> Outcome {
    let (grid, freq) = discretization(cfg)?;
    let spec = cfg.symbol_spec()?;
    let symbol = spec.build(cfg.n)?;
    let rho = spec.rho();
    let mut result = SweepResult::new(cfg);
    let rows = Rows::new(cfg, &spec);
    let sigma = cfg.sigmas[0];
    let tol = cfg.tolerances;

    let seeded = draw_atoms(grid, sigma, cfg.p, 1, cfg.seed, 0)?.remove(0);
    let atom_report = atom_validate(&seeded.atom, torus_pdo::hardy::ATOM_TOLERANCE);
    let m = apply(&symbol, seeded.atom.samples(), freq)?;
    let molecule = molecule_validate(&m, &seeded.center, sigma, &molecule_params(cfg, rho))?;
    let decomposition = molecule_decompose(&m, &seeded.center, sigma, cfg.p)?;
    let summary = decomposition.summary();
    let s = Some(sigma);
    result
        .rows
        .push(rows.check(s, "input_atom_fail", f64::from(u8::from(!atom_report.pass)), 0.0));
    result
        .rows
        .push(rows.check(s, "molecule_fail", f64::from(u8::from(!molecule.pass)), 0.0));
    result.rows.push(rows.check(
        s,
        "reconstruction_error",
        decomposition.reconstruction_error,
        tol.reconstruction,
    ));
    result.rows.push(rows.check(
        s,
        "atom_failures",
        decomposition.blocks.iter().filter(|b| !b.report.pass).count() as f64,
        0.0,
    ));
    result
        .rows
        .push(rows.check(s, "hp_bound", decomposition.hp_bound, tol.hp_cap));
    result.details = Some(serde_json::json!({
        "center": seeded.center,
        "atom_seed": seeded.seed,
        "input_atom": atom_report,
        "molecule": molecule,
        "decomposition": summary,
    }));
    Ok(result)
}
