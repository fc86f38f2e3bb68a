//! Experiment configuration: per-experiment defaults, overlaid by a TOML file
//! and then by command-line flags.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use torus_pdo::symbol::SymbolSpec;

use crate::ExperimentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    KernelDecay,
    Threshold,
    HpPipeline,
    SharpMax,
    VerifySymbol,
    MoleculeDecompose,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::KernelDecay,
        Experiment::Threshold,
        Experiment::HpPipeline,
        Experiment::SharpMax,
        Experiment::VerifySymbol,
        Experiment::MoleculeDecompose,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::KernelDecay => "kernel-decay",
            Experiment::Threshold => "threshold",
            Experiment::HpPipeline => "hp-pipeline",
            Experiment::SharpMax => "sharp-max",
            Experiment::VerifySymbol => "verify-symbol",
            Experiment::MoleculeDecompose => "molecule-decompose",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| ExperimentError::Config(format!("unknown experiment `{s}`")))
    }
}

/// Pass thresholds. The caps are calibration constants of this harness, fixed
/// by reference runs; they are not theoretical values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Allowed `|fitted j-slope - target|`.
    pub slope: f64,
    /// Allowed growth of the normalized annulus constant across the sigma ladder.
    pub sigma_growth: f64,
    /// Cap on `R(sigma_min) / R(sigma_max)` for bounded orders.
    pub ratio_cap: f64,
    /// Required factor between control and bounded ratios.
    pub separation: f64,
    /// Cap on `(sum |lambda_j|^p)^(1/p)`.
    pub hp_cap: f64,
    /// Cap on measured molecule constants.
    pub molecule_cap: f64,
    /// BMO-null tolerance for `T*(1)`.
    pub t_star_one: f64,
    /// Guard on maximal-function denominators.
    pub epsilon_floor: f64,
    /// Relative drift allowed between two resolutions.
    pub stability: f64,
    /// Cap on sampled symbol constants.
    pub class_cap: f64,
    /// Allowed growth of symbol constants per box doubling.
    pub class_growth: f64,
    /// Growth that mis-ordered class claims must reach.
    pub misordered_growth: f64,
    /// Reconstruction and cancellation tolerance.
    pub reconstruction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            slope: 0.3,
            sigma_growth: 1.25,
            ratio_cap: 10.0,
            separation: 4.0,
            hp_cap: 20.0,
            molecule_cap: 1e3,
            t_star_one: 1e-8,
            epsilon_floor: 1e-12,
            stability: 0.2,
            class_cap: 1e6,
            class_growth: 1.1,
            misordered_growth: 1.3,
            reconstruction: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n: usize,
    /// Grid points per axis, `G`.
    pub grid_points: usize,
    /// Frequency box radius, `N`.
    pub band: usize,
    pub symbol: String,
    pub rho: f64,
    pub delta: f64,
    pub beta: f64,
    pub p: f64,
    /// Orders swept by `threshold`.
    pub orders: Vec<f64>,
    /// Order whose ratio is asserted bounded in `threshold`.
    pub bounded_order: f64,
    /// Order above the threshold used as the growth control.
    pub control_order: f64,
    pub sigmas: Vec<f64>,
    pub gammas: Vec<f64>,
    /// Lower edge of the large-scale regime for kernel estimates.
    pub epsilon: f64,
    pub atoms: usize,
    /// Random test functions for `sharp-max`.
    pub functions: usize,
    /// Probe directions per dimension.
    pub probes: usize,
    /// Extra seeded centers used to report the spread of kernel integrals.
    pub centers: usize,
    /// Integrability exponent of the D-condition audit.
    pub r: f64,
    /// Box radii of the class-membership sweep.
    pub class_radii: Vec<usize>,
    /// Grid for x-derivatives in the class-membership sweep.
    pub class_grid: usize,
    pub seed: u64,
    /// Assert rows that carry a tolerance; otherwise every row is informational.
    pub assert: bool,
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    /// Reference defaults for `experiment`.
    pub fn defaults(experiment: Experiment) -> Self {
        let base = Self {
            experiment,
            n: 1,
            grid_points: 1024,
            band: 256,
            symbol: "multiplier:m=-1".into(),
            rho: 1.0,
            delta: 0.0,
            beta: 0.45,
            p: 1.0,
            orders: vec![-1.0, -0.45, 0.0, 0.5],
            bounded_order: -0.45,
            control_order: 0.5,
            sigmas: (3..=7).map(|k| (-(k as f64)).exp2()).collect(),
            gammas: vec![1.0],
            epsilon: 0.25,
            atoms: 50,
            functions: 5,
            probes: 8,
            centers: 4,
            r: 1.0,
            class_radii: vec![16, 32, 64],
            class_grid: 32,
            seed: 0,
            assert: true,
            tolerances: Tolerances::default(),
        };
        match experiment {
            Experiment::KernelDecay => Self {
                sigmas: vec![0.125, 0.0625, 0.03125],
                ..base
            },
            Experiment::Threshold => Self {
                symbol: "multiplier:m=-0.45".into(),
                ..base
            },
            Experiment::HpPipeline => Self {
                symbol: "multiplier:m=-0.45".into(),
                p: 0.9,
                sigmas: (3..=6).map(|k| (-(k as f64)).exp2()).collect(),
                ..base
            },
            Experiment::SharpMax => Self {
                sigmas: vec![0.125, 0.0625, 0.03125],
                ..base
            },
            Experiment::VerifySymbol => Self {
                symbol: "bessel:s=1".into(),
                ..base
            },
            Experiment::MoleculeDecompose => Self {
                symbol: "multiplier:m=-0.45".into(),
                p: 0.9,
                sigmas: vec![0.0625],
                ..base
            },
        }
    }

    pub fn symbol_spec(&self) -> Result<SymbolSpec, ExperimentError> {
        Ok(self.symbol.parse()?)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |msg: String| Err(ExperimentError::Config(msg));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if self.grid_points <= 2 * self.band {
            return bad(format!(
                "grid_points = {} must exceed 2 * band = {}",
                self.grid_points,
                2 * self.band
            ));
        }
        if self.sigmas.is_empty() {
            return bad("sigma ladder is empty".into());
        }
        if let Some(s) = self.sigmas.iter().find(|s| !(**s > 0.0 && **s < 0.5)) {
            return bad(format!("sigma = {s} outside (0, 1/2)"));
        }
        if let Some(g) = self.gammas.iter().find(|g| !(**g > 0.0 && **g <= 1.0)) {
            return bad(format!("gamma = {g} outside (0, 1]"));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return bad(format!("p = {} outside (0, 1]", self.p));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return bad(format!("rho = {} outside (0, 1]", self.rho));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return bad(format!("delta = {} outside [0, 1)", self.delta));
        }
        if self.atoms == 0 {
            return bad("atoms must be positive".into());
        }
        if !(self.r >= 1.0) {
            return bad(format!("r = {} below 1", self.r));
        }
        if self.class_radii.is_empty() {
            return bad("class_radii is empty".into());
        }
        self.symbol_spec()?;
        Ok(())
    }

    pub fn apply(&mut self, o: &ConfigOverrides) -> Result<(), ExperimentError> {
        if let Some(e) = &o.experiment {
            let e: Experiment = e.parse()?;
            if e != self.experiment {
                return Err(ExperimentError::Config(format!(
                    "config file is for `{e}`, not `{}`",
                    self.experiment
                )));
            }
        }
        macro_rules! take {
            ($($field:ident),*) => { $( if let Some(v) = &o.$field { self.$field = v.clone(); } )* };
        }
        take!(
            n,
            grid_points,
            band,
            symbol,
            rho,
            delta,
            beta,
            p,
            orders,
            bounded_order,
            control_order,
            sigmas,
            gammas,
            epsilon,
            atoms,
            functions,
            probes,
            centers,
            r,
            class_radii,
            class_grid,
            seed,
            assert
        );
        if let Some(t) = &o.tolerances {
            macro_rules! tol {
                ($($field:ident),*) => { $( if let Some(v) = t.$field { self.tolerances.$field = v; } )* };
            }
            tol!(
                slope,
                sigma_growth,
                ratio_cap,
                separation,
                hp_cap,
                molecule_cap,
                t_star_one,
                epsilon_floor,
                stability,
                class_cap,
                class_growth,
                misordered_growth,
                reconstruction
            );
        }
        Ok(())
    }

    /// Defaults for `experiment`, then `file`, then `flags`; validated.
    pub fn resolve(
        experiment: Experiment,
        file: Option<&ConfigOverrides>,
        flags: &ConfigOverrides,
    ) -> Result<Self, ExperimentError> {
        let mut cfg = Self::defaults(experiment);
        if let Some(f) = file {
            cfg.apply(f)?;
        }
        cfg.apply(flags)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Partial configuration as read from a file or assembled from flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub experiment: Option<String>,
    pub n: Option<usize>,
    pub grid_points: Option<usize>,
    pub band: Option<usize>,
    pub symbol: Option<String>,
    pub rho: Option<f64>,
    pub delta: Option<f64>,
    pub beta: Option<f64>,
    pub p: Option<f64>,
    pub orders: Option<Vec<f64>>,
    pub bounded_order: Option<f64>,
    pub control_order: Option<f64>,
    pub sigmas: Option<Vec<f64>>,
    pub gammas: Option<Vec<f64>>,
    pub epsilon: Option<f64>,
    pub atoms: Option<usize>,
    pub functions: Option<usize>,
    pub probes: Option<usize>,
    pub centers: Option<usize>,
    pub r: Option<f64>,
    pub class_radii: Option<Vec<usize>>,
    pub class_grid: Option<usize>,
    pub seed: Option<u64>,
    pub assert: Option<bool>,
    pub tolerances: Option<ToleranceOverrides>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub slope: Option<f64>,
    pub sigma_growth: Option<f64>,
    pub ratio_cap: Option<f64>,
    pub separation: Option<f64>,
    pub hp_cap: Option<f64>,
    pub molecule_cap: Option<f64>,
    pub t_star_one: Option<f64>,
    pub epsilon_floor: Option<f64>,
    pub stability: Option<f64>,
    pub class_cap: Option<f64>,
    pub class_growth: Option<f64>,
    pub misordered_growth: Option<f64>,
    pub reconstruction: Option<f64>,
}

impl ConfigOverrides {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml(&text)
    }
}
