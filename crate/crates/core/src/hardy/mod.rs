//! Atoms, molecules and their atomic decomposition, maximal functions, BMO,
//! and the critical exponents of the `H^p` theory on the torus.

mod atom;
mod exponents;
mod maximal;
mod molecule;

pub use atom::{atom_validate, make_atom, moment_order, Atom, AtomNorm, AtomReport};
pub use exponents::{critical_exponents, n_sigma, BetaRange, ThresholdParams};
pub use maximal::{
    bmo_norm, bmo_norm_with, maximal_p, maximal_p_with, maximal_sup, sharp_maximal, sharp_maximal_with, BallFamily,
    ScalarField, SharpMaximal,
};
pub use molecule::{
    molecule_decompose, molecule_validate, AtomicDecomposition, BlockSummary, DecompositionBlock, DecompositionSummary,
    Molecule, MoleculeBranch, MoleculeParams, MuWindow, ATOM_TOLERANCE, CANCELLATION_TOLERANCE, MOLECULE_CAP,
};

use std::io::Write;

use crate::error::{Error, Result};
use crate::torus::PeriodicFunction;

/// Grid samples as CSV with columns `index,x1..xn,re,im`.
pub fn write_samples_csv<W: Write>(f: &PeriodicFunction, writer: W) -> Result<()> {
    let grid = f.grid();
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["index".to_string()];
    header.extend((1..=grid.dim()).map(|i| format!("x{i}")));
    header.extend(["re".to_string(), "im".to_string()]);
    w.write_record(&header)?;
    for (k, v) in f.values().iter().enumerate() {
        let mut rec = vec![k.to_string()];
        rec.extend(grid.point(k).iter().map(|x| x.to_string()));
        rec.push(v.re.to_string());
        rec.push(v.im.to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))
}
