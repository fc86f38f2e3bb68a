//! Periodic pseudo-differential operators on the torus `T^n = R^n / Z^n`.
//!
//! * [`torus`]: grids, frequency boxes, the toroidal Fourier transform.
//! * [`symbol`]: symbols on `T^n x Z^n`, difference operators, class checks.
//! * [`quantizer`]: `Op(p)`, adjoints, Schwartz kernels and their annulus estimates.
//! * [`hardy`]: atoms, molecules, maximal functions, BMO, critical exponents.

mod error;
mod fft;
pub mod hardy;
pub mod quantizer;
pub mod symbol;
pub mod torus;

pub use error::{Error, Result};
pub use num_complex::Complex64;
