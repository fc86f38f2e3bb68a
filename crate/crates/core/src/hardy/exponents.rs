use serde::Serialize;

use crate::error::{Error, Result};

/// The integer `N` with `sqrt(n)/(2 sigma) < 2^N <= sqrt(n)/sigma`, clamped at 0.
pub fn n_sigma(sigma: f64, n: usize) -> Result<usize> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::param("sigma", sigma, "must be positive and finite"));
    }
    let upper = (n as f64).sqrt() / sigma;
    let mut k = upper.log2().floor() as i64;
    // guard the floor against rounding at exact powers of two
    while (k as f64 + 1.0).exp2() <= upper {
        k += 1;
    }
    while (k as f64).exp2() > upper {
        k -= 1;
    }
    Ok(k.max(0) as usize)
}

/// Whether `beta = n/2` is admitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaRange {
    /// `(1-rho) n/2 <= beta < n/2`, as for `H^p -> L^p`.
    Strict,
    /// `(1-rho) n/2 <= beta <= n/2`, as for `H^p -> H^p`.
    Inclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdParams {
    pub n: usize,
    pub rho: f64,
    pub delta: f64,
    pub beta: f64,
    pub omega: f64,
    pub alpha: f64,
    /// `max{0, (delta - rho)/2}`.
    pub lambda: f64,
    /// `1/q = 1/2 + beta/n`.
    pub q: f64,
    pub p0: f64,
    /// Largest order covered: `-beta - n lambda`.
    pub order_threshold: f64,
    /// `beta = n/2`, admitted only by [`BetaRange::Inclusive`].
    pub beta_at_boundary: bool,
}

impl ThresholdParams {
    pub fn inv_q(&self) -> f64 {
        0.5 + self.beta / self.n as f64
    }

    /// Order bound `m <= -n[(1-rho)/2 + lambda]` for the kernel estimates.
    pub fn kernel_order_bound(&self) -> f64 {
        -(self.n as f64) * ((1.0 - self.rho) / 2.0 + self.lambda)
    }
}

/// `lambda`, `q` and the critical exponent
/// `1/p0 = 1/2 + beta (omega/alpha + n/2) / (n (omega/alpha - omega + beta))`,
/// which for `alpha = 1` collapses to `p0 = n/(n + omega)` and is returned in
/// that form.
pub fn critical_exponents(
    n: usize,
    rho: f64,
    delta: f64,
    beta: f64,
    omega: f64,
    alpha: f64,
    range: BetaRange,
) -> Result<ThresholdParams> {
    if n == 0 {
        return Err(Error::param("n", 0.0, "dimension must be positive"));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::param("rho", rho, "must lie in (0, 1]"));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::param("delta", delta, "must lie in [0, 1)"));
    }
    if !(omega > 0.0 && omega <= 1.0) {
        return Err(Error::param("omega", omega, "must lie in (0, 1]"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::param("alpha", alpha, "must lie in (0, 1]"));
    }
    let nf = n as f64;
    let lower = (1.0 - rho) * nf / 2.0;
    let upper = nf / 2.0;
    let slack = 1e-12;
    if beta < lower - slack {
        return Err(Error::param(
            "beta",
            beta,
            format!("must be at least (1 - rho) n / 2 = {lower}"),
        ));
    }
    let at_boundary = (beta - upper).abs() <= slack;
    let above = match range {
        BetaRange::Strict => beta >= upper - slack,
        BetaRange::Inclusive => beta > upper + slack,
    };
    if above {
        let rel = if range == BetaRange::Strict { "<" } else { "<=" };
        return Err(Error::param(
            "beta",
            beta,
            format!("must satisfy beta {rel} n/2 = {upper}"),
        ));
    }

    let p0 = if alpha == 1.0 {
        nf / (nf + omega)
    } else {
        let ratio = omega / alpha;
        let inv = 0.5 + beta * (ratio + nf / 2.0) / (nf * (ratio - omega + beta));
        1.0 / inv
    };
    let lambda = ((delta - rho) / 2.0).max(0.0);
    Ok(ThresholdParams {
        n,
        rho,
        delta,
        beta,
        omega,
        alpha,
        lambda,
        q: 1.0 / (0.5 + beta / nf),
        p0,
        order_threshold: -beta - nf * lambda,
        beta_at_boundary: at_boundary,
    })
}
