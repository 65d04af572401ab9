//! Numerical integration over the unit hypercube `[0,1]^k`, `2 ≤ k ≤ 8`.
//!
//! Two backends: an adaptive Genz–Malik subdivision scheme (degree 7 with an
//! embedded degree 5 error rule) and randomized quasi-Monte Carlo on a
//! scrambled Sobol sequence. `Method::Auto` picks subdivision up to four
//! dimensions and QMC beyond.

mod genz_malik;
mod qmc;
pub(crate) mod sobol;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;

pub const MAX_DIM: usize = 8;
/// Highest dimension handled by adaptive subdivision under `Method::Auto`.
pub const ADAPTIVE_MAX_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Adaptive,
    Qmc,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationConfig {
    pub method: Method,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_evals: u64,
    pub qmc_seed: u64,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self::for_dim(2)
    }
}

impl IntegrationConfig {
    /// Default tolerances for a `k`-dimensional integral: tight for the
    /// subdivision range, looser where the QMC backend takes over.
    pub fn for_dim(k: usize) -> Self {
        let abs_tol = if k <= ADAPTIVE_MAX_DIM { 1e-7 } else { 1e-4 };
        IntegrationConfig {
            method: Method::Auto,
            abs_tol,
            rel_tol: 1e-6,
            max_evals: 10_000_000,
            qmc_seed: 0x5EED_CC1E,
            exec: Execution::default(),
        }
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_max_evals(mut self, max_evals: u64) -> Self {
        self.max_evals = max_evals;
        self
    }

    pub fn with_exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        if self.max_evals < 1000 {
            return Err(Error::InvalidConfig("max_evals must be at least 1000".into()));
        }
        Ok(())
    }

    pub(crate) fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// An integral value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evals: u64,
}

/// Integrates `f` over `[0,1]^k`.
///
/// On `ToleranceNotReached` the error carries the best estimate found within
/// the evaluation budget.
pub fn integrate_unit_cube<F>(f: F, k: usize, cfg: &IntegrationConfig) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    if !(2..=MAX_DIM).contains(&k) {
        return Err(Error::InvalidConfig(format!("integration dimension must be in 2..={MAX_DIM}, got {k}")));
    }
    let method = match cfg.method {
        Method::Auto if k <= ADAPTIVE_MAX_DIM => Method::Adaptive,
        Method::Auto => Method::Qmc,
        m => m,
    };
    match method {
        Method::Adaptive => genz_malik::integrate(&f, k, cfg),
        _ => qmc::integrate(&f, k, cfg),
    }
}

/// `−c·ln c` on `[0,1]` with `0 ↦ 0`; input clamped to the unit interval.
#[inline]
pub fn xlogx(c: f64) -> f64 {
    let c = c.clamp(0.0, 1.0);
    if c == 0.0 || c == 1.0 {
        0.0
    } else {
        -c * c.ln()
    }
}

/// Pointwise CCKL integrand `c1·ln(c1/c2) − c1 + c2`.
///
/// Returns `+∞` when `c1 > 0` and `c2 = 0`. Inputs are clamped to `[0,1]`
/// and the result is never negative.
#[inline]
pub fn xlog_ratio(c1: f64, c2: f64) -> f64 {
    let c1 = c1.clamp(0.0, 1.0);
    let c2 = c2.clamp(0.0, 1.0);
    if c1 == 0.0 {
        return c2;
    }
    if c2 == 0.0 {
        return f64::INFINITY;
    }
    // c2·g(c1/c2) with g(z) = z ln z − z + 1 ≥ 0; written through ln_1p for
    // accuracy when the ratio is close to one.
    let z = c1 / c2;
    let v = if (z - 1.0).abs() < 0.5 {
        let d = z - 1.0;
        c2 * (z * d.ln_1p() - d)
    } else {
        c2 * (z * z.ln() - z + 1.0)
    };
    v.max(0.0)
}
