//! Cumulative copula entropy and related functionals, by cubature and,
//! where available, in closed form.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};

use crate::copula::{CopulaCdf, CopulaModel, Family, Kind};
use crate::cubature::{integrate_unit_cube, xlog_ratio, xlogx, Estimate, IntegrationConfig};
use crate::error::{Error, Result};
use crate::special::{beta, exp_integral_e1, gamma, gen_binom, ln_choose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureMethod {
    ClosedForm,
    Cubature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub value: f64,
    pub error: f64,
    pub method: MeasureMethod,
    pub evals: u64,
}

impl MeasureEstimate {
    pub fn from_cubature(e: Estimate) -> Self {
        MeasureEstimate { value: e.value, error: e.error, method: MeasureMethod::Cubature, evals: e.evals }
    }

    pub fn closed_form(value: f64) -> Self {
        MeasureEstimate { value, error: 0.0, method: MeasureMethod::ClosedForm, evals: 0 }
    }
}

/// A scalar functional of a copula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "arg", rename_all = "snake_case")]
pub enum MeasureKind {
    Cce,
    Fcce(f64),
    Ccigf(f64),
    SpearmanMinus,
    BK,
}

impl MeasureKind {
    pub fn validate(self) -> Result<Self> {
        match self {
            MeasureKind::Fcce(r) if !(0.0..=1.0).contains(&r) => {
                Err(Error::InvalidConfig(format!("fcce order r must lie in [0, 1], got {r}")))
            }
            MeasureKind::Ccigf(s) if !(s > 0.0 && s.is_finite()) => {
                Err(Error::InvalidConfig(format!("ccigf argument s must be positive, got {s}")))
            }
            k => Ok(k),
        }
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureKind::Cce => f.write_str("cce"),
            MeasureKind::Fcce(r) => write!(f, "fcce:{r}"),
            MeasureKind::Ccigf(s) => write!(f, "ccigf:{s}"),
            MeasureKind::SpearmanMinus => f.write_str("rho"),
            MeasureKind::BK => f.write_str("bk"),
        }
    }
}

impl FromStr for MeasureKind {
    type Err = Error;

    /// Parses `cce`, `fcce:<r>`, `ccigf:<s>`, `rho`, `bk`.
    fn from_str(s: &str) -> Result<Self> {
        let bad =
            || Error::InvalidConfig(format!("unknown statistic '{s}' (expected cce, fcce:<r>, ccigf:<s>, rho, bk)"));
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a.parse::<f64>().map_err(|_| bad())?)),
            None => (s, None),
        };
        let kind = match (head, arg) {
            ("cce", None) => MeasureKind::Cce,
            ("fcce", Some(r)) => MeasureKind::Fcce(r),
            ("ccigf", Some(v)) => MeasureKind::Ccigf(v),
            ("rho", None) => MeasureKind::SpearmanMinus,
            ("bk", None) => MeasureKind::BK,
            _ => return Err(bad()),
        };
        kind.validate()
    }
}

/// Evaluates any [`MeasureKind`] by cubature.
pub fn measure<C: CopulaCdf>(c: &C, kind: MeasureKind, cfg: &IntegrationConfig) -> Result<MeasureEstimate> {
    match kind.validate()? {
        MeasureKind::Cce => cce(c, cfg),
        MeasureKind::Fcce(r) => fcce(c, r, cfg),
        MeasureKind::Ccigf(s) => ccigf(c, s, cfg),
        MeasureKind::SpearmanMinus => spearman_rho_minus(c, cfg),
        MeasureKind::BK => b_k(c, cfg),
    }
}

/// Closed-form value of a [`MeasureKind`] when one is known for the model.
pub fn closed_form(model: &CopulaModel, kind: MeasureKind) -> Result<f64> {
    match kind.validate()? {
        MeasureKind::Cce => closed_form_cce(model),
        MeasureKind::Fcce(r) => closed_form_fcce(model, r),
        MeasureKind::Ccigf(s) => closed_form_ccigf(model, s),
        MeasureKind::BK => closed_form_ccigf(model, 1.0),
        MeasureKind::SpearmanMinus => {
            let k = model.dim();
            Ok(spearman_scale(k) * (2f64.powi(k as i32) * closed_form_ccigf(model, 1.0)? - 1.0))
        }
    }
}

fn integrate<C: CopulaCdf, F: Fn(f64) -> f64 + Sync>(c: &C, cfg: &IntegrationConfig, g: F) -> Result<MeasureEstimate> {
    integrate_unit_cube(|u| g(c.eval(u)), c.dim(), cfg).map(MeasureEstimate::from_cubature)
}

/// Cumulative copula entropy `ζ(C) = −∫ C ln C`.
pub fn cce<C: CopulaCdf>(c: &C, cfg: &IntegrationConfig) -> Result<MeasureEstimate> {
    integrate(c, cfg, xlogx)
}

#[inline]
fn fractional(c: f64, r: f64) -> f64 {
    let c = c.clamp(0.0, 1.0);
    if c == 0.0 {
        0.0
    } else if r == 0.0 {
        c
    } else if c == 1.0 {
        0.0
    } else {
        c * (-c.ln()).powf(r)
    }
}

/// Fractional cumulative copula entropy `ζ_r(C) = ∫ C (−ln C)^r`, `r ∈ [0,1]`.
pub fn fcce<C: CopulaCdf>(c: &C, r: f64, cfg: &IntegrationConfig) -> Result<MeasureEstimate> {
    MeasureKind::Fcce(r).validate()?;
    integrate(c, cfg, move |v| fractional(v, r))
}

/// Cumulative copula information generating function `𝒢_C(s) = ∫ C^s`.
pub fn ccigf<C: CopulaCdf>(c: &C, s: f64, cfg: &IntegrationConfig) -> Result<MeasureEstimate> {
    MeasureKind::Ccigf(s).validate()?;
    integrate(c, cfg, move |v| v.clamp(0.0, 1.0).powf(s))
}

/// Centered difference `(𝒢(1+h) − 𝒢(1−h)) / 2h`, integrated as a single
/// integrand.
pub fn ccigf_slope_at_one<C: CopulaCdf>(c: &C, h: f64, cfg: &IntegrationConfig) -> Result<MeasureEstimate> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::InvalidConfig("h must lie in (0, 1)".into()));
    }
    integrate(c, cfg, move |v| {
        let v = v.clamp(0.0, 1.0);
        if v == 0.0 {
            0.0
        } else {
            (v.powf(1.0 + h) - v.powf(1.0 - h)) / (2.0 * h)
        }
    })
}

/// `ℬ_k(C) = ∫ C`.
pub fn b_k<C: CopulaCdf>(c: &C, cfg: &IntegrationConfig) -> Result<MeasureEstimate> {
    integrate(c, cfg, |v| v.clamp(0.0, 1.0))
}

/// `n(k) = (k+1)/(2^k − k − 1)`.
pub fn spearman_scale(k: usize) -> f64 {
    (k as f64 + 1.0) / (2f64.powi(k as i32) - k as f64 - 1.0)
}

/// Multivariate Spearman's rho `ρ_k⁻ = n(k)(2^k ∫C − 1)`.
pub fn spearman_rho_minus<C: CopulaCdf>(c: &C, cfg: &IntegrationConfig) -> Result<MeasureEstimate> {
    let k = c.dim();
    let b = b_k(c, cfg)?;
    let scale = spearman_scale(k) * 2f64.powi(k as i32);
    Ok(MeasureEstimate {
        value: spearman_scale(k) * (2f64.powi(k as i32) * b.value - 1.0),
        error: scale * b.error,
        ..b
    })
}

/// Cumulative copula Kullback–Leibler divergence
/// `∫ C₁ ln(C₁/C₂) − C₁ + C₂`.
pub fn cckl<A: CopulaCdf, B: CopulaCdf>(c1: &A, c2: &B, cfg: &IntegrationConfig) -> Result<MeasureEstimate> {
    if c1.dim() != c2.dim() {
        return Err(Error::DimensionMismatch { expected: c1.dim(), got: c2.dim() });
    }
    let infinite = AtomicBool::new(false);
    let r = integrate_unit_cube(
        |u| {
            let v = xlog_ratio(c1.eval(u), c2.eval(u));
            if v == f64::INFINITY {
                infinite.store(true, Ordering::Relaxed);
            }
            v
        },
        c1.dim(),
        cfg,
    );
    match r {
        Ok(e) => Ok(MeasureEstimate::from_cubature(e)),
        Err(Error::NonFiniteIntegrand) if infinite.load(Ordering::Relaxed) => Err(Error::DivergenceInfinite),
        Err(e) => Err(e),
    }
}

/// `C₁(u) ≤ C₂(u) + 1e-9` at every node of the uniform grid with
/// `grid_pts` points per axis (endpoints included).
pub fn concordance_leq_on_grid<A: CopulaCdf, B: CopulaCdf>(c1: &A, c2: &B, grid_pts: usize) -> Result<bool> {
    let k = c1.dim();
    if k != c2.dim() {
        return Err(Error::DimensionMismatch { expected: k, got: c2.dim() });
    }
    if grid_pts < 2 {
        return Err(Error::InvalidConfig("grid needs at least two points per axis".into()));
    }
    let step = 1.0 / (grid_pts - 1) as f64;
    let total = grid_pts.checked_pow(k as u32).ok_or_else(|| Error::InvalidConfig("grid too large".into()))?;
    let mut u = vec![0.0; k];
    for mut idx in 0..total {
        for x in u.iter_mut() {
            *x = (idx % grid_pts) as f64 * step;
            idx /= grid_pts;
        }
        if c1.eval(&u) > c2.eval(&u) + 1e-9 {
            return Ok(false);
        }
    }
    Ok(true)
}

fn no_closed_form(what: &str, model: &CopulaModel) -> Error {
    Error::NoClosedForm(format!("{what} of {} (k = {})", model.family(), model.dim()))
}

/// Index-based quantities of the Cuadras–Augé family: `p(i)` and `I_j`.
struct CuadrasAuge<'a> {
    theta: &'a [f64],
    p: Vec<f64>,
    p_prod: f64,
}

impl<'a> CuadrasAuge<'a> {
    fn new(theta: &'a [f64]) -> Self {
        let mut p = Vec::with_capacity(theta.len());
        p.push(2.0);
        for i in 1..theta.len() {
            p.push(p[i - 1] + theta[i] + 1.0);
        }
        let p_prod = p.iter().product();
        CuadrasAuge { theta, p, p_prod }
    }

    /// `I_j = (Π p(i))⁻¹ Σ_{i≥j} 1/p(i)` (0-based `j`).
    fn i(&self, j: usize) -> f64 {
        self.p[j..].iter().map(|p| 1.0 / p).sum::<f64>() / self.p_prod
    }

    fn factorial(&self) -> f64 {
        (1..=self.theta.len()).map(|i| i as f64).product()
    }

    fn cce(&self) -> f64 {
        self.factorial() * (0..self.theta.len()).map(|j| self.theta[j] * self.i(j)).sum::<f64>()
    }
}

/// `kΣ_{x=0}^{k−1} C(k−1,x)(−1)^x g(x+2)` for the min copula.
fn min_series(k: usize, g: impl Fn(f64) -> f64) -> f64 {
    let k1 = (k - 1) as u64;
    k as f64
        * (0..=k1)
            .map(|x| {
                let sign = if x % 2 == 0 { 1.0 } else { -1.0 };
                sign * ln_choose(k1, x).exp() * g(x as f64 + 2.0)
            })
            .sum::<f64>()
}

/// Closed-form `ζ(C)` for product, min, W and Cuadras–Augé.
pub fn closed_form_cce(model: &CopulaModel) -> Result<f64> {
    let k = model.dim();
    match model.kind() {
        Kind::Product => Ok(k as f64 / 2f64.powi(k as i32 + 1)),
        Kind::Min => Ok(min_series(k, |y| 1.0 / (y * y))),
        Kind::W => Ok(0.25 - 1.0 / 9.0),
        Kind::CuadrasAuge(theta) => Ok(CuadrasAuge::new(theta).cce()),
        _ => Err(no_closed_form("cce", model)),
    }
}

/// Closed-form `ζ_r(C)` for product, min, W and bivariate Cuadras–Augé.
pub fn closed_form_fcce(model: &CopulaModel, r: f64) -> Result<f64> {
    MeasureKind::Fcce(r).validate()?;
    let k = model.dim();
    let kf = k as f64;
    match model.kind() {
        Kind::Product => Ok(gamma(r + kf) / (gamma(kf) * 2f64.powf(r + kf))),
        Kind::Min => Ok(min_series(k, |y| gamma(r + 1.0) / y.powf(r + 1.0))),
        Kind::W => Ok(gamma(r + 1.0) * (2f64.powf(-r - 1.0) - 3f64.powf(-r - 1.0))),
        Kind::CuadrasAuge(theta) if k == 2 => {
            // C = u_(1) u_(2)^a
            let a = theta[1];
            if a == 1.0 {
                return closed_form_fcce(&CopulaModel::product(2), r);
            }
            Ok(2.0 * gamma(r + 1.0) / (1.0 - a) * (2f64.powf(-r - 1.0) - ((a + 1.0) / (a + 3.0)).powf(r + 1.0)))
        }
        _ => Err(no_closed_form("fcce", model)),
    }
}

/// Closed-form `𝒢_C(s)` for product, min, W, FGM, Marshall–Olkin and
/// Cuadras–Augé.
pub fn closed_form_ccigf(model: &CopulaModel, s: f64) -> Result<f64> {
    MeasureKind::Ccigf(s).validate()?;
    let k = model.dim();
    let kf = k as f64;
    match *model.kind() {
        Kind::Product => Ok((s + 1.0).powf(-kf)),
        Kind::Min => Ok(kf * beta(s + 1.0, kf)),
        Kind::W => Ok(1.0 / ((s + 1.0) * (s + 2.0))),
        Kind::CuadrasAuge(ref theta) => {
            let mut q = s + 1.0;
            let mut prod = q;
            for t in &theta[1..] {
                q += t * s + 1.0;
                prod *= q;
            }
            Ok(CuadrasAuge::new(theta).factorial() / prod)
        }
        Kind::Fgm(theta) => Ok(fgm_ccigf(theta, s)),
        Kind::MarshallOlkin(a1, a2) => {
            if a1 == 0.0 || a2 == 0.0 {
                return Ok((s + 1.0).powi(-2));
            }
            let t1 = a1 / (a2 * (s + 1.0) + a1 * s * (1.0 - a2) + a1);
            let t2 = a2 / (a1 * (s + 1.0) + a2 * s * (1.0 - a1) + a2);
            Ok((t1 + t2) / (s + 1.0))
        }
        _ => Err(no_closed_form("ccigf", model)),
    }
}

/// `Σ_x binom(s,x) θ^x β(s+1, x+1)²`, truncated once the tail is below 1e-14.
fn fgm_ccigf(theta: f64, s: f64) -> f64 {
    let mut sum = 0.0;
    for x in 0u32..1_000_000 {
        let coef = gen_binom(s, x);
        if coef == 0.0 && x as f64 > s {
            break;
        }
        let b = beta(s + 1.0, x as f64 + 1.0);
        let term = coef * theta.powi(x as i32) * b * b;
        sum += term;
        // terms decay at least like x^{-2}, so |term|·(x+1) bounds the tail
        if x > 0 && term.abs() * (x as f64 + 1.0) < 1e-14 {
            break;
        }
    }
    sum
}

/// Closed-form CCKL for the pairs with known expressions: `(W, Π)`,
/// `(Π, M)`, `(Cuadras–Augé, M)`, `(Π, Gumbel–Barnett)` and identical models.
pub fn closed_form_cckl(m1: &CopulaModel, m2: &CopulaModel) -> Result<f64> {
    if m1.dim() != m2.dim() {
        return Err(Error::DimensionMismatch { expected: m1.dim(), got: m2.dim() });
    }
    if m1 == m2 {
        return Ok(0.0);
    }
    let k = m1.dim();
    let kf = k as f64;
    let two_k = 2f64.powi(k as i32);
    match (m1.kind(), m2.kind()) {
        (Kind::W, Kind::Product) => Ok(1.0 / 12.0 - 1.0 / 36.0),
        (Kind::Product, Kind::Min) => {
            let j: f64 = (2..=k).map(|n| (n as f64 - 1.0) / n as f64).sum::<f64>() / (2.0 * two_k);
            Ok(-j + kf * beta(2.0, kf) - 1.0 / two_k)
        }
        (Kind::CuadrasAuge(theta), Kind::Min) => {
            let ca = CuadrasAuge::new(theta);
            let kfact = ca.factorial();
            let tail: f64 = (1..k).map(|j| theta[j] * ca.i(j)).sum();
            Ok(-kfact * tail - kfact / ca.p_prod + kf * beta(2.0, kf))
        }
        (Kind::Product, Kind::GumbelBarnett(theta)) => {
            let z = 4.0 / theta;
            Ok(theta / 16.0 - 0.25 + (z.exp() * exp_integral_e1(z)) / theta)
        }
        _ => Err(Error::NoClosedForm(format!("cckl({}, {})", m1.family(), m2.family()))),
    }
}

/// Families with at least one closed-form measure.
pub fn has_closed_forms(family: Family) -> bool {
    matches!(
        family,
        Family::Product | Family::Min | Family::LowerBoundW | Family::CuadrasAuge | Family::Fgm | Family::MarshallOlkin
    )
}
