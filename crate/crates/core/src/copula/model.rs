use std::sync::Arc;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::archimedean::Generator;
use super::family::Family;
use super::mvn::{bvn_cdf, mvn_cdf_with_budget, CorrelationMatrix};
use crate::error::{Error, Result};
use crate::special::norm_quantile;

/// Per-point scratch storage; copula dimensions stay small.
pub(crate) type Point = SmallVec<[f64; 8]>;

/// Anything that evaluates a copula CDF on `[0,1]^k`.
///
/// `eval` performs no dimension check; the slice must have length `dim()`.
pub trait CopulaCdf: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, u: &[f64]) -> f64;
}

/// A point of the closed unit hypercube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitPoint(Vec<f64>);

impl UnitPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::InvalidConfig("unit point coordinates must lie in [0, 1]".into()));
        }
        Ok(UnitPoint(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl AsRef<[f64]> for UnitPoint {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Kind {
    Product,
    Min,
    W,
    Clayton(f64),
    Archimedean(Generator),
    Gaussian(Arc<CorrelationMatrix>),
    Fgm(f64),
    MarshallOlkin(f64, f64),
    CuadrasAuge(Vec<f64>),
    GumbelBarnett(f64),
}

/// A validated `(family, dimension, parameters)` triple. Immutable.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "ModelSpec", try_from = "ModelSpec")]
pub struct CopulaModel {
    family: Family,
    dim: usize,
    params: Vec<f64>,
    kind: Kind,
}

#[derive(Serialize, Deserialize)]
struct ModelSpec {
    family: Family,
    dim: usize,
    params: Vec<f64>,
}

impl From<CopulaModel> for ModelSpec {
    fn from(m: CopulaModel) -> Self {
        ModelSpec { family: m.family, dim: m.dim, params: m.params }
    }
}

impl TryFrom<ModelSpec> for CopulaModel {
    type Error = Error;
    fn try_from(s: ModelSpec) -> Result<Self> {
        CopulaModel::new(s.family, s.dim, &s.params)
    }
}

impl PartialEq for CopulaModel {
    fn eq(&self, other: &Self) -> bool {
        self.family == other.family && self.dim == other.dim && self.params == other.params
    }
}

fn out_of_range(family: Family, reason: impl Into<String>) -> Error {
    Error::ParamOutOfRange { family: family.name(), reason: reason.into() }
}

impl CopulaModel {
    /// Validates parameters against the family's admissible range.
    pub fn new(family: Family, dim: usize, params: &[f64]) -> Result<Self> {
        if dim < 2 || (family.bivariate_only() && dim != 2) {
            return Err(Error::DimensionUnsupported { family: family.name(), dim });
        }
        let expected = family.param_count(dim);
        if params.len() != expected {
            return Err(out_of_range(family, format!("expected {expected} parameter(s), got {}", params.len())));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(out_of_range(family, "parameters must be finite"));
        }
        let p = |i: usize| params[i];
        let kind = match family {
            Family::Product => Kind::Product,
            Family::Min => Kind::Min,
            Family::LowerBoundW => Kind::W,
            Family::Clayton => {
                let a = p(0);
                if a == 0.0 {
                    return Err(out_of_range(family, "alpha must be nonzero"));
                }
                if dim >= 3 && a < 0.0 {
                    return Err(out_of_range(family, "alpha must be positive for k >= 3"));
                }
                if a < -1.0 {
                    return Err(out_of_range(family, "alpha must be >= -1"));
                }
                Kind::Clayton(a)
            }
            Family::Frank => {
                let t = p(0);
                if t == 0.0 {
                    return Err(out_of_range(family, "theta must be nonzero"));
                }
                if dim >= 3 && t < 0.0 {
                    return Err(out_of_range(family, "theta must be positive for k >= 3"));
                }
                if t.abs() > 700.0 {
                    return Err(out_of_range(family, "|theta| must not exceed 700"));
                }
                Kind::Archimedean(Generator::Frank(t))
            }
            Family::GumbelHougaard => {
                if p(0) < 1.0 {
                    return Err(out_of_range(family, "phi must be >= 1"));
                }
                Kind::Archimedean(Generator::GumbelHougaard(p(0)))
            }
            Family::Joe => {
                if p(0) < 1.0 {
                    return Err(out_of_range(family, "theta must be >= 1"));
                }
                Kind::Archimedean(Generator::Joe(p(0)))
            }
            Family::Nelsen4212 => {
                if p(0) < 1.0 {
                    return Err(out_of_range(family, "theta must be >= 1"));
                }
                Kind::Archimedean(Generator::Nelsen4212(p(0)))
            }
            Family::Gaussian => Kind::Gaussian(Arc::new(CorrelationMatrix::from_upper(dim, params)?)),
            Family::Fgm => {
                if p(0).abs() > 1.0 {
                    return Err(out_of_range(family, "|theta| must be <= 1"));
                }
                Kind::Fgm(p(0))
            }
            Family::MarshallOlkin => {
                if !(0.0..=1.0).contains(&p(0)) || !(0.0..=1.0).contains(&p(1)) {
                    return Err(out_of_range(family, "alpha_1, alpha_2 must lie in [0, 1]"));
                }
                Kind::MarshallOlkin(p(0), p(1))
            }
            Family::CuadrasAuge => {
                if params.iter().any(|a| !(0.0..=1.0).contains(a)) {
                    return Err(out_of_range(family, "every alpha_ij must lie in [0, 1]"));
                }
                Kind::CuadrasAuge(cuadras_auge_exponents(dim, params))
            }
            Family::GumbelBarnett => {
                if !(p(0) > 0.0 && p(0) <= 1.0) {
                    return Err(out_of_range(family, "theta must lie in (0, 1]"));
                }
                Kind::GumbelBarnett(p(0))
            }
        };
        Ok(CopulaModel { family, dim, params: params.to_vec(), kind })
    }

    pub fn product(dim: usize) -> Self {
        Self::new(Family::Product, dim, &[]).expect("product is valid for every k >= 2")
    }

    pub fn min(dim: usize) -> Self {
        Self::new(Family::Min, dim, &[]).expect("min is valid for every k >= 2")
    }

    pub fn lower_bound_w() -> Self {
        Self::new(Family::LowerBoundW, 2, &[]).expect("W is valid at k = 2")
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub(crate) fn kind(&self) -> &Kind {
        &self.kind
    }

    /// The Archimedean generator of the model.
    pub fn generator(&self) -> Result<Generator> {
        match self.kind {
            Kind::Clayton(a) => Ok(Generator::Clayton(a)),
            Kind::Archimedean(g) => Ok(g),
            _ => Err(Error::NotArchimedean(self.family.name())),
        }
    }

    pub fn correlation(&self) -> Option<&CorrelationMatrix> {
        match &self.kind {
            Kind::Gaussian(c) => Some(c),
            _ => None,
        }
    }

    /// Cuadras–Augé exponents `θ_1 = 1, θ_i = Π_{j<i}(1 − α_ij)`.
    pub fn cuadras_auge_exponents(&self) -> Option<&[f64]> {
        match &self.kind {
            Kind::CuadrasAuge(t) => Some(t),
            _ => None,
        }
    }

    /// `C(u)` with dimension and range checks.
    pub fn cdf(&self, u: impl AsRef<[f64]>) -> Result<f64> {
        let u = u.as_ref();
        if u.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: u.len() });
        }
        if u.iter().any(|x| x.is_nan()) {
            return Err(Error::NonFiniteData);
        }
        Ok(self.eval(u))
    }
}

pub(crate) fn cuadras_auge_exponents(dim: usize, alphas: &[f64]) -> Vec<f64> {
    let mut theta = vec![1.0; dim];
    let mut it = alphas.iter();
    for (i, t) in theta.iter_mut().enumerate().skip(1) {
        *t = (0..i).map(|_| 1.0 - it.next().expect("k(k-1)/2 parameters")).product();
    }
    theta
}

impl CopulaCdf for CopulaModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, u: &[f64]) -> f64 {
        debug_assert_eq!(u.len(), self.dim);
        let mut lo = 1.0f64;
        let mut all_one = true;
        for &x in u {
            lo = lo.min(x);
            all_one &= x >= 1.0;
        }
        if lo <= 0.0 {
            return 0.0;
        }
        if all_one {
            return 1.0;
        }
        let c = |i: usize| u[i].min(1.0);
        let v = match &self.kind {
            Kind::Product => u.iter().map(|x| x.min(1.0)).product(),
            Kind::Min => lo,
            Kind::W => (c(0) + c(1) - 1.0).max(0.0),
            Kind::Clayton(a) => {
                let s: f64 = u.iter().map(|&x| x.min(1.0).powf(-a)).sum::<f64>() - (self.dim as f64 - 1.0);
                if s <= 0.0 {
                    0.0
                } else {
                    s.powf(-1.0 / a)
                }
            }
            Kind::Archimedean(g) => {
                let clamped: Point = u.iter().map(|x| x.min(1.0)).collect();
                g.copula(&clamped)
            }
            Kind::Gaussian(corr) => gaussian_cdf(corr, u),
            Kind::Fgm(t) => {
                let (a, b) = (c(0), c(1));
                a * b * (1.0 + t * (1.0 - a) * (1.0 - b))
            }
            Kind::MarshallOlkin(a1, a2) => {
                let (a, b) = (c(0), c(1));
                a.powf(1.0 - a1) * b.powf(1.0 - a2) * a.powf(*a1).min(b.powf(*a2))
            }
            Kind::CuadrasAuge(theta) => {
                let mut s: Point = u.iter().map(|x| x.min(1.0)).collect();
                s.sort_by(|a, b| a.total_cmp(b));
                s[0] * s.iter().zip(theta).skip(1).map(|(x, t)| x.powf(*t)).product::<f64>()
            }
            Kind::GumbelBarnett(t) => {
                let (a, b) = (c(0), c(1));
                a * b * (-t * a.ln() * b.ln()).exp()
            }
        };
        v.clamp(0.0, 1.0)
    }
}

/// Absolute error target for Gaussian CDF evaluations inside integrands.
const GAUSSIAN_CDF_TOL: f64 = 1e-9;
/// For k ≥ 4 the randomized rule runs under a reduced budget and its best
/// estimate is used.
const GAUSSIAN_QMC_TOL: f64 = 1e-5;
const GAUSSIAN_QMC_BUDGET: u64 = 1 << 18;

fn gaussian_cdf(corr: &CorrelationMatrix, u: &[f64]) -> f64 {
    let x: Point = u.iter().map(|&v| norm_quantile(v)).collect();
    if u.len() == 2 {
        return bvn_cdf(x[0], x[1], corr.get(0, 1));
    }
    let (tol, budget) = if u.len() == 3 { (GAUSSIAN_CDF_TOL, 0) } else { (GAUSSIAN_QMC_TOL, GAUSSIAN_QMC_BUDGET) };
    match mvn_cdf_with_budget(corr, &x, tol, budget) {
        Ok(e) | Err(Error::ToleranceNotReached(e)) => e.value,
        Err(_) => f64::NAN,
    }
}

/// Convex combination `Σ w_i C_i` of copulas of equal dimension.
#[derive(Debug, Clone)]
pub struct Mixture {
    dim: usize,
    parts: Vec<(f64, CopulaModel)>,
}

impl Mixture {
    pub fn new(parts: Vec<(f64, CopulaModel)>) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::InvalidConfig("mixture needs a component".into()))?;
        let dim = first.1.dim();
        if let Some(bad) = parts.iter().find(|(_, m)| m.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: bad.1.dim() });
        }
        let total: f64 = parts.iter().map(|p| p.0).sum();
        if parts.iter().any(|p| !(p.0 >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig("mixture weights must be nonnegative and sum to 1".into()));
        }
        Ok(Mixture { dim, parts })
    }

    pub fn parts(&self) -> &[(f64, CopulaModel)] {
        &self.parts
    }
}

impl CopulaCdf for Mixture {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, u: &[f64]) -> f64 {
        self.parts.iter().map(|(w, m)| w * m.eval(u)).sum::<f64>().clamp(0.0, 1.0)
    }
}

impl<T: CopulaCdf + ?Sized> CopulaCdf for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval(&self, u: &[f64]) -> f64 {
        (**self).eval(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn m(f: Family, k: usize, p: &[f64]) -> CopulaModel {
        CopulaModel::new(f, k, p).unwrap()
    }

    #[test]
    fn validation() {
        assert!(CopulaModel::new(Family::Clayton, 2, &[0.5]).is_ok());
        assert!(CopulaModel::new(Family::Clayton, 2, &[-1.0]).is_ok());
        assert!(matches!(CopulaModel::new(Family::LowerBoundW, 3, &[]), Err(Error::DimensionUnsupported { .. })));
        assert!(matches!(CopulaModel::new(Family::Gaussian, 3, &[0.99, 0.99, -0.99]), Err(Error::CorrelationNotPD)));
        for (f, k, p) in [
            (Family::Clayton, 3, vec![-0.2]),
            (Family::Clayton, 2, vec![0.0]),
            (Family::Clayton, 2, vec![-1.5]),
            (Family::Frank, 2, vec![0.0]),
            (Family::Frank, 3, vec![-1.0]),
            (Family::GumbelHougaard, 2, vec![0.9]),
            (Family::Joe, 2, vec![0.5]),
            (Family::Fgm, 2, vec![1.1]),
            (Family::MarshallOlkin, 2, vec![0.5, 1.2]),
            (Family::CuadrasAuge, 3, vec![0.2, -0.1, 0.3]),
            (Family::GumbelBarnett, 2, vec![0.0]),
            (Family::Nelsen4212, 2, vec![0.5]),
            (Family::Clayton, 2, vec![f64::NAN]),
            (Family::Product, 2, vec![1.0]),
        ] {
            assert!(matches!(CopulaModel::new(f, k, &p), Err(Error::ParamOutOfRange { .. })), "{f} {p:?}");
        }
        for f in [Family::Fgm, Family::MarshallOlkin, Family::GumbelBarnett, Family::Nelsen4212] {
            let p = vec![0.5; f.param_count(2)];
            assert!(matches!(CopulaModel::new(f, 3, &p), Err(Error::DimensionUnsupported { .. })));
        }
    }

    #[test]
    fn reference_values() {
        assert_abs_diff_eq!(CopulaModel::product(2).cdf([0.5, 0.5]).unwrap(), 0.25);
        assert_abs_diff_eq!(CopulaModel::min(2).cdf([0.3, 0.7]).unwrap(), 0.3);
        assert_abs_diff_eq!(m(Family::Clayton, 2, &[1.0]).cdf([0.5, 0.5]).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m(Family::Gaussian, 2, &[0.0]).cdf([0.4, 0.6]).unwrap(), 0.24, epsilon = 1e-15);
        assert_abs_diff_eq!(CopulaModel::lower_bound_w().cdf([0.3, 0.8]).unwrap(), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(m(Family::Fgm, 2, &[1.0]).cdf([0.5, 0.5]).unwrap(), 0.25 * 1.25, epsilon = 1e-15);
        let gb = m(Family::GumbelBarnett, 2, &[1.0]).cdf([0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(gb, 0.25 * (-(0.5f64.ln().powi(2))).exp(), epsilon = 1e-15);
        let frank = m(Family::Frank, 2, &[2.0]).cdf([0.3, 0.6]).unwrap();
        let direct = -(1.0 + (-0.6f64).exp_m1() * (-1.2f64).exp_m1() / (-2.0f64).exp_m1()).ln() / 2.0;
        assert_abs_diff_eq!(frank, direct, epsilon = 1e-15);
        let frank3 = m(Family::Frank, 3, &[2.0]).cdf([0.3, 0.6, 0.8]).unwrap();
        let d = (-2.0f64).exp_m1();
        let direct3 = -(1.0 + (-0.6f64).exp_m1() * (-1.2f64).exp_m1() * (-1.6f64).exp_m1() / (d * d)).ln() / 2.0;
        assert_abs_diff_eq!(frank3, direct3, epsilon = 1e-15);
    }

    #[test]
    fn special_parameter_values_reduce_to_bounds() {
        let pts = [[0.2, 0.7], [0.9, 0.4], [0.5, 0.5], [0.05, 0.99]];
        let min = CopulaModel::min(2);
        let prod = CopulaModel::product(2);
        for u in pts {
            let ca_min = m(Family::CuadrasAuge, 2, &[1.0]).eval(&u);
            let ca_prod = m(Family::CuadrasAuge, 2, &[0.0]).eval(&u);
            let mo_min = m(Family::MarshallOlkin, 2, &[1.0, 1.0]).eval(&u);
            let mo_prod = m(Family::MarshallOlkin, 2, &[0.0, 0.0]).eval(&u);
            let clayton_w = m(Family::Clayton, 2, &[-1.0]).eval(&u);
            assert_abs_diff_eq!(ca_min, min.eval(&u), epsilon = 1e-15);
            assert_abs_diff_eq!(ca_prod, prod.eval(&u), epsilon = 1e-15);
            assert_abs_diff_eq!(mo_min, min.eval(&u), epsilon = 1e-15);
            assert_abs_diff_eq!(mo_prod, prod.eval(&u), epsilon = 1e-15);
            assert_abs_diff_eq!(clayton_w, CopulaModel::lower_bound_w().eval(&u), epsilon = 1e-15);
            for f in [Family::GumbelHougaard, Family::Joe] {
                assert_abs_diff_eq!(m(f, 2, &[1.0]).eval(&u), prod.eval(&u), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn cuadras_auge_exponent_layout() {
        let t = cuadras_auge_exponents(4, &[0.5, 0.1, 0.2, 0.3, 0.4, 0.5]);
        assert_abs_diff_eq!(t[0], 1.0);
        assert_abs_diff_eq!(t[1], 0.5);
        assert_abs_diff_eq!(t[2], 0.9 * 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(t[3], 0.7 * 0.6 * 0.5, epsilon = 1e-15);
    }

    #[test]
    fn dimension_mismatch_and_serde() {
        let c = m(Family::Gaussian, 3, &[0.1, 0.2, 0.3]);
        assert!(matches!(c.cdf([0.5, 0.5]), Err(Error::DimensionMismatch { expected: 3, got: 2 })));
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, r#"{"family":"gaussian","dim":3,"params":[0.1,0.2,0.3]}"#);
        let back: CopulaModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<CopulaModel>(r#"{"family":"joe","dim":2,"params":[0.2]}"#).is_err());
    }

    #[test]
    fn mixture_is_convex_combination() {
        let mix = Mixture::new(vec![(0.25, CopulaModel::product(2)), (0.75, CopulaModel::min(2))]).unwrap();
        assert_abs_diff_eq!(mix.eval(&[0.5, 0.4]), 0.25 * 0.2 + 0.75 * 0.4, epsilon = 1e-15);
        assert!(Mixture::new(vec![(0.5, CopulaModel::product(2))]).is_err());
        assert!(Mixture::new(vec![(0.5, CopulaModel::product(2)), (0.5, CopulaModel::min(3))]).is_err());
    }
}
