//! Multivariate normal orthant probabilities `P(Z ≤ x)`, `Z ~ N(0, R)`.
//!
//! k = 2 uses Genz's Drezner–Wesolowsky refinement (double precision). k = 3
//! conditions on one coordinate and integrates the bivariate CDF with
//! adaptive Gauss–Kronrod quadrature. k ≥ 4 uses Genz's separation-of-
//! variables transform with randomized QMC.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cubature::sobol::ScrambledSobol;
use crate::cubature::Estimate;
use crate::error::{Error, Result};
use crate::quad;
use crate::rng::{rng_from_seed, substream};
use crate::special::{norm_cdf, norm_pdf, norm_quantile};

const QMC_SEED: u64 = 0x6E7A_CDF0_0000_0001;
const QMC_BUDGET: u64 = 1_000_000;
const QMC_RANDOMIZATIONS: usize = 16;

/// A validated, strictly positive definite correlation matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    dim: usize,
    /// Row-major `k × k` entries.
    entries: Vec<f64>,
    /// Row-major lower Cholesky factor.
    chol: Vec<f64>,
}

impl CorrelationMatrix {
    /// Builds the matrix from the strict upper triangle in row-major order
    /// (`ρ12, ρ13, …, ρ1k, ρ23, …`).
    pub fn from_upper(dim: usize, upper: &[f64]) -> Result<Self> {
        let need = dim * (dim - 1) / 2;
        if upper.len() != need {
            return Err(Error::DimensionMismatch { expected: need, got: upper.len() });
        }
        let mut entries = vec![0.0; dim * dim];
        let mut it = upper.iter();
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
            for j in (i + 1)..dim {
                let r = *it.next().expect("length checked");
                if !r.is_finite() || r.abs() > 1.0 {
                    return Err(Error::ParamOutOfRange {
                        family: "gaussian",
                        reason: format!("correlation {r} outside [-1, 1]"),
                    });
                }
                entries[i * dim + j] = r;
                entries[j * dim + i] = r;
            }
        }
        Self::from_entries(dim, entries)
    }

    /// Builds the matrix from full row-major entries; symmetry and the unit
    /// diagonal are checked.
    pub fn from_entries(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: entries.len() });
        }
        for i in 0..dim {
            if (entries[i * dim + i] - 1.0).abs() > 1e-12 {
                return Err(Error::ParamOutOfRange { family: "gaussian", reason: "diagonal must be 1".into() });
            }
            for j in 0..i {
                if (entries[i * dim + j] - entries[j * dim + i]).abs() > 1e-12 {
                    return Err(Error::ParamOutOfRange {
                        family: "gaussian",
                        reason: "matrix is not symmetric".into(),
                    });
                }
            }
        }
        let m = DMatrix::from_row_slice(dim, dim, &entries);
        let chol = m.cholesky().ok_or(Error::CorrelationNotPD)?;
        let l = chol.l();
        // A factor with a vanishing pivot is numerically singular.
        if (0..dim).any(|i| l[(i, i)] < 1e-7) {
            return Err(Error::CorrelationNotPD);
        }
        let chol = (0..dim).flat_map(|i| (0..dim).map(move |j| (i, j))).map(|(i, j)| l[(i, j)]).collect();
        Ok(CorrelationMatrix { dim, entries, chol })
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_upper(dim, &vec![0.0; dim * (dim - 1) / 2]).expect("identity is PD")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    /// Strict upper triangle, row-major.
    pub fn upper(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim * (self.dim - 1) / 2);
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                out.push(self.get(i, j));
            }
        }
        out
    }

    pub(crate) fn chol(&self, i: usize, j: usize) -> f64 {
        self.chol[i * self.dim + j]
    }

    fn submatrix(&self, idx: &[usize]) -> Result<Self> {
        let d = idx.len();
        let entries = idx.iter().flat_map(|&i| idx.iter().map(move |&j| (i, j))).map(|(i, j)| self.get(i, j)).collect();
        Self::from_entries(d, entries)
    }
}

/// `P(Z ≤ x)` for `Z ~ N(0, corr)`, with estimated absolute error.
///
/// Coordinates equal to `+∞` are marginalized out; any `−∞` gives 0.
pub fn mvn_cdf(corr: &CorrelationMatrix, x: &[f64], abs_tol: f64) -> Result<Estimate> {
    mvn_cdf_with_budget(corr, x, abs_tol, QMC_BUDGET)
}

pub(crate) fn mvn_cdf_with_budget(corr: &CorrelationMatrix, x: &[f64], abs_tol: f64, budget: u64) -> Result<Estimate> {
    if x.len() != corr.dim {
        return Err(Error::DimensionMismatch { expected: corr.dim, got: x.len() });
    }
    if !(abs_tol > 0.0) {
        return Err(Error::InvalidConfig("abs_tol must be positive".into()));
    }
    if x.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFiniteData);
    }
    let exact = |value: f64| Estimate { value, error: 0.0, evals: 0 };
    if x.contains(&f64::NEG_INFINITY) {
        return Ok(exact(0.0));
    }
    let idx: Vec<usize> = (0..x.len()).filter(|&i| x[i] < f64::INFINITY).collect();
    match idx.len() {
        0 => return Ok(exact(1.0)),
        1 => return Ok(Estimate { value: norm_cdf(x[idx[0]]), error: 1e-16, evals: 0 }),
        _ => {}
    }
    let (corr, x) = if idx.len() == x.len() {
        (std::borrow::Cow::Borrowed(corr), x.to_vec())
    } else {
        (std::borrow::Cow::Owned(corr.submatrix(&idx)?), idx.iter().map(|&i| x[i]).collect())
    };
    match corr.dim {
        2 => Ok(Estimate { value: bvn_cdf(x[0], x[1], corr.get(0, 1)), error: 1e-15, evals: 0 }),
        3 => tvn_cdf(&corr, &x, abs_tol),
        _ => genz_qmc(&corr, &x, abs_tol, budget),
    }
}

const GL6: ([f64; 3], [f64; 3]) = (
    [0.171_324_492_379_170_5, 0.360_761_573_048_138_4, 0.467_913_934_572_690_4],
    [0.932_469_514_203_152_2, 0.661_209_386_466_264_7, 0.238_619_186_083_197_0],
);
const GL12: ([f64; 6], [f64; 6]) = (
    [
        0.047_175_336_386_511_77,
        0.106_939_325_995_318_3,
        0.160_078_328_543_346_4,
        0.203_167_426_723_065_9,
        0.233_492_536_538_354_7,
        0.249_147_045_813_402_9,
    ],
    [
        0.981_560_634_246_719_1,
        0.904_117_256_370_475_0,
        0.769_902_674_194_305_0,
        0.587_317_954_286_617_1,
        0.367_831_498_998_180_2,
        0.125_233_408_511_469_2,
    ],
);
const GL20: ([f64; 10], [f64; 10]) = (
    [
        0.017_614_007_139_152_12,
        0.040_601_429_800_386_94,
        0.062_672_048_334_109_06,
        0.083_276_741_576_704_75,
        0.101_930_119_817_240_4,
        0.118_194_531_961_518_4,
        0.131_688_638_449_176_6,
        0.142_096_109_318_382_1,
        0.149_172_986_472_603_7,
        0.152_753_387_130_725_9,
    ],
    [
        0.993_128_599_185_094_9,
        0.963_971_927_277_913_8,
        0.912_234_428_251_325_9,
        0.839_116_971_822_218_8,
        0.746_331_906_460_150_8,
        0.636_053_680_726_515_0,
        0.510_867_001_950_827_1,
        0.373_706_088_715_419_6,
        0.227_785_851_141_645_1,
        0.076_526_521_133_497_33,
    ],
);

/// Bivariate standard normal CDF `Φ₂(x, y; r)`.
pub fn bvn_cdf(x: f64, y: f64, r: f64) -> f64 {
    bvn_upper(-x, -y, r)
}

/// Upper orthant `P(X > h, Y > k)`.
fn bvn_upper(h: f64, k: f64, r: f64) -> f64 {
    if h == f64::INFINITY || k == f64::INFINITY {
        return 0.0;
    }
    if h == f64::NEG_INFINITY {
        return if k == f64::NEG_INFINITY { 1.0 } else { norm_cdf(-k) };
    }
    if k == f64::NEG_INFINITY {
        return norm_cdf(-h);
    }
    if r == 0.0 {
        return norm_cdf(-h) * norm_cdf(-k);
    }
    let (w, xg): (&[f64], &[f64]) = if r.abs() < 0.3 {
        (&GL6.0, &GL6.1)
    } else if r.abs() < 0.75 {
        (&GL12.0, &GL12.1)
    } else {
        (&GL20.0, &GL20.1)
    };
    let tp = 2.0 * PI;
    let mut k = k;
    let mut hk = h * k;
    let mut bvn = 0.0;
    if r.abs() < 0.925 {
        let hs = (h * h + k * k) / 2.0;
        let asr = r.asin() / 2.0;
        for (wi, xi) in w.iter().zip(xg) {
            for z in [1.0 - xi, 1.0 + xi] {
                let sn = (asr * z).sin();
                bvn += wi * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        bvn = bvn * asr / tp + norm_cdf(-h) * norm_cdf(-k);
    } else {
        if r < 0.0 {
            k = -k;
            hk = -hk;
        }
        if r.abs() < 1.0 {
            let as_ = 1.0 - r * r;
            let mut a = as_.sqrt();
            let bs = (h - k) * (h - k);
            let c = (4.0 - hk) / 8.0;
            let d = (12.0 - hk) / 80.0;
            let asr = -(bs / as_ + hk) / 2.0;
            if asr > -100.0 {
                bvn = a * asr.exp() * (1.0 - c * (bs - as_) * (1.0 - d * bs) / 3.0 + c * d * as_ * as_);
            }
            if hk > -100.0 {
                let b = bs.sqrt();
                let sp = tp.sqrt() * norm_cdf(-b / a);
                bvn -= (-hk / 2.0).exp() * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
            }
            a /= 2.0;
            let mut sum = 0.0;
            for (wi, xi) in w.iter().zip(xg) {
                for z in [1.0 - xi, 1.0 + xi] {
                    let xs = (a * z) * (a * z);
                    let asr = -(bs / xs + hk) / 2.0;
                    if asr > -100.0 {
                        let sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
                        let rs = (1.0 - xs).sqrt();
                        let ep = (-(hk / 2.0) * xs / ((1.0 + rs) * (1.0 + rs))).exp() / rs;
                        sum += wi * asr.exp() * (ep - sp);
                    }
                }
            }
            bvn = -(a * sum + bvn) / tp;
        }
        if r > 0.0 {
            bvn += norm_cdf(-h.max(k));
        } else if h >= k {
            bvn = -bvn;
        } else {
            let l = if h < 0.0 { norm_cdf(k) - norm_cdf(h) } else { norm_cdf(-h) - norm_cdf(-k) };
            bvn = l - bvn;
        }
    }
    bvn.clamp(0.0, 1.0)
}

/// Trivariate CDF by conditioning on the coordinate with the smallest limit.
fn tvn_cdf(corr: &CorrelationMatrix, x: &[f64], abs_tol: f64) -> Result<Estimate> {
    let c = (0..3).min_by(|&a, &b| x[a].total_cmp(&x[b])).expect("three coordinates");
    let (i, j) = match c {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let (rci, rcj, rij) = (corr.get(c, i), corr.get(c, j), corr.get(i, j));
    let si = (1.0 - rci * rci).sqrt();
    let sj = (1.0 - rcj * rcj).sqrt();
    let r = ((rij - rci * rcj) / (si * sj)).clamp(-1.0, 1.0);
    const LOWER: f64 = -10.0;
    let upper = x[c];
    if upper <= LOWER {
        return Ok(Estimate { value: 0.0, error: norm_cdf(upper), evals: 0 });
    }
    let f = |t: f64| norm_pdf(t) * bvn_cdf((x[i] - rci * t) / si, (x[j] - rcj * t) / sj, r);
    let tol = abs_tol.min(1e-10);
    let mut est = quad::integrate(f, LOWER, upper, tol, 1e-12).or_else(|e| match e {
        Error::ToleranceNotReached(est) => Ok(est),
        other => Err(other),
    })?;
    est.error += norm_cdf(LOWER);
    est.value = est.value.clamp(0.0, 1.0);
    if est.error > abs_tol {
        return Err(Error::ToleranceNotReached(est));
    }
    Ok(est)
}

/// Genz's separation-of-variables algorithm with scrambled Sobol points.
fn genz_qmc(corr: &CorrelationMatrix, x: &[f64], abs_tol: f64, budget: u64) -> Result<Estimate> {
    let k = corr.dim;
    let integrand = |w: &[f64], y: &mut [f64]| -> f64 {
        let mut e = norm_cdf(x[0] / corr.chol(0, 0));
        let mut prod = e;
        for i in 1..k {
            let d = (w[i - 1] * e).clamp(1e-300, 1.0 - 1e-16);
            y[i - 1] = norm_quantile(d);
            let s: f64 = (0..i).map(|j| corr.chol(i, j) * y[j]).sum();
            e = norm_cdf((x[i] - s) / corr.chol(i, i));
            prod *= e;
        }
        prod
    };
    let mut gens: Vec<ScrambledSobol> = (0..QMC_RANDOMIZATIONS)
        .map(|r| ScrambledSobol::new(k - 1, &mut rng_from_seed(substream(QMC_SEED, r as u64))))
        .collect();
    let mut sums = vec![0.0; QMC_RANDOMIZATIONS];
    let mut w = vec![0.0; k - 1];
    let mut y = vec![0.0; k];
    let mut n = 0u64;
    let mut step = 512u64;
    loop {
        for (g, s) in gens.iter_mut().zip(sums.iter_mut()) {
            for _ in 0..step {
                g.next_into(&mut w);
                *s += integrand(&w, &mut y);
            }
        }
        n += step;
        let evals = n * QMC_RANDOMIZATIONS as u64;
        let m = QMC_RANDOMIZATIONS as f64;
        let means: Vec<f64> = sums.iter().map(|s| s / n as f64).collect();
        let value = means.iter().sum::<f64>() / m;
        let var = means.iter().map(|v| (v - value).powi(2)).sum::<f64>() / (m - 1.0);
        let est = Estimate { value: value.clamp(0.0, 1.0), error: 3.0 * (var / m).sqrt(), evals };
        if est.error <= abs_tol {
            return Ok(est);
        }
        step = n;
        if evals + step * QMC_RANDOMIZATIONS as u64 > budget {
            return Err(Error::ToleranceNotReached(est));
        }
    }
}
