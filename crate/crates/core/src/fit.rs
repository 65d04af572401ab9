//! Rank-correlation inversion estimators.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::copula::{CopulaModel, CorrelationMatrix, Family};
use crate::empirical::RankedSample;
use crate::error::{Error, Result};
use crate::exec::{map_slice, Execution};
use crate::quad;
use crate::special::debye1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    TauInversion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: CopulaModel,
    pub method: FitMethod,
    /// Pairwise Kendall taus in upper-triangle order `(0,1), (0,2), …, (k-2,k-1)`.
    pub sample_stat: Vec<f64>,
    /// Set when the inverted parameter fell outside the family's range and
    /// was moved to the nearest admissible value.
    pub clamped: bool,
}

/// What to do when the sample tau lies below the family's attainable range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Reject,
    /// Move to the admissible parameter closest to independence. Used when
    /// refitting bootstrap replicates drawn near the independence boundary.
    Clamp,
}

const CLAYTON_FLOOR: f64 = 1e-4;
const FRANK_FLOOR: f64 = 1e-4;
const FRANK_MAX: f64 = 700.0;
const JOE_MAX: f64 = 1e4;

/// Tie-adjusted (tau-b) sample Kendall tau in O(N log N).
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidConfig("kendall tau needs at least two observations".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteData);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    // pairs tied in x, and tied in both
    let (mut tx, mut txy) = (0u64, 0u64);
    let (mut run_x, mut run_xy) = (1u64, 1u64);
    for w in 1..=n {
        let same_x = w < n && x[idx[w]] == x[idx[w - 1]];
        let same_xy = same_x && y[idx[w]] == y[idx[w - 1]];
        if same_xy {
            run_xy += 1;
        } else {
            txy += run_xy * (run_xy - 1) / 2;
            run_xy = 1;
        }
        if same_x {
            run_x += 1;
        } else {
            tx += run_x * (run_x - 1) / 2;
            run_x = 1;
        }
    }

    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf);

    let mut ty = 0u64;
    let mut run = 1u64;
    for w in 1..=n {
        if w < n && ys[w] == ys[w - 1] {
            run += 1;
        } else {
            ty += run * (run - 1) / 2;
            run = 1;
        }
    }

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    if tx == n0 {
        return Err(Error::DegenerateColumn(0));
    }
    if ty == n0 {
        return Err(Error::DegenerateColumn(1));
    }
    let s = n0 as f64 - tx as f64 - ty as f64 + txy as f64 - 2.0 * swaps as f64;
    let denom = ((n0 - tx) as f64).sqrt() * ((n0 - ty) as f64).sqrt();
    Ok((s / denom).clamp(-1.0, 1.0))
}

/// Sorts `v` ascending and returns the number of inversions.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = merge_count(&mut v[..mid], &mut buf[..mid]) + merge_count(&mut v[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut o) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[o] = v[j];
            count += (mid - i) as u64;
            j += 1;
        } else {
            buf[o] = v[i];
            i += 1;
        }
        o += 1;
    }
    buf[o..o + mid - i].copy_from_slice(&v[i..mid]);
    o += mid - i;
    buf[o..o + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    count
}

fn frank_tau(theta: f64) -> f64 {
    if theta.abs() < 1e-2 {
        let t2 = theta * theta;
        return theta * (1.0 / 9.0 - t2 / 900.0 + t2 * t2 / 52_920.0);
    }
    1.0 - 4.0 / theta * (1.0 - debye1(theta))
}

fn joe_tau(theta: f64) -> f64 {
    if theta == 1.0 {
        return 0.0;
    }
    // 1 + (4/θ) ∫₀¹ (1 − s^θ) ln(1 − s^θ) s^{1−θ} ds
    let f = |s: f64| {
        let w = s.powf(theta);
        if w >= 1.0 {
            0.0
        } else if w < 1e-300 {
            -s
        } else {
            (1.0 - w) * (-w).ln_1p() / w * s
        }
    };
    let integral = quad::integrate(f, 0.0, 1.0, 1e-14, 1e-13).map(|e| e.value).unwrap_or_else(|e| match e {
        Error::ToleranceNotReached(est) => est.value,
        _ => f64::NAN,
    });
    1.0 + 4.0 / theta * integral
}

/// Population Kendall tau of a one-parameter family.
pub fn param_to_tau(family: Family, param: f64) -> Result<f64> {
    match family {
        Family::Clayton => Ok(param / (param + 2.0)),
        Family::GumbelHougaard => Ok(1.0 - 1.0 / param),
        Family::Frank => Ok(frank_tau(param)),
        Family::Joe => Ok(joe_tau(param)),
        Family::Fgm => Ok(2.0 * param / 9.0),
        Family::Gaussian => Ok(2.0 / PI * param.asin()),
        Family::Product => Ok(0.0),
        _ => Err(Error::NotFittable(family.name())),
    }
}

/// Solves `tau_of(θ) = tau` for increasing `tau_of` on `[lo, hi]`.
fn bisect(tau_of: impl Fn(f64) -> f64, tau: f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let t = tau_of(mid);
        if !t.is_finite() {
            return Err(Error::NoConvergence);
        }
        if t < tau {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    if (tau_of(mid) - tau).abs() > 1e-10 {
        return Err(Error::NoConvergence);
    }
    Ok(mid)
}

/// Inverts the Kendall tau relation of a one-parameter family in dimension `dim`.
pub fn tau_to_param(family: Family, dim: usize, tau: f64) -> Result<f64> {
    tau_to_param_with(family, dim, tau, Boundary::Reject).map(|(p, _)| p)
}

fn tau_to_param_with(family: Family, dim: usize, tau: f64, boundary: Boundary) -> Result<(f64, bool)> {
    let out = || Error::TauOutOfRange { family: family.name(), tau };
    if !tau.is_finite() || tau.abs() > 1.0 {
        return Err(out());
    }
    let clamp = boundary == Boundary::Clamp;
    let positive_only = dim >= 3;
    match family {
        Family::Clayton => {
            if tau >= 1.0 || tau <= -1.0 {
                return Err(out());
            }
            let a = 2.0 * tau / (1.0 - tau);
            if (positive_only && a <= 0.0) || a == 0.0 {
                return if clamp { Ok((CLAYTON_FLOOR, true)) } else { Err(out()) };
            }
            Ok((a.max(-1.0), false))
        }
        Family::GumbelHougaard => {
            if tau >= 1.0 {
                return Err(out());
            }
            if tau < 0.0 {
                return if clamp { Ok((1.0, true)) } else { Err(out()) };
            }
            Ok((1.0 / (1.0 - tau), false))
        }
        Family::Frank => {
            if (positive_only && tau <= 0.0) || tau == 0.0 {
                return if clamp { Ok((FRANK_FLOOR, true)) } else { Err(out()) };
            }
            if tau.abs() >= frank_tau(FRANK_MAX) {
                return Err(out());
            }
            let t = bisect(frank_tau, tau.abs(), 0.0, FRANK_MAX)?;
            Ok((t.copysign(tau), false))
        }
        Family::Joe => {
            if tau < 0.0 {
                return if clamp { Ok((1.0, true)) } else { Err(out()) };
            }
            if tau == 0.0 {
                return Ok((1.0, false));
            }
            if tau >= joe_tau(JOE_MAX) {
                return Err(out());
            }
            let ln_t = bisect(|l: f64| joe_tau(l.exp()), tau, 0.0, JOE_MAX.ln())?;
            Ok((ln_t.exp(), false))
        }
        Family::Fgm => {
            if dim != 2 {
                return Err(Error::DimensionUnsupported { family: family.name(), dim });
            }
            let t = 4.5 * tau;
            if t.abs() > 1.0 {
                return if clamp { Ok((t.clamp(-1.0, 1.0), true)) } else { Err(out()) };
            }
            Ok((t, false))
        }
        _ => Err(Error::NotFittable(family.name())),
    }
}

/// Pairwise Kendall taus of the columns of a row-major `n × k` matrix.
pub fn pairwise_tau(data: &[f64], k: usize, exec: Execution) -> Result<Vec<f64>> {
    if k < 2 || data.len() % k != 0 {
        return Err(Error::DimensionMismatch { expected: k, got: data.len() });
    }
    let n = data.len() / k;
    let columns: Vec<Vec<f64>> = (0..k).map(|j| (0..n).map(|i| data[i * k + j]).collect()).collect();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    map_slice(exec, &pairs, |&(i, j)| {
        kendall_tau(&columns[i], &columns[j]).map_err(|e| match e {
            Error::DegenerateColumn(0) => Error::DegenerateColumn(i),
            Error::DegenerateColumn(_) => Error::DegenerateColumn(j),
            e => e,
        })
    })
    .into_iter()
    .collect()
}

/// Nearest correlation matrix with eigenvalues at least `1e-6`: eigenvalues
/// are clipped and the result rescaled to a unit diagonal.
pub fn nearest_correlation(dim: usize, entries: &[f64]) -> Vec<f64> {
    let m = DMatrix::from_row_slice(dim, dim, entries);
    let eig = SymmetricEigen::new(m);
    let clipped = eig.eigenvalues.map(|l| l.max(1e-6));
    let r = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let d: Vec<f64> = (0..dim).map(|i| r[(i, i)].sqrt()).collect();
    let mut out = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            out[i * dim + j] = if i == j { 1.0 } else { r[(i, j)] / (d[i] * d[j]) };
        }
    }
    out
}

fn from_taus(family: Family, k: usize, taus: Vec<f64>, boundary: Boundary) -> Result<FitResult> {
    let (params, clamped) = match family {
        Family::Product => (Vec::new(), false),
        Family::Gaussian => {
            let mut entries = vec![0.0; k * k];
            let mut p = 0;
            for i in 0..k {
                entries[i * k + i] = 1.0;
                for j in i + 1..k {
                    let r = (PI / 2.0 * taus[p]).sin();
                    entries[i * k + j] = r;
                    entries[j * k + i] = r;
                    p += 1;
                }
            }
            match CorrelationMatrix::from_entries(k, entries.clone()) {
                Ok(c) if min_eigenvalue(k, &entries) >= 1e-6 => (c.upper(), false),
                _ => {
                    let c = CorrelationMatrix::from_entries(k, nearest_correlation(k, &entries))?;
                    (c.upper(), true)
                }
            }
        }
        f if f.is_archimedean() || f == Family::Fgm => {
            let mean = taus.iter().sum::<f64>() / taus.len() as f64;
            let (p, c) = tau_to_param_with(f, k, mean, boundary)?;
            (vec![p], c)
        }
        f => return Err(Error::NotFittable(f.name())),
    };
    Ok(FitResult {
        model: CopulaModel::new(family, k, &params)?,
        method: FitMethod::TauInversion,
        sample_stat: taus,
        clamped,
    })
}

fn min_eigenvalue(k: usize, entries: &[f64]) -> f64 {
    SymmetricEigen::new(DMatrix::from_row_slice(k, k, entries)).eigenvalues.min()
}

fn check_fittable(family: Family) -> Result<()> {
    match family {
        Family::Product
        | Family::Gaussian
        | Family::Clayton
        | Family::Frank
        | Family::GumbelHougaard
        | Family::Joe
        | Family::Fgm => Ok(()),
        f => Err(Error::NotFittable(f.name())),
    }
}

/// Fits `family` to the row-major `n × k` matrix `data` by Kendall tau
/// inversion. Archimedean families use the average pairwise tau.
pub fn estimate(family: Family, data: &[f64], k: usize) -> Result<FitResult> {
    estimate_with(family, data, k, Boundary::Reject, Execution::default())
}

pub fn estimate_with(family: Family, data: &[f64], k: usize, boundary: Boundary, exec: Execution) -> Result<FitResult> {
    check_fittable(family)?;
    if family.bivariate_only() && k != 2 {
        return Err(Error::DimensionUnsupported { family: family.name(), dim: k });
    }
    let taus = pairwise_tau(data, k, exec)?;
    from_taus(family, k, taus, boundary)
}

/// Same estimator applied to ranks (ties already broken).
pub fn estimate_from_ranks(
    family: Family,
    rs: &RankedSample,
    boundary: Boundary,
    exec: Execution,
) -> Result<FitResult> {
    let data: Vec<f64> = (0..rs.n()).flat_map(|i| rs.row(i).iter().map(|&r| r as f64)).collect();
    estimate_with(family, &data, rs.k(), boundary, exec)
}
