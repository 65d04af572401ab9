//! Ranks, pseudo-observations, the empirical copula and the empirical beta
//! copula, with plug-in estimates of the entropy functionals.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::copula::CopulaCdf;
use crate::cubature::IntegrationConfig;
use crate::error::{Error, Result};
use crate::exec::{map_range, Execution};
use crate::measures::{self, MeasureEstimate};
use crate::rng::{rng_from_seed, substream};
use crate::special::betainc;

/// Column-wise ranks of an `n × k` sample; every column is a permutation
/// of `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedSample {
    n: usize,
    k: usize,
    /// Row-major ranks in `1..=n`.
    ranks: Vec<u32>,
    tie_seed: u64,
    /// Per column, the number of observations that belonged to a tie group.
    ties_broken: Vec<usize>,
}

impl RankedSample {
    /// Wraps an existing rank matrix after checking that every column is a
    /// permutation of `1..=n`.
    pub fn from_ranks(n: usize, k: usize, ranks: Vec<u32>) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::InvalidConfig("rank matrix must be non-empty".into()));
        }
        if ranks.len() != n * k {
            return Err(Error::DimensionMismatch { expected: n * k, got: ranks.len() });
        }
        for j in 0..k {
            let mut seen = vec![false; n];
            for i in 0..n {
                let r = ranks[i * k + j] as usize;
                if r == 0 || r > n || std::mem::replace(&mut seen[r - 1], true) {
                    return Err(Error::InvalidConfig(format!("column {j} is not a permutation of 1..={n}")));
                }
            }
        }
        Ok(RankedSample { n, k, ranks, tie_seed: 0, ties_broken: vec![0; k] })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn tie_seed(&self) -> u64 {
        self.tie_seed
    }

    pub fn ties_broken(&self) -> &[usize] {
        &self.ties_broken
    }

    pub fn rank(&self, i: usize, j: usize) -> u32 {
        self.ranks[i * self.k + j]
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.ranks[i * self.k..(i + 1) * self.k]
    }

    pub fn column(&self, j: usize) -> Vec<u32> {
        (0..self.n).map(|i| self.rank(i, j)).collect()
    }

    pub fn pseudo_observations(&self) -> PseudoObservations {
        let d = (self.n + 1) as f64;
        PseudoObservations { n: self.n, k: self.k, e: self.ranks.iter().map(|&r| r as f64 / d).collect() }
    }
}

/// `e_{ij} = R_{ij} / (n + 1)`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoObservations {
    pub n: usize,
    pub k: usize,
    pub e: Vec<f64>,
}

impl PseudoObservations {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.e[i * self.k..(i + 1) * self.k]
    }
}

/// Ranks each column of the row-major `n × k` matrix `data`; tied values
/// receive their block of ranks in a uniformly random order driven by
/// `tie_seed` (one independent stream per column).
pub fn rank_with_random_ties(data: &[f64], k: usize, tie_seed: u64) -> Result<RankedSample> {
    if k == 0 || data.len() % k != 0 {
        return Err(Error::DimensionMismatch { expected: k, got: data.len() });
    }
    let n = data.len() / k;
    if n < 2 {
        return Err(Error::InvalidConfig("need at least two observations".into()));
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteData);
    }
    let mut ranks = vec![0u32; n * k];
    let mut ties_broken = vec![0usize; k];
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for j in 0..k {
        let mut rng = rng_from_seed(substream(tie_seed, j as u64));
        order.clear();
        order.extend(0..n);
        order.sort_by(|&a, &b| data[a * k + j].total_cmp(&data[b * k + j]).then(a.cmp(&b)));
        let mut start = 0;
        while start < n {
            let v = data[order[start] * k + j];
            let mut end = start + 1;
            while end < n && data[order[end] * k + j] == v {
                end += 1;
            }
            if end - start > 1 {
                order[start..end].shuffle(&mut rng);
                ties_broken[j] += end - start;
            }
            start = end;
        }
        for (pos, &i) in order.iter().enumerate() {
            ranks[i * k + j] = (pos + 1) as u32;
        }
    }
    Ok(RankedSample { n, k, ranks, tie_seed, ties_broken })
}

/// The empirical copula `C_N(u) = N⁻¹ Σ_i Π_j 1{e_ij ≤ u_j}`.
#[derive(Debug, Clone)]
pub struct EmpiricalCopula<'a> {
    rs: &'a RankedSample,
}

impl<'a> EmpiricalCopula<'a> {
    pub fn new(rs: &'a RankedSample) -> Self {
        EmpiricalCopula { rs }
    }
}

impl CopulaCdf for EmpiricalCopula<'_> {
    fn dim(&self) -> usize {
        self.rs.k
    }

    fn eval(&self, u: &[f64]) -> f64 {
        let d = (self.rs.n + 1) as f64;
        // e_ij ≤ u_j  ⇔  R_ij ≤ ⌊u_j (n+1)⌋, with a guard against roundoff
        let limits: Vec<u32> = u
            .iter()
            .map(|&x| {
                let t = (x.clamp(0.0, 1.0) * d).floor();
                let t = if (t + 1.0) / d <= x { t + 1.0 } else { t };
                t as u32
            })
            .collect();
        let count = (0..self.rs.n).filter(|&i| self.rs.row(i).iter().zip(&limits).all(|(r, l)| r <= l)).count();
        count as f64 / self.rs.n as f64
    }
}

pub fn empirical_copula_cdf(rs: &RankedSample, u: &[f64]) -> Result<f64> {
    check_point(rs, u)?;
    Ok(EmpiricalCopula::new(rs).eval(u))
}

fn check_point(rs: &RankedSample, u: &[f64]) -> Result<()> {
    if u.len() != rs.k {
        return Err(Error::DimensionMismatch { expected: rs.k, got: u.len() });
    }
    if u.iter().any(|x| x.is_nan()) {
        return Err(Error::NonFiniteData);
    }
    Ok(())
}

/// Binomial survival `S(u; n, r) = P(Bin(n, u) ≥ r) = I_u(r, n − r + 1)`.
pub fn binomial_survival(u: f64, n: usize, r: usize) -> f64 {
    if r == 0 || u >= 1.0 {
        return 1.0;
    }
    if r > n || u <= 0.0 {
        return 0.0;
    }
    betainc(r as f64, (n - r + 1) as f64, u)
}

/// Writes `S(u; n, r)` for `r = 1..=n` into `out[r-1]` in O(n): the
/// binomial pmf is generated outward from its mode, normalized, and summed
/// from the top.
pub fn binomial_survival_row(u: f64, n: usize, out: &mut [f64]) {
    debug_assert_eq!(out.len(), n);
    if u <= 0.0 {
        out.fill(0.0);
        return;
    }
    if u >= 1.0 {
        out.fill(1.0);
        return;
    }
    let mut pmf = vec![0.0; n + 1];
    let mode = (((n + 1) as f64 * u).floor() as usize).min(n);
    pmf[mode] = 1.0;
    let odds = u / (1.0 - u);
    for y in mode..n {
        pmf[y + 1] = pmf[y] * ((n - y) as f64 / (y + 1) as f64) * odds;
    }
    for y in (1..=mode).rev() {
        pmf[y - 1] = pmf[y] * (y as f64 / (n - y + 1) as f64) / odds;
    }
    let total: f64 = pmf.iter().sum();
    let mut acc = 0.0;
    for r in (1..=n).rev() {
        acc += pmf[r];
        out[r - 1] = (acc / total).min(1.0);
    }
}

/// The empirical beta copula `Ĉ_N(u) = N⁻¹ Σ_i Π_j S(u_j; N, R_ij)`.
#[derive(Debug, Clone)]
pub struct BetaCopula<'a> {
    rs: &'a RankedSample,
}

impl<'a> BetaCopula<'a> {
    pub fn new(rs: &'a RankedSample) -> Self {
        BetaCopula { rs }
    }

    /// `Ĉ_N` evaluated with precomputed survival rows `rows[j][r-1]`.
    fn from_rows(&self, rows: &[f64]) -> f64 {
        let n = self.rs.n;
        let mut sum = 0.0;
        for i in 0..n {
            let mut p = 1.0;
            for (j, &r) in self.rs.row(i).iter().enumerate() {
                p *= rows[j * n + r as usize - 1];
            }
            sum += p;
        }
        (sum / n as f64).clamp(0.0, 1.0)
    }

    /// `Ĉ_N(e_i)` at every pseudo-observation row, in row order.
    pub fn at_pseudo_observations(&self, exec: Execution) -> Vec<f64> {
        self.at_pseudo_observations_with(&SurvivalTable::new(self.rs.n), exec)
    }

    /// As [`Self::at_pseudo_observations`] with a table built for this `N`.
    pub fn at_pseudo_observations_with(&self, table: &SurvivalTable, exec: Execution) -> Vec<f64> {
        let n = self.rs.n;
        assert_eq!(table.n, n, "survival table built for a different sample size");
        map_range(exec, n, |i| {
            let ri = self.rs.row(i);
            let mut sum = 0.0;
            for l in 0..n {
                let mut p = 1.0;
                for (&a, &b) in ri.iter().zip(self.rs.row(l)) {
                    p *= table.get(a, b);
                }
                sum += p;
            }
            (sum / n as f64).clamp(0.0, 1.0)
        })
    }
}

/// `S(m/(N+1); N, r)` for `m, r ∈ 1..=N`: every survival value the beta
/// copula needs at pseudo-observations.
#[derive(Debug, Clone)]
pub struct SurvivalTable {
    n: usize,
    values: Vec<f64>,
}

impl SurvivalTable {
    pub fn new(n: usize) -> Self {
        let d = (n + 1) as f64;
        let mut values = vec![0.0; n * n];
        for (m, row) in values.chunks_mut(n).enumerate() {
            binomial_survival_row((m + 1) as f64 / d, n, row);
        }
        SurvivalTable { n, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `S(m/(N+1); N, r)`.
    #[inline]
    pub fn get(&self, m: u32, r: u32) -> f64 {
        self.values[(m as usize - 1) * self.n + r as usize - 1]
    }
}

impl CopulaCdf for BetaCopula<'_> {
    fn dim(&self) -> usize {
        self.rs.k
    }

    fn eval(&self, u: &[f64]) -> f64 {
        let (n, k) = (self.rs.n, self.rs.k);
        if u.iter().any(|&x| x <= 0.0) {
            return 0.0;
        }
        let mut rows = vec![0.0; n * k];
        for (j, &x) in u.iter().enumerate() {
            binomial_survival_row(x, n, &mut rows[j * n..(j + 1) * n]);
        }
        self.from_rows(&rows)
    }
}

pub fn beta_copula_cdf(rs: &RankedSample, u: &[f64]) -> Result<f64> {
    check_point(rs, u)?;
    Ok(BetaCopula::new(rs).eval(u))
}

/// `∫ Ĉ_N = N⁻¹ Σ_i Π_j (N + 1 − R_ij)/(N + 1)`.
pub fn beta_copula_mean(rs: &RankedSample) -> f64 {
    let d = (rs.n + 1) as f64;
    (0..rs.n).map(|i| rs.row(i).iter().map(|&r| (d - r as f64) / d).product::<f64>()).sum::<f64>() / rs.n as f64
}

fn cubature_dim(rs: &RankedSample) -> Result<()> {
    if rs.k < 2 {
        return Err(Error::DimensionUnsupported { family: "empirical beta copula", dim: rs.k });
    }
    Ok(())
}

/// Plug-in `ζ(Ĉ_N)`.
pub fn empirical_cce(rs: &RankedSample, cfg: &IntegrationConfig) -> Result<MeasureEstimate> {
    cubature_dim(rs)?;
    measures::cce(&BetaCopula::new(rs), cfg)
}

/// Plug-in `ζ_r(Ĉ_N)`.
pub fn empirical_fcce(rs: &RankedSample, r: f64, cfg: &IntegrationConfig) -> Result<MeasureEstimate> {
    cubature_dim(rs)?;
    measures::fcce(&BetaCopula::new(rs), r, cfg)
}

/// Plug-in `𝒢_{Ĉ_N}(s)`.
pub fn empirical_ccigf(rs: &RankedSample, s: f64, cfg: &IntegrationConfig) -> Result<MeasureEstimate> {
    cubature_dim(rs)?;
    measures::ccigf(&BetaCopula::new(rs), s, cfg)
}

/// Integration settings suited to plug-in measures: the beta copula costs
/// O(Nk) per evaluation, so the default tolerance is relaxed.
pub fn default_empirical_config(k: usize) -> IntegrationConfig {
    IntegrationConfig::for_dim(k).with_abs_tol(if k <= 3 { 1e-6 } else { 1e-4 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn diag2() -> RankedSample {
        RankedSample::from_ranks(2, 2, vec![1, 1, 2, 2]).unwrap()
    }

    #[test]
    fn ranks_without_ties() {
        let rs = rank_with_random_ties(&[3.0, 10.0, 1.0, 30.0, 2.0, 20.0], 2, 0).unwrap();
        assert_eq!(rs.column(0), vec![3, 1, 2]);
        assert_eq!(rs.column(1), vec![1, 3, 2]);
        assert_eq!(rs.ties_broken(), &[0, 0]);
    }

    #[test]
    fn ties_are_broken_both_ways() {
        let mut seen = std::collections::HashSet::new();
        for seed in 0..64 {
            let rs = rank_with_random_ties(&[5.0, 5.0], 1, seed).unwrap();
            assert_eq!(rs.ties_broken(), &[2]);
            let mut c = rs.column(0);
            seen.insert(c.clone());
            c.sort_unstable();
            assert_eq!(c, vec![1, 2]);
        }
        assert_eq!(seen.len(), 2);
        let a = rank_with_random_ties(&[1.0, 1.0, 1.0, 2.0, 0.0, 1.0], 1, 9).unwrap();
        assert_eq!(a, rank_with_random_ties(&[1.0, 1.0, 1.0, 2.0, 0.0, 1.0], 1, 9).unwrap());
        assert!(matches!(rank_with_random_ties(&[1.0, f64::NAN], 1, 0), Err(Error::NonFiniteData)));
    }

    #[test]
    fn pseudo_observation_means() {
        let rs = rank_with_random_ties(&[0.3, 0.1, 0.9, 0.5, 0.2, 0.4, 0.8, 0.7], 2, 1).unwrap();
        let po = rs.pseudo_observations();
        for j in 0..2 {
            let m: f64 = (0..4).map(|i| po.row(i)[j]).sum::<f64>() / 4.0;
            assert_eq!(m, 0.5);
        }
    }

    #[test]
    fn empirical_copula_examples() {
        let rs = diag2();
        assert_eq!(empirical_copula_cdf(&rs, &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(empirical_copula_cdf(&rs, &[0.3, 0.9]).unwrap(), 0.0);
        assert_eq!(empirical_copula_cdf(&rs, &[0.5, 0.5]).unwrap(), 0.5);
        assert_eq!(empirical_copula_cdf(&rs, &[1.0 / 3.0, 1.0]).unwrap(), 0.5);
    }

    #[test]
    fn beta_copula_examples() {
        let one = RankedSample::from_ranks(1, 2, vec![1, 1]).unwrap();
        assert_abs_diff_eq!(beta_copula_cdf(&one, &[0.3, 0.7]).unwrap(), 0.21, epsilon = 1e-15);
        let rs = diag2();
        assert_abs_diff_eq!(beta_copula_cdf(&rs, &[0.5, 0.5]).unwrap(), 0.3125, epsilon = 1e-15);
        assert_eq!(beta_copula_cdf(&rs, &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(beta_copula_cdf(&rs, &[0.0, 0.4]).unwrap(), 0.0);
        assert_abs_diff_eq!(beta_copula_mean(&one), 0.25);
        assert_abs_diff_eq!(beta_copula_mean(&rs), 5.0 / 18.0, epsilon = 1e-15);
    }

    #[test]
    fn survival_row_matches_incomplete_beta() {
        for &n in &[1usize, 2, 7, 50, 1000, 3000] {
            for &u in &[1e-6, 0.013, 0.4, 0.5, 0.77, 0.999_999] {
                let mut row = vec![0.0; n];
                binomial_survival_row(u, n, &mut row);
                for r in [1, n / 3 + 1, n / 2 + 1, n] {
                    let b = binomial_survival(u, n, r);
                    assert!((row[r - 1] - b).abs() < 1e-10, "n={n} u={u} r={r}: {} vs {b}", row[r - 1]);
                }
            }
        }
    }

    #[test]
    fn survival_row_reference_value() {
        // P(Bin(3000, 1/2) >= 1501) to 20 digits
        let mut row = vec![0.0; 3000];
        binomial_survival_row(0.5, 3000, &mut row);
        assert_abs_diff_eq!(row[1500], 0.492_716_950_742_102_125_4, epsilon = 1e-14);
    }

    #[test]
    fn beta_copula_has_uniform_margins() {
        let rs = rank_with_random_ties(&[0.3, 0.1, 0.9, 0.5, 0.2, 0.4, 0.8, 0.7, 0.15, 0.05], 2, 3).unwrap();
        let b = BetaCopula::new(&rs);
        for &u in &[0.01, 0.2, 0.5, 0.93] {
            assert_abs_diff_eq!(b.eval(&[u, 1.0]), u, epsilon = 1e-14);
            assert_abs_diff_eq!(b.eval(&[1.0, u]), u, epsilon = 1e-14);
        }
    }

    #[test]
    fn pseudo_observation_evaluation_matches_pointwise() {
        let data: Vec<f64> = (0..30).map(|i| ((i * 37 % 17) as f64).sin()).collect();
        let rs = rank_with_random_ties(&data, 3, 4).unwrap();
        let b = BetaCopula::new(&rs);
        let po = rs.pseudo_observations();
        let seq = b.at_pseudo_observations(Execution::Sequential);
        assert_eq!(seq, b.at_pseudo_observations(Execution::Parallel));
        for (i, v) in seq.into_iter().enumerate() {
            assert_abs_diff_eq!(v, b.eval(po.row(i)), epsilon = 1e-15);
        }
    }

    #[test]
    fn plug_in_measures_for_a_single_observation() {
        let one = RankedSample::from_ranks(1, 2, vec![1, 1]).unwrap();
        let cfg = default_empirical_config(2);
        assert_abs_diff_eq!(empirical_cce(&one, &cfg).unwrap().value, 0.25, epsilon = 1e-6);
        let rs = diag2();
        let mean = crate::measures::b_k(&BetaCopula::new(&rs), &cfg).unwrap();
        assert_abs_diff_eq!(mean.value, beta_copula_mean(&rs), epsilon = 1e-6);
    }
}
