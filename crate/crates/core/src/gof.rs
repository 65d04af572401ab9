//! The T_N goodness-of-fit statistic, its parametric bootstrap test,
//! null-percentile calibration, power studies and CCKL-based selection.

use serde::{Deserialize, Serialize};

use crate::copula::{CopulaCdf, CopulaModel, Family};
use crate::cubature::IntegrationConfig;
use crate::empirical::{rank_with_random_ties, BetaCopula, RankedSample, SurvivalTable};
use crate::error::{Error, Result};
use crate::exec::{map_range, Execution};
use crate::fit::{estimate_from_ranks, Boundary, FitResult};
use crate::measures::{self, MeasureEstimate};
use crate::rng::{rng_from_seed, substream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamMode {
    /// Refit the family on every bootstrap replicate.
    #[default]
    EstimateEachRep,
    /// Keep the null parameters fixed for every replicate.
    KnownParams,
}

/// How the expectation inside T_N is approximated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "form")]
pub enum StatisticForm {
    /// Sample mean over the pseudo-observations.
    #[default]
    PseudoObservations,
    /// Plain Monte Carlo over independent uniform points.
    UniformMonteCarlo { points: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofConfig {
    pub reps: usize,
    pub alpha: f64,
    pub seed: u64,
    pub tie_seed: u64,
    pub param_mode: ParamMode,
    pub form: StatisticForm,
    #[serde(skip)]
    pub exec: Execution,
}

pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_TIE_SEED: u64 = 7_919;

impl Default for GofConfig {
    fn default() -> Self {
        GofConfig {
            reps: 1000,
            alpha: 0.05,
            seed: DEFAULT_SEED,
            tie_seed: DEFAULT_TIE_SEED,
            param_mode: ParamMode::EstimateEachRep,
            form: StatisticForm::PseudoObservations,
            exec: Execution::default(),
        }
    }
}

impl GofConfig {
    pub fn with_reps(mut self, reps: usize) -> Self {
        self.reps = reps;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_param_mode(mut self, mode: ParamMode) -> Self {
        self.param_mode = mode;
        self
    }

    pub fn with_exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < 100 {
            return Err(Error::InvalidConfig(format!("reps must be at least 100, got {}", self.reps)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if (self.reps as f64) * self.alpha < 5.0 {
            return Err(Error::InvalidConfig("reps * alpha must be at least 5".into()));
        }
        if let StatisticForm::UniformMonteCarlo { points: 0, .. } = self.form {
            return Err(Error::InvalidConfig("uniform Monte Carlo needs at least one point".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub family: Family,
    pub n: usize,
    pub observed_t: f64,
    /// The `⌊(1−α)M⌋`-th ascending replicate statistic.
    pub percentile: f64,
    pub p_value: f64,
    pub reject: bool,
    pub reps: usize,
    pub alpha: f64,
    pub seed: u64,
    pub tie_seed: u64,
    pub param_mode: ParamMode,
    pub fitted: FitResult,
    /// Replicate statistics in replicate order.
    pub replicates: Vec<f64>,
}

/// `⌊(1−α)M⌋`, never below 1.
pub fn percentile_index(m: usize, alpha: f64) -> usize {
    (((1.0 - alpha) * m as f64 + 1e-9).floor() as usize).clamp(1, m.max(1))
}

fn percentile_of(stats: &[f64], alpha: f64) -> f64 {
    let mut sorted = stats.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[percentile_index(sorted.len(), alpha) - 1]
}

#[inline]
fn summand(c_hat: f64, c_model: f64) -> f64 {
    let y = c_model.max(1e-300);
    if c_hat <= 0.0 {
        return y;
    }
    c_hat * c_hat.ln() - c_hat * y.ln() - c_hat + y
}

/// `T_N = N⁻¹ Σ_i [Ĉ ln Ĉ − Ĉ ln C_θ − Ĉ + C_θ](e_i)`.
pub fn t_statistic(rs: &RankedSample, model: &CopulaModel) -> Result<f64> {
    t_statistic_with(rs, model, &SurvivalTable::new(rs.n()), StatisticForm::PseudoObservations, Execution::default())
}

/// T_N with a caller-supplied survival table and evaluation form.
pub fn t_statistic_with(
    rs: &RankedSample,
    model: &impl CopulaCdf,
    table: &SurvivalTable,
    form: StatisticForm,
    exec: Execution,
) -> Result<f64> {
    if model.dim() != rs.k() {
        return Err(Error::DimensionMismatch { expected: rs.k(), got: model.dim() });
    }
    let beta = BetaCopula::new(rs);
    let n = rs.n();
    let total: f64 = match form {
        StatisticForm::PseudoObservations => {
            let c_hat = beta.at_pseudo_observations_with(table, exec);
            let po = rs.pseudo_observations();
            map_range(exec, n, |i| summand(c_hat[i], model.eval(po.row(i)))).iter().sum::<f64>() / n as f64
        }
        StatisticForm::UniformMonteCarlo { points, seed } => {
            use rand::Rng;
            let k = rs.k();
            map_range(exec, points, |p| {
                let mut rng = rng_from_seed(substream(seed, p as u64));
                let u: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
                summand(beta.eval(&u), model.eval(&u))
            })
            .iter()
            .sum::<f64>()
                / points as f64
        }
    };
    if !total.is_finite() {
        return Err(Error::NonFiniteIntegrand);
    }
    Ok(total)
}

/// Draws a size-`n` sample from `model` and ranks it.
fn draw_ranked(model: &CopulaModel, n: usize, seed: u64) -> Result<RankedSample> {
    let sample = model.sample(n, substream(seed, 0))?;
    rank_with_random_ties(sample.as_slice(), model.dim(), substream(seed, 1))
}

/// T_N for one simulated dataset: draw from `truth`, optionally refit
/// `null_family`, and test against the (re)fitted or given `null`.
fn replicate_statistic(
    truth: &CopulaModel,
    null: &CopulaModel,
    n: usize,
    seed: u64,
    mode: ParamMode,
    table: &SurvivalTable,
    form: StatisticForm,
) -> Result<f64> {
    let rs = draw_ranked(truth, n, seed)?;
    match mode {
        ParamMode::KnownParams => t_statistic_with(&rs, null, table, form, Execution::Sequential),
        ParamMode::EstimateEachRep => {
            let fit = estimate_from_ranks(null.family(), &rs, Boundary::Clamp, Execution::Sequential)?;
            t_statistic_with(&rs, &fit.model, table, form, Execution::Sequential)
        }
    }
}

fn replicate_statistics(
    truth: &CopulaModel,
    null: &CopulaModel,
    n: usize,
    cfg: &GofConfig,
    base_seed: u64,
    mode: ParamMode,
    table: &SurvivalTable,
) -> Result<Vec<f64>> {
    map_range(cfg.exec, cfg.reps, |r| {
        replicate_statistic(truth, null, n, substream(base_seed, r as u64), mode, table, cfg.form)
    })
    .into_iter()
    .collect()
}

/// The parametric bootstrap test on ranked data.
///
/// Step 1 fits `family`; step 2 computes the observed T_N; step 3 draws
/// `reps` samples of size N from the fit (replicate `r` seeded by
/// `substream(seed, r)`) and recomputes T_N, refitting when the mode asks
/// for it; steps 4 and 5 give the percentile and p-value.
pub fn bootstrap_test_ranked(rs: &RankedSample, family: Family, cfg: &GofConfig) -> Result<GofReport> {
    let fitted = estimate_from_ranks(family, rs, Boundary::Clamp, cfg.exec)?;
    bootstrap_with_fit(rs, fitted, cfg)
}

/// As [`bootstrap_test_ranked`] but with the null model given, which is
/// then used both for the observed statistic and for resampling.
pub fn bootstrap_test_known(rs: &RankedSample, model: &CopulaModel, cfg: &GofConfig) -> Result<GofReport> {
    let sample_stat = Vec::new();
    let fitted =
        FitResult { model: model.clone(), method: crate::fit::FitMethod::TauInversion, sample_stat, clamped: false };
    bootstrap_with_fit(rs, fitted, cfg)
}

fn bootstrap_with_fit(rs: &RankedSample, fitted: FitResult, cfg: &GofConfig) -> Result<GofReport> {
    cfg.validate()?;
    if fitted.model.dim() != rs.k() {
        return Err(Error::DimensionMismatch { expected: rs.k(), got: fitted.model.dim() });
    }
    let n = rs.n();
    let table = SurvivalTable::new(n);
    let observed_t = t_statistic_with(rs, &fitted.model, &table, cfg.form, cfg.exec)?;
    let replicates = replicate_statistics(&fitted.model, &fitted.model, n, cfg, cfg.seed, cfg.param_mode, &table)?;
    let percentile = percentile_of(&replicates, cfg.alpha);
    let exceed = replicates.iter().filter(|&&t| t >= observed_t).count();
    Ok(GofReport {
        family: fitted.model.family(),
        n,
        observed_t,
        percentile,
        p_value: exceed as f64 / cfg.reps as f64,
        reject: observed_t >= percentile,
        reps: cfg.reps,
        alpha: cfg.alpha,
        seed: cfg.seed,
        tie_seed: rs.tie_seed(),
        param_mode: cfg.param_mode,
        fitted,
        replicates,
    })
}

/// Ranks the row-major `n × k` data with `cfg.tie_seed` and runs the test.
pub fn bootstrap_test(data: &[f64], k: usize, family: Family, cfg: &GofConfig) -> Result<GofReport> {
    let rs = rank_with_random_ties(data, k, cfg.tie_seed)?;
    bootstrap_test_ranked(&rs, family, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub model: CopulaModel,
    pub n: usize,
    pub reps: usize,
    pub alpha: f64,
    pub seed: u64,
    pub param_mode: ParamMode,
    pub percentile: f64,
    /// Simulated statistics in replicate order.
    pub statistics: Vec<f64>,
}

/// The `(1−α)` empirical quantile of T_N over `cfg.reps` datasets of size
/// `n` drawn from `model`. `cfg.param_mode` decides whether each dataset is
/// tested against `model` itself or against a refit of its family.
pub fn calibrate_percentile(model: &CopulaModel, n: usize, cfg: &GofConfig) -> Result<Calibration> {
    cfg.validate()?;
    if n < 2 {
        return Err(Error::InvalidConfig("sample size must be at least 2".into()));
    }
    let table = SurvivalTable::new(n);
    let statistics = replicate_statistics(model, model, n, cfg, cfg.seed, cfg.param_mode, &table)?;
    Ok(Calibration {
        model: model.clone(),
        n,
        reps: cfg.reps,
        alpha: cfg.alpha,
        seed: cfg.seed,
        param_mode: cfg.param_mode,
        percentile: percentile_of(&statistics, cfg.alpha),
        statistics,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub null: CopulaModel,
    pub truth: CopulaModel,
    pub n: usize,
    pub reps: usize,
    pub alpha: f64,
    pub seed: u64,
    pub param_mode: ParamMode,
    /// Critical value calibrated under the null.
    pub percentile: f64,
    pub rejections: usize,
    /// Rejection percentage in `[0, 100]`.
    pub rejection_rate: f64,
}

/// Fraction of `cfg.reps` datasets from `truth` whose T_N against `null`
/// reaches the null's calibrated `(1−α)` percentile.
///
/// The null percentile uses the replicate seeds `substream(seed, 0)` and the
/// alternative datasets `substream(seed, 1)`. With `KnownParams` both use
/// the given null parameters; with `EstimateEachRep` every dataset is
/// tested against a refit of the null family.
pub fn power_study(null: &CopulaModel, truth: &CopulaModel, n: usize, cfg: &GofConfig) -> Result<PowerReport> {
    cfg.validate()?;
    if null.dim() != truth.dim() {
        return Err(Error::DimensionMismatch { expected: null.dim(), got: truth.dim() });
    }
    let table = SurvivalTable::new(n);
    let null_stats = replicate_statistics(null, null, n, cfg, substream(cfg.seed, 0), cfg.param_mode, &table)?;
    let percentile = percentile_of(&null_stats, cfg.alpha);
    let alt_stats = replicate_statistics(truth, null, n, cfg, substream(cfg.seed, 1), cfg.param_mode, &table)?;
    let rejections = alt_stats.iter().filter(|&&t| t >= percentile).count();
    Ok(PowerReport {
        null: null.clone(),
        truth: truth.clone(),
        n,
        reps: cfg.reps,
        alpha: cfg.alpha,
        seed: cfg.seed,
        param_mode: cfg.param_mode,
        percentile,
        rejections,
        rejection_rate: 100.0 * rejections as f64 / cfg.reps as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionEntry {
    pub family: Family,
    pub fitted: Option<FitResult>,
    /// `CCKL(Ĉ_N : C_θ̂)`.
    pub cckl: Option<MeasureEstimate>,
    pub gof: Option<GofReport>,
    /// Set when fitting, the divergence or the test failed.
    pub failure: Option<String>,
}

/// Fits every candidate, computes its CCKL divergence from the empirical
/// beta copula and runs the bootstrap test. Entries are sorted ascending by
/// divergence; failed candidates follow in input order.
pub fn select_copula(
    data: &[f64],
    k: usize,
    candidates: &[Family],
    cfg: &GofConfig,
    integration: &IntegrationConfig,
) -> Result<Vec<SelectionEntry>> {
    cfg.validate()?;
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("no candidate families".into()));
    }
    let rs = rank_with_random_ties(data, k, cfg.tie_seed)?;
    let beta = BetaCopula::new(&rs);
    let mut entries: Vec<SelectionEntry> = candidates
        .iter()
        .map(|&family| {
            let mut entry = SelectionEntry { family, fitted: None, cckl: None, gof: None, failure: None };
            let fit = match estimate_from_ranks(family, &rs, Boundary::Clamp, cfg.exec) {
                Ok(f) => f,
                Err(e) => {
                    entry.failure = Some(format!("fit: {e}"));
                    return entry;
                }
            };
            match measures::cckl(&beta, &fit.model, integration) {
                Ok(d) => entry.cckl = Some(d),
                Err(e) => entry.failure = Some(format!("cckl: {e}")),
            }
            match bootstrap_with_fit(&rs, fit.clone(), cfg) {
                Ok(r) => entry.gof = Some(r),
                Err(e) => {
                    entry.failure.get_or_insert_with(|| format!("gof: {e}"));
                }
            }
            entry.fitted = Some(fit);
            entry
        })
        .collect();
    entries.sort_by(|a, b| match (&a.cckl, &b.cckl) {
        (Some(x), Some(y)) => x.value.total_cmp(&y.value),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn percentile_index_examples() {
        assert_eq!(percentile_index(10_000, 0.05), 9500);
        assert_eq!(percentile_index(100, 0.05), 95);
        assert_eq!(percentile_index(7, 0.5), 3);
        assert_eq!(percentile_index(1000, 0.1), 900);
    }

    #[test]
    fn single_observation_under_product_is_zero() {
        let rs = RankedSample::from_ranks(1, 2, vec![1, 1]).unwrap();
        let t = t_statistic(&rs, &CopulaModel::product(2)).unwrap();
        assert_abs_diff_eq!(t, 0.0, epsilon = 1e-16);
    }

    #[test]
    fn statistic_vanishes_against_the_beta_copula_itself() {
        let data = CopulaModel::new(Family::Clayton, 2, &[1.0]).unwrap().sample(40, 2).unwrap();
        let rs = rank_with_random_ties(data.as_slice(), 2, 0).unwrap();
        let beta = BetaCopula::new(&rs);
        let t = t_statistic_with(
            &rs,
            &beta,
            &SurvivalTable::new(40),
            StatisticForm::PseudoObservations,
            Execution::Sequential,
        )
        .unwrap();
        assert_abs_diff_eq!(t, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn summand_is_the_cckl_integrand() {
        for &(a, b) in &[(0.2, 0.3), (0.5, 0.5), (0.9, 0.1), (1e-3, 0.4)] {
            assert_abs_diff_eq!(summand(a, b), crate::cubature::xlog_ratio(a, b), epsilon = 1e-15);
        }
    }

    #[test]
    fn comonotone_data_rejects_product() {
        let data: Vec<f64> = (0..100).flat_map(|i| [i as f64, i as f64]).collect();
        let rs = rank_with_random_ties(&data, 2, 0).unwrap();
        assert!(t_statistic(&rs, &CopulaModel::product(2)).unwrap() > 2.0239e-3);
        let cfg = GofConfig::default().with_reps(200).with_seed(3);
        let report = bootstrap_test(&data, 2, Family::Product, &cfg).unwrap();
        assert_eq!(report.p_value, 0.0);
        assert!(report.reject);
    }

    #[test]
    fn p_value_is_the_exceedance_ratio() {
        let data = CopulaModel::new(Family::Frank, 2, &[3.0]).unwrap().sample(60, 5).unwrap();
        let cfg = GofConfig::default().with_reps(100).with_seed(9);
        let r = bootstrap_test(data.as_slice(), 2, Family::Frank, &cfg).unwrap();
        let count = r.replicates.iter().filter(|&&t| t >= r.observed_t).count();
        assert_eq!(r.p_value, count as f64 / 100.0);
        assert_eq!(r.reject, r.observed_t >= r.percentile);
        let mut sorted = r.replicates.clone();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(r.percentile, sorted[94]);
    }

    #[test]
    fn results_do_not_depend_on_execution() {
        let data = CopulaModel::new(Family::Clayton, 2, &[2.0]).unwrap().sample(50, 1).unwrap();
        let seq = GofConfig::default().with_reps(100).with_exec(Execution::Sequential);
        let par = seq.with_exec(Execution::Parallel);
        let a = bootstrap_test(data.as_slice(), 2, Family::Clayton, &seq).unwrap();
        let b = bootstrap_test(data.as_slice(), 2, Family::Clayton, &par).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        assert!(GofConfig::default().with_reps(50).validate().is_err());
        assert!(GofConfig::default().with_reps(100).with_alpha(0.01).validate().is_err());
        assert!(GofConfig::default().with_alpha(1.0).validate().is_err());
        assert!(GofConfig::default().validate().is_ok());
    }

    #[test]
    fn uniform_monte_carlo_form_is_close_to_the_integral() {
        let data = CopulaModel::new(Family::Clayton, 2, &[2.0]).unwrap().sample(30, 4).unwrap();
        let rs = rank_with_random_ties(data.as_slice(), 2, 0).unwrap();
        let prod = CopulaModel::product(2);
        let form = StatisticForm::UniformMonteCarlo { points: 20_000, seed: 1 };
        let mc = t_statistic_with(&rs, &prod, &SurvivalTable::new(30), form, Execution::default()).unwrap();
        let exact =
            measures::cckl(&BetaCopula::new(&rs), &prod, &IntegrationConfig::for_dim(2).with_abs_tol(1e-6)).unwrap();
        assert!((mc - exact.value).abs() < 0.01 * exact.value.max(1e-3) + 5e-4, "{mc} vs {}", exact.value);
    }

    #[test]
    fn selection_sorts_and_marks_failures() {
        let data = CopulaModel::new(Family::Gaussian, 2, &[0.7]).unwrap().sample(80, 12).unwrap();
        let cfg = GofConfig::default().with_reps(100);
        let integ = IntegrationConfig::for_dim(2).with_abs_tol(1e-6);
        let out = select_copula(
            data.as_slice(),
            2,
            &[Family::Product, Family::MarshallOlkin, Family::Gaussian],
            &cfg,
            &integ,
        )
        .unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out[0].family, Family::Gaussian);
        assert_eq!(out[2].family, Family::MarshallOlkin);
        assert!(out[2].failure.is_some());
        assert!(out[0].cckl.as_ref().unwrap().value <= out[1].cckl.as_ref().unwrap().value);
    }
}
