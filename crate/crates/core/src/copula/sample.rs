use rand::Rng as _;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use super::archimedean::Generator;
use super::model::{CopulaModel, Kind, Point};
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, Rng};
use crate::special::{ln_beta, ln_gamma, norm_cdf};

/// `n × k` draws from a copula, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    seed: u64,
}

impl SampleMatrix {
    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>, seed: u64) -> Self {
        assert_eq!(data.len(), rows * cols);
        SampleMatrix { rows, cols, data, seed }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

/// Uniform on the open interval (0, 1).
#[inline]
fn open01(rng: &mut Rng) -> f64 {
    ((rng.random::<u64>() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn interior(u: f64) -> f64 {
    u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

impl CopulaModel {
    /// Draws `n` rows reproducibly from `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<SampleMatrix> {
        if n == 0 {
            return Err(Error::InvalidConfig("sample size must be at least 1".into()));
        }
        let mut rng = rng_from_seed(seed);
        let mut data = vec![0.0; n * self.dim()];
        self.sample_into(&mut rng, &mut data)?;
        Ok(SampleMatrix { rows: n, cols: self.dim(), data, seed })
    }

    /// Fills `out` (row-major, length a multiple of `dim`) from `rng`.
    pub fn sample_into(&self, rng: &mut Rng, out: &mut [f64]) -> Result<()> {
        let k = self.dim();
        if out.len() % k != 0 {
            return Err(Error::DimensionMismatch { expected: k, got: out.len() % k });
        }
        let sampler = Sampler::new(self)?;
        for row in out.chunks_exact_mut(k) {
            sampler.draw(rng, row);
            for x in row.iter_mut() {
                *x = interior(*x);
            }
        }
        Ok(())
    }
}

enum Sampler<'a> {
    Product,
    Min,
    W,
    ClaytonNegative(f64),
    FrankNegative(f64),
    Frailty(Generator, Frailty),
    Gaussian(&'a super::mvn::CorrelationMatrix),
    Fgm(f64),
}

enum Frailty {
    Gamma(Gamma<f64>),
    LogSeries(f64),
    PositiveStable(f64),
    Sibuya(f64),
}

impl<'a> Sampler<'a> {
    fn new(model: &'a CopulaModel) -> Result<Self> {
        Ok(match model.kind() {
            Kind::Product => Sampler::Product,
            Kind::Min => Sampler::Min,
            Kind::W => Sampler::W,
            Kind::Clayton(a) if *a < 0.0 => Sampler::ClaytonNegative(*a),
            Kind::Clayton(a) => Sampler::Frailty(
                Generator::Clayton(*a),
                Frailty::Gamma(
                    Gamma::new(1.0 / a, 1.0)
                        .map_err(|e| Error::ParamOutOfRange { family: "clayton", reason: e.to_string() })?,
                ),
            ),
            Kind::Archimedean(g) => match *g {
                Generator::Frank(t) if t < 0.0 => Sampler::FrankNegative(t),
                Generator::Frank(t) => Sampler::Frailty(*g, Frailty::LogSeries(t)),
                Generator::GumbelHougaard(phi) => Sampler::Frailty(*g, Frailty::PositiveStable(1.0 / phi)),
                Generator::Joe(t) => Sampler::Frailty(*g, Frailty::Sibuya(1.0 / t)),
                _ => return Err(Error::SamplerUnavailable(model.family().name())),
            },
            Kind::Gaussian(c) => Sampler::Gaussian(c),
            Kind::Fgm(t) => Sampler::Fgm(*t),
            _ => return Err(Error::SamplerUnavailable(model.family().name())),
        })
    }

    fn draw(&self, rng: &mut Rng, row: &mut [f64]) {
        match self {
            Sampler::Product => row.iter_mut().for_each(|x| *x = open01(rng)),
            Sampler::Min => {
                let u = open01(rng);
                row.iter_mut().for_each(|x| *x = u);
            }
            Sampler::W => {
                let u = open01(rng);
                row[0] = u;
                row[1] = 1.0 - u;
            }
            Sampler::ClaytonNegative(a) => {
                let (u, w) = (open01(rng), open01(rng));
                row[0] = u;
                row[1] = if *a == -1.0 {
                    1.0 - u
                } else {
                    let inner = u.powf(-a) * (w.powf(-a / (1.0 + a)) - 1.0) + 1.0;
                    inner.max(0.0).powf(-1.0 / a)
                };
            }
            Sampler::FrankNegative(t) => {
                let (u, w) = (open01(rng), open01(rng));
                let d = (-t).exp_m1();
                row[0] = u;
                row[1] = -(w * d / (w + (1.0 - w) * (-t * u).exp())).ln_1p() / t;
            }
            Sampler::Frailty(g, f) => {
                let v = f.draw(rng);
                for x in row.iter_mut() {
                    let e: f64 = Exp1.sample(rng);
                    *x = g.psi(e / v);
                }
            }
            Sampler::Gaussian(c) => {
                let k = row.len();
                let z: Point = (0..k).map(|_| -> f64 { StandardNormal.sample(rng) }).collect();
                for i in 0..k {
                    let s: f64 = (0..=i).map(|j| c.chol(i, j) * z[j]).sum();
                    row[i] = norm_cdf(s);
                }
            }
            Sampler::Fgm(t) => {
                let (u, w) = (open01(rng), open01(rng));
                let a = t * (1.0 - 2.0 * u);
                let b = 1.0 + a;
                row[0] = u;
                row[1] = 2.0 * w / (b + (b * b - 4.0 * a * w).max(0.0).sqrt());
            }
        }
    }
}

impl Frailty {
    fn draw(&self, rng: &mut Rng) -> f64 {
        match *self {
            Frailty::Gamma(ref g) => g.sample(rng).max(f64::MIN_POSITIVE),
            Frailty::LogSeries(theta) => log_series(rng, theta),
            Frailty::PositiveStable(a) => positive_stable(rng, a),
            Frailty::Sibuya(a) => sibuya(rng, a),
        }
    }
}

/// Logarithmic-series variate with `p = 1 − e^{−θ}` (Kemp's LK method).
fn log_series(rng: &mut Rng, theta: f64) -> f64 {
    let p = -(-theta).exp_m1();
    let u2 = open01(rng);
    if u2 > p {
        return 1.0;
    }
    let q = -(-theta * open01(rng)).exp_m1();
    if u2 < q * q {
        let v = (1.0 + u2.ln() / q.ln()).floor();
        return if v.is_finite() { v.max(1.0) } else { 1.0 };
    }
    if u2 > q {
        1.0
    } else {
        2.0
    }
}

/// Positive stable variate with Laplace transform `exp(−t^a)`, `a ∈ (0,1]`
/// (Kanter's representation).
fn positive_stable(rng: &mut Rng, a: f64) -> f64 {
    if a >= 1.0 {
        return 1.0;
    }
    let th = std::f64::consts::PI * open01(rng);
    let w: f64 = Exp1.sample(rng);
    let ratio = (a * th).sin().powf(a) * ((1.0 - a) * th).sin().powf(1.0 - a) / th.sin();
    let big_a = ratio.powf(1.0 / (1.0 - a));
    (big_a / w).powf((1.0 - a) / a)
}

/// Sibuya variate with `P(V > n) = 1 / (n B(n, 1 − a))`, `a ∈ (0,1]`.
fn sibuya(rng: &mut Rng, a: f64) -> f64 {
    let u = open01(rng);
    if u <= a {
        return 1.0;
    }
    let ginv = ((1.0 - u).ln() + ln_gamma(1.0 - a)) * (-1.0 / a);
    let ginv = ginv.exp();
    let fg = ginv.floor().max(1.0);
    if !ginv.is_finite() || ginv > 1e15 {
        return fg;
    }
    let survival = (-(fg.ln() + ln_beta(fg, 1.0 - a))).exp();
    if 1.0 - u < survival {
        ginv.ceil()
    } else {
        fg
    }
}
