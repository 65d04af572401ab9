use super::sobol::ScrambledSobol;
use super::{Estimate, IntegrationConfig};
use crate::error::{Error, Result};
use crate::exec::map_slice;
use crate::rng::{rng_from_seed, substream};

const RANDOMIZATIONS: usize = 16;
const START_POINTS: u64 = 1024;

pub(super) fn integrate<F>(f: &F, dim: usize, cfg: &IntegrationConfig) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let mut streams: Vec<(ScrambledSobol, f64)> = (0..RANDOMIZATIONS)
        .map(|r| {
            let mut rng = rng_from_seed(substream(cfg.qmc_seed, r as u64));
            (ScrambledSobol::new(dim, &mut rng), 0.0)
        })
        .collect();

    let mut n = 0u64;
    let mut step = START_POINTS;
    loop {
        streams = map_slice(cfg.exec, &streams, |(gen, sum)| {
            let mut gen = gen.clone();
            let mut p = vec![0.0; dim];
            let mut acc = 0.0;
            for _ in 0..step {
                gen.next_into(&mut p);
                acc += f(&p);
            }
            (gen, sum + acc)
        });
        n += step;
        let evals = n * RANDOMIZATIONS as u64;

        let means: Vec<f64> = streams.iter().map(|(_, s)| s / n as f64).collect();
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::NonFiniteIntegrand);
        }
        let r = RANDOMIZATIONS as f64;
        let value = means.iter().sum::<f64>() / r;
        let var = means.iter().map(|m| (m - value).powi(2)).sum::<f64>() / (r - 1.0);
        let error = 3.0 * (var / r).sqrt();
        let est = Estimate { value, error, evals };
        if error <= cfg.target(value) {
            return Ok(est);
        }
        step = n;
        if evals + step * RANDOMIZATIONS as u64 > cfg.max_evals {
            return Err(Error::ToleranceNotReached(est));
        }
    }
}
