//! Copula families: validation, CDF evaluation and exact sampling.

mod archimedean;
mod family;
mod model;
mod mvn;
mod sample;

pub use archimedean::Generator;
pub use family::Family;
pub use model::{CopulaCdf, CopulaModel, Mixture, UnitPoint};
#[allow(unused_imports)]
pub(crate) use model::{Kind, Point};
pub use mvn::{bvn_cdf, mvn_cdf, CorrelationMatrix};
pub use sample::SampleMatrix;

use crate::error::Result;

/// Builds a validated model; see [`CopulaModel::new`].
pub fn validate(family: Family, dim: usize, params: &[f64]) -> Result<CopulaModel> {
    CopulaModel::new(family, dim, params)
}
