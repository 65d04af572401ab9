use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Product,
    Min,
    LowerBoundW,
    Clayton,
    Frank,
    GumbelHougaard,
    Joe,
    Gaussian,
    Fgm,
    MarshallOlkin,
    CuadrasAuge,
    GumbelBarnett,
    #[serde(rename = "nelsen_4212")]
    Nelsen4212,
}

impl Family {
    pub const ALL: [Family; 13] = [
        Family::Product,
        Family::Min,
        Family::LowerBoundW,
        Family::Clayton,
        Family::Frank,
        Family::GumbelHougaard,
        Family::Joe,
        Family::Gaussian,
        Family::Fgm,
        Family::MarshallOlkin,
        Family::CuadrasAuge,
        Family::GumbelBarnett,
        Family::Nelsen4212,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Product => "product",
            Family::Min => "min",
            Family::LowerBoundW => "lower_bound_w",
            Family::Clayton => "clayton",
            Family::Frank => "frank",
            Family::GumbelHougaard => "gumbel_hougaard",
            Family::Joe => "joe",
            Family::Gaussian => "gaussian",
            Family::Fgm => "fgm",
            Family::MarshallOlkin => "marshall_olkin",
            Family::CuadrasAuge => "cuadras_auge",
            Family::GumbelBarnett => "gumbel_barnett",
            Family::Nelsen4212 => "nelsen_4212",
        }
    }

    /// Families that only exist as bivariate copulas.
    pub fn bivariate_only(self) -> bool {
        matches!(
            self,
            Family::LowerBoundW | Family::Fgm | Family::MarshallOlkin | Family::GumbelBarnett | Family::Nelsen4212
        )
    }

    pub fn is_archimedean(self) -> bool {
        matches!(self, Family::Clayton | Family::Frank | Family::GumbelHougaard | Family::Joe | Family::Nelsen4212)
    }

    /// Number of parameters expected for dimension `k`.
    pub fn param_count(self, k: usize) -> usize {
        match self {
            Family::Product | Family::Min | Family::LowerBoundW => 0,
            Family::MarshallOlkin => 2,
            Family::Gaussian | Family::CuadrasAuge => k * (k - 1) / 2,
            _ => 1,
        }
    }

    /// Human-readable parameter layout, used in CLI help and error messages.
    pub fn param_layout(self) -> &'static str {
        match self {
            Family::Product | Family::Min | Family::LowerBoundW => "none",
            Family::Clayton => "alpha",
            Family::Frank | Family::Joe | Family::Fgm | Family::GumbelBarnett | Family::Nelsen4212 => "theta",
            Family::GumbelHougaard => "phi",
            Family::Gaussian => "rho_12, rho_13, ..., rho_1k, rho_23, ... (strict upper triangle, row-major)",
            Family::MarshallOlkin => "alpha_1, alpha_2",
            Family::CuadrasAuge => "alpha_21, alpha_31, alpha_32, alpha_41, ... (row-major below the diagonal)",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase();
        Family::ALL.iter().copied().find(|f| f.name() == key).ok_or(Error::UnknownFamily(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
            assert_eq!(serde_json::to_string(&f).unwrap(), format!("\"{}\"", f.name()));
        }
        assert!("gumbel".parse::<Family>().is_err());
    }
}
