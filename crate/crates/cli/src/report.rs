//! The JSON report printed by every subcommand.

use ccentropy::{CopulaModel, Family, MeasureKind};
use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs: Map<String, Value>,
    pub outputs: Map<String, Value>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(args: &[String]) -> Self {
        Report { command: args.join(" "), inputs: Map::new(), outputs: Map::new(), warnings: Vec::new() }
    }

    pub fn input(&mut self, key: &str, v: impl Serialize) -> serde_json::Result<()> {
        self.inputs.insert(key.into(), serde_json::to_value(v)?);
        Ok(())
    }

    pub fn output(&mut self, key: &str, v: impl Serialize) -> serde_json::Result<()> {
        self.outputs.insert(key.into(), serde_json::to_value(v)?);
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Notes on closed forms whose corrected version is in use.
pub fn measure_warnings(m: &CopulaModel, stat: MeasureKind) -> Vec<String> {
    let mut w = Vec::new();
    match (m.family(), stat) {
        (Family::Product, MeasureKind::Fcce(_)) if m.dim() >= 3 => w.push(
            "fcce of the product copula is Γ(r+k) / (Γ(k)·2^(r+k)); the form without Γ(k) is only valid for k = 2"
                .into(),
        ),
        (Family::Min, MeasureKind::Fcce(_)) => w.push(
            "fcce of the min copula uses Γ(r+1)/(x+2)^(r+1); exponent r+2 does not reduce to the entropy at r = 1"
                .into(),
        ),
        (Family::Fgm, MeasureKind::Ccigf(_)) => {
            w.push("FGM generating function uses the generalized binomial binom(s, x), not binom(s+x-1, x)".into())
        }
        (Family::MarshallOlkin, MeasureKind::Ccigf(_)) => {
            w.push("Marshall-Olkin generating function denominators include the +α₁ and +α₂ terms".into())
        }
        (Family::CuadrasAuge, MeasureKind::Cce) => {
            w.push("Cuadras-Augé entropy uses the inner sum Σ_{i≥j} 1/p(i)".into())
        }
        _ => {}
    }
    w
}

pub fn cckl_warnings(a: &CopulaModel, b: &CopulaModel) -> Vec<String> {
    let mut w = Vec::new();
    match (a.family(), b.family()) {
        (Family::LowerBoundW, Family::Product) => {
            w.push("CCKL(W : Π) = 1/18 since ∫W ln(W/Π) = -1/36 (W ≤ Π pointwise); 1/9 is not attained".into())
        }
        (Family::Product, Family::Min) => w.push("CCKL(Π : M) uses the corrected term k·β(2, k)".into()),
        (Family::CuadrasAuge, Family::Min) => {
            w.push("CCKL(Cuadras-Augé : M) uses the corrected terms k!/Πp(i) and k·β(2, k)".into())
        }
        _ => {}
    }
    w
}
