//! Archimedean generators `ψ` with `C(u) = ψ(Σ ψ⁻¹(u_i))`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "param", rename_all = "snake_case")]
pub enum Generator {
    Clayton(f64),
    Frank(f64),
    GumbelHougaard(f64),
    Joe(f64),
    Nelsen4212(f64),
}

impl Generator {
    /// `ψ(t)` for `t ≥ 0`, with `ψ(0) = 1` and `ψ(∞) = 0`.
    pub fn psi(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        if t == f64::INFINITY {
            return 0.0;
        }
        let v = match *self {
            Generator::Clayton(a) => {
                let base = 1.0 + a * t;
                if base <= 0.0 {
                    0.0
                } else {
                    base.powf(-1.0 / a)
                }
            }
            Generator::Frank(th) if th > 0.0 => -(-(-t).exp_m1() + (-th - t).exp()).ln() / th,
            Generator::Frank(th) => -((-t).exp() * (-th).exp_m1()).ln_1p() / th,
            Generator::GumbelHougaard(phi) => (-t.powf(1.0 / phi)).exp(),
            Generator::Joe(th) => 1.0 - (-(-t).exp_m1()).powf(1.0 / th),
            Generator::Nelsen4212(th) => 1.0 / (1.0 + t.powf(1.0 / th)),
        };
        v.clamp(0.0, 1.0)
    }

    /// `ψ⁻¹(x)` for `x ∈ [0,1]`; `ψ⁻¹(1) = 0`, `ψ⁻¹(0)` is the generator's
    /// (possibly infinite) endpoint.
    pub fn psi_inv(&self, x: f64) -> f64 {
        if x >= 1.0 {
            return 0.0;
        }
        match *self {
            Generator::Clayton(a) => {
                if x <= 0.0 {
                    return if a > 0.0 { f64::INFINITY } else { -1.0 / a };
                }
                (x.powf(-a) - 1.0) / a
            }
            Generator::Frank(th) => {
                if x <= 0.0 {
                    return f64::INFINITY;
                }
                if th > 0.0 {
                    log1mexp(th) - log1mexp(th * x)
                } else {
                    -((-th * x).exp_m1() / (-th).exp_m1()).ln()
                }
            }
            Generator::GumbelHougaard(phi) => {
                if x <= 0.0 {
                    return f64::INFINITY;
                }
                (-x.ln()).powf(phi)
            }
            Generator::Joe(th) => {
                if x <= 0.0 {
                    return f64::INFINITY;
                }
                -(-(1.0 - x).powf(th)).ln_1p()
            }
            Generator::Nelsen4212(th) => {
                if x <= 0.0 {
                    return f64::INFINITY;
                }
                (1.0 / x - 1.0).powf(th)
            }
        }
        .max(0.0)
    }

    /// `ψ(Σ ψ⁻¹(u_i))`.
    pub fn copula(&self, u: &[f64]) -> f64 {
        let t: f64 = u.iter().map(|&x| self.psi_inv(x)).sum();
        self.psi(t)
    }

    /// Kendall's tau of the bivariate copula built from this generator,
    /// where a closed form exists.
    pub fn kendall_tau(&self) -> Option<f64> {
        match *self {
            Generator::Clayton(a) => Some(a / (a + 2.0)),
            Generator::GumbelHougaard(phi) => Some(1.0 - 1.0 / phi),
            _ => None,
        }
    }
}

/// `ln(1 − e^{−z})` for `z > 0`.
fn log1mexp(z: f64) -> f64 {
    if z > std::f64::consts::LN_2 {
        (-(-z).exp()).ln_1p()
    } else {
        (-(-z).exp_m1()).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn all() -> Vec<Generator> {
        vec![
            Generator::Clayton(1.0),
            Generator::Clayton(-0.5),
            Generator::Clayton(7.5),
            Generator::Frank(3.0),
            Generator::Frank(-4.0),
            Generator::Frank(25.0),
            Generator::GumbelHougaard(1.0),
            Generator::GumbelHougaard(2.0),
            Generator::GumbelHougaard(6.0),
            Generator::Joe(1.0),
            Generator::Joe(3.0),
            Generator::Nelsen4212(1.0),
            Generator::Nelsen4212(2.0),
        ]
    }

    #[test]
    fn reference_values() {
        let c = Generator::Clayton(1.0);
        assert_abs_diff_eq!(c.psi(3.0), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(c.psi_inv(0.5), 1.0, epsilon = 1e-15);
        let g = Generator::GumbelHougaard(2.0);
        assert_abs_diff_eq!(g.psi(1.0), (-1f64).exp(), epsilon = 1e-15);
        let n = Generator::Nelsen4212(2.0);
        for &(u, v) in &[(0.3, 0.6), (0.9, 0.1), (0.5, 0.5)] {
            let direct = 1.0 / (1.0 + ((1.0 / u - 1.0f64).powi(2) + (1.0 / v - 1.0f64).powi(2)).sqrt());
            assert_abs_diff_eq!(n.copula(&[u, v]), direct, epsilon = 1e-14);
        }
    }

    #[test]
    fn round_trip() {
        for g in all() {
            assert_eq!(g.psi(0.0), 1.0);
            let mut x = 1e-10;
            while x <= 1.0 {
                let back = g.psi(g.psi_inv(x));
                assert!((back - x).abs() <= 1e-12, "{g:?} x={x} back={back}");
                x *= 1.37;
            }
        }
    }

    #[test]
    fn psi_is_nonincreasing() {
        for g in all() {
            let mut prev = 1.0;
            for i in 0..400 {
                let v = g.psi(i as f64 * 0.05);
                assert!(v <= prev + 1e-15, "{g:?}");
                prev = v;
            }
        }
    }
}
