use ccentropy::cubature::IntegrationConfig;
use ccentropy::empirical::{rank_with_random_ties, BetaCopula};
use ccentropy::fit::{self, nearest_correlation, param_to_tau, tau_to_param};
use ccentropy::gof::{percentile_index, t_statistic};
use ccentropy::measures;
use ccentropy::{CopulaCdf, CopulaModel, CorrelationMatrix, Family};
use proptest::prelude::*;

fn params_for(f: Family, k: usize, u: [f64; 3]) -> Vec<f64> {
    match f {
        Family::Product | Family::Min | Family::LowerBoundW => vec![],
        Family::Clayton if k == 2 => vec![-0.9 + 8.9 * u[0] + 1e-3],
        Family::Clayton => vec![0.05 + 8.0 * u[0]],
        Family::Frank if k == 2 => vec![if u[0] < 0.5 { -20.0 * u[0] - 0.1 } else { 20.0 * (u[0] - 0.5) + 0.1 }],
        Family::Frank => vec![0.1 + 15.0 * u[0]],
        Family::GumbelHougaard | Family::Joe | Family::Nelsen4212 => vec![1.0 + 7.0 * u[0]],
        Family::Gaussian if k == 2 => vec![-0.98 + 1.96 * u[0]],
        Family::Gaussian => {
            let r = 0.9 * u[0];
            vec![r, r * u[1], r * u[2]]
        }
        Family::Fgm => vec![-1.0 + 2.0 * u[0]],
        Family::MarshallOlkin => vec![u[0], u[1]],
        Family::CuadrasAuge => (0..k * (k - 1) / 2).map(|i| u[i % 3]).collect(),
        Family::GumbelBarnett => vec![0.01 + 0.99 * u[0]],
    }
}

fn any_model() -> impl Strategy<Value = CopulaModel> {
    (0..Family::ALL.len(), prop::bool::ANY, [0.0..1.0f64, 0.0..1.0, 0.0..1.0]).prop_map(|(i, three, u)| {
        let f = Family::ALL[i];
        let k = if three && !f.bivariate_only() { 3 } else { 2 };
        CopulaModel::new(f, k, &params_for(f, k, u)).expect("strategy yields valid parameters")
    })
}

fn point(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..=1.0f64, k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn cdf_is_within_frechet_bounds(m in any_model(), u in point(3)) {
        let u = &u[..m.dim()];
        let c = m.cdf(u).unwrap();
        let hi = u.iter().cloned().fold(1.0, f64::min);
        let lo = (u.iter().sum::<f64>() - (m.dim() as f64 - 1.0)).max(0.0);
        prop_assert!(c >= lo - 1e-8 && c <= hi + 1e-8, "{c} not in [{lo}, {hi}]");
    }

    #[test]
    fn cdf_is_grounded_with_uniform_margins(m in any_model(), x in 0.0..=1.0f64, j in 0usize..3) {
        let k = m.dim();
        let j = j % k;
        let mut u = vec![1.0; k];
        u[j] = x;
        prop_assert!((m.cdf(&u).unwrap() - x).abs() < 1e-8);
        let mut v = vec![0.7; k];
        v[j] = 0.0;
        prop_assert_eq!(m.cdf(&v).unwrap(), 0.0);
    }

    #[test]
    fn bivariate_cdf_is_two_increasing(m in any_model(), a in point(2), b in point(2)) {
        prop_assume!(m.dim() == 2);
        let (u1, u2) = (a[0].min(b[0]), a[0].max(b[0]));
        let (v1, v2) = (a[1].min(b[1]), a[1].max(b[1]));
        let vol = m.cdf([u2, v2]).unwrap() - m.cdf([u1, v2]).unwrap() - m.cdf([u2, v1]).unwrap() + m.cdf([u1, v1]).unwrap();
        prop_assert!(vol >= -1e-8, "negative rectangle mass {vol}");
    }

    #[test]
    fn samples_lie_in_open_cube(m in any_model(), seed in any::<u64>()) {
        let s = match m.sample(20, seed) {
            Ok(s) => s,
            Err(ccentropy::Error::SamplerUnavailable(_)) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert!(s.as_slice().iter().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn beta_copula_is_a_copula(seed in any::<u64>(), n in 2usize..40, u in point(2), x in 0.0..=1.0f64) {
        let m = CopulaModel::new(Family::Clayton, 2, &[1.5]).unwrap();
        let s = m.sample(n, seed).unwrap();
        let rs = rank_with_random_ties(s.as_slice(), 2, seed).unwrap();
        let bc = BetaCopula::new(&rs);
        prop_assert!((bc.eval(&[x, 1.0]) - x).abs() < 1e-12);
        prop_assert!((bc.eval(&[1.0, x]) - x).abs() < 1e-12);
        let c = bc.eval(&u);
        prop_assert!(c <= u[0].min(u[1]) + 1e-12 && c >= (u[0] + u[1] - 1.0).max(0.0) - 1e-12);
    }

    #[test]
    fn statistic_is_rank_invariant(seed in any::<u64>(), shift in -5.0..5.0f64) {
        let m = CopulaModel::new(Family::Gaussian, 2, &[0.5]).unwrap();
        let s = m.sample(40, seed).unwrap();
        let warped: Vec<f64> = s.as_slice().iter().enumerate()
            .map(|(i, &x)| if i % 2 == 0 { (x.ln() + shift).exp() } else { x * x * x - shift })
            .collect();
        let a = rank_with_random_ties(s.as_slice(), 2, 0).unwrap();
        let b = rank_with_random_ties(&warped, 2, 0).unwrap();
        let (ta, tb) = (t_statistic(&a, &m).unwrap(), t_statistic(&b, &m).unwrap());
        prop_assert_eq!(ta, tb);
        prop_assert!(ta >= 0.0);
    }

    #[test]
    fn tau_inversion_round_trips(i in 0usize..5, t in -0.9..0.9f64) {
        let f = [Family::Clayton, Family::Frank, Family::GumbelHougaard, Family::Joe, Family::Fgm][i];
        let tau = match f {
            Family::GumbelHougaard | Family::Joe => t.abs(),
            Family::Fgm => t * 2.0 / 9.0 / 0.9,
            _ => t,
        };
        prop_assume!(tau.abs() > 1e-3);
        let p = tau_to_param(f, 2, tau).unwrap();
        prop_assert!((param_to_tau(f, p).unwrap() - tau).abs() < 1e-7, "{f}: τ {tau} → {p}");
    }

    #[test]
    fn nearest_correlation_is_valid(a in -1.0..1.0f64, b in -1.0..1.0f64, c in -1.0..1.0f64) {
        let full = nearest_correlation(3, &[1.0, a, b, a, 1.0, c, b, c, 1.0]);
        let upper = [full[1], full[2], full[5]];
        let m = CorrelationMatrix::from_upper(3, &upper);
        prop_assert!(m.is_ok(), "{:?}", full);
        for i in 0..3 {
            prop_assert!((full[i * 3 + i] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn percentile_index_is_in_range(m in 100usize..100_000, alpha in 0.001..0.5f64) {
        let i = percentile_index(m, alpha);
        prop_assert!(i >= 1 && i <= m);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cckl_is_nonnegative(a in any_model(), b in any_model()) {
        prop_assume!(a.dim() == 2 && b.dim() == 2);
        let cfg = IntegrationConfig::for_dim(2).with_abs_tol(1e-6);
        match measures::cckl(&a, &b, &cfg) {
            Ok(e) => prop_assert!(e.value >= -3.0 * e.error.max(1e-6)),
            Err(ccentropy::Error::ToleranceNotReached(e)) => prop_assert!(e.value >= -3.0 * e.error),
            Err(ccentropy::Error::DivergenceInfinite) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn fitted_gaussian_is_consistent(seed in any::<u64>(), rho in -0.8..0.8f64) {
        let m = CopulaModel::new(Family::Gaussian, 2, &[rho]).unwrap();
        let s = m.sample(2000, seed).unwrap();
        let r = fit::estimate(Family::Gaussian, s.as_slice(), 2).unwrap();
        // sd of the estimate is about 0.024 at N = 2000
        prop_assert!((r.model.params()[0] - rho).abs() < 0.12);
    }
}
