use gpd_elcr_core::el_core::el_ratio;
use gpd_elcr_core::models::{extract_excesses, sample, GpdParams, ModelSpec};
use gpd_elcr_core::profile_ci::hill_estimator;
use gpd_elcr_core::rng::stream;
use gpd_elcr_core::statfun::{chi2_quantile, fisher_critical, Probability};
use gpd_elcr_core::zhang::{sigma_matrix, wald_stat, zhang_fit};
use proptest::prelude::*;

fn model() -> impl Strategy<Value = ModelSpec> {
    prop_oneof![
        (0.1f64..2.0, 0.1f64..10.0).prop_map(|(g, s)| ModelSpec::gpd(g, s).unwrap()),
        (0.1f64..2.0).prop_map(|g| ModelSpec::frechet(g).unwrap()),
        (0.3f64..3.0, 0.3f64..3.0).prop_map(|(l, t)| ModelSpec::burr(l, t).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quantile_cdf_round_trip(m in model(), u in 0.001f64..0.999) {
        let x = m.quantile(u);
        prop_assert!((m.cdf(x) - u).abs() <= 1e-10);
    }

    #[test]
    fn mele_has_zero_statistic(m in model(), seed in any::<u64>(), k in 30usize..300) {
        let data = sample(&m, 1000, &mut stream(seed, 0));
        let ys = extract_excesses(&data, k).unwrap().excesses;
        if let Ok(fit) = zhang_fit(&ys, -0.5) {
            let l = el_ratio(&ys, fit.params.gamma, fit.params.sigma, -0.5).unwrap();
            prop_assert!(l <= 1e-8, "l = {}", l);
        }
    }

    #[test]
    fn el_ratio_nonnegative_and_order_free(seed in any::<u64>(), g in 0.2f64..2.0, s in 0.2f64..5.0) {
        let ys = sample(&ModelSpec::gpd(1.0, 1.0).unwrap(), 60, &mut stream(seed, 1));
        let l = el_ratio(&ys, g, s, -0.5).unwrap();
        prop_assert!(l >= 0.0);
        let mut rev = ys.clone();
        rev.reverse();
        let l2 = el_ratio(&rev, g, s, -0.5).unwrap();
        prop_assert!(l == l2 || (l - l2).abs() <= 1e-9 * l.max(1.0));
    }

    #[test]
    fn zhang_scale_equivariance(seed in any::<u64>(), c in 0.01f64..100.0) {
        let ys = sample(&ModelSpec::gpd(0.7, 1.0).unwrap(), 200, &mut stream(seed, 2));
        let scaled: Vec<f64> = ys.iter().map(|y| c * y).collect();
        if let (Ok(a), Ok(b)) = (zhang_fit(&ys, -0.5), zhang_fit(&scaled, -0.5)) {
            prop_assert!((a.params.gamma - b.params.gamma).abs() <= 1e-8 * a.params.gamma);
            prop_assert!((b.params.sigma / (c * a.params.sigma) - 1.0).abs() <= 1e-8);
        }
    }

    #[test]
    fn hill_scale_invariant(seed in any::<u64>(), c in 0.01f64..100.0, k in 10usize..200) {
        let xs = sample(&ModelSpec::frechet(0.5).unwrap(), 500, &mut stream(seed, 3));
        let scaled: Vec<f64> = xs.iter().map(|x| c * x).collect();
        let a = hill_estimator(&xs, k).unwrap();
        let b = hill_estimator(&scaled, k).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
    }

    #[test]
    fn fisher_exceeds_chi2(k in 5usize..100_000, level in 0.5f64..0.999) {
        let p = Probability::new(level).unwrap();
        for dim in [1u32, 2] {
            if k > dim as usize + 2 {
                prop_assert!(fisher_critical(k, p, dim).unwrap() > chi2_quantile(p, dim).unwrap());
            }
        }
    }

    #[test]
    fn sigma_matrix_positive_definite(g in 0.05f64..5.0, r in -3.0f64..0.45) {
        prop_assume!(r.abs() > 1e-3);
        let s = sigma_matrix(g, r).unwrap();
        prop_assert!(s.is_positive_definite());
        let est = GpdParams::new(g, 1.0).unwrap();
        prop_assert_eq!(wald_stat(est, est, 100, &s).unwrap(), 0.0);
    }

    #[test]
    fn probability_domain(v in -2.0f64..3.0) {
        prop_assert_eq!(Probability::new(v).is_ok(), v > 0.0 && v < 1.0);
    }
}
