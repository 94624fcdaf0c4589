use gibbs_interp::cluster::{BoxDomain, ClusterEngine, Mode};
use gibbs_interp::oracle::{self, connective_bound, monte_carlo_ck, partition_function_direct, tonks_cluster_coefficients};
use gibbs_interp::potential::{temperedness_constant, Potential};
use proptest::prelude::*;

#[test]
fn monte_carlo_seeds_agree() {
    let disks = Potential::hard_sphere(2, 1.0).unwrap();
    let domain = BoxDomain::for_potential(2, &disks).unwrap();
    let (a, sa) = monte_carlo_ck(&disks, &domain, 2, 100_000, 1).unwrap();
    let (b, sb) = monte_carlo_ck(&disks, &domain, 2, 100_000, 2).unwrap();
    assert_ne!(a, b);
    assert!((a - b).abs() <= 6.0 * (sa * sa + sb * sb).sqrt(), "{a} vs {b}");
}

#[test]
fn truncated_cluster_series_matches_direct_quadrature() {
    let rods = Potential::hard_sphere(1, 0.5).unwrap();
    let domain = BoxDomain::for_potential(1, &rods).unwrap();
    let volume = domain.volume();
    let lambda: f64 = 0.05;
    let coeffs = ClusterEngine::default().series(&rods, &domain, &[1e-12, 0.01, 0.3], Mode::Certified).unwrap();
    let mut series = 0.0;
    let mut series_err = 0.0;
    let mut fact = 1.0;
    for c in &coeffs {
        fact *= c.k as f64;
        series += lambda.powi(c.k as i32) * c.value * volume / fact;
        series_err += lambda.powi(c.k as i32) * c.error_bound * volume / fact;
    }
    // The first omitted term, with the closed-form C_4, bounds the alternating tail.
    let c4 = tonks_cluster_coefficients(volume, 0.5, 4)[3];
    let tail = 2.0 * lambda.powi(4) * c4.abs() * volume / 24.0;
    let direct = partition_function_direct(&rods, &domain, lambda, 5, 1.0 / 32.0).unwrap();
    let (lo, hi) = direct.log_interval();
    assert!(series + series_err + tail >= lo && series - series_err - tail <= hi, "{series} vs [{lo}, {hi}]");
}

#[test]
fn first_chain_integral_is_the_temperedness_constant() {
    for p in [Potential::hard_sphere(1, 1.0).unwrap(), Potential::hard_sphere(2, 1.0).unwrap()] {
        let w = 1.0 / 64.0;
        let v1 = connective_bound(&p, 1, w).unwrap();
        let c = temperedness_constant(&p, w).unwrap();
        assert!((v1.estimate - c.estimate).abs() <= v1.error_bound + c.error_bound);
    }
}

#[test]
fn zero_potential_threshold_is_unbounded() {
    let t = oracle::certified_lambda_threshold(&Potential::zero(2).unwrap(), 1, 0.1).unwrap();
    assert!(t.lambda.is_infinite());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn direct_partition_function_is_monotone_and_bounded(r in 0.2f64..0.6, l1 in 0.01f64..0.5, dl in 0.01f64..0.5) {
        let rods = Potential::hard_sphere(1, r).unwrap();
        let domain = BoxDomain::for_potential(1, &rods).unwrap();
        let a = partition_function_direct(&rods, &domain, l1, 4, 1.0 / 8.0).unwrap();
        let b = partition_function_direct(&rods, &domain, l1 + dl, 4, 1.0 / 8.0).unwrap();
        prop_assert!(a.value <= b.value);
        let volume = domain.volume();
        for z in [&a, &b] {
            let (lo, _) = z.log_interval();
            prop_assert!(lo >= 0.0);
        }
        prop_assert!(a.log_interval().0 <= l1 * volume);
        for (m, integral) in a.integrals.iter().enumerate() {
            prop_assert!(*integral >= 0.0 && *integral <= volume.powi(m as i32) * (1.0 + 1e-12));
        }
    }
}
