use proptest::prelude::*;
use spde_lab::stats::ks_statistic;
use spde_lab::{localization_time, weighted_ecdf, SpaceTimeGrid, WeightedSample};

fn sample() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(-10.0f64..10.0, n),
            prop::collection::vec(0.01f64..5.0, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ecdf_is_monotone_and_bounded((values, weights) in sample(), q1 in -12.0f64..12.0, q2 in -12.0f64..12.0) {
        let s = WeightedSample::new(values, weights, "s").unwrap();
        let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
        let f_lo = weighted_ecdf(&s, lo).unwrap();
        let f_hi = weighted_ecdf(&s, hi).unwrap();
        prop_assert!((0.0..=1.0).contains(&f_lo));
        prop_assert!(f_lo <= f_hi + 1e-12);
        prop_assert!((weighted_ecdf(&s, 11.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ks_is_symmetric_and_scale_free((va, wa) in sample(), (vb, wb) in sample(), k in 0.1f64..100.0) {
        let a = WeightedSample::new(va.clone(), wa.clone(), "a").unwrap();
        let b = WeightedSample::new(vb, wb, "b").unwrap();
        let d_ab = ks_statistic(&a, &b);
        prop_assert!((d_ab - ks_statistic(&b, &a)).abs() < 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&d_ab));
        let scaled = WeightedSample::new(va, wa.iter().map(|w| w * k).collect(), "a").unwrap();
        prop_assert!((ks_statistic(&scaled, &b) - d_ab).abs() < 1e-9);
    }

    #[test]
    fn localization_is_monotone_in_level(increments in prop::collection::vec(0.0f64..2.0, 1..50), n1 in 0.1f64..30.0, n2 in 0.1f64..30.0) {
        let mut quad = vec![0.0];
        for inc in &increments {
            quad.push(quad.last().unwrap() + inc);
        }
        let (lo, hi) = if n1 <= n2 { (n1, n2) } else { (n2, n1) };
        let t_lo = localization_time(&quad, lo);
        let t_hi = localization_time(&quad, hi);
        prop_assert!(t_lo <= t_hi);
        prop_assert!(t_hi < quad.len());
        if quad[t_lo] < lo {
            prop_assert_eq!(t_lo, quad.len() - 1);
        }
    }

    #[test]
    fn grid_steps_cover_the_horizon(t_end in 0.01f64..5.0, n_t in 1usize..5000, n_x in 1usize..200, xl in -5.0f64..0.0, len in 0.1f64..10.0) {
        let g = SpaceTimeGrid::new(t_end, xl, xl + len, n_t, n_x).unwrap();
        prop_assert!((g.n_t as f64 * g.dt - t_end).abs() <= 1e-12 * t_end);
        prop_assert!((g.n_x as f64 * g.dx - len).abs() <= 1e-12 * len);
        prop_assert_eq!(g.stable, g.dt <= 0.5 * g.dx * g.dx);
        let stable = SpaceTimeGrid::stable_steps(t_end, xl, xl + len, n_x);
        prop_assert!(SpaceTimeGrid::new(t_end, xl, xl + len, stable, n_x).unwrap().stable);
    }
}
