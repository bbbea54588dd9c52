//! Randomized property checks over the crate's algebraic invariants.

use percreq_core::allocation::{allocate_partition_requirements, mileage_cost, PartitionBounds};
use percreq_core::behavior::{rss_min_distance, RssParams};
use percreq_core::scenario::compute_ttc;
use percreq_core::severity::{max_allowable_velocity_error, velocity_error_to_position_error};
use percreq_core::shapley::{exact_shapley, shap_kernel_weight};
use proptest::prelude::*;

proptest! {
    #[test]
    fn ttc_scale_covariant(gap in 0.1f64..500.0, v_r in 0.0f64..60.0, v_f in 0.0f64..60.0, k in 0.01f64..100.0) {
        let a = compute_ttc(gap, v_r, v_f).unwrap();
        let b = compute_ttc(k * gap, k * v_r, k * v_f).unwrap();
        if a.is_finite() {
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
        } else {
            prop_assert!(b.is_infinite());
        }
    }

    #[test]
    fn rss_distance_monotone(v_r in 0.0f64..45.0, v_f in 0.0f64..45.0, dv in 0.0f64..5.0) {
        let p = RssParams::default();
        prop_assert!(rss_min_distance(v_r + dv, v_f, &p) >= rss_min_distance(v_r, v_f, &p) - 1e-12);
        prop_assert!(rss_min_distance(v_r, v_f + dv, &p) <= rss_min_distance(v_r, v_f, &p) + 1e-12);
    }

    #[test]
    fn kernel_weight_symmetric_and_positive(m in 2usize..=16, s_raw in 1usize..=15) {
        let s = 1 + (s_raw % (m - 1).max(1));
        if s < m {
            let a = shap_kernel_weight(m, s).unwrap();
            let b = shap_kernel_weight(m, m - s).unwrap();
            prop_assert!(a > 0.0);
            prop_assert!((a - b).abs() <= 1e-15 * a.max(1.0));
        }
    }

    #[test]
    fn shapley_efficiency_on_random_linear_models(
        w in prop::collection::vec(-5.0f64..5.0, 2..6),
        x in prop::collection::vec(-2.0f64..2.0, 6),
        b in prop::collection::vec(-2.0f64..2.0, 6),
    ) {
        let m = w.len();
        let x = &x[..m];
        let b = &b[..m];
        let weights = w.clone();
        let model = move |v: &[f64]| v.iter().zip(&weights).map(|(a, c)| a * c).sum::<f64>();
        let ex = exact_shapley(&model, x, b, "y").unwrap();
        let total: f64 = ex.phi.iter().sum();
        prop_assert!((ex.phi0 + total - model(b)).abs() <= 1e-9);
        // Linear closed form per coordinate.
        for j in 0..m {
            prop_assert!((ex.phi[j] - -w[j] * (x[j] - b[j])).abs() <= 1e-9);
        }
    }

    #[test]
    fn velocity_error_mapping_inverts(e_v in 0.01f64..10.0, v_f in 1.0f64..45.0) {
        let p = RssParams::default();
        let pos = velocity_error_to_position_error(e_v, v_f, &p);
        let back = max_allowable_velocity_error(pos, v_f, &p);
        prop_assert!((back - e_v).abs() <= 1e-9 * e_v.max(1.0));
    }

    #[test]
    fn mileage_cost_terms_positive(p in prop::collection::vec(1e-9f64..0.9, 1..8), c in 0.01f64..0.99) {
        let cost = mileage_cost(&p, c).unwrap();
        prop_assert!(cost > 0.0);
        // Raising any rate lowers the cost.
        let mut cheaper = p.clone();
        cheaper[0] = (cheaper[0] * 1.5).min(0.95);
        if cheaper[0] > p[0] {
            prop_assert!(mileage_cost(&cheaper, c).unwrap() < cost);
        }
    }

    #[test]
    fn partition_allocation_invariants(
        e in prop::collection::vec(1e-6f64..0.3, 2..9),
        lambda_exp in -8.0f64..-4.0,
    ) {
        let lambda = 10f64.powf(lambda_exp);
        let alloc = allocate_partition_requirements(&e, lambda, 0.95, &PartitionBounds::default()).unwrap();
        for w in alloc.p.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-15);
        }
        for p in &alloc.p {
            prop_assert!(*p > 0.0 && *p < 1.0);
        }
        let used: f64 = alloc.p.iter().zip(&e).map(|(p, e)| p * e).sum();
        prop_assert!(used <= lambda * (1.0 + 1e-9));
    }
}
