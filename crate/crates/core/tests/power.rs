mod common;

use common::{min_powers, relaxed_sum_rate};
use noma_cache_opt::{
    excess_from_transformed, excess_transform, min_power_closed_form, min_power_recurrence_oracle,
    optimal_excess_rate, strongest_user_excess, unicast_rate_relaxed, PowerSplit,
};
use proptest::prelude::*;

fn gains() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.2f64..30.0, 1..6).prop_map(|mut g| {
        g.sort_by(|a, b| b.total_cmp(a));
        g
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #[test]
    fn closed_form_matches_recurrence(r_min in 0.0f64..2.0, lambda in gains(), psi in 0.5f64..5.0) {
        let c = min_power_closed_form(r_min, &lambda, psi).unwrap();
        let o = min_power_recurrence_oracle(r_min, &lambda, psi).unwrap();
        prop_assert!(rel(c.rho_sum_min, o.rho_sum_min) <= 1e-10 || c.rho_sum_min == o.rho_sum_min);
        for (a, b) in c.rho_i_min.iter().zip(&o.rho_i_min) {
            prop_assert!(rel(*a, *b) <= 1e-10 || a == b);
        }
        let independent: f64 = min_powers(r_min, &lambda, psi).iter().sum();
        prop_assert!(rel(c.rho_sum_min, independent) <= 1e-10 || c.rho_sum_min == independent);
    }

    #[test]
    fn minimum_profile_hits_r_min(r_min in 0.01f64..2.0, lambda in gains(), psi in 0.5f64..5.0) {
        let p = min_power_closed_form(r_min, &lambda, psi).unwrap();
        let split = PowerSplit::new(0.0, p.rho_i_min.clone()).unwrap();
        for (i, &l) in lambda.iter().enumerate() {
            let r = unicast_rate_relaxed(&split, i, l, psi).unwrap();
            prop_assert!((r - r_min).abs() <= 1e-10);
        }
    }

    #[test]
    fn decomposition_and_transform_identities(
        r_min in 0.0f64..1.5,
        lambda in gains(),
        psi in 0.5f64..5.0,
        raw in prop::collection::vec(0.0f64..5.0, 5),
    ) {
        let k = lambda.len();
        let p = min_power_closed_form(r_min, &lambda, psi).unwrap();
        let delta = &raw[..k];
        let ex = excess_transform(delta, &p, &lambda, psi).unwrap();
        let total: f64 = delta.iter().sum();
        let e_total: f64 = ex.rho_e.iter().sum();
        prop_assert!((e_total - total).abs() <= 1e-9 * total.max(1.0));

        let rho_i: Vec<f64> = p.rho_i_min.iter().zip(delta).map(|(m, d)| m + d).collect();
        let split = PowerSplit::new(0.0, rho_i.clone()).unwrap();
        let mut sum = 0.0;
        for (i, &l) in lambda.iter().enumerate() {
            let r = unicast_rate_relaxed(&split, i, l, psi).unwrap();
            prop_assert!((r - r_min - ex.delta_r[i]).abs() <= 1e-9);
            // ρ^e_i ≥ 0 exactly when user i keeps r_min.
            if ex.rho_e[i] > 1e-9 {
                prop_assert!(r >= r_min);
            } else if ex.rho_e[i] < -1e-9 {
                prop_assert!(r < r_min);
            }
            sum += r;
        }
        prop_assert!((sum - (k as f64 * r_min + ex.total_delta_r())).abs() <= 1e-9);
        let back = excess_from_transformed(&ex.rho_e, r_min);
        for (a, b) in back.iter().zip(delta) {
            prop_assert!((a - b).abs() <= 1e-9 * b.max(1.0));
        }
        prop_assert!(ex.n_e.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn all_excess_to_strongest_dominates(
        r_min in 0.0f64..1.5,
        lambda in gains(),
        psi in 0.5f64..5.0,
        spare in 0.0f64..20.0,
        weights in prop::collection::vec(0.0f64..1.0, 5),
    ) {
        let k = lambda.len();
        let p = min_power_closed_form(r_min, &lambda, psi).unwrap();
        let rho_u = p.rho_sum_min + spare;
        let best = k as f64 * r_min + optimal_excess_rate(rho_u, &p, lambda[0], psi).unwrap();

        let w: f64 = weights[..k].iter().sum::<f64>().max(1e-12);
        let rho_e: Vec<f64> = weights[..k].iter().map(|x| spare * x / w).collect();
        let delta = excess_from_transformed(&rho_e, r_min);
        let rho_i: Vec<f64> = p.rho_i_min.iter().zip(&delta).map(|(m, d)| m + d).collect();
        prop_assert!(relaxed_sum_rate(&rho_i, &lambda, psi) <= best + 1e-10);

        let top = strongest_user_excess(rho_u, &p).unwrap();
        let rho_i: Vec<f64> = p.rho_i_min.iter().zip(&top).map(|(m, d)| m + d).collect();
        prop_assert!((rho_i.iter().sum::<f64>() - rho_u).abs() <= 1e-9 * rho_u.max(1.0));
        prop_assert!((relaxed_sum_rate(&rho_i, &lambda, psi) - best).abs() <= 1e-10 * best.max(1.0));
    }
}

#[test]
fn single_user_excess_rate() {
    let (r_min, l, psi, d) = (0.7, 3.0, 1.4, 2.5);
    let p = min_power_closed_form(r_min, &[l], psi).unwrap();
    let ex = excess_transform(&[d], &p, &[l], psi).unwrap();
    let want = (1.0 + d / (psi / l + p.rho_i_min[0])).log2();
    assert!((ex.delta_r[0] - want).abs() < 1e-14);
    assert!((optimal_excess_rate(p.rho_sum_min + d, &p, l, psi).unwrap() - want).abs() < 1e-14);
}

#[test]
fn zero_excess_gives_k_times_r_min() {
    let lambda = [8.0, 4.0, 2.0];
    let p = min_power_closed_form(0.4, &lambda, 1.3).unwrap();
    let ex = excess_transform(&[0.0; 3], &p, &lambda, 1.3).unwrap();
    assert!(ex.delta_r.iter().all(|&r| r == 0.0));
}

#[test]
fn minimum_power_increasing_and_convex_in_r_min() {
    let lambda = [10.0, 5.0, 1.0];
    let h = 0.01;
    let s: Vec<f64> = (0..=300)
        .map(|i| min_power_closed_form(i as f64 * h, &lambda, 1.2).unwrap().rho_sum_min)
        .collect();
    for w in s.windows(3) {
        assert!(w[1] > w[0]);
        assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-12);
    }
}
