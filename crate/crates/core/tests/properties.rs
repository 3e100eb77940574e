//! Structural invariants checked over randomized inputs.

use nru_offload::chanstat::{sinr_cdf_no_fading, Region, StateParams};
use nru_offload::config::AppConfig;
use nru_offload::geometry::blockage_probability;
use nru_offload::lbt::{
    retry_distribution, transmission_probability, transmission_probability_closed_form,
    BackoffParams,
};
use nru_offload::pmf::DiscretePmf;
use nru_offload::resq::{
    class_loss, class_loss_direct, erlang_b, make_strategy_split, ClassSpec, GTable, QueueSpec,
    SplitPolicy,
};
use proptest::prelude::*;

fn small_pmf() -> impl Strategy<Value = DiscretePmf> {
    prop::collection::vec(0.0f64..1.0, 1..6).prop_filter_map("needs positive mass", |w| {
        let total: f64 = w.iter().sum();
        if total <= 0.0 {
            return None;
        }
        DiscretePmf::normalized(w).ok()
    })
}

proptest! {
    #[test]
    fn blockage_monotone_in_distance(r1 in 0.0f64..200.0, dr in 0.0f64..200.0) {
        let dep = AppConfig::default().scenario().unwrap().deployment;
        let a = blockage_probability(r1, &dep, dep.bs_height).unwrap();
        let b = blockage_probability(r1 + dr, &dep, dep.bs_height).unwrap();
        prop_assert!(b >= a - 1e-15);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn blockage_monotone_in_density(r in 1.0f64..200.0, lam in 0.01f64..3.0, dl in 0.0f64..3.0) {
        let mut dep = AppConfig::default().scenario().unwrap().deployment;
        dep.blocker_density = lam;
        let a = blockage_probability(r, &dep, dep.bs_height).unwrap();
        dep.blocker_density = lam + dl;
        let b = blockage_probability(r, &dep, dep.bs_height).unwrap();
        prop_assert!(b >= a - 1e-15);
    }

    #[test]
    fn sinr_cdf_monotone_and_bounded(x in -40.0f64..120.0, dx in 0.0f64..40.0, r in 10.0f64..300.0) {
        let cfg = AppConfig::default();
        let scn = cfg.scenario().unwrap();
        let region = Region::disk(r).unwrap();
        let state = StateParams::los(&scn.nr).unwrap();
        let dh = scn.deployment.height_delta();
        let a = sinr_cdf_no_fading(x, &region, &state, dh);
        let b = sinr_cdf_no_fading(x + dx, &region, &state, dh);
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(b >= a - 1e-12);
    }

    #[test]
    fn g_table_matches_direct_sum(
        k_max in 1usize..8,
        r_extra in 0usize..8,
        rate in 0.1f64..8.0,
        demand in small_pmf(),
    ) {
        let r_max = k_max + r_extra;
        let spec = QueueSpec {
            k_max,
            r_max,
            service_rate: 1.0,
            classes: vec![ClassSpec { arrival_rate: rate, demand: demand.clone() }],
        };
        let table = GTable::build(&spec).unwrap();
        let a = class_loss(&table, &demand, k_max, r_max);
        let b = class_loss_direct(&table, &demand, k_max, r_max);
        prop_assert!((a - b).abs() < 1e-10, "recursion {a} vs direct {b}");
    }

    #[test]
    fn erlang_b_special_case(k in 1usize..30, rho in 0.1f64..20.0) {
        let spec = QueueSpec {
            k_max: k,
            r_max: k,
            service_rate: 1.0,
            classes: vec![ClassSpec { arrival_rate: rho, demand: DiscretePmf::delta(1) }],
        };
        let table = GTable::build(&spec).unwrap();
        let loss = class_loss(&table, &spec.classes[0].demand, k, k);
        prop_assert!((loss - erlang_b(rho, k)).abs() < 1e-12);
    }

    #[test]
    fn split_partitions_demand(demand in small_pmf(), threshold in 0usize..6) {
        for policy in [
            SplitPolicy::FatOffload { threshold },
            SplitPolicy::SlimOffload { threshold },
        ] {
            let split = make_strategy_split(policy, &demand).unwrap();
            prop_assert!((0.0..=1.0).contains(&split.licensed_fraction));
            // the fraction-weighted mixture of the two parts is the original
            for j in 0..=demand.support_max() {
                let lic = split.licensed_demand.as_ref().map_or(0.0, |d| d.get(j));
                let div = split.diverted_demand.as_ref().map_or(0.0, |d| d.get(j));
                let mixed = split.licensed_fraction * lic
                    + (1.0 - split.licensed_fraction) * div;
                prop_assert!((mixed - demand.get(j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn transmission_probability_forms_agree(theta in 0.0f64..1.0, w_exp in 1u32..8, t in 0u32..6) {
        prop_assume!((theta - 0.5).abs() > 1e-6);
        let params = BackoffParams { initial_window: 1 << w_exp, max_retries: t };
        let a = transmission_probability(theta, &params).unwrap();
        let b = transmission_probability_closed_form(theta, &params).unwrap();
        prop_assert!((a - b).abs() < 1e-9, "direct {a} vs closed {b}");
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn retry_distribution_is_a_pmf(theta in 0.0f64..1.0, t in 0u32..8) {
        let d = retry_distribution(theta, t).unwrap();
        let total: f64 = d.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(d.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn convolution_preserves_mass_and_mean(a in small_pmf(), b in small_pmf()) {
        let c = a.convolve(&b);
        let total: f64 = (0..=c.support_max()).map(|j| c.get(j)).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        prop_assert!((c.mean() - a.mean() - b.mean()).abs() < 1e-9);
    }
}
