//! Embedded simulators against their analytical counterparts: the event
//! simulation of the loss queue vs Erlang B, the exact CTMC solve vs the
//! product form, and the slot simulation vs the contention fixed point.

use nru_offload::lbt::{solve_contention, BackoffParams, ContentionConfig};
use nru_offload::oracle::{exact_ctmc_resq, simulate_lbt, simulate_resq, SimControl};
use nru_offload::pmf::DiscretePmf;
use nru_offload::resq::{erlang_b, ClassSpec, GTable, QueueSpec};

fn main() {
    let ctl = SimControl::default();

    let spec = QueueSpec {
        k_max: 8,
        r_max: 8,
        service_rate: 1.0,
        classes: vec![ClassSpec {
            arrival_rate: 6.0,
            demand: DiscretePmf::delta(1),
        }],
    };
    let sim = simulate_resq(&spec, None, &ctl).unwrap();
    let exact = erlang_b(6.0, 8);
    println!(
        "loss queue (K=R=8, rho=6): sim {:.5} +- {:.5}, Erlang B {:.5}",
        sim.class_loss[0].estimate, sim.class_loss[0].half_width, exact
    );

    // mixed demands: exact CTMC solve vs the product-form table
    let mixed = QueueSpec {
        k_max: 3,
        r_max: 4,
        service_rate: 1.0,
        classes: vec![ClassSpec {
            arrival_rate: 1.3,
            demand: DiscretePmf::new(vec![0.0, 0.5, 0.3, 0.2]).unwrap(),
        }],
    };
    let ctmc = exact_ctmc_resq(&mixed).unwrap();
    let table = GTable::build(&mixed).unwrap();
    let marg = ctmc.kr_marginal();
    let mut tv = 0.0;
    for k in 0..=mixed.k_max {
        for r in 0..=mixed.r_max {
            tv += (marg[k][r] - table.stationary(k, r, mixed.k_max, mixed.r_max)).abs();
        }
    }
    println!(
        "exact CTMC vs product form (K=3, R=4, mixed demands): TV = {:.2e} over {} states",
        tv / 2.0,
        ctmc.states.len()
    );

    let cfg = ContentionConfig {
        wifi: BackoffParams { initial_window: 16, max_retries: 3 },
        nru: BackoffParams { initial_window: 16, max_retries: 3 },
        n_wifi: 5.0,
        n_nru: 5.0,
        blockage_prob: 0.1,
        self_in_collision: false,
    };
    let sol = solve_contention(&cfg).unwrap();
    let lbt = simulate_lbt(5, 5, &cfg, &ctl).unwrap();
    println!(
        "contention (5+5): sim pi_N {:.5} +- {:.5}, fixed point {:.5}",
        lbt.pi_nru.estimate, lbt.pi_nru.half_width, sol.pi_nru
    );
}
