//! Listen-before-talk contention: the two-technology fixed point, the
//! closed-form transmission probability against the direct sum, and the
//! non-monotone collision response to blocker density (population growth
//! competes with contention-window deepening).

use nru_offload::config::AppConfig;
use nru_offload::lbt::{
    solve_contention, transmission_probability, transmission_probability_closed_form,
    BackoffParams, ContentionConfig,
};
use nru_offload::pipeline::{evaluate_strategy, Strategy};

fn main() {
    let params = BackoffParams { initial_window: 16, max_retries: 3 };
    println!("transmission probability: direct sum vs closed form");
    for theta in [0.1, 0.3, 0.49, 0.51, 0.8] {
        let direct = transmission_probability(theta, &params).unwrap();
        let closed = transmission_probability_closed_form(theta, &params).unwrap();
        println!("  theta = {theta:.2}: {direct:.10} vs {closed:.10}");
    }

    let cfg = ContentionConfig {
        wifi: params,
        nru: params,
        n_wifi: 5.0,
        n_nru: 5.0,
        blockage_prob: 0.1,
        self_in_collision: false,
    };
    let sol = solve_contention(&cfg).unwrap();
    println!(
        "\nfixed point (5+5 stations): pi_N = {:.5}, pi_W = {:.5}, collision_N = {:.5} ({} iterations)",
        sol.pi_nru, sol.pi_wifi, sol.collision_nru, sol.iterations
    );

    // deployment-level collision vs blocker density: offloaded population
    // growth pushes collisions up before window deepening pulls them down
    println!("\nNR-U collision probability vs blocker density (baseline strategy):");
    let app = AppConfig::default();
    for lam in [0.05, 0.2, 0.4, 0.6, 0.8, 1.2, 2.0, 3.0] {
        let mut c = app.clone();
        c.deployment.blocker_density = lam;
        let scn = c.scenario().unwrap();
        let rep = evaluate_strategy(&scn, Strategy::Baseline).unwrap();
        println!("  lambda_B = {lam:4.2} /m: collision = {:.6}", rep.collision_prob);
    }
}
