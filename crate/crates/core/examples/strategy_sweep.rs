//! Strategy comparison over the base station density grid: eventual session
//! loss for baseline overflow, fat offloading, and slim offloading, plus the
//! offloaded load each strategy pushes onto the unlicensed band.

use nru_offload::config::AppConfig;
use nru_offload::pipeline::{density_sweep, Strategy};

fn main() {
    let cfg = AppConfig::default();
    let scn = cfg.scenario().expect("default scenario");
    let result = density_sweep(&scn, &cfg.sweep.densities, &Strategy::ALL, Some(0.2)).unwrap();

    println!(
        "{:>10} {:>10} {:>10} {:>10} {:>12}",
        "density", "baseline", "fat", "slim", "fat rho_N"
    );
    let mut row_iter = result.rows.chunks(Strategy::ALL.len());
    for chunk in &mut row_iter {
        let d = chunk[0].bs_density;
        let q: Vec<f64> = chunk.iter().map(|r| r.report.q_s).collect();
        let rho = chunk[1].report.rho_nru;
        println!("{d:10.1e} {:10.6} {:10.6} {:10.6} {rho:12.4}", q[0], q[1], q[2]);
    }

    println!("\nsmallest density meeting Q_s <= 0.2:");
    for (s, hit) in &result.min_density_for_target {
        match hit {
            Some(d) => println!("  {:8}: {d:.1e} /m^2", s.label()),
            None => println!("  {:8}: not reached on this grid", s.label()),
        }
    }
}
