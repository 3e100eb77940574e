//! Resource-demand distributions: how the SINR statistics of the inner disk
//! and the outer ring map through the MCS table into discrete unit demands,
//! and how much session mass falls below the bottom MCS rung.

use nru_offload::chanstat::{demand_pmf, Region};
use nru_offload::config::AppConfig;
use nru_offload::pipeline::coverage_radii;

fn main() {
    let cfg = AppConfig::default();
    let scn = cfg.scenario().expect("default scenario");
    let (cov, r_w) = coverage_radii(&scn).unwrap();
    let r_n = cov.r_cell;
    let unit = scn.queue.resource_unit_hz;
    let r_max = scn.r_max();

    println!(
        "cell radius {r_n:.1} m, unlicensed-capable radius {r_w:.1} m, {r_max} resource units"
    );

    let disk = Region::disk(r_w).unwrap();
    let ring = Region::annulus(r_w, r_n).unwrap();
    for (name, region) in [("inner disk", disk), ("outer ring", ring)] {
        let d = demand_pmf(
            &region,
            &scn.nr_mcs,
            &scn.deployment,
            &scn.nr,
            scn.traffic.min_rate,
            unit,
            r_max,
        )
        .unwrap();
        println!("\n{name}: infeasible mass {:.4}", d.infeasible_mass);
        for j in 0..=d.pmf.support_max() {
            let p = d.pmf.get(j);
            if p > 1e-6 {
                println!("  demand {j:3} units: p = {p:.4}");
            }
        }
        println!("  mean demand {:.2} units", d.pmf.mean());
    }
}
