//! Coverage geometry of the collocated deployment: blockage probability
//! along the link, SINR- vs intersite-limited cell radii, and how the
//! effective radii react to the base station density.

use nru_offload::config::AppConfig;
use nru_offload::geometry::{blockage_probability, coverage, mean_sinr};

fn main() {
    let cfg = AppConfig::default();
    let scn = cfg.scenario().expect("default scenario");

    println!("blockage probability and mean SINR along the licensed link:");
    for r in [5.0, 10.0, 20.0, 40.0, 80.0, 160.0] {
        let p_b = blockage_probability(r, &scn.deployment, scn.deployment.bs_height).unwrap();
        let s = 10.0 * mean_sinr(r, &scn.deployment, &scn.nr).unwrap().log10();
        println!("  r = {r:6.1} m: p_block = {p_b:.4}, mean SINR = {s:7.2} dB");
    }

    println!("\ncell radii vs base station density:");
    for d in [2e-5, 5e-5, 1e-4, 2e-4] {
        let mut dep = scn.deployment.clone();
        dep.bs_density = d;
        let nr = coverage(&dep, &scn.nr).unwrap();
        let wg = coverage(&dep, &scn.wigig).unwrap();
        println!(
            "  density {d:.0e}: NR r_sinr = {:7.1} m, r_voronoi = {:6.1} m, r_cell = {:6.1} m; WiGig r_cell = {:5.1} m",
            nr.r_sinr, nr.r_voronoi, nr.r_cell, wg.r_cell
        );
    }
}
