//! Fairness tuning: search the cellular initial contention window for the
//! value that equalizes the mean unlicensed rates of the offloaded cellular
//! sessions and the native WiGig population.

use nru_offload::config::AppConfig;
use nru_offload::pipeline::{evaluate_strategy, fairness_search, wigig_mean_rate, Strategy};

fn main() {
    let cfg = AppConfig::default();
    let scn = cfg.scenario().expect("default scenario");

    let report = evaluate_strategy(&scn, Strategy::Fat).unwrap();
    let w_rate = wigig_mean_rate(&scn, &report).unwrap();
    println!(
        "at W = {}: cellular unlicensed rate {:.3e} bit/s, WiGig rate {:.3e} bit/s",
        scn.nru_backoff.initial_window, report.mean_unlicensed_rate, w_rate
    );

    let w_fair = fairness_search(&scn, Strategy::Fat, 1e4).unwrap();
    let mut fair = scn.clone();
    fair.nru_backoff.initial_window = w_fair;
    let report = evaluate_strategy(&fair, Strategy::Fat).unwrap();
    let w_rate = wigig_mean_rate(&fair, &report).unwrap();
    println!(
        "fair W = {w_fair}: cellular unlicensed rate {:.3e} bit/s, WiGig rate {:.3e} bit/s",
        report.mean_unlicensed_rate, w_rate
    );
}
