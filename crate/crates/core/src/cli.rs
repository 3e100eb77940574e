//! Command-line front end: config ingestion, scenario runs, the validation
//! harness, and result emission with a hashed artifact manifest.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 validation mismatch.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::config::AppConfig;
use crate::error::{Error, Result};
use crate::lbt::{solve_contention, ContentionConfig};
use crate::oracle::{
    chi_square_test, exact_ctmc_resq, simulate_lbt, simulate_resq, SimControl,
};
use crate::pipeline::{density_sweep, evaluate_strategy, Scenario, Strategy, StrategyReport};
use crate::resq::{
    erlang_b, make_strategy_split, offloaded_demand_pmf, ClassSpec, GTable, QueueSpec,
    SplitPolicy,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "nru-offload", version, about = "Analytical coexistence model runner")]
pub struct Cli {
    /// Configuration file (TOML); omitted means built-in defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for CSVs and the manifest.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads for sweep points (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Simulation seed override for `validate`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Strategy filter: baseline, fat, slim, or all.
    #[arg(long, global = true, default_value = "all")]
    pub strategy: String,
    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    pub dump_config: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one scenario and write a per-strategy report CSV.
    Point,
    /// Evaluate the configured density / min-rate / CW grids.
    Sweep {
        /// Also emit a gnuplot script referencing the CSV.
        #[arg(long)]
        plot: bool,
    },
    /// Check the analytical stages against the embedded simulators.
    Validate,
    /// Inspect the active MCS tables.
    Mcs {
        #[command(subcommand)]
        command: McsCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum McsCommand {
    /// Print both active tables in the table file format.
    Dump,
}

/// Map an error to the documented exit code.
fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Io(_) => EXIT_CONFIG,
        Error::Stage { source, .. } => exit_code_for(source),
        _ => EXIT_NUMERIC,
    }
}

/// Run the parsed command line; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match run_inner(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn run_inner(cli: &Cli) -> Result<i32> {
    let cfg = match &cli.config {
        Some(path) => AppConfig::load(path)?,
        None => AppConfig::default(),
    };
    if cli.dump_config {
        print!("{}", cfg.dump());
        return Ok(EXIT_OK);
    }
    let strategies: Vec<Strategy> = if cli.strategy == "all" {
        Strategy::ALL.to_vec()
    } else {
        vec![Strategy::parse(&cli.strategy)?]
    };
    if cli.jobs > 0 {
        // ignore the error when a pool already exists (tests, repeat calls)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global();
    }
    match &cli.command {
        Command::Point => cmd_point(&cfg, &strategies, &cli.out),
        Command::Sweep { plot } => cmd_sweep(&cfg, &strategies, &cli.out, *plot),
        Command::Validate => cmd_validate(&cfg, cli.seed),
        Command::Mcs { command: McsCommand::Dump } => cmd_mcs_dump(&cfg),
    }
}

/// Fixed column set and order of the report CSVs.
const CSV_HEADER: &str = "strategy,bs_density,min_rate_bps,initial_cw,r_cell_m,r_wigig_m,\
lambda_total,lambda_ring,lambda_disk,threshold,pi_sl,pi_su,lambda_su,success_prob,\
collision_prob,q_su,q_s,mean_unlicensed_rate_bps,infeasible_mass,unlicensed_blockage,\
rho_nru,rho_wifi";

/// 12 significant digits, stable across runs.
fn num(x: f64) -> String {
    format!("{x:.11e}")
}

fn csv_row(
    bs_density: f64,
    min_rate: f64,
    initial_cw: u32,
    r: &StrategyReport,
) -> String {
    let cols = [
        num(bs_density),
        num(min_rate),
        initial_cw.to_string(),
        num(r.r_n),
        num(r.r_w),
        num(r.arrivals.lambda),
        num(r.arrivals.lambda1),
        num(r.arrivals.lambda2),
        r.threshold.to_string(),
        num(r.pi_sl),
        num(r.pi_su),
        num(r.lambda_su),
        num(r.success_prob),
        num(r.collision_prob),
        num(r.q_su),
        num(r.q_s),
        num(r.mean_unlicensed_rate),
        num(r.infeasible_mass),
        num(r.unlicensed_blockage),
        num(r.rho_nru),
        num(r.rho_wifi),
    ];
    format!("{},{}", r.strategy.label(), cols.join(","))
}

/// Write a file and append its manifest record.
fn emit(out_dir: &Path, name: &str, content: &str, manifest: &mut String) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join(name);
    std::fs::write(&path, content)?;
    let hash = Sha256::digest(content.as_bytes());
    let _ = writeln!(manifest, "{} {} {:x}", path.display(), content.len(), hash);
    Ok(())
}

fn finish_manifest(out_dir: &Path, manifest: String) -> Result<()> {
    std::fs::write(out_dir.join("manifest.txt"), manifest)?;
    Ok(())
}

fn cmd_point(cfg: &AppConfig, strategies: &[Strategy], out_dir: &Path) -> Result<i32> {
    let scn = cfg.scenario()?;
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for &s in strategies {
        let report = evaluate_strategy(&scn, s)?;
        csv.push_str(&csv_row(
            cfg.deployment.bs_density,
            cfg.traffic.min_rate_bps,
            cfg.contention.initial_cw_nru,
            &report,
        ));
        csv.push('\n');
    }
    let mut manifest = String::new();
    emit(out_dir, "point.csv", &csv, &mut manifest)?;
    finish_manifest(out_dir, manifest)?;
    print!("{csv}");
    Ok(EXIT_OK)
}

fn cmd_sweep(
    cfg: &AppConfig,
    strategies: &[Strategy],
    out_dir: &Path,
    plot: bool,
) -> Result<i32> {
    let min_rates = if cfg.sweep.min_rates_bps.is_empty() {
        vec![cfg.traffic.min_rate_bps]
    } else {
        cfg.sweep.min_rates_bps.clone()
    };
    let cws = if cfg.sweep.initial_cws.is_empty() {
        vec![cfg.contention.initial_cw_nru]
    } else {
        cfg.sweep.initial_cws.clone()
    };
    let target = if cfg.sweep.target_q_s > 0.0 {
        Some(cfg.sweep.target_q_s)
    } else {
        None
    };
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    let mut targets = String::new();
    for &r_min in &min_rates {
        for &cw in &cws {
            let mut point_cfg = cfg.clone();
            point_cfg.traffic.min_rate_bps = r_min;
            point_cfg.contention.initial_cw_nru = cw;
            point_cfg.contention.initial_cw_wigig = cw;
            let scn = point_cfg.scenario()?;
            let result = density_sweep(&scn, &cfg.sweep.densities, strategies, target)?;
            for row in &result.rows {
                csv.push_str(&csv_row(row.bs_density, r_min, cw, &row.report));
                csv.push('\n');
            }
            for (s, hit) in &result.min_density_for_target {
                if let Some(d) = hit {
                    let _ = writeln!(
                        targets,
                        "{} r_min={} cw={} min_density={}",
                        s.label(),
                        num(r_min),
                        cw,
                        num(*d)
                    );
                }
            }
        }
    }
    let mut manifest = String::new();
    emit(out_dir, "sweep.csv", &csv, &mut manifest)?;
    if !targets.is_empty() {
        emit(out_dir, "targets.txt", &targets, &mut manifest)?;
    }
    if plot {
        emit(out_dir, "sweep_plot.gp", PLOT_SCRIPT, &mut manifest)?;
    }
    finish_manifest(out_dir, manifest)?;
    println!("wrote {} rows to {}", csv.lines().count() - 1, out_dir.join("sweep.csv").display());
    Ok(EXIT_OK)
}

/// Generic gnuplot script over the sweep CSV; no plotting dependency.
const PLOT_SCRIPT: &str = r#"# gnuplot script for sweep.csv
set datafile separator ','
set key autotitle columnheader
set logscale x
set xlabel 'BS density, m^-2'
set ylabel 'eventual session loss Q_s'
set terminal pngcairo size 900,600
set output 'qs_vs_density.png'
plot for [s in "baseline fat slim"] \
    'sweep.csv' using 2:(strcol(1) eq s ? column(17) : NaN) \
    with linespoints title s
"#;

fn cmd_mcs_dump(cfg: &AppConfig) -> Result<i32> {
    let scn = cfg.scenario()?;
    for (band, table) in [("nr", &scn.nr_mcs), ("wigig", &scn.wigig_mcs)] {
        println!("# {band} MCS table: SINR threshold (dB), spectral efficiency (bit/s/Hz)");
        for row in table.rows() {
            println!("{:.2} {:.4}", row.sinr_threshold_db, row.spectral_efficiency);
        }
        println!();
    }
    Ok(EXIT_OK)
}

struct StageCheck {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn cmd_validate(cfg: &AppConfig, seed_override: Option<u64>) -> Result<i32> {
    let scn = cfg.scenario()?;
    let ctl = SimControl {
        seed: seed_override.unwrap_or(cfg.validate.seed),
        event_budget: cfg.validate.event_budget,
        slot_budget: cfg.validate.slot_budget,
        confidence_level: cfg.validate.confidence_level,
        batch_count: cfg.validate.batch_count as usize,
    };
    let checks = vec![
        check_resq(&ctl)?,
        check_ctmc()?,
        check_lbt(&scn, &ctl)?,
        check_fading(&scn)?,
        check_offload_histogram(&ctl)?,
    ];
    let mut all_pass = true;
    println!("{:<24} {:<6} detail", "stage", "result");
    for c in &checks {
        all_pass &= c.pass;
        println!(
            "{:<24} {:<6} {}",
            c.name,
            if c.pass { "PASS" } else { "FAIL" },
            c.detail
        );
    }
    Ok(if all_pass { EXIT_OK } else { EXIT_VALIDATION })
}

/// Event simulation vs the G-table loss on canonical small queues.
fn check_resq(ctl: &SimControl) -> Result<StageCheck> {
    let mut pass = true;
    let mut detail = String::new();
    for (k, rho) in [(1usize, 1.0f64), (4, 3.0)] {
        let spec = QueueSpec {
            k_max: k,
            r_max: k,
            service_rate: 1.0,
            classes: vec![ClassSpec {
                arrival_rate: rho,
                demand: crate::pmf::DiscretePmf::delta(1),
            }],
        };
        let exact = erlang_b(rho, k);
        let sim = simulate_resq(&spec, None, ctl)?;
        let est = &sim.class_loss[0];
        let ok = (est.estimate - exact).abs() <= 1.5 * est.half_width.max(1e-4);
        pass &= ok;
        let _ = write!(
            detail,
            "K={k} rho={rho}: sim {:.5}+-{:.5} vs {:.5}; ",
            est.estimate, est.half_width, exact
        );
    }
    Ok(StageCheck {
        name: "loss-queue simulation",
        pass,
        detail,
    })
}

/// Product form vs the exact CTMC linear solve.
fn check_ctmc() -> Result<StageCheck> {
    let demand = crate::pmf::DiscretePmf::new(vec![0.0, 0.5, 0.3, 0.2]).unwrap();
    let spec = QueueSpec {
        k_max: 3,
        r_max: 4,
        service_rate: 1.0,
        classes: vec![ClassSpec {
            arrival_rate: 1.3,
            demand,
        }],
    };
    let sol = exact_ctmc_resq(&spec)?;
    let table = GTable::build(&spec)?;
    let m = sol.kr_marginal();
    let mut tv = 0.0;
    for k in 0..=spec.k_max {
        for r in 0..=spec.r_max {
            tv += (m[k][r] - table.stationary(k, r, spec.k_max, spec.r_max)).abs();
        }
    }
    tv /= 2.0;
    Ok(StageCheck {
        name: "exact CTMC",
        pass: tv < 1e-9,
        detail: format!("total variation {tv:.3e} (tol 1e-9)"),
    })
}

/// Fixed point vs slot simulation at the configured contention parameters.
fn check_lbt(scn: &Scenario, ctl: &SimControl) -> Result<StageCheck> {
    let cfg = ContentionConfig {
        wifi: scn.wifi_backoff,
        nru: scn.nru_backoff,
        n_wifi: 5.0,
        n_nru: 5.0,
        blockage_prob: 0.1,
        self_in_collision: scn.literal_collision,
    };
    let sol = solve_contention(&cfg)?;
    let sim = simulate_lbt(5, 5, &cfg, ctl)?;
    let close = |est: &crate::oracle::EstimateWithCI, exact: f64, bias: f64| {
        // half_width is ~2 sigma at 95%, so 1.5x is the 3-sigma band;
        // `bias` allows for the O(1/n) decoupling error of the mean field
        // in derived per-attempt quantities
        (est.estimate - exact).abs() <= 1.5 * est.half_width.max(1e-4) + bias * exact
    };
    let pass = close(&sim.pi_nru, sol.pi_nru, 0.005)
        && close(&sim.pi_wifi, sol.pi_wifi, 0.005)
        && close(&sim.collision_nru, sol.collision_nru, 0.01)
        && close(&sim.collision_wifi, sol.collision_wifi, 0.01);
    Ok(StageCheck {
        name: "contention simulation",
        pass,
        detail: format!(
            "pi_N sim {:.5}+-{:.5} vs {:.5}; pi_W sim {:.5}+-{:.5} vs {:.5}; p_cN sim {:.5}+-{:.5} vs {:.5}; p_cW sim {:.5}+-{:.5} vs {:.5}",
            sim.pi_nru.estimate,
            sim.pi_nru.half_width,
            sol.pi_nru,
            sim.pi_wifi.estimate,
            sim.pi_wifi.half_width,
            sol.pi_wifi,
            sim.collision_nru.estimate,
            sim.collision_nru.half_width,
            sol.collision_nru,
            sim.collision_wifi.estimate,
            sim.collision_wifi.half_width,
            sol.collision_wifi
        ),
    })
}

/// Quadrature convolution vs the closed-form fading CDF on the NR link.
fn check_fading(scn: &Scenario) -> Result<StageCheck> {
    use crate::chanstat::{
        sinr_cdf_with_fading, sinr_cdf_with_fading_closed_form, Region, StateParams,
    };
    let region = Region::disk(50.0)?;
    let dh = scn.deployment.height_delta();
    let state = StateParams::los(&scn.nr)?;
    let mut worst = 0.0f64;
    for x in (-20..=90).step_by(5) {
        let x_db = x as f64;
        let quad = sinr_cdf_with_fading(x_db, &region, &state, dh)?;
        let closed = sinr_cdf_with_fading_closed_form(x_db, &region, &state, dh);
        worst = worst.max((quad - closed).abs());
    }
    Ok(StageCheck {
        name: "fading CDF closed form",
        pass: worst < 1e-6,
        detail: format!("max |quadrature - erf| = {worst:.3e} (tol 1e-6)"),
    })
}

/// Simulated offloaded-demand histogram vs the analytical pmf (chi-square).
fn check_offload_histogram(ctl: &SimControl) -> Result<StageCheck> {
    let demand = crate::pmf::DiscretePmf::new(vec![0.0, 0.5, 0.5])?;
    let policy = SplitPolicy::FatOffload { threshold: 1 };
    let split = make_strategy_split(policy, &demand)?;
    let lambda = 2.0;
    // the licensed queue only sees the non-diverted, thinned class
    let lic_spec = QueueSpec {
        k_max: 2,
        r_max: 2,
        service_rate: 1.0,
        classes: vec![ClassSpec {
            arrival_rate: lambda * split.licensed_fraction,
            demand: split.licensed_demand.clone().expect("fat split keeps mass"),
        }],
    };
    let table = GTable::build(&lic_spec)?;
    let expected = offloaded_demand_pmf(&split, &table, lic_spec.k_max, lic_spec.r_max)?;
    let sim_spec = QueueSpec {
        classes: vec![ClassSpec {
            arrival_rate: lambda,
            demand,
        }],
        ..lic_spec.clone()
    };
    let sim = simulate_resq(&sim_spec, Some((0, policy)), ctl)?;
    let exp: Vec<f64> = (0..sim.offloaded_hist.len())
        .map(|j| expected.get(j))
        .collect();
    let (stat, dof, p) = chi_square_test(&sim.offloaded_hist, &exp)?;
    Ok(StageCheck {
        name: "offloaded histogram",
        pass: p > 0.01,
        detail: format!("chi2 = {stat:.3} (dof {dof}), p = {p:.4} (accept at 99%)"),
    })
}
