//! End-to-end orchestration: coverage, arrival splitting, per-strategy
//! evaluation of the licensed queue and the unlicensed contention chain,
//! density sweeps, and the contention-window fairness search.

use crate::chanstat::{demand_pmf, mean_spectral_efficiency, DemandPmf, McsTable, Region};
use crate::error::{Error, Result};
use crate::geometry::{
    coverage, mean_blockage_probability_annulus, mean_sinr, CoverageResult, DeploymentConfig,
    RadioConfig,
};
use crate::lbt::{
    attained_rates, mixed_collision, qos_violation, success_probability,
    success_probability_wifi, BackoffParams, ContentionConfig, RateMap,
};
use crate::numeric::bisect;
use crate::pmf::DiscretePmf;
use crate::resq::{
    class_loss, make_strategy_split, offload_probability, offloaded_demand_pmf, GTable,
    SplitPolicy,
};
use rayon::prelude::*;

/// Session-level traffic parameters.
#[derive(Debug, Clone, Copy)]
pub struct TrafficConfig {
    /// Per-UE session arrival rate on the cellular side, sessions/s.
    pub session_rate: f64,
    /// Probability that a cellular UE has an active session demand.
    pub nru_active_prob: f64,
    /// Probability that a WiGig UE has an active session demand.
    pub wigig_active_prob: f64,
    /// Per-UE session arrival rate on the WiGig side, sessions/s.
    pub wigig_session_rate: f64,
    /// Licensed-band service rate per session, 1/s.
    pub service_rate: f64,
    /// WiGig service rate per session, 1/s.
    pub wigig_service_rate: f64,
    /// Minimum session rate, bit/s.
    pub min_rate: f64,
}

impl TrafficConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.session_rate,
            self.wigig_session_rate,
            self.service_rate,
            self.wigig_service_rate,
            self.min_rate,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Domain("traffic rates must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.nru_active_prob)
            || !(0.0..=1.0).contains(&self.wigig_active_prob)
        {
            return Err(Error::Domain("active probabilities must be in [0,1]".into()));
        }
        Ok(())
    }
}

/// Which weight multiplies the licensed loss in the eventual-loss formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LicensedLossWeight {
    /// (lambda1 + lambda2 (1 - pi_sU)) / lambda, as printed in the model.
    AsPrinted,
    /// lambda1 / lambda, the non-offloadable population only; exposed for
    /// sensitivity analysis.
    RingOnly,
}

/// How licensed demand classes map to unlicensed spectral efficiencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateMapMode {
    /// Invert the licensed discretization to a distance band and read the
    /// unlicensed MCS table at the band midpoint.
    Distance,
    /// Every class gets the mean unlicensed spectral efficiency.
    Uniform,
}

/// Strategy-level options.
#[derive(Debug, Clone, Copy)]
pub struct StrategyOptions {
    /// Demand threshold of the heavy-offload strategy; None derives it from
    /// the mean offloadable demand ("heavier than average").
    pub fat_threshold: Option<usize>,
    /// Demand threshold of the light-offload strategy; None derives it the
    /// same way.
    pub slim_threshold: Option<usize>,
    pub licensed_loss_weight: LicensedLossWeight,
    /// Count sessions whose SINR supports no MCS at all against the
    /// unlicensed QoS-violation probability.
    pub infeasible_to_qsu: bool,
    pub rate_map: RateMapMode,
}

impl Default for StrategyOptions {
    fn default() -> Self {
        Self {
            fat_threshold: None,
            slim_threshold: None,
            licensed_loss_weight: LicensedLossWeight::AsPrinted,
            infeasible_to_qsu: false,
            rate_map: RateMapMode::Distance,
        }
    }
}

/// Licensed-band resource discretization.
#[derive(Debug, Clone, Copy)]
pub struct QueueOptions {
    /// Bandwidth of one resource unit, Hz.
    pub resource_unit_hz: f64,
    /// Session slots; None means one slot per resource unit.
    pub k_max: Option<usize>,
}

/// A full scenario: everything needed to evaluate one deployment point.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub deployment: DeploymentConfig,
    /// Licensed-band radio.
    pub nr: RadioConfig,
    /// Unlicensed-band radio.
    pub wigig: RadioConfig,
    pub traffic: TrafficConfig,
    pub nru_backoff: BackoffParams,
    pub wifi_backoff: BackoffParams,
    /// Use the symmetric collision form that counts the tagged station
    /// among its own interferers.
    pub literal_collision: bool,
    /// Poisson tail mass dropped from the success-probability mixture.
    pub truncation_mass: f64,
    pub nr_mcs: McsTable,
    pub wigig_mcs: McsTable,
    pub options: StrategyOptions,
    pub queue: QueueOptions,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.deployment.validate()?;
        self.nr.validate()?;
        self.wigig.validate()?;
        self.traffic.validate()?;
        self.nru_backoff.validate()?;
        self.wifi_backoff.validate()?;
        if !(self.truncation_mass > 0.0 && self.truncation_mass <= 1e-6) {
            return Err(Error::Domain("truncation mass must be in (0, 1e-6]".into()));
        }
        if !(self.queue.resource_unit_hz > 0.0) {
            return Err(Error::Domain("resource unit must be > 0".into()));
        }
        self.nr_mcs.validate_outage_threshold(self.nr.outage_sinr_db)?;
        Ok(())
    }

    /// Licensed resource units.
    pub fn r_max(&self) -> usize {
        (self.nr.bandwidth_hz / self.queue.resource_unit_hz).floor() as usize
    }

    pub fn k_max(&self) -> usize {
        self.queue.k_max.unwrap_or_else(|| self.r_max())
    }
}

/// The three offloading strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Sessions go unlicensed only after licensed blocking.
    Baseline,
    /// Heavier-than-threshold sessions go unlicensed on arrival.
    Fat,
    /// Lighter-than-threshold sessions go unlicensed on arrival.
    Slim,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Baseline, Strategy::Fat, Strategy::Slim];

    pub fn label(&self) -> &'static str {
        match self {
            Strategy::Baseline => "baseline",
            Strategy::Fat => "fat",
            Strategy::Slim => "slim",
        }
    }

    pub fn parse(s: &str) -> Result<Strategy> {
        match s {
            "baseline" => Ok(Strategy::Baseline),
            "fat" => Ok(Strategy::Fat),
            "slim" => Ok(Strategy::Slim),
            other => Err(Error::Config(format!("unknown strategy '{other}'"))),
        }
    }
}

/// Arrival intensities after geometric splitting.
#[derive(Debug, Clone, Copy)]
pub struct ArrivalSplit {
    /// Total cellular session intensity in the cell, sessions/s.
    pub lambda: f64,
    /// Intensity in the ring outside unlicensed coverage.
    pub lambda1: f64,
    /// Intensity in the offloadable inner disk.
    pub lambda2: f64,
    /// WiGig session intensity, sessions/s.
    pub lambda_w: f64,
}

/// Split the cell's arrivals into non-offloadable (ring) and offloadable
/// (inner disk) parts, plus the WiGig stream.
pub fn split_arrivals(
    dep: &DeploymentConfig,
    traffic: &TrafficConfig,
    r_n: f64,
    r_w: f64,
) -> Result<ArrivalSplit> {
    if !(r_n > 0.0) || r_w < 0.0 || r_w > r_n {
        return Err(Error::InvalidGeometry(format!(
            "coverage radii r_n {r_n}, r_w {r_w}"
        )));
    }
    let lambda = dep.nru_ue_density
        * std::f64::consts::PI
        * r_n
        * r_n
        * traffic.nru_active_prob
        * traffic.session_rate;
    let lambda2 = lambda * (r_w / r_n).powi(2);
    let lambda1 = lambda - lambda2;
    let lambda_w = dep.wigig_ue_density
        * std::f64::consts::PI
        * r_w
        * r_w
        * traffic.wigig_active_prob
        * traffic.wigig_session_rate;
    Ok(ArrivalSplit {
        lambda,
        lambda1,
        lambda2,
        lambda_w,
    })
}

/// Everything the evaluation of one strategy produces.
#[derive(Debug, Clone)]
pub struct StrategyReport {
    pub strategy: Strategy,
    /// Licensed coverage radius, m.
    pub r_n: f64,
    /// Unlicensed coverage radius, m.
    pub r_w: f64,
    pub arrivals: ArrivalSplit,
    /// Demand threshold in effect (0 when the strategy has none).
    pub threshold: usize,
    /// Loss probability of a ring session in the licensed band.
    pub pi_sl: f64,
    /// Probability that an offloadable session ends up unlicensed.
    pub pi_su: f64,
    /// Intensity of sessions landing on the unlicensed interface.
    pub lambda_su: f64,
    /// Successful-transmission probability of the tagged cellular
    /// unlicensed interface.
    pub success_prob: f64,
    /// Population-averaged collision probability (diagnostic).
    pub collision_prob: f64,
    /// QoS-violation probability in the unlicensed band.
    pub q_su: f64,
    /// Eventual session loss probability.
    pub q_s: f64,
    /// Mean rate attained by offloaded sessions, bit/s.
    pub mean_unlicensed_rate: f64,
    /// Demand pmf of the offloaded sessions, when any exist.
    pub offloaded_pmf: Option<DiscretePmf>,
    /// Probability mass of offloadable sessions with no feasible MCS.
    pub infeasible_mass: f64,
    /// Mean blockage probability over the unlicensed disk.
    pub unlicensed_blockage: f64,
    /// Offered loads feeding the contention mixture.
    pub rho_nru: f64,
    pub rho_wifi: f64,
}

fn stage<T>(r: Result<T>, name: &'static str) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

/// Coverage radii of the two bands; the unlicensed radius is capped by the
/// licensed one so the offloadable disk sits inside the cell.
pub fn coverage_radii(scn: &Scenario) -> Result<(CoverageResult, f64)> {
    let cov_n = coverage(&scn.deployment, &scn.nr)?;
    let cov_w = coverage(&scn.deployment, &scn.wigig)?;
    let r_w = cov_w.r_sinr.min(cov_n.r_cell);
    Ok((cov_n, r_w))
}

/// Effective demand threshold of a strategy: the configured one, or the
/// rounded mean of the offloadable demand ("heavier/lighter than average").
fn effective_threshold(strategy: Strategy, opts: &StrategyOptions, p2: &DiscretePmf) -> usize {
    let auto = p2.mean().round().max(0.0) as usize;
    match strategy {
        Strategy::Baseline => 0,
        Strategy::Fat => opts.fat_threshold.unwrap_or(auto),
        Strategy::Slim => opts.slim_threshold.unwrap_or(auto),
    }
}

fn split_policy(strategy: Strategy, threshold: usize) -> SplitPolicy {
    match strategy {
        Strategy::Baseline => SplitPolicy::Baseline,
        Strategy::Fat => SplitPolicy::FatOffload { threshold },
        Strategy::Slim => SplitPolicy::SlimOffload { threshold },
    }
}

/// Invert the licensed mean-SINR curve: distance at which the mean SINR in
/// dB equals `x_db`, searched on [dh, 10 r_n]. Returns None when the level
/// is outside the curve's range there.
fn distance_at_sinr(
    x_db: f64,
    dep: &DeploymentConfig,
    radio: &RadioConfig,
    r_n: f64,
) -> Option<f64> {
    let dh = dep.height_delta().max(1.0);
    let hi = (10.0 * r_n).max(dh + 1.0);
    let f = |y: f64| {
        let s = mean_sinr(y, dep, radio).unwrap_or(f64::MIN_POSITIVE);
        10.0 * s.log10() - x_db
    };
    if f(dh) < 0.0 {
        return None; // even the nearest point is below the level
    }
    if f(hi) > 0.0 {
        return Some(hi);
    }
    bisect(f, dh, hi, 1e-6).ok()
}

/// Per-class unlicensed spectral efficiencies m_j for classes 0..=support.
/// Distance mode maps each licensed demand class back to the distance band
/// its SINR interval occupies and reads the unlicensed table at the band
/// midpoint; classes with no licensed pre-image get efficiency 0.
fn unlicensed_rate_map(scn: &Scenario, r_n: f64, r_w: f64, support: usize) -> Result<RateMap> {
    match scn.options.rate_map {
        RateMapMode::Uniform => {
            let e_se = mean_spectral_efficiency(r_w, &scn.deployment, &scn.wigig)?;
            Ok(RateMap::Uniform(e_se))
        }
        RateMapMode::Distance => {
            let rows = scn.nr_mcs.rows();
            let unit = scn.queue.resource_unit_hz;
            let r_min = scn.traffic.min_rate;
            let mut eff = vec![0.0; support + 1];
            for (i, row) in rows.iter().enumerate() {
                let j = crate::chanstat::demand_units(r_min, row.spectral_efficiency, unit);
                if j > support {
                    continue;
                }
                // distance band of this SINR interval on the mean curve
                let y_far = distance_at_sinr(row.sinr_threshold_db, &scn.deployment, &scn.nr, r_n);
                let y_near = if i + 1 < rows.len() {
                    distance_at_sinr(rows[i + 1].sinr_threshold_db, &scn.deployment, &scn.nr, r_n)
                } else {
                    Some(scn.deployment.height_delta().max(1.0))
                };
                let (Some(a), Some(b)) = (y_far, y_near) else {
                    continue;
                };
                let mid = 0.5 * (a + b);
                let s = mean_sinr(mid, &scn.deployment, &scn.wigig)?;
                let s_db = 10.0 * s.log10();
                let m = scn.wigig_mcs.efficiency_at(s_db).unwrap_or(0.0);
                // several rows can share a demand class; keep the best
                if m > eff[j] {
                    eff[j] = m;
                }
            }
            Ok(RateMap::PerClass(eff))
        }
    }
}

/// Evaluate one strategy end to end.
pub fn evaluate_strategy(scn: &Scenario, strategy: Strategy) -> Result<StrategyReport> {
    scn.validate()?;
    let (cov_n, r_w) = stage(coverage_radii(scn), "coverage")?;
    let r_n = cov_n.r_cell;
    let arrivals = stage(
        split_arrivals(&scn.deployment, &scn.traffic, r_n, r_w),
        "arrivals",
    )?;

    let r_max = scn.r_max();
    let k_max = scn.k_max();
    let unit = scn.queue.resource_unit_hz;
    let r_min = scn.traffic.min_rate;

    // demand pmfs of the two spatial classes on the licensed band
    let disk = stage(Region::disk(r_w), "demand")?;
    let d2: DemandPmf = stage(
        demand_pmf(&disk, &scn.nr_mcs, &scn.deployment, &scn.nr, r_min, unit, r_max),
        "demand",
    )?;
    let d1: Option<DemandPmf> = if arrivals.lambda1 > 0.0 {
        let ring = stage(Region::annulus(r_w, r_n), "demand")?;
        Some(stage(
            demand_pmf(&ring, &scn.nr_mcs, &scn.deployment, &scn.nr, r_min, unit, r_max),
            "demand",
        )?)
    } else {
        None
    };

    let threshold = effective_threshold(strategy, &scn.options, &d2.pmf);
    let split = stage(make_strategy_split(split_policy(strategy, threshold), &d2.pmf), "split")?;

    // infeasible mass never enters the licensed queue: ring infeasible folds
    // into the licensed loss, disk infeasible always overflows to unlicensed
    let inf1 = d1.as_ref().map_or(0.0, |d| d.infeasible_mass);
    let inf2 = d2.infeasible_mass;

    // licensed queue over both classes; the offloadable class contributes
    // only the part the strategy keeps licensed
    let lambda2_lic = arrivals.lambda2 * (1.0 - inf2) * split.licensed_fraction;
    let mut classes = Vec::new();
    if let Some(d1) = &d1 {
        classes.push(crate::resq::ClassSpec {
            arrival_rate: arrivals.lambda1 * (1.0 - inf1),
            demand: d1.pmf.clone(),
        });
    }
    if let (Some(d), true) = (&split.licensed_demand, lambda2_lic > 0.0) {
        classes.push(crate::resq::ClassSpec {
            arrival_rate: lambda2_lic,
            demand: d.clone(),
        });
    }
    let (pi_sl, pi_su, offloaded_pmf) = if classes.is_empty() {
        // nothing enters the licensed band: pure diversion
        (0.0, 1.0 - split.licensed_fraction, split.diverted_demand.clone())
    } else {
        let spec = crate::resq::QueueSpec {
            k_max,
            r_max,
            service_rate: scn.traffic.service_rate,
            classes,
        };
        let table = stage(GTable::build(&spec), "queue")?;
        let pi_sl = match &d1 {
            Some(d1) => class_loss(&table, &d1.pmf, k_max, r_max),
            None => 0.0,
        };
        let pi_su = offload_probability(&split, &table, k_max, r_max);
        let pmf = if pi_su > 0.0 {
            match offloaded_demand_pmf(&split, &table, k_max, r_max) {
                Ok(p) => Some(p),
                Err(crate::error::Error::NoOffload) => None,
                Err(e) => return Err(stage::<()>(Err(e), "offload").unwrap_err()),
            }
        } else {
            None
        };
        (pi_sl, pi_su, pmf)
    };
    // fold the infeasible buckets into the loss paths: ring arrivals that
    // support no feasible demand are always lost, disk ones always divert
    let pi_sl = pi_sl * (1.0 - inf1) + inf1;
    let pi_su_feasible = pi_su * (1.0 - inf2);
    let pi_su = pi_su_feasible + inf2;

    let lambda_su = arrivals.lambda2 * pi_su;
    let rho_nru = lambda_su / scn.traffic.service_rate;
    let rho_wifi = arrivals.lambda_w / scn.traffic.wigig_service_rate;

    let unlicensed_blockage = stage(
        mean_blockage_probability_annulus(0.0, r_w, &scn.deployment, scn.deployment.bs_height),
        "contention",
    )?;
    let contention = ContentionConfig {
        wifi: scn.wifi_backoff,
        nru: scn.nru_backoff,
        n_wifi: 0.0,
        n_nru: 0.0,
        blockage_prob: unlicensed_blockage,
        self_in_collision: scn.literal_collision,
    };
    let success_prob = stage(
        success_probability(rho_nru, rho_wifi, &contention, scn.truncation_mass),
        "contention",
    )?;
    let collision_prob = stage(
        mixed_collision(rho_nru, rho_wifi, &contention, scn.truncation_mass),
        "contention",
    )?;

    let (q_su, mean_unlicensed_rate) = match &offloaded_pmf {
        Some(pmf) => {
            let map = stage(
                unlicensed_rate_map(scn, r_n, r_w, pmf.support_max()),
                "rates",
            )?;
            let rates = stage(
                attained_rates(success_prob, scn.wigig.bandwidth_hz, &map, pmf.support_max()),
                "rates",
            )?;
            let q = stage(qos_violation(pmf, &rates, r_min), "rates")?;
            let mean: f64 = (0..=pmf.support_max()).map(|j| pmf.get(j) * rates[j]).sum();
            (q, mean)
        }
        None => (0.0, 0.0),
    };
    // mix the infeasible share into the offloaded population; its QoS
    // contribution is config-gated, its attained rate is zero either way
    let (q_su, mean_unlicensed_rate) = if pi_su > 0.0 {
        let inf_fail = if scn.options.infeasible_to_qsu { inf2 } else { 0.0 };
        (
            (pi_su_feasible * q_su + inf_fail) / pi_su,
            pi_su_feasible * mean_unlicensed_rate / pi_su,
        )
    } else {
        (0.0, 0.0)
    };

    let first_weight = match scn.options.licensed_loss_weight {
        LicensedLossWeight::AsPrinted => {
            (arrivals.lambda1 + arrivals.lambda2 * (1.0 - pi_su)) / arrivals.lambda
        }
        LicensedLossWeight::RingOnly => arrivals.lambda1 / arrivals.lambda,
    };
    let q_s = (first_weight * pi_sl + (arrivals.lambda2 * pi_su / arrivals.lambda) * q_su)
        .clamp(0.0, 1.0);

    Ok(StrategyReport {
        strategy,
        r_n,
        r_w,
        arrivals,
        threshold,
        pi_sl,
        pi_su,
        lambda_su,
        success_prob,
        collision_prob,
        q_su,
        q_s,
        mean_unlicensed_rate,
        offloaded_pmf,
        infeasible_mass: d2.infeasible_mass,
        unlicensed_blockage,
        rho_nru,
        rho_wifi,
    })
}

/// One sweep row: the BS density and the report it produced.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub bs_density: f64,
    pub report: StrategyReport,
}

/// Full sweep result, plus the minimal density meeting a loss target.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Per strategy: the smallest grid density with Q_s <= target, if any.
    pub min_density_for_target: Vec<(Strategy, Option<f64>)>,
}

/// Evaluate every (density, strategy) pair on an ascending grid. Points run
/// in parallel; the output order is fixed.
pub fn density_sweep(
    scn: &Scenario,
    densities: &[f64],
    strategies: &[Strategy],
    target_q_s: Option<f64>,
) -> Result<SweepResult> {
    if densities.is_empty() {
        return Err(Error::Config("empty density grid".into()));
    }
    if densities.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("density grid must be strictly ascending".into()));
    }
    let points: Vec<(f64, Strategy)> = densities
        .iter()
        .flat_map(|&d| strategies.iter().map(move |&s| (d, s)))
        .collect();
    let rows: Vec<Result<SweepRow>> = points
        .par_iter()
        .map(|&(density, strategy)| {
            let mut local = scn.clone();
            local.deployment.bs_density = density;
            Ok(SweepRow {
                bs_density: density,
                report: evaluate_strategy(&local, strategy)?,
            })
        })
        .collect();
    let rows: Vec<SweepRow> = rows.into_iter().collect::<Result<_>>()?;
    let min_density_for_target = strategies
        .iter()
        .map(|&s| {
            let hit = target_q_s.and_then(|t| {
                rows.iter()
                    .find(|r| r.report.strategy == s && r.report.q_s <= t)
                    .map(|r| r.bs_density)
            });
            (s, hit)
        })
        .collect();
    Ok(SweepResult {
        rows,
        min_density_for_target,
    })
}

/// Mean unlicensed rate of the tagged WiGig population under the same
/// contention state, using the uniform efficiency map for WiGig sessions.
pub fn wigig_mean_rate(scn: &Scenario, report: &StrategyReport) -> Result<f64> {
    let contention = ContentionConfig {
        wifi: scn.wifi_backoff,
        nru: scn.nru_backoff,
        n_wifi: 0.0,
        n_nru: 0.0,
        blockage_prob: report.unlicensed_blockage,
        self_in_collision: scn.literal_collision,
    };
    let share = success_probability_wifi(
        report.rho_nru,
        report.rho_wifi,
        &contention,
        scn.truncation_mass,
    )?;
    let e_se = mean_spectral_efficiency(report.r_w, &scn.deployment, &scn.wigig)?;
    Ok(share * scn.wigig.bandwidth_hz * e_se)
}

const FAIRNESS_W_MAX: u32 = 1 << 16;

/// Find the cellular initial contention window that equalizes the mean
/// unlicensed rates of the two populations, by integer bisection. The gap
/// (cellular minus WiGig mean rate) is decreasing in the window size.
/// Returns the first window within `rate_tolerance`, else the minimizer.
pub fn fairness_search(scn: &Scenario, strategy: Strategy, rate_tolerance: f64) -> Result<u32> {
    if !(rate_tolerance > 0.0) {
        return Err(Error::Domain("rate tolerance must be > 0".into()));
    }
    let gap = |w: u32| -> Result<f64> {
        let mut local = scn.clone();
        local.nru_backoff.initial_window = w;
        let report = evaluate_strategy(&local, strategy)?;
        Ok(report.mean_unlicensed_rate - wigig_mean_rate(&local, &report)?)
    };
    let start = scn.nru_backoff.initial_window;
    if gap(start)?.abs() <= rate_tolerance {
        return Ok(start);
    }
    let mut lo = 1u32;
    let mut hi = FAIRNESS_W_MAX;
    let mut best = (start, gap(start)?.abs());
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        let g = gap(mid)?;
        if g.abs() <= rate_tolerance {
            return Ok(mid);
        }
        if g.abs() < best.1 {
            best = (mid, g.abs());
        }
        if g > 0.0 {
            // cellular still ahead: widen its window
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    let g = gap(lo)?;
    if g.abs() < best.1 {
        best = (lo, g.abs());
    }
    Ok(best.0)
}
