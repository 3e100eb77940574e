//! Independent Monte Carlo and exact-enumeration validators for the
//! analytical stages: an event-driven loss-queue simulator, a slot-level
//! contention simulator, and a full CTMC linear solve for small instances.
//!
//! PRNG: ChaCha8 seeded from the 64-bit control seed, with the stream id
//! selecting the stage, so estimates are reproducible bit-for-bit and
//! stages never share randomness.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::lbt::ContentionConfig;
use crate::pmf::DiscretePmf;
use crate::resq::{QueueSpec, SplitPolicy};

/// PRNG stream ids, one per simulation stage.
const STREAM_RESQ: u64 = 1;
const STREAM_LBT: u64 = 2;

/// Budgets and estimation controls shared by the simulators.
#[derive(Debug, Clone, Copy)]
pub struct SimControl {
    pub seed: u64,
    /// Arrival events for the queue simulator.
    pub event_budget: u64,
    /// Backoff slots for the contention simulator.
    pub slot_budget: u64,
    /// Two-sided confidence level for interval half-widths.
    pub confidence_level: f64,
    /// Number of batches for batch-means intervals.
    pub batch_count: usize,
}

impl Default for SimControl {
    fn default() -> Self {
        Self {
            seed: 0x5eed,
            event_budget: 200_000,
            slot_budget: 1_000_000,
            confidence_level: 0.95,
            batch_count: 20,
        }
    }
}

impl SimControl {
    pub fn validate(&self) -> Result<()> {
        if self.event_budget == 0 || self.slot_budget == 0 {
            return Err(Error::SimControl("budgets must be > 0".into()));
        }
        if !(self.confidence_level > 0.0 && self.confidence_level < 1.0) {
            return Err(Error::SimControl("confidence level must be in (0,1)".into()));
        }
        if self.batch_count < 2 {
            return Err(Error::SimControl("need at least 2 batches".into()));
        }
        Ok(())
    }
}

/// A point estimate with a batch-means confidence interval.
#[derive(Debug, Clone, Copy)]
pub struct EstimateWithCI {
    pub estimate: f64,
    pub half_width: f64,
    pub batches: usize,
}

impl EstimateWithCI {
    pub fn contains(&self, value: f64) -> bool {
        (value - self.estimate).abs() <= self.half_width
    }
}

/// Batch-means estimate from per-batch averages using a Student-t quantile.
fn batch_estimate(batch_means: &[f64], confidence: f64) -> EstimateWithCI {
    let n = batch_means.len();
    let mean = batch_means.iter().sum::<f64>() / n as f64;
    let var = batch_means
        .iter()
        .map(|m| (m - mean) * (m - mean))
        .sum::<f64>()
        / (n as f64 - 1.0);
    let t = StudentsT::new(0.0, 1.0, n as f64 - 1.0)
        .map(|d| d.inverse_cdf(1.0 - (1.0 - confidence) / 2.0))
        .unwrap_or(f64::INFINITY);
    EstimateWithCI {
        estimate: mean,
        half_width: t * (var / n as f64).sqrt(),
        batches: n,
    }
}

fn sample_pmf(pmf: &DiscretePmf, rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for j in 0..=pmf.support_max() {
        acc += pmf.get(j);
        if u < acc {
            return j;
        }
    }
    pmf.support_max()
}

/// Simulation output of the loss queue.
#[derive(Debug, Clone)]
pub struct ResqSimResult {
    /// Per-class eventual loss among arrivals offered to the licensed queue.
    pub class_loss: Vec<EstimateWithCI>,
    /// Demand histogram of sessions that landed on the unlicensed side
    /// (arrival-time diversion plus blocking overflow of the split class).
    pub offloaded_hist: Vec<u64>,
    /// Total offloaded count behind the histogram.
    pub offloaded_total: u64,
    /// Total arrivals of the split (unlicensed-capable) class.
    pub capable_total: u64,
    /// Fraction of split-class arrivals that ended up offloaded.
    pub offload_probability: EstimateWithCI,
}

/// Event-driven simulation of the multi-class resource loss queue.
///
/// Arrivals are Poisson per class, services exponential, and a session is
/// admitted iff a session slot and its sampled demand in resource units are
/// both free. When `split` names a class and policy, that class's sessions
/// are diverted at arrival per the policy, and its blocked sessions join the
/// diverted ones in the offloaded histogram.
pub fn simulate_resq(
    spec: &QueueSpec,
    split: Option<(usize, SplitPolicy)>,
    ctl: &SimControl,
) -> Result<ResqSimResult> {
    ctl.validate()?;
    if spec.k_max == 0 || spec.r_max == 0 {
        return Err(Error::Domain("K and R must be >= 1".into()));
    }
    if spec.service_rate <= 0.0 {
        return Err(Error::Domain("service rate must be > 0".into()));
    }
    let n_classes = spec.classes.len();
    if let Some((c, _)) = split {
        if c >= n_classes {
            return Err(Error::Domain("split class out of range".into()));
        }
    }
    let lambda: f64 = spec.total_arrival_rate();
    let batches = ctl.batch_count;
    let per_batch = ctl.event_budget / batches as u64;
    if per_batch == 0 {
        return Err(Error::SimControl("event budget smaller than one batch".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(ctl.seed);
    rng.set_stream(STREAM_RESQ);

    // per-class, per-batch (offered, blocked); split class also tracks
    // (capable arrivals, offloaded)
    let mut loss_batches: Vec<Vec<f64>> = vec![Vec::with_capacity(batches); n_classes];
    let mut offload_batches: Vec<f64> = Vec::with_capacity(batches);
    let mut offloaded_hist = vec![0u64; spec.r_max + 2];
    let mut offloaded_total = 0u64;
    let mut capable_total = 0u64;

    if lambda <= 0.0 {
        // no arrivals: losses are exactly zero by convention
        let zero = EstimateWithCI {
            estimate: 0.0,
            half_width: 0.0,
            batches,
        };
        return Ok(ResqSimResult {
            class_loss: vec![zero; n_classes],
            offloaded_hist,
            offloaded_total: 0,
            capable_total: 0,
            offload_probability: zero,
        });
    }

    // active sessions: demands of each admitted session
    let mut active: Vec<usize> = Vec::new();
    let mut used: usize = 0;

    for _ in 0..batches {
        let mut offered = vec![0u64; n_classes];
        let mut blocked = vec![0u64; n_classes];
        let mut capable = 0u64;
        let mut offloaded = 0u64;
        let mut arrivals_seen = 0u64;
        while arrivals_seen < per_batch {
            // race the arrival stream against the pooled departures
            let dep_rate = active.len() as f64 * spec.service_rate;
            let total = lambda + dep_rate;
            let is_arrival = rng.gen::<f64>() * total < lambda;
            if !is_arrival {
                let idx = rng.gen_range(0..active.len());
                used -= active.swap_remove(idx);
                continue;
            }
            arrivals_seen += 1;
            // pick the class proportionally to its arrival rate
            let mut pick = rng.gen::<f64>() * lambda;
            let mut class = n_classes - 1;
            for (c, cs) in spec.classes.iter().enumerate() {
                pick -= cs.arrival_rate;
                if pick < 0.0 {
                    class = c;
                    break;
                }
            }
            let demand = sample_pmf(&spec.classes[class].demand, &mut rng);
            let is_split_class = matches!(split, Some((c, _)) if c == class);
            if is_split_class {
                capable += 1;
                capable_total += 1;
                let divert = match split.unwrap().1 {
                    SplitPolicy::Baseline => false,
                    SplitPolicy::FatOffload { threshold } => demand > threshold,
                    SplitPolicy::SlimOffload { threshold } => demand <= threshold,
                };
                if divert {
                    offloaded += 1;
                    offloaded_total += 1;
                    offloaded_hist[demand.min(spec.r_max + 1)] += 1;
                    continue;
                }
            }
            offered[class] += 1;
            if active.len() < spec.k_max && used + demand <= spec.r_max {
                active.push(demand);
                used += demand;
            } else {
                blocked[class] += 1;
                if is_split_class {
                    offloaded += 1;
                    offloaded_total += 1;
                    offloaded_hist[demand.min(spec.r_max + 1)] += 1;
                }
            }
            // resource conservation: admitted load never exceeds capacity
            assert!(used <= spec.r_max && active.len() <= spec.k_max);
        }
        for c in 0..n_classes {
            if offered[c] > 0 {
                loss_batches[c].push(blocked[c] as f64 / offered[c] as f64);
            }
        }
        if capable > 0 {
            offload_batches.push(offloaded as f64 / capable as f64);
        }
    }

    let class_loss = loss_batches
        .iter()
        .map(|b| {
            if b.len() >= 2 {
                batch_estimate(b, ctl.confidence_level)
            } else {
                EstimateWithCI {
                    estimate: b.first().copied().unwrap_or(0.0),
                    half_width: f64::INFINITY,
                    batches: b.len(),
                }
            }
        })
        .collect();
    let offload_probability = if offload_batches.len() >= 2 {
        batch_estimate(&offload_batches, ctl.confidence_level)
    } else {
        EstimateWithCI {
            estimate: offload_batches.first().copied().unwrap_or(0.0),
            half_width: f64::INFINITY,
            batches: offload_batches.len(),
        }
    };
    Ok(ResqSimResult {
        class_loss,
        offloaded_hist,
        offloaded_total,
        capable_total,
        offload_probability,
    })
}

/// Simulation output of the slot-level contention model.
#[derive(Debug, Clone)]
pub struct LbtSimResult {
    /// Per-slot transmission probability of one station, per technology.
    pub pi_nru: EstimateWithCI,
    pub pi_wifi: EstimateWithCI,
    /// Per-attempt collision probability, per technology.
    pub collision_nru: EstimateWithCI,
    pub collision_wifi: EstimateWithCI,
    /// Per-attempt success (no collision, no blockage) of the NR-U side.
    pub success_nru: EstimateWithCI,
    pub slots: u64,
}

#[derive(Debug, Clone, Copy)]
struct Station {
    wifi: bool,
    stage: u32,
    counter: u32,
}

/// Slot-synchronous simulation of saturated LBT stations with geometric
/// (memoryless) retry: a station at backoff stage j transmits in each slot
/// with probability 1/b_j, where b_j is the mean backoff of that stage. An
/// attempt fails on collision (any other station transmitting) or on an
/// independent Bernoulli(p_b) blockage, deepening the stage up to
/// `max_retries`; past the last stage the packet is dropped and the station
/// restarts at stage 0. Idle stretches are skipped by jumping ahead by the
/// minimum remaining countdown.
pub fn simulate_lbt(
    n_nru: usize,
    n_wifi: usize,
    cfg: &ContentionConfig,
    ctl: &SimControl,
) -> Result<LbtSimResult> {
    ctl.validate()?;
    cfg.validate()?;
    if n_nru + n_wifi == 0 {
        return Err(Error::Domain("need at least one station".into()));
    }
    let batches = ctl.batch_count;
    let per_batch = ctl.slot_budget / batches as u64;
    if per_batch == 0 {
        return Err(Error::SimControl("slot budget smaller than one batch".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(ctl.seed);
    rng.set_stream(STREAM_LBT);

    // per-slot attempt probability of stage j: 1 / b_j
    let attempt_p = |wifi: bool, stage: u32| -> f64 {
        let p = if wifi { &cfg.wifi } else { &cfg.nru };
        1.0 / crate::lbt::mean_backoff_slots(stage.min(p.max_retries), p.initial_window)
    };
    let retries = |wifi: bool| -> u32 {
        if wifi {
            cfg.wifi.max_retries
        } else {
            cfg.nru.max_retries
        }
    };

    // slots before the next attempt under per-slot Bernoulli(p) attempts
    fn draw_countdown(rng: &mut ChaCha8Rng, p: f64) -> u32 {
        if p >= 1.0 {
            return 0;
        }
        let u: f64 = rng.gen::<f64>().max(1e-300);
        (u.ln() / (1.0 - p).ln()).min(u32::MAX as f64) as u32
    }

    let mut stations: Vec<Station> = Vec::with_capacity(n_nru + n_wifi);
    for i in 0..n_nru + n_wifi {
        let wifi = i >= n_nru;
        let p = attempt_p(wifi, 0);
        stations.push(Station {
            wifi,
            stage: 0,
            counter: draw_countdown(&mut rng, p),
        });
    }

    let mut pi_n_b = Vec::with_capacity(batches);
    let mut pi_w_b = Vec::with_capacity(batches);
    let mut pc_n_b = Vec::with_capacity(batches);
    let mut pc_w_b = Vec::with_capacity(batches);
    let mut succ_n_b = Vec::with_capacity(batches);
    let mut total_slots = 0u64;
    let mut transmitters: Vec<usize> = Vec::new();

    for _ in 0..batches {
        let mut slots = 0u64;
        let mut att = [0u64; 2]; // [nru, wifi]
        let mut col = [0u64; 2];
        let mut succ_n = 0u64;
        while slots < per_batch {
            // skip the idle run-up to the next attempt
            let min_c = stations.iter().map(|s| s.counter).min().unwrap();
            if min_c > 0 {
                let skip = (min_c as u64).min(per_batch - slots).max(1) as u32;
                for s in &mut stations {
                    s.counter -= skip;
                }
                slots += skip as u64;
                if slots >= per_batch {
                    break;
                }
            }
            transmitters.clear();
            transmitters.extend(
                stations
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s.counter == 0)
                    .map(|(i, _)| i),
            );
            let collided = transmitters.len() > 1;
            for &i in &transmitters {
                let wifi = stations[i].wifi;
                let tech = wifi as usize;
                att[tech] += 1;
                if collided {
                    col[tech] += 1;
                }
                let blocked = rng.gen::<f64>() < cfg.blockage_prob;
                let ok = !collided && !blocked;
                if ok && !wifi {
                    succ_n += 1;
                }
                let st = &mut stations[i];
                if ok || st.stage >= retries(wifi) {
                    st.stage = 0;
                } else {
                    st.stage += 1;
                }
                let p = attempt_p(wifi, st.stage);
                st.counter = draw_countdown(&mut rng, p);
            }
            for (i, s) in stations.iter_mut().enumerate() {
                if !transmitters.contains(&i) {
                    // non-transmitting stations consume the slot; memoryless
                    // countdowns just tick down
                    s.counter = s.counter.saturating_sub(1);
                }
            }
            slots += 1;
        }
        total_slots += slots;
        if n_nru > 0 {
            pi_n_b.push(att[0] as f64 / (n_nru as f64 * slots as f64));
            if att[0] > 0 {
                pc_n_b.push(col[0] as f64 / att[0] as f64);
                succ_n_b.push(succ_n as f64 / att[0] as f64);
            }
        }
        if n_wifi > 0 {
            pi_w_b.push(att[1] as f64 / (n_wifi as f64 * slots as f64));
            if att[1] > 0 {
                pc_w_b.push(col[1] as f64 / att[1] as f64);
            }
        }
    }

    let est = |b: &Vec<f64>| -> EstimateWithCI {
        if b.len() >= 2 {
            batch_estimate(b, ctl.confidence_level)
        } else {
            EstimateWithCI {
                estimate: b.first().copied().unwrap_or(0.0),
                half_width: if b.is_empty() { 0.0 } else { f64::INFINITY },
                batches: b.len(),
            }
        }
    };
    Ok(LbtSimResult {
        pi_nru: est(&pi_n_b),
        pi_wifi: est(&pi_w_b),
        collision_nru: est(&pc_n_b),
        collision_wifi: est(&pc_w_b),
        success_nru: est(&succ_n_b),
        slots: total_slots,
    })
}

/// Guard on the exact chain's state count.
const CTMC_STATE_GUARD: usize = 200_000;

/// Exact stationary distribution of the loss queue's full CTMC.
///
/// States are multisets of in-service demands, encoded as occupation counts
/// per demand value with `sum counts <= K` and `sum j * counts <= R`.
#[derive(Debug, Clone)]
pub struct CtmcSolution {
    /// Demand values with positive arrival mass, in encoding order.
    pub demands: Vec<usize>,
    /// Occupation-count vectors, one per state.
    pub states: Vec<Vec<usize>>,
    /// Stationary probability per state.
    pub probs: Vec<f64>,
    k_max: usize,
    r_max: usize,
}

impl CtmcSolution {
    /// Joint (sessions, occupied units) marginal, comparable to the
    /// product-form stationary distribution.
    pub fn kr_marginal(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.r_max + 1]; self.k_max + 1];
        for (state, &p) in self.states.iter().zip(&self.probs) {
            let k: usize = state.iter().sum();
            let r: usize = state
                .iter()
                .zip(&self.demands)
                .map(|(c, j)| c * j)
                .sum();
            m[k][r] += p;
        }
        m
    }
}

fn enumerate_states(
    demands: &[usize],
    k_max: usize,
    r_max: usize,
) -> Result<Vec<Vec<usize>>> {
    let mut states = Vec::new();
    let mut current = vec![0usize; demands.len()];
    fn rec(
        demands: &[usize],
        i: usize,
        k_left: usize,
        r_left: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) -> Result<()> {
        if i == demands.len() {
            out.push(current.clone());
            if out.len() > CTMC_STATE_GUARD {
                return Err(Error::Capacity {
                    size: out.len(),
                    guard: CTMC_STATE_GUARD,
                });
            }
            return Ok(());
        }
        let d = demands[i];
        let max_n = if d == 0 { k_left } else { k_left.min(r_left / d) };
        for n in 0..=max_n {
            current[i] = n;
            rec(demands, i + 1, k_left - n, r_left - n * d, current, out)?;
            current[i] = 0;
        }
        Ok(())
    }
    rec(demands, 0, k_max, r_max, &mut current, &mut states)?;
    Ok(states)
}

/// Build and solve the exact chain for a queue spec.
pub fn exact_ctmc_resq(spec: &QueueSpec) -> Result<CtmcSolution> {
    spec.validate()?;
    // per-demand aggregate arrival rates across classes
    let mut rate_by_demand = vec![0.0f64; spec.r_max + 1];
    for c in &spec.classes {
        for j in 0..=c.demand.support_max().min(spec.r_max) {
            rate_by_demand[j] += c.arrival_rate * c.demand.get(j);
        }
    }
    let demands: Vec<usize> = (0..=spec.r_max)
        .filter(|&j| rate_by_demand[j] > 0.0)
        .collect();
    if demands.is_empty() {
        return Err(Error::Domain("no demand mass within capacity".into()));
    }
    let states = enumerate_states(&demands, spec.k_max, spec.r_max)?;
    let n = states.len();
    let mut index = std::collections::HashMap::with_capacity(n);
    for (i, s) in states.iter().enumerate() {
        index.insert(s.clone(), i);
    }

    // generator transposed into the linear system Q^T pi = 0 with the
    // normalization row appended (replace last equation)
    let mut a = nalgebra::DMatrix::<f64>::zeros(n, n);
    for (i, s) in states.iter().enumerate() {
        let k: usize = s.iter().sum();
        let r: usize = s.iter().zip(&demands).map(|(c, j)| c * j).sum();
        let mut out_rate = 0.0;
        for (di, &d) in demands.iter().enumerate() {
            // arrival of demand d
            if k < spec.k_max && r + d <= spec.r_max {
                let mut t = s.clone();
                t[di] += 1;
                let j = index[&t];
                let rate = rate_by_demand[d];
                a[(j, i)] += rate;
                out_rate += rate;
            }
            // departure of one session of demand d
            if s[di] > 0 {
                let mut t = s.clone();
                t[di] -= 1;
                let j = index[&t];
                let rate = s[di] as f64 * spec.service_rate;
                a[(j, i)] += rate;
                out_rate += rate;
            }
        }
        a[(i, i)] -= out_rate;
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = nalgebra::DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let lu = a.lu();
    let probs = lu
        .solve(&b)
        .ok_or_else(|| Error::Domain("singular CTMC system".into()))?;
    Ok(CtmcSolution {
        demands,
        states,
        probs: probs.iter().copied().collect(),
        k_max: spec.k_max,
        r_max: spec.r_max,
    })
}

/// Pearson chi-square statistic of an observed histogram against expected
/// probabilities, with the p-value from the chi-squared distribution.
/// Cells with expected count < 5 are pooled into their left neighbor.
pub fn chi_square_test(observed: &[u64], expected: &[f64]) -> Result<(f64, usize, f64)> {
    if observed.len() != expected.len() || observed.is_empty() {
        return Err(Error::Domain("histogram/expectation length mismatch".into()));
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(Error::Domain("empty histogram".into()));
    }
    let t = total as f64;
    // pool sparse cells left to right
    let mut cells: Vec<(f64, f64)> = Vec::new(); // (observed, expected count)
    for (&o, &e) in observed.iter().zip(expected) {
        let exp = e * t;
        match cells.last_mut() {
            Some(last) if last.1 < 5.0 => {
                last.0 += o as f64;
                last.1 += exp;
            }
            _ => cells.push((o as f64, exp)),
        }
    }
    if let [.., prev, last] = cells.as_mut_slice() {
        if last.1 < 5.0 {
            prev.0 += last.0;
            prev.1 += last.1;
            cells.pop();
        }
    }
    if cells.len() < 2 {
        return Err(Error::Domain("not enough cells for a chi-square test".into()));
    }
    let stat: f64 = cells
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = cells.len() - 1;
    let dist = ChiSquared::new(dof as f64)
        .map_err(|e| Error::Domain(format!("chi-square dof: {e}")))?;
    let p_value = 1.0 - dist.cdf(stat);
    Ok((stat, dof, p_value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lbt::{solve_contention, BackoffParams};
    use crate::resq::{erlang_b, ClassSpec, GTable};

    fn ctl(seed: u64) -> SimControl {
        SimControl {
            seed,
            ..SimControl::default()
        }
    }

    fn unit_spec(k: usize, rho: f64) -> QueueSpec {
        QueueSpec {
            k_max: k,
            r_max: k,
            service_rate: 1.0,
            classes: vec![ClassSpec {
                arrival_rate: rho,
                demand: DiscretePmf::delta(1),
            }],
        }
    }

    #[test]
    fn resq_sim_matches_erlang_b() {
        // K=1, R=1, rho=1: loss = ErlangB(1,1) = 0.5
        let spec = unit_spec(1, 1.0);
        let res = simulate_resq(&spec, None, &ctl(7)).unwrap();
        let b = erlang_b(1.0, 1);
        assert!((b - 0.5).abs() < 1e-15);
        assert!(
            res.class_loss[0].contains(b),
            "estimate {} +- {} vs {}",
            res.class_loss[0].estimate,
            res.class_loss[0].half_width,
            b
        );
    }

    #[test]
    fn resq_sim_zero_load_is_zero_loss() {
        let spec = unit_spec(1, 0.0);
        let res = simulate_resq(&spec, None, &ctl(1)).unwrap();
        assert_eq!(res.class_loss[0].estimate, 0.0);
        assert_eq!(res.class_loss[0].half_width, 0.0);
    }

    #[test]
    fn resq_sim_is_reproducible() {
        let spec = unit_spec(3, 2.0);
        let a = simulate_resq(&spec, None, &ctl(42)).unwrap();
        let b = simulate_resq(&spec, None, &ctl(42)).unwrap();
        assert_eq!(a.class_loss[0].estimate.to_bits(), b.class_loss[0].estimate.to_bits());
        assert_eq!(a.offloaded_hist, b.offloaded_hist);
    }

    #[test]
    fn resq_sim_budget_guard() {
        let spec = unit_spec(1, 1.0);
        let bad = SimControl {
            event_budget: 5,
            batch_count: 10,
            ..SimControl::default()
        };
        assert!(matches!(
            simulate_resq(&spec, None, &bad),
            Err(Error::SimControl(_))
        ));
    }

    #[test]
    fn lbt_sim_single_station_always_succeeds() {
        let cfg = ContentionConfig {
            wifi: BackoffParams { initial_window: 16, max_retries: 3 },
            nru: BackoffParams { initial_window: 16, max_retries: 3 },
            n_wifi: 0.0,
            n_nru: 1.0,
            blockage_prob: 0.0,
            self_in_collision: false,
        };
        let res = simulate_lbt(1, 0, &cfg, &ctl(3)).unwrap();
        assert_eq!(res.success_nru.estimate, 1.0);
        assert_eq!(res.collision_nru.estimate, 0.0);
    }

    #[test]
    fn lbt_sim_two_stations_w2_t0_matches_enumeration() {
        // W=2, T=0: enumerate the joint counter chain on {0,1}^2.
        // (0,0) -> uniform redraw; (0,1)/(1,0) -> transmitter redraws, peer
        // hits 0; (1,1) -> (0,0). Stationary: pi(0,0)=4/9, pi(0,1)=pi(1,0)
        // =2/9, pi(1,1)=1/9. Attempts: 2 per (0,0) slot (all collided), 1
        // per mixed slot (clean), so per-attempt collision = (8/9)/(12/9)
        // = 2/3.
        let cfg = ContentionConfig {
            wifi: BackoffParams { initial_window: 2, max_retries: 0 },
            nru: BackoffParams { initial_window: 2, max_retries: 0 },
            n_wifi: 0.0,
            n_nru: 2.0,
            blockage_prob: 0.0,
            self_in_collision: false,
        };
        let mut c = ctl(11);
        c.slot_budget = 2_000_000;
        let res = simulate_lbt(2, 0, &cfg, &c).unwrap();
        assert!(
            res.collision_nru.contains(2.0 / 3.0),
            "collision {} +- {}",
            res.collision_nru.estimate,
            res.collision_nru.half_width
        );
    }

    #[test]
    fn lbt_sim_agrees_with_fixed_point() {
        let cfg = ContentionConfig {
            wifi: BackoffParams { initial_window: 16, max_retries: 3 },
            nru: BackoffParams { initial_window: 16, max_retries: 3 },
            n_wifi: 5.0,
            n_nru: 5.0,
            blockage_prob: 0.1,
            self_in_collision: false,
        };
        let sol = solve_contention(&cfg).unwrap();
        let mut c = ctl(5);
        c.slot_budget = 4_000_000;
        let res = simulate_lbt(5, 5, &cfg, &c).unwrap();
        for (sim, exact) in [
            (&res.pi_nru, sol.pi_nru),
            (&res.pi_wifi, sol.pi_wifi),
            (&res.collision_nru, sol.collision_nru),
            (&res.collision_wifi, sol.collision_wifi),
        ] {
            // 3 sigma: half_width is already ~2 sigma at 95%
            let three_sigma = 1.5 * sim.half_width;
            assert!(
                (sim.estimate - exact).abs() <= three_sigma,
                "sim {} +- {} vs exact {}",
                sim.estimate,
                sim.half_width,
                exact
            );
        }
    }

    #[test]
    fn ctmc_two_state_chain_by_hand() {
        // K=1, R=1, unit demand, rho=1: states {empty, busy}, each 0.5
        let spec = unit_spec(1, 1.0);
        let sol = exact_ctmc_resq(&spec).unwrap();
        assert_eq!(sol.states.len(), 2);
        for &p in &sol.probs {
            assert!((p - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn ctmc_matches_product_form() {
        // K=3, R=4, mixed demands: TV distance to the G-table form < 1e-9
        let demand = DiscretePmf::new(vec![0.0, 0.55, 0.3, 0.15]).unwrap();
        let spec = QueueSpec {
            k_max: 3,
            r_max: 4,
            service_rate: 1.0,
            classes: vec![ClassSpec {
                arrival_rate: 1.7,
                demand,
            }],
        };
        let sol = exact_ctmc_resq(&spec).unwrap();
        let table = GTable::build(&spec).unwrap();
        let m = sol.kr_marginal();
        let mut tv = 0.0;
        for k in 0..=spec.k_max {
            for r in 0..=spec.r_max {
                tv += (m[k][r] - table.stationary(k, r, spec.k_max, spec.r_max)).abs();
            }
        }
        assert!(tv / 2.0 < 1e-9, "tv={tv:.3e}");
    }

    #[test]
    fn ctmc_state_guard_trips() {
        let spec = QueueSpec {
            k_max: 60,
            r_max: 120,
            service_rate: 1.0,
            classes: vec![ClassSpec {
                arrival_rate: 1.0,
                demand: DiscretePmf::normalized(vec![0.0, 0.2, 0.2, 0.2, 0.2, 0.2]).unwrap(),
            }],
        };
        assert!(matches!(
            exact_ctmc_resq(&spec),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn chi_square_accepts_true_distribution() {
        let expected = [0.25, 0.25, 0.25, 0.25];
        let observed = [2500u64, 2450, 2550, 2500];
        let (_, _, p) = chi_square_test(&observed, &expected).unwrap();
        assert!(p > 0.01);
    }

    #[test]
    fn chi_square_rejects_wrong_distribution() {
        let expected = [0.25, 0.25, 0.25, 0.25];
        let observed = [4000u64, 2000, 2000, 2000];
        let (_, _, p) = chi_square_test(&observed, &expected).unwrap();
        assert!(p < 0.01);
    }
}
