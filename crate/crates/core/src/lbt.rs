//! Saturated listen-before-talk contention between the Wi-Fi style
//! population and the cellular unlicensed interface, and the rates the
//! offloaded sessions attain.
//!
//! Each contender runs a binary exponential backoff with `T` retries and
//! initial window `W`; a slot attempt succeeds when no other contender
//! transmits in the same slot. The per-technology transmission probability
//! is the fixed point of the classic attempt/collision coupling.

use crate::error::{Error, Result};
use crate::pmf::DiscretePmf;

/// Contention parameters of one technology on the shared band.
#[derive(Debug, Clone, Copy)]
pub struct BackoffParams {
    /// Initial contention window (slots).
    pub initial_window: u32,
    /// Maximum number of retransmissions after the first attempt.
    pub max_retries: u32,
}

impl BackoffParams {
    pub fn validate(&self) -> Result<()> {
        if self.initial_window < 1 {
            return Err(Error::Domain("initial window must be >= 1".into()));
        }
        if self.max_retries > 60 {
            return Err(Error::Domain("retry limit too large".into()));
        }
        Ok(())
    }
}

/// Populations and channel state seen by the fixed point.
#[derive(Debug, Clone, Copy)]
pub struct ContentionConfig {
    pub wifi: BackoffParams,
    pub nru: BackoffParams,
    /// Mean number of saturated Wi-Fi style contenders.
    pub n_wifi: f64,
    /// Mean number of saturated cellular unlicensed contenders.
    pub n_nru: f64,
    /// Probability that a slot is spoiled by link blockage.
    pub blockage_prob: f64,
    /// When true, a contender counts itself among its own interferers in
    /// the collision probability, reproducing the symmetric textbook form.
    pub self_in_collision: bool,
}

impl ContentionConfig {
    pub fn validate(&self) -> Result<()> {
        self.wifi.validate()?;
        self.nru.validate()?;
        if self.n_wifi < 0.0 || self.n_nru < 0.0 {
            return Err(Error::Domain("populations must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.blockage_prob) {
            return Err(Error::Domain("blockage probability must be in [0,1)".into()));
        }
        Ok(())
    }
}

/// Distribution of the retry stage at which a tagged attempt succeeds,
/// conditioned on eventual success within the retry budget:
/// q_i = (1-theta)^i theta / (1 - (1-theta)^(T+1)).
pub fn retry_distribution(theta: f64, max_retries: u32) -> Result<Vec<f64>> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::Domain(format!("success probability {theta} out of (0,1]")));
    }
    let t = max_retries as usize;
    let fail = 1.0 - theta;
    let norm = 1.0 - fail.powi(t as i32 + 1);
    let mut q = Vec::with_capacity(t + 1);
    let mut term = theta / norm;
    for _ in 0..=t {
        q.push(term);
        term *= fail;
    }
    Ok(q)
}

/// Mean backoff duration of stage j: b_j = (2^j W + 1) / 2 slots.
pub fn mean_backoff_slots(stage: u32, initial_window: u32) -> f64 {
    ((1u64 << stage) as f64 * initial_window as f64 + 1.0) / 2.0
}

/// Per-slot transmission probability of a saturated contender whose
/// attempts succeed with probability theta:
///
///   pi = [ sum_j q_j b_j ]^(-1)
///
/// evaluated as the direct sum over retry stages.
pub fn transmission_probability(theta: f64, params: &BackoffParams) -> Result<f64> {
    let q = retry_distribution(theta, params.max_retries)?;
    let denom: f64 = q
        .iter()
        .enumerate()
        .map(|(j, qj)| qj * mean_backoff_slots(j as u32, params.initial_window))
        .sum();
    Ok(1.0 / denom)
}

/// Closed-form evaluation of the same quantity, defined for theta != 1/2:
///
///   pi = 2 (1 - 2f) (1 - f^(T+1))
///        / [ (1-2f)(1 - f^(T+1)) + W theta (1 - (2f)^(T+1)) ]
///
/// with f = 1 - theta. Cross-check only; the direct sum is authoritative.
pub fn transmission_probability_closed_form(theta: f64, params: &BackoffParams) -> Result<f64> {
    if (theta - 0.5).abs() < 1e-9 {
        return Err(Error::Domain("closed form is singular at theta = 1/2".into()));
    }
    let f = 1.0 - theta;
    let t1 = params.max_retries as i32 + 1;
    let w = params.initial_window as f64;
    let a = (1.0 - 2.0 * f) * (1.0 - f.powi(t1));
    let b = w * theta * (1.0 - (2.0 * f).powi(t1));
    Ok(2.0 * a / (a + b))
}

/// Converged per-technology transmission probabilities.
#[derive(Debug, Clone, Copy)]
pub struct ContentionSolution {
    pub pi_wifi: f64,
    pub pi_nru: f64,
    /// Collision probability seen by a tagged Wi-Fi contender.
    pub collision_wifi: f64,
    /// Collision probability seen by the tagged cellular contender.
    pub collision_nru: f64,
    pub iterations: usize,
}

const FP_DAMPING: f64 = 0.5;
const FP_TOL: f64 = 1e-13;
const FP_MAX_ITER: usize = 10_000;

/// Collision probability of a tagged contender of one technology given the
/// two attempt probabilities and the populations it competes against.
fn collision(pi_w: f64, pi_n: f64, n_w: f64, n_n: f64, tagged_nru: bool, self_in: bool) -> f64 {
    // other-contender counts: the tagged station does not collide with
    // itself unless the symmetric textbook convention is requested
    let (m_w, m_n) = if self_in {
        (n_w, n_n)
    } else if tagged_nru {
        (n_w, (n_n - 1.0).max(0.0))
    } else {
        ((n_w - 1.0).max(0.0), n_n)
    };
    1.0 - (1.0 - pi_w).powf(m_w) * (1.0 - pi_n).powf(m_n)
}

/// Solve the coupled fixed point
///   theta_x = (1 - p_c,x)(1 - p_b),  pi_x = pi(theta_x)
/// by damped iteration from pi = 0.1. Each technology with a zero
/// population is excluded (its pi is reported as 0).
pub fn solve_contention(cfg: &ContentionConfig) -> Result<ContentionSolution> {
    cfg.validate()?;
    let has_w = cfg.n_wifi > 0.0;
    let has_n = cfg.n_nru > 0.0;
    if !has_w && !has_n {
        return Ok(ContentionSolution {
            pi_wifi: 0.0,
            pi_nru: 0.0,
            collision_wifi: 0.0,
            collision_nru: 0.0,
            iterations: 0,
        });
    }
    let mut pi_w = if has_w { 0.1 } else { 0.0 };
    let mut pi_n = if has_n { 0.1 } else { 0.0 };
    let mut residual = f64::INFINITY;
    for iter in 1..=FP_MAX_ITER {
        let mut next_w = 0.0;
        let mut next_n = 0.0;
        if has_w {
            let pc = collision(pi_w, pi_n, cfg.n_wifi, cfg.n_nru, false, cfg.self_in_collision);
            let theta = ((1.0 - pc) * (1.0 - cfg.blockage_prob)).max(1e-300);
            next_w = transmission_probability(theta, &cfg.wifi)?;
        }
        if has_n {
            let pc = collision(pi_w, pi_n, cfg.n_wifi, cfg.n_nru, true, cfg.self_in_collision);
            let theta = ((1.0 - pc) * (1.0 - cfg.blockage_prob)).max(1e-300);
            next_n = transmission_probability(theta, &cfg.nru)?;
        }
        residual = (next_w - pi_w).abs().max((next_n - pi_n).abs());
        pi_w += FP_DAMPING * (next_w - pi_w);
        pi_n += FP_DAMPING * (next_n - pi_n);
        if residual < FP_TOL {
            let collision_wifi = if has_w {
                collision(pi_w, pi_n, cfg.n_wifi, cfg.n_nru, false, cfg.self_in_collision)
            } else {
                0.0
            };
            let collision_nru = if has_n {
                collision(pi_w, pi_n, cfg.n_wifi, cfg.n_nru, true, cfg.self_in_collision)
            } else {
                0.0
            };
            return Ok(ContentionSolution {
                pi_wifi: pi_w,
                pi_nru: pi_n,
                collision_wifi,
                collision_nru,
                iterations: iter,
            });
        }
    }
    Err(Error::Convergence {
        iterations: FP_MAX_ITER,
        residual,
    })
}

/// Which technology hosts the tagged transmitter in the Poisson mixtures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tagged {
    Nru,
    Wifi,
}

fn mixture<F: Fn(&ContentionSolution, usize, usize) -> f64>(
    rho_nru: f64,
    rho_wifi: f64,
    cfg: &ContentionConfig,
    truncation_mass: f64,
    tagged: Tagged,
    term: F,
) -> Result<f64> {
    cfg.validate()?;
    if rho_nru < 0.0 || rho_wifi < 0.0 {
        return Err(Error::Domain("offered loads must be >= 0".into()));
    }
    if !(truncation_mass > 0.0 && truncation_mass <= 1e-6) {
        return Err(Error::Domain("truncation mass must be in (0, 1e-6]".into()));
    }
    let w_terms = poisson_terms(rho_wifi, truncation_mass);
    let n_terms = poisson_terms(rho_nru, truncation_mass);
    let mut acc = 0.0;
    for &(i, wi) in &w_terms {
        for &(j, wj) in &n_terms {
            // each term sees (i, j) peers plus the tagged station
            let (n_w, n_n) = match tagged {
                Tagged::Nru => (i as f64, j as f64 + 1.0),
                Tagged::Wifi => (i as f64 + 1.0, j as f64),
            };
            let sub = ContentionConfig {
                n_wifi: n_w,
                n_nru: n_n,
                ..*cfg
            };
            let sol = solve_contention(&sub)?;
            acc += wi * wj * term(&sol, i, j);
        }
    }
    Ok(acc)
}

/// Long-run fraction of slots in which the tagged cellular unlicensed
/// interface transmits successfully, averaged over Poisson populations of
/// saturated contenders whose means are the offered loads:
///
///   Pi_N = sum_{i,j} Pois(i; rho*_W) Pois(j; rho*_N) pi_N(i, j+1)
///          * (1-pi_W)^i (1-pi_N)^j (1 - p_b)
///
/// where each (i, j) term re-solves the fixed point with the tagged
/// interface plus its peers.
pub fn success_probability(
    rho_nru: f64,
    rho_wifi: f64,
    cfg: &ContentionConfig,
    truncation_mass: f64,
) -> Result<f64> {
    let p_b = cfg.blockage_prob;
    mixture(rho_nru, rho_wifi, cfg, truncation_mass, Tagged::Nru, |sol, i, j| {
        sol.pi_nru
            * (1.0 - sol.pi_wifi).powi(i as i32)
            * (1.0 - sol.pi_nru).powi(j as i32)
            * (1.0 - p_b)
    })
}

/// Mirror of `success_probability` for a tagged Wi-Fi style station,
/// used by the contention-window fairness search.
pub fn success_probability_wifi(
    rho_nru: f64,
    rho_wifi: f64,
    cfg: &ContentionConfig,
    truncation_mass: f64,
) -> Result<f64> {
    let p_b = cfg.blockage_prob;
    mixture(rho_nru, rho_wifi, cfg, truncation_mass, Tagged::Wifi, |sol, i, j| {
        sol.pi_wifi
            * (1.0 - sol.pi_wifi).powi(i as i32)
            * (1.0 - sol.pi_nru).powi(j as i32)
            * (1.0 - p_b)
    })
}

/// Population-averaged collision probability seen by the tagged cellular
/// interface, weighted the same way as `success_probability`. Exposed as a
/// diagnostic for trend studies.
pub fn mixed_collision(
    rho_nru: f64,
    rho_wifi: f64,
    cfg: &ContentionConfig,
    truncation_mass: f64,
) -> Result<f64> {
    mixture(rho_nru, rho_wifi, cfg, truncation_mass, Tagged::Nru, |sol, _, _| {
        sol.collision_nru
    })
}

/// Poisson pmf terms (k, P(N=k)) covering all but `tail` of the mass.
fn poisson_terms(mean: f64, tail: f64) -> Vec<(usize, f64)> {
    if mean <= 0.0 {
        return vec![(0, 1.0)];
    }
    let mut terms = Vec::new();
    let mut p = (-mean).exp();
    let mut cum = 0.0;
    let mut k = 0usize;
    loop {
        terms.push((k, p));
        cum += p;
        if cum >= 1.0 - tail && k as f64 > mean {
            break;
        }
        k += 1;
        p *= mean / k as f64;
        if k > 10_000 {
            break;
        }
    }
    terms
}

/// How the successful airtime share converts into per-class bit rates.
#[derive(Debug, Clone)]
pub enum RateMap {
    /// Class j gets share * bandwidth * efficiency_j, indexed by demand.
    PerClass(Vec<f64>),
    /// Every offloaded session gets the same rate.
    Uniform(f64),
}

/// Attained unlicensed rate per demand class j.
pub fn attained_rates(
    success_share: f64,
    bandwidth_hz: f64,
    map: &RateMap,
    support_max: usize,
) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&success_share) {
        return Err(Error::Domain("success share must be in [0,1]".into()));
    }
    if bandwidth_hz <= 0.0 {
        return Err(Error::Domain("bandwidth must be > 0".into()));
    }
    match map {
        RateMap::PerClass(eff) => {
            if eff.len() < support_max + 1 {
                return Err(Error::Mapping(support_max));
            }
            Ok(eff[..=support_max]
                .iter()
                .map(|e| success_share * bandwidth_hz * e)
                .collect())
        }
        RateMap::Uniform(e) => Ok(vec![success_share * bandwidth_hz * e; support_max + 1]),
    }
}

/// Probability that an offloaded session's attained rate falls short of the
/// minimum: Q = sum_{j : rate_j < r_min} p_j.
pub fn qos_violation(offloaded: &DiscretePmf, rates: &[f64], r_min: f64) -> Result<f64> {
    if rates.len() < offloaded.support_max() + 1 {
        return Err(Error::Mapping(offloaded.support_max()));
    }
    let mut q = 0.0;
    for j in 0..=offloaded.support_max() {
        if rates[j] < r_min {
            q += offloaded.get(j);
        }
    }
    Ok(q.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(w: u32, t: u32) -> BackoffParams {
        BackoffParams {
            initial_window: w,
            max_retries: t,
        }
    }

    #[test]
    fn retry_distribution_is_proper() {
        for &theta in &[0.05, 0.3, 0.5, 0.9, 1.0] {
            let q = retry_distribution(theta, 6).unwrap();
            let total: f64 = q.iter().sum();
            assert!((total - 1.0).abs() < 1e-12, "theta={theta}");
            // geometric ratio between consecutive stages
            for w in q.windows(2) {
                if w[0] > 0.0 {
                    assert!((w[1] / w[0] - (1.0 - theta)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn backoff_slots_reference_values() {
        assert_eq!(mean_backoff_slots(0, 16), 8.5);
        assert_eq!(mean_backoff_slots(1, 16), 16.5);
        assert_eq!(mean_backoff_slots(3, 16), 64.5);
        assert_eq!(mean_backoff_slots(0, 1), 1.0);
    }

    #[test]
    fn certain_success_gives_two_over_w_plus_one() {
        // theta = 1 puts all mass at stage 0, so pi = 1/b_0 = 2/(W+1)
        for w in [1u32, 4, 16, 64] {
            let pi = transmission_probability(1.0, &params(w, 6)).unwrap();
            assert!((pi - 2.0 / (w as f64 + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_matches_direct_sum() {
        for &theta in &[0.01, 0.1, 0.3, 0.499, 0.501, 0.7, 0.95, 1.0] {
            for w in [2u32, 8, 16, 32] {
                for t in [0u32, 1, 4, 7] {
                    let a = transmission_probability(theta, &params(w, t)).unwrap();
                    match transmission_probability_closed_form(theta, &params(w, t)) {
                        Ok(b) => assert!(
                            (a - b).abs() < 1e-9,
                            "theta={theta} w={w} t={t}: {a} vs {b}"
                        ),
                        Err(_) => assert!((theta - 0.5).abs() < 1e-9),
                    }
                }
            }
        }
    }

    #[test]
    fn closed_form_rejects_half() {
        assert!(transmission_probability_closed_form(0.5, &params(16, 6)).is_err());
        // the direct sum is continuous through theta = 1/2
        let a = transmission_probability(0.5 - 1e-7, &params(16, 6)).unwrap();
        let b = transmission_probability(0.5 + 1e-7, &params(16, 6)).unwrap();
        assert!((a - b).abs() < 1e-5);
    }

    #[test]
    fn fixed_point_converges_and_is_consistent() {
        let cfg = ContentionConfig {
            wifi: params(16, 6),
            nru: params(16, 6),
            n_wifi: 8.0,
            n_nru: 4.0,
            blockage_prob: 0.1,
            self_in_collision: false,
        };
        let sol = solve_contention(&cfg).unwrap();
        assert!(sol.pi_wifi > 0.0 && sol.pi_wifi < 1.0);
        assert!(sol.pi_nru > 0.0 && sol.pi_nru < 1.0);
        // residual of the defining equations at the reported point
        let theta_w = (1.0 - sol.collision_wifi) * (1.0 - cfg.blockage_prob);
        let theta_n = (1.0 - sol.collision_nru) * (1.0 - cfg.blockage_prob);
        let rw = (transmission_probability(theta_w, &cfg.wifi).unwrap() - sol.pi_wifi).abs();
        let rn = (transmission_probability(theta_n, &cfg.nru).unwrap() - sol.pi_nru).abs();
        assert!(rw < 1e-8 && rn < 1e-8, "residuals {rw} {rn}");
    }

    #[test]
    fn symmetric_populations_give_equal_probabilities() {
        let cfg = ContentionConfig {
            wifi: params(16, 6),
            nru: params(16, 6),
            n_wifi: 5.0,
            n_nru: 5.0,
            blockage_prob: 0.05,
            self_in_collision: true,
        };
        let sol = solve_contention(&cfg).unwrap();
        assert!((sol.pi_wifi - sol.pi_nru).abs() < 1e-9);
        assert!((sol.collision_wifi - sol.collision_nru).abs() < 1e-9);
    }

    #[test]
    fn lone_contender_without_blockage_always_succeeds() {
        let cfg = ContentionConfig {
            wifi: params(16, 6),
            nru: params(16, 6),
            n_wifi: 0.0,
            n_nru: 1.0,
            blockage_prob: 0.0,
            self_in_collision: false,
        };
        let sol = solve_contention(&cfg).unwrap();
        assert_eq!(sol.pi_wifi, 0.0);
        assert!((sol.pi_nru - 2.0 / 17.0).abs() < 1e-9);
        assert!(sol.collision_nru.abs() < 1e-12);
    }

    #[test]
    fn collision_increases_with_population() {
        let mut prev = -1.0;
        for n in [1.0, 2.0, 4.0, 8.0, 16.0] {
            let cfg = ContentionConfig {
                wifi: params(16, 6),
                nru: params(16, 6),
                n_wifi: n,
                n_nru: 2.0,
                blockage_prob: 0.1,
                self_in_collision: false,
            };
            let sol = solve_contention(&cfg).unwrap();
            assert!(sol.collision_nru > prev);
            prev = sol.collision_nru;
        }
    }

    #[test]
    fn success_share_bounds_and_degenerate_case() {
        let cfg = ContentionConfig {
            wifi: params(16, 6),
            nru: params(16, 6),
            n_wifi: 0.0,
            n_nru: 0.0,
            blockage_prob: 0.0,
            self_in_collision: false,
        };
        // no peers: tagged interface alone, share = pi = 2/(W+1)
        let s = success_probability(0.0, 0.0, &cfg, 1e-9).unwrap();
        assert!((s - 2.0 / 17.0).abs() < 1e-9);
        let busy = ContentionConfig {
            blockage_prob: 0.1,
            ..cfg
        };
        let sb = success_probability(6.0, 12.0, &busy, 1e-9).unwrap();
        assert!(sb > 0.0 && sb < s);
    }

    #[test]
    fn success_share_decreases_with_each_offered_load() {
        let cfg = ContentionConfig {
            wifi: params(16, 6),
            nru: params(16, 6),
            n_wifi: 0.0,
            n_nru: 0.0,
            blockage_prob: 0.05,
            self_in_collision: false,
        };
        let mut prev = f64::INFINITY;
        for rho_w in [0.0, 2.0, 5.0, 10.0] {
            let s = success_probability(3.0, rho_w, &cfg, 1e-9).unwrap();
            assert!(s < prev, "share not decreasing at rho_w={rho_w}");
            prev = s;
        }
        let mut prev = f64::INFINITY;
        for rho_n in [0.0, 2.0, 5.0, 10.0] {
            let s = success_probability(rho_n, 3.0, &cfg, 1e-9).unwrap();
            assert!(s < prev, "share not decreasing at rho_n={rho_n}");
            prev = s;
        }
    }

    #[test]
    fn tagged_mixtures_are_symmetric_under_swap() {
        let cfg = ContentionConfig {
            wifi: params(16, 6),
            nru: params(16, 6),
            n_wifi: 0.0,
            n_nru: 0.0,
            blockage_prob: 0.1,
            self_in_collision: false,
        };
        // identical backoff parameters: swapping the loads swaps the roles
        let a = success_probability(2.0, 7.0, &cfg, 1e-9).unwrap();
        let b = success_probability_wifi(7.0, 2.0, &cfg, 1e-9).unwrap();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn mixed_collision_grows_with_load() {
        let cfg = ContentionConfig {
            wifi: params(16, 6),
            nru: params(16, 6),
            n_wifi: 0.0,
            n_nru: 0.0,
            blockage_prob: 0.05,
            self_in_collision: false,
        };
        let lo = mixed_collision(0.5, 0.5, &cfg, 1e-9).unwrap();
        let hi = mixed_collision(4.0, 4.0, &cfg, 1e-9).unwrap();
        assert!(lo < hi);
        assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
    }

    #[test]
    fn rates_and_qos() {
        let pmf = DiscretePmf::new(vec![0.0, 0.5, 0.3, 0.2]).unwrap();
        let rates = attained_rates(0.2, 100e6, &RateMap::PerClass(vec![0.0, 3.0, 2.0, 1.0]), 3)
            .unwrap();
        assert_eq!(rates.len(), 4);
        assert!((rates[1] - 0.2 * 100e6 * 3.0).abs() < 1e-3);
        // r_min = 50 Mbit/s: class 1 gets 60 M, class 2 gets 40 M, class 3 gets 20 M
        let q = qos_violation(&pmf, &rates, 50e6).unwrap();
        assert!((q - 0.5).abs() < 1e-12);
        // unreachable minimum
        let q1 = qos_violation(&pmf, &rates, 1e12).unwrap();
        assert!((q1 - 1.0).abs() < 1e-12);
        // trivial minimum
        let q0 = qos_violation(&pmf, &rates, 0.0).unwrap();
        assert_eq!(q0, 0.0);
    }

    #[test]
    fn qos_monotone_in_r_min() {
        let pmf = DiscretePmf::new(vec![0.1, 0.4, 0.3, 0.2]).unwrap();
        let rates = vec![10.0, 40.0, 20.0, 5.0];
        let mut prev = -1.0;
        for r in 0..60 {
            let q = qos_violation(&pmf, &rates, r as f64).unwrap();
            assert!(q >= prev);
            prev = q;
        }
    }
}
