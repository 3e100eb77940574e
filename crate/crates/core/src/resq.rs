//! Multi-class loss queue with random resource requirements.
//!
//! Sessions arrive in a Poisson stream of intensity `lambda`, hold for an
//! exponential time of rate `mu`, and each admitted session claims a random
//! number of resource units drawn from a per-class pmf. A session is lost if
//! fewer than `K` session slots or fewer than its required resource units
//! are free. Everything here is expressed through the normalization sums
//! G(n, r), evaluated with Poisson weights scaled by e^(-rho) so that only
//! weight ratios ever matter.

use crate::error::{Error, Result};
use crate::pmf::DiscretePmf;

/// Hard cap on K * R to keep table construction tractable.
const CAPACITY_GUARD: usize = 10_000_000;

/// One customer class of the loss queue.
#[derive(Debug, Clone)]
pub struct ClassSpec {
    /// Arrival rate, sessions per unit time.
    pub arrival_rate: f64,
    /// Resource requirement distribution (units per session).
    pub demand: DiscretePmf,
}

/// Full specification of a loss queue instance.
#[derive(Debug, Clone)]
pub struct QueueSpec {
    /// Session slots.
    pub k_max: usize,
    /// Resource units.
    pub r_max: usize,
    /// Service rate per session.
    pub service_rate: f64,
    pub classes: Vec<ClassSpec>,
}

impl QueueSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k_max == 0 || self.r_max == 0 {
            return Err(Error::Domain("K and R must be >= 1".into()));
        }
        let size = self.k_max * self.r_max;
        if size > CAPACITY_GUARD {
            return Err(Error::Capacity {
                size,
                guard: CAPACITY_GUARD,
            });
        }
        if self.service_rate <= 0.0 {
            return Err(Error::Domain("service rate must be > 0".into()));
        }
        if self.classes.is_empty() {
            return Err(Error::Domain("at least one class required".into()));
        }
        for c in &self.classes {
            if c.arrival_rate < 0.0 {
                return Err(Error::Domain("arrival rate must be >= 0".into()));
            }
        }
        if self.total_arrival_rate() <= 0.0 {
            return Err(Error::Domain("total arrival rate must be > 0".into()));
        }
        Ok(())
    }

    pub fn total_arrival_rate(&self) -> f64 {
        self.classes.iter().map(|c| c.arrival_rate).sum()
    }

    pub fn offered_load(&self) -> f64 {
        self.total_arrival_rate() / self.service_rate
    }

    /// Arrival-rate-weighted mixture of the class demand pmfs, truncated at
    /// the resource capacity and renormalized. Sessions whose demand cannot
    /// ever fit are never admitted; see `feasible_mass`.
    pub fn mixed_demand(&self) -> Result<DiscretePmf> {
        let lambda = self.total_arrival_rate();
        let mut weights = vec![0.0; self.r_max + 1];
        for c in &self.classes {
            let w = c.arrival_rate / lambda;
            for j in 0..=c.demand.support_max().min(self.r_max) {
                weights[j] += w * c.demand.get(j);
            }
        }
        DiscretePmf::normalized(weights)
    }

    /// Probability that an arrival's demand fits the capacity at all.
    /// Demands beyond `r_max` thin the admitted load rather than reshaping
    /// the feasible demand mixture.
    pub fn feasible_mass(&self) -> f64 {
        let lambda = self.total_arrival_rate();
        let mut mass = 0.0;
        for c in &self.classes {
            let w = c.arrival_rate / lambda;
            for j in 0..=c.demand.support_max().min(self.r_max) {
                mass += w * c.demand.get(j);
            }
        }
        mass
    }
}

/// Precomputed normalization sums for one (rho, demand pmf) pair.
///
/// `g[n][r]` holds c * sum_{i<=n} (rho^i / i!) * P(D_i <= r), where D_i is
/// the i-fold demand convolution and c is a positive scale chosen so the
/// largest Poisson weight is 1. Every published quantity is a ratio of
/// table entries so the scaling cancels.
#[derive(Debug, Clone)]
pub struct GTable {
    rho: f64,
    r_max: usize,
    /// Scaled k-fold demand cdfs: `fold_cdf[i][r] = P(D_i <= r)`.
    fold_cdf: Vec<Vec<f64>>,
    /// Scaled Poisson weights w_i = e^(-rho) rho^i / i!.
    weights: Vec<f64>,
    g: Vec<Vec<f64>>,
}

impl GTable {
    pub fn build(spec: &QueueSpec) -> Result<Self> {
        spec.validate()?;
        // never-fitting demands are blocked on arrival: the admitted stream
        // is the feasibility-thinned Poisson with the conditional demand mix
        let rho = spec.offered_load() * spec.feasible_mass();
        let demand = spec.mixed_demand()?;
        Self::build_raw(rho, &demand, spec.k_max, spec.r_max)
    }

    /// Build from an explicit load and aggregate demand pmf.
    pub fn build_raw(rho: f64, demand: &DiscretePmf, k_max: usize, r_max: usize) -> Result<Self> {
        if rho <= 0.0 {
            return Err(Error::Domain("offered load must be > 0".into()));
        }
        let size = k_max * r_max;
        if size > CAPACITY_GUARD {
            return Err(Error::Capacity {
                size,
                guard: CAPACITY_GUARD,
            });
        }
        // Log-domain Poisson weights shifted by their maximum, so the table
        // stays finite for any load; published quantities are entry ratios
        // and the shift cancels.
        let log_w: Vec<f64> = (0..=k_max)
            .map(|i| i as f64 * rho.ln() - statrs::function::gamma::ln_gamma(i as f64 + 1.0))
            .collect();
        let shift = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = log_w.iter().map(|lw| (lw - shift).exp()).collect();

        let mut fold_cdf = Vec::with_capacity(k_max + 1);
        let mut fold = DiscretePmf::delta(0);
        for i in 0..=k_max {
            if i > 0 {
                fold = fold.convolve_capped(demand, r_max).0;
            }
            let mut cdf = vec![0.0; r_max + 1];
            let mut acc = 0.0f64;
            for r in 0..=r_max {
                acc += fold.get(r);
                cdf[r] = acc.min(1.0);
            }
            fold_cdf.push(cdf);
        }

        let mut g = vec![vec![0.0; r_max + 1]; k_max + 1];
        for r in 0..=r_max {
            g[0][r] = weights[0];
        }
        for n in 1..=k_max {
            for r in 0..=r_max {
                g[n][r] = g[n - 1][r] + weights[n] * fold_cdf[n][r];
            }
        }
        Ok(Self {
            rho,
            r_max,
            fold_cdf,
            weights,
            g,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Scaled normalization sum; only meaningful in ratios.
    pub fn g(&self, n: usize, r: usize) -> f64 {
        self.g[n.min(self.g.len() - 1)][r.min(self.r_max)]
    }

    /// P(D_n <= r) for the n-fold aggregate demand.
    pub fn fold_cdf(&self, n: usize, r: usize) -> f64 {
        self.fold_cdf[n][r.min(self.r_max)]
    }

    /// Normalization constant ratio target: P(empty) = w_0 / G(K, R) in the
    /// scaled table.
    pub fn p_empty(&self, k_max: usize, r_max: usize) -> f64 {
        self.weights[0] / self.g(k_max, r_max)
    }

    /// Stationary probability of k active sessions occupying exactly r units.
    pub fn stationary(&self, k: usize, r: usize, k_max: usize, r_max: usize) -> f64 {
        let fold_pmf = if r == 0 {
            self.fold_cdf[k][0]
        } else {
            self.fold_cdf[k][r] - self.fold_cdf[k][r - 1]
        };
        self.weights[k] * fold_pmf / self.g(k_max, r_max)
    }

    /// Marginal distribution of occupied resource units.
    pub fn occupancy_pmf(&self, k_max: usize, r_max: usize) -> Result<DiscretePmf> {
        let mut w = vec![0.0; r_max + 1];
        for k in 0..=k_max {
            for r in 0..=r_max {
                w[r] += self.stationary(k, r, k_max, r_max);
            }
        }
        DiscretePmf::normalized(w)
    }
}

/// Eventual loss probability of a class with demand pmf `demand` in the
/// queue described by `table` (capacities K, R):
///
///   pi = 1 - G(K,R)^(-1) * sum_j p_j G(K-1, R-j)
pub fn class_loss(table: &GTable, demand: &DiscretePmf, k_max: usize, r_max: usize) -> f64 {
    let g_full = table.g(k_max, r_max);
    let mut acc = 0.0;
    for j in 0..=demand.support_max() {
        let p = demand.get(j);
        if p == 0.0 {
            continue;
        }
        if j > r_max {
            continue; // never admissible
        }
        acc += p * table.g(k_max - 1, r_max - j);
    }
    (1.0 - acc / g_full).clamp(0.0, 1.0)
}

/// Direct-sum evaluation of the same loss from the stationary distribution:
///
///   pi = sum_{k,r} P(k,r) * P(D > min(R - r, admissible)),
///
/// with a session of demand j blocked when k = K or r + j > R. Used as the
/// structural cross-check of the G-table route.
pub fn class_loss_direct(
    table: &GTable,
    demand: &DiscretePmf,
    k_max: usize,
    r_max: usize,
) -> f64 {
    let mut loss = 0.0;
    for k in 0..=k_max {
        for r in 0..=r_max {
            let p_state = table.stationary(k, r, k_max, r_max);
            if p_state == 0.0 {
                continue;
            }
            let block_prob = if k == k_max {
                1.0
            } else {
                let free = r_max - r;
                let mut acc = 0.0;
                for j in 0..=demand.support_max() {
                    if j > free {
                        acc += demand.get(j);
                    }
                }
                acc
            };
            loss += p_state * block_prob;
        }
    }
    loss.clamp(0.0, 1.0)
}

/// Blocking probability of a session that needs exactly `j` units:
/// pi_b(j) = (G(K,R) - G(K-1, R-j)) / G(K,R).
pub fn blocking_given_demand(table: &GTable, j: usize, k_max: usize, r_max: usize) -> f64 {
    let g_full = table.g(k_max, r_max);
    let g_adm = if j > r_max {
        0.0
    } else {
        table.g(k_max - 1, r_max - j)
    };
    ((g_full - g_adm) / g_full).clamp(0.0, 1.0)
}

/// Erlang-B blocking probability via the standard stable recursion,
/// used as an oracle for the single-unit-demand special case.
pub fn erlang_b(rho: f64, servers: usize) -> f64 {
    let mut b = 1.0;
    for m in 1..=servers {
        b = rho * b / (m as f64 + rho * b);
    }
    b
}

/// How an offloading strategy splits an unlicensed-capable session's demand
/// between the licensed queue and the unlicensed interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitPolicy {
    /// Everything stays on the licensed band; blocked sessions are lost.
    Baseline,
    /// Sessions whose demand exceeds the threshold go unlicensed entirely.
    FatOffload { threshold: usize },
    /// Sessions whose demand is at or below the threshold go unlicensed.
    SlimOffload { threshold: usize },
}

/// Result of applying a split policy to the unlicensed-capable class.
#[derive(Debug, Clone)]
pub struct StrategySplit {
    /// Probability that a capable session is directed at the licensed queue.
    pub licensed_fraction: f64,
    /// Demand pmf of capable sessions that stay licensed (renormalized),
    /// or None when the policy sends every capable session unlicensed.
    pub licensed_demand: Option<DiscretePmf>,
    /// Demand pmf of sessions diverted unlicensed at arrival (renormalized),
    /// or None when nothing is diverted.
    pub diverted_demand: Option<DiscretePmf>,
}

/// Apply a split policy to the capable class's demand pmf.
pub fn make_strategy_split(policy: SplitPolicy, demand: &DiscretePmf) -> Result<StrategySplit> {
    match policy {
        SplitPolicy::Baseline => Ok(StrategySplit {
            licensed_fraction: 1.0,
            licensed_demand: Some(demand.clone()),
            diverted_demand: None,
        }),
        SplitPolicy::FatOffload { threshold } => {
            let below: f64 = (0..=threshold.min(demand.support_max()))
                .map(|j| demand.get(j))
                .sum();
            let licensed = if below > 0.0 {
                Some(demand.restrict(|j| j <= threshold)?)
            } else {
                None
            };
            let diverted = if below < 1.0 - 1e-15 {
                Some(demand.restrict(|j| j > threshold)?)
            } else {
                None
            };
            Ok(StrategySplit {
                licensed_fraction: below,
                licensed_demand: licensed,
                diverted_demand: diverted,
            })
        }
        SplitPolicy::SlimOffload { threshold } => {
            let below: f64 = (0..=threshold.min(demand.support_max()))
                .map(|j| demand.get(j))
                .sum();
            let licensed = if below < 1.0 - 1e-15 {
                Some(demand.restrict(|j| j > threshold)?)
            } else {
                None
            };
            let diverted = if below > 0.0 {
                Some(demand.restrict(|j| j <= threshold)?)
            } else {
                None
            };
            Ok(StrategySplit {
                licensed_fraction: 1.0 - below,
                licensed_demand: licensed,
                diverted_demand: diverted,
            })
        }
    }
}

/// Probability that a capable session ends up on the unlicensed interface,
/// combining arrival-time diversion and blocking-driven overflow.
pub fn offload_probability(
    split: &StrategySplit,
    table: &GTable,
    k_max: usize,
    r_max: usize,
) -> f64 {
    let diverted = 1.0 - split.licensed_fraction;
    let overflow = match &split.licensed_demand {
        Some(d) => split.licensed_fraction * class_loss(table, d, k_max, r_max),
        None => 0.0,
    };
    (diverted + overflow).clamp(0.0, 1.0)
}

/// Demand pmf of the sessions that actually land on the unlicensed
/// interface: the mixture of arrival-time diverted sessions and sessions
/// that overflowed after blocking, each demand class j weighted by its own
/// blocking probability pi_b(j).
pub fn offloaded_demand_pmf(
    split: &StrategySplit,
    table: &GTable,
    k_max: usize,
    r_max: usize,
) -> Result<DiscretePmf> {
    let pi_su = offload_probability(split, table, k_max, r_max);
    if pi_su <= 0.0 {
        return Err(Error::NoOffload);
    }
    let support = split
        .licensed_demand
        .as_ref()
        .map(|d| d.support_max())
        .unwrap_or(0)
        .max(
            split
                .diverted_demand
                .as_ref()
                .map(|d| d.support_max())
                .unwrap_or(0),
        );
    let mut w = vec![0.0; support + 1];
    if let Some(d) = &split.diverted_demand {
        let frac = 1.0 - split.licensed_fraction;
        for j in 0..=d.support_max() {
            w[j] += frac * d.get(j);
        }
    }
    if let Some(d) = &split.licensed_demand {
        for j in 0..=d.support_max() {
            let p = d.get(j);
            if p == 0.0 {
                continue;
            }
            w[j] += split.licensed_fraction * p * blocking_given_demand(table, j, k_max, r_max);
        }
    }
    let total: f64 = w.iter().sum();
    // per-class blocking products can underflow to zero even when the
    // aggregate offload probability is still positive
    if total <= 0.0 {
        return Err(Error::NoOffload);
    }
    // absolute floor: both sums are cancellation noise when blocking ~ 0
    debug_assert!((total - pi_su).abs() < 1e-9 * pi_su + 1e-12);
    DiscretePmf::normalized(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn spec_single_unit(rho: f64, k: usize) -> QueueSpec {
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

    fn random_pmf(rng: &mut impl Rng, max_j: usize) -> DiscretePmf {
        let mut w = vec![0.0; max_j + 1];
        for x in w.iter_mut().skip(1) {
            *x = rng.gen::<f64>();
        }
        DiscretePmf::normalized(w).unwrap()
    }

    #[test]
    fn reduces_to_erlang_b() {
        for &rho in &[0.1, 1.0, 10.0, 50.0] {
            for k in [1usize, 2, 5, 20, 50] {
                let spec = spec_single_unit(rho, k);
                let table = GTable::build(&spec).unwrap();
                let loss = class_loss(&table, &spec.classes[0].demand, k, k);
                let oracle = erlang_b(rho, k);
                assert!(
                    (loss - oracle).abs() < 1e-12,
                    "rho={rho} k={k}: {loss} vs {oracle}"
                );
            }
        }
    }

    #[test]
    fn large_load_is_finite_and_sane() {
        // rho = 800 would overflow unscaled Poisson terms
        let spec = spec_single_unit(800.0, 400);
        let table = GTable::build(&spec).unwrap();
        let loss = class_loss(&table, &spec.classes[0].demand, 400, 400);
        assert!(loss.is_finite());
        let oracle = erlang_b(800.0, 400);
        assert!((loss - oracle).abs() < 1e-12);
    }

    #[test]
    fn g_form_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let k = rng.gen_range(1..=20usize);
            let r = rng.gen_range(1..=20usize);
            let demand = random_pmf(&mut rng, r.min(6).max(1));
            let rho = rng.gen_range(0.1..20.0);
            let table = GTable::build_raw(rho, &demand, k, r).unwrap();
            let a = class_loss(&table, &demand, k, r);
            let b = class_loss_direct(&table, &demand, k, r);
            assert!((a - b).abs() < 1e-10, "k={k} r={r} rho={rho}: {a} vs {b}");
        }
    }

    #[test]
    fn stationary_distribution_sums_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let demand = random_pmf(&mut rng, 4);
        let table = GTable::build_raw(3.0, &demand, 10, 25).unwrap();
        let mut total = 0.0;
        for k in 0..=10 {
            for r in 0..=25 {
                let p = table.stationary(k, r, 10, 25);
                assert!(p >= 0.0);
                total += p;
            }
        }
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn capacity_guard_trips() {
        let spec = QueueSpec {
            k_max: 100_000,
            r_max: 200,
            service_rate: 1.0,
            classes: vec![ClassSpec {
                arrival_rate: 1.0,
                demand: DiscretePmf::delta(1),
            }],
        };
        assert!(matches!(spec.validate(), Err(Error::Capacity { .. })));
    }

    #[test]
    fn loss_increases_with_load() {
        let demand = DiscretePmf::new(vec![0.0, 0.5, 0.3, 0.2]).unwrap();
        let mut prev = -1.0;
        for i in 1..=20 {
            let rho = i as f64;
            let table = GTable::build_raw(rho, &demand, 15, 30).unwrap();
            let loss = class_loss(&table, &demand, 15, 30);
            assert!(loss > prev, "not increasing at rho={rho}");
            prev = loss;
        }
    }

    #[test]
    fn splits_partition_the_demand() {
        let demand = DiscretePmf::new(vec![0.0, 0.4, 0.3, 0.2, 0.1]).unwrap();
        let fat = make_strategy_split(SplitPolicy::FatOffload { threshold: 2 }, &demand).unwrap();
        assert!((fat.licensed_fraction - 0.7).abs() < 1e-15);
        let lic = fat.licensed_demand.as_ref().unwrap();
        assert!((lic.get(1) - 0.4 / 0.7).abs() < 1e-15);
        assert_eq!(lic.get(3), 0.0);
        let div = fat.diverted_demand.as_ref().unwrap();
        assert!((div.get(3) - 0.2 / 0.3).abs() < 1e-15);
        assert_eq!(div.get(1), 0.0);

        let slim = make_strategy_split(SplitPolicy::SlimOffload { threshold: 2 }, &demand).unwrap();
        assert!((slim.licensed_fraction - 0.3).abs() < 1e-15);
        assert_eq!(slim.licensed_demand.as_ref().unwrap().get(2), 0.0);
        assert!((slim.diverted_demand.as_ref().unwrap().get(2) - 0.3 / 0.7).abs() < 1e-15);
    }

    #[test]
    fn baseline_split_has_no_diversion() {
        let demand = DiscretePmf::new(vec![0.0, 1.0]).unwrap();
        let s = make_strategy_split(SplitPolicy::Baseline, &demand).unwrap();
        assert_eq!(s.licensed_fraction, 1.0);
        assert!(s.diverted_demand.is_none());
        let table = GTable::build_raw(5.0, &demand, 8, 8).unwrap();
        let pi = offload_probability(&s, &table, 8, 8);
        assert!((pi - erlang_b(5.0, 8)).abs() < 1e-12);
    }

    #[test]
    fn offloaded_pmf_is_proper_and_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let demand = random_pmf(&mut rng, 5);
            let rho = rng.gen_range(0.5..15.0);
            let table = GTable::build_raw(rho, &demand, 12, 24).unwrap();
            for policy in [
                SplitPolicy::Baseline,
                SplitPolicy::FatOffload { threshold: 2 },
                SplitPolicy::SlimOffload { threshold: 2 },
            ] {
                let split = make_strategy_split(policy, &demand).unwrap();
                let pi = offload_probability(&split, &table, 12, 24);
                if pi <= 0.0 {
                    continue;
                }
                let p = offloaded_demand_pmf(&split, &table, 12, 24).unwrap();
                let total: f64 = (0..=p.support_max()).map(|j| p.get(j)).sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fat_split_degenerate_thresholds() {
        let demand = DiscretePmf::new(vec![0.0, 0.5, 0.5]).unwrap();
        // threshold covers everything: no diversion
        let s = make_strategy_split(SplitPolicy::FatOffload { threshold: 2 }, &demand).unwrap();
        assert!(s.diverted_demand.is_none());
        assert!((s.licensed_fraction - 1.0).abs() < 1e-15);
        // threshold below everything: full diversion
        let s = make_strategy_split(SplitPolicy::FatOffload { threshold: 0 }, &demand).unwrap();
        assert!(s.licensed_demand.is_none());
        assert_eq!(s.licensed_fraction, 0.0);
        let table = GTable::build_raw(1.0, &demand, 4, 8).unwrap();
        assert!((offload_probability(&s, &table, 4, 8) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn blocking_given_demand_is_monotone_in_demand() {
        let demand = DiscretePmf::new(vec![0.0, 0.4, 0.3, 0.2, 0.1]).unwrap();
        let table = GTable::build_raw(6.0, &demand, 10, 20).unwrap();
        let mut prev = -1.0;
        for j in 1..=20 {
            let b = blocking_given_demand(&table, j, 10, 20);
            assert!(b >= prev - 1e-15);
            prev = b;
        }
        assert_eq!(blocking_given_demand(&table, 25, 10, 20), 1.0);
    }

    #[test]
    fn occupancy_pmf_mean_below_capacity() {
        let demand = DiscretePmf::new(vec![0.0, 0.5, 0.5]).unwrap();
        let table = GTable::build_raw(4.0, &demand, 10, 12).unwrap();
        let occ = table.occupancy_pmf(10, 12).unwrap();
        let mean = occ.mean();
        assert!(mean > 0.0 && mean <= 12.0);
    }
}
