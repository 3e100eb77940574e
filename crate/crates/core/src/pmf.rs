//! Finite probability mass functions over integer resource units.
//!
//! `DiscretePmf` is the universal currency between the geometry, queueing,
//! and contention stages: resource demands, offloaded demands, and strategy
//! splits are all expressed as pmfs over `0..=J` units.

use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-12;

/// A probability mass function over integer resource units `0..=J`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePmf {
    probs: Vec<f64>,
}

impl DiscretePmf {
    /// Build a pmf from raw probabilities. Fails unless the entries are
    /// nonnegative and sum to 1 within 1e-12.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidPmf("empty support".into()));
        }
        if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidPmf("negative or non-finite entry".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidPmf(format!("sums to {sum}, expected 1")));
        }
        Ok(Self { probs })
    }

    /// Build a pmf by normalizing nonnegative weights.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidPmf("negative or non-finite weight".into()));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidPmf("zero total weight".into()));
        }
        for w in &mut weights {
            *w /= sum;
        }
        // Absorb the rounding residue into the largest entry so the strict
        // constructor invariant holds.
        let resid = 1.0 - weights.iter().sum::<f64>();
        let imax = weights
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap();
        weights[imax] += resid;
        Self::new(weights)
    }

    /// Unit mass at `j`.
    pub fn delta(j: usize) -> Self {
        let mut probs = vec![0.0; j + 1];
        probs[j] = 1.0;
        Self { probs }
    }

    #[inline]
    pub fn get(&self, j: usize) -> f64 {
        self.probs.get(j).copied().unwrap_or(0.0)
    }

    /// Largest index with positive mass.
    pub fn support_max(&self) -> usize {
        self.probs
            .iter()
            .rposition(|&p| p > 0.0)
            .unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(j, &p)| j as f64 * p)
            .sum()
    }

    /// P(X <= j).
    pub fn cdf(&self, j: usize) -> f64 {
        self.probs.iter().take(j + 1).sum()
    }

    /// Full (uncapped) convolution with another pmf.
    pub fn convolve(&self, other: &DiscretePmf) -> DiscretePmf {
        let (capped, lost) = self.convolve_capped(other, self.len() + other.len());
        debug_assert!(lost == 0.0);
        capped
    }

    /// Convolution truncated at support `0..=cap`; the mass falling above
    /// `cap` is returned separately rather than renormalized.
    pub fn convolve_capped(&self, other: &DiscretePmf, cap: usize) -> (DiscretePmf, f64) {
        let (v, lost) = convolve_raw(&self.probs, &other.probs, cap);
        (DiscretePmf { probs: v }, lost)
    }

    /// k-fold convolution truncated at `cap`. `k = 0` is the unit mass at 0,
    /// `k = 1` is the identity.
    pub fn k_fold(&self, k: usize, cap: usize) -> (DiscretePmf, f64) {
        let mut cur = vec![1.0];
        let mut lost = 0.0;
        for _ in 0..k {
            let (next, l) = convolve_raw(&cur, &self.probs, cap);
            cur = next;
            lost += l;
        }
        (DiscretePmf { probs: cur }, lost)
    }

    /// Restrict to indices satisfying `keep` and renormalize.
    pub fn restrict<F: Fn(usize) -> bool>(&self, keep: F) -> Result<DiscretePmf> {
        let weights: Vec<f64> = self
            .probs
            .iter()
            .enumerate()
            .map(|(j, &p)| if keep(j) { p } else { 0.0 })
            .collect();
        DiscretePmf::normalized(weights).map_err(|_| Error::DegenerateThreshold)
    }

    /// Pointwise mixture `w_a * a + w_b * b` (weights must sum to 1).
    pub fn mix(a: &DiscretePmf, w_a: f64, b: &DiscretePmf, w_b: f64) -> Result<DiscretePmf> {
        let n = a.len().max(b.len());
        let mut v = vec![0.0; n];
        for (j, slot) in v.iter_mut().enumerate() {
            *slot = w_a * a.get(j) + w_b * b.get(j);
        }
        DiscretePmf::normalized(v)
    }

    /// Sample an index according to the pmf, given a uniform draw in [0, 1).
    pub fn sample(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (j, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return j;
            }
        }
        self.support_max()
    }
}

/// Raw truncated convolution on probability vectors. Entries of the result
/// may sum to less than the product of input masses; the lost tail is the
/// second return value.
fn convolve_raw(a: &[f64], b: &[f64], cap: usize) -> (Vec<f64>, f64) {
    let full_len = a.len() + b.len() - 1;
    let out_len = full_len.min(cap + 1);
    let mut out = vec![0.0; out_len];
    let mut lost = 0.0;
    for (i, &pa) in a.iter().enumerate() {
        if pa == 0.0 {
            continue;
        }
        for (j, &pb) in b.iter().enumerate() {
            let k = i + j;
            let m = pa * pb;
            if k <= cap {
                out[k] += m;
            } else {
                lost += m;
            }
        }
    }
    (out, lost)
}
