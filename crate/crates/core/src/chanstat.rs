//! Per-band SINR distributions and their discretization into resource
//! demand pmfs.
//!
//! The chain is: uniform UE position in a disk or ring -> 3D distance ->
//! SINR in dB (per LoS state) -> Gaussian shadow-fading convolution ->
//! blockage-weighted mixture -> MCS partitioning -> demand pmf.

use crate::error::{Error, Result};
use crate::geometry::{
    mean_blockage_probability_annulus, mean_sinr, DeploymentConfig, RadioConfig,
};
use crate::numeric::{integrate, normal_cdf, normal_pdf};
use crate::pmf::DiscretePmf;

/// Geometric domain of UE positions relative to the serving BS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    /// Inner 2D radius, m (0 for a disk).
    pub inner_radius: f64,
    /// Outer 2D radius, m.
    pub outer_radius: f64,
}

impl Region {
    pub fn disk(radius: f64) -> Result<Self> {
        Self::annulus(0.0, radius)
    }

    pub fn annulus(inner: f64, outer: f64) -> Result<Self> {
        if !(inner >= 0.0 && inner < outer) {
            return Err(Error::Domain(format!(
                "invalid region: inner {inner}, outer {outer}"
            )));
        }
        Ok(Self {
            inner_radius: inner,
            outer_radius: outer,
        })
    }

    fn area_factor(&self) -> f64 {
        self.outer_radius * self.outer_radius - self.inner_radius * self.inner_radius
    }
}

/// CDF of the 3D distance from a uniformly placed UE to the BS antenna.
pub fn distance_cdf_3d(x: f64, region: &Region, height_delta: f64) -> f64 {
    let dh2 = height_delta * height_delta;
    let v = (x * x - dh2 - region.inner_radius * region.inner_radius) / region.area_factor();
    v.clamp(0.0, 1.0)
}

/// One propagation state of one band, as seen by the SINR CDF machinery.
#[derive(Debug, Clone, Copy)]
pub struct StateParams {
    /// Linear coefficient such that SINR = coeff * y^-zeta (no fading).
    pub coeff: f64,
    /// Path-loss exponent of the state.
    pub zeta: f64,
    /// Shadow-fading standard deviation, dB.
    pub sigma_db: f64,
}

impl StateParams {
    pub fn los(radio: &RadioConfig) -> Result<Self> {
        Ok(Self {
            coeff: radio.sinr_coefficient()?,
            zeta: radio.zeta_los,
            sigma_db: radio.shadow_sigma_los_db,
        })
    }

    pub fn blocked(radio: &RadioConfig) -> Result<Self> {
        Ok(Self {
            coeff: radio.sinr_coefficient()?,
            zeta: radio.zeta_blocked,
            sigma_db: radio.shadow_sigma_blocked_db,
        })
    }

    /// dB SINR at the inner edge of the support (farthest point).
    fn sinr_low_db(&self, region: &Region, dh: f64) -> f64 {
        let y2 = region.outer_radius * region.outer_radius + dh * dh;
        10.0 * (self.coeff * y2.powf(-self.zeta / 2.0)).log10()
    }

    /// dB SINR at the nearest point of the region.
    fn sinr_high_db(&self, region: &Region, dh: f64) -> f64 {
        let y2 = region.inner_radius * region.inner_radius + dh * dh;
        10.0 * (self.coeff * y2.powf(-self.zeta / 2.0)).log10()
    }
}

/// SINR CDF in dB without shadow fading, for one propagation state over a
/// region. Clamped to [0,1] outside the support.
pub fn sinr_cdf_no_fading(x_db: f64, region: &Region, state: &StateParams, dh: f64) -> f64 {
    // S >= x  <=>  y <= (coeff * 10^(-x/10))^(1/zeta), so
    // P(S <= x) = 1 - W_D(y_x).
    let y_x2 = state.coeff.powf(2.0 / state.zeta) * 10f64.powf(-x_db / (5.0 * state.zeta));
    let y_x = y_x2.sqrt();
    (1.0 - distance_cdf_3d(y_x, region, dh)).clamp(0.0, 1.0)
}

/// SINR CDF in dB with Gaussian shadow fading: the no-fading CDF convolved
/// with a zero-mean normal kernel of standard deviation `sigma` dB,
/// computed by adaptive quadrature over [-8 sigma, 8 sigma].
pub fn sinr_cdf_with_fading(x_db: f64, region: &Region, state: &StateParams, dh: f64) -> Result<f64> {
    let sigma = state.sigma_db;
    if sigma <= 0.0 {
        return Err(Error::Domain("shadow sigma must be > 0".into()));
    }
    let v = integrate(
        |u| sinr_cdf_no_fading(x_db + u, region, state, dh) * normal_pdf(u / sigma) / sigma,
        -8.0 * sigma,
        8.0 * sigma,
        1e-8,
    );
    Ok(v.clamp(0.0, 1.0))
}

/// Closed-form (error-function) expression for the shadow-faded SINR CDF.
///
/// This is the analytic evaluation of the same Gaussian convolution and
/// serves as an independent cross-check of the quadrature route.
pub fn sinr_cdf_with_fading_closed_form(
    x_db: f64,
    region: &Region,
    state: &StateParams,
    dh: f64,
) -> f64 {
    let sigma = state.sigma_db;
    let x_lo = state.sinr_low_db(region, dh);
    let x_hi = state.sinr_high_db(region, dh);
    let area = region.area_factor();
    let dh2 = dh * dh;
    let ri2 = region.inner_radius * region.inner_radius;
    // Middle branch of the no-fading CDF:
    //   W(t) = 1 + (dh^2 + ri^2)/area - (coeff^(2/zeta)/area) e^(-beta t)
    // with beta = ln(10) / (5 zeta).
    let beta = std::f64::consts::LN_10 / (5.0 * state.zeta);
    let a2z = state.coeff.powf(2.0 / state.zeta);
    let phi = |t: f64| normal_cdf(t / sigma);

    let const_part = 1.0 + (dh2 + ri2) / area;
    let lin_term = const_part * (phi(x_hi - x_db) - phi(x_lo - x_db));
    let exp_term = a2z / area
        * (-beta * x_db + beta * beta * sigma * sigma / 2.0).exp()
        * (phi(x_hi - x_db + beta * sigma * sigma) - phi(x_lo - x_db + beta * sigma * sigma));
    let upper_tail = phi(x_db - x_hi);
    (lin_term - exp_term + upper_tail).clamp(0.0, 1.0)
}

/// Blockage-weighted SINR CDF mixture over a region.
pub fn sinr_cdf_mixture(
    x_db: f64,
    region: &Region,
    dep: &DeploymentConfig,
    radio: &RadioConfig,
) -> Result<f64> {
    let p_b = mean_blockage_probability_annulus(
        region.inner_radius,
        region.outer_radius,
        dep,
        dep.bs_height,
    )?;
    let dh = dep.height_delta();
    let blocked = sinr_cdf_with_fading(x_db, region, &StateParams::blocked(radio)?, dh)?;
    let los = sinr_cdf_with_fading(x_db, region, &StateParams::los(radio)?, dh)?;
    Ok(p_b * blocked + (1.0 - p_b) * los)
}

/// One row of an MCS table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McsRow {
    /// SINR threshold, dB, above which the row applies.
    pub sinr_threshold_db: f64,
    /// Spectral efficiency, bit/s/Hz.
    pub spectral_efficiency: f64,
}

/// An ordered modulation-and-coding table for one band.
#[derive(Debug, Clone, PartialEq)]
pub struct McsTable {
    rows: Vec<McsRow>,
}

impl McsTable {
    pub fn new(rows: Vec<McsRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidMcs("empty table".into()));
        }
        for w in rows.windows(2) {
            if w[1].sinr_threshold_db <= w[0].sinr_threshold_db {
                return Err(Error::InvalidMcs("thresholds must be strictly increasing".into()));
            }
            if w[1].spectral_efficiency <= w[0].spectral_efficiency {
                return Err(Error::InvalidMcs(
                    "efficiencies must be strictly increasing".into(),
                ));
            }
        }
        if rows[0].spectral_efficiency <= 0.0 {
            return Err(Error::InvalidMcs("efficiencies must be positive".into()));
        }
        Ok(Self { rows })
    }

    /// Parse the plain-text format: one row per MCS, two whitespace-separated
    /// columns (threshold dB, efficiency bit/s/Hz), `#` comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split_whitespace();
            let parse = |s: Option<&str>| -> Result<f64> {
                s.ok_or_else(|| Error::InvalidMcs(format!("line {}: missing column", lineno + 1)))?
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidMcs(format!("line {}: {e}", lineno + 1)))
            };
            let threshold = parse(cols.next())?;
            let eff = parse(cols.next())?;
            if cols.next().is_some() {
                return Err(Error::InvalidMcs(format!(
                    "line {}: expected exactly two columns",
                    lineno + 1
                )));
            }
            rows.push(McsRow {
                sinr_threshold_db: threshold,
                spectral_efficiency: eff,
            });
        }
        Self::new(rows)
    }

    pub fn rows(&self) -> &[McsRow] {
        &self.rows
    }

    pub fn first_threshold_db(&self) -> f64 {
        self.rows[0].sinr_threshold_db
    }

    /// Check that the table is keyed to the band's outage threshold.
    pub fn validate_outage_threshold(&self, s_th_db: f64) -> Result<()> {
        if (self.first_threshold_db() - s_th_db).abs() > 1e-9 {
            return Err(Error::InvalidMcs(format!(
                "first threshold {} dB does not match outage threshold {} dB",
                self.first_threshold_db(),
                s_th_db
            )));
        }
        Ok(())
    }

    /// Spectral efficiency attained at a given SINR, or None below outage.
    pub fn efficiency_at(&self, sinr_db: f64) -> Option<f64> {
        self.rows
            .iter()
            .rev()
            .find(|r| sinr_db >= r.sinr_threshold_db)
            .map(|r| r.spectral_efficiency)
    }
}

/// A resource-demand pmf together with the probability mass that cannot be
/// served at all (SINR below the worst MCS or demand above the cell cap).
#[derive(Debug, Clone)]
pub struct DemandPmf {
    /// Demand distribution over `0..=r_cap` units, renormalized over the
    /// feasible classes.
    pub pmf: DiscretePmf,
    /// Probability mass of infeasible sessions (reported separately).
    pub infeasible_mass: f64,
}

/// Resource demand of an MCS row: units needed to carry `r_min` bit/s.
pub fn demand_units(r_min: f64, efficiency: f64, resource_unit_bw: f64) -> usize {
    (r_min / (efficiency * resource_unit_bw)).ceil().max(1.0) as usize
}

/// Discretize the region's SINR CDF by the MCS table into a demand pmf.
pub fn demand_pmf(
    region: &Region,
    mcs: &McsTable,
    dep: &DeploymentConfig,
    radio: &RadioConfig,
    r_min: f64,
    resource_unit_bw: f64,
    r_cap: usize,
) -> Result<DemandPmf> {
    if r_min <= 0.0 {
        return Err(Error::Domain("minimum rate must be > 0".into()));
    }
    if r_cap == 0 {
        return Err(Error::Domain("resource cap must be >= 1".into()));
    }
    let rows = mcs.rows();
    let mut weights = vec![0.0; r_cap + 1];
    let mut infeasible = sinr_cdf_mixture(rows[0].sinr_threshold_db, region, dep, radio)?;
    let mut prev_cdf = infeasible;
    for (i, row) in rows.iter().enumerate() {
        let upper_cdf = if i + 1 < rows.len() {
            sinr_cdf_mixture(rows[i + 1].sinr_threshold_db, region, dep, radio)?
        } else {
            1.0
        };
        let mass = (upper_cdf - prev_cdf).max(0.0);
        prev_cdf = upper_cdf;
        let j = demand_units(r_min, row.spectral_efficiency, resource_unit_bw);
        if j <= r_cap {
            weights[j] += mass;
        } else {
            infeasible += mass;
        }
    }
    let pmf = DiscretePmf::normalized(weights).map_err(|_| Error::DegenerateCell)?;
    Ok(DemandPmf {
        pmf,
        infeasible_mass: infeasible.clamp(0.0, 1.0),
    })
}

/// Mean spectral efficiency over a disk of the given radius:
/// E[S_e] = integral of (2x/radius^2) log2(1 + S(x)) dx.
pub fn mean_spectral_efficiency(
    radius: f64,
    dep: &DeploymentConfig,
    radio: &RadioConfig,
) -> Result<f64> {
    if radius <= 0.0 {
        return Err(Error::Domain("radius must be > 0".into()));
    }
    let dh = dep.height_delta();
    // validate once before entering the integrand
    mean_sinr((1.0f64).max(dh), dep, radio)?;
    let v = integrate(
        |x| {
            let y = (x * x + dh * dh).sqrt().max(1.0);
            let s = mean_sinr(y, dep, radio).unwrap_or(0.0);
            2.0 * x / (radius * radius) * (1.0 + s).log2()
        },
        0.0,
        radius,
        1e-9,
    );
    Ok(v)
}

/// Mean resource units needed in a band with mean efficiency `e_se`.
pub fn b_min(r_min: f64, e_se: f64, resource_unit_bw: f64) -> Result<usize> {
    if e_se <= 0.0 {
        return Err(Error::Domain("mean spectral efficiency must be > 0".into()));
    }
    Ok(demand_units(r_min, e_se, resource_unit_bw))
}
