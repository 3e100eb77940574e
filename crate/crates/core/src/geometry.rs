//! Deployment, blockage, propagation, antenna-gain, and coverage-radius
//! computations.
//!
//! All internal arithmetic is in the linear domain; dB quantities are
//! converted at the boundaries of each operation.

use crate::error::{Error, Result};
use crate::numeric::{db_to_linear, dbm_to_mw, erfc_inv, integrate};

/// Physical deployment parameters.
///
/// The deployment carries separate BS (`bs_height`) and blocker
/// (`blocker_height`) heights even though some of the literature overloads a
/// single symbol for both.
#[derive(Debug, Clone, PartialEq)]
pub struct DeploymentConfig {
    /// NR-U BS density, per m^2.
    pub bs_density: f64,
    /// NR-U UE density, per m^2.
    pub nru_ue_density: f64,
    /// WiGig UE density, per m^2.
    pub wigig_ue_density: f64,
    /// Human blocker density, per m^2.
    pub blocker_density: f64,
    /// BS / AP height, m.
    pub bs_height: f64,
    /// UE height, m.
    pub ue_height: f64,
    /// Blocker height, m.
    pub blocker_height: f64,
    /// Blocker cylinder radius, m.
    pub blocker_radius: f64,
}

impl DeploymentConfig {
    pub fn validate(&self) -> Result<()> {
        let densities = [
            self.bs_density,
            self.nru_ue_density,
            self.wigig_ue_density,
            self.blocker_density,
        ];
        if densities.iter().any(|&d| d < 0.0 || !d.is_finite()) {
            return Err(Error::InvalidGeometry("densities must be >= 0".into()));
        }
        if !(self.bs_height > self.blocker_height
            && self.blocker_height > self.ue_height
            && self.ue_height > 0.0)
        {
            return Err(Error::InvalidGeometry(
                "heights must satisfy bs > blocker > ue > 0".into(),
            ));
        }
        if self.blocker_radius <= 0.0 {
            return Err(Error::InvalidGeometry("blocker radius must be > 0".into()));
        }
        Ok(())
    }

    /// Height difference between the BS antenna and the UE, m.
    pub fn height_delta(&self) -> f64 {
        self.bs_height - self.ue_height
    }
}

/// Per-band radio parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioConfig {
    /// Carrier frequency, GHz.
    pub carrier_freq_ghz: f64,
    /// Bandwidth, Hz.
    pub bandwidth_hz: f64,
    /// Transmit power, dBm.
    pub tx_power_dbm: f64,
    /// Antenna elements of the transmit array, per plane.
    pub tx_elements: (u32, u32),
    /// Antenna elements of the receive array, per plane.
    pub rx_elements: (u32, u32),
    /// Interference margin, dB.
    pub interference_margin_db: f64,
    /// Thermal noise power spectral density, dBm/Hz.
    pub noise_psd_dbm_hz: f64,
    /// Outage SINR threshold (worst MCS), dB.
    pub outage_sinr_db: f64,
    /// Fraction of time in outage tolerated at the cell edge.
    pub edge_outage_fraction: f64,
    /// Shadow-fading standard deviation in the blocked state, dB.
    pub shadow_sigma_blocked_db: f64,
    /// Shadow-fading standard deviation in the LoS state, dB.
    pub shadow_sigma_los_db: f64,
    /// Path-loss exponent, LoS state.
    pub zeta_los: f64,
    /// Path-loss exponent, blocked state.
    pub zeta_blocked: f64,
    /// Linear path-loss constant. `None` derives the UMi street-canyon value
    /// 10^3.24 * f_GHz^2 from the carrier frequency.
    pub pathloss_constant: Option<f64>,
}

impl RadioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bandwidth_hz <= 0.0 {
            return Err(Error::Domain("bandwidth must be > 0".into()));
        }
        if !(self.edge_outage_fraction > 0.0 && self.edge_outage_fraction < 1.0) {
            return Err(Error::Domain("edge outage fraction must lie in (0,1)".into()));
        }
        if !(self.zeta_blocked > self.zeta_los && self.zeta_los > 0.0) {
            return Err(Error::Domain(
                "path-loss exponents must satisfy blocked > los > 0".into(),
            ));
        }
        if self.shadow_sigma_blocked_db <= 0.0 || self.shadow_sigma_los_db <= 0.0 {
            return Err(Error::Domain("shadow sigmas must be > 0".into()));
        }
        Ok(())
    }

    /// Linear path-loss constant A.
    pub fn pathloss_a(&self) -> f64 {
        self.pathloss_constant
            .unwrap_or_else(|| 10f64.powf(3.24) * self.carrier_freq_ghz.powi(2))
    }

    /// Total noise-plus-interference power in mW: thermal noise over the
    /// band raised by the interference margin (dB-domain sum).
    pub fn noise_mw(&self) -> f64 {
        dbm_to_mw(self.noise_psd_dbm_hz + 10.0 * self.bandwidth_hz.log10())
            * db_to_linear(self.interference_margin_db)
    }

    /// Combined tx * rx array gain, linear.
    pub fn array_gain(&self) -> Result<f64> {
        let (th, tv) = self.tx_elements;
        let (rh, rv) = self.rx_elements;
        Ok(antenna_gain(th)?
            * antenna_gain(tv)?
            * antenna_gain(rh)?
            * antenna_gain(rv)?)
    }

    /// The linear SINR coefficient C = P G_tx G_rx / ((N0 W + M_I) A).
    pub fn sinr_coefficient(&self) -> Result<f64> {
        Ok(dbm_to_mw(self.tx_power_dbm) * self.array_gain()? / (self.noise_mw() * self.pathloss_a()))
    }

    /// Shadow-fading margin in the blocked state, linear:
    /// sqrt(2) * sigma * erfc^-1(2 p_C), converted from dB.
    pub fn fading_margin_blocked(&self) -> f64 {
        db_to_linear(
            std::f64::consts::SQRT_2
                * self.shadow_sigma_blocked_db
                * erfc_inv(2.0 * self.edge_outage_fraction),
        )
    }

    /// Shadow-fading margin in the LoS state, linear.
    pub fn fading_margin_los(&self) -> f64 {
        db_to_linear(
            std::f64::consts::SQRT_2
                * self.shadow_sigma_los_db
                * erfc_inv(2.0 * self.edge_outage_fraction),
        )
    }
}

/// LoS propagation state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LosState {
    Los,
    Blocked,
}

/// Coverage radii of one BS in one band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageResult {
    /// SINR-limited radius, m.
    pub r_sinr: f64,
    /// Intersite (Voronoi) radius, m.
    pub r_voronoi: f64,
    /// Effective cell radius, min of the two.
    pub r_cell: f64,
}

/// LoS blockage probability at 2D distance `r` for a receiver at
/// `receiver_height`.
pub fn blockage_probability(
    r: f64,
    cfg: &DeploymentConfig,
    receiver_height: f64,
) -> Result<f64> {
    if receiver_height <= cfg.ue_height {
        return Err(Error::InvalidGeometry(
            "receiver height must exceed UE height".into(),
        ));
    }
    if r < 0.0 {
        return Err(Error::Domain("distance must be >= 0".into()));
    }
    let shadow = r * (cfg.blocker_height - cfg.ue_height) / (receiver_height - cfg.ue_height);
    let exponent = 2.0 * cfg.blocker_density * cfg.blocker_radius * (shadow + cfg.blocker_radius);
    Ok(1.0 - (-exponent).exp())
}

/// Blockage probability averaged over a uniformly placed UE in a disk of
/// the given radius: integral of p_b(r) * 2r / radius^2.
pub fn mean_blockage_probability(
    radius: f64,
    cfg: &DeploymentConfig,
    receiver_height: f64,
) -> Result<f64> {
    if radius <= 0.0 {
        return Err(Error::Domain("radius must be > 0".into()));
    }
    mean_blockage_probability_annulus(0.0, radius, cfg, receiver_height)
}

/// Blockage probability averaged over a uniformly placed UE in an annulus.
pub fn mean_blockage_probability_annulus(
    inner: f64,
    outer: f64,
    cfg: &DeploymentConfig,
    receiver_height: f64,
) -> Result<f64> {
    if !(outer > inner && inner >= 0.0) {
        return Err(Error::Domain("need 0 <= inner < outer".into()));
    }
    // Validate the geometry once; the integrand then evaluates infallibly.
    blockage_probability(inner, cfg, receiver_height)?;
    let area = outer * outer - inner * inner;
    // absolute tolerance 1e-12 on a [0,1] quantity exceeds the 1e-8
    // relative target for any non-vanishing mean
    let v = integrate(
        |r| blockage_probability(r, cfg, receiver_height).unwrap_or(0.0) * 2.0 * r / area,
        inner,
        outer,
        1e-12,
    );
    Ok(v.clamp(0.0, 1.0))
}

/// 3GPP UMi street-canyon path loss in dB at 3D distance `y` (m) and
/// carrier `f_c` (GHz).
pub fn path_loss_db(y: f64, state: LosState, f_c_ghz: f64) -> Result<f64> {
    if y < 1.0 {
        return Err(Error::Domain("log-distance model invalid below 1 m".into()));
    }
    let slope = match state {
        LosState::Los => 21.0,
        LosState::Blocked => 31.9,
    };
    Ok(32.4 + slope * y.log10() + 20.0 * f_c_ghz.log10())
}

/// Half-power beamwidth of a linear array of `n` elements, degrees.
pub fn hpbw_degrees(n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("element count must be >= 1".into()));
    }
    Ok(102.0 / n as f64)
}

/// Mean array gain over the half-power beamwidth around broadside.
pub fn antenna_gain(n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("element count must be >= 1".into()));
    }
    if n == 1 {
        return Ok(1.0);
    }
    let nf = n as f64;
    let alpha = hpbw_degrees(n)?.to_radians();
    let lo = std::f64::consts::FRAC_PI_2 - alpha / 2.0;
    let hi = std::f64::consts::FRAC_PI_2 + alpha / 2.0;
    let integrand = |theta: f64| {
        let x = std::f64::consts::PI * theta.cos() / 2.0;
        if x.abs() < 1e-9 {
            // sin(n x)/sin(x) -> n as x -> 0
            nf
        } else {
            (nf * x).sin() / x.sin()
        }
    };
    Ok(integrate(integrand, lo, hi, 1e-10) / (hi - lo))
}

/// Mean SINR (linear) at 3D distance `y`, blockage-weighted over the LoS
/// and blocked branches with the per-state fading margins applied.
pub fn mean_sinr(y: f64, dep: &DeploymentConfig, radio: &RadioConfig) -> Result<f64> {
    if y < 1.0 {
        return Err(Error::Domain("3D distance must be >= 1 m".into()));
    }
    let c = radio.sinr_coefficient()?;
    let dh = dep.height_delta();
    let r2d = (y * y - dh * dh).max(0.0).sqrt();
    let p_b = blockage_probability(r2d, dep, dep.bs_height)?;
    let los = c * y.powf(-radio.zeta_los) / radio.fading_margin_los();
    let blocked = c * y.powf(-radio.zeta_blocked) / radio.fading_margin_blocked();
    Ok(los * (1.0 - p_b) + blocked * p_b)
}

/// SINR-limited coverage radius: the 2D distance where the blocked-state
/// SINR with the edge fading margin meets the outage threshold.
pub fn coverage_radius_sinr(dep: &DeploymentConfig, radio: &RadioConfig) -> Result<f64> {
    let c = radio.sinr_coefficient()?;
    let s_th = db_to_linear(radio.outage_sinr_db);
    let m_b = radio.fading_margin_blocked();
    let dh = dep.height_delta();
    // (r^2 + dh^2)^(zeta/2) = C / (S_th * M_B)
    let rhs = c / (s_th * m_b);
    if rhs <= 0.0 {
        return Err(Error::CoverageInfeasible);
    }
    let y2 = rhs.powf(2.0 / radio.zeta_blocked);
    let radicand = y2 - dh * dh;
    if radicand <= 0.0 {
        return Err(Error::CoverageInfeasible);
    }
    Ok(radicand.sqrt())
}

/// Radius of the circle with the mean Voronoi cell area 1/lambda_A.
pub fn voronoi_radius(bs_density: f64) -> Result<f64> {
    if bs_density <= 0.0 {
        return Err(Error::Domain("BS density must be > 0".into()));
    }
    Ok((1.0 / (std::f64::consts::PI * bs_density)).sqrt())
}

/// Full coverage of one band: min of the SINR-limited and Voronoi radii.
pub fn coverage(dep: &DeploymentConfig, radio: &RadioConfig) -> Result<CoverageResult> {
    let r_sinr = coverage_radius_sinr(dep, radio)?;
    let r_voronoi = voronoi_radius(dep.bs_density)?;
    Ok(CoverageResult {
        r_sinr,
        r_voronoi,
        r_cell: r_sinr.min(r_voronoi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn test_deployment() -> DeploymentConfig {
        DeploymentConfig {
            bs_density: 1e-4,
            nru_ue_density: 5e-3,
            wigig_ue_density: 5e-3,
            blocker_density: 0.3,
            bs_height: 10.0,
            ue_height: 1.5,
            blocker_height: 1.7,
            blocker_radius: 0.2,
        }
    }

    fn test_radio() -> RadioConfig {
        RadioConfig {
            carrier_freq_ghz: 28.0,
            bandwidth_hz: 400e6,
            tx_power_dbm: 33.0,
            tx_elements: (64, 4),
            rx_elements: (8, 4),
            interference_margin_db: 3.0,
            noise_psd_dbm_hz: -174.0,
            outage_sinr_db: -8.97,
            edge_outage_fraction: 0.05,
            shadow_sigma_blocked_db: 7.82,
            shadow_sigma_los_db: 4.0,
            zeta_los: 2.1,
            zeta_blocked: 3.19,
            pathloss_constant: None,
        }
    }

    #[test]
    fn blockage_zero_density_is_zero() {
        let mut dep = test_deployment();
        dep.blocker_density = 0.0;
        assert_eq!(blockage_probability(25.0, &dep, dep.bs_height).unwrap(), 0.0);
    }

    #[test]
    fn blockage_matches_direct_evaluation() {
        // lambda_B=0.3, r_B=0.2, h_Bk=1.7, h_U=1.5, h=10, r=10
        let dep = test_deployment();
        let p = blockage_probability(10.0, &dep, 10.0).unwrap();
        let expected = 1.0 - f64::exp(-2.0 * 0.3 * 0.2 * (10.0 * 0.2 / 8.5 + 0.2));
        assert!((p - expected).abs() < 1e-15);
        assert!((p - 0.0509).abs() < 5e-4);
    }

    #[test]
    fn blockage_at_zero_distance_is_self_blockage_term() {
        let dep = test_deployment();
        let p = blockage_probability(0.0, &dep, 10.0).unwrap();
        assert!((p - (1.0 - (-0.024f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn blockage_rejects_low_receiver() {
        let dep = test_deployment();
        assert!(blockage_probability(1.0, &dep, 1.0).is_err());
    }

    #[test]
    fn mean_blockage_zero_density() {
        let mut dep = test_deployment();
        dep.blocker_density = 0.0;
        assert_eq!(
            mean_blockage_probability(50.0, &dep, dep.bs_height).unwrap(),
            0.0
        );
    }

    #[test]
    fn mean_blockage_of_constant_is_constant() {
        // With blocker height at UE height the distance term vanishes and
        // p_b(r) is the constant self-blockage value.
        let mut dep = test_deployment();
        dep.blocker_height = dep.ue_height + 1e-12;
        let c = blockage_probability(0.0, &dep, dep.bs_height).unwrap();
        let m = mean_blockage_probability(50.0, &dep, dep.bs_height).unwrap();
        assert!((m - c).abs() < 1e-9);
    }

    #[test]
    fn mean_blockage_bounded_by_edge_value() {
        let dep = test_deployment();
        let edge = blockage_probability(50.0, &dep, dep.bs_height).unwrap();
        let mean = mean_blockage_probability(50.0, &dep, dep.bs_height).unwrap();
        assert!(mean > 0.0 && mean < edge);
    }

    #[test]
    fn path_loss_reference_point() {
        // y=100, f=28 GHz, LoS
        let pl = path_loss_db(100.0, LosState::Los, 28.0).unwrap();
        assert!((pl - 103.34).abs() < 5e-3);
        // y=1: log term vanishes
        let pl1 = path_loss_db(1.0, LosState::Los, 28.0).unwrap();
        assert!((pl1 - (32.4 + 20.0 * 28f64.log10())).abs() < 1e-12);
        assert!(path_loss_db(0.5, LosState::Los, 28.0).is_err());
    }

    #[test]
    fn path_loss_state_gap_is_exact() {
        for &y in &[1.0, 10.0, 100.0, 517.3] {
            let gap = path_loss_db(y, LosState::Blocked, 28.0).unwrap()
                - path_loss_db(y, LosState::Los, 28.0).unwrap();
            assert!((gap - 10.9 * y.log10()).abs() < 1e-10);
        }
    }

    #[test]
    fn antenna_gain_basics() {
        assert_eq!(antenna_gain(1).unwrap(), 1.0);
        assert!((hpbw_degrees(64).unwrap() - 1.59375).abs() < 1e-12);
        assert!(antenna_gain(16).unwrap() > antenna_gain(8).unwrap());
        assert!(antenna_gain(0).is_err());
    }

    #[test]
    fn antenna_gain_monotone_in_elements() {
        let mut prev = 0.0;
        for n in 1..=32 {
            let g = antenna_gain(n).unwrap();
            assert!(g >= prev, "gain({n}) = {g} < gain({}) = {prev}", n - 1);
            prev = g;
        }
    }

    #[test]
    fn mean_sinr_blockage_limits() {
        let dep0 = {
            let mut d = test_deployment();
            d.blocker_density = 0.0;
            d
        };
        let radio = test_radio();
        let y = 50.0;
        let c = radio.sinr_coefficient().unwrap();
        let s = mean_sinr(y, &dep0, &radio).unwrap();
        let los_only = c * y.powf(-radio.zeta_los) / radio.fading_margin_los();
        assert!((s - los_only).abs() / los_only < 1e-12);
    }

    #[test]
    fn mean_sinr_matches_independent_recomputation() {
        // Independent spreadsheet-style recomputation of the two-branch SINR.
        let dep = test_deployment();
        let radio = test_radio();
        let y = 50.0;

        let g = |n: f64, alpha_deg: f64| {
            // plain midpoint-rule recomputation of the array-gain integral
            let a = alpha_deg.to_radians();
            let lo = std::f64::consts::FRAC_PI_2 - a / 2.0;
            let steps = 20000;
            let h = a / steps as f64;
            let mut acc = 0.0;
            for i in 0..steps {
                let th: f64 = lo + (i as f64 + 0.5) * h;
                let x = std::f64::consts::PI * th.cos() / 2.0;
                acc += if x.abs() < 1e-9 { n } else { (n * x).sin() / x.sin() } * h;
            }
            acc / a
        };
        let gain = g(64.0, 102.0 / 64.0)
            * g(4.0, 102.0 / 4.0)
            * g(8.0, 102.0 / 8.0)
            * g(4.0, 102.0 / 4.0);
        let noise = 10f64.powf((-174.0 + 10.0 * 400e6f64.log10()) / 10.0) * 10f64.powf(0.3);
        let a_pl = 10f64.powf(3.24) * 28.0 * 28.0;
        let c = 10f64.powf(3.3) * gain / (noise * a_pl);
        let r2d = (y * y - 8.5 * 8.5f64).sqrt();
        let pb = 1.0 - (-2.0 * 0.3 * 0.2 * (r2d * 0.2 / 8.5 + 0.2)).exp();
        let m_nb = 10f64.powf(std::f64::consts::SQRT_2 * 4.0 * erfc_inv(0.1) / 10.0);
        let m_b = 10f64.powf(std::f64::consts::SQRT_2 * 7.82 * erfc_inv(0.1) / 10.0);
        let expected = c * y.powf(-2.1) * (1.0 - pb) / m_nb + c * y.powf(-3.19) * pb / m_b;

        let got = mean_sinr(y, &dep, &radio).unwrap();
        assert!(
            (got - expected).abs() / expected < 1e-4,
            "got {got}, expected {expected}"
        );
    }

    #[test]
    fn mean_sinr_strictly_decreasing() {
        let dep = test_deployment();
        let radio = test_radio();
        let mut prev = f64::INFINITY;
        let mut y = 1.0;
        while y <= 1000.0 {
            let s = mean_sinr(y, &dep, &radio).unwrap();
            assert!(s < prev, "SINR not decreasing at y = {y}");
            prev = s;
            y *= 1.15;
        }
    }

    #[test]
    fn coverage_radius_round_trip() {
        let dep = test_deployment();
        let radio = test_radio();
        let r = coverage_radius_sinr(&dep, &radio).unwrap();
        let c = radio.sinr_coefficient().unwrap();
        let dh = dep.height_delta();
        let y2 = r * r + dh * dh;
        let sinr = c * y2.powf(-radio.zeta_blocked / 2.0) / radio.fading_margin_blocked();
        let s_th = db_to_linear(radio.outage_sinr_db);
        assert!((sinr - s_th).abs() / s_th < 1e-9);
    }

    #[test]
    fn coverage_radius_matches_bisection_oracle() {
        let dep = test_deployment();
        let radio = test_radio();
        let r = coverage_radius_sinr(&dep, &radio).unwrap();
        let c = radio.sinr_coefficient().unwrap();
        let dh = dep.height_delta();
        let s_th = db_to_linear(radio.outage_sinr_db);
        let m_b = radio.fading_margin_blocked();
        let f = |x: f64| {
            c * (x * x + dh * dh).powf(-radio.zeta_blocked / 2.0) / m_b - s_th
        };
        let oracle = crate::numeric::bisect(f, 0.0, 1e7, 1e-7).unwrap();
        assert!((r - oracle).abs() < 1e-6, "r = {r}, oracle = {oracle}");
    }

    #[test]
    fn median_fading_margin_is_unity() {
        let mut radio = test_radio();
        radio.edge_outage_fraction = 0.5;
        assert!((radio.fading_margin_blocked() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn voronoi_radius_values() {
        assert!((voronoi_radius(1.0 / std::f64::consts::PI).unwrap() - 1.0).abs() < 1e-12);
        assert!((voronoi_radius(1e-4).unwrap() - 56.418958).abs() < 1e-5);
        let r1 = voronoi_radius(2e-4).unwrap();
        let r2 = voronoi_radius(1e-4).unwrap();
        assert!((r2 / r1 - std::f64::consts::SQRT_2).abs() < 1e-12);
        assert!(voronoi_radius(0.0).is_err());
    }

    #[test]
    fn cell_radius_never_grows_with_density() {
        let dep = test_deployment();
        let radio = test_radio();
        let mut prev = f64::INFINITY;
        for &la in &[1e-5, 5e-5, 1e-4, 5e-4] {
            let mut d = dep.clone();
            d.bs_density = la;
            let cov = coverage(&d, &radio).unwrap();
            assert!((cov.r_cell - cov.r_sinr.min(cov.r_voronoi)).abs() < 1e-12);
            assert!(cov.r_cell <= prev);
            prev = cov.r_cell;
        }
    }
}
