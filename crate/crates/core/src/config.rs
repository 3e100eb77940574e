//! Configuration file schema. Every parameter of the default deployment
//! has a key; omitted keys take the documented defaults, and unknown keys
//! are rejected rather than silently ignored.

use crate::chanstat::McsTable;
use crate::error::{Error, Result};
use crate::geometry::{DeploymentConfig, RadioConfig};
use crate::lbt::BackoffParams;
use crate::pipeline::{
    LicensedLossWeight, QueueOptions, RateMapMode, Scenario, StrategyOptions, TrafficConfig,
};
use serde::{Deserialize, Serialize};

const NR_MCS_TEXT: &str = include_str!("../data/nr28.mcs");
const WIGIG_MCS_TEXT: &str = include_str!("../data/wigig60.mcs");

/// Built-in MCS table for the licensed 28 GHz band.
pub fn builtin_nr_mcs() -> McsTable {
    McsTable::parse(NR_MCS_TEXT).expect("embedded table parses")
}

/// Built-in MCS table for the unlicensed 60 GHz band.
pub fn builtin_wigig_mcs() -> McsTable {
    McsTable::parse(WIGIG_MCS_TEXT).expect("embedded table parses")
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct DeploymentSection {
    /// Base stations per square metre.
    pub bs_density: f64,
    /// Cellular UEs per square metre.
    pub nru_ue_density: f64,
    /// WiGig UEs per square metre.
    pub wigig_ue_density: f64,
    /// Blockers per square metre.
    pub blocker_density: f64,
    pub bs_height_m: f64,
    pub ue_height_m: f64,
    pub blocker_height_m: f64,
    pub blocker_radius_m: f64,
}

impl Default for DeploymentSection {
    fn default() -> Self {
        Self {
            bs_density: 1e-4,
            nru_ue_density: 1e-2,
            wigig_ue_density: 1e-2,
            blocker_density: 0.3,
            bs_height_m: 10.0,
            ue_height_m: 1.5,
            blocker_height_m: 1.7,
            blocker_radius_m: 0.2,
        }
    }
}

impl DeploymentSection {
    fn build(&self) -> DeploymentConfig {
        DeploymentConfig {
            bs_density: self.bs_density,
            nru_ue_density: self.nru_ue_density,
            wigig_ue_density: self.wigig_ue_density,
            blocker_density: self.blocker_density,
            bs_height: self.bs_height_m,
            ue_height: self.ue_height_m,
            blocker_height: self.blocker_height_m,
            blocker_radius: self.blocker_radius_m,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RadioSection {
    pub carrier_freq_ghz: f64,
    pub bandwidth_hz: f64,
    pub tx_power_dbm: f64,
    /// Transmit array as [horizontal, vertical] element counts.
    pub tx_elements: [u32; 2],
    pub rx_elements: [u32; 2],
    pub interference_margin_db: f64,
    pub noise_psd_dbm_hz: f64,
    pub outage_sinr_db: f64,
    /// Target outage probability at the coverage edge.
    pub edge_outage_fraction: f64,
    pub shadow_sigma_blocked_db: f64,
    pub shadow_sigma_los_db: f64,
    pub zeta_los: f64,
    pub zeta_blocked: f64,
    /// Optional path to an MCS table file; empty means the built-in table.
    pub mcs_table: String,
}

impl RadioSection {
    fn nr_default() -> Self {
        Self {
            carrier_freq_ghz: 28.0,
            bandwidth_hz: 400e6,
            tx_power_dbm: 33.0,
            tx_elements: [64, 4],
            rx_elements: [8, 4],
            interference_margin_db: 3.0,
            noise_psd_dbm_hz: -174.0,
            outage_sinr_db: -8.97,
            edge_outage_fraction: 0.05,
            shadow_sigma_blocked_db: 7.82,
            shadow_sigma_los_db: 4.0,
            zeta_los: 2.1,
            zeta_blocked: 3.19,
            mcs_table: String::new(),
        }
    }

    fn wigig_default() -> Self {
        Self {
            carrier_freq_ghz: 60.0,
            bandwidth_hz: 2.16e9,
            tx_power_dbm: 23.0,
            tx_elements: [16, 4],
            rx_elements: [8, 4],
            outage_sinr_db: 0.0,
            ..Self::nr_default()
        }
    }

    fn build(&self) -> RadioConfig {
        RadioConfig {
            carrier_freq_ghz: self.carrier_freq_ghz,
            bandwidth_hz: self.bandwidth_hz,
            tx_power_dbm: self.tx_power_dbm,
            tx_elements: (self.tx_elements[0], self.tx_elements[1]),
            rx_elements: (self.rx_elements[0], self.rx_elements[1]),
            interference_margin_db: self.interference_margin_db,
            noise_psd_dbm_hz: self.noise_psd_dbm_hz,
            outage_sinr_db: self.outage_sinr_db,
            edge_outage_fraction: self.edge_outage_fraction,
            shadow_sigma_blocked_db: self.shadow_sigma_blocked_db,
            shadow_sigma_los_db: self.shadow_sigma_los_db,
            zeta_los: self.zeta_los,
            zeta_blocked: self.zeta_blocked,
            pathloss_constant: None,
        }
    }

    fn mcs(&self, builtin: fn() -> McsTable) -> Result<McsTable> {
        if self.mcs_table.is_empty() {
            Ok(builtin())
        } else {
            let text = std::fs::read_to_string(&self.mcs_table)
                .map_err(|e| Error::Config(format!("{}: {e}", self.mcs_table)))?;
            McsTable::parse(&text)
        }
    }
}

/// Partial radio section: every field optional, applied over the band's
/// own defaults so [nr] and [wigig] can each be sparse.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RadioPatch {
    carrier_freq_ghz: Option<f64>,
    bandwidth_hz: Option<f64>,
    tx_power_dbm: Option<f64>,
    tx_elements: Option<[u32; 2]>,
    rx_elements: Option<[u32; 2]>,
    interference_margin_db: Option<f64>,
    noise_psd_dbm_hz: Option<f64>,
    outage_sinr_db: Option<f64>,
    edge_outage_fraction: Option<f64>,
    shadow_sigma_blocked_db: Option<f64>,
    shadow_sigma_los_db: Option<f64>,
    zeta_los: Option<f64>,
    zeta_blocked: Option<f64>,
    mcs_table: Option<String>,
}

impl RadioPatch {
    fn apply(self, mut base: RadioSection) -> RadioSection {
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { base.$f = v; } )* };
        }
        take!(
            carrier_freq_ghz,
            bandwidth_hz,
            tx_power_dbm,
            tx_elements,
            rx_elements,
            interference_margin_db,
            noise_psd_dbm_hz,
            outage_sinr_db,
            edge_outage_fraction,
            shadow_sigma_blocked_db,
            shadow_sigma_los_db,
            zeta_los,
            zeta_blocked,
            mcs_table
        );
        base
    }
}

macro_rules! radio_section {
    ($name:ident, $default:expr) => {
        #[derive(Debug, Clone, Serialize, PartialEq)]
        #[serde(transparent)]
        pub struct $name(pub RadioSection);

        impl Default for $name {
            fn default() -> Self {
                Self($default)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                Ok(Self(RadioPatch::deserialize(d)?.apply($default)))
            }
        }
    };
}

radio_section!(NrSection, RadioSection::nr_default());
radio_section!(WigigSection, RadioSection::wigig_default());

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TrafficSection {
    pub session_rate: f64,
    pub nru_active_prob: f64,
    pub wigig_active_prob: f64,
    pub wigig_session_rate: f64,
    pub service_rate: f64,
    pub wigig_service_rate: f64,
    pub min_rate_bps: f64,
}

impl Default for TrafficSection {
    fn default() -> Self {
        Self {
            session_rate: 0.017,
            nru_active_prob: 0.1,
            wigig_active_prob: 0.1,
            wigig_session_rate: 0.0075,
            service_rate: 0.02,
            wigig_service_rate: 0.02,
            min_rate_bps: 50e6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ContentionSection {
    pub initial_cw_nru: u32,
    pub initial_cw_wigig: u32,
    pub max_retries: u32,
    /// Count the tagged station among its own interferers (symmetric form).
    pub literal_collision: bool,
    /// Poisson tail mass dropped from the population mixtures.
    pub truncation_mass: f64,
}

impl Default for ContentionSection {
    fn default() -> Self {
        Self {
            initial_cw_nru: 16,
            initial_cw_wigig: 16,
            max_retries: 3,
            literal_collision: false,
            truncation_mass: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct StrategySection {
    /// Heavy-offload demand threshold; 0 derives it from the mean demand.
    pub fat_threshold: usize,
    /// Light-offload demand threshold; 0 derives it from the mean demand.
    pub slim_threshold: usize,
    /// "as-printed" or "ring-only" weighting of the licensed loss term.
    pub licensed_loss_weight: String,
    pub infeasible_to_qsu: bool,
    /// "distance" or "uniform" licensed-class to unlicensed-MCS mapping.
    pub rate_map: String,
}

impl Default for StrategySection {
    fn default() -> Self {
        Self {
            fat_threshold: 0,
            slim_threshold: 0,
            licensed_loss_weight: "as-printed".into(),
            infeasible_to_qsu: false,
            rate_map: "distance".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct QueueSection {
    pub resource_unit_hz: f64,
    /// Session slots; 0 means one slot per resource unit.
    pub k_max: usize,
}

impl Default for QueueSection {
    fn default() -> Self {
        Self {
            resource_unit_hz: 1.44e6,
            k_max: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Ascending BS density grid for `sweep`.
    pub densities: Vec<f64>,
    /// Minimum-rate grid, bit/s; empty keeps the traffic default only.
    pub min_rates_bps: Vec<f64>,
    /// Initial contention-window grid; empty keeps the contention default.
    pub initial_cws: Vec<u32>,
    /// Target eventual loss probability; 0 disables target detection.
    pub target_q_s: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        let densities = (0..10).map(|i| 2e-5 * (i as f64 + 1.0)).collect();
        Self {
            densities,
            min_rates_bps: Vec::new(),
            initial_cws: Vec::new(),
            target_q_s: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateSection {
    pub seed: u64,
    pub event_budget: u64,
    pub slot_budget: u64,
    pub confidence_level: f64,
    pub batch_count: u32,
}

impl Default for ValidateSection {
    fn default() -> Self {
        Self {
            seed: 0x5eed_0001,
            event_budget: 2_000_000,
            slot_budget: 10_000_000,
            confidence_level: 0.95,
            batch_count: 20,
        }
    }
}

/// Whole configuration file.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct AppConfig {
    pub deployment: DeploymentSection,
    pub nr: NrSection,
    pub wigig: WigigSection,
    pub traffic: TrafficSection,
    pub contention: ContentionSection,
    pub strategy: StrategySection,
    pub queue: QueueSection,
    pub sweep: SweepSection,
    pub validate: ValidateSection,
}

impl AppConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn dump(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Assemble the validated scenario this configuration describes.
    pub fn scenario(&self) -> Result<Scenario> {
        let weight = match self.strategy.licensed_loss_weight.as_str() {
            "as-printed" => LicensedLossWeight::AsPrinted,
            "ring-only" => LicensedLossWeight::RingOnly,
            other => {
                return Err(Error::Config(format!(
                    "licensed_loss_weight '{other}' (expected 'as-printed' or 'ring-only')"
                )))
            }
        };
        let rate_map = match self.strategy.rate_map.as_str() {
            "distance" => RateMapMode::Distance,
            "uniform" => RateMapMode::Uniform,
            other => {
                return Err(Error::Config(format!(
                    "rate_map '{other}' (expected 'distance' or 'uniform')"
                )))
            }
        };
        let opt_threshold = |t: usize| if t == 0 { None } else { Some(t) };
        let scenario = Scenario {
            deployment: self.deployment.build(),
            nr: self.nr.0.build(),
            wigig: self.wigig.0.build(),
            traffic: TrafficConfig {
                session_rate: self.traffic.session_rate,
                nru_active_prob: self.traffic.nru_active_prob,
                wigig_active_prob: self.traffic.wigig_active_prob,
                wigig_session_rate: self.traffic.wigig_session_rate,
                service_rate: self.traffic.service_rate,
                wigig_service_rate: self.traffic.wigig_service_rate,
                min_rate: self.traffic.min_rate_bps,
            },
            nru_backoff: BackoffParams {
                initial_window: self.contention.initial_cw_nru,
                max_retries: self.contention.max_retries,
            },
            wifi_backoff: BackoffParams {
                initial_window: self.contention.initial_cw_wigig,
                max_retries: self.contention.max_retries,
            },
            literal_collision: self.contention.literal_collision,
            truncation_mass: self.contention.truncation_mass,
            nr_mcs: self.nr.0.mcs(builtin_nr_mcs)?,
            wigig_mcs: self.wigig.0.mcs(builtin_wigig_mcs)?,
            options: StrategyOptions {
                fat_threshold: opt_threshold(self.strategy.fat_threshold),
                slim_threshold: opt_threshold(self.strategy.slim_threshold),
                licensed_loss_weight: weight,
                infeasible_to_qsu: self.strategy.infeasible_to_qsu,
                rate_map,
            },
            queue: QueueOptions {
                resource_unit_hz: self.queue.resource_unit_hz,
                k_max: if self.queue.k_max == 0 {
                    None
                } else {
                    Some(self.queue.k_max)
                },
            },
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_build_a_valid_scenario() {
        let cfg = AppConfig::default();
        let scn = cfg.scenario().unwrap();
        assert_eq!(scn.nr.carrier_freq_ghz, 28.0);
        assert_eq!(scn.wigig.carrier_freq_ghz, 60.0);
        assert_eq!(scn.wigig.bandwidth_hz, 2.16e9);
        assert_eq!(scn.nr.tx_power_dbm, 33.0);
        assert_eq!(scn.wigig.tx_power_dbm, 23.0);
        assert_eq!(scn.deployment.blocker_density, 0.3);
        assert_eq!(scn.nru_backoff.initial_window, 16);
        assert_eq!(scn.r_max(), 277);
        assert_eq!(scn.k_max(), 277);
    }

    #[test]
    fn dump_round_trips() {
        let cfg = AppConfig::default();
        let text = cfg.dump();
        let back = AppConfig::from_toml(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = AppConfig::from_toml("[traffic]\nsesion_rate = 1.0\n").unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("sesion_rate"), "{msg}");
    }

    #[test]
    fn partial_section_keeps_other_defaults() {
        let cfg = AppConfig::from_toml("[deployment]\nblocker_density = 0.7\n").unwrap();
        assert_eq!(cfg.deployment.blocker_density, 0.7);
        assert_eq!(cfg.deployment.bs_height_m, 10.0);
        assert_eq!(cfg.nr.0.carrier_freq_ghz, 28.0);
    }

    #[test]
    fn empty_grid_is_guarded_downstream() {
        let cfg = AppConfig::from_toml("[sweep]\ndensities = []\n").unwrap();
        assert!(cfg.sweep.densities.is_empty());
    }

    #[test]
    fn bad_enums_rejected() {
        let cfg = AppConfig::from_toml("[strategy]\nrate_map = \"banana\"\n").unwrap();
        assert!(cfg.scenario().is_err());
    }
}
