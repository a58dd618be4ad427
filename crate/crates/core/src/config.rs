//! Run configuration: one TOML document covering every module. Unknown keys
//! are rejected. Relative data paths resolve against the config file's
//! directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::astro::{EarthConstants, DEFAULT_MU_KM3_S2, DEFAULT_OMEGA_RAD_S};
use crate::forecast::{DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_TARGET_YEAR, DEFAULT_TOTAL_DEMAND};
use crate::geo::EARTH_RADIUS_KM;
use crate::hazard::{
    AzimuthRule, RerouteParams, ScanParams, DEFAULT_AZIMUTH_STEP_DEG, DEFAULT_BUFFER_DEG, DEFAULT_CLOSURE_HOURS,
    DEFAULT_POP_THRESHOLD, DEFAULT_RANGE_CAP_KM, DEFAULT_UNIT_REROUTE_USD,
};
use crate::ingest::DEFAULT_FLIGHT_SPACING_KM;
use crate::missions::{DEFAULT_CLUSTERS, DEFAULT_SEED};
use crate::plan::model::{DEFAULT_CAPACITY, DEFAULT_SEPARATION_MILES};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: Box<toml::de::Error>,
    },
    #[error("invalid value for {key}: {message}")]
    Value { key: &'static str, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataPaths {
    pub counties: PathBuf,
    pub popgrid: PathBuf,
    pub launches: Option<PathBuf>,
    pub regions: Option<PathBuf>,
    pub flights_low: Option<PathBuf>,
    pub flights_high: Option<PathBuf>,
    /// Minimum spacing between kept flight samples on ingest, km.
    pub flight_spacing_km: f64,
}

impl Default for DataPaths {
    fn default() -> Self {
        Self {
            counties: "counties.csv".into(),
            popgrid: "popgrid.csv".into(),
            launches: None,
            regions: None,
            flights_low: None,
            flights_high: None,
            flight_spacing_km: DEFAULT_FLIGHT_SPACING_KM,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForecastConfig {
    pub alpha: f64,
    pub beta: f64,
    pub target_year: i32,
    pub default_total: u32,
    /// Forecast the total from the launch history instead of using
    /// `default_total`.
    pub from_history: bool,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            target_year: DEFAULT_TARGET_YEAR,
            default_total: DEFAULT_TOTAL_DEMAND,
            from_history: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterConfig {
    pub m: usize,
    pub seed: u64,
    pub standardize: bool,
    pub restarts: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        let km = crate::missions::KMeansOptions::default();
        Self {
            m: DEFAULT_CLUSTERS,
            seed: DEFAULT_SEED,
            standardize: false,
            restarts: km.restarts,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissionSource {
    /// The tabulated mission types with their listed demands.
    #[default]
    Table1,
    /// k-means on the launch history, demand apportioned by cluster weight.
    Clusters,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MissionsConfig {
    pub source: MissionSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EarthConfig {
    pub mu: f64,
    pub radius_km: f64,
    pub omega: f64,
}

impl Default for EarthConfig {
    fn default() -> Self {
        Self {
            mu: DEFAULT_MU_KM3_S2,
            radius_km: EARTH_RADIUS_KM,
            omega: DEFAULT_OMEGA_RAD_S,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HazardConfig {
    pub buffer_deg: f64,
    pub azimuth_step_deg: f64,
    pub pop_threshold: u64,
    pub range_km_cap: f64,
    pub azimuth_rule: AzimuthRule,
}

impl Default for HazardConfig {
    fn default() -> Self {
        Self {
            buffer_deg: DEFAULT_BUFFER_DEG,
            azimuth_step_deg: DEFAULT_AZIMUTH_STEP_DEG,
            pop_threshold: DEFAULT_POP_THRESHOLD,
            range_km_cap: DEFAULT_RANGE_CAP_KM,
            azimuth_rule: AzimuthRule::MinDv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RerouteConfig {
    pub unit_cost_usd: f64,
    pub closure_hours: f64,
}

impl Default for RerouteConfig {
    fn default() -> Self {
        Self {
            unit_cost_usd: DEFAULT_UNIT_REROUTE_USD,
            closure_hours: DEFAULT_CLOSURE_HOURS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanConfig {
    pub capacity_per_year: u32,
    pub min_separation_miles: f64,
    /// Big-M constant; `None` picks 1 + max(largest distance, D).
    pub big_m: Option<f64>,
    pub node_limit: usize,
    pub use_conflict_reformulation: bool,
    pub normalize: bool,
    /// Number of sites; `None` uses ⌈total demand / capacity⌉.
    pub sites: Option<usize>,
    /// Scenario and traffic level for a single `plan` run.
    pub scenario: String,
    pub traffic: String,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            capacity_per_year: DEFAULT_CAPACITY,
            min_separation_miles: DEFAULT_SEPARATION_MILES,
            big_m: None,
            node_limit: crate::plan::bnb::BnbOptions::default().node_limit,
            use_conflict_reformulation: false,
            normalize: true,
            sites: None,
            scenario: "S1".into(),
            traffic: "low".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub buffers_deg: Vec<f64>,
    pub traffic: Vec<String>,
    pub scenarios: Vec<String>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            buffers_deg: vec![5.0, 7.5, 10.0],
            traffic: vec!["low".into(), "high".into()],
            scenarios: ["S1", "S2", "S3", "S4"].iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub data: DataPaths,
    pub forecast: ForecastConfig,
    pub cluster: ClusterConfig,
    pub missions: MissionsConfig,
    pub earth: EarthConfig,
    pub hazard: HazardConfig,
    pub reroute: RerouteConfig,
    pub plan: PlanConfig,
    pub sweep: SweepConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            source: Box::new(e),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` and resolves relative data paths against its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text, path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.data.resolve(base);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key, message: String| Err(ConfigError::Value { key, message });
        let f = &self.forecast;
        if !(0.0..=1.0).contains(&f.alpha) {
            return bad("forecast.alpha", format!("{} is outside [0, 1]", f.alpha));
        }
        if !(0.0..=1.0).contains(&f.beta) {
            return bad("forecast.beta", format!("{} is outside [0, 1]", f.beta));
        }
        if self.cluster.m == 0 {
            return bad("cluster.m", "must be at least 1".into());
        }
        let h = &self.hazard;
        if !(h.buffer_deg > 0.0 && h.buffer_deg < 90.0) {
            return bad("hazard.buffer_deg", format!("{} is outside (0, 90)", h.buffer_deg));
        }
        if !(h.range_km_cap > 0.0) {
            return bad("hazard.range_km_cap", format!("{} must be positive", h.range_km_cap));
        }
        if let Err(e) = self.scan_params(h.buffer_deg).azimuths() {
            return bad("hazard.azimuth_step_deg", e.to_string());
        }
        if !(self.reroute.unit_cost_usd >= 0.0) || !(self.reroute.closure_hours >= 0.0) {
            return bad("reroute", "costs and hours must be non-negative".into());
        }
        if let Err(e) = self.earth_constants() {
            return bad("earth", e.to_string());
        }
        let p = &self.plan;
        if p.capacity_per_year == 0 {
            return bad("plan.capacity_per_year", "must be positive".into());
        }
        if !(p.min_separation_miles >= 0.0) {
            return bad("plan.min_separation_miles", "must be non-negative".into());
        }
        if let Some(m) = p.big_m {
            if !(m > 0.0 && m.is_finite()) {
                return bad("plan.big_m", format!("{m} must be positive"));
            }
        }
        if p.sites == Some(0) {
            return bad("plan.sites", "must be positive".into());
        }
        if !(self.data.flight_spacing_km >= 0.0) {
            return bad("data.flight_spacing_km", "must be non-negative".into());
        }
        for &b in &self.sweep.buffers_deg {
            if !(b > 0.0 && b < 90.0) {
                return bad("sweep.buffers_deg", format!("{b} is outside (0, 90)"));
            }
        }
        Ok(())
    }

    pub fn scan_params(&self, buffer_deg: f64) -> ScanParams {
        ScanParams {
            buffer_deg,
            azimuth_step_deg: self.hazard.azimuth_step_deg,
            pop_threshold: self.hazard.pop_threshold,
            range_km_cap: self.hazard.range_km_cap,
        }
    }

    pub fn reroute_params(&self) -> RerouteParams {
        RerouteParams {
            unit_cost_usd: self.reroute.unit_cost_usd,
            closure_hours: self.reroute.closure_hours,
        }
    }

    pub fn earth_constants(&self) -> Result<EarthConstants<f64>, crate::astro::AstroError> {
        EarthConstants::new(self.earth.mu, self.earth.radius_km, self.earth.omega)
    }
}

impl DataPaths {
    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.counties);
        fix(&mut self.popgrid);
        for p in [&mut self.launches, &mut self.regions, &mut self.flights_low, &mut self.flights_high]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
    }
}
