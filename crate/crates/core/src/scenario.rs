//! The experiment grid: buffer angle × traffic level × cost weighting, with
//! hazard scans cached per (dataset hash, ξ) and corridors per
//! (dataset hash, ξ, traffic).

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::astro::EarthConstants;
use crate::config::{MissionSource, RunConfig};
use crate::forecast::{demand_total, ForecastError};
use crate::hazard::{
    mission_corridors, scan_exposure, wedge_range_km, FeasibleAzimuthSet, Footprint, HazardError, MissionCorridor,
    WEDGE_EDGE_SAMPLES,
};
use crate::ingest::{
    annual_launch_series, digest_hex, file_digest, load_counties, load_flight_tracks, load_launch_history,
    load_population_grid, load_region_map, CountyRecord, FlightTrack, IngestError, LaunchRecord, PopulationGrid,
    Region,
};
use crate::missions::{
    apportion_demand, kmeans, mission_types, standardize, table_one_missions, KMeansOptions, MissionError,
    MissionType,
};
use crate::plan::bnb::BnbOptions;
use crate::plan::model::{
    build_cost_bundle, build_model, required_sites, CostBundle, Formulation, ModelError, ModelParams,
    ScenarioWeights, SpflpModel,
};
use crate::plan::solution::PlanSolution;
use crate::plan::solve::{solve, SolveError, SolveOptions};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown scenario tag {0:?} (expected S1, S2, S3 or S4)")]
    UnknownScenario(String),
    #[error("unknown traffic level {0:?} (expected low or high)")]
    UnknownTraffic(String),
    #[error("no flight data configured for {0} traffic")]
    MissingFlights(Traffic),
    #[error("{0} requires data.launches")]
    MissingLaunches(&'static str),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error(transparent)]
    Missions(#[from] MissionError),
    #[error(transparent)]
    Hazard(#[from] HazardError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("earth constants: {0}")]
    Earth(String),
    #[error("no candidate county has a feasible corridor at buffer {0}°")]
    NoCandidates(f64),
    #[error("county {0} has no region mapping")]
    Unmapped(String),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ScenarioTag {
    S1,
    S2,
    S3,
    S4,
}

impl ScenarioTag {
    pub const ALL: [ScenarioTag; 4] = [ScenarioTag::S1, ScenarioTag::S2, ScenarioTag::S3, ScenarioTag::S4];

    /// (w_T, w_O, w_L, w_R).
    pub fn weights(self) -> ScenarioWeights {
        let (t, o, l, r) = match self {
            ScenarioTag::S1 => (1.0, 1.0, 1.0, 1.0),
            ScenarioTag::S2 => (1.0, 1.0, 10.0, 1.0),
            ScenarioTag::S3 => (1.0, 1.0, 1.0, 10.0),
            ScenarioTag::S4 => (10.0, 10.0, 1.0, 1.0),
        };
        ScenarioWeights::new(t, o, l, r).expect("positive weights")
    }
}

impl FromStr for ScenarioTag {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "S1" | "s1" => Ok(ScenarioTag::S1),
            "S2" | "s2" => Ok(ScenarioTag::S2),
            "S3" | "s3" => Ok(ScenarioTag::S3),
            "S4" | "s4" => Ok(ScenarioTag::S4),
            _ => Err(ScenarioError::UnknownScenario(s.to_string())),
        }
    }
}

impl fmt::Display for ScenarioTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

pub fn scenario_weights(tag: &str) -> Result<ScenarioWeights, ScenarioError> {
    Ok(tag.parse::<ScenarioTag>()?.weights())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Traffic {
    Low,
    High,
}

impl FromStr for Traffic {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "low" => Ok(Traffic::Low),
            "high" => Ok(Traffic::High),
            _ => Err(ScenarioError::UnknownTraffic(s.to_string())),
        }
    }
}

impl fmt::Display for Traffic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Traffic::Low => "low",
            Traffic::High => "high",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub buffer_deg: f64,
    pub traffic: Traffic,
    pub scenario: ScenarioTag,
}

impl Configuration {
    /// File-name-safe identifier, e.g. `xi07.5_high_S3`.
    pub fn id(&self) -> String {
        format!("xi{:04.1}_{}_{}", self.buffer_deg, self.traffic, self.scenario)
    }
}

/// Every combination, buffer-major then traffic then scenario.
pub fn configuration_grid(buffers: &[f64], traffic: &[Traffic], scenarios: &[ScenarioTag]) -> Vec<Configuration> {
    let mut out = Vec::with_capacity(buffers.len() * traffic.len() * scenarios.len());
    for &buffer_deg in buffers {
        for &t in traffic {
            for &s in scenarios {
                out.push(Configuration {
                    buffer_deg,
                    traffic: t,
                    scenario: s,
                });
            }
        }
    }
    out
}

pub fn grid_from_config(cfg: &RunConfig) -> Result<Vec<Configuration>, ScenarioError> {
    let traffic = cfg.sweep.traffic.iter().map(|t| t.parse()).collect::<Result<Vec<Traffic>, _>>()?;
    let scen = cfg.sweep.scenarios.iter().map(|s| s.parse()).collect::<Result<Vec<ScenarioTag>, _>>()?;
    Ok(configuration_grid(&cfg.sweep.buffers_deg, &traffic, &scen))
}

/// Loaded inputs plus content hashes used as cache keys.
#[derive(Debug, Clone)]
pub struct Datasets {
    pub counties: Vec<CountyRecord>,
    pub grid: PopulationGrid,
    pub flights: BTreeMap<Traffic, Arc<Vec<FlightTrack>>>,
    pub launches: Option<Vec<LaunchRecord>>,
    pub regions: Option<BTreeMap<String, Region>>,
    /// Hash of the county and population inputs.
    pub base_hash: String,
    pub flight_hash: BTreeMap<Traffic, String>,
}

impl Datasets {
    pub fn load(cfg: &RunConfig) -> Result<Self, ScenarioError> {
        let d = &cfg.data;
        let counties = load_counties(&d.counties)?;
        let grid = load_population_grid(&d.popgrid)?;
        let base_hash = digest_hex(format!("{}{}", file_digest(&d.counties)?, file_digest(&d.popgrid)?).as_bytes());
        let mut flights = BTreeMap::new();
        let mut flight_hash = BTreeMap::new();
        for (t, path) in [(Traffic::Low, &d.flights_low), (Traffic::High, &d.flights_high)] {
            if let Some(p) = path {
                flights.insert(t, Arc::new(load_flight_tracks(p, d.flight_spacing_km)?));
                flight_hash.insert(t, file_digest(p)?);
            }
        }
        let launches = d.launches.as_deref().map(load_launch_history).transpose()?;
        let regions = d.regions.as_deref().map(load_region_map).transpose()?;
        Ok(Self {
            counties,
            grid,
            flights,
            launches,
            regions,
            base_hash,
            flight_hash,
        })
    }

    /// In-memory datasets; hashes are taken over their JSON encoding.
    pub fn from_parts(
        counties: Vec<CountyRecord>,
        grid: PopulationGrid,
        flights: BTreeMap<Traffic, Vec<FlightTrack>>,
    ) -> Self {
        let base_hash = digest_hex(&serde_json::to_vec(&(&counties, &grid)).expect("serializable"));
        let flight_hash = flights
            .iter()
            .map(|(t, f)| (*t, digest_hex(&serde_json::to_vec(f).expect("serializable"))))
            .collect();
        Self {
            counties,
            grid,
            flights: flights.into_iter().map(|(t, f)| (t, Arc::new(f))).collect(),
            launches: None,
            regions: None,
            base_hash,
            flight_hash,
        }
    }

    fn tracks(&self, t: Traffic) -> Result<&Arc<Vec<FlightTrack>>, ScenarioError> {
        self.flights.get(&t).ok_or(ScenarioError::MissingFlights(t))
    }
}

/// Total demand, mission types and number of sites shared by every
/// configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandPlan {
    pub total: u32,
    pub missions: Vec<MissionType<f64>>,
    pub sites: usize,
    pub capacity: u32,
}

impl DemandPlan {
    pub fn demands(&self) -> Vec<u32> {
        self.missions.iter().map(|m| m.demand).collect()
    }
}

pub fn demand_plan(cfg: &RunConfig, data: &Datasets) -> Result<DemandPlan, ScenarioError> {
    let f = &cfg.forecast;
    let total = if f.from_history {
        let launches = data.launches.as_ref().ok_or(ScenarioError::MissingLaunches("forecast.from_history"))?;
        demand_total(&annual_launch_series(launches), f.alpha, f.beta, f.target_year)?
    } else {
        f.default_total
    };
    let missions = match cfg.missions.source {
        MissionSource::Table1 => {
            let mut m = table_one_missions::<f64>();
            let listed: u32 = m.iter().map(|t| t.demand).sum();
            if total != listed {
                let w: Vec<f64> = m.iter().map(|t| t.weight).collect();
                for (t, d) in m.iter_mut().zip(apportion_demand(total, &w)?) {
                    t.demand = d;
                }
            }
            m
        }
        MissionSource::Clusters => {
            let launches = data.launches.as_ref().ok_or(ScenarioError::MissingLaunches("missions.source = clusters"))?;
            cluster_missions(launches, cfg, total)?
        }
    };
    let capacity = cfg.plan.capacity_per_year;
    let sites = cfg.plan.sites.unwrap_or_else(|| required_sites(u64::from(total), capacity));
    log::info!("demand total {total}, {} mission types, {sites} sites", missions.len());
    Ok(DemandPlan {
        total,
        missions,
        sites,
        capacity,
    })
}

/// Mission types from k-means over (semi-major axis, inclination). With
/// standardization on, clustering runs on z-scores and each type's orbit is
/// the raw mean of its members.
pub fn cluster_missions(launches: &[LaunchRecord], cfg: &RunConfig, total: u32) -> Result<Vec<MissionType<f64>>, ScenarioError> {
    let points: Vec<[f64; 2]> = launches.iter().map(|l| [l.semi_major_axis_km, l.inclination_deg]).collect();
    let opts = KMeansOptions {
        seed: cfg.cluster.seed,
        restarts: cfg.cluster.restarts,
        ..KMeansOptions::default()
    };
    log::info!("k-means: m = {}, seed = {}, standardize = {}", cfg.cluster.m, opts.seed, cfg.cluster.standardize);
    let mut model = if cfg.cluster.standardize {
        kmeans(&standardize(&points), cfg.cluster.m, &opts)?
    } else {
        kmeans(&points, cfg.cluster.m, &opts)?
    };
    if cfg.cluster.standardize {
        let sizes = model.sizes();
        let mut sums = vec![[0.0; 2]; model.clusters()];
        for (p, &c) in points.iter().zip(&model.assignment) {
            sums[c][0] += p[0];
            sums[c][1] += p[1];
        }
        for (c, s) in sums.iter().enumerate() {
            let n = sizes[c].max(1) as f64;
            model.centroids[c] = [s[0] / n, s[1] / n];
        }
    }
    Ok(mission_types(&model, total)?)
}

/// Corridors for every county at one (ξ, traffic): `corridors[i][j]`.
pub type Corridors = Vec<Vec<Option<MissionCorridor>>>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheStats {
    pub scans_computed: usize,
    pub scan_hits: usize,
    pub corridors_computed: usize,
    pub corridor_hits: usize,
}

type ScanKey = (String, u64);
type CorridorKey = (String, u64, Traffic);

/// Shared inputs and caches for planning runs over one dataset.
pub struct Pipeline<'a> {
    pub cfg: &'a RunConfig,
    pub data: &'a Datasets,
    pub demand: DemandPlan,
    consts: EarthConstants<f64>,
    ranges: Vec<f64>,
    cell_fp: OnceLock<Vec<Footprint>>,
    flight_fp: Mutex<HashMap<Traffic, Arc<Vec<Footprint>>>>,
    scans: Mutex<HashMap<ScanKey, Arc<Vec<FeasibleAzimuthSet>>>>,
    corridors: Mutex<HashMap<CorridorKey, Arc<Corridors>>>,
    scans_computed: AtomicUsize,
    scan_hits: AtomicUsize,
    corridors_computed: AtomicUsize,
    corridor_hits: AtomicUsize,
    cache_dir: Option<PathBuf>,
}

impl<'a> Pipeline<'a> {
    pub fn new(cfg: &'a RunConfig, data: &'a Datasets) -> Result<Self, ScenarioError> {
        let demand = demand_plan(cfg, data)?;
        Self::with_demand(cfg, data, demand)
    }

    pub fn with_demand(cfg: &'a RunConfig, data: &'a Datasets, demand: DemandPlan) -> Result<Self, ScenarioError> {
        let consts = cfg.earth_constants().map_err(|e| ScenarioError::Earth(e.to_string()))?;
        let ranges = data
            .counties
            .iter()
            .map(|c| wedge_range_km(&c.centroid, &data.grid.bounds, cfg.hazard.range_km_cap))
            .collect();
        Ok(Self {
            cfg,
            data,
            demand,
            consts,
            ranges,
            cell_fp: OnceLock::new(),
            flight_fp: Mutex::new(HashMap::new()),
            scans: Mutex::new(HashMap::new()),
            corridors: Mutex::new(HashMap::new()),
            scans_computed: AtomicUsize::new(0),
            scan_hits: AtomicUsize::new(0),
            corridors_computed: AtomicUsize::new(0),
            corridor_hits: AtomicUsize::new(0),
            cache_dir: None,
        })
    }

    /// Persists feasibility scans as JSON under `dir` and reuses them on
    /// later runs.
    pub fn with_cache_dir(mut self, dir: PathBuf) -> Self {
        self.cache_dir = Some(dir);
        self
    }

    pub fn cache_stats(&self) -> CacheStats {
        CacheStats {
            scans_computed: self.scans_computed.load(Ordering::Relaxed),
            scan_hits: self.scan_hits.load(Ordering::Relaxed),
            corridors_computed: self.corridors_computed.load(Ordering::Relaxed),
            corridor_hits: self.corridor_hits.load(Ordering::Relaxed),
        }
    }

    pub fn range_km(&self, county: usize) -> f64 {
        self.ranges[county]
    }

    fn cell_footprints(&self) -> &[Footprint] {
        self.cell_fp.get_or_init(|| {
            self.data
                .counties
                .par_iter()
                .zip(self.ranges.par_iter())
                .map(|(c, &r)| Footprint::cells(c.centroid, r, &self.data.grid.cells))
                .collect()
        })
    }

    fn flight_footprints(&self, t: Traffic) -> Result<Arc<Vec<Footprint>>, ScenarioError> {
        if let Some(fp) = self.flight_fp.lock().expect("lock").get(&t) {
            return Ok(fp.clone());
        }
        let tracks = self.data.tracks(t)?;
        let fp: Arc<Vec<Footprint>> = Arc::new(
            self.data
                .counties
                .par_iter()
                .zip(self.ranges.par_iter())
                .map(|(c, &r)| Footprint::flights(c.centroid, r, tracks))
                .collect(),
        );
        self.flight_fp.lock().expect("lock").insert(t, fp.clone());
        Ok(fp)
    }

    fn scan_file(&self, buffer_deg: f64) -> Option<PathBuf> {
        self.cache_dir
            .as_ref()
            .map(|d| d.join(format!("scan_{}_{:.4}.json", &self.data.base_hash[..16], buffer_deg)))
    }

    /// Feasible azimuths of every county at buffer `buffer_deg`.
    pub fn feasible_sets(&self, buffer_deg: f64) -> Result<Arc<Vec<FeasibleAzimuthSet>>, ScenarioError> {
        let key = (self.data.base_hash.clone(), buffer_deg.to_bits());
        if let Some(v) = self.scans.lock().expect("lock").get(&key) {
            self.scan_hits.fetch_add(1, Ordering::Relaxed);
            return Ok(v.clone());
        }
        if let Some(path) = self.scan_file(buffer_deg) {
            if let Ok(text) = fs::read_to_string(&path) {
                if let Ok(v) = serde_json::from_str::<Vec<FeasibleAzimuthSet>>(&text) {
                    self.scan_hits.fetch_add(1, Ordering::Relaxed);
                    let v = Arc::new(v);
                    self.scans.lock().expect("lock").insert(key, v.clone());
                    return Ok(v);
                }
            }
        }
        let params = self.cfg.scan_params(buffer_deg);
        let azimuths = params.azimuths()?;
        let fps = self.cell_footprints();
        let sets: Vec<FeasibleAzimuthSet> = self
            .data
            .counties
            .par_iter()
            .zip(fps.par_iter())
            .map(|(c, fp)| {
                let exposure = scan_exposure(fp, &azimuths, buffer_deg)?;
                Ok(FeasibleAzimuthSet {
                    fips: c.fips.clone(),
                    buffer_deg,
                    azimuths: azimuths
                        .iter()
                        .zip(exposure)
                        .filter(|&(_, pop)| pop <= params.pop_threshold)
                        .map(|(&az, _)| az)
                        .collect(),
                })
            })
            .collect::<Result<_, HazardError>>()?;
        self.scans_computed.fetch_add(1, Ordering::Relaxed);
        log::info!(
            "scanned {} counties at buffer {buffer_deg}°: {} with feasible azimuths",
            sets.len(),
            sets.iter().filter(|s| !s.is_empty()).count()
        );
        if let Some(path) = self.scan_file(buffer_deg) {
            let write = fs::create_dir_all(path.parent().expect("cache dir"))
                .and_then(|_| fs::write(&path, serde_json::to_string(&sets).expect("serializable")));
            if let Err(e) = write {
                log::warn!("scan cache not written to {}: {e}", path.display());
            }
        }
        let sets = Arc::new(sets);
        self.scans.lock().expect("lock").insert(key, sets.clone());
        Ok(sets)
    }

    /// Chosen corridor per (county, mission) at one (ξ, traffic).
    pub fn corridors(&self, buffer_deg: f64, traffic: Traffic) -> Result<Arc<Corridors>, ScenarioError> {
        let fh = self.data.flight_hash.get(&traffic).ok_or(ScenarioError::MissingFlights(traffic))?;
        let key = (format!("{}{}", self.data.base_hash, fh), buffer_deg.to_bits(), traffic);
        if let Some(v) = self.corridors.lock().expect("lock").get(&key) {
            self.corridor_hits.fetch_add(1, Ordering::Relaxed);
            return Ok(v.clone());
        }
        let sets = self.feasible_sets(buffer_deg)?;
        let flights = self.flight_footprints(traffic)?;
        let cells = self.cell_footprints();
        let reroute = self.cfg.reroute_params();
        let rule = self.cfg.hazard.azimuth_rule;
        let out: Corridors = (0..self.data.counties.len())
            .into_par_iter()
            .map(|i| {
                mission_corridors(
                    &self.data.counties[i],
                    &sets[i],
                    &self.demand.missions,
                    &cells[i],
                    &flights[i],
                    rule,
                    &reroute,
                    &self.consts,
                )
            })
            .collect::<Result<_, HazardError>>()?;
        self.corridors_computed.fetch_add(1, Ordering::Relaxed);
        let out = Arc::new(out);
        self.corridors.lock().expect("lock").insert(key, out.clone());
        Ok(out)
    }

    /// Cost bundle over the counties with at least one corridor; the rest
    /// are returned by fips as excluded.
    pub fn cost_bundle(&self, buffer_deg: f64, traffic: Traffic) -> Result<(CostBundle, Vec<String>), ScenarioError> {
        let corridors = self.corridors(buffer_deg, traffic)?;
        let mut keep = Vec::new();
        let mut excluded = Vec::new();
        for (i, row) in corridors.iter().enumerate() {
            if row.iter().any(Option::is_some) {
                keep.push(i);
            } else {
                excluded.push(self.data.counties[i].fips.clone());
            }
        }
        if keep.is_empty() {
            return Err(ScenarioError::NoCandidates(buffer_deg));
        }
        let counties: Vec<CountyRecord> = keep.iter().map(|&i| self.data.counties[i].clone()).collect();
        let rows: Vec<Vec<Option<MissionCorridor>>> = keep.iter().map(|&i| corridors[i].clone()).collect();
        Ok((build_cost_bundle(&counties, &rows, self.cfg.plan.normalize)?, excluded))
    }

    pub fn model_params(&self) -> ModelParams {
        let p = &self.cfg.plan;
        ModelParams {
            sites: self.demand.sites,
            capacity: self.demand.capacity,
            separation_miles: p.min_separation_miles,
            big_m: p.big_m,
            formulation: if p.use_conflict_reformulation {
                Formulation::Conflict
            } else {
                Formulation::BigM
            },
        }
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            bnb: BnbOptions {
                node_limit: self.cfg.plan.node_limit,
                ..BnbOptions::default()
            },
            ..SolveOptions::default()
        }
    }

    pub fn build(&self, config: &Configuration) -> Result<(SpflpModel, CostBundle, Vec<String>), ScenarioError> {
        let (bundle, excluded) = self.cost_bundle(config.buffer_deg, config.traffic)?;
        let model = build_model(&bundle, &self.demand.demands(), &config.scenario.weights(), &self.model_params())?;
        Ok((model, bundle, excluded))
    }

    pub fn plan(&self, config: &Configuration) -> PlanOutcome {
        let mut outcome = PlanOutcome {
            config: *config,
            candidates: 0,
            excluded: Vec::new(),
            sites: self.demand.sites,
            status: OutcomeStatus::Error,
            error: None,
            solution: None,
            rollup: None,
            bundle: None,
        };
        let (model, bundle, excluded) = match self.build(config) {
            Ok(v) => v,
            Err(e) => {
                outcome.error = Some(e.to_string());
                return outcome;
            }
        };
        outcome.candidates = bundle.len();
        outcome.excluded = excluded;
        match solve(&model, &bundle, &self.solve_options()) {
            Ok(sol) => {
                outcome.status = if sol.stats.optimal {
                    OutcomeStatus::Optimal
                } else {
                    OutcomeStatus::NodeLimit
                };
                if let Some(map) = &self.data.regions {
                    match regional_rollup(&sol, map) {
                        Ok(r) => outcome.rollup = Some(r),
                        Err(e) => outcome.error = Some(e.to_string()),
                    }
                }
                outcome.solution = Some(sol);
            }
            Err(e) => {
                outcome.status = match e {
                    SolveError::Infeasible(_) => OutcomeStatus::Infeasible,
                    _ => OutcomeStatus::Error,
                };
                outcome.error = Some(e.to_string());
            }
        }
        outcome.bundle = Some(Arc::new(bundle));
        outcome
    }

    /// GeoJSON of a plan: one point per site and the hazard wedge of every
    /// (site, mission) with launches.
    pub fn plan_geojson(&self, outcome: &PlanOutcome) -> serde_json::Value {
        let mut features = Vec::new();
        let (Some(sol), Some(bundle)) = (&outcome.solution, &outcome.bundle) else {
            return serde_json::json!({ "type": "FeatureCollection", "features": features });
        };
        let by_fips: HashMap<&str, usize> =
            self.data.counties.iter().enumerate().map(|(i, c)| (c.fips.as_str(), i)).collect();
        for (k, alloc) in sol.allocation.iter().enumerate() {
            let b = sol.selected[k];
            let c = by_fips[alloc.fips.as_str()];
            let county = &self.data.counties[c];
            features.push(serde_json::json!({
                "type": "Feature",
                "geometry": { "type": "Point", "coordinates": [county.centroid.lon(), county.centroid.lat()] },
                "properties": { "fips": county.fips, "name": county.name, "launches": alloc.launches },
            }));
            for (j, &y) in alloc.launches.iter().enumerate() {
                let Some(az) = bundle.azimuth[b][j] else { continue };
                if y == 0 {
                    continue;
                }
                let Ok(w) = crate::geo::build_wedge(
                    &county.centroid,
                    az,
                    outcome.config.buffer_deg,
                    self.ranges[c],
                    WEDGE_EDGE_SAMPLES,
                ) else {
                    continue;
                };
                features.push(serde_json::json!({
                    "type": "Feature",
                    "geometry": w.to_geojson(),
                    "properties": { "fips": county.fips, "mission": j + 1, "azimuth_deg": az, "launches": y },
                }));
            }
        }
        serde_json::json!({ "type": "FeatureCollection", "features": features })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeStatus {
    Optimal,
    NodeLimit,
    Infeasible,
    Error,
}

impl fmt::Display for OutcomeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutcomeStatus::Optimal => "optimal",
            OutcomeStatus::NodeLimit => "node_limit",
            OutcomeStatus::Infeasible => "infeasible",
            OutcomeStatus::Error => "error",
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanOutcome {
    pub config: Configuration,
    pub candidates: usize,
    pub excluded: Vec<String>,
    pub sites: usize,
    pub status: OutcomeStatus,
    pub error: Option<String>,
    pub solution: Option<PlanSolution>,
    pub rollup: Option<RegionalRollup>,
    #[serde(skip)]
    pub bundle: Option<Arc<CostBundle>>,
}

/// Percentage of each mission type's launches per region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionalRollup {
    pub missions: Vec<MissionShares>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionShares {
    /// 1-based mission type.
    pub mission: usize,
    pub launches: u32,
    pub percent: BTreeMap<Region, f64>,
}

pub fn regional_rollup(sol: &PlanSolution, map: &BTreeMap<String, Region>) -> Result<RegionalRollup, ScenarioError> {
    let m = sol.allocation.first().map_or(0, |a| a.launches.len());
    let mut per = vec![BTreeMap::<Region, u32>::new(); m];
    for a in &sol.allocation {
        let region = *map.get(&a.fips).ok_or_else(|| ScenarioError::Unmapped(a.fips.clone()))?;
        for (j, &y) in a.launches.iter().enumerate() {
            *per[j].entry(region).or_default() += y;
        }
    }
    let missions = per
        .into_iter()
        .enumerate()
        .map(|(j, counts)| {
            let total: u32 = counts.values().sum();
            let percent = Region::ALL
                .iter()
                .map(|r| {
                    let c = counts.get(r).copied().unwrap_or(0);
                    let p = if total == 0 { 0.0 } else { 100.0 * f64::from(c) / f64::from(total) };
                    (*r, p)
                })
                .collect();
            MissionShares {
                mission: j + 1,
                launches: total,
                percent,
            }
        })
        .collect();
    Ok(RegionalRollup { missions })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub demand: DemandPlan,
    pub rows: Vec<PlanOutcome>,
}

/// Plans every configuration. Scans and corridors are computed once per
/// distinct key before the solves, which then run in parallel and are
/// collected in grid order. A failed configuration is recorded and the
/// sweep continues.
pub fn run_sweep(pipeline: &Pipeline, grid: &[Configuration]) -> SweepReport {
    let mut keys: Vec<(f64, Traffic)> = Vec::new();
    for c in grid {
        if !keys.iter().any(|&(b, t)| b.to_bits() == c.buffer_deg.to_bits() && t == c.traffic) {
            keys.push((c.buffer_deg, c.traffic));
        }
    }
    for &(b, t) in &keys {
        if let Err(e) = pipeline.corridors(b, t) {
            log::warn!("corridors at {b}°/{t}: {e}");
        }
    }
    let rows: Vec<PlanOutcome> = grid
        .par_iter()
        .map(|c| {
            let o = pipeline.plan(c);
            log::info!("{}: {}", c.id(), o.status);
            o
        })
        .collect();
    SweepReport {
        demand: pipeline.demand.clone(),
        rows,
    }
}

fn fmt_f(v: f64, digits: usize) -> String {
    if v.is_finite() {
        format!("{v:.digits$}")
    } else {
        String::new()
    }
}

pub const SWEEP_CSV_HEADER: &str = "config,buffer_deg,traffic,scenario,status,candidates,sites,objective,\
transport_norm,operation_norm,launch_norm,reroute_norm,commute_minutes,operation_musd,reroute_musd,\
dollar_total_musd,launch_dv_km_s,nodes,gap,selected";

impl SweepReport {
    /// One row per configuration. Dollar columns are in millions of USD;
    /// Δv stays in km/s.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{SWEEP_CSV_HEADER}");
        for r in &self.rows {
            let c = &r.config;
            let _ = write!(
                s,
                "{},{},{},{},{},{},{},",
                c.id(),
                c.buffer_deg,
                c.traffic,
                c.scenario,
                r.status,
                r.candidates,
                r.sites
            );
            match &r.solution {
                Some(sol) => {
                    let b = &sol.breakdown;
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                        fmt_f(sol.objective, 9),
                        fmt_f(b.transport, 9),
                        fmt_f(b.operation, 9),
                        fmt_f(b.launch, 9),
                        fmt_f(b.reroute, 9),
                        fmt_f(b.transport_minutes, 3),
                        fmt_f(b.operation_usd / 1e6, 6),
                        fmt_f(b.reroute_usd / 1e6, 6),
                        fmt_f(b.dollar_total() / 1e6, 6),
                        fmt_f(b.launch_dv_km_s, 6),
                        sol.stats.nodes,
                        fmt_f(sol.stats.gap, 9),
                        sol.selected_fips.join(";")
                    );
                }
                None => {
                    let _ = writeln!(s, ",,,,,,,,,,,,");
                }
            }
        }
        s
    }

    /// Rollup table: configuration, mission, launches and percent per region.
    pub fn rollup_csv(&self) -> String {
        let mut s = String::from("config,mission,launches,west_pct,gulf_pct,east_pct\n");
        for r in &self.rows {
            let Some(roll) = &r.rollup else { continue };
            for m in &roll.missions {
                let p = |reg| fmt_f(m.percent.get(&reg).copied().unwrap_or(0.0), 3);
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    r.config.id(),
                    m.mission,
                    m.launches,
                    p(Region::West),
                    p(Region::Gulf),
                    p(Region::East)
                );
            }
        }
        s
    }

    /// Writes `sweep.csv`, `regions.csv`, `sweep.json`, and per-configuration
    /// `plans/<id>.json` and `geojson/<id>.geojson` under `dir`.
    pub fn write(&self, pipeline: &Pipeline, dir: &Path) -> Result<(), ScenarioError> {
        let put = |path: PathBuf, body: String| {
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(|source| ScenarioError::Write {
                    path: parent.to_path_buf(),
                    source,
                })?;
            }
            fs::write(&path, body).map_err(|source| ScenarioError::Write { path, source })
        };
        put(dir.join("sweep.csv"), self.to_csv())?;
        put(dir.join("regions.csv"), self.rollup_csv())?;
        put(dir.join("sweep.json"), to_json(self))?;
        for r in &self.rows {
            put(dir.join("plans").join(format!("{}.json", r.config.id())), to_json(r))?;
            put(
                dir.join("geojson").join(format!("{}.geojson", r.config.id())),
                to_json(&pipeline.plan_geojson(r)),
            )?;
        }
        Ok(())
    }
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}
