//! Azimuth feasibility against ground population, and air-traffic exposure
//! of the chosen launch corridors.
//!
//! A county's candidate azimuths are scanned on a fixed step; an azimuth is
//! feasible when the population inside its hazard wedge does not exceed the
//! threshold. The wedge reaches out to the farthest corner of the population
//! grid (capped), and since no cells exist outside the grid the sum is
//! implicitly truncated at the grid boundary.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::astro::{insertion_cost, EarthConstants, InsertionResult, LaunchGeometry};
use crate::geo::{
    azimuth_gap, build_wedge, contains, dot, great_circle_distance, initial_bearing, wedge_arc_segments, GeoError,
    GeoPoint, GeoPolygon, EARTH_RADIUS_KM,
};
use crate::ingest::{CountyRecord, FlightTrack, GridBounds, PopulationCell, PopulationGrid};
use crate::missions::MissionType;

pub const DEFAULT_BUFFER_DEG: f64 = 10.0;
pub const DEFAULT_AZIMUTH_STEP_DEG: f64 = 1.0;
pub const DEFAULT_POP_THRESHOLD: u64 = 10_000;
pub const DEFAULT_RANGE_CAP_KM: f64 = 2000.0;
pub const DEFAULT_UNIT_REROUTE_USD: f64 = 293.0;
pub const DEFAULT_CLOSURE_HOURS: f64 = 24.0;
/// Wedge side edges are geodesics from the apex, so two samples suffice.
pub const WEDGE_EDGE_SAMPLES: usize = 2;

const BEARING_TOL_DEG: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HazardError {
    #[error("azimuth step {0} deg does not divide 360")]
    Step(f64),
    #[error("azimuth {azimuth} is not feasible for county {fips}")]
    InfeasibleAzimuth { fips: String, azimuth: f64 },
    #[error(transparent)]
    Geo(#[from] GeoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanParams {
    pub buffer_deg: f64,
    pub azimuth_step_deg: f64,
    pub pop_threshold: u64,
    pub range_km_cap: f64,
}

impl Default for ScanParams {
    fn default() -> Self {
        Self {
            buffer_deg: DEFAULT_BUFFER_DEG,
            azimuth_step_deg: DEFAULT_AZIMUTH_STEP_DEG,
            pop_threshold: DEFAULT_POP_THRESHOLD,
            range_km_cap: DEFAULT_RANGE_CAP_KM,
        }
    }
}

impl ScanParams {
    /// Candidate azimuths `0, step, 2 step, ...` below 360.
    pub fn azimuths(&self) -> Result<Vec<f64>, HazardError> {
        let step = self.azimuth_step_deg;
        let n = (360.0 / step).round();
        if !(step > 0.0) || !step.is_finite() || n < 1.0 || (n * step - 360.0).abs() > 1e-9 {
            return Err(HazardError::Step(step));
        }
        Ok((0..n as usize).map(|k| k as f64 * step).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RerouteParams {
    pub unit_cost_usd: f64,
    pub closure_hours: f64,
}

impl Default for RerouteParams {
    fn default() -> Self {
        Self {
            unit_cost_usd: DEFAULT_UNIT_REROUTE_USD,
            closure_hours: DEFAULT_CLOSURE_HOURS,
        }
    }
}

/// How the launch azimuth of a (county, mission) pair is chosen among the
/// feasible ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AzimuthRule {
    /// Smallest Δv₁ + Δv₂; ties go to the smaller azimuth.
    #[default]
    MinDv,
    /// Fewest flights in the wedge; ties broken by Δv, then azimuth.
    MinReroute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibleAzimuthSet {
    pub fips: String,
    pub buffer_deg: f64,
    pub azimuths: Vec<f64>,
}

impl FeasibleAzimuthSet {
    pub fn is_empty(&self) -> bool {
        self.azimuths.is_empty()
    }

    pub fn contains(&self, azimuth: f64) -> bool {
        self.azimuths.iter().any(|&a| azimuth_gap(a, azimuth) < 1e-9)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureReport {
    pub fips: String,
    pub mission: usize,
    pub azimuth: f64,
    pub population_exposed: u64,
    pub flights_per_day: u64,
    pub reroute_cost_usd: f64,
}

/// Azimuth picked for one (county, mission) pair, with its insertion cost
/// and exposure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionCorridor {
    pub insertion: InsertionResult<f64>,
    pub exposure: ExposureReport,
}

/// Wedge range for a county: distance to the farthest grid corner, capped.
pub fn wedge_range_km(centroid: &GeoPoint<f64>, bounds: &GridBounds, cap_km: f64) -> f64 {
    let quarter = std::f64::consts::FRAC_PI_2 * EARTH_RADIUS_KM;
    bounds.farthest_corner_km(centroid).min(cap_km).min(quarter * 0.999).max(1.0)
}

pub fn county_wedge(
    county: &CountyRecord,
    azimuth: f64,
    buffer_deg: f64,
    range_km: f64,
) -> Result<GeoPolygon<f64>, HazardError> {
    Ok(build_wedge(&county.centroid, azimuth, buffer_deg, range_km, WEDGE_EDGE_SAMPLES)?)
}

/// Population of the cells whose centers lie in `wedge`.
pub fn population_in_wedge(wedge: &GeoPolygon<f64>, cells: &[PopulationCell]) -> u64 {
    cells.iter().filter(|c| contains(wedge, &c.center)).map(|c| c.population).sum()
}

/// Number of distinct flights with at least one sample in `wedge`.
pub fn flights_in_wedge(wedge: &GeoPolygon<f64>, tracks: &[FlightTrack]) -> u64 {
    tracks
        .iter()
        .filter(|t| t.samples.iter().any(|(_, p)| contains(wedge, p)))
        .count() as u64
}

/// flights × closure_hours / 24 × unit cost.
pub fn reroute_cost_usd(flights: u64, params: &RerouteParams) -> f64 {
    flights as f64 * (params.closure_hours / 24.0) * params.unit_cost_usd
}

/// Rerouting cost of launching from `county` along a feasible `azimuth`.
pub fn reroute_cost(
    county: &CountyRecord,
    feasible: &FeasibleAzimuthSet,
    azimuth: f64,
    tracks: &[FlightTrack],
    range_km: f64,
    params: &RerouteParams,
) -> Result<f64, HazardError> {
    if !feasible.contains(azimuth) {
        return Err(HazardError::InfeasibleAzimuth {
            fips: county.fips.clone(),
            azimuth,
        });
    }
    let wedge = county_wedge(county, azimuth, feasible.buffer_deg, range_km)?;
    Ok(reroute_cost_usd(flights_in_wedge(&wedge, tracks), params))
}

/// Points around one launch site in polar form, so that most wedge
/// membership questions reduce to comparing a bearing and a distance.
#[derive(Debug, Clone)]
pub struct Footprint {
    origin: GeoPoint<f64>,
    range_km: f64,
    points: Vec<GeoPoint<f64>>,
    dist: Vec<f64>,
    bearing: Vec<f64>,
    tag: Vec<u64>,
}

impl Footprint {
    /// Keeps only points within `range_km` of `origin`; `tag` is carried
    /// along (population for cells, track index for flight samples).
    pub fn new(origin: GeoPoint<f64>, range_km: f64, items: impl IntoIterator<Item = (GeoPoint<f64>, u64)>) -> Self {
        let o = origin.to_unit();
        let cos_limit = ((range_km + 1.0) / EARTH_RADIUS_KM).min(std::f64::consts::PI).cos();
        let mut fp = Self {
            origin,
            range_km,
            points: Vec::new(),
            dist: Vec::new(),
            bearing: Vec::new(),
            tag: Vec::new(),
        };
        for (p, tag) in items {
            if dot(o, p.to_unit()) < cos_limit {
                continue;
            }
            let d = great_circle_distance(&origin, &p);
            if d > range_km * (1.0 + 1e-9) {
                continue;
            }
            fp.points.push(p);
            fp.dist.push(d);
            fp.bearing.push(initial_bearing(&origin, &p));
            fp.tag.push(tag);
        }
        fp
    }

    pub fn cells(origin: GeoPoint<f64>, range_km: f64, cells: &[PopulationCell]) -> Self {
        Self::new(origin, range_km, cells.iter().map(|c| (c.center, c.population)))
    }

    pub fn flights(origin: GeoPoint<f64>, range_km: f64, tracks: &[FlightTrack]) -> Self {
        Self::new(
            origin,
            range_km,
            tracks
                .iter()
                .enumerate()
                .flat_map(|(k, t)| t.samples.iter().map(move |(_, p)| (*p, k as u64))),
        )
    }

    pub fn range_km(&self) -> f64 {
        self.range_km
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Calls `hit(tag)` for every point inside the wedge about `azimuth`.
    fn for_each_inside(&self, azimuth: f64, buffer_deg: f64, mut hit: impl FnMut(u64)) -> Result<(), HazardError> {
        // Points nearer than the outer arc's chords and strictly between the
        // side geodesics are inside without further work; points beyond the
        // range or outside the bearing fan are outside. The rest go to the
        // exact polygon test.
        let half_step = (buffer_deg / wedge_arc_segments(buffer_deg) as f64).to_radians();
        let r = self.range_km / EARTH_RADIUS_KM;
        let inner = (r.tan() * half_step.cos()).atan() * EARTH_RADIUS_KM * (1.0 - 1e-9);
        let mut wedge = None;
        for k in 0..self.points.len() {
            let d = self.dist[k];
            let inside = if d < 1e-9 {
                true
            } else {
                let gap = azimuth_gap(self.bearing[k], azimuth);
                if gap > buffer_deg + BEARING_TOL_DEG {
                    false
                } else if gap < buffer_deg - BEARING_TOL_DEG && d < inner {
                    true
                } else {
                    if wedge.is_none() {
                        wedge = Some(build_wedge(
                            &self.origin,
                            azimuth,
                            buffer_deg,
                            self.range_km,
                            WEDGE_EDGE_SAMPLES,
                        )?);
                    }
                    contains(wedge.as_ref().expect("built above"), &self.points[k])
                }
            };
            if inside {
                hit(self.tag[k]);
            }
        }
        Ok(())
    }

    /// Sum of tags inside the wedge (population for a cell footprint).
    pub fn tag_sum(&self, azimuth: f64, buffer_deg: f64) -> Result<u64, HazardError> {
        let mut total = 0u64;
        self.for_each_inside(azimuth, buffer_deg, |t| total += t)?;
        Ok(total)
    }

    /// Number of distinct tags inside the wedge (flights for a track footprint).
    pub fn distinct_tags(&self, azimuth: f64, buffer_deg: f64) -> Result<u64, HazardError> {
        let mut seen = std::collections::HashSet::new();
        self.for_each_inside(azimuth, buffer_deg, |t| {
            seen.insert(t);
        })?;
        Ok(seen.len() as u64)
    }
}

/// Population exposed at every candidate azimuth, in scan order.
pub fn scan_exposure(footprint: &Footprint, azimuths: &[f64], buffer_deg: f64) -> Result<Vec<u64>, HazardError> {
    azimuths.iter().map(|&az| footprint.tag_sum(az, buffer_deg)).collect()
}

pub fn scan_feasible_azimuths(
    county: &CountyRecord,
    grid: &PopulationGrid,
    params: &ScanParams,
) -> Result<FeasibleAzimuthSet, HazardError> {
    let azimuths = params.azimuths()?;
    let range = wedge_range_km(&county.centroid, &grid.bounds, params.range_km_cap);
    let fp = Footprint::cells(county.centroid, range, &grid.cells);
    let exposure = scan_exposure(&fp, &azimuths, params.buffer_deg)?;
    Ok(FeasibleAzimuthSet {
        fips: county.fips.clone(),
        buffer_deg: params.buffer_deg,
        azimuths: azimuths
            .into_iter()
            .zip(exposure)
            .filter(|&(_, pop)| pop <= params.pop_threshold)
            .map(|(az, _)| az)
            .collect(),
    })
}

/// Chooses the corridor for each mission from a county's feasible azimuths.
/// Entries are `None` when no feasible azimuth reaches the mission orbit.
#[allow(clippy::too_many_arguments)]
pub fn mission_corridors(
    county: &CountyRecord,
    feasible: &FeasibleAzimuthSet,
    missions: &[MissionType<f64>],
    cells: &Footprint,
    flights: &Footprint,
    rule: AzimuthRule,
    reroute: &RerouteParams,
    consts: &EarthConstants<f64>,
) -> Result<Vec<Option<MissionCorridor>>, HazardError> {
    let lat = county.centroid.lat();
    let mut flight_cache: Vec<Option<u64>> = vec![None; feasible.azimuths.len()];
    let mut flights_at = |k: usize| -> Result<u64, HazardError> {
        if let Some(v) = flight_cache[k] {
            return Ok(v);
        }
        let v = flights.distinct_tags(feasible.azimuths[k], feasible.buffer_deg)?;
        flight_cache[k] = Some(v);
        Ok(v)
    };
    let mut out = Vec::with_capacity(missions.len());
    for mission in missions {
        let orbit = mission.orbit();
        let mut best: Option<(usize, InsertionResult<f64>, u64)> = None;
        for (k, &az) in feasible.azimuths.iter().enumerate() {
            let Ok(geom) = LaunchGeometry::new(lat, az) else {
                continue;
            };
            let Ok(cost) = insertion_cost(&geom, &orbit, consts) else {
                continue;
            };
            let better = match (&best, rule) {
                (None, _) => true,
                (Some((_, b, _)), AzimuthRule::MinDv) => cost.total < b.total,
                (Some((_, b, bf)), AzimuthRule::MinReroute) => {
                    let f = flights_at(k)?;
                    f < *bf || (f == *bf && cost.total < b.total)
                }
            };
            if better {
                let f = if rule == AzimuthRule::MinReroute { flights_at(k)? } else { 0 };
                best = Some((k, cost, f));
            }
        }
        let corridor = match best {
            None => None,
            Some((k, insertion, _)) => {
                let az = feasible.azimuths[k];
                let flights_per_day = flights_at(k)?;
                Some(MissionCorridor {
                    insertion,
                    exposure: ExposureReport {
                        fips: county.fips.clone(),
                        mission: mission.index,
                        azimuth: az,
                        population_exposed: cells.tag_sum(az, feasible.buffer_deg)?,
                        flights_per_day,
                        reroute_cost_usd: reroute_cost_usd(flights_per_day, reroute),
                    },
                })
            }
        };
        out.push(corridor);
    }
    Ok(out)
}
