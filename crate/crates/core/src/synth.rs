//! Deterministic synthetic datasets: the bundled fixture tree and small
//! random planning instances for solver cross-checks.
//!
//! The fixture geography is a coarse hand-drawn outline of the continental
//! US with Mexico, Canada and Cuba. Coastal land cells are sparsely
//! populated and interior cells densely, so seaward launch corridors are the
//! feasible ones.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::geo::{great_circle_distance, initial_bearing, project_along_azimuth, GeoPoint};
use crate::ingest::Region;
use crate::missions::{apportion_demand, TABLE_ONE};
use crate::plan::model::{CostBundle, Formulation, ModelParams, NormRange};

pub const FIXTURE_SEED: u64 = 20_230_615;
pub const GRID_SIZE: usize = 50;
pub const GRID_CELL_DEG: f64 = 1.2;
pub const GRID_MIN_LAT: f64 = 14.0;
pub const GRID_MIN_LON: f64 = -126.0;
pub const LAUNCH_COUNT: usize = 1000;
pub const FIRST_LAUNCH_YEAR: i32 = 1989;
pub const LAST_LAUNCH_YEAR: i32 = 2023;
pub const LOW_TRAFFIC_TRACKS: usize = 10_000;
pub const HIGH_TRAFFIC_TRACKS: usize = 12_600;
/// Launch scatter around each tabulated centroid: (km, degrees).
pub const LAUNCH_SIGMA: (f64, f64) = (20.0, 1.0);

/// (fips, name, state, lat, lon, region)
pub const FIXTURE_COUNTIES: [(&str, &str, &str, f64, f64, Region); 30] = [
    ("06073", "San Diego", "CA", 32.90, -117.10, Region::West),
    ("06111", "Ventura", "CA", 34.30, -119.10, Region::West),
    ("06083", "Santa Barbara", "CA", 34.70, -120.45, Region::West),
    ("06079", "San Luis Obispo", "CA", 35.40, -120.70, Region::West),
    ("06053", "Monterey", "CA", 36.30, -121.40, Region::West),
    ("06023", "Humboldt", "CA", 40.70, -123.90, Region::West),
    ("41011", "Coos", "OR", 43.20, -124.10, Region::West),
    ("41041", "Lincoln", "OR", 44.65, -123.90, Region::West),
    ("53027", "Grays Harbor", "WA", 47.00, -123.80, Region::West),
    ("48061", "Cameron", "TX", 26.10, -97.50, Region::Gulf),
    ("48355", "Nueces", "TX", 27.75, -97.50, Region::Gulf),
    ("48321", "Matagorda", "TX", 28.80, -95.95, Region::Gulf),
    ("48167", "Galveston", "TX", 29.35, -94.90, Region::Gulf),
    ("22023", "Cameron Parish", "LA", 29.85, -93.10, Region::Gulf),
    ("22109", "Terrebonne", "LA", 29.40, -90.80, Region::Gulf),
    ("28047", "Harrison", "MS", 30.45, -89.10, Region::Gulf),
    ("12033", "Escambia", "FL", 30.60, -87.30, Region::Gulf),
    ("12005", "Bay", "FL", 30.20, -85.65, Region::Gulf),
    ("12103", "Pinellas", "FL", 27.90, -82.75, Region::Gulf),
    ("12009", "Brevard", "FL", 28.30, -80.70, Region::East),
    ("12109", "St. Johns", "FL", 29.90, -81.40, Region::East),
    ("13127", "Glynn", "GA", 31.20, -81.50, Region::East),
    ("45019", "Charleston", "SC", 32.80, -79.95, Region::East),
    ("37129", "New Hanover", "NC", 34.20, -77.90, Region::East),
    ("37055", "Dare", "NC", 35.70, -75.75, Region::East),
    ("51001", "Accomack", "VA", 37.75, -75.60, Region::East),
    ("34029", "Ocean", "NJ", 39.85, -74.25, Region::East),
    ("36103", "Suffolk", "NY", 40.85, -72.85, Region::East),
    ("25001", "Barnstable", "MA", 41.70, -70.30, Region::East),
    ("23013", "Knox", "ME", 44.10, -69.10, Region::East),
];

/// Mainland outline as (lat, lon), counter-clockwise from the north-west
/// corner of the grid.
const MAINLAND: [(f64, f64); 75] = [
    (75.0, -127.0),
    (50.0, -127.0),
    (48.4, -124.7),
    (46.2, -124.0),
    (43.0, -124.5),
    (40.4, -124.4),
    (38.0, -123.0),
    (36.6, -121.9),
    (34.5, -120.6),
    (34.0, -118.5),
    (32.5, -117.1),
    (30.0, -115.8),
    (27.0, -114.0),
    (23.0, -110.0),
    (20.0, -105.5),
    (16.0, -98.0),
    (14.0, -92.5),
    (13.0, -91.0),
    (13.0, -88.0),
    (15.8, -88.3),
    (18.5, -87.7),
    (21.5, -87.0),
    (21.3, -90.3),
    (19.0, -91.0),
    (18.5, -94.5),
    (21.0, -97.3),
    (25.9, -97.2),
    (27.8, -97.1),
    (28.7, -95.8),
    (29.5, -94.5),
    (29.7, -93.3),
    (29.3, -91.0),
    (29.0, -89.2),
    (30.3, -88.5),
    (30.3, -86.5),
    (29.8, -84.9),
    (29.9, -84.0),
    (28.6, -82.7),
    (27.5, -82.7),
    (26.0, -81.7),
    (25.1, -81.0),
    (25.3, -80.3),
    (26.8, -80.0),
    (28.5, -80.5),
    (30.5, -81.4),
    (32.0, -80.8),
    (33.8, -78.5),
    (34.7, -76.5),
    (35.3, -75.5),
    (36.9, -75.9),
    (38.5, -75.0),
    (39.5, -74.2),
    (40.5, -73.9),
    (40.8, -72.0),
    (41.3, -71.8),
    (41.5, -70.0),
    (42.5, -70.8),
    (43.8, -69.8),
    (44.5, -67.5),
    (45.0, -66.5),
    (45.5, -64.0),
    (47.0, -64.0),
    (48.5, -64.2),
    (49.2, -66.5),
    (50.0, -64.0),
    (52.0, -60.0),
    (55.0, -60.0),
    (58.0, -62.0),
    (60.0, -64.0),
    (62.0, -64.0),
    (64.0, -64.0),
    (66.0, -62.0),
    (70.0, -62.0),
    (75.0, -62.0),
    (75.0, -127.0),
];

const CUBA: [(f64, f64); 8] = [
    (21.8, -84.9),
    (22.7, -83.0),
    (23.1, -82.0),
    (23.2, -80.0),
    (22.2, -77.5),
    (21.0, -75.5),
    (19.9, -74.2),
    (20.3, -77.7),
];

/// (name, lat, lon, traffic weight)
const AIRPORTS: [(&str, f64, f64, f64); 34] = [
    ("SEA", 47.45, -122.31, 5.0),
    ("PDX", 45.59, -122.60, 3.0),
    ("SFO", 37.62, -122.38, 6.0),
    ("LAX", 33.94, -118.41, 8.0),
    ("SAN", 32.73, -117.19, 3.0),
    ("PHX", 33.43, -112.01, 5.0),
    ("LAS", 36.08, -115.15, 5.0),
    ("SLC", 40.79, -111.98, 3.0),
    ("DEN", 39.86, -104.67, 7.0),
    ("DFW", 32.90, -97.04, 8.0),
    ("IAH", 29.98, -95.34, 6.0),
    ("MSY", 29.99, -90.26, 2.0),
    ("MSP", 44.88, -93.22, 4.0),
    ("ORD", 41.98, -87.90, 9.0),
    ("DTW", 42.21, -83.35, 4.0),
    ("ATL", 33.64, -84.43, 10.0),
    ("MCO", 28.43, -81.31, 5.0),
    ("TPA", 27.98, -82.53, 3.0),
    ("MIA", 25.79, -80.29, 6.0),
    ("CLT", 35.21, -80.94, 5.0),
    ("IAD", 38.95, -77.46, 4.0),
    ("PHL", 39.87, -75.24, 4.0),
    ("JFK", 40.64, -73.78, 8.0),
    ("BOS", 42.36, -71.01, 5.0),
    ("YYZ", 43.68, -79.63, 4.0),
    ("YUL", 45.47, -73.74, 2.0),
    ("YVR", 49.19, -123.18, 3.0),
    ("MEX", 19.44, -99.07, 5.0),
    ("CUN", 21.04, -86.87, 3.0),
    ("HAV", 22.99, -82.41, 1.0),
    ("SJU", 18.44, -66.00, 2.0),
    ("NAS", 25.04, -77.47, 1.0),
    // Oceanic gateways: flights leaving the region.
    ("ATL_OCEAN", 45.00, -55.00, 6.0),
    ("PAC_OCEAN", 30.00, -140.00, 4.0),
];

fn planar_contains(ring: &[(f64, f64)], lat: f64, lon: f64) -> bool {
    let mut inside = false;
    let n = ring.len();
    for k in 0..n {
        let (ya, xa) = ring[k];
        let (yb, xb) = ring[(k + 1) % n];
        if (ya > lat) != (yb > lat) {
            let x = xa + (lat - ya) / (yb - ya) * (xb - xa);
            if lon < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn cuba(lat: f64, lon: f64) -> bool {
    planar_contains(&CUBA, lat, lon)
}

fn land(lat: f64, lon: f64) -> bool {
    planar_contains(&MAINLAND, lat, lon) || cuba(lat, lon)
}

fn cell_center(row: usize, col: usize) -> (f64, f64) {
    (
        GRID_MIN_LAT + (row as f64 + 0.5) * GRID_CELL_DEG,
        GRID_MIN_LON + (col as f64 + 0.5) * GRID_CELL_DEG,
    )
}

/// Population per cell, row-major from the south-west corner.
pub fn fixture_population() -> Vec<((f64, f64), u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(FIXTURE_SEED ^ 0x9090);
    let is_land: Vec<Vec<bool>> = (0..GRID_SIZE)
        .map(|r| {
            (0..GRID_SIZE)
                .map(|c| {
                    let (lat, lon) = cell_center(r, c);
                    land(lat, lon)
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(GRID_SIZE * GRID_SIZE);
    for r in 0..GRID_SIZE {
        for c in 0..GRID_SIZE {
            let (lat, lon) = cell_center(r, c);
            let pop = if !is_land[r][c] {
                0
            } else if cuba(lat, lon) {
                rng.random_range(60_000..200_000)
            } else {
                let coastal = (r.saturating_sub(1)..=(r + 1).min(GRID_SIZE - 1))
                    .any(|rr| (c.saturating_sub(1)..=(c + 1).min(GRID_SIZE - 1)).any(|cc| !is_land[rr][cc]));
                if coastal {
                    rng.random_range(100..1_500)
                } else if lat > 55.0 {
                    rng.random_range(0..3_000)
                } else {
                    rng.random_range(15_000..250_000)
                }
            };
            out.push(((lat, lon), pop));
        }
    }
    out
}

pub fn population_csv() -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# cell_size_deg = {GRID_CELL_DEG}");
    let _ = writeln!(s, "lat,lon,population");
    for ((lat, lon), pop) in fixture_population() {
        let _ = writeln!(s, "{lat:.2},{lon:.2},{pop}");
    }
    s
}

pub fn counties_csv() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(FIXTURE_SEED ^ 0xc0);
    let mut s = String::from("fips,name,state,lat,lon,mean_commute_minutes,median_house_value_usd\n");
    for (fips, name, state, lat, lon, _) in FIXTURE_COUNTIES {
        let commute: f64 = rng.random_range(180..360) as f64 / 10.0;
        let house = rng.random_range(120..950) * 1000;
        let _ = writeln!(s, "{fips},{name},{state},{lat:.2},{lon:.2},{commute:.1},{house}");
    }
    s
}

pub fn regions_csv() -> String {
    let mut s = String::from("fips,region\n");
    for (fips, _, _, _, _, region) in FIXTURE_COUNTIES {
        let _ = writeln!(s, "{fips},{region}");
    }
    s
}

/// Synthetic launch points around the tabulated centroids, proportional to
/// the tabulated weights.
pub fn launch_points(count: usize, seed: u64) -> Vec<(usize, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = TABLE_ONE.iter().map(|t| t.2).collect();
    let counts = apportion_demand(count as u32, &weights).expect("tabulated weights sum to one");
    let mut labels: Vec<usize> = counts
        .iter()
        .enumerate()
        .flat_map(|(j, &c)| std::iter::repeat_n(j, c as usize))
        .collect();
    labels.shuffle(&mut rng);
    let da = Normal::new(0.0, LAUNCH_SIGMA.0).expect("sigma");
    let di = Normal::new(0.0, LAUNCH_SIGMA.1).expect("sigma");
    labels
        .into_iter()
        .map(|j| {
            let (a, inc, _, _) = TABLE_ONE[j];
            (j, a + da.sample(&mut rng), (inc + di.sample(&mut rng)).clamp(0.0, 180.0))
        })
        .collect()
}

/// Yearly launch counts rising linearly from 1989 to 2023, summing to
/// `LAUNCH_COUNT`.
pub fn launch_year_counts() -> Vec<(i32, u32)> {
    let years: Vec<i32> = (FIRST_LAUNCH_YEAR..=LAST_LAUNCH_YEAR).collect();
    let raw: Vec<f64> = (0..years.len()).map(|k| 10.0 + k as f64).collect();
    let total: f64 = raw.iter().sum();
    let w: Vec<f64> = raw.iter().map(|r| r / total).collect();
    let counts = apportion_demand(LAUNCH_COUNT as u32, &w).expect("weights sum to one");
    years.into_iter().zip(counts).collect()
}

pub fn launches_csv() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(FIXTURE_SEED ^ 0x1a);
    let points = launch_points(LAUNCH_COUNT, FIXTURE_SEED);
    let mut dates = Vec::with_capacity(LAUNCH_COUNT);
    for (year, n) in launch_year_counts() {
        let days = if NaiveDate::from_ymd_opt(year, 12, 31).expect("date").ordinal() == 366 { 366 } else { 365 };
        for _ in 0..n {
            let d = rng.random_range(1..=days);
            dates.push(NaiveDate::from_yo_opt(year, d).expect("ordinal"));
        }
    }
    dates.sort();
    let mut s = String::from("date,semi_major_axis_km,inclination_deg\n");
    for (date, (_, a, inc)) in dates.iter().zip(points) {
        let _ = writeln!(s, "{date},{a:.2},{inc:.3}");
    }
    s
}

/// One synthetic day of flights: great-circle tracks between weighted
/// airport pairs, sampled every ~200 km. A larger day repeats the routes of
/// a smaller one and adds more, so high traffic contains low traffic.
pub fn flights_csv(n: usize, day: NaiveDate) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(FIXTURE_SEED ^ 0xf1);
    let total_w: f64 = AIRPORTS.iter().map(|a| a.3).sum();
    let pick = |rng: &mut ChaCha8Rng| {
        let mut u = rng.random_range(0.0..total_w);
        for (k, a) in AIRPORTS.iter().enumerate() {
            if u < a.3 {
                return k;
            }
            u -= a.3;
        }
        AIRPORTS.len() - 1
    };
    let start = day.and_hms_opt(0, 0, 0).expect("midnight").and_utc().timestamp();
    let mut s = String::from("flight_id,timestamp_utc,lat,lon\n");
    let mut made = 0;
    while made < n {
        let (o, d) = (pick(&mut rng), pick(&mut rng));
        let dep = rng.random_range(0..86_400 - 3_600);
        if o == d || (AIRPORTS[o].0.ends_with("OCEAN") && AIRPORTS[d].0.ends_with("OCEAN")) {
            continue;
        }
        let a = GeoPoint::new(AIRPORTS[o].1, AIRPORTS[o].2).expect("airport");
        let b = GeoPoint::new(AIRPORTS[d].1, AIRPORTS[d].2).expect("airport");
        let dist = great_circle_distance(&a, &b);
        if dist < 300.0 {
            continue;
        }
        let legs = (dist / 200.0).ceil() as usize;
        let bearing = initial_bearing(&a, &b);
        let id = format!("F{made:05}");
        for k in 0..=legs {
            let along = dist * k as f64 / legs as f64;
            let p = if k == legs { b } else { project_along_azimuth(&a, bearing, along) };
            // 800 km/h cruise.
            let t = start + dep + (along / 800.0 * 3600.0).round() as i64;
            let _ = writeln!(s, "{id},{t},{:.3},{:.3}", p.lat(), p.lon());
        }
        made += 1;
    }
    s
}

pub const LOW_TRAFFIC_DAY: (i32, u32, u32) = (2023, 2, 7);
pub const HIGH_TRAFFIC_DAY: (i32, u32, u32) = (2023, 7, 14);

pub const FIXTURE_CONFIG: &str = r#"# Synthetic fixture run. Paths are relative to this file.
[data]
counties = "counties.csv"
popgrid = "popgrid.csv"
launches = "launches.csv"
regions = "regions.csv"
flights_low = "flights_low.csv"
flights_high = "flights_high.csv"
flight_spacing_km = 10.0

[forecast]
alpha = 0.6
beta = 0.05
target_year = 2030
default_total = 273
from_history = false

[cluster]
m = 5
seed = 42
standardize = false

[missions]
source = "table1"

[hazard]
buffer_deg = 10.0
azimuth_step_deg = 1.0
pop_threshold = 10000
range_km_cap = 2000.0
azimuth_rule = "min_dv"

[reroute]
unit_cost_usd = 293.0
closure_hours = 24.0

[plan]
capacity_per_year = 52
min_separation_miles = 300.0
node_limit = 200000
use_conflict_reformulation = false
normalize = true
scenario = "S1"
traffic = "low"

[sweep]
buffers_deg = [5.0, 7.5, 10.0]
traffic = ["low", "high"]
scenarios = ["S1", "S2", "S3", "S4"]
"#;

/// Writes the fixture tree into `dir`.
pub fn write_fixtures(dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let day = |(y, m, d): (i32, u32, u32)| NaiveDate::from_ymd_opt(y, m, d).expect("date");
    fs::write(dir.join("counties.csv"), counties_csv())?;
    fs::write(dir.join("popgrid.csv"), population_csv())?;
    fs::write(dir.join("launches.csv"), launches_csv())?;
    fs::write(dir.join("regions.csv"), regions_csv())?;
    fs::write(dir.join("flights_low.csv"), flights_csv(LOW_TRAFFIC_TRACKS, day(LOW_TRAFFIC_DAY)))?;
    fs::write(dir.join("flights_high.csv"), flights_csv(HIGH_TRAFFIC_TRACKS, day(HIGH_TRAFFIC_DAY)))?;
    fs::write(dir.join("spaceport.toml"), FIXTURE_CONFIG)?;
    Ok(())
}

/// A small random planning instance for solver cross-checks.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub bundle: CostBundle,
    pub demands: Vec<u32>,
    pub params: ModelParams,
}

/// `n` counties in a box over the continental US with random normalized
/// costs, a random feasibility mask (each entry allowed with probability
/// `p_allowed`), `m` missions and `k` sites, and a random separation in
/// [0, 600] miles.
pub fn random_instance(seed: u64, n: usize, m: usize, k: usize, p_allowed: f64) -> RandomInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centroids: Vec<GeoPoint<f64>> = (0..n)
        .map(|_| GeoPoint::new(rng.random_range(25.0..48.0), rng.random_range(-124.0..-68.0)).expect("box"))
        .collect();
    let transport: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let operation: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let mut launch_raw = vec![vec![None; m]; n];
    let mut reroute_raw = vec![vec![None; m]; n];
    let mut launch = vec![vec![0.0; m]; n];
    let mut reroute = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in 0..m {
            let l = rng.random_range(0.0..1.0);
            let r = rng.random_range(0.0..1.0);
            if rng.random_bool(p_allowed) {
                launch_raw[i][j] = Some(l);
                reroute_raw[i][j] = Some(r);
                launch[i][j] = l;
                reroute[i][j] = r;
            } else {
                launch[i][j] = 2.0;
                reroute[i][j] = 2.0;
            }
        }
    }
    let demands: Vec<u32> = (0..m).map(|_| rng.random_range(1..=8)).collect();
    let total: u32 = demands.iter().sum();
    let capacity = total.div_ceil(k as u32) + rng.random_range(0..=4);
    let separation_miles = rng.random_range(0.0..600.0);
    RandomInstance {
        bundle: CostBundle {
            fips: (0..n).map(|i| format!("{:05}", 90_001 + i)).collect(),
            centroids,
            transport_raw: transport.clone(),
            operation_raw: operation.clone(),
            launch_raw,
            reroute_raw,
            azimuth: vec![vec![None; m]; n],
            transport,
            operation,
            launch,
            reroute,
            ranges: [NormRange { min: 0.0, max: 1.0 }; 4],
            normalized: true,
        },
        demands,
        params: ModelParams {
            sites: k,
            capacity,
            separation_miles,
            big_m: None,
            formulation: Formulation::BigM,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outline_classifies_known_places() {
        assert!(land(39.0, -98.0));
        assert!(land(22.5, -80.0));
        assert!(!land(25.0, -90.0));
        assert!(!land(35.0, -130.0 + 5.0));
        assert!(!land(33.0, -70.0));
    }

    #[test]
    fn year_counts_sum_to_total() {
        let c = launch_year_counts();
        assert_eq!(c.len(), 35);
        assert_eq!(c.iter().map(|&(_, n)| n as usize).sum::<usize>(), LAUNCH_COUNT);
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(counties_csv(), counties_csv());
        let day = NaiveDate::from_ymd_opt(2023, 1, 1).unwrap();
        let small = flights_csv(20, day);
        let big = flights_csv(30, day);
        assert!(big.starts_with(&small));
    }
}
