//! CSV loaders for the four planning datasets plus the region map.
//!
//! Every loader checks the header against its schema and rejects malformed
//! rows with the line number and field name; nothing is silently repaired.
//!
//! | file          | columns                                                           |
//! |---------------|-------------------------------------------------------------------|
//! | counties.csv  | `fips,name,state,lat,lon,mean_commute_minutes,median_house_value_usd` |
//! | popgrid.csv   | `# cell_size_deg = <deg>` sidecar line, then `lat,lon,population`  |
//! | launches.csv  | `date,semi_major_axis_km,inclination_deg`                          |
//! | flights.csv   | `flight_id,timestamp_utc,lat,lon` (one sample per row)             |
//! | regions.csv   | `fips,region` with region one of `West`, `Gulf`, `East`            |

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Read;
use std::path::Path;

use chrono::{DateTime, Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geo::{great_circle_distance, GeoPoint, EARTH_RADIUS_KM};

pub const COUNTY_COLUMNS: [&str; 7] = [
    "fips",
    "name",
    "state",
    "lat",
    "lon",
    "mean_commute_minutes",
    "median_house_value_usd",
];
pub const POPGRID_COLUMNS: [&str; 3] = ["lat", "lon", "population"];
pub const LAUNCH_COLUMNS: [&str; 3] = ["date", "semi_major_axis_km", "inclination_deg"];
pub const FLIGHT_COLUMNS: [&str; 4] = ["flight_id", "timestamp_utc", "lat", "lon"];
pub const REGION_COLUMNS: [&str; 2] = ["fips", "region"];

/// Key of the population grid sidecar line.
pub const CELL_SIZE_KEY: &str = "cell_size_deg";
pub const DEFAULT_FLIGHT_SPACING_KM: f64 = 10.0;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{source_name}: {error}")]
    Io {
        source_name: String,
        #[source]
        error: std::io::Error,
    },
    #[error("{source_name}: {error}")]
    Csv {
        source_name: String,
        #[source]
        error: csv::Error,
    },
    #[error("{source_name}: header column {index} is {found:?}, expected {expected:?}")]
    Header {
        source_name: String,
        index: usize,
        expected: String,
        found: String,
    },
    #[error("{source_name}: line {line}, field `{field}`: {message}")]
    Field {
        source_name: String,
        line: u64,
        field: String,
        message: String,
    },
    #[error("{source_name}: line {line}: duplicate fips {fips}")]
    Duplicate {
        source_name: String,
        line: u64,
        fips: String,
    },
    #[error("{source_name}: missing `# {CELL_SIZE_KEY} = <degrees>` sidecar line")]
    MissingCellSize { source_name: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountyRecord {
    pub fips: String,
    pub name: String,
    pub state: String,
    pub centroid: GeoPoint<f64>,
    pub mean_commute_minutes: f64,
    pub median_house_value_usd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationCell {
    pub center: GeoPoint<f64>,
    pub population: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridBounds {
    pub min_lat: f64,
    pub max_lat: f64,
    pub min_lon: f64,
    pub max_lon: f64,
}

impl GridBounds {
    pub fn corners(&self) -> [GeoPoint<f64>; 4] {
        let p = |lat: f64, lon: f64| {
            GeoPoint::new(lat.clamp(-90.0, 90.0), lon.clamp(-180.0, 180.0)).expect("clamped corner")
        };
        [
            p(self.min_lat, self.min_lon),
            p(self.min_lat, self.max_lon),
            p(self.max_lat, self.min_lon),
            p(self.max_lat, self.max_lon),
        ]
    }

    /// Great-circle distance from `p` to the farthest grid corner, in km.
    pub fn farthest_corner_km(&self, p: &GeoPoint<f64>) -> f64 {
        self.corners()
            .iter()
            .map(|c| great_circle_distance(p, c))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationGrid {
    pub cells: Vec<PopulationCell>,
    pub bounds: GridBounds,
    pub cell_size_deg: f64,
}

impl PopulationGrid {
    pub fn total_population(&self) -> u64 {
        self.cells.iter().map(|c| c.population).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaunchRecord {
    pub epoch: NaiveDate,
    pub semi_major_axis_km: f64,
    pub inclination_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightTrack {
    pub flight_id: String,
    /// (unix seconds, position), timestamps non-decreasing.
    pub samples: Vec<(i64, GeoPoint<f64>)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Region {
    West,
    Gulf,
    East,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::West, Region::Gulf, Region::East];
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::West => "West",
            Region::Gulf => "Gulf",
            Region::East => "East",
        })
    }
}

/// Hex SHA-256 of a byte slice; used to key cached intermediate results.
pub fn digest_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_digest(path: &Path) -> Result<String, IngestError> {
    let bytes = fs::read(path).map_err(|error| IngestError::Io {
        source_name: path.display().to_string(),
        error,
    })?;
    Ok(digest_hex(&bytes))
}

struct Rows<'a> {
    name: &'a str,
    columns: &'static [&'static str],
}

impl Rows<'_> {
    fn field_err(&self, line: u64, field: &str, message: impl Into<String>) -> IngestError {
        IngestError::Field {
            source_name: self.name.to_string(),
            line,
            field: field.to_string(),
            message: message.into(),
        }
    }

    fn read<R: Read>(&self, reader: R) -> Result<Vec<(u64, csv::StringRecord)>, IngestError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let csv_err = |error| IngestError::Csv {
            source_name: self.name.to_string(),
            error,
        };
        let headers = rdr.headers().map_err(csv_err)?.clone();
        for (index, expected) in self.columns.iter().enumerate() {
            let found = headers.get(index).unwrap_or("");
            if found != *expected {
                return Err(IngestError::Header {
                    source_name: self.name.to_string(),
                    index,
                    expected: expected.to_string(),
                    found: found.to_string(),
                });
            }
        }
        if let Some(extra) = headers.get(self.columns.len()) {
            return Err(IngestError::Header {
                source_name: self.name.to_string(),
                index: self.columns.len(),
                expected: String::new(),
                found: extra.to_string(),
            });
        }
        let mut out = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let line = rec.position().map_or(0, |p| p.line());
            out.push((line, rec));
        }
        Ok(out)
    }

    fn text<'r>(&self, line: u64, rec: &'r csv::StringRecord, col: usize) -> Result<&'r str, IngestError> {
        let v = rec.get(col).unwrap_or("");
        if v.is_empty() {
            return Err(self.field_err(line, self.columns[col], "empty value"));
        }
        Ok(v)
    }

    fn real(&self, line: u64, rec: &csv::StringRecord, col: usize) -> Result<f64, IngestError> {
        let raw = self.text(line, rec, col)?;
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.field_err(line, self.columns[col], format!("{raw:?} is not a finite number"))),
        }
    }

    fn non_negative(&self, line: u64, rec: &csv::StringRecord, col: usize) -> Result<f64, IngestError> {
        let v = self.real(line, rec, col)?;
        if v < 0.0 {
            return Err(self.field_err(line, self.columns[col], format!("{v} is negative")));
        }
        Ok(v)
    }

    fn point(&self, line: u64, rec: &csv::StringRecord, lat_col: usize, lon_col: usize) -> Result<GeoPoint<f64>, IngestError> {
        let lat = self.real(line, rec, lat_col)?;
        let lon = self.real(line, rec, lon_col)?;
        if !(-90.0..=90.0).contains(&lat) {
            return Err(self.field_err(line, self.columns[lat_col], format!("{lat} outside [-90, 90]")));
        }
        GeoPoint::new(lat, lon).map_err(|e| self.field_err(line, self.columns[lon_col], e.to_string()))
    }
}

fn open(path: &Path) -> Result<fs::File, IngestError> {
    fs::File::open(path).map_err(|error| IngestError::Io {
        source_name: path.display().to_string(),
        error,
    })
}

pub fn load_counties(path: &Path) -> Result<Vec<CountyRecord>, IngestError> {
    read_counties(open(path)?, &path.display().to_string())
}

pub fn read_counties<R: Read>(reader: R, source_name: &str) -> Result<Vec<CountyRecord>, IngestError> {
    let rows = Rows {
        name: source_name,
        columns: &COUNTY_COLUMNS,
    };
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, rec) in rows.read(reader)? {
        let fips = rows.text(line, &rec, 0)?.to_string();
        if fips.len() != 5 || !fips.bytes().all(|b| b.is_ascii_alphanumeric()) {
            return Err(rows.field_err(line, "fips", format!("{fips:?} is not a 5-character identifier")));
        }
        let name = rows.text(line, &rec, 1)?.to_string();
        let state = rows.text(line, &rec, 2)?.to_string();
        if state.len() != 2 {
            return Err(rows.field_err(line, "state", format!("{state:?} is not a 2-character code")));
        }
        let centroid = rows.point(line, &rec, 3, 4)?;
        let mean_commute_minutes = rows.non_negative(line, &rec, 5)?;
        let median_house_value_usd = rows.non_negative(line, &rec, 6)?;
        if !seen.insert(fips.clone()) {
            return Err(IngestError::Duplicate {
                source_name: source_name.to_string(),
                line,
                fips,
            });
        }
        out.push(CountyRecord {
            fips,
            name,
            state,
            centroid,
            mean_commute_minutes,
            median_house_value_usd,
        });
    }
    Ok(out)
}

pub fn load_population_grid(path: &Path) -> Result<PopulationGrid, IngestError> {
    let mut text = String::new();
    open(path)?.read_to_string(&mut text).map_err(|error| IngestError::Io {
        source_name: path.display().to_string(),
        error,
    })?;
    read_population_grid(&text, &path.display().to_string())
}

pub fn read_population_grid(text: &str, source_name: &str) -> Result<PopulationGrid, IngestError> {
    let mut cell_size = None;
    let mut body_start = 0;
    let mut line_no = 0u64;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if !trimmed.starts_with('#') {
            break;
        }
        line_no += 1;
        body_start += line.len();
        if let Some((key, value)) = trimmed.trim_start_matches('#').split_once('=') {
            if key.trim() == CELL_SIZE_KEY {
                let v: f64 = value.trim().parse().map_err(|_| IngestError::Field {
                    source_name: source_name.to_string(),
                    line: line_no,
                    field: CELL_SIZE_KEY.to_string(),
                    message: format!("{:?} is not a number", value.trim()),
                })?;
                if !(v > 0.0 && v.is_finite()) {
                    return Err(IngestError::Field {
                        source_name: source_name.to_string(),
                        line: line_no,
                        field: CELL_SIZE_KEY.to_string(),
                        message: format!("{v} must be positive"),
                    });
                }
                cell_size = Some(v);
            }
        }
    }
    let Some(cell_size_deg) = cell_size else {
        return Err(IngestError::MissingCellSize {
            source_name: source_name.to_string(),
        });
    };
    let rows = Rows {
        name: source_name,
        columns: &POPGRID_COLUMNS,
    };
    let mut cells = Vec::new();
    for (line, rec) in rows.read(&text.as_bytes()[body_start..])? {
        let line = line + line_no;
        let center = rows.point(line, &rec, 0, 1)?;
        let raw = rows.text(line, &rec, 2)?;
        let population = match raw.parse::<i64>() {
            Ok(v) if v >= 0 => v as u64,
            Ok(v) => return Err(rows.field_err(line, "population", format!("{v} is negative"))),
            Err(_) => return Err(rows.field_err(line, "population", format!("{raw:?} is not an integer"))),
        };
        cells.push(PopulationCell { center, population });
    }
    let half = cell_size_deg / 2.0;
    let bounds = if cells.is_empty() {
        GridBounds {
            min_lat: 0.0,
            max_lat: 0.0,
            min_lon: 0.0,
            max_lon: 0.0,
        }
    } else {
        let fold = |f: fn(&PopulationCell) -> f64, init: f64, pick: fn(f64, f64) -> f64| {
            cells.iter().map(f).fold(init, pick)
        };
        GridBounds {
            min_lat: fold(|c| c.center.lat(), f64::INFINITY, f64::min) - half,
            max_lat: fold(|c| c.center.lat(), f64::NEG_INFINITY, f64::max) + half,
            min_lon: fold(|c| c.center.lon(), f64::INFINITY, f64::min) - half,
            max_lon: fold(|c| c.center.lon(), f64::NEG_INFINITY, f64::max) + half,
        }
    };
    Ok(PopulationGrid {
        cells,
        bounds,
        cell_size_deg,
    })
}

pub fn load_launch_history(path: &Path) -> Result<Vec<LaunchRecord>, IngestError> {
    read_launch_history(open(path)?, &path.display().to_string())
}

pub fn read_launch_history<R: Read>(reader: R, source_name: &str) -> Result<Vec<LaunchRecord>, IngestError> {
    let rows = Rows {
        name: source_name,
        columns: &LAUNCH_COLUMNS,
    };
    let mut out = Vec::new();
    for (line, rec) in rows.read(reader)? {
        let raw = rows.text(line, &rec, 0)?;
        let epoch = NaiveDate::parse_from_str(raw, "%Y-%m-%d")
            .map_err(|_| rows.field_err(line, "date", format!("{raw:?} is not a YYYY-MM-DD date")))?;
        let a = rows.real(line, &rec, 1)?;
        if !(a > EARTH_RADIUS_KM) {
            return Err(rows.field_err(
                line,
                "semi_major_axis_km",
                format!("{a} km does not exceed the earth radius"),
            ));
        }
        let inc = rows.real(line, &rec, 2)?;
        if !(0.0..=180.0).contains(&inc) {
            return Err(rows.field_err(line, "inclination_deg", format!("{inc} outside [0, 180]")));
        }
        out.push(LaunchRecord {
            epoch,
            semi_major_axis_km: a,
            inclination_deg: inc,
        });
    }
    Ok(out)
}

/// Loads flight tracks, thinning each to samples at least `min_spacing_km`
/// apart (first and last samples always kept; 0 keeps everything).
pub fn load_flight_tracks(path: &Path, min_spacing_km: f64) -> Result<Vec<FlightTrack>, IngestError> {
    read_flight_tracks(open(path)?, &path.display().to_string(), min_spacing_km)
}

pub fn read_flight_tracks<R: Read>(
    reader: R,
    source_name: &str,
    min_spacing_km: f64,
) -> Result<Vec<FlightTrack>, IngestError> {
    let rows = Rows {
        name: source_name,
        columns: &FLIGHT_COLUMNS,
    };
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut tracks: Vec<FlightTrack> = Vec::new();
    for (line, rec) in rows.read(reader)? {
        let id = rows.text(line, &rec, 0)?;
        let raw = rows.text(line, &rec, 1)?;
        let ts = parse_timestamp(raw)
            .ok_or_else(|| rows.field_err(line, "timestamp_utc", format!("{raw:?} is not unix seconds or RFC 3339")))?;
        let p = rows.point(line, &rec, 2, 3)?;
        let slot = *index.entry(id.to_string()).or_insert_with(|| {
            tracks.push(FlightTrack {
                flight_id: id.to_string(),
                samples: Vec::new(),
            });
            tracks.len() - 1
        });
        let track = &mut tracks[slot];
        if let Some(&(prev, _)) = track.samples.last() {
            if ts < prev {
                return Err(rows.field_err(
                    line,
                    "timestamp_utc",
                    format!("flight {id}: timestamp {ts} precedes previous sample {prev}"),
                ));
            }
        }
        track.samples.push((ts, p));
    }
    if min_spacing_km > 0.0 {
        for t in &mut tracks {
            t.samples = downsample(&t.samples, min_spacing_km);
        }
    }
    Ok(tracks)
}

fn parse_timestamp(raw: &str) -> Option<i64> {
    raw.parse::<i64>()
        .ok()
        .or_else(|| DateTime::parse_from_rfc3339(raw).ok().map(|d| d.timestamp()))
}

/// Keeps the first sample, every sample at least `spacing_km` from the last
/// kept one, and the final sample.
pub fn downsample(samples: &[(i64, GeoPoint<f64>)], spacing_km: f64) -> Vec<(i64, GeoPoint<f64>)> {
    let Some((&first, rest)) = samples.split_first() else {
        return Vec::new();
    };
    let mut out = vec![first];
    for (k, s) in rest.iter().enumerate() {
        let last = out.last().expect("non-empty").1;
        if k + 1 == rest.len() || great_circle_distance(&last, &s.1) >= spacing_km {
            out.push(*s);
        }
    }
    out
}

pub fn load_region_map(path: &Path) -> Result<BTreeMap<String, Region>, IngestError> {
    read_region_map(open(path)?, &path.display().to_string())
}

pub fn read_region_map<R: Read>(reader: R, source_name: &str) -> Result<BTreeMap<String, Region>, IngestError> {
    let rows = Rows {
        name: source_name,
        columns: &REGION_COLUMNS,
    };
    let mut out = BTreeMap::new();
    for (line, rec) in rows.read(reader)? {
        let fips = rows.text(line, &rec, 0)?.to_string();
        let region = match rows.text(line, &rec, 1)? {
            "West" => Region::West,
            "Gulf" => Region::Gulf,
            "East" => Region::East,
            other => return Err(rows.field_err(line, "region", format!("{other:?} is not West, Gulf or East"))),
        };
        if out.insert(fips.clone(), region).is_some() {
            return Err(IngestError::Duplicate {
                source_name: source_name.to_string(),
                line,
                fips,
            });
        }
    }
    Ok(out)
}

/// Launch counts per calendar year from the first to the last launch year,
/// with zero for years without launches.
pub fn annual_launch_series(records: &[LaunchRecord]) -> Vec<(i32, u32)> {
    let mut counts: BTreeMap<i32, u32> = BTreeMap::new();
    for r in records {
        *counts.entry(r.epoch.year()).or_default() += 1;
    }
    let (Some(&first), Some(&last)) = (counts.keys().next(), counts.keys().next_back()) else {
        return Vec::new();
    };
    (first..=last).map(|y| (y, counts.get(&y).copied().unwrap_or(0))).collect()
}
