//! Cost matrices and the facility-location MILP built from them.
//!
//! Variables: `x_i` (site opened, binary), `y_ij` (launches of mission j from
//! site i, integer), `z_p` (pair p = (i, i') may both open, binary). Rows in
//! emission order:
//!
//! ```text
//! card        Σ_i x_i = K
//! dem_j       Σ_i y_ij ≥ k_j
//! cap_i       Σ_j y_ij ≤ P
//! cpl_hi_i    (1/KP) Σ_j y_ij − x_i ≤ 0
//! cpl_lo_i    x_i − Σ_j y_ij ≤ 0
//! sep_a_p     M z_p ≤ d_p − D + M
//! sep_b_p     −M z_p ≤ D − d_p
//! sep_c_p     x_i + x_i' − z_p ≤ 1
//! ```
//!
//! The conflict formulation drops `z` and the three `sep_*` families and
//! instead emits `x_i + x_i' ≤ 1` for every pair closer than D.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{great_circle_distance, GeoPoint, KM_PER_MILE};
use crate::hazard::MissionCorridor;
use crate::ingest::CountyRecord;
use crate::plan::simplex::{LinearProgram, RowSense};

/// Added to the normalized maximum for (county, mission) pairs with no
/// feasible corridor; such pairs are also bounded to zero launches.
pub const INFEASIBLE_PENALTY: f64 = 1.0;
pub const DEFAULT_CAPACITY: u32 = 52;
pub const DEFAULT_SEPARATION_MILES: f64 = 300.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("K·P = {sites}·{capacity} is below the total demand {demand}")]
    Capacity { sites: usize, capacity: u32, demand: u64 },
    #[error("{sites} sites requested but only {counties} candidate counties")]
    TooFewCounties { sites: usize, counties: usize },
    #[error("no candidate counties")]
    NoCounties,
    #[error("site count and capacity must be positive")]
    Zero,
    #[error("scenario weights must be positive and finite")]
    Weights,
    #[error("county {0} has no feasible corridor for any mission")]
    NoCorridor(String),
    #[error("input lengths disagree: {0}")]
    Shape(&'static str),
    #[error("big-M {0} must exceed every |d - D|")]
    BigM(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioWeights {
    pub w_t: f64,
    pub w_o: f64,
    pub w_l: f64,
    pub w_r: f64,
}

impl ScenarioWeights {
    pub fn new(w_t: f64, w_o: f64, w_l: f64, w_r: f64) -> Result<Self, ModelError> {
        if [w_t, w_o, w_l, w_r].iter().all(|w| w.is_finite() && *w > 0.0) {
            Ok(Self { w_t, w_o, w_l, w_r })
        } else {
            Err(ModelError::Weights)
        }
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, ModelError> {
        Self::new(self.w_t * factor, self.w_o * factor, self.w_l * factor, self.w_r * factor)
    }
}

impl Default for ScenarioWeights {
    fn default() -> Self {
        Self {
            w_t: 1.0,
            w_o: 1.0,
            w_l: 1.0,
            w_r: 1.0,
        }
    }
}

/// Range used to map a cost family onto [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormRange {
    pub min: f64,
    pub max: f64,
}

impl NormRange {
    fn of<'a>(values: impl IntoIterator<Item = &'a f64>) -> Self {
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in values {
            min = min.min(v);
            max = max.max(v);
        }
        if min > max {
            (min, max) = (0.0, 0.0);
        }
        Self { min, max }
    }

    /// (v − min)/(max − min); 0 when the range is degenerate.
    pub fn apply(&self, v: f64) -> f64 {
        let span = self.max - self.min;
        if span > 0.0 {
            (v - self.min) / span
        } else {
            0.0
        }
    }

    pub fn invert(&self, n: f64) -> f64 {
        self.min + n * (self.max - self.min)
    }
}

/// Raw and normalized cost families for the candidate counties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostBundle {
    pub fips: Vec<String>,
    pub centroids: Vec<GeoPoint<f64>>,
    /// Mean commute, minutes.
    pub transport_raw: Vec<f64>,
    /// Median house value, USD.
    pub operation_raw: Vec<f64>,
    /// Δv₁ + Δv₂ in km/s; `None` when the pair has no corridor.
    pub launch_raw: Vec<Vec<Option<f64>>>,
    /// Rerouting cost per launch, USD.
    pub reroute_raw: Vec<Vec<Option<f64>>>,
    pub azimuth: Vec<Vec<Option<f64>>>,
    pub transport: Vec<f64>,
    pub operation: Vec<f64>,
    pub launch: Vec<Vec<f64>>,
    pub reroute: Vec<Vec<f64>>,
    pub ranges: [NormRange; 4],
    pub normalized: bool,
}

impl CostBundle {
    pub fn len(&self) -> usize {
        self.fips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fips.is_empty()
    }

    pub fn missions(&self) -> usize {
        self.launch.first().map_or(0, Vec::len)
    }

    pub fn allowed(&self, i: usize, j: usize) -> bool {
        self.launch_raw[i][j].is_some()
    }

    /// Restricts the bundle to the listed county indices (keeping the
    /// normalization ranges of the full set).
    pub fn subset(&self, keep: &[usize]) -> Self {
        let pick = |v: &Vec<f64>| keep.iter().map(|&i| v[i]).collect::<Vec<_>>();
        let pick2 = |v: &Vec<Vec<f64>>| keep.iter().map(|&i| v[i].clone()).collect::<Vec<_>>();
        let pick_opt = |v: &Vec<Vec<Option<f64>>>| keep.iter().map(|&i| v[i].clone()).collect::<Vec<_>>();
        Self {
            fips: keep.iter().map(|&i| self.fips[i].clone()).collect(),
            centroids: keep.iter().map(|&i| self.centroids[i]).collect(),
            transport_raw: pick(&self.transport_raw),
            operation_raw: pick(&self.operation_raw),
            launch_raw: pick_opt(&self.launch_raw),
            reroute_raw: pick_opt(&self.reroute_raw),
            azimuth: pick_opt(&self.azimuth),
            transport: pick(&self.transport),
            operation: pick(&self.operation),
            launch: pick2(&self.launch),
            reroute: pick2(&self.reroute),
            ranges: self.ranges,
            normalized: self.normalized,
        }
    }
}

/// Builds the cost bundle from per-county corridors (`corridors[i][j]`).
/// With `normalize = false` the "normalized" families hold raw values.
pub fn build_cost_bundle(
    counties: &[CountyRecord],
    corridors: &[Vec<Option<MissionCorridor>>],
    normalize: bool,
) -> Result<CostBundle, ModelError> {
    if counties.len() != corridors.len() {
        return Err(ModelError::Shape("counties vs corridors"));
    }
    let m = corridors.first().map_or(0, Vec::len);
    if corridors.iter().any(|c| c.len() != m) {
        return Err(ModelError::Shape("mission count per county"));
    }
    for (c, row) in counties.iter().zip(corridors) {
        if row.iter().all(Option::is_none) {
            return Err(ModelError::NoCorridor(c.fips.clone()));
        }
    }
    let transport_raw: Vec<f64> = counties.iter().map(|c| c.mean_commute_minutes).collect();
    let operation_raw: Vec<f64> = counties.iter().map(|c| c.median_house_value_usd).collect();
    let launch_raw: Vec<Vec<Option<f64>>> = corridors
        .iter()
        .map(|r| r.iter().map(|c| c.as_ref().map(|c| c.insertion.total)).collect())
        .collect();
    let reroute_raw: Vec<Vec<Option<f64>>> = corridors
        .iter()
        .map(|r| r.iter().map(|c| c.as_ref().map(|c| c.exposure.reroute_cost_usd)).collect())
        .collect();
    let azimuth = corridors
        .iter()
        .map(|r| r.iter().map(|c| c.as_ref().map(|c| c.exposure.azimuth)).collect())
        .collect();
    let ranges = [
        NormRange::of(&transport_raw),
        NormRange::of(&operation_raw),
        NormRange::of(launch_raw.iter().flatten().flatten()),
        NormRange::of(reroute_raw.iter().flatten().flatten()),
    ];
    let scale = |r: &NormRange, v: f64| if normalize { r.apply(v) } else { v };
    let sentinel = |r: &NormRange| {
        if normalize {
            1.0 + INFEASIBLE_PENALTY
        } else {
            r.max + INFEASIBLE_PENALTY
        }
    };
    let pair = |raw: &Vec<Vec<Option<f64>>>, r: &NormRange| -> Vec<Vec<f64>> {
        raw.iter()
            .map(|row| row.iter().map(|v| v.map_or(sentinel(r), |v| scale(r, v))).collect())
            .collect()
    };
    Ok(CostBundle {
        fips: counties.iter().map(|c| c.fips.clone()).collect(),
        centroids: counties.iter().map(|c| c.centroid).collect(),
        transport: transport_raw.iter().map(|&v| scale(&ranges[0], v)).collect(),
        operation: operation_raw.iter().map(|&v| scale(&ranges[1], v)).collect(),
        launch: pair(&launch_raw, &ranges[2]),
        reroute: pair(&reroute_raw, &ranges[3]),
        transport_raw,
        operation_raw,
        launch_raw,
        reroute_raw,
        azimuth,
        ranges,
        normalized: normalize,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    /// Pair variables with big-M linking rows, as written in the model.
    #[default]
    BigM,
    /// Precomputed conflicts: x_i + x_i' ≤ 1 for every pair closer than D.
    Conflict,
}

/// Constraint families, used to label rows and to explain infeasibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowClass {
    Cardinality,
    Demand,
    Capacity,
    Coupling,
    Dispersal,
}

impl RowClass {
    pub const ALL: [RowClass; 5] = [
        RowClass::Cardinality,
        RowClass::Demand,
        RowClass::Capacity,
        RowClass::Coupling,
        RowClass::Dispersal,
    ];
}

impl std::fmt::Display for RowClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RowClass::Cardinality => "cardinality (sum of x = K)",
            RowClass::Demand => "mission demand",
            RowClass::Capacity => "site capacity",
            RowClass::Coupling => "site/allocation coupling",
            RowClass::Dispersal => "pairwise dispersal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Site,
    Allocation,
    Pair,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub sites: usize,
    pub capacity: u32,
    pub separation_miles: f64,
    pub big_m: Option<f64>,
    pub formulation: Formulation,
}

/// ⌈total / capacity⌉.
pub fn required_sites(total_demand: u64, capacity: u32) -> usize {
    if capacity == 0 {
        return 0;
    }
    total_demand.div_ceil(u64::from(capacity)) as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpflpModel {
    pub fips: Vec<String>,
    pub demands: Vec<u32>,
    pub sites: usize,
    pub capacity: u32,
    pub separation_miles: f64,
    pub big_m: f64,
    pub formulation: Formulation,
    pub weights: ScenarioWeights,
    pub distance_miles: Vec<Vec<f64>>,
    /// w_T C_T + w_O C_O per county.
    pub site_cost: Vec<f64>,
    /// w_L C_L + w_R C_R per (county, mission).
    pub alloc_cost: Vec<Vec<f64>>,
    pub allowed: Vec<Vec<bool>>,
    /// Unordered pairs (i < i') carrying a z column (big-M) or a conflict row.
    pub pairs: Vec<(usize, usize)>,
    pub lp: LinearProgram<f64>,
    pub var_kind: Vec<VarKind>,
    pub var_names: Vec<String>,
    pub row_names: Vec<String>,
    pub row_class: Vec<RowClass>,
}

impl SpflpModel {
    pub fn counties(&self) -> usize {
        self.fips.len()
    }

    pub fn missions(&self) -> usize {
        self.demands.len()
    }

    pub fn x(&self, i: usize) -> usize {
        i
    }

    pub fn y(&self, i: usize, j: usize) -> usize {
        self.counties() + i * self.missions() + j
    }

    pub fn z(&self, p: usize) -> usize {
        self.counties() * (1 + self.missions()) + p
    }

    pub fn num_vars(&self) -> usize {
        self.lp.num_vars()
    }

    pub fn total_demand(&self) -> u64 {
        self.demands.iter().map(|&k| u64::from(k)).sum()
    }

    /// Whether two counties may both be opened (distance ≥ D, boundary
    /// inclusive).
    pub fn compatible(&self, i: usize, k: usize) -> bool {
        i == k || self.distance_miles[i][k] >= self.separation_miles
    }

    /// Copy of the model with every row of `class` removed.
    pub fn without(&self, class: RowClass) -> SpflpModel {
        let mut out = self.clone();
        let keep: Vec<bool> = self.row_class.iter().map(|&c| c != class).collect();
        let mut it = keep.iter();
        out.lp.rows.retain(|_| *it.next().expect("row"));
        let mut it = keep.iter();
        out.row_names.retain(|_| *it.next().expect("row"));
        out.row_class.retain(|&c| c != class);
        out
    }
}

pub fn distance_matrix_miles(centroids: &[GeoPoint<f64>]) -> Vec<Vec<f64>> {
    centroids
        .iter()
        .map(|a| centroids.iter().map(|b| great_circle_distance(a, b) / KM_PER_MILE).collect())
        .collect()
}

pub fn build_model(
    bundle: &CostBundle,
    demands: &[u32],
    weights: &ScenarioWeights,
    params: &ModelParams,
) -> Result<SpflpModel, ModelError> {
    let n = bundle.len();
    let m = demands.len();
    if n == 0 {
        return Err(ModelError::NoCounties);
    }
    if bundle.missions() != m {
        return Err(ModelError::Shape("bundle missions vs demands"));
    }
    ScenarioWeights::new(weights.w_t, weights.w_o, weights.w_l, weights.w_r)?;
    let (k, p) = (params.sites, params.capacity);
    if k == 0 || p == 0 {
        return Err(ModelError::Zero);
    }
    let demand: u64 = demands.iter().map(|&d| u64::from(d)).sum();
    if (k as u64) * u64::from(p) < demand {
        return Err(ModelError::Capacity {
            sites: k,
            capacity: p,
            demand,
        });
    }
    if k > n {
        return Err(ModelError::TooFewCounties { sites: k, counties: n });
    }
    let dist = distance_matrix_miles(&bundle.centroids);
    let d_sep = params.separation_miles;
    // 1 + the largest distance, or 1 + D when D exceeds every distance (the
    // z = 0 branch of sep_a must stay satisfiable).
    let max_d = dist.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    let big_m = params.big_m.unwrap_or(1.0 + max_d.max(d_sep));
    if params.formulation == Formulation::BigM && n > 1 {
        let need = dist.iter().flatten().map(|d| (d - d_sep).abs()).fold(0.0f64, f64::max);
        if !(big_m > need) {
            return Err(ModelError::BigM(big_m));
        }
    }

    let site_cost: Vec<f64> = (0..n)
        .map(|i| weights.w_t * bundle.transport[i] + weights.w_o * bundle.operation[i])
        .collect();
    let alloc_cost: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..m)
                .map(|j| weights.w_l * bundle.launch[i][j] + weights.w_r * bundle.reroute[i][j])
                .collect()
        })
        .collect();
    let allowed: Vec<Vec<bool>> = (0..n).map(|i| (0..m).map(|j| bundle.allowed(i, j)).collect()).collect();
    let all_pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |k| (i, k))).collect();
    let pairs: Vec<(usize, usize)> = match params.formulation {
        Formulation::BigM => all_pairs,
        Formulation::Conflict => all_pairs.into_iter().filter(|&(i, k)| dist[i][k] < d_sep).collect(),
    };
    let num_z = if params.formulation == Formulation::BigM { pairs.len() } else { 0 };
    let num_vars = n + n * m + num_z;

    let mut model = SpflpModel {
        fips: bundle.fips.clone(),
        demands: demands.to_vec(),
        sites: k,
        capacity: p,
        separation_miles: d_sep,
        big_m,
        formulation: params.formulation,
        weights: *weights,
        distance_miles: dist,
        site_cost,
        alloc_cost,
        allowed,
        pairs,
        lp: LinearProgram::new(num_vars),
        var_kind: Vec::with_capacity(num_vars),
        var_names: Vec::with_capacity(num_vars),
        row_names: Vec::new(),
        row_class: Vec::new(),
    };
    let pf = f64::from(p);
    for i in 0..n {
        model.lp.objective[i] = model.site_cost[i];
        model.lp.upper[i] = 1.0;
        model.var_kind.push(VarKind::Site);
        model.var_names.push(format!("x_{}", model.fips[i]));
    }
    for i in 0..n {
        for j in 0..m {
            let v = model.y(i, j);
            model.lp.objective[v] = model.alloc_cost[i][j];
            model.lp.upper[v] = if model.allowed[i][j] { pf } else { 0.0 };
            model.var_kind.push(VarKind::Allocation);
            model.var_names.push(format!("y_{}_{}", model.fips[i], j + 1));
        }
    }
    for q in 0..num_z {
        let (i, k2) = model.pairs[q];
        let v = model.z(q);
        model.lp.upper[v] = 1.0;
        model.var_kind.push(VarKind::Pair);
        model.var_names.push(format!("z_{}_{}", model.fips[i], model.fips[k2]));
    }

    let mut rows: Vec<(String, RowClass, Vec<(usize, f64)>, RowSense, f64)> = Vec::new();
    rows.push((
        "card".into(),
        RowClass::Cardinality,
        (0..n).map(|i| (i, 1.0)).collect(),
        RowSense::Eq,
        k as f64,
    ));
    for (j, &kj) in demands.iter().enumerate() {
        rows.push((
            format!("dem_{}", j + 1),
            RowClass::Demand,
            (0..n).map(|i| (model.y(i, j), 1.0)).collect(),
            RowSense::Ge,
            f64::from(kj),
        ));
    }
    for i in 0..n {
        rows.push((
            format!("cap_{}", model.fips[i]),
            RowClass::Capacity,
            (0..m).map(|j| (model.y(i, j), 1.0)).collect(),
            RowSense::Le,
            pf,
        ));
    }
    let inv_kp = 1.0 / (k as f64 * pf);
    for i in 0..n {
        let mut c: Vec<(usize, f64)> = (0..m).map(|j| (model.y(i, j), inv_kp)).collect();
        c.push((i, -1.0));
        rows.push((format!("cpl_hi_{}", model.fips[i]), RowClass::Coupling, c, RowSense::Le, 0.0));
    }
    for i in 0..n {
        let mut c = vec![(i, 1.0)];
        c.extend((0..m).map(|j| (model.y(i, j), -1.0)));
        rows.push((format!("cpl_lo_{}", model.fips[i]), RowClass::Coupling, c, RowSense::Le, 0.0));
    }
    let pair_name = |model: &SpflpModel, q: usize| {
        let (i, k2) = model.pairs[q];
        format!("{}_{}", model.fips[i], model.fips[k2])
    };
    match params.formulation {
        Formulation::BigM => {
            for q in 0..model.pairs.len() {
                let (i, k2) = model.pairs[q];
                let d = model.distance_miles[i][k2];
                rows.push((
                    format!("sep_a_{}", pair_name(&model, q)),
                    RowClass::Dispersal,
                    vec![(model.z(q), big_m)],
                    RowSense::Le,
                    d - d_sep + big_m,
                ));
            }
            for q in 0..model.pairs.len() {
                let (i, k2) = model.pairs[q];
                let d = model.distance_miles[i][k2];
                rows.push((
                    format!("sep_b_{}", pair_name(&model, q)),
                    RowClass::Dispersal,
                    vec![(model.z(q), -big_m)],
                    RowSense::Le,
                    d_sep - d,
                ));
            }
            for q in 0..model.pairs.len() {
                let (i, k2) = model.pairs[q];
                rows.push((
                    format!("sep_c_{}", pair_name(&model, q)),
                    RowClass::Dispersal,
                    vec![(i, 1.0), (k2, 1.0), (model.z(q), -1.0)],
                    RowSense::Le,
                    1.0,
                ));
            }
        }
        Formulation::Conflict => {
            for q in 0..model.pairs.len() {
                let (i, k2) = model.pairs[q];
                rows.push((
                    format!("conf_{}", pair_name(&model, q)),
                    RowClass::Dispersal,
                    vec![(i, 1.0), (k2, 1.0)],
                    RowSense::Le,
                    1.0,
                ));
            }
        }
    }
    for (name, class, mut coeffs, sense, rhs) in rows {
        // Column order, as a column-major reader rebuilds it.
        coeffs.sort_by_key(|&(j, _)| j);
        model.row_names.push(name);
        model.row_class.push(class);
        model.lp.add_row(coeffs, sense, rhs);
    }
    Ok(model)
}
