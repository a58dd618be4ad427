use serde::{Deserialize, Serialize};

use crate::plan::model::{CostBundle, SpflpModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteAllocation {
    pub fips: String,
    /// Launches per year of each mission type (index = mission).
    pub launches: Vec<u32>,
}

impl SiteAllocation {
    pub fn total(&self) -> u32 {
        self.launches.iter().sum()
    }
}

/// Objective components. The unweighted normalized sums recombine with the
/// scenario weights into the objective; the raw sums are in native units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub transport: f64,
    pub operation: f64,
    pub launch: f64,
    pub reroute: f64,
    /// Σ mean commute minutes over selected sites.
    pub transport_minutes: f64,
    /// Σ median house value over selected sites, USD.
    pub operation_usd: f64,
    /// Σ launches × (Δv₁ + Δv₂), km/s.
    pub launch_dv_km_s: f64,
    /// Σ launches × rerouting cost per launch, USD per year.
    pub reroute_usd: f64,
}

impl CostBreakdown {
    pub fn weighted_total(&self, w: &crate::plan::model::ScenarioWeights) -> f64 {
        w.w_t * self.transport + w.w_o * self.operation + w.w_l * self.launch + w.w_r * self.reroute
    }

    /// Dollar-denominated total (operation proxy plus yearly rerouting).
    pub fn dollar_total(&self) -> f64 {
        self.operation_usd + self.reroute_usd
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub method: String,
    pub nodes: usize,
    pub lp_iterations: usize,
    pub root_bound: Option<f64>,
    pub best_bound: f64,
    pub gap: f64,
    pub optimal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSolution {
    /// Model indices of the selected counties, ascending.
    pub selected: Vec<usize>,
    pub selected_fips: Vec<String>,
    pub allocation: Vec<SiteAllocation>,
    pub objective: f64,
    pub breakdown: CostBreakdown,
    pub stats: SolverStats,
}

impl PlanSolution {
    pub fn launches_of(&self, mission: usize) -> u32 {
        self.allocation.iter().map(|a| a.launches[mission]).sum()
    }

    pub fn total_launches(&self) -> u32 {
        self.allocation.iter().map(SiteAllocation::total).sum()
    }
}

/// Builds a solution from selected county indices and their launch rows
/// (`launches[k]` belongs to `selected[k]`).
pub fn assemble(
    model: &SpflpModel,
    bundle: &CostBundle,
    selected: &[usize],
    launches: &[Vec<u32>],
    stats: SolverStats,
) -> PlanSolution {
    let mut order: Vec<usize> = (0..selected.len()).collect();
    order.sort_by_key(|&k| selected[k]);
    let mut b = CostBreakdown::default();
    let mut objective = 0.0;
    let mut allocation = Vec::with_capacity(selected.len());
    let mut sel = Vec::with_capacity(selected.len());
    for &k in &order {
        let i = selected[k];
        sel.push(i);
        objective += model.site_cost[i];
        b.transport += bundle.transport[i];
        b.operation += bundle.operation[i];
        b.transport_minutes += bundle.transport_raw[i];
        b.operation_usd += bundle.operation_raw[i];
        for (j, &y) in launches[k].iter().enumerate() {
            if y == 0 {
                continue;
            }
            let y = f64::from(y);
            objective += model.alloc_cost[i][j] * y;
            b.launch += bundle.launch[i][j] * y;
            b.reroute += bundle.reroute[i][j] * y;
            b.launch_dv_km_s += bundle.launch_raw[i][j].unwrap_or(f64::NAN) * y;
            b.reroute_usd += bundle.reroute_raw[i][j].unwrap_or(f64::NAN) * y;
        }
        allocation.push(SiteAllocation {
            fips: model.fips[i].clone(),
            launches: launches[k].clone(),
        });
    }
    PlanSolution {
        selected_fips: sel.iter().map(|&i| model.fips[i].clone()).collect(),
        selected: sel,
        allocation,
        objective,
        breakdown: b,
        stats,
    }
}

/// Full variable vector (x, y, z) for a selection, as the model lays it out.
pub fn to_vector(model: &SpflpModel, selected: &[usize], launches: &[Vec<u32>]) -> Vec<f64> {
    let mut v = vec![0.0; model.num_vars()];
    for (k, &i) in selected.iter().enumerate() {
        v[model.x(i)] = 1.0;
        for (j, &y) in launches[k].iter().enumerate() {
            v[model.y(i, j)] = f64::from(y);
        }
    }
    if model.formulation == crate::plan::model::Formulation::BigM {
        for (p, &(i, k)) in model.pairs.iter().enumerate() {
            v[model.z(p)] = if model.distance_miles[i][k] >= model.separation_miles {
                1.0
            } else {
                0.0
            };
        }
    }
    v
}

/// Reads selection and allocation back out of a variable vector.
pub fn from_vector(model: &SpflpModel, v: &[f64]) -> (Vec<usize>, Vec<Vec<u32>>) {
    let selected: Vec<usize> = (0..model.counties()).filter(|&i| v[model.x(i)] > 0.5).collect();
    let launches = selected
        .iter()
        .map(|&i| {
            (0..model.missions())
                .map(|j| v[model.y(i, j)].round().max(0.0) as u32)
                .collect()
        })
        .collect();
    (selected, launches)
}
