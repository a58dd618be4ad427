//! Post-hoc plan checks against the raw inputs, independent of the model
//! matrix: distances are recomputed from centroids and costs re-summed from
//! the bundle.

use std::collections::HashMap;
use std::fmt;

use crate::geo::{great_circle_distance, KM_PER_MILE};
use crate::plan::model::{CostBundle, ScenarioWeights};
use crate::plan::solution::PlanSolution;

#[derive(Debug, Clone, PartialEq)]
pub struct PlanCheck<'a> {
    pub demands: &'a [u32],
    pub sites: usize,
    pub capacity: u32,
    pub separation_miles: f64,
    pub weights: ScenarioWeights,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    UnknownCounty(String),
    DuplicateCounty(String),
    Cardinality { expected: usize, found: usize },
    Demand { mission: usize, required: u32, allocated: u32 },
    Capacity { fips: String, launches: u32, capacity: u32 },
    IdleSite(String),
    Excluded { fips: String, mission: usize },
    Separation { a: String, b: String, miles: f64 },
    Objective { reported: f64, recomputed: f64 },
    Shape(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownCounty(c) => write!(f, "county {c} is not a candidate"),
            Violation::DuplicateCounty(c) => write!(f, "county {c} selected twice"),
            Violation::Cardinality { expected, found } => write!(f, "{found} sites selected, expected {expected}"),
            Violation::Demand { mission, required, allocated } => {
                write!(f, "mission {} gets {allocated} launches, needs {required}", mission + 1)
            }
            Violation::Capacity { fips, launches, capacity } => {
                write!(f, "site {fips} has {launches} launches, capacity {capacity}")
            }
            Violation::IdleSite(c) => write!(f, "site {c} is open with no launches"),
            Violation::Excluded { fips, mission } => {
                write!(f, "site {fips} serves mission {} without a corridor", mission + 1)
            }
            Violation::Separation { a, b, miles } => write!(f, "sites {a} and {b} are {miles:.3} mi apart"),
            Violation::Objective { reported, recomputed } => {
                write!(f, "objective {reported} differs from recomputed {recomputed}")
            }
            Violation::Shape(s) => write!(f, "malformed plan: {s}"),
        }
    }
}

/// Every violated invariant, empty when the plan is valid. Launches at
/// unselected counties cannot be expressed in a `PlanSolution`, so coupling
/// reduces to "no idle open site".
pub fn verify_plan(sol: &PlanSolution, bundle: &CostBundle, check: &PlanCheck) -> Vec<Violation> {
    let mut out = Vec::new();
    let index: HashMap<&str, usize> = bundle.fips.iter().enumerate().map(|(i, f)| (f.as_str(), i)).collect();
    if sol.allocation.len() != sol.selected_fips.len() {
        out.push(Violation::Shape("allocation rows vs selected sites".into()));
        return out;
    }
    if sol.selected_fips.len() != check.sites {
        out.push(Violation::Cardinality {
            expected: check.sites,
            found: sol.selected_fips.len(),
        });
    }
    let mut rows = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for a in &sol.allocation {
        if !seen.insert(a.fips.as_str()) {
            out.push(Violation::DuplicateCounty(a.fips.clone()));
        }
        if a.launches.len() != check.demands.len() {
            out.push(Violation::Shape(format!("site {} has {} mission entries", a.fips, a.launches.len())));
            return out;
        }
        match index.get(a.fips.as_str()) {
            Some(&i) => rows.push((i, a)),
            None => out.push(Violation::UnknownCounty(a.fips.clone())),
        }
    }
    for (j, &need) in check.demands.iter().enumerate() {
        let got: u32 = sol.allocation.iter().map(|a| a.launches[j]).sum();
        if got < need {
            out.push(Violation::Demand {
                mission: j,
                required: need,
                allocated: got,
            });
        }
    }
    let mut objective = 0.0;
    let w = &check.weights;
    for &(i, a) in &rows {
        let total = a.total();
        if total > check.capacity {
            out.push(Violation::Capacity {
                fips: a.fips.clone(),
                launches: total,
                capacity: check.capacity,
            });
        }
        if total == 0 {
            out.push(Violation::IdleSite(a.fips.clone()));
        }
        objective += w.w_t * bundle.transport[i] + w.w_o * bundle.operation[i];
        for (j, &y) in a.launches.iter().enumerate() {
            if y > 0 && bundle.launch_raw[i][j].is_none() {
                out.push(Violation::Excluded {
                    fips: a.fips.clone(),
                    mission: j,
                });
            }
            objective += f64::from(y) * (w.w_l * bundle.launch[i][j] + w.w_r * bundle.reroute[i][j]);
        }
    }
    for (p, &(i, a)) in rows.iter().enumerate() {
        for &(k, b) in &rows[p + 1..] {
            let miles = great_circle_distance(&bundle.centroids[i], &bundle.centroids[k]) / KM_PER_MILE;
            if miles < check.separation_miles {
                out.push(Violation::Separation {
                    a: a.fips.clone(),
                    b: b.fips.clone(),
                    miles,
                });
            }
        }
    }
    if (objective - sol.objective).abs() > 1e-6 * objective.abs().max(1.0) {
        out.push(Violation::Objective {
            reported: sol.objective,
            recomputed: objective,
        });
    }
    out
}
