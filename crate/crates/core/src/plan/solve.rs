//! Solving the site-selection model: warm start, branch-and-bound, and a
//! structured report when the model has no integer solution.

use std::cell::RefCell;
use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plan::bnb::{branch_and_bound, BnbOptions, BnbStatus, Heuristic, Milp};
use crate::plan::flow::allocate;
use crate::plan::model::{CostBundle, RowClass, SpflpModel, VarKind};
use crate::plan::solution::{assemble, to_vector, PlanSolution, SolverStats};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub bnb: BnbOptions,
    pub warm_start: bool,
    pub node_heuristic: bool,
    /// Node limit for each feasibility probe while diagnosing infeasibility.
    pub diagnosis_node_limit: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            bnb: BnbOptions::default(),
            warm_start: true,
            node_heuristic: true,
            diagnosis_node_limit: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfeasibilityReport {
    pub root_lp_feasible: bool,
    /// Row classes whose removal alone makes the model feasible.
    pub violated: Vec<RowClass>,
    /// Row classes whose probe ran out of nodes without an answer.
    pub undecided: Vec<RowClass>,
}

impl fmt::Display for InfeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = |v: &[RowClass]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ");
        write!(f, "root LP {}", if self.root_lp_feasible { "feasible" } else { "infeasible" })?;
        if self.violated.is_empty() {
            write!(f, "; no single row class explains it")?;
        } else {
            write!(f, "; violated: {}", names(&self.violated))?;
        }
        if !self.undecided.is_empty() {
            write!(f, "; undecided: {}", names(&self.undecided))?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("model is infeasible ({0})")]
    Infeasible(InfeasibilityReport),
    #[error("node limit reached after {nodes} nodes without an incumbent")]
    NodeLimit { nodes: usize },
    #[error("LP relaxation is unbounded")]
    Unbounded,
}

/// Branching priority: x first, then y, then z.
pub fn priorities(model: &SpflpModel) -> Vec<u8> {
    model
        .var_kind
        .iter()
        .map(|k| match k {
            VarKind::Site => 0,
            VarKind::Allocation => 1,
            VarKind::Pair => 2,
        })
        .collect()
}

/// Cheapest allocation for a fixed site set, plus the site costs.
pub fn selection_cost(model: &SpflpModel, selected: &[usize]) -> Option<(f64, Vec<Vec<u32>>)> {
    let costs: Vec<Vec<f64>> = selected.iter().map(|&i| model.alloc_cost[i].clone()).collect();
    let allowed: Vec<Vec<bool>> = selected.iter().map(|&i| model.allowed[i].clone()).collect();
    let alloc = allocate(&costs, &allowed, &model.demands, model.capacity, 1).ok()?;
    let fixed: f64 = selected.iter().map(|&i| model.site_cost[i]).sum();
    Some((fixed + alloc.cost, alloc.launches))
}

fn usable(model: &SpflpModel, i: usize) -> bool {
    model.allowed[i].iter().any(|&a| a)
}

/// Picks `K` pairwise-compatible usable counties following `order`, with
/// limited backtracking. Returns the first complete set found.
fn pick_compatible(model: &SpflpModel, order: &[usize], budget: &mut usize) -> Option<Vec<usize>> {
    fn go(model: &SpflpModel, order: &[usize], from: usize, chosen: &mut Vec<usize>, budget: &mut usize) -> bool {
        if chosen.len() == model.sites {
            return true;
        }
        for (pos, &i) in order.iter().enumerate().skip(from) {
            if *budget == 0 {
                return false;
            }
            *budget -= 1;
            if order.len() - pos < model.sites - chosen.len() {
                return false;
            }
            if chosen.iter().all(|&k| model.compatible(i, k)) {
                chosen.push(i);
                if go(model, order, pos + 1, chosen, budget) {
                    return true;
                }
                chosen.pop();
            }
        }
        false
    }
    let mut chosen = Vec::with_capacity(model.sites);
    let order: Vec<usize> = order.iter().copied().filter(|&i| usable(model, i)).collect();
    go(model, &order, 0, &mut chosen, budget).then_some(chosen)
}

/// One-for-one swaps until no swap lowers the cost.
fn improve(model: &SpflpModel, mut sel: Vec<usize>, mut best: f64, mut launches: Vec<Vec<u32>>) -> (Vec<usize>, f64, Vec<Vec<u32>>) {
    let n = model.counties();
    loop {
        let mut moved = false;
        for pos in 0..sel.len() {
            for cand in 0..n {
                if sel.contains(&cand) || !usable(model, cand) {
                    continue;
                }
                if !sel.iter().enumerate().all(|(p, &k)| p == pos || model.compatible(cand, k)) {
                    continue;
                }
                let mut trial = sel.clone();
                trial[pos] = cand;
                if let Some((c, l)) = selection_cost(model, &trial) {
                    if c < best - 1e-12 {
                        sel = trial;
                        best = c;
                        launches = l;
                        moved = true;
                    }
                }
            }
        }
        if !moved {
            return (sel, best, launches);
        }
    }
}

/// Greedy + transportation warm start: rank counties by their own cost plus
/// a share of their cheapest mission cost, take a compatible K-set, allocate
/// by min-cost flow, then improve by swaps.
pub fn warm_start(model: &SpflpModel) -> Option<(Vec<usize>, f64, Vec<Vec<u32>>)> {
    let n = model.counties();
    let share = model.total_demand() as f64 / model.sites as f64;
    let score: Vec<f64> = (0..n)
        .map(|i| {
            let cheapest = (0..model.missions())
                .filter(|&j| model.allowed[i][j])
                .map(|j| model.alloc_cost[i][j])
                .fold(f64::INFINITY, f64::min);
            model.site_cost[i] + cheapest * share
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| score[a].total_cmp(&score[b]).then(a.cmp(&b)));
    let mut budget = 200_000;
    let sel = pick_compatible(model, &order, &mut budget)?;
    let (cost, launches) = selection_cost(model, &sel)?;
    Some(improve(model, sel, cost, launches))
}

/// LP-guided rounding: counties ranked by their fractional x (ties by site
/// cost), then the same pick-and-allocate as the warm start. Each distinct
/// selection is evaluated once.
struct Rounding<'a> {
    model: &'a SpflpModel,
    seen: RefCell<HashSet<Vec<usize>>>,
}

impl Rounding<'_> {
    fn round(&self, x: &[f64]) -> Option<Vec<f64>> {
        let m = self.model;
        let mut order: Vec<usize> = (0..m.counties()).collect();
        order.sort_by(|&a, &b| {
            x[m.x(b)]
                .total_cmp(&x[m.x(a)])
                .then(m.site_cost[a].total_cmp(&m.site_cost[b]))
                .then(a.cmp(&b))
        });
        let mut budget = 5_000;
        let mut sel = pick_compatible(m, &order, &mut budget)?;
        sel.sort_unstable();
        if !self.seen.borrow_mut().insert(sel.clone()) {
            return None;
        }
        let (_, launches) = selection_cost(m, &sel)?;
        Some(to_vector(m, &sel, &launches))
    }
}

fn stats_from(method: &str, r: &crate::plan::bnb::BnbResult) -> SolverStats {
    SolverStats {
        method: method.to_string(),
        nodes: r.nodes,
        lp_iterations: r.lp_iterations,
        root_bound: r.root_bound,
        best_bound: r.best_bound,
        gap: r.gap(),
        optimal: r.status == BnbStatus::Optimal,
    }
}

/// Proven-optimal plan by best-bound branch-and-bound, or the incumbent with
/// its gap when the node limit stops the search.
pub fn solve(model: &SpflpModel, bundle: &CostBundle, opts: &SolveOptions) -> Result<PlanSolution, SolveError> {
    let integer = vec![true; model.num_vars()];
    let priority = priorities(model);
    let milp = Milp {
        lp: &model.lp,
        integer: &integer,
        priority: &priority,
    };
    let warm = if opts.warm_start {
        warm_start(model).map(|(sel, _, launches)| to_vector(model, &sel, &launches))
    } else {
        None
    };
    let rounding = Rounding {
        model,
        seen: RefCell::new(HashSet::new()),
    };
    let h = |x: &[f64]| rounding.round(x);
    let heuristic: Option<Heuristic> = if opts.node_heuristic { Some(&h) } else { None };
    let r = branch_and_bound(&milp, warm.as_deref(), heuristic, &opts.bnb);
    log::info!(
        "branch-and-bound: {:?} after {} nodes, objective {:.9}, gap {:.3e}",
        r.status,
        r.nodes,
        r.objective,
        r.gap()
    );
    match r.status {
        BnbStatus::Unbounded => return Err(SolveError::Unbounded),
        BnbStatus::Infeasible => return Err(SolveError::Infeasible(diagnose(model, opts))),
        BnbStatus::NodeLimit if r.x.is_none() => return Err(SolveError::NodeLimit { nodes: r.nodes }),
        _ => {}
    }
    let x = r.x.as_ref().expect("incumbent");
    let (sel, launches) = crate::plan::solution::from_vector(model, x);
    Ok(assemble(model, bundle, &sel, &launches, stats_from("branch_and_bound", &r)))
}

/// Zero-objective feasibility search on `model`.
fn feasible(model: &SpflpModel, node_limit: usize, opts: &SolveOptions) -> Option<bool> {
    let mut lp = model.lp.clone();
    lp.objective.iter_mut().for_each(|c| *c = 0.0);
    let integer = vec![true; lp.num_vars()];
    let priority = priorities(model);
    let milp = Milp {
        lp: &lp,
        integer: &integer,
        priority: &priority,
    };
    let bnb = BnbOptions {
        node_limit,
        ..opts.bnb
    };
    match branch_and_bound(&milp, None, None, &bnb).status {
        BnbStatus::Optimal | BnbStatus::Unbounded => Some(true),
        BnbStatus::Infeasible => Some(false),
        BnbStatus::NodeLimit => None,
    }
}

/// Names the row classes whose removal restores integer feasibility.
pub fn diagnose(model: &SpflpModel, opts: &SolveOptions) -> InfeasibilityReport {
    let root = crate::plan::simplex::solve_lp(&model.lp, &opts.bnb.simplex);
    let mut report = InfeasibilityReport {
        root_lp_feasible: root.status == crate::plan::simplex::LpStatus::Optimal,
        violated: Vec::new(),
        undecided: Vec::new(),
    };
    for class in RowClass::ALL {
        if !model.row_class.contains(&class) {
            continue;
        }
        match feasible(&model.without(class), opts.diagnosis_node_limit, opts) {
            Some(true) => report.violated.push(class),
            Some(false) => {}
            None => report.undecided.push(class),
        }
    }
    report
}
