//! Exhaustive reference solver for small instances: every K-subset whose
//! counties are pairwise at least D apart, each allocated by min-cost flow.

use thiserror::Error;

use crate::plan::model::{CostBundle, SpflpModel};
use crate::plan::solution::{assemble, PlanSolution, SolverStats};
use crate::plan::solve::selection_cost;

pub const DEFAULT_ORACLE_CAP: u64 = 5_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("C({n}, {k}) = {count} subsets exceeds the oracle cap of {cap}")]
    CapExceeded { n: usize, k: usize, count: u128, cap: u64 },
    #[error("no K-subset is separated and allocatable")]
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub solution: PlanSolution,
    /// Subsets that passed the separation filter and were allocated.
    pub subsets_examined: u64,
}

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = match c.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    c
}

pub fn enumerate_oracle(model: &SpflpModel, bundle: &CostBundle, cap: u64) -> Result<OracleResult, OracleError> {
    let (n, k) = (model.counties(), model.sites);
    let count = binomial(n, k);
    if count > u128::from(cap) {
        return Err(OracleError::CapExceeded { n, k, count, cap });
    }
    struct Best {
        cost: f64,
        sel: Vec<usize>,
        launches: Vec<Vec<u32>>,
    }
    let mut best: Option<Best> = None;
    let mut examined = 0u64;
    let mut chosen = Vec::with_capacity(k);

    fn walk(
        model: &SpflpModel,
        from: usize,
        chosen: &mut Vec<usize>,
        best: &mut Option<Best>,
        examined: &mut u64,
    ) {
        if chosen.len() == model.sites {
            *examined += 1;
            if let Some((cost, launches)) = selection_cost(model, chosen) {
                if best.as_ref().is_none_or(|b| cost < b.cost) {
                    *best = Some(Best {
                        cost,
                        sel: chosen.clone(),
                        launches,
                    });
                }
            }
            return;
        }
        let need = model.sites - chosen.len();
        for i in from..=model.counties() - need {
            if chosen.iter().all(|&c| model.compatible(i, c)) {
                chosen.push(i);
                walk(model, i + 1, chosen, best, examined);
                chosen.pop();
            }
        }
    }

    if k <= n {
        walk(model, 0, &mut chosen, &mut best, &mut examined);
    }
    let best = best.ok_or(OracleError::Infeasible)?;
    let stats = SolverStats {
        method: "enumeration".into(),
        nodes: examined as usize,
        lp_iterations: 0,
        root_bound: None,
        best_bound: best.cost,
        gap: 0.0,
        optimal: true,
    };
    Ok(OracleResult {
        solution: assemble(model, bundle, &best.sel, &best.launches, stats),
        subsets_examined: examined,
    })
}
