//! Best-bound branch-and-bound over the LP relaxation.
//!
//! Each node tightens variable bounds, propagates them through the rows
//! (rounding integer bounds), drops fixed columns and redundant rows, and
//! solves the remaining LP with the bounded simplex. Open nodes are kept in a
//! heap ordered by (LP bound, node id), so the search order is deterministic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::plan::simplex::{solve_lp, LinearProgram, LpStatus, RowSense, SimplexOptions};

const BOUND_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BnbOptions {
    pub node_limit: usize,
    pub integrality_tol: f64,
    pub feasibility_tol: f64,
    pub simplex: SimplexOptions,
}

impl Default for BnbOptions {
    fn default() -> Self {
        Self {
            node_limit: 200_000,
            integrality_tol: 1e-6,
            feasibility_tol: 1e-6,
            simplex: SimplexOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BnbStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NodeLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnbResult {
    pub status: BnbStatus,
    pub x: Option<Vec<f64>>,
    pub objective: f64,
    /// Smallest LP bound over unexplored nodes (the incumbent value once
    /// the tree is exhausted).
    pub best_bound: f64,
    /// LP relaxation value at the root, if the root LP was feasible.
    pub root_bound: Option<f64>,
    pub nodes: usize,
    pub lp_iterations: usize,
    /// Incumbent objective after each improvement, in order.
    pub incumbents: Vec<f64>,
}

impl BnbResult {
    /// Relative gap between incumbent and best bound.
    pub fn gap(&self) -> f64 {
        if self.x.is_none() {
            return f64::INFINITY;
        }
        ((self.objective - self.best_bound) / self.objective.abs().max(1.0)).max(0.0)
    }
}

/// Maps a node's LP point to an integer-feasible point, if it can.
pub type Heuristic<'a> = &'a dyn Fn(&[f64]) -> Option<Vec<f64>>;

/// A mixed-integer program: the LP plus integrality flags and a branching
/// priority class per variable (lower classes branch first).
#[derive(Debug, Clone, Copy)]
pub struct Milp<'a> {
    pub lp: &'a LinearProgram<f64>,
    pub integer: &'a [bool],
    pub priority: &'a [u8],
}

struct Node {
    id: usize,
    bound: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Reversed so the max-heap pops the smallest bound, then smallest id.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then_with(|| other.id.cmp(&self.id))
    }
}

/// Tightens `lower`/`upper` by activity-based bound propagation. Returns
/// false when some row cannot be satisfied within the bounds.
pub fn propagate_bounds(
    lp: &LinearProgram<f64>,
    integer: &[bool],
    lower: &mut [f64],
    upper: &mut [f64],
    max_passes: usize,
) -> bool {
    for _ in 0..max_passes {
        let mut changed = false;
        for row in &lp.rows {
            let senses: &[f64] = match row.sense {
                RowSense::Le => &[1.0],
                RowSense::Ge => &[-1.0],
                RowSense::Eq => &[1.0, -1.0],
            };
            for &s in senses {
                // s·(a x) ≤ s·b
                let b = s * row.rhs;
                let mut min_act = 0.0;
                let mut inf_terms = 0;
                for &(j, a) in &row.coeffs {
                    let a = s * a;
                    let v = if a > 0.0 { a * lower[j] } else { a * upper[j] };
                    if v.is_finite() {
                        min_act += v;
                    } else {
                        inf_terms += 1;
                    }
                }
                if inf_terms == 0 && min_act > b + 1e-9 * (1.0 + b.abs()) {
                    return false;
                }
                if inf_terms > 0 {
                    continue;
                }
                for &(j, a) in &row.coeffs {
                    let a = s * a;
                    if a.abs() < 1e-12 {
                        continue;
                    }
                    if a > 0.0 {
                        let rest = min_act - a * lower[j];
                        let mut nu = (b - rest) / a;
                        if integer[j] {
                            nu = (nu + 1e-9).floor();
                        }
                        if nu < upper[j] - 1e-9 {
                            upper[j] = nu;
                            changed = true;
                        }
                    } else {
                        let rest = min_act - a * upper[j];
                        let mut nl = (b - rest) / a;
                        if integer[j] {
                            nl = (nl - 1e-9).ceil();
                        }
                        if nl > lower[j] + 1e-9 {
                            lower[j] = nl;
                            changed = true;
                        }
                    }
                    if lower[j] > upper[j] + 1e-9 {
                        return false;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    lower.iter().zip(upper.iter()).all(|(l, u)| l <= &(u + 1e-9))
}

/// LP over the free columns only; fixed columns are folded into the rows.
struct Reduced {
    lp: LinearProgram<f64>,
    cols: Vec<usize>,
    constant: f64,
}

fn reduce(lp: &LinearProgram<f64>, lower: &[f64], upper: &[f64]) -> Option<Reduced> {
    let n = lp.num_vars();
    let mut map = vec![usize::MAX; n];
    let mut cols = Vec::new();
    for j in 0..n {
        if upper[j] - lower[j] > 1e-12 {
            map[j] = cols.len();
            cols.push(j);
        }
    }
    let mut out = LinearProgram::new(cols.len());
    let mut constant = 0.0;
    for j in 0..n {
        if map[j] == usize::MAX {
            constant += lp.objective[j] * lower[j];
        } else {
            out.objective[map[j]] = lp.objective[j];
            out.lower[map[j]] = lower[j];
            out.upper[map[j]] = upper[j];
        }
    }
    for row in &lp.rows {
        let mut rhs = row.rhs;
        let mut coeffs = Vec::new();
        let (mut lo, mut hi) = (0.0, 0.0);
        for &(j, a) in &row.coeffs {
            if map[j] == usize::MAX {
                rhs -= a * lower[j];
            } else {
                coeffs.push((map[j], a));
                let (p, q) = (a * lower[j], a * upper[j]);
                lo += p.min(q);
                hi += p.max(q);
            }
        }
        let tol = 1e-9 * (1.0 + rhs.abs());
        let (can_fail_le, can_fail_ge) = (hi > rhs + tol, lo < rhs - tol);
        match row.sense {
            RowSense::Le if lo > rhs + tol => return None,
            RowSense::Ge if hi < rhs - tol => return None,
            RowSense::Eq if lo > rhs + tol || hi < rhs - tol => return None,
            RowSense::Le if !can_fail_le => continue,
            RowSense::Ge if !can_fail_ge => continue,
            RowSense::Eq if coeffs.is_empty() => continue,
            _ => {}
        }
        out.add_row(coeffs, row.sense, rhs);
    }
    Some(Reduced { lp: out, cols, constant })
}

/// Values below this are worth keeping or exploring.
fn cutoff(incumbent: f64) -> f64 {
    if incumbent.is_finite() {
        incumbent - BOUND_TOL * incumbent.abs().max(1.0)
    } else {
        incumbent
    }
}

fn is_integral(v: f64, tol: f64) -> bool {
    (v - v.round()).abs() <= tol
}

/// Rounds the integer entries of `x`; `None` if the result violates a row.
fn accept(milp: &Milp, x: &[f64], opts: &BnbOptions) -> Option<(Vec<f64>, f64)> {
    if x.len() != milp.lp.num_vars() {
        return None;
    }
    let mut x = x.to_vec();
    for (j, v) in x.iter_mut().enumerate() {
        if milp.integer[j] {
            if !is_integral(*v, opts.integrality_tol) {
                return None;
            }
            *v = v.round();
        }
    }
    if milp.lp.max_violation(&x) > opts.feasibility_tol {
        return None;
    }
    let obj = milp.lp.objective_value(&x);
    Some((x, obj))
}

/// Runs the search. `warm` is an optional starting incumbent; `heuristic`
/// may turn a fractional node solution into an integer candidate.
pub fn branch_and_bound(
    milp: &Milp,
    warm: Option<&[f64]>,
    heuristic: Option<Heuristic>,
    opts: &BnbOptions,
) -> BnbResult {
    let lp = milp.lp;
    let n = lp.num_vars();
    let mut result = BnbResult {
        status: BnbStatus::Infeasible,
        x: None,
        objective: f64::INFINITY,
        best_bound: f64::NEG_INFINITY,
        root_bound: None,
        nodes: 0,
        lp_iterations: 0,
        incumbents: Vec::new(),
    };
    let offer = |result: &mut BnbResult, cand: &[f64]| {
        if let Some((x, obj)) = accept(milp, cand, opts) {
            if obj < cutoff(result.objective) {
                log::debug!("incumbent {obj:.9}");
                result.objective = obj;
                result.x = Some(x);
                result.incumbents.push(obj);
            }
        }
    };
    if let Some(w) = warm {
        offer(&mut result, w);
    }
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        id: 0,
        bound: f64::NEG_INFINITY,
        lower: lp.lower.clone(),
        upper: lp.upper.clone(),
    });
    let mut next_id = 1;
    let mut exhausted = true;
    let mut unreliable = false;
    while let Some(mut node) = heap.pop() {
        let cutoff = cutoff(result.objective);
        if node.bound >= cutoff {
            continue;
        }
        if result.nodes >= opts.node_limit {
            heap.push(node);
            exhausted = false;
            break;
        }
        result.nodes += 1;
        if !propagate_bounds(lp, milp.integer, &mut node.lower, &mut node.upper, 20) {
            continue;
        }
        let Some(red) = reduce(lp, &node.lower, &node.upper) else {
            continue;
        };
        let sol = solve_lp(&red.lp, &opts.simplex);
        result.lp_iterations += sol.iterations;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                result.status = BnbStatus::Unbounded;
                return result;
            }
            LpStatus::IterationLimit => {
                unreliable = true;
                continue;
            }
        }
        let mut x = node.lower.clone();
        for (k, &j) in red.cols.iter().enumerate() {
            x[j] = sol.x[k];
        }
        let bound = sol.objective + red.constant;
        if node.id == 0 {
            result.root_bound = Some(bound);
        }
        log::trace!("node {} lp {:.9} incumbent {:.9}", node.id, bound, result.objective);
        if bound >= cutoff {
            continue;
        }
        let mut branch: Option<(u8, f64, usize)> = None;
        for j in 0..n {
            if !milp.integer[j] || is_integral(x[j], opts.integrality_tol) {
                continue;
            }
            let frac = x[j] - x[j].floor();
            let dist = (frac - 0.5).abs();
            let key = (milp.priority[j], dist, j);
            let better = match branch {
                None => true,
                Some((p, d, _)) => key.0 < p || (key.0 == p && dist < d - 1e-12),
            };
            if better {
                branch = Some(key);
            }
        }
        let Some((_, _, v)) = branch else {
            offer(&mut result, &x);
            continue;
        };
        if let Some(h) = heuristic {
            if let Some(cand) = h(&x) {
                offer(&mut result, &cand);
            }
        }
        let (mut down_upper, mut up_lower) = (node.upper.clone(), node.lower.clone());
        down_upper[v] = x[v].floor();
        up_lower[v] = x[v].ceil();
        heap.push(Node {
            id: next_id,
            bound,
            lower: node.lower,
            upper: down_upper,
        });
        heap.push(Node {
            id: next_id + 1,
            bound,
            lower: up_lower,
            upper: node.upper,
        });
        next_id += 2;
    }
    let open_bound = heap.iter().map(|nd| nd.bound).fold(f64::INFINITY, f64::min);
    result.best_bound = open_bound.min(result.objective);
    result.status = match (&result.x, exhausted && !unreliable) {
        (Some(_), true) => BnbStatus::Optimal,
        (None, true) => BnbStatus::Infeasible,
        _ => BnbStatus::NodeLimit,
    };
    if result.status == BnbStatus::Optimal {
        result.best_bound = result.objective;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn knapsack(values: &[f64], weights: &[f64], cap: f64) -> LinearProgram<f64> {
        let mut lp = LinearProgram::new(values.len());
        lp.objective = values.iter().map(|v| -v).collect();
        lp.upper = vec![1.0; values.len()];
        lp.add_row(weights.iter().cloned().enumerate().collect(), RowSense::Le, cap);
        lp
    }

    fn brute_knapsack(values: &[f64], weights: &[f64], cap: f64) -> f64 {
        let n = values.len();
        (0..1u32 << n)
            .filter(|mask| (0..n).filter(|j| mask >> j & 1 == 1).map(|j| weights[j]).sum::<f64>() <= cap + 1e-9)
            .map(|mask| -(0..n).filter(|j| mask >> j & 1 == 1).map(|j| values[j]).sum::<f64>())
            .fold(0.0, f64::min)
    }

    #[test]
    fn small_knapsack() {
        let lp = knapsack(&[10.0, 13.0, 7.0, 8.0], &[3.0, 4.0, 2.0, 3.0], 7.0);
        let integer = vec![true; 4];
        let priority = vec![0; 4];
        let r = branch_and_bound(&Milp { lp: &lp, integer: &integer, priority: &priority }, None, None, &BnbOptions::default());
        assert_eq!(r.status, BnbStatus::Optimal);
        assert!((r.objective + 23.0).abs() < 1e-9);
        assert!(r.root_bound.unwrap() <= r.objective + 1e-9);
        assert_eq!(r.gap(), 0.0);
    }

    #[test]
    fn infeasible_integer_program() {
        // 2x = 1 with x integer.
        let mut lp = LinearProgram::new(1);
        lp.upper = vec![5.0];
        lp.add_row(vec![(0, 2.0)], RowSense::Eq, 1.0);
        let r = branch_and_bound(&Milp { lp: &lp, integer: &[true], priority: &[0] }, None, None, &BnbOptions::default());
        assert_eq!(r.status, BnbStatus::Infeasible);
        assert!(r.x.is_none());
    }

    #[test]
    fn node_limit_reports_gap() {
        let values: Vec<f64> = (0..14).map(|k| 10.0 + (k * 7 % 5) as f64 + 0.1 * k as f64).collect();
        let weights: Vec<f64> = (0..14).map(|k| 3.0 + (k * 3 % 4) as f64 + 0.05 * k as f64).collect();
        let lp = knapsack(&values, &weights, 20.5);
        let integer = vec![true; 14];
        let priority = vec![0; 14];
        let milp = Milp { lp: &lp, integer: &integer, priority: &priority };
        let opts = BnbOptions { node_limit: 3, ..BnbOptions::default() };
        let r = branch_and_bound(&milp, None, None, &opts);
        assert_eq!(r.status, BnbStatus::NodeLimit);
        assert!(r.nodes <= 3);
        let full = branch_and_bound(&milp, None, None, &BnbOptions::default());
        assert_eq!(full.status, BnbStatus::Optimal);
        assert!(r.best_bound <= full.objective + 1e-9);
    }

    #[test]
    fn propagation_fixes_implied_binaries() {
        // 10 z ≤ 3 with z binary forces z = 0; -10 z ≤ -2 forces z = 1.
        let mut lp = LinearProgram::new(2);
        lp.upper = vec![1.0, 1.0];
        lp.add_row(vec![(0, 10.0)], RowSense::Le, 3.0);
        lp.add_row(vec![(1, -10.0)], RowSense::Le, -2.0);
        let (mut lo, mut up) = (lp.lower.clone(), lp.upper.clone());
        assert!(propagate_bounds(&lp, &[true, true], &mut lo, &mut up, 5));
        assert_eq!((lo[0], up[0]), (0.0, 0.0));
        assert_eq!((lo[1], up[1]), (1.0, 1.0));
        let mut lp2 = lp.clone();
        lp2.add_row(vec![(1, 1.0)], RowSense::Le, 0.5);
        let (mut lo, mut up) = (lp2.lower.clone(), lp2.upper.clone());
        assert!(!propagate_bounds(&lp2, &[true, true], &mut lo, &mut up, 5));
    }

    #[test]
    fn warm_start_and_heuristic_are_checked() {
        let lp = knapsack(&[10.0, 13.0, 7.0, 8.0], &[3.0, 4.0, 2.0, 3.0], 7.0);
        let integer = vec![true; 4];
        let priority = vec![0; 4];
        let milp = Milp { lp: &lp, integer: &integer, priority: &priority };
        // An infeasible warm start is ignored.
        let bogus = [1.0, 1.0, 1.0, 1.0];
        let bad: &dyn Fn(&[f64]) -> Option<Vec<f64>> = &|_| Some(vec![1.0; 4]);
        let r = branch_and_bound(&milp, Some(&bogus), Some(bad), &BnbOptions::default());
        assert!((r.objective + 23.0).abs() < 1e-9);
        // An optimal warm start is kept, and later incumbents only improve.
        let r = branch_and_bound(&milp, Some(&[1.0, 1.0, 0.0, 0.0]), None, &BnbOptions::default());
        assert_eq!(r.incumbents.first(), Some(&-23.0));
        assert!(r.incumbents.windows(2).all(|w| w[1] < w[0]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn knapsack_matches_brute_force(
            items in proptest::collection::vec((1.0f64..20.0, 1.0f64..10.0), 1..11),
            frac in 0.1f64..0.9,
        ) {
            let values: Vec<f64> = items.iter().map(|p| p.0).collect();
            let weights: Vec<f64> = items.iter().map(|p| p.1).collect();
            let cap = frac * weights.iter().sum::<f64>();
            let lp = knapsack(&values, &weights, cap);
            let integer = vec![true; values.len()];
            let priority = vec![0; values.len()];
            let r = branch_and_bound(&Milp { lp: &lp, integer: &integer, priority: &priority }, None, None, &BnbOptions::default());
            prop_assert_eq!(r.status, BnbStatus::Optimal);
            prop_assert!((r.objective - brute_knapsack(&values, &weights, cap)).abs() < 1e-6);
            prop_assert!(r.root_bound.unwrap() <= r.objective + 1e-7);
        }
    }
}
