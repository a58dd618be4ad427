//! Dense bounded-variable primal simplex.
//!
//! Variables carry finite lower bounds and possibly infinite upper bounds.
//! Nonbasic variables sit at one of their bounds, so bound constraints never
//! become tableau rows. Phase I minimizes the sum of artificial variables;
//! Phase II then pins artificials to zero and optimizes the real objective.
//! Pricing is Dantzig's rule, switching to Bland's rule after a run of
//! degenerate pivots so that the method cannot cycle.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row<T> {
    pub coeffs: Vec<(usize, T)>,
    pub sense: RowSense,
    pub rhs: T,
}

/// minimize cᵀx subject to the rows and `lower ≤ x ≤ upper`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram<T> {
    pub objective: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub rows: Vec<Row<T>>,
}

impl<T: Real> LinearProgram<T> {
    pub fn new(num_vars: usize) -> Self {
        Self {
            objective: vec![T::zero(); num_vars],
            lower: vec![T::zero(); num_vars],
            upper: vec![T::infinity(); num_vars],
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, T)>, sense: RowSense, rhs: T) {
        self.rows.push(Row { coeffs, sense, rhs });
    }

    pub fn objective_value(&self, x: &[T]) -> T {
        self.objective.iter().zip(x).map(|(&c, &v)| c * v).sum()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[T]) -> T {
        let mut worst = T::zero();
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for row in &self.rows {
            let act: T = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let v = match row.sense {
                RowSense::Le => act - row.rhs,
                RowSense::Ge => row.rhs - act,
                RowSense::Eq => (act - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    pub x: Vec<T>,
    pub objective: T,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub stall_threshold: usize,
    pub pivot_tol: f64,
    pub optimality_tol: f64,
    pub feasibility_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100_000,
            stall_threshold: 50,
            pivot_tol: 1e-9,
            optimality_tol: 1e-9,
            feasibility_tol: 1e-7,
        }
    }
}

struct Tableau<T> {
    rows: usize,
    cols: usize,
    a: Vec<T>,
    /// Values of the basic variables.
    beta: Vec<T>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    at_upper: Vec<bool>,
    upper: Vec<T>,
    cost: Vec<T>,
    reduced: Vec<T>,
    iterations: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Limit,
}

impl<T: Real> Tableau<T> {
    fn at(&self, i: usize, j: usize) -> T {
        self.a[i * self.cols + j]
    }

    fn price(&mut self) {
        for j in 0..self.cols {
            let mut d = self.cost[j];
            for i in 0..self.rows {
                let a = self.at(i, j);
                if a != T::zero() {
                    d -= self.cost[self.basis[i]] * a;
                }
            }
            self.reduced[j] = d;
        }
        for i in 0..self.rows {
            self.reduced[self.basis[i]] = T::zero();
        }
    }

    fn objective(&self) -> T {
        let mut z = T::zero();
        for i in 0..self.rows {
            z += self.cost[self.basis[i]] * self.beta[i];
        }
        for j in 0..self.cols {
            if !self.is_basic[j] && self.at_upper[j] {
                z += self.cost[j] * self.upper[j];
            }
        }
        z
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let cols = self.cols;
        let p = self.at(r, q);
        let row_r = r * cols;
        let mut nz = Vec::new();
        for j in 0..cols {
            let v = self.a[row_r + j] / p;
            self.a[row_r + j] = v;
            if v != T::zero() {
                nz.push(j);
            }
        }
        self.a[row_r + q] = T::one();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.a[i * cols + q];
            if f == T::zero() {
                continue;
            }
            for &j in &nz {
                let v = self.a[row_r + j];
                self.a[i * cols + j] -= f * v;
            }
            self.a[i * cols + q] = T::zero();
        }
        let f = self.reduced[q];
        if f != T::zero() {
            for &j in &nz {
                let v = self.a[row_r + j];
                self.reduced[j] -= f * v;
            }
            self.reduced[q] = T::zero();
        }
        let leaving = self.basis[r];
        self.is_basic[leaving] = false;
        self.is_basic[q] = true;
        self.basis[r] = q;
    }

    fn run(&mut self, opts: &SimplexOptions) -> Step {
        let ptol = T::lit(opts.pivot_tol);
        let otol = T::lit(opts.optimality_tol);
        let mut degenerate_run = 0usize;
        loop {
            if self.iterations >= opts.max_iterations {
                return Step::Limit;
            }
            let bland = degenerate_run >= opts.stall_threshold;
            // Entering variable.
            let mut enter: Option<(usize, T)> = None;
            for j in 0..self.cols {
                if self.is_basic[j] || self.upper[j] <= T::zero() {
                    continue;
                }
                let d = self.reduced[j];
                let score = if self.at_upper[j] { d } else { -d };
                if score > otol {
                    if bland {
                        enter = Some((j, score));
                        break;
                    }
                    if enter.is_none_or(|(_, s)| score > s) {
                        enter = Some((j, score));
                    }
                }
            }
            let Some((q, _)) = enter else {
                return Step::Optimal;
            };
            let dir = if self.at_upper[q] { -T::one() } else { T::one() };

            // Ratio test. `leave` holds (row, leaves_at_upper).
            let mut step = self.upper[q];
            let mut leave: Option<(usize, bool)> = None;
            let mut best_pivot = T::zero();
            for i in 0..self.rows {
                let alpha = dir * self.at(i, q);
                if alpha.abs() <= ptol {
                    continue;
                }
                let b = self.basis[i];
                let (limit, to_upper) = if alpha > T::zero() {
                    (self.beta[i] / alpha, false)
                } else {
                    let ub = self.upper[b];
                    if ub == T::infinity() {
                        continue;
                    }
                    ((ub - self.beta[i]) / -alpha, true)
                };
                let limit = limit.max(T::zero());
                // A tie with the entering variable's own bound keeps the
                // cheaper bound flip.
                let take = if limit < step - ptol {
                    true
                } else if limit <= step + ptol {
                    match leave {
                        Some((r, _)) if bland => b < self.basis[r],
                        Some(_) => alpha.abs() > best_pivot,
                        None => false,
                    }
                } else {
                    false
                };
                if take {
                    step = limit;
                    leave = Some((i, to_upper));
                    best_pivot = alpha.abs();
                }
            }
            if step == T::infinity() {
                return Step::Unbounded;
            }
            self.iterations += 1;
            if step <= ptol {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            for i in 0..self.rows {
                let a = self.at(i, q);
                if a != T::zero() {
                    self.beta[i] -= dir * a * step;
                }
            }
            match leave {
                None => {
                    self.at_upper[q] = !self.at_upper[q];
                }
                Some((r, to_upper)) => {
                    let entering_value = if self.at_upper[q] {
                        self.upper[q] - step
                    } else {
                        step
                    };
                    let leaving = self.basis[r];
                    self.pivot(r, q);
                    self.beta[r] = entering_value;
                    self.at_upper[q] = false;
                    self.at_upper[leaving] = to_upper;
                }
            }
        }
    }
}

/// Solves `lp`. Lower bounds must be finite.
pub fn solve_lp<T: Real>(lp: &LinearProgram<T>, opts: &SimplexOptions) -> LpSolution<T> {
    let n = lp.num_vars();
    let m = lp.rows.len();
    assert!(lp.lower.iter().all(|l| l.is_finite()), "lower bounds must be finite");
    let infeasible = |iterations| LpSolution {
        status: LpStatus::Infeasible,
        x: Vec::new(),
        objective: T::infinity(),
        iterations,
    };
    let mut shifted_upper = Vec::with_capacity(n);
    for j in 0..n {
        let u = lp.upper[j] - lp.lower[j];
        if u < -T::lit(opts.feasibility_tol) {
            return infeasible(0);
        }
        shifted_upper.push(u.max(T::zero()));
    }

    // Column layout: structural | slacks | artificials.
    let slack_of: Vec<Option<usize>> = {
        let mut next = n;
        lp.rows
            .iter()
            .map(|r| match r.sense {
                RowSense::Eq => None,
                _ => {
                    next += 1;
                    Some(next - 1)
                }
            })
            .collect()
    };
    let num_slack = slack_of.iter().flatten().count();
    let mut rhs = Vec::with_capacity(m);
    let mut sign = Vec::with_capacity(m);
    for row in &lp.rows {
        let shift: T = row.coeffs.iter().map(|&(j, a)| a * lp.lower[j]).sum();
        let b = row.rhs - shift;
        let s = if b < T::zero() { -T::one() } else { T::one() };
        rhs.push(b * s);
        sign.push(s);
    }
    let needs_art: Vec<bool> = (0..m)
        .map(|i| match lp.rows[i].sense {
            RowSense::Eq => true,
            RowSense::Le => sign[i] < T::zero(),
            RowSense::Ge => sign[i] > T::zero(),
        })
        .collect();
    let num_art = needs_art.iter().filter(|&&b| b).count();
    let cols = n + num_slack + num_art;

    let mut t = Tableau {
        rows: m,
        cols,
        a: vec![T::zero(); m * cols],
        beta: rhs.clone(),
        basis: vec![0; m],
        is_basic: vec![false; cols],
        at_upper: vec![false; cols],
        upper: vec![T::infinity(); cols],
        cost: vec![T::zero(); cols],
        reduced: vec![T::zero(); cols],
        iterations: 0,
    };
    t.upper[..n].copy_from_slice(&shifted_upper);
    let mut next_art = n + num_slack;
    for (i, row) in lp.rows.iter().enumerate() {
        for &(j, a) in &row.coeffs {
            t.a[i * cols + j] += a * sign[i];
        }
        if let Some(s) = slack_of[i] {
            let coef = if row.sense == RowSense::Le { T::one() } else { -T::one() };
            t.a[i * cols + s] = coef * sign[i];
        }
        if needs_art[i] {
            t.a[i * cols + next_art] = T::one();
            t.basis[i] = next_art;
            next_art += 1;
        } else {
            t.basis[i] = slack_of[i].expect("row without artificial has a slack");
        }
        t.is_basic[t.basis[i]] = true;
    }

    if num_art > 0 {
        for j in n + num_slack..cols {
            t.cost[j] = T::one();
        }
        t.price();
        match t.run(opts) {
            Step::Limit => {
                return LpSolution {
                    status: LpStatus::IterationLimit,
                    x: Vec::new(),
                    objective: T::nan(),
                    iterations: t.iterations,
                }
            }
            Step::Unbounded => unreachable!("phase one objective is bounded below"),
            Step::Optimal => {}
        }
        let scale = T::one() + rhs.iter().fold(T::zero(), |acc, &b| acc.max(b));
        if t.objective() > T::lit(opts.feasibility_tol) * scale {
            return infeasible(t.iterations);
        }
        for j in n + num_slack..cols {
            t.cost[j] = T::zero();
            t.upper[j] = T::zero();
            t.at_upper[j] = false;
        }
    }
    t.cost[..n].copy_from_slice(&lp.objective);
    t.price();
    let status = match t.run(opts) {
        Step::Optimal => LpStatus::Optimal,
        Step::Unbounded => LpStatus::Unbounded,
        Step::Limit => LpStatus::IterationLimit,
    };
    let mut x: Vec<T> = (0..n)
        .map(|j| if t.at_upper[j] { t.upper[j] } else { T::zero() })
        .collect();
    for i in 0..m {
        if t.basis[i] < n {
            x[t.basis[i]] = t.beta[i];
        }
    }
    for j in 0..n {
        x[j] = (x[j] + lp.lower[j]).max(lp.lower[j]).min(lp.upper[j]);
    }
    let objective = lp.objective_value(&x);
    LpSolution {
        status,
        x,
        objective,
        iterations: t.iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn opts() -> SimplexOptions {
        SimplexOptions::default()
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y st x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36
        let mut lp = LinearProgram::<f64>::new(2);
        lp.objective = vec![-3.0, -5.0];
        lp.add_row(vec![(0, 1.0)], RowSense::Le, 4.0);
        lp.add_row(vec![(1, 2.0)], RowSense::Le, 12.0);
        lp.add_row(vec![(0, 3.0), (1, 2.0)], RowSense::Le, 18.0);
        let s = solve_lp(&lp, &opts());
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 36.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn bounds_equalities_and_phase_one() {
        // min x + 2y st x + y = 5, x ≥ 1, y ∈ [0, 3], x ≤ 3.5
        let mut lp = LinearProgram::<f64>::new(2);
        lp.objective = vec![1.0, 2.0];
        lp.lower = vec![1.0, 0.0];
        lp.upper = vec![3.5, 3.0];
        lp.add_row(vec![(0, 1.0), (1, 1.0)], RowSense::Eq, 5.0);
        let s = solve_lp(&lp, &opts());
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 3.5).abs() < 1e-9);
        assert!((s.objective - 6.5).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::<f64>::new(1);
        lp.upper = vec![1.0];
        lp.add_row(vec![(0, 1.0)], RowSense::Ge, 2.0);
        assert_eq!(solve_lp(&lp, &opts()).status, LpStatus::Infeasible);
        let mut lp = LinearProgram::<f64>::new(2);
        lp.objective = vec![-1.0, 0.0];
        lp.add_row(vec![(0, 1.0), (1, -1.0)], RowSense::Le, 1.0);
        assert_eq!(solve_lp(&lp, &opts()).status, LpStatus::Unbounded);
    }

    #[test]
    fn degenerate_problem_terminates_under_bland() {
        // Beale's cycling example.
        let mut lp = LinearProgram::<f64>::new(4);
        lp.objective = vec![-0.75, 150.0, -0.02, 6.0];
        lp.add_row(vec![(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], RowSense::Le, 0.0);
        lp.add_row(vec![(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], RowSense::Le, 0.0);
        lp.add_row(vec![(2, 1.0)], RowSense::Le, 1.0);
        let s = solve_lp(
            &lp,
            &SimplexOptions {
                stall_threshold: 0,
                ..opts()
            },
        );
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 0.05).abs() < 1e-9);
    }

    #[test]
    fn generic_over_f32() {
        let mut lp = LinearProgram::<f32>::new(2);
        lp.objective = vec![-1.0, -1.0];
        lp.add_row(vec![(0, 1.0), (1, 2.0)], RowSense::Le, 4.0);
        lp.add_row(vec![(0, 3.0), (1, 1.0)], RowSense::Le, 6.0);
        let s = solve_lp(&lp, &SimplexOptions::default());
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 2.8).abs() < 1e-5);
    }

    /// Brute force over all vertices of a 2-variable LP: intersect every pair
    /// of constraint/bound lines and keep the best feasible point.
    fn vertex_enumeration(lp: &LinearProgram<f64>) -> Option<f64> {
        let mut lines: Vec<([f64; 2], f64)> = lp
            .rows
            .iter()
            .map(|r| {
                let mut a = [0.0; 2];
                for &(j, v) in &r.coeffs {
                    a[j] += v;
                }
                (a, r.rhs)
            })
            .collect();
        for j in 0..2 {
            let mut e = [0.0; 2];
            e[j] = 1.0;
            lines.push((e, lp.lower[j]));
            lines.push((e, lp.upper[j]));
        }
        let mut best: Option<f64> = None;
        for p in 0..lines.len() {
            for q in p + 1..lines.len() {
                let (a, b) = (lines[p].0, lines[q].0);
                let det = a[0] * b[1] - a[1] * b[0];
                if det.abs() < 1e-9 {
                    continue;
                }
                let x = [
                    (lines[p].1 * b[1] - a[1] * lines[q].1) / det,
                    (a[0] * lines[q].1 - lines[p].1 * b[0]) / det,
                ];
                if lp.max_violation(&x) <= 1e-7 {
                    let v = lp.objective_value(&x);
                    if best.is_none_or(|b| v < b) {
                        best = Some(v);
                    }
                }
            }
        }
        best
    }

    proptest! {
        #[test]
        fn matches_vertex_enumeration(
            c in proptest::collection::vec(-5.0f64..5.0, 2),
            rows in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -10.0f64..10.0, 0usize..3), 1..6),
        ) {
            let mut lp = LinearProgram::<f64>::new(2);
            lp.objective = c;
            lp.lower = vec![-3.0, -2.0];
            lp.upper = vec![4.0, 5.0];
            for (a, b, rhs, s) in rows {
                let sense = [RowSense::Le, RowSense::Ge, RowSense::Eq][s];
                lp.add_row(vec![(0, a), (1, b)], sense, rhs);
            }
            let s = solve_lp(&lp, &SimplexOptions::default());
            match vertex_enumeration(&lp) {
                None => prop_assert_eq!(s.status, LpStatus::Infeasible),
                Some(v) => {
                    prop_assert_eq!(s.status, LpStatus::Optimal);
                    prop_assert!((s.objective - v).abs() < 1e-6, "{} vs {}", s.objective, v);
                    prop_assert!(lp.max_violation(&s.x) < 1e-7);
                }
            }
        }
    }
}
