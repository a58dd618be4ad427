//! Mission allocation for a fixed set of sites, as a min-cost circulation.
//!
//! ```text
//!   S ──[1, P]──▶ site i ──[0, P], c_ij──▶ mission j ──[k_j, ∞)──▶ T
//!   ▲                                                              │
//!   └───────────────────────────[0, ∞)─────────────────────────────┘
//! ```
//!
//! Lower bounds are removed the usual way (edge capacity minus lower bound,
//! imbalances routed from a super source to a super sink), and the result is
//! solved by successive shortest paths. All capacities are integers, so the
//! optimal flow is integral.

use std::collections::VecDeque;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AllocationError {
    #[error("site {0} admits no mission type")]
    NoMission(usize),
    #[error("costs must be finite and non-negative")]
    Cost,
    #[error("demand and per-site minimum cannot be met within capacity")]
    Infeasible,
    #[error("cost matrix shape does not match {sites} sites x {missions} missions")]
    Shape { sites: usize, missions: usize },
}

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    cap: i64,
    cost: f64,
}

/// Residual network solved by successive shortest paths (SPFA).
#[derive(Debug, Clone, Default)]
pub struct MinCostFlow {
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
}

impl MinCostFlow {
    pub fn new(nodes: usize) -> Self {
        Self {
            edges: Vec::new(),
            adj: vec![Vec::new(); nodes],
        }
    }

    /// Adds `u → v` and its residual twin; returns the forward edge id.
    pub fn add_edge(&mut self, u: usize, v: usize, cap: i64, cost: f64) -> usize {
        let id = self.edges.len();
        self.edges.push(Edge { to: v, cap, cost });
        self.edges.push(Edge {
            to: u,
            cap: 0,
            cost: -cost,
        });
        self.adj[u].push(id);
        self.adj[v].push(id + 1);
        id
    }

    /// Flow currently carried by forward edge `id`.
    pub fn flow(&self, id: usize) -> i64 {
        self.edges[id + 1].cap
    }

    /// Sends up to `limit` units from `s` to `t` along cheapest paths.
    /// Returns (flow sent, cost).
    pub fn run(&mut self, s: usize, t: usize, limit: i64) -> (i64, f64) {
        let n = self.adj.len();
        let mut sent = 0i64;
        let mut total = 0.0;
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        let mut queued = vec![false; n];
        let mut queue = VecDeque::new();
        while sent < limit {
            dist.fill(f64::INFINITY);
            prev.fill(usize::MAX);
            dist[s] = 0.0;
            queue.push_back(s);
            queued[s] = true;
            while let Some(u) = queue.pop_front() {
                queued[u] = false;
                for &e in &self.adj[u] {
                    let edge = &self.edges[e];
                    if edge.cap <= 0 {
                        continue;
                    }
                    let nd = dist[u] + edge.cost;
                    if nd < dist[edge.to] - 1e-12 {
                        dist[edge.to] = nd;
                        prev[edge.to] = e;
                        if !queued[edge.to] {
                            queued[edge.to] = true;
                            queue.push_back(edge.to);
                        }
                    }
                }
            }
            if !dist[t].is_finite() {
                break;
            }
            let mut push = limit - sent;
            let mut v = t;
            while v != s {
                let e = prev[v];
                push = push.min(self.edges[e].cap);
                v = self.edges[e ^ 1].to;
            }
            let mut v = t;
            while v != s {
                let e = prev[v];
                self.edges[e].cap -= push;
                self.edges[e ^ 1].cap += push;
                v = self.edges[e ^ 1].to;
            }
            sent += push;
            total += push as f64 * dist[t];
        }
        (sent, total)
    }
}

/// Cheapest integral allocation `y[site][mission]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub launches: Vec<Vec<u32>>,
    pub cost: f64,
}

/// Allocates mission demand to `costs.len()` open sites: each site serves
/// between `min_per_site` and `capacity` launches, each mission j receives at
/// least `demands[j]`, and `allowed[i][j] = false` forbids a pair.
pub fn allocate(
    costs: &[Vec<f64>],
    allowed: &[Vec<bool>],
    demands: &[u32],
    capacity: u32,
    min_per_site: u32,
) -> Result<Allocation, AllocationError> {
    let sites = costs.len();
    let missions = demands.len();
    if allowed.len() != sites || costs.iter().any(|r| r.len() != missions) || allowed.iter().any(|r| r.len() != missions)
    {
        return Err(AllocationError::Shape { sites, missions });
    }
    for (i, row) in allowed.iter().enumerate() {
        if !row.iter().any(|&a| a) {
            return Err(AllocationError::NoMission(i));
        }
    }
    if costs.iter().flatten().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(AllocationError::Cost);
    }
    if min_per_site > capacity {
        return Err(AllocationError::Infeasible);
    }
    let cap = i64::from(capacity);
    let big = cap * sites as i64 + demands.iter().map(|&k| i64::from(k)).sum::<i64>() + 1;
    let (s, t) = (0, 1);
    let site_node = |i: usize| 2 + i;
    let mission_node = |j: usize| 2 + sites + j;
    let (ss, tt) = (2 + sites + missions, 3 + sites + missions);
    let mut g = MinCostFlow::new(4 + sites + missions);
    let mut excess = vec![0i64; 4 + sites + missions];
    let lo = i64::from(min_per_site);
    for i in 0..sites {
        g.add_edge(s, site_node(i), cap - lo, 0.0);
        excess[site_node(i)] += lo;
        excess[s] -= lo;
    }
    let mut pair_edges = vec![vec![usize::MAX; missions]; sites];
    for i in 0..sites {
        for j in 0..missions {
            if allowed[i][j] {
                pair_edges[i][j] = g.add_edge(site_node(i), mission_node(j), cap, costs[i][j]);
            }
        }
    }
    for (j, &k) in demands.iter().enumerate() {
        let k = i64::from(k);
        g.add_edge(mission_node(j), t, big - k, 0.0);
        excess[t] += k;
        excess[mission_node(j)] -= k;
    }
    g.add_edge(t, s, big, 0.0);
    let mut required = 0;
    for (v, &e) in excess.iter().enumerate() {
        if e > 0 {
            g.add_edge(ss, v, e, 0.0);
            required += e;
        } else if e < 0 {
            g.add_edge(v, tt, -e, 0.0);
        }
    }
    let (sent, _) = g.run(ss, tt, required);
    if sent < required {
        return Err(AllocationError::Infeasible);
    }
    let mut launches = vec![vec![0u32; missions]; sites];
    let mut cost = 0.0;
    for i in 0..sites {
        for j in 0..missions {
            if pair_edges[i][j] != usize::MAX {
                let f = g.flow(pair_edges[i][j]);
                launches[i][j] = f as u32;
                cost += f as f64 * costs[i][j];
            }
        }
    }
    Ok(Allocation { launches, cost })
}
