//! Mission types from historical launches: k-means over (semi-major axis,
//! inclination), silhouette scoring, and apportioning a total demand across
//! the resulting types.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::astro::TargetOrbit;
use crate::scalar::Real;

pub const DEFAULT_CLUSTERS: usize = 5;
pub const DEFAULT_SEED: u64 = 42;
const MAX_ITERATIONS: usize = 300;
const DEFAULT_RESTARTS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MissionError {
    #[error("cluster count must be at least 1")]
    NoClusters,
    #[error("{clusters} clusters requested but only {distinct} distinct points")]
    TooFewPoints { clusters: usize, distinct: usize },
    #[error("silhouette needs at least 2 clusters, got {0}")]
    SilhouetteClusters(usize),
    #[error("weight {index} is negative ({value})")]
    NegativeWeight { index: usize, value: f64 },
    #[error("weights sum to {0}, expected 1")]
    WeightSum(f64),
    #[error("model has {model} assignments for {points} points")]
    Mismatch { model: usize, points: usize },
}

/// A mission profile: target orbit plus its share of the annual demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionType<T> {
    pub index: usize,
    pub orbit_radius_km: T,
    pub inclination_deg: T,
    pub weight: T,
    pub demand: u32,
}

impl<T: Real> MissionType<T> {
    pub fn orbit(&self) -> TargetOrbit<T> {
        TargetOrbit {
            radius_km: self.orbit_radius_km,
            inclination_deg: self.inclination_deg,
        }
    }
}

/// Mission types as tabulated from historical launch clustering: cluster
/// mean semi-major axis (km), inclination (deg), weight, and annual demand.
pub const TABLE_ONE: [(f64, f64, f64, u32); 5] = [
    (6694.72, 54.34, 0.42, 116),
    (6990.01, 43.30, 0.06, 17),
    (7187.32, 97.78, 0.18, 48),
    (6893.20, 95.91, 0.31, 84),
    (7649.00, 75.46, 0.03, 8),
];

/// The tabulated mission types with their listed demands taken verbatim.
pub fn table_one_missions<T: Real>() -> Vec<MissionType<T>> {
    TABLE_ONE
        .iter()
        .enumerate()
        .map(|(index, &(a, inc, w, k))| MissionType {
            index,
            orbit_radius_km: T::lit(a),
            inclination_deg: T::lit(inc),
            weight: T::lit(w),
            demand: k,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel<T, const D: usize> {
    pub centroids: Vec<[T; D]>,
    pub assignment: Vec<usize>,
    pub inertia: T,
    pub iterations: usize,
}

impl<T: Real, const D: usize> ClusterModel<T, D> {
    pub fn clusters(&self) -> usize {
        self.centroids.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centroids.len()];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    /// Cluster shares of the data set, in cluster order.
    pub fn weights(&self) -> Vec<T> {
        let n = T::from_usize_lossy(self.assignment.len().max(1));
        self.sizes()
            .into_iter()
            .map(|s| T::from_usize_lossy(s) / n)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansOptions {
    pub seed: u64,
    /// Independent k-means++ starts; the lowest-inertia run is kept.
    pub restarts: usize,
    pub max_iterations: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            restarts: DEFAULT_RESTARTS,
            max_iterations: MAX_ITERATIONS,
        }
    }
}

fn sq_dist<T: Real, const D: usize>(a: &[T; D], b: &[T; D]) -> T {
    a.iter().zip(b).map(|(x, y)| (*x - *y) * (*x - *y)).sum()
}

fn dist<T: Real, const D: usize>(a: &[T; D], b: &[T; D]) -> T {
    sq_dist(a, b).sqrt()
}

fn nearest<T: Real, const D: usize>(p: &[T; D], centroids: &[[T; D]]) -> (usize, T) {
    let mut best = (0, T::infinity());
    for (k, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

fn distinct_count<T: Real, const D: usize>(points: &[[T; D]], cap: usize) -> usize {
    let mut seen: Vec<&[T; D]> = Vec::new();
    for p in points {
        if !seen.contains(&p) {
            seen.push(p);
            if seen.len() >= cap {
                break;
            }
        }
    }
    seen.len()
}

/// k-means with k-means++ seeding and Lloyd iterations. Deterministic for a
/// given seed. Labels are canonicalized by ascending first coordinate.
pub fn kmeans<T: Real, const D: usize>(
    points: &[[T; D]],
    m: usize,
    opts: &KMeansOptions,
) -> Result<ClusterModel<T, D>, MissionError> {
    if m == 0 {
        return Err(MissionError::NoClusters);
    }
    let distinct = distinct_count(points, m);
    if distinct < m {
        return Err(MissionError::TooFewPoints {
            clusters: m,
            distinct,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<ClusterModel<T, D>> = None;
    for _ in 0..opts.restarts.max(1) {
        let init = plus_plus_seed(points, m, &mut rng);
        let model = lloyd(points, init, opts.max_iterations);
        if best.as_ref().is_none_or(|b| model.inertia < b.inertia) {
            best = Some(model);
        }
    }
    Ok(canonicalize(best.expect("at least one restart")))
}

fn plus_plus_seed<T: Real, const D: usize>(points: &[[T; D]], m: usize, rng: &mut ChaCha8Rng) -> Vec<[T; D]> {
    let n = points.len();
    let mut centroids = vec![points[rng.random_range(0..n)]];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0]).as_f64()).collect();
    while centroids.len() < m {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            // Rounding can land on an already-chosen point; take the
            // farthest instead.
            if d2[chosen] == 0.0 {
                chosen = argmax(&d2);
            }
            chosen
        } else {
            argmax(&d2)
        };
        let c = points[pick];
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &c).as_f64());
        }
        centroids.push(c);
    }
    centroids
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn lloyd<T: Real, const D: usize>(points: &[[T; D]], mut centroids: Vec<[T; D]>, cap: usize) -> ClusterModel<T, D> {
    let m = centroids.len();
    let mut assignment: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut sums = vec![[T::zero(); D]; m];
        let mut counts = vec![0usize; m];
        for (p, &c) in points.iter().zip(&assignment) {
            counts[c] += 1;
            for k in 0..D {
                sums[c][k] += p[k];
            }
        }
        for c in 0..m {
            if counts[c] > 0 {
                let n = T::from_usize_lossy(counts[c]);
                for k in 0..D {
                    centroids[c][k] = sums[c][k] / n;
                }
            } else {
                // Empty cluster: move it onto the point worst served now.
                let far = points
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (i, sq_dist(p, &centroids[assignment[i]])))
                    .fold((0, T::neg_infinity()), |acc, x| if x.1 > acc.1 { x } else { acc });
                centroids[c] = points[far.0];
                assignment[far.0] = c;
            }
        }
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let (c, _) = nearest(p, &centroids);
            if c != assignment[i] {
                assignment[i] = c;
                changed = true;
            }
        }
        if !changed || iterations >= cap {
            break;
        }
    }
    let inertia = inertia(points, &centroids, &assignment);
    ClusterModel {
        centroids,
        assignment,
        inertia,
        iterations,
    }
}

/// Sum of squared distances from points to their assigned centroids.
pub fn inertia<T: Real, const D: usize>(points: &[[T; D]], centroids: &[[T; D]], assignment: &[usize]) -> T {
    points
        .iter()
        .zip(assignment)
        .map(|(p, &c)| sq_dist(p, &centroids[c]))
        .sum()
}

fn canonicalize<T: Real, const D: usize>(model: ClusterModel<T, D>) -> ClusterModel<T, D> {
    let mut order: Vec<usize> = (0..model.centroids.len()).collect();
    order.sort_by(|&a, &b| {
        let (ca, cb) = (&model.centroids[a], &model.centroids[b]);
        ca.iter()
            .zip(cb.iter())
            .map(|(x, y)| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut relabel = vec![0; order.len()];
    for (new, &old) in order.iter().enumerate() {
        relabel[old] = new;
    }
    ClusterModel {
        centroids: order.iter().map(|&o| model.centroids[o]).collect(),
        assignment: model.assignment.iter().map(|&c| relabel[c]).collect(),
        inertia: model.inertia,
        iterations: model.iterations,
    }
}

/// Mean silhouette over all points. Points in singleton clusters score 0.
pub fn silhouette_score<T: Real, const D: usize>(
    points: &[[T; D]],
    model: &ClusterModel<T, D>,
) -> Result<T, MissionError> {
    let m = model.clusters();
    if m < 2 {
        return Err(MissionError::SilhouetteClusters(m));
    }
    if model.assignment.len() != points.len() {
        return Err(MissionError::Mismatch {
            model: model.assignment.len(),
            points: points.len(),
        });
    }
    let sizes = model.sizes();
    let mut total = T::zero();
    let mut sums = vec![T::zero(); m];
    for (i, p) in points.iter().enumerate() {
        sums.iter_mut().for_each(|s| *s = T::zero());
        for (j, q) in points.iter().enumerate() {
            if i != j {
                sums[model.assignment[j]] += dist(p, q);
            }
        }
        let own = model.assignment[i];
        if sizes[own] <= 1 {
            continue;
        }
        let a = sums[own] / T::from_usize_lossy(sizes[own] - 1);
        let b = (0..m)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / T::from_usize_lossy(sizes[c]))
            .fold(T::infinity(), T::min);
        let denom = a.max(b);
        if denom > T::zero() && b.is_finite() {
            total += (b - a) / denom;
        }
    }
    Ok(total / T::from_usize_lossy(points.len()))
}

/// Splits `total` across `weights` by largest remainder; ties go to the lower
/// index. The result always sums to `total`.
pub fn apportion_demand<T: Real>(total: u32, weights: &[T]) -> Result<Vec<u32>, MissionError> {
    for (index, w) in weights.iter().enumerate() {
        if !(*w >= T::zero()) {
            return Err(MissionError::NegativeWeight {
                index,
                value: w.as_f64(),
            });
        }
    }
    let sum: f64 = weights.iter().map(|w| w.as_f64()).sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(MissionError::WeightSum(sum));
    }
    let quotas: Vec<f64> = weights.iter().map(|w| w.as_f64() * f64::from(total)).collect();
    let mut out: Vec<u32> = quotas.iter().map(|q| q.floor() as u32).collect();
    let assigned: u32 = out.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    let short = total.saturating_sub(assigned) as usize;
    for &i in order.iter().cycle().take(short) {
        out[i] += 1;
    }
    Ok(out)
}

/// Mission types from a fitted cluster model and a total annual demand.
/// Each type's orbit radius is its cluster's mean semi-major axis.
pub fn mission_types<T: Real>(model: &ClusterModel<T, 2>, total: u32) -> Result<Vec<MissionType<T>>, MissionError> {
    let weights = model.weights();
    let demands = apportion_demand(total, &weights)?;
    Ok(model
        .centroids
        .iter()
        .zip(weights)
        .zip(demands)
        .enumerate()
        .map(|(index, ((c, weight), demand))| MissionType {
            index,
            orbit_radius_km: c[0],
            inclination_deg: c[1],
            weight,
            demand,
        })
        .collect())
}

/// Per-feature z-scores (population standard deviation); constant features
/// are only centred.
pub fn standardize<T: Real, const D: usize>(points: &[[T; D]]) -> Vec<[T; D]> {
    let n = T::from_usize_lossy(points.len().max(1));
    let mut mean = [T::zero(); D];
    for p in points {
        for k in 0..D {
            mean[k] += p[k] / n;
        }
    }
    let mut sd = [T::zero(); D];
    for p in points {
        for k in 0..D {
            sd[k] += (p[k] - mean[k]) * (p[k] - mean[k]) / n;
        }
    }
    points
        .iter()
        .map(|p| {
            let mut q = *p;
            for k in 0..D {
                let s = sd[k].sqrt();
                q[k] = if s > T::zero() { (p[k] - mean[k]) / s } else { p[k] - mean[k] };
            }
            q
        })
        .collect()
}
