//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spaceport_core::astro::{
    insertion_cost, launch_dv, plane_change_dv, EarthConstants, LaunchGeometry,
    TargetOrbit,
};
use spaceport_core::config::RunConfig;
use spaceport_core::forecast::{demand_or_default, holt_fit, holt_forecast, HoltParams};
use spaceport_core::geo::{azimuth_gap, GeoPoint};
use spaceport_core::hazard::{mission_corridors, AzimuthRule, FeasibleAzimuthSet, Footprint, RerouteParams};
use spaceport_core::ingest::{load_launch_history, CountyRecord};
use spaceport_core::missions::{
    apportion_demand, kmeans, silhouette_score, KMeansOptions, MissionType, TABLE_ONE,
};
use spaceport_core::plan::flow::allocate;
use spaceport_core::plan::model::{build_model, required_sites, Formulation, ScenarioWeights, SpflpModel};
use spaceport_core::plan::mps::{export_mps, parse_mps};
use spaceport_core::plan::oracle::{enumerate_oracle, OracleError, DEFAULT_ORACLE_CAP};
use spaceport_core::plan::simplex::{solve_lp, LinearProgram, LpStatus, RowSense, SimplexOptions};
use spaceport_core::plan::solve::{solve, SolveError, SolveOptions};
use spaceport_core::plan::verify::{verify_plan, PlanCheck};
use spaceport_core::scenario::{
    configuration_grid, demand_plan, run_sweep, to_json, Configuration, Datasets, Pipeline, ScenarioTag, Traffic,
};
use spaceport_core::synth::{launch_points, random_instance, RandomInstance};

type Outcome = Result<String, String>;
type Gate<'a> = (u32, &'static str, Option<Duration>, Box<dyn Fn() -> Outcome + 'a>);

fn fixture_config() -> RunConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/spaceport.toml");
    RunConfig::load(&path).expect("fixture config")
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// 1 -----------------------------------------------------------------------

fn astro_identities() -> Outcome {
    let c = EarthConstants::<f64>::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_lat = f64::INFINITY;
    for _ in 0..10_000 {
        let phi = rng.random_range(-90.0..=90.0);
        let psi = rng.random_range(0.0..360.0);
        let r = rng.random_range(6_500.0..45_000.0);
        let g = LaunchGeometry::new(phi, psi).unwrap();
        let res = insertion_cost(&g, &TargetOrbit { radius_km: r, inclination_deg: 45.0 }, &c).unwrap();
        let margin = res.achieved_inclination - phi.abs();
        worst_lat = worst_lat.min(margin);
        check(margin >= -1e-9, || format!("inclination {} below |lat| {}", res.achieved_inclination, phi.abs()))?;

        let v_o = (c.mu / r).sqrt();
        let pole = launch_dv(&LaunchGeometry::new(90.0, psi).unwrap(), r, &c).unwrap();
        check((pole - v_o).abs() <= 1e-12 * v_o, || format!("pole dv1 {pole} vs {v_o}"))?;

        let dv2 = plane_change_dv(res.achieved_inclination, res.achieved_inclination, r, &c).unwrap();
        check(dv2 == 0.0, || format!("dv2 {dv2} at equal inclinations"))?;

        let east = launch_dv(&LaunchGeometry::new(0.0, 90.0).unwrap(), r, &c).unwrap();
        let west = launch_dv(&LaunchGeometry::new(0.0, 270.0).unwrap(), r, &c).unwrap();
        let gap = 2.0 * c.omega * c.radius_km;
        check(((west - east) - gap).abs() <= 1e-12 * gap, || format!("east/west gap {} vs {gap}", west - east))?;
    }
    Ok(format!("10000 draws, min inclination margin {worst_lat:.3e} deg"))
}

// 2 -----------------------------------------------------------------------

/// Total Δv written out independently: speed matching along the launch
/// azimuth, inclination from the angular momentum of the inertial velocity,
/// single-impulse plane change.
fn brute_total(lat: f64, az: f64, r: f64, target_inc: f64, c: &EarthConstants<f64>) -> Option<f64> {
    let (phi, psi) = (lat.to_radians(), az.to_radians());
    let rot = c.omega * c.radius_km * phi.cos();
    let v_o2 = c.mu / r;
    if v_o2 <= rot * rot {
        return None;
    }
    let dv1 = (v_o2 - rot * rot).sqrt() - rot * psi.sin();
    let (ve, vn) = (dv1 * psi.sin() + rot, dv1 * psi.cos());
    // position (cosφ, 0, sinφ); east (0, 1, 0); north (−sinφ, 0, cosφ)
    let v = [-vn * phi.sin(), ve, vn * phi.cos()];
    let p = [phi.cos(), 0.0, phi.sin()];
    let h = [p[1] * v[2] - p[2] * v[1], p[2] * v[0] - p[0] * v[2], p[0] * v[1] - p[1] * v[0]];
    let hn = (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt();
    let inc = (h[2] / hn).clamp(-1.0, 1.0).acos().to_degrees();
    let dv2 = 2.0 * v_o2.sqrt() * ((inc - target_inc).abs().to_radians() / 2.0).sin();
    Some(dv1 + dv2)
}

fn azimuth_oracle() -> Outcome {
    let c = EarthConstants::<f64>::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let empty = |o: GeoPoint<f64>| Footprint::new(o, 1.0, std::iter::empty());
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let lat: f64 = rng.random_range(-60.0..60.0);
        let lon: f64 = rng.random_range(-180.0..180.0);
        let county = CountyRecord {
            fips: format!("{trial:05}"),
            name: "site".into(),
            state: "XX".into(),
            centroid: GeoPoint::new(lat, lon).unwrap(),
            mean_commute_minutes: 1.0,
            median_house_value_usd: 1.0,
        };
        let mission = if trial % 2 == 0 {
            let (a, inc, w, d) = TABLE_ONE[trial / 2 % 5];
            MissionType { index: 0, orbit_radius_km: a, inclination_deg: inc, weight: w, demand: d }
        } else {
            MissionType {
                index: 0,
                orbit_radius_km: rng.random_range(6_600.0..8_000.0),
                inclination_deg: rng.random_range(0.0..180.0),
                weight: 1.0,
                demand: 1,
            }
        };
        // Candidates: a random arc of the 0.1° grid (the whole circle every
        // fourth trial).
        let (start, width) = if trial % 4 == 0 {
            (0, 3600)
        } else {
            (rng.random_range(0..3600), rng.random_range(200..3600))
        };
        let grid: Vec<f64> = (0..width).map(|k| ((start + k) % 3600) as f64 / 10.0).collect();
        let feasible = FeasibleAzimuthSet { fips: county.fips.clone(), buffer_deg: 5.0, azimuths: grid.clone() };
        let chosen = mission_corridors(
            &county,
            &feasible,
            std::slice::from_ref(&mission),
            &empty(county.centroid),
            &empty(county.centroid),
            AzimuthRule::MinDv,
            &RerouteParams::default(),
            &c,
        )
        .map_err(|e| e.to_string())?[0]
            .as_ref()
            .ok_or("no corridor chosen")?
            .exposure
            .azimuth;

        let costs: Vec<(f64, f64)> = grid
            .iter()
            .filter_map(|&az| brute_total(lat, az, mission.orbit_radius_km, mission.inclination_deg, &c).map(|t| (az, t)))
            .collect();
        let best = costs.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let gap = costs
            .iter()
            .filter(|p| p.1 <= best + 1e-9)
            .map(|p| azimuth_gap(p.0, chosen))
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(gap);
        check(gap <= 0.1 + 1e-9, || {
            format!("trial {trial}: chosen {chosen} is {gap:.2} deg from the brute-force minimum")
        })?;
    }
    Ok(format!("100 pairs, largest distance to a brute-force minimizer {worst:.2} deg"))
}

// 3 -----------------------------------------------------------------------

fn holt_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let a: f64 = rng.random_range(-100.0..100.0);
        let b: f64 = rng.random_range(-10.0..10.0);
        let n = rng.random_range(2..40usize);
        let h = rng.random_range(1..20u32);
        let series: Vec<f64> = (0..n).map(|t| a + b * t as f64).collect();
        let params = HoltParams::new(rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0), h).unwrap();
        let state = holt_fit(&series, &params).map_err(|e| e.to_string())?;
        let expected = a + b * (n - 1 + h as usize) as f64;
        let err = (holt_forecast(&state, h) - expected).abs();
        worst = worst.max(err);
        check(err <= 1e-9, || format!("affine series forecast off by {err:e}"))?;
    }
    let cfg = fixture_config();
    let f = &cfg.forecast;
    let total = demand_or_default(None, f.alpha, f.beta, f.target_year, f.default_total).map_err(|e| e.to_string())?;
    check(total == 273, || format!("default demand {total}"))?;
    Ok(format!("50 affine series, max error {worst:.1e}; default demand {total}"))
}

// 4 -----------------------------------------------------------------------

fn max_centroid_error(centroids: &[[f64; 2]]) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, inc, _, _) in TABLE_ONE {
        let rel = centroids
            .iter()
            .map(|c| ((c[0] - a) / a).abs().max(((c[1] - inc) / inc).abs()))
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(rel);
    }
    worst
}

fn clustering_recovery() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/launches.csv");
    let launches = load_launch_history(&path).map_err(|e| e.to_string())?;
    check(launches.len() == 1000, || format!("{} launches in the fixture", launches.len()))?;
    let points: Vec<[f64; 2]> = launches.iter().map(|l| [l.semi_major_axis_km, l.inclination_deg]).collect();
    let opts = KMeansOptions::default();
    let model = kmeans(&points, 5, &opts).map_err(|e| e.to_string())?;
    let worst = max_centroid_error(&model.centroids);
    for (a, inc, _, _) in TABLE_ONE {
        let nearest = model
            .centroids
            .iter()
            .min_by(|p, q| {
                let d = |c: &[f64; 2]| ((c[0] - a) / a).powi(2) + ((c[1] - inc) / inc).powi(2);
                d(p).total_cmp(&d(q))
            })
            .unwrap();
        let rel = ((nearest[0] - a) / a).abs().max(((nearest[1] - inc) / inc).abs());
        check(rel <= 0.01, || format!("centroid ({a}, {inc}) recovered as {nearest:?}"))?;
    }
    let mut sil = BTreeMap::new();
    for m in 2..=5 {
        let fit = if m == 5 { model.clone() } else { kmeans(&points, m, &opts).map_err(|e| e.to_string())? };
        sil.insert(m, silhouette_score(&points, &fit).map_err(|e| e.to_string())?);
    }
    for m in 2..=4 {
        check(sil[&5] > sil[&m], || format!("silhouette(5) {} <= silhouette({m}) {}", sil[&5], sil[&m]))?;
    }
    // Not part of the gate: the same generator under other seeds. A type-4
    // point three sigma out in semi-major axis can sit nearer the type-2
    // centroid in (km, deg) space, which moves that centroid's inclination
    // by about 2%.
    let other = (1..=20u64)
        .filter(|&s| {
            let pts: Vec<[f64; 2]> = launch_points(1000, s).into_iter().map(|(_, a, i)| [a, i]).collect();
            kmeans(&pts, 5, &opts).is_ok_and(|m| max_centroid_error(&m.centroids) <= 0.01)
        })
        .count();
    Ok(format!(
        "max centroid error {:.3}%, silhouette m=2..5: {:.3} {:.3} {:.3} {:.3}; other seeds within 1%: {other}/20",
        100.0 * worst,
        sil[&2],
        sil[&3],
        sil[&4],
        sil[&5]
    ))
}

// 5 -----------------------------------------------------------------------

fn demand_bookkeeping() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let len = rng.random_range(1..12);
        let raw: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..1.0)).collect();
        let s: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|v| v / s).collect();
        let total = rng.random_range(0..10_000u32);
        let k = apportion_demand(total, &w).map_err(|e| e.to_string())?;
        let sum: u32 = k.iter().sum();
        check(sum == total, || format!("apportioned {k:?} sums to {sum}, not {total}"))?;
    }
    let cfg = fixture_config();
    let data = Datasets::load(&cfg).map_err(|e| e.to_string())?;
    let plan = demand_plan(&cfg, &data).map_err(|e| e.to_string())?;
    check(plan.demands() == [116, 17, 48, 84, 8], || format!("table demands {:?}", plan.demands()))?;
    check(required_sites(273, 52) == 6 && plan.sites == 6, || format!("K = {}", plan.sites))?;
    Ok("1000 weight vectors sum exactly; table demands give K = 6".into())
}

// 6 and 7 -----------------------------------------------------------------

struct Instance {
    seed: u64,
    inst: RandomInstance,
    weights: ScenarioWeights,
}

fn instances() -> Vec<Instance> {
    let tags = ScenarioTag::ALL;
    (0..50u64)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
            let n = rng.random_range(4..=12);
            let k = rng.random_range(1..=3);
            let p = rng.random_range(0.5..0.95);
            Instance {
                seed,
                inst: random_instance(600 + seed, n, 5, k, p),
                weights: tags[seed as usize % tags.len()].weights(),
            }
        })
        .collect()
}

fn model_of(i: &Instance, formulation: Formulation) -> SpflpModel {
    let mut params = i.inst.params;
    params.formulation = formulation;
    build_model(&i.inst.bundle, &i.inst.demands, &i.weights, &params).expect("random model")
}

fn solver_vs_oracle(list: &[Instance]) -> Outcome {
    let (mut feasible, mut infeasible) = (0, 0);
    for i in list {
        let model = model_of(i, Formulation::BigM);
        let oracle = enumerate_oracle(&model, &i.inst.bundle, DEFAULT_ORACLE_CAP);
        let solved = solve(&model, &i.inst.bundle, &SolveOptions::default());
        match (oracle, solved) {
            (Ok(o), Ok(s)) => {
                let diff = (o.solution.objective - s.objective).abs();
                check(diff <= 1e-6, || format!("instance {}: B&B {} vs oracle {}", i.seed, s.objective, o.solution.objective))?;
                let check_data = PlanCheck {
                    demands: &i.inst.demands,
                    sites: i.inst.params.sites,
                    capacity: i.inst.params.capacity,
                    separation_miles: i.inst.params.separation_miles,
                    weights: i.weights,
                };
                let v = verify_plan(&s, &i.inst.bundle, &check_data);
                check(v.is_empty(), || format!("instance {}: {}", i.seed, v[0]))?;
                feasible += 1;
            }
            (Err(OracleError::Infeasible), Err(SolveError::Infeasible(_))) => infeasible += 1,
            (o, s) => {
                return Err(format!(
                    "instance {}: oracle {:?} vs solver {:?}",
                    i.seed,
                    o.map(|r| r.solution.objective),
                    s.map(|r| r.objective)
                ))
            }
        }
    }
    check(feasible >= 25, || format!("only {feasible} feasible instances"))?;
    Ok(format!("{feasible} feasible instances agree, {infeasible} infeasible on both"))
}

fn formulations_agree(list: &[Instance]) -> Outcome {
    let mut compared = 0;
    for i in list {
        let a = solve(&model_of(i, Formulation::BigM), &i.inst.bundle, &SolveOptions::default());
        let b = solve(&model_of(i, Formulation::Conflict), &i.inst.bundle, &SolveOptions::default());
        match (a, b) {
            (Ok(a), Ok(b)) => {
                check((a.objective - b.objective).abs() <= 1e-6, || {
                    format!("instance {}: big-M {} vs conflict {}", i.seed, a.objective, b.objective)
                })?;
                compared += 1;
            }
            (Err(SolveError::Infeasible(_)), Err(SolveError::Infeasible(_))) => {}
            (a, b) => {
                return Err(format!(
                    "instance {}: big-M {:?} vs conflict {:?}",
                    i.seed,
                    a.map(|s| s.objective),
                    b.map(|s| s.objective)
                ))
            }
        }
    }
    Ok(format!("{compared} instances with equal optima"))
}

// 8 -----------------------------------------------------------------------

fn allocation_integrality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut optimal, mut infeasible) = (0, 0);
    for t in 0..100 {
        let n = rng.random_range(1..=8);
        let m = rng.random_range(1..=6);
        let demands: Vec<u32> = (0..m).map(|_| rng.random_range(0..=20)).collect();
        let total: u32 = demands.iter().sum();
        let capacity = (total.div_ceil(n as u32) + rng.random_range(0..=6)).max(1);
        let min_per_site = u32::from(t % 2 == 0);
        let mut allowed: Vec<Vec<bool>> = (0..n).map(|_| (0..m).map(|_| rng.random_bool(0.7)).collect()).collect();
        for row in &mut allowed {
            if !row.iter().any(|&a| a) {
                row[rng.random_range(0..m)] = true;
            }
        }
        let costs: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.random_range(0.0..10.0)).collect()).collect();

        let mut lp = LinearProgram::new(n * m);
        for i in 0..n {
            for j in 0..m {
                lp.objective[i * m + j] = costs[i][j];
                lp.upper[i * m + j] = if allowed[i][j] { f64::from(capacity) } else { 0.0 };
            }
            let site: Vec<(usize, f64)> = (0..m).map(|j| (i * m + j, 1.0)).collect();
            lp.add_row(site.clone(), RowSense::Le, f64::from(capacity));
            lp.add_row(site, RowSense::Ge, f64::from(min_per_site));
        }
        for (j, &k) in demands.iter().enumerate() {
            lp.add_row((0..n).map(|i| (i * m + j, 1.0)).collect(), RowSense::Ge, f64::from(k));
        }
        let relaxed = solve_lp(&lp, &SimplexOptions::default());
        let flow = allocate(&costs, &allowed, &demands, capacity, min_per_site);
        match (relaxed.status, flow) {
            (LpStatus::Optimal, Ok(a)) => {
                let diff = (relaxed.objective - a.cost).abs();
                check(diff <= 1e-9 * a.cost.abs().max(1.0), || {
                    format!("instance {t}: LP {} vs flow {}", relaxed.objective, a.cost)
                })?;
                optimal += 1;
            }
            (LpStatus::Infeasible, Err(_)) => infeasible += 1,
            (s, f) => return Err(format!("instance {t}: LP {s:?} vs flow {:?}", f.map(|a| a.cost))),
        }
    }
    Ok(format!("{optimal} instances equal, {infeasible} infeasible on both"))
}

// 9 -----------------------------------------------------------------------

fn hazard_monotonicity() -> Outcome {
    let cfg = fixture_config();
    let data = Datasets::load(&cfg).map_err(|e| e.to_string())?;
    let p = Pipeline::new(&cfg, &data).map_err(|e| e.to_string())?;
    let xis = [5.0, 7.5, 10.0];
    let sets: Vec<_> = xis.iter().map(|&x| p.feasible_sets(x).map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    for w in sets.windows(2) {
        for (wide, narrow) in w[1].iter().zip(w[0].iter()) {
            check(wide.azimuths.iter().all(|a| narrow.contains(*a)), || {
                format!("county {}: ξ={} set not inside ξ={} set", wide.fips, wide.buffer_deg, narrow.buffer_deg)
            })?;
        }
    }
    let tracks = &data.flights[&Traffic::Low];
    let (mut pops, mut flights) = (0, 0);
    for (i, county) in data.counties.iter().enumerate() {
        let range = p.range_km(i);
        let cells = Footprint::cells(county.centroid, range, &data.grid.cells);
        let fl = Footprint::flights(county.centroid, range, tracks);
        for step in 0..360 {
            let az = step as f64;
            let pop: Vec<u64> = xis.iter().map(|&x| cells.tag_sum(az, x).unwrap()).collect();
            check(pop.windows(2).all(|w| w[0] <= w[1]), || format!("county {} az {az}: population {pop:?}", county.fips))?;
            pops += 1;
            if step % 3 == 0 {
                let f: Vec<u64> = xis.iter().map(|&x| fl.distinct_tags(az, x).unwrap()).collect();
                check(f.windows(2).all(|w| w[0] <= w[1]), || format!("county {} az {az}: flights {f:?}", county.fips))?;
                flights += 1;
            }
        }
    }
    let sizes: Vec<usize> = sets.iter().map(|s| s.iter().map(|f| f.azimuths.len()).sum()).collect();
    Ok(format!(
        "sets nested for 30 counties (total azimuths {sizes:?}); {pops} population and {flights} flight triples monotone"
    ))
}

// 10 ----------------------------------------------------------------------

fn read_tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn sweep_shape() -> Outcome {
    let cfg = fixture_config();
    let data = Datasets::load(&cfg).map_err(|e| e.to_string())?;
    let grid = configuration_grid(&[5.0, 7.5, 10.0], &[Traffic::Low, Traffic::High], &ScenarioTag::ALL);
    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cache = work.path().join("cache");
    let mut trees = Vec::new();
    let mut rescans = Vec::new();
    let mut optimal = 0;
    for run in 0..2 {
        let p = Pipeline::new(&cfg, &data).map_err(|e| e.to_string())?.with_cache_dir(cache.clone());
        let report = run_sweep(&p, &grid);
        check(report.rows.len() == 24, || format!("{} rows", report.rows.len()))?;
        check(report.to_csv().lines().count() == 25, || "csv row count".into())?;
        optimal = report.rows.iter().filter(|r| r.solution.is_some()).count();
        let out = work.path().join(format!("run{run}"));
        report.write(&p, &out).map_err(|e| e.to_string())?;
        trees.push(read_tree(&out));
        rescans.push(p.cache_stats().scans_computed);
        if run == 0 {
            check(to_json(&report).len() > 2, || "empty report".into())?;
        }
    }
    check(trees[0] == trees[1], || "rerun output differs".into())?;
    check(rescans[1] == 0, || format!("rerun performed {} hazard scans", rescans[1]))?;
    Ok(format!(
        "24 rows ({optimal} solved), {} files byte-identical on rerun, hazard scans {} then {}",
        trees[0].len(),
        rescans[0],
        rescans[1]
    ))
}

// 11 ----------------------------------------------------------------------

const SCIPY_CHECK: &str = r#"
import sys
import numpy as np
from scipy.optimize import milp, LinearConstraint, Bounds
from scipy.sparse import lil_matrix

rows, cols, sense, rhs, obj, coef, integer = [], [], {}, {}, {}, {}, set()
lo, up = {}, {}
section, in_int = None, False
for line in open(sys.argv[1]):
    t = line.split()
    if not t:
        continue
    if not line[0].isspace():
        section = t[0]
        continue
    if section == "ROWS":
        if t[0] == "N":
            objrow = t[1]
        else:
            rows.append(t[1]); sense[t[1]] = t[0]
    elif section == "COLUMNS":
        if len(t) >= 3 and t[1] == "'MARKER'":
            in_int = t[2] == "'INTORG'"
            continue
        c = t[0]
        if c not in obj:
            cols.append(c); obj[c] = 0.0
        if in_int:
            integer.add(c)
        for r, v in zip(t[1::2], t[2::2]):
            if r == objrow:
                obj[c] = float(v)
            else:
                coef[(r, c)] = float(v)
    elif section == "RHS":
        for r, v in zip(t[1::2], t[2::2]):
            rhs[r] = float(v)
    elif section == "BOUNDS":
        kind, c = t[0], t[2]
        v = float(t[3]) if len(t) > 3 else None
        if kind == "LO": lo[c] = v
        elif kind == "UP": up[c] = v
        elif kind == "FX": lo[c] = up[c] = v
        elif kind == "PL": up[c] = np.inf
        elif kind == "MI": lo[c] = -np.inf
        elif kind == "BV": lo[c], up[c] = 0.0, 1.0

ci = {c: k for k, c in enumerate(cols)}
ri = {r: k for k, r in enumerate(rows)}
A = lil_matrix((len(rows), len(cols)))
for (r, c), v in coef.items():
    A[ri[r], ci[c]] = v
bl = np.array([-np.inf if sense[r] == "L" else rhs.get(r, 0.0) for r in rows])
bu = np.array([np.inf if sense[r] == "G" else rhs.get(r, 0.0) for r in rows])
res = milp(
    c=np.array([obj[c] for c in cols]),
    constraints=LinearConstraint(A.tocsr(), bl, bu),
    integrality=np.array([1 if c in integer else 0 for c in cols]),
    bounds=Bounds([lo.get(c, 0.0) for c in cols], [up.get(c, np.inf) for c in cols]),
    options={"mip_rel_gap": 0.0},
)
print("infeasible" if res.status == 2 else repr(res.fun) if res.success else "error " + res.message)
"#;

fn scipy_available() -> bool {
    Command::new("python3")
        .args(["-c", "import numpy, scipy.sparse; from scipy.optimize import milp"])
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn mps_round_trip(list: &[Instance]) -> Outcome {
    let cfg = fixture_config();
    let data = Datasets::load(&cfg).map_err(|e| e.to_string())?;
    let p = Pipeline::new(&cfg, &data).map_err(|e| e.to_string())?;
    let config = Configuration { buffer_deg: 5.0, traffic: Traffic::Low, scenario: ScenarioTag::S1 };
    let (fixture, bundle, _) = p.build(&config).map_err(|e| e.to_string())?;
    let mut models: Vec<(String, SpflpModel, Option<f64>)> = Vec::new();
    let fixture_obj = solve(&fixture, &bundle, &SolveOptions::default()).ok().map(|s| s.objective);
    models.push((config.id(), fixture, fixture_obj));
    for i in list.iter().take(10) {
        for f in [Formulation::BigM, Formulation::Conflict] {
            let m = model_of(i, f);
            let obj = solve(&m, &i.inst.bundle, &SolveOptions::default()).ok().map(|s| s.objective);
            models.push((format!("random{}_{f:?}", i.seed), m, obj));
        }
    }
    let external = scipy_available();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut matched = 0;
    for (name, model, obj) in &models {
        let text = export_mps(model, name);
        let parsed = parse_mps(&text).map_err(|e| format!("{name}: {e}"))?;
        check(parsed.lp == model.lp, || format!("{name}: re-parsed LP differs"))?;
        check(parsed.col_names == model.var_names && parsed.row_names == model.row_names, || {
            format!("{name}: names differ")
        })?;
        check(parsed.integer.len() == model.num_vars() && parsed.integer.iter().all(|&b| b), || {
            format!("{name}: integrality markers")
        })?;
        if external {
            let path = dir.path().join(format!("{name}.mps"));
            fs::write(&path, &text).map_err(|e| e.to_string())?;
            let out = Command::new("python3")
                .args(["-c", SCIPY_CHECK, path.to_str().unwrap()])
                .output()
                .map_err(|e| e.to_string())?;
            let answer = String::from_utf8_lossy(&out.stdout).trim().to_string();
            match (obj, answer.parse::<f64>()) {
                (Some(ours), Ok(theirs)) => {
                    check((ours - theirs).abs() <= 1e-6, || format!("{name}: ours {ours} vs scipy {theirs}"))?
                }
                (None, _) if answer == "infeasible" => {}
                _ => return Err(format!("{name}: ours {obj:?} vs scipy '{answer}' {}", String::from_utf8_lossy(&out.stderr))),
            }
            matched += 1;
        }
    }
    let ext = if external {
        format!("scipy MILP objective matched on {matched} models")
    } else {
        "external solver check SKIPPED (python3 with scipy not found)".into()
    };
    Ok(format!("{} models re-parsed exactly; {ext}", models.len()))
}

fn main() {
    let list = instances();
    let gates: Vec<Gate> = vec![
        (1, "astrodynamics identities", Some(Duration::from_secs(5)), Box::new(astro_identities)),
        (2, "azimuth scan oracle", Some(Duration::from_secs(30)), Box::new(azimuth_oracle)),
        (3, "Holt exactness", None, Box::new(holt_exactness)),
        (4, "clustering recovery", Some(Duration::from_secs(10)), Box::new(clustering_recovery)),
        (5, "demand bookkeeping", None, Box::new(demand_bookkeeping)),
        (6, "solver vs enumeration oracle", Some(Duration::from_secs(120)), Box::new(|| solver_vs_oracle(&list))),
        (7, "big-M vs conflict formulation", None, Box::new(|| formulations_agree(&list))),
        (8, "allocation integrality", None, Box::new(allocation_integrality)),
        (9, "hazard monotonicity", None, Box::new(hazard_monotonicity)),
        (10, "sweep shape and determinism", None, Box::new(sweep_shape)),
        (11, "MPS round trip", None, Box::new(|| mps_round_trip(&list))),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, limit, f) in gates {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(&f)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        });
        let took = start.elapsed();
        let result = match (result, limit) {
            (Ok(_), Some(l)) if took > l => Err(format!("took {:.1}s, limit {}s", took.as_secs_f64(), l.as_secs())),
            (r, _) => r,
        };
        let (tag, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {n:>2} {tag} {name} [{:.1}s]: {detail}", took.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
