use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use spaceport_core::config::RunConfig;
use spaceport_core::forecast::demand_total;
use spaceport_core::ingest::{
    annual_launch_series, load_counties, load_flight_tracks, load_launch_history, load_population_grid,
    load_region_map, IngestError,
};
use spaceport_core::missions::{kmeans, silhouette_score, standardize, KMeansOptions};
use spaceport_core::plan::mps::export_mps;
use spaceport_core::plan::oracle::{enumerate_oracle, DEFAULT_ORACLE_CAP};
use spaceport_core::plan::solution::PlanSolution;
use spaceport_core::plan::verify::{verify_plan, PlanCheck};
use spaceport_core::scenario::{
    cluster_missions, grid_from_config, run_sweep, to_json, Configuration, Datasets, OutcomeStatus,
    Pipeline, SweepReport, Traffic,
};

use crate::{Cli, Command};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration (exit 2).
    Usage(anyhow::Error),
    /// Invalid data, infeasible model, failed check (exit 1).
    Domain(anyhow::Error),
}

type Result<T> = std::result::Result<T, CliError>;

fn domain(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Domain(e.into())
}

fn usage(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Usage(e.into())
}

pub fn run(cli: &Cli) -> Result<()> {
    if let Command::Report = cli.command {
        return report(&cli.out);
    }
    let mut cfg = RunConfig::load(&cli.config).map_err(usage)?;
    if let Some(seed) = cli.seed {
        cfg.cluster.seed = seed;
    }
    log::info!("config {} (cluster seed {})", cli.config.display(), cfg.cluster.seed);
    match &cli.command {
        Command::Validate => validate(&cfg),
        Command::Forecast => forecast(&cfg, &cli.out),
        Command::Cluster => cluster(&cfg, &cli.out),
        Command::Scan { buffer, traffic } => {
            let c = configuration(&cfg, *buffer, traffic.as_deref(), None)?;
            scan(&cfg, &cli.out, &c)
        }
        Command::Plan {
            buffer,
            traffic,
            scenario,
        } => {
            let c = configuration(&cfg, *buffer, traffic.as_deref(), scenario.as_deref())?;
            plan(&cfg, &cli.out, &c, cli.oracle)
        }
        Command::Sweep => sweep(&cfg, &cli.out),
        Command::ExportMps {
            buffer,
            traffic,
            scenario,
        } => {
            let c = configuration(&cfg, *buffer, traffic.as_deref(), scenario.as_deref())?;
            export(&cfg, &cli.out, &c)
        }
        Command::Report => unreachable!("handled above"),
    }
}

/// The single configuration named by config values, overridden by flags.
fn configuration(cfg: &RunConfig, buffer: Option<f64>, traffic: Option<&str>, scenario: Option<&str>) -> Result<Configuration> {
    let buffer_deg = buffer.unwrap_or(cfg.hazard.buffer_deg);
    if !(buffer_deg > 0.0 && buffer_deg < 90.0) {
        return Err(usage(anyhow!("--buffer {buffer_deg} is outside (0, 90)")));
    }
    Ok(Configuration {
        buffer_deg,
        traffic: traffic.unwrap_or(&cfg.plan.traffic).parse().map_err(usage)?,
        scenario: scenario.unwrap_or(&cfg.plan.scenario).parse().map_err(usage)?,
    })
}

fn write(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).map_err(domain)?;
    }
    fs::write(path, body).with_context(|| format!("writing {}", path.display())).map_err(domain)
}

fn name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn validate(cfg: &RunConfig) -> Result<()> {
    let d = &cfg.data;
    let mut first_error: Option<String> = None;
    let mut note = |label: &str, path: &Path, r: std::result::Result<String, IngestError>| match r {
        Ok(msg) => println!("{label:<13} {:<22} {msg}", name(path)),
        Err(e) => {
            println!("{label:<13} {:<22} ERROR {e}", name(path));
            first_error.get_or_insert_with(|| e.to_string());
        }
    };
    note("counties", &d.counties, load_counties(&d.counties).map(|c| format!("{} rows", c.len())));
    note(
        "popgrid",
        &d.popgrid,
        load_population_grid(&d.popgrid).map(|g| {
            format!(
                "{} cells, population {}, cell size {}°",
                g.cells.len(),
                g.total_population(),
                g.cell_size_deg
            )
        }),
    );
    if let Some(p) = &d.launches {
        note(
            "launches",
            p,
            load_launch_history(p).map(|l| {
                let s = annual_launch_series(&l);
                match (s.first(), s.last()) {
                    (Some(a), Some(b)) => format!("{} rows, {}-{}", l.len(), a.0, b.0),
                    _ => format!("{} rows", l.len()),
                }
            }),
        );
    }
    if let Some(p) = &d.regions {
        note("regions", p, load_region_map(p).map(|m| format!("{} rows", m.len())));
    }
    for (label, path) in [("flights_low", &d.flights_low), ("flights_high", &d.flights_high)] {
        let Some(p) = path else {
            println!("{label:<13} not configured");
            continue;
        };
        match load_flight_tracks(p, d.flight_spacing_km) {
            Ok(t) if t.is_empty() => {
                println!("{label:<13} {:<22} 0 tracks", name(p));
                eprintln!("warning: {} has no flight tracks; rerouting costs will be zero", p.display());
            }
            r => note(label, p, r.map(|t| {
                let samples: usize = t.iter().map(|f| f.samples.len()).sum();
                format!("{} tracks, {samples} samples after downsampling", t.len())
            })),
        }
    }
    match first_error {
        Some(e) => Err(domain(anyhow!("validation failed: {e}"))),
        None => Ok(()),
    }
}

fn forecast(cfg: &RunConfig, out: &Path) -> Result<()> {
    let f = &cfg.forecast;
    let series = match &cfg.data.launches {
        Some(p) => Some(annual_launch_series(&load_launch_history(p).map_err(domain)?)),
        None => None,
    };
    let forecast = match &series {
        Some(s) => Some(demand_total(s, f.alpha, f.beta, f.target_year).map_err(domain)?),
        None => None,
    };
    let used = if f.from_history {
        forecast.ok_or_else(|| domain(anyhow!("forecast.from_history needs data.launches")))?
    } else {
        f.default_total
    };
    if let Some(s) = &series {
        println!("year  launches");
        for (y, n) in s {
            println!("{y}  {n:>8}");
        }
    }
    if let Some(v) = forecast {
        println!("Holt forecast for {} (alpha {}, beta {}): {v}", f.target_year, f.alpha, f.beta);
    }
    println!(
        "demand used: {used} ({})",
        if f.from_history { "forecast" } else { "forecast.default_total" }
    );
    let doc = serde_json::json!({
        "target_year": f.target_year,
        "alpha": f.alpha,
        "beta": f.beta,
        "series": series,
        "forecast": forecast,
        "demand": used,
        "from_history": f.from_history,
    });
    write(&out.join("forecast.json"), &to_json(&doc))
}

fn cluster(cfg: &RunConfig, out: &Path) -> Result<()> {
    let path = cfg.data.launches.as_ref().ok_or_else(|| usage(anyhow!("cluster needs data.launches")))?;
    let launches = load_launch_history(path).map_err(domain)?;
    let f = &cfg.forecast;
    let total = if f.from_history {
        demand_total(&annual_launch_series(&launches), f.alpha, f.beta, f.target_year).map_err(domain)?
    } else {
        f.default_total
    };
    let types = cluster_missions(&launches, cfg, total).map_err(domain)?;
    println!("type  semi_major_axis_km  inclination_deg  weight  demand");
    let mut csv = String::from("type,semi_major_axis_km,inclination_deg,weight,demand\n");
    for t in &types {
        println!(
            "{:>4}  {:>18.2}  {:>15.2}  {:>6.3}  {:>6}",
            t.index + 1,
            t.orbit_radius_km,
            t.inclination_deg,
            t.weight,
            t.demand
        );
        let _ = writeln!(
            csv,
            "{},{:.2},{:.2},{:.4},{}",
            t.index + 1,
            t.orbit_radius_km,
            t.inclination_deg,
            t.weight,
            t.demand
        );
    }
    let raw: Vec<[f64; 2]> = launches.iter().map(|l| [l.semi_major_axis_km, l.inclination_deg]).collect();
    let points = if cfg.cluster.standardize { standardize(&raw) } else { raw };
    let opts = KMeansOptions {
        seed: cfg.cluster.seed,
        restarts: cfg.cluster.restarts,
        ..KMeansOptions::default()
    };
    println!("silhouette by m:");
    let mut sil = String::from("m,silhouette\n");
    for m in 2..=cfg.cluster.m.max(2) + 1 {
        let model = kmeans(&points, m, &opts).map_err(domain)?;
        let s = silhouette_score(&points, &model).map_err(domain)?;
        println!("  m = {m}: {s:.4}");
        let _ = writeln!(sil, "{m},{s:.6}");
    }
    write(&out.join("clusters.csv"), &csv)?;
    write(&out.join("silhouette.csv"), &sil)
}

fn pipeline_data(cfg: &RunConfig) -> Result<Datasets> {
    Datasets::load(cfg).map_err(domain)
}

fn scan(cfg: &RunConfig, out: &Path, c: &Configuration) -> Result<()> {
    let data = pipeline_data(cfg)?;
    let p = Pipeline::new(cfg, &data).map_err(domain)?;
    let sets = p.feasible_sets(c.buffer_deg).map_err(domain)?;
    let with_flights = data.flights.contains_key(&c.traffic);
    let corridors = if with_flights {
        Some(p.corridors(c.buffer_deg, c.traffic).map_err(domain)?)
    } else {
        eprintln!("warning: no {} traffic flights configured; corridors skipped", c.traffic);
        None
    };
    println!("buffer {}°: feasible azimuths per county", c.buffer_deg);
    let mut csv = String::from(
        "fips,mission,azimuth_deg,dv1_km_s,dv2_km_s,total_dv_km_s,population_exposed,flights_per_day,reroute_usd\n",
    );
    let mut features = Vec::new();
    for (i, (county, set)) in data.counties.iter().zip(sets.iter()).enumerate() {
        println!("  {} {:<16} {:>3}", county.fips, county.name, set.azimuths.len());
        let Some(cor) = &corridors else { continue };
        for (j, m) in cor[i].iter().enumerate() {
            let Some(m) = m else { continue };
            let e = &m.exposure;
            let _ = writeln!(
                csv,
                "{},{},{},{:.6},{:.6},{:.6},{},{},{:.2}",
                county.fips,
                j + 1,
                e.azimuth,
                m.insertion.dv1,
                m.insertion.dv2,
                m.insertion.total,
                e.population_exposed,
                e.flights_per_day,
                e.reroute_cost_usd
            );
            if let Ok(w) = spaceport_core::hazard::county_wedge(county, e.azimuth, c.buffer_deg, p.range_km(i)) {
                features.push(serde_json::json!({
                    "type": "Feature",
                    "geometry": w.to_geojson(),
                    "properties": { "fips": county.fips, "mission": j + 1, "azimuth_deg": e.azimuth },
                }));
            }
        }
    }
    let tag = format!("{:04.1}", c.buffer_deg);
    write(&out.join(format!("feasible_xi{tag}.json")), &to_json(&*sets))?;
    if corridors.is_some() {
        write(&out.join(format!("corridors_xi{tag}_{}.csv", c.traffic)), &csv)?;
        let fc = serde_json::json!({ "type": "FeatureCollection", "features": features });
        write(&out.join(format!("corridors_xi{tag}_{}.geojson", c.traffic)), &to_json(&fc))?;
    }
    Ok(())
}

fn print_plan(sol: &PlanSolution, data: &Datasets) {
    println!("site   name              launches per type        total");
    for a in &sol.allocation {
        let county = data.counties.iter().find(|c| c.fips == a.fips);
        let types: Vec<String> = a.launches.iter().map(|y| format!("{y:>4}")).collect();
        println!(
            "{}  {:<16} {}  {:>5}",
            a.fips,
            county.map_or("", |c| c.name.as_str()),
            types.join(""),
            a.total()
        );
    }
    let b = &sol.breakdown;
    println!("objective {:.6}", sol.objective);
    println!(
        "  normalized: transport {:.6}, operation {:.6}, launch {:.6}, reroute {:.6}",
        b.transport, b.operation, b.launch, b.reroute
    );
    println!(
        "  raw: commute {:.1} min, house value ${:.3}M, delta-v {:.3} km/s, rerouting ${:.3}M/yr",
        b.transport_minutes,
        b.operation_usd / 1e6,
        b.launch_dv_km_s,
        b.reroute_usd / 1e6
    );
    let s = &sol.stats;
    println!(
        "  {}: {} nodes, {} LP iterations, gap {:.2e}{}",
        s.method,
        s.nodes,
        s.lp_iterations,
        s.gap,
        if s.optimal { ", optimal" } else { ", NOT proven optimal" }
    );
}

fn plan(cfg: &RunConfig, out: &Path, c: &Configuration, oracle: bool) -> Result<()> {
    let data = pipeline_data(cfg)?;
    let p = Pipeline::new(cfg, &data).map_err(domain)?;
    let outcome = p.plan(c);
    write(&out.join(format!("plan_{}.json", c.id())), &to_json(&outcome))?;
    write(&out.join(format!("plan_{}.geojson", c.id())), &to_json(&p.plan_geojson(&outcome)))?;
    let Some(sol) = &outcome.solution else {
        return Err(domain(anyhow!(
            "{}: {}",
            c.id(),
            outcome.error.as_deref().unwrap_or("no solution")
        )));
    };
    println!(
        "{}: {} of {} candidates, {} sites",
        c.id(),
        sol.selected.len(),
        outcome.candidates,
        outcome.sites
    );
    print_plan(sol, &data);
    let bundle = outcome.bundle.as_ref().expect("bundle with solution");
    let demands = p.demand.demands();
    let check = PlanCheck {
        demands: &demands,
        sites: p.demand.sites,
        capacity: p.demand.capacity,
        separation_miles: cfg.plan.min_separation_miles,
        weights: c.scenario.weights(),
    };
    let violations = verify_plan(sol, bundle, &check);
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("violation: {v}");
        }
        return Err(domain(anyhow!("plan failed {} post-hoc checks", violations.len())));
    }
    println!("post-hoc checks: ok");
    if oracle {
        let (model, bundle, _) = p.build(c).map_err(domain)?;
        let o = enumerate_oracle(&model, &bundle, DEFAULT_ORACLE_CAP).map_err(domain)?;
        let diff = (o.solution.objective - sol.objective).abs();
        println!(
            "oracle: objective {:.9} over {} separated subsets (difference {diff:.2e})",
            o.solution.objective, o.subsets_examined
        );
        if diff > 1e-6 {
            return Err(domain(anyhow!("branch-and-bound and enumeration disagree by {diff}")));
        }
    }
    if outcome.status != OutcomeStatus::Optimal {
        eprintln!("warning: node limit reached; plan is the best incumbent found");
    }
    Ok(())
}

fn sweep(cfg: &RunConfig, out: &Path) -> Result<()> {
    let grid = grid_from_config(cfg).map_err(usage)?;
    for t in grid.iter().map(|c| c.traffic) {
        if !cfg_has_flights(cfg, t) {
            return Err(usage(anyhow!("sweep includes {t} traffic but data.flights_{t} is not set")));
        }
    }
    let data = pipeline_data(cfg)?;
    let p = Pipeline::new(cfg, &data)
        .map_err(domain)?
        .with_cache_dir(out.join("cache"));
    let report = run_sweep(&p, &grid);
    report.write(&p, out).map_err(domain)?;
    print_summary(&report);
    let stats = p.cache_stats();
    log::info!(
        "hazard scans computed {}, reused {}; corridor sets computed {}, reused {}",
        stats.scans_computed,
        stats.scan_hits,
        stats.corridors_computed,
        stats.corridor_hits
    );
    let failed = report.rows.iter().filter(|r| r.solution.is_none()).count();
    if failed > 0 {
        eprintln!("warning: {failed} of {} configurations have no plan", report.rows.len());
    }
    Ok(())
}

fn cfg_has_flights(cfg: &RunConfig, t: Traffic) -> bool {
    match t {
        Traffic::Low => cfg.data.flights_low.is_some(),
        Traffic::High => cfg.data.flights_high.is_some(),
    }
}

fn print_summary(report: &SweepReport) {
    println!(
        "{:<16} {:<10} {:>12} {:>12} {:>12} {:>12}  sites",
        "config", "status", "objective", "house $M", "reroute $M", "sum dv km/s"
    );
    for r in &report.rows {
        match &r.solution {
            Some(s) => println!(
                "{:<16} {:<10} {:>12.6} {:>12.3} {:>12.3} {:>12.3}  {}",
                r.config.id(),
                r.status.to_string(),
                s.objective,
                s.breakdown.operation_usd / 1e6,
                s.breakdown.reroute_usd / 1e6,
                s.breakdown.launch_dv_km_s,
                s.selected_fips.join(" ")
            ),
            None => println!(
                "{:<16} {:<10} {}",
                r.config.id(),
                r.status.to_string(),
                r.error.as_deref().unwrap_or("")
            ),
        }
    }
}

fn export(cfg: &RunConfig, out: &Path, c: &Configuration) -> Result<()> {
    let data = pipeline_data(cfg)?;
    let p = Pipeline::new(cfg, &data).map_err(domain)?;
    let (model, _, _) = p.build(c).map_err(domain)?;
    let path = out.join(format!("model_{}.mps", c.id()));
    write(&path, &export_mps(&model, &c.id()))?;
    println!(
        "wrote {} ({} columns, {} rows)",
        path.display(),
        model.num_vars(),
        model.lp.rows.len()
    );
    Ok(())
}

fn report(out: &Path) -> Result<()> {
    let path: PathBuf = out.join("sweep.json");
    let text = fs::read_to_string(&path)
        .with_context(|| format!("reading {} (run `spaceport sweep` first)", path.display()))
        .map_err(domain)?;
    let report: SweepReport = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(domain)?;
    println!(
        "demand {} launches/yr over {} mission types, {} sites at capacity {}",
        report.demand.total,
        report.demand.missions.len(),
        report.demand.sites,
        report.demand.capacity
    );
    print_summary(&report);
    println!();
    println!("regional shares (% of each type's launches: West / Gulf / East)");
    for r in &report.rows {
        let Some(roll) = &r.rollup else { continue };
        let cells: Vec<String> = roll
            .missions
            .iter()
            .map(|m| {
                let p = |reg| m.percent.get(&reg).copied().unwrap_or(0.0);
                use spaceport_core::ingest::Region::*;
                format!("T{} {:.0}/{:.0}/{:.0}", m.mission, p(West), p(Gulf), p(East))
            })
            .collect();
        println!("{:<16} {}", r.config.id(), cells.join("  "));
    }
    Ok(())
}
