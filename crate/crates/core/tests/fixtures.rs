use std::fs;
use std::path::Path;

use spaceport_core::config::RunConfig;
use spaceport_core::scenario::Datasets;
use spaceport_core::synth::write_fixtures;

fn fixture_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures"))
}

#[test]
fn checked_in_fixtures_match_generator() {
    let tmp = tempfile::tempdir().unwrap();
    write_fixtures(tmp.path()).unwrap();
    let mut names: Vec<_> = fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 7);
    for name in names {
        let fresh = fs::read(tmp.path().join(&name)).unwrap();
        let stored = fs::read(fixture_dir().join(&name)).unwrap_or_default();
        assert!(
            fresh == stored,
            "fixtures/{} is stale; regenerate with `cargo run -p spaceport-core --release --example gen_fixtures`",
            name.to_string_lossy()
        );
    }
}

#[test]
fn fixture_config_loads_every_dataset() {
    let cfg = RunConfig::load(&fixture_dir().join("spaceport.toml")).unwrap();
    let data = Datasets::load(&cfg).unwrap();
    assert_eq!(data.counties.len(), 30);
    assert_eq!(data.grid.cells.len(), 2500);
    assert_eq!(data.launches.as_ref().map(Vec::len), Some(1000));
    assert_eq!(data.regions.as_ref().map(|r| r.len()), Some(30));
    assert_eq!(data.flights.len(), 2);
    assert_eq!(data.flight_hash.len(), 2);
}
