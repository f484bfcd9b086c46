mod common;

use std::fs::File;
use std::path::PathBuf;

use common::tiny_instance;
use fairmatch::error::Error;
use fairmatch::ingest::{
    balanced_partition, instance_from_json, instance_to_json, parse_edge_list, parse_trips, read_instance,
    read_trips, write_instance, TripsConfig,
};
use proptest::prelude::*;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn trips_fixture_row_accounting() {
    let (records, skipped) = read_trips(File::open(fixture("trips_200.csv")).unwrap(), &TripsConfig::default()).unwrap();
    assert_eq!(records.len() + skipped, 200);
    assert_eq!(skipped, 4);
    let ing = parse_trips(File::open(fixture("trips_200.csv")).unwrap(), &TripsConfig::default(), 40, 1).unwrap();
    assert_eq!(ing.rows, 200);
    assert_eq!(ing.in_window, 103);
    let inst = &ing.instance;
    assert_eq!((inst.n_offline(), inst.n_online(), inst.horizon()), (40, 40, 40));
    // groups partition the drivers by pickup area, and edges stay inside
    let mut area_of = vec![usize::MAX; 40];
    for (g, members) in inst.groups().iter().enumerate() {
        for &i in members {
            area_of[i] = g;
        }
    }
    assert!(area_of.iter().all(|&g| g != usize::MAX));
    for &(i, j) in inst.edges() {
        assert_eq!(area_of[i], area_of[j]);
    }
    for i in 0..40 {
        assert!(inst.edge_index(i, i).is_some(), "driver {i} serves its own rider");
    }
    assert_eq!(ing.group_areas.len(), inst.groups().len());
}

#[test]
fn trips_sampling_is_seeded() {
    let run = |seed| {
        parse_trips(File::open(fixture("trips_200.csv")).unwrap(), &TripsConfig::default(), 30, seed)
            .unwrap()
            .instance
    };
    assert_eq!(run(3), run(3));
    assert_ne!(run(3), run(4));
}

#[test]
fn trips_window_too_small() {
    let err = parse_trips(File::open(fixture("trips_200.csv")).unwrap(), &TripsConfig::default(), 150, 1).unwrap_err();
    assert!(err.is_data_error());
    let all = TripsConfig {
        window: None,
        ..TripsConfig::default()
    };
    assert!(parse_trips(File::open(fixture("trips_200.csv")).unwrap(), &all, 150, 1).is_ok());
}

#[test]
fn trips_config_from_toml() {
    let cfg = TripsConfig::from_toml("pickup_column = \"from\"\n").unwrap();
    assert_eq!(cfg.pickup_column, "from");
    assert_eq!(cfg.start_column, TripsConfig::default().start_column);
    assert!(TripsConfig::from_toml("pickup_column = 3").is_err());
}

#[test]
fn missing_column_is_reported() {
    let err = read_trips("a,b\n1,2\n".as_bytes(), &TripsConfig::default()).unwrap_err();
    assert!(err.to_string().contains("Pickup Community Area"), "{err}");
}

#[test]
fn edge_list_to_instance() {
    let text = "% karate-like\n1 2\n1 3\n2 3\n3 4\n4 5\n5 6\n6 1\n";
    let g = parse_edge_list(text.as_bytes()).unwrap();
    let inst = balanced_partition(&g, 7, 7).unwrap();
    assert_eq!(inst.n_offline(), 3);
    assert_eq!(inst.n_online(), 3);
    assert!(inst.is_canonical());
    assert_eq!(balanced_partition(&g, 7, 7).unwrap(), inst);
}

#[test]
fn json_rejects_other_versions_and_unknown_fields() {
    let inst = fairmatch::bounds::make_example_worst(3);
    let text = instance_to_json(&inst);
    let v2 = text.replace("\"version\": 1", "\"version\": 2");
    assert!(matches!(instance_from_json(&v2), Err(Error::SchemaVersion { .. })));
    let extra = text.replacen('{', "{\n  \"colour\": 1,", 1);
    assert!(instance_from_json(&extra).is_err());
}

#[test]
fn json_file_round_trip() {
    let inst = fairmatch::bounds::make_example1(3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inst.json");
    write_instance(&inst, &path).unwrap();
    assert_eq!(read_instance(&path).unwrap(), inst);
    assert!(read_instance(&dir.path().join("missing.json")).unwrap_err().is_data_error());
}

proptest! {
    #[test]
    fn json_round_trip(inst in tiny_instance(5, 5)) {
        let text = instance_to_json(&inst);
        prop_assert_eq!(instance_from_json(&text).unwrap(), inst.clone());
        prop_assert_eq!(instance_to_json(&instance_from_json(&text).unwrap()), text);
    }
}
