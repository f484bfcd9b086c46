//! Building instances from external data: ride-hailing trip CSVs, network
//! edge lists, and the instance JSON format.

mod graph;
mod json;
mod trips;

pub use graph::{balanced_partition, downsample, parse_edge_list, EdgeListGraph};
pub use json::{
    instance_from_json, instance_to_json, read_instance, read_instance_from, write_instance,
    write_instance_to, SCHEMA_VERSION,
};
pub use trips::{parse_trips, read_trips, TripRecord, TripsConfig, TripsIngest, MAX_SKIPPED_FRACTION};
