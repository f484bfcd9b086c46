use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Instance, InstanceParts};

/// Current instance file schema version.
pub const SCHEMA_VERSION: u32 = 1;

// Fields are declared in alphabetical order so the serialised key order is
// canonical.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    edges: Vec<[usize; 2]>,
    groups: Vec<Vec<usize>>,
    horizon: usize,
    offline: Vec<OfflineEntry>,
    online: Vec<OnlineEntry>,
    version: u32,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OfflineEntry {
    id: usize,
    weight: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OnlineEntry {
    id: usize,
    rate: f64,
}

/// Canonical JSON text of `instance` (pretty-printed, trailing newline).
pub fn instance_to_json(instance: &Instance) -> String {
    let file = InstanceFile {
        edges: instance.edges().iter().map(|&(i, j)| [i, j]).collect(),
        groups: instance.groups().to_vec(),
        horizon: instance.horizon(),
        offline: instance
            .weights()
            .iter()
            .enumerate()
            .map(|(id, &weight)| OfflineEntry { id, weight })
            .collect(),
        online: instance
            .rates()
            .iter()
            .enumerate()
            .map(|(id, &rate)| OnlineEntry { id, rate })
            .collect(),
        version: SCHEMA_VERSION,
    };
    let mut text = serde_json::to_string_pretty(&file).expect("instance file serialises");
    text.push('\n');
    text
}

pub fn instance_from_json(text: &str) -> Result<Instance> {
    // Check the version first so old files get a precise message rather than
    // a field mismatch.
    let raw: serde_json::Value = serde_json::from_str(text)?;
    if let Some(v) = raw.get("version").and_then(|v| v.as_u64()) {
        if v != u64::from(SCHEMA_VERSION) {
            return Err(Error::SchemaVersion {
                found: v as u32,
                expected: SCHEMA_VERSION,
            });
        }
    }
    let file: InstanceFile = serde_json::from_value(raw)?;
    for (k, o) in file.offline.iter().enumerate() {
        if o.id != k {
            return Err(Error::Data(format!("offline entry {k} has id {}, expected {k}", o.id)));
        }
    }
    for (k, o) in file.online.iter().enumerate() {
        if o.id != k {
            return Err(Error::Data(format!("online entry {k} has id {}, expected {k}", o.id)));
        }
    }
    Instance::new(InstanceParts {
        weights: file.offline.iter().map(|o| o.weight).collect(),
        rates: file.online.iter().map(|o| o.rate).collect(),
        edges: file.edges.iter().map(|&[i, j]| (i, j)).collect(),
        groups: file.groups,
        horizon: file.horizon,
    })
}

pub fn write_instance_to<W: Write>(instance: &Instance, mut out: W) -> std::io::Result<()> {
    out.write_all(instance_to_json(instance).as_bytes())
}

pub fn read_instance_from<R: Read>(mut input: R) -> Result<Instance> {
    let mut text = String::new();
    input
        .read_to_string(&mut text)
        .map_err(|e| Error::io("<stream>", e))?;
    instance_from_json(&text)
}

pub fn write_instance(instance: &Instance, path: &Path) -> Result<()> {
    std::fs::write(path, instance_to_json(instance)).map_err(|e| Error::io(path, e))
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    instance_from_json(&text)
}
