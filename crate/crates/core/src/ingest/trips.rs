use std::collections::BTreeMap;
use std::io::Read;

use chrono::NaiveDateTime;
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Instance, InstanceParts};
use crate::rng::{derive, stream, tag};

/// Fraction of rows that may be skipped as unparseable before the whole
/// file is rejected.
pub const MAX_SKIPPED_FRACTION: f64 = 0.10;

/// Column mapping and filtering for a trips CSV. Defaults follow the Chicago
/// data portal's ride-hailing export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TripsConfig {
    pub pickup_column: String,
    pub dropoff_column: String,
    pub start_column: String,
    /// `chrono` formats tried in order.
    pub time_formats: Vec<String>,
    /// Half-open `[start, end)`; `None` keeps every row.
    pub window: Option<(NaiveDateTime, NaiveDateTime)>,
}

impl Default for TripsConfig {
    fn default() -> Self {
        let day = chrono::NaiveDate::from_ymd_opt(2020, 9, 29).expect("valid date");
        TripsConfig {
            pickup_column: "Pickup Community Area".into(),
            dropoff_column: "Dropoff Community Area".into(),
            start_column: "Trip Start Timestamp".into(),
            time_formats: vec![
                "%m/%d/%Y %I:%M:%S %p".into(),
                "%Y-%m-%dT%H:%M:%S%.f".into(),
                "%Y-%m-%d %H:%M:%S".into(),
            ],
            window: Some((
                day.and_hms_opt(18, 0, 0).expect("valid time"),
                day.and_hms_opt(19, 0, 0).expect("valid time"),
            )),
        }
    }
}

impl TripsConfig {
    /// Reads a config from TOML; absent keys keep their defaults.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripRecord {
    pub pickup_area: u32,
    pub dropoff_area: u32,
    pub start_time: NaiveDateTime,
}

/// Result of [`parse_trips`] with the row accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct TripsIngest {
    pub instance: Instance,
    /// Pickup area of each group, in group order.
    pub group_areas: Vec<u32>,
    pub rows: usize,
    pub skipped: usize,
    pub in_window: usize,
}

fn parse_time(text: &str, formats: &[String]) -> Option<NaiveDateTime> {
    let text = text.trim();
    formats
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(text, f).ok())
}

fn parse_area(text: &str) -> Option<u32> {
    text.trim().parse::<u32>().ok().filter(|&a| a > 0)
}

/// Reads every trip record; rows with a missing or malformed required field
/// are counted as skipped.
pub fn read_trips<R: Read>(input: R, config: &TripsConfig) -> Result<(Vec<TripRecord>, usize)> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Data(format!("trips CSV has no column {name:?}")))
    };
    let (pc, dc, sc) = (
        column(&config.pickup_column)?,
        column(&config.dropoff_column)?,
        column(&config.start_column)?,
    );
    let mut records = Vec::new();
    let mut skipped = 0;
    for row in reader.records() {
        let row = match row {
            Ok(r) => r,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        let parsed = (|| {
            Some(TripRecord {
                pickup_area: parse_area(row.get(pc)?)?,
                dropoff_area: parse_area(row.get(dc)?)?,
                start_time: parse_time(row.get(sc)?, &config.time_formats)?,
            })
        })();
        match parsed {
            Some(r) => records.push(r),
            None => skipped += 1,
        }
    }
    let rows = records.len() + skipped;
    if rows > 0 && skipped as f64 > MAX_SKIPPED_FRACTION * rows as f64 {
        return Err(Error::Data(format!(
            "{skipped} of {rows} trip rows could not be parsed (limit {:.0}%)",
            MAX_SKIPPED_FRACTION * 100.0
        )));
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} of {rows} unparseable trip rows");
    }
    Ok((records, skipped))
}

/// Builds an instance from a trips CSV: keep rows in the window, subsample
/// `horizon` of them uniformly, and create one driver (offline) and one rider
/// (online) per trip. Driver `i` and rider `j` are adjacent iff their trips
/// start in the same area; drivers are grouped by pickup area.
pub fn parse_trips<R: Read>(input: R, config: &TripsConfig, horizon: usize, seed: u64) -> Result<TripsIngest> {
    let (records, skipped) = read_trips(input, config)?;
    let rows = records.len() + skipped;
    let kept: Vec<TripRecord> = records
        .into_iter()
        .filter(|r| config.window.map_or(true, |(a, b)| a <= r.start_time && r.start_time < b))
        .collect();
    if kept.len() < horizon {
        return Err(Error::Data(format!(
            "only {} trips in the time window, {horizon} requested",
            kept.len()
        )));
    }
    let mut rng = stream(derive(seed, tag::DOWNSAMPLE));
    let mut picks = index::sample(&mut rng, kept.len(), horizon).into_vec();
    picks.sort_unstable();
    let areas: Vec<u32> = picks.iter().map(|&k| kept[k].pickup_area).collect();

    let mut by_area: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &a) in areas.iter().enumerate() {
        by_area.entry(a).or_default().push(i);
    }
    let mut edges = Vec::new();
    for members in by_area.values() {
        for &i in members {
            for &j in members {
                edges.push((i, j));
            }
        }
    }
    let instance = Instance::new(InstanceParts {
        weights: vec![1.0; horizon],
        rates: vec![1.0; horizon],
        edges,
        groups: by_area.values().cloned().collect(),
        horizon,
    })?;
    Ok(TripsIngest {
        instance,
        group_areas: by_area.keys().copied().collect(),
        rows,
        skipped,
        in_window: kept.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEAD: &str = "Trip ID,Trip Start Timestamp,Pickup Community Area,Dropoff Community Area\n";

    fn no_window() -> TripsConfig {
        TripsConfig {
            window: None,
            ..TripsConfig::default()
        }
    }

    #[test]
    fn three_trips_two_areas() {
        let csv = format!(
            "{HEAD}a,09/29/2020 06:00:00 PM,8,1\nb,09/29/2020 06:10:00 PM,8,2\nc,09/29/2020 06:20:00 PM,32,3\n"
        );
        let out = parse_trips(csv.as_bytes(), &no_window(), 3, 1).unwrap();
        let inst = &out.instance;
        assert_eq!(inst.edges(), &[(0, 0), (0, 1), (1, 0), (1, 1), (2, 2)]);
        assert_eq!(inst.groups(), &[vec![0, 1], vec![2]]);
        assert_eq!(out.group_areas, vec![8, 32]);
    }

    #[test]
    fn window_is_half_open() {
        let csv = format!(
            "{HEAD}a,09/29/2020 05:59:59 PM,8,1\nb,09/29/2020 06:00:00 PM,8,2\nc,09/29/2020 07:00:00 PM,32,3\n"
        );
        let out = parse_trips(csv.as_bytes(), &TripsConfig::default(), 1, 1).unwrap();
        assert_eq!(out.in_window, 1);
        assert!(parse_trips(csv.as_bytes(), &TripsConfig::default(), 2, 1).is_err());
    }

    #[test]
    fn too_many_bad_rows() {
        let csv = format!("{HEAD}a,09/29/2020 06:00:00 PM,,1\nb,09/29/2020 06:00:00 PM,8,2\n");
        assert!(matches!(parse_trips(csv.as_bytes(), &no_window(), 1, 1), Err(Error::Data(_))));
    }

    #[test]
    fn iso_timestamps_are_accepted() {
        let csv = format!("{HEAD}a,2020-09-29T18:30:00.000,8,1\n");
        let out = parse_trips(csv.as_bytes(), &TripsConfig::default(), 1, 1).unwrap();
        assert_eq!(out.in_window, 1);
    }
}
