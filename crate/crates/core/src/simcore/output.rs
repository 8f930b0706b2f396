//! CSV output with fixed column sets.

use std::io::Write;

use serde::Serialize;

use crate::orbit::Snapshot;

/// A row type with a stable column list.
pub trait CsvRow: Serialize {
    const HEADER: &'static [&'static str];
}

/// Writes the header even when `rows` is empty.
pub fn write_csv<W: Write, T: CsvRow>(writer: W, rows: &[T]) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(T::HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotRow {
    pub sat_id: String,
    pub time_s: f64,
    pub lat: f64,
    pub lon: f64,
    pub alt_km: f64,
}

impl CsvRow for SnapshotRow {
    const HEADER: &'static [&'static str] = &["sat_id", "time_s", "lat", "lon", "alt_km"];
}

pub fn snapshot_rows(snapshot: &Snapshot) -> Vec<SnapshotRow> {
    snapshot
        .sats()
        .iter()
        .map(|s| SnapshotRow {
            sat_id: s.id.to_string(),
            time_s: snapshot.time_s(),
            lat: s.subpoint.lat(),
            lon: s.subpoint.lon(),
            alt_km: s.altitude_km,
        })
        .collect()
}
