//! Checks point indexing against reference vectors.

use std::io::Read;

use serde::Deserialize;

use super::SimError;
use crate::geogrid::{cell_index, CellId, GeoPoint};

#[derive(Debug, Deserialize)]
struct Vector {
    lat: f64,
    lon: f64,
    resolution: u8,
    /// Reference H3 index, hexadecimal.
    expected_cell_index: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    /// 1-based data row.
    pub row: usize,
    pub lat: f64,
    pub lon: f64,
    pub resolution: u8,
    pub expected: String,
    pub actual: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConformanceReport {
    pub checked: usize,
    pub mismatches: Vec<Mismatch>,
}

/// Reads `lat,lon,resolution,expected_cell_index` rows and compares each
/// with [`cell_index`]. Rows that do not parse are errors, not mismatches.
pub fn check_conformance<R: Read>(reader: R) -> Result<ConformanceReport, SimError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut report = ConformanceReport::default();
    for (k, row) in rdr.deserialize::<Vector>().enumerate() {
        let v = row?;
        let expected = CellId::from_h3_str(&v.expected_cell_index)?;
        let actual = cell_index(&GeoPoint::new(v.lat, v.lon)?, v.resolution)?;
        report.checked += 1;
        if actual != expected {
            report.mismatches.push(Mismatch {
                row: k + 1,
                lat: v.lat,
                lon: v.lon,
                resolution: v.resolution,
                expected: v.expected_cell_index,
                actual: actual.to_h3().map(|c| c.to_string()).unwrap_or_default(),
            });
        }
    }
    Ok(report)
}
