//! Header sizes of BIER-style bitstrings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geogrid::{self, GridError, GridScheme};
use crate::membership::{AssignmentPolicy, Terminal};
use crate::orbit::Snapshot;

/// One bit per terminal.
pub fn traditional_bitstring_bits(terminal_count: usize) -> usize {
    terminal_count
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartitionScheme {
    /// Segments are hex cells at the given resolution.
    GeoCells(u8),
    /// Segments are serving-satellite footprints.
    SatFootprint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentedBits {
    /// Terminals in the fullest segment, which sizes every segment's bitstring.
    pub max_partition: usize,
    pub partitions: usize,
    /// Terminals no satellite covers (footprint partitioning only).
    pub excluded: usize,
}

/// Worst-case per-segment bitstring length.
pub fn segmented_bitstring_bits(
    terminals: &[Terminal],
    scheme: PartitionScheme,
    snapshot: &Snapshot,
    mask_deg: f64,
) -> Result<SegmentedBits, GridError> {
    let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
    let mut excluded = 0;
    for t in terminals {
        let p = t.location_at(snapshot.time_s());
        let key = match scheme {
            PartitionScheme::GeoCells(r) => geogrid::cell_index(&p, r)?.index(),
            PartitionScheme::SatFootprint => {
                match crate::membership::nearest_covering(&p, snapshot, mask_deg, AssignmentPolicy::Nearest) {
                    Some(s) => snapshot.index_of(s).expect("assigned satellite in snapshot") as u64,
                    None => {
                        excluded += 1;
                        continue;
                    }
                }
            }
        };
        *counts.entry(key).or_default() += 1;
    }
    Ok(SegmentedBits {
        max_partition: counts.values().copied().max().unwrap_or(0),
        partitions: counts.len(),
        excluded,
    })
}

/// Bits needed to name a segment, reported as separate overhead.
pub fn segment_id_bits(scheme: PartitionScheme, satellites: usize) -> Result<u32, GridError> {
    match scheme {
        PartitionScheme::GeoCells(r) => geogrid::bits_per_cell(GridScheme::HexHier, r),
        PartitionScheme::SatFootprint => Ok(geogrid::ceil_log2(satellites.max(1) as u64)),
    }
}
