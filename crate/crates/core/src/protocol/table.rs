//! Per-satellite target-cell routing tables.

use std::collections::BTreeMap;

use super::ProtocolError;
use crate::geogrid::{self, CellId, GeoPoint};
use crate::graph::NodeIx;
use crate::orbit::Snapshot;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableEntry {
    pub primary: NodeIx,
    /// At most two, best first.
    pub backups: Vec<NodeIx>,
}

impl TableEntry {
    /// Primary followed by the backups.
    pub fn candidates(&self) -> impl Iterator<Item = NodeIx> + '_ {
        std::iter::once(self.primary).chain(self.backups.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetCellTable {
    pub owner: NodeIx,
    pub time_s: f64,
    pub entries: BTreeMap<CellId, TableEntry>,
}

impl TargetCellTable {
    pub fn get(&self, cell: &CellId) -> Option<&TableEntry> {
        self.entries.get(cell)
    }
}

/// ISL neighbours of `sat` that are strictly closer to `target` than `sat`,
/// best first (ties to the lower index).
pub fn progressing_neighbors(snapshot: &Snapshot, sat: NodeIx, target: &GeoPoint) -> Vec<NodeIx> {
    let own = snapshot.ground_distance_km(sat, target);
    let mut ranked: Vec<(f64, NodeIx)> = snapshot
        .graph()
        .neighbors(sat)
        .iter()
        .map(|&(n, _)| (snapshot.ground_distance_km(n, target), n))
        .filter(|&(d, _)| d < own)
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    ranked.into_iter().map(|(_, n)| n).collect()
}

/// Table entry toward `cell`, or `None` when `sat` is already inside the
/// cell or no neighbour makes progress toward its centre.
pub fn table_entry(
    snapshot: &Snapshot,
    sat: NodeIx,
    own_cell: CellId,
    cell: CellId,
) -> Result<Option<TableEntry>, ProtocolError> {
    if cell == own_cell {
        return Ok(None);
    }
    let centre = cell.center()?;
    let ranked = progressing_neighbors(snapshot, sat, &centre);
    Ok(ranked.split_first().map(|(&primary, rest)| TableEntry {
        primary,
        backups: rest.iter().take(2).copied().collect(),
    }))
}

pub fn build_target_cell_table<'a>(
    sat: NodeIx,
    snapshot: &Snapshot,
    r: u8,
    header_cells: impl IntoIterator<Item = &'a CellId>,
) -> Result<TargetCellTable, ProtocolError> {
    let own = geogrid::cell_index(&snapshot.sat(sat).subpoint, r)?;
    let mut entries = BTreeMap::new();
    for &c in header_cells {
        if let Some(e) = table_entry(snapshot, sat, own, c)? {
            entries.insert(c, e);
        }
    }
    Ok(TargetCellTable {
        owner: sat,
        time_s: snapshot.time_s(),
        entries,
    })
}
