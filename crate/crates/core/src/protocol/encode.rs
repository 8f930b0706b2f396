//! Ingress encoding: shortest-path tree to cell tree to header.

use std::collections::BTreeSet;

use super::header::{Header, ShellTree};
use super::spt::{reconstruct_path, shortest_path_tree, ShortestPathTree};
use super::tree::{CellTree, TreeBuilder};
use super::ProtocolError;
use crate::geogrid::CellId;
use crate::graph::{Failures, NodeIx};
use crate::orbit::{SatId, Snapshot};

/// Collapses runs of equal cells along a satellite path.
pub fn path_cells(path: &[NodeIx], cells: &[CellId]) -> Vec<CellId> {
    let mut out: Vec<CellId> = Vec::with_capacity(path.len());
    for &n in path {
        if out.last() != Some(&cells[n]) {
            out.push(cells[n]);
        }
    }
    out
}

/// Cell tree for the given destinations over an existing SPT.
///
/// Every cell on a destination path hangs under the cell of the SPT
/// predecessor of its entry satellite, the path satellite in that cell that
/// is closest to the source. Paths therefore share their cell prefix and
/// each cell appears once. Cells holding a destination are flagged.
pub fn encode_tree(
    spt: &ShortestPathTree,
    destinations: &BTreeSet<NodeIx>,
    cells: &[CellId],
    snapshot: &Snapshot,
) -> Result<CellTree, ProtocolError> {
    if destinations.is_empty() {
        return Err(ProtocolError::EmptyDestinations);
    }
    let unreachable: Vec<SatId> = destinations
        .iter()
        .filter(|&&d| !spt.is_reachable(d))
        .map(|&d| snapshot.id_of(d))
        .collect();
    if !unreachable.is_empty() {
        return Err(ProtocolError::Unreachable(unreachable));
    }
    let mut on_paths = BTreeSet::new();
    for &d in destinations {
        on_paths.extend(reconstruct_path(spt, d)?);
    }
    let mut order: Vec<NodeIx> = on_paths.into_iter().collect();
    order.sort_by(|&a, &b| spt.dist(a).total_cmp(&spt.dist(b)).then(a.cmp(&b)));
    let mut b = TreeBuilder::new(cells[spt.src()]);
    for s in order {
        let Some(p) = spt.parent(s) else { continue };
        if !b.contains(cells[s]) {
            b.attach_capped(cells[p], cells[s], false);
        }
    }
    for &d in destinations {
        b.set_dest(cells[d], true);
    }
    Ok(b.build())
}

/// Builds the header for `group_id` from `src` to `destinations` at
/// resolution `r`, routing over links that are up in `failures`.
pub fn encode(
    snapshot: &Snapshot,
    src: SatId,
    destinations: &BTreeSet<SatId>,
    r: u8,
    group_id: u32,
    failures: &Failures,
) -> Result<Header, ProtocolError> {
    let s = snapshot.require(src)?;
    let dest_ix = destinations
        .iter()
        .map(|d| snapshot.require(*d))
        .collect::<Result<BTreeSet<_>, _>>()?;
    let spt = shortest_path_tree(snapshot.graph(), s, |a, b| failures.link_up(a, b));
    let cells = snapshot.cells(r)?;
    let tree = encode_tree(&spt, &dest_ix, &cells, snapshot)?;
    Ok(Header::new(
        group_id,
        vec![ShellTree {
            shell_id: src.shell,
            resolution: r,
            tree,
        }],
    ))
}
