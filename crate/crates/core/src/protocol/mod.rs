//! Encoding, header codec, target-cell tables and stateless forwarding.

mod encode;
mod forward;
mod header;
mod spt;
mod table;
mod tree;

pub use encode::{encode, encode_tree, path_cells};
pub use forward::{
    run_multicast, DeliveryReport, ForwardEnv, Forwarded, Packet, Phase, RouteMode, Step, Visit,
    DEFAULT_TTL,
};
pub use header::{Header, ShellTree, HEADER_VERSION};
pub use spt::{reconstruct_path, shortest_path_tree, ShortestPathTree};
pub use table::{build_target_cell_table, progressing_neighbors, table_entry, TableEntry, TargetCellTable};
pub use tree::{CellTree, TreeBuilder, TreeNode, MAX_CHILDREN};

use thiserror::Error;

use crate::geogrid::GridError;
use crate::graph::NodeIx;
use crate::orbit::{OrbitError, SatId};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("destination set is empty")]
    EmptyDestinations,
    #[error("unreachable destinations: {0:?}")]
    Unreachable(Vec<SatId>),
    #[error("node {0} is not reachable from the source")]
    UnreachableNode(NodeIx),
    #[error("header needs at least one shell")]
    NoShells,
    #[error("unsupported header version {0}")]
    Version(u8),
    #[error("header truncated")]
    Truncated,
    #[error("non-zero padding or trailing bytes")]
    TrailingData,
    #[error("cell index {0} out of range")]
    BadCell(u64),
    #[error("{0} children exceed the limit of 7")]
    ChildOverflow(usize),
    #[error("{0} nodes exceed the 16-bit node count")]
    NodeCountOverflow(usize),
    #[error("malformed tree: {0}")]
    TreeShape(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
}
