//! User-layer group membership.
//!
//! Terminals attach to one serving satellite and signal Join/Leave/Handover/
//! Refresh to it. The ingress aggregates those records into the set of
//! destination satellites per group; transit satellites never see this state.

mod assignment;
mod registry;
mod terminals;

pub use assignment::{assign_serving_satellite, nearest_covering, AssignmentPolicy};
pub use registry::{GroupId, IngressRegistry, MembershipEvent, MembershipRecord};
pub use terminals::{
    generate_terminals, offset_point, read_terminals_csv, write_terminals_csv, Cluster, Terminal,
    TerminalGenerator, TerminalId,
};

use thiserror::Error;

use crate::geogrid::GridError;

#[derive(Debug, Error)]
pub enum MembershipError {
    #[error("group {0} is not registered")]
    UnknownGroup(u32),
    #[error("no satellite covers terminal {0}")]
    NoCoverage(TerminalId),
    #[error("invalid generator: {0}")]
    Generator(String),
    #[error("terminal csv line {line}: {reason}")]
    CsvRow { line: u64, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Grid(#[from] GridError),
}
