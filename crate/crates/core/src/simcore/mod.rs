//! Scenario runner: propagate, reassign, re-encode, forward and measure,
//! one epoch at a time.

mod conformance;
mod experiments;
mod output;
mod rng;
mod run;
mod spec;

use std::path::PathBuf;

use thiserror::Error;

pub use conformance::{check_conformance, ConformanceReport, Mismatch};
pub use experiments::{
    bier_star_delivery, bitstring_experiment, dwell_experiment, reach_experiment, resilience_experiment,
    sample_failures, BierStarOutcome, BitstringRow, DwellRow, ReachOutcome, ReachRow, ReachScenario,
    ResilienceRow,
};
pub use output::{snapshot_rows, write_csv, CsvRow, SnapshotRow};
pub use rng::{stream, Purpose};
pub use run::{load_terminals, run, EpochTrace, EventCounts, MetricRow};
pub use spec::{
    apply_override, BitstringExperiment, DwellExperiment, Experiments, FailureModel, GreedyParams, GroupSpec,
    MemberFilter, MembershipConfig, Method, ReachExperiment, Region, ResilienceExperiment, ScenarioSpec, SourceSpec,
    TerminalSource,
};

use crate::geogrid::GridError;
use crate::membership::MembershipError;
use crate::metrics::MetricsError;
use crate::orbit::OrbitError;
use crate::protocol::ProtocolError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("bad override {0}")]
    Override(String),
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error("no satellite covers {0}")]
    NoCoverage(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error(transparent)]
    Membership(#[from] MembershipError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SimError {
    /// Problems with the scenario itself rather than with running it.
    pub fn is_validation(&self) -> bool {
        matches!(self, SimError::Read { .. } | SimError::Parse(_) | SimError::Override(_) | SimError::Invalid(_))
    }
}
