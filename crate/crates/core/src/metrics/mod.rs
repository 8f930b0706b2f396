//! Evaluation metrics: reach rate, dwelling time and removal resilience.

mod dwell;
mod resilience;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::geogrid::GridError;
use crate::orbit::{OrbitError, SatId};
use crate::protocol::DeliveryReport;

pub use dwell::{
    dwell_durations, dwelling_time_analytic, dwelling_time_empirical, dwelling_time_empirical_for, ground_track_speed, DwellParams, DwellSummary,
    DwellTime, ORBITAL_SPEED_KM_S,
};
pub use resilience::{resilience, DestinationCuts, ResilienceReport};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("destination set is empty")]
    EmptyDestinations,
    #[error("invalid dwell parameters: {0}")]
    DwellParams(String),
    #[error("no dwell completed within {duration_s} s")]
    NoCompletedDwell { duration_s: f64 },
    #[error("time step {0} s must be in (0, 1]")]
    Step(f64),
    #[error("{0} lies outside the selected cell set")]
    OutsideCellSet(SatId),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
}

/// Fraction of `destinations` present in the report's delivered set.
pub fn reach_rate(report: &DeliveryReport, destinations: &BTreeSet<SatId>) -> Result<f64, MetricsError> {
    if destinations.is_empty() {
        return Err(MetricsError::EmptyDestinations);
    }
    let hit = destinations.iter().filter(|d| report.delivered.contains_key(d)).count();
    Ok(hit as f64 / destinations.len() as f64)
}
