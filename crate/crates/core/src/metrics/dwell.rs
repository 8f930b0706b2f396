//! How long a sub-satellite point stays in one cell.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;

use super::MetricsError;
use crate::geogrid::{cell_index, effective_diameter_km, CellId, EARTH_RADIUS_KM, MAX_HEX_RESOLUTION};
use crate::orbit::{Constellation, SatId};

/// Nominal LEO orbital speed used by the analytic model, km/s.
pub const ORBITAL_SPEED_KM_S: f64 = 7.66;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DwellParams {
    pub inclination_rad: f64,
    pub altitude_km: f64,
    pub resolution: u8,
}

impl DwellParams {
    pub fn new(inclination_rad: f64, altitude_km: f64, resolution: u8) -> Result<Self, MetricsError> {
        let p = Self {
            inclination_rad,
            altitude_km,
            resolution,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        let bad = |m: String| Err(MetricsError::DwellParams(m));
        if !(0.0..std::f64::consts::PI).contains(&self.inclination_rad) {
            return bad(format!("inclination {} rad outside [0, pi)", self.inclination_rad));
        }
        if !(self.altitude_km > 0.0) {
            return bad(format!("altitude {} km must be positive", self.altitude_km));
        }
        if self.resolution > MAX_HEX_RESOLUTION {
            return bad(format!("resolution {} outside 0..={MAX_HEX_RESOLUTION}", self.resolution));
        }
        Ok(())
    }
}

/// Ground-track speed `(R_E + h) / R_E * v_o * cos i`, km/s.
///
/// Retrograde inclinations use `|cos i|`. The polar case returns exactly 0.
pub fn ground_track_speed(inclination_rad: f64, altitude_km: f64) -> f64 {
    if (inclination_rad - FRAC_PI_2).abs() < 1e-12 {
        return 0.0;
    }
    (EARTH_RADIUS_KM + altitude_km) / EARTH_RADIUS_KM * ORBITAL_SPEED_KM_S * inclination_rad.cos().abs()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DwellTime {
    Bounded(f64),
    Unbounded,
}

impl DwellTime {
    pub fn seconds(&self) -> Option<f64> {
        match *self {
            DwellTime::Bounded(s) => Some(s),
            DwellTime::Unbounded => None,
        }
    }
}

/// Effective cell diameter over ground-track speed.
pub fn dwelling_time_analytic(p: &DwellParams) -> Result<DwellTime, MetricsError> {
    p.validate()?;
    let v = ground_track_speed(p.inclination_rad, p.altitude_km);
    if v == 0.0 {
        return Ok(DwellTime::Unbounded);
    }
    Ok(DwellTime::Bounded(effective_diameter_km(p.resolution)? / v))
}

/// Completed dwell durations in a sampled cell sequence.
///
/// The first and last runs are cut off by the observation window and are
/// dropped. A sequence that never changes cell yields one dwell spanning
/// the whole window.
pub fn dwell_durations(cells: &[CellId], step_s: f64) -> Vec<f64> {
    let changes: Vec<usize> = (1..cells.len()).filter(|&k| cells[k] != cells[k - 1]).collect();
    if changes.is_empty() {
        return if cells.is_empty() {
            Vec::new()
        } else {
            vec![(cells.len() - 1) as f64 * step_s]
        };
    }
    changes.windows(2).map(|w| (w[1] - w[0]) as f64 * step_s).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DwellSummary {
    pub count: usize,
    pub mean_s: f64,
    pub median_s: f64,
    pub p10_s: f64,
    pub p90_s: f64,
}

impl DwellSummary {
    fn from_samples(mut v: Vec<f64>) -> Option<Self> {
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        Some(Self {
            count: v.len(),
            mean_s: mean,
            median_s: quantile(&v, 0.5),
            p10_s: quantile(&v, 0.1),
            p90_s: quantile(&v, 0.9),
        })
    }
}

/// Linear interpolation between closest ranks of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Samples every satellite's cell at resolution `r` every `step_s` seconds
/// over `[0, duration_s]` and summarises the completed dwells.
pub fn dwelling_time_empirical(
    constellation: &Constellation,
    r: u8,
    duration_s: f64,
    step_s: f64,
) -> Result<DwellSummary, MetricsError> {
    dwelling_time_empirical_for(constellation, constellation.satellites(), r, duration_s, step_s)
}

/// As [`dwelling_time_empirical`], tracking only `satellites`.
pub fn dwelling_time_empirical_for(
    constellation: &Constellation,
    satellites: &[SatId],
    r: u8,
    duration_s: f64,
    step_s: f64,
) -> Result<DwellSummary, MetricsError> {
    if !(step_s > 0.0 && step_s <= 1.0) {
        return Err(MetricsError::Step(step_s));
    }
    if r > MAX_HEX_RESOLUTION {
        return Err(crate::geogrid::GridError::Resolution {
            scheme: crate::geogrid::GridScheme::HexHier,
            resolution: r,
        }
        .into());
    }
    let samples = (duration_s / step_s).floor() as usize + 1;
    let per_sat: Result<Vec<Vec<f64>>, MetricsError> = satellites
        .par_iter()
        .map(|&id| {
            let mut cells = Vec::with_capacity(samples);
            for k in 0..samples {
                let p = constellation.subpoint(id, k as f64 * step_s)?;
                cells.push(cell_index(&p, r)?);
            }
            // a satellite that never left its cell has no completed dwell
            let moved = cells.windows(2).any(|w| w[0] != w[1]);
            Ok(if moved { dwell_durations(&cells, step_s) } else { Vec::new() })
        })
        .collect();
    let all: Vec<f64> = per_sat?.into_iter().flatten().collect();
    DwellSummary::from_samples(all).ok_or(MetricsError::NoCompletedDwell { duration_s })
}
