//! Walker constellations on circular orbits, +grid ISL wiring and per-epoch
//! snapshots.
//!
//! Positions are propagated in an inertial frame and rotated into an
//! Earth-fixed frame at the sidereal rate, so sub-satellite tracks drift
//! westward from one revolution to the next.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geogrid::{self, central_angle, CellId, GeoPoint, GridError, EARTH_RADIUS_KM};
use crate::graph::{IslGraph, NodeIx};

/// Standard gravitational parameter of the Earth, km^3/s^2.
pub const MU_EARTH: f64 = 398_600.441_8;
/// Sidereal day, s.
pub const SIDEREAL_DAY_S: f64 = 86_164.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrbitError {
    #[error("shell {0}: planes and sats_per_plane must be >= 1")]
    EmptyShell(u8),
    #[error("shell {shell}: inclination {inclination} outside [0, 180]")]
    Inclination { shell: u8, inclination: f64 },
    #[error("shell {shell}: phasing {phasing} outside [0, {planes})")]
    Phasing { shell: u8, phasing: u32, planes: u32 },
    #[error("shell {0}: altitude must be positive")]
    Altitude(u8),
    #[error("shell id {0} does not fit the 4-bit header field")]
    ShellId(u8),
    #[error("duplicate shell id {0}")]
    DuplicateShell(u8),
    #[error("constellation has no shells")]
    NoShells,
    #[error("negative propagation time {0}")]
    NegativeTime(f64),
    #[error("unknown satellite {0}")]
    UnknownSat(SatId),
    #[error("malformed satellite id {0:?}")]
    BadSatId(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WalkerPattern {
    /// Ascending nodes over 180 degrees; counter-rotating seam between the
    /// first and last plane.
    Star,
    /// Ascending nodes over 360 degrees.
    Delta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellSpec {
    pub shell_id: u8,
    pub altitude_km: f64,
    pub inclination_deg: f64,
    pub planes: u32,
    pub sats_per_plane: u32,
    #[serde(default)]
    pub phasing_f: u32,
    pub pattern: WalkerPattern,
}

impl ShellSpec {
    /// 72 x 22 at 53 deg, 550 km, Walker Delta.
    pub fn starlink_like() -> Self {
        Self {
            shell_id: 0,
            altitude_km: 550.0,
            inclination_deg: 53.0,
            planes: 72,
            sats_per_plane: 22,
            phasing_f: 1,
            pattern: WalkerPattern::Delta,
        }
    }

    /// 18 x 36 at 87.4 deg, 1200 km, Walker Star.
    pub fn oneweb_like() -> Self {
        Self {
            shell_id: 0,
            altitude_km: 1200.0,
            inclination_deg: 87.4,
            planes: 18,
            sats_per_plane: 36,
            phasing_f: 1,
            pattern: WalkerPattern::Star,
        }
    }

    pub fn validate(&self) -> Result<(), OrbitError> {
        if self.planes == 0 || self.sats_per_plane == 0 {
            return Err(OrbitError::EmptyShell(self.shell_id));
        }
        if !(0.0..=180.0).contains(&self.inclination_deg) {
            return Err(OrbitError::Inclination {
                shell: self.shell_id,
                inclination: self.inclination_deg,
            });
        }
        if self.phasing_f >= self.planes {
            return Err(OrbitError::Phasing {
                shell: self.shell_id,
                phasing: self.phasing_f,
                planes: self.planes,
            });
        }
        if !(self.altitude_km > 0.0) {
            return Err(OrbitError::Altitude(self.shell_id));
        }
        if self.shell_id > 15 {
            return Err(OrbitError::ShellId(self.shell_id));
        }
        Ok(())
    }

    pub fn satellite_count(&self) -> usize {
        self.planes as usize * self.sats_per_plane as usize
    }

    pub fn orbit_radius_km(&self) -> f64 {
        EARTH_RADIUS_KM + self.altitude_km
    }

    /// Orbital period, s.
    pub fn period_s(&self) -> f64 {
        orbital_period_s(self.altitude_km)
    }

    fn raan_rad(&self, plane: u32) -> f64 {
        let spread = match self.pattern {
            WalkerPattern::Star => PI,
            WalkerPattern::Delta => 2.0 * PI,
        };
        spread * plane as f64 / self.planes as f64
    }

    /// Argument of latitude at t = 0.
    fn initial_phase_rad(&self, plane: u32, slot: u32) -> f64 {
        let total = self.satellite_count() as f64;
        2.0 * PI * slot as f64 / self.sats_per_plane as f64
            + 2.0 * PI * self.phasing_f as f64 * plane as f64 / total
    }

    /// Inertial position of a satellite at time `t`, km.
    pub fn inertial_position(&self, plane: u32, slot: u32, t: f64) -> [f64; 3] {
        let r = self.orbit_radius_km();
        let n = 2.0 * PI / self.period_s();
        let u = self.initial_phase_rad(plane, slot) + n * t;
        let raan = self.raan_rad(plane);
        let inc = self.inclination_deg.to_radians();
        let (su, cu) = u.sin_cos();
        let (so, co) = raan.sin_cos();
        let (si, ci) = inc.sin_cos();
        [
            r * (co * cu - so * su * ci),
            r * (so * cu + co * su * ci),
            r * (su * si),
        ]
    }
}

fn earth_fixed_position(shell: &ShellSpec, id: SatId, t: f64) -> [f64; 3] {
    let (st, ct) = (2.0 * PI * t / SIDEREAL_DAY_S).sin_cos();
    let eci = shell.inertial_position(id.plane as u32, id.slot as u32, t);
    [ct * eci[0] + st * eci[1], -st * eci[0] + ct * eci[1], eci[2]]
}

/// Circular-orbit period for altitude `h`, s.
pub fn orbital_period_s(altitude_km: f64) -> f64 {
    2.0 * PI * ((EARTH_RADIUS_KM + altitude_km).powi(3) / MU_EARTH).sqrt()
}

/// Satellite address: shell, orbital plane, slot within the plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SatId {
    pub shell: u8,
    pub plane: u16,
    pub slot: u16,
}

impl SatId {
    pub fn new(shell: u8, plane: u16, slot: u16) -> Self {
        Self { shell, plane, slot }
    }
}

impl fmt::Display for SatId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.shell, self.plane, self.slot)
    }
}

impl FromStr for SatId {
    type Err = OrbitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || OrbitError::BadSatId(s.to_string());
        let parts: Vec<&str> = s.split('/').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        Ok(SatId {
            shell: parts[0].parse().map_err(|_| bad())?,
            plane: parts[1].parse().map_err(|_| bad())?,
            slot: parts[2].parse().map_err(|_| bad())?,
        })
    }
}

/// A validated set of shells.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    shells: Vec<ShellSpec>,
    sats: Vec<SatId>,
}

impl Constellation {
    pub fn new(mut shells: Vec<ShellSpec>) -> Result<Self, OrbitError> {
        if shells.is_empty() {
            return Err(OrbitError::NoShells);
        }
        shells.sort_by_key(|s| s.shell_id);
        for (i, s) in shells.iter().enumerate() {
            s.validate()?;
            if i > 0 && shells[i - 1].shell_id == s.shell_id {
                return Err(OrbitError::DuplicateShell(s.shell_id));
            }
        }
        let sats = shells
            .iter()
            .flat_map(|s| {
                (0..s.planes).flat_map(move |p| {
                    (0..s.sats_per_plane).map(move |k| SatId::new(s.shell_id, p as u16, k as u16))
                })
            })
            .collect();
        Ok(Self { shells, sats })
    }

    /// Single-shell constellation.
    pub fn build_walker(spec: ShellSpec) -> Result<Self, OrbitError> {
        Self::new(vec![spec])
    }

    pub fn shells(&self) -> &[ShellSpec] {
        &self.shells
    }

    pub fn shell(&self, shell_id: u8) -> Option<&ShellSpec> {
        self.shells.iter().find(|s| s.shell_id == shell_id)
    }

    /// Satellites in ascending [`SatId`] order; the position is the node index.
    pub fn satellites(&self) -> &[SatId] {
        &self.sats
    }

    pub fn len(&self) -> usize {
        self.sats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sats.is_empty()
    }

    /// +grid links as node-index pairs: slot +/- 1 within a plane (wrapping) and
    /// the same slot in plane +/- 1. Star shells have no link across the seam.
    pub fn plus_grid_pairs(&self) -> Vec<(NodeIx, NodeIx)> {
        let mut pairs = Vec::new();
        let mut base = 0usize;
        for s in &self.shells {
            let (planes, slots) = (s.planes as usize, s.sats_per_plane as usize);
            let ix = |p: usize, k: usize| base + p * slots + k;
            for p in 0..planes {
                for k in 0..slots {
                    if slots > 1 {
                        pairs.push((ix(p, k), ix(p, (k + 1) % slots)));
                    }
                    let next_plane = p + 1;
                    if next_plane < planes {
                        pairs.push((ix(p, k), ix(next_plane, k)));
                    } else if s.pattern == WalkerPattern::Delta && planes > 1 {
                        pairs.push((ix(p, k), ix(0, k)));
                    }
                }
            }
            base += planes * slots;
        }
        pairs
    }

    /// Positions and ISL graph at time `t` seconds after epoch.
    pub fn propagate(&self, t: f64) -> Result<Snapshot, OrbitError> {
        if !(t >= 0.0) {
            return Err(OrbitError::NegativeTime(t));
        }
        let sats = self
            .sats
            .iter()
            .map(|id| {
                let shell = self.shell(id.shell).expect("satellite belongs to a shell");
                let ecef = earth_fixed_position(shell, *id, t);
                SatState {
                    id: *id,
                    subpoint: GeoPoint::from_vector(ecef),
                    altitude_km: shell.altitude_km,
                    position_km: ecef,
                }
            })
            .collect();
        Ok(Snapshot::assemble(t, sats, self.plus_grid_pairs()))
    }

    /// Sub-satellite point of one satellite, without building a snapshot.
    pub fn subpoint(&self, id: SatId, t: f64) -> Result<GeoPoint, OrbitError> {
        if !(t >= 0.0) {
            return Err(OrbitError::NegativeTime(t));
        }
        let shell = self.shell(id.shell).ok_or(OrbitError::UnknownSat(id))?;
        if id.plane as u32 >= shell.planes || id.slot as u32 >= shell.sats_per_plane {
            return Err(OrbitError::UnknownSat(id));
        }
        Ok(GeoPoint::from_vector(earth_fixed_position(shell, id, t)))
    }

    /// +grid edge set with chord lengths at time `t`.
    pub fn plus_grid_isls(&self, t: f64) -> Result<Vec<(SatId, SatId, f64)>, OrbitError> {
        let snap = self.propagate(t)?;
        Ok(snap
            .graph()
            .edges()
            .iter()
            .map(|e| (snap.sat(e.a).id, snap.sat(e.b).id, e.weight_km))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SatState {
    pub id: SatId,
    pub subpoint: GeoPoint,
    pub altitude_km: f64,
    /// Earth-fixed position, km.
    pub position_km: [f64; 3],
}

/// Satellite positions and ISL graph at one instant.
#[derive(Debug, Clone)]
pub struct Snapshot {
    time_s: f64,
    sats: Vec<SatState>,
    graph: IslGraph,
    index: HashMap<SatId, NodeIx>,
}

impl Snapshot {
    fn assemble(time_s: f64, sats: Vec<SatState>, pairs: Vec<(NodeIx, NodeIx)>) -> Self {
        let edges = pairs
            .into_iter()
            .map(|(a, b)| (a, b, chord_km(&sats[a].position_km, &sats[b].position_km)));
        let graph = IslGraph::new(sats.len(), edges);
        let index = sats.iter().enumerate().map(|(i, s)| (s.id, i)).collect();
        Self {
            time_s,
            sats,
            graph,
            index,
        }
    }

    /// Builds a snapshot from explicit positions and links; satellites are
    /// re-ordered by id and edge weights are chord lengths.
    pub fn from_parts(
        time_s: f64,
        mut sats: Vec<(SatId, GeoPoint, f64)>,
        links: &[(SatId, SatId)],
    ) -> Result<Self, OrbitError> {
        sats.sort_by_key(|s| s.0);
        let states: Vec<SatState> = sats
            .into_iter()
            .map(|(id, p, alt)| {
                let u = p.to_unit();
                let r = EARTH_RADIUS_KM + alt;
                SatState {
                    id,
                    subpoint: p,
                    altitude_km: alt,
                    position_km: [u[0] * r, u[1] * r, u[2] * r],
                }
            })
            .collect();
        let index: HashMap<SatId, NodeIx> =
            states.iter().enumerate().map(|(i, s)| (s.id, i)).collect();
        let pairs = links
            .iter()
            .map(|(a, b)| {
                let ia = *index.get(a).ok_or(OrbitError::UnknownSat(*a))?;
                let ib = *index.get(b).ok_or(OrbitError::UnknownSat(*b))?;
                Ok((ia, ib))
            })
            .collect::<Result<Vec<_>, OrbitError>>()?;
        Ok(Self::assemble(time_s, states, pairs))
    }

    pub fn time_s(&self) -> f64 {
        self.time_s
    }

    pub fn len(&self) -> usize {
        self.sats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sats.is_empty()
    }

    pub fn sats(&self) -> &[SatState] {
        &self.sats
    }

    pub fn sat(&self, ix: NodeIx) -> &SatState {
        &self.sats[ix]
    }

    pub fn graph(&self) -> &IslGraph {
        &self.graph
    }

    pub fn index_of(&self, id: SatId) -> Option<NodeIx> {
        self.index.get(&id).copied()
    }

    pub fn require(&self, id: SatId) -> Result<NodeIx, OrbitError> {
        self.index_of(id).ok_or(OrbitError::UnknownSat(id))
    }

    pub fn id_of(&self, ix: NodeIx) -> SatId {
        self.sats[ix].id
    }

    /// Cell of the sub-satellite point of `ix` at resolution `r`.
    pub fn cell_of(&self, ix: NodeIx, r: u8) -> Result<CellId, GridError> {
        geogrid::cell_index(&self.sats[ix].subpoint, r)
    }

    /// Cells of every satellite at resolution `r`, by node index.
    pub fn cells(&self, r: u8) -> Result<Vec<CellId>, GridError> {
        (0..self.len()).map(|ix| self.cell_of(ix, r)).collect()
    }

    /// Great-circle distance between sub-satellite point `ix` and `p`, km.
    pub fn ground_distance_km(&self, ix: NodeIx, p: &GeoPoint) -> f64 {
        central_angle(&self.sats[ix].position_km, &p.to_unit()) * EARTH_RADIUS_KM
    }
}

fn chord_km(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Ground point on the mean sphere, km.
pub fn ground_position_km(p: &GeoPoint) -> [f64; 3] {
    let u = p.to_unit();
    [
        u[0] * EARTH_RADIUS_KM,
        u[1] * EARTH_RADIUS_KM,
        u[2] * EARTH_RADIUS_KM,
    ]
}

/// Straight-line distance from a terminal to a satellite, km.
pub fn slant_range_km(sat: &SatState, p: &GeoPoint) -> f64 {
    chord_km(&sat.position_km, &ground_position_km(p))
}

/// Elevation of a satellite above the local horizon of `p`, degrees.
pub fn elevation_deg(sat: &SatState, p: &GeoPoint) -> f64 {
    let g = ground_position_km(p);
    let d = [
        sat.position_km[0] - g[0],
        sat.position_km[1] - g[1],
        sat.position_km[2] - g[2],
    ];
    let up = p.to_unit();
    let range = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if range == 0.0 {
        return 90.0;
    }
    let sin_el = (d[0] * up[0] + d[1] * up[1] + d[2] * up[2]) / range;
    sin_el.clamp(-1.0, 1.0).asin().to_degrees()
}

/// Earth central angle covered around the sub-satellite point for an
/// elevation mask, radians.
pub fn coverage_half_angle_rad(altitude_km: f64, mask_deg: f64) -> f64 {
    let eps = mask_deg.to_radians();
    let ratio = EARTH_RADIUS_KM / (EARTH_RADIUS_KM + altitude_km);
    ((ratio * eps.cos()).clamp(-1.0, 1.0).acos() - eps).max(0.0)
}

/// Ground radius of the coverage footprint, km.
pub fn coverage_radius_km(altitude_km: f64, mask_deg: f64) -> f64 {
    coverage_half_angle_rad(altitude_km, mask_deg) * EARTH_RADIUS_KM
}

/// Whether `sat` clears the elevation mask at `p`.
pub fn covers(sat: &SatState, p: &GeoPoint, mask_deg: f64) -> bool {
    let lambda = coverage_half_angle_rad(sat.altitude_km, mask_deg);
    central_angle(&sat.position_km, &p.to_unit()) <= lambda + 1e-12
}

/// Coverage predicate for one satellite of a snapshot.
pub fn serving_candidates(
    sat: SatId,
    snapshot: &Snapshot,
    mask_deg: f64,
) -> Result<impl Fn(&GeoPoint) -> bool + '_, OrbitError> {
    let ix = snapshot.require(sat)?;
    let state = snapshot.sat(ix);
    Ok(move |p: &GeoPoint| covers(state, p, mask_deg))
}
