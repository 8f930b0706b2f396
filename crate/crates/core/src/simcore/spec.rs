//! Scenario files: schema, overrides and validation.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::baselines::GreedyVariant;
use crate::geogrid::{GeoPoint, MAX_HEX_RESOLUTION};
use crate::membership::{Cluster, GroupId, TerminalGenerator};
use crate::orbit::{Constellation, SatId, ShellSpec};
use crate::protocol::DEFAULT_TTL;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub seed: u64,
    pub constellation: Vec<ShellSpec>,
    /// Header cell resolution in the satellite layer.
    #[serde(default = "default_resolution")]
    pub resolution: u8,
    /// Resolution at which member locations are aggregated in the user
    /// layer. Independent of `resolution`.
    #[serde(default)]
    pub user_resolution: Option<u8>,
    #[serde(default = "default_epoch")]
    pub epoch_s: f64,
    pub duration_s: f64,
    #[serde(default = "default_mask")]
    pub elevation_mask_deg: f64,
    #[serde(default = "default_ttl")]
    pub ttl: u32,
    #[serde(default)]
    pub membership: MembershipConfig,
    pub terminals: TerminalSource,
    #[serde(default)]
    pub groups: Vec<GroupSpec>,
    #[serde(default)]
    pub failures: FailureModel,
    #[serde(default = "Method::all")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub greedy: GreedyParams,
    #[serde(default)]
    pub experiments: Experiments,
}

fn default_resolution() -> u8 {
    4
}
fn default_epoch() -> f64 {
    15.0
}
fn default_mask() -> f64 {
    25.0
}
fn default_ttl() -> u32 {
    DEFAULT_TTL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MembershipConfig {
    pub refresh_interval_s: f64,
    pub timeout_s: f64,
}

impl Default for MembershipConfig {
    fn default() -> Self {
        Self {
            refresh_interval_s: 30.0,
            timeout_s: 90.0,
        }
    }
}

/// Terminals come from a CSV file or a seeded generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TerminalSource {
    Csv { csv: PathBuf },
    Generated(TerminalGenerator),
}

/// Which terminals belong to a group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MemberFilter {
    All,
    /// Terminal ids in `start..end`.
    Range { start: u64, end: u64 },
    /// Terminals within `radius_km` of a point at t = 0.
    Region { lat: f64, lon: f64, radius_km: f64 },
    /// Each terminal independently with probability `fraction`.
    Sample { fraction: f64 },
}

/// Where a group's traffic enters the constellation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SourceSpec {
    /// A satellite named `shell/plane/slot`.
    Satellite { sat: String },
    /// A ground gateway attached to its nearest covering satellite.
    Gateway { lat: f64, lon: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub group_id: GroupId,
    pub members: MemberFilter,
    pub source: SourceSpec,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FailureModel {
    #[default]
    None,
    /// Every link and satellite fails independently each epoch.
    Random { link_rate: f64, node_rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    BierStar,
    Traditional,
    GeoR0,
    GeoR1,
    SatFoot,
    PureGreedy,
    GreedySwitch,
    GreedyPerimeter,
}

impl Method {
    pub fn all() -> Vec<Method> {
        vec![
            Method::BierStar,
            Method::Traditional,
            Method::GeoR0,
            Method::GeoR1,
            Method::SatFoot,
            Method::PureGreedy,
            Method::GreedySwitch,
            Method::GreedyPerimeter,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::BierStar => "bier-star",
            Method::Traditional => "traditional",
            Method::GeoR0 => "geo-r0",
            Method::GeoR1 => "geo-r1",
            Method::SatFoot => "sat-foot",
            Method::PureGreedy => "pure-greedy",
            Method::GreedySwitch => "greedy-switch",
            Method::GreedyPerimeter => "greedy-perimeter",
        }
    }

    pub fn is_greedy(&self) -> bool {
        matches!(self, Method::PureGreedy | Method::GreedySwitch | Method::GreedyPerimeter)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GreedyParams {
    pub switch_slack_km: f64,
    pub max_switches: u32,
    pub perimeter_steps: u32,
}

impl Default for GreedyParams {
    fn default() -> Self {
        Self {
            switch_slack_km: 250.0,
            max_switches: 1,
            perimeter_steps: 4,
        }
    }
}

impl GreedyParams {
    pub fn variant(&self, m: Method) -> Option<GreedyVariant> {
        match m {
            Method::PureGreedy => Some(GreedyVariant::PureGreedy),
            Method::GreedySwitch => Some(GreedyVariant::GreedyWithSwitch {
                switch_slack_km: self.switch_slack_km,
                max_switches: self.max_switches,
            }),
            Method::GreedyPerimeter => Some(GreedyVariant::GreedyPerimeter {
                max_steps: self.perimeter_steps,
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Experiments {
    pub bitstring: BitstringExperiment,
    pub reach: ReachExperiment,
    pub dwell: DwellExperiment,
    pub resilience: ResilienceExperiment,
}

/// Terminal populations packed into one region and fed from one gateway.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BitstringExperiment {
    pub terminal_counts: Vec<usize>,
    pub region: Region,
    /// Gateway `[lat, lon]`.
    pub gateway: [f64; 2],
    /// Also report segmented sizes plus the segment identifier.
    pub segment_id_rows: bool,
}

impl Default for BitstringExperiment {
    fn default() -> Self {
        Self {
            terminal_counts: vec![100, 1_000, 10_000],
            region: Region::Corridor {
                from: [40.7, -74.0],
                to: [42.4, -71.0],
                width_km: 100.0,
            },
            gateway: [47.6, -122.3],
            segment_id_rows: true,
        }
    }
}

/// Where the bitstring experiment places its terminals.
///
/// A corridor is bounded, so once every serving satellite is hit the
/// destination set stops growing with the population. A Gaussian cluster keeps
/// adding satellites from its tails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum Region {
    Corridor { from: [f64; 2], to: [f64; 2], width_km: f64 },
    Cluster { lat: f64, lon: f64, sigma_km: f64 },
}

impl Region {
    pub fn generator(&self, count: usize) -> TerminalGenerator {
        match *self {
            Self::Corridor { from, to, width_km } => TerminalGenerator::Corridor {
                count,
                from,
                to,
                width_km,
            },
            Self::Cluster { lat, lon, sigma_km } => TerminalGenerator::Clustered {
                count,
                clusters: vec![Cluster { lat, lon, sigma_km }],
            },
        }
    }
}

/// Random source and destination satellites at random instants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReachExperiment {
    pub scenarios: u32,
    pub destinations: usize,
}

impl Default for ReachExperiment {
    fn default() -> Self {
        Self {
            scenarios: 20,
            destinations: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DwellExperiment {
    /// Empty means the first shell's own inclination.
    pub inclinations_deg: Vec<f64>,
    pub resolutions: Vec<u8>,
    pub periods: f64,
    pub step_s: f64,
    /// Track every n-th satellite.
    pub satellite_stride: usize,
}

impl Default for DwellExperiment {
    fn default() -> Self {
        Self {
            inclinations_deg: Vec::new(),
            resolutions: (0..=MAX_HEX_RESOLUTION).collect(),
            periods: 2.0,
            step_s: 1.0,
            satellite_stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResilienceExperiment {
    pub resolutions: Vec<u8>,
    pub samples: u32,
    pub destinations: usize,
}

impl Default for ResilienceExperiment {
    fn default() -> Self {
        Self {
            resolutions: vec![0],
            samples: 20,
            destinations: 3,
        }
    }
}

impl ScenarioSpec {
    /// Reads a scenario file, applying `key=value` overrides first. Relative
    /// CSV paths resolve against the file's directory.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Read {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut spec = Self::from_toml(&text, overrides)?;
        if let TerminalSource::Csv { csv } = &mut spec.terminals {
            if csv.is_relative() {
                if let Some(dir) = path.parent() {
                    *csv = dir.join(&*csv);
                }
            }
        }
        Ok(spec)
    }

    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self, SimError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| SimError::Parse(e.to_string()))?;
        let mut root = toml::Value::Table(table);
        for o in overrides {
            apply_override(&mut root, o)?;
        }
        root.try_into()
            .map_err(|e: toml::de::Error| SimError::Parse(e.to_string()))
    }

    /// Every problem with the scenario, or `Ok` when there is none.
    pub fn validate(&self) -> Result<(), SimError> {
        let mut errs = Vec::new();
        if self.constellation.is_empty() {
            errs.push("constellation has no shells".to_string());
        } else {
            for s in &self.constellation {
                if let Err(e) = s.validate() {
                    errs.push(format!("constellation: {e}"));
                }
            }
            let ids: BTreeSet<u8> = self.constellation.iter().map(|s| s.shell_id).collect();
            if ids.len() != self.constellation.len() {
                errs.push("constellation: duplicate shell_id".to_string());
            }
        }
        let res_range = |name: &str, r: u8, errs: &mut Vec<String>| {
            if r > MAX_HEX_RESOLUTION {
                errs.push(format!("{name} {r}: resolution out of range 0..{MAX_HEX_RESOLUTION}"));
            }
        };
        res_range("resolution", self.resolution, &mut errs);
        if let Some(u) = self.user_resolution {
            res_range("user_resolution", u, &mut errs);
        }
        if !(self.epoch_s > 0.0) {
            errs.push(format!("epoch_s {} must be positive", self.epoch_s));
        } else if !(self.duration_s >= self.epoch_s) {
            errs.push(format!("duration_s {} shorter than one epoch", self.duration_s));
        } else {
            let n = self.duration_s / self.epoch_s;
            if (n - n.round()).abs() > 1e-9 {
                errs.push(format!(
                    "duration_s {} is not a multiple of epoch_s {}",
                    self.duration_s, self.epoch_s
                ));
            }
        }
        if !(0.0..=90.0).contains(&self.elevation_mask_deg) {
            errs.push(format!("elevation_mask_deg {} outside 0..90", self.elevation_mask_deg));
        }
        if self.ttl == 0 {
            errs.push("ttl must be at least 1".to_string());
        }
        let m = &self.membership;
        if !(m.refresh_interval_s > 0.0 && m.timeout_s > 0.0) {
            errs.push("membership intervals must be positive".to_string());
        }
        match &self.terminals {
            TerminalSource::Csv { csv } if csv.as_os_str().is_empty() => errs.push("terminals.csv is empty".to_string()),
            TerminalSource::Csv { .. } => {}
            TerminalSource::Generated(g) => errs.extend(g.problems().into_iter().map(|p| format!("terminals: {p}"))),
        }
        let mut group_ids = BTreeSet::new();
        for g in &self.groups {
            let tag = format!("group {}", g.group_id);
            if !group_ids.insert(g.group_id) {
                errs.push(format!("{tag}: duplicate group_id"));
            }
            match &g.members {
                MemberFilter::All => {}
                MemberFilter::Range { start, end } if start >= end => {
                    errs.push(format!("{tag}: member range {start}..{end} is empty"))
                }
                MemberFilter::Range { .. } => {}
                MemberFilter::Region { lat, lon, radius_km } => {
                    if GeoPoint::new(*lat, *lon).is_err() {
                        errs.push(format!("{tag}: region centre ({lat}, {lon}) invalid"));
                    }
                    if !(*radius_km > 0.0) {
                        errs.push(format!("{tag}: region radius must be positive"));
                    }
                }
                MemberFilter::Sample { fraction } => {
                    if !(*fraction > 0.0 && *fraction <= 1.0) {
                        errs.push(format!("{tag}: sample fraction {fraction} outside (0, 1]"));
                    }
                }
            }
            match &g.source {
                SourceSpec::Satellite { sat } => match sat.parse::<SatId>() {
                    Ok(id) => {
                        let known = self.constellation.iter().any(|s| {
                            s.shell_id == id.shell && (id.plane as u32) < s.planes && (id.slot as u32) < s.sats_per_plane
                        });
                        if !known {
                            errs.push(format!("{tag}: source satellite {sat} not in constellation"));
                        }
                    }
                    Err(_) => errs.push(format!("{tag}: source satellite {sat:?} is not shell/plane/slot")),
                },
                SourceSpec::Gateway { lat, lon } => {
                    if GeoPoint::new(*lat, *lon).is_err() {
                        errs.push(format!("{tag}: gateway ({lat}, {lon}) invalid"));
                    }
                }
            }
        }
        if let FailureModel::Random { link_rate, node_rate } = self.failures {
            for (name, v) in [("link_rate", link_rate), ("node_rate", node_rate)] {
                if !(0.0..=1.0).contains(&v) {
                    errs.push(format!("failures.{name} {v} outside 0..1"));
                }
            }
        }
        if self.methods.is_empty() {
            errs.push("methods is empty".to_string());
        }
        let g = &self.greedy;
        if !(g.switch_slack_km >= 0.0) {
            errs.push("greedy.switch_slack_km must be non-negative".to_string());
        }
        let ex = &self.experiments;
        if ex.bitstring.terminal_counts.is_empty() {
            errs.push("experiments.bitstring.terminal_counts is empty".to_string());
        }
        for p in ex.bitstring.region.generator(1).problems() {
            errs.push(format!("experiments.bitstring.region: {p}"));
        }
        let [glat, glon] = ex.bitstring.gateway;
        if GeoPoint::new(glat, glon).is_err() {
            errs.push("experiments.bitstring.gateway invalid".to_string());
        }
        if ex.reach.destinations == 0 {
            errs.push("experiments.reach.destinations must be positive".to_string());
        }
        for &r in &ex.dwell.resolutions {
            res_range("experiments.dwell.resolutions", r, &mut errs);
        }
        for &i in &ex.dwell.inclinations_deg {
            if !(0.0..180.0).contains(&i) {
                errs.push(format!("experiments.dwell inclination {i} outside 0..180"));
            }
        }
        if !(ex.dwell.step_s > 0.0 && ex.dwell.step_s <= 1.0) {
            errs.push(format!("experiments.dwell.step_s {} outside (0, 1]", ex.dwell.step_s));
        }
        if !(ex.dwell.periods > 0.0) {
            errs.push("experiments.dwell.periods must be positive".to_string());
        }
        if ex.dwell.satellite_stride == 0 {
            errs.push("experiments.dwell.satellite_stride must be positive".to_string());
        }
        for &r in &ex.resilience.resolutions {
            res_range("experiments.resilience.resolutions", r, &mut errs);
        }
        if ex.resilience.destinations == 0 {
            errs.push("experiments.resilience.destinations must be positive".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(SimError::Invalid(errs))
        }
    }

    pub fn build_constellation(&self) -> Result<Constellation, SimError> {
        Ok(Constellation::new(self.constellation.clone())?)
    }

    pub fn epochs(&self) -> u64 {
        (self.duration_s / self.epoch_s).round() as u64
    }
}

/// Sets a dotted path such as `experiments.reach.scenarios=5` or
/// `constellation.0.planes=4`. The value is read as a TOML value, falling
/// back to a bare string.
pub fn apply_override(root: &mut toml::Value, assignment: &str) -> Result<(), SimError> {
    let bad = |why: &str| SimError::Override(format!("{assignment}: {why}"));
    let (key, raw) = assignment.split_once('=').ok_or_else(|| bad("expected key=value"))?;
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key just written"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(bad("empty key segment"));
    }
    set_path(root, &parts, value).map_err(bad)
}

fn set_path(node: &mut toml::Value, parts: &[&str], value: toml::Value) -> Result<(), &'static str> {
    let (head, rest) = parts.split_first().expect("non-empty path");
    let child = match node {
        toml::Value::Table(t) => {
            if rest.is_empty() {
                t.insert(head.to_string(), value);
                return Ok(());
            }
            t.entry(head.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
        }
        toml::Value::Array(items) => {
            let i: usize = head.parse().map_err(|_| "array needs a numeric index")?;
            items.get_mut(i).ok_or("index out of range")?
        }
        _ => return Err("path goes through a non-table value"),
    };
    if rest.is_empty() {
        *child = value;
        Ok(())
    } else {
        set_path(child, rest, value)
    }
}
