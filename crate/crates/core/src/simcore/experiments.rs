//! Stand-alone experiments, one per metric CSV.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;

use super::output::CsvRow;
use super::rng::{stream, Purpose};
use super::spec::{FailureModel, Method, ScenarioSpec};
use super::SimError;
use crate::baselines::{
    greedy_multicast, segment_id_bits, segmented_bitstring_bits, traditional_bitstring_bits, PartitionScheme,
};
use crate::geogrid::GeoPoint;
use crate::graph::Failures;
use crate::membership::{generate_terminals, nearest_covering, AssignmentPolicy};
use crate::metrics::{
    dwelling_time_analytic, dwelling_time_empirical_for, reach_rate, resilience, DwellParams, MetricsError,
};
use crate::orbit::{Constellation, SatId, Snapshot};
use crate::protocol::{encode, run_multicast, DeliveryReport, ForwardEnv, Header, ProtocolError};

/// Independent link and node failures drawn from `rng`, links first in
/// edge order, then nodes in index order.
pub fn sample_failures<R: Rng>(snapshot: &Snapshot, model: &FailureModel, rng: &mut R) -> Failures {
    let mut f = Failures::none();
    if let FailureModel::Random { link_rate, node_rate } = *model {
        for e in snapshot.graph().edges() {
            if rng.random::<f64>() < link_rate {
                f.fail_link(e.a, e.b);
            }
        }
        for n in 0..snapshot.len() {
            if rng.random::<f64>() < node_rate {
                f.fail_node(n);
            }
        }
    }
    f
}

#[derive(Debug, Clone, PartialEq)]
pub struct BierStarOutcome {
    /// `None` when no destination was reachable at encoding time.
    pub header: Option<Header>,
    pub report: DeliveryReport,
    /// Destinations the ingress could not reach and left out of the header.
    pub unencodable: BTreeSet<SatId>,
}

/// Encodes at the ingress over the intact graph and forwards under
/// `failures`, which the ingress does not know about.
pub fn bier_star_delivery(
    snapshot: &Snapshot,
    failures: &Failures,
    src: SatId,
    destinations: &BTreeSet<SatId>,
    r: u8,
    group_id: u32,
    ttl: u32,
) -> Result<BierStarOutcome, SimError> {
    let mut dests = destinations.clone();
    let mut unencodable = BTreeSet::new();
    let header = loop {
        if dests.is_empty() {
            break None;
        }
        match encode(snapshot, src, &dests, r, group_id, &Failures::none()) {
            Ok(h) => break Some(h),
            Err(ProtocolError::Unreachable(missing)) => {
                for m in missing {
                    dests.remove(&m);
                    unencodable.insert(m);
                }
            }
            Err(e) => return Err(e.into()),
        }
    };
    let report = match &header {
        Some(h) => {
            let members = destinations
                .iter()
                .map(|d| snapshot.require(*d))
                .collect::<Result<BTreeSet<_>, _>>()?;
            let env = ForwardEnv::new(snapshot, failures, members, ttl);
            run_multicast(&env, h, src)?
        }
        None => DeliveryReport::default(),
    };
    Ok(BierStarOutcome {
        header,
        report,
        unencodable,
    })
}

fn gateway_satellite(p: &GeoPoint, snapshot: &Snapshot, mask: f64) -> Result<SatId, SimError> {
    nearest_covering(p, snapshot, mask, AssignmentPolicy::Nearest)
        .ok_or_else(|| SimError::NoCoverage(format!("gateway at ({}, {})", p.lat(), p.lon())))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BitstringRow {
    pub method: String,
    pub terminals: usize,
    /// Empty for methods that do not partition by cell.
    pub resolution: Option<u8>,
    pub bits: u64,
}

impl CsvRow for BitstringRow {
    const HEADER: &'static [&'static str] = &["method", "terminals", "resolution", "bits"];
}

/// Header size per method as the terminal population of one region grows.
pub fn bitstring_experiment(spec: &ScenarioSpec) -> Result<Vec<BitstringRow>, SimError> {
    spec.validate()?;
    let ex = &spec.experiments.bitstring;
    let constellation = spec.build_constellation()?;
    let snapshot = constellation.propagate(0.0)?;
    let mask = spec.elevation_mask_deg;
    let gateway = GeoPoint::new(ex.gateway[0], ex.gateway[1])?;
    let src = gateway_satellite(&gateway, &snapshot, mask)?;
    let mut rows = Vec::new();
    for (k, &n) in ex.terminal_counts.iter().enumerate() {
        let terminals = generate_terminals(&ex.region.generator(n), &mut stream(spec.seed, Purpose::Bitstring, 0, k as u64))?;
        let row = |method: &str, resolution: Option<u8>, bits: u64| BitstringRow {
            method: method.to_string(),
            terminals: n,
            resolution,
            bits,
        };
        for &m in &spec.methods {
            let scheme = match m {
                Method::Traditional => {
                    rows.push(row(m.name(), None, traditional_bitstring_bits(n) as u64));
                    continue;
                }
                Method::GeoR0 => PartitionScheme::GeoCells(0),
                Method::GeoR1 => PartitionScheme::GeoCells(1),
                Method::SatFoot => PartitionScheme::SatFootprint,
                Method::BierStar => {
                    let dests: BTreeSet<SatId> = terminals
                        .iter()
                        .filter_map(|t| nearest_covering(&t.location, &snapshot, mask, AssignmentPolicy::Nearest))
                        .collect();
                    let header = encode(&snapshot, src, &dests, spec.resolution, 1, &Failures::none())?;
                    rows.push(row(m.name(), Some(spec.resolution), header.bit_len()? as u64));
                    continue;
                }
                _ => continue,
            };
            let seg = segmented_bitstring_bits(&terminals, scheme, &snapshot, mask)?;
            let res = match scheme {
                PartitionScheme::GeoCells(r) => Some(r),
                PartitionScheme::SatFootprint => None,
            };
            rows.push(row(m.name(), res, seg.max_partition as u64));
            if ex.segment_id_rows {
                let id_bits = segment_id_bits(scheme, snapshot.len())? as u64;
                rows.push(row(&format!("{}+segid", m.name()), res, seg.max_partition as u64 + id_bits));
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReachRow {
    pub method: String,
    pub constellation: String,
    pub seed: u64,
    pub destinations: usize,
    pub reached: usize,
    pub rate: f64,
}

impl CsvRow for ReachRow {
    const HEADER: &'static [&'static str] = &["method", "constellation", "seed", "destinations", "reached", "rate"];
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReachScenario {
    pub seed: u64,
    pub time_s: f64,
    pub src: SatId,
    pub destinations: BTreeSet<SatId>,
    /// Every destination is reachable from the source over live links.
    pub connected: bool,
    pub rates: BTreeMap<Method, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReachOutcome {
    pub rows: Vec<ReachRow>,
    pub scenarios: Vec<ReachScenario>,
}

/// Random source and destination satellites at a random instant per
/// scenario; every routing method sees the same instance.
pub fn reach_experiment(spec: &ScenarioSpec) -> Result<ReachOutcome, SimError> {
    spec.validate()?;
    let ex = &spec.experiments.reach;
    let constellation = spec.build_constellation()?;
    let period = constellation.shells()[0].period_s();
    let mut rows = Vec::new();
    let mut scenarios = Vec::new();
    for k in 0..ex.scenarios as u64 {
        let mut rng = stream(spec.seed, Purpose::Reach, 0, k);
        let t = rng.random_range(0.0..period);
        let snapshot = constellation.propagate(t)?;
        let n = snapshot.len();
        let want = ex.destinations.min(n.saturating_sub(1)).max(1);
        let picks = sample(&mut rng, n, (want + 1).min(n));
        let mut ids = picks.iter().map(|ix| snapshot.id_of(ix));
        let src = ids.next().expect("at least one satellite");
        let mut dests: BTreeSet<SatId> = ids.collect();
        if dests.is_empty() {
            dests.insert(src);
        }
        let failures = sample_failures(&snapshot, &spec.failures, &mut stream(spec.seed, Purpose::Failures, k, 1));
        let s = snapshot.require(src)?;
        let live = snapshot.graph().reachable_from(s, |a, b| failures.link_up(a, b));
        let connected = failures.node_up(s) && dests.iter().all(|d| live.contains(&snapshot.index_of(*d).unwrap()));
        let mut rates = BTreeMap::new();
        for &m in &spec.methods {
            let delivered = if m == Method::BierStar {
                bier_star_delivery(&snapshot, &failures, src, &dests, spec.resolution, 1, spec.ttl)?.report
            } else if let Some(v) = spec.greedy.variant(m) {
                greedy_multicast(v, src, &dests, &snapshot, &failures, spec.ttl)?.report
            } else {
                continue;
            };
            let rate = reach_rate(&delivered, &dests)?;
            let reached = dests.iter().filter(|d| delivered.delivered.contains_key(d)).count();
            rates.insert(m, rate);
            rows.push(ReachRow {
                method: m.name().to_string(),
                constellation: spec.name.clone(),
                seed: k,
                destinations: dests.len(),
                reached,
                rate,
            });
        }
        scenarios.push(ReachScenario {
            seed: k,
            time_s: t,
            src,
            destinations: dests,
            connected,
            rates,
        });
    }
    Ok(ReachOutcome { rows, scenarios })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DwellRow {
    pub constellation: String,
    pub inclination_deg: f64,
    pub resolution: u8,
    /// Empty when the analytic model has no finite value.
    pub analytic_s: Option<f64>,
    pub empirical_mean_s: Option<f64>,
    pub empirical_p90_s: Option<f64>,
}

impl CsvRow for DwellRow {
    const HEADER: &'static [&'static str] = &[
        "constellation",
        "inclination_deg",
        "resolution",
        "analytic_s",
        "empirical_mean_s",
        "empirical_p90_s",
    ];
}

/// Analytic and sampled dwell times of the first shell, per inclination and
/// resolution.
pub fn dwell_experiment(spec: &ScenarioSpec) -> Result<Vec<DwellRow>, SimError> {
    spec.validate()?;
    let ex = &spec.experiments.dwell;
    let base = spec.constellation[0].clone();
    let inclinations = if ex.inclinations_deg.is_empty() {
        vec![base.inclination_deg]
    } else {
        ex.inclinations_deg.clone()
    };
    let mut rows = Vec::new();
    for &inc in &inclinations {
        let shell = crate::orbit::ShellSpec {
            inclination_deg: inc,
            ..base.clone()
        };
        let duration = ex.periods * shell.period_s();
        let constellation = Constellation::build_walker(shell.clone())?;
        let tracked: Vec<SatId> = constellation
            .satellites()
            .iter()
            .step_by(ex.satellite_stride)
            .copied()
            .collect();
        for &r in &ex.resolutions {
            let params = DwellParams::new(inc.to_radians(), shell.altitude_km, r)?;
            let analytic = dwelling_time_analytic(&params)?.seconds();
            let empirical = match dwelling_time_empirical_for(&constellation, &tracked, r, duration, ex.step_s) {
                Ok(s) => Some(s),
                Err(MetricsError::NoCompletedDwell { .. }) => None,
                Err(e) => return Err(e.into()),
            };
            rows.push(DwellRow {
                constellation: spec.name.clone(),
                inclination_deg: inc,
                resolution: r,
                analytic_s: analytic,
                empirical_mean_s: empirical.map(|s| s.mean_s),
                empirical_p90_s: empirical.map(|s| s.p90_s),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResilienceRow {
    pub constellation: String,
    pub resolution: u8,
    pub max_removable_links: usize,
    pub max_removable_nodes: usize,
}

impl CsvRow for ResilienceRow {
    const HEADER: &'static [&'static str] = &["constellation", "resolution", "max_removable_links", "max_removable_nodes"];
}

/// Removal resilience inside the cell set a header encodes, one row per
/// sampled (source, destinations, instant).
pub fn resilience_experiment(spec: &ScenarioSpec) -> Result<Vec<ResilienceRow>, SimError> {
    spec.validate()?;
    let ex = &spec.experiments.resilience;
    let constellation = spec.build_constellation()?;
    let period = constellation.shells()[0].period_s();
    let mut rows = Vec::new();
    for &r in &ex.resolutions {
        for k in 0..ex.samples as u64 {
            let mut rng = stream(spec.seed, Purpose::Resilience, r as u64, k);
            let t = rng.random_range(0.0..period);
            let snapshot = constellation.propagate(t)?;
            let n = snapshot.len();
            if n < 2 {
                continue;
            }
            let picks = sample(&mut rng, n, (ex.destinations + 1).min(n));
            let mut ids = picks.iter().map(|ix| snapshot.id_of(ix));
            let src = ids.next().expect("two or more satellites");
            let dests: BTreeSet<SatId> = ids.collect();
            let header = encode(&snapshot, src, &dests, r, 1, &Failures::none())?;
            let cells: BTreeSet<_> = header.shells.iter().flat_map(|s| s.tree.cells()).collect();
            let rep = resilience(&snapshot, src, &dests, &cells)?;
            rows.push(ResilienceRow {
                constellation: spec.name.clone(),
                resolution: r,
                max_removable_links: rep.max_removable_links,
                max_removable_nodes: rep.max_removable_nodes,
            });
        }
    }
    Ok(rows)
}
