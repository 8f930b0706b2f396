//! The epoch loop.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;

use rand::Rng;
use serde::Serialize;

use super::experiments::{bier_star_delivery, sample_failures};
use super::output::CsvRow;
use super::rng::{stream, Purpose};
use super::spec::{MemberFilter, Method, ScenarioSpec, SourceSpec, TerminalSource};
use super::SimError;
use crate::baselines::{greedy_multicast, segmented_bitstring_bits, traditional_bitstring_bits, PartitionScheme};
use crate::geogrid::{cell_index, GeoPoint};
use crate::membership::{
    generate_terminals, nearest_covering, read_terminals_csv, AssignmentPolicy, GroupId, IngressRegistry,
    MembershipEvent, Terminal,
};
use crate::metrics::reach_rate;
use crate::orbit::SatId;
use crate::protocol::{DeliveryReport, Header};

/// One metric value for one (epoch, group, method).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub epoch: u64,
    pub time_s: f64,
    pub group_id: GroupId,
    pub method: Method,
    pub metric: &'static str,
    pub value: f64,
}

impl CsvRow for MetricRow {
    const HEADER: &'static [&'static str] = &["epoch", "time_s", "group_id", "method", "metric", "value"];
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EventCounts {
    pub joins: u32,
    pub leaves: u32,
    pub handovers: u32,
    pub refreshes: u32,
    pub expired: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochTrace {
    pub epoch: u64,
    pub time_s: f64,
    pub satellites: usize,
    pub links: usize,
    pub failed_links: usize,
    pub failed_nodes: usize,
    pub events: EventCounts,
    pub headers: BTreeMap<GroupId, Header>,
    pub reports: BTreeMap<(GroupId, Method), DeliveryReport>,
    pub rows: Vec<MetricRow>,
}

pub fn load_terminals(spec: &ScenarioSpec) -> Result<Vec<Terminal>, SimError> {
    match &spec.terminals {
        TerminalSource::Csv { csv } => {
            let f = File::open(csv).map_err(|e| SimError::Read {
                path: csv.clone(),
                source: e,
            })?;
            Ok(read_terminals_csv(f)?)
        }
        TerminalSource::Generated(g) => Ok(generate_terminals(g, &mut stream(spec.seed, Purpose::Terminals, 0, 0))?),
    }
}

fn select_members(spec: &ScenarioSpec, terminals: &[Terminal]) -> Result<Vec<Vec<usize>>, SimError> {
    let mut out = Vec::new();
    let mut empty = Vec::new();
    for (gi, g) in spec.groups.iter().enumerate() {
        let picked: Vec<usize> = match &g.members {
            MemberFilter::All => (0..terminals.len()).collect(),
            MemberFilter::Range { start, end } => (0..terminals.len())
                .filter(|&i| (*start..*end).contains(&terminals[i].id.0))
                .collect(),
            MemberFilter::Region { lat, lon, radius_km } => {
                let c = GeoPoint::new(*lat, *lon)?;
                (0..terminals.len())
                    .filter(|&i| terminals[i].location_at(0.0).distance_km(&c) <= *radius_km)
                    .collect()
            }
            MemberFilter::Sample { fraction } => {
                let mut rng = stream(spec.seed, Purpose::Groups, 0, gi as u64);
                (0..terminals.len()).filter(|_| rng.random::<f64>() < *fraction).collect()
            }
        };
        if picked.is_empty() {
            empty.push(format!("group {} selects no terminals", g.group_id));
        }
        out.push(picked);
    }
    if empty.is_empty() {
        Ok(out)
    } else {
        Err(SimError::Invalid(empty))
    }
}

/// Runs every epoch of `spec`. Identical specs give identical traces.
pub fn run(spec: &ScenarioSpec) -> Result<Vec<EpochTrace>, SimError> {
    spec.validate()?;
    let constellation = spec.build_constellation()?;
    let terminals = load_terminals(spec)?;
    let members = select_members(spec, &terminals)?;
    let mut registry = IngressRegistry::new(spec.membership.refresh_interval_s, spec.membership.timeout_s);
    for g in &spec.groups {
        registry.register_group(g.group_id);
    }
    let in_any: BTreeSet<usize> = members.iter().flatten().copied().collect();
    let mask = spec.elevation_mask_deg;
    let mut traces = Vec::new();

    for epoch in 0..spec.epochs() {
        let t = epoch as f64 * spec.epoch_s;
        let snapshot = constellation.propagate(t)?;
        let failures = sample_failures(&snapshot, &spec.failures, &mut stream(spec.seed, Purpose::Failures, epoch, 0));
        let serving: BTreeMap<usize, Option<SatId>> = in_any
            .iter()
            .map(|&i| {
                let p = terminals[i].location_at(t);
                (i, nearest_covering(&p, &snapshot, mask, AssignmentPolicy::Nearest))
            })
            .collect();

        let mut events = EventCounts::default();
        for (g, picked) in spec.groups.iter().zip(&members) {
            for &i in picked {
                let Some(ev) = registry.reconcile(g.group_id, terminals[i].id, serving[&i], t) else {
                    continue;
                };
                match ev {
                    MembershipEvent::Join { .. } => events.joins += 1,
                    MembershipEvent::Leave { .. } => events.leaves += 1,
                    MembershipEvent::Handover { .. } => events.handovers += 1,
                    MembershipEvent::Refresh { .. } => events.refreshes += 1,
                }
                registry.process_event(ev, t)?;
            }
        }
        events.expired = registry.prune(t) as u32;

        let mut trace = EpochTrace {
            epoch,
            time_s: t,
            satellites: snapshot.len(),
            links: snapshot.graph().edges().len(),
            failed_links: failures.failed_links().count(),
            failed_nodes: failures.failed_nodes().count(),
            events,
            headers: BTreeMap::new(),
            reports: BTreeMap::new(),
            rows: Vec::new(),
        };

        for (g, picked) in spec.groups.iter().zip(&members) {
            let gid = g.group_id;
            let src = match &g.source {
                SourceSpec::Satellite { sat } => Some(sat.parse::<SatId>()?),
                SourceSpec::Gateway { lat, lon } => {
                    nearest_covering(&GeoPoint::new(*lat, *lon)?, &snapshot, mask, AssignmentPolicy::Nearest)
                }
            };
            let Some(src) = src else {
                log::warn!("epoch {epoch}: group {gid} gateway has no covering satellite");
                continue;
            };
            let dests = registry.active_destination_sats(gid, t);
            let active: Vec<Terminal> = picked
                .iter()
                .filter(|&&i| registry.record(gid, terminals[i].id).is_some())
                .map(|&i| terminals[i].clone())
                .collect();
            let mut push = |method: Method, metric: &'static str, value: f64| {
                trace.rows.push(MetricRow {
                    epoch,
                    time_s: t,
                    group_id: gid,
                    method,
                    metric,
                    value,
                })
            };
            for &m in &spec.methods {
                let scheme = match m {
                    Method::Traditional => {
                        push(m, "header_bits", traditional_bitstring_bits(active.len()) as f64);
                        continue;
                    }
                    Method::GeoR0 => PartitionScheme::GeoCells(0),
                    Method::GeoR1 => PartitionScheme::GeoCells(1),
                    Method::SatFoot => PartitionScheme::SatFootprint,
                    _ => {
                        if dests.is_empty() {
                            log::debug!("epoch {epoch}: group {gid} has no active members");
                            continue;
                        }
                        let report = if m == Method::BierStar {
                            let out = bier_star_delivery(&snapshot, &failures, src, &dests, spec.resolution, gid, spec.ttl)?;
                            let bits = match &out.header {
                                Some(h) => h.bit_len()?,
                                None => 0,
                            };
                            push(m, "header_bits", bits as f64);
                            push(m, "ttl_drops", out.report.ttl_drops as f64);
                            push(m, "unroutable", out.report.unroutable.len() as f64);
                            push(m, "replications", out.report.replications as f64);
                            if let Some(ur) = spec.user_resolution {
                                let cells: BTreeSet<_> = active
                                    .iter()
                                    .map(|term| cell_index(&term.location_at(t), ur))
                                    .collect::<Result<_, _>>()?;
                                push(m, "member_cells", cells.len() as f64);
                            }
                            if let Some(h) = out.header {
                                trace.headers.insert(gid, h);
                            }
                            out.report
                        } else {
                            let v = spec.greedy.variant(m).expect("remaining methods are greedy");
                            greedy_multicast(v, src, &dests, &snapshot, &failures, spec.ttl)?.report
                        };
                        let reached = dests.iter().filter(|d| report.delivered.contains_key(d)).count();
                        push(m, "destinations", dests.len() as f64);
                        push(m, "reached", reached as f64);
                        push(m, "reach_rate", reach_rate(&report, &dests)?);
                        push(m, "transmissions", report.transmissions as f64);
                        trace.reports.insert((gid, m), report);
                        continue;
                    }
                };
                let seg = segmented_bitstring_bits(&active, scheme, &snapshot, mask)?;
                push(m, "header_bits", seg.max_partition as f64);
            }
        }
        log::info!(
            "epoch {epoch} t={t}s joins={} handovers={} leaves={} expired={}",
            events.joins,
            events.handovers,
            events.leaves,
            events.expired
        );
        traces.push(trace);
    }
    Ok(traces)
}
