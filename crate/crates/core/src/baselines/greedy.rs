//! Greedy geographic unicast walks, merged into multicast by shared prefixes.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::geogrid::GeoPoint;
use crate::graph::{Failures, NodeIx};
use crate::orbit::{OrbitError, SatId, Snapshot};
use crate::protocol::DeliveryReport;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GreedyVariant {
    /// Strictly closer neighbour or give up.
    PureGreedy,
    /// At a local minimum, allow up to `max_switches` sideways moves to a
    /// neighbour at most `switch_slack_km` farther from the target.
    GreedyWithSwitch { switch_slack_km: f64, max_switches: u32 },
    /// At a local minimum, walk neighbours in clockwise order from the
    /// target bearing for up to `max_steps` hops, resuming greedy once closer
    /// than where it got stuck.
    GreedyPerimeter { max_steps: u32 },
}

impl GreedyVariant {
    pub fn switch() -> Self {
        Self::GreedyWithSwitch {
            switch_slack_km: 250.0,
            max_switches: 1,
        }
    }

    pub fn perimeter() -> Self {
        Self::GreedyPerimeter { max_steps: 4 }
    }
}

/// No admissible next hop (or the hop budget ran out) at `at`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stuck {
    pub at: NodeIx,
}

/// Per-walk bookkeeping carried between hops.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WalkState {
    pub visited: BTreeSet<NodeIx>,
    pub switches: u32,
    /// Distance at the local minimum and perimeter hops taken so far.
    pub perimeter: Option<(f64, u32)>,
}

impl WalkState {
    pub fn starting_at(src: NodeIx) -> Self {
        Self {
            visited: BTreeSet::from([src]),
            ..Self::default()
        }
    }
}

pub fn greedy_next_hop(
    variant: GreedyVariant,
    current: NodeIx,
    target: &GeoPoint,
    snapshot: &Snapshot,
    failures: &Failures,
    state: &mut WalkState,
) -> Result<NodeIx, Stuck> {
    let here = snapshot.ground_distance_km(current, target);
    let open: Vec<(f64, NodeIx)> = snapshot
        .graph()
        .neighbors(current)
        .iter()
        .filter(|&&(n, _)| failures.link_up(current, n) && !state.visited.contains(&n))
        .map(|&(n, _)| (snapshot.ground_distance_km(n, target), n))
        .collect();
    let best_closer = open
        .iter()
        .filter(|(d, _)| *d < here)
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|&(_, n)| n);

    if let Some((stuck_at, _)) = state.perimeter {
        if here < stuck_at {
            state.perimeter = None;
        }
    }
    if state.perimeter.is_none() {
        if let Some(n) = best_closer {
            return Ok(n);
        }
    }
    match variant {
        GreedyVariant::PureGreedy => Err(Stuck { at: current }),
        GreedyVariant::GreedyWithSwitch {
            switch_slack_km,
            max_switches,
        } => {
            if state.switches >= max_switches {
                return Err(Stuck { at: current });
            }
            let lateral = open
                .iter()
                .filter(|(d, _)| *d <= here + switch_slack_km)
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .map(|&(_, n)| n);
            match lateral {
                Some(n) => {
                    state.switches += 1;
                    Ok(n)
                }
                None => Err(Stuck { at: current }),
            }
        }
        GreedyVariant::GreedyPerimeter { max_steps } => {
            let (stuck_at, steps) = state.perimeter.unwrap_or((here, 0));
            if steps >= max_steps {
                return Err(Stuck { at: current });
            }
            let p = snapshot.sat(current).subpoint;
            let toward = p.bearing_rad(target);
            let next = open
                .iter()
                .map(|&(_, n)| {
                    let b = p.bearing_rad(&snapshot.sat(n).subpoint);
                    ((b - toward).rem_euclid(TAU), n)
                })
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .map(|(_, n)| n);
            match next {
                Some(n) => {
                    state.perimeter = Some((stuck_at, steps + 1));
                    Ok(n)
                }
                None => Err(Stuck { at: current }),
            }
        }
    }
}

/// Walks from `src` toward the sub-satellite point of `dst`.
pub fn greedy_walk(
    variant: GreedyVariant,
    src: NodeIx,
    dst: NodeIx,
    snapshot: &Snapshot,
    failures: &Failures,
    max_hops: u32,
) -> Result<Vec<NodeIx>, Stuck> {
    let target = snapshot.sat(dst).subpoint;
    let mut state = WalkState::starting_at(src);
    let mut path = vec![src];
    let mut cur = src;
    while cur != dst {
        if path.len() > max_hops as usize {
            return Err(Stuck { at: cur });
        }
        cur = greedy_next_hop(variant, cur, &target, snapshot, failures, &mut state)?;
        state.visited.insert(cur);
        path.push(cur);
    }
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GreedyReport {
    pub report: DeliveryReport,
    pub paths: BTreeMap<SatId, Vec<NodeIx>>,
    pub stuck: BTreeMap<SatId, NodeIx>,
}

/// Runs one walk per destination and merges shared prefixes: a satellite
/// sends one copy per distinct continuation.
pub fn greedy_multicast(
    variant: GreedyVariant,
    src: SatId,
    destinations: &BTreeSet<SatId>,
    snapshot: &Snapshot,
    failures: &Failures,
    max_hops: u32,
) -> Result<GreedyReport, OrbitError> {
    let s = snapshot.require(src)?;
    let mut out = GreedyReport::default();
    for &d in destinations {
        let di = snapshot.require(d)?;
        match greedy_walk(variant, s, di, snapshot, failures, max_hops) {
            Ok(path) => {
                out.report.delivered.insert(d, path.len() as u32 - 1);
                out.paths.insert(d, path);
            }
            Err(Stuck { at }) => {
                out.stuck.insert(d, at);
            }
        }
    }
    // prefix trie: node = path prefix, children = distinct next hops
    let mut children: BTreeMap<&[NodeIx], BTreeSet<NodeIx>> = BTreeMap::new();
    for path in out.paths.values() {
        for k in 1..path.len() {
            children.entry(&path[..k]).or_default().insert(path[k]);
        }
    }
    out.report.transmissions = children.values().map(|c| c.len() as u64).sum();
    out.report.replications = children.values().filter(|c| c.len() > 1).count() as u32;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    fn id(k: u16) -> SatId {
        SatId::new(0, 0, k)
    }

    /// A centre node with neighbours N, E, S, W.
    fn star() -> Snapshot {
        Snapshot::from_parts(
            0.0,
            vec![
                (id(0), p(0.0, 0.0), 550.0),
                (id(1), p(5.0, 0.0), 550.0),
                (id(2), p(0.0, 5.0), 550.0),
                (id(3), p(-5.0, 0.0), 550.0),
                (id(4), p(0.0, -5.0), 550.0),
            ],
            &[(id(0), id(1)), (id(0), id(2)), (id(0), id(3)), (id(0), id(4))],
        )
        .unwrap()
    }

    #[test]
    fn aligned_target_selects_that_neighbor() {
        let snap = star();
        let mut st = WalkState::starting_at(0);
        let n = greedy_next_hop(GreedyVariant::PureGreedy, 0, &p(0.0, 20.0), &snap, &Failures::none(), &mut st);
        assert_eq!(n, Ok(2));
        let mut st = WalkState::starting_at(0);
        let n = greedy_next_hop(GreedyVariant::PureGreedy, 0, &p(-20.0, 0.0), &snap, &Failures::none(), &mut st);
        assert_eq!(n, Ok(3));
    }

    #[test]
    fn already_there() {
        let snap = star();
        let r = greedy_multicast(
            GreedyVariant::PureGreedy,
            id(0),
            &BTreeSet::from([id(0)]),
            &snap,
            &Failures::none(),
            64,
        )
        .unwrap();
        assert_eq!(r.report.delivered.get(&id(0)), Some(&0));
        assert_eq!(r.report.transmissions, 0);
    }

    /// 0 - 1 - 2 where 1 is farther from 2 than 0 is: a local minimum at 0.
    fn detour() -> Snapshot {
        Snapshot::from_parts(
            0.0,
            vec![
                (id(0), p(0.0, 0.0), 550.0),
                (id(1), p(0.0, -2.0), 550.0),
                (id(2), p(3.0, 1.0), 550.0),
            ],
            &[(id(0), id(1)), (id(1), id(2))],
        )
        .unwrap()
    }

    #[test]
    fn local_minimum_variants() {
        let snap = detour();
        let f = Failures::none();
        assert_eq!(greedy_walk(GreedyVariant::PureGreedy, 0, 2, &snap, &f, 64), Err(Stuck { at: 0 }));
        let slack = GreedyVariant::GreedyWithSwitch {
            switch_slack_km: 400.0,
            max_switches: 1,
        };
        assert_eq!(greedy_walk(slack, 0, 2, &snap, &f, 64), Ok(vec![0, 1, 2]));
        let tight = GreedyVariant::GreedyWithSwitch {
            switch_slack_km: 10.0,
            max_switches: 1,
        };
        assert!(greedy_walk(tight, 0, 2, &snap, &f, 64).is_err());
        assert_eq!(greedy_walk(GreedyVariant::perimeter(), 0, 2, &snap, &f, 64), Ok(vec![0, 1, 2]));
    }

    #[test]
    fn multicast_merges_prefixes() {
        // 0 - 1 - {2, 3} along the equator and then split
        let snap = Snapshot::from_parts(
            0.0,
            vec![
                (id(0), p(0.0, 0.0), 550.0),
                (id(1), p(0.0, 5.0), 550.0),
                (id(2), p(4.0, 10.0), 550.0),
                (id(3), p(-4.0, 10.0), 550.0),
            ],
            &[(id(0), id(1)), (id(1), id(2)), (id(1), id(3))],
        )
        .unwrap();
        let r = greedy_multicast(
            GreedyVariant::PureGreedy,
            id(0),
            &BTreeSet::from([id(2), id(3)]),
            &snap,
            &Failures::none(),
            64,
        )
        .unwrap();
        assert_eq!(r.report.delivered.len(), 2);
        assert_eq!(r.report.transmissions, 3);
        assert_eq!(r.report.replications, 1);
    }

    #[test]
    fn hop_budget() {
        let snap = detour();
        let slack = GreedyVariant::GreedyWithSwitch {
            switch_slack_km: 400.0,
            max_switches: 1,
        };
        assert!(greedy_walk(slack, 0, 2, &snap, &Failures::none(), 1).is_err());
    }
}
