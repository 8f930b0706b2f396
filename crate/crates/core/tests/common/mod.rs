//! Shared generators and brute-force oracles for the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use bierstar::geogrid::{cell_count, CellId, GeoPoint, GridScheme};
use bierstar::graph::{Failures, NodeIx};
use bierstar::orbit::{covers, slant_range_km, SatId, Snapshot};
use bierstar::protocol::{CellTree, Header, ShellTree, TreeBuilder, MAX_CHILDREN};
use bierstar::simcore::ScenarioSpec;
use rand::Rng;

pub fn scenario(name: &str) -> ScenarioSpec {
    let path: PathBuf = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    ScenarioSpec::load(&path, &[]).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn fixtures(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn sid(k: usize) -> SatId {
    SatId::new(0, (k / 100) as u16, (k % 100) as u16)
}

pub fn random_point<R: Rng>(rng: &mut R) -> GeoPoint {
    let z: f64 = rng.random_range(-1.0..1.0);
    let lon: f64 = rng.random_range(-180.0..180.0);
    GeoPoint::new(z.asin().to_degrees(), lon).unwrap()
}

/// `n` satellites at random points, each linked to its nearest neighbours
/// plus a sprinkling of random long links. Not necessarily connected.
pub fn random_snapshot<R: Rng>(rng: &mut R, n: usize) -> Snapshot {
    let pts: Vec<GeoPoint> = (0..n).map(|_| random_point(rng)).collect();
    let mut links = BTreeSet::new();
    let k_near = rng.random_range(1..=3usize);
    for a in 0..n {
        let mut by_dist: Vec<(f64, usize)> = (0..n)
            .filter(|&b| b != a)
            .map(|b| (pts[a].distance_km(&pts[b]), b))
            .collect();
        by_dist.sort_by(|x, y| x.0.total_cmp(&y.0));
        for &(_, b) in by_dist.iter().take(k_near) {
            links.insert((a.min(b), a.max(b)));
        }
        if n > 1 && rng.random::<f64>() < 0.1 {
            let b = rng.random_range(0..n);
            if b != a {
                links.insert((a.min(b), a.max(b)));
            }
        }
    }
    let sats = (0..n).map(|k| (sid(k), pts[k], 550.0)).collect();
    let links: Vec<(SatId, SatId)> = links.into_iter().map(|(a, b)| (sid(a), sid(b))).collect();
    Snapshot::from_parts(0.0, sats, &links).unwrap()
}

/// Breadth-first reachability over live links, written independently of
/// the library's traversal.
pub fn reachable(snapshot: &Snapshot, src: NodeIx, failures: &Failures) -> BTreeSet<NodeIx> {
    let mut seen = BTreeSet::new();
    if !failures.node_up(src) {
        return seen;
    }
    seen.insert(src);
    let mut frontier = vec![src];
    while let Some(u) = frontier.pop() {
        for e in snapshot.graph().edges() {
            let v = if e.a == u {
                e.b
            } else if e.b == u {
                e.a
            } else {
                continue;
            };
            if failures.link_up(u, v) && seen.insert(v) {
                frontier.push(v);
            }
        }
    }
    seen
}

/// Nearest covering satellite by exhaustive scan, lowest id on ties.
pub fn brute_force_serving(p: &GeoPoint, snapshot: &Snapshot, mask: f64) -> Option<SatId> {
    let mut all: Vec<(f64, SatId)> = snapshot
        .sats()
        .iter()
        .filter(|s| covers(s, p, mask))
        .map(|s| (slant_range_km(s, p), s.id))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.first().map(|x| x.1)
}

/// A random valid cell tree: distinct cells at one resolution, at most
/// seven children per node, random destination flags.
pub fn random_tree<R: Rng>(rng: &mut R, r: u8, max_nodes: usize) -> CellTree {
    let count = cell_count(GridScheme::HexHier, r).unwrap();
    let n = rng.random_range(1..=max_nodes.min(count as usize));
    let mut used = BTreeSet::new();
    let mut pick = |rng: &mut R| loop {
        let c = CellId::hex(r, rng.random_range(0..count)).unwrap();
        if used.insert(c) {
            return c;
        }
    };
    let root = pick(rng);
    let mut b = TreeBuilder::new(root);
    let mut cells = vec![root];
    let mut kids: BTreeMap<CellId, usize> = BTreeMap::new();
    for _ in 1..n {
        let open: Vec<CellId> = cells
            .iter()
            .copied()
            .filter(|c| kids.get(c).copied().unwrap_or(0) < MAX_CHILDREN)
            .collect();
        let parent = open[rng.random_range(0..open.len())];
        let c = pick(rng);
        b.add_child(parent, c).unwrap();
        *kids.entry(parent).or_default() += 1;
        cells.push(c);
    }
    for &c in &cells {
        if rng.random::<f64>() < 0.4 {
            b.set_dest(c, true);
        }
    }
    b.build()
}

pub fn random_header<R: Rng>(rng: &mut R) -> Header {
    let shells = rng.random_range(1..=3u8);
    let trees = (0..shells)
        .map(|i| {
            let r = rng.random_range(0..=5u8);
            ShellTree {
                shell_id: i * 5,
                resolution: r,
                tree: random_tree(rng, r, 40),
            }
        })
        .collect();
    Header::new(rng.random(), trees)
}
