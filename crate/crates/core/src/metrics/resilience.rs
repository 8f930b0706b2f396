//! How many links or satellites inside a cell set can fail before the
//! source loses a destination.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::MetricsError;
use crate::geogrid::CellId;
use crate::graph::NodeIx;
use crate::orbit::{SatId, Snapshot};

/// Minimum cuts between the source and one destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DestinationCuts {
    pub edge_cut: usize,
    /// Capped at the number of removable satellites plus one when no set of
    /// removable satellites separates the pair.
    pub vertex_cut: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResilienceReport {
    /// Largest k such that removing any k links keeps every destination
    /// connected to the source.
    pub max_removable_links: usize,
    /// Same for satellites other than the source and the destinations.
    pub max_removable_nodes: usize,
    pub per_destination_cuts: BTreeMap<SatId, DestinationCuts>,
    pub links_total: usize,
    pub removable_nodes_total: usize,
}

impl ResilienceReport {
    pub fn link_fraction(&self) -> f64 {
        ratio(self.max_removable_links, self.links_total)
    }

    pub fn node_fraction(&self) -> f64 {
        ratio(self.max_removable_nodes, self.removable_nodes_total)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Cuts on the subgraph induced by satellites whose sub-satellite points lie
/// in `cell_set`. All cells must share one resolution.
///
/// Destinations equal to the source are ignored.
pub fn resilience(
    snapshot: &Snapshot,
    src: SatId,
    destinations: &BTreeSet<SatId>,
    cell_set: &BTreeSet<CellId>,
) -> Result<ResilienceReport, MetricsError> {
    let Some(r) = cell_set.first().map(|c| c.resolution()) else {
        return Err(MetricsError::OutsideCellSet(src));
    };
    let mut members = Vec::new();
    for ix in 0..snapshot.len() {
        if cell_set.contains(&snapshot.cell_of(ix, r)?) {
            members.push(ix);
        }
    }
    let local: BTreeMap<NodeIx, usize> = members.iter().enumerate().map(|(k, &ix)| (ix, k)).collect();
    let locate = |id: SatId| -> Result<usize, MetricsError> {
        let ix = snapshot.require(id)?;
        local.get(&ix).copied().ok_or(MetricsError::OutsideCellSet(id))
    };
    let s = locate(src)?;
    let dests: Vec<(SatId, usize)> = destinations
        .iter()
        .filter(|&&d| d != src)
        .map(|&d| locate(d).map(|k| (d, k)))
        .collect::<Result<_, _>>()?;
    if dests.is_empty() {
        return Err(MetricsError::EmptyDestinations);
    }
    let edges: Vec<(usize, usize)> = snapshot
        .graph()
        .edges()
        .iter()
        .filter_map(|e| Some((*local.get(&e.a)?, *local.get(&e.b)?)))
        .collect();
    let mut fixed = vec![false; members.len()];
    fixed[s] = true;
    for &(_, k) in &dests {
        fixed[k] = true;
    }
    Ok(resilience_on(members.len(), &edges, s, &dests, &fixed))
}

/// Core computation over a plain edge list; `fixed` marks satellites that
/// may not be removed.
fn resilience_on(n: usize, edges: &[(usize, usize)], s: usize, dests: &[(SatId, usize)], fixed: &[bool]) -> ResilienceReport {
    let removable = fixed.iter().filter(|f| !**f).count();
    let mut per = BTreeMap::new();
    for &(id, d) in dests {
        per.insert(
            id,
            DestinationCuts {
                edge_cut: edge_cut(n, edges, s, d),
                vertex_cut: vertex_cut(n, edges, s, d, fixed).min(removable + 1),
            },
        );
    }
    let min_edge = per.values().map(|c| c.edge_cut).min().unwrap_or(0);
    let min_vertex = per.values().map(|c| c.vertex_cut).min().unwrap_or(0);
    ResilienceReport {
        max_removable_links: min_edge.saturating_sub(1),
        max_removable_nodes: min_vertex.saturating_sub(1),
        per_destination_cuts: per,
        links_total: edges.len(),
        removable_nodes_total: removable,
    }
}

fn edge_cut(n: usize, edges: &[(usize, usize)], s: usize, t: usize) -> usize {
    let mut net = FlowNet::new(n);
    for &(a, b) in edges {
        net.add_undirected(a, b, 1);
    }
    net.max_flow(s, t)
}

/// Node splitting: satellite v becomes `2v -> 2v+1` with unit capacity, or
/// unbounded when it is fixed.
fn vertex_cut(n: usize, edges: &[(usize, usize)], s: usize, t: usize, fixed: &[bool]) -> usize {
    let inf = n + 1;
    let mut net = FlowNet::new(2 * n);
    for (v, &f) in fixed.iter().enumerate().take(n) {
        net.add_arc(2 * v, 2 * v + 1, if f { inf } else { 1 });
    }
    for &(a, b) in edges {
        net.add_arc(2 * a + 1, 2 * b, inf);
        net.add_arc(2 * b + 1, 2 * a, inf);
    }
    net.max_flow(2 * s + 1, 2 * t)
}

/// Residual network for Edmonds-Karp.
struct FlowNet {
    to: Vec<usize>,
    cap: Vec<usize>,
    adj: Vec<Vec<usize>>,
}

impl FlowNet {
    fn new(n: usize) -> Self {
        Self {
            to: Vec::new(),
            cap: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    fn push(&mut self, a: usize, b: usize, c: usize) {
        self.adj[a].push(self.to.len());
        self.to.push(b);
        self.cap.push(c);
    }

    /// Arc `a -> b`; its reverse sits at the odd slot next to it.
    fn add_arc(&mut self, a: usize, b: usize, c: usize) {
        self.push(a, b, c);
        self.push(b, a, 0);
    }

    /// An undirected edge is a pair of arcs that are each other's reverse.
    fn add_undirected(&mut self, a: usize, b: usize, c: usize) {
        self.push(a, b, c);
        self.push(b, a, c);
    }

    fn max_flow(&mut self, s: usize, t: usize) -> usize {
        if s == t {
            return usize::MAX;
        }
        let mut flow = 0;
        loop {
            let mut via = vec![usize::MAX; self.adj.len()];
            let mut seen = vec![false; self.adj.len()];
            seen[s] = true;
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for &e in &self.adj[u] {
                    let v = self.to[e];
                    if self.cap[e] > 0 && !seen[v] {
                        seen[v] = true;
                        via[v] = e;
                        q.push_back(v);
                    }
                }
            }
            if !seen[t] {
                return flow;
            }
            let mut push = usize::MAX;
            let mut v = t;
            while v != s {
                let e = via[v];
                push = push.min(self.cap[e]);
                v = self.to[e ^ 1];
            }
            let mut v = t;
            while v != s {
                let e = via[v];
                self.cap[e] -= push;
                self.cap[e ^ 1] += push;
                v = self.to[e ^ 1];
            }
            flow += push;
        }
    }
}
