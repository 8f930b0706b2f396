//! Dijkstra shortest-path trees with deterministic tie-breaking.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::ProtocolError;
use crate::graph::{IslGraph, NodeIx};

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64, NodeIx);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Parent pointers and distances from one source.
#[derive(Debug, Clone, PartialEq)]
pub struct ShortestPathTree {
    src: NodeIx,
    dist: Vec<f64>,
    parent: Vec<Option<NodeIx>>,
}

impl ShortestPathTree {
    pub fn src(&self) -> NodeIx {
        self.src
    }

    /// Path cost from the source; infinite when unreachable.
    pub fn dist(&self, n: NodeIx) -> f64 {
        self.dist[n]
    }

    pub fn parent(&self, n: NodeIx) -> Option<NodeIx> {
        self.parent[n]
    }

    pub fn is_reachable(&self, n: NodeIx) -> bool {
        self.dist[n].is_finite()
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }
}

/// Single-source shortest paths over links accepted by `up`. On equal path
/// cost the predecessor with the lower index wins.
pub fn shortest_path_tree(
    graph: &IslGraph,
    src: NodeIx,
    up: impl Fn(NodeIx, NodeIx) -> bool,
) -> ShortestPathTree {
    multi_source(graph, &[src], up, src)
}

/// Distances to the nearest of `sources`; used for cell reachability.
pub(crate) fn multi_source_dist(
    graph: &IslGraph,
    sources: &[NodeIx],
    up: impl Fn(NodeIx, NodeIx) -> bool,
) -> Vec<f64> {
    let src = sources.first().copied().unwrap_or(0);
    multi_source(graph, sources, up, src).dist
}

fn multi_source(
    graph: &IslGraph,
    sources: &[NodeIx],
    up: impl Fn(NodeIx, NodeIx) -> bool,
    src: NodeIx,
) -> ShortestPathTree {
    let n = graph.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        dist[s] = 0.0;
        heap.push(Reverse(Key(0.0, s)));
    }
    while let Some(Reverse(Key(d, u))) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &(v, w) in graph.neighbors(u) {
            if done[v] || !up(u, v) {
                continue;
            }
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                parent[v] = Some(u);
                heap.push(Reverse(Key(nd, v)));
            } else if nd == dist[v] && parent[v].is_some_and(|p| u < p) {
                parent[v] = Some(u);
            }
        }
    }
    ShortestPathTree { src, dist, parent }
}

/// Nodes from the source to `dst`, inclusive.
pub fn reconstruct_path(spt: &ShortestPathTree, dst: NodeIx) -> Result<Vec<NodeIx>, ProtocolError> {
    if !spt.is_reachable(dst) {
        return Err(ProtocolError::UnreachableNode(dst));
    }
    let mut path = vec![dst];
    let mut cur = dst;
    while cur != spt.src {
        cur = spt.parent[cur].ok_or(ProtocolError::UnreachableNode(dst))?;
        path.push(cur);
    }
    path.reverse();
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> IslGraph {
        IslGraph::new(3, [(0, 1, 1.0), (1, 2, 1.0)])
    }

    #[test]
    fn line_graph_parents() {
        let spt = shortest_path_tree(&line(), 0, |_, _| true);
        assert_eq!(spt.parent(1), Some(0));
        assert_eq!(spt.parent(2), Some(1));
        assert_eq!(reconstruct_path(&spt, 2).unwrap(), vec![0, 1, 2]);
        assert_eq!(reconstruct_path(&spt, 0).unwrap(), vec![0]);
    }

    #[test]
    fn isolated_source() {
        let g = IslGraph::new(3, [(1, 2, 1.0)]);
        let spt = shortest_path_tree(&g, 0, |_, _| true);
        assert!((0..3).all(|n| spt.parent(n).is_none()));
        assert!(matches!(reconstruct_path(&spt, 2), Err(ProtocolError::UnreachableNode(2))));
    }

    #[test]
    fn equal_cost_prefers_lower_predecessor() {
        // 0 -> {2, 1} -> 3 with equal costs; node 3 must hang off 1
        let g = IslGraph::new(4, [(0, 2, 1.0), (0, 1, 1.0), (2, 3, 1.0), (1, 3, 1.0)]);
        let spt = shortest_path_tree(&g, 0, |_, _| true);
        assert_eq!(spt.parent(3), Some(1));
        let g = IslGraph::new(4, [(0, 1, 1.0), (0, 2, 1.0), (2, 3, 1.0), (1, 3, 1.0)]);
        assert_eq!(shortest_path_tree(&g, 0, |_, _| true).parent(3), Some(1));
    }

    #[test]
    fn respects_link_filter() {
        let spt = shortest_path_tree(&line(), 0, |a, b| (a.min(b), a.max(b)) != (1, 2));
        assert!(!spt.is_reachable(2));
    }

    #[test]
    fn multi_source_distances() {
        let d = multi_source_dist(&line(), &[0, 2], |_, _| true);
        assert_eq!(d, vec![0.0, 1.0, 0.0]);
    }
}
