//! Undirected weighted graph over satellite indices.

use std::collections::BTreeSet;

/// Dense node index into a [`crate::orbit::Snapshot`].
pub type NodeIx = usize;

/// Undirected edge, stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: NodeIx,
    pub b: NodeIx,
    pub weight_km: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IslGraph {
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(NodeIx, f64)>>,
}

impl IslGraph {
    /// Builds a graph over `nodes` vertices. Self-loops are dropped and
    /// parallel edges collapse to the first occurrence.
    pub fn new(nodes: usize, edges: impl IntoIterator<Item = (NodeIx, NodeIx, f64)>) -> Self {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let mut adjacency = vec![Vec::new(); nodes];
        for (a, b, w) in edges {
            assert!(a < nodes && b < nodes, "edge ({a}, {b}) outside {nodes} nodes");
            assert!(w >= 0.0, "negative edge weight");
            if a == b {
                continue;
            }
            let (a, b) = if a < b { (a, b) } else { (b, a) };
            if !seen.insert((a, b)) {
                continue;
            }
            out.push(Edge { a, b, weight_km: w });
            adjacency[a].push((b, w));
            adjacency[b].push((a, w));
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(n, _)| n);
        }
        Self {
            edges: out,
            adjacency,
        }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbours of `n` with edge weights, ascending by index.
    pub fn neighbors(&self, n: NodeIx) -> &[(NodeIx, f64)] {
        &self.adjacency[n]
    }

    pub fn degree(&self, n: NodeIx) -> usize {
        self.adjacency[n].len()
    }

    pub fn has_edge(&self, a: NodeIx, b: NodeIx) -> bool {
        self.adjacency[a].iter().any(|&(n, _)| n == b)
    }

    pub fn weight(&self, a: NodeIx, b: NodeIx) -> Option<f64> {
        self.adjacency[a].iter().find(|&&(n, _)| n == b).map(|&(_, w)| w)
    }

    /// Nodes reachable from `src` under the `up` link predicate.
    pub fn reachable_from(
        &self,
        src: NodeIx,
        up: impl Fn(NodeIx, NodeIx) -> bool,
    ) -> BTreeSet<NodeIx> {
        let mut seen = BTreeSet::from([src]);
        let mut stack = vec![src];
        while let Some(n) = stack.pop() {
            for &(m, _) in self.neighbors(n) {
                if up(n, m) && seen.insert(m) {
                    stack.push(m);
                }
            }
        }
        seen
    }

    pub fn is_connected(&self) -> bool {
        self.node_count() == 0 || self.reachable_from(0, |_, _| true).len() == self.node_count()
    }
}

/// Failed links and satellites for one epoch.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Failures {
    links: BTreeSet<(NodeIx, NodeIx)>,
    nodes: BTreeSet<NodeIx>,
}

impl Failures {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn fail_link(&mut self, a: NodeIx, b: NodeIx) {
        self.links.insert(if a < b { (a, b) } else { (b, a) });
    }

    pub fn fail_node(&mut self, n: NodeIx) {
        self.nodes.insert(n);
    }

    pub fn node_up(&self, n: NodeIx) -> bool {
        !self.nodes.contains(&n)
    }

    /// A link is usable when neither endpoint nor the link itself failed.
    pub fn link_up(&self, a: NodeIx, b: NodeIx) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.node_up(a) && self.node_up(b) && !self.links.contains(&key)
    }

    pub fn failed_links(&self) -> impl Iterator<Item = &(NodeIx, NodeIx)> {
        self.links.iter()
    }

    pub fn failed_nodes(&self) -> impl Iterator<Item = &NodeIx> {
        self.nodes.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty() && self.nodes.is_empty()
    }
}
