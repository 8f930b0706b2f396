//! Cell-level route trees carried in headers.

use std::collections::BTreeMap;

use super::ProtocolError;
use crate::geogrid::CellId;

/// Hex geometry and the 3-bit field both cap fan-out at seven.
pub const MAX_CHILDREN: usize = 7;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    pub cell: CellId,
    pub dest: bool,
    pub children: Vec<usize>,
}

/// A tree of distinct cells stored in canonical pre-order: node 0 is the
/// root and every child list is ascending by cell index. Two trees with the
/// same shape therefore compare equal structurally.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellTree {
    nodes: Vec<TreeNode>,
}

impl CellTree {
    pub fn single(cell: CellId, dest: bool) -> Self {
        Self {
            nodes: vec![TreeNode {
                cell,
                dest,
                children: Vec::new(),
            }],
        }
    }

    /// Pre-order nodes as produced by the wire decoder; the caller has
    /// already checked ordering and uniqueness.
    pub(crate) fn from_preorder(nodes: Vec<TreeNode>) -> Self {
        Self { nodes }
    }

    pub fn root(&self) -> CellId {
        self.nodes[0].cell
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &TreeNode {
        &self.nodes[i]
    }

    pub fn find(&self, cell: CellId) -> Option<usize> {
        self.nodes.iter().position(|n| n.cell == cell)
    }

    pub fn contains(&self, cell: CellId) -> bool {
        self.find(cell).is_some()
    }

    pub fn cells(&self) -> impl Iterator<Item = CellId> + '_ {
        self.nodes.iter().map(|n| n.cell)
    }

    pub fn dest_cells(&self) -> impl Iterator<Item = CellId> + '_ {
        self.nodes.iter().filter(|n| n.dest).map(|n| n.cell)
    }

    /// Cell-level parent map, child to parent.
    pub fn parents(&self) -> BTreeMap<CellId, CellId> {
        let mut out = BTreeMap::new();
        for n in &self.nodes {
            for &c in &n.children {
                out.insert(self.nodes[c].cell, n.cell);
            }
        }
        out
    }

    fn copy_into(&self, i: usize, b: &mut TreeBuilder, parent: CellId) {
        let n = &self.nodes[i];
        b.attach(parent, n.cell, n.dest);
        for &c in &n.children {
            self.copy_into(c, b, n.cell);
        }
    }

    /// The subtree rooted at node `i`.
    pub fn subtree(&self, i: usize) -> CellTree {
        self.branch(i, &self.nodes[i].children.clone(), self.nodes[i].dest)
    }

    /// Node `anchor` with only the listed child subtrees, its flag replaced by
    /// `anchor_dest`.
    pub fn branch(&self, anchor: usize, children: &[usize], anchor_dest: bool) -> CellTree {
        let mut b = TreeBuilder::new(self.nodes[anchor].cell);
        b.set_dest(self.nodes[anchor].cell, anchor_dest);
        for &c in children {
            self.copy_into(c, &mut b, self.nodes[anchor].cell);
        }
        b.build()
    }

    /// Same cells and edges, hung from node `i`. A node left with more than
    /// [`MAX_CHILDREN`] children sheds the extra subtree to its nearest child.
    pub fn reroot(&self, i: usize) -> CellTree {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for (p, n) in self.nodes.iter().enumerate() {
            for &c in &n.children {
                adj[p].push(c);
                adj[c].push(p);
            }
        }
        let mut b = TreeBuilder::new(self.nodes[i].cell);
        b.set_dest(self.nodes[i].cell, self.nodes[i].dest);
        let mut stack = vec![(i, usize::MAX)];
        while let Some((u, from)) = stack.pop() {
            let mut next: Vec<usize> = adj[u].iter().copied().filter(|&v| v != from).collect();
            next.sort_by_key(|&v| self.nodes[v].cell.index());
            for v in next.into_iter().rev() {
                b.attach_capped(self.nodes[u].cell, self.nodes[v].cell, self.nodes[v].dest);
                stack.push((v, u));
            }
        }
        b.build()
    }
}

fn centre_angle(c: &CellId, target: &[f64; 3]) -> f64 {
    c.center()
        .map(|p| crate::geogrid::central_angle(&p.to_unit(), target))
        .unwrap_or(f64::INFINITY)
}

/// Mutable tree under construction; [`TreeBuilder::build`] canonicalises.
#[derive(Debug, Clone)]
pub struct TreeBuilder {
    cells: Vec<CellId>,
    dest: Vec<bool>,
    children: Vec<Vec<usize>>,
    index: BTreeMap<CellId, usize>,
}

impl TreeBuilder {
    pub fn new(root: CellId) -> Self {
        Self {
            cells: vec![root],
            dest: vec![false],
            children: vec![Vec::new()],
            index: BTreeMap::from([(root, 0)]),
        }
    }

    pub fn contains(&self, cell: CellId) -> bool {
        self.index.contains_key(&cell)
    }

    pub fn child_count(&self, cell: CellId) -> usize {
        self.index.get(&cell).map_or(0, |&i| self.children[i].len())
    }

    pub fn children_of(&self, cell: CellId) -> Vec<CellId> {
        self.index
            .get(&cell)
            .map(|&i| self.children[i].iter().map(|&c| self.cells[c]).collect())
            .unwrap_or_default()
    }

    /// Adds `cell` under `parent`.
    pub fn add_child(&mut self, parent: CellId, cell: CellId) -> Result<(), ProtocolError> {
        let &p = self
            .index
            .get(&parent)
            .ok_or(ProtocolError::TreeShape(format!("parent {parent} not in tree")))?;
        if self.index.contains_key(&cell) {
            return Err(ProtocolError::TreeShape(format!("cell {cell} already in tree")));
        }
        if cell.scheme() != self.cells[0].scheme() || cell.resolution() != self.cells[0].resolution() {
            return Err(ProtocolError::TreeShape(format!("cell {cell} has a different resolution")));
        }
        if self.children[p].len() >= MAX_CHILDREN {
            return Err(ProtocolError::ChildOverflow(self.children[p].len() + 1));
        }
        self.attach(parent, cell, false);
        Ok(())
    }

    fn attach(&mut self, parent: CellId, cell: CellId, dest: bool) {
        let p = self.index[&parent];
        let i = self.cells.len();
        self.cells.push(cell);
        self.dest.push(dest);
        self.children.push(Vec::new());
        self.children[p].push(i);
        self.index.insert(cell, i);
    }

    /// Adds `cell` under `parent`, or when `parent` is full under the child
    /// whose centre is nearest to `cell`, recursively. Returns the parent used.
    pub(crate) fn attach_capped(&mut self, parent: CellId, cell: CellId, dest: bool) -> CellId {
        let mut at = parent;
        while self.child_count(at) >= MAX_CHILDREN {
            let target = cell.center().map(|p| p.to_unit()).unwrap_or([0.0, 0.0, 1.0]);
            at = self
                .children_of(at)
                .into_iter()
                .min_by(|a, b| {
                    let da = centre_angle(a, &target);
                    let db = centre_angle(b, &target);
                    da.total_cmp(&db).then(a.index().cmp(&b.index()))
                })
                .expect("full node has children");
        }
        self.attach(at, cell, dest);
        at
    }

    pub fn set_dest(&mut self, cell: CellId, dest: bool) {
        if let Some(&i) = self.index.get(&cell) {
            self.dest[i] = dest;
        }
    }

    pub fn build(&self) -> CellTree {
        let mut nodes = Vec::with_capacity(self.cells.len());
        self.emit(0, &mut nodes);
        CellTree { nodes }
    }

    fn emit(&self, i: usize, out: &mut Vec<TreeNode>) -> usize {
        let at = out.len();
        out.push(TreeNode {
            cell: self.cells[i],
            dest: self.dest[i],
            children: Vec::new(),
        });
        let mut kids = self.children[i].clone();
        kids.sort_by_key(|&c| self.cells[c].index());
        let mut placed = Vec::with_capacity(kids.len());
        for c in kids {
            placed.push(self.emit(c, out));
        }
        out[at].children = placed;
        at
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(i: u64) -> CellId {
        CellId::hex(0, i).unwrap()
    }

    #[test]
    fn build_is_canonical() {
        let mut a = TreeBuilder::new(c(5));
        a.add_child(c(5), c(9)).unwrap();
        a.add_child(c(5), c(3)).unwrap();
        a.add_child(c(3), c(1)).unwrap();
        let mut b = TreeBuilder::new(c(5));
        b.add_child(c(5), c(3)).unwrap();
        b.add_child(c(3), c(1)).unwrap();
        b.add_child(c(5), c(9)).unwrap();
        let (ta, tb) = (a.build(), b.build());
        assert_eq!(ta, tb);
        let order: Vec<u64> = ta.cells().map(|x| x.index()).collect();
        assert_eq!(order, vec![5, 3, 1, 9]);
    }

    #[test]
    fn builder_rejects_bad_shapes() {
        let mut b = TreeBuilder::new(c(0));
        assert!(b.add_child(c(0), c(0)).is_err());
        assert!(b.add_child(c(50), c(1)).is_err());
        for i in 1..=7 {
            b.add_child(c(0), c(i)).unwrap();
        }
        assert!(matches!(b.add_child(c(0), c(8)), Err(ProtocolError::ChildOverflow(8))));
        assert!(b.add_child(c(1), CellId::hex(1, 3).unwrap()).is_err());
    }

    #[test]
    fn reroot_keeps_edges() {
        let mut b = TreeBuilder::new(c(1));
        b.add_child(c(1), c(2)).unwrap();
        b.add_child(c(2), c(3)).unwrap();
        b.add_child(c(1), c(4)).unwrap();
        b.set_dest(c(3), true);
        let t = b.build();
        let r = t.reroot(t.find(c(3)).unwrap());
        assert_eq!(r.root(), c(3));
        assert_eq!(r.len(), 4);
        let mut edges_a: Vec<(u64, u64)> = t
            .parents()
            .into_iter()
            .map(|(a, b)| (a.index().min(b.index()), a.index().max(b.index())))
            .collect();
        let mut edges_b: Vec<(u64, u64)> = r
            .parents()
            .into_iter()
            .map(|(a, b)| (a.index().min(b.index()), a.index().max(b.index())))
            .collect();
        edges_a.sort();
        edges_b.sort();
        assert_eq!(edges_a, edges_b);
        assert_eq!(r.dest_cells().collect::<Vec<_>>(), vec![c(3)]);
    }

    #[test]
    fn reroot_respects_fanout_cap() {
        let mut b = TreeBuilder::new(c(0));
        b.add_child(c(0), c(1)).unwrap();
        for i in 2..=8 {
            b.add_child(c(1), c(i)).unwrap();
        }
        let t = b.build();
        let r = t.reroot(t.find(c(1)).unwrap());
        assert_eq!(r.len(), 9);
        assert!(r.nodes().iter().all(|n| n.children.len() <= MAX_CHILDREN));
        assert_eq!(r.node(0).children.len(), 7);
    }

    #[test]
    fn branch_selects_children() {
        let mut b = TreeBuilder::new(c(1));
        b.add_child(c(1), c(2)).unwrap();
        b.add_child(c(1), c(3)).unwrap();
        b.add_child(c(3), c(4)).unwrap();
        b.set_dest(c(1), true);
        let t = b.build();
        let br = t.branch(0, &[t.find(c(3)).unwrap()], false);
        assert_eq!(br.cells().map(|x| x.index()).collect::<Vec<_>>(), vec![1, 3, 4]);
        assert!(!br.node(0).dest);
        let sub = t.subtree(t.find(c(3)).unwrap());
        assert_eq!(sub.root(), c(3));
        assert_eq!(sub.len(), 2);
    }
}
