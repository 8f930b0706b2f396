//! Stateless forwarding of header-carrying packets.
//!
//! A satellite looks only at the packet, the epoch snapshot, the failed-link
//! set and its own local membership. Everything it computes is a pure
//! function of those inputs; [`ForwardEnv`] memoises the expensive parts.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::{Arc, Mutex};

use super::header::{Header, ShellTree};
use super::spt::{multi_source_dist, reconstruct_path, shortest_path_tree};
use super::table::{progressing_neighbors, table_entry};
use super::tree::CellTree;
use super::ProtocolError;
use crate::geogrid::{self, CellId};
use crate::graph::{Failures, NodeIx};
use crate::orbit::{SatId, Snapshot};

pub const DEFAULT_TTL: u32 = 64;

/// How a copy is being steered toward its target cell. Modes only escalate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RouteMode {
    /// Target-cell table: primary, then live backups.
    Greedy,
    /// Progress toward the centre of the target's parent cell.
    ParentCell,
    /// Follow decreasing path distance to any satellite inside the cell.
    Reachability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    /// The tree root is itself still a target.
    Seek(RouteMode),
    /// The root has been handled; its children are the targets.
    Transit(RouteMode),
    /// Spreading inside a flagged cell from the satellite that reached it.
    Fanout { origin: NodeIx, cell: CellId },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub header: Header,
    pub payload_len: u32,
    pub hop_count: u32,
    pub phase: Phase,
}

impl Packet {
    /// A fresh packet at the ingress satellite.
    pub fn new(header: Header, payload_len: u32) -> Self {
        Self {
            header,
            payload_len,
            hop_count: 0,
            phase: Phase::Seek(RouteMode::Greedy),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Step {
    Route(RouteMode),
    Arrive,
    Fanout,
}

/// One unit of work at one satellite, used to check loop freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Visit {
    pub sat: NodeIx,
    pub cell: CellId,
    pub step: Step,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Forwarded {
    pub copies: Vec<(NodeIx, Packet)>,
    pub delivered: bool,
    pub unroutable: Vec<CellId>,
    pub ttl_drops: u32,
    pub visits: Vec<Visit>,
}

type FanoutTree = HashMap<NodeIx, Vec<NodeIx>>;

type CellMembers = HashMap<CellId, Vec<NodeIx>>;

/// Per-epoch forwarding context for one group.
pub struct ForwardEnv<'a> {
    snapshot: &'a Snapshot,
    failures: &'a Failures,
    local_members: BTreeSet<NodeIx>,
    ttl: u32,
    cells: Mutex<HashMap<u8, Arc<Vec<CellId>>>>,
    members_of_cell: Mutex<HashMap<u8, Arc<CellMembers>>>,
    reach: Mutex<HashMap<CellId, Arc<Vec<f64>>>>,
    fanout: Mutex<HashMap<(NodeIx, CellId), Arc<FanoutTree>>>,
}

impl<'a> ForwardEnv<'a> {
    /// `local_members` are the satellites currently serving at least one
    /// member of the group.
    pub fn new(
        snapshot: &'a Snapshot,
        failures: &'a Failures,
        local_members: BTreeSet<NodeIx>,
        ttl: u32,
    ) -> Self {
        Self {
            snapshot,
            failures,
            local_members,
            ttl,
            cells: Mutex::default(),
            members_of_cell: Mutex::default(),
            reach: Mutex::default(),
            fanout: Mutex::default(),
        }
    }

    pub fn snapshot(&self) -> &Snapshot {
        self.snapshot
    }

    pub fn failures(&self) -> &Failures {
        self.failures
    }

    pub fn ttl(&self) -> u32 {
        self.ttl
    }

    pub fn local_members(&self) -> &BTreeSet<NodeIx> {
        &self.local_members
    }

    fn cells(&self, r: u8) -> Result<Arc<Vec<CellId>>, ProtocolError> {
        let mut m = self.cells.lock().expect("cell cache");
        if let Some(c) = m.get(&r) {
            return Ok(c.clone());
        }
        let c = Arc::new(self.snapshot.cells(r)?);
        m.insert(r, c.clone());
        Ok(c)
    }

    fn sats_in(&self, cell: CellId) -> Result<Vec<NodeIx>, ProtocolError> {
        let r = cell.resolution();
        let map = {
            let mut m = self.members_of_cell.lock().expect("cell member cache");
            match m.get(&r) {
                Some(v) => v.clone(),
                None => {
                    let cells = self.cells(r)?;
                    let mut by: HashMap<CellId, Vec<NodeIx>> = HashMap::new();
                    for (ix, c) in cells.iter().enumerate() {
                        by.entry(*c).or_default().push(ix);
                    }
                    let v = Arc::new(by);
                    m.insert(r, v.clone());
                    v
                }
            }
        };
        Ok(map.get(&cell).cloned().unwrap_or_default())
    }

    fn reach(&self, cell: CellId) -> Result<Arc<Vec<f64>>, ProtocolError> {
        if let Some(d) = self.reach.lock().expect("reach cache").get(&cell) {
            return Ok(d.clone());
        }
        let inside = self.sats_in(cell)?;
        let d = if inside.is_empty() {
            vec![f64::INFINITY; self.snapshot.len()]
        } else {
            multi_source_dist(self.snapshot.graph(), &inside, |a, b| self.failures.link_up(a, b))
        };
        let d = Arc::new(d);
        self.reach.lock().expect("reach cache").insert(cell, d.clone());
        Ok(d)
    }

    /// Shortest-path dissemination tree from `origin` to every other live
    /// satellite in `cell`, as parent to children.
    fn fanout_tree(&self, origin: NodeIx, cell: CellId) -> Result<Arc<FanoutTree>, ProtocolError> {
        if let Some(t) = self.fanout.lock().expect("fanout cache").get(&(origin, cell)) {
            return Ok(t.clone());
        }
        let spt = shortest_path_tree(self.snapshot.graph(), origin, |a, b| self.failures.link_up(a, b));
        let mut edges: BTreeMap<NodeIx, BTreeSet<NodeIx>> = BTreeMap::new();
        for s in self.sats_in(cell)? {
            if s == origin || !spt.is_reachable(s) {
                continue;
            }
            let path = reconstruct_path(&spt, s)?;
            for w in path.windows(2) {
                edges.entry(w[0]).or_default().insert(w[1]);
            }
        }
        let t: FanoutTree = edges.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect();
        let t = Arc::new(t);
        self.fanout.lock().expect("fanout cache").insert((origin, cell), t.clone());
        Ok(t)
    }

    /// Next hop from `sat` toward `cell`, starting at `mode` and escalating.
    pub fn route(
        &self,
        sat: NodeIx,
        own: CellId,
        cell: CellId,
        mode: RouteMode,
    ) -> Result<Option<(NodeIx, RouteMode)>, ProtocolError> {
        let live = |n: NodeIx| self.failures.link_up(sat, n);
        if mode <= RouteMode::Greedy {
            if let Some(e) = table_entry(self.snapshot, sat, own, cell)? {
                if let Some(n) = e.candidates().find(|&n| live(n)) {
                    return Ok(Some((n, RouteMode::Greedy)));
                }
            }
        }
        if mode <= RouteMode::ParentCell && cell.resolution() > 0 {
            let centre = geogrid::parent(&cell, cell.resolution() - 1)?.center()?;
            if let Some(n) = progressing_neighbors(self.snapshot, sat, &centre)
                .into_iter()
                .find(|&n| live(n))
            {
                return Ok(Some((n, RouteMode::ParentCell)));
            }
        }
        let dist = self.reach(cell)?;
        if !dist[sat].is_finite() {
            return Ok(None);
        }
        let best = self
            .snapshot
            .graph()
            .neighbors(sat)
            .iter()
            .filter(|&&(n, _)| live(n) && dist[n] < dist[sat])
            .map(|&(n, w)| (w + dist[n], n))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Ok(best.map(|(_, n)| (n, RouteMode::Reachability)))
    }

    /// Handles one packet at `sat`.
    pub fn forward(&self, sat: NodeIx, packet: &Packet) -> Result<Forwarded, ProtocolError> {
        let mut out = Forwarded::default();
        match packet.phase {
            Phase::Fanout { origin, cell } => {
                out.visits.push(Visit {
                    sat,
                    cell,
                    step: Step::Fanout,
                });
                let own = self.cells(cell.resolution())?[sat];
                out.delivered = own == cell && self.local_members.contains(&sat);
                let tree = self.fanout_tree(origin, cell)?;
                for &next in tree.get(&sat).map(Vec::as_slice).unwrap_or(&[]) {
                    self.emit(&mut out, next, packet, packet.header.clone(), packet.phase);
                }
            }
            Phase::Seek(mode) | Phase::Transit(mode) => {
                let shell = self.snapshot.id_of(sat).shell;
                let Some(st) = packet.header.shell(shell) else {
                    return Ok(out);
                };
                let own = self.cells(st.resolution)?[sat];
                let mut job = Job {
                    env: self,
                    sat,
                    own,
                    shell: st,
                    packet,
                    groups: BTreeMap::new(),
                    out: &mut out,
                };
                if let Phase::Seek(_) = packet.phase {
                    job.seek(mode)?;
                } else {
                    let tree = st.tree.clone();
                    let targets = tree.node(0).children.clone();
                    job.targets(&tree, 0, &targets, mode)?;
                    job.flush(&tree);
                }
            }
        }
        Ok(out)
    }

    fn emit(&self, out: &mut Forwarded, next: NodeIx, packet: &Packet, header: Header, phase: Phase) {
        let hop_count = packet.hop_count + 1;
        if hop_count > self.ttl {
            out.ttl_drops += 1;
            return;
        }
        out.copies.push((
            next,
            Packet {
                header,
                payload_len: packet.payload_len,
                hop_count,
                phase,
            },
        ));
    }
}

struct Job<'e, 'a, 'p> {
    env: &'e ForwardEnv<'a>,
    sat: NodeIx,
    own: CellId,
    shell: &'p ShellTree,
    packet: &'p Packet,
    /// (next hop, mode, anchor node) to the child subtrees travelling together.
    groups: BTreeMap<(NodeIx, RouteMode, usize), Vec<usize>>,
    out: &'e mut Forwarded,
}

impl Job<'_, '_, '_> {
    fn header(&self, tree: CellTree) -> Header {
        Header {
            version: self.packet.header.version,
            group_id: self.packet.header.group_id,
            shells: vec![ShellTree {
                shell_id: self.shell.shell_id,
                resolution: self.shell.resolution,
                tree,
            }],
        }
    }

    fn seek(&mut self, mode: RouteMode) -> Result<(), ProtocolError> {
        let tree = &self.shell.tree;
        if let Some(i) = tree.find(self.own) {
            let t = tree.reroot(i);
            self.arrive(&t, 0)?;
            self.flush(&t);
            return Ok(());
        }
        // drifted off the tree: re-enter at the node with the nearest centre
        let here = self.env.snapshot.sat(self.sat).subpoint;
        let mut best = (f64::INFINITY, 0usize);
        for (i, n) in tree.nodes().iter().enumerate() {
            let d = n.cell.center()?.distance_km(&here);
            if d < best.0 {
                best = (d, i);
            }
        }
        let t = tree.reroot(best.1);
        match self.env.route(self.sat, self.own, t.root(), mode)? {
            Some((next, m)) => {
                self.out.visits.push(Visit {
                    sat: self.sat,
                    cell: t.root(),
                    step: Step::Route(m),
                });
                let h = self.header(t);
                self.env.emit(self.out, next, self.packet, h, Phase::Seek(m));
            }
            None => self.out.unroutable.push(t.root()),
        }
        Ok(())
    }

    fn arrive(&mut self, tree: &CellTree, i: usize) -> Result<(), ProtocolError> {
        let node = tree.node(i);
        self.out.visits.push(Visit {
            sat: self.sat,
            cell: node.cell,
            step: Step::Arrive,
        });
        if node.dest {
            if self.env.local_members.contains(&self.sat) {
                self.out.delivered = true;
            }
            let fan = self.env.fanout_tree(self.sat, node.cell)?;
            let phase = Phase::Fanout {
                origin: self.sat,
                cell: node.cell,
            };
            for &next in fan.get(&self.sat).map(Vec::as_slice).unwrap_or(&[]) {
                let h = self.header(CellTree::single(node.cell, true));
                self.env.emit(self.out, next, self.packet, h, phase);
            }
        }
        let children = node.children.clone();
        self.targets(tree, i, &children, RouteMode::Greedy)
    }

    fn targets(
        &mut self,
        tree: &CellTree,
        anchor: usize,
        children: &[usize],
        mode: RouteMode,
    ) -> Result<(), ProtocolError> {
        for &c in children {
            let cell = tree.node(c).cell;
            if cell == self.own {
                self.arrive(tree, c)?;
                continue;
            }
            match self.env.route(self.sat, self.own, cell, mode)? {
                Some((next, m)) => {
                    self.out.visits.push(Visit {
                        sat: self.sat,
                        cell,
                        step: Step::Route(m),
                    });
                    self.groups.entry((next, m, anchor)).or_default().push(c);
                }
                None => self.out.unroutable.push(cell),
            }
        }
        Ok(())
    }

    fn flush(&mut self, tree: &CellTree) {
        let groups = std::mem::take(&mut self.groups);
        for ((next, m, anchor), children) in groups {
            let h = self.header(tree.branch(anchor, &children, false));
            self.env.emit(self.out, next, self.packet, h, Phase::Transit(m));
        }
    }
}

/// Outcome of forwarding one packet to quiescence.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeliveryReport {
    /// Satellites that handed the payload to local members, with the hop
    /// count of the first copy that arrived.
    pub delivered: BTreeMap<SatId, u32>,
    /// Forwarding calls that emitted more than one copy.
    pub replications: u32,
    pub transmissions: u64,
    pub ttl_drops: u32,
    pub unroutable: Vec<CellId>,
    pub trace: Vec<Visit>,
    /// Visits that repeat an earlier (satellite, cell, step) triple.
    pub loop_violations: u32,
}

impl DeliveryReport {
    pub fn delivered_set(&self) -> BTreeSet<SatId> {
        self.delivered.keys().copied().collect()
    }
}

/// Injects `header` at `src` and forwards breadth-first until no copies
/// remain.
pub fn run_multicast(env: &ForwardEnv<'_>, header: &Header, src: SatId) -> Result<DeliveryReport, ProtocolError> {
    let s = env.snapshot.require(src)?;
    let mut report = DeliveryReport::default();
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([(s, Packet::new(header.clone(), 0))]);
    while let Some((sat, pkt)) = queue.pop_front() {
        let f = env.forward(sat, &pkt)?;
        for v in &f.visits {
            if !seen.insert(*v) {
                report.loop_violations += 1;
            }
        }
        report.trace.extend(f.visits);
        if f.delivered {
            report
                .delivered
                .entry(env.snapshot.id_of(sat))
                .or_insert(pkt.hop_count);
        }
        if f.copies.len() > 1 {
            report.replications += 1;
        }
        report.transmissions += f.copies.len() as u64;
        report.ttl_drops += f.ttl_drops;
        report.unroutable.extend(f.unroutable);
        queue.extend(f.copies);
    }
    Ok(report)
}
