//! Bit-exact header codec.
//!
//! ```text
//! version(4) group_id(32) shell_count(4)
//! per shell:        shell_id(4) resolution(4) node_count(16)
//! per node, pre-order: cell_index(b) child_count(3) dest_flag(1)
//! ```
//! Fields are big-endian, most significant bit first; `b` is the bit width of
//! a cell index at the shell's resolution. The stream is zero-padded to a
//! byte boundary.

use std::collections::BTreeSet;

use super::tree::{CellTree, TreeNode, MAX_CHILDREN};
use super::ProtocolError;
use crate::geogrid::{self, CellId, GridScheme, MAX_HEX_RESOLUTION};

pub const HEADER_VERSION: u8 = 1;
const FIXED_BITS: usize = 4 + 32 + 4;
const SHELL_BITS: usize = 4 + 4 + 16;
const NODE_META_BITS: usize = 3 + 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShellTree {
    pub shell_id: u8,
    pub resolution: u8,
    pub tree: CellTree,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub version: u8,
    pub group_id: u32,
    pub shells: Vec<ShellTree>,
}

impl Header {
    pub fn new(group_id: u32, shells: Vec<ShellTree>) -> Self {
        Self {
            version: HEADER_VERSION,
            group_id,
            shells,
        }
    }

    pub fn shell(&self, shell_id: u8) -> Option<&ShellTree> {
        self.shells.iter().find(|s| s.shell_id == shell_id)
    }

    pub fn node_count(&self) -> usize {
        self.shells.iter().map(|s| s.tree.len()).sum()
    }

    /// Unpadded length in bits.
    pub fn bit_len(&self) -> Result<usize, ProtocolError> {
        let mut bits = FIXED_BITS;
        for s in &self.shells {
            let b = geogrid::bits_per_cell(GridScheme::HexHier, s.resolution)? as usize;
            bits += SHELL_BITS + s.tree.len() * (b + NODE_META_BITS);
        }
        Ok(bits)
    }

    pub fn serialize(&self) -> Result<Vec<u8>, ProtocolError> {
        if self.version != HEADER_VERSION {
            return Err(ProtocolError::Version(self.version));
        }
        if self.shells.is_empty() {
            return Err(ProtocolError::NoShells);
        }
        if self.shells.len() > 15 {
            return Err(ProtocolError::TreeShape(format!("{} shells exceed 4 bits", self.shells.len())));
        }
        let mut w = BitWriter::default();
        w.put(self.version as u64, 4);
        w.put(self.group_id as u64, 32);
        w.put(self.shells.len() as u64, 4);
        for s in &self.shells {
            if s.shell_id > 15 {
                return Err(ProtocolError::TreeShape(format!("shell id {} exceeds 4 bits", s.shell_id)));
            }
            if s.resolution > MAX_HEX_RESOLUTION {
                return Err(ProtocolError::Grid(geogrid::GridError::Resolution {
                    scheme: GridScheme::HexHier,
                    resolution: s.resolution,
                }));
            }
            let n = s.tree.len();
            if n > u16::MAX as usize {
                return Err(ProtocolError::NodeCountOverflow(n));
            }
            let b = geogrid::bits_per_cell(GridScheme::HexHier, s.resolution)?;
            w.put(s.shell_id as u64, 4);
            w.put(s.resolution as u64, 4);
            w.put(n as u64, 16);
            for node in s.tree.nodes() {
                if node.cell.scheme() != GridScheme::HexHier || node.cell.resolution() != s.resolution {
                    return Err(ProtocolError::TreeShape(format!(
                        "cell {} does not match shell resolution {}",
                        node.cell, s.resolution
                    )));
                }
                if node.children.len() > MAX_CHILDREN {
                    return Err(ProtocolError::ChildOverflow(node.children.len()));
                }
                w.put(node.cell.index(), b);
                w.put(node.children.len() as u64, 3);
                w.put(node.dest as u64, 1);
            }
        }
        Ok(w.finish())
    }

    /// Decodes a canonical header. Anything `serialize` would not emit
    /// (unsorted children, repeated cells, stray bits) is rejected.
    pub fn parse(bytes: &[u8]) -> Result<Self, ProtocolError> {
        let mut r = BitReader::new(bytes);
        let version = r.take(4)? as u8;
        if version != HEADER_VERSION {
            return Err(ProtocolError::Version(version));
        }
        let group_id = r.take(32)? as u32;
        let shell_count = r.take(4)? as usize;
        if shell_count == 0 {
            return Err(ProtocolError::NoShells);
        }
        let mut shells = Vec::with_capacity(shell_count);
        for _ in 0..shell_count {
            let shell_id = r.take(4)? as u8;
            let resolution = r.take(4)? as u8;
            let node_count = r.take(16)? as usize;
            if node_count == 0 {
                return Err(ProtocolError::TreeShape("shell with zero nodes".into()));
            }
            let b = geogrid::bits_per_cell(GridScheme::HexHier, resolution)?;
            let mut nodes: Vec<TreeNode> = Vec::with_capacity(node_count);
            let mut seen = BTreeSet::new();
            // pending: (node index, children still to read)
            let mut stack: Vec<(usize, usize)> = Vec::new();
            for i in 0..node_count {
                if i > 0 && stack.is_empty() {
                    return Err(ProtocolError::TreeShape("node count exceeds tree size".into()));
                }
                let index = r.take(b)?;
                let cell = CellId::hex(resolution, index).map_err(|_| ProtocolError::BadCell(index))?;
                if !seen.insert(cell) {
                    return Err(ProtocolError::TreeShape(format!("cell {cell} repeated")));
                }
                let kids = r.take(3)? as usize;
                let dest = r.take(1)? == 1;
                if let Some(&(parent, _)) = stack.last() {
                    if let Some(&prev) = nodes[parent].children.last() {
                        if nodes[prev].cell.index() >= index {
                            return Err(ProtocolError::TreeShape("children not in ascending order".into()));
                        }
                    }
                    nodes[parent].children.push(i);
                    let top = stack.last_mut().expect("non-empty");
                    top.1 -= 1;
                    if top.1 == 0 {
                        stack.pop();
                    }
                }
                nodes.push(TreeNode {
                    cell,
                    dest,
                    children: Vec::new(),
                });
                if kids > 0 {
                    stack.push((i, kids));
                }
            }
            if !stack.is_empty() {
                return Err(ProtocolError::TreeShape("node count smaller than tree".into()));
            }
            shells.push(ShellTree {
                shell_id,
                resolution,
                tree: CellTree::from_preorder(nodes),
            });
        }
        r.finish()?;
        Ok(Self {
            version,
            group_id,
            shells,
        })
    }
}

#[derive(Debug, Default)]
struct BitWriter {
    bytes: Vec<u8>,
    used: usize,
}

impl BitWriter {
    fn put(&mut self, value: u64, width: u32) {
        for k in (0..width).rev() {
            let bit = (value >> k) & 1;
            if self.used.is_multiple_of(8) {
                self.bytes.push(0);
            }
            if bit == 1 {
                let last = self.bytes.len() - 1;
                self.bytes[last] |= 0x80 >> (self.used % 8);
            }
            self.used += 1;
        }
    }

    fn finish(self) -> Vec<u8> {
        self.bytes
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, width: u32) -> Result<u64, ProtocolError> {
        if self.pos + width as usize > self.bytes.len() * 8 {
            return Err(ProtocolError::Truncated);
        }
        let mut v = 0u64;
        for _ in 0..width {
            let bit = (self.bytes[self.pos / 8] >> (7 - self.pos % 8)) & 1;
            v = (v << 1) | bit as u64;
            self.pos += 1;
        }
        Ok(v)
    }

    /// Only zero padding up to the next byte boundary may remain.
    fn finish(mut self) -> Result<(), ProtocolError> {
        let end = self.pos.div_ceil(8) * 8;
        if end != self.bytes.len() * 8 {
            return Err(ProtocolError::TrailingData);
        }
        while self.pos < end {
            if self.take(1)? != 0 {
                return Err(ProtocolError::TrailingData);
            }
        }
        Ok(())
    }
}
