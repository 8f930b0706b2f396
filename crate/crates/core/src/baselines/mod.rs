//! Comparison schemes: per-terminal and segmented bitstrings, and greedy
//! geographic multicast.
//!
//! The greedy variants are generic archetypes of geographic routing without
//! full-path awareness, not reproductions of any particular published
//! algorithm.

mod bitstring;
mod greedy;

pub use bitstring::{
    segmented_bitstring_bits, segment_id_bits, traditional_bitstring_bits, PartitionScheme, SegmentedBits,
};
pub use greedy::{greedy_multicast, greedy_next_hop, greedy_walk, GreedyReport, GreedyVariant, Stuck, WalkState};
