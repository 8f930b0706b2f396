//! Stateless geographic multicast over LEO satellite constellations.
//!
//! Headers name hexagonal ground cells instead of egress routers. The ingress
//! computes a shortest-path tree, folds it into a tree of cells and ships that
//! tree in the packet; transit satellites forward by cell without per-group
//! state.

// `!(x > 0.0)` is how parameter checks reject NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod geogrid;
pub mod graph;
pub mod orbit;
pub mod membership;
pub mod protocol;
pub mod baselines;
pub mod metrics;
pub mod simcore;
