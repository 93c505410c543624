//! Wholesale-market simulation with grid-scale battery storage.
//!
//! The crate couples a DC economic dispatch (with locational marginal prices)
//! to a battery owner's self-scheduling problem, iterates the two to a price
//! fixed point, and searches over battery sites and sizes for the best
//! discounted return.

// `!(x > 0.0)` rejects NaN as well; index loops mirror the matrix algebra.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod lp;
pub mod network;
pub mod dispatch;
pub mod scheduling;
pub mod market;
pub mod planner;
