//! Sampling-based Frenet planning for racing with a learned cost-weight selector.

// Validation is written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod bench;
pub mod geometry;
pub mod neural;
pub mod planner;
pub mod sim;
pub mod track;
