//! Regrasp planning for two parallel-jaw grippers and recovery of an
//! object's pose from the flat contacts of three grasps.

// Negated float comparisons deliberately treat NaN as invalid.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conformance;
pub mod estimate;
pub mod experiment;
pub mod geometry;
pub mod grasp;
pub mod pipeline;
pub mod sequence;
pub mod triplet;
