//! Antipodal contact sampling and parallel-jaw grasp candidate generation.

mod gripper;
mod sampling;

pub use gripper::{BoxRole, GripperModel, PAD_CONTACT_SHRINK};
pub use sampling::{
    antipodal_pair_at, check_gripper_collision, expand_pair_to_grasps, plan_grasps,
    sample_antipodal_pairs, ContactPair, GraspCandidate, PlannerConfig,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PlannerError {
    #[error("no antipodal contact pair survived out of {n_points} samples")]
    NoPairsFound { n_points: usize },
    #[error("invalid planner input: {0}")]
    InvalidInput(String),
}
