//! Rigid-body math and triangle-mesh queries shared by every other module.

mod bvh;
pub mod io;
mod mesh;
mod obb;
mod pose;
pub mod shapes;
pub mod so3;

pub use bvh::Aabb;
pub use mesh::{ray_mesh_intersect, Ray, RayHit, TriMesh, SELF_HIT_DISTANCE};
pub use obb::Obb;
pub use pose::Pose;
pub use so3::{exp_so3, log_so3, skew};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("rotation angle too close to pi for a unique logarithm (trace = {trace})")]
    AngleNearPi { trace: f64 },
    #[error("matrix is not a rotation: |RtR - I| = {orthogonality:e}, det = {determinant}")]
    InvalidRotation { orthogonality: f64, determinant: f64 },
    #[error("non-finite value in pose")]
    NonFinite,
    #[error("ray direction has zero length")]
    DegenerateDirection,
    #[error("mesh has no faces")]
    EmptyMesh,
    #[error("face {face} references a missing vertex")]
    BadIndex { face: usize },
    #[error("face {face} has zero area")]
    DegenerateFace { face: usize },
    #[error("mesh is not watertight: edge {edge:?} is not shared by exactly two faces")]
    NotWatertight { edge: (usize, usize) },
    #[error("mesh normals point inward (signed volume {volume})")]
    InwardOrientation { volume: f64 },
    #[error("unsupported mesh format: {0}")]
    UnsupportedFormat(String),
    #[error("mesh parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
