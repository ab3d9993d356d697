//! Recovering an object's true pose from three planned/conformed grasp pairs.
//!
//! The first grasp is held by position control, so it pins the object to its
//! pad planes up to a rotation about its closing axis and a slide within the
//! pad plane. The second grasp's conformed closing axis fixes that rotation;
//! the three conformed pad midplanes then fix the position.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::so3::{exp_so3, log_so3};
use crate::geometry::{GeometryError, Pose};

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error("grasp axes are singular ({what} = {value:.3e} <= {tol})")]
    SingularTriplet { what: &'static str, value: f64, tol: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraspRole {
    G1,
    G2,
    G3,
}

/// A grasp's world pose before (`sim_pose`) and after (`real_pose`)
/// admittance control.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraspRecord {
    pub sim_pose: Pose,
    pub real_pose: Pose,
    pub role: GraspRole,
}

/// Forward-model error parameters in the first grasp's frame.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ErrorParams {
    /// Rotation about the first grasp's closing axis, radians.
    pub theta: f64,
    /// Slide along the first grasp's lateral axis, meters.
    pub delta_1: f64,
    /// Slide along the first grasp's approach axis, meters.
    pub delta_3: f64,
    /// Translation along the allowed direction, meters; an estimator output.
    pub epsilon: f64,
}

/// How the rotation about the first closing axis is read off the second grasp.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RotationExtraction {
    /// Signed angle the second closing axis swings through about the first
    /// closing axis. Exact whatever the grasps' relative orientation.
    #[default]
    AxisSwing,
    /// Projection of the rotation-log of the second grasp's orientation change
    /// onto the first closing axis. Exact only when the change is purely
    /// about that axis.
    LogProjection,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimateOptions {
    /// Minimum `|n1 x n2|` and minimum `|det[n1 n2 n3]|`.
    pub singularity_tol: f64,
    pub rotation: RotationExtraction,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            singularity_tol: 0.05,
            rotation: RotationExtraction::AxisSwing,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub object_pose: Pose,
    pub theta: f64,
    pub epsilon: f64,
    pub d_allowed: Vector3<f64>,
    /// `|det[n1 n2 n3]|` of the conformed closing axes.
    pub conditioning: f64,
}

/// Object pose implied by a grasp if the object moved rigidly with it:
/// `real ∘ sim⁻¹ ∘ sim_object`.
pub fn ideal_pose_from_grasp(record: &GraspRecord, sim_object_pose: &Pose) -> Pose {
    record.real_pose.compose(&record.sim_pose.relative(sim_object_pose))
}

fn closing_axis(p: &Pose) -> Vector3<f64> {
    p.axis(1)
}

/// Rotation `θ` about the first grasp's real closing axis `r`, and the
/// resulting object orientation `exp(θ[r]×) · R_ideal(g1)`.
pub fn identify_rotation_error(
    g1: &GraspRecord,
    g2: &GraspRecord,
    sim_object_pose: &Pose,
    method: RotationExtraction,
) -> Result<(f64, Matrix3<f64>), EstimateError> {
    let r = closing_axis(&g1.real_pose);
    // Orientation change already explained by the first grasp.
    let carried = g1.real_pose.rotation * g1.sim_pose.rotation.transpose();
    let theta = match method {
        RotationExtraction::AxisSwing => {
            let reference = carried * closing_axis(&g2.sim_pose);
            let actual = closing_axis(&g2.real_pose);
            let a = reference - r * r.dot(&reference);
            let b = actual - r * r.dot(&actual);
            if a.norm() < 1e-12 || b.norm() < 1e-12 {
                return Err(EstimateError::SingularTriplet {
                    what: "|n1 x n2|",
                    value: a.norm().min(b.norm()),
                    tol: 1e-12,
                });
            }
            r.dot(&a.cross(&b)).atan2(a.dot(&b))
        }
        RotationExtraction::LogProjection => {
            let reference = carried * g2.sim_pose.rotation;
            log_so3(&(g2.real_pose.rotation * reference.transpose()))?.dot(&r)
        }
    };
    let ideal = ideal_pose_from_grasp(g1, sim_object_pose);
    Ok((theta, exp_so3(&(r * theta)) * ideal.rotation))
}

/// Unit direction along which the first two grasps leave the object free:
/// the intersection of their pad planes.
pub fn allowed_translation_direction(g1: &GraspRecord, g2: &GraspRecord, tol: f64) -> Result<Vector3<f64>, EstimateError> {
    let c = closing_axis(&g1.real_pose).cross(&closing_axis(&g2.real_pose));
    let norm = c.norm();
    if norm <= tol {
        return Err(EstimateError::SingularTriplet {
            what: "|n1 x n2|",
            value: norm,
            tol,
        });
    }
    Ok(c / norm)
}

/// Full pose recovery.
///
/// Each conformed grasp `k` constrains the object origin to the plane
/// `n_k · p = n_k · p_k`, where `p_k` is the origin implied by that grasp
/// once the object orientation is known. The first two planes meet in a line
/// along `d_allowed`; `epsilon` is the position along that line, measured
/// from the point closest to the second grasp's implied origin, at which the
/// third plane is met.
pub fn estimate_pose(
    g1: &GraspRecord,
    g2: &GraspRecord,
    g3: &GraspRecord,
    sim_object_pose: &Pose,
    options: &EstimateOptions,
) -> Result<EstimationResult, EstimateError> {
    let tol = options.singularity_tol;
    let n = [g1, g2, g3].map(|g| closing_axis(&g.real_pose));
    let conditioning = Matrix3::from_columns(&n).determinant().abs();
    if conditioning <= tol {
        return Err(EstimateError::SingularTriplet {
            what: "|det[n1 n2 n3]|",
            value: conditioning,
            tol,
        });
    }
    let d = allowed_translation_direction(g1, g2, tol)?;
    let (theta, rotation) = identify_rotation_error(g1, g2, sim_object_pose, options.rotation)?;

    let ideal1 = ideal_pose_from_grasp(g1, sim_object_pose).translation;
    let r_rel = rotation * sim_object_pose.rotation.transpose();
    let implied = |g: &GraspRecord| g.real_pose.translation + r_rel * (sim_object_pose.translation - g.sim_pose.translation);
    let (p2, p3) = (implied(g2), implied(g3));

    // Point on the n1/n2 plane intersection closest to p2.
    let c = n[0].dot(&n[1]);
    let rhs = Vector2::new(n[0].dot(&(ideal1 - p2)), 0.0);
    let ab = Matrix2::new(1.0, c, c, 1.0)
        .lu()
        .solve(&rhs)
        .expect("non-parallel axes give an invertible system");
    let base = p2 + n[0] * ab.x + n[1] * ab.y;

    let epsilon = n[2].dot(&(p3 - base)) / n[2].dot(&d);
    Ok(EstimationResult {
        object_pose: Pose::new(rotation, base + d * epsilon).renormalized(),
        theta,
        epsilon,
        d_allowed: d,
        conditioning,
    })
}
