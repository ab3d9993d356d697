use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::so3::{exp_so3, log_so3, orthonormalize};
use super::GeometryError;

/// Rigid transform stored as a rotation matrix and a translation in meters.
///
/// Columns of `rotation` are the frame axes expressed in the parent frame, so
/// `rotation.column(1)` of a grasp pose is its closing axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    pub fn identity() -> Self {
        Self::new(Matrix3::identity(), Vector3::zeros())
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self::new(Matrix3::identity(), t)
    }

    pub fn from_rotation(r: Matrix3<f64>) -> Self {
        Self::new(r, Vector3::zeros())
    }

    /// Pose from a rotation vector (radians) and a translation.
    pub fn from_parts(rotation_vector: Vector3<f64>, translation: Vector3<f64>) -> Self {
        Self::new(exp_so3(&rotation_vector), translation)
    }

    /// Checks orthonormality and handedness within `tol`.
    pub fn validate(&self, tol: f64) -> Result<(), GeometryError> {
        let err = (self.rotation.transpose() * self.rotation - Matrix3::identity()).amax();
        let det = self.rotation.determinant();
        if err > tol || (det - 1.0).abs() > tol {
            return Err(GeometryError::InvalidRotation {
                orthogonality: err,
                determinant: det,
            });
        }
        if !self.translation.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(())
    }

    /// `self * other`: maps `other`'s frame into `self`'s parent frame.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose::new(
            self.rotation * other.rotation,
            self.rotation * other.translation + self.translation,
        )
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose::new(rt, -(rt * self.translation))
    }

    /// Pose of `other` expressed in the frame of `self`.
    pub fn relative(&self, other: &Pose) -> Pose {
        let rt = self.rotation.transpose();
        Pose::new(rt * other.rotation, rt * (other.translation - self.translation))
    }

    pub fn transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn axis(&self, i: usize) -> Vector3<f64> {
        self.rotation.column(i).into_owned()
    }

    /// Projects the rotation back onto SO(3).
    pub fn renormalized(&self) -> Pose {
        Pose::new(orthonormalize(&self.rotation), self.translation)
    }

    /// Rotation vector of this pose's rotation.
    pub fn rotation_vector(&self) -> Result<Vector3<f64>, GeometryError> {
        log_so3(&self.rotation)
    }

    /// Row-major rotation followed by the translation.
    pub fn to_array(&self) -> [f64; 12] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
            t.x,
            t.y,
            t.z,
        ]
    }

    pub fn from_array(a: &[f64; 12]) -> Pose {
        Pose::new(
            Matrix3::new(a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7], a[8]),
            Vector3::new(a[9], a[10], a[11]),
        )
    }
}

impl std::ops::Mul for Pose {
    type Output = Pose;
    fn mul(self, rhs: Pose) -> Pose {
        self.compose(&rhs)
    }
}

impl Serialize for Pose {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_array().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let a = <[f64; 12]>::deserialize(d)?;
        let pose = Pose::from_array(&a);
        pose.validate(1e-6).map_err(serde::de::Error::custom)?;
        Ok(pose)
    }
}
