use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geometry::{Obb, Pose};

/// Finger boxes are thinned by this much along the closing axis so pads
/// resting exactly on the contact faces do not register as collisions.
pub const PAD_CONTACT_SHRINK: f64 = 1e-5;

/// Parallel-jaw gripper geometry in the grasp frame.
///
/// Frame convention: x is the pad's lateral axis, y the closing axis and z
/// the approach axis pointing from the palm toward the contact center, which
/// is the frame origin. Pads are centered on the origin in x and z.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GripperModel {
    pub max_opening: f64,
    pub pad_width: f64,
    pub pad_height: f64,
    /// Distance from the palm face to the pad center along the approach axis.
    pub finger_depth: f64,
    pub finger_thickness: f64,
    pub palm_width: f64,
    pub palm_depth: f64,
}

impl Default for GripperModel {
    fn default() -> Self {
        GripperModel {
            max_opening: 0.050,
            pad_width: 0.020,
            pad_height: 0.020,
            finger_depth: 0.035,
            finger_thickness: 0.008,
            palm_width: 0.040,
            palm_depth: 0.040,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoxRole {
    FingerPositive,
    FingerNegative,
    Palm,
}

impl GripperModel {
    pub fn validate(&self) -> Result<(), String> {
        let dims = [
            ("max_opening", self.max_opening),
            ("pad_width", self.pad_width),
            ("pad_height", self.pad_height),
            ("finger_depth", self.finger_depth),
            ("finger_thickness", self.finger_thickness),
            ("palm_width", self.palm_width),
            ("palm_depth", self.palm_depth),
        ];
        for (name, v) in dims {
            if !(v > 0.0) || !v.is_finite() {
                return Err(format!("gripper {name} must be positive, got {v}"));
            }
        }
        if self.pad_height / 2.0 > self.finger_depth {
            return Err("pads must not reach into the palm".into());
        }
        Ok(())
    }

    /// Body boxes in the grasp frame with the pads `width` apart.
    pub fn body_boxes(&self, width: f64) -> [(BoxRole, Obb); 3] {
        let finger_len = self.finger_depth + self.pad_height / 2.0;
        let finger_z = self.pad_height / 2.0 - finger_len / 2.0;
        let finger_half = Vector3::new(
            self.pad_width / 2.0,
            self.finger_thickness / 2.0,
            finger_len / 2.0,
        );
        let y = width / 2.0 + self.finger_thickness / 2.0;
        let finger = |sign: f64| {
            Obb::new(
                Pose::from_translation(Vector3::new(0.0, sign * y, finger_z)),
                finger_half,
            )
        };
        let palm = Obb::new(
            Pose::from_translation(Vector3::new(
                0.0,
                0.0,
                -self.finger_depth - self.palm_depth / 2.0,
            )),
            Vector3::new(
                self.palm_width / 2.0,
                self.max_opening / 2.0 + self.finger_thickness,
                self.palm_depth / 2.0,
            ),
        );
        [
            (BoxRole::FingerPositive, finger(1.0)),
            (BoxRole::FingerNegative, finger(-1.0)),
            (BoxRole::Palm, palm),
        ]
    }

    /// Body boxes for collision checks against the grasped object, with the
    /// pad faces pulled back by [`PAD_CONTACT_SHRINK`].
    pub fn collision_boxes(&self, width: f64) -> [Obb; 3] {
        self.body_boxes(width).map(|(role, mut b)| {
            if role != BoxRole::Palm {
                b.half_extents.y -= PAD_CONTACT_SHRINK;
            }
            b
        })
    }

    /// Pad-face sample points (grasp frame) on a regular `n x n` grid of cell
    /// centers, with the inward unit normal of the pad (pointing toward the
    /// opposite pad).
    pub fn pad_samples(&self, width: f64, n: usize) -> Vec<(nalgebra::Point3<f64>, Vector3<f64>)> {
        let mut out = Vec::with_capacity(2 * n * n);
        for sign in [1.0, -1.0] {
            for i in 0..n {
                for j in 0..n {
                    let x = ((i as f64 + 0.5) / n as f64 - 0.5) * self.pad_width;
                    let z = ((j as f64 + 0.5) / n as f64 - 0.5) * self.pad_height;
                    out.push((
                        nalgebra::Point3::new(x, sign * width / 2.0, z),
                        Vector3::new(0.0, -sign, 0.0),
                    ));
                }
            }
        }
        out
    }
}
