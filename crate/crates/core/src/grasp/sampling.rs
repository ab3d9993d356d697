use nalgebra::{Matrix3, Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{GripperModel, PlannerError};
use crate::geometry::so3::any_perpendicular;
use crate::geometry::{Pose, Ray, TriMesh};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactPair {
    pub point_a: Point3<f64>,
    pub point_b: Point3<f64>,
    pub normal_a: Vector3<f64>,
    pub normal_b: Vector3<f64>,
    pub width: f64,
    /// Index of the surface sample that produced this pair.
    pub sample: usize,
}

impl ContactPair {
    pub fn midpoint(&self) -> Point3<f64> {
        nalgebra::center(&self.point_a, &self.point_b)
    }

    /// Unit vector from `point_a` to `point_b`.
    pub fn axis(&self) -> Vector3<f64> {
        (self.point_b - self.point_a) / self.width
    }
}

/// A gripper pose in the object frame with its jaw width. Column 1 of
/// `pose.rotation` is the closing axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraspCandidate {
    pub pose: Pose,
    pub width: f64,
}

impl GraspCandidate {
    pub fn closing_axis(&self) -> Vector3<f64> {
        self.pose.axis(1)
    }
}

#[derive(Serialize, Deserialize)]
struct GraspRecordJson {
    pose: Pose,
    width: f64,
    closing_axis: [f64; 3],
}

impl Serialize for GraspCandidate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let a = self.closing_axis();
        GraspRecordJson {
            pose: self.pose,
            width: self.width,
            closing_axis: [a.x, a.y, a.z],
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GraspCandidate {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = GraspRecordJson::deserialize(d)?;
        let axis = Vector3::from(r.closing_axis);
        if (axis - r.pose.axis(1)).norm() > 1e-6 {
            return Err(serde::de::Error::custom(
                "closing_axis does not match column 1 of the pose rotation",
            ));
        }
        Ok(GraspCandidate {
            pose: r.pose,
            width: r.width,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub n_points: usize,
    pub n_rotations: usize,
    /// Allowed deviation of `normal_a . normal_b` from -1.
    pub antipodal_tol: f64,
    pub seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            n_points: 200,
            n_rotations: 8,
            antipodal_tol: 0.01,
            seed: 0,
        }
    }
}

/// Samples surface points uniformly by area and keeps those whose inward ray
/// lands on a nearly anti-parallel face within the gripper opening.
///
/// Sample `i` draws from its own ChaCha stream, so the pairs for `n` points
/// are a prefix of the pairs for any larger `n` with the same seed.
pub fn sample_antipodal_pairs(
    mesh: &TriMesh,
    n_points: usize,
    antipodal_tol: f64,
    gripper: &GripperModel,
    rng_seed: u64,
) -> Result<Vec<ContactPair>, PlannerError> {
    if n_points == 0 {
        return Err(PlannerError::InvalidInput("n_points must be at least 1".into()));
    }
    let cumulative: Vec<f64> = mesh
        .areas()
        .iter()
        .scan(0.0, |acc, a| {
            *acc += a;
            Some(*acc)
        })
        .collect();
    let total = *cumulative.last().expect("mesh has faces");
    let pairs: Vec<ContactPair> = (0..n_points)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            rng.set_stream(i as u64);
            let target = rng.random::<f64>() * total;
            let face = cumulative.partition_point(|&c| c <= target).min(cumulative.len() - 1);
            let [a, b, c] = mesh.triangle(face);
            let (r1, r2): (f64, f64) = (rng.random(), rng.random());
            let s = r1.sqrt();
            let p = Point3::from(a.coords * (1.0 - s) + b.coords * (s * (1.0 - r2)) + c.coords * (s * r2));
            antipodal_pair_at(mesh, p, mesh.normals()[face], antipodal_tol, gripper)
                .map(|pair| ContactPair { sample: i, ..pair })
        })
        .collect();
    if pairs.is_empty() {
        return Err(PlannerError::NoPairsFound { n_points });
    }
    Ok(pairs)
}

/// Casts from `point` against `normal` and tests the antipodal condition.
pub fn antipodal_pair_at(
    mesh: &TriMesh,
    point: Point3<f64>,
    normal: Vector3<f64>,
    antipodal_tol: f64,
    gripper: &GripperModel,
) -> Option<ContactPair> {
    let ray = Ray::new(point, -normal).ok()?;
    let hit = mesh.ray_intersect(&ray)?;
    let width = hit.distance;
    if width > gripper.max_opening || normal.dot(&hit.normal) >= -(1.0 - antipodal_tol) {
        return None;
    }
    let axis = (hit.point - point) / width;
    if axis.dot(&-normal) <= 1.0 - antipodal_tol {
        return None;
    }
    Some(ContactPair {
        point_a: point,
        point_b: hit.point,
        normal_a: normal,
        normal_b: hit.normal,
        width,
        sample: 0,
    })
}

/// Spins the gripper about the pair's axis at `n_rotations` uniform angles
/// and keeps the collision-free poses.
pub fn expand_pair_to_grasps(
    pair: &ContactPair,
    mesh: &TriMesh,
    gripper: &GripperModel,
    n_rotations: usize,
) -> Vec<GraspCandidate> {
    let closing = pair.axis();
    let u = any_perpendicular(&closing);
    let v = closing.cross(&u);
    let origin = pair.midpoint().coords;
    (0..n_rotations)
        .filter_map(|k| {
            let phi = std::f64::consts::TAU * k as f64 / n_rotations as f64;
            let lateral = u * phi.cos() + v * phi.sin();
            let approach = lateral.cross(&closing);
            let pose = Pose::new(Matrix3::from_columns(&[lateral, closing, approach]), origin);
            let grasp = GraspCandidate {
                pose,
                width: pair.width,
            };
            (!check_gripper_collision(&pose, pair.width, gripper, mesh)).then_some(grasp)
        })
        .collect()
}

/// True if any gripper body box at `pose` (object frame) meets the mesh.
pub fn check_gripper_collision(pose: &Pose, width: f64, gripper: &GripperModel, mesh: &TriMesh) -> bool {
    gripper
        .collision_boxes(width)
        .iter()
        .any(|b| b.transformed(pose).intersects_mesh(mesh))
}

/// Samples pairs and expands each into collision-free candidates, in sample order.
pub fn plan_grasps(
    mesh: &TriMesh,
    gripper: &GripperModel,
    config: &PlannerConfig,
) -> Result<Vec<GraspCandidate>, PlannerError> {
    if config.n_rotations == 0 {
        return Err(PlannerError::InvalidInput("n_rotations must be at least 1".into()));
    }
    gripper.validate().map_err(PlannerError::InvalidInput)?;
    let pairs = sample_antipodal_pairs(mesh, config.n_points, config.antipodal_tol, gripper, config.seed)?;
    let nested: Vec<Vec<GraspCandidate>> = pairs
        .par_iter()
        .map(|p| expand_pair_to_grasps(p, mesh, gripper, config.n_rotations))
        .collect();
    Ok(nested.into_iter().flatten().collect())
}
