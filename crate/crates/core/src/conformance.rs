//! Admittance-controlled grasp conformance against an object whose true pose
//! differs from the planned one.
//!
//! The receiving gripper closes onto the object with penalty-spring pads; the
//! measured wrench drives a mass-spring-damper admittance law on the desired
//! pose, and the robot tracks the desired pose with a first-order lag. The
//! object never moves.

use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::so3::{exp_so3, log_so3, rotation_between};
use crate::geometry::{Pose, Ray, TriMesh};
use crate::grasp::GripperModel;

#[derive(Debug, Error, PartialEq)]
pub enum ConformanceError {
    #[error("invalid admittance parameters: {0}")]
    InvalidParams(String),
    #[error("invalid contact model: {0}")]
    InvalidContact(String),
    #[error("conformance did not converge in {steps} steps (|f| = {force:.3e} N, |t| = {torque:.3e} N·m)")]
    NotConverged { steps: usize, force: f64, torque: f64 },
}

mod mat3_rows {
    use nalgebra::Matrix3;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Matrix3<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]));
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix3<f64>, D::Error> {
        let rows = <[[f64; 3]; 3]>::deserialize(d)?;
        Ok(Matrix3::from_fn(|i, j| rows[i][j]))
    }
}

/// Virtual inertia, damping and stiffness for translation and rotation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdmittanceParams {
    #[serde(with = "mat3_rows")]
    pub mass: Matrix3<f64>,
    #[serde(with = "mat3_rows")]
    pub damping: Matrix3<f64>,
    #[serde(with = "mat3_rows")]
    pub stiffness: Matrix3<f64>,
    #[serde(with = "mat3_rows")]
    pub rot_mass: Matrix3<f64>,
    #[serde(with = "mat3_rows")]
    pub rot_damping: Matrix3<f64>,
    #[serde(with = "mat3_rows")]
    pub rot_stiffness: Matrix3<f64>,
    pub target_force: Vector3<f64>,
    pub dt: f64,
    /// Enables rotational admittance; when off the desired orientation is held.
    pub rotational: bool,
}

impl Default for AdmittanceParams {
    fn default() -> Self {
        AdmittanceParams {
            mass: Matrix3::identity(),
            damping: Matrix3::identity() * 40.0,
            stiffness: Matrix3::identity() * 400.0,
            rot_mass: Matrix3::identity() * 2e-5,
            rot_damping: Matrix3::identity() * 8e-4,
            rot_stiffness: Matrix3::identity() * 8e-3,
            target_force: Vector3::zeros(),
            dt: 1e-3,
            rotational: true,
        }
    }
}

fn check_spd(name: &str, m: &Matrix3<f64>) -> Result<(), ConformanceError> {
    let asym = (m - m.transpose()).amax();
    if !m.iter().all(|v| v.is_finite()) || asym > 1e-12 * m.amax().max(1.0) {
        return Err(ConformanceError::InvalidParams(format!("{name} is not symmetric")));
    }
    if m.cholesky().is_none() {
        return Err(ConformanceError::InvalidParams(format!("{name} is not positive definite")));
    }
    Ok(())
}

impl AdmittanceParams {
    pub fn validate(&self) -> Result<(), ConformanceError> {
        check_spd("mass", &self.mass)?;
        check_spd("damping", &self.damping)?;
        check_spd("stiffness", &self.stiffness)?;
        check_spd("rot_mass", &self.rot_mass)?;
        check_spd("rot_damping", &self.rot_damping)?;
        check_spd("rot_stiffness", &self.rot_stiffness)?;
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(ConformanceError::InvalidParams(format!("dt must be positive, got {}", self.dt)));
        }
        if !self.target_force.iter().all(|v| v.is_finite()) {
            return Err(ConformanceError::InvalidParams("target_force is not finite".into()));
        }
        Ok(())
    }
}

/// Penalty contact between the pads and the object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContactModel {
    /// Stiffness of one whole pad, N/m of uniform penetration.
    pub pad_stiffness: f64,
    /// Friction is assumed sufficient to hold the object; kept for the record.
    pub friction: bool,
    /// The fingers are commanded this much narrower than the face distance.
    pub closure_margin: f64,
    /// Samples per pad side; each pad carries `n * n` springs.
    pub samples_per_side: usize,
}

impl Default for ContactModel {
    fn default() -> Self {
        ContactModel {
            pad_stiffness: 1000.0,
            friction: true,
            closure_margin: 0.001,
            samples_per_side: 4,
        }
    }
}

impl ContactModel {
    pub fn validate(&self) -> Result<(), ConformanceError> {
        if !(self.pad_stiffness > 0.0) || !self.pad_stiffness.is_finite() {
            return Err(ConformanceError::InvalidContact("pad_stiffness must be positive".into()));
        }
        if !(self.closure_margin >= 0.0) {
            return Err(ConformanceError::InvalidContact("closure_margin must be non-negative".into()));
        }
        if self.samples_per_side == 0 {
            return Err(ConformanceError::InvalidContact("samples_per_side must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Twist {
    pub linear: Vector3<f64>,
    pub angular: Vector3<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Wrench {
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
}

impl Wrench {
    pub fn is_zero(&self) -> bool {
        self.force == Vector3::zeros() && self.torque == Vector3::zeros()
    }
}

/// Pad reaction wrench in the world frame, torque taken about the gripper
/// frame origin (the contact center).
///
/// `width` is the commanded pad separation. Each pad sample that lies inside
/// the object pushes with `pad_stiffness / n²` times its penetration depth
/// along the pad's inward normal.
pub fn reaction_wrench(
    gripper_pose: &Pose,
    width: f64,
    true_object_pose: &Pose,
    mesh: &TriMesh,
    gripper: &GripperModel,
    contact: &ContactModel,
) -> Wrench {
    let n = contact.samples_per_side;
    let k = contact.pad_stiffness / (n * n) as f64;
    // Work in the object frame so the mesh stays untouched.
    let to_object = true_object_pose.inverse().compose(gripper_pose);
    let mut force_g = Vector3::zeros();
    let mut torque_g = Vector3::zeros();
    for (p, inward) in gripper.pad_samples(width, n) {
        let origin = to_object.transform_point(&p);
        let outward = to_object.transform_vector(&-inward);
        let Ok(ray) = Ray::new(origin, outward) else { continue };
        let Some(hit) = mesh.ray_intersect(&ray) else { continue };
        if hit.normal.dot(&outward) <= 0.0 {
            continue;
        }
        let f = inward * (k * hit.distance);
        force_g += f;
        torque_g += p.coords.cross(&f);
    }
    Wrench {
        force: gripper_pose.rotation * force_g,
        torque: gripper_pose.rotation * torque_g,
    }
}

/// One semi-implicit Euler step of `M ë + B ė + K e = f + f_d` in the error
/// coordinate `e = x_p - x_d`, returning the new desired pose and twist.
///
/// Rotation uses `e = log(R_p R_dᵀ)` in the world frame.
pub fn admittance_step(
    actual: &Pose,
    actual_twist: &Twist,
    desired: &Pose,
    desired_twist: &Twist,
    wrench: &Wrench,
    params: &AdmittanceParams,
) -> (Pose, Twist) {
    let dt = params.dt;
    let solve = |m: &Matrix3<f64>, rhs: Vector3<f64>| m.cholesky().map(|c| c.solve(&rhs)).unwrap_or(rhs);

    let e = actual.translation - desired.translation;
    let e_dot = actual_twist.linear - desired_twist.linear;
    let e_ddot = solve(
        &params.mass,
        wrench.force + params.target_force - params.damping * e_dot - params.stiffness * e,
    );
    let e_dot = e_dot + e_ddot * dt;
    let e = e + e_dot * dt;
    let translation = actual.translation - e;
    let linear = actual_twist.linear - e_dot;

    let (rotation, angular) = if params.rotational {
        let er = log_so3(&(actual.rotation * desired.rotation.transpose())).unwrap_or_else(|_| Vector3::zeros());
        let er_dot = actual_twist.angular - desired_twist.angular;
        let er_ddot = solve(
            &params.rot_mass,
            wrench.torque - params.rot_damping * er_dot - params.rot_stiffness * er,
        );
        let er_dot = er_dot + er_ddot * dt;
        let er = er + er_dot * dt;
        (exp_so3(&-er) * actual.rotation, actual_twist.angular - er_dot)
    } else {
        (desired.rotation, Vector3::zeros())
    };
    (Pose::new(rotation, translation), Twist { linear, angular })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConformanceOptions {
    pub max_steps: usize,
    pub force_tol: f64,
    pub torque_tol: f64,
    /// Linear and angular speed below which the hand counts as settled.
    pub speed_tol: f64,
    /// Closing-axis deviation (rad) beyond which a result is flagged redirected.
    pub redirect_tol: f64,
    /// Time constant (s) of the robot's tracking of the desired pose.
    pub tracking_lag: f64,
    pub record_trace: bool,
}

impl Default for ConformanceOptions {
    fn default() -> Self {
        ConformanceOptions {
            max_steps: 20000,
            force_tol: 1e-3,
            torque_tol: 1e-4,
            speed_tol: 1e-5,
            redirect_tol: 10f64.to_radians(),
            tracking_lag: 0.01,
            record_trace: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub step: usize,
    pub time: f64,
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
    pub position: Vector3<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformanceResult {
    pub conformed_pose: Pose,
    pub residual_force: Vector3<f64>,
    pub residual_torque: Vector3<f64>,
    pub steps_used: usize,
    pub converged: bool,
    /// Angle between the planned and conformed closing axes, radians.
    pub axis_deviation: f64,
    pub redirected: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceSample>,
}

impl ConformanceResult {
    pub fn require_converged(self) -> Result<Self, ConformanceError> {
        if self.converged {
            Ok(self)
        } else {
            Err(ConformanceError::NotConverged {
                steps: self.steps_used,
                force: self.residual_force.norm(),
                torque: self.residual_torque.norm(),
            })
        }
    }
}

/// Closes the gripper at `planned` (world) onto the object at
/// `true_object_pose` and lets admittance control settle the hand.
///
/// `width` is the planned face distance; the pads are commanded
/// `contact.closure_margin` narrower. Never fails for valid inputs; check
/// `converged` (or call [`ConformanceResult::require_converged`]).
#[allow(clippy::too_many_arguments)]
pub fn conform_grasp(
    planned: &Pose,
    width: f64,
    true_object_pose: &Pose,
    mesh: &TriMesh,
    gripper: &GripperModel,
    contact: &ContactModel,
    params: &AdmittanceParams,
    options: &ConformanceOptions,
) -> Result<ConformanceResult, ConformanceError> {
    params.validate()?;
    contact.validate()?;
    let pad_width = (width - contact.closure_margin).max(0.0);
    let alpha = params.dt / options.tracking_lag.max(params.dt);

    let mut actual = *planned;
    let mut actual_twist = Twist::default();
    let mut desired = *planned;
    let mut desired_twist = Twist::default();
    let mut trace = Vec::new();
    let mut wrench = Wrench::default();
    let mut steps_used = 0;
    let mut converged = false;

    for step in 1..=options.max_steps {
        steps_used = step;
        wrench = reaction_wrench(&actual, pad_width, true_object_pose, mesh, gripper, contact);
        if options.record_trace {
            trace.push(TraceSample {
                step,
                time: (step - 1) as f64 * params.dt,
                force: wrench.force,
                torque: wrench.torque,
                position: actual.translation,
            });
        }
        let settled = actual_twist.linear.norm() < options.speed_tol && actual_twist.angular.norm() < options.speed_tol;
        if settled && wrench.force.norm() < options.force_tol && wrench.torque.norm() < options.torque_tol {
            converged = true;
            break;
        }
        (desired, desired_twist) =
            admittance_step(&actual, &actual_twist, &desired, &desired_twist, &wrench, params);

        let dp = (desired.translation - actual.translation) * alpha;
        let dr = log_so3(&(desired.rotation * actual.rotation.transpose())).unwrap_or_else(|_| Vector3::zeros()) * alpha;
        actual_twist = Twist {
            linear: dp / params.dt,
            angular: dr / params.dt,
        };
        actual = Pose::new(exp_so3(&dr) * actual.rotation, actual.translation + dp);
    }

    let axis_deviation = planned.axis(1).dot(&actual.axis(1)).clamp(-1.0, 1.0).acos();
    Ok(ConformanceResult {
        conformed_pose: actual.renormalized(),
        residual_force: wrench.force,
        residual_torque: wrench.torque,
        steps_used,
        converged,
        axis_deviation,
        redirected: axis_deviation > options.redirect_tol,
        trace,
    })
}

/// Rest pose of a conformed grasp on flat parallel faces, in closed form.
///
/// The planned grasp (world frame, made against the object at
/// `sim_object_pose`) is turned by the smallest rotation that aligns its
/// closing axis with the face normal of the object at `true_object_pose`,
/// then slid along that normal onto the true face midplane. This is the
/// state the dynamic simulation settles into when the pads fully cover both
/// faces.
pub fn flat_contact_equilibrium(planned: &Pose, sim_object_pose: &Pose, true_object_pose: &Pose) -> Pose {
    let r_rel = true_object_pose.rotation * sim_object_pose.rotation.transpose();
    let n_planned = planned.axis(1);
    let n_true = r_rel * n_planned;
    let rotation = rotation_between(&n_planned, &n_true) * planned.rotation;
    let co_moved = true_object_pose.translation + r_rel * (planned.translation - sim_object_pose.translation);
    let translation = planned.translation + n_true * n_true.dot(&(co_moved - planned.translation));
    Pose::new(rotation, translation).renormalized()
}

/// Squeeze used to probe pad coverage in [`has_robust_pad_contact`].
pub const PROBE_SQUEEZE: f64 = 0.001;

/// True when, under every in-plane pad slip of up to `clearance`, every pad
/// sample on both pads touches its face at the same depth. Such grasps
/// settle flush on the face midplane; grasps with partial or mismatched
/// patches can catch a neighbouring feature or hold a tilt through a
/// contact couple.
pub fn has_robust_pad_contact(
    grasp_in_object: &Pose,
    width: f64,
    mesh: &TriMesh,
    gripper: &GripperModel,
    contact: &ContactModel,
    clearance: f64,
) -> bool {
    let n = contact.samples_per_side;
    let samples = gripper.pad_samples(width - PROBE_SQUEEZE, n);
    let shifts = [
        Vector3::zeros(),
        Vector3::new(clearance, 0.0, 0.0),
        Vector3::new(-clearance, 0.0, 0.0),
        Vector3::new(0.0, 0.0, clearance),
        Vector3::new(0.0, 0.0, -clearance),
    ];
    shifts.iter().all(|s| {
        let pose = grasp_in_object.compose(&Pose::from_translation(*s));
        let depth = |(p, inward): &(Point3<f64>, Vector3<f64>)| -> Option<f64> {
            let outward = pose.transform_vector(&-inward);
            let hit = mesh.ray_intersect(&Ray::new(pose.transform_point(p), outward).ok()?)?;
            (hit.normal.dot(&outward) > 0.0).then_some(hit.distance)
        };
        let depths: Vec<Option<f64>> = samples.iter().map(depth).collect();
        depths
            .iter()
            .all(|d| d.is_some_and(|d| (d - PROBE_SQUEEZE / 2.0).abs() < 1e-6))
    })
}

/// Face midplane offset along the grasp's closing axis: signed distance from
/// the grasp origin to the midpoint of the two faces hit by rays cast along
/// the closing axis from `origin` (object frame).
pub fn midplane_offset(grasp_in_object: &Pose, mesh: &TriMesh) -> Option<f64> {
    let axis = grasp_in_object.axis(1);
    let origin = Point3::from(grasp_in_object.translation);
    let plus = mesh.ray_intersect(&Ray::new(origin, axis).ok()?)?;
    let minus = mesh.ray_intersect(&Ray::new(origin, -axis).ok()?)?;
    Some((plus.distance - minus.distance) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes;

    fn cube() -> TriMesh {
        shapes::cuboid(Vector3::new(0.03, 0.025, 0.03)).unwrap()
    }

    /// Grasp across the cube's y faces, approaching along -z.
    fn y_grasp() -> Pose {
        Pose::new(
            Matrix3::from_columns(&[-Vector3::x(), Vector3::y(), -Vector3::z()]),
            Vector3::zeros(),
        )
    }

    #[test]
    fn symmetric_contact_is_balanced() {
        let w = reaction_wrench(
            &y_grasp(),
            0.024,
            &Pose::identity(),
            &cube(),
            &GripperModel::default(),
            &ContactModel::default(),
        );
        assert!(w.force.norm() < 1e-12 && w.torque.norm() < 1e-14, "{w:?}");
    }

    #[test]
    fn one_millimeter_shift_gives_one_newton() {
        let object = Pose::from_translation(Vector3::new(0.0, 0.001, 0.0));
        let w = reaction_wrench(
            &y_grasp(),
            0.025,
            &object,
            &cube(),
            &GripperModel::default(),
            &ContactModel::default(),
        );
        assert!((w.force - Vector3::new(0.0, -1.0, 0.0)).norm() < 1e-9, "{w:?}");
    }

    #[test]
    fn tilt_produces_restoring_torque() {
        let g = GripperModel::default();
        let c = ContactModel::default();
        let mesh = cube();
        for axis in [Vector3::x(), Vector3::z()] {
            let object = Pose::from_rotation(exp_so3(&(axis * 2f64.to_radians())));
            let w = reaction_wrench(&y_grasp(), 0.024, &object, &mesh, &g, &c);
            assert!(w.torque.dot(&axis) < 0.0, "{axis:?}: {w:?}");
            // Finite difference: turning the hand along with the object
            // lowers the wrench.
            let turned = Pose::from_rotation(exp_so3(&(axis * 0.5f64.to_radians()))).compose(&y_grasp());
            let w2 = reaction_wrench(&turned, 0.024, &object, &mesh, &g, &c);
            assert!(w2.torque.norm() < w.torque.norm());
        }
    }

    #[test]
    fn zero_force_at_rest_leaves_desired_unchanged() {
        let p = Pose::from_parts(Vector3::new(0.1, -0.2, 0.3), Vector3::new(1.0, 2.0, 3.0));
        let (d, t) = admittance_step(&p, &Twist::default(), &p, &Twist::default(), &Wrench::default(), &AdmittanceParams::default());
        assert_eq!(d.translation, p.translation);
        assert!((d.rotation - p.rotation).amax() < 1e-15);
        assert_eq!(t, Twist::default());
    }

    fn run_fixed(params: &AdmittanceParams, wrench: Wrench, steps: usize) -> Vec<(Pose, Twist)> {
        let actual = Pose::identity();
        let mut state = (actual, Twist::default());
        (0..steps)
            .map(|_| {
                state = admittance_step(&actual, &Twist::default(), &state.0, &state.1, &wrench, params);
                state
            })
            .collect()
    }

    #[test]
    fn static_equilibrium() {
        let params = AdmittanceParams::default();
        let f = Vector3::new(1.0, -2.0, 0.5);
        let tau = Vector3::new(1e-3, 0.0, -2e-3);
        let last = run_fixed(&params, Wrench { force: f, torque: tau }, 5000).pop().unwrap();
        let x_d = last.0;
        let residual = params.stiffness * (Vector3::zeros() - x_d.translation) - f;
        assert!(residual.norm() < 1e-6, "{residual:?}");
        let er = log_so3(&x_d.rotation.transpose()).unwrap();
        assert!((params.rot_stiffness * er - tau).norm() < 1e-8);
    }

    #[test]
    fn step_response_matches_critically_damped_solution() {
        let params = AdmittanceParams::default();
        let wn = 20.0;
        let xs = run_fixed(&params, Wrench { force: Vector3::new(1.0, 0.0, 0.0), torque: Vector3::zeros() }, 1000);
        let steady = 1.0 / 400.0;
        for (i, (pose, _)) in xs.iter().enumerate() {
            let t = (i + 1) as f64 * params.dt;
            let exact = steady * (1.0 - (1.0 + wn * t) * (-wn * t).exp());
            let e = -pose.translation.x;
            assert!((e - exact).abs() <= 0.01 * steady, "t = {t}: {e} vs {exact}");
        }
    }

    #[test]
    fn lyapunov_function_decreases() {
        let params = AdmittanceParams::default();
        let f = Vector3::new(0.3, 0.0, -0.2);
        let eq = params.stiffness.cholesky().unwrap().solve(&f);
        let v = |(p, t): &(Pose, Twist)| {
            let e = -p.translation - eq;
            let ed = -t.linear;
            0.5 * ed.dot(&(params.mass * ed)) + 0.5 * e.dot(&(params.stiffness * e))
        };
        let xs = run_fixed(&params, Wrench { force: f, torque: Vector3::zeros() }, 3000);
        for w in xs.windows(2) {
            assert!(v(&w[1]) <= v(&w[0]) * (1.0 + 1e-12));
        }
    }

    fn conform_cube(offset: Vector3<f64>, rot: Vector3<f64>) -> (ConformanceResult, Pose) {
        let truth = Pose::from_parts(rot, offset);
        let res = conform_grasp(
            &y_grasp(),
            0.025,
            &truth,
            &cube(),
            &GripperModel::default(),
            &ContactModel::default(),
            &AdmittanceParams::default(),
            &ConformanceOptions::default(),
        )
        .unwrap();
        (res, truth)
    }

    #[test]
    fn zero_offset_converges_immediately() {
        let (res, _) = conform_cube(Vector3::zeros(), Vector3::zeros());
        assert!(res.converged);
        assert_eq!(res.steps_used, 1);
        assert_eq!(res.conformed_pose, y_grasp());
    }

    #[test]
    fn closing_axis_offset_is_followed() {
        let (res, truth) = conform_cube(Vector3::new(0.0, 0.003, 0.0), Vector3::zeros());
        assert!(res.converged, "{res:?}");
        let d = y_grasp().inverse().transform_vector(&res.conformed_pose.translation);
        assert!((d.y - 0.003).abs() < 1e-5, "{d:?}");
        assert!(d.x.abs() < 1e-6 && d.z.abs() < 1e-6);
        let local = truth.inverse().compose(&res.conformed_pose);
        assert!(midplane_offset(&local, &cube()).unwrap().abs() < 1e-5);
    }

    #[test]
    fn twist_about_closing_axis_keeps_face_alignment() {
        let (res, truth) = conform_cube(Vector3::zeros(), Vector3::new(0.0, 2f64.to_radians(), 0.0));
        assert!(res.converged);
        let face_normal = truth.rotation * Vector3::y();
        let angle = res.conformed_pose.axis(1).dot(&face_normal).clamp(-1.0, 1.0).acos();
        assert!(angle.to_degrees() < 0.05);
    }

    #[test]
    fn in_plane_tilt_is_aligned() {
        let rot = Vector3::new(2f64.to_radians(), 0.0, 0.0);
        let (res, truth) = conform_cube(Vector3::new(0.0, 0.002, 0.0), rot);
        assert!(res.converged, "{res:?}");
        let face_normal = truth.rotation * Vector3::y();
        let angle = res.conformed_pose.axis(1).dot(&face_normal).clamp(-1.0, 1.0).acos();
        assert!(angle.to_degrees() < 0.05, "{}", angle.to_degrees());
        let eq = flat_contact_equilibrium(&y_grasp(), &Pose::identity(), &truth);
        let local = truth.inverse().compose(&res.conformed_pose);
        assert!(midplane_offset(&local, &cube()).unwrap().abs() < 1e-5);
        assert!((eq.axis(1) - res.conformed_pose.axis(1)).norm() < 1e-3);
    }

    #[test]
    fn translational_only_mode_holds_orientation() {
        let truth = Pose::from_parts(Vector3::new(0.02, 0.0, 0.0), Vector3::new(0.0, 0.002, 0.0));
        let params = AdmittanceParams {
            rotational: false,
            ..Default::default()
        };
        let options = ConformanceOptions {
            torque_tol: f64::INFINITY,
            ..Default::default()
        };
        let res = conform_grasp(&y_grasp(), 0.025, &truth, &cube(), &GripperModel::default(), &ContactModel::default(), &params, &options).unwrap();
        assert!(res.converged);
        assert_eq!(res.conformed_pose.rotation, y_grasp().rotation);
    }

    #[test]
    fn residual_force_eventually_decreases() {
        let truth = Pose::from_translation(Vector3::new(0.0, 0.004, 0.0));
        let options = ConformanceOptions {
            record_trace: true,
            ..Default::default()
        };
        let res = conform_grasp(&y_grasp(), 0.025, &truth, &cube(), &GripperModel::default(), &ContactModel::default(), &AdmittanceParams::default(), &options).unwrap();
        let f: Vec<f64> = res.trace.iter().map(|s| s.force.norm()).collect();
        let k0 = 200;
        for k in k0..f.len() / 10 {
            assert!(f[10 * k] <= f[k] + 1e-12, "k = {k}");
        }
    }

    #[test]
    fn object_pose_untouched_and_redirect_flag() {
        let truth = Pose::from_translation(Vector3::new(0.0, -0.01, 0.0));
        let before = truth;
        let res = conform_grasp(&y_grasp(), 0.025, &truth, &cube(), &GripperModel::default(), &ContactModel::default(), &AdmittanceParams::default(), &ConformanceOptions::default()).unwrap();
        assert_eq!(truth.to_array(), before.to_array());
        assert!(res.converged && !res.redirected);
    }

    #[test]
    fn pad_contact_filter() {
        let g = GripperModel::default();
        let c = ContactModel::default();
        let mesh = shapes::cuboid(Vector3::new(0.06, 0.025, 0.06)).unwrap();
        assert!(has_robust_pad_contact(&y_grasp(), 0.025, &mesh, &g, &c, 0.005));
        // Pads slide almost off a narrow bar.
        let bar = shapes::cuboid(Vector3::new(0.006, 0.025, 0.06)).unwrap();
        assert!(!has_robust_pad_contact(&y_grasp(), 0.025, &bar, &g, &c, 0.003));
        // Next to the L's inner corner one pad reaches into the other arm.
        let l = shapes::default_l_shape();
        let b = *l.bounds();
        let near_corner = Pose::new(
            Matrix3::from_columns(&[-Vector3::x(), Vector3::y(), -Vector3::z()]),
            Vector3::new(b.min.x + 0.03, b.min.y + 0.0125, 0.0),
        );
        assert!(!has_robust_pad_contact(&near_corner, 0.025, &l, &g, &c, 0.003));
    }

    #[test]
    fn params_json_and_validation() {
        let p = AdmittanceParams::default();
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("[[1.0,0.0,0.0],[0.0,1.0,0.0],[0.0,0.0,1.0]]"));
        let back: AdmittanceParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        let bad = AdmittanceParams {
            stiffness: Matrix3::new(1.0, 2.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(AdmittanceParams { dt: 0.0, ..Default::default() }.validate().is_err());
    }
}
