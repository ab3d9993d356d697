//! Incremental bimanual regrasp search over ranked grasp triplets.
//!
//! The object is picked by arm A with the first grasp, handed to arm B which
//! takes the second grasp, handed back to arm A on the third grasp and placed
//! at the goal. Arms are free-flying grippers confined to box workspaces.

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Obb, Pose, TriMesh};
use crate::grasp::{check_gripper_collision, GraspCandidate, GripperModel};
use crate::triplet::{GraspGroup, Triplet};

/// Number of samples on the straight approach/retreat segment.
pub const APPROACH_SAMPLES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ArmId {
    A,
    B,
}

impl ArmId {
    pub fn other(self) -> ArmId {
        match self {
            ArmId::A => ArmId::B,
            ArmId::B => ArmId::A,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Workspace {
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|i| !(self.min[i] <= self.max[i]))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmModel {
    pub id: ArmId,
    pub workspace: Workspace,
    #[serde(default)]
    pub home: Pose,
}

/// Everything the sequencer needs to know about the world.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub object_start: Pose,
    pub object_goal: Pose,
    pub handover: Pose,
    pub arms: [ArmModel; 2],
    /// Optional table plane; gripper boxes must stay above it at pick and place.
    #[serde(default)]
    pub table_z: Option<f64>,
}

impl Scene {
    pub fn arm(&self, id: ArmId) -> &ArmModel {
        self.arms.iter().find(|a| a.id == id).expect("scene defines both arms")
    }

    pub fn validate(&self) -> Result<(), SequenceError> {
        let ids = [self.arms[0].id, self.arms[1].id];
        if ids[0] == ids[1] {
            return Err(SequenceError::InvalidScene("both arms share one id".into()));
        }
        for arm in &self.arms {
            if arm.workspace.is_empty() {
                return Err(SequenceError::InvalidScene(format!("arm {:?} has an empty workspace", arm.id)));
            }
        }
        for (name, p) in [
            ("object_start", &self.object_start),
            ("object_goal", &self.object_goal),
            ("handover", &self.handover),
        ] {
            p.validate(1e-6)
                .map_err(|e| SequenceError::InvalidScene(format!("{name}: {e}")))?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Pick,
    HandoverGive,
    HandoverReceive,
    Release,
    Place,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    pub arm: ArmId,
    /// Index into the candidate list.
    pub grasp: usize,
    pub gripper_pose: Pose,
    pub object_pose: Pose,
    pub phase: Phase,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegraspPlan {
    /// Index of the chosen triplet in the ranked list.
    pub triplet: usize,
    /// Group index of each grasp, in the order g1, g2, g3.
    pub groups: [usize; 3],
    /// Candidate index of each grasp, in the order g1, g2, g3.
    pub grasps: [usize; 3],
    pub steps: Vec<PlanStep>,
}

#[derive(Debug, Error, PartialEq)]
pub enum SequenceError {
    #[error("no feasible regrasp sequence after trying {triplets} triplets")]
    PlanNotFound { triplets: usize },
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("triplet references group or candidate {0} that does not exist")]
    BadIndex(usize),
}

/// True when the two grippers' body boxes, both posed in the object frame,
/// do not overlap.
pub fn check_handover_compatibility(give: &GraspCandidate, receive: &GraspCandidate, gripper: &GripperModel) -> bool {
    let a = gripper.body_boxes(give.width).map(|(_, b)| b.transformed(&give.pose));
    let b = gripper.body_boxes(receive.width).map(|(_, b)| b.transformed(&receive.pose));
    !a.iter().any(|x| b.iter().any(|y| x.overlaps(y)))
}

struct Search<'a> {
    candidates: &'a [GraspCandidate],
    scene: &'a Scene,
    gripper: &'a GripperModel,
    mesh: &'a TriMesh,
}

impl Search<'_> {
    fn in_workspace(&self, arm: ArmId, object: &Pose, grasp: &GraspCandidate) -> bool {
        let world = object.compose(&grasp.pose);
        self.scene.arm(arm).workspace.contains(&world.translation)
    }

    fn above_table(&self, object: &Pose, grasp: &GraspCandidate) -> bool {
        let Some(table) = self.scene.table_z else {
            return true;
        };
        let world = object.compose(&grasp.pose);
        self.gripper
            .body_boxes(grasp.width)
            .iter()
            .all(|(_, b)| b.transformed(&world).aabb().min.z >= table)
    }

    /// Retreat samples along -approach, in the object frame.
    fn approach_poses(&self, grasp: &GraspCandidate) -> impl Iterator<Item = Pose> + '_ {
        let len = 2.0 * self.gripper.finger_depth;
        let pose = grasp.pose;
        (1..=APPROACH_SAMPLES).map(move |i| {
            let s = len * i as f64 / APPROACH_SAMPLES as f64;
            pose.compose(&Pose::from_translation(Vector3::new(0.0, 0.0, -s)))
        })
    }

    fn approach_clear(&self, grasp: &GraspCandidate, other: Option<&GraspCandidate>) -> bool {
        let other_boxes: Vec<Obb> = other
            .map(|o| {
                self.gripper
                    .body_boxes(o.width)
                    .iter()
                    .map(|(_, b)| b.transformed(&o.pose))
                    .collect()
            })
            .unwrap_or_default();
        self.approach_poses(grasp).all(|pose| {
            if check_gripper_collision(&pose, grasp.width, self.gripper, self.mesh) {
                return false;
            }
            self.gripper.body_boxes(grasp.width).iter().all(|(_, b)| {
                let b = b.transformed(&pose);
                !other_boxes.iter().any(|o| o.overlaps(&b))
            })
        })
    }

    fn first_ok(&self, g: &GraspCandidate) -> bool {
        let s = self.scene;
        self.in_workspace(ArmId::A, &s.object_start, g)
            && self.above_table(&s.object_start, g)
            && self.in_workspace(ArmId::A, &s.handover, g)
            && self.approach_clear(g, None)
    }

    fn second_ok(&self, g: &GraspCandidate) -> bool {
        self.in_workspace(ArmId::B, &self.scene.handover, g)
    }

    fn third_ok(&self, g: &GraspCandidate) -> bool {
        let s = self.scene;
        self.in_workspace(ArmId::A, &s.handover, g)
            && self.in_workspace(ArmId::A, &s.object_goal, g)
            && self.above_table(&s.object_goal, g)
    }

    fn handover_ok(&self, holding: &GraspCandidate, receiving: &GraspCandidate) -> bool {
        check_handover_compatibility(holding, receiving, self.gripper)
            && self.approach_clear(receiving, Some(holding))
    }
}

/// Assignments of a triplet's groups to the roles g1, g2, g3, tried in this
/// order.
const ROLE_ORDERS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// First feasible plan in triplet order, then role order, then lexicographic
/// member order.
pub fn plan_sequence(
    triplets: &[Triplet],
    groups: &[GraspGroup],
    candidates: &[GraspCandidate],
    scene: &Scene,
    gripper: &GripperModel,
    mesh: &TriMesh,
) -> Result<RegraspPlan, SequenceError> {
    scene.validate()?;
    let search = Search {
        candidates,
        scene,
        gripper,
        mesh,
    };
    let member_lists = |order: [usize; 3]| -> Result<[&[usize]; 3], SequenceError> {
        let mut out: [&[usize]; 3] = [&[], &[], &[]];
        for (slot, &g) in order.iter().enumerate() {
            let group = groups.get(g).ok_or(SequenceError::BadIndex(g))?;
            if let Some(&bad) = group.members.iter().find(|&&m| m >= candidates.len()) {
                return Err(SequenceError::BadIndex(bad));
            }
            out[slot] = &group.members;
        }
        Ok(out)
    };
    let c = |i: usize| &search.candidates[i];
    for (ti, t) in triplets.iter().enumerate() {
        for role in ROLE_ORDERS {
            let order = role.map(|r| t.groups[r]);
            let [m1, m2, m3] = member_lists(order)?;
            let ok2: Vec<bool> = m2.iter().map(|&i| search.second_ok(c(i))).collect();
            let ok3: Vec<bool> = m3.iter().map(|&i| search.third_ok(c(i))).collect();
            if !ok2.contains(&true) || !ok3.contains(&true) {
                continue;
            }
            for &i1 in m1 {
                if !search.first_ok(c(i1)) {
                    continue;
                }
                for (&i2, _) in m2.iter().zip(&ok2).filter(|(_, &ok)| ok) {
                    if !search.handover_ok(c(i1), c(i2)) {
                        continue;
                    }
                    for (&i3, _) in m3.iter().zip(&ok3).filter(|(_, &ok)| ok) {
                        if search.handover_ok(c(i2), c(i3)) {
                            return Ok(build_plan(ti, order, [i1, i2, i3], candidates, scene));
                        }
                    }
                }
            }
        }
    }
    Err(SequenceError::PlanNotFound {
        triplets: triplets.len(),
    })
}

fn build_plan(
    triplet: usize,
    groups: [usize; 3],
    grasps: [usize; 3],
    candidates: &[GraspCandidate],
    scene: &Scene,
) -> RegraspPlan {
    let step = |arm, slot: usize, object: &Pose, phase| PlanStep {
        arm,
        grasp: grasps[slot],
        gripper_pose: object.compose(&candidates[grasps[slot]].pose),
        object_pose: *object,
        phase,
    };
    let (start, hand, goal) = (&scene.object_start, &scene.handover, &scene.object_goal);
    let steps = vec![
        step(ArmId::A, 0, start, Phase::Pick),
        step(ArmId::A, 0, hand, Phase::HandoverGive),
        step(ArmId::B, 1, hand, Phase::HandoverReceive),
        step(ArmId::A, 0, hand, Phase::Release),
        step(ArmId::B, 1, hand, Phase::HandoverGive),
        step(ArmId::A, 2, hand, Phase::HandoverReceive),
        step(ArmId::B, 1, hand, Phase::Release),
        step(ArmId::A, 2, goal, Phase::Place),
    ];
    RegraspPlan {
        triplet,
        groups,
        grasps,
        steps,
    }
}

/// Re-derives every plan invariant from the raw inputs.
pub fn validate_plan(
    plan: &RegraspPlan,
    triplets: &[Triplet],
    groups: &[GraspGroup],
    candidates: &[GraspCandidate],
    scene: &Scene,
    gripper: &GripperModel,
    mesh: &TriMesh,
) -> Result<(), String> {
    let triplet = triplets.get(plan.triplet).ok_or("triplet index out of range")?;
    let mut used_groups = plan.groups;
    used_groups.sort_unstable();
    if used_groups != triplet.groups {
        return Err(format!("plan groups {:?} are not the triplet {:?}", plan.groups, triplet.groups));
    }
    for (slot, &g) in plan.grasps.iter().enumerate() {
        let group = groups.get(plan.groups[slot]).ok_or("group index out of range")?;
        if !group.members.contains(&g) {
            return Err(format!("grasp {g} is not a member of group {}", plan.groups[slot]));
        }
    }
    let distinct = plan.grasps[0] != plan.grasps[1]
        && plan.grasps[1] != plan.grasps[2]
        && plan.grasps[0] != plan.grasps[2];
    if !distinct {
        return Err("grasps are not distinct".into());
    }

    let mut attached: Vec<(ArmId, usize)> = Vec::new();
    let mut last_give: Option<ArmId> = None;
    for (k, s) in plan.steps.iter().enumerate() {
        let cand = candidates.get(s.grasp).ok_or("grasp index out of range")?;
        if !plan.grasps.contains(&s.grasp) {
            return Err(format!("step {k} uses grasp {} outside the plan", s.grasp));
        }
        let expected = s.object_pose.compose(&cand.pose);
        if (expected.translation - s.gripper_pose.translation).norm() > 1e-9
            || (expected.rotation - s.gripper_pose.rotation).amax() > 1e-9
        {
            return Err(format!("step {k}: gripper pose does not match object pose and grasp"));
        }
        if !scene.arm(s.arm).workspace.contains(&s.gripper_pose.translation) {
            return Err(format!("step {k}: arm {:?} leaves its workspace", s.arm));
        }
        if check_gripper_collision(&cand.pose, cand.width, gripper, mesh) {
            return Err(format!("step {k}: gripper intersects the object"));
        }
        match s.phase {
            Phase::Pick => {
                if !attached.is_empty() || s.object_pose != scene.object_start {
                    return Err(format!("step {k}: pick must start from an empty hand at the start pose"));
                }
                attached.push((s.arm, s.grasp));
            }
            Phase::HandoverGive => {
                if !attached.contains(&(s.arm, s.grasp)) {
                    return Err(format!("step {k}: giving arm is not holding the object"));
                }
                last_give = Some(s.arm);
            }
            Phase::HandoverReceive => {
                let giver = last_give.take().ok_or(format!("step {k}: receive without give"))?;
                if giver == s.arm {
                    return Err(format!("step {k}: handover within a single arm"));
                }
                attached.push((s.arm, s.grasp));
            }
            Phase::Release => {
                let before = attached.len();
                attached.retain(|&a| a != (s.arm, s.grasp));
                if attached.len() + 1 != before || attached.is_empty() {
                    return Err(format!("step {k}: release would drop the object"));
                }
            }
            Phase::Place => {
                if attached != [(s.arm, s.grasp)] || s.object_pose != scene.object_goal {
                    return Err(format!("step {k}: place must end at the goal with one hand"));
                }
                attached.clear();
            }
        }
        if attached.len() == 2 {
            let (a, b) = (&candidates[attached[0].1], &candidates[attached[1].1]);
            let world_boxes = |c: &GraspCandidate| -> Vec<Obb> {
                let w = s.object_pose.compose(&c.pose);
                gripper.body_boxes(c.width).iter().map(|(_, b)| b.transformed(&w)).collect()
            };
            let (ba, bb) = (world_boxes(a), world_boxes(b));
            if ba.iter().any(|x| bb.iter().any(|y| x.overlaps(y))) {
                return Err(format!("step {k}: the two grippers collide"));
            }
        }
    }
    if !attached.is_empty() {
        return Err("plan does not end with the object placed".into());
    }
    let arms_of = |slot: usize| plan.steps.iter().filter(|s| s.grasp == plan.grasps[slot]).map(|s| s.arm).next();
    if arms_of(0) != Some(ArmId::A) || arms_of(1) != Some(ArmId::B) || arms_of(2) != Some(ArmId::A) {
        return Err("arm order is not A, B, A".into());
    }
    Ok(())
}

/// A generous two-arm scene around an object resting on a table at z = 0.
pub fn default_scene(object_start: Pose, object_goal: Pose) -> Scene {
    Scene {
        object_start,
        object_goal,
        handover: Pose::from_translation(Vector3::new(0.35, 0.0, 0.35)),
        arms: [
            ArmModel {
                id: ArmId::A,
                workspace: Workspace {
                    min: [0.0, -0.15, 0.0],
                    max: [0.7, 0.6, 0.6],
                },
                home: Pose::from_translation(Vector3::new(0.3, 0.3, 0.3)),
            },
            ArmModel {
                id: ArmId::B,
                workspace: Workspace {
                    min: [0.0, -0.6, 0.0],
                    max: [0.7, 0.15, 0.6],
                },
                home: Pose::from_translation(Vector3::new(0.3, -0.3, 0.3)),
            },
        ],
        table_z: Some(0.0),
    }
}

/// World point helper for callers placing objects on the table.
pub fn resting_pose(x: f64, y: f64, half_height: f64, yaw: f64) -> Pose {
    Pose::from_parts(Vector3::new(0.0, 0.0, yaw), Point3::new(x, y, half_height).coords)
}
