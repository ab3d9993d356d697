//! File-level documents exchanged between the command-line stages and the
//! glue that produces each one from the previous.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conformance::{
    conform_grasp, AdmittanceParams, ConformanceError, ConformanceOptions, ConformanceResult, ContactModel,
};
use crate::estimate::{estimate_pose, EstimateError, EstimateOptions, ErrorParams, GraspRecord, GraspRole};
use crate::experiment::{apply_truth_error, trace_csv};
use crate::geometry::io::MeshSource;
use crate::geometry::{GeometryError, Pose, TriMesh};
use crate::grasp::{plan_grasps, GraspCandidate, GripperModel, PlannerConfig, PlannerError};
use crate::sequence::{plan_sequence, RegraspPlan, Scene, SequenceError};
use crate::triplet::{
    default_group_tol, enumerate_triplets, group_by_axis, GraspGroup, Triplet, TripletError,
    DEFAULT_SINGULARITY_TOL,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    Triplet(#[from] TripletError),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error(transparent)]
    Conformance(#[from] ConformanceError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error("conformed file must hold records for g1, g2, g3 in that order")]
    BadRecords,
}

/// Output of grasp planning: the candidates plus everything needed to
/// reproduce or extend them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraspsFile {
    pub mesh: MeshSource,
    #[serde(default)]
    pub gripper: GripperModel,
    #[serde(default)]
    pub planner: PlannerConfig,
    pub grasps: Vec<GraspCandidate>,
}

impl GraspsFile {
    pub fn plan(mesh: MeshSource, gripper: GripperModel, planner: PlannerConfig) -> Result<GraspsFile, PipelineError> {
        let grasps = plan_grasps(&mesh.load()?, &gripper, &planner)?;
        Ok(GraspsFile {
            mesh,
            gripper,
            planner,
            grasps,
        })
    }
}

/// Axis groups of a grasp set and the ranked triplets over them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripletsFile {
    pub group_tol: f64,
    pub singularity_tol: f64,
    pub groups: Vec<GraspGroup>,
    pub triplets: Vec<Triplet>,
}

impl TripletsFile {
    pub fn from_grasps(grasps: &[GraspCandidate], group_tol: f64, singularity_tol: f64) -> Result<TripletsFile, PipelineError> {
        let groups = group_by_axis(grasps, group_tol)?;
        let triplets = enumerate_triplets(&groups, singularity_tol)?;
        Ok(TripletsFile {
            group_tol,
            singularity_tol,
            groups,
            triplets,
        })
    }

    pub fn with_defaults(grasps: &[GraspCandidate]) -> Result<TripletsFile, PipelineError> {
        Self::from_grasps(grasps, default_group_tol(), DEFAULT_SINGULARITY_TOL)
    }
}

/// A regrasp plan with the three chosen grasps copied out, so later stages
/// need neither the full grasp set nor the triplet list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub mesh: MeshSource,
    pub gripper: GripperModel,
    pub scene: Scene,
    pub plan: RegraspPlan,
    /// Grasps g1, g2, g3 in the object frame.
    pub grasps: [GraspCandidate; 3],
}

impl PlanFile {
    pub fn plan(grasps: &GraspsFile, triplets: &TripletsFile, scene: Scene) -> Result<PlanFile, PipelineError> {
        let mesh = grasps.mesh.load()?;
        let plan = plan_sequence(&triplets.triplets, &triplets.groups, &grasps.grasps, &scene, &grasps.gripper, &mesh)?;
        let chosen = plan.grasps.map(|i| grasps.grasps[i]);
        Ok(PlanFile {
            mesh: grasps.mesh.clone(),
            gripper: grasps.gripper.clone(),
            scene,
            plan,
            grasps: chosen,
        })
    }

    /// Planned world poses of g1, g2, g3 with the object at the handover.
    pub fn planned_at_handover(&self) -> [Pose; 3] {
        self.grasps.map(|g| self.scene.handover.compose(&g.pose))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseFile {
    pub pose: Pose,
}

/// Hidden true object pose at the handover: given directly, or as an error
/// relative to the first grasp's flat contact.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TruthFile {
    Pose { pose: Pose },
    Error { error: ErrorParams },
}

impl TruthFile {
    pub fn resolve(&self, plan: &PlanFile) -> Pose {
        match self {
            TruthFile::Pose { pose } => *pose,
            TruthFile::Error { error } => apply_truth_error(&plan.scene.handover, &plan.planned_at_handover()[0], error),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimParamsFile {
    pub admittance: AdmittanceParams,
    pub contact: ContactModel,
    pub options: ConformanceOptions,
}

/// Planned and conformed poses of all three grasps; g1 is position
/// controlled so its real pose equals the planned one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformedFile {
    pub sim_object_pose: Pose,
    pub true_object_pose: Pose,
    pub records: Vec<GraspRecord>,
    /// Conformance of g2 and g3, without traces.
    pub results: Vec<ConformanceResult>,
}

/// Conforms g2 and g3 against the true pose. Returns the document and the
/// force traces as CSV.
pub fn simulate(plan: &PlanFile, truth: &TruthFile, params: &SimParamsFile) -> Result<(ConformedFile, String), PipelineError> {
    let mesh: TriMesh = plan.mesh.load()?;
    let sim_object_pose = plan.scene.handover;
    let true_object_pose = truth.resolve(plan);
    let planned = plan.planned_at_handover();
    let options = ConformanceOptions {
        record_trace: true,
        ..params.options.clone()
    };
    let mut records = vec![GraspRecord {
        sim_pose: planned[0],
        real_pose: planned[0],
        role: GraspRole::G1,
    }];
    let mut results = Vec::new();
    let mut traces = String::new();
    for (k, role) in [(1, GraspRole::G2), (2, GraspRole::G3)] {
        let mut res = conform_grasp(
            &planned[k],
            plan.grasps[k].width,
            &true_object_pose,
            &mesh,
            &plan.gripper,
            &params.contact,
            &params.admittance,
            &options,
        )?;
        let csv = trace_csv(&format!("g{}", k + 1), &std::mem::take(&mut res.trace));
        traces += if k == 1 { &csv } else { csv.split_once('\n').map_or("", |(_, body)| body) };
        records.push(GraspRecord {
            sim_pose: planned[k],
            real_pose: res.conformed_pose,
            role,
        });
        results.push(res);
    }
    Ok((
        ConformedFile {
            sim_object_pose,
            true_object_pose,
            records,
            results,
        },
        traces,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateFile {
    pub pose: Pose,
    pub theta_deg: f64,
    pub epsilon_mm: f64,
    pub d_allowed: [f64; 3],
    pub conditioning: f64,
}

pub fn estimate(conformed: &ConformedFile, sim_object_pose: &Pose, options: &EstimateOptions) -> Result<EstimateFile, PipelineError> {
    let [g1, g2, g3] = conformed.records.as_slice() else {
        return Err(PipelineError::BadRecords);
    };
    if [g1.role, g2.role, g3.role] != [GraspRole::G1, GraspRole::G2, GraspRole::G3] {
        return Err(PipelineError::BadRecords);
    }
    let r = estimate_pose(g1, g2, g3, sim_object_pose, options)?;
    Ok(EstimateFile {
        pose: r.object_pose,
        theta_deg: r.theta.to_degrees(),
        epsilon_mm: r.epsilon * 1e3,
        d_allowed: r.d_allowed.into(),
        conditioning: r.conditioning,
    })
}
