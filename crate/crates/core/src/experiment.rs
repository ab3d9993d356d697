//! Monte Carlo trials: plan a regrasp, perturb the object's true pose at the
//! handover, conform the second and third grasps, add sensor noise, estimate
//! the pose and score it against the injected truth.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conformance::{
    conform_grasp, flat_contact_equilibrium, has_robust_pad_contact, AdmittanceParams, ConformanceError,
    ConformanceOptions, ContactModel, TraceSample,
};
use crate::estimate::{estimate_pose, EstimateError, EstimateOptions, ErrorParams, GraspRecord, GraspRole};
use crate::geometry::io::MeshSource;
use crate::geometry::so3::{exp_so3, log_so3};
use crate::geometry::{GeometryError, Pose, TriMesh};
use crate::grasp::{plan_grasps, GraspCandidate, GripperModel, PlannerConfig, PlannerError};
use crate::sequence::{default_scene, plan_sequence, resting_pose, RegraspPlan, Scene, SequenceError};
use crate::triplet::{default_group_tol, enumerate_triplets, group_by_axis, GraspGroup, Triplet, TripletError};

#[derive(Debug, Error)]
pub enum TrialFailure {
    #[error(transparent)]
    Conformance(#[from] ConformanceError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    Triplet(#[from] TripletError),
    #[error("placement '{placement}': {source}")]
    Plan { placement: String, source: SequenceError },
    #[error("trial {index} (placement '{placement}', repeat {repeat}): {source}")]
    Trial {
        index: usize,
        placement: String,
        repeat: usize,
        source: TrialFailure,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// How the second and third grasps settle on the perturbed object.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConformanceMode {
    /// Step the admittance controller against the pad contact model.
    #[default]
    Simulated,
    /// Jump straight to the flat-contact rest pose.
    Equilibrium,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub name: String,
    pub pose: Pose,
}

/// Uniform ranges of the injected pose error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TruthRanges {
    /// Bound on the rotation about the first grasp's closing axis, radians.
    pub max_theta: f64,
    /// Bound on each in-plane slide of the first grasp, meters.
    pub max_delta: f64,
}

impl Default for TruthRanges {
    fn default() -> Self {
        TruthRanges {
            max_theta: 5f64.to_radians(),
            max_delta: 0.010,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub mesh: MeshSource,
    pub placements: Vec<Placement>,
    /// Scene template; its `object_start` is replaced by each placement.
    #[serde(default)]
    pub scene: Option<Scene>,
    #[serde(default, flatten)]
    pub ranges: TruthRanges,
    /// Std of the Gaussian noise on conformed positions, meters.
    #[serde(default)]
    pub sigma_p: f64,
    /// Std of the Gaussian noise on conformed rotation vectors, radians.
    #[serde(default)]
    pub sigma_r: f64,
    #[serde(default = "one")]
    pub n_repeats: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub conformance: ConformanceMode,
    /// In simulated mode, grasps must keep clean pad contact under in-plane
    /// slips of this size, meters.
    #[serde(default = "default_pad_clearance")]
    pub pad_clearance: f64,
    #[serde(default)]
    pub gripper: GripperModel,
    #[serde(default)]
    pub planner: PlannerConfig,
    #[serde(default = "default_group_tol")]
    pub group_tol: f64,
    #[serde(default)]
    pub contact: ContactModel,
    #[serde(default)]
    pub admittance: AdmittanceParams,
    #[serde(default)]
    pub conformance_options: ConformanceOptions,
    #[serde(default)]
    pub estimator: EstimateOptions,
    #[serde(default)]
    pub record_traces: bool,
}

fn one() -> usize {
    1
}

fn default_pad_clearance() -> f64 {
    0.004
}

impl TrialConfig {
    pub fn new(mesh: MeshSource, placements: Vec<Placement>) -> TrialConfig {
        TrialConfig {
            mesh,
            placements,
            scene: None,
            ranges: TruthRanges::default(),
            sigma_p: 0.0,
            sigma_r: 0.0,
            n_repeats: 1,
            seed: 0,
            conformance: ConformanceMode::default(),
            pad_clearance: default_pad_clearance(),
            gripper: GripperModel::default(),
            planner: PlannerConfig::default(),
            group_tol: default_group_tol(),
            contact: ContactModel::default(),
            admittance: AdmittanceParams::default(),
            conformance_options: ConformanceOptions::default(),
            estimator: EstimateOptions::default(),
            record_traces: false,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.placements.is_empty() {
            return bad("at least one placement is required".into());
        }
        if self.n_repeats == 0 {
            return bad("n_repeats must be at least 1".into());
        }
        let TruthRanges { max_theta, max_delta } = self.ranges;
        if !(0.0..std::f64::consts::PI).contains(&max_theta) {
            return bad(format!("max_theta must lie in [0, pi), got {max_theta}"));
        }
        if !(max_delta >= 0.0) || max_delta > self.gripper.max_opening / 2.0 {
            return bad(format!(
                "max_delta must lie in [0, {}], got {max_delta}",
                self.gripper.max_opening / 2.0
            ));
        }
        if !(self.sigma_p >= 0.0 && self.sigma_r >= 0.0) || !self.sigma_p.is_finite() || !self.sigma_r.is_finite() {
            return bad("noise standard deviations must be finite and non-negative".into());
        }
        self.gripper.validate().map_err(ExperimentError::Config)?;
        Ok(())
    }
}

/// Three resting placements on the table, turned to different headings.
pub fn default_placements(mesh: &TriMesh) -> Vec<Placement> {
    let lift = -mesh.bounds().min.z;
    [("P1", 0.30, 0.25, 0.0), ("P2", 0.36, 0.30, 0.7), ("P3", 0.26, 0.34, -1.2)]
        .into_iter()
        .map(|(name, x, y, yaw)| Placement {
            name: name.into(),
            pose: resting_pose(x, y, lift, yaw),
        })
        .collect()
}

/// Scene used when the config does not provide one.
pub fn default_experiment_scene(mesh: &TriMesh, object_start: Pose) -> Scene {
    let lift = -mesh.bounds().min.z;
    default_scene(object_start, resting_pose(0.34, 0.36, lift, 1.2))
}

/// True object pose obtained by turning the sim pose by `theta` about the
/// first grasp's closing axis (through its contact center) and sliding it by
/// `delta_1`, `delta_3` along the grasp's lateral and approach axes. The
/// object stays flat between the first grasp's pads.
pub fn apply_truth_error(sim_object_pose: &Pose, g1_real: &Pose, err: &ErrorParams) -> Pose {
    let pivot = g1_real.translation;
    let turn = exp_so3(&(g1_real.axis(1) * err.theta));
    Pose::new(
        turn * sim_object_pose.rotation,
        pivot + turn * (sim_object_pose.translation - pivot) + g1_real.axis(0) * err.delta_1 + g1_real.axis(2) * err.delta_3,
    )
}

/// Draws `(theta, delta_1, delta_3)` uniformly within `ranges` and applies
/// them. The first grasp is position controlled, so its real pose equals
/// its planned pose and the ideal object pose is `sim_object_pose`.
pub fn inject_truth(
    sim_object_pose: &Pose,
    g1_real: &Pose,
    ranges: &TruthRanges,
    rng: &mut impl Rng,
) -> (Pose, ErrorParams) {
    let mut uniform = |bound: f64| if bound > 0.0 { rng.random_range(-bound..=bound) } else { 0.0 };
    let err = ErrorParams {
        theta: uniform(ranges.max_theta),
        delta_1: uniform(ranges.max_delta),
        delta_3: uniform(ranges.max_delta),
        epsilon: 0.0,
    };
    (apply_truth_error(sim_object_pose, g1_real, &err), err)
}

/// Position (mm) and rotation-vector (degree) difference `a - b`.
pub fn pose_difference(a: &Pose, b: &Pose) -> ([f64; 3], [f64; 3]) {
    let dp = (a.translation - b.translation) * 1000.0;
    let dw = log_so3(&(a.rotation * b.rotation.transpose()))
        .map(|w| w.map(f64::to_degrees))
        .unwrap_or_else(|_| Vector3::repeat(f64::NAN));
    (dp.into(), dw.into())
}

/// Per-trial differences, in mm and degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub placement: String,
    pub repeat: usize,
    pub g2_dp: [f64; 3],
    pub g2_dw: [f64; 3],
    pub g3_dp: [f64; 3],
    pub g3_dw: [f64; 3],
    pub obj_dp: [f64; 3],
    pub obj_dw: [f64; 3],
    pub injected: ErrorParams,
    pub theta_estimated: f64,
    pub conformance_steps: [usize; 2],
    #[serde(skip)]
    pub traces: [Vec<TraceSample>; 2],
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Columns {
    pub g2_dp: [f64; 3],
    pub g2_dw: [f64; 3],
    pub g3_dp: [f64; 3],
    pub g3_dw: [f64; 3],
    pub obj_dp: [f64; 3],
    pub obj_dw: [f64; 3],
}

impl Columns {
    fn from_row(r: &TrialRow) -> Columns {
        Columns {
            g2_dp: r.g2_dp,
            g2_dw: r.g2_dw,
            g3_dp: r.g3_dp,
            g3_dw: r.g3_dw,
            obj_dp: r.obj_dp,
            obj_dw: r.obj_dw,
        }
    }

    fn fields_mut(&mut self) -> [&mut [f64; 3]; 6] {
        [
            &mut self.g2_dp,
            &mut self.g2_dw,
            &mut self.g3_dp,
            &mut self.g3_dw,
            &mut self.obj_dp,
            &mut self.obj_dw,
        ]
    }

    fn fields(&self) -> [&[f64; 3]; 6] {
        [&self.g2_dp, &self.g2_dw, &self.g3_dp, &self.g3_dw, &self.obj_dp, &self.obj_dw]
    }

    fn zip_with(&self, other: &Columns, f: impl Fn(f64, f64) -> f64) -> Columns {
        let mut out = Columns::default();
        for (o, (a, b)) in out.fields_mut().into_iter().zip(self.fields().into_iter().zip(other.fields())) {
            for i in 0..3 {
                o[i] = f(a[i], b[i]);
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub n: usize,
    pub mean: Columns,
    /// Sample standard deviation; absent with fewer than two trials.
    pub std: Option<Columns>,
}

impl Stats {
    pub fn of<'a>(rows: impl IntoIterator<Item = &'a TrialRow>) -> Stats {
        let cols: Vec<Columns> = rows.into_iter().map(Columns::from_row).collect();
        let n = cols.len();
        let sum = cols.iter().fold(Columns::default(), |acc, c| acc.zip_with(c, |a, b| a + b));
        let mean = sum.zip_with(&sum, |s, _| s / n as f64);
        let std = (n >= 2).then(|| {
            let ss = cols.iter().fold(Columns::default(), |acc, c| {
                acc.zip_with(&c.zip_with(&mean, |x, m| x - m), |a, d| a + d * d)
            });
            ss.zip_with(&ss, |s, _| (s / (n - 1) as f64).sqrt())
        });
        Stats { n, mean, std }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacementSummary {
    pub name: String,
    /// Candidate indices of g1, g2, g3 in the filtered candidate list.
    pub grasps: [usize; 3],
    pub triplet_score: f64,
    pub stats: Stats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub placements: Vec<PlacementSummary>,
    pub overall: Stats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialReport {
    pub rows: Vec<TrialRow>,
    pub summary: Summary,
}

/// Planning products shared by all trials of an experiment.
pub struct Prepared {
    pub mesh: TriMesh,
    pub candidates: Vec<GraspCandidate>,
    pub groups: Vec<GraspGroup>,
    pub triplets: Vec<Triplet>,
    pub plans: Vec<(Scene, RegraspPlan)>,
}

pub fn prepare(config: &TrialConfig) -> Result<Prepared, ExperimentError> {
    config.validate()?;
    let mesh = config.mesh.load()?;
    let mut candidates = plan_grasps(&mesh, &config.gripper, &config.planner)?;
    if config.conformance == ConformanceMode::Simulated {
        candidates.retain(|c| {
            has_robust_pad_contact(&c.pose, c.width, &mesh, &config.gripper, &config.contact, config.pad_clearance)
        });
    }
    let groups = group_by_axis(&candidates, config.group_tol)?;
    let triplets = enumerate_triplets(&groups, config.estimator.singularity_tol)?;
    let plans = config
        .placements
        .iter()
        .map(|p| {
            let mut scene = match &config.scene {
                Some(s) => s.clone(),
                None => default_experiment_scene(&mesh, p.pose),
            };
            scene.object_start = p.pose;
            plan_sequence(&triplets, &groups, &candidates, &scene, &config.gripper, &mesh)
                .map(|plan| (scene, plan))
                .map_err(|source| ExperimentError::Plan {
                    placement: p.name.clone(),
                    source,
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Prepared {
        mesh,
        candidates,
        groups,
        triplets,
        plans,
    })
}

fn add_noise(pose: &Pose, sigma_p: f64, sigma_r: f64, rng: &mut ChaCha8Rng) -> Pose {
    let np = Normal::new(0.0, sigma_p).expect("validated sigma");
    let nr = Normal::new(0.0, sigma_r).expect("validated sigma");
    let dp = Vector3::from_fn(|_, _| np.sample(rng));
    let dw = Vector3::from_fn(|_, _| nr.sample(rng));
    Pose::new(exp_so3(&dw) * pose.rotation, pose.translation + dp)
}

/// Runs trial `index` (placement-major order) of a prepared experiment.
pub fn run_trial(config: &TrialConfig, prep: &Prepared, index: usize) -> Result<TrialRow, ExperimentError> {
    let placement = index / config.n_repeats;
    let repeat = index % config.n_repeats;
    let name = &config.placements[placement].name;
    let fail = |source: TrialFailure| ExperimentError::Trial {
        index,
        placement: name.clone(),
        repeat,
        source,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64);
    let (scene, plan) = &prep.plans[placement];
    let handover = scene.handover;
    let grasps = plan.grasps.map(|i| &prep.candidates[i]);
    let planned = grasps.map(|g| handover.compose(&g.pose));
    let (truth, injected) = inject_truth(&handover, &planned[0], &config.ranges, &mut rng);

    let mut conformed = [planned[1], planned[2]];
    let mut steps = [0; 2];
    let mut traces: [Vec<TraceSample>; 2] = Default::default();
    for k in 0..2 {
        match config.conformance {
            ConformanceMode::Equilibrium => {
                conformed[k] = flat_contact_equilibrium(&planned[k + 1], &handover, &truth);
            }
            ConformanceMode::Simulated => {
                let options = ConformanceOptions {
                    record_trace: config.record_traces,
                    ..config.conformance_options.clone()
                };
                let res = conform_grasp(
                    &planned[k + 1],
                    grasps[k + 1].width,
                    &truth,
                    &prep.mesh,
                    &config.gripper,
                    &config.contact,
                    &config.admittance,
                    &options,
                )
                .and_then(|r| r.require_converged())
                .map_err(|e| fail(e.into()))?;
                conformed[k] = res.conformed_pose;
                steps[k] = res.steps_used;
                traces[k] = res.trace;
            }
        }
    }
    let measured = conformed.map(|p| add_noise(&p, config.sigma_p, config.sigma_r, &mut rng));

    let record = |k: usize, real: Pose, role| GraspRecord {
        sim_pose: planned[k],
        real_pose: real,
        role,
    };
    let est = estimate_pose(
        &record(0, planned[0], GraspRole::G1),
        &record(1, measured[0], GraspRole::G2),
        &record(2, measured[1], GraspRole::G3),
        &handover,
        &config.estimator,
    )
    .map_err(|e| fail(e.into()))?;

    let (g2_dp, g2_dw) = pose_difference(&measured[0], &planned[1]);
    let (g3_dp, g3_dw) = pose_difference(&measured[1], &planned[2]);
    let (obj_dp, obj_dw) = pose_difference(&est.object_pose, &truth);
    Ok(TrialRow {
        placement: name.clone(),
        repeat,
        g2_dp,
        g2_dw,
        g3_dp,
        g3_dw,
        obj_dp,
        obj_dw,
        injected,
        theta_estimated: est.theta,
        conformance_steps: steps,
        traces,
    })
}

/// Runs every placement × repeat. Trials execute in parallel; rows, errors
/// and statistics follow trial-index order, so results depend only on the
/// config.
pub fn run_experiment(config: &TrialConfig) -> Result<TrialReport, ExperimentError> {
    let prep = prepare(config)?;
    run_prepared(config, &prep)
}

pub fn run_prepared(config: &TrialConfig, prep: &Prepared) -> Result<TrialReport, ExperimentError> {
    let n = config.placements.len() * config.n_repeats;
    let results: Vec<Result<TrialRow, ExperimentError>> =
        (0..n).into_par_iter().map(|i| run_trial(config, prep, i)).collect();
    let rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let placements = config
        .placements
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (_, plan) = &prep.plans[i];
            PlacementSummary {
                name: p.name.clone(),
                grasps: plan.grasps,
                triplet_score: prep.triplets[plan.triplet].score,
                stats: Stats::of(&rows[i * config.n_repeats..(i + 1) * config.n_repeats]),
            }
        })
        .collect();
    let overall = Stats::of(&rows);
    Ok(TrialReport {
        rows,
        summary: Summary { placements, overall },
    })
}

pub const CSV_HEADER: [&str; 24] = [
    "placement", "repeat",
    "g2_dp_x", "g2_dp_y", "g2_dp_z", "g2_dw_x", "g2_dw_y", "g2_dw_z",
    "g3_dp_x", "g3_dp_y", "g3_dp_z", "g3_dw_x", "g3_dw_y", "g3_dw_z",
    "obj_dp_x", "obj_dp_y", "obj_dp_z", "obj_dw_x", "obj_dw_y", "obj_dw_z",
    "theta_true_deg", "theta_est_deg", "g2_steps", "g3_steps",
];

/// The per-trial table as CSV text.
pub fn trials_csv(report: &TrialReport) -> Result<String, ExperimentError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in &report.rows {
        let mut rec = vec![r.placement.clone(), r.repeat.to_string()];
        for col in [r.g2_dp, r.g2_dw, r.g3_dp, r.g3_dw, r.obj_dp, r.obj_dw] {
            rec.extend(col.iter().map(|v| format!("{v:?}")));
        }
        rec.push(format!("{:?}", r.injected.theta.to_degrees()));
        rec.push(format!("{:?}", r.theta_estimated.to_degrees()));
        rec.extend(r.conformance_steps.iter().map(usize::to_string));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Force/torque trace as CSV text.
pub fn trace_csv(role: &str, trace: &[TraceSample]) -> String {
    let mut out = String::from("role,step,time,fx,fy,fz,tx,ty,tz,px,py,pz\n");
    for s in trace {
        let _ = writeln!(
            out,
            "{role},{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            s.step, s.time, s.force.x, s.force.y, s.force.z, s.torque.x, s.torque.y, s.torque.z,
            s.position.x, s.position.y, s.position.z
        );
    }
    out
}

/// Writes `trials.csv`, `summary.json` and, when traces were recorded,
/// `traces/trial_NNNNN.csv`.
pub fn write_report(report: &TrialReport, dir: impl AsRef<Path>) -> Result<(), ExperimentError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("trials.csv"), trials_csv(report)?)?;
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&report.summary)? + "\n")?;
    if report.rows.iter().any(|r| r.traces.iter().any(|t| !t.is_empty())) {
        let traces = dir.join("traces");
        std::fs::create_dir_all(&traces)?;
        for (i, r) in report.rows.iter().enumerate() {
            let text = trace_csv("g2", &r.traces[0]) + trace_csv("g3", &r.traces[1]).split_once('\n').unwrap().1;
            std::fs::write(traces.join(format!("trial_{i:05}.csv")), text)?;
        }
    }
    Ok(())
}
