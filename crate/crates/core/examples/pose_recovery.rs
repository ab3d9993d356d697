//! Full pipeline on the L-shape: plan grasps, pick a triplet, sequence the
//! handovers, hide a pose error of 0.04 rad about the first closing axis plus
//! a 3 mm / -2 mm slide, conform the second and third grasps, and recover the
//! object pose from the three grasp pairs.

use regrasp::estimate::{EstimateOptions, ErrorParams};
use regrasp::experiment::{default_experiment_scene, pose_difference};
use regrasp::geometry::io::{BuiltinShape, MeshSource};
use regrasp::grasp::{GripperModel, PlannerConfig};
use regrasp::pipeline::{estimate, simulate, GraspsFile, PlanFile, SimParamsFile, TripletsFile, TruthFile};
use regrasp::sequence::resting_pose;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let source = MeshSource::Builtin {
        builtin: BuiltinShape::LShape,
    };
    let mesh = source.load()?;
    let grasps = GraspsFile::plan(source, GripperModel::default(), PlannerConfig::default())?;
    let triplets = TripletsFile::with_defaults(&grasps.grasps)?;
    let start = resting_pose(0.30, 0.25, -mesh.bounds().min.z, 0.0);
    let plan = PlanFile::plan(&grasps, &triplets, default_experiment_scene(&mesh, start))?;
    println!("plan grasps {:?} from groups {:?}", plan.plan.grasps, plan.plan.groups);

    let truth = TruthFile::Error {
        error: ErrorParams {
            theta: 0.04,
            delta_1: 0.003,
            delta_3: -0.002,
            ..Default::default()
        },
    };
    let (conformed, _traces) = simulate(&plan, &truth, &SimParamsFile::default())?;
    for (r, name) in conformed.results.iter().zip(["g2", "g3"]) {
        println!("{name}: {} steps, closing axis moved {:.3} deg", r.steps_used, r.axis_deviation.to_degrees());
    }

    let est = estimate(&conformed, &conformed.sim_object_pose, &EstimateOptions::default())?;
    println!("theta {:.4} deg (true {:.4} deg)", est.theta_deg, 0.04f64.to_degrees());
    println!("epsilon {:.4} mm along {:?}", est.epsilon_mm, est.d_allowed);
    let (dp0, dw0) = pose_difference(&conformed.sim_object_pose, &conformed.true_object_pose);
    let (dp, dw) = pose_difference(&est.pose, &conformed.true_object_pose);
    let fmt = |v: [f64; 3]| v.map(|x| format!("{x:+.2e}")).join(" ");
    println!("error before: dp {} mm, dw {} deg", fmt(dp0), fmt(dw0));
    println!("error after:  dp {} mm, dw {} deg", fmt(dp), fmt(dw));
    Ok(())
}
