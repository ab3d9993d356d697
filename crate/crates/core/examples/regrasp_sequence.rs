//! Plans a pick, two handovers and a place for the L-shape with two
//! free-flying grippers, then checks the plan with the independent validator.

use regrasp::geometry::io::BuiltinShape;
use regrasp::grasp::{plan_grasps, GripperModel, PlannerConfig};
use regrasp::sequence::{default_scene, plan_sequence, resting_pose, validate_plan};
use regrasp::triplet::{default_group_tol, enumerate_triplets, group_by_axis, DEFAULT_SINGULARITY_TOL};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = BuiltinShape::LShape.mesh();
    let gripper = GripperModel::default();
    let grasps = plan_grasps(&mesh, &gripper, &PlannerConfig::default())?;
    let groups = group_by_axis(&grasps, default_group_tol())?;
    let triplets = enumerate_triplets(&groups, DEFAULT_SINGULARITY_TOL)?;

    let half = -mesh.bounds().min.z;
    let scene = default_scene(resting_pose(0.30, 0.25, half, 0.0), resting_pose(0.34, 0.36, half, 1.2));
    let plan = plan_sequence(&triplets, &groups, &grasps, &scene, &gripper, &mesh)?;
    println!(
        "triplet {} (score {:.2e}); groups {:?} -> grasps {:?}",
        plan.triplet, triplets[plan.triplet].score, plan.groups, plan.grasps
    );
    for (k, s) in plan.steps.iter().enumerate() {
        let p = s.gripper_pose.translation;
        let a = s.gripper_pose.axis(1);
        println!(
            "{k}: arm {:?} {:<17} grasp {:3} tcp ({:+.3}, {:+.3}, {:+.3}) closing ({:+.2}, {:+.2}, {:+.2})",
            s.arm,
            format!("{:?}", s.phase),
            s.grasp,
            p.x,
            p.y,
            p.z,
            a.x,
            a.y,
            a.z
        );
    }
    match validate_plan(&plan, &triplets, &groups, &grasps, &scene, &gripper, &mesh) {
        Ok(()) => println!("plan passes the validator"),
        Err(e) => println!("plan rejected: {e}"),
    }
    Ok(())
}
