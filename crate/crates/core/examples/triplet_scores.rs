//! Groups grasps by closing axis and ranks triplets of groups by how close
//! to mutually orthogonal their axes are (0 is best).

use regrasp::geometry::io::BuiltinShape;
use regrasp::grasp::{plan_grasps, GripperModel, PlannerConfig};
use regrasp::triplet::{default_group_tol, enumerate_triplets, group_by_axis, DEFAULT_SINGULARITY_TOL};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for shape in [BuiltinShape::LShape, BuiltinShape::DiamondPrism, BuiltinShape::TiltedLShape] {
        let mesh = shape.mesh();
        let grasps = plan_grasps(&mesh, &GripperModel::default(), &PlannerConfig::default())?;
        let groups = group_by_axis(&grasps, default_group_tol())?;
        let triplets = enumerate_triplets(&groups, DEFAULT_SINGULARITY_TOL)?;
        println!("{shape:?}: {} grasps in {} groups", grasps.len(), groups.len());
        for (i, g) in groups.iter().enumerate() {
            println!("  group {i}: axis [{:+.3} {:+.3} {:+.3}], {} members", g.axis.x, g.axis.y, g.axis.z, g.members.len());
        }
        for t in triplets.iter().take(3) {
            println!("  triplet {:?}: score {:.4}, |det| {:.4}", t.groups, t.score, t.determinant);
        }
    }
    Ok(())
}
