//! Samples antipodal grasps on the L-shape and summarizes them by closing
//! axis.

use std::collections::BTreeMap;

use regrasp::geometry::io::BuiltinShape;
use regrasp::grasp::{plan_grasps, GripperModel, PlannerConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = BuiltinShape::LShape.mesh();
    let gripper = GripperModel::default();
    let config = PlannerConfig::default();
    let grasps = plan_grasps(&mesh, &gripper, &config)?;
    println!(
        "{} collision-free grasps from {} surface samples x {} approach rotations",
        grasps.len(),
        config.n_points,
        config.n_rotations
    );

    let mut by_axis: BTreeMap<String, (usize, f64, f64)> = BTreeMap::new();
    for g in &grasps {
        let a = g.closing_axis();
        let key = format!("[{:.0} {:.0} {:.0}]", a.x.abs(), a.y.abs(), a.z.abs());
        let e = by_axis.entry(key).or_insert((0, f64::MAX, 0.0));
        e.0 += 1;
        e.1 = e.1.min(g.width);
        e.2 = e.2.max(g.width);
    }
    for (axis, (n, lo, hi)) in by_axis {
        println!("closing axis {axis}: {n:4} grasps, width {:.1}-{:.1} mm", lo * 1e3, hi * 1e3);
    }

    let g = &grasps[0];
    println!("first grasp in the object frame: {}", serde_json::to_string(g)?);
    Ok(())
}
