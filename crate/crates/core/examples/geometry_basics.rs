//! Rigid transforms, SO(3) maps and ray casting on a built-in mesh.

use nalgebra::{Point3, Vector3};
use regrasp::geometry::io::BuiltinShape;
use regrasp::geometry::{exp_so3, log_so3, Pose, Ray};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = Pose::from_parts(Vector3::new(0.0, 0.0, 0.5), Vector3::new(0.1, 0.2, 0.3));
    let b = Pose::from_parts(Vector3::new(0.3, -0.1, 0.0), Vector3::new(0.0, 0.05, 0.0));
    let ab = a.compose(&b);
    println!("a * b translation       {:?}", ab.translation.as_slice());
    println!("a^-1 * (a * b) == b     {}", (a.inverse().compose(&ab).to_array().iter().zip(b.to_array()).all(|(x, y)| (x - y).abs() < 1e-12)));

    let w = Vector3::new(0.2, -0.4, 0.9);
    let back = log_so3(&exp_so3(&w))?;
    println!("log(exp(w)) - w         {:.1e}", (back - w).norm());

    let mesh = BuiltinShape::LShape.mesh();
    let ext = mesh.bounds().extents();
    println!(
        "L-shape: {} faces, extents {:.3} x {:.3} x {:.3} m, volume {:.3e} m^3",
        mesh.faces().len(),
        ext.x,
        ext.y,
        ext.z,
        mesh.volume()
    );

    let ray = Ray::new(Point3::new(0.0, -0.0375, 0.2), -Vector3::z())?;
    match mesh.ray_intersect(&ray) {
        Some(hit) => println!(
            "ray from above hits face {} at z = {:.4} m, normal {:?}",
            hit.face,
            hit.point.z,
            hit.normal.as_slice()
        ),
        None => println!("ray misses the mesh"),
    }
    println!("centre of the long arm inside: {}", mesh.contains_point(&Point3::new(0.0, -0.0375, 0.0)));
    Ok(())
}
