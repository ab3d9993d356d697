//! Loads an STL or OBJ file. Without an argument, writes the built-in
//! L-shape to a temporary STL in millimeters and reads it back.
//!
//!     cargo run --example load_mesh -- part.stl 0.001

use regrasp::geometry::io::{load_mesh, save_stl, BuiltinShape, MILLIMETERS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mesh = match args.first() {
        Some(path) => {
            let scale = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(1.0);
            load_mesh(path, scale)?
        }
        None => {
            let dir = tempfile::tempdir()?;
            let path = dir.path().join("l_shape_mm.stl");
            save_stl(&BuiltinShape::LShape.mesh(), &path, MILLIMETERS)?;
            println!("wrote {}", path.display());
            load_mesh(&path, MILLIMETERS)?
        }
    };
    let ext = mesh.bounds().extents();
    println!("{} vertices, {} faces", mesh.vertices().len(), mesh.faces().len());
    println!("extents {:.4} x {:.4} x {:.4} m", ext.x, ext.y, ext.z);
    println!("surface area {:.5} m^2, volume {:.4e} m^3", mesh.surface_area(), mesh.volume());
    Ok(())
}
