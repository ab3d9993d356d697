//! STL and OBJ loading. Files authored in millimeters are read with the
//! default scale of 0.001.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::{shapes, GeometryError, TriMesh};

pub const MILLIMETERS: f64 = 0.001;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuiltinShape {
    LShape,
    DiamondPrism,
    TiltedLShape,
    /// 25 mm cube.
    Cube,
    /// 20 mm radius, 320 faces.
    Icosphere,
}

impl BuiltinShape {
    pub fn mesh(self) -> TriMesh {
        match self {
            BuiltinShape::LShape => shapes::default_l_shape(),
            BuiltinShape::DiamondPrism => shapes::default_diamond_prism(),
            BuiltinShape::TiltedLShape => shapes::default_tilted_l_shape(),
            BuiltinShape::Cube => shapes::cuboid(Vector3::repeat(0.025)).expect("valid cube"),
            BuiltinShape::Icosphere => shapes::icosphere(0.02, 2).expect("valid sphere"),
        }
    }
}

impl std::str::FromStr for BuiltinShape {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| GeometryError::UnsupportedFormat(format!("unknown builtin shape '{s}'")))
    }
}

fn unit_scale() -> f64 {
    1.0
}

/// Where an object mesh comes from, as written in config and output files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeshSource {
    Builtin { builtin: BuiltinShape },
    File {
        path: std::path::PathBuf,
        #[serde(default = "unit_scale")]
        scale: f64,
    },
}

impl MeshSource {
    /// Parses `builtin:<name>` or a file path.
    pub fn parse(spec: &str, scale: f64) -> Result<MeshSource, GeometryError> {
        match spec.strip_prefix("builtin:") {
            Some(name) => Ok(MeshSource::Builtin { builtin: name.parse()? }),
            None => Ok(MeshSource::File { path: spec.into(), scale }),
        }
    }

    pub fn load(&self) -> Result<TriMesh, GeometryError> {
        match self {
            MeshSource::Builtin { builtin } => Ok(builtin.mesh()),
            MeshSource::File { path, scale } => load_mesh(path, *scale),
        }
    }
}

/// Loads by file extension (`.stl` or `.obj`, case-insensitive).
pub fn load_mesh(path: impl AsRef<Path>, scale: f64) -> Result<TriMesh, GeometryError> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("stl") => load_stl(path, scale),
        Some("obj") => load_obj(path, scale),
        _ => Err(GeometryError::UnsupportedFormat(path.display().to_string())),
    }
}

/// ASCII or binary STL. Coincident vertices are welded by the reader.
pub fn load_stl(path: impl AsRef<Path>, scale: f64) -> Result<TriMesh, GeometryError> {
    let mut file = BufReader::new(File::open(path.as_ref())?);
    let mesh = stl_io::read_stl(&mut file)?;
    let vertices = mesh
        .vertices
        .iter()
        .map(|v| Point3::new(v[0] as f64, v[1] as f64, v[2] as f64) * scale)
        .collect();
    let faces = mesh.faces.iter().map(|f| f.vertices).collect();
    TriMesh::new(vertices, faces)
}

/// Wavefront OBJ; polygons are fan-triangulated and all models merged.
pub fn load_obj(path: impl AsRef<Path>, scale: f64) -> Result<TriMesh, GeometryError> {
    let opts = tobj::LoadOptions {
        triangulate: true,
        single_index: true,
        ..Default::default()
    };
    let (models, _) = tobj::load_obj(path.as_ref(), &opts)
        .map_err(|e| GeometryError::Parse(e.to_string()))?;
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for m in &models {
        let base = vertices.len();
        vertices.extend(
            m.mesh
                .positions
                .chunks_exact(3)
                .map(|p| Point3::new(p[0] as f64, p[1] as f64, p[2] as f64) * scale),
        );
        faces.extend(m.mesh.indices.chunks_exact(3).map(|t| {
            [
                base + t[0] as usize,
                base + t[1] as usize,
                base + t[2] as usize,
            ]
        }));
    }
    TriMesh::new(vertices, faces)
}

/// Writes a binary STL in the given unit scale (file units = meters / scale).
pub fn save_stl(mesh: &TriMesh, path: impl AsRef<Path>, scale: f64) -> Result<(), GeometryError> {
    let tris: Vec<stl_io::Triangle> = (0..mesh.faces().len())
        .map(|f| {
            let n = mesh.normals()[f];
            let pts = mesh.triangle(f);
            stl_io::Triangle {
                normal: stl_io::Normal::new([n.x as f32, n.y as f32, n.z as f32]),
                vertices: pts.map(|p| {
                    stl_io::Vertex::new([(p.x / scale) as f32, (p.y / scale) as f32, (p.z / scale) as f32])
                }),
            }
        })
        .collect();
    let mut file = std::io::BufWriter::new(File::create(path.as_ref())?);
    stl_io::write_stl(&mut file, tris.iter())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_source_forms() {
        let b = MeshSource::parse("builtin:diamond-prism", 1.0).unwrap();
        assert_eq!(serde_json::to_string(&b).unwrap(), r#"{"builtin":"diamond-prism"}"#);
        assert_eq!(b.load().unwrap().faces().len(), 12);
        let f: MeshSource = serde_json::from_str(r#"{"path":"part.stl"}"#).unwrap();
        assert_eq!(f, MeshSource::File { path: "part.stl".into(), scale: 1.0 });
        assert!(MeshSource::parse("builtin:teapot", 1.0).is_err());
    }
    use crate::geometry::shapes;
    use std::io::Write;

    #[test]
    fn ascii_stl_cube_in_millimeters() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cube.stl");
        let cube = shapes::cuboid(nalgebra::Vector3::new(25.0, 25.0, 25.0)).unwrap();
        let mut f = File::create(&path).unwrap();
        writeln!(f, "solid cube").unwrap();
        for face in 0..cube.faces().len() {
            let n = cube.normals()[face];
            writeln!(f, "facet normal {} {} {}\nouter loop", n.x, n.y, n.z).unwrap();
            for p in cube.triangle(face) {
                writeln!(f, "vertex {} {} {}", p.x, p.y, p.z).unwrap();
            }
            writeln!(f, "endloop\nendfacet").unwrap();
        }
        writeln!(f, "endsolid cube").unwrap();
        drop(f);
        let m = load_mesh(&path, MILLIMETERS).unwrap();
        assert!((m.volume() - 0.025f64.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn binary_stl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.stl");
        let l = shapes::default_l_shape();
        save_stl(&l, &path, MILLIMETERS).unwrap();
        let back = load_stl(&path, MILLIMETERS).unwrap();
        assert_eq!(back.faces().len(), l.faces().len());
        assert!((back.volume() - l.volume()).abs() < 1e-9);
    }

    #[test]
    fn obj_quads_are_triangulated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cube.obj");
        let mut f = File::create(&path).unwrap();
        for z in [0, 1] {
            for (x, y) in [(0, 0), (1, 0), (1, 1), (0, 1)] {
                writeln!(f, "v {x} {y} {z}").unwrap();
            }
        }
        for quad in ["4 3 2 1", "5 6 7 8", "1 2 6 5", "2 3 7 6", "3 4 8 7", "4 1 5 8"] {
            writeln!(f, "f {quad}").unwrap();
        }
        drop(f);
        let m = load_mesh(&path, 1.0).unwrap();
        assert_eq!(m.faces().len(), 12);
        assert!((m.volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_extension() {
        assert!(matches!(
            load_mesh("model.ply", 1.0),
            Err(GeometryError::UnsupportedFormat(_))
        ));
    }
}
