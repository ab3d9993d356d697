use std::collections::BTreeMap;

use nalgebra::{Point3, Vector3};

use super::bvh::{Aabb, Bvh};
use super::GeometryError;

/// Hits closer than this to the ray origin are ignored, so rays cast from a
/// surface point do not report the face they start on.
pub const SELF_HIT_DISTANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: Point3<f64>,
    direction: Vector3<f64>,
}

impl Ray {
    /// Builds a ray, normalizing `direction`.
    pub fn new(origin: Point3<f64>, direction: Vector3<f64>) -> Result<Ray, GeometryError> {
        let n = direction.norm();
        if !(n > 1e-12) || !n.is_finite() {
            return Err(GeometryError::DegenerateDirection);
        }
        Ok(Ray {
            origin,
            direction: direction / n,
        })
    }

    pub fn direction(&self) -> &Vector3<f64> {
        &self.direction
    }

    pub fn at(&self, t: f64) -> Point3<f64> {
        self.origin + self.direction * t
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayHit {
    pub point: Point3<f64>,
    pub normal: Vector3<f64>,
    pub distance: f64,
    pub face: usize,
}

/// Closed, consistently oriented triangle mesh with outward face normals.
#[derive(Clone, Debug)]
pub struct TriMesh {
    vertices: Vec<Point3<f64>>,
    faces: Vec<[usize; 3]>,
    normals: Vec<Vector3<f64>>,
    areas: Vec<f64>,
    tri_bounds: Vec<Aabb>,
    bounds: Aabb,
    bvh: Bvh,
}

impl TriMesh {
    /// Validates watertightness and orientation, then builds the hierarchy.
    /// Faces that wind inward are not fixed up; a negative enclosed volume is
    /// reported as an error.
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Result<TriMesh, GeometryError> {
        if faces.is_empty() {
            return Err(GeometryError::EmptyMesh);
        }
        let mut normals = Vec::with_capacity(faces.len());
        let mut areas = Vec::with_capacity(faces.len());
        for (i, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v >= vertices.len()) {
                return Err(GeometryError::BadIndex { face: i });
            }
            let [a, b, c] = f.map(|v| vertices[v]);
            let cross = (b - a).cross(&(c - a));
            let len = cross.norm();
            if !(len > 1e-18) {
                return Err(GeometryError::DegenerateFace { face: i });
            }
            normals.push(cross / len);
            areas.push(0.5 * len);
        }
        check_watertight(&faces)?;
        let tri_bounds: Vec<Aabb> = faces
            .iter()
            .map(|f| Aabb::from_points(f.iter().map(|&v| &vertices[v])))
            .collect();
        let bounds = tri_bounds.iter().fold(Aabb::empty(), |a, b| a.merge(b));
        let bvh = Bvh::build(&tri_bounds);
        let mesh = TriMesh {
            vertices,
            faces,
            normals,
            areas,
            tri_bounds,
            bounds,
            bvh,
        };
        let volume = mesh.volume();
        if !(volume > 0.0) {
            return Err(GeometryError::InwardOrientation { volume });
        }
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn normals(&self) -> &[Vector3<f64>] {
        &self.normals
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn bounds(&self) -> &Aabb {
        &self.bounds
    }

    pub fn triangle(&self, face: usize) -> [Point3<f64>; 3] {
        self.faces[face].map(|v| self.vertices[v])
    }

    pub fn surface_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Signed enclosed volume (positive for outward normals).
    pub fn volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|v| self.vertices[v].coords);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    /// Length of the longest edge.
    pub fn max_edge_length(&self) -> f64 {
        self.faces
            .iter()
            .flat_map(|f| {
                let [a, b, c] = f.map(|v| self.vertices[v]);
                [(b - a).norm(), (c - b).norm(), (a - c).norm()]
            })
            .fold(0.0, f64::max)
    }

    /// Copy of the mesh with every vertex scaled by `s` (> 0).
    pub fn scaled(&self, s: f64) -> Result<TriMesh, GeometryError> {
        TriMesh::new(
            self.vertices.iter().map(|p| Point3::from(p.coords * s)).collect(),
            self.faces.clone(),
        )
    }

    /// Copy of the mesh translated by `offset`.
    pub fn translated(&self, offset: &Vector3<f64>) -> Result<TriMesh, GeometryError> {
        TriMesh::new(
            self.vertices.iter().map(|p| p + offset).collect(),
            self.faces.clone(),
        )
    }

    /// Nearest hit farther than [`SELF_HIT_DISTANCE`], if any.
    pub fn ray_intersect(&self, ray: &Ray) -> Option<RayHit> {
        let mut best: Option<(usize, f64)> = None;
        self.bvh
            .traverse_ray(&ray.origin, ray.direction(), f64::INFINITY, |tri, t_max| {
                match self.intersect_triangle(tri, ray) {
                    Some(t) if t > SELF_HIT_DISTANCE && t < t_max => {
                        // Equal distances (shared edges) resolve to the lower face index.
                        best = Some((tri, t));
                        t
                    }
                    Some(t) if t > SELF_HIT_DISTANCE && t == t_max => {
                        if let Some((b, _)) = best {
                            if tri < b {
                                best = Some((tri, t));
                            }
                        }
                        t_max
                    }
                    _ => t_max,
                }
            });
        best.map(|(face, distance)| RayHit {
            point: ray.at(distance),
            normal: self.normals[face],
            distance,
            face,
        })
    }

    /// Ray parity test along a fixed oblique direction.
    pub fn contains_point(&self, p: &Point3<f64>) -> bool {
        if !self.bounds.contains(p) {
            return false;
        }
        let dir = Vector3::new(0.577_350_269_189_625_8, 0.577_350_269_189_625_7, 0.577_350_269_189_626)
            + Vector3::new(0.0123, -0.0071, 0.0031);
        let ray = Ray::new(*p, dir).expect("constant direction");
        let mut hits: Vec<f64> = Vec::new();
        self.bvh
            .traverse_ray(&ray.origin, ray.direction(), f64::INFINITY, |tri, t_max| {
                if let Some(t) = self.intersect_triangle(tri, &ray) {
                    if t > 0.0 {
                        hits.push(t);
                    }
                }
                t_max
            });
        hits.sort_by(f64::total_cmp);
        hits.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        hits.len() % 2 == 1
    }

    /// Faces whose bounds overlap `query`.
    pub fn faces_overlapping(&self, query: &Aabb) -> Vec<usize> {
        self.bvh.query_aabb(query, &self.tri_bounds)
    }

    /// Möller-Trumbore, two-sided; returns the ray parameter.
    fn intersect_triangle(&self, face: usize, ray: &Ray) -> Option<f64> {
        let [a, b, c] = self.triangle(face);
        let e1 = b - a;
        let e2 = c - a;
        let pvec = ray.direction().cross(&e2);
        let det = e1.dot(&pvec);
        if det.abs() < 1e-15 {
            return None;
        }
        let inv = 1.0 / det;
        let tvec = ray.origin - a;
        let u = tvec.dot(&pvec) * inv;
        if !(-1e-12..=1.0 + 1e-12).contains(&u) {
            return None;
        }
        let qvec = tvec.cross(&e1);
        let v = ray.direction().dot(&qvec) * inv;
        if v < -1e-12 || u + v > 1.0 + 1e-12 {
            return None;
        }
        Some(e2.dot(&qvec) * inv)
    }
}

/// Free function form of [`TriMesh::ray_intersect`].
pub fn ray_mesh_intersect(ray: &Ray, mesh: &TriMesh) -> Option<RayHit> {
    mesh.ray_intersect(ray)
}

fn check_watertight(faces: &[[usize; 3]]) -> Result<(), GeometryError> {
    // A closed, consistently wound surface uses each edge once in each direction.
    let mut edges: BTreeMap<(usize, usize), [u32; 2]> = BTreeMap::new();
    for f in faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            let (key, dir) = if a < b { ((a, b), 0) } else { ((b, a), 1) };
            edges.entry(key).or_insert([0, 0])[dir] += 1;
        }
    }
    match edges.iter().find(|(_, &uses)| uses != [1, 1]) {
        Some((&edge, _)) => Err(GeometryError::NotWatertight { edge }),
        None => Ok(()),
    }
}
