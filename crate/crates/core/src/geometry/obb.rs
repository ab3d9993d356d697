//! Oriented boxes and separating-axis tests against boxes and triangles.

use nalgebra::{Point3, Vector3};

use super::bvh::Aabb;
use super::{Pose, TriMesh};

/// Box with center and axes given by `frame`, and half extents along those axes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Obb {
    pub frame: Pose,
    pub half_extents: Vector3<f64>,
}

impl Obb {
    pub fn new(frame: Pose, half_extents: Vector3<f64>) -> Obb {
        Obb { frame, half_extents }
    }

    pub fn center(&self) -> Point3<f64> {
        Point3::from(self.frame.translation)
    }

    /// The same box placed by `pose` (applied on the left).
    pub fn transformed(&self, pose: &Pose) -> Obb {
        Obb::new(pose.compose(&self.frame), self.half_extents)
    }

    pub fn aabb(&self) -> Aabb {
        let r = self.frame.rotation.abs();
        let e = r * self.half_extents;
        let c = self.center();
        Aabb {
            min: c - e,
            max: c + e,
        }
    }

    pub fn contains(&self, p: &Point3<f64>) -> bool {
        let local = self.frame.rotation.transpose() * (p - self.center());
        (0..3).all(|i| local[i].abs() <= self.half_extents[i])
    }

    /// Separating-axis test between two boxes (15 candidate axes).
    pub fn overlaps(&self, other: &Obb) -> bool {
        let a = &self.frame.rotation;
        let b = &other.frame.rotation;
        let ea = &self.half_extents;
        let eb = &other.half_extents;
        // Rotation of b expressed in a's frame, and the center offset in a's frame.
        let r = a.transpose() * b;
        let t = a.transpose() * (other.frame.translation - self.frame.translation);
        let abs_r = r.abs().add_scalar(1e-12);
        for i in 0..3 {
            let rb = eb.dot(&abs_r.row(i).transpose());
            if t[i].abs() > ea[i] + rb {
                return false;
            }
        }
        for j in 0..3 {
            let ra = ea.dot(&abs_r.column(j));
            let proj = t.dot(&r.column(j));
            if proj.abs() > ra + eb[j] {
                return false;
            }
        }
        for i in 0..3 {
            let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
            for j in 0..3 {
                let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
                let ra = ea[i1] * abs_r[(i2, j)] + ea[i2] * abs_r[(i1, j)];
                let rb = eb[j1] * abs_r[(i, j2)] + eb[j2] * abs_r[(i, j1)];
                let proj = t[i2] * r[(i1, j)] - t[i1] * r[(i2, j)];
                if proj.abs() > ra + rb {
                    return false;
                }
            }
        }
        true
    }

    /// Separating-axis test between the box and a triangle (13 axes).
    pub fn intersects_triangle(&self, tri: &[Point3<f64>; 3]) -> bool {
        let rt = self.frame.rotation.transpose();
        let c = self.frame.translation;
        let v: [Vector3<f64>; 3] = tri.map(|p| rt * (p.coords - c));
        let e = self.half_extents;
        let edges = [v[1] - v[0], v[2] - v[1], v[0] - v[2]];
        let separated = |axis: Vector3<f64>| -> bool {
            if axis.norm_squared() < 1e-24 {
                return false;
            }
            let p = v.map(|x| x.dot(&axis));
            let (lo, hi) = (p[0].min(p[1]).min(p[2]), p[0].max(p[1]).max(p[2]));
            let r = e.x * axis.x.abs() + e.y * axis.y.abs() + e.z * axis.z.abs();
            lo > r || hi < -r
        };
        for i in 0..3 {
            let mut axis = Vector3::zeros();
            axis[i] = 1.0;
            if separated(axis) {
                return false;
            }
        }
        if separated(edges[0].cross(&edges[1])) {
            return false;
        }
        for i in 0..3 {
            let mut box_axis = Vector3::zeros();
            box_axis[i] = 1.0;
            for edge in &edges {
                if separated(box_axis.cross(edge)) {
                    return false;
                }
            }
        }
        true
    }

    /// True if the box touches any triangle of `mesh` or lies inside it.
    pub fn intersects_mesh(&self, mesh: &TriMesh) -> bool {
        let bounds = self.aabb();
        if !bounds.overlaps(mesh.bounds()) {
            return false;
        }
        let touching = mesh
            .faces_overlapping(&bounds)
            .into_iter()
            .any(|f| self.intersects_triangle(&mesh.triangle(f)));
        // A box clear of every triangle is either wholly inside or wholly outside.
        touching || mesh.contains_point(&self.center())
    }
}
