//! Procedural test objects. All builders return meshes centered on their
//! bounding box, in meters.

use nalgebra::{Point2, Point3, Vector2, Vector3};

use super::{GeometryError, TriMesh};

/// Axis-aligned box centered at the origin.
pub fn cuboid(extents: Vector3<f64>) -> Result<TriMesh, GeometryError> {
    let h = extents / 2.0;
    let rect = [
        Point2::new(-h.x, -h.y),
        Point2::new(h.x, -h.y),
        Point2::new(h.x, h.y),
        Point2::new(-h.x, h.y),
    ];
    extrude(&rect, extents.z)
}

/// Extrudes a simple counter-clockwise polygon along +z by `thickness`,
/// centered on z = 0.
pub fn extrude(polygon: &[Point2<f64>], thickness: f64) -> Result<TriMesh, GeometryError> {
    let n = polygon.len();
    if n < 3 || !(thickness > 0.0) {
        return Err(GeometryError::EmptyMesh);
    }
    if signed_area(polygon) <= 0.0 {
        return Err(GeometryError::InwardOrientation {
            volume: signed_area(polygon) * thickness,
        });
    }
    let hz = thickness / 2.0;
    let mut vertices = Vec::with_capacity(2 * n);
    vertices.extend(polygon.iter().map(|p| Point3::new(p.x, p.y, -hz)));
    vertices.extend(polygon.iter().map(|p| Point3::new(p.x, p.y, hz)));
    let mut faces = Vec::new();
    for [a, b, c] in ear_clip(polygon)? {
        faces.push([a, c, b]);
        faces.push([a + n, b + n, c + n]);
    }
    for i in 0..n {
        let j = (i + 1) % n;
        faces.push([i, j, j + n]);
        faces.push([i, j + n, i + n]);
    }
    TriMesh::new(vertices, faces)
}

/// L-shaped bar with a square cross-section: a `long` arm along x and a
/// `short` arm along y, both `width` wide, extruded `width` along z.
pub fn l_shape(long: f64, short: f64, width: f64) -> Result<TriMesh, GeometryError> {
    let poly = [
        Point2::new(0.0, 0.0),
        Point2::new(long, 0.0),
        Point2::new(long, width),
        Point2::new(width, width),
        Point2::new(width, short),
        Point2::new(0.0, short),
    ];
    centered(extrude(&poly, width)?)
}

/// The 125 x 100 mm L-shape with 25 mm cross-section.
pub fn default_l_shape() -> TriMesh {
    l_shape(0.125, 0.100, 0.025).expect("valid constant shape")
}

/// Prism over a rhombus whose parallel edges are `edge_distance` apart and
/// whose acute interior angle is `acute_angle` (radians); extruded `length`
/// along z.
pub fn diamond_prism(edge_distance: f64, acute_angle: f64, length: f64) -> Result<TriMesh, GeometryError> {
    let side = edge_distance / acute_angle.sin();
    let u = Vector2::new(acute_angle.cos(), acute_angle.sin()) * side;
    let poly = [
        Point2::origin(),
        Point2::new(side, 0.0),
        Point2::new(side, 0.0) + u,
        Point2::origin() + u,
    ];
    centered(extrude(&poly, length)?)
}

/// 25 mm diamond with a 75 degree acute angle, 25 mm long.
pub fn default_diamond_prism() -> TriMesh {
    diamond_prism(0.025, 75f64.to_radians(), 0.025).expect("valid constant shape")
}

/// L-shape whose arms meet at `angle` (radians) instead of 90 degrees. The
/// overlap of the two arms is a rhombus with that acute angle. `long` runs
/// along x, `short` along the tilted direction; both measured on the outer
/// edges.
pub fn tilted_l_shape(long: f64, short: f64, width: f64, angle: f64) -> Result<TriMesh, GeometryError> {
    let (s, c) = angle.sin_cos();
    let u = Vector2::new(c, s);
    let inner = Vector2::new(s, -c) * width;
    let poly = [
        Point2::origin(),
        Point2::new(long, 0.0),
        Point2::new(long, width),
        Point2::new(width * (1.0 + c) / s, width),
        Point2::origin() + u * short + inner,
        Point2::origin() + u * short,
    ];
    centered(extrude(&poly, width)?)
}

/// The 125 x 100 mm, 25 mm wide tilted L with a 75 degree corner.
pub fn default_tilted_l_shape() -> TriMesh {
    tilted_l_shape(0.125, 0.100, 0.025, 75f64.to_radians()).expect("valid constant shape")
}

/// Geodesic sphere from a subdivided icosahedron.
pub fn icosphere(radius: f64, subdivisions: u32) -> Result<TriMesh, GeometryError> {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vector3<f64>> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoints = std::collections::BTreeMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Vector3<f64>>| -> usize {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) / 2.0).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    TriMesh::new(verts.iter().map(|v| Point3::from(v * radius)).collect(), faces)
}

fn centered(mesh: TriMesh) -> Result<TriMesh, GeometryError> {
    let c = mesh.bounds().center().coords;
    mesh.translated(&-c)
}

fn signed_area(poly: &[Point2<f64>]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
        / 2.0
}

/// Ear clipping for a simple counter-clockwise polygon.
fn ear_clip(poly: &[Point2<f64>]) -> Result<Vec<[usize; 3]>, GeometryError> {
    let cross = |o: Point2<f64>, a: Point2<f64>, b: Point2<f64>| (a - o).perp(&(b - o));
    let mut remaining: Vec<usize> = (0..poly.len()).collect();
    let mut tris = Vec::with_capacity(poly.len() - 2);
    while remaining.len() > 3 {
        let m = remaining.len();
        let ear = (0..m).find(|&i| {
            let (ia, ib, ic) = (remaining[(i + m - 1) % m], remaining[i], remaining[(i + 1) % m]);
            let (a, b, c) = (poly[ia], poly[ib], poly[ic]);
            if cross(a, b, c) <= 1e-18 {
                return false;
            }
            remaining.iter().all(|&j| {
                if j == ia || j == ib || j == ic {
                    return true;
                }
                let p = poly[j];
                !(cross(a, b, p) >= 0.0 && cross(b, c, p) >= 0.0 && cross(c, a, p) >= 0.0)
            })
        });
        let Some(i) = ear else {
            return Err(GeometryError::EmptyMesh);
        };
        tris.push([remaining[(i + m - 1) % m], remaining[i], remaining[(i + 1) % m]]);
        remaining.remove(i);
    }
    tris.push([remaining[0], remaining[1], remaining[2]]);
    Ok(tris)
}
