//! Axis-aligned bounding volume hierarchy over mesh triangles.

use nalgebra::{Point3, Vector3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Point3<f64>,
    pub max: Point3<f64>,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb {
            min: Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point3<f64>>) -> Self {
        let mut b = Aabb::empty();
        for p in points {
            b.grow(p);
        }
        b
    }

    pub fn grow(&mut self, p: &Point3<f64>) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn merge(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn center(&self) -> Point3<f64> {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn extents(&self) -> Vector3<f64> {
        self.max - self.min
    }

    pub fn contains(&self, p: &Point3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn overlaps(&self, other: &Aabb) -> bool {
        (0..3).all(|i| self.min[i] <= other.max[i] && other.min[i] <= self.max[i])
    }

    /// Slab test; returns the entry distance if the ray enters before `t_max`.
    pub fn ray_entry(&self, origin: &Point3<f64>, inv_dir: &Vector3<f64>, t_max: f64) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for i in 0..3 {
            let a = (self.min[i] - origin[i]) * inv_dir[i];
            let b = (self.max[i] - origin[i]) * inv_dir[i];
            let (near, far) = if a <= b { (a, b) } else { (b, a) };
            // NaN from 0 * inf means the ray lies in the slab plane; keep it.
            if !near.is_nan() {
                t0 = t0.max(near);
            }
            if !far.is_nan() {
                t1 = t1.min(far);
            }
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

#[derive(Clone, Debug)]
struct Node {
    bounds: Aabb,
    /// Leaf: first primitive slot. Interior: index of the left child (right is `start + 1`).
    start: usize,
    /// Number of primitives for a leaf, zero for interior nodes.
    count: usize,
}

const LEAF_SIZE: usize = 4;

/// Flattened hierarchy; `order` maps leaf slots back to triangle indices.
#[derive(Clone, Debug)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<usize>,
}

impl Bvh {
    pub fn build(bounds: &[Aabb]) -> Bvh {
        let mut order: Vec<usize> = (0..bounds.len()).collect();
        let mut nodes = Vec::with_capacity(2 * bounds.len().max(1));
        nodes.push(Node {
            bounds: Aabb::empty(),
            start: 0,
            count: 0,
        });
        if !bounds.is_empty() {
            Self::split(&mut nodes, 0, &mut order, 0, bounds.len(), bounds);
        }
        Bvh { nodes, order }
    }

    fn split(
        nodes: &mut Vec<Node>,
        node: usize,
        order: &mut [usize],
        start: usize,
        end: usize,
        bounds: &[Aabb],
    ) {
        let node_bounds = order[start..end]
            .iter()
            .fold(Aabb::empty(), |acc, &i| acc.merge(&bounds[i]));
        nodes[node].bounds = node_bounds;
        if end - start <= LEAF_SIZE {
            nodes[node].start = start;
            nodes[node].count = end - start;
            return;
        }
        let centers: Vec<Point3<f64>> = order[start..end].iter().map(|&i| bounds[i].center()).collect();
        let centers = Aabb::from_points(&centers);
        let axis = centers.extents().imax();
        let mid = (start + end) / 2;
        order[start..end].sort_by(|&a, &b| {
            bounds[a].center()[axis]
                .total_cmp(&bounds[b].center()[axis])
                .then(a.cmp(&b))
        });
        let left = nodes.len();
        for _ in 0..2 {
            nodes.push(Node {
                bounds: Aabb::empty(),
                start: 0,
                count: 0,
            });
        }
        nodes[node].start = left;
        nodes[node].count = 0;
        Self::split(nodes, left, order, start, mid, bounds);
        Self::split(nodes, left + 1, order, mid, end, bounds);
    }

    /// Visits every primitive whose node bounds the ray reaches before `t_max`.
    /// The visitor returns a new `t_max` to shrink the search.
    pub fn traverse_ray(
        &self,
        origin: &Point3<f64>,
        dir: &Vector3<f64>,
        mut t_max: f64,
        mut visit: impl FnMut(usize, f64) -> f64,
    ) {
        if self.order.is_empty() {
            return;
        }
        let inv = dir.map(|d| 1.0 / d);
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if node.bounds.ray_entry(origin, &inv, t_max).is_none() {
                continue;
            }
            if node.count > 0 {
                for &tri in &self.order[node.start..node.start + node.count] {
                    t_max = visit(tri, t_max);
                }
            } else {
                stack.push(node.start + 1);
                stack.push(node.start);
            }
        }
    }

    /// Indices of primitives whose bounds overlap `query`, in ascending order.
    pub fn query_aabb(&self, query: &Aabb, bounds: &[Aabb]) -> Vec<usize> {
        let mut out = Vec::new();
        if self.order.is_empty() {
            return out;
        }
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if !node.bounds.overlaps(query) {
                continue;
            }
            if node.count > 0 {
                out.extend(
                    self.order[node.start..node.start + node.count]
                        .iter()
                        .copied()
                        .filter(|&i| bounds[i].overlaps(query)),
                );
            } else {
                stack.push(node.start + 1);
                stack.push(node.start);
            }
        }
        out.sort_unstable();
        out
    }
}
