//! Axis-aligned bounding boxes and a bounding volume hierarchy over
//! triangles. Queries return the nearest hit and match an exhaustive scan
//! over all triangles.

use super::vec::{vec3, Vec3};
use super::GeomError;

/// Rays ignore intersections closer than this, which suppresses
/// self-intersection of secondary rays spawned from a surface.
pub const RAY_EPSILON: f64 = 1e-4;

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Aabb {
        Aabb {
            min: vec3(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: vec3(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn new(min: Vec3, max: Vec3) -> Aabb {
        Aabb { min, max }
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x
    }

    #[inline]
    pub fn grow(&mut self, p: Vec3) {
        self.min = self.min.min_by_component(p);
        self.max = self.max.max_by_component(p);
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb {
            min: self.min.min_by_component(o.min),
            max: self.max.max_by_component(o.max),
        }
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    /// Grow symmetrically by `margin` on every side.
    pub fn inflated(&self, margin: f64) -> Aabb {
        let m = vec3(margin, margin, margin);
        Aabb { min: self.min - m, max: self.max + m }
    }

    pub fn overlaps(&self, o: &Aabb) -> bool {
        self.min.x <= o.max.x
            && self.max.x >= o.min.x
            && self.min.y <= o.max.y
            && self.max.y >= o.min.y
            && self.min.z <= o.max.z
            && self.max.z >= o.min.z
    }

    pub fn contains_point(&self, p: Vec3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    /// Slab test; returns entry distance when the ray hits within
    /// [t_min, t_max].
    #[inline]
    pub fn hit_distance(&self, origin: Vec3, inv_dir: Vec3, t_min: f64, t_max: f64) -> Option<f64> {
        let t0 = (self.min - origin).mul_by_component(inv_dir);
        let t1 = (self.max - origin).mul_by_component(inv_dir);
        let lo = t0.min_by_component(t1);
        let hi = t0.max_by_component(t1);
        let enter = lo.x.max(lo.y).max(lo.z).max(t_min);
        let exit = hi.x.min(hi.y).min(hi.z).min(t_max);
        if enter <= exit {
            Some(enter)
        } else {
            None
        }
    }
}

#[derive(Copy, Clone, Debug)]
pub struct Ray {
    pub origin: Vec3,
    pub dir: Vec3,
}

impl Ray {
    pub fn new(origin: Vec3, dir: Vec3) -> Ray {
        Ray { origin, dir }
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.dir * t
    }
}

/// Identity of the surface a hit landed on.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct HitData {
    pub object_id: u32,
    pub material_id: u32,
    pub part_id: u32,
}

#[derive(Copy, Clone, Debug)]
pub struct Hit {
    /// Distance along the ray, always > RAY_EPSILON.
    pub t: f64,
    /// Unit normal oriented against the incoming ray.
    pub normal: Vec3,
    pub data: HitData,
    /// True when the geometric (winding) normal pointed along the ray.
    pub back_face: bool,
}

/// One triangle with expanded vertices; the payload identifies what it
/// belongs to in the enclosing scene.
#[derive(Copy, Clone, Debug)]
pub struct SceneTri {
    pub v0: Vec3,
    pub v1: Vec3,
    pub v2: Vec3,
    pub data: HitData,
}

impl SceneTri {
    pub fn aabb(&self) -> Aabb {
        let mut bb = Aabb::empty();
        bb.grow(self.v0);
        bb.grow(self.v1);
        bb.grow(self.v2);
        bb
    }

    /// Moller-Trumbore intersection.
    #[inline]
    pub fn intersect(&self, ray: &Ray, t_min: f64, t_max: f64) -> Option<(f64, Vec3, bool)> {
        let e1 = self.v1 - self.v0;
        let e2 = self.v2 - self.v0;
        let pvec = ray.dir.cross(e2);
        let det = e1.dot(pvec);
        if det.abs() < 1e-14 {
            return None;
        }
        let inv_det = 1.0 / det;
        let tvec = ray.origin - self.v0;
        let u = tvec.dot(pvec) * inv_det;
        if !(0.0..=1.0).contains(&u) {
            return None;
        }
        let qvec = tvec.cross(e1);
        let v = ray.dir.dot(qvec) * inv_det;
        if v < 0.0 || u + v > 1.0 {
            return None;
        }
        let t = e2.dot(qvec) * inv_det;
        if t <= t_min || t >= t_max {
            return None;
        }
        let geo_normal = e1.cross(e2).normalized();
        let back_face = geo_normal.dot(ray.dir) > 0.0;
        let normal = if back_face { -geo_normal } else { geo_normal };
        Some((t, normal, back_face))
    }
}

#[derive(Clone, Debug)]
struct Node {
    aabb: Aabb,
    /// Leaf: index of the first triangle. Internal: index of the left child
    /// (right child is `first + 1`).
    first: u32,
    /// Triangle count; zero marks an internal node.
    count: u32,
}

const LEAF_SIZE: usize = 4;
const SAH_BINS: usize = 16;

/// Bounding volume hierarchy over a triangle soup, built with a binned
/// surface-area heuristic.
pub struct Bvh {
    nodes: Vec<Node>,
    tris: Vec<SceneTri>,
}

fn half_area(bb: &Aabb) -> f64 {
    if bb.is_empty() {
        return 0.0;
    }
    let e = bb.extent();
    e.x * e.y + e.y * e.z + e.z * e.x
}

impl Bvh {
    /// Build over a whole soup. Errors on empty input.
    pub fn build(mut tris: Vec<SceneTri>) -> Result<Bvh, GeomError> {
        if tris.is_empty() {
            return Err(GeomError::EmptyGeometry);
        }
        let mut nodes = Vec::with_capacity(tris.len() * 2);
        nodes.push(Node { aabb: Aabb::empty(), first: 0, count: 0 });
        let n = tris.len();
        Self::build_node(&mut nodes, &mut tris, 0, 0, n);
        Ok(Bvh { nodes, tris })
    }

    /// Accelerator over a single validated mesh; part ids are carried into
    /// hit data, object and material ids are zero.
    pub fn from_mesh(mesh: &super::mesh::TriangleMesh) -> Result<Bvh, GeomError> {
        mesh.validate()?;
        let tris = (0..mesh.triangles.len())
            .map(|i| {
                let [v0, v1, v2] = mesh.triangle_vertices(i);
                SceneTri {
                    v0,
                    v1,
                    v2,
                    data: HitData { object_id: 0, material_id: 0, part_id: mesh.tri_part[i] },
                }
            })
            .collect();
        Bvh::build(tris)
    }

    fn build_node(nodes: &mut Vec<Node>, tris: &mut [SceneTri], node: usize, start: usize, count: usize) {
        let mut bounds = Aabb::empty();
        let mut centroid_bounds = Aabb::empty();
        for tri in &tris[start..start + count] {
            let bb = tri.aabb();
            bounds = bounds.union(&bb);
            centroid_bounds.grow(bb.center());
        }
        nodes[node].aabb = bounds;
        if count <= 2 {
            nodes[node].first = start as u32;
            nodes[node].count = count as u32;
            return;
        }
        let ext = centroid_bounds.extent();
        let axis = if ext.x >= ext.y && ext.x >= ext.z {
            0
        } else if ext.y >= ext.z {
            1
        } else {
            2
        };
        let axis_min = match axis {
            0 => centroid_bounds.min.x,
            1 => centroid_bounds.min.y,
            _ => centroid_bounds.min.z,
        };
        let axis_ext = match axis {
            0 => ext.x,
            1 => ext.y,
            _ => ext.z,
        };
        let key = |t: &SceneTri| {
            let c = t.aabb().center();
            match axis {
                0 => c.x,
                1 => c.y,
                _ => c.z,
            }
        };
        // Binned SAH: pick the split minimizing area-weighted child costs;
        // degenerate centroid spreads fall back to an equal-count split.
        let mut mid = count / 2;
        let mut use_median = true;
        if axis_ext > 1e-12 {
            let bin_of = |t: &SceneTri| -> usize {
                let f = (key(t) - axis_min) / axis_ext;
                ((f * SAH_BINS as f64) as usize).min(SAH_BINS - 1)
            };
            let mut bin_counts = [0usize; SAH_BINS];
            let mut bin_bounds = [Aabb::empty(); SAH_BINS];
            for tri in &tris[start..start + count] {
                let b = bin_of(tri);
                bin_counts[b] += 1;
                bin_bounds[b] = bin_bounds[b].union(&tri.aabb());
            }
            let mut suffix_area = [0.0f64; SAH_BINS];
            let mut suffix_count = [0usize; SAH_BINS];
            let mut acc = Aabb::empty();
            let mut n_acc = 0usize;
            for i in (1..SAH_BINS).rev() {
                acc = acc.union(&bin_bounds[i]);
                n_acc += bin_counts[i];
                suffix_area[i] = half_area(&acc);
                suffix_count[i] = n_acc;
            }
            let mut best_cost = f64::INFINITY;
            let mut best_bin = 0usize;
            let mut prefix = Aabb::empty();
            let mut n_prefix = 0usize;
            for i in 0..SAH_BINS - 1 {
                prefix = prefix.union(&bin_bounds[i]);
                n_prefix += bin_counts[i];
                if n_prefix == 0 || suffix_count[i + 1] == 0 {
                    continue;
                }
                let cost = half_area(&prefix) * n_prefix as f64 + suffix_area[i + 1] * suffix_count[i + 1] as f64;
                if cost < best_cost {
                    best_cost = cost;
                    best_bin = i;
                }
            }
            if best_cost.is_finite() {
                let leaf_cost = half_area(&bounds) * count as f64;
                if count <= LEAF_SIZE && best_cost >= leaf_cost {
                    nodes[node].first = start as u32;
                    nodes[node].count = count as u32;
                    return;
                }
                // In-place partition by bin index.
                let slice = &mut tris[start..start + count];
                let mut i = 0usize;
                let mut j = count;
                while i < j {
                    if bin_of(&slice[i]) <= best_bin {
                        i += 1;
                    } else {
                        j -= 1;
                        slice.swap(i, j);
                    }
                }
                if i > 0 && i < count {
                    mid = i;
                    use_median = false;
                }
            }
        }
        if use_median {
            if count <= LEAF_SIZE {
                nodes[node].first = start as u32;
                nodes[node].count = count as u32;
                return;
            }
            let slice = &mut tris[start..start + count];
            slice.select_nth_unstable_by(mid, |a, b| key(a).total_cmp(&key(b)));
        }
        let left = nodes.len();
        nodes.push(Node { aabb: Aabb::empty(), first: 0, count: 0 });
        nodes.push(Node { aabb: Aabb::empty(), first: 0, count: 0 });
        nodes[node].first = left as u32;
        nodes[node].count = 0;
        Self::build_node(nodes, tris, left, start, mid);
        Self::build_node(nodes, tris, left + 1, start + mid, count - mid);
    }

    /// Nearest intersection with `t` in (RAY_EPSILON, t_max). The ray
    /// direction must be normalized within 1e-6.
    pub fn intersect(&self, ray: &Ray, t_max: f64) -> Option<Hit> {
        debug_assert!((ray.dir.length() - 1.0).abs() < 1e-6);
        let inv_dir = vec3(1.0 / ray.dir.x, 1.0 / ray.dir.y, 1.0 / ray.dir.z);
        let mut best: Option<Hit> = None;
        let mut best_t = t_max;
        let mut stack = [0u32; 64];
        let mut sp = 0usize;
        stack[sp] = 0;
        sp += 1;
        while sp > 0 {
            sp -= 1;
            let node = &self.nodes[stack[sp] as usize];
            if node.aabb.hit_distance(ray.origin, inv_dir, RAY_EPSILON, best_t).is_none() {
                continue;
            }
            if node.count > 0 {
                let start = node.first as usize;
                for tri in &self.tris[start..start + node.count as usize] {
                    if let Some((t, normal, back_face)) = tri.intersect(ray, RAY_EPSILON, best_t) {
                        best_t = t;
                        best = Some(Hit { t, normal, data: tri.data, back_face });
                    }
                }
            } else {
                let l = node.first as usize;
                let r = l + 1;
                let dl = self.nodes[l].aabb.hit_distance(ray.origin, inv_dir, RAY_EPSILON, best_t);
                let dr = self.nodes[r].aabb.hit_distance(ray.origin, inv_dir, RAY_EPSILON, best_t);
                match (dl, dr) {
                    (Some(a), Some(b)) => {
                        // Visit the nearer child first.
                        let (near, far) = if a <= b { (l, r) } else { (r, l) };
                        stack[sp] = far as u32;
                        sp += 1;
                        stack[sp] = near as u32;
                        sp += 1;
                    }
                    (Some(_), None) => {
                        stack[sp] = l as u32;
                        sp += 1;
                    }
                    (None, Some(_)) => {
                        stack[sp] = r as u32;
                        sp += 1;
                    }
                    (None, None) => {}
                }
            }
        }
        best
    }

    /// True when anything lies along the ray within (RAY_EPSILON, t_max).
    pub fn intersect_any(&self, ray: &Ray, t_max: f64) -> bool {
        let inv_dir = vec3(1.0 / ray.dir.x, 1.0 / ray.dir.y, 1.0 / ray.dir.z);
        let mut stack = [0u32; 64];
        let mut sp = 0usize;
        stack[sp] = 0;
        sp += 1;
        while sp > 0 {
            sp -= 1;
            let node = &self.nodes[stack[sp] as usize];
            if node.aabb.hit_distance(ray.origin, inv_dir, RAY_EPSILON, t_max).is_none() {
                continue;
            }
            if node.count > 0 {
                let start = node.first as usize;
                for tri in &self.tris[start..start + node.count as usize] {
                    if tri.intersect(ray, RAY_EPSILON, t_max).is_some() {
                        return true;
                    }
                }
            } else {
                stack[sp] = node.first;
                sp += 1;
                stack[sp] = node.first + 1;
                sp += 1;
            }
        }
        false
    }

    pub fn triangle_count(&self) -> usize {
        self.tris.len()
    }

    pub fn root_aabb(&self) -> Aabb {
        self.nodes[0].aabb
    }

    /// Exhaustive nearest-hit scan; the reference oracle for the tree.
    pub fn intersect_exhaustive(&self, ray: &Ray, t_max: f64) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        let mut best_t = t_max;
        for tri in &self.tris {
            if let Some((t, normal, back_face)) = tri.intersect(ray, RAY_EPSILON, best_t) {
                best_t = t;
                best = Some(Hit { t, normal, data: tri.data, back_face });
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::mesh::TriangleMesh;
    use crate::rng::Pcg32;

    fn random_soup(rng: &mut Pcg32, count: usize) -> Vec<SceneTri> {
        (0..count)
            .map(|i| {
                let base = vec3(rng.range(-5.0, 5.0), rng.range(-5.0, 5.0), rng.range(-5.0, 5.0));
                let e1 = vec3(rng.range(-1.0, 1.0), rng.range(-1.0, 1.0), rng.range(-1.0, 1.0));
                let e2 = vec3(rng.range(-1.0, 1.0), rng.range(-1.0, 1.0), rng.range(-1.0, 1.0));
                SceneTri {
                    v0: base,
                    v1: base + e1,
                    v2: base + e2,
                    data: HitData { object_id: i as u32, material_id: 0, part_id: 0 },
                }
            })
            .collect()
    }

    #[test]
    fn nearest_of_two_disjoint_triangles() {
        let tris = vec![
            SceneTri {
                v0: vec3(-1.0, -1.0, 2.0),
                v1: vec3(1.0, -1.0, 2.0),
                v2: vec3(0.0, 1.0, 2.0),
                data: HitData { object_id: 7, material_id: 0, part_id: 0 },
            },
            SceneTri {
                v0: vec3(-1.0, -1.0, 5.0),
                v1: vec3(1.0, -1.0, 5.0),
                v2: vec3(0.0, 1.0, 5.0),
                data: HitData { object_id: 8, material_id: 0, part_id: 0 },
            },
        ];
        let bvh = Bvh::build(tris).unwrap();
        let hit = bvh
            .intersect(&Ray::new(vec3(0.0, 0.0, 0.0), vec3(0.0, 0.0, 1.0)), f64::INFINITY)
            .unwrap();
        assert_eq!(hit.data.object_id, 7);
        assert!((hit.t - 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_soup_is_an_error() {
        assert!(matches!(Bvh::build(Vec::new()), Err(GeomError::EmptyGeometry)));
        let mesh = TriangleMesh::default();
        assert!(Bvh::from_mesh(&mesh).is_err());
    }

    #[test]
    fn unit_square_axis_hit() {
        let mesh = TriangleMesh::new(
            vec![
                vec3(-0.5, -0.5, 0.0),
                vec3(0.5, -0.5, 0.0),
                vec3(0.5, 0.5, 0.0),
                vec3(-0.5, 0.5, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
            vec![0, 0],
        );
        let bvh = Bvh::from_mesh(&mesh).unwrap();
        let hit = bvh
            .intersect(&Ray::new(vec3(0.0, 0.0, -1.0), vec3(0.0, 0.0, 1.0)), f64::INFINITY)
            .unwrap();
        assert!((hit.t - 1.0).abs() < 1e-12);
        assert!(hit.normal.dot(vec3(0.0, 0.0, 1.0)) < 0.0, "normal faces the ray");
    }

    #[test]
    fn grazing_parallel_ray_misses() {
        let mesh = TriangleMesh::new(
            vec![
                vec3(-0.5, -0.5, 0.0),
                vec3(0.5, -0.5, 0.0),
                vec3(0.5, 0.5, 0.0),
            ],
            vec![[0, 1, 2]],
            vec![0],
        );
        let bvh = Bvh::from_mesh(&mesh).unwrap();
        let ray = Ray::new(vec3(-2.0, 0.0, 0.5), vec3(1.0, 0.0, 0.0));
        assert!(bvh.intersect(&ray, f64::INFINITY).is_none());
    }

    #[test]
    fn matches_exhaustive_oracle_on_random_scenes() {
        let mut rng = Pcg32::from_parts(&[11, 0]);
        let bvh = Bvh::build(random_soup(&mut rng, 1000)).unwrap();
        for _ in 0..1000 {
            let origin = vec3(rng.range(-8.0, 8.0), rng.range(-8.0, 8.0), rng.range(-8.0, 8.0));
            let dir = vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
            let ray = Ray::new(origin, dir);
            let a = bvh.intersect(&ray, f64::INFINITY);
            let b = bvh.intersect_exhaustive(&ray, f64::INFINITY);
            match (a, b) {
                (None, None) => {}
                (Some(x), Some(y)) => {
                    assert_eq!(x.data.object_id, y.data.object_id);
                    assert!((x.t - y.t).abs() <= 1e-6);
                }
                _ => panic!("bvh and oracle disagree on hit existence"),
            }
        }
    }
}
