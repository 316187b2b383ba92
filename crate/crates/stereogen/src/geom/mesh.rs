use super::bvh::Aabb;
use super::vec::{vec3, RigidTransform, Vec3};
use super::GeomError;

/// Minimum triangle area considered non-degenerate, in square meters.
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

/// Indexed triangle mesh with a per-triangle part id. Parts are the unit of
/// material assignment.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriangleMesh {
    pub positions: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    pub tri_part: Vec<u32>,
}

impl TriangleMesh {
    pub fn new(positions: Vec<Vec3>, triangles: Vec<[u32; 3]>, tri_part: Vec<u32>) -> TriangleMesh {
        TriangleMesh { positions, triangles, tri_part }
    }

    pub fn validate(&self) -> Result<(), GeomError> {
        if self.triangles.is_empty() {
            return Err(GeomError::EmptyGeometry);
        }
        if self.tri_part.len() != self.triangles.len() {
            return Err(GeomError::InvalidMesh("part id count must match triangle count"));
        }
        let n = self.positions.len() as u32;
        for tri in &self.triangles {
            if tri.iter().any(|&i| i >= n) {
                return Err(GeomError::InvalidMesh("triangle index out of range"));
            }
        }
        for (i, tri) in self.triangles.iter().enumerate() {
            if self.triangle_area(i) <= MIN_TRIANGLE_AREA {
                let _ = tri;
                return Err(GeomError::InvalidMesh("degenerate triangle"));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn triangle_vertices(&self, i: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[i];
        [
            self.positions[a as usize],
            self.positions[b as usize],
            self.positions[c as usize],
        ]
    }

    pub fn triangle_area(&self, i: usize) -> f64 {
        let [a, b, c] = self.triangle_vertices(i);
        (b - a).cross(c - a).length() * 0.5
    }

    pub fn aabb(&self) -> Aabb {
        let mut bb = Aabb::empty();
        for p in &self.positions {
            bb.grow(*p);
        }
        bb
    }

    pub fn part_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.tri_part.clone();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Signed volume via the divergence theorem; exact for closed meshes.
    pub fn signed_volume(&self) -> f64 {
        let mut v = 0.0;
        for i in 0..self.triangles.len() {
            let [a, b, c] = self.triangle_vertices(i);
            v += a.dot(b.cross(c)) / 6.0;
        }
        v
    }

    pub fn transformed(&self, t: &RigidTransform) -> TriangleMesh {
        TriangleMesh {
            positions: self.positions.iter().map(|p| t.apply_point(*p)).collect(),
            triangles: self.triangles.clone(),
            tri_part: self.tri_part.clone(),
        }
    }

    pub fn scaled(&self, s: f64) -> TriangleMesh {
        TriangleMesh {
            positions: self.positions.iter().map(|p| *p * s).collect(),
            triangles: self.triangles.clone(),
            tri_part: self.tri_part.clone(),
        }
    }

    /// Append `other`, remapping its part ids with `part_offset`.
    pub fn merge(&mut self, other: &TriangleMesh, part_offset: u32) {
        let base = self.positions.len() as u32;
        self.positions.extend_from_slice(&other.positions);
        self.triangles
            .extend(other.triangles.iter().map(|t| [t[0] + base, t[1] + base, t[2] + base]));
        self.tri_part.extend(other.tri_part.iter().map(|p| p + part_offset));
    }

    /// Drop every triangle whose part id is in `parts`. Unreferenced
    /// vertices are compacted away so the mesh stays minimal.
    pub fn remove_parts(&mut self, parts: &[u32]) {
        let keep: Vec<usize> = (0..self.triangles.len())
            .filter(|&i| !parts.contains(&self.tri_part[i]))
            .collect();
        let triangles: Vec<[u32; 3]> = keep.iter().map(|&i| self.triangles[i]).collect();
        let tri_part: Vec<u32> = keep.iter().map(|&i| self.tri_part[i]).collect();
        let mut remap = vec![u32::MAX; self.positions.len()];
        let mut positions = Vec::new();
        let mut new_tris = Vec::with_capacity(triangles.len());
        for tri in &triangles {
            let mut t = [0u32; 3];
            for (k, &idx) in tri.iter().enumerate() {
                if remap[idx as usize] == u32::MAX {
                    remap[idx as usize] = positions.len() as u32;
                    positions.push(self.positions[idx as usize]);
                }
                t[k] = remap[idx as usize];
            }
            new_tris.push(t);
        }
        self.positions = positions;
        self.triangles = new_tris;
        self.tri_part = tri_part;
    }

    // --- primitive builders ---

    /// Axis-aligned box between `min` and `max`, one part id for all faces.
    pub fn make_box(min: Vec3, max: Vec3, part: u32) -> TriangleMesh {
        let p = [
            vec3(min.x, min.y, min.z),
            vec3(max.x, min.y, min.z),
            vec3(max.x, max.y, min.z),
            vec3(min.x, max.y, min.z),
            vec3(min.x, min.y, max.z),
            vec3(max.x, min.y, max.z),
            vec3(max.x, max.y, max.z),
            vec3(min.x, max.y, max.z),
        ];
        // Outward-facing CCW winding.
        let quads = [
            [0u32, 3, 2, 1], // bottom (-z)
            [4, 5, 6, 7],    // top (+z)
            [0, 1, 5, 4],    // -y
            [2, 3, 7, 6],    // +y
            [1, 2, 6, 5],    // +x
            [3, 0, 4, 7],    // -x
        ];
        let mut triangles = Vec::with_capacity(12);
        for q in quads {
            triangles.push([q[0], q[1], q[2]]);
            triangles.push([q[0], q[2], q[3]]);
        }
        TriangleMesh {
            positions: p.to_vec(),
            triangles,
            tri_part: vec![part; 12],
        }
    }

    /// Closed cylinder along +z from z=0 to z=height.
    pub fn make_cylinder(radius: f64, height: f64, segments: u32, part: u32) -> TriangleMesh {
        let n = segments.max(3);
        let mut positions = Vec::new();
        for ring in 0..2 {
            let z = ring as f64 * height;
            for i in 0..n {
                let a = i as f64 / n as f64 * std::f64::consts::TAU;
                positions.push(vec3(radius * a.cos(), radius * a.sin(), z));
            }
        }
        let bottom_center = positions.len() as u32;
        positions.push(vec3(0.0, 0.0, 0.0));
        let top_center = positions.len() as u32;
        positions.push(vec3(0.0, 0.0, height));
        let mut triangles = Vec::new();
        for i in 0..n {
            let j = (i + 1) % n;
            triangles.push([i, j, n + j]);
            triangles.push([i, n + j, n + i]);
            triangles.push([bottom_center, j, i]);
            triangles.push([top_center, n + i, n + j]);
        }
        let count = triangles.len();
        TriangleMesh { positions, triangles, tri_part: vec![part; count] }
    }

    /// Surface of revolution around +z. `profile` is (radius, z) pairs from
    /// bottom to top; zero radii pinch the surface closed.
    pub fn make_lathe(profile: &[(f64, f64)], segments: u32, part: u32) -> TriangleMesh {
        assert!(profile.len() >= 2);
        let n = segments.max(3);
        let mut positions = Vec::new();
        for &(r, z) in profile {
            for i in 0..n {
                let a = i as f64 / n as f64 * std::f64::consts::TAU;
                positions.push(vec3(r.max(1e-4) * a.cos(), r.max(1e-4) * a.sin(), z));
            }
        }
        let mut triangles = Vec::new();
        for ring in 0..profile.len() as u32 - 1 {
            let r0 = ring * n;
            let r1 = (ring + 1) * n;
            for i in 0..n {
                let j = (i + 1) % n;
                triangles.push([r0 + i, r0 + j, r1 + j]);
                triangles.push([r0 + i, r1 + j, r1 + i]);
            }
        }
        let count = triangles.len();
        TriangleMesh { positions, triangles, tri_part: vec![part; count] }
    }

    /// Icosphere with the given subdivision level (0 = icosahedron).
    pub fn make_icosphere(radius: f64, subdivisions: u32, part: u32) -> TriangleMesh {
        let t = (1.0 + 5f64.sqrt()) / 2.0;
        let mut positions = vec![
            vec3(-1.0, t, 0.0),
            vec3(1.0, t, 0.0),
            vec3(-1.0, -t, 0.0),
            vec3(1.0, -t, 0.0),
            vec3(0.0, -1.0, t),
            vec3(0.0, 1.0, t),
            vec3(0.0, -1.0, -t),
            vec3(0.0, 1.0, -t),
            vec3(t, 0.0, -1.0),
            vec3(t, 0.0, 1.0),
            vec3(-t, 0.0, -1.0),
            vec3(-t, 0.0, 1.0),
        ];
        for p in &mut positions {
            *p = p.normalized();
        }
        let mut triangles: Vec<[u32; 3]> = vec![
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ];
        for _ in 0..subdivisions {
            let mut midpoints = std::collections::BTreeMap::new();
            let mut next = Vec::with_capacity(triangles.len() * 4);
            let mut midpoint = |a: u32, b: u32, positions: &mut Vec<Vec3>| -> u32 {
                let key = (a.min(b), a.max(b));
                *midpoints.entry(key).or_insert_with(|| {
                    let m = ((positions[a as usize] + positions[b as usize]) * 0.5).normalized();
                    positions.push(m);
                    positions.len() as u32 - 1
                })
            };
            for [a, b, c] in triangles {
                let ab = midpoint(a, b, &mut positions);
                let bc = midpoint(b, c, &mut positions);
                let ca = midpoint(c, a, &mut positions);
                next.push([a, ab, ca]);
                next.push([b, bc, ab]);
                next.push([c, ca, bc]);
                next.push([ab, bc, ca]);
            }
            triangles = next;
        }
        for p in &mut positions {
            *p = *p * radius;
        }
        let count = triangles.len();
        TriangleMesh { positions, triangles, tri_part: vec![part; count] }
    }

    /// Double-sided rectangle card in the xz-plane, base edge centered on
    /// the origin. Both windings are emitted so the card shades from either
    /// side.
    pub fn make_card(width: f64, height: f64, part: u32) -> TriangleMesh {
        let hw = width * 0.5;
        let positions = vec![
            vec3(-hw, 0.0, 0.0),
            vec3(hw, 0.0, 0.0),
            vec3(hw, 0.0, height),
            vec3(-hw, 0.0, height),
        ];
        let triangles = vec![[0u32, 1, 2], [0, 2, 3], [2, 1, 0], [3, 2, 0]];
        TriangleMesh { positions, triangles, tri_part: vec![part; 4] }
    }
}
