//! Nature-scene geometry: fractal heightfield terrain and a Poisson-disk
//! scatter system for bushes, rocks, and trees.

use serde::{Deserialize, Serialize};

use crate::geom::{vec3, TriangleMesh, Vec3};
use crate::noise;
use crate::rng::Pcg32;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TerrainParams {
    /// Grid vertices per side.
    pub grid_n: usize,
    /// Cell size in meters.
    pub cell_m: f64,
    /// Peak-to-valley amplitude in meters.
    pub amplitude_m: f64,
    pub octaves: u32,
    /// Base spatial frequency in 1/m.
    pub frequency: f64,
}

impl Default for TerrainParams {
    fn default() -> Self {
        TerrainParams {
            grid_n: 96,
            cell_m: 1.0,
            amplitude_m: 6.0,
            octaves: 5,
            frequency: 0.02,
        }
    }
}

/// Regular-grid heightfield centered on the origin.
#[derive(Clone, Debug)]
pub struct Heightfield {
    pub grid_n: usize,
    pub cell_m: f64,
    pub heights: Vec<f64>,
}

impl Heightfield {
    fn half_extent(&self) -> f64 {
        (self.grid_n - 1) as f64 * self.cell_m * 0.5
    }

    /// World x/y range covered by the grid.
    pub fn extent(&self) -> (f64, f64) {
        let h = self.half_extent();
        (-h, h)
    }

    #[inline]
    fn grid(&self, ix: usize, iy: usize) -> f64 {
        self.heights[iy * self.grid_n + ix]
    }

    /// Bilinear height lookup, clamped to the grid border.
    pub fn height_at(&self, x: f64, y: f64) -> f64 {
        let h = self.half_extent();
        let gx = ((x + h) / self.cell_m).clamp(0.0, (self.grid_n - 1) as f64 - 1e-9);
        let gy = ((y + h) / self.cell_m).clamp(0.0, (self.grid_n - 1) as f64 - 1e-9);
        let ix = gx as usize;
        let iy = gy as usize;
        let fx = gx - ix as f64;
        let fy = gy - iy as f64;
        let a = self.grid(ix, iy) * (1.0 - fx) + self.grid(ix + 1, iy) * fx;
        let b = self.grid(ix, iy + 1) * (1.0 - fx) + self.grid(ix + 1, iy + 1) * fx;
        a * (1.0 - fy) + b * fy
    }

    /// Surface slope angle in radians from central differences.
    pub fn slope_at(&self, x: f64, y: f64) -> f64 {
        let d = self.cell_m;
        let dzdx = (self.height_at(x + d, y) - self.height_at(x - d, y)) / (2.0 * d);
        let dzdy = (self.height_at(x, y + d) - self.height_at(x, y - d)) / (2.0 * d);
        (dzdx * dzdx + dzdy * dzdy).sqrt().atan()
    }

    /// Triangulated mesh: 2*(n-1)^2 triangles for an n x n grid.
    pub fn to_mesh(&self, part: u32) -> TriangleMesh {
        let n = self.grid_n;
        let h = self.half_extent();
        let mut positions = Vec::with_capacity(n * n);
        for iy in 0..n {
            for ix in 0..n {
                positions.push(vec3(
                    ix as f64 * self.cell_m - h,
                    iy as f64 * self.cell_m - h,
                    self.grid(ix, iy),
                ));
            }
        }
        let mut triangles = Vec::with_capacity(2 * (n - 1) * (n - 1));
        for iy in 0..n - 1 {
            for ix in 0..n - 1 {
                let i00 = (iy * n + ix) as u32;
                let i10 = i00 + 1;
                let i01 = i00 + n as u32;
                let i11 = i01 + 1;
                triangles.push([i00, i10, i11]);
                triangles.push([i00, i11, i01]);
            }
        }
        let count = triangles.len();
        TriangleMesh { positions, triangles, tri_part: vec![part; count] }
    }
}

/// Deterministic multi-octave terrain.
pub fn build_terrain(params: &TerrainParams, rng: &mut Pcg32) -> Heightfield {
    let seed = rng.next_u64();
    let n = params.grid_n.max(2);
    let half = (n - 1) as f64 * params.cell_m * 0.5;
    let mut heights = Vec::with_capacity(n * n);
    for iy in 0..n {
        for ix in 0..n {
            let x = ix as f64 * params.cell_m - half;
            let y = iy as f64 * params.cell_m - half;
            let v = noise::fbm2(seed, x * params.frequency, y * params.frequency, params.octaves.max(1));
            heights.push(v * params.amplitude_m);
        }
    }
    Heightfield { grid_n: n, cell_m: params.cell_m, heights }
}

/// Scatter constraints for one asset kind.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScatterRule {
    pub asset: String,
    pub density_per_m2: f64,
    pub max_slope_deg: f64,
    /// Acceptable terrain height band, meters.
    pub height_range: (f64, f64),
    /// Uniform size multiplier range.
    pub size_jitter: (f64, f64),
    /// Poisson-disk minimum spacing between instances of this rule.
    pub min_distance_m: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScatterInstance {
    pub rule_index: usize,
    pub position: Vec3,
    pub yaw: f64,
    pub scale: f64,
}

/// Poisson-disk placement (dart throwing with a rejection grid) honoring the
/// slope and height constraints of each rule. Instances rest on the surface.
pub fn scatter(terrain: &Heightfield, rules: &[ScatterRule], rng: &mut Pcg32) -> Vec<ScatterInstance> {
    let (lo, hi) = terrain.extent();
    let area = (hi - lo) * (hi - lo);
    let mut out = Vec::new();
    for (rule_index, rule) in rules.iter().enumerate() {
        if rule.density_per_m2 <= 0.0 {
            continue;
        }
        let target = (rule.density_per_m2 * area).round() as usize;
        let mut accepted: Vec<(f64, f64)> = Vec::new();
        let max_slope = rule.max_slope_deg.to_radians();
        let mut attempts = 0usize;
        let attempt_budget = target * 8 + 32;
        while accepted.len() < target && attempts < attempt_budget {
            attempts += 1;
            let x = rng.range(lo, hi);
            let y = rng.range(lo, hi);
            let z = terrain.height_at(x, y);
            if z < rule.height_range.0 || z > rule.height_range.1 {
                continue;
            }
            if terrain.slope_at(x, y) > max_slope {
                continue;
            }
            let r2 = rule.min_distance_m * rule.min_distance_m;
            if accepted.iter().any(|&(ax, ay)| {
                let dx = ax - x;
                let dy = ay - y;
                dx * dx + dy * dy < r2
            }) {
                continue;
            }
            accepted.push((x, y));
            out.push(ScatterInstance {
                rule_index,
                position: vec3(x, y, z),
                yaw: rng.range(0.0, std::f64::consts::TAU),
                scale: rng.range(rule.size_jitter.0, rule.size_jitter.1),
            });
        }
    }
    out
}

/// Default nature scatter mix.
pub fn default_scatter_rules() -> Vec<ScatterRule> {
    vec![
        ScatterRule {
            asset: "tree".into(),
            density_per_m2: 0.004,
            max_slope_deg: 30.0,
            height_range: (-50.0, 50.0),
            size_jitter: (0.8, 1.4),
            min_distance_m: 4.0,
        },
        ScatterRule {
            asset: "bush".into(),
            density_per_m2: 0.012,
            max_slope_deg: 38.0,
            height_range: (-50.0, 50.0),
            size_jitter: (0.7, 1.3),
            min_distance_m: 1.5,
        },
        ScatterRule {
            asset: "rock".into(),
            density_per_m2: 0.01,
            max_slope_deg: 60.0,
            height_range: (-50.0, 50.0),
            size_jitter: (0.5, 1.6),
            min_distance_m: 1.0,
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_amplitude_is_flat_with_up_normals() {
        let params = TerrainParams { amplitude_m: 0.0, grid_n: 16, ..TerrainParams::default() };
        let hf = build_terrain(&params, &mut Pcg32::new(1, 1));
        assert!(hf.heights.iter().all(|&h| h == 0.0));
        let mesh = hf.to_mesh(0);
        for i in 0..mesh.triangles.len() {
            let [a, b, c] = mesh.triangle_vertices(i);
            let n = (b - a).cross(c - a).normalized();
            assert!((n.z - 1.0).abs() < 1e-12, "normal {n:?}");
        }
    }

    #[test]
    fn terrain_is_deterministic() {
        let params = TerrainParams::default();
        let a = build_terrain(&params, &mut Pcg32::from_parts(&[5, 1]));
        let b = build_terrain(&params, &mut Pcg32::from_parts(&[5, 1]));
        assert_eq!(a.heights, b.heights);
        assert!(a.heights.iter().all(|h| h.is_finite()));
    }

    #[test]
    fn triangle_count_matches_grid() {
        let params = TerrainParams { grid_n: 33, ..TerrainParams::default() };
        let hf = build_terrain(&params, &mut Pcg32::new(2, 2));
        let mesh = hf.to_mesh(0);
        assert_eq!(mesh.triangles.len(), 2 * 32 * 32);
        mesh.validate().unwrap();
    }

    #[test]
    fn zero_density_scatters_nothing() {
        let hf = build_terrain(&TerrainParams::default(), &mut Pcg32::new(3, 3));
        let rules = vec![ScatterRule {
            asset: "bush".into(),
            density_per_m2: 0.0,
            max_slope_deg: 45.0,
            height_range: (-10.0, 10.0),
            size_jitter: (1.0, 1.0),
            min_distance_m: 1.0,
        }];
        assert!(scatter(&hf, &rules, &mut Pcg32::new(4, 4)).is_empty());
    }

    #[test]
    fn scatter_respects_min_distance() {
        let hf = build_terrain(&TerrainParams::default(), &mut Pcg32::new(5, 5));
        let rules = vec![ScatterRule {
            asset: "rock".into(),
            density_per_m2: 0.02,
            max_slope_deg: 89.0,
            height_range: (-50.0, 50.0),
            size_jitter: (1.0, 1.0),
            min_distance_m: 2.5,
        }];
        let instances = scatter(&hf, &rules, &mut Pcg32::new(6, 6));
        assert!(instances.len() > 20);
        for i in 0..instances.len() {
            for j in i + 1..instances.len() {
                let d = (instances[i].position - instances[j].position).length();
                let dxy = ((instances[i].position.x - instances[j].position.x).powi(2)
                    + (instances[i].position.y - instances[j].position.y).powi(2))
                .sqrt();
                assert!(dxy >= 2.5, "instances {i},{j} at {d}");
            }
        }
    }

    #[test]
    fn scatter_respects_slope_limit() {
        let hf = build_terrain(
            &TerrainParams { amplitude_m: 14.0, frequency: 0.05, ..TerrainParams::default() },
            &mut Pcg32::new(7, 7),
        );
        let rules = vec![ScatterRule {
            asset: "tree".into(),
            density_per_m2: 0.05,
            max_slope_deg: 20.0,
            height_range: (-50.0, 50.0),
            size_jitter: (1.0, 1.0),
            min_distance_m: 0.5,
        }];
        let instances = scatter(&hf, &rules, &mut Pcg32::new(8, 8));
        assert!(!instances.is_empty());
        for inst in &instances {
            let slope = hf.slope_at(inst.position.x, inst.position.y).to_degrees();
            assert!(slope <= 20.0 + 1e-9, "slope {slope}");
        }
    }

    #[test]
    fn instances_rest_on_surface() {
        let hf = build_terrain(&TerrainParams::default(), &mut Pcg32::new(9, 9));
        let instances = scatter(&hf, &default_scatter_rules(), &mut Pcg32::new(10, 10));
        for inst in &instances {
            let surface = hf.height_at(inst.position.x, inst.position.y);
            assert!((inst.position.z - surface).abs() < 1e-3);
        }
    }
}
