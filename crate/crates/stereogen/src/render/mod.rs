//! CPU path tracer producing stereo RGB plus ground-truth auxiliary buffers.
//!
//! Rendering is tile-parallel over a frozen scene. Every pixel derives its
//! own RNG stream from (seed, camera pose, pixel, sample), so output is
//! bit-identical no matter how many threads run. Ground-truth buffers come
//! from the single center primary ray and are independent of sample count
//! and the denoise flag.

mod denoise;
mod pathtracer;

pub use denoise::denoise;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geom::{vec3, Bvh, PinholeIntrinsics, Ray, RigidTransform, SceneTri, StereoRig, StereoView, Vec3};
use crate::rng::{mix_parts, Pcg32};
use crate::scene::{LightSource, Material, Scene};

/// Fixed exposure mapping watt-scale point lights into render units, chosen
/// so a room lit by ~800 W total renders around mid-gray (0.18).
pub const RADIOMETRIC_EXPOSURE: f64 = 0.07;

/// Per-sample radiance clamp. Clamped samples are counted, never dropped.
pub const DEFAULT_FIREFLY_CLAMP: f64 = 50.0;

#[derive(Copy, Clone, Debug, Serialize, Deserialize)]
pub struct RenderSettings {
    pub spp: u32,
    pub max_bounces: u32,
    pub width: u32,
    pub height: u32,
    pub denoise: bool,
    /// Scheduling granularity in pixels; has no effect on output.
    pub tile: u32,
    pub seed: u64,
    pub firefly_clamp: f64,
}

impl Default for RenderSettings {
    fn default() -> Self {
        RenderSettings {
            spp: 1024,
            max_bounces: 6,
            width: 1280,
            height: 720,
            denoise: true,
            tile: 32,
            seed: 0,
            firefly_clamp: DEFAULT_FIREFLY_CLAMP,
        }
    }
}

/// Per-view render output. `depth` is camera-frame z in meters with +inf on
/// environment hits; id buffers use 0 for the environment.
#[derive(Clone, Debug)]
pub struct FrameBuffers {
    pub width: u32,
    pub height: u32,
    pub rgb: Vec<[f32; 3]>,
    pub depth: Vec<f32>,
    pub object_id: Vec<u32>,
    pub material_id: Vec<u32>,
    pub normal: Vec<[f32; 3]>,
    pub albedo: Vec<[f32; 3]>,
    /// Samples clipped by the firefly clamp, for the ledger.
    pub clamped_samples: u64,
}

impl FrameBuffers {
    #[inline]
    pub fn idx(&self, x: u32, y: u32) -> usize {
        (y * self.width + x) as usize
    }

    pub fn pixel_count(&self) -> usize {
        (self.width * self.height) as usize
    }

    pub fn mean_intensity(&self) -> f64 {
        let sum: f64 = self
            .rgb
            .iter()
            .map(|c| (c[0] as f64 + c[1] as f64 + c[2] as f64) / 3.0)
            .sum();
        sum / self.pixel_count() as f64
    }
}

#[derive(Clone, Debug)]
pub(crate) enum FrozenLight {
    Point {
        position: Vec3,
        /// Radiant intensity per channel, render units.
        intensity: [f64; 3],
    },
    Area {
        origin: Vec3,
        edge_u: Vec3,
        edge_v: Vec3,
        normal: Vec3,
        area: f64,
        radiance: [f64; 3],
    },
}

#[derive(Clone, Debug)]
pub(crate) struct RenderMaterial {
    pub kind: crate::scene::MaterialKind,
    pub albedo: [f64; 3],
    pub roughness: f64,
    pub ior: f64,
    pub emission: [f64; 3],
    pub noise_scale: f64,
    pub noise_amount: f64,
    pub noise_seed: u64,
}

impl RenderMaterial {
    fn from_material(m: &Material, scene_seed: u64) -> RenderMaterial {
        RenderMaterial {
            kind: m.kind,
            albedo: m.albedo,
            roughness: m.roughness.clamp(0.01, 1.0),
            ior: m.ior.max(1.0001),
            emission: m.emission,
            noise_scale: m.noise_scale,
            noise_amount: m.noise_amount,
            noise_seed: mix_parts(&[scene_seed, m.id as u64, 0x4d41]),
        }
    }

    /// Albedo with the material's procedural 3D noise applied at `p`.
    #[inline]
    pub fn albedo_at(&self, p: Vec3) -> [f64; 3] {
        if self.noise_amount <= 0.0 {
            return self.albedo;
        }
        let n = crate::noise::value_noise3(self.noise_seed, p * self.noise_scale);
        let gain = 1.0 + self.noise_amount * n;
        [
            (self.albedo[0] * gain).clamp(0.0, 1.0),
            (self.albedo[1] * gain).clamp(0.0, 1.0),
            (self.albedo[2] * gain).clamp(0.0, 1.0),
        ]
    }
}

/// Immutable render-ready scene: flattened world-space triangles under one
/// BVH plus resolved material and light tables. Shareable across threads.
pub struct FrozenScene {
    pub(crate) bvh: Option<Bvh>,
    pub(crate) materials: Vec<RenderMaterial>,
    /// Public material id -> dense index into `materials`.
    mat_index: Vec<u32>,
    pub(crate) lights: Vec<FrozenLight>,
    pub(crate) env: Option<(f64, [f64; 3])>,
    pub seed: u64,
}

impl FrozenScene {
    pub fn freeze(scene: &Scene) -> FrozenScene {
        let mut tris: Vec<SceneTri> = Vec::new();
        for obj in &scene.objects {
            for i in 0..obj.mesh.triangles.len() {
                let [v0, v1, v2] = obj.mesh.triangle_vertices(i);
                let part = obj.mesh.tri_part[i];
                let material_id = obj.material_for_part(part).unwrap_or(0);
                tris.push(SceneTri {
                    v0: obj.transform.apply_point(v0),
                    v1: obj.transform.apply_point(v1),
                    v2: obj.transform.apply_point(v2),
                    data: crate::geom::HitData { object_id: obj.id, material_id, part_id: part },
                });
            }
        }
        let bvh = if tris.is_empty() { None } else { Some(Bvh::build(tris).expect("nonempty")) };
        let max_id = scene.materials.iter().map(|m| m.id).max().unwrap_or(0);
        let mut mat_index = vec![u32::MAX; max_id as usize + 1];
        let mut materials = Vec::with_capacity(scene.materials.len());
        for m in &scene.materials {
            mat_index[m.id as usize] = materials.len() as u32;
            materials.push(RenderMaterial::from_material(m, scene.seed));
        }
        let mut lights = Vec::new();
        for light in &scene.lights {
            match light {
                LightSource::Point { position, power_w, color } => {
                    let base = power_w * RADIOMETRIC_EXPOSURE / (4.0 * std::f64::consts::PI);
                    lights.push(FrozenLight::Point {
                        position: *position,
                        intensity: [base * color[0], base * color[1], base * color[2]],
                    });
                }
                LightSource::Area { origin, edge_u, edge_v, radiance } => {
                    let cross = edge_u.cross(*edge_v);
                    let area = cross.length();
                    if area > 0.0 {
                        lights.push(FrozenLight::Area {
                            origin: *origin,
                            edge_u: *edge_u,
                            edge_v: *edge_v,
                            normal: cross / area,
                            area,
                            radiance: *radiance,
                        });
                    }
                }
                LightSource::Environment { .. } => {}
            }
        }
        FrozenScene {
            bvh,
            materials,
            mat_index,
            lights,
            env: scene.environment(),
            seed: scene.seed,
        }
    }

    #[inline]
    pub(crate) fn material(&self, public_id: u32) -> Option<&RenderMaterial> {
        let idx = *self.mat_index.get(public_id as usize)?;
        self.materials.get(idx as usize)
    }

    /// Environment radiance; the sky is uniform by design so the furnace
    /// identity holds exactly.
    #[inline]
    pub(crate) fn env_radiance(&self) -> [f64; 3] {
        match self.env {
            Some((strength, color)) => [color[0] * strength, color[1] * strength, color[2] * strength],
            None => [0.0; 3],
        }
    }

    #[inline]
    pub(crate) fn intersect(&self, ray: &Ray) -> Option<crate::geom::Hit> {
        self.bvh.as_ref().and_then(|b| b.intersect(ray, f64::INFINITY))
    }

    #[inline]
    pub(crate) fn occluded(&self, ray: &Ray, t_max: f64) -> bool {
        self.bvh.as_ref().map(|b| b.intersect_any(ray, t_max)).unwrap_or(false)
    }
}

/// A camera ready to render: pose plus a stream key derived from the pose
/// bits, so coincident cameras (zero-baseline rigs) replay identical noise.
#[derive(Copy, Clone, Debug)]
pub struct RenderCamera {
    pub intrinsics: PinholeIntrinsics,
    pub pose: RigidTransform,
    pub pose_key: u64,
}

impl RenderCamera {
    pub fn new(intrinsics: PinholeIntrinsics, pose: RigidTransform) -> RenderCamera {
        let mut parts = Vec::with_capacity(12);
        for row in pose.rotation.0 {
            for v in row {
                parts.push(v.to_bits());
            }
        }
        parts.push(pose.translation.x.to_bits());
        parts.push(pose.translation.y.to_bits());
        parts.push(pose.translation.z.to_bits());
        RenderCamera { intrinsics, pose, pose_key: mix_parts(&parts) }
    }

    pub fn from_rig(rig: &StereoRig, view: StereoView) -> RenderCamera {
        RenderCamera::new(rig.intrinsics, rig.pose(view))
    }
}

struct PixelOut {
    rgb: [f32; 3],
    depth: f32,
    object_id: u32,
    material_id: u32,
    normal: [f32; 3],
    albedo: [f32; 3],
    clamped: u32,
}

/// Stratum grid for power-of-two sample counts; other counts fall back to
/// independent uniform jitter.
fn strata(spp: u32) -> (u32, u32) {
    if spp.is_power_of_two() {
        let k = spp.trailing_zeros();
        (1 << k.div_ceil(2), 1 << (k / 2))
    } else {
        (1, 1)
    }
}

/// Render one view. Ground truth (depth, ids, normal, albedo) comes from the
/// pixel-center ray; RGB averages `spp` stratified samples.
pub fn render(scene: &FrozenScene, camera: &RenderCamera, settings: &RenderSettings) -> FrameBuffers {
    let width = settings.width;
    let height = settings.height;
    let n = (width * height) as usize;
    let (sx, sy) = strata(settings.spp);
    let chunk = (settings.tile.max(1) as usize).pow(2);
    let pixels: Vec<PixelOut> = (0..n)
        .into_par_iter()
        .with_min_len(chunk)
        .map(|i| {
            let px = (i as u32) % width;
            let py = (i as u32) / width;
            shade_pixel(scene, camera, settings, px, py, sx, sy)
        })
        .collect();
    let mut out = FrameBuffers {
        width,
        height,
        rgb: Vec::with_capacity(n),
        depth: Vec::with_capacity(n),
        object_id: Vec::with_capacity(n),
        material_id: Vec::with_capacity(n),
        normal: Vec::with_capacity(n),
        albedo: Vec::with_capacity(n),
        clamped_samples: 0,
    };
    for p in pixels {
        out.rgb.push(p.rgb);
        out.depth.push(p.depth);
        out.object_id.push(p.object_id);
        out.material_id.push(p.material_id);
        out.normal.push(p.normal);
        out.albedo.push(p.albedo);
        out.clamped_samples += p.clamped as u64;
    }
    if settings.denoise {
        out.rgb = denoise::denoise(width, height, &out.rgb, &out.albedo, &out.normal);
    }
    out
}

fn shade_pixel(
    scene: &FrozenScene,
    camera: &RenderCamera,
    settings: &RenderSettings,
    px: u32,
    py: u32,
    sx: u32,
    sy: u32,
) -> PixelOut {
    let intr = &camera.intrinsics;
    let pixel_index = (py * settings.width + px) as u64;

    // Ground truth from the center primary ray.
    let center_dir_cam = intr.pixel_direction(px as f64 + 0.5, py as f64 + 0.5);
    let center_ray = Ray::new(camera.pose.translation, camera.pose.apply_vector(center_dir_cam));
    let mut depth = f32::INFINITY;
    let mut object_id = 0u32;
    let mut material_id = 0u32;
    let mut normal = [0.0f32; 3];
    let mut albedo = {
        let e = scene.env_radiance();
        [e[0] as f32, e[1] as f32, e[2] as f32]
    };
    if let Some(hit) = scene.intersect(&center_ray) {
        depth = (hit.t * center_dir_cam.z) as f32;
        object_id = hit.data.object_id;
        material_id = hit.data.material_id;
        normal = [hit.normal.x as f32, hit.normal.y as f32, hit.normal.z as f32];
        if let Some(mat) = scene.material(hit.data.material_id) {
            let a = mat.albedo_at(center_ray.at(hit.t));
            albedo = [a[0] as f32, a[1] as f32, a[2] as f32];
        }
    }

    let mut acc = [0.0f64; 3];
    let mut clamped = 0u32;
    for s in 0..settings.spp {
        let mut rng = Pcg32::from_parts(&[settings.seed, camera.pose_key, pixel_index, s as u64]);
        let (ju, jv) = if sx > 1 || sy > 1 {
            let cell = s % (sx * sy);
            let cx = (cell % sx) as f64;
            let cy = (cell / sx) as f64;
            ((cx + rng.f64()) / sx as f64, (cy + rng.f64()) / sy as f64)
        } else {
            (rng.f64(), rng.f64())
        };
        let dir_cam = intr.pixel_direction(px as f64 + ju, py as f64 + jv);
        let ray = Ray::new(camera.pose.translation, camera.pose.apply_vector(dir_cam));
        let mut sample = pathtracer::trace(scene, ray, &mut rng, settings.max_bounces);
        for c in sample.iter_mut() {
            if !c.is_finite() || *c < 0.0 {
                *c = 0.0;
                clamped += 1;
            } else if *c > settings.firefly_clamp {
                *c = settings.firefly_clamp;
                clamped += 1;
            }
        }
        acc[0] += sample[0];
        acc[1] += sample[1];
        acc[2] += sample[2];
    }
    let inv = 1.0 / settings.spp as f64;
    PixelOut {
        rgb: [(acc[0] * inv) as f32, (acc[1] * inv) as f32, (acc[2] * inv) as f32],
        depth,
        object_id,
        material_id,
        normal,
        albedo,
        clamped,
    }
}

/// Render both views of a rig. The two views use RNG streams keyed by their
/// camera poses, so a zero-baseline test rig reproduces identical buffers.
pub fn render_stereo(
    scene: &FrozenScene,
    rig: &StereoRig,
    settings: &RenderSettings,
) -> (FrameBuffers, FrameBuffers) {
    let left = render(scene, &RenderCamera::from_rig(rig, StereoView::Left), settings);
    let right = render(scene, &RenderCamera::from_rig(rig, StereoView::Right), settings);
    (left, right)
}

/// Look-at pose helper: camera at `eye` looking toward `target`, with world
/// +z as up; camera x points right, y down, z forward.
pub fn look_at(eye: Vec3, target: Vec3) -> RigidTransform {
    let forward = (target - eye).normalized();
    let world_up = if forward.z.abs() > 0.999 { vec3(0.0, 1.0, 0.0) } else { vec3(0.0, 0.0, 1.0) };
    let right = forward.cross(world_up).normalized();
    let down = forward.cross(right).normalized();
    RigidTransform::from_parts(crate::geom::Mat3::from_cols(right, down, forward), eye)
}

#[cfg(test)]
mod tests;
