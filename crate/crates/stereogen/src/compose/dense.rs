//! Dense floating-object scenes: one asset set is generated per scene and
//! re-randomized many times (positions, orientations, warp, lighting, and
//! rig baseline), amortizing generation cost across variants.

use crate::assets::{generate_object, normalize_object_size, randomize_materials};
use crate::geom::{vec3, Mat3, PinholeIntrinsics, RigidTransform, StereoRig, TriangleMesh, Vec3};
use crate::noise::warp_field;
use crate::rng::{mix_parts, stage, Pcg32};
use crate::scene::{LightSource, Material, Scene, SceneObject, SceneType};

use super::{random_orientation, recentered, ComposeError, GenConfig};

/// Camera-distance law for dense placements, meters.
pub const DENSE_DISTANCE_RANGE: (f64, f64) = (5.0, 50.0);

/// Low-frequency warp amplitude as a fraction of object extent.
const WARP_AMPLITUDE: f64 = 0.08;

struct PreparedAsset {
    name: String,
    mesh: TriangleMesh,
    part_materials: Vec<(u32, u32)>,
    thin_structure: bool,
}

struct ObjectState {
    pixel: (f64, f64),
    distance: f64,
    orientation: Mat3,
    warp_seed: u64,
}

struct Variant {
    objects: Vec<ObjectState>,
    sky_strength: f64,
    sky_color: [f64; 3],
    point_lights: Vec<(Vec3, f64, [f64; 3])>,
    baseline_m: f64,
}

/// A dense scene: shared assets plus per-variant randomization parameters.
/// Variants are materialized on demand to keep memory flat.
pub struct DenseSceneSet {
    seed: u64,
    scene_index: u32,
    materials: Vec<Material>,
    assets: Vec<PreparedAsset>,
    intrinsics: PinholeIntrinsics,
    camera_pose: RigidTransform,
    variants: Vec<Variant>,
}

pub fn compose_dense_floating(
    config: &GenConfig,
    scene_index: u32,
    rng: &mut Pcg32,
) -> Result<DenseSceneSet, ComposeError> {
    let registry = config.registry()?;
    // Intern asset materials once; variants reuse the same tables.
    let mut material_scene = Scene::empty(SceneType::DenseFloating, 0);
    let mut assets = Vec::with_capacity(config.dense_object_count as usize);
    for index in 0..config.dense_object_count {
        let names = registry.names();
        let name = *rng.pick(&names);
        let mut object = generate_object(&registry, name, rng)?;
        normalize_object_size(&mut object, config.floating_size_range, rng)?;
        randomize_materials(&mut object, &config.material_policy, rng);
        recentered(&mut object);
        let mut part_materials = Vec::with_capacity(object.parts.len());
        for part in &object.parts {
            let id = material_scene.add_material(part.default_material.clone());
            part_materials.push((part.part, id));
        }
        part_materials.sort_unstable_by_key(|&(p, _)| p);
        assets.push(PreparedAsset {
            name: format!("{}.{:03}", object.generator, index),
            mesh: object.mesh,
            part_materials,
            thin_structure: object.thin_structure,
        });
    }

    let intrinsics = PinholeIntrinsics::default_hd();
    let camera_pose = crate::render::look_at(Vec3::ZERO, vec3(0.0, 1.0, 0.0));
    let baseline_range = config.baseline_range(SceneType::DenseFloating);

    let mut variants = Vec::with_capacity(config.dense_rerandomizations as usize);
    for v in 0..config.dense_rerandomizations {
        let mut vr = Pcg32::from_parts(&[config.seed, scene_index as u64, v as u64, stage::VARIANT]);
        let objects = (0..config.dense_object_count)
            .map(|o| ObjectState {
                pixel: (
                    vr.range(0.05, 0.95) * intrinsics.width as f64,
                    vr.range(0.05, 0.95) * intrinsics.height as f64,
                ),
                distance: vr.range(DENSE_DISTANCE_RANGE.0, DENSE_DISTANCE_RANGE.1),
                orientation: random_orientation(&mut vr),
                warp_seed: mix_parts(&[config.seed, scene_index as u64, v as u64, o as u64, 0x77]),
            })
            .collect();
        let k = vr.int_in(0, 5);
        let total = vr.range(250.0, 1250.0);
        let mut point_lights = Vec::new();
        if k > 0 {
            let mut cuts: Vec<f64> = (0..k - 1).map(|_| vr.f64()).collect();
            cuts.sort_by(f64::total_cmp);
            cuts.insert(0, 0.0);
            cuts.push(1.0);
            for i in 0..k as usize {
                let dir = vec3(vr.normal(), vr.normal(), vr.normal().abs()).normalized();
                let pos = camera_pose.translation + dir * vr.range(3.0, 30.0);
                let warmth = vr.range(0.7, 1.0);
                point_lights.push((pos, (cuts[i + 1] - cuts[i]) * total, [1.0, warmth, warmth]));
            }
        }
        variants.push(Variant {
            objects,
            sky_strength: vr.range(0.2, 1.8),
            sky_color: [vr.range(0.5, 1.0), vr.range(0.6, 1.0), vr.range(0.7, 1.0)],
            point_lights,
            baseline_m: vr.range(baseline_range.0, baseline_range.1),
        });
    }

    Ok(DenseSceneSet {
        seed: config.seed,
        scene_index,
        materials: material_scene.materials,
        assets,
        intrinsics,
        camera_pose,
        variants,
    })
}

impl DenseSceneSet {
    pub fn variant_count(&self) -> u32 {
        self.variants.len() as u32
    }

    pub fn object_count(&self) -> u32 {
        self.assets.len() as u32
    }

    /// Build the concrete scene for one variant: warped meshes, frustum
    /// placements rescaled by distance, fresh lighting, and the rig.
    pub fn materialize(&self, variant_index: u32) -> Scene {
        let variant = &self.variants[variant_index as usize];
        let mut scene = Scene::empty(
            SceneType::DenseFloating,
            mix_parts(&[self.seed, self.scene_index as u64, variant_index as u64]),
        );
        scene.materials = self.materials.clone();
        for (k, asset) in self.assets.iter().enumerate() {
            let state = &variant.objects[k];
            let extent = asset.mesh.aabb().extent().max_component();
            let amplitude = WARP_AMPLITUDE * extent;
            let frequency = 1.2 / extent.max(1e-6);
            let mut mesh = asset.mesh.clone();
            for p in &mut mesh.positions {
                *p += warp_field(state.warp_seed, *p, frequency) * amplitude;
            }
            // Far objects grow linearly with distance (anchored at 5 m) so
            // they are not completely hidden by near ones.
            let scale = (state.distance / DENSE_DISTANCE_RANGE.0).max(1.0);
            mesh = mesh.scaled(scale);
            let dir_cam = self.intrinsics.pixel_direction(state.pixel.0, state.pixel.1);
            let center = self.camera_pose.translation + self.camera_pose.apply_vector(dir_cam) * state.distance;
            scene.objects.push(SceneObject {
                id: k as u32 + 1,
                name: asset.name.clone(),
                mesh,
                transform: RigidTransform::from_parts(state.orientation, center),
                part_materials: asset.part_materials.clone(),
                tags: vec![crate::scene::ObjectTag::Floating],
                thin_structure: asset.thin_structure,
            });
        }
        scene.lights.push(LightSource::Environment {
            sky_strength: variant.sky_strength,
            sky_color: variant.sky_color,
        });
        for (position, power_w, color) in &variant.point_lights {
            scene.lights.push(LightSource::Point {
                position: *position,
                power_w: *power_w,
                color: *color,
            });
        }
        scene.rigs.push(
            StereoRig::new(self.intrinsics, self.camera_pose, variant.baseline_m).expect("baseline > 0"),
        );
        scene
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::ObjectTag;

    fn small_config() -> GenConfig {
        GenConfig {
            scene_type: SceneType::DenseFloating,
            dense_object_count: 40,
            dense_rerandomizations: 12,
            seed: 5,
            ..Default::default()
        }
    }

    #[test]
    fn every_variant_has_exactly_the_configured_object_count() {
        let config = small_config();
        let mut rng = Pcg32::new(1, 1);
        let set = compose_dense_floating(&config, 0, &mut rng).unwrap();
        assert_eq!(set.variant_count(), 12);
        for v in 0..set.variant_count() {
            let scene = set.materialize(v);
            let floats = scene.objects.iter().filter(|o| o.has_tag(ObjectTag::Floating)).count();
            assert_eq!(floats, 40);
            scene.validate().unwrap();
        }
    }

    #[test]
    fn distances_and_baselines_in_range() {
        let config = small_config();
        let mut rng = Pcg32::new(2, 2);
        let set = compose_dense_floating(&config, 1, &mut rng).unwrap();
        for v in 0..set.variant_count() {
            let scene = set.materialize(v);
            let cam = scene.rigs[0].left_pose.translation;
            for o in &scene.objects {
                let d = (o.transform.translation - cam).length();
                assert!((5.0..=50.0).contains(&d), "distance {d}");
            }
            let b = scene.rigs[0].baseline_m;
            assert!((0.1..=0.4).contains(&b), "baseline {b}");
        }
    }

    #[test]
    fn materialization_is_deterministic() {
        let config = small_config();
        let a = compose_dense_floating(&config, 2, &mut Pcg32::new(3, 3)).unwrap();
        let b = compose_dense_floating(&config, 2, &mut Pcg32::new(3, 3)).unwrap();
        let sa = a.materialize(7);
        let sb = b.materialize(7);
        assert_eq!(sa.objects.len(), sb.objects.len());
        for (x, y) in sa.objects.iter().zip(&sb.objects) {
            assert_eq!(x.mesh, y.mesh);
            assert_eq!(x.transform, y.transform);
        }
        // Different variants genuinely differ.
        let sc = a.materialize(8);
        assert_ne!(sa.objects[0].transform, sc.objects[0].transform);
    }

    #[test]
    fn screen_size_roughly_constant_across_distance() {
        // The distance rescale keeps mean projected diameter flat within a
        // factor; bucket objects by distance decile and compare.
        let config = GenConfig {
            dense_object_count: 120,
            dense_rerandomizations: 24,
            seed: 9,
            ..small_config()
        };
        let mut rng = Pcg32::new(4, 4);
        let set = compose_dense_floating(&config, 3, &mut rng).unwrap();
        let intr = set.intrinsics;
        let mut decile_sums = [0.0f64; 10];
        let mut decile_counts = [0usize; 10];
        for v in 0..set.variant_count() {
            let scene = set.materialize(v);
            let inv = scene.rigs[0].left_pose.inverse();
            for o in &scene.objects {
                let p_cam = inv.apply_point(o.transform.translation);
                if p_cam.z <= 0.0 {
                    continue;
                }
                let extent = o.world_aabb().extent().max_component();
                let px = intr.fx * extent / p_cam.z;
                let decile = (((p_cam.z - 5.0) / 45.0 * 10.0) as usize).min(9);
                decile_sums[decile] += px;
                decile_counts[decile] += 1;
            }
        }
        let means: Vec<f64> = decile_sums
            .iter()
            .zip(&decile_counts)
            .filter(|(_, &c)| c > 10)
            .map(|(s, &c)| s / c as f64)
            .collect();
        assert!(means.len() >= 8);
        let overall = means.iter().sum::<f64>() / means.len() as f64;
        for m in &means {
            assert!(
                (m - overall).abs() <= 0.5 * overall,
                "decile mean {m} vs overall {overall}"
            );
        }
    }
}
