//! Lighting augmentation: random point lights with a shared power budget,
//! occasional ceiling removal for sky light, and ceiling-light dimming.

use crate::geom::{vec3, Vec3};
use crate::rng::Pcg32;
use crate::scene::{LightSource, Scene};

pub const POINT_LIGHT_MAX: u32 = 5;
pub const TOTAL_POWER_RANGE_W: (f64, f64) = (250.0, 1250.0);
pub const CEILING_REMOVE_PROB: f64 = 0.3;
pub const CEILING_DIM_PROB: f64 = 0.2;

#[derive(Clone, Debug, Default)]
pub struct LightingOutcome {
    pub point_lights: u32,
    pub total_power_w: f64,
    pub ceiling_removed: bool,
    pub ceiling_dimmed: bool,
}

fn free_position(scene: &Scene, region: (Vec3, Vec3), rng: &mut Pcg32) -> Vec3 {
    for _ in 0..30 {
        let p = vec3(
            rng.range(region.0.x, region.1.x),
            rng.range(region.0.y, region.1.y),
            rng.range(region.0.z, region.1.z),
        );
        let blocked = scene
            .objects
            .iter()
            .filter(|o| !o.has_tag(crate::scene::ObjectTag::Architecture))
            .any(|o| o.world_aabb().contains_point(p));
        if !blocked {
            return p;
        }
    }
    vec3(
        rng.range(region.0.x, region.1.x),
        rng.range(region.0.y, region.1.y),
        rng.range(region.0.z, region.1.z),
    )
}

/// Add 0..=5 point lights with total power uniform in [250, 1250] W split
/// uniformly at random, remove the ceiling with probability 0.3, and dim or
/// recolor ceiling lights with probability 0.2.
pub fn augment_lighting(scene: &mut Scene, rng: &mut Pcg32) -> LightingOutcome {
    let mut outcome = LightingOutcome::default();
    let region = match &scene.room {
        Some(room) => {
            let r = room.interior();
            (r.min + vec3(0.3, 0.3, 0.3), r.max - vec3(0.3, 0.3, 0.3))
        }
        None => {
            let b = scene.bounds();
            if b.is_empty() {
                (vec3(-5.0, -5.0, 0.5), vec3(5.0, 5.0, 4.0))
            } else {
                (b.min, b.max)
            }
        }
    };

    let k = rng.int_in(0, POINT_LIGHT_MAX);
    let total = rng.range(TOTAL_POWER_RANGE_W.0, TOTAL_POWER_RANGE_W.1);
    outcome.point_lights = k;
    outcome.total_power_w = total;
    if k > 0 {
        // Uniform random split: sorted cut points carve the budget.
        let mut cuts: Vec<f64> = (0..k - 1).map(|_| rng.f64()).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.insert(0, 0.0);
        cuts.push(1.0);
        for i in 0..k as usize {
            let share = (cuts[i + 1] - cuts[i]) * total;
            let position = free_position(scene, region, rng);
            let warmth = rng.range(0.7, 1.0);
            scene.lights.push(LightSource::Point {
                position,
                power_w: share,
                color: [1.0, warmth, warmth * rng.range(0.6, 1.0)],
            });
        }
    }

    let has_ceiling = scene.room.as_ref().map(|r| r.ceiling_object.is_some()).unwrap_or(false);
    if has_ceiling && rng.chance(CEILING_REMOVE_PROB) {
        scene.remove_ceiling().expect("ceiling present");
        outcome.ceiling_removed = true;
    }

    if rng.chance(CEILING_DIM_PROB) {
        outcome.ceiling_dimmed = true;
        let factor = rng.range(0.05, 0.5);
        let tint = [1.0, rng.range(0.5, 1.0), rng.range(0.4, 1.0)];
        let indices = scene.room.as_ref().map(|r| r.ceiling_lights.clone()).unwrap_or_default();
        let mut emissive_scale: Vec<(usize, [f64; 3])> = Vec::new();
        for idx in indices {
            if let Some(LightSource::Area { radiance, .. }) = scene.lights.get_mut(idx) {
                for (c, t) in radiance.iter_mut().zip(tint) {
                    *c *= factor * t;
                }
                emissive_scale.push((idx, tint));
            }
        }
        // Keep emissive panel geometry in sync with the light records.
        if !emissive_scale.is_empty() {
            for m in scene.materials.iter_mut() {
                if m.kind == crate::scene::MaterialKind::Emissive {
                    for (c, t) in m.emission.iter_mut().zip(tint) {
                        *c *= factor * t;
                    }
                }
            }
        }
    }
    outcome
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::SceneType;

    fn stub_room_scene() -> Scene {
        use crate::geom::{RigidTransform, TriangleMesh};
        use crate::scene::{Material, ObjectTag, RoomRecord, SceneObject};
        let mut scene = Scene::empty(SceneType::IndoorFloating, 1);
        let mat = scene.add_material(Material::diffuse(0, "plaster", [0.7; 3]));
        scene.objects.push(SceneObject {
            id: 1,
            name: "ceiling.001".into(),
            mesh: TriangleMesh::make_box(vec3(-2.0, -2.0, 2.5), vec3(2.0, 2.0, 2.6), 0),
            transform: RigidTransform::IDENTITY,
            part_materials: vec![(0, mat)],
            tags: vec![ObjectTag::Architecture],
            thin_structure: false,
        });
        scene.room = Some(RoomRecord {
            ceiling_object: Some(1),
            ceiling_lights: vec![],
            interior_min: vec3(-2.0, -2.0, 0.0),
            interior_max: vec3(2.0, 2.0, 2.5),
        });
        scene
    }

    #[test]
    fn point_light_count_uniform_and_power_in_range() {
        let mut rng = Pcg32::new(10, 1);
        let draws = 10_000;
        let mut counts = [0usize; 6];
        for _ in 0..draws {
            let mut scene = stub_room_scene();
            let out = augment_lighting(&mut scene, &mut rng);
            counts[out.point_lights as usize] += 1;
            assert!(out.total_power_w >= 250.0 && out.total_power_w <= 1250.0);
            // The split conserves the budget exactly.
            let placed: f64 = scene
                .lights
                .iter()
                .filter_map(|l| match l {
                    LightSource::Point { power_w, .. } => Some(*power_w),
                    _ => None,
                })
                .sum();
            if out.point_lights > 0 {
                assert!((placed - out.total_power_w).abs() < 1e-9);
            }
        }
        let expect = draws as f64 / 6.0;
        let sigma = (expect * (5.0 / 6.0)).sqrt();
        for &c in &counts {
            assert!((c as f64 - expect).abs() < 4.0 * sigma, "count {c} vs {expect}");
        }
    }

    #[test]
    fn ceiling_removal_frequency_matches() {
        let mut rng = Pcg32::new(11, 2);
        let draws = 10_000;
        let mut removed = 0usize;
        for _ in 0..draws {
            let mut scene = stub_room_scene();
            if augment_lighting(&mut scene, &mut rng).ceiling_removed {
                removed += 1;
                assert!(scene.objects.iter().all(|o| o.id != 1));
            }
        }
        let f = removed as f64 / draws as f64;
        assert!((f - 0.3).abs() < 0.02, "removal frequency {f}");
    }
}
