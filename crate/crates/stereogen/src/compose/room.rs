//! Room shell construction and the background layout solvers.
//!
//! The greedy solver is pure insertion with rejection sampling: every step
//! attempts one placement and consumes the step whether or not it sticks,
//! so the placed count is monotone in the budget and a shorter budget is a
//! prefix of a longer one under the same seed. The full solver runs
//! simulated annealing with insert/move/rotate/remove moves over the same
//! constraint set (T: 1.0 -> 0.01, geometric).

use serde::{Deserialize, Serialize};

use crate::assets::{generate_object, PlacementSlot, Registry};
use crate::geom::{vec3, Aabb, Mat3, RigidTransform, TriangleMesh, Vec3};
use crate::rng::{stage, Pcg32};
use crate::scene::{
    LightSource, Material, MaterialKind, ObjectTag, RoomRecord, Scene, SceneObject, SceneType,
};

use super::{add_generated, ComposeError, GenConfig, LightingMode};

/// Minimum clearance between placed background objects, meters.
pub const PLACEMENT_CLEARANCE_M: f64 = 0.05;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    Greedy,
    Full,
}

/// Rectangular room shell with window and door openings.
#[derive(Clone, Debug)]
pub struct RoomShell {
    pub width: f64,
    pub depth: f64,
    pub height: f64,
    /// Interior region available for placement.
    pub interior: Aabb,
}

fn wall_material(rng: &mut Pcg32) -> Material {
    let tone = rng.range(0.45, 0.85);
    let tint = [tone, tone * rng.range(0.9, 1.0), tone * rng.range(0.85, 1.0)];
    Material::diffuse(0, &format!("plaster_{:04x}", rng.next_u32() & 0xffff), tint)
        .with_noise(rng.range(2.0, 8.0), rng.range(0.05, 0.25))
}

fn floor_material(rng: &mut Pcg32) -> Material {
    let shade = rng.range(0.25, 0.6);
    Material::diffuse(
        0,
        &format!("floorboard_{:04x}", rng.next_u32() & 0xffff),
        [shade, shade * 0.72, shade * 0.45],
    )
    .with_noise(rng.range(6.0, 18.0), rng.range(0.2, 0.45))
}

fn add_slab(scene: &mut Scene, name: &str, min: Vec3, max: Vec3, material: Material, tags: Vec<ObjectTag>) -> u32 {
    let id = scene.next_object_id();
    let mat = scene.add_material(material);
    scene.objects.push(SceneObject {
        id,
        name: format!("{name}.{id:03}"),
        mesh: TriangleMesh::make_box(min, max, 0),
        transform: RigidTransform::IDENTITY,
        part_materials: vec![(0, mat)],
        tags,
        thin_structure: false,
    });
    id
}

/// Wall segments around an opening: left pier, right pier, lintel above,
/// and (for windows) a sill piece below.
#[allow(clippy::too_many_arguments)]
fn add_wall_with_opening(
    scene: &mut Scene,
    material: &Material,
    // Wall runs along `axis` (0 = x, 1 = y) at fixed coordinate `at`.
    axis: usize,
    at: f64,
    from: f64,
    to: f64,
    height: f64,
    thickness: f64,
    opening: Option<(f64, f64, f64, f64)>, // (start, end, z0, z1) along the wall
) {
    let make = |scene: &mut Scene, a: f64, b: f64, z0: f64, z1: f64, material: Material| {
        if b - a <= 1e-6 || z1 - z0 <= 1e-6 {
            return;
        }
        let (min, max) = if axis == 0 {
            (vec3(a, at - thickness * 0.5, z0), vec3(b, at + thickness * 0.5, z1))
        } else {
            (vec3(at - thickness * 0.5, a, z0), vec3(at + thickness * 0.5, b, z1))
        };
        add_slab(scene, "wall", min, max, material, vec![ObjectTag::Architecture]);
    };
    match opening {
        None => make(scene, from, to, 0.0, height, material.clone()),
        Some((s, e, z0, z1)) => {
            make(scene, from, s, 0.0, height, material.clone());
            make(scene, e, to, 0.0, height, material.clone());
            make(scene, s, e, z1, height, material.clone());
            make(scene, s, e, 0.0, z0, material.clone());
        }
    }
}

fn window_glass_material(rng: &mut Pcg32) -> Material {
    Material {
        id: 0,
        name: format!("window_glass_{:04x}", rng.next_u32() & 0xffff),
        kind: MaterialKind::Glass,
        albedo: [0.94, 0.96, 0.94],
        roughness: 0.05,
        ior: 1.5,
        emission: [0.0; 3],
        noise_scale: 0.0,
        noise_amount: 0.0,
    }
}

/// Build the architectural shell, ceiling lights, and environment light.
pub fn build_room(scene: &mut Scene, rng: &mut Pcg32) -> RoomShell {
    let width = rng.range(4.5, 6.5);
    let depth = rng.range(4.0, 6.0);
    let height = rng.range(2.5, 3.0);
    let hw = width * 0.5;
    let hd = depth * 0.5;
    let t = 0.1;
    let wall_mat = wall_material(rng);

    add_slab(
        scene,
        "floor",
        vec3(-hw - t, -hd - t, -t),
        vec3(hw + t, hd + t, 0.0),
        floor_material(rng),
        vec![ObjectTag::Architecture],
    );
    let ceiling_id = add_slab(
        scene,
        "ceiling",
        vec3(-hw - t, -hd - t, height),
        vec3(hw + t, hd + t, height + t),
        wall_material(rng),
        vec![ObjectTag::Architecture],
    );

    // Window on one wall; door opening on another; two blank walls.
    let window_wall = rng.below(4);
    let door_wall = (window_wall + 1 + rng.below(3)) % 4;
    for wall in 0..4 {
        let (axis, at, from, to) = match wall {
            0 => (0usize, -hd, -hw, hw),
            1 => (0usize, hd, -hw, hw),
            2 => (1usize, -hw, -hd, hd),
            _ => (1usize, hw, -hd, hd),
        };
        let span = to - from;
        let opening = if wall == window_wall {
            let w = rng.range(1.0, span.min(2.4) - 0.8);
            let start = rng.range(from + 0.4, to - 0.4 - w);
            let z0 = rng.range(0.8, 1.1);
            let z1 = (z0 + rng.range(1.0, 1.4)).min(height - 0.3);
            Some((start, start + w, z0, z1))
        } else if wall == door_wall {
            let w = rng.range(0.85, 1.1);
            let start = rng.range(from + 0.4, to - 0.4 - w);
            Some((start, start + w, 0.0, rng.range(1.95, 2.15)))
        } else {
            None
        };
        add_wall_with_opening(scene, &wall_mat, axis, at, from, to, height, t, opening);
        if wall == window_wall {
            // Glass pane filling the opening; deletable as ground-truth policy.
            let (s, e, z0, z1) = opening.unwrap();
            let pane_mat = window_glass_material(rng);
            let (min, max) = if axis == 0 {
                (vec3(s, at - 0.01, z0), vec3(e, at + 0.01, z1))
            } else {
                (vec3(at - 0.01, s, z0), vec3(at + 0.01, e, z1))
            };
            let mat_id = scene.add_material(pane_mat);
            let id = scene.next_object_id();
            scene.objects.push(SceneObject {
                id,
                name: format!("window_pane.{id:03}"),
                mesh: TriangleMesh::make_box(min, max, 0),
                transform: RigidTransform::IDENTITY,
                part_materials: vec![(0, mat_id)],
                tags: vec![ObjectTag::Architecture, ObjectTag::WindowGlass],
                thin_structure: false,
            });
        } else if wall == door_wall && rng.chance(0.7) {
            // Closed door leaf; otherwise the doorway stays open.
            let (s, e, _, z1) = opening.unwrap();
            let leaf = wall_material(rng);
            let (min, max) = if axis == 0 {
                (vec3(s, at - 0.02, 0.0), vec3(e, at + 0.02, z1))
            } else {
                (vec3(at - 0.02, s, 0.0), vec3(at + 0.02, e, z1))
            };
            add_slab(scene, "door", min, max, leaf, vec![ObjectTag::Architecture]);
        }
    }

    // Ceiling light panels: emissive geometry paired with area-light records.
    let n_lights = rng.int_in(1, 3);
    let mut ceiling_lights = Vec::new();
    for _ in 0..n_lights {
        let lw = rng.range(0.5, 1.2);
        let ld = rng.range(0.4, 0.8);
        let cx = rng.range(-hw + 1.0, hw - 1.0);
        let cy = rng.range(-hd + 1.0, hd - 1.0);
        let radiance = rng.range(4.0, 9.0);
        let color = [radiance, radiance * rng.range(0.9, 1.0), radiance * rng.range(0.8, 0.95)];
        let mat_id = scene.add_material(Material {
            id: 0,
            name: format!("panel_light_{:04x}", rng.next_u32() & 0xffff),
            kind: MaterialKind::Emissive,
            albedo: [1.0; 3],
            roughness: 1.0,
            ior: 1.0,
            emission: color,
            noise_scale: 0.0,
            noise_amount: 0.0,
        });
        let z = height - 0.02;
        let id = scene.next_object_id();
        scene.objects.push(SceneObject {
            id,
            name: format!("ceiling_light.{id:03}"),
            mesh: TriangleMesh::make_box(
                vec3(cx - lw * 0.5, cy - ld * 0.5, z),
                vec3(cx + lw * 0.5, cy + ld * 0.5, z + 0.02),
                0,
            ),
            transform: RigidTransform::IDENTITY,
            part_materials: vec![(0, mat_id)],
            tags: vec![ObjectTag::Architecture],
            thin_structure: false,
        });
        ceiling_lights.push(scene.lights.len());
        // Edge order makes the emitting normal face down into the room.
        scene.lights.push(LightSource::Area {
            origin: vec3(cx - lw * 0.5, cy - ld * 0.5, z - 1e-4),
            edge_u: vec3(0.0, ld, 0.0),
            edge_v: vec3(lw, 0.0, 0.0),
            radiance: color,
        });
    }

    scene.lights.push(LightSource::Environment {
        sky_strength: rng.range(0.4, 1.2),
        sky_color: [0.7, 0.82, 1.0],
    });

    let interior = Aabb::new(vec3(-hw, -hd, 0.0), vec3(hw, hd, height));
    scene.room = Some(RoomRecord {
        ceiling_object: Some(ceiling_id),
        ceiling_lights,
        interior_min: interior.min,
        interior_max: interior.max,
    });
    RoomShell { width, depth, height, interior }
}

#[derive(Copy, Clone, Debug, Default)]
pub struct SolveOutcome {
    pub placed: u32,
    pub steps: u32,
}

struct Candidate {
    name: &'static str,
    object: crate::assets::GeneratedObject,
    transform: RigidTransform,
    aabb: Aabb,
}

/// Try to position `object` in the room; returns the transform and world
/// AABB when the constraints hold.
fn position_candidate(
    object: &crate::assets::GeneratedObject,
    slot: PlacementSlot,
    room: &RoomShell,
    existing: &[Aabb],
    rng: &mut Pcg32,
) -> Option<(RigidTransform, Aabb)> {
    let local = object.mesh.aabb();
    let yaw = if rng.chance(0.5) {
        // Axis-aligned placements read as deliberate furniture arrangement.
        rng.below(4) as f64 * std::f64::consts::FRAC_PI_2
    } else {
        rng.range(0.0, std::f64::consts::TAU)
    };
    let rot = Mat3::rot_z(yaw);
    let (transform, world) = match slot {
        PlacementSlot::Floor => {
            let x = rng.range(room.interior.min.x + 0.2, room.interior.max.x - 0.2);
            let y = rng.range(room.interior.min.y + 0.2, room.interior.max.y - 0.2);
            let t = RigidTransform::from_parts(rot, vec3(x, y, 0.0));
            let mut bb = Aabb::empty();
            for corner in aabb_corners(&local) {
                bb.grow(t.apply_point(corner));
            }
            (t, bb)
        }
        PlacementSlot::Wall => {
            let wall = rng.below(4);
            let z = rng.range(1.1, 1.7);
            let (pos, yaw) = match wall {
                0 => (vec3(rng.range(room.interior.min.x + 0.5, room.interior.max.x - 0.5), room.interior.min.y + 0.06, z), 0.0),
                1 => (vec3(rng.range(room.interior.min.x + 0.5, room.interior.max.x - 0.5), room.interior.max.y - 0.06, z), std::f64::consts::PI),
                2 => (vec3(room.interior.min.x + 0.06, rng.range(room.interior.min.y + 0.5, room.interior.max.y - 0.5), z), -std::f64::consts::FRAC_PI_2),
                _ => (vec3(room.interior.max.x - 0.06, rng.range(room.interior.min.y + 0.5, room.interior.max.y - 0.5), z), std::f64::consts::FRAC_PI_2),
            };
            let t = RigidTransform::from_parts(Mat3::rot_z(yaw), pos);
            let mut bb = Aabb::empty();
            for corner in aabb_corners(&local) {
                bb.grow(t.apply_point(corner));
            }
            (t, bb)
        }
    };
    // Containment with clearance from the walls, and no collision with
    // previously placed objects (inflated by the clearance margin).
    let margin = PLACEMENT_CLEARANCE_M;
    let inside = world.min.x >= room.interior.min.x + margin * 0.5
        && world.min.y >= room.interior.min.y + margin * 0.5
        && world.max.x <= room.interior.max.x - margin * 0.5
        && world.max.y <= room.interior.max.y - margin * 0.5
        && world.min.z >= -1e-9
        && world.max.z <= room.interior.max.z;
    if !inside {
        return None;
    }
    let inflated = world.inflated(margin);
    if existing.iter().any(|bb| bb.overlaps(&inflated)) {
        return None;
    }
    Some((transform, world))
}

pub(crate) fn aabb_corners(bb: &Aabb) -> [Vec3; 8] {
    [
        vec3(bb.min.x, bb.min.y, bb.min.z),
        vec3(bb.max.x, bb.min.y, bb.min.z),
        vec3(bb.min.x, bb.max.y, bb.min.z),
        vec3(bb.max.x, bb.max.y, bb.min.z),
        vec3(bb.min.x, bb.min.y, bb.max.z),
        vec3(bb.max.x, bb.min.y, bb.max.z),
        vec3(bb.min.x, bb.max.y, bb.max.z),
        vec3(bb.max.x, bb.max.y, bb.max.z),
    ]
}

fn draw_candidate(registry: &Registry, room: &RoomShell, existing: &[Aabb], rng: &mut Pcg32) -> Option<Candidate> {
    let names = registry.background_names();
    if names.is_empty() {
        return None;
    }
    let name = *rng.pick(&names);
    let info = registry.get(name).expect("from registry");
    let object = generate_object(registry, name, rng).expect("registered");
    position_candidate(&object, info.slot, room, existing, rng)
        .map(|(transform, aabb)| Candidate { name, object, transform, aabb })
}

/// Pure-insertion solver. Every step attempts one placement; rejected
/// attempts still consume their step.
pub fn greedy_solve(
    scene: &mut Scene,
    room: &RoomShell,
    registry: &Registry,
    budget: u32,
    rng: &mut Pcg32,
) -> SolveOutcome {
    assert!(budget >= 1, "budget 0 is not a valid solver invocation");
    let mut existing: Vec<Aabb> = Vec::new();
    let mut placed = 0u32;
    for _ in 0..budget {
        if let Some(c) = draw_candidate(registry, room, &existing, rng) {
            existing.push(c.aabb);
            add_generated(scene, c.object, c.transform, vec![ObjectTag::Background], placed);
            placed += 1;
        }
    }
    SolveOutcome { placed, steps: budget }
}

/// Realism bonus: furniture against a wall and axis-aligned scores higher.
fn placement_score(room: &RoomShell, aabb: &Aabb) -> f64 {
    let near_wall = [
        aabb.min.x - room.interior.min.x,
        room.interior.max.x - aabb.max.x,
        aabb.min.y - room.interior.min.y,
        room.interior.max.y - aabb.max.y,
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min);
    if near_wall < 0.15 {
        0.5
    } else {
        0.0
    }
}

/// Simulated-annealing solver with insert/move/rotate/remove moves over the
/// same hard constraints.
pub fn full_solve(
    scene: &mut Scene,
    room: &RoomShell,
    registry: &Registry,
    budget: u32,
    rng: &mut Pcg32,
) -> SolveOutcome {
    assert!(budget >= 1);
    struct Placed {
        candidate: Candidate,
        score: f64,
    }
    let mut placed: Vec<Placed> = Vec::new();
    let t_start: f64 = 1.0;
    let t_end: f64 = 0.01;
    for step in 0..budget {
        let temp = t_start * (t_end / t_start).powf(step as f64 / budget.max(2) as f64);
        let aabbs = |skip: Option<usize>, placed: &Vec<Placed>| -> Vec<Aabb> {
            placed
                .iter()
                .enumerate()
                .filter(|(i, _)| Some(*i) != skip)
                .map(|(_, p)| p.candidate.aabb)
                .collect()
        };
        let roll = rng.f64();
        if roll < 0.5 || placed.is_empty() {
            // Insert.
            let existing = aabbs(None, &placed);
            if let Some(c) = draw_candidate(registry, room, &existing, rng) {
                let gain = 1.0 + placement_score(room, &c.aabb);
                if gain >= 0.0 || rng.f64() < (gain / temp).exp() {
                    let score = placement_score(room, &c.aabb);
                    placed.push(Placed { candidate: c, score });
                }
            }
        } else if roll < 0.8 {
            // Move or rotate one object.
            let idx = rng.below(placed.len() as u32) as usize;
            let existing = aabbs(Some(idx), &placed);
            let info = registry.get(placed[idx].candidate.name).expect("registered");
            if let Some((transform, aabb)) =
                position_candidate(&placed[idx].candidate.object, info.slot, room, &existing, rng)
            {
                let new_score = placement_score(room, &aabb);
                let delta = new_score - placed[idx].score;
                if delta >= 0.0 || rng.f64() < (delta / temp).exp() {
                    placed[idx].candidate.transform = transform;
                    placed[idx].candidate.aabb = aabb;
                    placed[idx].score = new_score;
                }
            }
        } else {
            // Remove: losing an object costs its score plus the count term.
            let idx = rng.below(placed.len() as u32) as usize;
            let delta = -(1.0 + placed[idx].score);
            if rng.f64() < (delta / temp).exp() {
                placed.remove(idx);
            }
        }
    }
    let count = placed.len() as u32;
    for (i, p) in placed.into_iter().enumerate() {
        add_generated(scene, p.candidate.object, p.candidate.transform, vec![ObjectTag::Background], i as u32);
    }
    SolveOutcome { placed: count, steps: budget }
}

/// Full indoor composition: shell, background solve, floating objects,
/// lighting, window-glass deletion, rig placement.
pub fn compose_indoor(config: &GenConfig, scene_index: u32, rng: &mut Pcg32) -> Result<Scene, ComposeError> {
    let mut scene = Scene::empty(
        SceneType::IndoorFloating,
        crate::rng::mix_parts(&[config.seed, scene_index as u64]),
    );
    let registry = config.registry()?;
    let room = build_room(&mut scene, rng);

    if config.background_objects {
        let mut solver_rng = Pcg32::from_parts(&[config.seed, scene_index as u64, stage::SOLVER]);
        match config.solver_mode {
            SolverMode::Greedy => greedy_solve(&mut scene, &room, &registry, config.solver_budget(), &mut solver_rng),
            SolverMode::Full => full_solve(&mut scene, &room, &registry, config.solver_budget(), &mut solver_rng),
        };
    }

    let count = if config.floating_count_range.1 == 0 {
        0
    } else {
        let mut float_rng = Pcg32::from_parts(&[config.seed, scene_index as u64, stage::FLOATING]);
        float_rng.int_in(config.floating_count_range.0, config.floating_count_range.1)
    };
    if count > 0 {
        let margin = 0.3;
        let bbox = Aabb::new(
            room.interior.min + vec3(margin, margin, margin),
            room.interior.max - vec3(margin, margin, margin),
        );
        let mut float_rng = Pcg32::from_parts(&[config.seed, scene_index as u64, stage::FLOATING, 1]);
        super::floating::place_floating_bbox(
            &mut scene,
            bbox,
            count,
            config.allow_intersect,
            &registry,
            &config.material_policy,
            config.floating_size_range,
            &mut float_rng,
        );
    }

    if config.lighting_mode == LightingMode::Augmented {
        let mut light_rng = Pcg32::from_parts(&[config.seed, scene_index as u64, stage::LIGHTING]);
        super::lighting::augment_lighting(&mut scene, &mut light_rng);
    }

    if config.delete_window_glass {
        scene.delete_window_glass();
    }

    let mut rig_rng = Pcg32::from_parts(&[config.seed, scene_index as u64, stage::RIGS]);
    super::rigs::place_camera_rigs(
        &mut scene,
        config.rigs_per_scene,
        config.rig_candidates,
        config.baseline_range(SceneType::IndoorFloating),
        &mut rig_rng,
    );
    Ok(scene)
}
