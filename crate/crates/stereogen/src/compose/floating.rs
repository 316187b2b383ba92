//! Floating-object placement: uniform positions in a bounding box, or along
//! camera rays (a pixel is sampled, the primary ray cast, and a depth drawn
//! between 0.5 m and min(hit distance, 10 m) unless a custom law is given).

use crate::assets::{generate_object, normalize_object_size, randomize_materials, MaterialPolicy, Registry};
use crate::geom::{Aabb, PinholeIntrinsics, Ray, RigidTransform, Vec3};
use crate::rng::Pcg32;
use crate::scene::{ObjectTag, Scene};

use super::room::aabb_corners;
use super::{add_generated, collidable_aabbs, random_orientation, recentered, scene_bvh};

/// Collision retry budget per object before it is skipped with a warning.
pub const PLACEMENT_ATTEMPTS: u32 = 50;

/// Depth distribution along the placement ray.
#[derive(Copy, Clone, Debug)]
pub enum DepthLaw {
    /// Uniform between 0.5 m and min(first hit, 10 m).
    UniformToHit,
    /// Uniform in a fixed range, ignoring scene geometry.
    UniformRange(f64, f64),
}

pub struct PlacementOutcome {
    pub placed: u32,
    /// Objects skipped because no collision-free position was found.
    pub skipped: u32,
}

fn world_aabb_at(local: &Aabb, transform: &RigidTransform) -> Aabb {
    let mut bb = Aabb::empty();
    for corner in aabb_corners(local) {
        bb.grow(transform.apply_point(corner));
    }
    bb
}

/// Place `n` floating objects uniformly inside `bbox`. Each object is drawn
/// from the registry, size-normalized, material-randomized, and oriented
/// uniformly at random. With `allow_intersect` unset, positions are
/// re-sampled up to the attempt budget on AABB collision with existing
/// non-architecture geometry.
#[allow(clippy::too_many_arguments)]
pub fn place_floating_bbox(
    scene: &mut Scene,
    bbox: Aabb,
    n: u32,
    allow_intersect: bool,
    registry: &Registry,
    policy: &MaterialPolicy,
    size_range: (f64, f64),
    rng: &mut Pcg32,
) -> PlacementOutcome {
    let mut existing = collidable_aabbs(scene);
    let mut placed = 0u32;
    let mut skipped = 0u32;
    for index in 0..n {
        let names = registry.names();
        let name = *rng.pick(&names);
        let mut object = generate_object(registry, name, rng).expect("registered");
        if normalize_object_size(&mut object, size_range, rng).is_err() {
            skipped += 1;
            continue;
        }
        randomize_materials(&mut object, policy, rng);
        recentered(&mut object);
        let local = object.mesh.aabb();
        let mut accepted = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let rot = random_orientation(rng);
            let pos = Vec3 {
                x: rng.range(bbox.min.x, bbox.max.x),
                y: rng.range(bbox.min.y, bbox.max.y),
                z: rng.range(bbox.min.z, bbox.max.z),
            };
            let transform = RigidTransform::from_parts(rot, pos);
            let world = world_aabb_at(&local, &transform);
            if allow_intersect || !existing.iter().any(|bb| bb.overlaps(&world)) {
                accepted = Some((transform, world));
                break;
            }
        }
        match accepted {
            Some((transform, world)) => {
                existing.push(world);
                add_generated(scene, object, transform, vec![ObjectTag::Floating], index);
                placed += 1;
            }
            None => skipped += 1,
        }
    }
    PlacementOutcome { placed, skipped }
}

/// Place `n` floating objects along rays through uniformly sampled pixels of
/// `camera` (intrinsics plus world-from-camera pose). Geometry present when
/// the call starts determines hit distances.
#[allow(clippy::too_many_arguments)]
pub fn place_floating_raycast(
    scene: &mut Scene,
    intrinsics: &PinholeIntrinsics,
    camera_pose: &RigidTransform,
    n: u32,
    allow_intersect: bool,
    depth_law: DepthLaw,
    registry: &Registry,
    policy: &MaterialPolicy,
    size_range: (f64, f64),
    distance_rescale: bool,
    rng: &mut Pcg32,
) -> PlacementOutcome {
    let bvh = scene_bvh(scene);
    let mut existing = collidable_aabbs(scene);
    let mut placed = 0u32;
    let mut skipped = 0u32;
    for index in 0..n {
        let names = registry.names();
        let name = *rng.pick(&names);
        let mut object = generate_object(registry, name, rng).expect("registered");
        if normalize_object_size(&mut object, size_range, rng).is_err() {
            skipped += 1;
            continue;
        }
        randomize_materials(&mut object, policy, rng);
        recentered(&mut object);
        let mut accepted = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            // Keep a small margin so object centers project well inside.
            let u = rng.range(0.05, 0.95) * intrinsics.width as f64;
            let v = rng.range(0.05, 0.95) * intrinsics.height as f64;
            let dir = camera_pose.apply_vector(intrinsics.pixel_direction(u, v));
            let ray = Ray::new(camera_pose.translation, dir);
            let depth = match depth_law {
                DepthLaw::UniformToHit => {
                    let hit_t = bvh
                        .as_ref()
                        .and_then(|b| b.intersect(&ray, f64::INFINITY))
                        .map(|h| h.t)
                        .unwrap_or(f64::INFINITY);
                    let hi = hit_t.min(10.0);
                    if hi <= 0.5 {
                        continue;
                    }
                    rng.range(0.5, hi)
                }
                DepthLaw::UniformRange(lo, hi) => rng.range(lo, hi),
            };
            let center = ray.at(depth);
            let scale = if distance_rescale { (depth / 5.0).max(1.0) } else { 1.0 };
            let local = object.mesh.aabb();
            let local = Aabb::new(local.min * scale, local.max * scale);
            let transform = RigidTransform::from_parts(random_orientation(rng), center);
            let world = world_aabb_at(&local, &transform);
            if allow_intersect || !existing.iter().any(|bb| bb.overlaps(&world)) {
                accepted = Some((transform, world, scale));
                break;
            }
        }
        match accepted {
            Some((transform, world, scale)) => {
                if scale != 1.0 {
                    object.mesh = object.mesh.scaled(scale);
                }
                existing.push(world);
                add_generated(scene, object, transform, vec![ObjectTag::Floating], index);
                placed += 1;
            }
            None => skipped += 1,
        }
    }
    PlacementOutcome { placed, skipped }
}
