//! Stereo-rig placement: candidate poses are scored by the standard
//! deviation of a coarse ray-cast depth probe and selected greedily under a
//! pairwise separation constraint.

use crate::geom::{vec3, Bvh, PinholeIntrinsics, Ray, RigidTransform, StereoRig, Vec3};
use crate::rng::Pcg32;
use crate::scene::{ObjectTag, Scene};

use super::scene_bvh;

/// Depth-probe resolution used for scoring; cheap yet rank-stable.
pub const PROBE_W: u32 = 32;
pub const PROBE_H: u32 = 18;

/// Minimum distance between selected rig positions, meters.
pub const RIG_SEPARATION_M: f64 = 0.5;

/// Indoor camera heights above the floor, meters.
pub const CAMERA_HEIGHT_RANGE: (f64, f64) = (1.2, 1.8);

/// Std of finite probe depths; poses seeing mostly sky score zero.
pub fn depth_probe_std(bvh: &Bvh, intrinsics: &PinholeIntrinsics, pose: &RigidTransform) -> f64 {
    let probe = intrinsics.rescaled(PROBE_W, PROBE_H);
    let mut depths = Vec::with_capacity((PROBE_W * PROBE_H) as usize);
    for y in 0..PROBE_H {
        for x in 0..PROBE_W {
            let dir_cam = probe.pixel_direction(x as f64 + 0.5, y as f64 + 0.5);
            let ray = Ray::new(pose.translation, pose.apply_vector(dir_cam));
            if let Some(hit) = bvh.intersect(&ray, f64::INFINITY) {
                depths.push(hit.t * dir_cam.z);
            }
        }
    }
    if depths.len() < (PROBE_W * PROBE_H) as usize / 2 {
        return 0.0;
    }
    let mean = depths.iter().sum::<f64>() / depths.len() as f64;
    (depths.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / depths.len() as f64).sqrt()
}

pub struct RigPlacement {
    pub placed: u32,
    /// Nonzero when fewer than the requested rigs had valid candidates.
    pub shortfall: u32,
    pub candidate_scores: Vec<f64>,
    pub selected_scores: Vec<f64>,
}

fn point_free(scene: &Scene, p: Vec3) -> bool {
    scene
        .objects
        .iter()
        .filter(|o| !o.has_tag(ObjectTag::Architecture) && !o.has_tag(ObjectTag::Terrain))
        .all(|o| !o.world_aabb().inflated(0.1).contains_point(p))
}

/// Sample `m_candidates` collision-free poses at plausible heights, score
/// them by depth std, then greedily pick `k` subject to the separation
/// constraint. Each selected rig draws its baseline from `baseline_range`.
pub fn place_camera_rigs(
    scene: &mut Scene,
    k: u32,
    m_candidates: u32,
    baseline_range: (f64, f64),
    rng: &mut Pcg32,
) -> RigPlacement {
    assert!(k >= 1);
    let bvh = match scene_bvh(scene) {
        Some(b) => b,
        None => {
            return RigPlacement {
                placed: 0,
                shortfall: k,
                candidate_scores: Vec::new(),
                selected_scores: Vec::new(),
            }
        }
    };
    let intrinsics = PinholeIntrinsics::default_hd();
    let (region, floor_z) = match &scene.room {
        Some(room) => (room.interior().inflated(-0.35), room.interior_min.z),
        None => (scene.bounds().inflated(-0.5), 0.0),
    };
    let mut candidates: Vec<(RigidTransform, f64, Vec3)> = Vec::new();
    let mut tries = 0u32;
    while candidates.len() < m_candidates as usize && tries < m_candidates * 8 {
        tries += 1;
        let eye = vec3(
            rng.range(region.min.x, region.max.x),
            rng.range(region.min.y, region.max.y),
            floor_z + rng.range(CAMERA_HEIGHT_RANGE.0, CAMERA_HEIGHT_RANGE.1),
        );
        if !point_free(scene, eye) {
            continue;
        }
        let yaw = rng.range(0.0, std::f64::consts::TAU);
        let pitch = rng.range(-0.25, 0.1);
        let forward = vec3(yaw.cos() * pitch.cos(), yaw.sin() * pitch.cos(), pitch.sin());
        let pose = crate::render::look_at(eye, eye + forward);
        // The right camera must also sit in free space at max baseline.
        let right_at = eye + pose.apply_vector(Vec3::X) * baseline_range.1;
        if !point_free(scene, right_at) || !region.contains_point(right_at) {
            continue;
        }
        let score = depth_probe_std(&bvh, &intrinsics, &pose);
        if score <= 0.0 {
            continue;
        }
        candidates.push((pose, score, eye));
    }
    let candidate_scores: Vec<f64> = candidates.iter().map(|c| c.1).collect();
    // Greedy pick by score with pairwise separation.
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut selected: Vec<(RigidTransform, f64, Vec3)> = Vec::new();
    for c in candidates {
        if selected.len() as u32 >= k {
            break;
        }
        if selected.iter().all(|s| (s.2 - c.2).length() >= RIG_SEPARATION_M) {
            selected.push(c);
        }
    }
    let selected_scores: Vec<f64> = selected.iter().map(|s| s.1).collect();
    let placed = selected.len() as u32;
    for (pose, _, _) in selected {
        let baseline = rng.range(baseline_range.0, baseline_range.1);
        scene
            .rigs
            .push(StereoRig::new(intrinsics, pose, baseline).expect("positive baseline"));
    }
    RigPlacement {
        placed,
        shortfall: k - placed,
        candidate_scores,
        selected_scores,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compose::{compose_indoor, GenConfig};
    use crate::rng::stage;

    #[test]
    fn rigs_score_above_candidate_pool_mean() {
        let config = GenConfig { rigs_per_scene: 6, seed: 21, ..Default::default() };
        let mut rng = Pcg32::from_parts(&[config.seed, 0, stage::COMPOSE]);
        let mut scene = compose_indoor(&config, 0, &mut rng).unwrap();
        scene.rigs.clear();
        let mut rig_rng = Pcg32::from_parts(&[99]);
        let outcome = place_camera_rigs(&mut scene, 6, 120, (0.04, 0.4), &mut rig_rng);
        assert!(outcome.placed >= 1);
        let pool_mean = outcome.candidate_scores.iter().sum::<f64>() / outcome.candidate_scores.len() as f64;
        let sel_mean = outcome.selected_scores.iter().sum::<f64>() / outcome.selected_scores.len() as f64;
        assert!(
            sel_mean >= pool_mean,
            "selected mean {sel_mean} below pool mean {pool_mean}"
        );
    }

    #[test]
    fn k1_selects_the_argmax() {
        let config = GenConfig { seed: 33, ..Default::default() };
        let mut rng = Pcg32::from_parts(&[config.seed, 0, stage::COMPOSE]);
        let mut scene = compose_indoor(&config, 0, &mut rng).unwrap();
        scene.rigs.clear();
        let mut rig_rng = Pcg32::from_parts(&[5]);
        let outcome = place_camera_rigs(&mut scene, 1, 80, (0.1, 0.2), &mut rig_rng);
        assert_eq!(outcome.placed, 1);
        let max = outcome.candidate_scores.iter().cloned().fold(0.0f64, f64::max);
        assert_eq!(outcome.selected_scores[0], max);
    }

    #[test]
    fn rig_separation_holds() {
        let config = GenConfig { seed: 44, ..Default::default() };
        let mut rng = Pcg32::from_parts(&[config.seed, 0, stage::COMPOSE]);
        let scene = compose_indoor(&config, 0, &mut rng).unwrap();
        for i in 0..scene.rigs.len() {
            for j in i + 1..scene.rigs.len() {
                let d = (scene.rigs[i].left_pose.translation - scene.rigs[j].left_pose.translation).length();
                assert!(d >= RIG_SEPARATION_M - 1e-9, "rigs {i},{j} at distance {d}");
            }
        }
    }
}
