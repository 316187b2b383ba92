//! Ground-truth derivation: disparity from depth, occlusion from left-right
//! reprojection consistency, sky/exterior masks, and cross-buffer frame
//! validation.

use serde::{Deserialize, Serialize};

use crate::geom::{Ray, StereoRig, StereoView};
use crate::render::{FrameBuffers, FrozenScene};
use crate::scene::{ObjectTag, Scene};

#[derive(Debug, thiserror::Error)]
pub enum GtError {
    #[error("resolution mismatch: {0}x{1} vs {2}x{3}")]
    ResolutionMismatch(u32, u32, u32, u32),
    #[error("nonpositive finite depth {value} at ({x},{y}); renderer contract violation")]
    NonPositiveDepth { x: u32, y: u32, value: f32 },
}

/// Per-pixel disparity in pixels. Invalid exactly where depth is +inf; the
/// stored value there is 0.
#[derive(Clone, Debug, PartialEq)]
pub struct DisparityMap {
    pub width: u32,
    pub height: u32,
    pub values: Vec<f32>,
    pub valid: Vec<bool>,
}

impl DisparityMap {
    #[inline]
    pub fn idx(&self, x: u32, y: u32) -> usize {
        (y * self.width + x) as usize
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OcclusionFlag {
    Visible,
    Occluded,
    OutOfView,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OcclusionMap {
    pub width: u32,
    pub height: u32,
    pub flags: Vec<OcclusionFlag>,
}

impl OcclusionMap {
    pub fn count(&self, flag: OcclusionFlag) -> usize {
        self.flags.iter().filter(|&&f| f == flag).count()
    }

    pub fn occluded_fraction(&self) -> f64 {
        self.count(OcclusionFlag::Occluded) as f64 / self.flags.len() as f64
    }
}

/// Relative threshold of the left-right consistency check.
pub const LR_CONSISTENCY_REL: f64 = 0.01;

/// d = fx * B / z per pixel, computed in f32 so files reproduce the formula
/// bit-for-bit. Depth +inf marks the pixel invalid with d = 0.
pub fn depth_to_disparity(depth: &[f32], width: u32, height: u32, rig: &StereoRig) -> Result<DisparityMap, GtError> {
    assert_eq!(depth.len(), (width * height) as usize);
    let fxb = (rig.intrinsics.fx * rig.baseline_m) as f32;
    let mut values = Vec::with_capacity(depth.len());
    let mut valid = Vec::with_capacity(depth.len());
    for (i, &z) in depth.iter().enumerate() {
        if z.is_infinite() && z > 0.0 {
            values.push(0.0);
            valid.push(false);
        } else if z > 0.0 {
            values.push(fxb / z);
            valid.push(true);
        } else {
            return Err(GtError::NonPositiveDepth {
                x: i as u32 % width,
                y: i as u32 / width,
                value: z,
            });
        }
    }
    Ok(DisparityMap { width, height, values, valid })
}

/// Linear interpolation of a disparity row, honoring validity flags.
fn sample_disparity(map: &DisparityMap, x: f64, y: u32, nearest: bool) -> Option<f64> {
    if x < 0.0 || x > (map.width - 1) as f64 {
        return None;
    }
    if nearest {
        let xi = x.round() as u32;
        let i = map.idx(xi.min(map.width - 1), y);
        return map.valid[i].then(|| map.values[i] as f64);
    }
    let x0 = x.floor() as u32;
    let x1 = (x0 + 1).min(map.width - 1);
    let f = x - x0 as f64;
    let i0 = map.idx(x0, y);
    let i1 = map.idx(x1, y);
    match (map.valid[i0], map.valid[i1]) {
        (true, true) => Some(map.values[i0] as f64 * (1.0 - f) + map.values[i1] as f64 * f),
        (true, false) if f < 0.5 => Some(map.values[i0] as f64),
        (false, true) if f >= 0.5 => Some(map.values[i1] as f64),
        _ => None,
    }
}

/// Reprojection-consistency occlusion flags for the `view` whose disparity
/// is `disp_a`; `disp_b` is the other view. A pixel is visible when the
/// disparity sampled at its reprojected column agrees within 1% (relative to
/// max(d, 1) px). Reprojections leaving the image are out-of-view; invalid
/// disparities are occluded.
pub fn occlusion_map(
    disp_a: &DisparityMap,
    disp_b: &DisparityMap,
    view: StereoView,
    nearest: bool,
) -> Result<OcclusionMap, GtError> {
    if disp_a.width != disp_b.width || disp_a.height != disp_b.height {
        return Err(GtError::ResolutionMismatch(disp_a.width, disp_a.height, disp_b.width, disp_b.height));
    }
    let mut flags = Vec::with_capacity(disp_a.values.len());
    for y in 0..disp_a.height {
        for x in 0..disp_a.width {
            let i = disp_a.idx(x, y);
            if !disp_a.valid[i] {
                flags.push(OcclusionFlag::Occluded);
                continue;
            }
            let d = disp_a.values[i] as f64;
            // Left pixels reproject leftward, right pixels rightward.
            let target = match view {
                StereoView::Left => x as f64 - d,
                StereoView::Right => x as f64 + d,
            };
            if target < 0.0 || target > (disp_a.width - 1) as f64 {
                flags.push(OcclusionFlag::OutOfView);
                continue;
            }
            match sample_disparity(disp_b, target, y, nearest) {
                Some(db) => {
                    if (d - db).abs() <= LR_CONSISTENCY_REL * d.max(1.0) {
                        flags.push(OcclusionFlag::Visible);
                    } else {
                        flags.push(OcclusionFlag::Occluded);
                    }
                }
                None => flags.push(OcclusionFlag::Occluded),
            }
        }
    }
    Ok(OcclusionMap { width: disp_a.width, height: disp_a.height, flags })
}

/// Mask of pixels that show the environment or exterior-tagged geometry.
pub fn sky_exterior_mask(object_id: &[u32], scene: &Scene) -> Vec<bool> {
    let exterior: std::collections::BTreeSet<u32> = scene
        .objects
        .iter()
        .filter(|o| o.has_tag(ObjectTag::Exterior))
        .map(|o| o.id)
        .collect();
    object_id.iter().map(|&id| id == 0 || exterior.contains(&id)).collect()
}

/// Slow geometric reference for occlusion flags: casts a ray from the other
/// camera toward each pixel's 3D point and tests blockage. Used to validate
/// the reprojection-based maps.
pub fn occlusion_oracle(
    frozen: &FrozenScene,
    rig: &StereoRig,
    depth: &[f32],
    view: StereoView,
) -> OcclusionMap {
    let intr = rig.intrinsics;
    let this_pose = rig.pose(view);
    let other_pose = rig.pose(match view {
        StereoView::Left => StereoView::Right,
        StereoView::Right => StereoView::Left,
    });
    let other_inv = other_pose.inverse();
    let mut flags = Vec::with_capacity(depth.len());
    for y in 0..intr.height {
        for x in 0..intr.width {
            let z = depth[(y * intr.width + x) as usize];
            if !z.is_finite() {
                flags.push(OcclusionFlag::Occluded);
                continue;
            }
            let p_cam = intr.unproject(x as f64 + 0.5, y as f64 + 0.5, z as f64);
            let world = this_pose.apply_point(p_cam);
            let other_cam = other_inv.apply_point(world);
            if intr.project(other_cam).is_none() {
                flags.push(OcclusionFlag::OutOfView);
                continue;
            }
            let origin = other_pose.translation;
            let delta = world - origin;
            let dist = delta.length();
            let ray = Ray::new(origin, delta / dist);
            let blocked = match frozen.bvh.as_ref() {
                Some(bvh) => bvh.intersect_any(&ray, dist * (1.0 - 1e-3)),
                None => false,
            };
            flags.push(if blocked { OcclusionFlag::Occluded } else { OcclusionFlag::Visible });
        }
    }
    OcclusionMap { width: intr.width, height: intr.height, flags }
}

/// Reconstruct the right RGB image by sampling the left image at each right
/// pixel's reprojected position (gather warp by ground-truth disparity).
/// Returns the estimate and the mask of reconstructable (visible) pixels.
pub fn reconstruct_right_from_left(
    left_rgb: &[[f32; 3]],
    disp_right: &DisparityMap,
    occ_right: &OcclusionMap,
) -> (Vec<[f32; 3]>, Vec<bool>) {
    let w = disp_right.width;
    let h = disp_right.height;
    let mut out = vec![[0.0f32; 3]; (w * h) as usize];
    let mut mask = vec![false; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let i = disp_right.idx(x, y);
            if !disp_right.valid[i] || occ_right.flags[i] != OcclusionFlag::Visible {
                continue;
            }
            let xs = x as f64 + disp_right.values[i] as f64;
            if xs < 0.0 || xs > (w - 1) as f64 {
                continue;
            }
            let x0 = xs.floor() as u32;
            let x1 = (x0 + 1).min(w - 1);
            let f = (xs - x0 as f64) as f32;
            let a = left_rgb[(y * w + x0) as usize];
            let b = left_rgb[(y * w + x1) as usize];
            out[i] = [
                a[0] * (1.0 - f) + b[0] * f,
                a[1] * (1.0 - f) + b[1] * f,
                a[2] * (1.0 - f) + b[2] * f,
            ];
            mask[i] = true;
        }
    }
    (out, mask)
}

/// PSNR in dB over masked pixels, with signals nominally in [0,1].
pub fn psnr_masked(a: &[[f32; 3]], b: &[[f32; 3]], mask: &[bool]) -> f64 {
    let mut mse = 0.0f64;
    let mut count = 0usize;
    for i in 0..a.len() {
        if mask[i] {
            for c in 0..3 {
                let d = a[i][c] as f64 - b[i][c] as f64;
                mse += d * d;
            }
            count += 3;
        }
    }
    if count == 0 {
        return 0.0;
    }
    mse /= count as f64;
    if mse <= 1e-12 {
        120.0
    } else {
        -10.0 * mse.log10()
    }
}

/// One stereo frame with everything needed for cross-buffer validation.
pub struct FrameBundle<'a> {
    pub rig: &'a StereoRig,
    pub left: &'a FrameBuffers,
    pub right: &'a FrameBuffers,
    pub disp_left: &'a DisparityMap,
    pub disp_right: &'a DisparityMap,
    pub occ_left: &'a OcclusionMap,
    pub occ_right: &'a OcclusionMap,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct FrameReport {
    pub checks: Vec<CheckResult>,
}

impl FrameReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Default near-clip threshold flagged by frame validation, meters.
pub const NEAR_CLIP_M: f64 = 0.125;

/// Run every cross-buffer invariant and report pass/fail per check.
pub fn validate_frame(bundle: &FrameBundle) -> FrameReport {
    let mut checks = Vec::new();
    let w = bundle.left.width;
    let h = bundle.left.height;
    let res_ok = [
        (bundle.right.width, bundle.right.height),
        (bundle.disp_left.width, bundle.disp_left.height),
        (bundle.disp_right.width, bundle.disp_right.height),
        (bundle.occ_left.width, bundle.occ_left.height),
        (bundle.occ_right.width, bundle.occ_right.height),
    ]
    .iter()
    .all(|&(bw, bh)| bw == w && bh == h);
    checks.push(CheckResult {
        name: "resolution_consistent",
        passed: res_ok,
        detail: format!("{w}x{h}"),
    });

    let mut depth_ok = true;
    let mut min_depth = f64::INFINITY;
    for buf in [bundle.left, bundle.right] {
        for &z in &buf.depth {
            if z.is_nan() || (z.is_finite() && z <= 0.0) {
                depth_ok = false;
            }
            if z.is_finite() {
                min_depth = min_depth.min(z as f64);
            }
        }
    }
    checks.push(CheckResult {
        name: "depth_positive_or_inf",
        passed: depth_ok,
        detail: String::new(),
    });
    checks.push(CheckResult {
        name: "near_clip",
        passed: min_depth >= NEAR_CLIP_M,
        detail: format!("min depth {min_depth:.4} m"),
    });

    // Disparity must reproduce fx*B/z bit-for-bit, with validity matching
    // the depth buffer's infinities.
    let mut exact = true;
    let mut validity = true;
    for (depth, disp) in [(&bundle.left.depth, bundle.disp_left), (&bundle.right.depth, bundle.disp_right)] {
        let fxb = (bundle.rig.intrinsics.fx * bundle.rig.baseline_m) as f32;
        for (i, &z) in depth.iter().enumerate() {
            if z.is_finite() {
                if !disp.valid[i] || disp.values[i] != fxb / z {
                    exact = false;
                }
            } else if disp.valid[i] || disp.values[i] != 0.0 {
                validity = false;
            }
        }
    }
    checks.push(CheckResult { name: "disparity_exact", passed: exact, detail: String::new() });
    checks.push(CheckResult { name: "disparity_validity", passed: validity, detail: String::new() });

    // At least 95% of visible-flagged pixels must satisfy the symmetric
    // consistency threshold.
    let mut lr_ok = 0usize;
    let mut lr_total = 0usize;
    for (disp_a, disp_b, occ, view) in [
        (bundle.disp_left, bundle.disp_right, bundle.occ_left, StereoView::Left),
        (bundle.disp_right, bundle.disp_left, bundle.occ_right, StereoView::Right),
    ] {
        for y in 0..h {
            for x in 0..w {
                let i = disp_a.idx(x, y);
                if occ.flags[i] != OcclusionFlag::Visible {
                    continue;
                }
                lr_total += 1;
                let d = disp_a.values[i] as f64;
                let target = match view {
                    StereoView::Left => x as f64 - d,
                    StereoView::Right => x as f64 + d,
                };
                if let Some(db) = sample_disparity(disp_b, target, y, false) {
                    if (d - db).abs() <= LR_CONSISTENCY_REL * d.max(1.0) {
                        lr_ok += 1;
                    }
                }
            }
        }
    }
    let lr_frac = if lr_total == 0 { 1.0 } else { lr_ok as f64 / lr_total as f64 };
    checks.push(CheckResult {
        name: "lr_consistency",
        passed: lr_frac >= 0.95,
        detail: format!("{:.2}% of visible pixels consistent", lr_frac * 100.0),
    });

    FrameReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{PinholeIntrinsics, RigidTransform};

    fn rig(width: u32, height: u32, fx: f64, baseline: f64) -> StereoRig {
        let intr = PinholeIntrinsics::new(fx, fx, width as f64 / 2.0, height as f64 / 2.0, width, height).unwrap();
        StereoRig::new(intr, RigidTransform::IDENTITY, baseline).unwrap()
    }

    #[test]
    fn disparity_formula() {
        let rig = rig(64, 48, 700.0, 0.2);
        let depth = vec![14.0f32; 64 * 48];
        let disp = depth_to_disparity(&depth, 64, 48, &rig).unwrap();
        assert!(disp.values.iter().all(|&d| d == 10.0));
        assert!(disp.valid.iter().all(|&v| v));
    }

    #[test]
    fn sky_pixels_are_invalid_zero() {
        let rig = rig(8, 8, 100.0, 0.1);
        let mut depth = vec![5.0f32; 64];
        depth[10] = f32::INFINITY;
        let disp = depth_to_disparity(&depth, 8, 8, &rig).unwrap();
        assert!(!disp.valid[10]);
        assert_eq!(disp.values[10], 0.0);
    }

    #[test]
    fn negative_depth_is_contract_violation() {
        let rig = rig(4, 4, 100.0, 0.1);
        let mut depth = vec![5.0f32; 16];
        depth[3] = -1.0;
        assert!(matches!(
            depth_to_disparity(&depth, 4, 4, &rig),
            Err(GtError::NonPositiveDepth { .. })
        ));
    }

    #[test]
    fn constant_plane_has_only_out_of_view_band() {
        // Constant disparity 6: the left band of width 6 reprojects outside.
        let rig = rig(32, 8, 120.0, 0.5);
        let depth = vec![10.0f32; 32 * 8];
        let d_const = (120.0f32 * 0.5) / 10.0; // 6 px
        let dl = depth_to_disparity(&depth, 32, 8, &rig).unwrap();
        let dr = dl.clone();
        let occ = occlusion_map(&dl, &dr, StereoView::Left, false).unwrap();
        for y in 0..8u32 {
            for x in 0..32u32 {
                let f = occ.flags[(y * 32 + x) as usize];
                if (x as f32) < d_const {
                    assert_eq!(f, OcclusionFlag::OutOfView, "x={x}");
                } else {
                    assert_eq!(f, OcclusionFlag::Visible, "x={x}");
                }
            }
        }
    }

    #[test]
    fn resolution_mismatch_is_error() {
        let rig8 = rig(8, 8, 100.0, 0.1);
        let rig4 = rig(4, 4, 100.0, 0.1);
        let a = depth_to_disparity(&vec![5.0; 64], 8, 8, &rig8).unwrap();
        let b = depth_to_disparity(&vec![5.0; 16], 4, 4, &rig4).unwrap();
        assert!(matches!(
            occlusion_map(&a, &b, StereoView::Left, false),
            Err(GtError::ResolutionMismatch(..))
        ));
    }

    #[test]
    fn occlusion_band_appears_left_of_foreground_box() {
        // Right view of a near box over a far plane: in the left image the
        // background just left of the box is hidden from the right camera.
        let w = 64u32;
        let h = 4u32;
        let rig = rig(w, h, 100.0, 0.5);
        let mut depth_left = vec![10.0f32; (w * h) as usize]; // d = 5
        let mut depth_right = vec![10.0f32; (w * h) as usize];
        // Box at depth 5 (d = 10) covering left columns 30..40.
        for y in 0..h {
            for x in 30..40 {
                depth_left[(y * w + x) as usize] = 5.0;
            }
            // In the right view the box lands 10 px to the left.
            for x in 20..30 {
                depth_right[(y * w + x) as usize] = 5.0;
            }
        }
        let dl = depth_to_disparity(&depth_left, w, h, &rig).unwrap();
        let dr = depth_to_disparity(&depth_right, w, h, &rig).unwrap();
        let occ = occlusion_map(&dl, &dr, StereoView::Left, false).unwrap();
        // Background pixels at x in [25,30) reproject to [20,25) where the
        // right view sees the box: occluded.
        for x in 26..29u32 {
            assert_eq!(occ.flags[x as usize], OcclusionFlag::Occluded, "x={x}");
        }
        // Well clear of the box: visible.
        for x in 45..60u32 {
            assert_eq!(occ.flags[x as usize], OcclusionFlag::Visible, "x={x}");
        }
    }

    #[test]
    fn validate_frame_catches_injected_disparity_fault() {
        use crate::geom::vec3;
        use crate::render::{render_stereo, FrozenScene, RenderSettings};
        use crate::scene::{Material, ObjectTag, Scene, SceneObject, SceneType};
        let mut scene = Scene::empty(SceneType::DenseFloating, 5);
        let m = scene.add_material(Material::diffuse(0, "wall", [0.5; 3]));
        let mesh = crate::geom::TriangleMesh::make_box(vec3(-20.0, -20.0, 6.0), vec3(20.0, 20.0, 6.5), 0);
        scene.objects.push(SceneObject {
            id: 1,
            name: "wall.001".into(),
            mesh,
            transform: RigidTransform::IDENTITY,
            part_materials: vec![(0, m)],
            tags: vec![ObjectTag::Architecture],
            thin_structure: false,
        });
        scene.lights.push(crate::scene::LightSource::Environment { sky_strength: 1.0, sky_color: [1.0; 3] });
        let frozen = FrozenScene::freeze(&scene);
        let intr = PinholeIntrinsics::with_hfov(48, 32, 60f64.to_radians());
        let rig = StereoRig::new(intr, RigidTransform::IDENTITY, 0.3).unwrap();
        let settings = RenderSettings { width: 48, height: 32, spp: 2, denoise: false, ..Default::default() };
        let (left, right) = render_stereo(&frozen, &rig, &settings);
        let dl = depth_to_disparity(&left.depth, 48, 32, &rig).unwrap();
        let dr = depth_to_disparity(&right.depth, 48, 32, &rig).unwrap();
        let ol = occlusion_map(&dl, &dr, StereoView::Left, false).unwrap();
        let or = occlusion_map(&dr, &dl, StereoView::Right, false).unwrap();
        let bundle = FrameBundle {
            rig: &rig,
            left: &left,
            right: &right,
            disp_left: &dl,
            disp_right: &dr,
            occ_left: &ol,
            occ_right: &or,
        };
        let report = validate_frame(&bundle);
        assert!(report.passed(), "well-formed bundle failed: {:?}", report.failures());

        // Corrupt the left disparity by +1 everywhere.
        let mut bad = dl.clone();
        for v in bad.values.iter_mut() {
            *v += 1.0;
        }
        let bundle_bad = FrameBundle { disp_left: &bad, ..bundle };
        let report_bad = validate_frame(&bundle_bad);
        assert!(!report_bad.passed());
        let failed: Vec<&str> = report_bad.failures().iter().map(|c| c.name).collect();
        assert!(failed.contains(&"disparity_exact"));
        assert!(failed.contains(&"lr_consistency"), "failed: {failed:?}");
    }

    #[test]
    fn validate_frame_flags_near_clip() {
        // Reuse the plane bundle but scale depth below the clip threshold.
        let rig = rig(8, 8, 100.0, 0.1);
        let depth = vec![0.05f32; 64];
        let disp = depth_to_disparity(&depth, 8, 8, &rig).unwrap();
        let occ = occlusion_map(&disp, &disp, StereoView::Left, false).unwrap();
        let buffers = crate::render::FrameBuffers {
            width: 8,
            height: 8,
            rgb: vec![[0.2; 3]; 64],
            depth,
            object_id: vec![1; 64],
            material_id: vec![1; 64],
            normal: vec![[0.0, 0.0, 1.0]; 64],
            albedo: vec![[0.2; 3]; 64],
            clamped_samples: 0,
        };
        let bundle = FrameBundle {
            rig: &rig,
            left: &buffers,
            right: &buffers,
            disp_left: &disp,
            disp_right: &disp,
            occ_left: &occ,
            occ_right: &occ,
        };
        let report = validate_frame(&bundle);
        let near = report.checks.iter().find(|c| c.name == "near_clip").unwrap();
        assert!(!near.passed);
    }
}
