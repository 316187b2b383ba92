//! Pinhole camera model and rectified stereo rig.
//!
//! Conventions, fixed once for the whole pipeline: right-handed coordinates,
//! camera looks down +z, image y points down, "depth" is camera-frame z.

use serde::{Deserialize, Serialize};

use super::vec::{vec3, RigidTransform, Vec3};
use super::GeomError;

/// Shared pinhole intrinsics, in pixels.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PinholeIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl PinholeIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self, GeomError> {
        let intr = PinholeIntrinsics { fx, fy, cx, cy, width, height };
        intr.validate()?;
        Ok(intr)
    }

    /// 1280x720 with a ~72 degree horizontal field of view.
    pub fn default_hd() -> PinholeIntrinsics {
        PinholeIntrinsics::with_hfov(1280, 720, 72f64.to_radians())
    }

    /// Intrinsics for a centered principal point and given horizontal FOV.
    pub fn with_hfov(width: u32, height: u32, hfov: f64) -> PinholeIntrinsics {
        let fx = width as f64 * 0.5 / (hfov * 0.5).tan();
        PinholeIntrinsics {
            fx,
            fy: fx,
            cx: width as f64 * 0.5,
            cy: height as f64 * 0.5,
            width,
            height,
        }
    }

    /// Same field of view at a different resolution.
    pub fn rescaled(&self, width: u32, height: u32) -> PinholeIntrinsics {
        let sx = width as f64 / self.width as f64;
        let sy = height as f64 / self.height as f64;
        PinholeIntrinsics {
            fx: self.fx * sx,
            fy: self.fy * sy,
            cx: self.cx * sx,
            cy: self.cy * sy,
            width,
            height,
        }
    }

    pub fn validate(&self) -> Result<(), GeomError> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(GeomError::InvalidIntrinsics("focal length must be positive"));
        }
        if self.width == 0 || self.height == 0 {
            return Err(GeomError::InvalidIntrinsics("resolution must be positive"));
        }
        if !(0.0 <= self.cx && self.cx < self.width as f64 && 0.0 <= self.cy && self.cy < self.height as f64) {
            return Err(GeomError::InvalidIntrinsics("principal point outside image"));
        }
        Ok(())
    }

    /// Project a camera-frame point. Returns `None` when the point is behind
    /// the camera (z <= 0) or lands outside the image bounds.
    #[inline]
    pub fn project(&self, p_cam: Vec3) -> Option<(f64, f64)> {
        if p_cam.z <= 0.0 {
            return None;
        }
        let u = self.fx * p_cam.x / p_cam.z + self.cx;
        let v = self.fy * p_cam.y / p_cam.z + self.cy;
        if u < 0.0 || u >= self.width as f64 || v < 0.0 || v >= self.height as f64 {
            return None;
        }
        Some((u, v))
    }

    /// Camera-frame point for pixel (u, v) at camera-frame depth z.
    #[inline]
    pub fn unproject(&self, u: f64, v: f64, z: f64) -> Vec3 {
        vec3((u - self.cx) / self.fx * z, (v - self.cy) / self.fy * z, z)
    }

    /// Unit direction through pixel (u, v) in the camera frame.
    #[inline]
    pub fn pixel_direction(&self, u: f64, v: f64) -> Vec3 {
        self.unproject(u, v, 1.0).normalized()
    }
}

/// Rectified stereo pair: the right camera is the left camera translated by
/// `baseline_m` along the left camera's x-axis with zero relative rotation.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StereoRig {
    pub intrinsics: PinholeIntrinsics,
    /// World-from-camera transform of the left camera.
    pub left_pose: RigidTransform,
    pub baseline_m: f64,
}

impl StereoRig {
    pub fn new(intrinsics: PinholeIntrinsics, left_pose: RigidTransform, baseline_m: f64) -> Result<Self, GeomError> {
        if baseline_m <= 0.0 {
            return Err(GeomError::InvalidBaseline(baseline_m));
        }
        if !left_pose.is_orthonormal(1e-6) {
            return Err(GeomError::NotOrthonormal);
        }
        Ok(StereoRig { intrinsics, left_pose, baseline_m })
    }

    /// Test-only degenerate rig with zero baseline; both views coincide.
    pub fn degenerate(intrinsics: PinholeIntrinsics, left_pose: RigidTransform) -> StereoRig {
        StereoRig { intrinsics, left_pose, baseline_m: 0.0 }
    }

    pub fn right_pose(&self) -> RigidTransform {
        let offset = self.left_pose.apply_vector(Vec3::X) * self.baseline_m;
        RigidTransform {
            rotation: self.left_pose.rotation,
            translation: self.left_pose.translation + offset,
        }
    }

    pub fn pose(&self, view: StereoView) -> RigidTransform {
        match view {
            StereoView::Left => self.left_pose,
            StereoView::Right => self.right_pose(),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StereoView {
    Left,
    Right,
}

impl StereoView {
    pub fn tag(&self) -> &'static str {
        match self {
            StereoView::Left => "left",
            StereoView::Right => "right",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::vec::Mat3;
    use crate::rng::Pcg32;

    #[test]
    fn project_on_axis_point() {
        let intr = PinholeIntrinsics::new(100.0, 100.0, 64.0, 64.0, 128, 128).unwrap();
        let (u, v) = intr.project(vec3(0.0, 0.0, 1.0)).unwrap();
        assert_eq!((u, v), (64.0, 64.0));
    }

    #[test]
    fn project_linear_formula() {
        let intr = PinholeIntrinsics::new(100.0, 100.0, 64.0, 64.0, 256, 128).unwrap();
        let (u, _) = intr.project(vec3(1.0, 0.0, 2.0)).unwrap();
        assert!((u - 114.0).abs() < 1e-12);
    }

    #[test]
    fn project_behind_camera_is_invalid() {
        let intr = PinholeIntrinsics::new(100.0, 100.0, 64.0, 64.0, 128, 128).unwrap();
        assert!(intr.project(vec3(0.0, 0.0, -1.0)).is_none());
        assert!(intr.project(vec3(0.0, 0.0, 0.0)).is_none());
    }

    #[test]
    fn project_unproject_round_trip() {
        let intr = PinholeIntrinsics::default_hd();
        let mut rng = Pcg32::from_parts(&[42, 0]);
        for _ in 0..10_000 {
            let u = rng.range(0.0, intr.width as f64 - 1e-6);
            let v = rng.range(0.0, intr.height as f64 - 1e-6);
            let z = rng.range(0.05, 100.0);
            let p = intr.unproject(u, v, z);
            let (u2, v2) = intr.project(p).expect("in bounds by construction");
            assert!((u2 - u).abs() < 1e-4 && (v2 - v).abs() < 1e-4);
        }
    }

    #[test]
    fn rectified_rig_disparity_identity() {
        // u_left - u_right = fx * B / z for any world point visible in both.
        let intr = PinholeIntrinsics::default_hd();
        let pose = RigidTransform::from_parts(
            Mat3::rot_z(0.4).matmul(&Mat3::rot_x(-1.3)),
            vec3(1.0, -2.0, 1.5),
        );
        let rig = StereoRig::new(intr, pose, 0.25).unwrap();
        let left_inv = rig.left_pose.inverse();
        let right_inv = rig.right_pose().inverse();
        let mut rng = Pcg32::from_parts(&[43, 0]);
        let mut checked = 0;
        for _ in 0..20_000 {
            let u = rng.range(0.0, intr.width as f64);
            let v = rng.range(0.0, intr.height as f64);
            let z = rng.range(0.5, 40.0);
            let world = rig.left_pose.apply_point(intr.unproject(u, v, z));
            let pl = left_inv.apply_point(world);
            let pr = right_inv.apply_point(world);
            let (ul, vl) = match intr.project(pl) {
                Some(x) => x,
                None => continue,
            };
            let (ur, vr) = match intr.project(pr) {
                Some(x) => x,
                None => continue,
            };
            let d = intr.fx * rig.baseline_m / pl.z;
            assert!((ul - ur - d).abs() < 1e-4, "disparity identity violated");
            assert!((vl - vr).abs() < 1e-6, "rectified rows must match");
            checked += 1;
        }
        assert!(checked > 10_000);
    }

    #[test]
    fn zero_baseline_rig_rejected() {
        let intr = PinholeIntrinsics::default_hd();
        assert!(StereoRig::new(intr, RigidTransform::IDENTITY, 0.0).is_err());
    }
}
