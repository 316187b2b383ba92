//! Frame record IO: PNG color/label images, PFM float maps, and the JSON
//! metadata sidecar.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geom::{PinholeIntrinsics, RigidTransform, StereoRig};
use crate::gt::{DisparityMap, OcclusionFlag, OcclusionMap};
use crate::render::FrameBuffers;
use crate::scene::{Scene, SceneType};

use super::{io_err, linear_to_srgb_u8, pfm, srgb_u8_to_linear, DatasetError, FloatImage, FrameRecord};

/// Occlusion PNG code values.
const OCC_VISIBLE: u8 = 255;
const OCC_OCCLUDED: u8 = 128;
const OCC_OUT_OF_VIEW: u8 = 0;

pub const GENERATOR_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrameMeta {
    pub intrinsics: PinholeIntrinsics,
    pub left_pose: RigidTransform,
    pub baseline_m: f64,
    pub seed: u64,
    pub scene_type: SceneType,
    pub scene_id: u32,
    pub frame_id: u32,
    pub generator_version: String,
}

impl FrameMeta {
    pub fn rig(&self) -> StereoRig {
        StereoRig {
            intrinsics: self.intrinsics,
            left_pose: self.left_pose,
            baseline_m: self.baseline_m,
        }
    }
}

/// Everything needed to write one stereo frame.
pub struct FrameData<'a> {
    pub rig: &'a StereoRig,
    pub left: &'a FrameBuffers,
    pub right: &'a FrameBuffers,
    pub disp_left: &'a DisparityMap,
    pub disp_right: &'a DisparityMap,
    pub occ_left: &'a OcclusionMap,
    pub occ_right: &'a OcclusionMap,
    pub scene_type: SceneType,
    pub scene_id: u32,
    pub frame_id: u32,
    pub seed: u64,
}

fn png_err(e: image::ImageError) -> DatasetError {
    DatasetError::Png(e.to_string())
}

fn write_rgb_png(path: &Path, width: u32, height: u32, rgb: &[[f32; 3]]) -> Result<(), DatasetError> {
    let mut raw = Vec::with_capacity(rgb.len() * 3);
    for px in rgb {
        raw.push(linear_to_srgb_u8(px[0]));
        raw.push(linear_to_srgb_u8(px[1]));
        raw.push(linear_to_srgb_u8(px[2]));
    }
    let img: image::RgbImage = image::ImageBuffer::from_raw(width, height, raw).expect("size");
    img.save(path).map_err(png_err)
}

pub(crate) fn read_rgb_png(path: &Path) -> Result<(u32, u32, Vec<[f32; 3]>), DatasetError> {
    let img = image::open(path).map_err(png_err)?.to_rgb8();
    let (w, h) = img.dimensions();
    let rgb = img
        .pixels()
        .map(|p| [srgb_u8_to_linear(p[0]), srgb_u8_to_linear(p[1]), srgb_u8_to_linear(p[2])])
        .collect();
    Ok((w, h, rgb))
}

fn write_occ_png(path: &Path, occ: &OcclusionMap) -> Result<(), DatasetError> {
    let raw: Vec<u8> = occ
        .flags
        .iter()
        .map(|f| match f {
            OcclusionFlag::Visible => OCC_VISIBLE,
            OcclusionFlag::Occluded => OCC_OCCLUDED,
            OcclusionFlag::OutOfView => OCC_OUT_OF_VIEW,
        })
        .collect();
    let img: image::GrayImage = image::ImageBuffer::from_raw(occ.width, occ.height, raw).expect("size");
    img.save(path).map_err(png_err)
}

pub fn read_occ_png(path: &Path) -> Result<OcclusionMap, DatasetError> {
    let img = image::open(path).map_err(png_err)?.to_luma8();
    let (width, height) = img.dimensions();
    let mut flags = Vec::with_capacity((width * height) as usize);
    for p in img.pixels() {
        flags.push(match p[0] {
            OCC_VISIBLE => OcclusionFlag::Visible,
            OCC_OCCLUDED => OcclusionFlag::Occluded,
            OCC_OUT_OF_VIEW => OcclusionFlag::OutOfView,
            other => return Err(DatasetError::Png(format!("bad occlusion code {other}"))),
        });
    }
    Ok(OcclusionMap { width, height, flags })
}

fn write_seg_png(path: &Path, width: u32, height: u32, ids: &[u32]) -> Result<(), DatasetError> {
    let mut raw = Vec::with_capacity(ids.len());
    for &id in ids {
        if id > u16::MAX as u32 {
            return Err(DatasetError::IdOverflow(id));
        }
        raw.push(id as u16);
    }
    let img: image::ImageBuffer<image::Luma<u16>, Vec<u16>> =
        image::ImageBuffer::from_raw(width, height, raw).expect("size");
    img.save(path).map_err(png_err)
}

pub fn read_seg_png(path: &Path) -> Result<(u32, u32, Vec<u16>), DatasetError> {
    let img = image::open(path).map_err(png_err)?.to_luma16();
    let (w, h) = img.dimensions();
    Ok((w, h, img.pixels().map(|p| p[0]).collect()))
}

fn float_image(width: u32, height: u32, data: &[f32]) -> FloatImage {
    FloatImage::new(width, height, data.to_vec())
}

/// Write one frame directory and return its manifest record.
pub fn write_frame(root: &Path, data: &FrameData) -> Result<FrameRecord, DatasetError> {
    let rel = format!(
        "{}/scene_{:04}/frame_{:04}",
        data.scene_type.tag(),
        data.scene_id,
        data.frame_id
    );
    let dir = root.join(&rel);
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let w = data.left.width;
    let h = data.left.height;
    write_rgb_png(&dir.join("left.png"), w, h, &data.left.rgb)?;
    write_rgb_png(&dir.join("right.png"), w, h, &data.right.rgb)?;
    pfm::write_pfm(&dir.join("disp_left.pfm"), &float_image(w, h, &data.disp_left.values))?;
    pfm::write_pfm(&dir.join("disp_right.pfm"), &float_image(w, h, &data.disp_right.values))?;
    pfm::write_pfm(&dir.join("depth_left.pfm"), &float_image(w, h, &data.left.depth))?;
    pfm::write_pfm(&dir.join("depth_right.pfm"), &float_image(w, h, &data.right.depth))?;
    write_occ_png(&dir.join("occ_left.png"), data.occ_left)?;
    write_occ_png(&dir.join("occ_right.png"), data.occ_right)?;
    write_seg_png(&dir.join("objseg.png"), w, h, &data.left.object_id)?;
    write_seg_png(&dir.join("matseg.png"), w, h, &data.left.material_id)?;
    let meta = FrameMeta {
        intrinsics: data.rig.intrinsics,
        left_pose: data.rig.left_pose,
        baseline_m: data.rig.baseline_m,
        seed: data.seed,
        scene_type: data.scene_type,
        scene_id: data.scene_id,
        frame_id: data.frame_id,
        generator_version: GENERATOR_VERSION.to_string(),
    };
    let meta_path = dir.join("meta.json");
    let mut json = serde_json::to_vec_pretty(&meta)?;
    json.push(b'\n');
    fs::write(&meta_path, json).map_err(|e| io_err(&meta_path, e))?;
    Ok(FrameRecord {
        path: rel,
        scene_type: data.scene_type,
        scene_id: data.scene_id,
        frame_id: data.frame_id,
    })
}

/// Per-scene name tables (`objects.json`, `materials.json`).
pub fn write_scene_tables(scene_dir: &Path, scene: &Scene) -> Result<(), DatasetError> {
    #[derive(Serialize)]
    struct ObjectEntry<'a> {
        id: u32,
        name: &'a str,
        tags: &'a [crate::scene::ObjectTag],
        thin_structure: bool,
        part_materials: &'a [(u32, u32)],
    }
    #[derive(Serialize)]
    struct MaterialEntry<'a> {
        id: u32,
        name: &'a str,
        kind: crate::scene::MaterialKind,
    }
    fs::create_dir_all(scene_dir).map_err(|e| io_err(scene_dir, e))?;
    let objects: Vec<ObjectEntry> = scene
        .objects
        .iter()
        .map(|o| ObjectEntry {
            id: o.id,
            name: &o.name,
            tags: &o.tags,
            thin_structure: o.thin_structure,
            part_materials: &o.part_materials,
        })
        .collect();
    let materials: Vec<MaterialEntry> = scene
        .materials
        .iter()
        .map(|m| MaterialEntry { id: m.id, name: &m.name, kind: m.kind })
        .collect();
    for (name, json) in [
        ("objects.json", serde_json::to_vec_pretty(&objects)?),
        ("materials.json", serde_json::to_vec_pretty(&materials)?),
    ] {
        let path = scene_dir.join(name);
        let mut body = json;
        body.push(b'\n');
        fs::write(&path, body).map_err(|e| io_err(&path, e))?;
    }
    Ok(())
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct NameTableEntry {
    pub id: u32,
    pub name: String,
    #[serde(default)]
    pub tags: Vec<crate::scene::ObjectTag>,
    #[serde(default)]
    pub kind: Option<crate::scene::MaterialKind>,
    #[serde(default)]
    pub thin_structure: bool,
    #[serde(default)]
    pub part_materials: Vec<(u32, u32)>,
}

pub fn read_name_table(path: &Path) -> Result<Vec<NameTableEntry>, DatasetError> {
    let raw = fs::read(path).map_err(|e| io_err(path, e))?;
    Ok(serde_json::from_slice(&raw)?)
}

/// A frame read back from disk, with RGB decoded to linear floats and
/// disparity validity reconstructed from the depth buffer.
pub struct LoadedFrame {
    pub meta: FrameMeta,
    pub width: u32,
    pub height: u32,
    pub left_rgb: Vec<[f32; 3]>,
    pub right_rgb: Vec<[f32; 3]>,
    pub depth_left: FloatImage,
    pub depth_right: FloatImage,
    pub disp_left: DisparityMap,
    pub disp_right: DisparityMap,
    pub occ_left: OcclusionMap,
    pub occ_right: OcclusionMap,
    pub objseg: Vec<u16>,
    pub matseg: Vec<u16>,
}

impl LoadedFrame {
    /// Rebuild render buffers for validation (normal/albedo aux buffers are
    /// not part of the on-disk record).
    pub fn to_framebuffers(&self) -> (FrameBuffers, FrameBuffers) {
        let make = |rgb: &Vec<[f32; 3]>, depth: &FloatImage, ids: Option<(&[u16], &[u16])>| FrameBuffers {
            width: self.width,
            height: self.height,
            rgb: rgb.clone(),
            depth: depth.data.clone(),
            object_id: ids.map(|(o, _)| o.iter().map(|&v| v as u32).collect()).unwrap_or_default(),
            material_id: ids.map(|(_, m)| m.iter().map(|&v| v as u32).collect()).unwrap_or_default(),
            normal: vec![[0.0; 3]; (self.width * self.height) as usize],
            albedo: vec![[0.0; 3]; (self.width * self.height) as usize],
            clamped_samples: 0,
        };
        (
            make(&self.left_rgb, &self.depth_left, Some((&self.objseg, &self.matseg))),
            make(&self.right_rgb, &self.depth_right, None),
        )
    }
}

fn disparity_from_files(values: FloatImage, depth: &FloatImage) -> DisparityMap {
    let valid = depth.data.iter().map(|z| z.is_finite()).collect();
    DisparityMap {
        width: values.width,
        height: values.height,
        values: values.data,
        valid,
    }
}

pub fn read_frame(dir: &Path) -> Result<LoadedFrame, DatasetError> {
    let meta_path = dir.join("meta.json");
    let meta: FrameMeta = serde_json::from_slice(&fs::read(&meta_path).map_err(|e| io_err(&meta_path, e))?)?;
    let (w, h, left_rgb) = read_rgb_png(&dir.join("left.png"))?;
    let (_, _, right_rgb) = read_rgb_png(&dir.join("right.png"))?;
    let depth_left = pfm::read_pfm(&dir.join("depth_left.pfm"))?;
    let depth_right = pfm::read_pfm(&dir.join("depth_right.pfm"))?;
    let disp_left = disparity_from_files(pfm::read_pfm(&dir.join("disp_left.pfm"))?, &depth_left);
    let disp_right = disparity_from_files(pfm::read_pfm(&dir.join("disp_right.pfm"))?, &depth_right);
    let occ_left = read_occ_png(&dir.join("occ_left.png"))?;
    let occ_right = read_occ_png(&dir.join("occ_right.png"))?;
    let (_, _, objseg) = read_seg_png(&dir.join("objseg.png"))?;
    let (_, _, matseg) = read_seg_png(&dir.join("matseg.png"))?;
    Ok(LoadedFrame {
        meta,
        width: w,
        height: h,
        left_rgb,
        right_rgb,
        depth_left,
        depth_right,
        disp_left,
        disp_right,
        occ_left,
        occ_right,
        objseg,
        matseg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{vec3, Mat3};
    use crate::gt;
    use crate::geom::StereoView;

    fn synthetic_frame(seed: u64) -> (StereoRig, FrameBuffers, FrameBuffers) {
        use crate::rng::Pcg32;
        let w = 40u32;
        let h = 24u32;
        let intr = PinholeIntrinsics::with_hfov(w, h, 60f64.to_radians());
        let rig = StereoRig::new(
            intr,
            RigidTransform::from_parts(Mat3::rot_z(0.3), vec3(1.0, 2.0, 1.5)),
            0.18,
        )
        .unwrap();
        let mut rng = Pcg32::new(seed, 0);
        let mut make = || {
            let n = (w * h) as usize;
            FrameBuffers {
                width: w,
                height: h,
                rgb: (0..n).map(|_| [rng.f64() as f32, rng.f64() as f32, rng.f64() as f32]).collect(),
                depth: (0..n)
                    .map(|i| if i % 37 == 0 { f32::INFINITY } else { 1.0 + (i % 17) as f32 })
                    .collect(),
                object_id: (0..n).map(|i| (i % 5) as u32).collect(),
                material_id: (0..n).map(|i| (i % 7) as u32).collect(),
                normal: vec![[0.0, 0.0, 1.0]; n],
                albedo: vec![[0.5; 3]; n],
                clamped_samples: 0,
            }
        };
        (rig, make(), make())
    }

    #[test]
    fn frame_round_trip_preserves_gt_bits() {
        let (rig, left, right) = synthetic_frame(5);
        let dl = gt::depth_to_disparity(&left.depth, left.width, left.height, &rig).unwrap();
        let dr = gt::depth_to_disparity(&right.depth, right.width, right.height, &rig).unwrap();
        let ol = gt::occlusion_map(&dl, &dr, StereoView::Left, false).unwrap();
        let or = gt::occlusion_map(&dr, &dl, StereoView::Right, false).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let record = write_frame(
            dir.path(),
            &FrameData {
                rig: &rig,
                left: &left,
                right: &right,
                disp_left: &dl,
                disp_right: &dr,
                occ_left: &ol,
                occ_right: &or,
                scene_type: SceneType::DenseFloating,
                scene_id: 3,
                frame_id: 9,
                seed: 1234,
            },
        )
        .unwrap();
        assert_eq!(record.path, "dense_floating/scene_0003/frame_0009");
        let loaded = read_frame(&dir.path().join(&record.path)).unwrap();
        // Float maps are bit-exact.
        assert_eq!(loaded.depth_left.data, left.depth);
        assert_eq!(loaded.depth_right.data, right.depth);
        assert_eq!(loaded.disp_left.values, dl.values);
        assert_eq!(loaded.disp_left.valid, dl.valid);
        assert_eq!(loaded.occ_left.flags, ol.flags);
        assert_eq!(loaded.occ_right.flags, or.flags);
        // Segmentation ids survive the 16-bit encoding.
        let ids: Vec<u32> = loaded.objseg.iter().map(|&v| v as u32).collect();
        assert_eq!(ids, left.object_id);
        // RGB survives up to the 8-bit sRGB quantization.
        for (a, b) in loaded.left_rgb.iter().zip(&left.rgb) {
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() < 0.0045, "{} vs {}", a[c], b[c]);
            }
        }
        // Metadata round-trips.
        assert_eq!(loaded.meta.baseline_m, rig.baseline_m);
        assert_eq!(loaded.meta.scene_id, 3);
        assert_eq!(loaded.meta.rig().intrinsics, rig.intrinsics);
    }

    #[test]
    fn rgb_png_written_bytes_are_deterministic() {
        let (_, left, _) = synthetic_frame(9);
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.png");
        let p2 = dir.path().join("b.png");
        write_rgb_png(&p1, left.width, left.height, &left.rgb).unwrap();
        write_rgb_png(&p2, left.width, left.height, &left.rgb).unwrap();
        assert_eq!(fs::read(p1).unwrap(), fs::read(p2).unwrap());
    }
}
