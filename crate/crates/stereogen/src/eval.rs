//! Stereo evaluation metrics (end-point error, bad-pixel rates, per-label
//! error tables) and dataset statistics, operating on ground-truth and
//! prediction files laid out per the dataset format.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{read_pfm, FloatImage, Manifest};
use crate::gt::OcclusionFlag;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("resolution mismatch: {0}x{1} vs {2}x{3}")]
    ResolutionMismatch(u32, u32, u32, u32),
    #[error("empty valid mask: metric undefined")]
    EmptyMask,
    #[error(transparent)]
    Dataset(#[from] crate::dataset::DatasetError),
    #[error(transparent)]
    Pfm(#[from] crate::dataset::PfmError),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OcclusionHandling {
    All,
    NonOccluded,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolutionTag {
    Full,
    Half,
    Quarter,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricProfile {
    pub name: String,
    pub threshold_px: f64,
    pub occlusion: OcclusionHandling,
    pub resolution: ResolutionTag,
}

/// The benchmark-style profiles: 2px non-occluded at full and half
/// resolution, 2px, 1px, 3px, and 2px at quarter resolution.
pub fn builtin_profiles() -> Vec<MetricProfile> {
    let p = |name: &str, threshold_px: f64, occlusion, resolution| MetricProfile {
        name: name.into(),
        threshold_px,
        occlusion,
        resolution,
    };
    vec![
        p("middlebury2014_f", 2.0, OcclusionHandling::NonOccluded, ResolutionTag::Full),
        p("middlebury2014_h", 2.0, OcclusionHandling::NonOccluded, ResolutionTag::Half),
        p("middlebury2021", 2.0, OcclusionHandling::All, ResolutionTag::Full),
        p("eth3d", 1.0, OcclusionHandling::All, ResolutionTag::Full),
        p("kitti2012", 3.0, OcclusionHandling::All, ResolutionTag::Full),
        p("kitti2015", 3.0, OcclusionHandling::All, ResolutionTag::Full),
        p("booster_q", 2.0, OcclusionHandling::All, ResolutionTag::Quarter),
    ]
}

pub fn profile_by_name(name: &str) -> Option<MetricProfile> {
    builtin_profiles().into_iter().find(|p| p.name == name)
}

fn check_same_shape(a_len: usize, b_len: usize, mask_len: usize) -> Result<(), EvalError> {
    if a_len != b_len || a_len != mask_len {
        return Err(EvalError::ResolutionMismatch(a_len as u32, 1, b_len as u32, 1));
    }
    Ok(())
}

/// Mean |pred - gt| over valid pixels.
pub fn epe(pred: &[f32], gt: &[f32], valid: &[bool]) -> Result<f64, EvalError> {
    check_same_shape(pred.len(), gt.len(), valid.len())?;
    let mut sum = 0.0f64;
    let mut count = 0u64;
    for i in 0..pred.len() {
        if valid[i] {
            sum += (pred[i] as f64 - gt[i] as f64).abs();
            count += 1;
        }
    }
    if count == 0 {
        return Err(EvalError::EmptyMask);
    }
    Ok(sum / count as f64)
}

/// Percentage of valid pixels with |pred - gt| strictly above `threshold`.
/// An error of exactly the threshold counts as good.
pub fn bad_px(pred: &[f32], gt: &[f32], valid: &[bool], threshold: f64) -> Result<f64, EvalError> {
    assert!(threshold > 0.0);
    check_same_shape(pred.len(), gt.len(), valid.len())?;
    let mut bad = 0u64;
    let mut count = 0u64;
    for i in 0..pred.len() {
        if valid[i] {
            count += 1;
            if (pred[i] as f64 - gt[i] as f64).abs() > threshold {
                bad += 1;
            }
        }
    }
    if count == 0 {
        return Err(EvalError::EmptyMask);
    }
    Ok(100.0 * bad as f64 / count as f64)
}

#[derive(Clone, Debug, Serialize)]
pub struct LabelRow {
    pub label: String,
    pub mean_epe: f64,
    pub pixel_share: f64,
    pub pixels: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LabelTable {
    /// Labels meeting the share cutoff, sorted by mean EPE descending.
    pub ranked: Vec<LabelRow>,
    /// Labels below the cutoff, with their pixel counts.
    pub below_min_share: Vec<(String, u64)>,
}

/// Per-label mean EPE over labels whose pixel share is at least
/// `min_share`; unknown ids are reported as `unknown:<id>`.
pub fn group_epe_by_label(
    pred: &[f32],
    gt: &[f32],
    valid: &[bool],
    seg: &[u16],
    names: &BTreeMap<u16, String>,
    min_share: f64,
) -> Result<LabelTable, EvalError> {
    check_same_shape(pred.len(), gt.len(), valid.len())?;
    if seg.len() != pred.len() {
        return Err(EvalError::ResolutionMismatch(seg.len() as u32, 1, pred.len() as u32, 1));
    }
    let mut acc: BTreeMap<u16, (f64, u64)> = BTreeMap::new();
    let mut total = 0u64;
    for i in 0..pred.len() {
        if valid[i] {
            let entry = acc.entry(seg[i]).or_insert((0.0, 0));
            entry.0 += (pred[i] as f64 - gt[i] as f64).abs();
            entry.1 += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(EvalError::EmptyMask);
    }
    let mut ranked = Vec::new();
    let mut below = Vec::new();
    for (id, (sum, count)) in acc {
        let label = names
            .get(&id)
            .cloned()
            .unwrap_or_else(|| format!("unknown:{id}"));
        let share = count as f64 / total as f64;
        if share >= min_share {
            ranked.push(LabelRow {
                label,
                mean_epe: sum / count as f64,
                pixel_share: share,
                pixels: count,
            });
        } else {
            below.push((label, count));
        }
    }
    ranked.sort_by(|a, b| b.mean_epe.total_cmp(&a.mean_epe).then(a.label.cmp(&b.label)));
    Ok(LabelTable { ranked, below_min_share: below })
}

/// Area-average downsample of a disparity map by an integer factor, scaling
/// values by 1/factor; a pixel is valid when any source pixel was valid.
pub fn resize_disparity(img: &FloatImage, valid: &[bool], factor: u32) -> (FloatImage, Vec<bool>) {
    assert!(factor >= 1);
    let w = img.width / factor;
    let h = img.height / factor;
    let mut data = vec![0.0f32; (w * h) as usize];
    let mut out_valid = vec![false; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let mut sum = 0.0f64;
            let mut n = 0u32;
            for dy in 0..factor {
                for dx in 0..factor {
                    let sx = x * factor + dx;
                    let sy = y * factor + dy;
                    let i = (sy * img.width + sx) as usize;
                    if valid[i] {
                        sum += img.data[i] as f64;
                        n += 1;
                    }
                }
            }
            let o = (y * w + x) as usize;
            if n > 0 {
                data[o] = (sum / n as f64 / factor as f64) as f32;
                out_valid[o] = true;
            }
        }
    }
    (FloatImage::new(w, h, data), out_valid)
}

#[derive(Clone, Debug, Serialize)]
pub struct FrameRow {
    pub frame: String,
    pub epe: f64,
    pub bad_px: f64,
    pub valid_pixels: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricReport {
    pub profile: MetricProfile,
    pub rows: Vec<FrameRow>,
    /// Frames that could not be evaluated (missing or unreadable files).
    pub failed: Vec<String>,
    /// Valid-pixel-weighted aggregate over evaluated frames.
    pub aggregate_epe: f64,
    pub aggregate_bad_px: f64,
    pub total_valid_pixels: u64,
}

impl MetricReport {
    pub fn all_frames_evaluated(&self) -> bool {
        self.failed.is_empty()
    }

    fn aggregate(profile: MetricProfile, rows: Vec<FrameRow>, failed: Vec<String>) -> MetricReport {
        let total: u64 = rows.iter().map(|r| r.valid_pixels).sum();
        let (mut epe_sum, mut bad_sum) = (0.0, 0.0);
        for r in &rows {
            epe_sum += r.epe * r.valid_pixels as f64;
            bad_sum += r.bad_px * r.valid_pixels as f64;
        }
        let (aggregate_epe, aggregate_bad_px) = if total > 0 {
            (epe_sum / total as f64, bad_sum / total as f64)
        } else {
            (f64::NAN, f64::NAN)
        };
        MetricReport {
            profile,
            rows,
            failed,
            aggregate_epe,
            aggregate_bad_px,
            total_valid_pixels: total,
        }
    }
}

/// Valid mask for one frame under a profile: finite ground truth, not sky
/// or exterior, and (for non-occluded profiles) visible in both views.
pub fn frame_valid_mask(
    frame: &crate::dataset::LoadedFrame,
    sky_mask: &[bool],
    occlusion: OcclusionHandling,
) -> Vec<bool> {
    let n = frame.disp_left.values.len();
    let mut valid = vec![false; n];
    for i in 0..n {
        let mut ok = frame.disp_left.valid[i] && !sky_mask[i];
        if occlusion == OcclusionHandling::NonOccluded {
            ok &= frame.occ_left.flags[i] == OcclusionFlag::Visible;
        }
        valid[i] = ok;
    }
    valid
}

fn sky_mask_for_frame(root: &Path, record: &crate::dataset::FrameRecord, frame: &crate::dataset::LoadedFrame) -> Vec<bool> {
    // Exterior-tagged ids come from the scene's objects.json.
    let scene_dir = root.join(record.scene_type.tag()).join(format!("scene_{:04}", record.scene_id));
    let exterior: std::collections::BTreeSet<u16> = crate::dataset::record::read_name_table(&scene_dir.join("objects.json"))
        .map(|entries| {
            entries
                .iter()
                .filter(|e| e.tags.contains(&crate::scene::ObjectTag::Exterior))
                .map(|e| e.id as u16)
                .collect()
        })
        .unwrap_or_default();
    frame
        .objseg
        .iter()
        .map(|&id| id == 0 || exterior.contains(&id))
        .collect()
}

/// Evaluate predictions against dataset ground truth. Predictions mirror
/// the dataset layout: `<pred_root>/<frame path>/disp_left.pfm`.
pub fn evaluate_profile(
    dataset_root: &Path,
    pred_root: &Path,
    manifest: &Manifest,
    profile: &MetricProfile,
) -> MetricReport {
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for record in &manifest.frames {
        let frame_dir = dataset_root.join(&record.path);
        let frame = match crate::dataset::read_frame(&frame_dir) {
            Ok(f) => f,
            Err(err) => {
                failed.push(format!("{}: {err}", record.path));
                continue;
            }
        };
        let pred_path = pred_root.join(&record.path).join("disp_left.pfm");
        let pred = match read_pfm(&pred_path) {
            Ok(p) => p,
            Err(err) => {
                failed.push(format!("{}: {err}", record.path));
                continue;
            }
        };
        let sky = sky_mask_for_frame(dataset_root, record, &frame);
        let valid = frame_valid_mask(&frame, &sky, profile.occlusion);
        let gt_img = FloatImage::new(frame.width, frame.height, frame.disp_left.values.clone());
        let factor = match profile.resolution {
            ResolutionTag::Full => 1,
            ResolutionTag::Half => 2,
            ResolutionTag::Quarter => 4,
        };
        let (gt_img, valid) = if factor > 1 {
            resize_disparity(&gt_img, &valid, factor)
        } else {
            (gt_img, valid)
        };
        if pred.width != gt_img.width || pred.height != gt_img.height {
            failed.push(format!(
                "{}: prediction {}x{} vs expected {}x{}",
                record.path, pred.width, pred.height, gt_img.width, gt_img.height
            ));
            continue;
        }
        match (
            epe(&pred.data, &gt_img.data, &valid),
            bad_px(&pred.data, &gt_img.data, &valid, profile.threshold_px),
        ) {
            (Ok(e), Ok(b)) => rows.push(FrameRow {
                frame: record.path.clone(),
                epe: e,
                bad_px: b,
                valid_pixels: valid.iter().filter(|&&v| v).count() as u64,
            }),
            (Err(err), _) | (_, Err(err)) => failed.push(format!("{}: {err}", record.path)),
        }
    }
    MetricReport::aggregate(profile.clone(), rows, failed)
}

#[derive(Clone, Debug, Serialize)]
pub struct DatasetStats {
    pub frame_count: usize,
    pub per_type_counts: BTreeMap<String, usize>,
    /// 1-px-wide disparity histogram bins, final bin collects >= 255 px.
    pub disparity_histogram: Vec<u64>,
    pub valid_pixel_count: u64,
    pub min_depth_m: f64,
    pub max_depth_m: f64,
    pub mean_intensity: f64,
    pub unreadable: Vec<String>,
}

/// Streaming statistics pass over all ground-truth buffers in a manifest.
pub fn dataset_stats(root: &Path, manifest: &Manifest) -> DatasetStats {
    let mut histogram = vec![0u64; 256];
    let mut valid_pixels = 0u64;
    let mut min_depth = f64::INFINITY;
    let mut max_depth: f64 = 0.0;
    let mut intensity_sum = 0.0f64;
    let mut intensity_frames = 0usize;
    let mut unreadable = Vec::new();
    for record in &manifest.frames {
        let dir = root.join(&record.path);
        match crate::dataset::read_frame(&dir) {
            Ok(frame) => {
                for (i, &d) in frame.disp_left.values.iter().enumerate() {
                    if frame.disp_left.valid[i] {
                        valid_pixels += 1;
                        let bin = (d.max(0.0) as usize).min(255);
                        histogram[bin] += 1;
                    }
                }
                for &z in frame.depth_left.data.iter().chain(&frame.depth_right.data) {
                    if z.is_finite() {
                        min_depth = min_depth.min(z as f64);
                        max_depth = max_depth.max(z as f64);
                    }
                }
                let mean: f64 = frame
                    .left_rgb
                    .iter()
                    .map(|c| (c[0] as f64 + c[1] as f64 + c[2] as f64) / 3.0)
                    .sum::<f64>()
                    / frame.left_rgb.len() as f64;
                intensity_sum += mean;
                intensity_frames += 1;
            }
            Err(err) => unreadable.push(format!("{}: {err}", record.path)),
        }
    }
    DatasetStats {
        frame_count: manifest.frames.len(),
        per_type_counts: manifest.counts.clone(),
        disparity_histogram: histogram,
        valid_pixel_count: valid_pixels,
        min_depth_m: min_depth,
        max_depth_m: max_depth,
        mean_intensity: if intensity_frames > 0 { intensity_sum / intensity_frames as f64 } else { f64::NAN },
        unreadable,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Pcg32;

    fn random_pair(seed: u64, n: usize) -> (Vec<f32>, Vec<f32>, Vec<bool>) {
        let mut rng = Pcg32::new(seed, 0);
        let pred: Vec<f32> = (0..n).map(|_| (rng.f64() * 80.0) as f32).collect();
        let gt: Vec<f32> = (0..n).map(|_| (rng.f64() * 80.0) as f32).collect();
        let valid: Vec<bool> = (0..n).map(|_| rng.chance(0.8)).collect();
        (pred, gt, valid)
    }

    #[test]
    fn epe_identities() {
        let gt = vec![3.0f32, 4.0, 5.0, 6.0];
        let valid = vec![true; 4];
        assert_eq!(epe(&gt, &gt, &valid).unwrap(), 0.0);
        let shifted: Vec<f32> = gt.iter().map(|v| v + 1.0).collect();
        assert_eq!(epe(&shifted, &gt, &valid).unwrap(), 1.0);
        assert!(matches!(epe(&gt, &gt, &[false; 4]), Err(EvalError::EmptyMask)));
    }

    #[test]
    fn bad_px_identities() {
        let gt = vec![10.0f32; 8];
        let valid = vec![true; 8];
        assert_eq!(bad_px(&gt, &gt, &valid, 2.0).unwrap(), 0.0);
        let mut half = gt.clone();
        for v in half.iter_mut().take(4) {
            *v += 4.0;
        }
        assert_eq!(bad_px(&half, &gt, &valid, 2.0).unwrap(), 50.0);
        // Exactly at the threshold counts as good (strict greater-than).
        let mut at = gt.clone();
        at[0] += 2.0;
        assert_eq!(bad_px(&at, &gt, &valid, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn metrics_match_brute_force_loops() {
        for seed in 0..20 {
            let (pred, gt, valid) = random_pair(seed, 64 * 64);
            let fast_epe = epe(&pred, &gt, &valid).unwrap();
            let fast_bad = bad_px(&pred, &gt, &valid, 2.0).unwrap();
            let mut sum = 0.0f64;
            let mut bad = 0u64;
            let mut n = 0u64;
            for i in 0..pred.len() {
                if valid[i] {
                    let e = (pred[i] as f64 - gt[i] as f64).abs();
                    sum += e;
                    n += 1;
                    if e > 2.0 {
                        bad += 1;
                    }
                }
            }
            assert_eq!(fast_epe, sum / n as f64);
            assert_eq!(fast_bad, 100.0 * bad as f64 / n as f64);
        }
    }

    #[test]
    fn bad_px_monotone_in_threshold() {
        let (pred, gt, valid) = random_pair(99, 4096);
        let mut prev = 101.0;
        for t in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let b = bad_px(&pred, &gt, &valid, t).unwrap();
            assert!(b <= prev);
            prev = b;
        }
    }

    #[test]
    fn label_table_ranks_and_cuts() {
        // Two big labels with distinct errors plus one tiny label.
        let n = 10_000usize;
        let mut seg = vec![1u16; n];
        for s in seg.iter_mut().skip(n / 2) {
            *s = 2;
        }
        for s in seg.iter_mut().take(5) {
            *s = 3; // 0.05% share
        }
        let gt = vec![10.0f32; n];
        let mut pred = vec![11.0f32; n]; // label 1 error 1.0
        for i in n / 2..n {
            pred[i] = 13.0; // label 2 error 3.0
        }
        let valid = vec![true; n];
        let mut names = BTreeMap::new();
        names.insert(1u16, "alpha".to_string());
        names.insert(2u16, "beta".to_string());
        let table = group_epe_by_label(&pred, &gt, &valid, &seg, &names, 0.001).unwrap();
        assert_eq!(table.ranked[0].label, "beta");
        assert!((table.ranked[0].mean_epe - 3.0).abs() < 1e-12);
        assert_eq!(table.ranked[1].label, "alpha");
        // The 0.05%-share label is excluded from the ranking and reported
        // separately as unknown (no name table entry).
        assert_eq!(table.ranked.len(), 2);
        assert_eq!(table.below_min_share.len(), 1);
        assert_eq!(table.below_min_share[0].0, "unknown:3");
    }

    #[test]
    fn label_table_matches_loop_oracle() {
        let (pred, gt, valid) = random_pair(7, 4096);
        let mut rng = Pcg32::new(8, 8);
        let seg: Vec<u16> = (0..4096).map(|_| rng.below(6) as u16).collect();
        let names: BTreeMap<u16, String> = (0..6).map(|i| (i as u16, format!("label{i}"))).collect();
        let table = group_epe_by_label(&pred, &gt, &valid, &seg, &names, 0.0).unwrap();
        for row in &table.ranked {
            let id = names.iter().find(|(_, n)| **n == row.label).unwrap().0;
            let mut sum = 0.0;
            let mut count = 0u64;
            for i in 0..pred.len() {
                if valid[i] && seg[i] == *id {
                    sum += (pred[i] as f64 - gt[i] as f64).abs();
                    count += 1;
                }
            }
            assert_eq!(row.mean_epe, sum / count as f64);
            assert_eq!(row.pixels, count);
        }
    }

    #[test]
    fn mask_shrink_only_affects_surviving_pixels() {
        let (pred, gt, valid) = random_pair(12, 4096);
        let mut shrunk = valid.clone();
        for (i, v) in shrunk.iter_mut().enumerate() {
            if i % 3 == 0 {
                *v = false;
            }
        }
        // Recompute on the shrunk mask by brute force; must agree exactly.
        let fast = epe(&pred, &gt, &shrunk).unwrap();
        let mut sum = 0.0;
        let mut n = 0u64;
        for i in 0..pred.len() {
            if shrunk[i] {
                sum += (pred[i] as f64 - gt[i] as f64).abs();
                n += 1;
            }
        }
        assert_eq!(fast, sum / n as f64);
    }

    #[test]
    fn resize_disparity_scales_values() {
        let img = FloatImage::new(4, 4, vec![8.0; 16]);
        let valid = vec![true; 16];
        let (half, hvalid) = resize_disparity(&img, &valid, 2);
        assert_eq!(half.width, 2);
        assert!(hvalid.iter().all(|&v| v));
        assert!(half.data.iter().all(|&v| v == 4.0));
    }
}
