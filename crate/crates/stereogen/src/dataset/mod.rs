//! On-disk dataset format: frame records, manifests, post-processing
//! filters, and the scene-type mixing sampler. Layout per frame:
//! `<root>/<scene_type>/<scene_id>/<frame_id>/{left.png, right.png,
//! disp_left.pfm, disp_right.pfm, depth_left.pfm, depth_right.pfm,
//! occ_left.png, occ_right.png, objseg.png, matseg.png, meta.json}`;
//! name tables `objects.json` / `materials.json` sit in the scene directory
//! and `manifest.json` at the root. Field-by-field layout: docs/formats.md.

pub mod pfm;
pub mod record;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::rng::{stage, Pcg32};
use crate::scene::SceneType;

pub use pfm::{read_pfm, write_pfm, FloatImage, PfmError};
pub use record::{read_frame, write_frame, write_scene_tables, FrameData, LoadedFrame, FrameMeta};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Pfm(#[from] PfmError),
    #[error("png error: {0}")]
    Png(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("manifest inconsistency: {0}")]
    Manifest(String),
    #[error("mix weight on absent scene type {0}")]
    AbsentType(&'static str),
    #[error("subset size {0} exceeds manifest size {1}")]
    SubsetTooLarge(usize, usize),
    #[error("id {0} does not fit the 16-bit segmentation encoding")]
    IdOverflow(u32),
}

pub(crate) fn io_err(path: &Path, source: std::io::Error) -> DatasetError {
    DatasetError::Io { path: path.display().to_string(), source }
}

// --- color transfer ---
// Linear radiance is encoded as 8-bit sRGB (IEC 61966-2-1); all math stays
// in linear space and decoding inverts the transfer exactly per code value.

pub fn linear_to_srgb_u8(c: f32) -> u8 {
    let c = c.clamp(0.0, 1.0) as f64;
    let s = if c <= 0.003_130_8 { 12.92 * c } else { 1.055 * c.powf(1.0 / 2.4) - 0.055 };
    (s * 255.0).round() as u8
}

pub fn srgb_u8_to_linear(v: u8) -> f32 {
    let s = v as f64 / 255.0;
    let c = if s <= 0.040_45 { s / 12.92 } else { ((s + 0.055) / 1.055).powf(2.4) };
    c as f32
}

/// One frame entry in a manifest; `path` is relative to the dataset root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub path: String,
    pub scene_type: SceneType,
    pub scene_id: u32,
    pub frame_id: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterLogEntry {
    pub frame: String,
    pub filter: String,
    pub value: f64,
    pub threshold: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub frames: Vec<FrameRecord>,
    pub counts: BTreeMap<String, usize>,
    pub filter_log: Vec<FilterLogEntry>,
}

impl Manifest {
    pub fn new(seed: u64) -> Manifest {
        Manifest { seed, ..Default::default() }
    }

    pub fn push(&mut self, record: FrameRecord) {
        *self.counts.entry(record.scene_type.tag().to_string()).or_insert(0) += 1;
        self.frames.push(record);
    }

    pub fn recount(&mut self) {
        self.counts.clear();
        for f in &self.frames {
            *self.counts.entry(f.scene_type.tag().to_string()).or_insert(0) += 1;
        }
    }

    pub fn write(&self, root: &Path) -> Result<(), DatasetError> {
        fs::create_dir_all(root).map_err(|e| io_err(root, e))?;
        let path = root.join("manifest.json");
        let mut json = serde_json::to_vec_pretty(self)?;
        json.push(b'\n');
        fs::write(&path, json).map_err(|e| io_err(&path, e))
    }

    pub fn read(root: &Path) -> Result<Manifest, DatasetError> {
        let path = root.join("manifest.json");
        let raw = fs::read(&path).map_err(|e| io_err(&path, e))?;
        let manifest: Manifest = serde_json::from_slice(&raw)?;
        for (tag, &count) in &manifest.counts {
            let actual = manifest.frames.iter().filter(|f| f.scene_type.tag() == tag).count();
            if actual != count {
                return Err(DatasetError::Manifest(format!("count for {tag}: recorded {count}, actual {actual}")));
            }
        }
        Ok(manifest)
    }

    pub fn frame_dir(&self, root: &Path, record: &FrameRecord) -> PathBuf {
        root.join(&record.path)
    }
}

// --- post-processing filters ---
// Per-frame predicates; order of application does not change the kept set.

pub const DEFAULT_DARK_THRESHOLD: f64 = 0.02;
pub const DEFAULT_MIN_DEPTH_M: f64 = 0.125;
pub const NATURE_AGGRESSIVE_MIN_DEPTH_M: f64 = 5.0;

pub struct FilterOutcome {
    pub kept: Vec<FrameRecord>,
    pub removed: Vec<FilterLogEntry>,
}

/// Remove frames whose left-image mean linear intensity is strictly below
/// `threshold`. A mean exactly at the threshold is kept.
pub fn filter_dark(root: &Path, frames: &[FrameRecord], threshold: f64) -> FilterOutcome {
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for record in frames {
        let left = root.join(&record.path).join("left.png");
        match record::read_rgb_png(&left) {
            Ok((_, _, rgb)) => {
                let mean = rgb
                    .iter()
                    .map(|px| (px[0] as f64 + px[1] as f64 + px[2] as f64) / 3.0)
                    .sum::<f64>()
                    / rgb.len() as f64;
                if mean < threshold {
                    removed.push(FilterLogEntry {
                        frame: record.path.clone(),
                        filter: "dark".into(),
                        value: mean,
                        threshold,
                    });
                } else {
                    kept.push(record.clone());
                }
            }
            Err(err) => removed.push(FilterLogEntry {
                frame: record.path.clone(),
                filter: format!("dark_read_error: {err}"),
                value: f64::NAN,
                threshold,
            }),
        }
    }
    FilterOutcome { kept, removed }
}

/// Remove frames with any valid (finite) depth pixel below `threshold_m`,
/// checking both views. A frame with no finite depth at all is kept.
pub fn filter_min_depth(root: &Path, frames: &[FrameRecord], threshold_m: f64) -> FilterOutcome {
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for record in frames {
        let mut min_depth = f64::INFINITY;
        let mut failed = None;
        for name in ["depth_left.pfm", "depth_right.pfm"] {
            match read_pfm(&root.join(&record.path).join(name)) {
                Ok(img) => {
                    for &v in &img.data {
                        if v.is_finite() {
                            min_depth = min_depth.min(v as f64);
                        }
                    }
                }
                Err(err) => failed = Some(err),
            }
        }
        if let Some(err) = failed {
            removed.push(FilterLogEntry {
                frame: record.path.clone(),
                filter: format!("min_depth_read_error: {err}"),
                value: f64::NAN,
                threshold: threshold_m,
            });
        } else if min_depth < threshold_m {
            removed.push(FilterLogEntry {
                frame: record.path.clone(),
                filter: "min_depth".into(),
                value: min_depth,
                threshold: threshold_m,
            });
        } else {
            kept.push(record.clone());
        }
    }
    FilterOutcome { kept, removed }
}

// --- sampling ---

/// I.i.d. scene-type draws by weight, then a uniform frame within the type.
pub struct MixSampler<'a> {
    manifest: &'a Manifest,
    by_type: Vec<(SceneType, Vec<usize>)>,
    cumulative: Vec<f64>,
    rng: Pcg32,
}

impl<'a> MixSampler<'a> {
    pub fn new(manifest: &'a Manifest, weights: &[(SceneType, f64)], seed: u64) -> Result<MixSampler<'a>, DatasetError> {
        let mut by_type = Vec::new();
        let mut cumulative = Vec::new();
        let mut total = 0.0;
        for &(ty, w) in weights {
            if w < 0.0 {
                return Err(DatasetError::Manifest("negative mix weight".into()));
            }
            if w == 0.0 {
                continue;
            }
            let indices: Vec<usize> = manifest
                .frames
                .iter()
                .enumerate()
                .filter(|(_, f)| f.scene_type == ty)
                .map(|(i, _)| i)
                .collect();
            if indices.is_empty() {
                return Err(DatasetError::AbsentType(ty.tag()));
            }
            total += w;
            by_type.push((ty, indices));
            cumulative.push(total);
        }
        if total <= 0.0 {
            return Err(DatasetError::Manifest("mix weights sum to zero".into()));
        }
        for c in cumulative.iter_mut() {
            *c /= total;
        }
        Ok(MixSampler {
            manifest,
            by_type,
            cumulative,
            rng: Pcg32::from_parts(&[seed, stage::MIX]),
        })
    }

    pub fn next_index(&mut self) -> usize {
        let x = self.rng.f64();
        let mut slot = self.cumulative.len() - 1;
        for (i, &c) in self.cumulative.iter().enumerate() {
            if x < c {
                slot = i;
                break;
            }
        }
        let indices = &self.by_type[slot].1;
        indices[self.rng.below(indices.len() as u32) as usize]
    }

    pub fn next(&mut self) -> &'a FrameRecord {
        &self.manifest.frames[self.next_index()]
    }
}

/// Nested random subsets for scaling-curve experiments: each smaller set is
/// contained in every larger one. `sizes` must be ascending.
pub fn subset_manifest(manifest: &Manifest, sizes: &[usize], seed: u64) -> Result<Vec<Manifest>, DatasetError> {
    for w in sizes.windows(2) {
        if w[0] > w[1] {
            return Err(DatasetError::Manifest("subset sizes must be ascending".into()));
        }
    }
    if let Some(&max) = sizes.last() {
        if max > manifest.frames.len() {
            return Err(DatasetError::SubsetTooLarge(max, manifest.frames.len()));
        }
    }
    let mut order: Vec<usize> = (0..manifest.frames.len()).collect();
    Pcg32::from_parts(&[seed, stage::SUBSET]).shuffle(&mut order);
    let mut out = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let mut picked: Vec<usize> = order[..size].to_vec();
        picked.sort_unstable();
        let mut sub = Manifest::new(manifest.seed);
        for i in picked {
            sub.push(manifest.frames[i].clone());
        }
        sub.filter_log = manifest.filter_log.clone();
        out.push(sub);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic_manifest(counts: [usize; 3]) -> Manifest {
        let mut m = Manifest::new(1);
        let types = [SceneType::IndoorFloating, SceneType::DenseFloating, SceneType::Nature];
        for (ty, &n) in types.iter().zip(&counts) {
            for i in 0..n {
                m.push(FrameRecord {
                    path: format!("{}/scene_0000/frame_{:04}", ty.tag(), i),
                    scene_type: *ty,
                    scene_id: 0,
                    frame_id: i as u32,
                });
            }
        }
        m
    }

    #[test]
    fn single_type_weights_only_draw_that_type() {
        let m = synthetic_manifest([50, 50, 50]);
        let mut sampler = MixSampler::new(&m, &[(SceneType::IndoorFloating, 1.0)], 3).unwrap();
        for _ in 0..500 {
            assert_eq!(sampler.next().scene_type, SceneType::IndoorFloating);
        }
    }

    #[test]
    fn equal_weights_concentrate() {
        let m = synthetic_manifest([100, 100, 100]);
        let weights = [
            (SceneType::IndoorFloating, 1.0),
            (SceneType::DenseFloating, 1.0),
            (SceneType::Nature, 1.0),
        ];
        let mut sampler = MixSampler::new(&m, &weights, 7).unwrap();
        let draws = 30_000;
        let mut counts = BTreeMap::new();
        for _ in 0..draws {
            *counts.entry(sampler.next().scene_type.tag()).or_insert(0usize) += 1;
        }
        let expect = draws as f64 / 3.0;
        let sigma = (expect * (2.0 / 3.0)).sqrt();
        for (_, &c) in &counts {
            assert!((c as f64 - expect).abs() < 4.0 * sigma, "{c} vs {expect}");
        }
    }

    #[test]
    fn skewed_weights_match_frequencies() {
        let m = synthetic_manifest([40, 40, 40]);
        let weights = [
            (SceneType::IndoorFloating, 80.0),
            (SceneType::DenseFloating, 10.0),
            (SceneType::Nature, 10.0),
        ];
        let mut sampler = MixSampler::new(&m, &weights, 11).unwrap();
        let draws = 30_000;
        let mut indoor = 0usize;
        for _ in 0..draws {
            if sampler.next().scene_type == SceneType::IndoorFloating {
                indoor += 1;
            }
        }
        let f = indoor as f64 / draws as f64;
        assert!((f - 0.8).abs() < 0.01, "indoor frequency {f}");
    }

    #[test]
    fn weight_on_absent_type_is_error() {
        let m = synthetic_manifest([10, 10, 0]);
        let err = MixSampler::new(&m, &[(SceneType::Nature, 1.0)], 0);
        assert!(matches!(err, Err(DatasetError::AbsentType("nature"))));
    }

    #[test]
    fn mix_sampler_is_deterministic() {
        let m = synthetic_manifest([30, 30, 30]);
        let weights = [(SceneType::IndoorFloating, 1.0), (SceneType::Nature, 2.0)];
        let run = |seed| {
            let mut s = MixSampler::new(&m, &weights, seed).unwrap();
            (0..100).map(|_| s.next_index()).collect::<Vec<_>>()
        };
        assert_eq!(run(5), run(5));
        assert_ne!(run(5), run(6));
    }

    #[test]
    fn subsets_nest() {
        let m = synthetic_manifest([100, 50, 30]);
        let subs = subset_manifest(&m, &[20, 60, 180], 9).unwrap();
        assert_eq!(subs[0].frames.len(), 20);
        assert_eq!(subs[1].frames.len(), 60);
        assert_eq!(subs[2].frames.len(), 180);
        for (small, large) in [(0, 1), (1, 2)] {
            for f in &subs[small].frames {
                assert!(subs[large].frames.contains(f), "nesting violated");
            }
        }
        // Full size reproduces the manifest as a set.
        assert_eq!(subs[2].frames.len(), m.frames.len());
        let again = subset_manifest(&m, &[20, 60, 180], 9).unwrap();
        assert_eq!(subs[0].frames, again[0].frames);
        assert!(matches!(
            subset_manifest(&m, &[200], 9),
            Err(DatasetError::SubsetTooLarge(200, 180))
        ));
    }

    #[test]
    fn srgb_round_trip_is_monotone() {
        let mut prev = -1.0f32;
        for v in 0..=255u8 {
            let lin = srgb_u8_to_linear(v);
            assert!(lin > prev);
            prev = lin;
            assert_eq!(linear_to_srgb_u8(lin), v);
        }
    }
}
