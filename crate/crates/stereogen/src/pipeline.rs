//! Generation orchestration: composes scenes, renders all rigs and
//! variants, derives ground truth, writes the dataset tree, and keeps a
//! resumable job ledger with timings.
//!
//! Determinism contract: (config, seed) fully determines every dataset byte
//! independently of the worker count. Only `ledger.json` carries wall-clock
//! timings and is excluded from tree comparisons.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compose::{compose_scene, Composed, GenConfig};
use crate::config::RunConfig;
use crate::dataset::{self, FrameRecord, Manifest};
use crate::geom::StereoView;
use crate::gt;
use crate::render::{render, FrozenScene, RenderCamera, RenderSettings};
use crate::rng::{mix_parts, mix64};
use crate::scene::{Scene, SceneType};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Compose(#[from] crate::compose::ComposeError),
    #[error(transparent)]
    Dataset(#[from] dataset::DatasetError),
    #[error(transparent)]
    Gt(#[from] gt::GtError),
    #[error(transparent)]
    Archive(#[from] crate::scene::archive::ArchiveError),
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
}

fn io_err(path: &Path, source: std::io::Error) -> PipelineError {
    PipelineError::Io { path: path.display().to_string(), source }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SceneLedgerEntry {
    pub scene_index: u32,
    pub scene_type: String,
    pub status: String,
    pub compose_s: f64,
    pub render_s_per_frame: f64,
    pub frames: u32,
    pub background_objects: u32,
    pub warnings: Vec<String>,
    pub clamped_samples: u64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct JobLedger {
    pub config_hash: String,
    pub entries: Vec<SceneLedgerEntry>,
    pub total_s: f64,
}

impl JobLedger {
    pub fn write(&self, root: &Path) -> Result<(), PipelineError> {
        let path = root.join("ledger.json");
        let mut json = serde_json::to_vec_pretty(self).expect("serializable");
        json.push(b'\n');
        fs::write(&path, json).map_err(|e| io_err(&path, e))
    }

    pub fn read(root: &Path) -> Option<JobLedger> {
        let raw = fs::read(root.join("ledger.json")).ok()?;
        serde_json::from_slice(&raw).ok()
    }
}

/// Deterministic per-scene completion marker; stores the frame records so a
/// resumed run can rebuild the manifest without recomputing the scene.
#[derive(Serialize, Deserialize)]
struct SceneMarker {
    config_hash: String,
    scene_index: u32,
    records: Vec<FrameRecord>,
}

pub struct GenerateReport {
    pub manifest: Manifest,
    pub ledger: JobLedger,
    pub failures: u32,
    pub skipped_scenes: u32,
}

struct SceneResult {
    entry: SceneLedgerEntry,
    records: Vec<FrameRecord>,
    failed: bool,
    skipped: bool,
}

fn scene_dir_for(root: &Path, scene_type: SceneType, scene_index: u32) -> PathBuf {
    root.join(scene_type.tag()).join(format!("scene_{scene_index:04}"))
}

/// Render one stereo frame and write its record.
#[allow(clippy::too_many_arguments)]
fn emit_frame(
    root: &Path,
    frozen: &FrozenScene,
    scene: &Scene,
    rig_index: usize,
    scene_index: u32,
    frame_id: u32,
    config: &GenConfig,
    render_settings: &RenderSettings,
) -> Result<(FrameRecord, u64), PipelineError> {
    let rig = &scene.rigs[rig_index];
    let mut settings = *render_settings;
    // A per-frame stream keeps noise independent across frames while the
    // zero-baseline identity (same pose, same streams) still holds.
    settings.seed = mix_parts(&[config.seed, scene_index as u64, frame_id as u64]);
    let left = render(frozen, &RenderCamera::from_rig(rig, StereoView::Left), &settings);
    let right = render(frozen, &RenderCamera::from_rig(rig, StereoView::Right), &settings);
    let disp_left = gt::depth_to_disparity(&left.depth, left.width, left.height, rig)?;
    let disp_right = gt::depth_to_disparity(&right.depth, right.width, right.height, rig)?;
    let occ_left = gt::occlusion_map(&disp_left, &disp_right, StereoView::Left, false)?;
    let occ_right = gt::occlusion_map(&disp_right, &disp_left, StereoView::Right, false)?;
    let clamped = left.clamped_samples + right.clamped_samples;
    let record = dataset::write_frame(
        root,
        &dataset::FrameData {
            rig,
            left: &left,
            right: &right,
            disp_left: &disp_left,
            disp_right: &disp_right,
            occ_left: &occ_left,
            occ_right: &occ_right,
            scene_type: scene.scene_type,
            scene_id: scene_index,
            frame_id,
            seed: config.seed,
        },
    )?;
    Ok((record, clamped))
}

fn process_scene(root: &Path, run: &RunConfig, scene_index: u32, config_hash: &str) -> SceneResult {
    let scene_type = run.gen.scene_type_for(scene_index);
    let mut entry = SceneLedgerEntry {
        scene_index,
        scene_type: scene_type.tag().to_string(),
        status: "pending".into(),
        compose_s: 0.0,
        render_s_per_frame: 0.0,
        frames: 0,
        background_objects: 0,
        warnings: Vec::new(),
        clamped_samples: 0,
    };
    let scene_dir = scene_dir_for(root, scene_type, scene_index);
    let marker_path = scene_dir.join("scene_done.json");
    if let Ok(raw) = fs::read(&marker_path) {
        if let Ok(marker) = serde_json::from_slice::<SceneMarker>(&raw) {
            if marker.config_hash == config_hash {
                entry.status = "done".into();
                entry.frames = marker.records.len() as u32;
                return SceneResult { entry, records: marker.records, failed: false, skipped: true };
            }
        }
    }

    entry.status = "composing".into();
    let compose_start = Instant::now();
    let composed = match compose_scene(&run.gen, scene_index) {
        Ok(c) => c,
        Err(err) => {
            entry.status = format!("failed: {err}");
            return SceneResult { entry, records: Vec::new(), failed: true, skipped: false };
        }
    };
    entry.compose_s = compose_start.elapsed().as_secs_f64();

    entry.status = "rendering".into();
    let render_start = Instant::now();
    let mut records = Vec::new();
    let emit_all = || -> Result<(Vec<FrameRecord>, u64, u32), PipelineError> {
        let mut out = Vec::new();
        let mut clamped = 0u64;
        let mut background = 0u32;
        match &composed {
            Composed::Static(scene) => {
                background = scene.stats().background_count as u32;
                crate::scene::archive::write_archive(scene, &root.join("scenes").join(format!("scene_{scene_index:04}")))?;
                dataset::write_scene_tables(&scene_dir_for(root, scene.scene_type, scene_index), scene)?;
                let frozen = FrozenScene::freeze(scene);
                for rig_index in 0..scene.rigs.len() {
                    let (record, c) = emit_frame(
                        root,
                        &frozen,
                        scene,
                        rig_index,
                        scene_index,
                        rig_index as u32,
                        &run.gen,
                        &run.render,
                    )?;
                    out.push(record);
                    clamped += c;
                }
            }
            Composed::Dense(set) => {
                let first = set.materialize(0);
                crate::scene::archive::write_archive(&first, &root.join("scenes").join(format!("scene_{scene_index:04}")))?;
                dataset::write_scene_tables(&scene_dir_for(root, SceneType::DenseFloating, scene_index), &first)?;
                for variant in 0..set.variant_count() {
                    let scene = set.materialize(variant);
                    let frozen = FrozenScene::freeze(&scene);
                    let (record, c) =
                        emit_frame(root, &frozen, &scene, 0, scene_index, variant, &run.gen, &run.render)?;
                    out.push(record);
                    clamped += c;
                }
            }
        }
        Ok((out, clamped, background))
    };
    match emit_all() {
        Ok((out, clamped, background)) => {
            records = out;
            entry.clamped_samples = clamped;
            entry.background_objects = background;
        }
        Err(err) => {
            entry.status = format!("failed: {err}");
            return SceneResult { entry, records, failed: true, skipped: false };
        }
    }
    let frames = records.len().max(1);
    entry.render_s_per_frame = render_start.elapsed().as_secs_f64() / frames as f64;
    entry.frames = records.len() as u32;
    entry.status = "done".into();

    let marker = SceneMarker {
        config_hash: config_hash.to_string(),
        scene_index,
        records: records.clone(),
    };
    let mut json = serde_json::to_vec_pretty(&marker).expect("serializable");
    json.push(b'\n');
    if let Err(err) = fs::write(&marker_path, json) {
        entry.warnings.push(format!("marker write failed: {err}"));
    }
    SceneResult { entry, records, failed: false, skipped: false }
}

/// Generate the full dataset for `run` into `root` using `jobs` workers.
/// Scenes already marked done under the same config hash are skipped and
/// their records reused, so interrupted runs resume to identical bytes.
pub fn generate(run: &RunConfig, root: &Path, jobs: usize) -> Result<GenerateReport, PipelineError> {
    fs::create_dir_all(root).map_err(|e| io_err(root, e))?;
    let config_hash = format!("{:016x}", run.content_hash());
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool");
    let results: Vec<SceneResult> = pool.install(|| {
        (0..run.scenes)
            .into_par_iter()
            .map(|scene_index| process_scene(root, run, scene_index, &config_hash))
            .collect()
    });

    let mut manifest = Manifest::new(run.gen.seed);
    let mut ledger = JobLedger {
        config_hash,
        entries: Vec::new(),
        total_s: start.elapsed().as_secs_f64(),
    };
    let mut failures = 0;
    let mut skipped = 0;
    for result in results {
        if result.failed {
            failures += 1;
        }
        if result.skipped {
            skipped += 1;
        }
        for record in result.records {
            manifest.push(record);
        }
        ledger.entries.push(result.entry);
    }
    manifest.write(root)?;
    ledger.write(root)?;
    Ok(GenerateReport { manifest, ledger, failures, skipped_scenes: skipped })
}

/// Hash every file in a tree (sorted relative paths and contents),
/// excluding the named root-level files. Used to compare dataset trees.
pub fn hash_tree(root: &Path, exclude: &[&str]) -> u64 {
    fn walk(dir: &Path, root: &Path, exclude: &[&str], files: &mut Vec<PathBuf>) {
        let mut entries: Vec<_> = match fs::read_dir(dir) {
            Ok(rd) => rd.filter_map(|e| e.ok()).collect(),
            Err(_) => return,
        };
        entries.sort_by_key(|e| e.file_name());
        for entry in entries {
            let path = entry.path();
            let rel = path.strip_prefix(root).unwrap().to_string_lossy().to_string();
            if exclude.contains(&rel.as_str()) {
                continue;
            }
            if path.is_dir() {
                walk(&path, root, exclude, files);
            } else {
                files.push(path);
            }
        }
    }
    let mut files = Vec::new();
    walk(root, root, exclude, &mut files);
    let mut acc = 0xf00du64;
    for path in files {
        let rel = path.strip_prefix(root).unwrap().to_string_lossy().to_string();
        for b in rel.bytes() {
            acc = mix64(acc ^ b as u64);
        }
        if let Ok(bytes) = fs::read(&path) {
            for chunk in bytes.chunks(8) {
                let mut word = [0u8; 8];
                word[..chunk.len()].copy_from_slice(chunk);
                acc = mix64(acc ^ u64::from_le_bytes(word));
            }
        }
    }
    acc
}

// --- sweep grids ---

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub name: String,
    /// (key, value-as-toml-text) pairs applied on top of the base config.
    pub deltas: Vec<(String, String)>,
}

fn row(name: &str, deltas: &[(&str, &str)]) -> SweepRow {
    SweepRow {
        name: name.to_string(),
        deltas: deltas.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
    }
}

/// The generation-parameter study grid: density, background, object type,
/// materials, baseline, lighting. 18 rows.
pub fn tab1_grid() -> Vec<SweepRow> {
    vec![
        row("density_none", &[("floating_count_range", "[0, 0]")]),
        row("density_0_10", &[("floating_count_range", "[0, 10]")]),
        row("density_10_30", &[("floating_count_range", "[10, 30]")]),
        row("background_off", &[("background_objects", "false")]),
        row("background_on", &[("background_objects", "true")]),
        row("type_chairs", &[("object_subset", "[\"chair\"]")]),
        row("type_shelves", &[("object_subset", "[\"shelf\"]")]),
        row("type_bushes", &[("object_subset", "[\"bush\"]")]),
        row("type_all", &[("object_subset", "[]")]),
        row(
            "material_none",
            &[("material_mode", "\"none\""), ("material_replace_probability", "1.0")],
        ),
        row(
            "material_one_diffuse",
            &[("material_mode", "\"one_diffuse\""), ("material_replace_probability", "1.0")],
        ),
        row(
            "material_metal_glass",
            &[("material_mode", "\"metal_glass_only\""), ("material_replace_probability", "1.0")],
        ),
        row(
            "material_all",
            &[("material_mode", "\"all\""), ("material_replace_probability", "0.5")],
        ),
        row("baseline_narrow", &[("baseline_range_m", "[0.04, 0.1]")]),
        row("baseline_wide", &[("baseline_range_m", "[0.2, 0.3]")]),
        row("baseline_full", &[("baseline_range_m", "[0.04, 0.4]")]),
        row("lighting_realistic", &[("lighting_mode", "\"realistic\"")]),
        row("lighting_augmented", &[("lighting_mode", "\"augmented\"")]),
    ]
}

/// Scene-type mixture grid.
pub fn tab3_grid() -> Vec<SweepRow> {
    vec![
        row("mix_33_33_33", &[("mix_weights", "[33, 33, 33]")]),
        row("mix_10_80_10", &[("mix_weights", "[10, 80, 10]")]),
        row("mix_80_10_10", &[("mix_weights", "[80, 10, 10]")]),
        row("mix_10_10_80", &[("mix_weights", "[10, 10, 80]")]),
    ]
}

pub fn builtin_grid(name: &str) -> Option<Vec<SweepRow>> {
    match name {
        "tab1" => Some(tab1_grid()),
        "tab3" => Some(tab3_grid()),
        _ => None,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRowReport {
    pub name: String,
    pub dataset_dir: String,
    pub frames: usize,
    pub failures: u32,
    pub stats: crate::eval::DatasetStats,
    pub scene_summaries: Vec<SceneSummary>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SceneSummary {
    pub scene_index: u32,
    pub scene_type: String,
    pub floating_objects: usize,
    pub background_objects: usize,
    pub baselines_m: Vec<f64>,
    /// Material kinds over floating-object parts.
    pub floating_material_kinds: std::collections::BTreeMap<String, usize>,
}

/// Per-scene structural summary from the on-disk name tables and metadata.
pub fn summarize_scenes(root: &Path, manifest: &Manifest) -> Vec<SceneSummary> {
    let mut summaries: Vec<SceneSummary> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for record in &manifest.frames {
        if !seen.insert((record.scene_type, record.scene_id)) {
            continue;
        }
        let scene_dir = root
            .join(record.scene_type.tag())
            .join(format!("scene_{:04}", record.scene_id));
        let objects = dataset::record::read_name_table(&scene_dir.join("objects.json")).unwrap_or_default();
        let materials = dataset::record::read_name_table(&scene_dir.join("materials.json")).unwrap_or_default();
        let kind_of: std::collections::BTreeMap<u32, String> = materials
            .iter()
            .filter_map(|m| m.kind.map(|k| (m.id, format!("{k:?}").to_lowercase())))
            .collect();
        let mut floating = 0usize;
        let mut background = 0usize;
        let mut kinds: std::collections::BTreeMap<String, usize> = std::collections::BTreeMap::new();
        for obj in &objects {
            if obj.tags.contains(&crate::scene::ObjectTag::Floating) {
                floating += 1;
                for (_, mat) in &obj.part_materials {
                    if let Some(kind) = kind_of.get(mat) {
                        *kinds.entry(kind.clone()).or_insert(0) += 1;
                    }
                }
            }
            if obj.tags.contains(&crate::scene::ObjectTag::Background) {
                background += 1;
            }
        }
        let baselines: Vec<f64> = manifest
            .frames
            .iter()
            .filter(|f| f.scene_type == record.scene_type && f.scene_id == record.scene_id)
            .filter_map(|f| {
                let meta_path = root.join(&f.path).join("meta.json");
                let raw = fs::read(meta_path).ok()?;
                let meta: dataset::FrameMeta = serde_json::from_slice(&raw).ok()?;
                Some(meta.baseline_m)
            })
            .collect();
        summaries.push(SceneSummary {
            scene_index: record.scene_id,
            scene_type: record.scene_type.tag().to_string(),
            floating_objects: floating,
            background_objects: background,
            baselines_m: baselines,
            floating_material_kinds: kinds,
        });
    }
    summaries
}

pub struct SweepReport {
    pub rows: Vec<SweepRowReport>,
    pub failures: u32,
}

/// Run every grid row as an isolated dataset under `root/rows/<name>`,
/// sharing the base seed, and emit per-row statistics plus a comparison
/// report. Delta keys are validated before any work starts.
pub fn sweep(base: &RunConfig, grid: &[SweepRow], root: &Path, jobs: usize) -> Result<SweepReport, PipelineError> {
    // Validate all deltas up front.
    for row in grid {
        let mut probe = base.clone();
        for (key, value) in &row.deltas {
            probe.apply_pair(key, value)?;
        }
    }
    let mut rows = Vec::new();
    let mut failures = 0;
    for row in grid {
        let mut config = base.clone();
        for (key, value) in &row.deltas {
            config.apply_pair(key, value)?;
        }
        let dir = root.join("rows").join(&row.name);
        let report = generate(&config, &dir, jobs)?;
        failures += report.failures;
        let stats = crate::eval::dataset_stats(&dir, &report.manifest);
        let scene_summaries = summarize_scenes(&dir, &report.manifest);
        rows.push(SweepRowReport {
            name: row.name.clone(),
            dataset_dir: dir.display().to_string(),
            frames: report.manifest.frames.len(),
            failures: report.failures,
            stats,
            scene_summaries,
        });
    }
    let report_path = root.join("sweep_report.json");
    let mut json = serde_json::to_vec_pretty(&rows).expect("serializable");
    json.push(b'\n');
    fs::write(&report_path, json).map_err(|e| io_err(&report_path, e))?;
    Ok(SweepReport { rows, failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_run(seed: u64) -> RunConfig {
        let mut run = RunConfig::default();
        run.apply_text(
            "scenes = 2\nrigs_per_scene = 2\nwidth = 64\nheight = 36\nspp = 4\nmax_bounces = 3\ndenoise = false\nrig_candidates = 40\n",
        )
        .unwrap();
        run.gen.seed = seed;
        run
    }

    #[test]
    fn generate_writes_consistent_manifest_and_resumes() {
        let run = tiny_run(3);
        let dir = tempfile::tempdir().unwrap();
        let report = generate(&run, dir.path(), 2).unwrap();
        assert_eq!(report.failures, 0);
        assert_eq!(report.manifest.frames.len(), 4);
        let first_hash = hash_tree(dir.path(), &["ledger.json"]);
        // Every referenced frame exists with all files.
        for record in &report.manifest.frames {
            let frame_dir = dir.path().join(&record.path);
            for file in [
                "left.png",
                "right.png",
                "disp_left.pfm",
                "disp_right.pfm",
                "depth_left.pfm",
                "depth_right.pfm",
                "occ_left.png",
                "occ_right.png",
                "objseg.png",
                "matseg.png",
                "meta.json",
            ] {
                assert!(frame_dir.join(file).exists(), "{} missing {file}", record.path);
            }
        }
        // Rerun: everything is skipped, bytes unchanged.
        let rerun = generate(&run, dir.path(), 2).unwrap();
        assert_eq!(rerun.skipped_scenes, 2);
        assert_eq!(rerun.manifest.frames, report.manifest.frames);
        assert_eq!(hash_tree(dir.path(), &["ledger.json"]), first_hash);
    }

    #[test]
    fn job_count_does_not_change_bytes() {
        let run = tiny_run(7);
        let d1 = tempfile::tempdir().unwrap();
        let d8 = tempfile::tempdir().unwrap();
        generate(&run, d1.path(), 1).unwrap();
        generate(&run, d8.path(), 8).unwrap();
        assert_eq!(
            hash_tree(d1.path(), &["ledger.json"]),
            hash_tree(d8.path(), &["ledger.json"])
        );
    }

    #[test]
    fn grids_have_expected_shapes() {
        assert_eq!(tab1_grid().len(), 18);
        assert_eq!(tab3_grid().len(), 4);
        assert!(builtin_grid("tab1").is_some());
        assert!(builtin_grid("nope").is_none());
        // All deltas name real keys.
        let base = RunConfig::default();
        for row in tab1_grid().iter().chain(tab3_grid().iter()) {
            let mut probe = base.clone();
            for (k, v) in &row.deltas {
                probe.apply_pair(k, v).expect("valid delta key");
            }
        }
    }
}
