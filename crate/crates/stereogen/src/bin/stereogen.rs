//! Command-line front end: dataset generation, parameter sweeps,
//! post-processing, statistics, evaluation, asset listing, and validation.
//!
//! Exit codes: 0 success, 1 partial failure (some frames or scenes failed),
//! 2 configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stereogen::config::RunConfig;
use stereogen::dataset::{self, Manifest};
use stereogen::pipeline;

/// Environment variable holding the default output root.
const OUT_ENV: &str = "STEREOGEN_OUT";

#[derive(Parser)]
#[command(name = "stereogen", version, about = "Procedural stereo training-data generator and evaluation kit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compose scenes, render stereo frames, and write a dataset tree.
    Generate(GenerateArgs),
    /// Run a parameter-study grid, one isolated dataset per row.
    Sweep(SweepArgs),
    /// Apply post-processing filters and emit a filtered manifest.
    Postprocess(PostprocessArgs),
    /// Dataset statistics (disparity histogram, depth range, counts).
    Stats(StatsArgs),
    /// Evaluate disparity predictions against dataset ground truth.
    Eval(EvalArgs),
    /// Asset registry tools.
    Assets(AssetsArgs),
    /// Re-derive and check every frame's cross-buffer invariants.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat key = value config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. --set spp=64 --set "baseline_range_m=[0.2,0.3]".
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Global seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Scene count override.
    #[arg(long)]
    scenes: Option<u32>,
    /// Stereo rigs per indoor scene.
    #[arg(long)]
    rigs: Option<u32>,
}

impl ConfigArgs {
    fn build(&self) -> Result<RunConfig, String> {
        let mut run = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                RunConfig::from_text(&text).map_err(|e| e.to_string())?
            }
            None => RunConfig::default(),
        };
        for set in &self.sets {
            let (key, value) = set
                .split_once('=')
                .ok_or_else(|| format!("--set expects KEY=VALUE, got '{set}'"))?;
            run.apply_pair(key.trim(), value.trim()).map_err(|e| e.to_string())?;
        }
        if let Some(seed) = self.seed {
            run.gen.seed = seed;
        }
        if let Some(scenes) = self.scenes {
            run.scenes = scenes.max(1);
        }
        if let Some(rigs) = self.rigs {
            run.gen.rigs_per_scene = rigs.max(1);
        }
        Ok(run)
    }
}

fn default_out(sub: &str) -> PathBuf {
    match std::env::var_os(OUT_ENV) {
        Some(root) => PathBuf::from(root).join(sub),
        None => PathBuf::from(sub),
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output dataset root (defaults under $STEREOGEN_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker count for scene tasks and render tiles.
    #[arg(long, default_value_t = default_jobs())]
    jobs: usize,
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Built-in grid name (tab1, tab3) or a JSON grid file.
    #[arg(long)]
    grid: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = default_jobs())]
    jobs: usize,
}

#[derive(Args)]
struct PostprocessArgs {
    /// Dataset root containing manifest.json.
    #[arg(long)]
    root: PathBuf,
    /// Remove frames with mean linear left-image intensity below this.
    #[arg(long)]
    dark: Option<f64>,
    /// Remove frames with any valid depth below this many meters.
    #[arg(long)]
    min_depth: Option<f64>,
    /// Output manifest path (default <root>/manifest.filtered.json).
    #[arg(long)]
    out_manifest: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    root: PathBuf,
    /// Write the full JSON report here as well.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Use a specific manifest (e.g. a filtered one).
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Dataset root with ground truth.
    #[arg(long)]
    root: PathBuf,
    /// Prediction root mirroring the dataset layout
    /// (<pred>/<scene_type>/<scene>/<frame>/disp_left.pfm).
    #[arg(long)]
    pred: PathBuf,
    /// Metric profile: middlebury2014_f, middlebury2014_h, middlebury2021,
    /// eth3d, kitti2012, kitti2015, booster_q.
    #[arg(long, default_value = "middlebury2014_h")]
    profile: String,
    /// CSV report output path.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// JSON report output path.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct AssetsArgs {
    #[command(subcommand)]
    command: AssetsCommand,
}

#[derive(Subcommand)]
enum AssetsCommand {
    /// List registered object generators.
    List {
        /// Include the thin-structure generators excluded by default.
        #[arg(long)]
        thin: bool,
    },
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    root: PathBuf,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Generate(args) => {
            let run = args.config.build()?;
            let out = args.out.unwrap_or_else(|| default_out("dataset"));
            let report = pipeline::generate(&run, &out, args.jobs).map_err(|e| e.to_string())?;
            println!(
                "generated {} frames across {} scenes into {} ({} skipped as done, {} failures)",
                report.manifest.frames.len(),
                run.scenes,
                out.display(),
                report.skipped_scenes,
                report.failures
            );
            for entry in &report.ledger.entries {
                println!(
                    "  scene {:>3} [{}] {}: compose {:.2}s, render {:.2}s/frame, {} frames",
                    entry.scene_index,
                    entry.scene_type,
                    entry.status,
                    entry.compose_s,
                    entry.render_s_per_frame,
                    entry.frames
                );
            }
            Ok(if report.failures > 0 { ExitCode::from(1) } else { ExitCode::SUCCESS })
        }
        Command::Sweep(args) => {
            let base = args.config.build()?;
            let grid = match pipeline::builtin_grid(&args.grid) {
                Some(g) => g,
                None => {
                    let text = std::fs::read_to_string(&args.grid)
                        .map_err(|_| format!("unknown built-in grid and unreadable file: {}", args.grid))?;
                    parse_grid_file(&text)?
                }
            };
            if grid.is_empty() {
                return Err("empty sweep grid".into());
            }
            let out = args.out.unwrap_or_else(|| default_out("sweep"));
            let report = pipeline::sweep(&base, &grid, &out, args.jobs).map_err(|e| e.to_string())?;
            for row in &report.rows {
                println!(
                    "row {:<24} {} frames, {} failures -> {}",
                    row.name, row.frames, row.failures, row.dataset_dir
                );
            }
            println!("sweep report: {}", out.join("sweep_report.json").display());
            Ok(if report.failures > 0 { ExitCode::from(1) } else { ExitCode::SUCCESS })
        }
        Command::Postprocess(args) => {
            let manifest = Manifest::read(&args.root).map_err(|e| e.to_string())?;
            let mut kept = manifest.frames.clone();
            let mut log = manifest.filter_log.clone();
            if let Some(tau) = args.dark {
                let outcome = dataset::filter_dark(&args.root, &kept, tau);
                kept = outcome.kept;
                log.extend(outcome.removed);
            }
            if let Some(tau) = args.min_depth {
                let outcome = dataset::filter_min_depth(&args.root, &kept, tau);
                kept = outcome.kept;
                log.extend(outcome.removed);
            }
            let mut filtered = Manifest::new(manifest.seed);
            for frame in kept {
                filtered.push(frame);
            }
            filtered.filter_log = log;
            let out = args
                .out_manifest
                .unwrap_or_else(|| args.root.join("manifest.filtered.json"));
            let mut json = serde_json::to_vec_pretty(&filtered).map_err(|e| e.to_string())?;
            json.push(b'\n');
            std::fs::write(&out, json).map_err(|e| e.to_string())?;
            let removed = manifest.frames.len() - filtered.frames.len();
            println!(
                "kept {} of {} frames ({} removed); filtered manifest: {}",
                filtered.frames.len(),
                manifest.frames.len(),
                removed,
                out.display()
            );
            for entry in filtered.filter_log.iter().rev().take(removed) {
                println!(
                    "  removed {} by {} (value {:.5}, threshold {})",
                    entry.frame, entry.filter, entry.value, entry.threshold
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Stats(args) => {
            let manifest = read_manifest(&args.root, args.manifest.as_deref())?;
            let stats = stereogen::eval::dataset_stats(&args.root, &manifest);
            let summaries = pipeline::summarize_scenes(&args.root, &manifest);
            println!("frames: {}", stats.frame_count);
            for (ty, count) in &stats.per_type_counts {
                println!("  {ty}: {count}");
            }
            println!("valid pixels: {}", stats.valid_pixel_count);
            println!("depth range: [{:.3}, {:.3}] m", stats.min_depth_m, stats.max_depth_m);
            println!("mean intensity: {:.4}", stats.mean_intensity);
            let total: u64 = stats.disparity_histogram.iter().sum();
            if total > 0 {
                for (q, label) in [(0.25, "p25"), (0.5, "p50"), (0.75, "p75"), (0.95, "p95")] {
                    let target = (total as f64 * q) as u64;
                    let mut acc = 0u64;
                    let mut bin = 0;
                    for (i, &c) in stats.disparity_histogram.iter().enumerate() {
                        acc += c;
                        if acc >= target {
                            bin = i;
                            break;
                        }
                    }
                    println!("disparity {label}: ~{bin} px");
                }
            }
            if !stats.unreadable.is_empty() {
                println!("unreadable frames:");
                for u in &stats.unreadable {
                    println!("  {u}");
                }
            }
            if let Some(path) = args.json {
                #[derive(serde::Serialize)]
                struct FullReport<'a> {
                    stats: &'a stereogen::eval::DatasetStats,
                    scenes: &'a [pipeline::SceneSummary],
                }
                let mut json = serde_json::to_vec_pretty(&FullReport { stats: &stats, scenes: &summaries })
                    .map_err(|e| e.to_string())?;
                json.push(b'\n');
                std::fs::write(&path, json).map_err(|e| e.to_string())?;
                println!("json report: {}", path.display());
            }
            Ok(if stats.unreadable.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Eval(args) => {
            let manifest = Manifest::read(&args.root).map_err(|e| e.to_string())?;
            let profile = stereogen::eval::profile_by_name(&args.profile)
                .ok_or_else(|| format!("unknown profile '{}'", args.profile))?;
            let report = stereogen::eval::evaluate_profile(&args.root, &args.pred, &manifest, &profile);
            println!(
                "profile {}: EPE {:.4}, bad>{}px {:.3}% over {} valid pixels ({} frames, {} failed)",
                profile.name,
                report.aggregate_epe,
                profile.threshold_px,
                report.aggregate_bad_px,
                report.total_valid_pixels,
                report.rows.len(),
                report.failed.len()
            );
            for failure in &report.failed {
                eprintln!("  failed: {failure}");
            }
            if let Some(path) = &args.csv {
                let mut csv = String::from("frame,epe,bad_px,valid_pixels\n");
                for row in &report.rows {
                    csv.push_str(&format!("{},{},{},{}\n", row.frame, row.epe, row.bad_px, row.valid_pixels));
                }
                csv.push_str(&format!(
                    "aggregate,{},{},{}\n",
                    report.aggregate_epe, report.aggregate_bad_px, report.total_valid_pixels
                ));
                std::fs::write(path, csv).map_err(|e| e.to_string())?;
                println!("csv report: {}", path.display());
            }
            if let Some(path) = &args.json {
                let mut json = serde_json::to_vec_pretty(&report).map_err(|e| e.to_string())?;
                json.push(b'\n');
                std::fs::write(path, json).map_err(|e| e.to_string())?;
                println!("json report: {}", path.display());
            }
            Ok(if report.all_frames_evaluated() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Assets(args) => match args.command {
            AssetsCommand::List { thin } => {
                let registry = if thin {
                    stereogen::assets::Registry::with_thin_structures()
                } else {
                    stereogen::assets::Registry::standard()
                };
                for info in registry.floating_entries() {
                    println!(
                        "{:<14} background={} slot={:?}{}",
                        info.name,
                        info.background,
                        info.slot,
                        if info.thin_structure { " thin_structure" } else { "" }
                    );
                }
                Ok(ExitCode::SUCCESS)
            }
        },
        Command::Validate(args) => {
            let manifest = read_manifest(&args.root, args.manifest.as_deref())?;
            let mut failed = 0usize;
            for record in &manifest.frames {
                let dir = args.root.join(&record.path);
                match dataset::read_frame(&dir) {
                    Ok(frame) => {
                        let rig = frame.meta.rig();
                        let (left, right) = frame.to_framebuffers();
                        let bundle = stereogen::gt::FrameBundle {
                            rig: &rig,
                            left: &left,
                            right: &right,
                            disp_left: &frame.disp_left,
                            disp_right: &frame.disp_right,
                            occ_left: &frame.occ_left,
                            occ_right: &frame.occ_right,
                        };
                        let report = stereogen::gt::validate_frame(&bundle);
                        if report.passed() {
                            println!("ok   {}", record.path);
                        } else {
                            failed += 1;
                            let names: Vec<&str> = report.failures().iter().map(|c| c.name).collect();
                            println!("FAIL {} ({})", record.path, names.join(", "));
                        }
                    }
                    Err(err) => {
                        failed += 1;
                        println!("FAIL {} (unreadable: {err})", record.path);
                    }
                }
            }
            println!("validated {} frames, {} failed", manifest.frames.len(), failed);
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn read_manifest(root: &std::path::Path, explicit: Option<&std::path::Path>) -> Result<Manifest, String> {
    match explicit {
        Some(path) => {
            let raw = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
            serde_json::from_slice(&raw).map_err(|e| e.to_string())
        }
        None => Manifest::read(root).map_err(|e| e.to_string()),
    }
}

/// Grid files are JSON: [{"name": "...", "deltas": [["key", "value"], ...]}].
fn parse_grid_file(text: &str) -> Result<Vec<pipeline::SweepRow>, String> {
    #[derive(serde::Deserialize)]
    struct RawRow {
        name: String,
        deltas: Vec<(String, String)>,
    }
    let rows: Vec<RawRow> = serde_json::from_str(text).map_err(|e| e.to_string())?;
    Ok(rows
        .into_iter()
        .map(|r| pipeline::SweepRow { name: r.name, deltas: r.deltas })
        .collect())
}
