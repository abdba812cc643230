//! File-to-file pipelines behind each CLI subcommand. The FFI crate calls
//! these too, so both front ends produce identical artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::camera::{parse_trajectory, Trajectory};
use crate::error::{Error, Result};
use crate::geometry::render_trajectory;
use crate::io::codec::{read_json_value, read_manifest};
use crate::io::{
    load_bundle, load_composite_sample, load_mask_video, load_packed_sequence, load_training_pair,
    store_bundle, store_composite_sample, store_mask_video, store_packed_sequence,
    store_training_pair, Bundle, BUNDLE_MANIFEST, MASK_MANIFEST, PACK_MANIFEST, PAIR_MANIFEST,
    SAMPLE_MANIFEST,
};
use crate::maskgen::{
    make_edit_mask, sample_composite, union_mask, EditMaskConfig, MaskKind, MaskVideo,
};
use crate::packing::build_packed_sequence;
use crate::reprojection::{reproject_trajectory, trajectory_poses, ReprojectConfig};
use crate::schedule::{
    emit_stage_dataset, ingest_generated, plan_stages, StageManifest, StagePlan, StageSource,
    StageState, PLAN_FORMAT, STAGE_FORMAT, STATE_FILE, TRAINER_MANIFEST,
};

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trajectory(&text)
}

/// Renders the bundle along the trajectory. The output bundle carries the
/// rendered frames, their z-buffer depth and the holes as inpaint masks.
pub fn render(
    bundle_dir: &Path,
    traj_path: &Path,
    splat_radius: u8,
    out: &Path,
) -> Result<PathBuf> {
    let bundle = load_bundle(bundle_dir)?;
    let traj = read_trajectory(traj_path)?;
    let poses = trajectory_poses(&traj, &bundle.depths, bundle.len())?;
    log::debug!("rendering {} frames along {}", poses.len(), traj.name);
    let renders = render_trajectory(
        &bundle.frames,
        &bundle.depths,
        &bundle.camera,
        &poses,
        splat_radius,
    )?;
    let mut frames = Vec::with_capacity(renders.len());
    let mut depths = Vec::with_capacity(renders.len());
    let mut holes = Vec::with_capacity(renders.len());
    for r in renders {
        holes.push(r.visibility.not());
        frames.push(r.image);
        depths.push(r.depth);
    }
    let mut rendered = Bundle::new(frames, depths, bundle.camera)?;
    rendered.masks = Some(MaskVideo::new(holes, MaskKind::Pointcloud)?);
    store_bundle(&rendered, out)
}

/// Double reprojection of the bundle along the trajectory.
pub fn pair(bundle_dir: &Path, traj_path: &Path, out: &Path) -> Result<PathBuf> {
    let bundle = load_bundle(bundle_dir)?;
    let traj = read_trajectory(traj_path)?;
    let pair = reproject_trajectory(
        &bundle.frames,
        &bundle.depths,
        &bundle.camera,
        &traj,
        &ReprojectConfig::default(),
    )?;
    store_training_pair(&pair, out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskMode {
    Kind(MaskKind),
    /// Random kind per sample, written as a composite sample.
    Sample,
}

impl std::str::FromStr for MaskMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "sample" {
            Ok(MaskMode::Sample)
        } else {
            s.parse().map(MaskMode::Kind)
        }
    }
}

pub fn masks(pair_dir: &Path, mode: MaskMode, seed: u64, out: &Path) -> Result<PathBuf> {
    let pair = load_training_pair(pair_dir)?;
    let cfg = EditMaskConfig::default();
    let kind = match mode {
        MaskMode::Sample => {
            return store_composite_sample(&sample_composite(pair, &cfg, seed)?, out)
        }
        MaskMode::Kind(kind) => kind,
    };
    let (w, h) = pair.dims();
    let video = match kind {
        MaskKind::Pointcloud => pair.hole_mask(),
        MaskKind::Edit => make_edit_mask(w, h, pair.len(), seed, &cfg)?,
        MaskKind::Union => union_mask(
            &pair.hole_mask(),
            &make_edit_mask(w, h, pair.len(), seed, &cfg)?,
        )?,
    };
    store_mask_video(&video, out)
}

pub fn plan(theta_min: f64, delta: f64, theta_target: f64, out: &Path) -> Result<StagePlan> {
    let plan = plan_stages(theta_min, delta, theta_target)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        crate::io::codec::ensure_dir(parent)?;
    }
    plan.store(out)?;
    Ok(plan)
}

pub fn stage_dir(root: &Path, j: usize) -> PathBuf {
    root.join(format!("stage_{j}"))
}

/// Emits stage `j` into `root/stage_{j}`. Stage 0 reads `bundle_dir`; later
/// stages read `root/stage_{j-1}/state.json` and ignore `bundle_dir`.
pub fn stage(
    plan_path: &Path,
    j: usize,
    bundle_dir: Option<&Path>,
    k_trajectories: usize,
    seed: u64,
    root: &Path,
) -> Result<(StageManifest, StageState)> {
    let plan = StagePlan::load(plan_path)?;
    plan.stage(j)?;
    let out = stage_dir(root, j);
    if j == 0 {
        let dir =
            bundle_dir.ok_or_else(|| Error::Validation("stage 0 needs the input bundle".into()))?;
        let bundle = load_bundle(dir)?;
        emit_stage_dataset(
            &plan,
            0,
            StageSource::Original(&bundle),
            k_trajectories,
            seed,
            &out,
        )
    } else {
        let prev_path = stage_dir(root, j - 1).join(STATE_FILE);
        if !prev_path.exists() {
            return Err(Error::StageOrderViolation(format!(
                "stage {j} needs stage {} state at {}",
                j - 1,
                prev_path.display()
            )));
        }
        let prev = StageState::load(&prev_path)?;
        emit_stage_dataset(
            &plan,
            j,
            StageSource::Previous(&prev),
            k_trajectories,
            seed,
            &out,
        )
    }
}

/// Bundle directories under `dir`: `dir` itself if it is a bundle, otherwise
/// its bundle subdirectories in name order.
pub fn collect_bundle_dirs(dir: &Path) -> Result<Vec<PathBuf>> {
    if dir.join(BUNDLE_MANIFEST).exists() {
        return Ok(vec![dir.to_path_buf()]);
    }
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut dirs = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.join(BUNDLE_MANIFEST).is_file() {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs)
}

/// Ingests generated videos into the stage state file, updating it in place.
/// With `adapter_ref`, a DATASET_EMITTED state first records training.
pub fn ingest(
    state_path: &Path,
    videos_dir: &Path,
    adapter_ref: Option<&str>,
) -> Result<StageState> {
    let mut state = StageState::load(state_path)?;
    if let Some(adapter) = adapter_ref {
        state.record_training(adapter)?;
    }
    let dirs = collect_bundle_dirs(videos_dir)?;
    let next = ingest_generated(&state, &dirs)?;
    next.store(state_path)?;
    Ok(next)
}

/// Packs the top-`k` frames of the generated video ahead of the hole video.
pub fn pack(
    generated_dir: &Path,
    mask_dir: &Path,
    hole_dir: &Path,
    k: usize,
    out: &Path,
) -> Result<PathBuf> {
    let generated = load_bundle(generated_dir)?;
    let mask = load_mask_video(mask_dir)?;
    let hole = load_training_pair(hole_dir)?;
    let source = generated_dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let packed = build_packed_sequence(&generated.frames, &mask, &source, &hole, k)?;
    store_packed_sequence(&packed, out)
}

/// Fully loads whatever artifact lives at `path` and names it.
pub fn validate(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    if path.is_dir() {
        return validate_dir(path);
    }
    let value = read_json_value(path)?;
    match value.get("format").and_then(Value::as_str) {
        Some(PLAN_FORMAT) => {
            let plan = StagePlan::load(path)?;
            Ok(format!("stage plan with {} stages", plan.stages.len()))
        }
        Some(STAGE_FORMAT) if value.get("status").is_some() => {
            let state = StageState::load(path)?;
            Ok(format!("stage {} state {:?}", state.stage, state.status))
        }
        Some(STAGE_FORMAT) => {
            let m: StageManifest = read_manifest(path, STAGE_FORMAT)?;
            let base = path.parent().unwrap_or(Path::new("."));
            for b in &m.bundles {
                load_composite_sample(&base.join(b))?;
            }
            Ok(format!(
                "stage {} trainer manifest with {} samples",
                m.stage,
                m.bundles.len()
            ))
        }
        _ => match path.parent() {
            Some(dir)
                if path
                    .file_name()
                    .is_some_and(|n| is_manifest_name(n.to_str())) =>
            {
                validate_dir(dir)
            }
            _ => Err(Error::ManifestMismatch(format!(
                "{} is not a known artifact",
                path.display()
            ))),
        },
    }
}

fn is_manifest_name(name: Option<&str>) -> bool {
    matches!(
        name,
        Some(BUNDLE_MANIFEST | PAIR_MANIFEST | SAMPLE_MANIFEST | MASK_MANIFEST | PACK_MANIFEST)
    )
}

fn validate_dir(dir: &Path) -> Result<String> {
    if dir.join(BUNDLE_MANIFEST).exists() {
        let b = load_bundle(dir)?;
        let (w, h) = (b.camera.width, b.camera.height);
        return Ok(format!("bundle of {} frames at {w}x{h}", b.len()));
    }
    if dir.join(PAIR_MANIFEST).exists() {
        let p = load_training_pair(dir)?;
        return Ok(format!("training pair of {} frames", p.len()));
    }
    if dir.join(SAMPLE_MANIFEST).exists() {
        let s = load_composite_sample(dir)?;
        return Ok(format!(
            "composite sample ({}) of {} frames",
            s.kind.as_str(),
            s.pair.len()
        ));
    }
    if dir.join(MASK_MANIFEST).exists() {
        let m = load_mask_video(dir)?;
        return Ok(format!(
            "{} mask video of {} frames",
            m.kind.as_str(),
            m.len()
        ));
    }
    if dir.join(PACK_MANIFEST).exists() {
        let p = load_packed_sequence(dir)?;
        return Ok(format!("packed sequence of {} frames", p.len()));
    }
    if dir.join(STATE_FILE).exists() {
        let state = validate(&dir.join(STATE_FILE))?;
        if dir.join(TRAINER_MANIFEST).exists() {
            let manifest = validate(&dir.join(TRAINER_MANIFEST))?;
            return Ok(format!("{state}; {manifest}"));
        }
        return Ok(state);
    }
    Err(Error::MissingFile(dir.join(BUNDLE_MANIFEST)))
}
