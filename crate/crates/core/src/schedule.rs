//! Angle-progressive self-iterative tuning as a resumable state machine.
//!
//! Each stage emits a composite-mask dataset with trajectories capped at the
//! stage angle plus a manifest for the external trainer. After training and
//! generation happen outside, the generated videos are ingested and become
//! the sources of the next stage.
//!
//! ```text
//! PLANNED -> DATASET_EMITTED -> TRAINED -> GENERATED
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{
    max_view_angle, pretty_print, InterpMode, Keyframe, KeyframeParams, Pivot, Trajectory,
};
use crate::error::{Error, Result};
use crate::io::codec::{ensure_dir, read_manifest, write_json};
use crate::io::{load_bundle, store_composite_sample, Bundle};
use crate::maskgen::{sample_composite, EditMaskConfig};
use crate::reprojection::{reproject_trajectory, ReprojectConfig};

pub const STAGE_FORMAT: &str = "fyc-stage/1";
pub const PLAN_FORMAT: &str = "fyc-plan/1";
pub const STATE_FILE: &str = "state.json";
pub const TRAINER_MANIFEST: &str = "trainer.json";

pub const DEFAULT_THETA_MIN: f64 = 25.0;
pub const DEFAULT_DELTA_THETA: f64 = 10.0;
pub const DEFAULT_THETA_TARGET: f64 = 45.0;

/// Hyperparameters handed to the external LoRA trainer and sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainerConfig {
    pub rank: u32,
    pub lr: f64,
    pub steps: u32,
    pub weight_decay: f64,
    pub resolution: u32,
    pub length: u32,
    pub lora_weight: f64,
    pub sampler_steps: u32,
    pub guidance: f64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            rank: 128,
            lr: 1e-5,
            steps: 2000,
            weight_decay: 0.1,
            resolution: 512,
            length: 81,
            lora_weight: 0.7,
            sampler_steps: 30,
            guidance: 6.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryTemplate {
    YawSweep,
    PitchSweep,
    /// Yaw and pitch together.
    Orbit,
}

impl TrajectoryTemplate {
    pub const ALL: [TrajectoryTemplate; 3] = [
        TrajectoryTemplate::YawSweep,
        TrajectoryTemplate::PitchSweep,
        TrajectoryTemplate::Orbit,
    ];

    fn name(&self) -> &'static str {
        match self {
            TrajectoryTemplate::YawSweep => "yaw",
            TrajectoryTemplate::PitchSweep => "pitch",
            TrajectoryTemplate::Orbit => "orbit",
        }
    }

    fn end_params(&self, amplitude: f64, sign_a: f64, sign_b: f64) -> KeyframeParams {
        let mut p = KeyframeParams::default();
        match self {
            TrajectoryTemplate::YawSweep => p.yaw_deg = sign_a * amplitude,
            TrajectoryTemplate::PitchSweep => p.pitch_deg = sign_a * amplitude,
            TrajectoryTemplate::Orbit => {
                let each = amplitude / std::f64::consts::SQRT_2;
                p.yaw_deg = sign_a * each;
                p.pitch_deg = sign_b * each;
            }
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage {
    pub index: usize,
    pub max_angle_deg: f64,
    pub templates: Vec<TrajectoryTemplate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StagePlan {
    pub format: String,
    pub theta_min: f64,
    pub delta_theta: f64,
    pub theta_target: f64,
    pub stages: Vec<Stage>,
    pub trainer: TrainerConfig,
}

impl StagePlan {
    pub fn stage(&self, j: usize) -> Result<&Stage> {
        self.stages.get(j).ok_or_else(|| {
            Error::InvalidSchedule(format!(
                "stage {j} not in plan of {} stages",
                self.stages.len()
            ))
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::InvalidSchedule("plan has no stages".into()));
        }
        for (j, s) in self.stages.iter().enumerate() {
            if s.index != j {
                return Err(Error::InvalidSchedule(format!(
                    "stage {j} carries index {}",
                    s.index
                )));
            }
            if s.templates.is_empty() {
                return Err(Error::InvalidSchedule(format!(
                    "stage {j} has no templates"
                )));
            }
        }
        if self
            .stages
            .windows(2)
            .any(|w| w[1].max_angle_deg <= w[0].max_angle_deg)
        {
            return Err(Error::InvalidSchedule(
                "stage angles must strictly increase".into(),
            ));
        }
        if self.trainer.length == 0 || self.trainer.resolution == 0 {
            return Err(Error::InvalidSchedule(
                "trainer length and resolution must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<StagePlan> {
        let plan: StagePlan = read_manifest(path, PLAN_FORMAT)?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn store(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

/// Stage angles `theta_min, theta_min + delta, ...` until `theta_target` is
/// reached or passed.
pub fn plan_stages(theta_min: f64, delta_theta: f64, theta_target: f64) -> Result<StagePlan> {
    let finite = theta_min.is_finite() && delta_theta.is_finite() && theta_target.is_finite();
    if !finite || theta_min <= 0.0 || theta_target < theta_min || delta_theta <= 0.0 {
        return Err(Error::InvalidSchedule(format!(
            "need 0 < theta_min <= theta_target and delta > 0, got ({theta_min}, {delta_theta}, {theta_target})"
        )));
    }
    let steps = ((theta_target - theta_min) / delta_theta - 1e-9)
        .ceil()
        .max(0.0) as usize;
    if steps > 10_000 {
        return Err(Error::InvalidSchedule(format!(
            "{steps} stages is too many"
        )));
    }
    let stages = (0..=steps)
        .map(|j| Stage {
            index: j,
            max_angle_deg: theta_min + j as f64 * delta_theta,
            templates: TrajectoryTemplate::ALL.to_vec(),
        })
        .collect();
    Ok(StagePlan {
        format: PLAN_FORMAT.into(),
        theta_min,
        delta_theta,
        theta_target,
        stages,
        trainer: TrainerConfig::default(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StageStatus {
    Planned,
    DatasetEmitted,
    Trained,
    Generated,
}

/// Persistent state of one stage. Paths are stored as given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageState {
    pub format: String,
    pub stage: usize,
    pub status: StageStatus,
    pub dataset_dir: Option<PathBuf>,
    pub trainer_manifest: Option<PathBuf>,
    /// Opaque reference to the adapter weights produced by the trainer.
    pub adapter_ref: Option<String>,
    pub generated: Vec<PathBuf>,
    pub expected_frames: u32,
    pub expected_resolution: [u32; 2],
}

impl StageState {
    pub fn planned(plan: &StagePlan, j: usize) -> Result<StageState> {
        plan.stage(j)?;
        Ok(StageState {
            format: STAGE_FORMAT.into(),
            stage: j,
            status: StageStatus::Planned,
            dataset_dir: None,
            trainer_manifest: None,
            adapter_ref: None,
            generated: Vec::new(),
            expected_frames: plan.trainer.length,
            expected_resolution: [plan.trainer.resolution, plan.trainer.resolution],
        })
    }

    fn require(&self, status: StageStatus, action: &str) -> Result<()> {
        if self.status == status {
            Ok(())
        } else {
            Err(Error::StageOrderViolation(format!(
                "stage {} is {:?}; {action} needs {:?}",
                self.stage, self.status, status
            )))
        }
    }

    pub fn mark_dataset_emitted(
        &mut self,
        dataset_dir: PathBuf,
        trainer_manifest: PathBuf,
    ) -> Result<()> {
        self.require(StageStatus::Planned, "dataset emission")?;
        self.dataset_dir = Some(dataset_dir);
        self.trainer_manifest = Some(trainer_manifest);
        self.status = StageStatus::DatasetEmitted;
        Ok(())
    }

    /// Records the external trainer's output.
    pub fn record_training(&mut self, adapter_ref: impl Into<String>) -> Result<()> {
        self.require(StageStatus::DatasetEmitted, "recording training")?;
        let adapter_ref = adapter_ref.into();
        if adapter_ref.is_empty() {
            return Err(Error::Validation(
                "adapter reference must not be empty".into(),
            ));
        }
        self.adapter_ref = Some(adapter_ref);
        self.status = StageStatus::Trained;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<StageState> {
        let state: StageState = read_manifest(path, STAGE_FORMAT)?;
        state.check_consistent()?;
        Ok(state)
    }

    pub fn store(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    fn check_consistent(&self) -> Result<()> {
        let s = self.status;
        let bad = (s >= StageStatus::DatasetEmitted
            && (self.dataset_dir.is_none() || self.trainer_manifest.is_none()))
            || (s >= StageStatus::Trained && self.adapter_ref.is_none())
            || (s == StageStatus::Generated && self.generated.is_empty())
            || (s < StageStatus::Generated && !self.generated.is_empty());
        if bad {
            return Err(Error::Validation(format!(
                "stage state {:?} is missing fields for its status",
                self.status
            )));
        }
        Ok(())
    }
}

/// Validates generated videos against the plan dimensions and advances the
/// stage to GENERATED. Each entry is a bundle directory (frames plus the
/// re-estimated depth the next stage needs).
pub fn ingest_generated(state: &StageState, video_dirs: &[PathBuf]) -> Result<StageState> {
    state.require(StageStatus::Trained, "ingesting generated videos")?;
    if video_dirs.is_empty() {
        return Err(Error::IngestMissing(format!(
            "no generated videos for stage {}",
            state.stage
        )));
    }
    for dir in video_dirs {
        let bundle = load_bundle(dir)?;
        check_generated(state, dir, &bundle)?;
    }
    log::info!(
        "stage {} ingested {} generated videos",
        state.stage,
        video_dirs.len()
    );
    let mut next = state.clone();
    next.generated = video_dirs.to_vec();
    next.status = StageStatus::Generated;
    Ok(next)
}

fn check_generated(state: &StageState, dir: &Path, bundle: &Bundle) -> Result<()> {
    if bundle.len() != state.expected_frames as usize {
        return Err(Error::Validation(format!(
            "frame_count mismatch: {} has {} frames, plan expects {}",
            dir.display(),
            bundle.len(),
            state.expected_frames
        )));
    }
    let res = [bundle.camera.width, bundle.camera.height];
    if res != state.expected_resolution {
        return Err(Error::Validation(format!(
            "resolution mismatch: {} is {}x{}, plan expects {}x{}",
            dir.display(),
            res[0],
            res[1],
            state.expected_resolution[0],
            state.expected_resolution[1]
        )));
    }
    Ok(())
}

/// Trainer-facing description of one stage's dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageManifest {
    pub format: String,
    pub stage: usize,
    pub max_angle_deg: f64,
    /// Sample directories, relative to the manifest.
    pub bundles: Vec<String>,
    pub trajectories: Vec<String>,
    pub hyperparameters: TrainerConfig,
    pub seed: u64,
    pub seeds: Vec<u64>,
}

/// Where a stage's source videos come from.
pub enum StageSource<'a> {
    /// Stage 0: the input video.
    Original(&'a Bundle),
    /// Later stages: the previous stage, which must be GENERATED.
    Previous(&'a StageState),
}

/// Builds `count` trajectories of `frame_count` frames whose maximum view
/// angle does not exceed the stage angle. Templates rotate in order; sweep
/// directions are drawn from `rng`.
pub fn stage_trajectories(
    stage: &Stage,
    count: usize,
    frame_count: u32,
    rng: &mut impl Rng,
) -> Result<Vec<Trajectory>> {
    let cap = stage.max_angle_deg;
    (0..count)
        .map(|k| {
            let template = stage.templates[k % stage.templates.len()];
            let sign = |r: &mut dyn RngCore| if r.next_u32() & 1 == 0 { 1.0 } else { -1.0 };
            let (sa, sb) = (sign(rng), sign(rng));
            let mut amplitude = cap;
            let mut tries = 0;
            loop {
                let end = template.end_params(amplitude, sa, sb);
                let mut keyframes = vec![Keyframe {
                    frame: 0,
                    params: KeyframeParams::default(),
                }];
                if frame_count > 1 {
                    keyframes.push(Keyframe {
                        frame: frame_count - 1,
                        params: end,
                    });
                } else {
                    keyframes[0].params = end;
                }
                let traj = Trajectory::new(
                    format!("stage{}_{}_{k:03}", stage.index, template.name()),
                    frame_count,
                    keyframes,
                    Pivot::Auto,
                    InterpMode::Slerp,
                )?;
                let angle = max_view_angle(&traj);
                if angle <= cap && (angle >= cap * (1.0 - 1e-9) || tries >= 64) {
                    return Ok(traj);
                }
                // composed yaw and pitch do not add up exactly
                amplitude *= cap / angle * (1.0 - 1e-12);
                tries += 1;
            }
        })
        .collect()
}

fn sample_dir_name(k: usize) -> String {
    format!("sample_{k:03}")
}

/// Emits stage `j`: `k_trajectories` composite samples under `out_dir`, the
/// trainer manifest and the stage state (DATASET_EMITTED).
pub fn emit_stage_dataset(
    plan: &StagePlan,
    j: usize,
    source: StageSource<'_>,
    k_trajectories: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<(StageManifest, StageState)> {
    plan.validate()?;
    let stage = plan.stage(j)?;
    if k_trajectories == 0 {
        return Err(Error::InvalidSchedule(
            "k_trajectories must be positive".into(),
        ));
    }
    let loaded;
    let sources: Vec<&Bundle> = match (j, source) {
        (0, StageSource::Original(b)) => vec![b],
        (0, StageSource::Previous(_)) => {
            return Err(Error::StageOrderViolation(
                "stage 0 must be built from the original video".into(),
            ))
        }
        (_, StageSource::Original(_)) => {
            return Err(Error::StageOrderViolation(format!(
                "stage {j} must be built from stage {} generated videos",
                j - 1
            )))
        }
        (_, StageSource::Previous(prev)) => {
            if prev.stage + 1 != j {
                return Err(Error::StageOrderViolation(format!(
                    "stage {j} cannot follow stage {}",
                    prev.stage
                )));
            }
            prev.require(StageStatus::Generated, &format!("emitting stage {j}"))?;
            loaded = prev
                .generated
                .iter()
                .map(|p| {
                    if p.exists() {
                        load_bundle(p)
                    } else {
                        Err(Error::IngestMissing(format!(
                            "generated video {} is gone",
                            p.display()
                        )))
                    }
                })
                .collect::<Result<Vec<Bundle>>>()?;
            loaded.iter().collect()
        }
    };
    if sources.is_empty() {
        return Err(Error::IngestMissing(format!(
            "no source videos for stage {j}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jobs = Vec::with_capacity(k_trajectories);
    for k in 0..k_trajectories {
        let src = sources[k % sources.len()];
        let traj = stage_trajectories(
            &Stage {
                index: stage.index,
                max_angle_deg: stage.max_angle_deg,
                templates: vec![stage.templates[k % stage.templates.len()]],
            },
            1,
            src.len() as u32,
            &mut rng,
        )?
        .pop()
        .expect("one trajectory");
        // renames to the global sample index
        let traj = Trajectory {
            name: format!(
                "stage{j}_{k:03}_{}",
                traj.name.rsplit('_').nth(1).unwrap_or("traj")
            ),
            ..traj
        };
        jobs.push((k, src, traj, rng.next_u64()));
    }

    ensure_dir(out_dir)?;
    let cfg = ReprojectConfig::default();
    let edit = EditMaskConfig::default();
    let samples: Vec<(String, String, u64)> = jobs
        .par_iter()
        .map(|(k, src, traj, sample_seed)| {
            let angle = max_view_angle(traj);
            if angle > stage.max_angle_deg {
                return Err(Error::InvalidSchedule(format!(
                    "trajectory {} reaches {angle} deg, stage cap is {}",
                    traj.name, stage.max_angle_deg
                )));
            }
            let pair = reproject_trajectory(&src.frames, &src.depths, &src.camera, traj, &cfg)?;
            let sample = sample_composite(pair, &edit, *sample_seed)?;
            log::info!(
                "stage {j} sample {k}: {} ({angle:.3} deg, {} mask)",
                traj.name,
                sample.kind.as_str()
            );
            let dir_name = sample_dir_name(*k);
            let dir = out_dir.join(&dir_name);
            store_composite_sample(&sample, &dir)?;
            let traj_path = dir.join("trajectory.traj");
            fs::write(&traj_path, pretty_print(traj)).map_err(|e| Error::io(&traj_path, e))?;
            Ok((dir_name, traj.name.clone(), *sample_seed))
        })
        .collect::<Result<_>>()?;

    let manifest = StageManifest {
        format: STAGE_FORMAT.into(),
        stage: j,
        max_angle_deg: stage.max_angle_deg,
        bundles: samples.iter().map(|s| s.0.clone()).collect(),
        trajectories: samples.iter().map(|s| s.1.clone()).collect(),
        hyperparameters: plan.trainer.clone(),
        seed,
        seeds: samples.iter().map(|s| s.2).collect(),
    };
    let manifest_path = out_dir.join(TRAINER_MANIFEST);
    write_json(&manifest_path, &manifest)?;

    let mut state = StageState::planned(plan, j)?;
    state.mark_dataset_emitted(out_dir.to_path_buf(), manifest_path)?;
    state.store(&out_dir.join(STATE_FILE))?;
    Ok((manifest, state))
}
