//! Double reprojection: warp each source frame into the target view and back,
//! so the holes of the target view land in the source camera frame and the
//! untouched input video becomes the ground truth.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{invert_pose, max_view_angle, sample_poses, CameraModel, Pose, Trajectory};
use crate::error::{Error, Result};
use crate::geometry::{
    check_sequence_lengths, project_render, unproject, DepthFrame, Frame, Mask,
    DEFAULT_SPLAT_RADIUS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReprojectConfig {
    pub splat_radius: u8,
    /// Extra square dilation of the hole mask, in pixels. Off by default.
    pub mask_dilation: u32,
}

impl Default for ReprojectConfig {
    fn default() -> Self {
        ReprojectConfig {
            splat_radius: DEFAULT_SPLAT_RADIUS,
            mask_dilation: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRef {
    pub name: String,
    pub max_angle_deg: f64,
}

/// Source-aligned supervision for one trajectory: `corrupted` is the
/// round-tripped video, `inpaint_mask` is true where it lost content, and
/// `clean` is the input video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub corrupted: Vec<Frame>,
    pub inpaint_mask: Vec<Mask>,
    pub clean: Vec<Frame>,
    pub trajectory: TrajectoryRef,
}

impl TrainingPair {
    pub fn len(&self) -> usize {
        self.clean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clean.is_empty()
    }

    pub fn dims(&self) -> (u32, u32) {
        self.clean.first().map(Frame::dims).unwrap_or((0, 0))
    }

    /// Checks lengths and dimensions of all three sequences, and that the
    /// corrupted video is black under the mask.
    pub fn validate(&self) -> Result<()> {
        let n = self.clean.len();
        if n == 0 {
            return Err(Error::Validation("training pair has no frames".into()));
        }
        for actual in [self.corrupted.len(), self.inpaint_mask.len()] {
            if actual != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    actual,
                });
            }
        }
        let dims = self.dims();
        for i in 0..n {
            if self.clean[i].dims() != dims
                || self.corrupted[i].dims() != dims
                || self.inpaint_mask[i].dims() != dims
            {
                return Err(Error::DimensionMismatch(format!(
                    "frame {i} does not match {}x{}",
                    dims.0, dims.1
                )));
            }
        }
        Ok(())
    }

    /// Fraction of masked pixels over the whole sequence.
    pub fn masked_fraction(&self) -> f64 {
        let total: u64 = self.inpaint_mask.iter().map(Mask::count_ones).sum();
        let (w, h) = self.dims();
        total as f64 / (w as f64 * h as f64 * self.len() as f64)
    }
}

struct RoundTrip {
    corrupted: Frame,
    mask: Mask,
}

fn round_trip(
    frame: &Frame,
    depth: &DepthFrame,
    cam: &CameraModel,
    pose: &Pose,
    cfg: &ReprojectConfig,
) -> Result<RoundTrip> {
    let forward = project_render(&unproject(frame, depth, cam)?, cam, pose, cfg.splat_radius)?;
    // the target z-buffer doubles as the target depth map
    let back_cloud = unproject(&forward.image, &forward.depth, cam)?;
    let back = project_render(&back_cloud, cam, &invert_pose(pose), cfg.splat_radius)?;
    let mask = back.visibility.not().dilate(cfg.mask_dilation);
    let mut corrupted = back.image;
    if cfg.mask_dilation > 0 {
        for (px, &m) in corrupted.pixels.iter_mut().zip(&mask.bits) {
            if m {
                *px = [0, 0, 0];
            }
        }
    }
    Ok(RoundTrip { corrupted, mask })
}

/// Builds a training pair from per-frame target poses. The trajectory
/// reference carries an empty name; see [`reproject_trajectory`].
pub fn double_reproject(
    video: &[Frame],
    depths: &[DepthFrame],
    cam: &CameraModel,
    poses: &[Pose],
    cfg: &ReprojectConfig,
) -> Result<TrainingPair> {
    check_sequence_lengths(video.len(), depths.len(), poses.len())?;
    let trips: Vec<RoundTrip> = video
        .par_iter()
        .zip(depths.par_iter())
        .zip(poses.par_iter())
        .map(|((frame, depth), pose)| round_trip(frame, depth, cam, pose, cfg))
        .collect::<Result<_>>()?;
    let max_angle_deg = poses
        .iter()
        .map(Pose::rotation_angle_deg)
        .fold(0.0, f64::max);
    let (corrupted, inpaint_mask) = trips.into_iter().map(|t| (t.corrupted, t.mask)).unzip();
    Ok(TrainingPair {
        corrupted,
        inpaint_mask,
        clean: video.to_vec(),
        trajectory: TrajectoryRef {
            name: String::new(),
            max_angle_deg,
        },
    })
}

/// Resolves the trajectory's pivot against the first depth frame, samples
/// its poses and runs [`double_reproject`].
pub fn reproject_trajectory(
    video: &[Frame],
    depths: &[DepthFrame],
    cam: &CameraModel,
    traj: &Trajectory,
    cfg: &ReprojectConfig,
) -> Result<TrainingPair> {
    let poses = trajectory_poses(traj, depths, video.len())?;
    let mut pair = double_reproject(video, depths, cam, &poses, cfg)?;
    pair.trajectory = TrajectoryRef {
        name: traj.name.clone(),
        max_angle_deg: max_view_angle(traj),
    };
    Ok(pair)
}

/// Poses for a trajectory applied to a video of `frame_count` frames.
pub fn trajectory_poses(
    traj: &Trajectory,
    depths: &[DepthFrame],
    frame_count: usize,
) -> Result<Vec<Pose>> {
    if traj.frame_count as usize != frame_count {
        return Err(Error::LengthMismatch {
            expected: frame_count,
            actual: traj.frame_count as usize,
        });
    }
    let first = depths.first().ok_or(Error::LengthMismatch {
        expected: frame_count,
        actual: 0,
    })?;
    let pivot = traj.resolve_pivot(&first.values).ok_or_else(|| {
        Error::Validation("automatic pivot needs at least one valid depth in frame 0".into())
    })?;
    Ok(sample_poses(traj, pivot))
}
