use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::pose::Pose;
use crate::error::{Error, Result};

/// Camera motion for one keyframe, relative to the source camera.
///
/// Angles orbit the camera about a pivot on the source optical axis, applied
/// yaw (about +Y), then pitch (about the yawed +X), then roll (about the
/// resulting +Z). Positive yaw swings the camera toward -X. Offsets then move
/// the camera along its own axes: `truck` right, `pedestal` up (camera -Y),
/// `dolly` forward.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct KeyframeParams {
    pub yaw_deg: f64,
    pub pitch_deg: f64,
    pub roll_deg: f64,
    pub truck: f64,
    pub pedestal: f64,
    pub dolly: f64,
}

impl KeyframeParams {
    pub fn is_zero(&self) -> bool {
        *self == KeyframeParams::default()
    }

    fn lerp(&self, other: &KeyframeParams, s: f64) -> KeyframeParams {
        let l = |a: f64, b: f64| a + (b - a) * s;
        KeyframeParams {
            yaw_deg: l(self.yaw_deg, other.yaw_deg),
            pitch_deg: l(self.pitch_deg, other.pitch_deg),
            roll_deg: l(self.roll_deg, other.roll_deg),
            truck: l(self.truck, other.truck),
            pedestal: l(self.pedestal, other.pedestal),
            dolly: l(self.dolly, other.dolly),
        }
    }

    /// Camera-to-world rotation of the orbit.
    fn orbit_rotation(&self) -> Matrix3<f64> {
        let yaw = Rotation3::from_axis_angle(&Vector3::y_axis(), self.yaw_deg.to_radians());
        let pitch = Rotation3::from_axis_angle(&Vector3::x_axis(), self.pitch_deg.to_radians());
        let roll = Rotation3::from_axis_angle(&Vector3::z_axis(), self.roll_deg.to_radians());
        (yaw * pitch * roll).into_inner()
    }

    fn offset(&self) -> Vector3<f64> {
        Vector3::new(self.truck, -self.pedestal, self.dolly)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    pub frame: u32,
    pub params: KeyframeParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pivot {
    /// Median valid depth of the first source frame.
    Auto,
    Depth(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterpMode {
    Slerp,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub name: String,
    pub frame_count: u32,
    pub keyframes: Vec<Keyframe>,
    pub pivot: Pivot,
    pub interp: InterpMode,
}

impl Trajectory {
    pub fn new(
        name: impl Into<String>,
        frame_count: u32,
        keyframes: Vec<Keyframe>,
        pivot: Pivot,
        interp: InterpMode,
    ) -> Result<Self> {
        let traj = Trajectory {
            name: name.into(),
            frame_count,
            keyframes,
            pivot,
            interp,
        };
        traj.validate()?;
        Ok(traj)
    }

    /// A trajectory that holds the source camera for `frame_count` frames.
    pub fn identity(name: impl Into<String>, frame_count: u32) -> Result<Self> {
        Self::new(
            name,
            frame_count,
            vec![Keyframe {
                frame: 0,
                params: KeyframeParams::default(),
            }],
            Pivot::Auto,
            InterpMode::Slerp,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.frame_count == 0 {
            return Err(Error::Semantic("frame count must be positive".into()));
        }
        let first = self
            .keyframes
            .first()
            .ok_or_else(|| Error::Semantic("trajectory has no keyframes".into()))?;
        if first.frame != 0 {
            return Err(Error::Semantic(format!(
                "first keyframe must be at frame 0, found {}",
                first.frame
            )));
        }
        for pair in self.keyframes.windows(2) {
            if pair[1].frame <= pair[0].frame {
                return Err(Error::Semantic(format!(
                    "keyframe {} follows keyframe {}; indices must strictly increase",
                    pair[1].frame, pair[0].frame
                )));
            }
        }
        let last = self.keyframes.last().map(|k| k.frame).unwrap_or(0);
        if last >= self.frame_count {
            return Err(Error::Semantic(format!(
                "keyframe {last} is beyond the last frame ({})",
                self.frame_count - 1
            )));
        }
        for kf in &self.keyframes {
            let p = &kf.params;
            let vals = [
                p.yaw_deg,
                p.pitch_deg,
                p.roll_deg,
                p.truck,
                p.pedestal,
                p.dolly,
            ];
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::Semantic(format!(
                    "keyframe {} has a non-finite parameter",
                    kf.frame
                )));
            }
        }
        if let Pivot::Depth(d) = self.pivot {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Semantic(format!(
                    "pivot depth must be positive, got {d}"
                )));
            }
        }
        Ok(())
    }

    /// Resolves the pivot against the first frame's valid depths.
    /// `None` when the pivot is automatic and no depth is valid.
    pub fn resolve_pivot(&self, first_frame_depths: &[f32]) -> Option<f64> {
        match self.pivot {
            Pivot::Depth(d) => Some(d),
            Pivot::Auto => median_valid_depth(first_frame_depths),
        }
    }
}

pub(crate) fn median_valid_depth(values: &[f32]) -> Option<f64> {
    let mut valid: Vec<f32> = values
        .iter()
        .copied()
        .filter(|d| d.is_finite() && *d > 0.0)
        .collect();
    if valid.is_empty() {
        return None;
    }
    valid.sort_by(f32::total_cmp);
    let n = valid.len();
    let median = if n % 2 == 1 {
        valid[n / 2] as f64
    } else {
        0.5 * (valid[n / 2 - 1] as f64 + valid[n / 2] as f64)
    };
    Some(median)
}

fn pose_from_parts(c2w: &Matrix3<f64>, offset: &Vector3<f64>, pivot_depth: f64) -> Pose {
    let pivot = Vector3::new(0.0, 0.0, pivot_depth);
    let center = pivot + c2w * Vector3::new(0.0, 0.0, -pivot_depth) + c2w * offset;
    let rotation = c2w.transpose();
    Pose {
        rotation,
        translation: -(rotation * center),
    }
}

/// Pose obtained by composing one keyframe's parameters directly.
pub fn keyframe_pose(params: &KeyframeParams, pivot_depth: f64) -> Pose {
    if params.is_zero() {
        return Pose::identity();
    }
    pose_from_parts(&params.orbit_rotation(), &params.offset(), pivot_depth)
}

/// Compiles a trajectory to one world-to-camera pose per frame.
///
/// Keyframe frames get the exact keyframe pose. In between, the orbit
/// rotation is interpolated (slerp, or per-angle lerp in linear mode) and
/// the camera-axis offsets lerp. Frames after the last keyframe hold it.
pub fn sample_poses(traj: &Trajectory, pivot_depth: f64) -> Vec<Pose> {
    let kfs = &traj.keyframes;
    let mut poses = Vec::with_capacity(traj.frame_count as usize);
    let mut seg = 0usize;
    for f in 0..traj.frame_count {
        while seg + 1 < kfs.len() && kfs[seg + 1].frame <= f {
            seg += 1;
        }
        let a = &kfs[seg];
        if a.frame == f || seg + 1 == kfs.len() {
            poses.push(keyframe_pose(&a.params, pivot_depth));
            continue;
        }
        let b = &kfs[seg + 1];
        let s = (f - a.frame) as f64 / (b.frame - a.frame) as f64;
        poses.push(interpolate(
            &a.params,
            &b.params,
            s,
            traj.interp,
            pivot_depth,
        ));
    }
    poses
}

fn interpolate(
    a: &KeyframeParams,
    b: &KeyframeParams,
    s: f64,
    mode: InterpMode,
    pivot_depth: f64,
) -> Pose {
    let lerped = a.lerp(b, s);
    let rotation = match mode {
        InterpMode::Linear => lerped.orbit_rotation(),
        InterpMode::Slerp => {
            let qa = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(
                a.orbit_rotation(),
            ));
            let qb = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(
                b.orbit_rotation(),
            ));
            match qa.try_slerp(&qb, s, 1e-12) {
                Some(q) => q.to_rotation_matrix().into_inner(),
                // Half-turn apart: the great arc is ambiguous.
                None => lerped.orbit_rotation(),
            }
        }
    };
    pose_from_parts(&rotation, &lerped.offset(), pivot_depth)
}

/// Largest geodesic rotation angle (degrees) of any frame relative to the
/// source camera. Rotations do not depend on the pivot depth.
pub fn max_view_angle(traj: &Trajectory) -> f64 {
    sample_poses(traj, 1.0)
        .iter()
        .map(Pose::rotation_angle_deg)
        .fold(0.0, f64::max)
}
