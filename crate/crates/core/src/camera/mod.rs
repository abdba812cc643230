//! Pinhole cameras, rigid poses and keyframed camera trajectories.

mod dsl;
mod pose;
mod trajectory;

pub use dsl::{parse_trajectory, pretty_print};
pub use pose::{invert_pose, Pose};
pub use trajectory::{
    keyframe_pose, max_view_angle, sample_poses, InterpMode, Keyframe, KeyframeParams, Pivot,
    Trajectory,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pinhole intrinsics. Pixel centers sit at integer coordinates with the
/// origin at the top-left pixel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraModel {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        let cam = CameraModel {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        cam.validate()?;
        Ok(cam)
    }

    /// Checks the intrinsics invariants. Deserialized models must pass
    /// through here before use.
    pub fn validate(&self) -> Result<()> {
        let finite = [self.fx, self.fy, self.cx, self.cy]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Validation("camera parameters must be finite".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::Validation(
                "camera dimensions must be positive".into(),
            ));
        }
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::Validation(format!(
                "focal lengths must be positive (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if !(0.0..self.width as f64).contains(&self.cx)
            || !(0.0..self.height as f64).contains(&self.cy)
        {
            return Err(Error::Validation(format!(
                "principal point ({}, {}) outside {}x{} image",
                self.cx, self.cy, self.width, self.height
            )));
        }
        Ok(())
    }

    /// Builds a model from a row-major 3x3 intrinsic matrix.
    pub fn from_matrix(k: &[f64; 9], width: u32, height: u32) -> Result<Self> {
        let off_diag = [k[1], k[3], k[6], k[7]];
        if off_diag.iter().any(|&v| v != 0.0) || k[8] != 1.0 {
            return Err(Error::Validation(
                "intrinsic matrix must be [[fx,0,cx],[0,fy,cy],[0,0,1]]".into(),
            ));
        }
        Self::new(k[0], k[4], k[2], k[5], width, height)
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }
}
