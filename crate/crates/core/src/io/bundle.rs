use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::codec::{
    ensure_dir, read_depth_png16, read_dpt, read_frame, read_manifest, read_mask,
    write_depth_png16, write_dpt, write_frame, write_json, write_mask,
};
use crate::camera::CameraModel;
use crate::error::{Error, Result};
use crate::geometry::{DepthFrame, Frame, Mask};
use crate::maskgen::{MaskKind, MaskVideo};

pub const BUNDLE_FORMAT: &str = "fyc-bundle/1";
pub const BUNDLE_MANIFEST: &str = "bundle.json";
pub const MASK_SEMANTICS: &str = "inpaint";

pub fn frame_name(i: usize) -> String {
    format!("f_{i:05}.png")
}

pub fn mask_name(i: usize) -> String {
    format!("m_{i:05}.png")
}

pub fn depth_name(i: usize, encoding: &DepthEncoding) -> String {
    match encoding {
        DepthEncoding::Dpt1 => format!("d_{i:05}.dpt"),
        DepthEncoding::Png16 { .. } => format!("d_{i:05}.png"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "encoding", rename_all = "lowercase")]
pub enum DepthEncoding {
    /// Lossless raw float depth.
    #[default]
    Dpt1,
    /// `depth = value * scale + offset`; value 0 is invalid.
    Png16 { scale: f64, offset: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleManifest {
    pub format: String,
    pub frame_count: usize,
    pub width: u32,
    pub height: u32,
    pub camera: CameraModel,
    pub depth: DepthEncoding,
    pub has_masks: bool,
    pub mask_semantics: String,
}

/// Frames, depths, optional masks and intrinsics of one video.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub frames: Vec<Frame>,
    pub depths: Vec<DepthFrame>,
    pub masks: Option<MaskVideo>,
    pub camera: CameraModel,
    pub depth_encoding: DepthEncoding,
}

impl Bundle {
    pub fn new(frames: Vec<Frame>, depths: Vec<DepthFrame>, camera: CameraModel) -> Result<Self> {
        let b = Bundle {
            frames,
            depths,
            masks: None,
            camera,
            depth_encoding: DepthEncoding::Dpt1,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        self.camera.validate()?;
        if self.frames.is_empty() {
            return Err(Error::Validation("bundle has no frames".into()));
        }
        if self.depths.len() != self.frames.len() {
            return Err(Error::LengthMismatch {
                expected: self.frames.len(),
                actual: self.depths.len(),
            });
        }
        let dims = (self.camera.width, self.camera.height);
        let bad_frame = self.frames.iter().any(|f| f.dims() != dims);
        let bad_depth = self.depths.iter().any(|d| d.dims() != dims);
        if bad_frame || bad_depth {
            return Err(Error::DimensionMismatch(format!(
                "bundle contents must all be {}x{}",
                dims.0, dims.1
            )));
        }
        if let Some(m) = &self.masks {
            if m.len() != self.frames.len() || m.frames.iter().any(|f| f.dims() != dims) {
                return Err(Error::DimensionMismatch(
                    "bundle masks do not match frames".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Checks that `dir` holds exactly the files `name(0..count)` among entries
/// starting with `prefix`.
pub(crate) fn check_sequence_dir(
    dir: &Path,
    count: usize,
    prefix: &str,
    name: impl Fn(usize) -> String,
) -> Result<()> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut present = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let fname = entry.file_name().to_string_lossy().into_owned();
        if fname.starts_with(prefix) {
            present.push(fname);
        }
    }
    if present.len() != count {
        return Err(Error::ManifestMismatch(format!(
            "manifest declares {count} files in {}, found {}",
            dir.display(),
            present.len()
        )));
    }
    for i in 0..count {
        let expected = name(i);
        if !present.contains(&expected) {
            return Err(Error::MissingFile(dir.join(expected)));
        }
    }
    Ok(())
}

pub(crate) fn read_frames(dir: &Path, count: usize, dims: (u32, u32)) -> Result<Vec<Frame>> {
    check_sequence_dir(dir, count, "f_", frame_name)?;
    (0..count)
        .into_par_iter()
        .map(|i| read_frame(&dir.join(frame_name(i)), Some(dims)))
        .collect()
}

pub(crate) fn write_frames(dir: &Path, frames: &[Frame]) -> Result<()> {
    ensure_dir(dir)?;
    frames
        .par_iter()
        .enumerate()
        .try_for_each(|(i, f)| write_frame(&dir.join(frame_name(i)), f))
}

pub(crate) fn read_masks(dir: &Path, count: usize, dims: (u32, u32)) -> Result<Vec<Mask>> {
    check_sequence_dir(dir, count, "m_", mask_name)?;
    (0..count)
        .into_par_iter()
        .map(|i| read_mask(&dir.join(mask_name(i)), Some(dims)))
        .collect()
}

pub(crate) fn write_masks(dir: &Path, masks: &[Mask]) -> Result<()> {
    ensure_dir(dir)?;
    masks
        .par_iter()
        .enumerate()
        .try_for_each(|(i, m)| write_mask(&dir.join(mask_name(i)), m))
}

fn read_depths(
    dir: &Path,
    count: usize,
    dims: (u32, u32),
    encoding: &DepthEncoding,
) -> Result<Vec<DepthFrame>> {
    check_sequence_dir(dir, count, "d_", |i| depth_name(i, encoding))?;
    (0..count)
        .into_par_iter()
        .map(|i| {
            let path = dir.join(depth_name(i, encoding));
            match *encoding {
                DepthEncoding::Dpt1 => read_dpt(&path, Some(dims)),
                DepthEncoding::Png16 { scale, offset } => {
                    read_depth_png16(&path, Some(dims), scale, offset)
                }
            }
        })
        .collect()
}

fn bundle_paths(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    (dir.join("frames"), dir.join("depth"), dir.join("masks"))
}

/// Loads and fully validates a bundle directory:
///
/// ```text
/// bundle.json
/// frames/f_00000.png ...
/// depth/d_00000.dpt ...      (or d_00000.png for png16)
/// masks/m_00000.png ...      (when has_masks)
/// ```
pub fn load_bundle(dir: &Path) -> Result<Bundle> {
    let manifest: BundleManifest = read_manifest(&dir.join(BUNDLE_MANIFEST), BUNDLE_FORMAT)?;
    manifest.camera.validate()?;
    let dims = (manifest.width, manifest.height);
    if dims != (manifest.camera.width, manifest.camera.height) {
        return Err(Error::ManifestMismatch(format!(
            "manifest resolution {}x{} differs from camera {}x{}",
            manifest.width, manifest.height, manifest.camera.width, manifest.camera.height
        )));
    }
    if manifest.frame_count == 0 {
        return Err(Error::ManifestMismatch(
            "bundle declares zero frames".into(),
        ));
    }
    if manifest.mask_semantics != MASK_SEMANTICS {
        return Err(Error::ManifestMismatch(format!(
            "unknown mask semantics {:?}",
            manifest.mask_semantics
        )));
    }
    if let DepthEncoding::Png16 { scale, offset } = manifest.depth {
        if !(scale > 0.0 && scale.is_finite() && offset.is_finite()) {
            return Err(Error::ManifestMismatch(format!(
                "png16 depth needs a positive scale, got {scale}"
            )));
        }
    }
    let (frames_dir, depth_dir, masks_dir) = bundle_paths(dir);
    let n = manifest.frame_count;
    let frames = read_frames(&frames_dir, n, dims)?;
    let depths = read_depths(&depth_dir, n, dims, &manifest.depth)?;
    let masks = if manifest.has_masks {
        Some(MaskVideo {
            frames: read_masks(&masks_dir, n, dims)?,
            kind: MaskKind::Pointcloud,
        })
    } else {
        None
    };
    Ok(Bundle {
        frames,
        depths,
        masks,
        camera: manifest.camera,
        depth_encoding: manifest.depth,
    })
}

pub fn store_bundle(bundle: &Bundle, dir: &Path) -> Result<PathBuf> {
    bundle.validate()?;
    let (frames_dir, depth_dir, masks_dir) = bundle_paths(dir);
    write_frames(&frames_dir, &bundle.frames)?;
    ensure_dir(&depth_dir)?;
    bundle
        .depths
        .par_iter()
        .enumerate()
        .try_for_each(|(i, d)| {
            let path = depth_dir.join(depth_name(i, &bundle.depth_encoding));
            match bundle.depth_encoding {
                DepthEncoding::Dpt1 => write_dpt(&path, d),
                DepthEncoding::Png16 { scale, offset } => {
                    write_depth_png16(&path, d, scale, offset)
                }
            }
        })?;
    if let Some(m) = &bundle.masks {
        write_masks(&masks_dir, &m.frames)?;
    }
    let manifest = BundleManifest {
        format: BUNDLE_FORMAT.into(),
        frame_count: bundle.len(),
        width: bundle.camera.width,
        height: bundle.camera.height,
        camera: bundle.camera,
        depth: bundle.depth_encoding,
        has_masks: bundle.masks.is_some(),
        mask_semantics: MASK_SEMANTICS.into(),
    };
    let path = dir.join(BUNDLE_MANIFEST);
    write_json(&path, &manifest)?;
    Ok(path)
}
