//! Directory formats for training pairs, mask videos, composite samples and
//! packed sequences.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::bundle::{
    frame_name, mask_name, read_frames, read_masks, write_frames, write_masks, MASK_SEMANTICS,
};
use super::codec::{
    ensure_dir, read_frame, read_manifest, read_mask, write_frame, write_json, write_mask,
};
use crate::error::{Error, Result};
use crate::maskgen::{CompositeSample, MaskKind, MaskVideo};
use crate::packing::{PackManifest, PackedSequence};
use crate::reprojection::{TrainingPair, TrajectoryRef};

pub const PAIR_FORMAT: &str = "fyc-pair/1";
pub const PAIR_MANIFEST: &str = "pair.json";
pub const MASK_FORMAT: &str = "fyc-mask/1";
pub const MASK_MANIFEST: &str = "masks.json";
pub const SAMPLE_FORMAT: &str = "fyc-sample/1";
pub const SAMPLE_MANIFEST: &str = "sample.json";
pub const PACK_FORMAT: &str = "fyc-pack/1";
pub const PACK_MANIFEST: &str = "pack.json";

fn check_semantics(found: &str) -> Result<()> {
    if found == MASK_SEMANTICS {
        Ok(())
    } else {
        Err(Error::ManifestMismatch(format!(
            "unknown mask semantics {found:?}"
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaskManifest {
    format: String,
    kind: MaskKind,
    frame_count: usize,
    width: u32,
    height: u32,
    mask_semantics: String,
}

/// `masks.json` plus `m_00000.png ...` in one directory.
pub fn store_mask_video(masks: &MaskVideo, dir: &Path) -> Result<PathBuf> {
    masks.validate()?;
    let (width, height) = masks.dims();
    write_masks(dir, &masks.frames)?;
    let path = dir.join(MASK_MANIFEST);
    write_json(
        &path,
        &MaskManifest {
            format: MASK_FORMAT.into(),
            kind: masks.kind,
            frame_count: masks.len(),
            width,
            height,
            mask_semantics: MASK_SEMANTICS.into(),
        },
    )?;
    Ok(path)
}

pub fn load_mask_video(dir: &Path) -> Result<MaskVideo> {
    let m: MaskManifest = read_manifest(&dir.join(MASK_MANIFEST), MASK_FORMAT)?;
    check_semantics(&m.mask_semantics)?;
    let frames = read_masks(dir, m.frame_count, (m.width, m.height))?;
    MaskVideo::new(frames, m.kind)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairManifest {
    format: String,
    frame_count: usize,
    width: u32,
    height: u32,
    trajectory: TrajectoryRef,
    corrupted: String,
    clean: String,
    inpaint_mask: String,
}

/// ```text
/// pair.json
/// corrupted/f_00000.png ...
/// clean/f_00000.png ...
/// inpaint_mask/masks.json, m_00000.png ...
/// ```
pub fn store_training_pair(pair: &TrainingPair, dir: &Path) -> Result<PathBuf> {
    pair.validate()?;
    let (width, height) = pair.dims();
    write_frames(&dir.join("corrupted"), &pair.corrupted)?;
    write_frames(&dir.join("clean"), &pair.clean)?;
    store_mask_video(&pair.hole_mask(), &dir.join("inpaint_mask"))?;
    let path = dir.join(PAIR_MANIFEST);
    write_json(
        &path,
        &PairManifest {
            format: PAIR_FORMAT.into(),
            frame_count: pair.len(),
            width,
            height,
            trajectory: pair.trajectory.clone(),
            corrupted: "corrupted".into(),
            clean: "clean".into(),
            inpaint_mask: "inpaint_mask".into(),
        },
    )?;
    Ok(path)
}

pub fn load_training_pair(dir: &Path) -> Result<TrainingPair> {
    let m: PairManifest = read_manifest(&dir.join(PAIR_MANIFEST), PAIR_FORMAT)?;
    let dims = (m.width, m.height);
    let corrupted = read_frames(&dir.join(&m.corrupted), m.frame_count, dims)?;
    let clean = read_frames(&dir.join(&m.clean), m.frame_count, dims)?;
    let masks = load_mask_video(&dir.join(&m.inpaint_mask))?;
    if masks.len() != m.frame_count || masks.dims() != dims {
        return Err(Error::ManifestMismatch(format!(
            "inpaint mask of {} does not match the pair manifest",
            dir.display()
        )));
    }
    let pair = TrainingPair {
        corrupted,
        inpaint_mask: masks.frames,
        clean,
        trajectory: m.trajectory,
    };
    pair.validate()?;
    Ok(pair)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleManifest {
    format: String,
    kind: MaskKind,
    seed: u64,
    pair: String,
    mask: String,
}

/// `sample.json`, the pair under `pair/` and the supervising mask under `mask/`.
pub fn store_composite_sample(sample: &CompositeSample, dir: &Path) -> Result<PathBuf> {
    store_training_pair(&sample.pair, &dir.join("pair"))?;
    store_mask_video(&sample.mask, &dir.join("mask"))?;
    let path = dir.join(SAMPLE_MANIFEST);
    write_json(
        &path,
        &SampleManifest {
            format: SAMPLE_FORMAT.into(),
            kind: sample.kind,
            seed: sample.seed,
            pair: "pair".into(),
            mask: "mask".into(),
        },
    )?;
    Ok(path)
}

pub fn load_composite_sample(dir: &Path) -> Result<CompositeSample> {
    let m: SampleManifest = read_manifest(&dir.join(SAMPLE_MANIFEST), SAMPLE_FORMAT)?;
    let pair = load_training_pair(&dir.join(&m.pair))?;
    let mask = load_mask_video(&dir.join(&m.mask))?;
    if mask.len() != pair.len() || mask.dims() != pair.dims() {
        return Err(Error::ManifestMismatch(
            "sample mask does not match its pair".into(),
        ));
    }
    if mask.kind != m.kind {
        return Err(Error::ManifestMismatch(format!(
            "sample declares {} but its mask is {}",
            m.kind.as_str(),
            mask.kind.as_str()
        )));
    }
    Ok(CompositeSample {
        pair,
        mask,
        kind: m.kind,
        seed: m.seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PackFile {
    format: String,
    k: usize,
    selected: Vec<usize>,
    source: String,
    context_frames: Vec<String>,
    hole_frames: Vec<String>,
    hole_masks: Vec<String>,
}

/// `pack.json` listing relative paths under `context/`, `hole/` and
/// `hole_mask/`.
pub fn store_packed_sequence(packed: &PackedSequence, dir: &Path) -> Result<PathBuf> {
    packed.validate()?;
    for sub in ["context", "hole", "hole_mask"] {
        ensure_dir(&dir.join(sub))?;
    }
    let mut file = PackFile {
        format: PACK_FORMAT.into(),
        k: packed.manifest.k,
        selected: packed.manifest.selected.clone(),
        source: packed.manifest.source.clone(),
        context_frames: Vec::new(),
        hole_frames: Vec::new(),
        hole_masks: Vec::new(),
    };
    for (i, f) in packed.context_frames.iter().enumerate() {
        let rel = format!("context/{}", frame_name(i));
        write_frame(&dir.join(&rel), f)?;
        file.context_frames.push(rel);
    }
    for (i, f) in packed.hole_video.iter().enumerate() {
        let rel = format!("hole/{}", frame_name(i));
        write_frame(&dir.join(&rel), f)?;
        file.hole_frames.push(rel);
    }
    for (i, m) in packed.hole_mask.iter().enumerate() {
        let rel = format!("hole_mask/{}", mask_name(i));
        write_mask(&dir.join(&rel), m)?;
        file.hole_masks.push(rel);
    }
    let path = dir.join(PACK_MANIFEST);
    write_json(&path, &file)?;
    Ok(path)
}

pub fn load_packed_sequence(dir: &Path) -> Result<PackedSequence> {
    let m: PackFile = read_manifest(&dir.join(PACK_MANIFEST), PACK_FORMAT)?;
    let frames = |paths: &[String]| -> Result<Vec<_>> {
        paths
            .iter()
            .map(|p| read_frame(&dir.join(p), None))
            .collect()
    };
    let packed = PackedSequence {
        context_frames: frames(&m.context_frames)?,
        hole_video: frames(&m.hole_frames)?,
        hole_mask: m
            .hole_masks
            .iter()
            .map(|p| read_mask(&dir.join(p), None))
            .collect::<Result<_>>()?,
        manifest: PackManifest {
            k: m.k,
            selected: m.selected,
            source: m.source,
        },
    };
    packed
        .validate()
        .map_err(|e| Error::ManifestMismatch(format!("{}: {e}", dir.display())))?;
    Ok(packed)
}
