//! C ABI over warpforge.
//!
//! Every fallible call returns a status code (`WF_OK` on success) and
//! leaves a message for `wf_last_error_message` on the calling thread.
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `*_free` function.
//!
//! Arrays are dense row-major buffers:
//!
//! | buffer  | type    | shape          |
//! |---------|---------|----------------|
//! | frames  | uint8   | (N, H, W, 3)   |
//! | depths  | float32 | (N, H, W)      |
//! | K       | float64 | (3, 3)         |
//! | poses   | float64 | (N, 4, 4), world-to-camera |
//! | masks   | uint8   | (N, H, W), 1 = inpaint     |
//!
//! # Safety
//!
//! Pointers must be null or valid for the documented length; strings are
//! NUL-terminated UTF-8. Handles must come from this library and be freed
//! once.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::ptr;

use warpforge::camera::{CameraModel, Pose, Trajectory};
use warpforge::geometry::{DepthFrame, Frame};
use warpforge::io::{
    load_bundle, load_training_pair, store_bundle, store_composite_sample, store_training_pair,
    Bundle,
};
use warpforge::maskgen::{sample_composite, CompositeSample, EditMaskConfig, MaskKind};
use warpforge::pipeline;
use warpforge::reprojection::{
    double_reproject, reproject_trajectory, trajectory_poses, ReprojectConfig, TrainingPair,
};
use warpforge::{Error, ErrorClass};

pub const WF_OK: i32 = 0;
/// Content failed validation (shapes, formats, schedule order).
pub const WF_ERR_VALIDATION: i32 = 2;
/// Filesystem failure.
pub const WF_ERR_IO: i32 = 3;
/// Null pointer, bad string or buffer too small.
pub const WF_ERR_ARGUMENT: i32 = 4;
pub const WF_ERR_PANIC: i32 = 5;

pub const WF_MASK_POINTCLOUD: i32 = 0;
pub const WF_MASK_EDIT: i32 = 1;
pub const WF_MASK_UNION: i32 = 2;

pub struct WfBundle(Bundle);
pub struct WfTrajectory(Trajectory);
pub struct WfTrainingPair(TrainingPair);
pub struct WfCompositeSample(CompositeSample);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

enum Failure {
    Argument(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome<T> = Result<T, Failure>;

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Outcome<()>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WF_OK,
        Ok(Err(Failure::Argument(m))) => {
            set_error(m);
            WF_ERR_ARGUMENT
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            match e.class() {
                ErrorClass::Validation => WF_ERR_VALIDATION,
                ErrorClass::Io => WF_ERR_IO,
            }
        }
        Err(_) => {
            set_error("internal panic".into());
            WF_ERR_PANIC
        }
    }
}

fn arg(msg: impl Into<String>) -> Failure {
    Failure::Argument(msg.into())
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Outcome<&'a str> {
    if p.is_null() {
        return Err(arg(format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| arg(format!("{name} is not UTF-8")))
}

unsafe fn path(p: *const c_char, name: &str) -> Outcome<PathBuf> {
    text(p, name).map(PathBuf::from)
}

unsafe fn optional_path(p: *const c_char, name: &str) -> Outcome<Option<PathBuf>> {
    if p.is_null() {
        Ok(None)
    } else {
        path(p, name).map(Some)
    }
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Outcome<&'a T> {
    p.as_ref().ok_or_else(|| arg(format!("{name} is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, name: &str) -> Outcome<&'a mut T> {
    p.as_mut().ok_or_else(|| arg(format!("{name} is null")))
}

unsafe fn input<'a, T>(p: *const T, len: usize, name: &str) -> Outcome<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(arg(format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, needed: usize, name: &str) -> Outcome<&'a mut [T]> {
    if len < needed {
        return Err(arg(format!("{name} holds {len} elements, {needed} needed")));
    }
    if needed == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(arg(format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(p, needed))
}

fn into_handle<T>(slot: &mut *mut T, value: T) {
    *slot = Box::into_raw(Box::new(value));
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

fn kind_code(kind: MaskKind) -> i32 {
    match kind {
        MaskKind::Pointcloud => WF_MASK_POINTCLOUD,
        MaskKind::Edit => WF_MASK_EDIT,
        MaskKind::Union => WF_MASK_UNION,
    }
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn wf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn wf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn wf_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

// ---- bundles

#[no_mangle]
pub unsafe extern "C" fn wf_bundle_load(dir: *const c_char, out: *mut *mut WfBundle) -> i32 {
    guard(|| {
        let slot = out_ptr(out, "out")?;
        let bundle = load_bundle(&path(dir, "dir")?)?;
        into_handle(slot, WfBundle(bundle));
        Ok(())
    })
}

/// Builds a bundle from arrays; depth is stored as DPT1.
#[no_mangle]
pub unsafe extern "C" fn wf_bundle_from_arrays(
    n: usize,
    height: u32,
    width: u32,
    frames: *const u8,
    depths: *const f32,
    intrinsics: *const f64,
    out: *mut *mut WfBundle,
) -> i32 {
    guard(|| {
        let slot = out_ptr(out, "out")?;
        let (video, depth, cam) = arrays_in(n, height, width, frames, depths, intrinsics)?;
        into_handle(slot, WfBundle(Bundle::new(video, depth, cam)?));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wf_bundle_store(bundle: *const WfBundle, dir: *const c_char) -> i32 {
    guard(|| {
        store_bundle(&handle(bundle, "bundle")?.0, &path(dir, "dir")?)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wf_bundle_free(bundle: *mut WfBundle) {
    free(bundle)
}

/// Frame count, height and width.
#[no_mangle]
pub unsafe extern "C" fn wf_bundle_shape(
    bundle: *const WfBundle,
    n: *mut usize,
    height: *mut u32,
    width: *mut u32,
) -> i32 {
    guard(|| {
        let b = &handle(bundle, "bundle")?.0;
        *out_ptr(n, "n")? = b.len();
        *out_ptr(height, "height")? = b.camera.height;
        *out_ptr(width, "width")? = b.camera.width;
        Ok(())
    })
}

/// Row-major 3x3 intrinsics into `out[9]`.
#[no_mangle]
pub unsafe extern "C" fn wf_bundle_intrinsics(bundle: *const WfBundle, out: *mut f64) -> i32 {
    guard(|| {
        let c = &handle(bundle, "bundle")?.0.camera;
        let k = output(out, 9, 9, "out")?;
        k.copy_from_slice(&[c.fx, 0.0, c.cx, 0.0, c.fy, c.cy, 0.0, 0.0, 1.0]);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wf_bundle_copy_frames(
    bundle: *const WfBundle,
    out: *mut u8,
    len: usize,
) -> i32 {
    guard(|| {
        let b = &handle(bundle, "bundle")?.0;
        copy_frames(&b.frames, out, len)
    })
}

#[no_mangle]
pub unsafe extern "C" fn wf_bundle_copy_depths(
    bundle: *const WfBundle,
    out: *mut f32,
    len: usize,
) -> i32 {
    guard(|| {
        let b = &handle(bundle, "bundle")?.0;
        let needed = b.depths.iter().map(|d| d.values.len()).sum();
        let dst = output(out, len, needed, "out")?;
        for (chunk, d) in dst.chunks_mut(b.depths[0].values.len()).zip(&b.depths) {
            chunk.copy_from_slice(&d.values);
        }
        Ok(())
    })
}

// ---- trajectories

#[no_mangle]
pub unsafe extern "C" fn wf_trajectory_parse(
    source: *const c_char,
    out: *mut *mut WfTrajectory,
) -> i32 {
    guard(|| {
        let slot = out_ptr(out, "out")?;
        let traj = warpforge::camera::parse_trajectory(text(source, "source")?)?;
        into_handle(slot, WfTrajectory(traj));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wf_trajectory_load(
    file: *const c_char,
    out: *mut *mut WfTrajectory,
) -> i32 {
    guard(|| {
        let slot = out_ptr(out, "out")?;
        let traj = pipeline::read_trajectory(&path(file, "file")?)?;
        into_handle(slot, WfTrajectory(traj));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wf_trajectory_free(traj: *mut WfTrajectory) {
    free(traj)
}

#[no_mangle]
pub unsafe extern "C" fn wf_trajectory_max_view_angle(
    traj: *const WfTrajectory,
    out_deg: *mut f64,
) -> i32 {
    guard(|| {
        *out_ptr(out_deg, "out_deg")? = warpforge::camera::max_view_angle(&handle(traj, "traj")?.0);
        Ok(())
    })
}

/// World-to-camera poses of `traj` applied to `bundle`, `(N, 4, 4)`.
#[no_mangle]
pub unsafe extern "C" fn wf_trajectory_poses(
    traj: *const WfTrajectory,
    bundle: *const WfBundle,
    out: *mut f64,
    len: usize,
) -> i32 {
    guard(|| {
        let b = &handle(bundle, "bundle")?.0;
        let poses = trajectory_poses(&handle(traj, "traj")?.0, &b.depths, b.len())?;
        let dst = output(out, len, poses.len() * 16, "out")?;
        for (chunk, p) in dst.chunks_mut(16).zip(&poses) {
            chunk.copy_from_slice(&p.to_row_major());
        }
        Ok(())
    })
}

// ---- double reprojection

unsafe fn arrays_in(
    n: usize,
    height: u32,
    width: u32,
    frames: *const u8,
    depths: *const f32,
    intrinsics: *const f64,
) -> Outcome<(Vec<Frame>, Vec<DepthFrame>, CameraModel)> {
    let px = (height as usize)
        .checked_mul(width as usize)
        .ok_or_else(|| arg("frame size overflows"))?;
    let total = n
        .checked_mul(px)
        .ok_or_else(|| arg("video size overflows"))?;
    let rgb = input(frames, total * 3, "frames")?;
    let d = input(depths, total, "depths")?;
    let k: &[f64; 9] = input(intrinsics, 9, "intrinsics")?
        .try_into()
        .expect("nine values");
    let cam = CameraModel::from_matrix(k, width, height)?;
    let mut video = Vec::with_capacity(n);
    let mut depth = Vec::with_capacity(n);
    for i in 0..n {
        let pixels = rgb[i * px * 3..(i + 1) * px * 3]
            .chunks_exact(3)
            .map(|c| [c[0], c[1], c[2]])
            .collect();
        video.push(Frame::new(width, height, pixels)?);
        depth.push(DepthFrame::new(
            width,
            height,
            d[i * px..(i + 1) * px].to_vec(),
        )?);
    }
    Ok((video, depth, cam))
}

unsafe fn copy_frames(frames: &[Frame], out: *mut u8, len: usize) -> Outcome<()> {
    let needed = frames.iter().map(|f| f.pixels.len() * 3).sum();
    let dst = output(out, len, needed, "out")?;
    for (px, src) in dst
        .chunks_exact_mut(3)
        .zip(frames.iter().flat_map(|f| &f.pixels))
    {
        px.copy_from_slice(src);
    }
    Ok(())
}

unsafe fn copy_masks(pair: &TrainingPair, out: *mut u8, len: usize) -> Outcome<()> {
    let needed = pair.inpaint_mask.iter().map(|m| m.bits.len()).sum();
    let dst = output(out, len, needed, "out")?;
    for (v, bit) in dst
        .iter_mut()
        .zip(pair.inpaint_mask.iter().flat_map(|m| &m.bits))
    {
        *v = *bit as u8;
    }
    Ok(())
}

/// Double reprojection over arrays. Writes the corrupted video
/// `(N, H, W, 3)` and inpaint masks `(N, H, W)`; same result as the `pair`
/// subcommand for the same inputs.
#[no_mangle]
pub unsafe extern "C" fn wf_double_reproject_arrays(
    n: usize,
    height: u32,
    width: u32,
    frames: *const u8,
    depths: *const f32,
    intrinsics: *const f64,
    poses: *const f64,
    poses_len: usize,
    splat_radius: u8,
    out_corrupted: *mut u8,
    out_masks: *mut u8,
) -> i32 {
    guard(|| {
        if poses_len != n * 16 {
            return Err(Failure::Core(Error::Validation(format!(
                "poses must have shape ({n}, 4, 4), got {poses_len} values"
            ))));
        }
        let (video, depth, cam) = arrays_in(n, height, width, frames, depths, intrinsics)?;
        let poses = input(poses, poses_len, "poses")?
            .chunks_exact(16)
            .map(|m| Pose::from_row_major(m.try_into().expect("16 values")))
            .collect::<Result<Vec<_>, _>>()?;
        let cfg = ReprojectConfig {
            splat_radius,
            ..ReprojectConfig::default()
        };
        let pair = double_reproject(&video, &depth, &cam, &poses, &cfg)?;
        let total = n * height as usize * width as usize;
        copy_frames(&pair.corrupted, out_corrupted, total * 3)?;
        copy_masks(&pair, out_masks, total)
    })
}

// ---- training pairs

#[no_mangle]
pub unsafe extern "C" fn wf_pair_reproject(
    bundle: *const WfBundle,
    traj: *const WfTrajectory,
    splat_radius: u8,
    out: *mut *mut WfTrainingPair,
) -> i32 {
    guard(|| {
        let slot = out_ptr(out, "out")?;
        let b = &handle(bundle, "bundle")?.0;
        let cfg = ReprojectConfig {
            splat_radius,
            ..ReprojectConfig::default()
        };
        let pair = reproject_trajectory(
            &b.frames,
            &b.depths,
            &b.camera,
            &handle(traj, "traj")?.0,
            &cfg,
        )?;
        into_handle(slot, WfTrainingPair(pair));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wf_pair_load(dir: *const c_char, out: *mut *mut WfTrainingPair) -> i32 {
    guard(|| {
        let slot = out_ptr(out, "out")?;
        let pair = load_training_pair(&path(dir, "dir")?)?;
        into_handle(slot, WfTrainingPair(pair));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wf_pair_store(pair: *const WfTrainingPair, dir: *const c_char) -> i32 {
    guard(|| {
        store_training_pair(&handle(pair, "pair")?.0, &path(dir, "dir")?)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wf_pair_free(pair: *mut WfTrainingPair) {
    free(pair)
}

#[no_mangle]
pub unsafe extern "C" fn wf_pair_frame_count(pair: *const WfTrainingPair) -> usize {
    pair.as_ref().map_or(0, |p| p.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn wf_pair_copy_corrupted(
    pair: *const WfTrainingPair,
    out: *mut u8,
    len: usize,
) -> i32 {
    guard(|| copy_frames(&handle(pair, "pair")?.0.corrupted, out, len))
}

#[no_mangle]
pub unsafe extern "C" fn wf_pair_copy_masks(
    pair: *const WfTrainingPair,
    out: *mut u8,
    len: usize,
) -> i32 {
    guard(|| copy_masks(&handle(pair, "pair")?.0, out, len))
}

// ---- composite samples

/// Draws a composite sample from a copy of `pair`.
#[no_mangle]
pub unsafe extern "C" fn wf_sample_composite(
    pair: *const WfTrainingPair,
    seed: u64,
    out: *mut *mut WfCompositeSample,
) -> i32 {
    guard(|| {
        let slot = out_ptr(out, "out")?;
        let p = handle(pair, "pair")?.0.clone();
        into_handle(
            slot,
            WfCompositeSample(sample_composite(p, &EditMaskConfig::default(), seed)?),
        );
        Ok(())
    })
}

/// One of the `WF_MASK_*` codes, or -1 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn wf_sample_kind(sample: *const WfCompositeSample) -> i32 {
    sample.as_ref().map_or(-1, |s| kind_code(s.0.kind))
}

#[no_mangle]
pub unsafe extern "C" fn wf_sample_copy_mask(
    sample: *const WfCompositeSample,
    out: *mut u8,
    len: usize,
) -> i32 {
    guard(|| {
        let s = &handle(sample, "sample")?.0;
        let needed = s.mask.frames.iter().map(|m| m.bits.len()).sum();
        let dst = output(out, len, needed, "out")?;
        for (v, bit) in dst
            .iter_mut()
            .zip(s.mask.frames.iter().flat_map(|m| &m.bits))
        {
            *v = *bit as u8;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wf_sample_store(
    sample: *const WfCompositeSample,
    dir: *const c_char,
) -> i32 {
    guard(|| {
        store_composite_sample(&handle(sample, "sample")?.0, &path(dir, "dir")?)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wf_sample_free(sample: *mut WfCompositeSample) {
    free(sample)
}

// ---- path-based entry points, one per CLI subcommand

#[no_mangle]
pub unsafe extern "C" fn wf_run_render(
    bundle_dir: *const c_char,
    traj_file: *const c_char,
    splat_radius: u8,
    out_dir: *const c_char,
) -> i32 {
    guard(|| {
        pipeline::render(
            &path(bundle_dir, "bundle_dir")?,
            &path(traj_file, "traj_file")?,
            splat_radius,
            &path(out_dir, "out_dir")?,
        )?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wf_run_pair(
    bundle_dir: *const c_char,
    traj_file: *const c_char,
    out_dir: *const c_char,
) -> i32 {
    guard(|| {
        pipeline::pair(
            &path(bundle_dir, "bundle_dir")?,
            &path(traj_file, "traj_file")?,
            &path(out_dir, "out_dir")?,
        )?;
        Ok(())
    })
}

/// `mode` is `pointcloud`, `edit`, `union` or `sample`.
#[no_mangle]
pub unsafe extern "C" fn wf_run_masks(
    pair_dir: *const c_char,
    mode: *const c_char,
    seed: u64,
    out_dir: *const c_char,
) -> i32 {
    guard(|| {
        let mode = text(mode, "mode")?.parse()?;
        pipeline::masks(
            &path(pair_dir, "pair_dir")?,
            mode,
            seed,
            &path(out_dir, "out_dir")?,
        )?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wf_run_plan(
    theta_min: f64,
    delta: f64,
    theta_target: f64,
    out_file: *const c_char,
) -> i32 {
    guard(|| {
        pipeline::plan(theta_min, delta, theta_target, &path(out_file, "out_file")?)?;
        Ok(())
    })
}

/// Emits stage `stage` into `out_root/stage_<stage>`. `bundle_dir` may be
/// null for stages after 0.
#[no_mangle]
pub unsafe extern "C" fn wf_run_stage(
    plan_file: *const c_char,
    stage: usize,
    bundle_dir: *const c_char,
    k_trajectories: usize,
    seed: u64,
    out_root: *const c_char,
) -> i32 {
    guard(|| {
        let bundle = optional_path(bundle_dir, "bundle_dir")?;
        pipeline::stage(
            &path(plan_file, "plan_file")?,
            stage,
            bundle.as_deref(),
            k_trajectories,
            seed,
            &path(out_root, "out_root")?,
        )?;
        Ok(())
    })
}

/// `adapter_ref` may be null when the state is already TRAINED.
#[no_mangle]
pub unsafe extern "C" fn wf_run_ingest(
    state_file: *const c_char,
    videos_dir: *const c_char,
    adapter_ref: *const c_char,
) -> i32 {
    guard(|| {
        let adapter = if adapter_ref.is_null() {
            None
        } else {
            Some(text(adapter_ref, "adapter_ref")?)
        };
        pipeline::ingest(
            &path(state_file, "state_file")?,
            &path(videos_dir, "videos_dir")?,
            adapter,
        )?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wf_run_pack(
    generated_dir: *const c_char,
    mask_dir: *const c_char,
    hole_dir: *const c_char,
    k: usize,
    out_dir: *const c_char,
) -> i32 {
    guard(|| {
        pipeline::pack(
            &path(generated_dir, "generated_dir")?,
            &path(mask_dir, "mask_dir")?,
            &path(hole_dir, "hole_dir")?,
            k,
            &path(out_dir, "out_dir")?,
        )?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wf_validate(target: *const c_char) -> i32 {
    guard(|| {
        pipeline::validate(Path::new(text(target, "path")?))?;
        Ok(())
    })
}
