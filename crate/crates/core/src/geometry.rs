//! Unprojection of frames into colored point clouds and forward rendering of
//! those clouds into arbitrary views with a z-buffered square splat.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{CameraModel, Pose};
use crate::error::{Error, Result};

/// Points at or behind this camera-space depth are culled.
pub const Z_NEAR: f64 = 1e-4;
/// Depths within this distance of the nearest depth at a pixel tie; the
/// lowest source pixel (row-major) wins a tie.
pub const Z_TIE_EPS: f64 = 1e-6;
pub const DEFAULT_SPLAT_RADIUS: u8 = 1;
pub const MAX_SPLAT_RADIUS: u8 = 2;

pub type Rgb = [u8; 3];

/// 8-bit RGB image, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<Rgb>,
}

impl Frame {
    pub fn new(width: u32, height: u32, pixels: Vec<Rgb>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DimensionMismatch(
                "frame dimensions must be positive".into(),
            ));
        }
        check_len(width, height, pixels.len(), "frame")?;
        Ok(Frame {
            width,
            height,
            pixels,
        })
    }

    pub fn black(width: u32, height: u32) -> Self {
        Frame {
            width,
            height,
            pixels: vec![[0; 3]; width as usize * height as usize],
        }
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn get(&self, x: u32, y: u32) -> Rgb {
        self.pixels[(y * self.width + x) as usize]
    }
}

/// Per-pixel camera-space depth. A pixel is valid when its depth is finite
/// and positive; invalid pixels are stored as 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthFrame {
    pub width: u32,
    pub height: u32,
    pub values: Vec<f32>,
}

impl DepthFrame {
    /// Non-finite and non-positive depths become the invalid marker 0.
    pub fn new(width: u32, height: u32, mut values: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DimensionMismatch(
                "depth dimensions must be positive".into(),
            ));
        }
        check_len(width, height, values.len(), "depth")?;
        for v in &mut values {
            if !is_valid_depth(*v) {
                *v = 0.0;
            }
        }
        Ok(DepthFrame {
            width,
            height,
            values,
        })
    }

    pub fn invalid(width: u32, height: u32) -> Self {
        DepthFrame {
            width,
            height,
            values: vec![0.0; width as usize * height as usize],
        }
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn is_valid(&self, index: usize) -> bool {
        is_valid_depth(self.values[index])
    }

    pub fn validity(&self) -> Mask {
        Mask {
            width: self.width,
            height: self.height,
            bits: self.values.iter().map(|&v| is_valid_depth(v)).collect(),
        }
    }
}

#[inline]
pub fn is_valid_depth(d: f32) -> bool {
    d.is_finite() && d > 0.0
}

/// Binary per-pixel mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mask {
    pub width: u32,
    pub height: u32,
    pub bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        check_len(width, height, bits.len(), "mask")?;
        Ok(Mask {
            width,
            height,
            bits,
        })
    }

    pub fn zeros(width: u32, height: u32) -> Self {
        Mask {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    pub fn ones(width: u32, height: u32) -> Self {
        Mask {
            width,
            height,
            bits: vec![true; width as usize * height as usize],
        }
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[(y * self.width + x) as usize]
    }

    pub fn count_ones(&self) -> u64 {
        self.bits.iter().filter(|&&b| b).count() as u64
    }

    pub fn not(&self) -> Mask {
        Mask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn zip_with(&self, other: &Mask, f: impl Fn(bool, bool) -> bool) -> Result<Mask> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch(format!(
                "mask {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(Mask {
            width: self.width,
            height: self.height,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Square (Chebyshev) dilation by `radius` pixels.
    pub fn dilate(&self, radius: u32) -> Mask {
        if radius == 0 {
            return self.clone();
        }
        let (w, h) = (self.width as i64, self.height as i64);
        let r = radius as i64;
        let mut out = vec![false; self.bits.len()];
        for y in 0..h {
            for x in 0..w {
                if !self.bits[(y * w + x) as usize] {
                    continue;
                }
                for yy in (y - r).max(0)..=(y + r).min(h - 1) {
                    for xx in (x - r).max(0)..=(x + r).min(w - 1) {
                        out[(yy * w + xx) as usize] = true;
                    }
                }
            }
        }
        Mask {
            width: self.width,
            height: self.height,
            bits: out,
        }
    }
}

fn check_len(width: u32, height: u32, len: usize, what: &str) -> Result<()> {
    let expected = width as usize * height as usize;
    if len != expected {
        return Err(Error::DimensionMismatch(format!(
            "{what} buffer has {len} entries, {width}x{height} needs {expected}"
        )));
    }
    Ok(())
}

/// Colored points in the source camera frame, with the pixel each point was
/// lifted from. `source_pixel` is `[u, v]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<[f64; 3]>,
    pub colors: Vec<Rgb>,
    pub source_pixel: Vec<[u32; 2]>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn push(&mut self, point: [f64; 3], color: Rgb, source: [u32; 2]) {
        self.points.push(point);
        self.colors.push(color);
        self.source_pixel.push(source);
    }

    /// Row-major ordering key of a point's source pixel.
    #[inline]
    fn source_key(&self, i: usize) -> u64 {
        let [u, v] = self.source_pixel[i];
        ((v as u64) << 32) | u as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderResult {
    pub image: Frame,
    pub depth: DepthFrame,
    /// `true` where at least one point landed.
    pub visibility: Mask,
}

impl RenderResult {
    fn empty(width: u32, height: u32) -> Self {
        RenderResult {
            image: Frame::black(width, height),
            depth: DepthFrame::invalid(width, height),
            visibility: Mask::zeros(width, height),
        }
    }
}

/// Lifts every valid-depth pixel to a camera-space point:
/// `x = (u - cx) / fx * d`, `y = (v - cy) / fy * d`, `z = d`.
pub fn unproject(frame: &Frame, depth: &DepthFrame, cam: &CameraModel) -> Result<PointCloud> {
    let dims = (cam.width, cam.height);
    if frame.dims() != dims || depth.dims() != dims {
        return Err(Error::DimensionMismatch(format!(
            "frame {:?}, depth {:?}, camera {:?}",
            frame.dims(),
            depth.dims(),
            dims
        )));
    }
    let mut cloud = PointCloud::default();
    let width = cam.width as usize;
    for (i, (&d, &color)) in depth.values.iter().zip(&frame.pixels).enumerate() {
        if !is_valid_depth(d) {
            continue;
        }
        let (u, v) = ((i % width) as u32, (i / width) as u32);
        let d = d as f64;
        let x = (u as f64 - cam.cx) / cam.fx * d;
        let y = (v as f64 - cam.cy) / cam.fy * d;
        cloud.push([x, y, d], color, [u, v]);
    }
    Ok(cloud)
}

/// Transforms a point into the target camera and rounds its projection to
/// the nearest pixel center. Returns `(x, y, z)` or `None` when culled.
#[inline]
fn project_point(cam: &CameraModel, pose: &Pose, p: &[f64; 3]) -> Option<(i64, i64, f64)> {
    let r = &pose.rotation;
    let t = &pose.translation;
    let x = r[(0, 0)] * p[0] + r[(0, 1)] * p[1] + r[(0, 2)] * p[2] + t[0];
    let y = r[(1, 0)] * p[0] + r[(1, 1)] * p[1] + r[(1, 2)] * p[2] + t[1];
    let z = r[(2, 0)] * p[0] + r[(2, 1)] * p[1] + r[(2, 2)] * p[2] + t[2];
    if z.is_nan() || z <= Z_NEAR {
        return None;
    }
    let u = (cam.fx * x / z + cam.cx + 0.5).floor();
    let v = (cam.fy * y / z + cam.cy + 0.5).floor();
    // keeps the i64 conversion well-defined; anything this far out is off-screen
    const LIMIT: f64 = 1e9;
    if !(u.abs() < LIMIT && v.abs() < LIMIT) {
        return None;
    }
    Some((u as i64, v as i64, z))
}

/// Forward-renders a point cloud into the view `pose` of `cam`.
///
/// Each point covers the `(2r+1)²` pixel square around its projection. A
/// pixel is claimed by the points at the smallest Chebyshev distance (ring)
/// from their own projection, so a direct hit always beats a neighbor's
/// splat and the splat only fills pinholes. Among those, the nearest depth
/// wins, with ties inside [`Z_TIE_EPS`] going to the lowest source pixel.
/// The rendered depth is the nearest depth at the winning ring. With `r = 0`
/// this is a plain nearest-point z-buffer.
///
/// The result does not depend on point order.
pub fn project_render(
    pc: &PointCloud,
    cam: &CameraModel,
    pose: &Pose,
    splat_radius: u8,
) -> Result<RenderResult> {
    if splat_radius > MAX_SPLAT_RADIUS {
        return Err(Error::Validation(format!(
            "splat radius {splat_radius} exceeds {MAX_SPLAT_RADIUS}"
        )));
    }
    let (w, h) = (cam.width as i64, cam.height as i64);
    let r = splat_radius as i64;
    let n_px = cam.pixel_count();

    let projected: Vec<Option<(i64, i64, f64)>> = pc
        .points
        .iter()
        .map(|p| {
            project_point(cam, pose, p)
                .filter(|&(x, y, _)| x >= -r && x < w + r && y >= -r && y < h + r)
        })
        .collect();

    // pass 1: best (ring, depth) per pixel
    let mut ring_buf = vec![u8::MAX; n_px];
    let mut zbuf = vec![f64::INFINITY; n_px];
    for &(x, y, z) in projected.iter().flatten() {
        for yy in (y - r).max(0)..=(y + r).min(h - 1) {
            let row = yy * w;
            let dy = (yy - y).abs();
            for xx in (x - r).max(0)..=(x + r).min(w - 1) {
                let ring = (xx - x).abs().max(dy) as u8;
                let px = (row + xx) as usize;
                if ring < ring_buf[px] || (ring == ring_buf[px] && z < zbuf[px]) {
                    ring_buf[px] = ring;
                    zbuf[px] = z;
                }
            }
        }
    }

    // pass 2: deterministic tie-break among near-equal depths
    const NONE: usize = usize::MAX;
    let mut winner = vec![NONE; n_px];
    for (i, proj) in projected.iter().enumerate() {
        let Some((x, y, z)) = *proj else { continue };
        let key = pc.source_key(i);
        for yy in (y - r).max(0)..=(y + r).min(h - 1) {
            let row = yy * w;
            let dy = (yy - y).abs();
            for xx in (x - r).max(0)..=(x + r).min(w - 1) {
                let ring = (xx - x).abs().max(dy) as u8;
                let px = (row + xx) as usize;
                if ring != ring_buf[px] || z > zbuf[px] + Z_TIE_EPS {
                    continue;
                }
                let cur = winner[px];
                if cur == NONE || (key, i) < (pc.source_key(cur), cur) {
                    winner[px] = i;
                }
            }
        }
    }

    let mut out = RenderResult::empty(cam.width, cam.height);
    for (px, &i) in winner.iter().enumerate() {
        if i != NONE {
            out.image.pixels[px] = pc.colors[i];
            out.depth.values[px] = zbuf[px] as f32;
            out.visibility.bits[px] = true;
        }
    }
    Ok(out)
}

/// Reference renderer for [`project_render`] with `splat_radius = 0`: every
/// pixel scans every point, first for the nearest depth and then for the
/// tie-break winner. Quadratic; only meant for checking the fast path.
pub fn brute_force_render(pc: &PointCloud, cam: &CameraModel, pose: &Pose) -> RenderResult {
    let mut landing: Vec<Option<(i64, i64, f64)>> = Vec::with_capacity(pc.len());
    for p in &pc.points {
        let r = &pose.rotation;
        let t = &pose.translation;
        let xc = r[(0, 0)] * p[0] + r[(0, 1)] * p[1] + r[(0, 2)] * p[2] + t[0];
        let yc = r[(1, 0)] * p[0] + r[(1, 1)] * p[1] + r[(1, 2)] * p[2] + t[1];
        let zc = r[(2, 0)] * p[0] + r[(2, 1)] * p[1] + r[(2, 2)] * p[2] + t[2];
        if zc <= Z_NEAR || zc.is_nan() {
            landing.push(None);
            continue;
        }
        let u = (cam.fx * xc / zc + cam.cx + 0.5).floor();
        let v = (cam.fy * yc / zc + cam.cy + 0.5).floor();
        if u >= 0.0 && v >= 0.0 && u < cam.width as f64 && v < cam.height as f64 {
            landing.push(Some((u as i64, v as i64, zc)));
        } else {
            landing.push(None);
        }
    }

    let mut out = RenderResult::empty(cam.width, cam.height);
    for py in 0..cam.height as i64 {
        for px in 0..cam.width as i64 {
            let mut nearest = f64::INFINITY;
            for l in landing.iter().flatten() {
                if l.0 == px && l.1 == py && l.2 < nearest {
                    nearest = l.2;
                }
            }
            if nearest == f64::INFINITY {
                continue;
            }
            let mut best: Option<(u32, u32, usize)> = None;
            for (i, l) in landing.iter().enumerate() {
                let Some((lx, ly, lz)) = *l else { continue };
                if lx != px || ly != py || lz > nearest + Z_TIE_EPS {
                    continue;
                }
                let [su, sv] = pc.source_pixel[i];
                let cand = (sv, su, i);
                if best.is_none_or(|b| cand < b) {
                    best = Some(cand);
                }
            }
            let (_, _, i) = best.expect("a point reached the nearest depth");
            let idx = (py * cam.width as i64 + px) as usize;
            out.image.pixels[idx] = pc.colors[i];
            out.depth.values[idx] = nearest as f32;
            out.visibility.bits[idx] = true;
        }
    }
    out
}

/// Renders every frame's own point cloud into its target pose. Frames are
/// processed in parallel; output order follows input order.
pub fn render_trajectory(
    video: &[Frame],
    depths: &[DepthFrame],
    cam: &CameraModel,
    poses: &[Pose],
    splat_radius: u8,
) -> Result<Vec<RenderResult>> {
    check_sequence_lengths(video.len(), depths.len(), poses.len())?;
    video
        .par_iter()
        .zip(depths.par_iter())
        .zip(poses.par_iter())
        .map(|((frame, depth), pose)| {
            let cloud = unproject(frame, depth, cam)?;
            project_render(&cloud, cam, pose, splat_radius)
        })
        .collect()
}

pub(crate) fn check_sequence_lengths(frames: usize, depths: usize, poses: usize) -> Result<()> {
    if frames == 0 {
        return Err(Error::LengthMismatch {
            expected: 1,
            actual: 0,
        });
    }
    for actual in [depths, poses] {
        if actual != frames {
            return Err(Error::LengthMismatch {
                expected: frames,
                actual,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use nalgebra::Vector3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cam4() -> CameraModel {
        CameraModel::new(2.0, 2.0, 2.0, 2.0, 4, 4).unwrap()
    }

    #[test]
    fn principal_ray() {
        let cam = CameraModel::new(3.0, 3.0, 1.0, 2.0, 4, 4).unwrap();
        let frame = Frame::black(4, 4);
        let mut depth = DepthFrame::invalid(4, 4);
        depth.values[2 * 4 + 1] = 5.0;
        let pc = unproject(&frame, &depth, &cam).unwrap();
        assert_eq!(pc.points, vec![[0.0, 0.0, 5.0]]);
        assert_eq!(pc.source_pixel, vec![[1, 2]]);
    }

    #[test]
    fn pinhole_arithmetic() {
        let mut frame = Frame::black(4, 4);
        frame.pixels[4 + 3] = [9, 8, 7];
        let mut depth = DepthFrame::invalid(4, 4);
        depth.values[4 + 3] = 4.0;
        let pc = unproject(&frame, &depth, &cam4()).unwrap();
        assert_eq!(pc.points, vec![[2.0, -2.0, 4.0]]);
        assert_eq!(pc.colors, vec![[9, 8, 7]]);
    }

    #[test]
    fn all_invalid_depth_gives_empty_cloud() {
        let pc = unproject(&Frame::black(4, 4), &DepthFrame::invalid(4, 4), &cam4()).unwrap();
        assert!(pc.is_empty());
        let r = project_render(&pc, &cam4(), &Pose::identity(), 1).unwrap();
        assert_eq!(r.visibility.count_ones(), 0);
    }

    #[test]
    fn depth_sanitizes_invalid_values() {
        let d = DepthFrame::new(2, 2, vec![1.0, -2.0, f32::NAN, f32::INFINITY]).unwrap();
        assert_eq!(d.values, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(d.validity().count_ones(), 1);
    }

    #[test]
    fn dimension_mismatch() {
        let err = unproject(&Frame::black(4, 3), &DepthFrame::invalid(4, 4), &cam4()).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
        assert!(Frame::new(2, 2, vec![[0; 3]; 3]).is_err());
    }

    #[test]
    fn nearest_point_wins() {
        let cam = cam4();
        let mut pc = PointCloud::default();
        pc.push([0.0, 0.0, 3.0], [30, 0, 0], [0, 0]);
        pc.push([0.0, 0.0, 2.0], [20, 0, 0], [1, 0]);
        for r in 0..=2 {
            let out = project_render(&pc, &cam, &Pose::identity(), r).unwrap();
            assert_eq!(out.image.get(2, 2), [20, 0, 0]);
            assert_eq!(out.depth.values[2 * 4 + 2], 2.0);
        }
        assert_eq!(
            brute_force_render(&pc, &cam, &Pose::identity())
                .image
                .get(2, 2),
            [20, 0, 0]
        );
    }

    #[test]
    fn ties_go_to_lowest_source_pixel() {
        let cam = cam4();
        let mut pc = PointCloud::default();
        pc.push([0.0, 0.0, 2.0 + 5e-7], [1, 0, 0], [3, 1]);
        pc.push([0.0, 0.0, 2.0], [2, 0, 0], [0, 2]);
        pc.push([0.0, 0.0, 2.0 + 2e-7], [3, 0, 0], [2, 1]);
        let fast = project_render(&pc, &cam, &Pose::identity(), 0).unwrap();
        assert_eq!(fast.image.get(2, 2), [3, 0, 0]);
        assert_eq!(fast.depth.values[10], 2.0);
        assert_eq!(fast, brute_force_render(&pc, &cam, &Pose::identity()));
        // reversed insertion order does not matter
        let mut rev = PointCloud::default();
        for i in (0..pc.len()).rev() {
            rev.push(pc.points[i], pc.colors[i], pc.source_pixel[i]);
        }
        assert_eq!(
            project_render(&rev, &cam, &Pose::identity(), 0).unwrap(),
            fast
        );
    }

    #[test]
    fn single_point_lands_on_principal_pixel() {
        let mut pc = PointCloud::default();
        pc.push([0.0, 0.0, 1.0], [5, 5, 5], [0, 0]);
        let out = brute_force_render(&pc, &cam4(), &Pose::identity());
        assert_eq!(out.visibility.count_ones(), 1);
        assert!(out.visibility.get(2, 2));
        let empty = brute_force_render(&PointCloud::default(), &cam4(), &Pose::identity());
        assert_eq!(empty.visibility.count_ones(), 0);
    }

    #[test]
    fn culls_points_behind_camera() {
        let mut pc = PointCloud::default();
        pc.push([0.0, 0.0, 1.0], [5, 5, 5], [0, 0]);
        let behind = Pose::from_translation(Vector3::new(0.0, 0.0, -1.0));
        let out = project_render(&pc, &cam4(), &behind, 0).unwrap();
        assert_eq!(out.visibility.count_ones(), 0);
        let near = Pose::from_translation(Vector3::new(0.0, 0.0, -1.0 + 0.5e-4));
        assert_eq!(
            project_render(&pc, &cam4(), &near, 0)
                .unwrap()
                .visibility
                .count_ones(),
            0
        );
    }

    #[test]
    fn splat_fills_pinholes_without_overriding_hits() {
        let cam = cam4();
        let mut pc = PointCloud::default();
        // far point hits (2,2) directly; a near point hits (1,2)
        pc.push([0.0, 0.0, 5.0], [50, 0, 0], [2, 2]);
        pc.push([-0.5, 0.0, 1.0], [10, 0, 0], [1, 2]);
        let out = project_render(&pc, &cam, &Pose::identity(), 1).unwrap();
        assert_eq!(out.image.get(2, 2), [50, 0, 0]);
        assert_eq!(out.image.get(1, 2), [10, 0, 0]);
        // (0,1) is only reached by the near point's splat
        assert_eq!(out.image.get(0, 1), [10, 0, 0]);
        assert_eq!(out.depth.values[4], 1.0);
        // (3,3) is only reached by the far point's splat
        assert_eq!(out.image.get(3, 3), [50, 0, 0]);
        assert_eq!(out.visibility.count_ones(), 12);
    }

    #[test]
    fn rejects_large_splat() {
        assert!(project_render(&PointCloud::default(), &cam4(), &Pose::identity(), 3).is_err());
    }

    #[test]
    fn identity_round_trip_exact() {
        for seed in 0..20 {
            let scene = synth::random_scene(seed, 17, 11);
            let pc = unproject(&scene.frame, &scene.depth, &scene.camera).unwrap();
            for r in 0..=2 {
                let out = project_render(&pc, &scene.camera, &Pose::identity(), r).unwrap();
                let valid = scene.depth.validity();
                if r == 0 {
                    assert_eq!(out.visibility, valid);
                }
                for i in 0..valid.bits.len() {
                    if valid.bits[i] {
                        assert_eq!(out.image.pixels[i], scene.frame.pixels[i]);
                        assert_eq!(out.depth.values[i], scene.depth.values[i]);
                    }
                }
            }
        }
    }

    #[test]
    fn render_invariants_on_random_scenes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for seed in 0..30 {
            let scene = synth::random_scene(seed, 24, 16);
            let pose = synth::random_pose(&mut rng, 15.0, 0.5);
            let pc = unproject(&scene.frame, &scene.depth, &scene.camera).unwrap();
            let r = rng.gen_range(0..=2u8);
            let out = project_render(&pc, &scene.camera, &pose, r).unwrap();
            for i in 0..out.visibility.bits.len() {
                assert_eq!(out.visibility.bits[i], out.depth.is_valid(i));
                if !out.visibility.bits[i] {
                    assert_eq!(out.image.pixels[i], [0, 0, 0]);
                }
            }
            if r == 0 {
                // rendered depth is the minimum over all points landing on the pixel
                let mut min_z = vec![f64::INFINITY; out.depth.values.len()];
                for p in &pc.points {
                    if let Some((x, y, z)) = project_point(&scene.camera, &pose, p) {
                        if (0..24).contains(&x) && (0..16).contains(&y) {
                            let k = (y * 24 + x) as usize;
                            min_z[k] = min_z[k].min(z);
                        }
                    }
                }
                for (k, &z) in min_z.iter().enumerate() {
                    if z.is_finite() {
                        assert_eq!(out.depth.values[k], z as f32);
                    } else {
                        assert!(!out.visibility.bits[k]);
                    }
                }
                assert_eq!(out, brute_force_render(&pc, &scene.camera, &pose));
            }
        }
    }

    #[test]
    fn truck_shifts_plane_left() {
        let scene = synth::plane_scene(32, 24, 8.0, 4.0);
        let pose = synth::truck_pose(1.0);
        let pc = unproject(&scene.frame, &scene.depth, &scene.camera).unwrap();
        let out = project_render(&pc, &scene.camera, &pose, 0).unwrap();
        assert_eq!(out, brute_force_render(&pc, &scene.camera, &pose));
        for y in 0..24 {
            for x in 0..32 {
                if x < 30 {
                    assert!(out.visibility.get(x, y));
                    assert_eq!(out.image.get(x, y), scene.frame.get(x + 2, y));
                } else {
                    assert!(!out.visibility.get(x, y));
                }
            }
        }
    }

    #[test]
    fn trajectory_lengths() {
        let scene = synth::random_scene(3, 8, 8);
        let frames = vec![scene.frame.clone(); 3];
        let depths = vec![scene.depth.clone(); 3];
        let poses = vec![Pose::identity(); 3];
        let out = render_trajectory(&frames, &depths, &scene.camera, &poses, 0).unwrap();
        assert_eq!(out.len(), 3);
        let one = render_trajectory(&frames[..1], &depths[..1], &scene.camera, &poses[..1], 1);
        assert_eq!(one.unwrap().len(), 1);
        let err = render_trajectory(&frames, &depths[..2], &scene.camera, &poses, 0).unwrap_err();
        assert!(matches!(
            err,
            Error::LengthMismatch {
                expected: 3,
                actual: 2
            }
        ));
        assert!(render_trajectory(&[], &[], &scene.camera, &[], 0).is_err());
    }

    #[test]
    fn mask_dilation() {
        let mut m = Mask::zeros(5, 5);
        m.bits[12] = true;
        assert_eq!(m.dilate(1).count_ones(), 9);
        assert_eq!(m.dilate(0), m);
        assert_eq!(m.dilate(3).count_ones(), 25);
    }
}
