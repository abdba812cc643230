//! Seeded procedural scenes for tests, benchmarks and demos.

use nalgebra::{Rotation3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::camera::{keyframe_pose, CameraModel, KeyframeParams, Pose};
use crate::geometry::{DepthFrame, Frame};

#[derive(Debug, Clone)]
pub struct Scene {
    pub frame: Frame,
    pub depth: DepthFrame,
    pub camera: CameraModel,
}

fn default_camera(width: u32, height: u32) -> CameraModel {
    let f = width.max(height) as f64;
    CameraModel::new(
        f,
        f,
        (width as f64 - 1.0) / 2.0,
        (height as f64 - 1.0) / 2.0,
        width,
        height,
    )
    .expect("synthetic camera is valid")
}

/// Slanted background wall with a few foreground boxes, random colors and
/// roughly 10% invalid depth.
pub fn random_scene(seed: u64, width: u32, height: u32) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (width as usize, height as usize);
    let base = rng.gen_range(6.0..10.0);
    let (sx, sy) = (rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05));
    let mut depth: Vec<f32> = (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            (base + sx * x + sy * y) as f32
        })
        .collect();
    let boxes = rng.gen_range(1..=3);
    for _ in 0..boxes {
        let bw = rng.gen_range(1..=w.div_ceil(2));
        let bh = rng.gen_range(1..=h.div_ceil(2));
        let x0 = rng.gen_range(0..=w - bw);
        let y0 = rng.gen_range(0..=h - bh);
        let d: f32 = rng.gen_range(2.0..5.0);
        for y in y0..y0 + bh {
            for x in x0..x0 + bw {
                depth[y * w + x] = d;
            }
        }
    }
    for d in depth.iter_mut() {
        if rng.gen_bool(0.1) {
            *d = 0.0;
        }
    }
    let pixels = (0..w * h).map(|_| rng.gen::<[u8; 3]>()).collect();
    Scene {
        frame: Frame::new(width, height, pixels).expect("dims match"),
        depth: DepthFrame::new(width, height, depth).expect("dims match"),
        camera: default_camera(width, height),
    }
}

/// Fronto-parallel plane at `depth` filling the view, with a distinct color
/// per column/row so shifts are observable.
pub fn plane_scene(width: u32, height: u32, focal: f64, depth: f32) -> Scene {
    let pixels = (0..width * height)
        .map(|i| {
            let (x, y) = (i % width, i / width);
            [
                (x * 7 % 256) as u8,
                (y * 13 % 256) as u8,
                ((x + y) % 256) as u8,
            ]
        })
        .collect();
    let camera = CameraModel::new(
        focal,
        focal,
        (width as f64 - 1.0) / 2.0,
        (height as f64 - 1.0) / 2.0,
        width,
        height,
    )
    .expect("plane camera is valid");
    Scene {
        frame: Frame::new(width, height, pixels).expect("dims match"),
        depth: DepthFrame::new(width, height, vec![depth; (width * height) as usize])
            .expect("dims match"),
        camera,
    }
}

/// Camera moved right by `t` scene units.
pub fn truck_pose(t: f64) -> Pose {
    keyframe_pose(
        &KeyframeParams {
            truck: t,
            ..Default::default()
        },
        1.0,
    )
}

/// Camera moved up by `t` scene units.
pub fn pedestal_pose(t: f64) -> Pose {
    keyframe_pose(
        &KeyframeParams {
            pedestal: t,
            ..Default::default()
        },
        1.0,
    )
}

/// Uniformly random axis, angle in `[0, max_angle_deg]`, translation in the
/// cube `[-max_translation, max_translation]³`.
pub fn random_pose(rng: &mut impl Rng, max_angle_deg: f64, max_translation: f64) -> Pose {
    let axis = loop {
        let v = Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n: f64 = v.norm();
        if n > 1e-3 && n <= 1.0 {
            break Unit::new_normalize(v);
        }
    };
    let angle = rng.gen_range(0.0..=max_angle_deg).to_radians();
    let t = if max_translation > 0.0 {
        Vector3::new(
            rng.gen_range(-max_translation..max_translation),
            rng.gen_range(-max_translation..max_translation),
            rng.gen_range(-max_translation..max_translation),
        )
    } else {
        Vector3::zeros()
    };
    Pose {
        rotation: Rotation3::from_axis_angle(&axis, angle).into_inner(),
        translation: t,
    }
}
