use std::fs;
use std::path::Path;

use warpforge::camera::{InterpMode, Keyframe, KeyframeParams, Pivot, Trajectory};
use warpforge::geometry::Mask;
use warpforge::io::codec::{read_json_value, DPT_MAGIC};
use warpforge::io::*;
use warpforge::maskgen::{sample_composite, EditMaskConfig, MaskKind, MaskVideo};
use warpforge::packing::build_packed_sequence;
use warpforge::reprojection::{reproject_trajectory, ReprojectConfig, TrainingPair};
use warpforge::synth::random_scene;
use warpforge::{Error, ErrorClass};

fn video(seed: u64, n: usize, w: u32, h: u32) -> Bundle {
    let scenes: Vec<_> = (0..n as u64)
        .map(|i| random_scene(seed * 1000 + i, w, h))
        .collect();
    let camera = scenes[0].camera;
    let (frames, depths) = scenes.into_iter().map(|s| (s.frame, s.depth)).unzip();
    Bundle::new(frames, depths, camera).unwrap()
}

fn yaw_traj(n: u32, yaw: f64) -> Trajectory {
    let mut kf = vec![Keyframe {
        frame: 0,
        params: KeyframeParams::default(),
    }];
    kf.push(Keyframe {
        frame: n - 1,
        params: KeyframeParams {
            yaw_deg: yaw,
            truck: 0.2,
            ..Default::default()
        },
    });
    Trajectory::new("yaw", n, kf, Pivot::Auto, InterpMode::Slerp).unwrap()
}

fn pair(seed: u64, n: usize) -> TrainingPair {
    let b = video(seed, n, 24, 16);
    reproject_trajectory(
        &b.frames,
        &b.depths,
        &b.camera,
        &yaw_traj(n as u32, 20.0),
        &ReprojectConfig::default(),
    )
    .unwrap()
}

fn file_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn bundle_round_trip_dpt_and_png16() {
    let tmp = tempfile::tempdir().unwrap();
    let mut b = video(1, 5, 20, 12);
    let masks = (0..5u32)
        .map(|i| Mask::new(20, 12, (0..240).map(|p| (p + i) % 3 == 0).collect()).unwrap())
        .collect();
    b.masks = Some(MaskVideo::new(masks, MaskKind::Pointcloud).unwrap());
    let manifest = store_bundle(&b, &tmp.path().join("a")).unwrap();
    assert_eq!(manifest.file_name().unwrap(), BUNDLE_MANIFEST);
    assert_eq!(load_bundle(&tmp.path().join("a")).unwrap(), b);

    // 16-bit depth quantizes; values on the grid survive exactly
    let mut q = video(2, 3, 10, 8);
    for d in &mut q.depths {
        for v in &mut d.values {
            if *v > 0.0 {
                *v = ((*v as f64 / 0.001).round() * 0.001) as f32;
            }
        }
    }
    q.depth_encoding = DepthEncoding::Png16 {
        scale: 0.001,
        offset: 0.0,
    };
    store_bundle(&q, &tmp.path().join("q")).unwrap();
    let back = load_bundle(&tmp.path().join("q")).unwrap();
    for (x, y) in back.depths.iter().zip(&q.depths) {
        for (a, b) in x.values.iter().zip(&y.values) {
            assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
        }
    }
}

#[test]
fn eighty_one_frame_bundle_and_count_mismatch() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("v");
    let b = video(3, 81, 8, 8);
    store_bundle(&b, &dir).unwrap();
    assert_eq!(load_bundle(&dir).unwrap().len(), 81);

    fs::remove_file(dir.join("frames").join(frame_name(80))).unwrap();
    assert!(matches!(load_bundle(&dir), Err(Error::ManifestMismatch(_))));
}

#[test]
fn missing_manifest_and_bad_magic() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(matches!(
        load_bundle(&tmp.path().join("none")),
        Err(Error::MissingFile(_))
    ));

    let dir = tmp.path().join("v");
    store_bundle(&video(4, 2, 6, 5), &dir).unwrap();
    let d = dir.join("depth").join(depth_name(1, &DepthEncoding::Dpt1));
    let mut bytes = fs::read(&d).unwrap();
    assert_eq!(&bytes[..4], DPT_MAGIC);
    bytes[3] = b'2';
    fs::write(&d, bytes).unwrap();
    assert!(matches!(load_bundle(&dir), Err(Error::BadMagic(_))));
}

#[test]
fn version_and_family_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("v");
    store_bundle(&video(5, 2, 6, 5), &dir).unwrap();
    let m = dir.join(BUNDLE_MANIFEST);
    let text = fs::read_to_string(&m).unwrap();
    fs::write(&m, text.replace("fyc-bundle/1", "fyc-bundle/2")).unwrap();
    assert!(matches!(
        load_bundle(&dir),
        Err(Error::UnsupportedVersion { .. })
    ));
    fs::write(&m, text.replace("fyc-bundle/1", "fyc-pair/1")).unwrap();
    assert!(matches!(load_bundle(&dir), Err(Error::ManifestMismatch(_))));
    fs::write(
        &m,
        text.replace("\"height\"", "\"extra\": 1,\n  \"height\""),
    )
    .unwrap();
    assert!(load_bundle(&dir).is_err());
}

#[test]
fn pair_sample_pack_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let p = pair(6, 4);
    store_training_pair(&p, &tmp.path().join("pair")).unwrap();
    assert_eq!(load_training_pair(&tmp.path().join("pair")).unwrap(), p);

    for seed in 0..6 {
        let s = sample_composite(p.clone(), &EditMaskConfig::default(), seed).unwrap();
        let dir = tmp.path().join(format!("s{seed}"));
        store_composite_sample(&s, &dir).unwrap();
        assert_eq!(load_composite_sample(&dir).unwrap(), s);
        store_mask_video(&s.mask, &dir.join("m")).unwrap();
        assert_eq!(load_mask_video(&dir.join("m")).unwrap(), s.mask);
    }

    let gen = video(7, 6, 24, 16);
    let mask = MaskVideo::new(pair(7, 6).inpaint_mask, MaskKind::Pointcloud).unwrap();
    let packed = build_packed_sequence(&gen.frames, &mask, "gen", &p, 3).unwrap();
    store_packed_sequence(&packed, &tmp.path().join("pack")).unwrap();
    let back = load_packed_sequence(&tmp.path().join("pack")).unwrap();
    assert_eq!(back, packed);
    assert_eq!(back.len(), 3 + p.len());
    let manifest = read_json_value(&tmp.path().join("pack").join(PACK_MANIFEST)).unwrap();
    for key in [
        "format",
        "k",
        "selected",
        "source",
        "context_frames",
        "hole_frames",
        "hole_masks",
    ] {
        assert!(manifest.get(key).is_some(), "{key}");
    }
}

#[test]
fn stores_are_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let p = pair(8, 3);
    let s = sample_composite(p, &EditMaskConfig::default(), 99).unwrap();
    store_composite_sample(&s, &tmp.path().join("a")).unwrap();
    store_composite_sample(&s, &tmp.path().join("b")).unwrap();
    assert_eq!(
        file_bytes(&tmp.path().join("a")),
        file_bytes(&tmp.path().join("b"))
    );
}

#[test]
fn read_only_destination_is_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let err = store_training_pair(&pair(9, 2), &blocker.join("pair")).unwrap_err();
    assert_eq!(err.class(), ErrorClass::Io, "{err}");
}
