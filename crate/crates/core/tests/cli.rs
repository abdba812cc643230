use std::fs;
use std::path::Path;
use std::process::Command;

use warpforge::io::{load_bundle, load_training_pair, store_bundle, Bundle};
use warpforge::schedule::{StageState, StageStatus};
use warpforge::synth::random_scene;

fn warpforge(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_warpforge"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn ok(args: &[&str]) -> String {
    let (code, stdout, stderr) = warpforge(args);
    assert_eq!(code, 0, "{args:?}: {stderr}");
    stdout
}

fn write_video(dir: &Path, seed: u64, n: usize, side: u32) {
    let scenes: Vec<_> = (0..n as u64)
        .map(|i| random_scene(seed + i, side, side))
        .collect();
    let camera = scenes[0].camera;
    let (frames, depths) = scenes.into_iter().map(|s| (s.frame, s.depth)).unzip();
    store_bundle(&Bundle::new(frames, depths, camera).unwrap(), dir).unwrap();
}

const TRAJ: &str = r#"trajectory "pan" {
  frames 5
  keyframe 0 { }
  keyframe 4 { yaw 12 deg truck 0.3 }
}
"#;

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn render_pair_masks_pack_validate() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    write_video(&t.join("in"), 1, 5, 20);
    fs::write(t.join("pan.traj"), TRAJ).unwrap();

    ok(&[
        "render",
        "--bundle",
        p(&t.join("in")),
        "--traj",
        p(&t.join("pan.traj")),
        "--splat",
        "1",
        "--out",
        p(&t.join("r")),
    ]);
    let rendered = load_bundle(&t.join("r")).unwrap();
    assert_eq!(rendered.len(), 5);
    assert!(rendered.masks.is_some());

    ok(&[
        "pair",
        "--bundle",
        p(&t.join("in")),
        "--traj",
        p(&t.join("pan.traj")),
        "--out",
        p(&t.join("pair")),
    ]);
    let pair = load_training_pair(&t.join("pair")).unwrap();
    assert_eq!(pair.trajectory.name, "pan");
    assert!(pair.inpaint_mask[4].count_ones() > 0);

    for mode in ["pointcloud", "edit", "union", "sample"] {
        let out = t.join(format!("m_{mode}"));
        ok(&[
            "masks",
            "--pair",
            p(&t.join("pair")),
            "--mode",
            mode,
            "--seed",
            "3",
            "--out",
            p(&out),
        ]);
        assert!(
            ok(&["validate", "--path", p(&out)]).contains(if mode == "sample" {
                "composite"
            } else {
                mode
            })
        );
    }

    ok(&[
        "pack",
        "--generated",
        p(&t.join("in")),
        "--mask",
        p(&t.join("m_pointcloud")),
        "--hole",
        p(&t.join("pair")),
        "--k",
        "2",
        "--out",
        p(&t.join("pack")),
    ]);
    assert!(ok(&["validate", "--path", p(&t.join("pack"))]).contains("7 frames"));
    assert!(
        ok(&["validate", "--path", p(&t.join("pair").join("pair.json"))]).contains("training pair")
    );
}

#[test]
fn stage_loop_through_cli() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    write_video(&t.join("in"), 10, 4, 12);
    let plan = t.join("plan.json");
    ok(&[
        "plan",
        "--theta-min",
        "25",
        "--delta",
        "10",
        "--theta-target",
        "35",
        "--out",
        p(&plan),
    ]);
    let text = fs::read_to_string(&plan).unwrap();
    fs::write(
        &plan,
        text.replace("\"length\": 81", "\"length\": 4")
            .replace("\"resolution\": 512", "\"resolution\": 12"),
    )
    .unwrap();

    let runs = t.join("runs");
    let stage = |j: &str| {
        warpforge(&[
            "stage",
            "--plan",
            p(&plan),
            "--stage",
            j,
            "--bundle",
            p(&t.join("in")),
            "--k-traj",
            "2",
            "--seed",
            "4",
            "--out",
            p(&runs),
        ])
    };
    assert_eq!(stage("1").0, 2, "stage 1 before stage 0");
    assert_eq!(stage("0").0, 0);
    let state0 = runs.join("stage_0").join("state.json");
    assert!(ok(&["validate", "--path", p(&runs.join("stage_0"))]).contains("2 samples"));

    write_video(&t.join("gen").join("a"), 20, 4, 12);
    write_video(&t.join("gen").join("b"), 30, 4, 12);
    let (code, _, err) = warpforge(&[
        "ingest",
        "--state",
        p(&state0),
        "--videos",
        p(&t.join("gen")),
    ]);
    assert_eq!(code, 2, "{err}");
    assert_eq!(stage("1").0, 2);
    ok(&[
        "ingest",
        "--state",
        p(&state0),
        "--videos",
        p(&t.join("gen")),
        "--adapter",
        "lora-0",
    ]);
    let s = StageState::load(&state0).unwrap();
    assert_eq!(s.status, StageStatus::Generated);
    assert_eq!(s.generated.len(), 2);

    assert_eq!(stage("1").0, 0);
    assert_eq!(stage("2").0, 2, "stage beyond plan");

    write_video(&t.join("short"), 40, 3, 12);
    let state1 = runs.join("stage_1").join("state.json");
    let (code, _, err) = warpforge(&[
        "ingest",
        "--state",
        p(&state1),
        "--videos",
        p(&t.join("short")),
        "--adapter",
        "lora-1",
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("frame_count"), "{err}");
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    assert_eq!(warpforge(&[]).0, 4);
    assert_eq!(warpforge(&["pair", "--bundle", "x"]).0, 4);
    assert_eq!(
        warpforge(&["masks", "--pair", "x", "--mode", "blur", "--seed", "1", "--out", "y"]).0,
        4
    );
    assert_eq!(warpforge(&["--help"]).0, 0);
    assert_eq!(
        warpforge(&["validate", "--path", p(&t.join("nothing"))]).0,
        3
    );
    assert_eq!(
        warpforge(&[
            "plan",
            "--theta-min",
            "30",
            "--delta",
            "5",
            "--theta-target",
            "20",
            "--out",
            p(&t.join("p.json"))
        ])
        .0,
        2
    );

    write_video(&t.join("in"), 1, 5, 10);
    fs::write(
        t.join("bad.traj"),
        "trajectory \"x\" { frames 5 keyframe 0 { yaw } }",
    )
    .unwrap();
    let (code, _, err) = warpforge(&[
        "pair",
        "--bundle",
        p(&t.join("in")),
        "--traj",
        p(&t.join("bad.traj")),
        "--out",
        p(&t.join("o")),
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("1:"), "{err}");
    fs::write(t.join("long.traj"), TRAJ.replace("frames 5", "frames 6")).unwrap();
    assert_eq!(
        warpforge(&[
            "pair",
            "--bundle",
            p(&t.join("in")),
            "--traj",
            p(&t.join("long.traj")),
            "--out",
            p(&t.join("o"))
        ])
        .0,
        2
    );
    fs::write(t.join("blocker"), "x").unwrap();
    fs::write(t.join("pan.traj"), TRAJ).unwrap();
    assert_eq!(
        warpforge(&[
            "pair",
            "--bundle",
            p(&t.join("in")),
            "--traj",
            p(&t.join("pan.traj")),
            "--out",
            p(&t.join("blocker").join("o"))
        ])
        .0,
        3
    );
}
