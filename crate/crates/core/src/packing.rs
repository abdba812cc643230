//! Temporal packing: choose the most heavily inpainted frames of an already
//! generated trajectory and prepend them to the next trajectory's hole video.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Frame, Mask};
use crate::maskgen::{intersect_mask, MaskVideo};
use crate::reprojection::TrainingPair;

pub const DEFAULT_K: usize = 4;

/// Number of masked pixels per frame.
pub fn frame_inpaint_area(mask_video: &MaskVideo) -> Vec<u64> {
    mask_video.frames.iter().map(Mask::count_ones).collect()
}

/// Indices of the `k` largest scores, ties to the smaller index, returned in
/// ascending order.
pub fn select_top_k(scores: &[u64], k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > scores.len() {
        return Err(Error::InvalidK {
            k,
            len: scores.len(),
        });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.select_nth_unstable_by(k - 1, |&a, &b| scores[b].cmp(&scores[a]).then(a.cmp(&b)));
    let mut picked = order[..k].to_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// Pixels masked in both source-aligned hole videos.
pub fn overlap_mask(a: &MaskVideo, b: &MaskVideo) -> Result<MaskVideo> {
    intersect_mask(a, b)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackManifest {
    pub k: usize,
    pub selected: Vec<usize>,
    pub source: String,
}

/// Context frames followed by the hole video, ready for the generator.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedSequence {
    pub context_frames: Vec<Frame>,
    pub hole_video: Vec<Frame>,
    pub hole_mask: Vec<Mask>,
    pub manifest: PackManifest,
}

impl PackedSequence {
    pub fn len(&self) -> usize {
        self.context_frames.len() + self.hole_video.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The packed stream in temporal order: context first.
    pub fn frames(&self) -> impl Iterator<Item = &Frame> {
        self.context_frames.iter().chain(&self.hole_video)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.manifest;
        if m.selected.len() != m.k || self.context_frames.len() != m.k {
            return Err(Error::Validation(format!(
                "pack declares k={} but has {} indices and {} context frames",
                m.k,
                m.selected.len(),
                self.context_frames.len()
            )));
        }
        if m.selected.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation(
                "selected frame indices must be strictly ascending".into(),
            ));
        }
        if self.hole_video.len() != self.hole_mask.len() {
            return Err(Error::LengthMismatch {
                expected: self.hole_video.len(),
                actual: self.hole_mask.len(),
            });
        }
        Ok(())
    }
}

/// Scores `mask_a`, takes the top-`k` frames of `generated_a` as context and
/// packs them ahead of `hole_b`'s corrupted frames.
pub fn build_packed_sequence(
    generated_a: &[Frame],
    mask_a: &MaskVideo,
    source_name: &str,
    hole_b: &TrainingPair,
    k: usize,
) -> Result<PackedSequence> {
    if generated_a.len() != mask_a.len() {
        return Err(Error::LengthMismatch {
            expected: generated_a.len(),
            actual: mask_a.len(),
        });
    }
    hole_b.validate()?;
    let selected = select_top_k(&frame_inpaint_area(mask_a), k)?;
    let context_frames = selected.iter().map(|&i| generated_a[i].clone()).collect();
    Ok(PackedSequence {
        context_frames,
        hole_video: hole_b.corrupted.clone(),
        hole_mask: hole_b.inpaint_mask.clone(),
        manifest: PackManifest {
            k,
            selected,
            source: source_name.to_owned(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maskgen::MaskKind;
    use crate::reprojection::TrajectoryRef;
    use proptest::prelude::{prop, prop_assert, prop_assert_eq, proptest, Strategy};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive_area(m: &Mask) -> u64 {
        let mut n = 0;
        for y in 0..m.height {
            for x in 0..m.width {
                if m.get(x, y) {
                    n += 1;
                }
            }
        }
        n
    }

    fn video(frames: Vec<Mask>) -> MaskVideo {
        MaskVideo {
            frames,
            kind: MaskKind::Pointcloud,
        }
    }

    #[test]
    fn area_scores() {
        assert_eq!(
            frame_inpaint_area(&video(vec![Mask::zeros(8, 8); 3])),
            vec![0, 0, 0]
        );
        assert_eq!(
            frame_inpaint_area(&video(vec![Mask::ones(512, 512)])),
            vec![262_144]
        );
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let frames: Vec<Mask> = (0..20)
            .map(|_| {
                let p = rng.gen_range(0.0..1.0);
                Mask::new(13, 7, (0..91).map(|_| rng.gen_bool(p)).collect()).unwrap()
            })
            .collect();
        let expected: Vec<u64> = frames.iter().map(naive_area).collect();
        assert_eq!(frame_inpaint_area(&video(frames)), expected);
    }

    #[test]
    fn top_k_ties_and_bounds() {
        assert_eq!(select_top_k(&[5, 1, 5, 0], 2).unwrap(), vec![0, 2]);
        assert_eq!(select_top_k(&[5, 1, 5, 0], 4).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(select_top_k(&[0; 10], 4).unwrap(), vec![0, 1, 2, 3]);
        assert!(matches!(
            select_top_k(&[1, 2], 0),
            Err(Error::InvalidK { k: 0, len: 2 })
        ));
        assert!(matches!(
            select_top_k(&[1, 2], 3),
            Err(Error::InvalidK { .. })
        ));
    }

    fn sort_oracle(scores: &[u64], k: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..scores.len()).collect();
        idx.sort_by_key(|&i| (std::cmp::Reverse(scores[i]), i));
        let mut out = idx[..k].to_vec();
        out.sort();
        out
    }

    #[test]
    fn top_k_matches_full_sort() {
        let mut rng = ChaCha8Rng::seed_from_u64(81);
        let scores: Vec<u64> = (0..81).map(|_| rng.gen_range(0..1000)).collect();
        assert_eq!(select_top_k(&scores, 4).unwrap(), sort_oracle(&scores, 4));
    }

    #[test]
    fn overlap_of_disjoint_and_self() {
        let mut a = Mask::zeros(4, 4);
        a.bits[0] = true;
        let mut b = Mask::zeros(4, 4);
        b.bits[15] = true;
        let o = overlap_mask(&video(vec![a.clone()]), &video(vec![b])).unwrap();
        assert_eq!(o.frames[0].count_ones(), 0);
        assert_eq!(
            overlap_mask(&video(vec![a.clone()]), &video(vec![a.clone()]))
                .unwrap()
                .frames,
            vec![a]
        );
        let err = overlap_mask(
            &video(vec![Mask::zeros(4, 4)]),
            &video(vec![Mask::zeros(3, 4)]),
        );
        assert!(matches!(err, Err(Error::DimensionMismatch(_))));
    }

    fn hole(n: usize) -> TrainingPair {
        TrainingPair {
            corrupted: (0..n)
                .map(|i| Frame::new(2, 2, vec![[i as u8, 1, 1]; 4]).unwrap())
                .collect(),
            inpaint_mask: vec![Mask::zeros(2, 2); n],
            clean: vec![Frame::black(2, 2); n],
            trajectory: TrajectoryRef {
                name: "b".into(),
                max_angle_deg: 10.0,
            },
        }
    }

    #[test]
    fn packs_context_before_holes() {
        let generated: Vec<Frame> = (0..81)
            .map(|i| Frame::new(2, 2, vec![[i as u8, 0, 0]; 4]).unwrap())
            .collect();
        let mut masks = vec![Mask::zeros(2, 2); 81];
        for (i, n) in [(70usize, 4usize), (3, 3), (40, 3), (12, 2), (50, 1)] {
            for b in masks[i].bits.iter_mut().take(n) {
                *b = true;
            }
        }
        let packed =
            build_packed_sequence(&generated, &video(masks), "traj-a", &hole(81), 4).unwrap();
        assert_eq!(packed.manifest.selected, vec![3, 12, 40, 70]);
        assert_eq!(packed.len(), 85);
        assert_eq!(packed.frames().count(), 85);
        let firsts: Vec<u8> = packed.frames().take(5).map(|f| f.pixels[0][0]).collect();
        assert_eq!(firsts, vec![3, 12, 40, 70, 0]);
        packed.validate().unwrap();

        let zeros = video(vec![Mask::zeros(2, 2); 81]);
        let fallback = build_packed_sequence(&generated, &zeros, "a", &hole(81), 4).unwrap();
        assert_eq!(fallback.manifest.selected, vec![0, 1, 2, 3]);
        assert!(matches!(
            build_packed_sequence(&generated, &zeros, "a", &hole(81), 0),
            Err(Error::InvalidK { .. })
        ));
        assert!(matches!(
            build_packed_sequence(&generated[..80], &zeros, "a", &hole(81), 4),
            Err(Error::LengthMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn top_k_is_sorted_set(scores in prop::collection::vec(0u64..20, 1..60), k in 1usize..60) {
            let k = k.min(scores.len());
            let picked = select_top_k(&scores, k).unwrap();
            prop_assert_eq!(picked.len(), k);
            prop_assert!(picked.windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(&picked, &sort_oracle(&scores, k));
        }

        #[test]
        fn area_is_permutation_equivariant(
            masks in prop::collection::vec(prop::collection::vec(proptest::bool::ANY, 12), 1..10)
                .prop_map(|v| v.into_iter().map(|b| Mask::new(4, 3, b).unwrap()).collect::<Vec<_>>()),
            rot in 0usize..10,
        ) {
            let scores = frame_inpaint_area(&video(masks.clone()));
            let mut rotated = masks.clone();
            let r = rot % masks.len();
            rotated.rotate_left(r);
            let mut expected = scores.clone();
            expected.rotate_left(r);
            prop_assert_eq!(frame_inpaint_area(&video(rotated)), expected);
        }

        #[test]
        fn overlap_is_subset(
            bits in prop::collection::vec((proptest::bool::ANY, proptest::bool::ANY), 20),
        ) {
            let a = Mask::new(5, 4, bits.iter().map(|p| p.0).collect()).unwrap();
            let b = Mask::new(5, 4, bits.iter().map(|p| p.1).collect()).unwrap();
            let o = overlap_mask(&video(vec![a.clone()]), &video(vec![b.clone()])).unwrap();
            for i in 0..20 {
                prop_assert!(!o.frames[0].bits[i] || (a.bits[i] && b.bits[i]));
            }
        }
    }
}
