//! Editing masks, union masks and the three-way composite mask sampler.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Mask;
use crate::reprojection::TrainingPair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskKind {
    /// Double-reprojection hole mask.
    Pointcloud,
    Edit,
    Union,
}

impl MaskKind {
    pub const ALL: [MaskKind; 3] = [MaskKind::Pointcloud, MaskKind::Edit, MaskKind::Union];

    pub fn as_str(&self) -> &'static str {
        match self {
            MaskKind::Pointcloud => "pointcloud",
            MaskKind::Edit => "edit",
            MaskKind::Union => "union",
        }
    }
}

impl std::str::FromStr for MaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pointcloud" => Ok(MaskKind::Pointcloud),
            "edit" => Ok(MaskKind::Edit),
            "union" => Ok(MaskKind::Union),
            other => Err(Error::Validation(format!("unknown mask kind `{other}`"))),
        }
    }
}

/// Per-frame binary masks, `true` = region to fill or edit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskVideo {
    pub frames: Vec<Mask>,
    pub kind: MaskKind,
}

impl MaskVideo {
    pub fn new(frames: Vec<Mask>, kind: MaskKind) -> Result<Self> {
        let video = MaskVideo { frames, kind };
        video.validate()?;
        Ok(video)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dims(&self) -> (u32, u32) {
        self.frames.first().map(Mask::dims).unwrap_or((0, 0))
    }

    pub fn validate(&self) -> Result<()> {
        let dims = self.dims();
        if let Some(i) = self.frames.iter().position(|m| m.dims() != dims) {
            return Err(Error::DimensionMismatch(format!(
                "mask frame {i} is {:?}, expected {dims:?}",
                self.frames[i].dims()
            )));
        }
        if self.kind == MaskKind::Edit {
            if let Some(first) = self.frames.first() {
                if first.count_ones() != 0 {
                    return Err(Error::Validation(
                        "edit masks must leave the first frame untouched".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn combine(&self, other: &MaskVideo, f: fn(bool, bool) -> bool) -> Result<Vec<Mask>> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch(format!(
                "mask videos have {} and {} frames",
                self.len(),
                other.len()
            )));
        }
        self.frames
            .iter()
            .zip(&other.frames)
            .map(|(a, b)| a.zip_with(b, f))
            .collect()
    }
}

/// Bounds for the random editing rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EditMaskConfig {
    pub area_min: f64,
    pub area_max: f64,
    pub aspect_min: f64,
    pub aspect_max: f64,
}

impl Default for EditMaskConfig {
    fn default() -> Self {
        EditMaskConfig {
            area_min: 0.05,
            area_max: 0.40,
            aspect_min: 0.5,
            aspect_max: 2.0,
        }
    }
}

impl EditMaskConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = 0.0 < self.area_min
            && self.area_min <= self.area_max
            && self.area_max <= 1.0
            && 0.0 < self.aspect_min
            && self.aspect_min <= self.aspect_max;
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "invalid edit mask bounds {self:?}"
            )))
        }
    }
}

/// Axis-aligned rectangle, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl Rect {
    pub fn area(&self) -> u64 {
        self.width as u64 * self.height as u64
    }
}

/// Draws the edit rectangle: area fraction and aspect (width / height)
/// uniform within the bounds, position uniform among placements that fit.
/// Rounding is corrected so the pixel area stays inside the area bounds
/// whenever the frame shape allows it.
pub fn sample_edit_rect(width: u32, height: u32, cfg: &EditMaskConfig, rng: &mut impl Rng) -> Rect {
    let total = width as f64 * height as f64;
    let area = rng.gen_range(cfg.area_min..=cfg.area_max) * total;
    let aspect = rng.gen_range(cfg.aspect_min..=cfg.aspect_max);
    let rw = ((area * aspect).sqrt().round() as u32).clamp(1, width);
    let lo = (cfg.area_min * total / rw as f64).ceil() as u32;
    let hi = (cfg.area_max * total / rw as f64).floor() as u32;
    let mut rh = ((area / rw as f64).round() as u32).clamp(lo.max(1), hi.max(lo).max(1));
    rh = rh.clamp(1, height);
    let x = rng.gen_range(0..=width - rw);
    let y = rng.gen_range(0..=height - rh);
    Rect {
        x,
        y,
        width: rw,
        height: rh,
    }
}

fn rect_mask(width: u32, height: u32, rect: &Rect) -> Mask {
    let mut m = Mask::zeros(width, height);
    for yy in rect.y..rect.y + rect.height {
        let row = (yy * width) as usize;
        for xx in rect.x..rect.x + rect.width {
            m.bits[row + xx as usize] = true;
        }
    }
    m
}

/// One static random rectangle on frames `1..frame_count`; frame 0 stays
/// empty because it is the editing guidance frame.
pub fn make_edit_mask(
    width: u32,
    height: u32,
    frame_count: usize,
    rng_seed: u64,
    cfg: &EditMaskConfig,
) -> Result<MaskVideo> {
    if width == 0 || height == 0 || frame_count == 0 {
        return Err(Error::Validation(format!(
            "edit mask needs positive dimensions, got {width}x{height}x{frame_count}"
        )));
    }
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let rect = sample_edit_rect(width, height, cfg, &mut rng);
    let filled = rect_mask(width, height, &rect);
    let mut frames = Vec::with_capacity(frame_count);
    frames.push(Mask::zeros(width, height));
    frames.extend(std::iter::repeat_n(filled, frame_count - 1));
    Ok(MaskVideo {
        frames,
        kind: MaskKind::Edit,
    })
}

/// Elementwise OR.
pub fn union_mask(a: &MaskVideo, b: &MaskVideo) -> Result<MaskVideo> {
    Ok(MaskVideo {
        frames: a.combine(b, |x, y| x || y)?,
        kind: MaskKind::Union,
    })
}

/// Elementwise AND. Tagged as a union-kind composite.
pub fn intersect_mask(a: &MaskVideo, b: &MaskVideo) -> Result<MaskVideo> {
    Ok(MaskVideo {
        frames: a.combine(b, |x, y| x && y)?,
        kind: MaskKind::Union,
    })
}

impl TrainingPair {
    pub fn hole_mask(&self) -> MaskVideo {
        MaskVideo {
            frames: self.inpaint_mask.clone(),
            kind: MaskKind::Pointcloud,
        }
    }
}

/// A training instance: the pair plus the mask that supervises it.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeSample {
    pub pair: TrainingPair,
    pub mask: MaskVideo,
    pub kind: MaskKind,
    pub seed: u64,
}

/// Picks a mask kind uniformly from the three kinds and attaches the
/// matching mask. A pure function of `(pair, cfg, seed)`.
pub fn sample_composite(
    pair: TrainingPair,
    cfg: &EditMaskConfig,
    rng_seed: u64,
) -> Result<CompositeSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let kind = MaskKind::ALL[rng.gen_range(0..3usize)];
    let edit_seed = rng.next_u64();
    build_composite(pair, kind, cfg, rng_seed, edit_seed)
}

/// Same as [`sample_composite`] with the kind fixed by the caller.
pub fn composite_of_kind(
    pair: TrainingPair,
    kind: MaskKind,
    cfg: &EditMaskConfig,
    rng_seed: u64,
) -> Result<CompositeSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let _ = rng.gen_range(0..3usize);
    let edit_seed = rng.next_u64();
    build_composite(pair, kind, cfg, rng_seed, edit_seed)
}

fn build_composite(
    pair: TrainingPair,
    kind: MaskKind,
    cfg: &EditMaskConfig,
    seed: u64,
    edit_seed: u64,
) -> Result<CompositeSample> {
    pair.validate()?;
    let (w, h) = pair.dims();
    let mask = match kind {
        MaskKind::Pointcloud => pair.hole_mask(),
        MaskKind::Edit => make_edit_mask(w, h, pair.len(), edit_seed, cfg)?,
        MaskKind::Union => union_mask(
            &pair.hole_mask(),
            &make_edit_mask(w, h, pair.len(), edit_seed, cfg)?,
        )?,
    };
    Ok(CompositeSample {
        pair,
        mask,
        kind,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Frame;
    use crate::reprojection::TrajectoryRef;
    use proptest::prelude::{any, prop, prop_assert_eq, proptest, Strategy};

    fn dummy_pair(seed: u64, w: u32, h: u32, n: usize) -> TrainingPair {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let masks: Vec<Mask> = (0..n)
            .map(|_| Mask::new(w, h, (0..w * h).map(|_| rng.gen_bool(0.2)).collect()).unwrap())
            .collect();
        TrainingPair {
            corrupted: vec![Frame::black(w, h); n],
            inpaint_mask: masks,
            clean: vec![Frame::black(w, h); n],
            trajectory: TrajectoryRef {
                name: "t".into(),
                max_angle_deg: 5.0,
            },
        }
    }

    #[test]
    fn single_frame_edit_mask_is_empty() {
        let m = make_edit_mask(16, 16, 1, 3, &Default::default()).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.frames[0].count_ones(), 0);
    }

    #[test]
    fn edit_mask_bounds_at_default_resolution() {
        let total = 512.0 * 512.0;
        for seed in 0..50 {
            let m = make_edit_mask(512, 512, 81, seed, &Default::default()).unwrap();
            assert_eq!(m.frames[0].count_ones(), 0);
            let area = m.frames[1].count_ones() as f64;
            assert!(
                (0.05 * total..=0.40 * total).contains(&area),
                "seed {seed}: {area}"
            );
            assert!(m.frames[1..].iter().all(|f| f == &m.frames[1]));
        }
    }

    #[test]
    fn edit_mask_is_deterministic() {
        let cfg = EditMaskConfig::default();
        assert_eq!(
            make_edit_mask(40, 30, 9, 77, &cfg).unwrap(),
            make_edit_mask(40, 30, 9, 77, &cfg).unwrap()
        );
        assert_ne!(
            make_edit_mask(40, 30, 9, 77, &cfg).unwrap(),
            make_edit_mask(40, 30, 9, 78, &cfg).unwrap()
        );
    }

    #[test]
    fn rect_respects_aspect_and_fit() {
        let cfg = EditMaskConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let r = sample_edit_rect(320, 180, &cfg, &mut rng);
            assert!(r.x + r.width <= 320 && r.y + r.height <= 180);
            let total = 320.0 * 180.0;
            assert!((0.05 * total..=0.40 * total).contains(&(r.area() as f64)));
            let aspect = r.width as f64 / r.height as f64;
            assert!((0.45..=2.2).contains(&aspect), "{aspect}");
        }
    }

    #[test]
    fn edit_mask_rejects_bad_input() {
        assert!(make_edit_mask(0, 4, 3, 0, &Default::default()).is_err());
        assert!(make_edit_mask(4, 4, 0, 0, &Default::default()).is_err());
        let bad = EditMaskConfig {
            area_min: 0.5,
            area_max: 0.1,
            ..Default::default()
        };
        assert!(make_edit_mask(4, 4, 3, 0, &bad).is_err());
    }

    #[test]
    fn union_of_disjoint_rects_adds_areas() {
        let a = MaskVideo::new(
            vec![rect_mask(
                64,
                64,
                &Rect {
                    x: 0,
                    y: 0,
                    width: 10,
                    height: 10,
                },
            )],
            MaskKind::Edit,
        );
        // frame 0 nonzero is not allowed for edit masks
        assert!(a.is_err());
        let a = MaskVideo {
            frames: vec![rect_mask(
                64,
                64,
                &Rect {
                    x: 0,
                    y: 0,
                    width: 10,
                    height: 10,
                },
            )],
            kind: MaskKind::Pointcloud,
        };
        let b = MaskVideo {
            frames: vec![rect_mask(
                64,
                64,
                &Rect {
                    x: 20,
                    y: 20,
                    width: 20,
                    height: 10,
                },
            )],
            kind: MaskKind::Pointcloud,
        };
        let u = union_mask(&a, &b).unwrap();
        assert_eq!(u.kind, MaskKind::Union);
        assert_eq!(u.frames[0].count_ones(), 300);
        let zeros = MaskVideo {
            frames: vec![Mask::zeros(64, 64)],
            kind: MaskKind::Edit,
        };
        assert_eq!(union_mask(&a, &zeros).unwrap().frames, a.frames);
        assert_eq!(union_mask(&a, &a).unwrap().frames, a.frames);
    }

    #[test]
    fn union_dimension_mismatch() {
        let a = MaskVideo {
            frames: vec![Mask::zeros(4, 4)],
            kind: MaskKind::Edit,
        };
        let b = MaskVideo {
            frames: vec![Mask::zeros(4, 5)],
            kind: MaskKind::Edit,
        };
        let c = MaskVideo {
            frames: vec![Mask::zeros(4, 4); 2],
            kind: MaskKind::Edit,
        };
        assert!(matches!(
            union_mask(&a, &b),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            union_mask(&a, &c),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn composite_kinds_attach_matching_masks() {
        let cfg = EditMaskConfig::default();
        let pair = dummy_pair(5, 24, 16, 4);
        let mut seen = std::collections::HashSet::new();
        for seed in 0..40 {
            let s = sample_composite(pair.clone(), &cfg, seed).unwrap();
            assert_eq!(s.seed, seed);
            seen.insert(s.kind);
            match s.kind {
                MaskKind::Pointcloud => assert_eq!(s.mask.frames, pair.inpaint_mask),
                MaskKind::Edit => {
                    assert_eq!(s.mask.frames[0].count_ones(), 0);
                }
                MaskKind::Union => {
                    let edit = composite_of_kind(pair.clone(), MaskKind::Edit, &cfg, seed).unwrap();
                    for (i, f) in s.mask.frames.iter().enumerate() {
                        for k in 0..f.bits.len() {
                            assert_eq!(
                                f.bits[k],
                                pair.inpaint_mask[i].bits[k] || edit.mask.frames[i].bits[k]
                            );
                        }
                    }
                }
            }
            assert_eq!(s, sample_composite(pair.clone(), &cfg, seed).unwrap());
            let forced = composite_of_kind(pair.clone(), s.kind, &cfg, seed).unwrap();
            assert_eq!(forced, s);
        }
        assert_eq!(seen.len(), 3);
    }

    fn arb_video() -> impl Strategy<Value = (MaskVideo, MaskVideo, MaskVideo)> {
        (1u32..6, 1u32..6, 1usize..4).prop_flat_map(|(w, h, n)| {
            let one = move || {
                prop::collection::vec(prop::collection::vec(any::<bool>(), (w * h) as usize), n)
                    .prop_map(move |frames| MaskVideo {
                        frames: frames
                            .into_iter()
                            .map(|b| Mask::new(w, h, b).unwrap())
                            .collect(),
                        kind: MaskKind::Pointcloud,
                    })
            };
            (one(), one(), one())
        })
    }

    proptest! {
        #[test]
        fn union_laws((a, b, c) in arb_video()) {
            let ab = union_mask(&a, &b).unwrap();
            prop_assert_eq!(&ab.frames, &union_mask(&b, &a).unwrap().frames);
            prop_assert_eq!(
                union_mask(&ab, &c).unwrap().frames,
                union_mask(&a, &union_mask(&b, &c).unwrap()).unwrap().frames
            );
            prop_assert_eq!(union_mask(&a, &a).unwrap().frames, a.frames.clone());
        }
    }
}
