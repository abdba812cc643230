//! On-disk formats. Every loader validates fully and reports inconsistencies
//! as typed errors; nothing is repaired on load.

mod artifacts;
mod bundle;
pub mod codec;

pub use artifacts::{
    load_composite_sample, load_mask_video, load_packed_sequence, load_training_pair,
    store_composite_sample, store_mask_video, store_packed_sequence, store_training_pair,
    MASK_FORMAT, MASK_MANIFEST, PACK_FORMAT, PACK_MANIFEST, PAIR_FORMAT, PAIR_MANIFEST,
    SAMPLE_FORMAT, SAMPLE_MANIFEST,
};
pub use bundle::{
    depth_name, frame_name, load_bundle, mask_name, store_bundle, Bundle, BundleManifest,
    DepthEncoding, BUNDLE_FORMAT, BUNDLE_MANIFEST, MASK_SEMANTICS,
};
