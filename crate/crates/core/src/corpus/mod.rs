//! Corpus manifests, pseudo-speaker expansion, batch rendering and
//! speaker-preserving noise mixing.

mod manifest;
mod noise;
mod plan;
mod render;

pub use manifest::{load_manifest, Manifest, ManifestEntry, ManifestFormat};
pub use noise::{mix_noise, utterance_seed};
pub use plan::{
    alpha_label, expand_fused, expand_manifest, output_path, pseudo_speaker_id,
    pseudo_utterance_id, AugmentationPlan, AugmentedEntry, ExpandedManifest, Method,
};
pub use render::{
    run_augmentation, AugmentationReport, EntryRecord, EntryStatus, RenderOptions, SourceMap,
};
