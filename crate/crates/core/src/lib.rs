//! Speaker augmentation toolkit.
//!
//! Speed perturbation (time-domain resampling) and vocal tract length
//! perturbation (piecewise-linear frequency warping in the STFT domain) on
//! mono waveforms, pseudo-speaker expansion of corpus manifests, additive
//! noise mixing, and a deviation-analysis harness that measures how far a
//! perturbation moves utterances in an embedding space.
//!
//! All signal processing assumes the canonical 16 kHz rate, so the warp's
//! upper frequency defaults to the 8 kHz Nyquist limit.

pub mod audio;
pub mod corpus;
pub mod deviation;
pub mod dsp;
pub mod error;
pub mod speed;
pub mod synth;
pub mod vtlp;

pub use audio::{read_wav, write_wav, AudioBuffer, Encoding, CANONICAL_RATE_HZ};
pub use corpus::{
    expand_fused, expand_manifest, load_manifest, mix_noise, run_augmentation, AugmentationPlan,
    AugmentationReport, AugmentedEntry, ExpandedManifest, Manifest, ManifestEntry, ManifestFormat,
    Method, RenderOptions, SourceMap,
};
pub use deviation::{
    baseline_embedding, cosine_deviation, deviation_distribution, deviation_perturbation_curve,
    import_embeddings, speaker_deviation, Aggregation, DistributionCurve, EmbeddingSource,
    EmbeddingVector, PerturbationCurvePoint, SpeakerDeviation,
};
pub use dsp::{dominant_frequency, istft, resample_sinc, stft, Spectrogram, StftParams};
pub use error::{Error, Result};
pub use speed::{speed_perturb, SpeedSpec};
pub use synth::{synth_utterance, write_synthetic_corpus, SynthConfig};
pub use vtlp::{inverse_warp_frequency, vtlp_perturb, warp_frequency, WarpParams};
