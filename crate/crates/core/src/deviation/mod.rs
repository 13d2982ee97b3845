//! Deviation analysis: how far a perturbation moves utterances in an
//! embedding space, aggregated per speaker.

mod analysis;
mod embedding;

pub use analysis::{
    cosine_deviation, curve_to_csv, default_alpha_grid, deviation_distribution,
    deviation_perturbation_curve, parse_grid, speaker_deviation, Aggregation, AnalysisOptions,
    DeviationAnalyzer, DistributionCurve, EmbeddingSource, PerturbationCurvePoint,
    SpeakerDeviation, DEFAULT_BIN_WIDTH,
};
pub use embedding::{baseline_embedding, import_embeddings, EmbeddingVector, BASELINE_DIM};
