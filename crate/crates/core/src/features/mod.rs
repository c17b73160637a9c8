//! Feature analysis, per-speaker statistics and normalization.

pub mod audio;
pub mod cache;
pub mod stats;
pub mod types;
pub mod vocoder;

pub use audio::{read_wav, write_wav};
pub use cache::{read_feature_file, write_feature_file};
pub use stats::{
    compute_f0_stats, compute_mcep_stats, convert_f0, denormalize, normalize, F0Stats, NormStats, SpeakerStats,
    STD_FLOOR,
};
pub use types::{AnalyzerConfig, ApSequence, F0Track, FeatureSet, McepSequence, Waveform};
pub use vocoder::{ExternalVocoder, StubVocoder, Vocoder};

/// Runs `vocoder` on one waveform. Free-function form of [`Vocoder::analyze`].
pub fn analyze(vocoder: &dyn Vocoder, w: &Waveform, cfg: &AnalyzerConfig) -> crate::Result<FeatureSet> {
    vocoder.analyze(w, cfg)
}

pub fn synthesize(vocoder: &dyn Vocoder, f: &FeatureSet, cfg: &AnalyzerConfig) -> crate::Result<Waveform> {
    vocoder.synthesize(f, cfg)
}
