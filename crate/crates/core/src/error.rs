use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("wav error on {path}: {message}")]
    Wav { path: PathBuf, message: String },

    #[error("unsupported channel count {0} (only mono is accepted)")]
    UnsupportedChannels(u16),

    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),

    #[error("empty audio buffer")]
    EmptyBuffer,

    #[error("invalid sample rate {0}")]
    InvalidSampleRate(u32),

    #[error("sample rate mismatch: expected {expected} Hz, got {actual} Hz")]
    SampleRateMismatch { expected: f64, actual: f64 },

    #[error("resampling ratio {0} outside [0.1, 10]")]
    RatioOutOfRange(f64),

    #[error("alpha {0} outside the no-distortion range [0.8, 1.2]")]
    AlphaOutsideNoDistortionRange(f64),

    #[error("invalid perturbation factor {0}")]
    InvalidAlpha(f64),

    #[error("invalid warp parameters: {0}")]
    InvalidWarp(String),

    #[error("frequency {freq} Hz outside [0, {fmax}]")]
    FrequencyOutOfRange { freq: f64, fmax: f64 },

    #[error("invalid STFT parameters: {0}")]
    InvalidStft(String),

    #[error("spectrogram geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("buffer too short: need at least {needed} samples, got {actual}")]
    BufferTooShort { needed: usize, actual: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("duplicate utterance id {0:?}")]
    DuplicateUtterance(String),

    #[error("wav.scp and utt2spk keys do not match: {0}")]
    KeyMismatch(String),

    #[error("invalid augmentation plan: {0}")]
    InvalidPlan(String),

    #[error("id collision: {0:?} already exists in the manifest")]
    IdCollision(String),

    #[error("unknown source utterance {0:?}")]
    UnknownSource(String),

    #[error("noise signal is silent (rms {0:e})")]
    SilentNoise(f64),

    #[error("embedding dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("zero vector cannot be normalized{}", .0.as_ref().map(|u| format!(" (utterance {u:?})")).unwrap_or_default())]
    ZeroVector(Option<String>),

    #[error("missing embedding for utterance {0:?}")]
    MissingEmbedding(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("utterance {utt_id:?}: {source}")]
    Utterance {
        utt_id: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn for_utterance(self, utt_id: &str) -> Self {
        Error::Utterance {
            utt_id: utt_id.to_string(),
            source: Box::new(self),
        }
    }
}
