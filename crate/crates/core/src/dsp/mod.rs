//! Shared signal-processing primitives.

pub(crate) mod resample;
mod spectrum;
mod stft;
pub mod window;

pub use resample::{rational_approximation, resample_sinc, Ratio, Resampler, MAX_DENOMINATOR};
pub use spectrum::dominant_frequency;
pub use stft::{istft, stft, Spectrogram, StftParams, WindowKind};

pub use rustfft::num_complex::Complex64;
