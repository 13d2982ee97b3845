//! WAV input/output and the in-memory mono buffer.
//!
//! Only mono RIFF/WAVE files are accepted, encoded either as 16-bit integer
//! PCM or 32-bit IEEE float. Integer samples map to `[-1, 1)` by a factor of
//! 1/32768. Files at a rate other than the requested one are converted with
//! [`resample_sinc`](crate::dsp::resample_sinc).

use std::path::Path;

use crate::dsp::resample_sinc;
use crate::error::{Error, Result};

pub const CANONICAL_RATE_HZ: u32 = 16_000;

const PCM16_SCALE: f32 = 32768.0;

/// Mono PCM samples together with the rate they are meant to be played at.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f32>,
    sample_rate_hz: u32,
}

impl AudioBuffer {
    /// Amplitudes are not clamped here; clipping happens when writing
    /// integer PCM.
    pub fn new(samples: Vec<f32>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::InvalidSampleRate(sample_rate_hz));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn from_f64(samples: &[f64], sample_rate_hz: u32) -> Result<Self> {
        Self::new(samples.iter().map(|&s| s as f32).collect(), sample_rate_hz)
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    pub fn peak(&self) -> f32 {
        self.samples.iter().fold(0.0f32, |m, s| m.max(s.abs()))
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }

    pub(crate) fn to_f64(&self) -> Vec<f64> {
        self.samples.iter().map(|&s| s as f64).collect()
    }
}

pub(crate) fn rms(samples: &[f32]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let energy: f64 = samples.iter().map(|&s| (s as f64) * (s as f64)).sum();
    (energy / samples.len() as f64).sqrt()
}

/// Sample encoding of a WAV file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    Pcm16,
    Float32,
}

impl std::fmt::Display for Encoding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Encoding::Pcm16 => "pcm16",
            Encoding::Float32 => "float32",
        })
    }
}

/// Header-level description of a WAV file, read without decoding samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WavInfo {
    pub sample_rate_hz: u32,
    pub channels: u16,
    pub frames: u32,
    pub encoding: Encoding,
}

impl WavInfo {
    /// Number of samples [`read_wav`] returns for this file at `target_rate_hz`.
    pub fn resampled_len(&self, target_rate_hz: u32) -> usize {
        if self.sample_rate_hz == target_rate_hz {
            self.frames as usize
        } else {
            let ratio = target_rate_hz as f64 / self.sample_rate_hz as f64;
            (self.frames as f64 * ratio).round() as usize
        }
    }
}

fn wav_error(path: &Path, err: hound::Error) -> Error {
    match err {
        hound::Error::IoError(e) => Error::io(path, e),
        hound::Error::Unsupported => {
            Error::UnsupportedEncoding("format not supported by the reader".into())
        }
        other => Error::Wav {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    }
}

fn encoding_of(spec: &hound::WavSpec) -> Result<Encoding> {
    match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => Ok(Encoding::Pcm16),
        (hound::SampleFormat::Float, 32) => Ok(Encoding::Float32),
        (fmt, bits) => Err(Error::UnsupportedEncoding(format!(
            "{bits}-bit {}",
            match fmt {
                hound::SampleFormat::Int => "integer",
                hound::SampleFormat::Float => "float",
            }
        ))),
    }
}

pub fn probe_wav(path: impl AsRef<Path>) -> Result<WavInfo> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| wav_error(path, e))?;
    let spec = reader.spec();
    Ok(WavInfo {
        sample_rate_hz: spec.sample_rate,
        channels: spec.channels,
        frames: reader.duration(),
        encoding: encoding_of(&spec)?,
    })
}

/// Reads a mono WAV file and returns it at `target_rate_hz`.
pub fn read_wav(path: impl AsRef<Path>, target_rate_hz: u32) -> Result<AudioBuffer> {
    let path = path.as_ref();
    if target_rate_hz == 0 {
        return Err(Error::InvalidSampleRate(target_rate_hz));
    }
    let mut reader = hound::WavReader::open(path).map_err(|e| wav_error(path, e))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::UnsupportedChannels(spec.channels));
    }
    let samples: Vec<f32> = match encoding_of(&spec)? {
        Encoding::Pcm16 => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f32 / PCM16_SCALE))
            .collect::<std::result::Result<_, _>>(),
        Encoding::Float32 => reader
            .samples::<f32>()
            .collect::<std::result::Result<_, _>>(),
    }
    .map_err(|e| wav_error(path, e))?;
    if samples.is_empty() {
        return Err(Error::EmptyBuffer);
    }

    let buffer = AudioBuffer::new(samples, spec.sample_rate)?;
    if spec.sample_rate == target_rate_hz {
        return Ok(buffer);
    }
    let ratio = target_rate_hz as f64 / spec.sample_rate as f64;
    let resampled = resample_sinc(&buffer, ratio)?;
    AudioBuffer::new(resampled.into_samples(), target_rate_hz)
}

/// Quantizes one sample to 16-bit PCM, rounding half away from zero and
/// hard-clipping to the representable range.
pub fn quantize_pcm16(sample: f32) -> i16 {
    let scaled = (sample as f64 * PCM16_SCALE as f64).round();
    scaled.clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

pub fn write_wav(buffer: &AudioBuffer, path: impl AsRef<Path>, encoding: Encoding) -> Result<()> {
    let path = path.as_ref();
    if buffer.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: buffer.sample_rate_hz(),
        bits_per_sample: match encoding {
            Encoding::Pcm16 => 16,
            Encoding::Float32 => 32,
        },
        sample_format: match encoding {
            Encoding::Pcm16 => hound::SampleFormat::Int,
            Encoding::Float32 => hound::SampleFormat::Float,
        },
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| wav_error(path, e))?;
    let written: std::result::Result<(), hound::Error> = match encoding {
        Encoding::Pcm16 => buffer
            .samples()
            .iter()
            .try_for_each(|&s| writer.write_sample(quantize_pcm16(s))),
        Encoding::Float32 => buffer
            .samples()
            .iter()
            .try_for_each(|&s| writer.write_sample(s)),
    };
    written.map_err(|e| wav_error(path, e))?;
    writer.finalize().map_err(|e| wav_error(path, e))
}
