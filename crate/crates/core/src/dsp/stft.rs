//! Short-time Fourier analysis and weighted overlap-add synthesis.
//!
//! Frames are `frame_len` samples long, windowed, zero-padded to `fft_size`
//! and transformed; only the `fft_size / 2 + 1` non-negative bins are kept.
//! The signal is reflect-padded by `frame_len / 2` at both ends before
//! framing.
//!
//! Synthesis windows each inverse frame again with the analysis window and
//! divides the overlap-added result by the overlap-added squared window.
//! With that normalization the analysis/synthesis pair sums to one at every
//! covered sample, which is checked when parameters are built.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::audio::AudioBuffer;
use crate::dsp::window::hann_periodic;
use crate::error::{Error, Result};

const COLA_TOLERANCE: f64 = 1e-6;
/// Minimum ratio of the smallest to the largest steady-state squared-window
/// overlap; below this, normalization would amplify noise.
const MIN_ENVELOPE_RATIO: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    PeriodicHann,
    Hamming,
}

impl WindowKind {
    pub fn table(self, len: usize) -> Vec<f64> {
        match self {
            WindowKind::PeriodicHann => hann_periodic(len),
            WindowKind::Hamming => (0..len)
                .map(|i| {
                    0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / len as f64).cos()
                })
                .collect(),
        }
    }
}

/// Frame geometry for [`stft`] and [`istft`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct StftParams {
    frame_len: usize,
    hop: usize,
    fft_size: usize,
    window: WindowKind,
}

impl Default for StftParams {
    /// 25 ms frames, 10 ms hop and a 512-point FFT at 16 kHz.
    fn default() -> Self {
        Self::new(400, 160, 512, WindowKind::PeriodicHann).expect("default geometry is valid")
    }
}

impl StftParams {
    pub fn new(frame_len: usize, hop: usize, fft_size: usize, window: WindowKind) -> Result<Self> {
        if frame_len < 2 || hop == 0 {
            return Err(Error::InvalidStft(format!(
                "frame_len {frame_len} and hop {hop} must be positive (frame_len >= 2)"
            )));
        }
        if hop > frame_len / 2 {
            return Err(Error::InvalidStft(format!(
                "hop {hop} exceeds half the frame length {frame_len}"
            )));
        }
        if fft_size < frame_len || !fft_size.is_power_of_two() {
            return Err(Error::InvalidStft(format!(
                "fft_size {fft_size} must be a power of two >= frame_len {frame_len}"
            )));
        }
        let params = Self {
            frame_len,
            hop,
            fft_size,
            window,
        };
        params.check_overlap_add()?;
        Ok(params)
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn window(&self) -> WindowKind {
        self.window
    }

    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    fn pad(&self) -> usize {
        self.frame_len / 2
    }

    /// Steady-state check of the analysis/synthesis pair over one hop period.
    fn check_overlap_add(&self) -> Result<()> {
        let w = self.window.table(self.frame_len);
        let envelope: Vec<f64> = (0..self.hop)
            .map(|t| {
                (t..self.frame_len)
                    .step_by(self.hop)
                    .map(|i| w[i] * w[i])
                    .sum()
            })
            .collect();
        let max = envelope.iter().cloned().fold(0.0, f64::max);
        let min = envelope.iter().cloned().fold(f64::INFINITY, f64::min);
        if min <= MIN_ENVELOPE_RATIO * max || min.is_nan() {
            return Err(Error::InvalidStft(format!(
                "window overlap envelope vanishes at hop {}",
                self.hop
            )));
        }
        // sum over frames of analysis * synthesis, with synthesis = w / envelope
        for (t, env) in envelope.iter().enumerate() {
            let total: f64 = (t..self.frame_len)
                .step_by(self.hop)
                .map(|i| w[i] * w[i] / env)
                .sum();
            if (total - 1.0).abs() > COLA_TOLERANCE {
                return Err(Error::InvalidStft(format!(
                    "overlap-add ripple {:e} exceeds tolerance",
                    (total - 1.0).abs()
                )));
            }
        }
        Ok(())
    }

    /// Frequency in Hz of bin `k` at `sample_rate_hz`.
    pub fn bin_frequency(&self, k: usize, sample_rate_hz: u32) -> f64 {
        k as f64 * sample_rate_hz as f64 / self.fft_size as f64
    }

    pub fn frame_count(&self, len: usize) -> usize {
        let padded = len.max(self.frame_len) + 2 * self.pad();
        (padded - self.frame_len) / self.hop + 1
    }
}

/// Complex STFT frames; row `m` holds the non-negative bins of frame `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub frames: Vec<Vec<Complex64>>,
    pub params: StftParams,
    pub original_len: usize,
    pub sample_rate_hz: u32,
}

impl Spectrogram {
    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn n_bins(&self) -> usize {
        self.params.n_bins()
    }

    pub fn bin_frequency(&self, k: usize) -> f64 {
        self.params.bin_frequency(k, self.sample_rate_hz)
    }
}

fn reflect_index(i: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let m = i.rem_euclid(period);
    if m < len as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

pub(crate) struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftPair {
    pub(crate) fn new(size: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
        }
    }
}

pub fn stft(buffer: &AudioBuffer, params: &StftParams) -> Spectrogram {
    let original_len = buffer.len();
    let mut signal = buffer.to_f64();
    if signal.len() < params.frame_len {
        signal.resize(params.frame_len, 0.0);
    }
    let pad = params.pad() as isize;
    let padded_len = signal.len() + 2 * params.pad();
    let padded: Vec<f64> = (0..padded_len as isize)
        .map(|i| signal[reflect_index(i - pad, signal.len())])
        .collect();

    let window = params.window.table(params.frame_len);
    let fft = FftPair::new(params.fft_size);
    let n_frames = (padded_len - params.frame_len) / params.hop + 1;
    let mut scratch = vec![Complex64::default(); fft.forward.get_inplace_scratch_len()];
    let frames = (0..n_frames)
        .map(|m| {
            let start = m * params.hop;
            let mut buf = vec![Complex64::default(); params.fft_size];
            for (i, slot) in buf.iter_mut().take(params.frame_len).enumerate() {
                slot.re = padded[start + i] * window[i];
            }
            fft.forward.process_with_scratch(&mut buf, &mut scratch);
            buf.truncate(params.n_bins());
            buf
        })
        .collect();

    Spectrogram {
        frames,
        params: *params,
        original_len,
        sample_rate_hz: buffer.sample_rate_hz(),
    }
}

pub fn istft(spec: &Spectrogram) -> Result<AudioBuffer> {
    let params = &spec.params;
    let n_bins = params.n_bins();
    if let Some((m, frame)) = spec
        .frames
        .iter()
        .enumerate()
        .find(|(_, f)| f.len() != n_bins)
    {
        return Err(Error::GeometryMismatch(format!(
            "frame {m} has {} bins, expected {n_bins}",
            frame.len()
        )));
    }
    let expected = params.frame_count(spec.original_len);
    if spec.frames.len() != expected {
        return Err(Error::GeometryMismatch(format!(
            "{} frames for {} samples, expected {expected}",
            spec.frames.len(),
            spec.original_len
        )));
    }

    let window = params.window.table(params.frame_len);
    let fft = FftPair::new(params.fft_size);
    let mut scratch = vec![Complex64::default(); fft.inverse.get_inplace_scratch_len()];
    let out_len = (spec.frames.len() - 1) * params.hop + params.frame_len;
    let mut acc = vec![0.0f64; out_len];
    let mut envelope = vec![0.0f64; out_len];
    let scale = 1.0 / params.fft_size as f64;

    let mut full = vec![Complex64::default(); params.fft_size];
    for (m, frame) in spec.frames.iter().enumerate() {
        full[..n_bins].copy_from_slice(frame);
        full[0].im = 0.0;
        full[n_bins - 1].im = 0.0;
        for k in n_bins..params.fft_size {
            full[k] = full[params.fft_size - k].conj();
        }
        fft.inverse.process_with_scratch(&mut full, &mut scratch);
        let start = m * params.hop;
        for i in 0..params.frame_len {
            acc[start + i] += full[i].re * scale * window[i];
            envelope[start + i] += window[i] * window[i];
        }
    }

    let pad = params.pad();
    let samples = (pad..pad + spec.original_len)
        .map(|i| {
            if envelope[i] > 1e-10 {
                (acc[i] / envelope[i]) as f32
            } else {
                0.0
            }
        })
        .collect();
    AudioBuffer::new(samples, spec.sample_rate_hz)
}
