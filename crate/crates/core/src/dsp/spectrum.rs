use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::audio::AudioBuffer;
use crate::dsp::window::hann_symmetric;
use crate::error::{Error, Result};

const MIN_LEN: usize = 1024;

/// Frequency of the strongest spectral peak, in Hz.
///
/// Uses one Hann-windowed FFT over the whole buffer and refines the peak bin
/// by fitting a parabola through the log magnitudes of the peak and its two
/// neighbours.
pub fn dominant_frequency(buffer: &AudioBuffer) -> Result<f64> {
    let n = buffer.len();
    if n < MIN_LEN {
        return Err(Error::BufferTooShort {
            needed: MIN_LEN,
            actual: n,
        });
    }
    let window = hann_symmetric(n);
    let mut data: Vec<Complex64> = buffer
        .samples()
        .iter()
        .zip(&window)
        .map(|(&s, &w)| Complex64::new(s as f64 * w, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut data);

    let half = n / 2;
    let mags: Vec<f64> = data[..=half].iter().map(|c| c.norm()).collect();
    let peak = (0..=half)
        .max_by(|&a, &b| mags[a].total_cmp(&mags[b]))
        .unwrap_or(0);
    if mags[peak] == 0.0 {
        return Ok(0.0);
    }

    // the spectrum of a real signal is mirrored around 0 and n/2
    let left = if peak == 0 { mags[1] } else { mags[peak - 1] };
    let right = if peak == half {
        mags[(n - half - 1).min(half)]
    } else {
        mags[peak + 1]
    };
    let floor = mags[peak] * 1e-12;
    let (a, b, c) = (
        left.max(floor).ln(),
        mags[peak].ln(),
        right.max(floor).ln(),
    );
    let denom = a - 2.0 * b + c;
    let delta = if denom.abs() > 1e-15 {
        (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    let bin = (peak as f64 + delta).max(0.0);
    Ok(bin * buffer.sample_rate_hz() as f64 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tones(parts: &[(f64, f64)], len: usize) -> AudioBuffer {
        let s: Vec<f64> = (0..len)
            .map(|i| {
                parts
                    .iter()
                    .map(|(f, a)| a * (2.0 * std::f64::consts::PI * f * i as f64 / 16000.0).sin())
                    .sum()
            })
            .collect();
        AudioBuffer::from_f64(&s, 16000).unwrap()
    }

    #[test]
    fn pure_tone() {
        let f = dominant_frequency(&tones(&[(440.0, 1.0)], 16000)).unwrap();
        assert!((f - 440.0).abs() <= 1.0, "{f}");
    }

    #[test]
    fn off_bin_tone_is_refined() {
        let f = dominant_frequency(&tones(&[(1234.56, 0.3)], 12345)).unwrap();
        let bin = 16000.0 / 12345.0;
        assert!((f - 1234.56).abs() < 0.1 * bin, "{f}");
    }

    #[test]
    fn dc_is_zero() {
        let buf = AudioBuffer::new(vec![0.25; 2048], 16000).unwrap();
        assert_eq!(dominant_frequency(&buf).unwrap(), 0.0);
    }

    #[test]
    fn weak_component_does_not_win() {
        let f = dominant_frequency(&tones(&[(3000.0, 1.0), (100.0, 0.1)], 16000)).unwrap();
        assert!((f - 3000.0).abs() <= 1.0, "{f}");
    }

    #[test]
    fn short_buffer_is_rejected() {
        let buf = AudioBuffer::new(vec![0.0; 1023], 16000).unwrap();
        assert!(matches!(
            dominant_frequency(&buf),
            Err(Error::BufferTooShort { .. })
        ));
    }
}
