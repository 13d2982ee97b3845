//! Speaker-preserving additive noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audio::{rms, AudioBuffer};
use crate::error::{Error, Result};

const MIN_NOISE_RMS: f64 = 1e-8;

/// 64-bit FNV-1a; stable across platforms and toolchains.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Per-utterance seed derived from a run seed and the utterance id, so
/// results do not depend on processing order.
pub fn utterance_seed(run_seed: u64, utt_id: &str) -> u64 {
    fnv1a(utt_id.as_bytes()) ^ run_seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Adds `noise` to `buffer` at the given signal-to-noise ratio.
///
/// The noise is looped or cropped to the signal length starting from a
/// random offset drawn from `seed`, then scaled so that the ratio of signal
/// power to scaled-noise power over the mixed span equals `snr_db`. The sum
/// is not renormalized.
pub fn mix_noise(
    buffer: &AudioBuffer,
    noise: &AudioBuffer,
    snr_db: f64,
    seed: u64,
) -> Result<AudioBuffer> {
    if buffer.is_empty() || noise.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    if buffer.sample_rate_hz() != noise.sample_rate_hz() {
        return Err(Error::SampleRateMismatch {
            expected: buffer.sample_rate_hz() as f64,
            actual: noise.sample_rate_hz() as f64,
        });
    }
    if !snr_db.is_finite() {
        return Err(Error::InvalidArgument(format!("snr_db {snr_db}")));
    }
    let noise_rms = noise.rms();
    if noise_rms <= MIN_NOISE_RMS {
        return Err(Error::SilentNoise(noise_rms));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = rng.random_range(0..noise.len());
    let src = noise.samples();
    let segment: Vec<f32> = (0..buffer.len())
        .map(|i| src[(offset + i) % src.len()])
        .collect();
    let segment_rms = rms(&segment);
    if segment_rms <= MIN_NOISE_RMS {
        return Err(Error::SilentNoise(segment_rms));
    }

    let gain = buffer.rms() / (segment_rms * 10f64.powf(snr_db / 20.0));
    let mixed = buffer
        .samples()
        .iter()
        .zip(&segment)
        .map(|(&s, &n)| (s as f64 + gain * n as f64) as f32)
        .collect();
    AudioBuffer::new(mixed, buffer.sample_rate_hz())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise(len: usize, seed: u64) -> AudioBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AudioBuffer::new(
            (0..len).map(|_| rng.random_range(-0.3f32..0.3)).collect(),
            16000,
        )
        .unwrap()
    }

    fn signal() -> AudioBuffer {
        let s: Vec<f64> = (0..8000)
            .map(|n| 0.4 * (2.0 * std::f64::consts::PI * 220.0 * n as f64 / 16000.0).sin())
            .collect();
        AudioBuffer::from_f64(&s, 16000).unwrap()
    }

    fn scaled_noise_rms(sig: &AudioBuffer, mixed: &AudioBuffer) -> f64 {
        let diff: Vec<f32> = mixed
            .samples()
            .iter()
            .zip(sig.samples())
            .map(|(m, s)| ((*m as f64) - (*s as f64)) as f32)
            .collect();
        rms(&diff)
    }

    #[test]
    fn zero_db_matches_signal_power() {
        let sig = signal();
        let mixed = mix_noise(&sig, &noise(3000, 1), 0.0, 42).unwrap();
        let ratio = scaled_noise_rms(&sig, &mixed) / sig.rms();
        assert!((ratio - 1.0).abs() < 1e-6, "{ratio}");
    }

    #[test]
    fn twenty_db_is_a_tenth() {
        let sig = signal();
        let mixed = mix_noise(&sig, &noise(20000, 2), 20.0, 7).unwrap();
        let ratio = scaled_noise_rms(&sig, &mixed) / sig.rms();
        assert!((ratio - 0.1).abs() < 1e-6, "{ratio}");
    }

    #[test]
    fn seeded_offsets_are_reproducible() {
        let sig = signal();
        let n = noise(5000, 3);
        assert_eq!(
            mix_noise(&sig, &n, 10.0, 5).unwrap(),
            mix_noise(&sig, &n, 10.0, 5).unwrap()
        );
        assert_ne!(
            mix_noise(&sig, &n, 10.0, 5).unwrap(),
            mix_noise(&sig, &n, 10.0, 6).unwrap()
        );
    }

    #[test]
    fn silent_noise_and_rate_mismatch() {
        let sig = signal();
        let silent = AudioBuffer::new(vec![0.0; 100], 16000).unwrap();
        assert!(matches!(
            mix_noise(&sig, &silent, 5.0, 0),
            Err(Error::SilentNoise(_))
        ));
        let other = AudioBuffer::new(vec![0.1; 100], 8000).unwrap();
        assert!(matches!(
            mix_noise(&sig, &other, 5.0, 0),
            Err(Error::SampleRateMismatch { .. })
        ));
    }

    #[test]
    fn utterance_seeds_differ() {
        assert_ne!(utterance_seed(1, "a"), utterance_seed(1, "b"));
        assert_ne!(utterance_seed(1, "a"), utterance_seed(2, "a"));
        assert_eq!(utterance_seed(9, "x"), utterance_seed(9, "x"));
        // FNV-1a offset basis for the empty string
        assert_eq!(fnv1a(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a(b"a"), 0xaf63_dc4c_8601_ec8c);
    }
}
