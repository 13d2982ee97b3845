//! Seeded synthetic corpus: per-speaker harmonic sources shaped by a
//! speaker-specific formant envelope, with low-level noise.
//!
//! Useful for exercising the pipeline without real recordings. Every
//! sample depends only on the seed and the speaker/utterance indices.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audio::{write_wav, AudioBuffer, Encoding, CANONICAL_RATE_HZ};
use crate::corpus::{Manifest, ManifestEntry};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub speakers: usize,
    pub utterances_per_speaker: usize,
    pub duration_s: f64,
    pub seed: u64,
    /// Noise RMS relative to the voiced signal RMS.
    pub noise_level: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            speakers: 5,
            utterances_per_speaker: 4,
            duration_s: 1.0,
            seed: 7,
            noise_level: 0.03,
        }
    }
}

#[derive(Debug, Clone)]
struct Voice {
    f0_hz: f64,
    formants: [(f64, f64); 4],
}

fn voice(seed: u64, speaker: usize) -> Voice {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (speaker as u64).wrapping_mul(0x9e37_79b9));
    let f0_hz = rng.random_range(110.0..230.0);
    let formants = [
        (rng.random_range(450.0..850.0), 90.0),
        (rng.random_range(1100.0..2200.0), 120.0),
        (rng.random_range(2400.0..3300.0), 180.0),
        (rng.random_range(3500.0..4600.0), 250.0),
    ];
    Voice { f0_hz, formants }
}

fn envelope(v: &Voice, f: f64) -> f64 {
    let resonances: f64 = v
        .formants
        .iter()
        .map(|&(c, bw)| 1.0 / (1.0 + ((f - c) / bw).powi(2)))
        .sum();
    // spectral tilt keeps the upper band weak but present
    resonances + 0.02 * (1.0 + f / 1000.0).powf(-1.0)
}

/// One utterance of `speaker` at the canonical rate.
pub fn synth_utterance(cfg: &SynthConfig, speaker: usize, utterance: usize) -> Result<AudioBuffer> {
    let v = voice(cfg.seed, speaker);
    let mut rng = ChaCha8Rng::seed_from_u64(
        cfg.seed
            ^ (speaker as u64).wrapping_mul(0x9e37_79b9)
            ^ ((utterance as u64 + 1) << 32),
    );
    let rate = CANONICAL_RATE_HZ as f64;
    let len = (cfg.duration_s * rate).round() as usize;
    if len == 0 {
        return Err(Error::EmptyBuffer);
    }
    let f0 = v.f0_hz * rng.random_range(0.97..1.03);
    let vibrato_hz = rng.random_range(4.0..6.0);
    let syllable_hz = rng.random_range(3.0..5.0);
    let n_harmonics = ((rate / 2.0 - 200.0) / f0).floor() as usize;
    let partials: Vec<(usize, f64, f64)> = (1..=n_harmonics)
        .map(|k| (k, envelope(&v, k as f64 * f0), rng.random_range(0.0..2.0 * PI)))
        .collect();

    let mut phase = 0.0;
    let mut voiced = Vec::with_capacity(len);
    for n in 0..len {
        let t = n as f64 / rate;
        let inst_f0 = f0 * (1.0 + 0.01 * (2.0 * PI * vibrato_hz * t).sin());
        phase += 2.0 * PI * inst_f0 / rate;
        let amp = 0.6 + 0.4 * (2.0 * PI * syllable_hz * t).sin();
        let s: f64 = partials
            .iter()
            .map(|&(k, a, p)| a * (k as f64 * phase + p).sin())
            .sum();
        voiced.push(amp * s);
    }
    let voiced_rms = (voiced.iter().map(|x| x * x).sum::<f64>() / len as f64).sqrt();
    let noise_rms = cfg.noise_level * voiced_rms;
    // uniform noise with the requested RMS
    let half_width = noise_rms * 3f64.sqrt();
    let mixed: Vec<f64> = voiced
        .iter()
        .map(|x| x + rng.random_range(-half_width..=half_width))
        .collect();
    let peak = mixed.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let scale = if peak > 0.0 { 0.5 / peak } else { 0.0 };
    AudioBuffer::from_f64(
        &mixed.iter().map(|x| x * scale).collect::<Vec<_>>(),
        CANONICAL_RATE_HZ,
    )
}

/// Writes `spkNN/spkNN_uMM.wav` files and `manifest.csv` under `dir`.
pub fn write_synthetic_corpus(dir: impl AsRef<Path>, cfg: &SynthConfig) -> Result<Manifest> {
    let dir = dir.as_ref();
    let mut entries = Vec::with_capacity(cfg.speakers * cfg.utterances_per_speaker);
    for s in 0..cfg.speakers {
        let spk_id = format!("spk{s:02}");
        let spk_dir = dir.join(&spk_id);
        fs::create_dir_all(&spk_dir).map_err(|e| Error::io(&spk_dir, e))?;
        for u in 0..cfg.utterances_per_speaker {
            let utt_id = format!("{spk_id}_u{u:02}");
            let path = spk_dir.join(format!("{utt_id}.wav"));
            let audio = synth_utterance(cfg, s, u)?;
            write_wav(&audio, &path, Encoding::Float32)?;
            entries.push(ManifestEntry {
                utt_id,
                spk_id: spk_id.clone(),
                path,
                duration_s: Some(audio.duration_s()),
            });
        }
    }
    let manifest = Manifest::new(entries)?;
    manifest.write_csv(dir.join("manifest.csv"))?;
    Ok(manifest)
}
