//! Fixtures shared by the criterion benches.

use spkaug_core::AudioBuffer;

/// `seconds` of a three-partial harmonic signal at 16 kHz.
pub fn harmonic_signal(seconds: f64) -> AudioBuffer {
    let len = (seconds * 16000.0) as usize;
    let samples: Vec<f64> = (0..len)
        .map(|n| {
            let t = n as f64 / 16000.0;
            [(150.0, 0.5), (300.0, 0.25), (450.0, 0.125)]
                .iter()
                .map(|(f, a)| a * (2.0 * std::f64::consts::PI * f * t).sin())
                .sum()
        })
        .collect();
    AudioBuffer::from_f64(&samples, 16000).expect("valid rate")
}
