//! Utterance embeddings: a built-in cepstral baseline and an importer for
//! vectors produced by an external speaker model.
//!
//! The baseline is a stand-in for a trained speaker encoder. It summarizes
//! 20 mel-cepstral coefficients by their mean and standard deviation over
//! frames and L2-normalizes the result. It responds to spectral-envelope
//! changes the way a speaker encoder would, but curve comparisons made with
//! it are only qualitative.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::audio::AudioBuffer;
use crate::dsp::{stft, StftParams};
use crate::error::{Error, Result};

pub const BASELINE_DIM: usize = 40;
const MEL_FILTERS: usize = 24;
const CEPSTRA: usize = 20;
const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f64>,
    normalized: bool,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self {
            values,
            normalized: false,
        }
    }

    /// Scales `values` to unit Euclidean norm.
    pub fn normalized(values: Vec<f64>) -> Result<Self> {
        let norm = l2(&values);
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::ZeroVector(None));
        }
        Ok(Self {
            values: values.into_iter().map(|v| v / norm).collect(),
            normalized: true,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm(&self) -> f64 {
        l2(&self.values)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::new(self.values.iter().map(|v| v * c).collect())
    }
}

pub(crate) fn l2(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters, equally spaced on the mel scale over `[0, upper_hz]`,
/// as dense weight rows over the FFT bins.
fn mel_filterbank(n_filters: usize, n_bins: usize, bin_hz: f64, upper_hz: f64) -> Vec<Vec<f64>> {
    let top = hz_to_mel(upper_hz);
    let edges: Vec<f64> = (0..n_filters + 2)
        .map(|i| mel_to_hz(top * i as f64 / (n_filters + 1) as f64))
        .collect();
    (0..n_filters)
        .map(|m| {
            let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..n_bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    if f > lo && f <= mid {
                        (f - lo) / (mid - lo)
                    } else if f > mid && f < hi {
                        (hi - f) / (hi - mid)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// 40-dimensional cepstral summary of an utterance of at least 0.5 s.
pub fn baseline_embedding(buffer: &AudioBuffer) -> Result<EmbeddingVector> {
    let rate = buffer.sample_rate_hz() as f64;
    let needed = (rate * 0.5).ceil() as usize;
    if buffer.len() < needed {
        return Err(Error::BufferTooShort {
            needed,
            actual: buffer.len(),
        });
    }
    let params = StftParams::default();
    let spec = stft(buffer, &params);
    let bank = mel_filterbank(
        MEL_FILTERS,
        params.n_bins(),
        rate / params.fft_size() as f64,
        rate / 2.0,
    );
    // orthonormal DCT-II rows 1..=CEPSTRA
    let dct: Vec<Vec<f64>> = (1..=CEPSTRA)
        .map(|n| {
            (0..MEL_FILTERS)
                .map(|m| {
                    (2.0 / MEL_FILTERS as f64).sqrt()
                        * (std::f64::consts::PI * n as f64 * (m as f64 + 0.5)
                            / MEL_FILTERS as f64)
                            .cos()
                })
                .collect()
        })
        .collect();

    let cepstra: Vec<Vec<f64>> = spec
        .frames
        .iter()
        .map(|frame| {
            let power: Vec<f64> = frame.iter().map(|c| c.norm_sqr()).collect();
            let log_mel: Vec<f64> = bank
                .iter()
                .map(|w| {
                    let e: f64 = w.iter().zip(&power).map(|(a, b)| a * b).sum();
                    e.max(LOG_FLOOR).ln()
                })
                .collect();
            dct.iter()
                .map(|row| row.iter().zip(&log_mel).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();

    let n = cepstra.len() as f64;
    let mut summary = Vec::with_capacity(BASELINE_DIM);
    let means: Vec<f64> = (0..CEPSTRA)
        .map(|c| cepstra.iter().map(|f| f[c]).sum::<f64>() / n)
        .collect();
    summary.extend_from_slice(&means);
    summary.extend((0..CEPSTRA).map(|c| {
        (cepstra.iter().map(|f| (f[c] - means[c]).powi(2)).sum::<f64>() / n).sqrt()
    }));
    EmbeddingVector::normalized(summary)
}

/// Reads `utt_id v1 v2 ...` lines; `#` starts a comment line. Vectors are
/// L2-normalized and must all share one dimension.
pub fn import_embeddings(path: impl AsRef<Path>) -> Result<BTreeMap<String, EmbeddingVector>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = BTreeMap::new();
    let mut dim: Option<(usize, String)> = None;
    for (i, line) in text.lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let utt_id = fields.next().expect("non-empty line").to_string();
        let values = fields
            .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .filter(|v| !v.is_empty())
            .ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: line_no,
                message: format!("expected `{utt_id}` followed by decimal values"),
            })?;
        match &dim {
            None => dim = Some((values.len(), utt_id.clone())),
            Some((d, first)) if *d != values.len() => {
                return Err(Error::DimensionMismatch(format!(
                    "{utt_id:?} has {} values, {first:?} has {d}",
                    values.len()
                )))
            }
            _ => {}
        }
        let vector = EmbeddingVector::normalized(values)
            .map_err(|_| Error::ZeroVector(Some(utt_id.clone())))?;
        if out.insert(utt_id.clone(), vector).is_some() {
            return Err(Error::DuplicateUtterance(utt_id));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sine(freq: f64, len: usize) -> AudioBuffer {
        let s: Vec<f64> = (0..len)
            .map(|n| 0.5 * (2.0 * std::f64::consts::PI * freq * n as f64 / 16000.0).sin())
            .collect();
        AudioBuffer::from_f64(&s, 16000).unwrap()
    }

    fn white(len: usize, seed: u64) -> AudioBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AudioBuffer::new((0..len).map(|_| rng.random_range(-0.5f32..0.5)).collect(), 16000)
            .unwrap()
    }

    #[test]
    fn mel_scale_roundtrip() {
        for hz in [0.0, 100.0, 1000.0, 8000.0] {
            assert!((mel_to_hz(hz_to_mel(hz)) - hz).abs() < 1e-9);
        }
        assert!((hz_to_mel(1000.0) - 999.985_6).abs() < 1e-3);
    }

    #[test]
    fn filterbank_covers_band() {
        let bank = mel_filterbank(24, 257, 31.25, 8000.0);
        assert_eq!(bank.len(), 24);
        for row in &bank {
            assert!(row.iter().any(|&w| w > 0.0));
            assert!(row.iter().all(|&w| (0.0..=1.0).contains(&w)));
        }
    }

    #[test]
    fn baseline_shape_and_norm() {
        let e = baseline_embedding(&white(8000, 1)).unwrap();
        assert_eq!(e.dim(), 40);
        assert!((e.norm() - 1.0).abs() < 1e-6);
        assert!(e.is_normalized());
    }

    #[test]
    fn baseline_is_deterministic() {
        let x = sine(300.0, 16000);
        assert_eq!(baseline_embedding(&x).unwrap(), baseline_embedding(&x).unwrap());
    }

    #[test]
    fn baseline_rejects_short_input() {
        assert!(matches!(
            baseline_embedding(&sine(300.0, 7999)),
            Err(Error::BufferTooShort { needed: 8000, .. })
        ));
    }

    #[test]
    fn import_normalizes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.txt");
        let row = |id: &str, scale: f64| {
            let vals: Vec<String> = (0..256).map(|i| format!("{}", scale * (i as f64 - 100.5))).collect();
            format!("{id} {}\n", vals.join(" "))
        };
        fs::write(&p, format!("# model x\n{}{}\n{}", row("a", 1.0), row("b", 0.01), row("c", -3.0))).unwrap();
        let m = import_embeddings(&p).unwrap();
        assert_eq!(m.len(), 3);
        assert!(m.values().all(|e| e.dim() == 256 && (e.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn import_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.txt");
        fs::write(&p, "a 1 2 3\nb 1 2\n").unwrap();
        assert!(matches!(import_embeddings(&p), Err(Error::DimensionMismatch(m)) if m.contains("\"b\"")));
        fs::write(&p, "a 1 2 3\nz 0 0 0\n").unwrap();
        assert!(matches!(import_embeddings(&p), Err(Error::ZeroVector(Some(u))) if u == "z"));
        fs::write(&p, "a 1 x 3\n").unwrap();
        assert!(matches!(import_embeddings(&p), Err(Error::Parse { line: 1, .. })));
        fs::write(&p, "a\n").unwrap();
        assert!(matches!(import_embeddings(&p), Err(Error::Parse { .. })));
        fs::write(&p, "a 1 2\na 2 1\n").unwrap();
        assert!(matches!(import_embeddings(&p), Err(Error::DuplicateUtterance(_))));
    }
}
