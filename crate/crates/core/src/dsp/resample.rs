//! Polyphase Kaiser-windowed sinc resampling.
//!
//! A real ratio is first replaced by a continued-fraction convergent `p/q`
//! with `q <= 1000`. Output sample `n` then sits at input position
//! `n * q / p`, whose fractional part is always one of `p` phases, so one
//! 64-tap filter per phase is precomputed. The low-pass cutoff is the lower
//! of the two Nyquist limits.
//!
//! The output keeps the input's sample-rate label. Played back at that rate,
//! resampling by `r` stretches the duration by `r` and scales every frequency
//! by `1 / r`.

use crate::audio::AudioBuffer;
use crate::dsp::window::kaiser;
use crate::error::{Error, Result};

pub const MAX_DENOMINATOR: u64 = 1000;
const TAPS: usize = 64;
const HALF_TAPS: usize = TAPS / 2;
const KAISER_BETA: f64 = 8.6;
const MIN_RATIO: f64 = 0.1;
const MAX_RATIO: f64 = 10.0;

/// A positive rational number `num / den` in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl std::fmt::Display for Ratio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Best continued-fraction convergent of `x` with denominator at most `max_den`.
pub fn rational_approximation(x: f64, max_den: u64) -> Ratio {
    assert!(x.is_finite() && x > 0.0, "ratio must be positive and finite");
    assert!(max_den >= 1);
    // (h_{k-2}, h_{k-1}) and (k_{k-2}, k_{k-1})
    let (mut h_prev, mut h) = (0u64, 1u64);
    let (mut k_prev, mut k) = (1u64, 0u64);
    let mut rest = x;
    loop {
        let a = rest.floor();
        let a_int = a as u64;
        let h_next = a_int.saturating_mul(h).saturating_add(h_prev);
        let k_next = a_int.saturating_mul(k).saturating_add(k_prev);
        if k_next > max_den {
            break;
        }
        (h_prev, h, k_prev, k) = (h, h_next, k, k_next);
        let frac = rest - a;
        if frac < 1e-12 || (h as f64 / k as f64 - x).abs() <= 1e-12 * x {
            break;
        }
        rest = 1.0 / frac;
    }
    if h == 0 {
        // x < 1 / max_den; the closest representable value
        return Ratio {
            num: 1,
            den: max_den,
        };
    }
    Ratio { num: h, den: k }
}

/// Precomputed polyphase filter bank for one rational ratio.
#[derive(Debug, Clone)]
pub struct Resampler {
    ratio: Ratio,
    /// `phases[phi][j]` weights input sample `floor(t) + j - (HALF_TAPS - 1)`
    /// for an output position `t` whose fractional part is `phi / num`.
    phases: Vec<[f64; TAPS]>,
}

impl Resampler {
    pub fn new(ratio: f64) -> Result<Self> {
        if !(MIN_RATIO..=MAX_RATIO).contains(&ratio) || !ratio.is_finite() {
            return Err(Error::RatioOutOfRange(ratio));
        }
        let ratio = rational_approximation(ratio, MAX_DENOMINATOR);
        let cutoff = ratio.value().min(1.0);
        let phases = (0..ratio.num)
            .map(|phi| {
                let frac = phi as f64 / ratio.num as f64;
                let mut taps = [0.0; TAPS];
                for (j, tap) in taps.iter_mut().enumerate() {
                    let offset = j as f64 - (HALF_TAPS as f64 - 1.0);
                    let u = frac - offset;
                    *tap = cutoff * sinc(cutoff * u) * kaiser(u / HALF_TAPS as f64, KAISER_BETA);
                }
                let sum: f64 = taps.iter().sum();
                taps.iter_mut().for_each(|t| *t /= sum);
                taps
            })
            .collect();
        Ok(Self { ratio, phases })
    }

    /// The rational ratio actually realized.
    pub fn ratio(&self) -> Ratio {
        self.ratio
    }

    /// Resamples `input` into exactly `out_len` samples. Samples outside the
    /// input are treated as zero.
    pub fn process(&self, input: &[f32], out_len: usize) -> Vec<f32> {
        let Ratio { num, den } = self.ratio;
        let len = input.len() as i64;
        (0..out_len as u64)
            .map(|n| {
                let pos = n * den;
                let base = (pos / num) as i64 - (HALF_TAPS as i64 - 1);
                let taps = &self.phases[(pos % num) as usize];
                let mut acc = 0.0f64;
                if base >= 0 && base + TAPS as i64 <= len {
                    let window = &input[base as usize..base as usize + TAPS];
                    for (x, h) in window.iter().zip(taps) {
                        acc += *x as f64 * h;
                    }
                } else {
                    for (j, h) in taps.iter().enumerate() {
                        let idx = base + j as i64;
                        if (0..len).contains(&idx) {
                            acc += input[idx as usize] as f64 * h;
                        }
                    }
                }
                acc as f32
            })
            .collect()
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

pub(crate) fn resample_to_len(
    buffer: &AudioBuffer,
    ratio: f64,
    out_len: usize,
) -> Result<(AudioBuffer, Ratio)> {
    if buffer.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let resampler = Resampler::new(ratio)?;
    let out = resampler.process(buffer.samples(), out_len);
    Ok((
        AudioBuffer::new(out, buffer.sample_rate_hz())?,
        resampler.ratio(),
    ))
}

/// Resamples to `round(len * ratio)` samples, keeping the sample-rate label.
pub fn resample_sinc(buffer: &AudioBuffer, ratio: f64) -> Result<AudioBuffer> {
    let out_len = (buffer.len() as f64 * ratio).round() as usize;
    resample_to_len(buffer, ratio, out_len).map(|(b, _)| b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn convergents_of_table_factors_are_exact() {
        for (alpha, num, den) in [
            (0.9, 10, 9),
            (1.1, 10, 11),
            (0.8, 5, 4),
            (1.2, 5, 6),
            (0.83, 100, 83),
            (1.17, 100, 117),
            (0.93, 100, 93),
            (1.07, 100, 107),
        ] {
            assert_eq!(
                rational_approximation(1.0 / alpha, MAX_DENOMINATOR),
                Ratio { num, den },
                "alpha {alpha}"
            );
        }
        assert_eq!(
            rational_approximation(1.0, 1000),
            Ratio { num: 1, den: 1 }
        );
    }

    #[test]
    fn irrational_ratio_respects_denominator_bound() {
        let r = rational_approximation(std::f64::consts::PI, 1000);
        assert_eq!(r, Ratio { num: 355, den: 113 });
        let r = rational_approximation(std::f64::consts::SQRT_2, 1000);
        assert!(r.den <= 1000);
        assert!((r.value() - std::f64::consts::SQRT_2).abs() < 1e-5);
    }

    #[test]
    fn unit_ratio_is_identity() {
        let samples: Vec<f32> = (0..2000).map(|i| ((i * 7919) % 101) as f32 / 101.0 - 0.5).collect();
        let buf = AudioBuffer::new(samples.clone(), 16000).unwrap();
        let out = resample_sinc(&buf, 1.0).unwrap();
        let max_err = out
            .samples()
            .iter()
            .zip(&samples)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f32, f32::max);
        assert!(max_err <= 1e-6, "{max_err}");
    }

    #[test]
    fn length_contract_example() {
        let buf = AudioBuffer::new(vec![0.0; 16000], 16000).unwrap();
        assert_eq!(resample_sinc(&buf, 1.25).unwrap().len(), 20000);
    }

    #[test]
    fn rejects_bad_input() {
        let buf = AudioBuffer::new(vec![0.0; 10], 16000).unwrap();
        assert!(matches!(
            resample_sinc(&buf, 0.05),
            Err(Error::RatioOutOfRange(_))
        ));
        assert!(matches!(
            resample_sinc(&buf, 11.0),
            Err(Error::RatioOutOfRange(_))
        ));
        let empty = AudioBuffer::new(vec![], 16000).unwrap();
        assert!(matches!(resample_sinc(&empty, 1.0), Err(Error::EmptyBuffer)));
    }

    #[test]
    fn dc_is_preserved_away_from_edges() {
        for ratio in [0.8, 1.1, 1.25, 2.0] {
            let buf = AudioBuffer::new(vec![0.5; 4000], 16000).unwrap();
            let out = resample_sinc(&buf, ratio).unwrap();
            let mid = &out.samples()[100..out.len() - 100];
            assert!(mid.iter().all(|s| (s - 0.5).abs() < 1e-4), "ratio {ratio}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn output_length_is_rounded_product(len in 400usize..50_000, ratio in 0.8f64..1.25) {
            let buf = AudioBuffer::new(vec![0.0; len], 16000).unwrap();
            let out = resample_sinc(&buf, ratio).unwrap();
            prop_assert_eq!(out.len(), (len as f64 * ratio).round() as usize);
        }
    }
}
