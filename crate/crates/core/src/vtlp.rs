//! Vocal tract length perturbation.
//!
//! The frequency axis is warped by a piecewise-linear map: frequencies up to
//! the boundary `f0` are scaled by `alpha`, and the band `(f0, fmax]` is
//! mapped linearly onto `(alpha * f0, fmax]` so that `fmax` stays fixed.
//!
//! The warp is applied frame by frame in the STFT domain. Each output bin
//! pulls from the inverse-warped source frequency: the magnitude is linearly
//! interpolated between the two neighbouring source bins, and the phase is
//! advanced from frame to frame at the warped instantaneous frequency of the
//! nearest source bin. Propagating phase this way makes a stationary tone at
//! `f` come out at `warp(f)`; copying source phases frame by frame would keep
//! the inter-frame phase advance of `f` and pull the tone back onto a grid
//! of `sample_rate / hop` around it. With `alpha = 1` every output phase
//! equals the source phase modulo 2π, so the identity warp reduces to a
//! plain STFT round trip. Duration is unchanged.

use std::f64::consts::{PI, TAU};

use crate::audio::AudioBuffer;
use crate::dsp::{istft, stft, Complex64, StftParams};
use crate::error::{Error, Result};

pub const DEFAULT_F0_HZ: f64 = 4800.0;
pub const DEFAULT_FMAX_HZ: f64 = 8000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpParams {
    alpha: f64,
    f0_hz: f64,
    fmax_hz: f64,
    stft: StftParams,
}

impl WarpParams {
    /// Warp with the default boundary (4800 Hz) and upper frequency (8000 Hz).
    pub fn new(alpha: f64) -> Result<Self> {
        Self::with_bounds(alpha, DEFAULT_F0_HZ, DEFAULT_FMAX_HZ)
    }

    pub fn with_bounds(alpha: f64, f0_hz: f64, fmax_hz: f64) -> Result<Self> {
        let params = Self {
            alpha,
            f0_hz,
            fmax_hz,
            stft: StftParams::default(),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_stft(mut self, stft: StftParams) -> Self {
        self.stft = stft;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::InvalidAlpha(self.alpha));
        }
        if !(self.f0_hz > 0.0 && self.f0_hz < self.fmax_hz && self.fmax_hz.is_finite()) {
            return Err(Error::InvalidWarp(format!(
                "need 0 < f0 < fmax, got f0 = {} and fmax = {}",
                self.f0_hz, self.fmax_hz
            )));
        }
        if self.alpha * self.f0_hz >= self.fmax_hz {
            return Err(Error::InvalidWarp(format!(
                "alpha * f0 = {} must stay below fmax = {}",
                self.alpha * self.f0_hz,
                self.fmax_hz
            )));
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn f0_hz(&self) -> f64 {
        self.f0_hz
    }

    pub fn fmax_hz(&self) -> f64 {
        self.fmax_hz
    }

    pub fn stft(&self) -> &StftParams {
        &self.stft
    }

    fn warp(&self, f: f64) -> f64 {
        let knee = self.alpha * self.f0_hz;
        if f <= self.f0_hz {
            self.alpha * f
        } else {
            knee + (self.fmax_hz - knee) * ((f - self.f0_hz) / (self.fmax_hz - self.f0_hz))
        }
    }

    fn unwarp(&self, fp: f64) -> f64 {
        let knee = self.alpha * self.f0_hz;
        if fp <= knee {
            fp / self.alpha
        } else {
            self.f0_hz + (self.fmax_hz - self.f0_hz) * ((fp - knee) / (self.fmax_hz - knee))
        }
    }

    fn check_range(&self, f: f64) -> Result<()> {
        if !(0.0..=self.fmax_hz).contains(&f) {
            return Err(Error::FrequencyOutOfRange {
                freq: f,
                fmax: self.fmax_hz,
            });
        }
        Ok(())
    }
}

pub fn warp_frequency(f: f64, params: &WarpParams) -> Result<f64> {
    params.validate()?;
    params.check_range(f)?;
    Ok(params.warp(f))
}

pub fn inverse_warp_frequency(fp: f64, params: &WarpParams) -> Result<f64> {
    params.validate()?;
    params.check_range(fp)?;
    Ok(params.unwarp(fp))
}

fn principal_arg(x: f64) -> f64 {
    x - TAU * ((x + PI) / TAU).floor()
}

pub fn vtlp_perturb(buffer: &AudioBuffer, params: &WarpParams) -> Result<AudioBuffer> {
    params.validate()?;
    if buffer.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let rate = buffer.sample_rate_hz() as f64;
    if (rate - 2.0 * params.fmax_hz).abs() > 1e-9 {
        return Err(Error::SampleRateMismatch {
            expected: 2.0 * params.fmax_hz,
            actual: rate,
        });
    }

    let mut spec = stft(buffer, &params.stft);
    let n_bins = spec.n_bins();
    let fft_size = params.stft.fft_size() as f64;
    let hop = params.stft.hop() as f64;
    let bin_hz = rate / fft_size;

    // source position (fractional bin) and nearest bin for every output bin
    let sources: Vec<(usize, usize, f64, usize)> = (0..n_bins)
        .map(|k| {
            let fp = (k as f64 * bin_hz).min(params.fmax_hz);
            let pos = (params.unwarp(fp) / bin_hz).clamp(0.0, (n_bins - 1) as f64);
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n_bins - 1);
            (lo, hi, pos - lo as f64, pos.round() as usize)
        })
        .collect();

    let mut prev_src_phase = vec![0.0f64; n_bins];
    let mut out_phase = vec![0.0f64; n_bins];
    for (m, frame) in spec.frames.iter_mut().enumerate() {
        let mags: Vec<f64> = frame.iter().map(|c| c.norm()).collect();
        let phases: Vec<f64> = frame.iter().map(|c| c.arg()).collect();
        for (k, &(lo, hi, t, nearest)) in sources.iter().enumerate() {
            let mag = (1.0 - t) * mags[lo] + t * mags[hi];
            out_phase[k] = if m == 0 {
                phases[nearest]
            } else {
                let expected = TAU * nearest as f64 * hop / fft_size;
                let deviation =
                    principal_arg(phases[nearest] - prev_src_phase[nearest] - expected);
                // may fall slightly outside [0, fmax] near DC and Nyquist;
                // the warp's outer segments extend linearly there
                let inst_hz = (expected + deviation) / (TAU * hop) * rate;
                let advance = TAU * params.warp(inst_hz) * hop / rate;
                (out_phase[k] + advance).rem_euclid(TAU)
            };
            frame[k] = Complex64::from_polar(mag, out_phase[k]);
        }
        prev_src_phase = phases;
    }
    let last = n_bins - 1;
    for frame in spec.frames.iter_mut() {
        frame[0] = Complex64::new(frame[0].re, 0.0);
        frame[last] = Complex64::new(frame[last].re, 0.0);
    }
    istft(&spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(alpha: f64) -> WarpParams {
        WarpParams::new(alpha).unwrap()
    }

    #[test]
    fn warp_examples() {
        assert_eq!(warp_frequency(4000.0, &p(0.9)).unwrap(), 3600.0);
        // (8000 - 5760) / 3200 * 1200 + 5760
        assert!((warp_frequency(6000.0, &p(1.2)).unwrap() - 6600.0).abs() < 1e-9);
        assert!((inverse_warp_frequency(6600.0, &p(1.2)).unwrap() - 6000.0).abs() < 1e-9);
        for f in [0.0, 123.4, 4800.0, 7999.0] {
            assert_eq!(warp_frequency(f, &p(1.0)).unwrap(), f);
            assert_eq!(inverse_warp_frequency(f, &p(1.0)).unwrap(), f);
        }
        for a in [0.8, 0.95, 1.2, 1.6] {
            assert!((warp_frequency(8000.0, &p(a)).unwrap() - 8000.0).abs() <= 1e-9);
            assert!((inverse_warp_frequency(8000.0, &p(a)).unwrap() - 8000.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn invalid_parameters() {
        // alpha * f0 must stay below fmax: 5/3 is the limit with defaults
        assert!(WarpParams::new(1.66).is_ok());
        assert!(matches!(WarpParams::new(5.0 / 3.0), Err(Error::InvalidWarp(_))));
        assert!(matches!(WarpParams::new(0.0), Err(Error::InvalidAlpha(_))));
        assert!(WarpParams::with_bounds(1.0, 9000.0, 8000.0).is_err());
        assert!(WarpParams::with_bounds(1.0, 0.0, 8000.0).is_err());
        assert!(matches!(
            warp_frequency(8000.5, &p(1.1)),
            Err(Error::FrequencyOutOfRange { .. })
        ));
        assert!(matches!(
            inverse_warp_frequency(-1.0, &p(1.1)),
            Err(Error::FrequencyOutOfRange { .. })
        ));
    }

    #[test]
    fn continuity_at_boundary() {
        for a in [0.8, 0.9, 1.1, 1.2] {
            let params = p(a);
            let left = params.warp(4800.0);
            let right = params.warp(4800.0 + 1e-9);
            assert!((left - a * 4800.0).abs() < 1e-9);
            assert!((right - a * 4800.0).abs() < 1e-6);
        }
    }

    #[test]
    fn rate_must_match_fmax() {
        let buf = AudioBuffer::new(vec![0.0; 1000], 22050).unwrap();
        assert!(matches!(
            vtlp_perturb(&buf, &p(1.1)),
            Err(Error::SampleRateMismatch { .. })
        ));
    }

    #[test]
    fn duration_is_preserved() {
        for len in [1, 399, 400, 1601, 16000] {
            let s: Vec<f32> = (0..len).map(|i| ((i % 17) as f32 - 8.0) / 20.0).collect();
            let buf = AudioBuffer::new(s, 16000).unwrap();
            assert_eq!(vtlp_perturb(&buf, &p(0.9)).unwrap().len(), len);
        }
    }

    #[test]
    fn principal_arg_wraps() {
        assert!((principal_arg(3.0 * PI) - PI).abs() < 1e-12 || (principal_arg(3.0 * PI) + PI).abs() < 1e-12);
        assert!((principal_arg(0.5) - 0.5).abs() < 1e-15);
        assert!((principal_arg(-0.5 - TAU) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn unit_alpha_reconstructs_broadband_input() {
        // pseudo-random samples from a fixed LCG
        let mut state = 12345u64;
        let x: Vec<f32> = (0..8000)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 40) as f32 / (1u64 << 24) as f32) - 0.5
            })
            .collect();
        let buf = AudioBuffer::new(x.clone(), 16000).unwrap();
        let y = vtlp_perturb(&buf, &p(1.0)).unwrap();
        let err = x
            .iter()
            .zip(y.samples())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f32, f32::max);
        assert!(err < 1e-4, "{err}");
    }

    proptest! {
        #[test]
        fn warp_is_monotone(alpha in 0.8f64..1.2, f in 0.0f64..7999.0, gap in 1e-3f64..1000.0) {
            let params = p(alpha);
            let g = (f + gap).min(8000.0);
            prop_assert!(params.warp(f) < params.warp(g));
        }

        #[test]
        fn inverse_is_consistent(alpha in 0.8f64..1.2, fp in 0.0f64..8000.0) {
            let params = p(alpha);
            let f = inverse_warp_frequency(fp, &params).unwrap();
            prop_assert!((warp_frequency(f, &params).unwrap() - fp).abs() <= 1e-9);
        }

        #[test]
        fn warp_is_piecewise_linear(alpha in 0.8f64..1.2, a in 0.0f64..1.0, b in 0.0f64..1.0, t in 0.0f64..1.0) {
            let params = p(alpha);
            for (lo, hi) in [(0.0, 4800.0), (4800.0 + 1e-6, 8000.0)] {
                let f = lo + a * (hi - lo);
                let g = lo + b * (hi - lo);
                let mixed = params.warp(t * f + (1.0 - t) * g);
                let lin = t * params.warp(f) + (1.0 - t) * params.warp(g);
                prop_assert!((mixed - lin).abs() <= 1e-9);
            }
        }
    }
}
