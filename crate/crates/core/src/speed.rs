//! Speed perturbation: `y(t) = x(alpha * t)`.
//!
//! Realized as resampling by `1 / alpha` while keeping the sample-rate
//! label, so `alpha > 1` yields a shorter signal with every frequency scaled
//! up by `alpha`, and `alpha < 1` a longer one scaled down.

use crate::audio::AudioBuffer;
use crate::dsp::resample::resample_to_len;
use crate::dsp::{rational_approximation, Ratio, MAX_DENOMINATOR};
use crate::error::{Error, Result};

/// Bounds of the perturbation factor outside which perturbed speech becomes
/// audibly distorted.
pub const NO_DISTORTION_RANGE: (f64, f64) = (0.8, 1.2);

pub(crate) fn check_no_distortion(alpha: f64) -> Result<()> {
    // tolerate representation error of the endpoints
    let (lo, hi) = NO_DISTORTION_RANGE;
    if alpha < lo - 1e-12 || alpha > hi + 1e-12 {
        return Err(Error::AlphaOutsideNoDistortionRange(alpha));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedSpec {
    alpha: f64,
    strict_range: bool,
}

impl SpeedSpec {
    /// A factor restricted to the no-distortion range.
    pub fn new(alpha: f64) -> Result<Self> {
        Self::with_range_check(alpha, true)
    }

    pub fn with_range_check(alpha: f64, strict_range: bool) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidAlpha(alpha));
        }
        if strict_range {
            check_no_distortion(alpha)?;
        }
        Ok(Self {
            alpha,
            strict_range,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn strict_range(&self) -> bool {
        self.strict_range
    }

    /// The rational resampling ratio `p/q` that approximates `1 / alpha`.
    pub fn realized_ratio(&self) -> Ratio {
        rational_approximation(1.0 / self.alpha, MAX_DENOMINATOR)
    }

    pub fn output_len(&self, input_len: usize) -> usize {
        (input_len as f64 / self.alpha).round() as usize
    }
}

pub fn speed_perturb(buffer: &AudioBuffer, spec: &SpeedSpec) -> Result<AudioBuffer> {
    if buffer.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let (out, _) = resample_to_len(buffer, 1.0 / spec.alpha, spec.output_len(buffer.len()))?;
    Ok(out)
}
