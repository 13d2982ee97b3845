//! Window tables.

use std::f64::consts::PI;

/// Periodic Hann window of length `n` (the DFT-even variant used for
/// overlap-add analysis).
pub fn hann_periodic(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Symmetric Hann window of length `n`.
pub fn hann_symmetric(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Zeroth-order modified Bessel function of the first kind, by power series.
pub fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Kaiser window evaluated at normalized position `v` in `[-1, 1]`.
pub fn kaiser(v: f64, beta: f64) -> f64 {
    if v.abs() > 1.0 {
        return 0.0;
    }
    bessel_i0(beta * (1.0 - v * v).sqrt()) / bessel_i0(beta)
}
