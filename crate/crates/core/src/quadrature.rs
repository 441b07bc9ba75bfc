//! Composite quadrature on uniform grids.

use crate::error::{Result, VacuaError};

/// Composite Simpson rule for samples `y` with spacing `h`.
///
/// An even number of samples closes with the 3/8 rule on the last four points.
pub fn simpson(y: &[f64], h: f64) -> Result<f64> {
    let n = y.len();
    if n < 4 {
        return Err(VacuaError::Parameter(format!(
            "quadrature needs at least 4 samples, got {n}"
        )));
    }
    let simpson_part = |y: &[f64]| -> f64 {
        let mut s = y[0] + y[y.len() - 1];
        for (i, v) in y.iter().enumerate().take(y.len() - 1).skip(1) {
            s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
        }
        s * h / 3.0
    };
    if n % 2 == 1 {
        return Ok(simpson_part(y));
    }
    let m = n - 3;
    let tail = 3.0 * h / 8.0 * (y[m - 1] + 3.0 * y[m] + 3.0 * y[m + 1] + y[m + 2]);
    let head = if m >= 3 { simpson_part(&y[..m]) } else { 0.0 };
    Ok(head + tail)
}

/// Odd sample count resolving `rate` (rad per unit time) with ~64 points per period.
pub fn resolved_samples(length: f64, rate: f64, min: usize, max: usize) -> usize {
    let per_period = 64.0;
    let want = (length * rate.abs() / (2.0 * std::f64::consts::PI) * per_period).ceil();
    let n = if want.is_finite() {
        (want as usize).clamp(min, max)
    } else {
        max
    };
    n | 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::uniform_grid;
    use std::f64::consts::PI;

    #[test]
    fn sine_squared_over_period() {
        for n in [101, 100, 257, 128] {
            let t = uniform_grid(0.0, 2.0 * PI, n);
            let y: Vec<f64> = t.iter().map(|t| t.sin().powi(2)).collect();
            let z = simpson(&y, t[1] - t[0]).unwrap();
            assert!((z - PI).abs() < 1e-6, "n = {n}: {z}");
        }
    }

    #[test]
    fn cubic_is_exact() {
        for n in [5, 6, 7, 10] {
            let t = uniform_grid(-1.0, 2.0, n);
            let y: Vec<f64> = t.iter().map(|t| t * t * t - t + 2.0).collect();
            let z = simpson(&y, t[1] - t[0]).unwrap();
            assert!((z - (15.0 / 4.0 - 1.5 + 6.0)).abs() < 1e-12, "n = {n}: {z}");
        }
    }

    #[test]
    fn too_few_samples() {
        assert!(simpson(&[1.0, 2.0, 3.0], 0.1).is_err());
    }

    #[test]
    fn sample_counts_are_odd() {
        assert_eq!(resolved_samples(10.0, 0.0, 33, 1000) % 2, 1);
        assert!(resolved_samples(100.0, 2.0, 33, 100_001) > 2000);
    }
}
