//! Screen-angle grids and normalized fringe patterns.

use std::f64::consts::FRAC_PI_2;

use crate::{Error, Result};

/// Checks that a grid is nonempty, strictly increasing and inside `(−π/2, π/2)`.
pub fn validate_grid(theta: &[f64]) -> Result<()> {
    if theta.is_empty() || theta.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidConfig(
            "theta_grid nonempty and strictly increasing".into(),
        ));
    }
    if let Some(t) = theta.iter().find(|t| !(t.abs() < FRAC_PI_2)) {
        return Err(Error::InvalidConfig(format!(
            "theta_grid value {t} outside (-pi/2, pi/2)"
        )));
    }
    Ok(())
}

/// `bins` equally spaced angles covering `[−theta_max, theta_max]`.
///
/// Point `i` is `theta_max · (2i/(bins−1) − 1)`, so an odd bin count puts a
/// sample exactly at zero and, for 181 bins over ±π/3, exactly at ±π/6.
pub fn uniform_grid(bins: usize, theta_max: f64) -> Result<Vec<f64>> {
    if bins < 2 {
        return Err(Error::InvalidConfig(format!(
            "theta_grid nonempty and strictly increasing: an interval grid needs at least 2 bins, got {bins}"
        )));
    }
    if !(theta_max > 0.0 && theta_max < FRAC_PI_2) {
        return Err(Error::InvalidConfig(format!(
            "theta_max {theta_max} must lie in (0, pi/2)"
        )));
    }
    let last = (bins - 1) as f64;
    let grid: Vec<f64> = (0..bins)
        .map(|i| theta_max * (2.0 * i as f64 / last - 1.0))
        .collect();
    validate_grid(&grid)?;
    Ok(grid)
}

/// `(max − min) / (max + min)`; zero for an all-zero pattern.
pub fn visibility(intensity: &[f64]) -> f64 {
    let max = intensity.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = intensity.iter().copied().fold(f64::INFINITY, f64::min);
    if max + min > 0.0 {
        (max - min) / (max + min)
    } else {
        0.0
    }
}

/// Intensity over a screen grid, scaled so its grid-mean is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FringePattern {
    pub theta: Vec<f64>,
    pub intensity: Vec<f64>,
    pub visibility: f64,
}

impl FringePattern {
    pub fn from_raw(theta: Vec<f64>, raw: Vec<f64>) -> Result<Self> {
        if theta.len() != raw.len() {
            return Err(Error::DimensionMismatch {
                expected: theta.len(),
                found: raw.len(),
            });
        }
        if raw.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidConfig(
                "intensity must be finite and nonnegative".into(),
            ));
        }
        let mean = raw.iter().sum::<f64>() / raw.len() as f64;
        if !(mean > 0.0) {
            return Err(Error::InvalidConfig("intensity vanishes on the whole grid".into()));
        }
        let intensity: Vec<f64> = raw.iter().map(|v| v / mean).collect();
        let visibility = visibility(&intensity);
        Ok(Self {
            theta,
            intensity,
            visibility,
        })
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_6};

    #[test]
    fn grid_hits_zero_and_pi_over_six() {
        let g = uniform_grid(181, FRAC_PI_3).unwrap();
        assert_eq!(g.len(), 181);
        assert_eq!(g[90], 0.0);
        assert_eq!(g[135], FRAC_PI_6);
        assert_eq!(g[45], -FRAC_PI_6);
    }

    #[test]
    fn single_bin_grid_rejected() {
        let err = uniform_grid(1, 1.0).unwrap_err().to_string();
        assert!(err.contains("theta_grid nonempty and strictly increasing"), "{err}");
        assert!(uniform_grid(10, 2.0).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(validate_grid(&[]).is_err());
        assert!(validate_grid(&[0.1, 0.1]).is_err());
        assert!(validate_grid(&[0.2, 0.1]).is_err());
        assert!(validate_grid(&[0.0, FRAC_PI_2]).is_err());
        assert!(validate_grid(&[-0.3, 0.0, 0.4]).is_ok());
    }

    #[test]
    fn pattern_normalization_and_visibility() {
        let p = FringePattern::from_raw(vec![0.0, 0.1, 0.2], vec![2.0, 0.0, 1.0]).unwrap();
        assert!((p.intensity.iter().sum::<f64>() / 3.0 - 1.0).abs() < 1e-15);
        assert_eq!(p.visibility, 1.0);
        let flat = FringePattern::from_raw(vec![0.0, 0.1], vec![0.3, 0.3]).unwrap();
        assert_eq!(flat.visibility, 0.0);
        assert!(FringePattern::from_raw(vec![0.0], vec![0.0]).is_err());
        assert!(FringePattern::from_raw(vec![0.0], vec![-1.0]).is_err());
    }
}
