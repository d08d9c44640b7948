//! Two-slit spherical waves, the far-field fringe law, and the
//! screen-in/screen-out choice between a fringe pattern and a pair of
//! telescopes aimed at the slits.
//!
//! Geometry is planar. Angles are measured at the slit midpoint from the
//! forward axis, positive toward slit 1, so the far-field path difference
//! `|r − r2| − |r − r1|` is `+d sin θ`.

use nalgebra::Vector2;

use crate::pattern::{validate_grid, FringePattern};
use crate::qcore::C64;
use crate::{Error, Result};

pub type Point = Vector2<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct WheelerConfig {
    pub k: f64,
    pub r1: Point,
    pub r2: Point,
    /// Radius of the screen arc around the slit midpoint.
    pub screen_distance: f64,
    pub theta_grid: Vec<f64>,
    /// Telescope position `r_T`.
    pub telescope_aim: Point,
    /// Angular half-width of each telescope's acceptance window.
    pub acceptance_halfwidth: f64,
}

impl WheelerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::InvalidConfig(format!("k must be positive, got {}", self.k)));
        }
        let finite = [self.r1, self.r2, self.telescope_aim]
            .iter()
            .all(|p| p.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(Error::InvalidGeometry("non-finite coordinates".into()));
        }
        let d = self.slit_separation();
        if !(d > 0.0) {
            return Err(Error::InvalidGeometry("slits r1 and r2 coincide".into()));
        }
        if !(self.screen_distance > d) {
            return Err(Error::InvalidGeometry(format!(
                "screen_distance {} must exceed the slit separation {d}",
                self.screen_distance
            )));
        }
        validate_grid(&self.theta_grid)?;
        self.validate_telescopes()
    }

    fn validate_telescopes(&self) -> Result<()> {
        if !(self.acceptance_halfwidth > 0.0) {
            return Err(Error::InvalidGeometry(
                "acceptance_halfwidth must be positive".into(),
            ));
        }
        let to1 = self.r1 - self.telescope_aim;
        let to2 = self.r2 - self.telescope_aim;
        if to1.norm() == 0.0 || to2.norm() == 0.0 {
            return Err(Error::InvalidGeometry("telescope sits on a slit".into()));
        }
        let separation = to1.angle(&to2);
        if !(separation > 2.0 * self.acceptance_halfwidth) {
            return Err(Error::InvalidGeometry(format!(
                "slits are {separation:e} rad apart seen from the telescopes; \
                 acceptance windows of half-width {:e} would overlap",
                self.acceptance_halfwidth
            )));
        }
        Ok(())
    }

    pub fn slit_separation(&self) -> f64 {
        (self.r1 - self.r2).norm()
    }

    pub fn midpoint(&self) -> Point {
        (self.r1 + self.r2) * 0.5
    }

    /// Unit vector from slit 2 toward slit 1.
    fn slit_axis(&self) -> Point {
        (self.r1 - self.r2) / self.slit_separation()
    }

    fn forward_axis(&self) -> Point {
        let u = self.slit_axis();
        Point::new(u.y, -u.x)
    }

    /// Point on the screen arc at angle `theta`.
    pub fn screen_point(&self, theta: f64) -> Point {
        self.midpoint()
            + (self.forward_axis() * theta.cos() + self.slit_axis() * theta.sin())
                * self.screen_distance
    }

    /// Mirror image of `r` across the perpendicular bisector of the slits.
    pub fn reflect(&self, r: Point) -> Point {
        let u = self.slit_axis();
        let rel = r - self.midpoint();
        self.midpoint() + rel - u * (2.0 * rel.dot(&u))
    }
}

/// The two spherical-wave terms `e^{ik|r−r_i|}/|r−r_i|` at `r`.
pub fn spherical_terms(r: Point, config: &WheelerConfig) -> Result<[C64; 2]> {
    let scale = config.slit_separation().max(1.0);
    let term = |slit: Point| {
        let dist = (r - slit).norm();
        if dist <= 1e-12 * scale {
            return Err(Error::SingularPoint);
        }
        Ok(C64::from_polar(1.0 / dist, config.k * dist))
    };
    Ok([term(config.r1)?, term(config.r2)?])
}

/// Exact two-slit amplitude at `r`.
pub fn psi_exact(r: Point, config: &WheelerConfig) -> Result<C64> {
    let [a, b] = spherical_terms(r, config)?;
    Ok(a + b)
}

/// Far-field path difference `d sin θ`.
pub fn path_difference(theta: f64, d: f64) -> f64 {
    d * theta.sin()
}

/// `|r − r2| − |r − r1|` at the screen point for `theta`.
pub fn exact_path_difference(theta: f64, config: &WheelerConfig) -> f64 {
    let r = config.screen_point(theta);
    (r - config.r2).norm() - (r - config.r1).norm()
}

/// `|1 + e^{i k d sin θ}|² = 2(1 + cos(k d sin θ))`.
pub fn far_field_intensity(theta: f64, config: &WheelerConfig) -> f64 {
    let phase = config.k * path_difference(theta, config.slit_separation());
    2.0 * (1.0 + phase.cos())
}

pub fn far_field_pattern(config: &WheelerConfig) -> Result<FringePattern> {
    config.validate()?;
    let raw = config
        .theta_grid
        .iter()
        .map(|&t| far_field_intensity(t, config))
        .collect();
    FringePattern::from_raw(config.theta_grid.clone(), raw)
}

/// `|ψ(r)|² |r − r1|²` at the screen point for `theta`, which tends to the
/// unnormalized far-field law as the screen recedes.
pub fn exact_scaled_intensity(theta: f64, config: &WheelerConfig) -> Result<f64> {
    let r = config.screen_point(theta);
    let psi = psi_exact(r, config)?;
    Ok(psi.norm_sqr() * (r - config.r1).norm_squared())
}

pub fn exact_pattern(config: &WheelerConfig) -> Result<FringePattern> {
    config.validate()?;
    let raw = config
        .theta_grid
        .iter()
        .map(|&t| exact_scaled_intensity(t, config))
        .collect::<Result<_>>()?;
    FringePattern::from_raw(config.theta_grid.clone(), raw)
}

/// Click probabilities of the telescopes aimed at slit 1 and slit 2.
///
/// Near `r_T` the field is two plane waves with moduli `1/|r_T − r_i|`; each
/// telescope accepts exactly one of them.
pub fn telescope_probabilities(config: &WheelerConfig) -> Result<(f64, f64)> {
    config.validate()?;
    let [a, b] = spherical_terms(config.telescope_aim, config)?;
    let (w1, w2) = (a.norm_sqr(), b.norm_sqr());
    let total = w1 + w2;
    Ok((w1 / total, w2 / total))
}

#[derive(Debug, Clone, PartialEq)]
pub enum DelayedChoice {
    Screen(FringePattern),
    Telescopes { p1: f64, p2: f64 },
}

/// Screen in: the fringe pattern. Screen out: telescope click probabilities.
pub fn delayed_choice(config: &WheelerConfig, screen_in: bool) -> Result<DelayedChoice> {
    if screen_in {
        Ok(DelayedChoice::Screen(far_field_pattern(config)?))
    } else {
        let (p1, p2) = telescope_probabilities(config)?;
        Ok(DelayedChoice::Telescopes { p1, p2 })
    }
}
