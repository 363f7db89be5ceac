//! Crowd Risk Index (CRI) with a devotional-velocity term, density
//! classification, and descriptive statistics over the venue table.
//!
//! The index is a convex combination of four normalized components:
//!
//! ```text
//! density  = min(ρ / ρ_crit, 2) / 2
//! choke    = max(1 − width / width_ref, 0)
//! velocity = (mult − 1) / (mult_max − 1)
//! admin    = 1 − score / 10
//! CRI      = clamp₀¹(w_d·density + w_c·choke + w_v·velocity + w_a·admin)
//! ```
//!
//! Capping the density ratio at 2 (12 persons/m² with the default
//! reference) keeps one component from saturating the index alone.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{JoinedPanel, VenueGeometry};
use crate::round6;

/// Surge multiplier during auspicious bathing windows.
pub const AUSPICIOUS_SURGE: f64 = 1.58;
/// Surge multiplier during ordinary peak bathing hours.
pub const PEAK_HOUR_SURGE: f64 = 1.34;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RiskError {
    #[error("weights must be in [0, 1] and sum to 1 (sum = {sum})")]
    BadWeights { sum: f64 },
    #[error("reference values must be positive (mult_max > 1)")]
    BadReference,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("empty input")]
    EmptyInput,
}

pub type Result<T> = std::result::Result<T, RiskError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriWeights {
    pub w_density: f64,
    pub w_choke: f64,
    pub w_velocity: f64,
    pub w_admin: f64,
}

impl Default for CriWeights {
    fn default() -> Self {
        Self {
            w_density: 0.4,
            w_choke: 0.25,
            w_velocity: 0.2,
            w_admin: 0.15,
        }
    }
}

impl CriWeights {
    pub fn new(w_density: f64, w_choke: f64, w_velocity: f64, w_admin: f64) -> Result<Self> {
        let w = Self {
            w_density,
            w_choke,
            w_velocity,
            w_admin,
        };
        w.validate()?;
        Ok(w)
    }

    fn as_array(&self) -> [f64; 4] {
        [self.w_density, self.w_choke, self.w_velocity, self.w_admin]
    }

    pub fn validate(&self) -> Result<()> {
        let ws = self.as_array();
        let sum: f64 = ws.iter().sum();
        if ws.iter().any(|w| !(0.0..=1.0).contains(w)) || (sum - 1.0).abs() > 1e-9 {
            return Err(RiskError::BadWeights { sum });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskInput {
    /// Persons per square metre.
    pub density: f64,
    /// Metres.
    pub chokepoint_width: f64,
    /// Desired-speed multiplier, 1 outside ritual windows.
    pub velocity_multiplier: f64,
    pub admin_score: u8,
}

impl RiskInput {
    pub fn validate(&self, refs: &CriReference) -> Result<()> {
        let bad = |m: &str| Err(RiskError::InvalidInput(m.to_string()));
        if !(self.density >= 0.0) || !self.density.is_finite() {
            return bad("density must be a non-negative number");
        }
        if !(self.chokepoint_width > 0.0) || !self.chokepoint_width.is_finite() {
            return bad("chokepoint width must be positive");
        }
        if !(1.0..=refs.mult_max).contains(&self.velocity_multiplier) {
            return bad("velocity multiplier outside [1, mult_max]");
        }
        if !(1..=10).contains(&self.admin_score) {
            return bad("admin score outside [1, 10]");
        }
        Ok(())
    }
}

/// Normalizing references for the index components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriReference {
    pub density_crit: f64,
    pub width_ref: f64,
    pub mult_max: f64,
}

impl Default for CriReference {
    fn default() -> Self {
        Self {
            density_crit: 6.0,
            width_ref: 5.0,
            mult_max: AUSPICIOUS_SURGE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriComponents {
    pub density: f64,
    pub choke: f64,
    pub velocity: f64,
    pub admin: f64,
}

pub fn cri_components(input: &RiskInput, refs: &CriReference) -> Result<CriComponents> {
    if !(refs.density_crit > 0.0 && refs.width_ref > 0.0 && refs.mult_max > 1.0) {
        return Err(RiskError::BadReference);
    }
    input.validate(refs)?;
    Ok(CriComponents {
        density: (input.density / refs.density_crit).min(2.0) / 2.0,
        choke: (1.0 - input.chokepoint_width / refs.width_ref).max(0.0),
        velocity: (input.velocity_multiplier - 1.0) / (refs.mult_max - 1.0),
        admin: 1.0 - input.admin_score as f64 / 10.0,
    })
}

fn combine(c: &CriComponents, w: &CriWeights) -> f64 {
    (w.w_density * c.density
        + w.w_choke * c.choke
        + w.w_velocity * c.velocity
        + w.w_admin * c.admin)
        .clamp(0.0, 1.0)
}

pub fn cri(input: &RiskInput, weights: &CriWeights, refs: &CriReference) -> Result<f64> {
    weights.validate()?;
    Ok(combine(&cri_components(input, refs)?, weights))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskThresholds {
    pub elevated: f64,
    pub critical: f64,
}

impl Default for RiskThresholds {
    fn default() -> Self {
        Self {
            elevated: 6.0,
            critical: 8.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DensityClass {
    Safe,
    Elevated,
    Critical,
}

/// Both boundaries are inclusive on the left: `ρ = 8` is critical.
pub fn classify_density(density: f64, thresholds: &RiskThresholds) -> DensityClass {
    if density >= thresholds.critical {
        DensityClass::Critical
    } else if density >= thresholds.elevated {
        DensityClass::Elevated
    } else {
        DensityClass::Safe
    }
}

/// Fraction of venues whose chokepoint is narrower than `width_threshold`.
pub fn choke_fraction(venues: &[VenueGeometry], width_threshold: f64) -> Result<f64> {
    if venues.is_empty() {
        return Err(RiskError::EmptyInput);
    }
    let narrow = venues
        .iter()
        .filter(|v| v.chokepoint_width < width_threshold)
        .count();
    Ok(narrow as f64 / venues.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriRow {
    pub year: i32,
    pub cri: f64,
    pub components: CriComponents,
}

impl CriRow {
    /// `{year, cri, components:{density, choke, velocity, admin}}`, six decimals.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "year": self.year,
            "cri": round6(self.cri),
            "components": {
                "density": round6(self.components.density),
                "choke": round6(self.components.choke),
                "velocity": round6(self.components.velocity),
                "admin": round6(self.components.admin),
            }
        })
    }
}

/// CRI per panel year. Every recorded incident fell on a peak ritual day,
/// so the velocity multiplier is the auspicious-window surge throughout.
pub fn cri_timeline(
    panel: &JoinedPanel,
    weights: &CriWeights,
    refs: &CriReference,
) -> Result<Vec<CriRow>> {
    if panel.is_empty() {
        return Err(RiskError::EmptyInput);
    }
    weights.validate()?;
    panel
        .rows
        .iter()
        .map(|row| {
            let input = RiskInput {
                density: row.incident.density,
                chokepoint_width: row.venue.chokepoint_width,
                velocity_multiplier: AUSPICIOUS_SURGE.min(refs.mult_max),
                admin_score: row.inquiry.effectiveness_score,
            };
            let components = cri_components(&input, refs)?;
            Ok(CriRow {
                year: row.year,
                cri: combine(&components, weights),
                components,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(density: f64, width: f64, mult: f64, score: u8) -> RiskInput {
        RiskInput {
            density,
            chokepoint_width: width,
            velocity_multiplier: mult,
            admin_score: score,
        }
    }

    #[test]
    fn all_terms_vanish() {
        let v = cri(
            &input(0.0, 5.0, 1.0, 10),
            &CriWeights::default(),
            &CriReference::default(),
        );
        assert_eq!(v.unwrap(), 0.0);
    }

    #[test]
    fn density_ordering() {
        let w = CriWeights::default();
        let r = CriReference::default();
        let hi = cri(&input(8.0, 4.0, 1.2, 5), &w, &r).unwrap();
        let lo = cri(&input(6.0, 4.0, 1.2, 5), &w, &r).unwrap();
        assert!(hi > lo);
    }

    #[test]
    fn rejects_bad_weights_and_inputs() {
        let r = CriReference::default();
        assert!(matches!(
            CriWeights::new(0.5, 0.5, 0.5, 0.0),
            Err(RiskError::BadWeights { .. })
        ));
        let w = CriWeights::default();
        assert!(cri(&input(8.0, 3.0, 1.7, 5), &w, &r).is_err());
        assert!(cri(&input(8.0, 3.0, 1.2, 0), &w, &r).is_err());
        assert!(cri(&input(-1.0, 3.0, 1.2, 5), &w, &r).is_err());
    }

    #[test]
    fn classification_boundaries() {
        let t = RiskThresholds::default();
        assert_eq!(classify_density(8.0, &t), DensityClass::Critical);
        assert_eq!(classify_density(7.0, &t), DensityClass::Elevated);
        assert_eq!(classify_density(6.0, &t), DensityClass::Elevated);
        assert_eq!(classify_density(5.99, &t), DensityClass::Safe);
        assert_eq!(classify_density(0.0, &t), DensityClass::Safe);
    }

    #[test]
    fn choke_fraction_extremes() {
        let v = |w| VenueGeometry {
            year: 2000,
            chokepoint_width: w,
            exits: 2,
            vip_routes: 0,
        };
        let venues = vec![v(3.0), v(5.0)];
        assert_eq!(choke_fraction(&venues, 10.0).unwrap(), 1.0);
        assert_eq!(choke_fraction(&venues, 1.0).unwrap(), 0.0);
        assert_eq!(choke_fraction(&[], 1.0), Err(RiskError::EmptyInput));
    }
}
