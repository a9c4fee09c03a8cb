//! Buildable profile families and their text form.
//!
//! A profile is written as a TOML table tagged by `family`:
//!
//! ```toml
//! family = "stretched_sphere"
//! a = 0.3
//! delta = 0.05
//! c = 4.0          # optional; omitted means "stretch until the area is 2"
//! ```
//!
//! Families: `round_sphere`; `ellipsoid` (`a` equatorial radius, `c` polar
//! semi-axis); `stretched_sphere` (`a`, `delta`, optional `c`);
//! `dip_profile` (`delta`, `epsilon`, optional `a`); `samples` (`length`
//! and `values`, the profile sampled on a uniform grid including both poles).
//! Every built profile is rescaled to area 2.

use super::curves::{EllipseArc, SineSeries, Stretch, StretchedSmallSphere};
use super::{normalize, validate, Profile, ProfileKind, Strength, SurfaceError};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    RoundSphere {},
    Ellipsoid {
        a: f64,
        c: f64,
    },
    StretchedSphere {
        a: f64,
        delta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c: Option<f64>,
    },
    DipProfile {
        delta: f64,
        epsilon: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a: Option<f64>,
    },
    Samples {
        length: f64,
        values: Vec<f64>,
    },
}

impl FamilySpec {
    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("family specs always serialise")
    }

    pub fn from_text(text: &str) -> Result<Self, SurfaceError> {
        toml::from_str(text).map_err(|e| SurfaceError::Parse(e.to_string()))
    }
}

const BUILD_TOL: f64 = 1e-8;

/// Builds, normalises and validates a profile of the given family.
pub fn build_profile(spec: &FamilySpec) -> Result<Profile, SurfaceError> {
    let kind = ProfileKind::Family(spec.clone());
    let raw = match spec {
        FamilySpec::RoundSphere {} => return Ok(Profile::round_sphere()),
        FamilySpec::Ellipsoid { a, c } => {
            if !(*a > 0.0 && *c > 0.0) {
                return Err(SurfaceError::InfeasibleSpec(format!("semi-axes a={a}, c={c} must be positive")));
            }
            Profile::from_curve(Arc::new(EllipseArc::new(*a, *c)), kind)
        }
        FamilySpec::StretchedSphere { a, delta, c } => {
            let curve = stretched_sphere(*a, *delta, *c)?;
            Profile::from_curve(Arc::new(curve), kind)
        }
        FamilySpec::DipProfile { delta, epsilon, a } => {
            let curve = dip_profile(*delta, *epsilon, *a)?;
            Profile::from_curve(Arc::new(curve), kind)
        }
        FamilySpec::Samples { length, values } => {
            if values.len() < 5 || !(*length > 0.0) {
                return Err(SurfaceError::InfeasibleSpec("need a positive length and at least 5 samples".into()));
            }
            Profile::from_curve(Arc::new(SineSeries::from_samples(*length, values)), kind)
        }
    };
    let profile = normalize(&raw)?;
    let report = validate(&profile, &Strength::unit(&profile), BUILD_TOL)?;
    if !report.passed {
        return Err(SurfaceError::Invalid(report.failures().join(", ")));
    }
    Ok(profile)
}

/// Sphere of radius `a` with the band between the latitudes at distance
/// `delta` from the poles stretched by `2c` (or by the amount giving area 2).
pub fn stretched_sphere(a: f64, delta: f64, c: Option<f64>) -> Result<StretchedSmallSphere, SurfaceError> {
    if !(delta > 0.0 && a > 2.0 * delta / PI && a < 1.0) {
        return Err(SurfaceError::InfeasibleSpec(format!(
            "stretched sphere needs 0 < delta and a in (2·delta/π, 1); got a={a}, delta={delta}"
        )));
    }
    let half = PI * a / 2.0;
    let mut curve = StretchedSmallSphere {
        radius: a,
        stretch: Stretch { centre: half, half_width: half - delta, extra: 0.0 },
    };
    curve.stretch.extra = match c {
        Some(c) if c < 0.0 => return Err(SurfaceError::InfeasibleSpec(format!("stretch c={c} is negative"))),
        Some(c) => 2.0 * c,
        None => (2.0 - 2.0 * a * a) / curve.stretch.weighted_mean(|x| a * (x / a).sin()),
    };
    Ok(curve)
}

/// Small sphere whose slope at `delta` is below −epsilon, stretched past
/// `delta` until the area is 2.
pub fn dip_profile(delta: f64, epsilon: f64, a: Option<f64>) -> Result<StretchedSmallSphere, SurfaceError> {
    if !(delta > 0.0 && delta < PI / 2.0 && epsilon > 0.0 && epsilon < 1.0) {
        return Err(SurfaceError::InfeasibleSpec(format!(
            "dip profile needs delta in (0, π/2) and epsilon in (0, 1); got delta={delta}, epsilon={epsilon}"
        )));
    }
    let turn = (-epsilon).acos();
    let a = a.unwrap_or(2.0 * delta / (turn + PI));
    if !(a > delta / PI && a < delta / turn && a < 1.0) {
        return Err(SurfaceError::InfeasibleSpec(format!(
            "radius a={a} must lie in (delta/π, delta/arccos(−epsilon)) = ({}, {})",
            delta / PI,
            delta / turn
        )));
    }
    let end = PI * a;
    let mut curve = StretchedSmallSphere {
        radius: a,
        stretch: Stretch { centre: 0.5 * (delta + end), half_width: 0.45 * (end - delta), extra: 0.0 },
    };
    curve.stretch.extra = (2.0 - 2.0 * a * a) / curve.stretch.weighted_mean(|x| a * (x / a).sin());
    Ok(curve)
}
