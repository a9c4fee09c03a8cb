//! Magnetic flow on the unit tangent bundle of a surface of revolution.
//!
//! States are written in the coordinates (t, φ, θ): t is the arclength
//! latitude, θ the longitude and φ the angle of the unit velocity measured
//! from ∂_t towards the rotated direction. At speed parameter `m` the flow
//! generator is mX + fV.

mod flow;
mod intersect;
pub(crate) mod latitude;
mod reeb;

pub use flow::{integrate, Chart, Event, EventKind, FlowOptions, StopRule, Trajectory, TrajectorySample};
pub use intersect::{self_intersections, IntersectionOptions, OrbitClass, SelfIntersections};
pub use latitude::{latitude_orbits, momentum_range, turning_latitudes, LatitudeOrbit, MomentumBand};
pub use reeb::{density_integral, reeb_reparametrize, BetaChoice, ReebTrajectory};

use crate::ode::OdeError;
use crate::surface::{Profile, Strength};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("state at t = {t} lies inside the pole margin of the (t, φ, θ) chart")]
    PoleChart { t: f64 },
    #[error("regularised pole chart failed at s = {s}")]
    ChartBreakdown { s: f64 },
    #[error("momentum level {level} is within {distance:e} of a latitude momentum")]
    CriticalLevel { level: f64, distance: f64 },
    #[error("momentum level {level} lies outside the accessible range [{min}, {max}]")]
    OutsideRange { level: f64, min: f64, max: f64 },
    #[error("h = {h} ≤ 0 at s = {s}: the primitive is not a contact form here")]
    NonContactSample { s: f64, h: f64 },
    #[error("trajectory endpoints differ by {gap:e}, not a closed orbit")]
    NonClosed { gap: f64 },
    #[error("invalid duration or parameter: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Integrator(#[from] OdeError),
}

/// Point of the unit tangent bundle in (t, φ, θ) coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullState {
    pub t: f64,
    pub phi: f64,
    pub theta: f64,
}

impl FullState {
    pub const fn new(t: f64, phi: f64, theta: f64) -> Self {
        Self { t, phi, theta }
    }
}

/// Point of the symplectic reduction, (t, φ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedState {
    pub t: f64,
    pub phi: f64,
}

/// Fraction of ℓ defining the pole margin of the (t, φ, θ) chart.
pub const CHART_MARGIN: f64 = 1e-3;

/// A magnetic system at a fixed speed parameter.
#[derive(Debug, Clone)]
pub struct System {
    pub m: f64,
    pub profile: Profile,
    pub strength: Strength,
}

impl System {
    pub fn new(m: f64, profile: &Profile, strength: &Strength) -> Self {
        Self { m, profile: profile.clone(), strength: strength.clone() }
    }

    pub fn ell(&self) -> f64 {
        self.profile.ell()
    }

    /// Field in (t, φ, θ) without the pole check.
    pub(crate) fn field_raw(&self, t: f64, phi: f64) -> [f64; 3] {
        let d = self.profile.eval(t);
        let f = self.strength.eval(t).value;
        let (s, c) = phi.sin_cos();
        let m = self.m;
        [m * c, f - m * d.slope * s / d.radius, m * s / d.radius]
    }

    /// h = m² − m β_θ sin φ/γ + f for the chosen primitive.
    pub fn contact_density(&self, t: f64, phi: f64, beta: BetaChoice) -> f64 {
        let f = self.strength.eval(t).value;
        let ratio = match beta {
            BetaChoice::Canonical => self.strength.beta_over_radius(t),
            BetaChoice::Zero => 0.0,
        };
        self.m * self.m - self.m * ratio * phi.sin() + f
    }

    /// Î⁺(t) = mγ − Γ_f.
    pub fn upper_momentum(&self, t: f64) -> f64 {
        self.m * self.profile.eval(t).radius - self.strength.flux_primitive(t)
    }

    /// Î⁻(t) = −mγ − Γ_f.
    pub fn lower_momentum(&self, t: f64) -> f64 {
        -self.m * self.profile.eval(t).radius - self.strength.flux_primitive(t)
    }
}

/// (ṫ, φ̇, θ̇) = (m cos φ, f − mγ̇ sin φ/γ, m sin φ/γ).
pub fn vector_field(sys: &System, s: FullState) -> Result<[f64; 3], DynamicsError> {
    let eps = CHART_MARGIN * sys.ell();
    if !(s.t > eps && s.t < sys.ell() - eps) {
        return Err(DynamicsError::PoleChart { t: s.t });
    }
    Ok(sys.field_raw(s.t, s.phi))
}

/// I = mγ sin φ − Γ_f, the momentum of the rotational symmetry.
pub fn momentum(sys: &System, s: FullState) -> f64 {
    sys.m * sys.profile.eval(s.t).radius * s.phi.sin() - sys.strength.flux_primitive(s.t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn round(m: f64) -> System {
        let p = Profile::round_sphere();
        System::new(m, &p, &Strength::unit(&p))
    }

    #[test]
    fn field_examples() {
        let v = vector_field(&round(1.0), FullState::new(FRAC_PI_2, 0.0, 0.0)).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15 && v[2].abs() < 1e-15);
        let v = vector_field(&round(1.0), FullState::new(FRAC_PI_2, FRAC_PI_2, 0.0)).unwrap();
        assert!(v[0].abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15 && (v[2] - 1.0).abs() < 1e-15);
        // direct substitution: (0, 1 + 0.5, −0.5/sin(π/4))
        let v = vector_field(&round(0.5), FullState::new(FRAC_PI_4, -FRAC_PI_2, 0.0)).unwrap();
        assert!(v[0].abs() < 1e-15);
        assert!((v[1] - 1.5).abs() < 1e-14);
        assert!((v[2] + 0.5 / FRAC_PI_4.sin()).abs() < 1e-14);
        assert!(matches!(
            vector_field(&round(1.0), FullState::new(1e-5, 0.0, 0.0)),
            Err(DynamicsError::PoleChart { .. })
        ));
    }

    #[test]
    fn momentum_examples() {
        let sys = round(1.0);
        assert!(momentum(&sys, FullState::new(FRAC_PI_2, 0.0, 0.3)).abs() < 1e-14);
        let i = momentum(&sys, FullState::new(FRAC_PI_4, FRAC_PI_2, 0.0));
        assert!((i - 2f64.sqrt()).abs() < 1e-14);
    }
}
