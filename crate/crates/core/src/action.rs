//! Birkhoff averages of the contact density over invariant tori and
//! latitudes, and the sign certificate built from them.
//!
//! On a regular momentum level the reduced orbit oscillates between the
//! turning latitudes t⁻ < t⁺. The flow is integrated from t⁻ to the first
//! t maximum; the reflection (t, φ) ↦ (t, π − φ) maps this half oscillation
//! onto the other one, so the half average is the ergodic average.

use crate::dynamics::{
    density_integral, integrate, latitude_orbits, BetaChoice, DynamicsError, FlowOptions, FullState, LatitudeOrbit,
    MomentumBand, StopRule, System,
};
use crate::dynamics::latitude::{momentum_range_with, turning_latitudes_with};
use crate::surface::{km_positive, KmReport, Strength};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ActionError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("momentum level {level} has {count} bands; pick one explicitly")]
    MultiBand { level: f64, count: usize },
    #[error("strength is not normalised (flux {flux} instead of 2)")]
    NotNormalized { flux: f64 },
    #[error("half oscillation from t = {t_lo} did not reach a turning point")]
    NoTurn { t_lo: f64 },
    #[error("invalid certificate request: {0}")]
    InvalidRequest(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionOptions {
    pub rtol: f64,
    pub atol: f64,
    pub beta: BetaChoice,
    /// Levels closer than this fraction of I_max − I_min to a latitude
    /// momentum are replaced by the latitude action.
    pub critical_fraction: f64,
    /// |A| at or below this is Indeterminate.
    pub sign_tol: f64,
}

impl Default for ActionOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, beta: BetaChoice::Canonical, critical_fraction: 1e-3, sign_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionSample {
    #[serde(rename = "I")]
    pub level: f64,
    pub action: f64,
    /// Flow time of the t⁻ → t⁺ passage.
    pub half_period: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub evaluations: usize,
}

/// Average of h over the half oscillation in `band`.
pub fn band_action(sys: &System, band: &MomentumBand, opts: &ActionOptions) -> Result<ActionSample, ActionError> {
    let t_lo = band.t_lo;
    let gap_up = (sys.upper_momentum(t_lo) - band.level).abs();
    let gap_down = (sys.lower_momentum(t_lo) - band.level).abs();
    let phi0 = if gap_up <= gap_down { FRAC_PI_2 } else { -FRAC_PI_2 };
    let flow = FlowOptions {
        rtol: opts.rtol,
        atol: opts.atol,
        record_phi_events: false,
        stop: StopRule::TurnTop(1),
        ..FlowOptions::default()
    };
    // generous horizon: the passage time is finite on regular levels
    let horizon = 1e4 * sys.ell() / sys.m.max(1e-3);
    let traj = integrate(sys, FullState::new(t_lo, phi0, 0.0), horizon, &flow)?;
    if !traj.stopped_early {
        return Err(ActionError::NoTurn { t_lo });
    }
    let half_period = traj.end_time();
    Ok(ActionSample {
        level: band.level,
        action: density_integral(&traj, opts.beta) / half_period,
        half_period,
        t_lo,
        t_hi: traj.end_state().t,
        evaluations: traj.stats.evaluations,
    })
}

/// Action of the unique band at momentum `level`.
pub fn ergodic_action(sys: &System, level: f64, opts: &ActionOptions) -> Result<ActionSample, ActionError> {
    let lats = latitude_orbits(sys);
    let bands = turning_latitudes_with(sys, level, &lats)?;
    match bands.as_slice() {
        [band] => band_action(sys, band, opts),
        _ => Err(ActionError::MultiBand { level, count: bands.len() }),
    }
}

/// Action of the normalised Liouville measure, m² + 1.
pub fn liouville_action(m: f64, strength: &Strength) -> Result<f64, ActionError> {
    if !strength.is_normalized() {
        return Err(ActionError::NotNormalized { flux: strength.flux_end() + 1.0 });
    }
    Ok(m * m + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Positive,
    Negative,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum LevelRecord {
    Torus(ActionSample),
    /// Level too close to a latitude momentum; the latitude action stands in.
    LatitudeSubstitute {
        #[serde(rename = "I")]
        level: f64,
        t0: f64,
        action: f64,
    },
    Skipped {
        #[serde(rename = "I")]
        level: f64,
        reason: SkipReason,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    Critical,
    Integration,
}

impl LevelRecord {
    pub fn action(&self) -> Option<f64> {
        match self {
            LevelRecord::Torus(s) => Some(s.action),
            LevelRecord::LatitudeSubstitute { action, .. } => Some(*action),
            LevelRecord::Skipped { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateTolerances {
    pub rtol: f64,
    pub atol: f64,
    pub critical_fraction: f64,
    pub sign_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContactCertificate {
    pub m: f64,
    pub grid_size: usize,
    pub momentum_range: (f64, f64),
    pub levels: Vec<LevelRecord>,
    pub latitude_actions: Vec<LatitudeOrbit>,
    pub min_action: f64,
    pub verdict: Verdict,
    /// The sampled measures exhaust the invariant ones only when this holds.
    pub km: KmReport,
    /// min of h over a (t, φ) grid; ≤ 0 means the chosen primitive is not a
    /// contact form at this m.
    pub min_density: f64,
    pub tolerances: CertificateTolerances,
}

impl ContactCertificate {
    pub fn actions(&self) -> impl Iterator<Item = f64> + '_ {
        self.levels.iter().filter_map(LevelRecord::action).chain(self.latitude_actions.iter().map(|l| l.action))
    }
}

fn min_density(sys: &System, beta: BetaChoice) -> f64 {
    let mut lo = f64::INFINITY;
    for t in sys.profile.scan_grid(1024) {
        for s in [-1.0, 1.0] {
            lo = lo.min(sys.contact_density(t, s * FRAC_PI_2, beta));
        }
    }
    lo
}

/// Samples the action on `grid_size` momentum levels strictly inside the
/// momentum range plus all latitudes. The result is numerical evidence,
/// not a proof.
pub fn certify_contact(sys: &System, grid_size: usize, opts: &ActionOptions) -> Result<ContactCertificate, ActionError> {
    if grid_size == 0 || sys.m <= 0.0 {
        return Err(ActionError::InvalidRequest(format!("grid_size = {grid_size}, m = {}", sys.m)));
    }
    let lats = latitude_orbits(sys);
    let (lo, hi) = momentum_range_with(sys, &lats);
    let width = hi - lo;
    let levels: Vec<f64> = (0..grid_size).map(|k| lo + width * (k as f64 + 0.5) / grid_size as f64).collect();
    let records: Vec<Vec<LevelRecord>> = levels
        .par_iter()
        .map(|&level| {
            let near = lats
                .iter()
                .filter(|l| (l.momentum - level).abs() < opts.critical_fraction * width)
                .min_by(|a, b| (a.momentum - level).abs().total_cmp(&(b.momentum - level).abs()));
            if let Some(l) = near {
                return vec![LevelRecord::LatitudeSubstitute { level, t0: l.t0, action: l.action }];
            }
            match turning_latitudes_with(sys, level, &lats) {
                Ok(bands) => bands
                    .iter()
                    .map(|b| match band_action(sys, b, opts) {
                        Ok(s) => LevelRecord::Torus(s),
                        Err(_) => LevelRecord::Skipped { level, reason: SkipReason::Integration },
                    })
                    .collect(),
                Err(_) => vec![LevelRecord::Skipped { level, reason: SkipReason::Critical }],
            }
        })
        .collect();
    let levels: Vec<LevelRecord> = records.into_iter().flatten().collect();
    let mut cert = ContactCertificate {
        m: sys.m,
        grid_size,
        momentum_range: (lo, hi),
        levels,
        latitude_actions: lats,
        min_action: f64::INFINITY,
        verdict: Verdict::Indeterminate,
        km: km_positive(&sys.profile, &sys.strength, sys.m),
        min_density: min_density(sys, opts.beta),
        tolerances: CertificateTolerances {
            rtol: opts.rtol,
            atol: opts.atol,
            critical_fraction: opts.critical_fraction,
            sign_tol: opts.sign_tol,
        },
    };
    cert.min_action = cert.actions().fold(f64::INFINITY, f64::min);
    cert.verdict = if cert.min_action > opts.sign_tol {
        Verdict::Positive
    } else if cert.min_action < -opts.sign_tol {
        Verdict::Negative
    } else {
        Verdict::Indeterminate
    };
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::Profile;

    #[test]
    fn round_sphere_action_is_constant() {
        let p = Profile::round_sphere();
        let sys = System::new(1.0, &p, &Strength::unit(&p));
        let a = ergodic_action(&sys, 0.0, &ActionOptions::default()).unwrap();
        assert!((a.action - 2.0).abs() < 1e-10, "{a:?}");
        assert!((a.t_lo - std::f64::consts::FRAC_PI_4).abs() < 1e-10);
        assert!((a.t_hi - 3.0 * std::f64::consts::FRAC_PI_4).abs() < 1e-8);
    }

    #[test]
    fn liouville_values() {
        let p = Profile::round_sphere();
        let f = Strength::unit(&p);
        assert_eq!(liouville_action(0.0, &f).unwrap(), 1.0);
        assert_eq!(liouville_action(0.5, &f).unwrap(), 1.25);
    }
}
