//! Return map of the low-energy flow on the annulus of turning points and
//! its twist.
//!
//! The annulus is parametrised by (u, ψ) with u ∈ (−ℓ, ℓ) \ {0}: for u < 0
//! the point is (t, φ, θ) = (−u, −π/2, ψ), for u > 0 it is (u, π/2, ψ + π).
//! Between two crossings φ advances by π, so φ itself serves as the time
//! variable; θ_m(u) is the longitude gained on the way.

use crate::dynamics::{
    density_integral, integrate, BetaChoice, DynamicsError, FlowOptions, FullState, StopRule, System, Trajectory,
};
use crate::ode::{self, Control, DenseStep, Settings};
use crate::roots::{brent, neville_at_zero};
use crate::surface::{Profile, Strength};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use thiserror::Error;

pub use crate::surface::rigid_family;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PoincareError {
    #[error("φ̇ vanishes at φ = {phi} on the arc from u = {u}; m is too large here")]
    NonMonotone { u: f64, phi: f64 },
    #[error("the arc from u = {u} reaches a pole")]
    PoleCrossing { u: f64 },
    #[error("u = {u} is not in (−ℓ, ℓ) \\ {{0}}")]
    Puncture { u: f64 },
    #[error("m sequence must be strictly decreasing and positive")]
    BadSequence,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Integrator(#[from] ode::OdeError),
}

/// Options of the φ-parametrised integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistOptions {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for TwistOptions {
    fn default() -> Self {
        Self { rtol: 1e-11, atol: 1e-13 }
    }
}

/// Twist coefficient Ω_f = −ḟ/(γf³).
pub fn omega_f(strength: &Strength, t: f64) -> f64 {
    strength.omega(t)
}

/// Section point of (u, ψ).
pub fn section_state(u: f64, psi: f64) -> FullState {
    if u < 0.0 {
        FullState::new(-u, -FRAC_PI_2, psi)
    } else {
        FullState::new(u, FRAC_PI_2, psi + PI)
    }
}

/// Inverse of [`section_state`] at a turning point.
pub fn section_coords(s: FullState) -> (f64, f64) {
    if s.phi.sin() < 0.0 {
        (-s.t, s.theta.rem_euclid(TAU))
    } else {
        (s.t, (s.theta - PI).rem_euclid(TAU))
    }
}

/// Longitude gained between the section point at `u` and the next
/// crossing.
pub fn theta_m(sys: &System, u: f64, opts: &TwistOptions) -> Result<f64, PoincareError> {
    let ell = sys.ell();
    if !(u.abs() > 0.0 && u.abs() < ell) {
        return Err(PoincareError::Puncture { u });
    }
    // for u > 0 the shift φ ↦ φ + π turns the arc into the u < 0 case with m ↦ −m
    let m = if u < 0.0 { sys.m } else { -sys.m };
    let margin = crate::dynamics::CHART_MARGIN * ell;
    let denom = |t: f64, phi: f64| {
        let d = sys.profile.eval(t);
        sys.strength.eval(t).value - m * d.slope * phi.sin() / d.radius
    };
    let field = |phi: f64, y: &[f64], dy: &mut [f64]| {
        let d = sys.profile.eval(y[0]);
        let f = sys.strength.eval(y[0]).value;
        let (s, c) = phi.sin_cos();
        let den = f * d.radius - m * d.slope * s;
        dy[0] = m * c * d.radius / den;
        dy[1] = m * s / den;
    };
    let settings = Settings {
        rtol: opts.rtol,
        atol: opts.atol,
        max_steps: 1_000_000,
        h_max: 0.05,
        angular: vec![false, false],
    };
    let mut failure: Option<PoincareError> = None;
    let mut buf = [0.0; 2];
    let out = ode::integrate(field, -FRAC_PI_2, &[u.abs(), 0.0], FRAC_PI_2, &settings, |step: &DenseStep| {
        for k in 0..=4 {
            let phi = step.s0 + step.h * k as f64 / 4.0;
            step.eval_into(phi, &mut buf);
            if !(buf[0] > margin && buf[0] < ell - margin) {
                failure = Some(PoincareError::PoleCrossing { u });
                return Control::Stop(phi);
            }
            if denom(buf[0], phi) <= 0.0 {
                failure = Some(PoincareError::NonMonotone { u, phi });
                return Control::Stop(phi);
            }
        }
        Control::Continue
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let out = out?;
    Ok(out.y[1])
}

/// ψ_m = θ_m + π, the longitude shift of one crossing.
pub fn psi_m(sys: &System, u: f64, opts: &TwistOptions) -> Result<f64, PoincareError> {
    Ok(theta_m(sys, u, opts)? + PI)
}

/// F_m²(u, ψ) = (u, ψ + 2ψ_m(u) mod 2π).
pub fn return_map_squared(sys: &System, u: f64, psi: f64, opts: &TwistOptions) -> Result<(f64, f64), PoincareError> {
    let shift = 2.0 * psi_m(sys, u, opts)?;
    Ok((u, (psi + shift).rem_euclid(TAU)))
}

/// Two crossings computed by integrating the flow itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectReturn {
    pub first: (f64, f64),
    pub second: (f64, f64),
    /// Longitude gained up to each crossing.
    pub theta_first: f64,
    pub theta_second: f64,
}

impl DirectReturn {
    /// |u after two crossings − u|.
    pub fn u_gap(&self, u: f64) -> f64 {
        (self.second.0 - u).abs()
    }

    /// ψ_m at the start and at the first image, which agree by symmetry.
    pub fn psi_shifts(&self) -> (f64, f64) {
        (self.theta_first + PI, self.theta_second - self.theta_first + PI)
    }
}

pub fn direct_return(sys: &System, u: f64, psi: f64, flow: &FlowOptions) -> Result<DirectReturn, PoincareError> {
    let start = section_state(u, psi);
    let opts = FlowOptions { stop: StopRule::PhiCrossings(2), record_phi_events: true, ..flow.clone() };
    let horizon = 1e3 * TAU / sys.strength.eval(start.t).value.abs().max(1e-3);
    let traj = integrate(sys, start, horizon, &opts)?;
    let crossings: Vec<FullState> = traj.events.iter().map(|e| e.state).collect();
    if crossings.len() < 2 {
        return Err(PoincareError::Dynamics(DynamicsError::InvalidInput(format!(
            "only {} section crossings found from u = {u}",
            crossings.len()
        ))));
    }
    Ok(DirectReturn {
        first: section_coords(crossings[0]),
        second: section_coords(crossings[1]),
        theta_first: crossings[0].theta - start.theta,
        theta_second: crossings[1].theta - start.theta,
    })
}

/// Extrapolated limit of θ_m(u)/m² as m → 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwistFit {
    pub u: f64,
    pub ms: Vec<f64>,
    pub ratios: Vec<f64>,
    pub limit: f64,
    /// Empirical convergence order of the ratios; NaN if undetermined.
    pub order: f64,
}

/// Neville extrapolation to m = 0 of θ_m(u)/m² over a decreasing sequence.
pub fn twist_fit(
    profile: &Profile,
    strength: &Strength,
    u: f64,
    ms: &[f64],
    opts: &TwistOptions,
) -> Result<TwistFit, PoincareError> {
    if ms.is_empty() || ms.iter().any(|&m| m <= 0.0) || ms.windows(2).any(|w| w[1] >= w[0]) {
        return Err(PoincareError::BadSequence);
    }
    let ratios = ms
        .iter()
        .map(|&m| Ok(theta_m(&System::new(m, profile, strength), u, opts)? / (m * m)))
        .collect::<Result<Vec<f64>, PoincareError>>()?;
    let limit = neville_at_zero(ms, &ratios);
    let order = if ratios.len() >= 3 {
        let d1 = (ratios[0] - ratios[1]).abs();
        let d2 = (ratios[1] - ratios[2]).abs();
        let r = ((ms[0] - ms[1]) / (ms[1] - ms[2])).abs();
        if d1 > 0.0 && d2 > 0.0 && r != 1.0 {
            (d1 / d2).ln() / r.ln()
        } else {
            f64::NAN
        }
    } else {
        f64::NAN
    };
    Ok(TwistFit { u, ms: ms.to_vec(), ratios, limit, order })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwistRow {
    pub u: f64,
    pub m: f64,
    pub theta_m: f64,
    pub psi_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwistProfile {
    pub rows: Vec<TwistRow>,
    pub fits: Vec<TwistFit>,
}

/// θ_m over a (u, m) grid with a fit per u; rows ordered by (u, m).
pub fn twist_profile(
    profile: &Profile,
    strength: &Strength,
    us: &[f64],
    ms: &[f64],
    opts: &TwistOptions,
) -> Result<TwistProfile, PoincareError> {
    let fits = us
        .par_iter()
        .map(|&u| twist_fit(profile, strength, u, ms, opts))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = fits
        .iter()
        .flat_map(|fit| {
            fit.ms.iter().zip(&fit.ratios).map(move |(&m, &r)| TwistRow {
                u: fit.u,
                m,
                theta_m: r * m * m,
                psi_m: r * m * m + PI,
            })
        })
        .collect();
    Ok(TwistProfile { rows, fits })
}

/// A level where the rotation number θ_m/π of F_m² equals p/q.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Resonance {
    pub u: f64,
    pub p: u64,
    pub q: u64,
}

/// Resonances with p = 1 between consecutive grid values of u (all of one
/// sign), at most `per_interval` per grid interval.
pub fn find_resonances(sys: &System, us: &[f64], per_interval: usize, opts: &TwistOptions) -> Result<Vec<Resonance>, PoincareError> {
    let rot: Vec<f64> = us
        .par_iter()
        .map(|&u| theta_m(sys, u, opts).map(|th| th / PI))
        .collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for k in 1..us.len() {
        let (a, b) = (rot[k - 1], rot[k]);
        if a <= 0.0 || b <= 0.0 || a >= 1.0 || b >= 1.0 {
            continue;
        }
        let (lo, hi) = (a.min(b), a.max(b));
        // 1/q ∈ [lo, hi]
        let q_min = (1.0 / hi).ceil() as u64;
        let q_max = (1.0 / lo).floor() as u64;
        for q in (q_min..=q_max).take(per_interval) {
            let target = 1.0 / q as f64;
            let g = |u: f64| theta_m(sys, u, opts).map(|th| th / PI - target).unwrap_or(f64::NAN);
            if let Some(u) = brent(g, us[k - 1], us[k], 1e-15) {
                out.push(Resonance { u, p: 1, q });
            }
        }
    }
    Ok(out)
}

/// Periodic orbit through a resonance, integrated directly.
#[derive(Debug, Clone)]
pub struct ResonantOrbit {
    pub resonance: Resonance,
    pub flow_period: f64,
    pub reeb_period: f64,
    /// Distance between the start and the end after 2q crossings.
    pub closure_gap: f64,
    pub trajectory: Trajectory,
}

pub fn resonant_orbit(sys: &System, res: Resonance, psi: f64, flow: &FlowOptions) -> Result<ResonantOrbit, PoincareError> {
    let start = section_state(res.u, psi);
    let crossings = 2 * res.q as usize;
    let opts = FlowOptions { stop: StopRule::PhiCrossings(crossings), record_phi_events: false, ..flow.clone() };
    let f0 = sys.strength.eval(start.t).value.abs().max(1e-3);
    let horizon = 4.0 * TAU * res.q as f64 / f0;
    let traj = integrate(sys, start, horizon, &opts)?;
    if !traj.stopped_early {
        return Err(PoincareError::Dynamics(DynamicsError::NonClosed { gap: f64::INFINITY }));
    }
    let end = traj.end_state();
    let wrap = |x: f64| (x + PI).rem_euclid(TAU) - PI;
    let gap = (end.t - start.t)
        .abs()
        .max(wrap(end.theta - start.theta).abs() * sys.profile.eval(start.t).radius)
        .max(wrap(end.phi - start.phi).abs());
    let reeb_period = density_integral(&traj, BetaChoice::Canonical);
    Ok(ResonantOrbit { resonance: res, flow_period: traj.end_time(), reeb_period, closure_gap: gap, trajectory: traj })
}
