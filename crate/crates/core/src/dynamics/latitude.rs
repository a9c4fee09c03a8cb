//! Latitude orbits and the accessible momentum bands of the reduced flow.

use super::{BetaChoice, DynamicsError, System};
use crate::roots::brent;
use serde::Serialize;
use std::f64::consts::TAU;

const SCAN_NODES: usize = 2048;
const MERGE_TOL: f64 = 1e-9;
/// Relative distance (to the momentum range) below which a level counts as
/// critical.
pub const CRITICAL_TOL: f64 = 1e-10;

/// A latitude orbit: t stays at `t0` and sin φ = `sign`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatitudeOrbit {
    pub t0: f64,
    pub sign: i8,
    /// |γ/γ̇| at t0, the speed at which t0 is a latitude for unit strength.
    pub m_t0: f64,
    pub action: f64,
    pub momentum: f64,
    pub xm_period: f64,
    pub reeb_period: f64,
}

/// Connected component of the region Î⁻ ≤ I ≤ Î⁺.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentumBand {
    #[serde(rename = "I")]
    pub level: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    /// False when several bands coexist at this level.
    pub regular: bool,
}

fn latitude_residual(sys: &System, sign: f64, t: f64) -> f64 {
    let d = sys.profile.eval(t);
    sign * sys.m * d.slope - sys.strength.eval(t).value * d.radius
}

fn scan_roots<F: Fn(f64) -> f64>(g: F, nodes: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    let mut prev = g(nodes[0]);
    for k in 1..nodes.len() {
        let x = nodes[k];
        let cur = g(x);
        if prev == 0.0 {
            out.push(nodes[k - 1]);
        } else if prev.signum() != cur.signum() && cur != 0.0 {
            if let Some(r) = brent(&g, nodes[k - 1], x, 1e-15) {
                out.push(r);
            }
        }
        prev = cur;
    }
    if prev == 0.0 {
        out.push(nodes[nodes.len() - 1]);
    }
    out.dedup_by(|x, y| (*x - *y).abs() < MERGE_TOL);
    out
}

fn orbit_at(sys: &System, t0: f64, sign: f64) -> LatitudeOrbit {
    let d = sys.profile.eval(t0);
    let phi = sign * std::f64::consts::FRAC_PI_2;
    let action = sys.contact_density(t0, phi, BetaChoice::Canonical);
    let xm_period = TAU * d.radius / sys.m;
    LatitudeOrbit {
        t0,
        sign: sign as i8,
        m_t0: (d.radius / d.slope).abs(),
        action,
        momentum: sys.m * d.radius * sign - sys.strength.flux_primitive(t0),
        xm_period,
        reeb_period: action * xm_period,
    }
}

/// All latitude orbits at speed `m`, sorted by latitude.
pub fn latitude_orbits(sys: &System) -> Vec<LatitudeOrbit> {
    if sys.m <= 0.0 {
        return Vec::new();
    }
    let ell = sys.ell();
    // the residual vanishes at the poles; scan the open interval
    let pad = 1e-9 * ell;
    let mut nodes = sys.profile.scan_grid(SCAN_NODES);
    nodes[0] = pad;
    nodes[SCAN_NODES] = ell - pad;
    let mut out = Vec::new();
    for sign in [1.0, -1.0] {
        for t0 in scan_roots(|t| latitude_residual(sys, sign, t), &nodes) {
            out.push(orbit_at(sys, t0, sign));
        }
    }
    out.sort_by(|a, b| a.t0.total_cmp(&b.t0));
    out
}

/// (I_min, I_max): the extrema of Î⁻ and Î⁺ over [0, ℓ].
pub fn momentum_range(sys: &System) -> (f64, f64) {
    momentum_range_with(sys, &latitude_orbits(sys))
}

pub(crate) fn momentum_range_with(sys: &System, lats: &[LatitudeOrbit]) -> (f64, f64) {
    // interior extrema of Î± are exactly the latitudes of the matching sign
    let ell = sys.ell();
    let ends = [sys.upper_momentum(0.0), sys.upper_momentum(ell), sys.lower_momentum(0.0), sys.lower_momentum(ell)];
    let mut lo = ends.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = ends.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for l in lats {
        if l.sign > 0 {
            hi = hi.max(l.momentum);
        } else {
            lo = lo.min(l.momentum);
        }
    }
    (lo, hi)
}

/// Bands of regular motion at momentum level `level`.
pub fn turning_latitudes(sys: &System, level: f64) -> Result<Vec<MomentumBand>, DynamicsError> {
    let lats = latitude_orbits(sys);
    turning_latitudes_with(sys, level, &lats)
}

pub(crate) fn turning_latitudes_with(
    sys: &System,
    level: f64,
    lats: &[LatitudeOrbit],
) -> Result<Vec<MomentumBand>, DynamicsError> {
    let (min, max) = momentum_range_with(sys, lats);
    if !(level > min && level < max) {
        return Err(DynamicsError::OutsideRange { level, min, max });
    }
    let scale = CRITICAL_TOL * (max - min);
    if let Some(l) = lats.iter().min_by(|a, b| (a.momentum - level).abs().total_cmp(&(b.momentum - level).abs())) {
        let distance = (l.momentum - level).abs();
        if distance < scale {
            return Err(DynamicsError::CriticalLevel { level, distance });
        }
    }
    let w = |t: f64| (sys.upper_momentum(t) - level).min(level - sys.lower_momentum(t));
    let mut nodes = sys.profile.scan_grid(SCAN_NODES);
    nodes.extend(lats.iter().map(|l| l.t0));
    nodes.sort_by(f64::total_cmp);
    let mut edges = Vec::new();
    let mut prev = w(nodes[0]);
    for k in 1..nodes.len() {
        let cur = w(nodes[k]);
        if (prev > 0.0) != (cur > 0.0) {
            let r = brent(w, nodes[k - 1], nodes[k], 1e-15).unwrap_or(nodes[k]);
            edges.push(r);
        }
        prev = cur;
    }
    let mut bands: Vec<MomentumBand> = edges
        .chunks_exact(2)
        .map(|p| MomentumBand { level, t_lo: p[0], t_hi: p[1], regular: true })
        .collect();
    if bands.len() > 1 {
        for b in &mut bands {
            b.regular = false;
        }
    }
    Ok(bands)
}
