//! The constant m_γ, the contact interval it bounds, and magnetic curvature.

use super::{Profile, Strength};
use crate::roots::golden_max;
use serde::Serialize;

const GRID: usize = 4096;
const REFINE_WIDTH: f64 = 1e-10;

/// sup over (0, ℓ) of |(Γ + γ̇)/γ|.
pub fn m_gamma(profile: &Profile) -> f64 {
    let nodes = profile.scan_grid(GRID);
    let vals: Vec<f64> = nodes.iter().map(|&t| profile.beta_over_radius(t).abs()).collect();
    sup_with_refinement(&nodes, &vals, |t| profile.beta_over_radius(t).abs())
}

/// Refines the three largest local maxima of a sampled function.
fn sup_with_refinement<F: Fn(f64) -> f64>(nodes: &[f64], vals: &[f64], f: F) -> f64 {
    let n = vals.len() - 1;
    let mut peaks: Vec<usize> = (0..=n)
        .filter(|&k| {
            let l = if k > 0 { vals[k - 1] } else { f64::NEG_INFINITY };
            let r = if k < n { vals[k + 1] } else { f64::NEG_INFINITY };
            vals[k] >= l && vals[k] >= r
        })
        .collect();
    peaks.sort_by(|a, b| vals[*b].total_cmp(&vals[*a]));
    let mut best = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for &k in peaks.iter().take(3) {
        let (_, v) = golden_max(&f, nodes[k.max(1) - 1], nodes[(k + 1).min(n)], REFINE_WIDTH);
        best = best.max(v);
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ContactInterval {
    /// Every energy level is of contact type by the quadratic estimate.
    FullRay,
    /// The estimate leaves [minus, plus] undecided.
    Gap { minus: f64, plus: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContactBounds {
    pub m_gamma: f64,
    pub interval: ContactInterval,
}

/// Roots of m² − m_γ m + 1 when m_γ ≥ 2.
pub fn contact_bounds(m_gamma: f64) -> ContactBounds {
    let interval = if m_gamma < 2.0 {
        ContactInterval::FullRay
    } else {
        let plus = 0.5 * (m_gamma + (m_gamma * m_gamma - 4.0).sqrt());
        ContactInterval::Gap { minus: 1.0 / plus, plus }
    };
    ContactBounds { m_gamma, interval }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KmReport {
    pub positive: bool,
    /// inf over t of m²K + f − m|ḟ|.
    pub margin: f64,
    pub argmin: f64,
}

/// Checks positivity of the magnetic curvature at speed parameter `m`.
pub fn km_positive(profile: &Profile, strength: &Strength, m: f64) -> KmReport {
    let nodes = profile.scan_grid(GRID);
    let km = |t: f64| {
        let s = strength.eval(t);
        m * m * profile.curvature(t) + s.value - m * s.d1.abs()
    };
    let vals: Vec<f64> = nodes.iter().map(|&t| -km(t)).collect();
    let (k_best, _) = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let lo = nodes[k_best.max(1) - 1];
    let hi = nodes[(k_best + 1).min(GRID)];
    let (t, v) = golden_max(|t| -km(t), lo, hi, REFINE_WIDTH);
    let (argmin, margin) = if v >= vals[k_best] { (t, -v) } else { (nodes[k_best], -vals[k_best]) };
    KmReport { positive: margin > 0.0, margin, argmin }
}
