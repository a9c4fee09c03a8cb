//! Winding intervals and Conley-Zehnder indices of paths in Sp(1), the
//! linearised Reeb flow in a global frame, and the index-side checks of
//! dynamical convexity.
//!
//! Positive winding is counter-clockwise: the generator J = [[0, −1], [1, 0]]
//! rotates every vector once per 2π.

mod convex;
mod cover;
mod linear;

pub use convex::{dynconvex_report, DynConvexOptions, DynConvexReport, LatitudeIndex, NormSample};
pub use cover::{quaternion_cover_check, CoverCheck, Quat};
pub use linear::{latitude_generator, linearized_path, reeb_generator_fd, OrbitSpec};

use crate::dynamics::DynamicsError;
use crate::roots::golden_max;
use serde::Serialize;
use std::f64::consts::{PI, TAU};
use thiserror::Error;

pub type Mat2 = [[f64; 2]; 2];

pub const J_ST: Mat2 = [[0.0, -1.0], [1.0, 0.0]];
pub const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

pub fn det(a: &Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// Frobenius norm of a − b.
pub fn dist(a: &Mat2, b: &Mat2) -> f64 {
    let mut s = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            s += (a[i][j] - b[i][j]).powi(2);
        }
    }
    s.sqrt()
}

/// exp(τB) for a traceless B, in closed form.
pub fn expm_traceless(b: &Mat2, tau: f64) -> Mat2 {
    // B² = −det(B)·Id
    let d = det(b);
    let (c, s) = if d > 0.0 {
        let w = d.sqrt();
        ((w * tau).cos(), (w * tau).sin() / w)
    } else if d < 0.0 {
        let w = (-d).sqrt();
        ((w * tau).cosh(), (w * tau).sinh() / w)
    } else {
        (1.0, tau)
    };
    [[c + s * b[0][0], s * b[0][1]], [s * b[1][0], c + s * b[1][1]]]
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndexError {
    #[error("invalid symplectic path: {0}")]
    InvalidPath(String),
    #[error("path rotates a vector by more than π/2 between samples near t = {t}")]
    UnderResolved { t: f64 },
    #[error("orbit does not close: endpoint gap {gap:e}")]
    NonClosedOrbit { gap: f64 },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    AnalyticExponential,
    Integrated,
}

/// A sampled path Ψ: [0, T] → Sp(1) with Ψ(0) = Id.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymplecticPath {
    pub period: f64,
    pub times: Vec<f64>,
    pub samples: Vec<Mat2>,
    pub provenance: Provenance,
}

const DET_TOL: f64 = 1e-8;

impl SymplecticPath {
    pub fn new(times: Vec<f64>, samples: Vec<Mat2>, provenance: Provenance) -> Result<Self, IndexError> {
        if times.len() < 2 || times.len() != samples.len() {
            return Err(IndexError::InvalidPath("need at least two matching samples".into()));
        }
        if times[0] != 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(IndexError::InvalidPath("times must start at 0 and increase".into()));
        }
        if samples[0] != IDENTITY {
            return Err(IndexError::InvalidPath("Ψ(0) must be the identity".into()));
        }
        if let Some((k, m)) = samples.iter().enumerate().find(|(_, m)| (det(m) - 1.0).abs() > DET_TOL) {
            return Err(IndexError::InvalidPath(format!("det Ψ = {} at t = {}", det(m), times[k])));
        }
        let period = times[times.len() - 1];
        Ok(Self { period, times, samples, provenance })
    }

    /// Ψ(t) = exp(tB) on [0, T], sampled finely enough for winding.
    pub fn exponential(b: &Mat2, period: f64) -> Result<Self, IndexError> {
        let speed = b.iter().flatten().map(|x| x.abs()).sum::<f64>();
        let n = ((period * speed / (PI / 16.0)).ceil() as usize).max(256);
        let times: Vec<f64> = (0..=n).map(|k| period * k as f64 / n as f64).collect();
        let samples = times.iter().map(|&t| if t == 0.0 { IDENTITY } else { expm_traceless(b, t) }).collect();
        Self::new(times, samples, Provenance::AnalyticExponential)
    }

    /// exp(2πϑJt) on [0, 1].
    pub fn rotation(vartheta: f64) -> Result<Self, IndexError> {
        let b = [[0.0, -TAU * vartheta], [TAU * vartheta, 0.0]];
        Self::exponential(&b, 1.0)
    }

    pub fn end(&self) -> &Mat2 {
        &self.samples[self.samples.len() - 1]
    }

    /// Total angle swept by Ψ(t)v, divided by 2π.
    pub fn winding_of(&self, alpha: f64) -> Result<f64, IndexError> {
        let v = [alpha.cos(), alpha.sin()];
        let mut prev = alpha;
        let mut total = 0.0;
        for (k, m) in self.samples.iter().enumerate().skip(1) {
            let w = [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]];
            let ang = w[1].atan2(w[0]);
            let step = (ang - prev + PI).rem_euclid(TAU) - PI;
            if step.abs() > PI / 2.0 {
                return Err(IndexError::UnderResolved { t: self.times[k] });
            }
            total += step;
            prev = ang;
        }
        Ok(total / TAU)
    }
}

/// The closed interval I(Ψ) of normalised windings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindingInterval {
    pub lo: f64,
    pub hi: f64,
}

impl WindingInterval {
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

const SNAP_TOL: f64 = 1e-7;
const REFINE_WIDTH: f64 = 1e-10;

// Values whose images under x ↦ e^{2πix} are fixed by Ψ(T).
fn snap_candidates(end: &Mat2) -> Vec<f64> {
    let tr = end[0][0] + end[1][1];
    let mut out = Vec::new();
    if (tr - 2.0).abs() < 1e-8 {
        out.push(0.0);
    }
    if (tr + 2.0).abs() < 1e-8 {
        out.push(0.5);
    }
    let orth = (end[0][0] - end[1][1]).abs() + (end[0][1] + end[1][0]).abs();
    if orth < 1e-9 {
        out.push((end[1][0].atan2(end[0][0]) / TAU).rem_euclid(1.0));
    }
    out
}

fn snap(x: f64, candidates: &[f64]) -> f64 {
    for &c in candidates {
        let k = (x - c).round();
        if (x - (k + c)).abs() < SNAP_TOL {
            return k + c;
        }
    }
    x
}

/// I(Ψ) from `n_dirs` projective directions with refined extremes.
pub fn winding_interval(path: &SymplecticPath, n_dirs: usize) -> Result<WindingInterval, IndexError> {
    let n = n_dirs.max(8);
    let h = PI / n as f64;
    let ws: Vec<f64> = (0..n).map(|k| path.winding_of(k as f64 * h)).collect::<Result<_, _>>()?;
    let (k_max, _) = ws.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    let (k_min, _) = ws.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    // the winding is π-periodic in the direction, so neighbours may wrap
    let refined_max = |k: usize, sign: f64| -> f64 {
        let x0 = k as f64 * h;
        let (_, v) = golden_max(
            |x| path.winding_of(x).map(|w| sign * w).unwrap_or(f64::NEG_INFINITY),
            x0 - h,
            x0 + h,
            REFINE_WIDTH,
        );
        v.max(sign * ws[k])
    };
    let hi = refined_max(k_max, 1.0);
    let lo = -refined_max(k_min, -1.0);
    let cands = snap_candidates(path.end());
    Ok(WindingInterval { lo: snap(lo, &cands), hi: snap(hi, &cands) })
}

/// Lower and upper Conley-Zehnder indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaslovData {
    pub interval: WindingInterval,
    pub mu_lower: i64,
    pub mu_upper: i64,
    pub degenerate: bool,
}

const INTEGER_TOL: f64 = 1e-9;

fn as_integer(x: f64) -> Option<i64> {
    let k = x.round();
    ((x - k).abs() < INTEGER_TOL).then_some(k as i64)
}

pub fn maslov_from_interval(interval: WindingInterval) -> MaslovData {
    let (a, b) = (interval.lo, interval.hi);
    let (mu_lower, mu_upper, degenerate) = match (as_integer(a), as_integer(b)) {
        (Some(k), Some(l)) if k == l => (2 * k - 1, 2 * k + 1, true),
        (Some(k), _) => (2 * k, 2 * k + 1, true),
        (_, Some(k)) => (2 * k - 1, 2 * k, true),
        _ => {
            let k = a.ceil();
            if k < b {
                (2 * k as i64, 2 * k as i64, false)
            } else {
                let k = a.floor() as i64;
                (2 * k + 1, 2 * k + 1, false)
            }
        }
    };
    MaslovData { interval, mu_lower, mu_upper, degenerate }
}

pub fn maslov(path: &SymplecticPath) -> Result<MaslovData, IndexError> {
    Ok(maslov_from_interval(winding_interval(path, 720)?))
}

/// Concatenation of `k` copies of the path: Ψ(t + jT) = Ψ(t)Ψ(T)^j.
pub fn iterate(path: &SymplecticPath, k: usize) -> Result<SymplecticPath, IndexError> {
    let mut times = vec![0.0];
    let mut samples = vec![IDENTITY];
    let mut base = IDENTITY;
    for j in 0..k {
        for (t, m) in path.times.iter().zip(&path.samples).skip(1) {
            times.push(j as f64 * path.period + t);
            samples.push(mat_mul(m, &base));
        }
        base = mat_mul(path.end(), &base);
    }
    SymplecticPath::new(times, samples, path.provenance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_table() {
        for (th, lo, hi) in [(0.3, 1, 1), (1.0, 1, 3), (1.5, 3, 3)] {
            let m = maslov(&SymplecticPath::rotation(th).unwrap()).unwrap();
            assert_eq!((m.mu_lower, m.mu_upper), (lo, hi), "ϑ = {th}: {m:?}");
        }
    }

    #[test]
    fn hyperbolic_interval() {
        let b = [[1.0, 0.0], [0.0, -1.0]];
        let p = SymplecticPath::exponential(&b, 2.0).unwrap();
        let i = winding_interval(&p, 720).unwrap();
        assert!(i.contains(0.0) && i.lo > -0.25 && i.hi < 0.25, "{i:?}");
    }

    #[test]
    fn bad_paths_are_rejected() {
        assert!(SymplecticPath::new(vec![0.0, 1.0], vec![IDENTITY, [[2.0, 0.0], [0.0, 1.0]]], Provenance::Integrated).is_err());
        let coarse = SymplecticPath::new(vec![0.0, 1.0], vec![IDENTITY, [[-1.0, 0.0], [0.0, -1.0]]], Provenance::Integrated).unwrap();
        assert!(matches!(winding_interval(&coarse, 16), Err(IndexError::UnderResolved { .. })));
    }
}
