//! Self-intersections of projected closed orbits.
//!
//! The surface is mapped to the unit sphere by the homeomorphism
//! (t, θ) ↦ (sin(πt/ℓ) cos θ, sin(πt/ℓ) sin θ, −cos(πt/ℓ)), which is smooth
//! across both poles, and the dense polyline is tested arc against arc with
//! great-circle orientation predicates.

use super::{DynamicsError, Trajectory};
use serde::Serialize;
use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntersectionOptions {
    /// Length window half-width ε around 2πm/f for short orbits.
    pub epsilon: f64,
    /// Bound n on the number of self-intersections of long orbits.
    pub max_crossings: usize,
    /// Crossings at a smaller angle (radians) are treated as tangential.
    pub min_angle: f64,
    /// Allowed endpoint mismatch of a closed orbit.
    pub closure_tol: f64,
    /// Polyline vertices per dense-output step.
    pub per_step: usize,
}

impl Default for IntersectionOptions {
    fn default() -> Self {
        Self { epsilon: 0.1, max_crossings: 1, min_angle: 1e-6, closure_tol: 1e-6, per_step: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitClass {
    Short,
    Long,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfIntersections {
    pub count: usize,
    pub class: OrbitClass,
    pub length: f64,
    /// Short-orbit length window [(2π−ε)m/max f, (2π+ε)m/min f].
    pub short_window: (f64, f64),
    pub within_bound: bool,
    pub tangential_rejected: usize,
}

type V3 = [f64; 3];

fn cross(a: V3, b: V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: V3) -> f64 {
    dot(a, a).sqrt()
}

fn on_sphere(ell: f64, t: f64, theta: f64) -> V3 {
    let (s, c) = (PI * t / ell).sin_cos();
    [s * theta.cos(), s * theta.sin(), -c]
}

enum Crossing {
    None,
    Transverse,
    Tangential,
}

/// Do the minor arcs `a0a1` and `b0b1` cross? Endpoints are half-open.
fn arcs_cross(a0: V3, a1: V3, b0: V3, b1: V3, min_angle: f64) -> Crossing {
    let na = cross(a0, a1);
    let nb = cross(b0, b1);
    let (la, lb) = (norm(na), norm(nb));
    if la == 0.0 || lb == 0.0 {
        return Crossing::None;
    }
    // b endpoints on opposite sides of the plane of a, and vice versa
    let sb0 = dot(na, b0);
    let sb1 = dot(na, b1);
    let sa0 = dot(nb, a0);
    let sa1 = dot(nb, a1);
    let straddles = |p: f64, q: f64| (p >= 0.0 && q < 0.0) || (p < 0.0 && q >= 0.0);
    if !(straddles(sb0, sb1) && straddles(sa0, sa1)) {
        return Crossing::None;
    }
    // exclude the antipodal intersection
    let p = cross(na, nb);
    let mid_a = [a0[0] + a1[0], a0[1] + a1[1], a0[2] + a1[2]];
    let mid_b = [b0[0] + b1[0], b0[1] + b1[1], b0[2] + b1[2]];
    if dot(p, mid_a).signum() != dot(p, mid_b).signum() {
        return Crossing::None;
    }
    let sin_angle = norm(p) / (la * lb);
    if sin_angle < min_angle.sin() {
        Crossing::Tangential
    } else {
        Crossing::Transverse
    }
}

pub fn self_intersections(traj: &Trajectory, opts: &IntersectionOptions) -> Result<SelfIntersections, DynamicsError> {
    let sys = &traj.system;
    let ell = sys.ell();
    let start = traj.start;
    let end = traj.end_state();
    let wrap = |x: f64| (x + PI).rem_euclid(TAU) - PI;
    let radius = sys.profile.eval(start.t).radius;
    let gap = (end.t - start.t)
        .abs()
        .max(radius * wrap(end.theta - start.theta).abs())
        .max(wrap(end.phi - start.phi).abs());
    if gap > opts.closure_tol {
        return Err(DynamicsError::NonClosed { gap });
    }

    let mut pts: Vec<V3> = vec![on_sphere(ell, start.t, start.theta)];
    let per = opts.per_step.max(1);
    traj.for_each_piece(|a, b, eval| {
        for k in 1..=per {
            let s = a + (b - a) * k as f64 / per as f64;
            let st = eval(s);
            pts.push(on_sphere(ell, st.t, st.theta));
        }
    });
    // close the loop exactly
    let first = pts[0];
    if let Some(last) = pts.last_mut() {
        *last = first;
    }
    let n = pts.len() - 1;

    // uniform grid hash over the cube [-1, 1]³
    let max_seg = (0..n).map(|i| norm(sub(pts[i + 1], pts[i]))).fold(0.0, f64::max);
    let cell = max_seg.max(1e-3);
    let key = |p: V3| -> [i64; 3] { [(p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64, (p[2] / cell).floor() as i64] };
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for i in 0..n {
        let (ka, kb) = (key(pts[i]), key(pts[i + 1]));
        for x in ka[0].min(kb[0])..=ka[0].max(kb[0]) {
            for y in ka[1].min(kb[1])..=ka[1].max(kb[1]) {
                for z in ka[2].min(kb[2])..=ka[2].max(kb[2]) {
                    grid.entry([x, y, z]).or_default().push(i);
                }
            }
        }
    }
    let mut seen = std::collections::HashSet::new();
    let mut count = 0;
    let mut tangential = 0;
    for bucket in grid.values() {
        for (u, &i) in bucket.iter().enumerate() {
            for &j in &bucket[u + 1..] {
                let (i, j) = if i < j { (i, j) } else { (j, i) };
                if j - i <= 1 || (i == 0 && j == n - 1) || !seen.insert((i, j)) {
                    continue;
                }
                match arcs_cross(pts[i], pts[i + 1], pts[j], pts[j + 1], opts.min_angle) {
                    Crossing::Transverse => count += 1,
                    Crossing::Tangential => tangential += 1,
                    Crossing::None => {}
                }
            }
        }
    }

    let (f_min, f_max) = strength_extremes(traj);
    let m = sys.m;
    let length = m * traj.duration.abs();
    let window = ((TAU - opts.epsilon) * m / f_max, (TAU + opts.epsilon) * m / f_min);
    let class = if count == 0 && length >= window.0 && length <= window.1 { OrbitClass::Short } else { OrbitClass::Long };
    Ok(SelfIntersections {
        count,
        class,
        length,
        short_window: window,
        within_bound: count <= opts.max_crossings,
        tangential_rejected: tangential,
    })
}

fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn strength_extremes(traj: &Trajectory) -> (f64, f64) {
    let ell = traj.system.ell();
    (0..=1024).map(|k| traj.system.strength.eval(ell * k as f64 / 1024.0).value).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}
