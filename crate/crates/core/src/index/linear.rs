//! Linearised Reeb flow in the frame (Ȟ, X̌) of the contact planes.
//!
//! With X = cos φ ∂_t − (γ̇ sin φ/γ) ∂_φ + (sin φ/γ) ∂_θ, its rotation
//! H = −sin φ ∂_t − (γ̇ cos φ/γ) ∂_φ + (cos φ/γ) ∂_θ and V = ∂_φ, the frame
//! is Ȟ = (H + (β_θ cos φ/γ) V)/√h, X̌ = (X + (β_θ sin φ/γ − m) V)/√h and
//! the Reeb field is R = (mX + fV)/h. Coordinates are ordered (t, φ, θ).

use super::{IndexError, Mat2, Provenance, SymplecticPath, IDENTITY};
use crate::dynamics::{BetaChoice, DynamicsError, FullState, LatitudeOrbit, System, CHART_MARGIN};
use crate::ode::{self, Control, DenseStep, Settings};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

type V3 = [f64; 3];

/// Closed orbit whose linearisation is wanted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrbitSpec {
    Latitude(LatitudeOrbit),
    /// Closed orbit through `start` with flow-time period `flow_period`.
    Periodic { start: FullState, flow_period: f64 },
}

fn beta_ratio(sys: &System, beta: BetaChoice, t: f64) -> f64 {
    match beta {
        BetaChoice::Canonical => sys.strength.beta_over_radius(t),
        BetaChoice::Zero => 0.0,
    }
}

/// Constant generator [[0, −1], [b, 0]] of a latitude, with
/// b = f/h − m·H(h)/h² and H(h) = −sin φ ∂_t h.
pub fn latitude_generator(sys: &System, lat: &LatitudeOrbit, beta: BetaChoice) -> Mat2 {
    let t = lat.t0;
    let sign = lat.sign as f64;
    let d = sys.profile.eval(t);
    let s = sys.strength.eval(t);
    let m = sys.m;
    let h = sys.contact_density(t, sign * FRAC_PI_2, beta);
    let ratio_dt = match beta {
        BetaChoice::Canonical => {
            let b = sys.strength.flux_primitive(t) + d.slope;
            let bdot = d.radius * s.value + d.second;
            (bdot * d.radius - b * d.slope) / (d.radius * d.radius)
        }
        BetaChoice::Zero => 0.0,
    };
    let dh_dt = -m * sign * ratio_dt + s.d1;
    let hh = -sign * dh_dt;
    [[0.0, -1.0], [s.value / h - m * hh / (h * h), 0.0]]
}

struct Frame {
    z: [V3; 2],
    r: V3,
}

fn frame(sys: &System, beta: BetaChoice, x: V3) -> Frame {
    let (t, phi) = (x[0], x[1]);
    let d = sys.profile.eval(t);
    let f = sys.strength.eval(t).value;
    let m = sys.m;
    let (sp, cp) = phi.sin_cos();
    let br = beta_ratio(sys, beta, t);
    let h = m * m - m * br * sp + f;
    let rh = h.sqrt();
    let xv = [cp, -d.slope * sp / d.radius, sp / d.radius];
    let hv = [-sp, -d.slope * cp / d.radius, cp / d.radius];
    let zh = [hv[0] / rh, (hv[1] + br * cp) / rh, hv[2] / rh];
    let zx = [xv[0] / rh, (xv[1] + br * sp - m) / rh, xv[2] / rh];
    let r = [m * xv[0] / h, (m * xv[1] + f) / h, m * xv[2] / h];
    Frame { z: [zh, zx], r }
}

// rows of the inverse of the matrix with columns (Ȟ, X̌, R), first two kept
fn coframe(fr: &Frame) -> [V3; 2] {
    let (a, b, c) = (fr.z[0], fr.z[1], fr.r);
    let cross = |u: V3, v: V3| [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
    let bc = cross(b, c);
    let ca = cross(c, a);
    let det = a[0] * bc[0] + a[1] * bc[1] + a[2] * bc[2];
    [bc.map(|x| x / det), ca.map(|x| x / det)]
}

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Generator B = Ψ̇Ψ⁻¹ of the linearised Reeb flow at `state`, by central
/// differences: B = C·DR·Z + (∂_R C)·Z with C the coframe dual to Z on ξ.
pub fn reeb_generator_fd(sys: &System, state: FullState, beta: BetaChoice) -> Result<Mat2, IndexError> {
    let eps = CHART_MARGIN * sys.ell();
    if !(state.t > eps && state.t < sys.ell() - eps) {
        return Err(IndexError::Dynamics(DynamicsError::PoleChart { t: state.t }));
    }
    let x = [state.t, state.phi, state.theta];
    let fr = frame(sys, beta, x);
    let co = coframe(&fr);
    let step = 1e-6;
    // DR·Z_j as directional derivatives of R along Z_j
    let shift = |x: V3, v: V3, e: f64| [x[0] + e * v[0], x[1] + e * v[1], x[2] + e * v[2]];
    let mut b = [[0.0; 2]; 2];
    for j in 0..2 {
        let rp = frame(sys, beta, shift(x, fr.z[j], step)).r;
        let rm = frame(sys, beta, shift(x, fr.z[j], -step)).r;
        let dr = [(rp[0] - rm[0]) / (2.0 * step), (rp[1] - rm[1]) / (2.0 * step), (rp[2] - rm[2]) / (2.0 * step)];
        for i in 0..2 {
            b[i][j] = dot(co[i], dr);
        }
    }
    let cp = coframe(&frame(sys, beta, shift(x, fr.r, step)));
    let cm = coframe(&frame(sys, beta, shift(x, fr.r, -step)));
    for i in 0..2 {
        let dc = [
            (cp[i][0] - cm[i][0]) / (2.0 * step),
            (cp[i][1] - cm[i][1]) / (2.0 * step),
            (cp[i][2] - cm[i][2]) / (2.0 * step),
        ];
        for j in 0..2 {
            b[i][j] += dot(dc, fr.z[j]);
        }
    }
    Ok(b)
}

const CLOSURE_TOL: f64 = 1e-6;

/// Ψ over `k_iterates` Reeb periods of the orbit.
pub fn linearized_path(sys: &System, orbit: &OrbitSpec, k_iterates: usize, beta: BetaChoice) -> Result<SymplecticPath, IndexError> {
    let k = k_iterates.max(1) as f64;
    match orbit {
        OrbitSpec::Latitude(lat) => {
            let b = latitude_generator(sys, lat, beta);
            let h = sys.contact_density(lat.t0, lat.sign as f64 * FRAC_PI_2, beta);
            SymplecticPath::exponential(&b, k * h * lat.xm_period)
        }
        OrbitSpec::Periodic { start, flow_period } => integrated_path(sys, *start, k * flow_period, beta),
    }
}

fn integrated_path(sys: &System, start: FullState, duration: f64, beta: BetaChoice) -> Result<SymplecticPath, IndexError> {
    // y = (t, φ, θ, τ, Ψ00, Ψ01, Ψ10, Ψ11)
    let mut failure: Option<IndexError> = None;
    let mut rhs = |_: f64, y: &[f64], dy: &mut [f64]| {
        let st = FullState::new(y[0], y[1], y[2]);
        let v = sys.field_raw(st.t, st.phi);
        dy[..3].copy_from_slice(&v);
        let h = sys.contact_density(st.t, st.phi, beta);
        dy[3] = h;
        match reeb_generator_fd(sys, st, beta) {
            Ok(b) => {
                let p = [[y[4], y[5]], [y[6], y[7]]];
                let bp = super::mat_mul(&b, &p);
                dy[4] = h * bp[0][0];
                dy[5] = h * bp[0][1];
                dy[6] = h * bp[1][0];
                dy[7] = h * bp[1][1];
            }
            Err(e) => {
                failure.get_or_insert(e);
                dy[4..].fill(f64::NAN);
            }
        }
    };
    let y0 = [start.t, start.phi, start.theta, 0.0, 1.0, 0.0, 0.0, 1.0];
    let settings = Settings {
        rtol: 1e-10,
        atol: 1e-12,
        max_steps: 2_000_000,
        h_max: f64::INFINITY,
        angular: vec![false, true, true, false, false, false, false, false],
    };
    let mut times = vec![0.0];
    let mut samples = vec![IDENTITY];
    let mut buf = [0.0; 8];
    let out = ode::integrate(&mut rhs, 0.0, &y0, duration, &settings, |step: &DenseStep| {
        for j in 1..=4 {
            step.eval_into(step.s0 + step.h * j as f64 / 4.0, &mut buf);
            times.push(buf[3]);
            samples.push([[buf[4], buf[5]], [buf[6], buf[7]]]);
        }
        Control::Continue
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let out = out.map_err(DynamicsError::from)?;
    let wrap = |x: f64| (x + PI).rem_euclid(TAU) - PI;
    let gap = (out.y[0] - start.t).abs().max(wrap(out.y[1] - start.phi).abs()).max(wrap(out.y[2] - start.theta).abs());
    if gap > CLOSURE_TOL {
        return Err(IndexError::NonClosedOrbit { gap });
    }
    SymplecticPath::new(times, samples, Provenance::Integrated)
}
