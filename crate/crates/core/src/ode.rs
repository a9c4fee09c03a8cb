//! Adaptive Dormand-Prince 8(5,3) integrator with seventh-order dense output.
//!
//! The driver hands every accepted step to an observer as a [`DenseStep`]
//! interpolant. The observer may stop the integration at any time inside the
//! step, which is how events and chart exits are implemented upstream.

use crate::tableau::{A, B, C, D, E3, E5, N_EXT, N_STAGES};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at s = {s}")]
    StepUnderflow { s: f64 },
    #[error("step budget of {max_steps} exhausted at s = {s}")]
    TooManySteps { s: f64, max_steps: usize },
    #[error("non-finite state at s = {s}")]
    NonFinite { s: f64 },
}

#[derive(Clone, Debug)]
pub struct Settings {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub h_max: f64,
    /// Components measured with absolute tolerance only (angles).
    pub angular: Vec<bool>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 5_000_000,
            h_max: f64::INFINITY,
            angular: Vec::new(),
        }
    }
}

impl Settings {
    pub fn with_tol(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

impl Stats {
    pub fn merge(&mut self, o: Stats) {
        self.accepted += o.accepted;
        self.rejected += o.rejected;
        self.evaluations += o.evaluations;
    }
}

/// Polynomial interpolant over one accepted step.
#[derive(Clone, Debug)]
pub struct DenseStep {
    pub s0: f64,
    pub h: f64,
    y0: Vec<f64>,
    // seven coefficient rows of length n, row-major
    coeffs: Vec<f64>,
}

impl DenseStep {
    pub fn dim(&self) -> usize {
        self.y0.len()
    }

    pub fn s1(&self) -> f64 {
        self.s0 + self.h
    }

    pub fn start(&self) -> &[f64] {
        &self.y0
    }

    /// True when `s` lies in the closed step interval.
    pub fn contains(&self, s: f64) -> bool {
        let (lo, hi) = if self.h >= 0.0 { (self.s0, self.s1()) } else { (self.s1(), self.s0) };
        s >= lo && s <= hi
    }

    pub fn eval_into(&self, s: f64, out: &mut [f64]) {
        let n = self.y0.len();
        let x = (s - self.s0) / self.h;
        out.iter_mut().for_each(|v| *v = 0.0);
        for (i, row) in self.coeffs.chunks_exact(n).rev().enumerate() {
            let w = if i % 2 == 0 { x } else { 1.0 - x };
            for (o, c) in out.iter_mut().zip(row) {
                *o = (*o + c) * w;
            }
        }
        for (o, y) in out.iter_mut().zip(&self.y0) {
            *o += y;
        }
    }

    pub fn eval(&self, s: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.y0.len()];
        self.eval_into(s, &mut out);
        out
    }

    pub fn end(&self) -> Vec<f64> {
        self.eval(self.s1())
    }
}

pub enum Control {
    Continue,
    /// Stop the integration at the given time inside the current step.
    Stop(f64),
}

pub struct Outcome {
    pub s: f64,
    pub y: Vec<f64>,
    pub stats: Stats,
    pub stopped: bool,
}

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

struct Scratch {
    k: Vec<Vec<f64>>,
    tmp: Vec<f64>,
    scale: Vec<f64>,
}

fn scale_into(settings: &Settings, y: &[f64], y_new: &[f64], out: &mut [f64]) {
    for i in 0..y.len() {
        let ang = settings.angular.get(i).copied().unwrap_or(false);
        let mag = if ang { 1.0 } else { y[i].abs().max(y_new[i].abs()) };
        out[i] = settings.atol + settings.rtol * mag;
    }
}

fn rms(v: &[f64], scale: &[f64]) -> f64 {
    let s: f64 = v.iter().zip(scale).map(|(a, b)| (a / b) * (a / b)).sum();
    (s / v.len() as f64).sqrt()
}

/// Integrates `dy/ds = f(s, y)` from `s0` towards `s_end` (either direction).
pub fn integrate<F, O>(
    mut f: F,
    s0: f64,
    y0: &[f64],
    s_end: f64,
    settings: &Settings,
    mut observer: O,
) -> Result<Outcome, OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    O: FnMut(&DenseStep) -> Control,
{
    let n = y0.len();
    let dir = if s_end >= s0 { 1.0 } else { -1.0 };
    let mut stats = Stats::default();
    let mut sc = Scratch {
        k: vec![vec![0.0; n]; N_EXT],
        tmp: vec![0.0; n],
        scale: vec![0.0; n],
    };
    let mut s = s0;
    let mut y = y0.to_vec();
    if s_end == s0 {
        return Ok(Outcome { s, y, stats, stopped: false });
    }
    let mut f0 = vec![0.0; n];
    f(s, &y, &mut f0);
    stats.evaluations += 1;

    let mut h = initial_step(&mut f, s, &y, &f0, dir, settings, &mut stats).min(settings.h_max);
    let mut y_new = vec![0.0; n];
    let mut f_new = vec![0.0; n];
    let mut rejected_last = false;
    let h_min_rel = 16.0 * f64::EPSILON;

    loop {
        if stats.accepted >= settings.max_steps {
            return Err(OdeError::TooManySteps { s, max_steps: settings.max_steps });
        }
        let remaining = (s_end - s) * dir;
        if remaining <= 0.0 {
            break;
        }
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        if h < h_min_rel * s.abs().max(1.0) {
            return Err(OdeError::StepUnderflow { s });
        }
        let hs = h * dir;

        // stages
        sc.k[0].copy_from_slice(&f0);
        for st in 1..N_STAGES {
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..st {
                    acc += A[st][j] * sc.k[j][i];
                }
                sc.tmp[i] = y[i] + hs * acc;
            }
            let (head, tail) = sc.k.split_at_mut(st);
            let _ = head;
            f(s + C[st] * hs, &sc.tmp, &mut tail[0]);
        }
        stats.evaluations += N_STAGES - 1;
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..N_STAGES {
                acc += B[j] * sc.k[j][i];
            }
            y_new[i] = y[i] + hs * acc;
        }
        if y_new.iter().any(|v| !v.is_finite()) {
            h *= MIN_FACTOR;
            rejected_last = true;
            stats.rejected += 1;
            continue;
        }
        f(s + hs, &y_new, &mut f_new);
        stats.evaluations += 1;
        sc.k[N_STAGES].copy_from_slice(&f_new);

        scale_into(settings, &y, &y_new, &mut sc.scale);
        let mut e5 = vec![0.0; n];
        let mut e3 = vec![0.0; n];
        for i in 0..n {
            let (mut a5, mut a3) = (0.0, 0.0);
            for j in 0..=N_STAGES {
                a5 += E5[j] * sc.k[j][i];
                a3 += E3[j] * sc.k[j][i];
            }
            e5[i] = a5 / sc.scale[i];
            e3[i] = a3 / sc.scale[i];
        }
        let n5: f64 = e5.iter().map(|v| v * v).sum();
        let n3: f64 = e3.iter().map(|v| v * v).sum();
        let err = if n5 == 0.0 && n3 == 0.0 {
            0.0
        } else {
            h * n5 / ((n5 + 0.01 * n3) * n as f64).sqrt()
        };
        let err = if err.is_finite() { err } else { f64::INFINITY };

        if err < 1.0 {
            let mut factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-1.0 / 8.0)).min(MAX_FACTOR)
            };
            if rejected_last {
                factor = factor.min(1.0);
            }
            stats.accepted += 1;
            let step = dense_step(&mut f, s, hs, &y, &y_new, &f_new, &mut sc, &mut stats);
            match observer(&step) {
                Control::Continue => {}
                Control::Stop(s_stop) => {
                    let y_stop = step.eval(s_stop);
                    return Ok(Outcome { s: s_stop, y: y_stop, stats, stopped: true });
                }
            }
            s = if last { s_end } else { s + hs };
            y.copy_from_slice(&y_new);
            f0.copy_from_slice(&f_new);
            if last {
                break;
            }
            h = (h * factor).min(settings.h_max);
            rejected_last = false;
        } else {
            h *= (SAFETY * err.powf(-1.0 / 8.0)).max(MIN_FACTOR);
            rejected_last = true;
            stats.rejected += 1;
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(OdeError::NonFinite { s });
        }
    }
    Ok(Outcome { s, y, stats, stopped: false })
}

#[allow(clippy::too_many_arguments)]
fn dense_step<F>(
    f: &mut F,
    s: f64,
    hs: f64,
    y: &[f64],
    y_new: &[f64],
    f_new: &[f64],
    sc: &mut Scratch,
    stats: &mut Stats,
) -> DenseStep
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    for st in N_STAGES + 1..N_EXT {
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..st {
                acc += A[st][j] * sc.k[j][i];
            }
            sc.tmp[i] = y[i] + hs * acc;
        }
        let (_, tail) = sc.k.split_at_mut(st);
        f(s + C[st] * hs, &sc.tmp, &mut tail[0]);
    }
    stats.evaluations += N_EXT - N_STAGES - 1;
    let mut coeffs = vec![0.0; 7 * n];
    for i in 0..n {
        let dy = y_new[i] - y[i];
        coeffs[i] = dy;
        coeffs[n + i] = hs * sc.k[0][i] - dy;
        coeffs[2 * n + i] = 2.0 * dy - hs * (f_new[i] + sc.k[0][i]);
        for (r, drow) in D.iter().enumerate() {
            let mut acc = 0.0;
            for j in 0..N_EXT {
                acc += drow[j] * sc.k[j][i];
            }
            coeffs[(3 + r) * n + i] = hs * acc;
        }
    }
    DenseStep { s0: s, h: hs, y0: y.to_vec(), coeffs }
}

fn initial_step<F>(f: &mut F, s: f64, y: &[f64], f0: &[f64], dir: f64, settings: &Settings, stats: &mut Stats) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let mut scale = vec![0.0; n];
    scale_into(settings, y, y, &mut scale);
    let d0 = rms(y, &scale);
    let d1 = rms(f0, &scale);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * dir * b).collect();
    let mut f1 = vec![0.0; n];
    f(s + h0 * dir, &y1, &mut f1);
    stats.evaluations += 1;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff, &scale) / h0;
    let h1 = if d1 <= 1e-15 && d2 <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 8.0)
    };
    (100.0 * h0).min(h1)
}

/// Locates a sign change of `g` inside one step by bisection on the
/// interpolant. `g` receives the time and the interpolated state.
pub fn refine_event<G>(step: &DenseStep, mut lo: f64, mut hi: f64, mut g: G, time_tol: f64) -> f64
where
    G: FnMut(f64, &[f64]) -> f64,
{
    let mut buf = vec![0.0; step.dim()];
    step.eval_into(lo, &mut buf);
    let mut g_lo = g(lo, &buf);
    for _ in 0..200 {
        if (hi - lo).abs() <= time_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        step.eval_into(mid, &mut buf);
        let gm = g(mid, &buf);
        if gm == 0.0 {
            return mid;
        }
        if gm.signum() == g_lo.signum() {
            lo = mid;
            g_lo = gm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_long_run() {
        let settings = Settings::default();
        let out = integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &[1.0, 0.0],
            100.0,
            &settings,
            |_| Control::Continue,
        )
        .unwrap();
        assert!((out.y[0] - 100f64.cos()).abs() < 1e-8);
        assert!((out.y[1] + 100f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn dense_output_is_accurate_inside_steps() {
        let settings = Settings::with_tol(1e-12, 1e-14);
        let mut worst: f64 = 0.0;
        integrate(
            |_, y, dy| dy[0] = y[0],
            0.0,
            &[1.0],
            3.0,
            &settings,
            |st| {
                for k in 0..=10 {
                    let s = st.s0 + st.h * k as f64 / 10.0;
                    worst = worst.max((st.eval(s)[0] - s.exp()).abs() / s.exp());
                }
                Control::Continue
            },
        )
        .unwrap();
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn backward_and_stop() {
        let settings = Settings::default();
        let out = integrate(
            |_, y, dy| dy[0] = -y[0],
            2.0,
            &[1.0],
            0.0,
            &settings,
            |st| {
                let (a, b) = (st.start()[0], st.end()[0]);
                if (a - 2.0) * (b - 2.0) <= 0.0 {
                    Control::Stop(refine_event(st, st.s0, st.s1(), |_, y| y[0] - 2.0, 1e-13))
                } else {
                    Control::Continue
                }
            },
        )
        .unwrap();
        assert!(out.stopped);
        // y(s) = exp(2 - s) hits 2 at s = 2 - ln 2
        assert!((out.s - (2.0 - 2f64.ln())).abs() < 1e-11);
    }
}
