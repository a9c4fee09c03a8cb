//! Generator curves of the built-in profile families.
//!
//! Each curve reports its arclength length and the jet (γ, γ̇, γ̈, γ⃛) at an
//! arclength parameter. Normalisation and mirroring are applied on top of a
//! curve by [`super::Profile`].

use crate::jet::Jet;
use crate::quad::gl10;
use std::f64::consts::PI;
use std::fmt::Debug;

pub trait Curve: Send + Sync + Debug {
    fn length(&self) -> f64;
    fn jet(&self, t: f64) -> [f64; 4];
}

#[derive(Debug, Clone, Copy)]
pub struct UnitSphere;

impl Curve for UnitSphere {
    fn length(&self) -> f64 {
        PI
    }
    fn jet(&self, t: f64) -> [f64; 4] {
        let (s, c) = t.sin_cos();
        [s, c, -s, -c]
    }
}

/// Meridian of the spheroid x²/a² + y²/a² + z²/c² = 1, arclength parametrised
/// from the south pole.
#[derive(Debug, Clone)]
pub struct EllipseArc {
    a: f64,
    c: f64,
    // arclength at ψ_k = kπ/N
    table: Vec<f64>,
}

impl EllipseArc {
    const PANELS: usize = 512;

    pub fn new(a: f64, c: f64) -> Self {
        let mut table = Vec::with_capacity(Self::PANELS + 1);
        table.push(0.0);
        let dpsi = PI / Self::PANELS as f64;
        let mut acc = 0.0;
        for k in 0..Self::PANELS {
            let lo = k as f64 * dpsi;
            acc += gl10(|p| Self::speed_raw(a, c, p), lo, lo + dpsi);
            table.push(acc);
        }
        Self { a, c, table }
    }

    fn speed_raw(a: f64, c: f64, psi: f64) -> f64 {
        let s = psi.sin();
        (a * a + (c * c - a * a) * s * s).sqrt()
    }

    fn arclength(&self, psi: f64) -> f64 {
        let dpsi = PI / Self::PANELS as f64;
        let k = ((psi / dpsi).floor() as usize).min(Self::PANELS - 1);
        let lo = k as f64 * dpsi;
        self.table[k] + gl10(|p| Self::speed_raw(self.a, self.c, p), lo, psi)
    }

    fn angle_at(&self, t: f64) -> f64 {
        let ell = self.length();
        let t = t.clamp(0.0, ell);
        let k = self.table.partition_point(|&v| v <= t).clamp(1, Self::PANELS);
        let dpsi = PI / Self::PANELS as f64;
        let (t0, t1) = (self.table[k - 1], self.table[k]);
        let mut psi = (k - 1) as f64 * dpsi + dpsi * (t - t0) / (t1 - t0);
        for _ in 0..8 {
            let step = (self.arclength(psi) - t) / Self::speed_raw(self.a, self.c, psi);
            psi -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        psi
    }
}

impl Curve for EllipseArc {
    fn length(&self) -> f64 {
        *self.table.last().unwrap()
    }

    fn jet(&self, t: f64) -> [f64; 4] {
        let psi = self.angle_at(t);
        let p = Jet::variable(psi);
        let sin = p.sin();
        let speed = (sin * sin * (self.c * self.c - self.a * self.a) + self.a * self.a).sqrt();
        // jet of the arclength map ψ ↦ s at ψ, inverted
        let arc = Jet::new(t, speed.v, speed.d1, speed.d2);
        let inv = arc.inverse_derivatives();
        let angle = Jet::new(psi, inv[0], inv[1], inv[2]);
        (angle.sin() * self.a).to_array()
    }
}

/// Smooth monotone map x ↦ x + L·σ((x − centre)/half_width) that inserts
/// length `L` inside the window, with σ′ ∝ (1 − y²)⁴.
#[derive(Debug, Clone, Copy)]
pub struct Stretch {
    pub centre: f64,
    pub half_width: f64,
    pub extra: f64,
}

const BUMP_NORM: f64 = 315.0 / 256.0;

impl Stretch {
    fn bump(y: f64) -> [f64; 3] {
        if y.abs() >= 1.0 {
            return [0.0; 3];
        }
        let q = 1.0 - y * y;
        let q3 = q * q * q;
        [
            BUMP_NORM * q3 * q,
            BUMP_NORM * (-8.0 * y * q3),
            BUMP_NORM * (-8.0 * q3 + 48.0 * y * y * q * q),
        ]
    }

    fn step(y: f64) -> f64 {
        if y <= -1.0 {
            return 0.0;
        }
        if y >= 1.0 {
            return 1.0;
        }
        let y2 = y * y;
        let p = y * (1.0 - y2 * (4.0 / 3.0 - y2 * (6.0 / 5.0 - y2 * (4.0 / 7.0 - y2 / 9.0))));
        BUMP_NORM * (p + 128.0 / 315.0)
    }

    /// Jet of the map at `x` (value and three derivatives).
    pub fn jet(&self, x: f64) -> Jet {
        let w = self.half_width;
        let y = (x - self.centre) / w;
        let b = Self::bump(y);
        let l = self.extra;
        Jet::new(
            x + l * Self::step(y),
            1.0 + l * b[0] / w,
            l * b[1] / (w * w),
            l * b[2] / (w * w * w),
        )
    }

    pub fn inverse(&self, s: f64) -> f64 {
        let lo = self.centre - self.half_width;
        let hi = self.centre + self.half_width;
        if s <= lo {
            return s;
        }
        if s >= hi + self.extra {
            return s - self.extra;
        }
        let (mut a, mut b) = (lo, hi);
        let mut x = lo + (s - lo) / (hi + self.extra - lo) * (hi - lo);
        for _ in 0..100 {
            let j = self.jet(x);
            let r = j.v - s;
            if r > 0.0 {
                b = x;
            } else {
                a = x;
            }
            let mut nx = x - r / j.d1;
            if !(nx > a && nx < b) {
                nx = 0.5 * (a + b);
            }
            if (nx - x).abs() < 1e-16 * (1.0 + x.abs()) {
                return nx;
            }
            x = nx;
        }
        x
    }

    /// ∫ g(x)·σ′ over the window, i.e. the area added per unit of `extra`
    /// when the stretched curve carries profile `g`.
    pub fn weighted_mean<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        let w = self.half_width;
        let f = |y: f64| g(self.centre + w * y) * Self::bump(y)[0];
        (0..16)
            .map(|k| {
                let a = -1.0 + k as f64 / 8.0;
                gl10(f, a, a + 0.125)
            })
            .sum()
    }
}

/// Round sphere of radius `radius` with one stretched window.
#[derive(Debug, Clone, Copy)]
pub struct StretchedSmallSphere {
    pub radius: f64,
    pub stretch: Stretch,
}

impl StretchedSmallSphere {
    pub fn small_jet(&self, x: f64) -> [f64; 4] {
        let a = self.radius;
        let (s, c) = (x / a).sin_cos();
        [a * s, c, -s / a, -c / (a * a)]
    }

    /// Area ∫γ of the stretched curve, linear in the inserted length.
    pub fn area(&self) -> f64 {
        let a = self.radius;
        2.0 * a * a + self.stretch.extra * self.stretch.weighted_mean(|x| a * (x / a).sin())
    }
}

impl Curve for StretchedSmallSphere {
    fn length(&self) -> f64 {
        PI * self.radius + self.stretch.extra
    }

    fn jet(&self, t: f64) -> [f64; 4] {
        let x = self.stretch.inverse(t);
        let inv = self.stretch.jet(x).inverse_derivatives();
        let xj = Jet::new(x, inv[0], inv[1], inv[2]);
        let g = self.small_jet(x);
        xj.compose(g).to_array()
    }
}

/// Sampled profile represented by its odd 2ℓ-periodic sine series, which
/// makes all even derivatives vanish at both poles.
#[derive(Debug, Clone)]
pub struct SineSeries {
    ell: f64,
    coeffs: Vec<f64>,
}

impl SineSeries {
    /// `values[i]` is γ at `i·ℓ/(n−1)`; endpoints are expected to be zero.
    pub fn from_samples(ell: f64, values: &[f64]) -> Self {
        let n = values.len() - 1;
        let mut coeffs = vec![0.0; n.saturating_sub(1)];
        for (k, ck) in coeffs.iter_mut().enumerate() {
            let kk = (k + 1) as f64;
            let mut s = 0.0;
            for (j, v) in values.iter().enumerate().take(n).skip(1) {
                s += v * (PI * kk * j as f64 / n as f64).sin();
            }
            *ck = 2.0 * s / n as f64;
        }
        Self { ell, coeffs }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }
}

impl Curve for SineSeries {
    fn length(&self) -> f64 {
        self.ell
    }

    fn jet(&self, t: f64) -> [f64; 4] {
        let w = PI / self.ell;
        let (s1, c1) = (w * t).sin_cos();
        let (mut s, mut c) = (s1, c1);
        let mut out = [0.0; 4];
        for (k, b) in self.coeffs.iter().enumerate() {
            let kw = (k + 1) as f64 * w;
            out[0] += b * s;
            out[1] += b * kw * c;
            out[2] -= b * kw * kw * s;
            out[3] -= b * kw * kw * kw * c;
            let ns = s * c1 + c * s1;
            c = c * c1 - s * s1;
            s = ns;
        }
        out
    }
}

/// Arbitrary closed-form curve, mostly for tests and experiments.
pub struct FnCurve<F> {
    pub ell: f64,
    pub f: F,
}

impl<F> Debug for FnCurve<F> {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("FnCurve").field("ell", &self.ell).finish()
    }
}

impl<F: Fn(f64) -> [f64; 4] + Send + Sync> Curve for FnCurve<F> {
    fn length(&self) -> f64 {
        self.ell
    }
    fn jet(&self, t: f64) -> [f64; 4] {
        (self.f)(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_arc_is_unit_sphere() {
        let e = EllipseArc::new(1.0, 1.0);
        assert!((e.length() - PI).abs() < 1e-13);
        let j = e.jet(0.8);
        let r = UnitSphere.jet(0.8);
        for k in 0..4 {
            assert!((j[k] - r[k]).abs() < 1e-12, "{k}: {} vs {}", j[k], r[k]);
        }
    }

    #[test]
    fn stretch_inverse_roundtrip() {
        let s = Stretch { centre: 1.0, half_width: 0.4, extra: 5.0 };
        for k in 0..50 {
            let x = 0.5 + k as f64 * 0.02;
            let y = s.jet(x).v;
            assert!((s.inverse(y) - x).abs() < 1e-13);
        }
        assert!((Stretch::step(1.0) - 1.0).abs() < 1e-15);
        assert!(Stretch::step(-1.0).abs() < 1e-15);
    }

    #[test]
    fn sine_series_reproduces_sine() {
        let n = 64;
        let vals: Vec<f64> = (0..=n).map(|j| (PI * j as f64 / n as f64).sin()).collect();
        let s = SineSeries::from_samples(PI, &vals);
        let j = s.jet(1.1);
        assert!((j[0] - 1.1f64.sin()).abs() < 1e-13);
        assert!((j[3] + 1.1f64.cos()).abs() < 1e-9);
    }
}
