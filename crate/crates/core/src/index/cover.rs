//! Pullback identity for the double cover S³ → SS² by unit quaternions.
//!
//! A unit quaternion U maps to the orthonormal pair p₀(U) = (U⁻¹iU, U⁻¹jU),
//! a unit tangent vector of the round sphere. On a tangent vector W at U the
//! connection form pulls back to τ₀ = ⟨v₂, u₁ × u₂⟩ with v₂ = d(U⁻¹jU)(W),
//! and the standard contact form is λ_st(W) = ½⟨iU, W⟩.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quat {
    pub const ONE: Quat = Quat::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quat = Quat::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quat = Quat::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quat = Quat::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub fn conj(self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn dot(self, o: Self) -> f64 {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(s * self.w, s * self.x, s * self.y, s * self.z)
    }

    pub fn inv(self) -> Self {
        self.conj().scale(1.0 / self.dot(self))
    }
}

impl Mul for Quat {
    type Output = Quat;
    fn mul(self, o: Quat) -> Quat {
        Quat::new(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        )
    }
}

impl Add for Quat {
    type Output = Quat;
    fn add(self, o: Quat) -> Quat {
        Quat::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Quat {
    type Output = Quat;
    fn sub(self, o: Quat) -> Quat {
        self + (-o)
    }
}

impl Neg for Quat {
    type Output = Quat;
    fn neg(self) -> Quat {
        self.scale(-1.0)
    }
}

/// (τ₀ side, λ_st side) of the identity τ₀ = −4λ_st at (U, W).
pub fn cover_sides(u: Quat, w: Quat) -> (f64, f64) {
    let ui = u.inv();
    let v2 = -(ui * w * ui * Quat::J * u) + ui * Quat::J * w;
    // u₁ × u₂ = u₁u₂ for orthogonal imaginary units, here U⁻¹kU
    let normal = ui * Quat::K * u;
    (v2.dot(normal), 0.5 * (Quat::I * u).dot(w))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverCheck {
    pub samples: usize,
    pub max_residual: f64,
    /// Residual with W left unprojected; the forms vanish on the normal.
    pub max_residual_raw: f64,
    /// Sides at U = 1, W = i.
    pub base_tau_side: f64,
    pub base_lambda_side: f64,
}

fn random_unit(rng: &mut ChaCha8Rng) -> Quat {
    loop {
        let q = Quat::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = q.norm();
        if n > 0.1 && n <= 1.0 {
            return q.scale(1.0 / n);
        }
    }
}

pub fn quaternion_cover_check(n_samples: usize, seed: u64) -> CoverCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_residual: f64 = 0.0;
    let mut max_raw: f64 = 0.0;
    for _ in 0..n_samples {
        let u = random_unit(&mut rng);
        let raw = Quat::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let tangent = raw - u.scale(raw.dot(u));
        let (a, b) = cover_sides(u, tangent);
        max_residual = max_residual.max((a + 4.0 * b).abs());
        let (a, b) = cover_sides(u, raw);
        max_raw = max_raw.max((a + 4.0 * b).abs());
    }
    let (base_tau_side, base_lambda_side) = cover_sides(Quat::ONE, Quat::I);
    CoverCheck { samples: n_samples, max_residual, max_residual_raw: max_raw, base_tau_side, base_lambda_side }
}
