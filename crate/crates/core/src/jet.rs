//! Third-order Taylor jets in one variable.
//!
//! A `Jet` stores a value together with its first three derivatives with
//! respect to a single parameter. Composition with scalar functions goes
//! through [`Jet::compose`], which applies the chain rule up to order three.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl Jet {
    pub const fn new(v: f64, d1: f64, d2: f64, d3: f64) -> Self {
        Self { v, d1, d2, d3 }
    }

    pub const fn constant(v: f64) -> Self {
        Self::new(v, 0.0, 0.0, 0.0)
    }

    /// The identity jet at `x`.
    pub const fn variable(x: f64) -> Self {
        Self::new(x, 1.0, 0.0, 0.0)
    }

    /// Applies a scalar function given its value and three derivatives at `self.v`.
    pub fn compose(self, g: [f64; 4]) -> Self {
        let (u1, u2, u3) = (self.d1, self.d2, self.d3);
        Self {
            v: g[0],
            d1: g[1] * u1,
            d2: g[2] * u1 * u1 + g[1] * u2,
            d3: g[3] * u1 * u1 * u1 + 3.0 * g[2] * u1 * u2 + g[1] * u3,
        }
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.compose([s, c, -s, -c])
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.compose([c, -s, -c, s])
    }

    pub fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        self.compose([r, 0.5 / r, -0.25 / (r * self.v), 0.375 / (r * self.v * self.v)])
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.compose([r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r])
    }

    pub fn powf(self, p: f64) -> Self {
        let x = self.v;
        let y = x.powf(p);
        self.compose([
            y,
            p * y / x,
            p * (p - 1.0) * y / (x * x),
            p * (p - 1.0) * (p - 2.0) * y / (x * x * x),
        ])
    }

    /// Inverse function jet: if `self` is the jet of `F` at `x0`, returns the
    /// jet of `F⁻¹` at `F(x0)`, expressed as derivatives of the inverse.
    pub fn inverse_derivatives(self) -> [f64; 3] {
        let (f1, f2, f3) = (self.d1, self.d2, self.d3);
        [
            1.0 / f1,
            -f2 / (f1 * f1 * f1),
            (3.0 * f2 * f2 - f1 * f3) / f1.powi(5),
        ]
    }

    pub fn scale(self, k: f64) -> Self {
        Self::new(self.v * k, self.d1 * k, self.d2 * k, self.d3 * k)
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.v, self.d1, self.d2, self.d3]
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet::new(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2, self.d3 + o.d3)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet::new(self.v - o.v, self.d1 - o.d1, self.d2 - o.d2, self.d3 - o.d3)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet::new(
            self.v * o.v,
            self.d1 * o.v + self.v * o.d1,
            self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
            self.d3 * o.v + 3.0 * self.d2 * o.d1 + 3.0 * self.d1 * o.d2 + self.v * o.d3,
        )
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, c: f64) -> Jet {
        Jet::new(self.v + c, self.d1, self.d2, self.d3)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, c: f64) -> Jet {
        self.scale(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_rule_matches_closed_form() {
        // d^k/dx^k sin(x^2) at x = 0.7
        let x = 0.7_f64;
        let j = (Jet::variable(x) * Jet::variable(x)).sin();
        let u = x * x;
        assert!((j.d1 - 2.0 * x * u.cos()).abs() < 1e-14);
        assert!((j.d2 - (2.0 * u.cos() - 4.0 * x * x * u.sin())).abs() < 1e-14);
        let d3 = -12.0 * x * u.sin() - 8.0 * x * x * x * u.cos();
        assert!((j.d3 - d3).abs() < 1e-13);
    }

    #[test]
    fn inverse_of_exp_like_map() {
        // F(x) = x + x^3, inverse derivatives at x=0.5 checked by composition
        let x = 0.5;
        let f = Jet::new(x + x * x * x, 1.0 + 3.0 * x * x, 6.0 * x, 6.0);
        let inv = f.inverse_derivatives();
        let g = Jet::new(x, inv[0], inv[1], inv[2]);
        // F(G(s)) must be the identity jet in s
        let id = g + g * g * g;
        assert!((id.d1 - 1.0).abs() < 1e-13);
        assert!(id.d2.abs() < 1e-12);
        assert!(id.d3.abs() < 1e-11);
    }
}
