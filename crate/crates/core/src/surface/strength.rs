//! Rotationally invariant magnetic strengths f(t).

use super::{beta_ratio, PrimitiveTable, Profile, SurfaceError, PRIMITIVE_TOL};
use crate::quad::gl10;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

const FLUX_PANELS: usize = 8192;

/// Text-level description of a strength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrengthSpec {
    /// f ≡ value.
    Constant {
        #[serde(default = "one")]
        value: f64,
    },
    /// f = c·(1 + Σ a_j cos(jπt/ℓ)), with c fixed by ∫γf = 2 when `normalize`.
    CosineSeries {
        coeffs: Vec<f64>,
        #[serde(default = "yes")]
        normalize: bool,
    },
    /// f = 1/√(kΓ₀ + h), Γ₀ the primitive of γ vanishing at the south pole.
    Rigid { k: f64, h: f64 },
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

impl Default for StrengthSpec {
    fn default() -> Self {
        StrengthSpec::Constant { value: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrengthDerivs {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

#[derive(Debug)]
enum Law {
    Constant(f64),
    Cosine { factor: f64, coeffs: Vec<f64> },
    Rigid { k: f64, h: f64 },
}

#[derive(Debug)]
struct StrengthData {
    spec: StrengthSpec,
    law: Law,
    profile: Profile,
    // None when the flux primitive coincides with the profile primitive
    flux: Option<PrimitiveTable>,
    flux_end: f64,
    normalized: bool,
}

/// A magnetic strength bound to the profile it lives on.
#[derive(Debug, Clone)]
pub struct Strength(Arc<StrengthData>);

impl Strength {
    /// f ≡ 1.
    pub fn unit(profile: &Profile) -> Self {
        Self::build(profile, &StrengthSpec::default()).expect("unit strength is always feasible")
    }

    pub fn build(profile: &Profile, spec: &StrengthSpec) -> Result<Self, SurfaceError> {
        let ell = profile.ell();
        let law = match spec {
            StrengthSpec::Constant { value } => {
                if !(*value > 0.0) {
                    return Err(SurfaceError::InfeasibleParams(format!("constant strength {value} is not positive")));
                }
                Law::Constant(*value)
            }
            StrengthSpec::CosineSeries { coeffs, normalize } => {
                let shape = |t: f64| cosine_eval(1.0, coeffs, ell, t).value;
                let factor = if *normalize {
                    let nodes = profile.scan_grid(FLUX_PANELS);
                    let flux: f64 =
                        nodes.windows(2).map(|w| gl10(|t| profile.eval(t).radius * shape(t), w[0], w[1])).sum();
                    2.0 / flux
                } else {
                    1.0
                };
                Law::Cosine { factor, coeffs: coeffs.clone() }
            }
            StrengthSpec::Rigid { k, h } => {
                let low = if *k >= 0.0 { *h } else { h + k * profile.primitive_from_zero(ell) };
                if !(low > 0.0) {
                    return Err(SurfaceError::InfeasibleParams(format!(
                        "k Γ₀ + h reaches {low} ≤ 0 on the profile"
                    )));
                }
                Law::Rigid { k: *k, h: *h }
            }
        };
        let unit = matches!(law, Law::Constant(v) if v == 1.0);
        let mut data = StrengthData {
            spec: spec.clone(),
            law,
            profile: profile.clone(),
            flux: None,
            flux_end: profile.primitive(ell),
            normalized: false,
        };
        if !unit {
            let table = PrimitiveTable::build_on(|n| profile.scan_grid(n), -1.0, PRIMITIVE_TOL, |t| {
                let d = profile.eval(t);
                let f = law_eval(&data.law, profile, t);
                (d.radius * f.value, d.slope * f.value + d.radius * f.d1)
            });
            data.flux_end = table.total();
            data.flux = Some(table);
        }
        let sample_bad = (0..=512).map(|i| ell * i as f64 / 512.0).find(|&t| {
            let s = law_eval(&data.law, profile, t);
            !(s.value > 0.0) || !s.value.is_finite()
        });
        if let Some(t) = sample_bad {
            return Err(SurfaceError::InfeasibleParams(format!("strength is not positive at t = {t}")));
        }
        data.normalized = (data.flux_end - 1.0).abs() < super::NORMALIZED_TOL;
        Ok(Strength(Arc::new(data)))
    }

    pub fn spec(&self) -> &StrengthSpec {
        &self.0.spec
    }

    pub fn profile(&self) -> &Profile {
        &self.0.profile
    }

    /// True when the spec asks for ∫γf = 2 (constant 1, or a normalised series).
    pub fn claims_normalized(&self) -> bool {
        match &self.0.spec {
            StrengthSpec::Constant { value } => *value == 1.0,
            StrengthSpec::CosineSeries { normalize, .. } => *normalize,
            StrengthSpec::Rigid { .. } => false,
        }
    }

    /// True when ∫γf = 2 holds numerically.
    pub fn is_normalized(&self) -> bool {
        self.0.normalized
    }

    pub fn is_unit(&self) -> bool {
        matches!(self.0.law, Law::Constant(v) if v == 1.0)
    }

    pub fn eval(&self, t: f64) -> StrengthDerivs {
        law_eval(&self.0.law, &self.0.profile, t)
    }

    /// Primitive of γf with value −1 at the south pole.
    pub fn flux_primitive(&self, t: f64) -> f64 {
        match &self.0.flux {
            Some(tab) => tab.eval(t),
            None => self.0.profile.primitive(t),
        }
    }

    /// Γ_f(ℓ); equals 1 for a normalised strength.
    pub fn flux_end(&self) -> f64 {
        self.0.flux_end
    }

    /// (Γ_f + γ̇)/γ with pole limits.
    pub fn beta_over_radius(&self, t: f64) -> f64 {
        let p = &self.0.profile;
        let d = p.eval(t);
        beta_ratio(p, t, &d, |s| self.eval(s).value, self.flux_primitive(t), self.0.flux_end, |s| {
            self.flux_primitive(s)
        })
    }

    /// Twist coefficient −ḟ/(γf³), with pole values ∓f̈/f³.
    pub fn omega(&self, t: f64) -> f64 {
        let p = &self.0.profile;
        let interior = |t: f64| {
            let s = self.eval(t);
            -s.d1 / (p.eval(t).radius * s.value * s.value * s.value)
        };
        match p.near_pole(t) {
            None => interior(t),
            Some(south) => {
                let (pole, star, x) = p.pole_frame(south, t);
                let s = self.eval(pole);
                let limit = s.d2 / (s.value * s.value * s.value);
                let limit = if south { -limit } else { limit };
                super::even_series(limit, interior(star), x, p.pole_margin())
            }
        }
    }
}

fn law_eval(law: &Law, p: &Profile, t: f64) -> StrengthDerivs {
    match law {
        Law::Constant(v) => StrengthDerivs { value: *v, d1: 0.0, d2: 0.0 },
        Law::Cosine { factor, coeffs } => cosine_eval(*factor, coeffs, p.ell(), t),
        Law::Rigid { k, h } => {
            let d = p.eval(t);
            let q = k * p.primitive_from_zero(t) + h;
            let f = 1.0 / q.sqrt();
            let f3 = f * f * f;
            StrengthDerivs {
                value: f,
                d1: -0.5 * k * d.radius * f3,
                d2: 0.75 * k * k * d.radius * d.radius * f3 * f * f - 0.5 * k * d.slope * f3,
            }
        }
    }
}

fn cosine_eval(factor: f64, coeffs: &[f64], ell: f64, t: f64) -> StrengthDerivs {
    let w = PI / ell;
    let mut out = StrengthDerivs { value: 1.0, d1: 0.0, d2: 0.0 };
    for (j, a) in coeffs.iter().enumerate() {
        let kw = (j + 1) as f64 * w;
        let (s, c) = (kw * t).sin_cos();
        out.value += a * c;
        out.d1 -= a * kw * s;
        out.d2 -= a * kw * kw * c;
    }
    StrengthDerivs { value: factor * out.value, d1: factor * out.d1, d2: factor * out.d2 }
}

/// The strength 1/√(kΓ₀ + h), whose twist coefficient is the constant k/2.
pub fn rigid_family(profile: &Profile, k: f64, h: f64) -> Result<Strength, SurfaceError> {
    Strength::build(profile, &StrengthSpec::Rigid { k, h })
}
