//! Profile functions, magnetic strengths and rotational geometry.
//!
//! A surface of revolution is described by its profile γ on [0, ℓ]: the
//! distance to the axis as a function of arclength along a meridian, with
//! t = 0 the south pole. The metric is dt² + γ²dθ².

mod bounds;
pub mod curves;
mod primitive;
mod spec;
mod strength;
mod validate;

pub use bounds::{contact_bounds, km_positive, m_gamma, ContactBounds, ContactInterval, KmReport};
pub use primitive::PrimitiveTable;
pub use spec::{build_profile, FamilySpec};
pub use strength::{rigid_family, Strength, StrengthDerivs, StrengthSpec};
pub use validate::{validate, Check, ValidationReport};

use curves::Curve;
use serde::Serialize;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("evaluator returned a non-finite value at t = {t}")]
    NonEvaluable { t: f64 },
    #[error("profile has non-positive area {area}")]
    DegenerateProfile { area: f64 },
    #[error("infeasible family parameters: {0}")]
    InfeasibleSpec(String),
    #[error("infeasible strength parameters: {0}")]
    InfeasibleParams(String),
    #[error("built profile failed validation: {0}")]
    Invalid(String),
    #[error("malformed profile text: {0}")]
    Parse(String),
}

/// Below this fraction of ℓ from a pole, ratios that are 0/0 at the pole are
/// replaced by truncated Taylor series.
pub const POLE_SERIES_FRACTION: f64 = 1e-4;

const PRIMITIVE_TOL: f64 = 1e-12;

/// |∫γf − 2| below which a strength counts as normalised.
pub(crate) const NORMALIZED_TOL: f64 = 1e-10;

/// Value and first three arclength derivatives of the profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileDerivs {
    pub radius: f64,
    pub slope: f64,
    pub second: f64,
    pub third: f64,
}

/// Provenance of a profile: a buildable family, or an opaque curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ProfileKind {
    Family(FamilySpec),
    Custom { name: String },
}

struct ProfileData {
    curve: Arc<dyn Curve>,
    kind: ProfileKind,
    scale: f64,
    mirrored: bool,
    ell: f64,
    primitive: PrimitiveTable,
    // cumulative mesh weight on a uniform fine grid, normalised to [0, 1]
    mesh_weight: Vec<f64>,
}

const MESH_FINE: usize = 16384;

/// A profile function with its cached primitive. Cheap to clone.
#[derive(Clone)]
pub struct Profile(Arc<ProfileData>);

impl std::fmt::Debug for Profile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Profile")
            .field("kind", &self.0.kind)
            .field("ell", &self.0.ell)
            .field("scale", &self.0.scale)
            .field("mirrored", &self.0.mirrored)
            .finish()
    }
}

impl Profile {
    /// Wraps a curve as is, without normalising its area.
    pub fn from_curve(curve: Arc<dyn Curve>, kind: ProfileKind) -> Self {
        Self::assemble(curve, kind, 1.0, false)
    }

    /// Profile of a closed-form curve given as `t ↦ [γ, γ̇, γ̈, γ⃛]`.
    pub fn from_fn<F>(name: &str, ell: f64, f: F) -> Self
    where
        F: Fn(f64) -> [f64; 4] + Send + Sync + 'static,
    {
        Self::from_curve(Arc::new(curves::FnCurve { ell, f }), ProfileKind::Custom { name: name.into() })
    }

    pub fn round_sphere() -> Self {
        Self::from_curve(Arc::new(curves::UnitSphere), ProfileKind::Family(FamilySpec::RoundSphere {}))
    }

    fn assemble(curve: Arc<dyn Curve>, kind: ProfileKind, scale: f64, mirrored: bool) -> Self {
        let ell = curve.length() * scale;
        let eval = |t: f64| {
            let d = Self::raw_eval(&*curve, scale, mirrored, ell, t);
            (d.radius, d.slope)
        };
        let mesh_weight = Self::mesh_weight(&*curve, scale, mirrored, ell);
        let primitive = PrimitiveTable::build_on(|n| mesh_nodes(&mesh_weight, ell, n), -1.0, PRIMITIVE_TOL, eval);
        Profile(Arc::new(ProfileData { curve, kind, scale, mirrored, ell, primitive, mesh_weight }))
    }

    // Half the weight is uniform in t, half follows the variation of γ̇, so
    // short features of multi-scale profiles are still resolved.
    fn mesh_weight(curve: &dyn Curve, scale: f64, mirrored: bool, ell: f64) -> Vec<f64> {
        let h = ell / MESH_FINE as f64;
        let slopes: Vec<f64> =
            (0..=MESH_FINE).map(|k| Self::raw_eval(curve, scale, mirrored, ell, k as f64 * h).slope).collect();
        let variation: f64 = slopes.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        let mut acc = vec![0.0; MESH_FINE + 1];
        for k in 1..=MESH_FINE {
            let dv = if variation > 0.0 { (slopes[k] - slopes[k - 1]).abs() / variation } else { 0.0 };
            acc[k] = acc[k - 1] + 0.5 / MESH_FINE as f64 + 0.5 * dv;
        }
        let total = acc[MESH_FINE];
        acc.iter_mut().for_each(|a| *a /= total);
        acc
    }

    fn raw_eval(curve: &dyn Curve, scale: f64, mirrored: bool, ell: f64, t: f64) -> ProfileDerivs {
        let tc = if mirrored { ell - t } else { t } / scale;
        let j = curve.jet(tc);
        let sgn = if mirrored { -1.0 } else { 1.0 };
        ProfileDerivs {
            radius: scale * j[0],
            slope: sgn * j[1],
            second: j[2] / scale,
            third: sgn * j[3] / (scale * scale),
        }
    }

    pub fn ell(&self) -> f64 {
        self.0.ell
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.0.kind
    }

    /// Homothety factor applied on top of the underlying curve.
    pub fn scale(&self) -> f64 {
        self.0.scale
    }

    pub fn is_mirrored(&self) -> bool {
        self.0.mirrored
    }

    pub fn eval(&self, t: f64) -> ProfileDerivs {
        Self::raw_eval(&*self.0.curve, self.0.scale, self.0.mirrored, self.0.ell, t)
    }

    /// Primitive of γ normalised by Γ(0) = −1.
    pub fn primitive(&self, t: f64) -> f64 {
        self.0.primitive.eval(t)
    }

    /// Primitive of γ normalised by Γ₀(0) = 0.
    pub fn primitive_from_zero(&self, t: f64) -> f64 {
        self.0.primitive.eval(t) + 1.0
    }

    /// ∫₀^ℓ γ dt.
    pub fn area(&self) -> f64 {
        self.0.primitive.total() + 1.0
    }

    pub fn primitive_table(&self) -> &PrimitiveTable {
        &self.0.primitive
    }

    fn pole_distance(&self, t: f64) -> (f64, bool) {
        if t <= 0.5 * self.0.ell {
            (t, true)
        } else {
            (self.0.ell - t, false)
        }
    }

    pub(crate) fn near_pole(&self, t: f64) -> Option<bool> {
        let (d, south) = self.pole_distance(t);
        (d < POLE_SERIES_FRACTION * self.0.ell).then_some(south)
    }

    /// `n + 1` increasing nodes from 0 to ℓ, denser where γ̇ varies quickly.
    /// Grids for n and 2n are nested.
    pub fn scan_grid(&self, n: usize) -> Vec<f64> {
        mesh_nodes(&self.0.mesh_weight, self.0.ell, n)
    }

    /// Distance from the nearer pole below which pole series are used.
    pub(crate) fn pole_margin(&self) -> f64 {
        POLE_SERIES_FRACTION * self.0.ell
    }

    /// Gaussian curvature −γ̈/γ. Near a pole the even series through the
    /// pole limit ∓γ⃛ and the matching value at the series threshold is used.
    pub fn curvature(&self, t: f64) -> f64 {
        match self.near_pole(t) {
            None => {
                let d = self.eval(t);
                -d.second / d.radius
            }
            Some(south) => {
                let (pole, star, x) = self.pole_frame(south, t);
                let limit = if south { -self.eval(pole).third } else { self.eval(pole).third };
                let ds = self.eval(star);
                even_series(limit, -ds.second / ds.radius, x, self.pole_margin())
            }
        }
    }

    /// (pole parameter, threshold parameter, distance of `t` from the pole)
    pub(crate) fn pole_frame(&self, south: bool, t: f64) -> (f64, f64, f64) {
        let eps = self.pole_margin();
        if south {
            (0.0, eps, t)
        } else {
            (self.0.ell, self.0.ell - eps, self.0.ell - t)
        }
    }

    /// Homothetic copy γ_λ(t) = λγ(t/λ) on [0, λℓ].
    pub fn rescaled(&self, lambda: f64) -> Self {
        Self::assemble(self.0.curve.clone(), self.0.kind.clone(), self.0.scale * lambda, self.0.mirrored)
    }

    /// The reflected profile t ↦ γ(ℓ − t).
    pub fn mirrored(&self) -> Self {
        Self::assemble(self.0.curve.clone(), self.0.kind.clone(), self.0.scale, !self.0.mirrored)
    }

    /// (1 − γ̇)/γ, regular at the south pole.
    pub(crate) fn south_defect(&self, t: f64, d: &ProfileDerivs) -> f64 {
        let eps = self.pole_margin();
        if t < eps {
            let lead = -0.5 * self.eval(0.0).third;
            let ds = self.eval(eps);
            odd_series(lead, (1.0 - ds.slope) / ds.radius, t, eps)
        } else {
            (1.0 - d.slope) / d.radius
        }
    }

    /// (1 + γ̇)/γ, regular at the north pole.
    pub(crate) fn north_defect(&self, t: f64, d: &ProfileDerivs) -> f64 {
        let eps = self.pole_margin();
        let r = self.0.ell - t;
        if r < eps {
            let lead = 0.5 * self.eval(self.0.ell).third;
            let ds = self.eval(self.0.ell - eps);
            odd_series(lead, (1.0 + ds.slope) / ds.radius, r, eps)
        } else {
            (1.0 + d.slope) / d.radius
        }
    }

    /// Ratio β_θ/γ = (Γ + γ̇)/γ for the unit strength.
    pub fn beta_over_radius(&self, t: f64) -> f64 {
        let d = self.eval(t);
        beta_ratio(self, t, &d, |_| 1.0, self.primitive(t), self.0.primitive.total(), |s| self.primitive(s))
    }
}

/// `limit + (at_eps − limit)(x/eps)²`: even function of the pole distance
/// with the exact pole limit, matched at the series threshold.
pub(crate) fn even_series(limit: f64, at_eps: f64, x: f64, eps: f64) -> f64 {
    let r = x / eps;
    limit + (at_eps - limit) * r * r
}

/// `lead·x + (at_eps − lead·eps)(x/eps)³`: odd counterpart with exact slope.
pub(crate) fn odd_series(lead: f64, at_eps: f64, x: f64, eps: f64) -> f64 {
    let r = x / eps;
    lead * x + (at_eps - lead * eps) * r * r * r
}

/// (Γ_f + γ̇)/γ with pole series; `flux_end` is Γ_f(ℓ), `strength` gives f
/// and `prim` evaluates Γ_f anywhere.
pub(crate) fn beta_ratio<S, P>(
    p: &Profile,
    t: f64,
    d: &ProfileDerivs,
    strength: S,
    prim_t: f64,
    flux_end: f64,
    prim: P,
) -> f64
where
    S: Fn(f64) -> f64,
    P: Fn(f64) -> f64,
{
    let eps = p.pole_margin();
    match p.near_pole(t) {
        None => (prim_t + d.slope) / d.radius,
        Some(true) => {
            let lead = 0.5 * (strength(0.0) + p.eval(0.0).third);
            let ds = p.eval(eps);
            odd_series(lead, (prim(eps) + ds.slope) / ds.radius, t, eps)
        }
        Some(false) => {
            // the non-normalised part (Γ_f(ℓ) − 1)/γ is kept exactly
            let ell = p.ell();
            let r = ell - t;
            let lead = 0.5 * (p.eval(ell).third - strength(ell));
            let ds = p.eval(ell - eps);
            let regular_eps = (prim(ell - eps) - flux_end + 1.0 + ds.slope) / ds.radius;
            let excess = flux_end - 1.0;
            let singular = if excess.abs() <= NORMALIZED_TOL { 0.0 } else { excess / d.radius };
            odd_series(lead, regular_eps, r, eps) + singular
        }
    }
}

// Inverse of the cumulative mesh weight at n + 1 equally spaced levels.
fn mesh_nodes(w: &[f64], ell: f64, n: usize) -> Vec<f64> {
    let h = ell / MESH_FINE as f64;
    let mut out = Vec::with_capacity(n + 1);
    let mut j = 0;
    for k in 0..=n {
        let target = k as f64 / n as f64;
        while j + 1 < MESH_FINE && w[j + 1] < target {
            j += 1;
        }
        let (a, b) = (w[j], w[j + 1]);
        let frac = if b > a { ((target - a) / (b - a)).clamp(0.0, 1.0) } else { 0.0 };
        out.push((j as f64 + frac) * h);
    }
    out[0] = 0.0;
    out[n] = ell;
    out
}

/// Rotational geometry at one latitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometryScalars {
    /// Primitive of γ with value −1 at the south pole.
    pub primitive: f64,
    /// Primitive of γ with value 0 at the south pole.
    pub primitive_from_zero: f64,
    pub curvature: f64,
    /// Γ + γ̇.
    pub beta_theta: f64,
    /// Primitive of γf with value −1 at the south pole.
    pub flux_primitive: f64,
    /// Γ_f + γ̇.
    pub beta_theta_flux: f64,
}

pub fn scalars(profile: &Profile, strength: &Strength, t: f64) -> GeometryScalars {
    let d = profile.eval(t);
    let g = profile.primitive(t);
    let gf = strength.flux_primitive(t);
    GeometryScalars {
        primitive: g,
        primitive_from_zero: g + 1.0,
        curvature: profile.curvature(t),
        beta_theta: g + d.slope,
        flux_primitive: gf,
        beta_theta_flux: gf + d.slope,
    }
}

/// Rescales to unit area ∫γ = 2.
pub fn normalize(profile: &Profile) -> Result<Profile, SurfaceError> {
    let area = profile.area();
    if !(area > 0.0) {
        return Err(SurfaceError::DegenerateProfile { area });
    }
    let lambda = (2.0 / area).sqrt();
    if (lambda - 1.0).abs() < 1e-15 {
        return Ok(profile.clone());
    }
    Ok(profile.rescaled(lambda))
}
