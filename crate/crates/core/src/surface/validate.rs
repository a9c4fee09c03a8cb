//! Invariant checks for a profile and strength pair.

use super::{Profile, Strength, SurfaceError};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub passed: bool,
    pub tolerance: f64,
}

impl ValidationReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }
}

const INTERIOR_GRID: usize = 4096;

pub fn validate(profile: &Profile, strength: &Strength, tol: f64) -> Result<ValidationReport, SurfaceError> {
    let ell = profile.ell();
    let mut checks = Vec::new();
    let mut push = |name: &'static str, residual: f64, passed: bool| checks.push(Check { name, passed, residual });
    let finite = |t: f64| -> Result<(), SurfaceError> {
        let d = profile.eval(t);
        let s = strength.eval(t);
        let all = [d.radius, d.slope, d.second, d.third, s.value, s.d1, s.d2];
        if all.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(SurfaceError::NonEvaluable { t })
        }
    };
    finite(0.0)?;
    finite(ell)?;
    let start = profile.eval(0.0);
    let end = profile.eval(ell);
    push("radius_zero_at_south", start.radius.abs(), start.radius.abs() <= tol);
    push("radius_zero_at_north", end.radius.abs(), end.radius.abs() <= tol);
    push("slope_one_at_south", (start.slope - 1.0).abs(), (start.slope - 1.0).abs() <= tol);
    push("slope_minus_one_at_north", (end.slope + 1.0).abs(), (end.slope + 1.0).abs() <= tol);
    push("second_zero_at_south", start.second.abs(), start.second.abs() <= tol);
    push("second_zero_at_north", end.second.abs(), end.second.abs() <= tol);

    let mut min_radius = f64::INFINITY;
    let mut max_slope: f64 = 0.0;
    let mut min_f = f64::INFINITY;
    let nodes = profile.scan_grid(INTERIOR_GRID);
    for &t in &nodes[1..INTERIOR_GRID] {
        finite(t)?;
        let d = profile.eval(t);
        min_radius = min_radius.min(d.radius);
        max_slope = max_slope.max(d.slope.abs());
        min_f = min_f.min(strength.eval(t).value);
    }
    min_f = min_f.min(strength.eval(0.0).value).min(strength.eval(ell).value);
    push("radius_positive_inside", min_radius, min_radius > 0.0);
    push("slope_below_one_inside", max_slope, max_slope < 1.0);
    let area = profile.area();
    push("area_two", (area - 2.0).abs(), (area - 2.0).abs() <= tol);

    push("strength_positive", min_f, min_f > 0.0);
    let (fs, fn_) = (strength.eval(0.0).d1, strength.eval(ell).d1);
    let flat = fs.abs().max(fn_.abs());
    push("strength_flat_at_poles", flat, flat <= tol);
    if strength.claims_normalized() {
        let r = (strength.flux_end() - 1.0).abs();
        push("flux_two", r, r <= tol);
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(ValidationReport { checks, passed, tolerance: tol })
}
