use magflow::surface::{
    build_profile, km_positive, m_gamma, normalize, scalars, validate, FamilySpec, Profile, Strength, StrengthSpec,
    SurfaceError,
};
use std::f64::consts::PI;

// Area of an oblate spheroid divided by 2π, i.e. ∫γ dt before normalisation.
fn oblate_half_area(a: f64, c: f64) -> f64 {
    let e = (1.0 - c * c / (a * a)).sqrt();
    a * a * (1.0 + (1.0 - e * e) / e * e.atanh())
}

#[test]
fn oblate_pole_curvature_matches_closed_form() {
    let (a, c) = (1.0, 0.5);
    let p = build_profile(&FamilySpec::Ellipsoid { a, c }).unwrap();
    let lambda = (2.0 / oblate_half_area(a, c)).sqrt();
    assert!((p.scale() - lambda).abs() < 1e-10, "{} {lambda}", p.scale());
    let want = c * c / (a.powi(4) * lambda * lambda);
    assert!((p.curvature(0.0) - want).abs() < 1e-8, "{} {want}", p.curvature(0.0));
    assert!((p.curvature(p.ell()) - want).abs() < 1e-8);
    // equator: principal radii c²/a and a
    let eq = 1.0 / (c * c * lambda * lambda);
    assert!((p.curvature(0.5 * p.ell()) - eq).abs() < 1e-8);
}

#[test]
fn pole_series_is_continuous_across_the_switch() {
    let p = build_profile(&FamilySpec::Ellipsoid { a: 1.0, c: 2.5 }).unwrap();
    let edge = 1e-4 * p.ell();
    for t in [edge, p.ell() - edge] {
        let (a, b) = (p.curvature(t * (1.0 - 1e-9)), p.curvature(t * (1.0 + 1e-9)));
        assert!((a - b).abs() < 1e-7, "{a} {b}");
        let (a, b) = (p.beta_over_radius(t * (1.0 - 1e-9)), p.beta_over_radius(t * (1.0 + 1e-9)));
        assert!((a - b).abs() < 1e-7, "{a} {b}");
    }
}

#[test]
fn round_sphere_primitive_conventions() {
    let p = Profile::round_sphere();
    let f = Strength::unit(&p);
    for t in [0.0, 0.3, 1.0, 2.0, PI] {
        let s = scalars(&p, &f, t);
        assert!((s.primitive + t.cos()).abs() < 1e-12);
        assert!((s.primitive_from_zero - (1.0 - t.cos())).abs() < 1e-12);
        assert!((s.curvature - 1.0).abs() < 1e-9);
        assert!(s.beta_theta.abs() < 1e-12);
    }
}

#[test]
fn built_families_validate() {
    let specs = [
        FamilySpec::RoundSphere {},
        FamilySpec::Ellipsoid { a: 1.0, c: 0.3 },
        FamilySpec::Ellipsoid { a: 1.0, c: 4.0 },
        FamilySpec::StretchedSphere { a: 0.3, delta: 0.05, c: None },
        FamilySpec::StretchedSphere { a: 0.3, delta: 0.05, c: Some(2.0) },
        FamilySpec::DipProfile { delta: 0.1, epsilon: 0.5, a: None },
    ];
    for spec in specs {
        let p = build_profile(&spec).unwrap();
        let bump = Strength::build(&p, &StrengthSpec::CosineSeries { coeffs: vec![0.3], normalize: true }).unwrap();
        assert!(bump.is_normalized(), "{spec:?}: {}", bump.flux_end());
        assert!((bump.flux_end() - 1.0).abs() < 1e-10);
        let report = validate(&p, &bump, 1e-8).unwrap();
        assert!(report.passed, "{spec:?}: {:?}", report.failures());
        assert!((p.area() - 2.0).abs() < 1e-10);
        assert_eq!(FamilySpec::from_text(&spec.to_text()).unwrap(), spec);
    }
}

#[test]
fn sampled_profile_reproduces_the_round_sphere() {
    let n = 400;
    let values: Vec<f64> = (0..=n).map(|k| (PI * k as f64 / n as f64).sin()).collect();
    let p = build_profile(&FamilySpec::Samples { length: PI, values }).unwrap();
    assert!((p.ell() - PI).abs() < 1e-6);
    assert!(m_gamma(&p) < 1e-4, "{}", m_gamma(&p));
    assert!((p.curvature(1.0) - 1.0).abs() < 1e-3);
}

#[test]
fn infeasible_specs_are_rejected() {
    let bad = [
        FamilySpec::Ellipsoid { a: -1.0, c: 1.0 },
        FamilySpec::DipProfile { delta: 0.1, epsilon: 1.5, a: None },
        FamilySpec::DipProfile { delta: 2.0, epsilon: 0.5, a: None },
        FamilySpec::StretchedSphere { a: 0.3, delta: 0.05, c: Some(-1.0) },
    ];
    for spec in bad {
        assert!(matches!(build_profile(&spec), Err(SurfaceError::InfeasibleSpec(_))), "{spec:?}");
    }
    let p = Profile::round_sphere();
    assert!(matches!(
        Strength::build(&p, &StrengthSpec::Constant { value: 0.0 }),
        Err(SurfaceError::InfeasibleParams(_))
    ));
    assert!(matches!(FamilySpec::from_text("family = \"torus\""), Err(SurfaceError::Parse(_))));
}

#[test]
fn normalization_is_idempotent_and_homothetic() {
    let p = build_profile(&FamilySpec::Ellipsoid { a: 1.0, c: 2.0 }).unwrap();
    let big = p.rescaled(1.7);
    assert!((big.area() - 2.0 * 1.7 * 1.7).abs() < 1e-9);
    let back = normalize(&big).unwrap();
    assert!((back.ell() - p.ell()).abs() < 1e-12);
    assert!((m_gamma(&back) - m_gamma(&p)).abs() < 1e-9);
}

#[test]
fn magnetic_curvature_margin() {
    let p = build_profile(&FamilySpec::Ellipsoid { a: 1.0, c: 4.0 }).unwrap();
    let f = Strength::unit(&p);
    // K > 0 everywhere, so the margin is min(m²K) + 1
    let r = km_positive(&p, &f, 1.0);
    let kmin = (0..=2000).map(|k| p.curvature(p.ell() * k as f64 / 2000.0)).fold(f64::INFINITY, f64::min);
    assert!(r.positive);
    assert!((r.margin - (kmin + 1.0)).abs() < 1e-6, "{} {}", r.margin, kmin + 1.0);
    let dip = build_profile(&FamilySpec::DipProfile { delta: 0.1, epsilon: 0.5, a: None }).unwrap();
    assert!(!km_positive(&dip, &Strength::unit(&dip), 0.5).positive);
}
