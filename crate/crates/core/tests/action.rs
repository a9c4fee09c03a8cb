use magflow::action::{certify_contact, ergodic_action, liouville_action, ActionOptions, LevelRecord, Verdict};
use magflow::dynamics::{momentum_range, System};
use magflow::surface::{build_profile, FamilySpec, Strength, StrengthSpec};

#[test]
fn torus_actions_average_to_the_liouville_action() {
    // the Liouville measure disintegrates over momentum levels with weight
    // proportional to the half-period, so the weighted mean of A(I) is m² + 1
    let p = build_profile(&FamilySpec::Ellipsoid { a: 1.0, c: 1.5 }).unwrap();
    let f = Strength::build(&p, &StrengthSpec::CosineSeries { coeffs: vec![0.3], normalize: true }).unwrap();
    let m = 0.7;
    let sys = System::new(m, &p, &f);
    let (lo, hi) = momentum_range(&sys);
    let n = 400;
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..n {
        let level = lo + (hi - lo) * (k as f64 + 0.5) / n as f64;
        let s = ergodic_action(&sys, level, &ActionOptions::default()).unwrap();
        num += s.action * s.half_period;
        den += s.half_period;
    }
    let want = liouville_action(m, &f).unwrap();
    assert!((num / den - want).abs() < 2e-3 * want, "{} {want}", num / den);
}

#[test]
fn certificates_are_deterministic() {
    let p = build_profile(&FamilySpec::Ellipsoid { a: 1.0, c: 4.0 }).unwrap();
    let sys = System::new(1.0, &p, &Strength::unit(&p));
    let a = certify_contact(&sys, 48, &ActionOptions::default()).unwrap();
    let b = certify_contact(&sys, 48, &ActionOptions::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.verdict, Verdict::Positive);
    // inside the gap the canonical primitive is not pointwise positive
    assert!(a.min_density < 0.0);
    let levels: Vec<f64> = a.levels.iter().map(|r| match r {
        LevelRecord::Torus(s) => s.level,
        LevelRecord::LatitudeSubstitute { level, .. } | LevelRecord::Skipped { level, .. } => *level,
    }).collect();
    assert!(levels.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn dip_certificate_flags_nonpositive_curvature() {
    let p = build_profile(&FamilySpec::DipProfile { delta: 0.1, epsilon: 0.5, a: None }).unwrap();
    let d = p.eval(0.1);
    let sys = System::new(d.radius / d.slope.abs(), &p, &Strength::unit(&p));
    let cert = certify_contact(&sys, 16, &ActionOptions::default()).unwrap();
    assert_eq!(cert.verdict, Verdict::Negative);
    assert!(!cert.km.positive);
    assert!(cert.latitude_actions.iter().any(|l| l.action < 0.0));
}

#[test]
fn invalid_requests_are_rejected() {
    let p = build_profile(&FamilySpec::RoundSphere {}).unwrap();
    let f = Strength::unit(&p);
    assert!(certify_contact(&System::new(1.0, &p, &f), 0, &ActionOptions::default()).is_err());
    let half = Strength::build(&p, &StrengthSpec::Constant { value: 0.5 }).unwrap();
    assert!(liouville_action(1.0, &half).is_err());
}
