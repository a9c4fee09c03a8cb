use magflow::action::{ergodic_action, ActionOptions};
use magflow::dynamics::{integrate, latitude_orbits, momentum, momentum_range, FlowOptions, FullState, System};
use magflow::index::{det, expm_traceless, iterate, maslov, quaternion_cover_check, SymplecticPath};
use magflow::poincare::{theta_m, TwistOptions};
use magflow::surface::{build_profile, contact_bounds, m_gamma, ContactInterval, FamilySpec, Profile, Strength, StrengthSpec};
use proptest::prelude::*;
use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

fn angle_gap(a: f64, b: f64) -> f64 {
    ((a - b + PI).rem_euclid(TAU) - PI).abs()
}

fn stretched(c: f64) -> Profile {
    build_profile(&FamilySpec::StretchedSphere { a: 0.3, delta: 0.05, c: Some(c) }).unwrap()
}

fn bumped(p: &Profile) -> Strength {
    Strength::build(p, &StrengthSpec::CosineSeries { coeffs: vec![0.2, 0.1], normalize: true }).unwrap()
}

fn prolate() -> &'static Profile {
    static P: OnceLock<Profile> = OnceLock::new();
    P.get_or_init(|| build_profile(&FamilySpec::Ellipsoid { a: 1.0, c: 2.0 }).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn momentum_is_conserved(c in 0.4f64..3.0, m in 0.05f64..2.0, tf in 0.05f64..0.95, phi in -PI..PI, bump in any::<bool>()) {
        let p = build_profile(&FamilySpec::Ellipsoid { a: 1.0, c }).unwrap();
        let f = if bump { bumped(&p) } else { Strength::unit(&p) };
        let sys = System::new(m, &p, &f);
        let start = FullState::new(tf * p.ell(), phi, 0.3);
        let tr = integrate(&sys, start, 50.0, &FlowOptions::default()).unwrap();
        prop_assert!(tr.momentum_drift <= 1e-8, "drift {}", tr.momentum_drift);
        prop_assert!((momentum(&sys, tr.end_state()) - momentum(&sys, start)).abs() <= 1e-8);
    }

    #[test]
    fn reflection_reverses_the_flow(m in 0.1f64..1.5, tf in 0.1f64..0.9, phi in -PI..PI, theta in 0.0..TAU) {
        // (t, φ, θ) ↦ (t, π − φ, −θ) conjugates the flow to its inverse
        let p = prolate();
        let f = bumped(p);
        let sys = System::new(m, p, &f);
        let reflect = |s: FullState| FullState::new(s.t, PI - s.phi, -s.theta);
        let x = FullState::new(tf * p.ell(), phi, theta);
        let y = integrate(&sys, x, 7.0, &FlowOptions::default()).unwrap().end_state();
        let z = reflect(integrate(&sys, reflect(y), 7.0, &FlowOptions::default()).unwrap().end_state());
        prop_assert!((z.t - x.t).abs() < 1e-7, "{x:?} {z:?}");
        prop_assert!(angle_gap(z.phi, x.phi) < 1e-7);
        prop_assert!(angle_gap(z.theta, x.theta) < 1e-7);
    }

    #[test]
    fn rotations_commute_with_the_flow(m in 0.1f64..1.5, tf in 0.1f64..0.9, phi in -PI..PI, shift in -PI..PI) {
        let p = prolate();
        let sys = System::new(m, p, &Strength::unit(p));
        let a = integrate(&sys, FullState::new(tf * p.ell(), phi, 0.0), 5.0, &FlowOptions::default()).unwrap();
        let b = integrate(&sys, FullState::new(tf * p.ell(), phi, shift), 5.0, &FlowOptions::default()).unwrap();
        let (x, y) = (a.end_state(), b.end_state());
        prop_assert_eq!(x.t, y.t);
        prop_assert_eq!(x.phi, y.phi);
        prop_assert!(angle_gap(y.theta, x.theta + shift) < 1e-12);
    }

    #[test]
    fn latitudes_solve_the_balance_equation(m in 0.02f64..3.0, bump in any::<bool>()) {
        let p = prolate();
        let f = if bump { bumped(p) } else { Strength::unit(p) };
        let sys = System::new(m, p, &f);
        let lats = latitude_orbits(&sys);
        prop_assert!(!lats.is_empty());
        let (lo, hi) = momentum_range(&sys);
        for l in lats {
            let d = p.eval(l.t0);
            let residual = l.sign as f64 * m * d.slope - f.eval(l.t0).value * d.radius;
            prop_assert!(residual.abs() < 1e-10, "{residual}");
            prop_assert!(l.momentum >= lo - 1e-12 && l.momentum <= hi + 1e-12);
        }
    }

    #[test]
    fn contact_bounds_are_reciprocal_roots(mg in 0.0f64..50.0) {
        match contact_bounds(mg).interval {
            ContactInterval::FullRay => prop_assert!(mg < 2.0),
            ContactInterval::Gap { minus, plus } => {
                prop_assert!(mg >= 2.0);
                prop_assert!((minus * plus - 1.0).abs() < 1e-12);
                for r in [minus, plus] {
                    prop_assert!((r * r - mg * r + 1.0).abs() < 1e-12 * mg.max(1.0) * r.max(1.0));
                }
            }
        }
    }

    #[test]
    fn symplectic_exponentials_have_unit_determinant(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0, tau in 0.0f64..5.0) {
        let e = expm_traceless(&[[a, b], [c, -a]], tau);
        prop_assert!((det(&e) - 1.0).abs() < 1e-9 * (1.0 + e.iter().flatten().map(|x| x * x).sum::<f64>()));
    }

    #[test]
    fn rotation_index_formula(vt in 0.05f64..3.0) {
        prop_assume!((vt - vt.round()).abs() > 1e-3);
        let d = maslov(&SymplecticPath::rotation(vt).unwrap()).unwrap();
        let odd = 2 * vt.floor() as i64 + 1;
        prop_assert_eq!((d.mu_lower, d.mu_upper), (odd, odd));
    }

    #[test]
    fn iterated_rotation_intervals_scale(vt in 0.05f64..1.2, k in 1usize..4) {
        let path = SymplecticPath::rotation(vt).unwrap();
        let one = maslov(&path).unwrap().interval;
        let many = maslov(&iterate(&path, k).unwrap()).unwrap().interval;
        prop_assert!((many.lo - k as f64 * one.lo).abs() < 1e-6);
        prop_assert!((many.hi - k as f64 * one.hi).abs() < 1e-6);
    }

    #[test]
    fn cover_identity_for_any_seed(seed in any::<u64>()) {
        let c = quaternion_cover_check(64, seed);
        prop_assert!(c.max_residual < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn mirroring_preserves_m_gamma(c in 0.5f64..3.0) {
        let p = stretched(c);
        let (a, b) = (m_gamma(&p), m_gamma(&p.mirrored()));
        prop_assert!((a - b).abs() < 1e-9 * a.max(1.0), "{a} {b}");
    }

    #[test]
    fn m_gamma_grows_with_the_stretch(c in 0.25f64..3.5, dc in 0.05f64..1.0) {
        prop_assert!(m_gamma(&stretched(c)) < m_gamma(&stretched(c + dc)));
    }

    #[test]
    fn actions_are_even_in_momentum_on_symmetric_profiles(m in 0.3f64..2.5, x in 0.05f64..0.9) {
        let p = prolate();
        let sys = System::new(m, p, &Strength::unit(p));
        let (_, hi) = momentum_range(&sys);
        let level = x * hi;
        let opts = ActionOptions::default();
        let (Ok(a), Ok(b)) = (ergodic_action(&sys, level, &opts), ergodic_action(&sys, -level, &opts)) else {
            return Ok(());
        };
        prop_assert!((a.action - b.action).abs() < 1e-8, "{} {}", a.action, b.action);
    }

    #[test]
    fn round_sphere_has_no_twist(m in 0.01f64..0.1, u in 0.05f64..0.95, neg in any::<bool>()) {
        let p = Profile::round_sphere();
        let u = if neg { -u } else { u } * p.ell();
        let th = theta_m(&System::new(m, &p, &Strength::unit(&p)), u, &TwistOptions::default()).unwrap();
        prop_assert!(th.abs() < 1e-9, "{th}");
    }
}
