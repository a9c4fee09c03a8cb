//! End-to-end acceptance checks. Runs without the libtest harness and prints
//! one PASS/FAIL line per criterion; exits non-zero if any fails.

use magflow::action::{certify_contact, liouville_action, ActionOptions, Verdict};
use magflow::dynamics::{integrate, latitude_orbits, momentum, FlowOptions, FullState, System};
use magflow::index::{
    dynconvex_report, maslov, quaternion_cover_check, DynConvexOptions, Provenance, SymplecticPath,
};
use magflow::poincare::{find_resonances, omega_f, resonant_orbit, theta_m, twist_fit, TwistOptions};
use magflow::roots::neville_at_zero;
use magflow::surface::{
    build_profile, contact_bounds, m_gamma, rigid_family, ContactInterval, FamilySpec, Profile, Strength,
    StrengthSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn family(spec: FamilySpec) -> Profile {
    build_profile(&spec).unwrap_or_else(|e| panic!("{spec:?}: {e}"))
}

fn cosine(profile: &Profile, coeffs: &[f64]) -> Strength {
    Strength::build(profile, &StrengthSpec::CosineSeries { coeffs: coeffs.to_vec(), normalize: true }).unwrap()
}

fn ellipsoid(a: f64, c: f64) -> Profile {
    family(FamilySpec::Ellipsoid { a, c })
}

fn round_sphere_full_ray() -> Outcome {
    let start = Instant::now();
    let p = Profile::round_sphere();
    let f = Strength::unit(&p);
    let mg = m_gamma(&p);
    let full_ray = contact_bounds(mg).interval == ContactInterval::FullRay;
    let mut worst: f64 = 0.0;
    let mut all_positive = true;
    let mut count = 0;
    for m in [0.5, 1.0, 2.0] {
        let cert = certify_contact(&System::new(m, &p, &f), 256, &ActionOptions::default()).unwrap();
        all_positive &= cert.verdict == Verdict::Positive;
        let want = liouville_action(m, &f).unwrap();
        assert!((want - (m * m + 1.0)).abs() < 1e-15);
        for a in cert.actions() {
            worst = worst.max((a - want).abs());
            count += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mg.abs() < 1e-8 && full_ray && all_positive && worst <= 1e-8 && count > 0 && elapsed < Duration::from_secs(10),
        format!(
            "m_gamma={mg:.1e} full_ray={full_ray} positive={all_positive} max|A-(m²+1)|={worst:.1e} over {count} actions in {elapsed:.1?}"
        ),
    )
}

fn oblate_ellipsoid_bound() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for c in [0.3, 0.5, 0.8, 0.95] {
        let p = ellipsoid(1.0, c);
        // curvature increases from the pole to the equator
        let ks: Vec<f64> = (0..=50).map(|k| p.curvature(0.5 * p.ell() * k as f64 / 50.0)).collect();
        let increasing = ks.windows(2).all(|w| w[1] >= w[0] - 1e-12);
        let mg = m_gamma(&p);
        pass &= increasing && mg <= 1.0 + 1e-6;
        parts.push(format!("c={c}: {mg:.6}"));
    }
    outcome(pass, format!("m_gamma {}", parts.join(", ")))
}

fn stretched_sphere_gap() -> Outcome {
    let cs = [0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0];
    let mgs: Vec<f64> = cs
        .iter()
        .map(|&c| m_gamma(&family(FamilySpec::StretchedSphere { a: 0.3, delta: 0.05, c: Some(c) })))
        .collect();
    let crossing = mgs.windows(2).position(|w| w[0] < 2.0 && w[1] > 2.0);
    let mut product_err: f64 = 0.0;
    let mut gaps = 0;
    for &mg in &mgs {
        if let ContactInterval::Gap { minus, plus } = contact_bounds(mg).interval {
            if plus > minus {
                gaps += 1;
                product_err = product_err.max((minus * plus - 1.0).abs());
            }
        }
    }
    let detail = format!(
        "m_gamma over C={cs:?}: {:?}; crossing after C={:?}; {gaps} gaps with max|m-·m+ - 1|={product_err:.1e}",
        mgs.iter().map(|m| (m * 1e3).round() / 1e3).collect::<Vec<_>>(),
        crossing.map(|k| cs[k])
    );
    outcome(crossing.is_some() && gaps > 0 && product_err <= 1e-10, detail)
}

fn dip_counterexample() -> Outcome {
    let delta = 0.1;
    let p = family(FamilySpec::DipProfile { delta, epsilon: 0.5, a: None });
    let f = Strength::unit(&p);
    let d = p.eval(delta);
    let m = d.radius / d.slope.abs();
    let sys = System::new(m, &p, &f);
    let lat = latitude_orbits(&sys)
        .into_iter()
        .min_by(|a, b| (a.t0 - delta).abs().total_cmp(&(b.t0 - delta).abs()))
        .expect("latitude at the dip");
    let cert = certify_contact(&sys, 64, &ActionOptions::default()).unwrap();
    outcome(
        (lat.t0 - delta).abs() < 1e-8 && lat.action <= -0.485 && cert.verdict == Verdict::Negative,
        format!("m={m:.6} latitude t0={:.6} action={:.4} verdict={:?}", lat.t0, lat.action, cert.verdict),
    )
}

fn ellipsoid_contact_scan() -> Outcome {
    let start = Instant::now();
    let p = ellipsoid(1.0, 4.0);
    let f = Strength::unit(&p);
    let mg = m_gamma(&p);
    let ContactInterval::Gap { minus, plus } = contact_bounds(mg).interval else {
        return outcome(false, format!("m_gamma={mg} leaves no gap"));
    };
    let ms: Vec<f64> = (0..16).map(|k| minus + (plus - minus) * k as f64 / 15.0).collect();
    let mut min_action = f64::INFINITY;
    let mut verdicts = Vec::new();
    let mut sampled = 0;
    for &m in &ms {
        let cert = certify_contact(&System::new(m, &p, &f), 256, &ActionOptions::default()).unwrap();
        min_action = min_action.min(cert.min_action);
        sampled += cert.actions().count();
        verdicts.push(cert.verdict);
    }
    let elapsed = start.elapsed();
    outcome(
        verdicts.iter().all(|v| *v == Verdict::Positive) && min_action > 0.0 && elapsed < Duration::from_secs(300),
        format!(
            "gap [{minus:.4}, {plus:.4}], 16 m x 256 levels, {sampled} actions, min action {min_action:.4}, {elapsed:.1?}"
        ),
    )
}

// At the default rtol 1e-10 the drift after T = 1e3 reaches about 8e-8 and
// scales linearly with rtol.
const CONSERVATION_RTOL: f64 = 1e-12;

fn momentum_conservation() -> Outcome {
    let cases: Vec<(&str, Profile, Vec<f64>)> = vec![
        ("round", Profile::round_sphere(), vec![]),
        ("round+bump", Profile::round_sphere(), vec![0.3]),
        ("oblate", ellipsoid(1.0, 0.5), vec![]),
        ("prolate", ellipsoid(1.0, 4.0), vec![0.2, 0.1]),
        ("stretched", family(FamilySpec::StretchedSphere { a: 0.3, delta: 0.05, c: Some(2.0) }), vec![]),
        ("dip", family(FamilySpec::DipProfile { delta: 0.1, epsilon: 0.5, a: None }), vec![]),
    ];
    let mut worst: Vec<(String, f64)> = Vec::new();
    for (seed, (name, p, coeffs)) in cases.iter().enumerate() {
        let f = cosine(p, coeffs);
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed as u64);
        let starts: Vec<(f64, FullState)> = (0..100)
            .map(|_| {
                let m = rng.gen_range(0.05..2.0);
                let t = rng.gen_range(0.02..0.98) * p.ell();
                (m, FullState::new(t, rng.gen_range(-PI..PI), rng.gen_range(0.0..TAU)))
            })
            .collect();
        let drift = starts
            .par_iter()
            .map(|&(m, s)| {
                let sys = System::new(m, p, &f);
                let tr = integrate(&sys, s, 1e3, &FlowOptions::with_tol(CONSERVATION_RTOL, 1e-14)).unwrap();
                let end = (momentum(&sys, tr.end_state()) - momentum(&sys, s)).abs();
                tr.momentum_drift.max(end)
            })
            .reduce(|| 0.0, f64::max);
        worst.push((name.to_string(), drift));
    }
    let pass = worst.iter().all(|(_, d)| *d <= 1e-8);
    let detail = worst.iter().map(|(n, d)| format!("{n} {d:.1e}")).collect::<Vec<_>>().join(", ");
    outcome(pass, format!("max drift over T=1e3 at rtol {CONSERVATION_RTOL:e}, 100 starts each: {detail}"))
}

fn latitude_period_expansion() -> Outcome {
    let p = ellipsoid(1.0, 1.5);
    let ms = [0.08, 0.04, 0.02];
    let xs: Vec<f64> = ms.iter().map(|m| m * m).collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for coeffs in [vec![], vec![0.3], vec![-0.3]] {
        let f = cosine(&p, &coeffs);
        let f_pole = f.eval(0.0).value;
        // (T − 2π)/(πm²) against 1/f at the pole the latitude shrinks to
        let ratios: Vec<f64> = ms
            .iter()
            .map(|&m| {
                let lat = latitude_orbits(&System::new(m, &p, &f))[0];
                assert!(lat.t0 < 0.5 * p.ell());
                (lat.reeb_period - TAU) / (PI * m * m)
            })
            .collect();
        let limit = neville_at_zero(&xs, &ratios);
        let err = (limit - 1.0 / f_pole).abs();
        pass &= err <= 0.02;
        parts.push(format!("f(pole)={f_pole:.3}: coefficient {limit:.6} vs {:.6}", 1.0 / f_pole));
    }
    outcome(pass, parts.join("; "))
}

fn twist_expansion() -> Outcome {
    let opts = TwistOptions::default();
    let p = ellipsoid(1.0, 1.5);
    let f = cosine(&p, &[0.2, 0.1]);
    let ell = p.ell();
    let ms = [0.08, 0.04, 0.02, 0.01];
    let mut worst: f64 = 0.0;
    for u in [-0.8 * ell, -0.45 * ell, 0.15 * ell, 0.5 * ell, 0.85 * ell] {
        let fit = twist_fit(&p, &f, u, &ms, &opts).unwrap();
        let want = FRAC_PI_2 * omega_f(&f, u.abs());
        worst = worst.max((fit.limit - want).abs() / want.abs());
    }
    let r = Profile::round_sphere();
    let unit = Strength::unit(&r);
    let mut flat: f64 = 0.0;
    for m in [0.1, 0.05] {
        let sys = System::new(m, &r, &unit);
        for u in [-2.5, -1.0, 0.4, 1.8, 2.9] {
            flat = flat.max(theta_m(&sys, u, &opts).unwrap().abs());
        }
    }
    outcome(
        worst <= 0.02 && flat <= 1e-9,
        format!("bump: max relative error {worst:.1e} at 5 u; round sphere max |theta_m| {flat:.1e}"),
    )
}

fn rigid_family_constant() -> Outcome {
    let p = ellipsoid(1.0, 1.5);
    let f = rigid_family(&p, 1.0, 2.0).unwrap();
    let ell = p.ell();
    let limits: Vec<f64> = [-0.75, -0.4, -0.1, 0.2, 0.55, 0.9]
        .iter()
        .map(|k| twist_fit(&p, &f, k * ell, &[0.08, 0.04, 0.02, 0.01], &TwistOptions::default()).unwrap().limit)
        .collect();
    let (lo, hi) = limits.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let mean = limits.iter().sum::<f64>() / limits.len() as f64;
    let spread = (hi - lo) / mean.abs();
    outcome(spread <= 0.02, format!("limits in [{lo:.5}, {hi:.5}], relative spread {spread:.1e} (k/2·π/2 = {:.5})", PI / 4.0))
}

fn long_orbit_period_bound() -> Outcome {
    let p = Profile::round_sphere();
    let f = cosine(&p, &[0.3]);
    let m = 0.05;
    let omega_min = (0..=2000).map(|k| omega_f(&f, p.ell() * k as f64 / 2000.0)).fold(f64::INFINITY, f64::min);
    if omega_min <= 0.0 {
        return outcome(false, format!("strength has Omega_min = {omega_min}"));
    }
    let bound = 0.9 * 2.0 / (omega_min * m * m);
    let sys = System::new(m, &p, &f);
    let us: Vec<f64> = (1..12).map(|k| -0.25 * k as f64).collect();
    let res = find_resonances(&sys, &us, 2, &TwistOptions::default()).unwrap();
    let orbits: Vec<_> = res
        .par_iter()
        .map(|r| resonant_orbit(&sys, *r, 0.4, &FlowOptions::default()).unwrap())
        .collect();
    let closed = orbits.iter().all(|o| o.closure_gap < 1e-6);
    let shortest = orbits.iter().map(|o| o.reeb_period).fold(f64::INFINITY, f64::min);
    outcome(
        !orbits.is_empty() && closed && shortest >= bound,
        format!("{} resonant orbits closed={closed}, shortest Reeb period {shortest:.1} vs bound {bound:.1}", orbits.len()),
    )
}

fn maslov_table() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (vt, want) in [(0.3, (1, 1)), (1.0, (1, 3)), (1.5, (3, 3))] {
        let d = maslov(&SymplecticPath::rotation(vt).unwrap()).unwrap();
        pass &= (d.mu_lower, d.mu_upper) == want;
        parts.push(format!("{vt}: ({}, {})", d.mu_lower, d.mu_upper));
    }
    let n = 400;
    let times: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
    let samples = times.iter().map(|&t| [[(t).exp(), 0.0], [0.0, (-t).exp()]]).collect();
    let hyp = SymplecticPath::new(times, samples, Provenance::Integrated).unwrap();
    let d = maslov(&hyp).unwrap();
    let ok = d.interval.contains(0.0) && d.interval.length() < 0.5;
    pass &= ok;
    parts.push(format!("hyperbolic [{:.4}, {:.4}]", d.interval.lo, d.interval.hi));
    outcome(pass, parts.join(", "))
}

fn generator_norm_fit() -> Outcome {
    let p = ellipsoid(1.0, 1.5);
    let f = cosine(&p, &[0.3]);
    let rep = dynconvex_report(&p, &f, &DynConvexOptions::default()).unwrap();
    outcome(
        rep.exponent >= 0.95,
        format!("exponent {:.3}, C {:.3}, sup norms {:?}", rep.exponent, rep.constant, rep.norms.iter().map(|n| n.sup_norm).collect::<Vec<_>>()),
    )
}

fn doubled_latitudes_convex() -> Outcome {
    let r = Profile::round_sphere();
    let opts = DynConvexOptions { ms: vec![0.025, 0.05, 0.1], samples: 20, ..DynConvexOptions::default() };
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, f) in [("unit", Strength::unit(&r)), ("bump", cosine(&r, &[0.3]))] {
        let rep = dynconvex_report(&r, &f, &opts).unwrap();
        let min_mu = rep.latitudes.iter().map(|l| l.maslov.mu_lower).min();
        pass &= !rep.latitudes.is_empty() && rep.all_mu_at_least_three;
        parts.push(format!("{name}: {} orbits, min mu^l {min_mu:?}", rep.latitudes.len()));
    }
    outcome(pass, parts.join("; "))
}

fn quaternion_cover() -> Outcome {
    let c = quaternion_cover_check(1000, 2024);
    outcome(
        c.max_residual <= 1e-10 && (c.base_tau_side + 2.0).abs() < 1e-14 && (c.base_lambda_side - 0.5).abs() < 1e-14,
        format!("max residual {:.1e}, base point sides {} and {}", c.max_residual, c.base_tau_side, c.base_lambda_side),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 14] = [
        ("round sphere: full contact ray and actions m²+1", round_sphere_full_ray),
        ("oblate ellipsoids: m_gamma <= 1", oblate_ellipsoid_bound),
        ("stretched sphere: m_gamma crosses 2, m-·m+ = 1", stretched_sphere_gap),
        ("dip profile: negative latitude action", dip_counterexample),
        ("thin ellipsoid: positive actions across the gap", ellipsoid_contact_scan),
        ("momentum conservation", momentum_conservation),
        ("latitude Reeb period expansion", latitude_period_expansion),
        ("twist coefficient", twist_expansion),
        ("rigid family: constant twist", rigid_family_constant),
        ("long orbits: period lower bound", long_orbit_period_bound),
        ("Maslov interval table", maslov_table),
        ("generator distance to J is O(m)", generator_norm_fit),
        ("doubled latitudes: mu^l >= 3", doubled_latitudes_convex),
        ("quaternionic cover identity", quaternion_cover),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| {
                let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
            });
        if !result.pass {
            failed += 1;
        }
        println!(
            "acceptance {:>2} {} {name} [{:.1?}]: {}",
            k + 1,
            if result.pass { "PASS" } else { "FAIL" },
            start.elapsed(),
            result.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
