//! Index-side evidence for dynamical convexity at low energy.

use super::{dist, iterate, linearized_path, maslov, reeb_generator_fd, IndexError, MaslovData, OrbitSpec, J_ST};
use crate::dynamics::{latitude_orbits, BetaChoice, DynamicsError, FullState, System};
use crate::surface::{Profile, Strength};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

#[derive(Debug, Clone, PartialEq)]
pub struct DynConvexOptions {
    pub ms: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub beta: BetaChoice,
}

impl Default for DynConvexOptions {
    fn default() -> Self {
        Self { ms: vec![0.025, 0.05, 0.1, 0.2], samples: 200, seed: 7, beta: BetaChoice::Canonical }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormSample {
    pub m: f64,
    /// sup over sampled states of ‖B − J‖ (Frobenius).
    pub sup_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatitudeIndex {
    pub m: f64,
    pub t0: f64,
    pub sign: i8,
    /// Reeb period of the doubled orbit.
    pub doubled_period: f64,
    pub maslov: MaslovData,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynConvexReport {
    pub norms: Vec<NormSample>,
    /// Least-squares slope of log sup‖B − J‖ against log m.
    pub exponent: f64,
    /// Empirical constant: max over m of sup‖B − J‖/m.
    pub constant: f64,
    pub latitudes: Vec<LatitudeIndex>,
    pub all_mu_at_least_three: bool,
    /// Per m: (m, 2π/T₀, 1 − Cm, holds) with T₀ the shortest doubled
    /// latitude period standing in for the minimal contractible period.
    pub period_inequality: Vec<(f64, f64, f64, bool)>,
}

fn min_density(sys: &System, beta: BetaChoice) -> (f64, f64) {
    let mut worst = (f64::INFINITY, 0.0);
    for t in sys.profile.scan_grid(1024) {
        for s in [-1.0, 1.0] {
            let h = sys.contact_density(t, s * FRAC_PI_2, beta);
            if h < worst.0 {
                worst = (h, t);
            }
        }
    }
    worst
}

fn sup_norm(sys: &System, opts: &DynConvexOptions, stream: u64) -> Result<f64, IndexError> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(stream);
    let ell = sys.ell();
    let mut sup: f64 = 0.0;
    for _ in 0..opts.samples {
        let t = rng.gen_range(0.05 * ell..0.95 * ell);
        let phi = rng.gen_range(-PI..PI);
        let b = reeb_generator_fd(sys, FullState::new(t, phi, 0.0), opts.beta)?;
        sup = sup.max(dist(&b, &J_ST));
    }
    Ok(sup)
}

pub fn dynconvex_report(profile: &Profile, strength: &Strength, opts: &DynConvexOptions) -> Result<DynConvexReport, IndexError> {
    let systems: Vec<System> = opts.ms.iter().map(|&m| System::new(m, profile, strength)).collect();
    for sys in &systems {
        let (h, t) = min_density(sys, opts.beta);
        if h <= 0.0 {
            return Err(IndexError::Dynamics(DynamicsError::NonContactSample { s: t, h }));
        }
    }
    let per_m: Vec<(NormSample, Vec<LatitudeIndex>)> = systems
        .par_iter()
        .enumerate()
        .map(|(k, sys)| {
            let sup = sup_norm(sys, opts, k as u64)?;
            let mut lats = Vec::new();
            for lat in latitude_orbits(sys) {
                let path = linearized_path(sys, &OrbitSpec::Latitude(lat), 1, opts.beta)?;
                let doubled = iterate(&path, 2)?;
                lats.push(LatitudeIndex {
                    m: sys.m,
                    t0: lat.t0,
                    sign: lat.sign,
                    doubled_period: doubled.period,
                    maslov: maslov(&doubled)?,
                });
            }
            Ok((NormSample { m: sys.m, sup_norm: sup }, lats))
        })
        .collect::<Result<_, IndexError>>()?;
    let norms: Vec<NormSample> = per_m.iter().map(|p| p.0).collect();
    let latitudes: Vec<LatitudeIndex> = per_m.into_iter().flat_map(|p| p.1).collect();

    let (xs, ys): (Vec<f64>, Vec<f64>) = norms.iter().map(|n| (n.m.ln(), n.sup_norm.ln())).unzip();
    let exponent = if xs.len() >= 2 {
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        sxy / sxx
    } else {
        f64::NAN
    };
    let constant = norms.iter().map(|n| n.sup_norm / n.m).fold(0.0, f64::max);
    let period_inequality = opts
        .ms
        .iter()
        .map(|&m| {
            let t0 = latitudes.iter().filter(|l| l.m == m).map(|l| l.doubled_period).fold(f64::INFINITY, f64::min);
            let lhs = TAU / t0;
            let rhs = 1.0 - constant * m;
            (m, lhs, rhs, lhs < rhs)
        })
        .collect();
    Ok(DynConvexReport {
        norms,
        exponent,
        constant,
        all_mu_at_least_three: latitudes.iter().all(|l| l.maslov.mu_lower >= 3),
        latitudes,
        period_inequality,
    })
}
