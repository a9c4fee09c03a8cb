//! Command implementations. Every command writes its artifacts and a
//! manifest into the output directory.

use crate::config::{ConfigError, ExperimentConfig};
use crate::output::{Artifact, Manifest, OutputDir};
use clap::ValueEnum;
use magflow::action::{certify_contact, ActionOptions, LevelRecord, Verdict};
use magflow::dynamics::{integrate, latitude_orbits, reeb_reparametrize, BetaChoice, FlowOptions, FullState, System};
use magflow::index::{dynconvex_report, quaternion_cover_check, DynConvexOptions};
use magflow::poincare::{twist_profile, TwistOptions};
use magflow::surface::{
    build_profile, contact_bounds, m_gamma, validate, ContactInterval, Profile, Strength, SurfaceError,
};
use serde::Serialize;
use std::path::Path;
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Profile and strength invariants (validation.json)
    Validate,
    /// m_γ and the contact interval (bounds.csv)
    Bounds,
    /// Contact certificates over the m grid (certificates.json, actions.csv)
    Certify,
    /// Latitude orbits per m (latitudes.csv), optional trajectory.csv
    Orbits,
    /// θ_m over the twist grid with fits (twist.csv, twist_fits.json)
    Twist,
    /// Dynamical-convexity report (dynconvex.json)
    Index,
    /// Quaternionic cover identity (cover.json)
    Cover,
    /// Normalised profile text and samples (profile.toml, profile.csv)
    ProfileGen,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Bounds => "bounds",
            Command::Certify => "certify",
            Command::Orbits => "orbits",
            Command::Twist => "twist",
            Command::Index => "index",
            Command::Cover => "cover",
            Command::ProfileGen => "profile-gen",
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical precondition failed: {0}")]
    Numerical(String),
    #[error("certificate verdict Negative at m = {0:?}")]
    NegativeCertificate(Vec<f64>),
    #[error("output error: {0}")]
    Io(String),
}

impl RunError {
    /// 2 config, 3 numerical precondition, 4 negative certificate.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) | RunError::Io(_) => 3,
            RunError::NegativeCertificate(_) => 4,
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

fn surface_error(e: SurfaceError) -> RunError {
    match e {
        SurfaceError::InfeasibleSpec(s) | SurfaceError::InfeasibleParams(s) | SurfaceError::Parse(s) => {
            RunError::Config(ConfigError::Invalid(s))
        }
        other => RunError::Numerical(other.to_string()),
    }
}

fn numerical<E: std::fmt::Display>(e: E) -> RunError {
    RunError::Numerical(e.to_string())
}

fn build(cfg: &ExperimentConfig) -> Result<(Profile, Strength), RunError> {
    let profile = build_profile(&cfg.profile).map_err(surface_error)?;
    let strength = Strength::build(&profile, &cfg.strength).map_err(surface_error)?;
    Ok((profile, strength))
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: u32,
    command: &'a str,
    data: T,
}

fn json<T: Serialize>(command: Command, data: T) -> Result<Vec<u8>, RunError> {
    let mut text = serde_json::to_string_pretty(&Envelope { schema: SCHEMA_VERSION, command: command.name(), data })
        .map_err(|e| RunError::Io(e.to_string()))?;
    text.push('\n');
    Ok(text.into_bytes())
}

fn csv_bytes<F>(header: &[&str], fill: F) -> Result<Vec<u8>, RunError>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<(), csv::Error>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| RunError::Io(e.to_string()))?;
    fill(&mut w).map_err(|e| RunError::Io(e.to_string()))?;
    w.into_inner().map_err(|e| RunError::Io(e.to_string()))
}

fn num(x: f64) -> String {
    format!("{x:.17e}")
}

fn action_options(cfg: &ExperimentConfig) -> ActionOptions {
    ActionOptions {
        rtol: cfg.tolerances.rtol,
        atol: cfg.tolerances.atol,
        beta: BetaChoice::Canonical,
        critical_fraction: cfg.tolerances.critical_fraction,
        sign_tol: cfg.tolerances.sign,
    }
}

/// Runs `command` and writes its artifacts plus `manifest.json` into `out`.
pub fn run(cfg: &ExperimentConfig, config_text: &str, command: Command, out: &Path) -> Result<Manifest, RunError> {
    let dir = OutputDir::create(out)?;
    let mut manifest = Manifest::new(command.name(), config_text, cfg);
    let mut artifacts: Vec<Artifact> = Vec::new();
    let mut failure: Option<RunError> = None;

    match command {
        Command::Validate => {
            let (profile, strength) = build(cfg)?;
            let report = validate(&profile, &strength, cfg.tolerances.validation).map_err(numerical)?;
            if !report.passed {
                failure = Some(RunError::Numerical(format!("validation failed: {}", report.failures().join(", "))));
            }
            #[derive(Serialize)]
            struct Out<'a> {
                ell: f64,
                report: &'a magflow::surface::ValidationReport,
            }
            artifacts.push(Artifact::new(
                "validation.json",
                "surface::validate",
                json(command, Out { ell: profile.ell(), report: &report })?,
            ));
        }
        Command::Bounds => {
            let (profile, _) = build(cfg)?;
            let mg = m_gamma(&profile);
            let b = contact_bounds(mg);
            let (kind, lo, hi) = match b.interval {
                ContactInterval::FullRay => ("full_ray", String::new(), String::new()),
                ContactInterval::Gap { minus, plus } => ("gap", num(minus), num(plus)),
            };
            let bytes = csv_bytes(&["m_gamma", "interval", "m_minus", "m_plus"], |w| {
                w.write_record([num(mg), kind.to_string(), lo, hi])
            })?;
            artifacts.push(Artifact::new("bounds.csv", "surface::m_gamma + surface::contact_bounds", bytes));
        }
        Command::Certify => {
            let (profile, strength) = build(cfg)?;
            let opts = action_options(cfg);
            let mut certs = Vec::new();
            for &m in &cfg.grid.m {
                let sys = System::new(m, &profile, &strength);
                certs.push(certify_contact(&sys, cfg.grid.levels, &opts).map_err(numerical)?);
            }
            let negative: Vec<f64> = certs.iter().filter(|c| c.verdict == Verdict::Negative).map(|c| c.m).collect();
            if !negative.is_empty() {
                failure = Some(RunError::NegativeCertificate(negative));
            }
            let rows = csv_bytes(&["m", "I", "action", "half_period", "source"], |w| {
                for c in &certs {
                    for rec in &c.levels {
                        let (level, action, half, source) = match rec {
                            LevelRecord::Torus(s) => (s.level, num(s.action), num(s.half_period), "torus"),
                            LevelRecord::LatitudeSubstitute { level, action, .. } => {
                                (*level, num(*action), String::new(), "latitude_substitute")
                            }
                            LevelRecord::Skipped { level, .. } => (*level, String::new(), String::new(), "skipped"),
                        };
                        w.write_record([num(c.m), num(level), action, half, source.to_string()])?;
                    }
                    for l in &c.latitude_actions {
                        w.write_record([num(c.m), num(l.momentum), num(l.action), String::new(), "latitude".into()])?;
                    }
                }
                Ok(())
            })?;
            artifacts.push(Artifact::new("certificates.json", "action::certify_contact", json(command, &certs)?));
            artifacts.push(Artifact::new("actions.csv", "action::certify_contact", rows));
        }
        Command::Orbits => {
            let (profile, strength) = build(cfg)?;
            let header = ["m", "t0", "sign", "m_t0", "action", "momentum", "xm_period", "reeb_period"];
            let bytes = csv_bytes(&header, |w| {
                for &m in &cfg.grid.m {
                    for l in latitude_orbits(&System::new(m, &profile, &strength)) {
                        w.write_record([
                            num(m),
                            num(l.t0),
                            l.sign.to_string(),
                            num(l.m_t0),
                            num(l.action),
                            num(l.momentum),
                            num(l.xm_period),
                            num(l.reeb_period),
                        ])?;
                    }
                }
                Ok(())
            })?;
            artifacts.push(Artifact::new("latitudes.csv", "dynamics::latitude_orbits", bytes));
            if let Some(tc) = &cfg.trajectory {
                let sys = System::new(cfg.grid.m[0], &profile, &strength);
                let start = FullState::new(tc.start[0], tc.start[1], tc.start[2]);
                let flow = FlowOptions::with_tol(cfg.tolerances.rtol, cfg.tolerances.atol);
                let traj = integrate(&sys, start, tc.duration, &flow).map_err(numerical)?;
                // latitudes.csv is still written when the Reeb time is undefined
                match reeb_reparametrize(&traj, BetaChoice::Canonical) {
                    Ok(reeb) => {
                        let bytes = csv_bytes(&["s", "tau_reeb", "t", "phi", "theta", "I", "h"], |w| {
                            for s in reeb.samples(tc.samples) {
                                w.write_record([s.s, s.tau_reeb, s.t, s.phi, s.theta, s.momentum, s.h].map(num))?;
                            }
                            Ok(())
                        })?;
                        artifacts.push(Artifact::new(
                            "trajectory.csv",
                            "dynamics::integrate + dynamics::reeb_reparametrize",
                            bytes,
                        ));
                    }
                    Err(e) => failure = Some(numerical(e)),
                }
            }
        }
        Command::Twist => {
            let (profile, strength) = build(cfg)?;
            let ell = profile.ell();
            let us = cfg.twist.u.clone().unwrap_or_else(|| vec![-0.75 * ell, -0.5 * ell, -0.25 * ell, 0.3 * ell, 0.6 * ell]);
            let ms = cfg.twist.m.clone().unwrap_or_else(|| vec![0.08, 0.04, 0.02, 0.01]);
            let tp = twist_profile(&profile, &strength, &us, &ms, &TwistOptions::default()).map_err(numerical)?;
            let bytes = csv_bytes(&["u", "m", "theta_m", "psi_m", "fit"], |w| {
                for row in &tp.rows {
                    let fit = tp.fits.iter().find(|f| f.u == row.u).map_or(f64::NAN, |f| f.limit);
                    w.write_record([row.u, row.m, row.theta_m, row.psi_m, fit].map(num))?;
                }
                Ok(())
            })?;
            artifacts.push(Artifact::new("twist.csv", "poincare::twist_profile", bytes));
            artifacts.push(Artifact::new("twist_fits.json", "poincare::twist_fit", json(command, &tp.fits)?));
        }
        Command::Index => {
            let (profile, strength) = build(cfg)?;
            let opts = DynConvexOptions {
                ms: cfg.index.m.clone(),
                samples: cfg.index.samples,
                seed: cfg.seed,
                beta: BetaChoice::Canonical,
            };
            let rep = dynconvex_report(&profile, &strength, &opts).map_err(numerical)?;
            artifacts.push(Artifact::new("dynconvex.json", "index::dynconvex_report", json(command, &rep)?));
        }
        Command::Cover => {
            let check = quaternion_cover_check(cfg.cover.samples, cfg.seed);
            artifacts.push(Artifact::new("cover.json", "index::quaternion_cover_check", json(command, check)?));
        }
        Command::ProfileGen => {
            let (profile, _) = build(cfg)?;
            artifacts.push(Artifact::new("profile.toml", "surface::FamilySpec::to_text", cfg.profile.to_text().into_bytes()));
            let n = 1024;
            let bytes = csv_bytes(&["t", "gamma", "gamma_dot", "gamma_ddot", "gamma_dddot", "Gamma", "K"], |w| {
                for k in 0..=n {
                    let t = profile.ell() * k as f64 / n as f64;
                    let d = profile.eval(t);
                    w.write_record(
                        [t, d.radius, d.slope, d.second, d.third, profile.primitive(t), profile.curvature(t)].map(num),
                    )?;
                }
                Ok(())
            })?;
            artifacts.push(Artifact::new("profile.csv", "surface::build_profile", bytes));
        }
    }

    for a in &artifacts {
        dir.write_atomic(&a.file, &a.bytes)?;
        manifest.record(a);
    }
    manifest.outcome = failure.as_ref().map_or("ok".into(), |e| e.to_string());
    dir.write_atomic("manifest.json", &manifest.to_bytes())?;
    match failure {
        Some(e) => Err(e),
        None => Ok(manifest),
    }
}
