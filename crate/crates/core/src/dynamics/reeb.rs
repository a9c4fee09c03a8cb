//! Reeb-time reparametrisation of flow trajectories.

use super::{momentum, DynamicsError, Trajectory, TrajectorySample};
use crate::quad::gl10;
use serde::{Deserialize, Serialize};

/// Primitive of the magnetic form used in the contact density h.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BetaChoice {
    /// β_θ = Γ_f + γ̇, the primitive that is smooth at both poles.
    #[default]
    Canonical,
    /// β = 0; only meaningful where the strength vanishes.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pinching {
    pub length: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Pinching {
    pub fn holds(&self) -> bool {
        self.lower <= self.length && self.length <= self.upper
    }
}

/// A trajectory with Reeb time τ, dτ = h ds.
#[derive(Debug, Clone)]
pub struct ReebTrajectory {
    pub flow: Trajectory,
    pub beta: BetaChoice,
    pub reeb_time: f64,
    pub h_min: f64,
    pub h_max: f64,
    // (start, end, τ at start) per dense piece
    pieces: Vec<(f64, f64, f64)>,
}

struct Accumulated {
    pieces: Vec<(f64, f64, f64)>,
    total: f64,
    h_min: f64,
    h_max: f64,
    first_nonpositive: Option<(f64, f64)>,
}

fn accumulate(traj: &Trajectory, beta: BetaChoice) -> Accumulated {
    let sys = &traj.system;
    let mut acc = Accumulated {
        pieces: Vec::new(),
        total: 0.0,
        h_min: f64::INFINITY,
        h_max: f64::NEG_INFINITY,
        first_nonpositive: None,
    };
    traj.for_each_piece(|a, b, eval| {
        let mut h_at = |s: f64| {
            let st = eval(s);
            let h = sys.contact_density(st.t, st.phi, beta);
            acc.h_min = acc.h_min.min(h);
            acc.h_max = acc.h_max.max(h);
            if h <= 0.0 && acc.first_nonpositive.is_none() {
                acc.first_nonpositive = Some((s, h));
            }
            h
        };
        h_at(a);
        h_at(b);
        let dtau = gl10(&mut h_at, a, b);
        acc.pieces.push((a, b, acc.total));
        acc.total += dtau;
    });
    acc
}

/// ∫h ds along the trajectory, whatever the sign of h.
pub fn density_integral(traj: &Trajectory, beta: BetaChoice) -> f64 {
    accumulate(traj, beta).total
}

pub fn reeb_reparametrize(traj: &Trajectory, beta: BetaChoice) -> Result<ReebTrajectory, DynamicsError> {
    let acc = accumulate(traj, beta);
    if let Some((s, h)) = acc.first_nonpositive {
        return Err(DynamicsError::NonContactSample { s, h });
    }
    Ok(ReebTrajectory {
        flow: traj.clone(),
        beta,
        reeb_time: acc.total,
        h_min: acc.h_min,
        h_max: acc.h_max,
        pieces: acc.pieces,
    })
}

impl ReebTrajectory {
    /// Reeb time elapsed at flow time `s`.
    pub fn tau_at(&self, s: f64) -> f64 {
        let dir = self.flow.duration.signum();
        let k = self.pieces.partition_point(|p| (p.1 - s) * dir < 0.0).min(self.pieces.len().saturating_sub(1));
        let Some(&(a, _, tau_a)) = self.pieces.get(k) else {
            return 0.0;
        };
        let sys = &self.flow.system;
        tau_a
            + gl10(
                |x| {
                    let st = self.flow.state_at(x);
                    sys.contact_density(st.t, st.phi, self.beta)
                },
                a,
                s,
            )
    }

    /// Length of the projected curve; the speed is m.
    pub fn length(&self) -> f64 {
        self.flow.system.m * self.flow.duration.abs()
    }

    /// Two-sided bound mT/max h ≤ length ≤ mT/min h.
    pub fn pinching(&self) -> Pinching {
        let mt = self.flow.system.m * self.reeb_time.abs();
        Pinching { length: self.length(), lower: mt / self.h_max, upper: mt / self.h_min }
    }

    /// Reeb times of the logged events.
    pub fn event_times(&self) -> Vec<f64> {
        self.flow.events.iter().map(|e| self.tau_at(e.s)).collect()
    }

    /// `n + 1` uniform samples in flow time with Reeb time attached.
    pub fn samples(&self, n: usize) -> Vec<TrajectorySample> {
        let sys = &self.flow.system;
        (0..=n)
            .map(|k| {
                let s = self.flow.duration * k as f64 / n.max(1) as f64;
                let st = self.flow.state_at(s);
                TrajectorySample {
                    s,
                    tau_reeb: self.tau_at(s),
                    t: st.t,
                    phi: st.phi,
                    theta: st.theta,
                    momentum: momentum(sys, st),
                    h: sys.contact_density(st.t, st.phi, self.beta),
                }
            })
            .collect()
    }
}
