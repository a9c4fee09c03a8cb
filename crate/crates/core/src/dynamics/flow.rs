//! Chart-switching integration of the magnetic flow.
//!
//! Away from the poles the flow is integrated in (t, φ, θ). Within
//! `CHART_MARGIN·ℓ` of a pole the state moves to a regular chart
//! (x, y, α): for the south pole x + iy = t·e^{iθ} and α = θ + φ, for the
//! north pole x + iy = (ℓ − t)·e^{iθ} and α = θ − φ + π. The pole chart is
//! left again at twice the margin.
//!
//! Longitudes are integrated from θ = 0 and the initial longitude is added
//! on output, so rotated initial conditions give bitwise identical (t, φ).

use super::{momentum, DynamicsError, FullState, System, CHART_MARGIN};
use crate::ode::{self, refine_event, Control, DenseStep, Settings, Stats};
use serde::Serialize;
use std::f64::consts::{PI, TAU};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    Global,
    South,
    North,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    /// cos φ changes sign: φ ≡ ±π/2. `upper` is true at φ ≡ π/2 and
    /// `t_max` is true when t turns from increasing to decreasing.
    PhiCrossing { upper: bool, t_max: bool },
    /// t crosses the target latitude.
    Latitude { target: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub s: f64,
    pub kind: EventKind,
    pub state: FullState,
}

/// Which events end the integration early.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    Never,
    /// Stop at the n-th t maximum.
    TurnTop(usize),
    /// Stop at the n-th φ-crossing of either kind.
    PhiCrossings(usize),
}

#[derive(Debug, Clone)]
pub struct FlowOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub latitude_targets: Vec<f64>,
    pub record_phi_events: bool,
    pub stop: StopRule,
    pub event_tol: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 5_000_000,
            latitude_targets: Vec::new(),
            record_phi_events: true,
            stop: StopRule::Never,
            event_tol: 1e-12,
        }
    }
}

impl FlowOptions {
    pub fn with_tol(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, ..Self::default() }
    }
}

#[derive(Debug, Clone)]
struct Segment {
    chart: Chart,
    steps: Vec<DenseStep>,
    // unwrapped θ at the start of each step (pole charts only)
    theta_refs: Vec<f64>,
    s_start: f64,
    s_end: f64,
}

/// Dense solution of the flow with its event log.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub system: System,
    pub start: FullState,
    pub duration: f64,
    pub events: Vec<Event>,
    pub stats: Stats,
    pub momentum_drift: f64,
    pub stopped_early: bool,
    theta_offset: f64,
    segments: Vec<Segment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub s: f64,
    pub tau_reeb: f64,
    pub t: f64,
    pub phi: f64,
    pub theta: f64,
    pub momentum: f64,
    pub h: f64,
}

fn wrap_near(angle: f64, reference: f64) -> f64 {
    angle + TAU * ((reference - angle) / TAU).round()
}

fn chart_for(sys: &System, t: f64) -> Chart {
    let eps = CHART_MARGIN * sys.ell();
    if t < eps {
        Chart::South
    } else if t > sys.ell() - eps {
        Chart::North
    } else {
        Chart::Global
    }
}

fn to_chart(sys: &System, chart: Chart, s: FullState) -> [f64; 3] {
    match chart {
        Chart::Global => [s.t, s.phi, s.theta],
        Chart::South => {
            let (sn, cs) = s.theta.sin_cos();
            [s.t * cs, s.t * sn, s.theta + s.phi]
        }
        Chart::North => {
            let r = sys.ell() - s.t;
            let (sn, cs) = s.theta.sin_cos();
            [r * cs, r * sn, s.theta - s.phi + PI]
        }
    }
}

fn from_chart(sys: &System, chart: Chart, y: &[f64], theta_ref: f64) -> FullState {
    match chart {
        Chart::Global => FullState::new(y[0], y[1], y[2]),
        Chart::South => {
            let r = y[0].hypot(y[1]);
            let theta = if r > 0.0 { wrap_near(y[1].atan2(y[0]), theta_ref) } else { theta_ref };
            FullState::new(r, y[2] - theta, theta)
        }
        Chart::North => {
            let r = y[0].hypot(y[1]);
            let theta = if r > 0.0 { wrap_near(y[1].atan2(y[0]), theta_ref) } else { theta_ref };
            FullState::new(sys.ell() - r, theta - y[2] + PI, theta)
        }
    }
}

pub(crate) fn chart_field(sys: &System, chart: Chart, y: &[f64], dy: &mut [f64]) {
    let m = sys.m;
    match chart {
        Chart::Global => {
            let v = sys.field_raw(y[0], y[1]);
            dy.copy_from_slice(&v);
        }
        Chart::South | Chart::North => {
            let r = y[0].hypot(y[1]);
            let south = chart == Chart::South;
            let t = if south { r } else { sys.ell() - r };
            let d = sys.profile.eval(t);
            let f = sys.strength.eval(t).value;
            if r == 0.0 {
                let (sa, ca) = y[2].sin_cos();
                dy[0] = m * ca;
                dy[1] = m * sa;
                dy[2] = if south { f } else { -f };
                return;
            }
            let (st, ct) = (y[1] / r, y[0] / r);
            let ratio = r / d.radius;
            if south {
                // φ = α − θ
                let (sa, ca) = y[2].sin_cos();
                let sp = sa * ct - ca * st;
                let cp = ca * ct + sa * st;
                dy[0] = m * (cp * ct - ratio * sp * st);
                dy[1] = m * (cp * st + ratio * sp * ct);
                dy[2] = f + m * sp * sys.profile.south_defect(t, &d);
            } else {
                // φ = θ − α + π
                let (sa, ca) = y[2].sin_cos();
                let sp = -(st * ca - ct * sa);
                let cp = -(ct * ca + st * sa);
                dy[0] = -m * cp * ct - m * ratio * sp * st;
                dy[1] = -m * cp * st + m * ratio * sp * ct;
                dy[2] = -f + m * sp * sys.profile.north_defect(t, &d);
            }
        }
    }
}

fn settings_for(opts: &FlowOptions, chart: Chart) -> Settings {
    Settings {
        rtol: opts.rtol,
        atol: opts.atol,
        max_steps: opts.max_steps,
        h_max: f64::INFINITY,
        angular: match chart {
            Chart::Global => vec![false, true, true],
            _ => vec![false, false, true],
        },
    }
}

const SUBSAMPLES: usize = 8;

/// Integrates the flow from `start` for flow time `duration` (negative
/// durations integrate backwards).
pub fn integrate(sys: &System, start: FullState, duration: f64, opts: &FlowOptions) -> Result<Trajectory, DynamicsError> {
    let ell = sys.ell();
    if !(start.t > 0.0 && start.t < ell) || !duration.is_finite() || sys.m < 0.0 {
        return Err(DynamicsError::InvalidInput(format!(
            "start t = {} must lie in (0, {ell}) and the duration must be finite",
            start.t
        )));
    }
    let dir = if duration >= 0.0 { 1.0 } else { -1.0 };
    let eps_in = CHART_MARGIN * ell;
    let eps_out = 2.0 * CHART_MARGIN * ell;
    let internal_start = FullState::new(start.t, start.phi, 0.0);
    let i0 = momentum(sys, internal_start);

    let mut traj = Trajectory {
        system: sys.clone(),
        start,
        duration,
        events: Vec::new(),
        stats: Stats::default(),
        momentum_drift: 0.0,
        stopped_early: false,
        theta_offset: start.theta,
        segments: Vec::new(),
    };
    let mut chart = chart_for(sys, start.t);
    let mut state = internal_start;
    let mut s = 0.0;
    let mut stop_counter = 0usize;
    let mut drift: f64 = 0.0;

    while (duration - s) * dir > 0.0 {
        let y0 = to_chart(sys, chart, state);
        let settings = settings_for(opts, chart);
        let mut seg = Segment { chart, steps: Vec::new(), theta_refs: Vec::new(), s_start: s, s_end: s };
        let mut theta_ref = state.theta;
        let mut next_chart: Option<Chart> = None;
        let mut finished = false;
        let events = &mut traj.events;
        let mut buf = [0.0; 3];

        let out = ode::integrate(
            |_, y, dy| chart_field(sys, chart, y, dy),
            s,
            &y0,
            duration,
            &settings,
            |step: &DenseStep| {
                let theta_at_start = theta_ref;
                let to_global = |y: &[f64]| from_chart(sys, chart, y, theta_at_start);
                // sub-samples along the step
                let times: Vec<f64> = (0..=SUBSAMPLES).map(|k| step.s0 + step.h * k as f64 / SUBSAMPLES as f64).collect();
                let states: Vec<FullState> = times
                    .iter()
                    .map(|&tt| {
                        step.eval_into(tt, &mut buf);
                        to_global(&buf)
                    })
                    .collect();
                // chart exit
                let mut cut: Option<(f64, Chart)> = None;
                let exit_fn = |st: &FullState| -> (f64, Chart) {
                    match chart {
                        Chart::Global => {
                            if st.t - eps_in <= ell - eps_in - st.t {
                                (st.t - eps_in, Chart::South)
                            } else {
                                (ell - eps_in - st.t, Chart::North)
                            }
                        }
                        Chart::South => (eps_out - st.t, Chart::Global),
                        Chart::North => (st.t - (ell - eps_out), Chart::Global),
                    }
                };
                for k in 1..=SUBSAMPLES {
                    let (g, target) = exit_fn(&states[k]);
                    if g <= 0.0 {
                        let lo = times[k - 1];
                        let hi = times[k];
                        let sx = refine_event(step, lo, hi, |_, y| exit_fn(&to_global(y)).0, opts.event_tol);
                        cut = Some((sx, target));
                        break;
                    }
                }
                let limit = cut.map(|c| c.0).unwrap_or(step.s1());
                // events up to the limit
                let mut stop_at: Option<f64> = None;
                let cos_phi = |st: &FullState| st.phi.cos();
                let mut found: Vec<Event> = Vec::new();
                for k in 1..=SUBSAMPLES {
                    let (a, b) = (times[k - 1], times[k]);
                    if (a - limit) * step.h.signum() >= 0.0 {
                        break;
                    }
                    let b = if (b - limit) * step.h.signum() > 0.0 { limit } else { b };
                    let (sa, sb) = (states[k - 1], {
                        step.eval_into(b, &mut buf);
                        to_global(&buf)
                    });
                    if opts.record_phi_events || !matches!(opts.stop, StopRule::Never) {
                        let (ga, gb) = (cos_phi(&sa), cos_phi(&sb));
                        if ga.signum() != gb.signum() && gb != 0.0 {
                            let se = refine_event(step, a, b, |_, y| to_global(y).phi.cos(), opts.event_tol);
                            step.eval_into(se, &mut buf);
                            let st = to_global(&buf);
                            // forward-time orientation of the sign change
                            let (early, late) = if dir > 0.0 { (ga, gb) } else { (gb, ga) };
                            let t_max = early > 0.0 && late <= 0.0;
                            found.push(Event { s: se, kind: EventKind::PhiCrossing { upper: st.phi.sin() > 0.0, t_max }, state: st });
                        }
                    }
                    for &target in &opts.latitude_targets {
                        let (ga, gb) = (sa.t - target, sb.t - target);
                        if ga.signum() != gb.signum() && gb != 0.0 {
                            let se = refine_event(step, a, b, |_, y| to_global(y).t - target, opts.event_tol);
                            step.eval_into(se, &mut buf);
                            found.push(Event { s: se, kind: EventKind::Latitude { target }, state: to_global(&buf) });
                        }
                    }
                }
                // a start point lying on an event surface is not an event
                found.retain(|e| e.s.abs() > 8.0 * opts.event_tol);
                found.sort_by(|x, y| ((x.s - y.s) * dir).total_cmp(&0.0));
                for ev in found {
                    let counts = match (opts.stop, ev.kind) {
                        (StopRule::TurnTop(_), EventKind::PhiCrossing { t_max: true, .. }) => true,
                        (StopRule::PhiCrossings(_), EventKind::PhiCrossing { .. }) => true,
                        _ => false,
                    };
                    let record = opts.record_phi_events || !matches!(ev.kind, EventKind::PhiCrossing { .. }) || counts;
                    if record {
                        events.push(ev);
                    }
                    if counts {
                        stop_counter += 1;
                        let n = match opts.stop {
                            StopRule::TurnTop(n) | StopRule::PhiCrossings(n) => n,
                            StopRule::Never => usize::MAX,
                        };
                        if stop_counter >= n {
                            stop_at = Some(ev.s);
                            break;
                        }
                    }
                }
                let end = stop_at.unwrap_or(limit);
                seg.steps.push(step.clone());
                seg.theta_refs.push(theta_at_start);
                seg.s_end = end;
                step.eval_into(end, &mut buf);
                let st_end = to_global(&buf);
                theta_ref = st_end.theta;
                drift = drift.max((momentum(sys, st_end) - i0).abs());
                if stop_at.is_some() {
                    finished = true;
                    return Control::Stop(end);
                }
                if let Some((sx, target)) = cut {
                    next_chart = Some(target);
                    return Control::Stop(sx);
                }
                Control::Continue
            },
        );
        let out = match out {
            Ok(o) => o,
            Err(_) if chart != Chart::Global => return Err(DynamicsError::ChartBreakdown { s }),
            Err(e) => return Err(e.into()),
        };
        traj.stats.merge(out.stats);
        let seg_end = if out.stopped { out.s } else { duration };
        seg.s_end = seg_end;
        let end_state = from_chart(sys, chart, &out.y, theta_ref);
        if !seg.steps.is_empty() {
            traj.segments.push(seg);
        }
        s = seg_end;
        state = end_state;
        if finished {
            traj.stopped_early = true;
            break;
        }
        match next_chart {
            Some(c) => chart = c,
            None => break,
        }
    }
    // express event longitudes in the caller's frame
    for ev in &mut traj.events {
        ev.state.theta += traj.theta_offset;
    }
    traj.duration = s;
    traj.momentum_drift = drift;
    Ok(traj)
}

impl Trajectory {
    pub fn end_time(&self) -> f64 {
        self.duration
    }

    pub fn segment_charts(&self) -> Vec<Chart> {
        self.segments.iter().map(|s| s.chart).collect()
    }

    fn locate(&self, s: f64) -> (usize, usize) {
        let dir = if self.duration >= 0.0 { 1.0 } else { -1.0 };
        let seg_idx = self
            .segments
            .partition_point(|seg| (seg.s_end - s) * dir < 0.0)
            .min(self.segments.len() - 1);
        let seg = &self.segments[seg_idx];
        let step_idx = seg
            .steps
            .partition_point(|st| (st.s1() - s) * dir < 0.0)
            .min(seg.steps.len() - 1);
        (seg_idx, step_idx)
    }

    /// State at flow time `s` (within [0, duration]).
    pub fn state_at(&self, s: f64) -> FullState {
        let (i, j) = self.locate(s);
        let seg = &self.segments[i];
        let y = seg.steps[j].eval(s);
        let mut st = from_chart(&self.system, seg.chart, &y, seg.theta_refs[j]);
        st.theta += self.theta_offset;
        st
    }

    pub fn end_state(&self) -> FullState {
        self.state_at(self.duration)
    }

    /// Calls `visit(step_start, step_end, eval)` for each stored step piece.
    pub(crate) fn for_each_piece<F: FnMut(f64, f64, &dyn Fn(f64) -> FullState)>(&self, mut visit: F) {
        for seg in &self.segments {
            for (k, step) in seg.steps.iter().enumerate() {
                let a = if self.duration >= 0.0 { step.s0.max(seg.s_start) } else { step.s0.min(seg.s_start) };
                let b = if self.duration >= 0.0 { step.s1().min(seg.s_end) } else { step.s1().max(seg.s_end) };
                if (b - a) * self.duration.signum() <= 0.0 {
                    continue;
                }
                let theta_ref = seg.theta_refs[k];
                let chart = seg.chart;
                let sys = &self.system;
                let off = self.theta_offset;
                let eval = move |s: f64| {
                    let mut st = from_chart(sys, chart, &step.eval(s), theta_ref);
                    st.theta += off;
                    st
                };
                visit(a, b, &eval);
            }
        }
    }

    /// Uniform samples of the trajectory (`n + 1` points) with Reeb time
    /// left at zero; see [`super::ReebTrajectory::samples`] for the timed
    /// version.
    pub fn samples(&self, n: usize) -> Vec<TrajectorySample> {
        (0..=n)
            .map(|k| {
                let s = self.duration * k as f64 / n.max(1) as f64;
                let st = self.state_at(s);
                TrajectorySample {
                    s,
                    tau_reeb: 0.0,
                    t: st.t,
                    phi: st.phi,
                    theta: st.theta,
                    momentum: momentum(&self.system, st),
                    h: self.system.contact_density(st.t, st.phi, super::BetaChoice::Canonical),
                }
            })
            .collect()
    }

    /// Step end points in flow time, a natural polyline resolution.
    pub fn step_times(&self) -> Vec<f64> {
        let mut out = vec![0.0];
        self.for_each_piece(|_, b, _| out.push(b));
        out
    }
}
