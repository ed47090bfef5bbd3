//! Explicit Euler integration of the Lagrangian equation for `phi`.
//!
//! Interior nodes move with
//!
//! ```text
//! phi_t = -nu psi^(m-1) psi_eta / sqrt(1 + nu^2 psi_eta^2)
//! ```
//!
//! and the end nodes with the support speed `-/+ psi^(m-1)`, taking `psi` at the
//! adjacent interior node as the boundary trace.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{Exec, PAR_MIN_NODES};
use crate::transform::{
    check_monotone, lane_max, node_derivatives, track_argmax, PseudoInverseState,
};

/// Physical and numerical parameters of the scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    /// Nonlinearity exponent, `m >= 1` (`m = 1` is the relativistic heat equation).
    pub m: f64,
    /// Kinematic viscosity `nu > 0` (speed of light fixed to 1).
    pub nu: f64,
    /// CFL divisor, `> 2`.
    pub alpha_cfl: f64,
    pub dt_max: Option<f64>,
    /// Overflow guard on `|psi_eta|` inside the square root.
    pub psi_eta_cap: f64,
}

pub const DEFAULT_ALPHA_CFL: f64 = 8.0;
pub const DEFAULT_PSI_ETA_CAP: f64 = 1e12;

impl Default for SchemeParams {
    fn default() -> Self {
        Self {
            m: 1.0,
            nu: 1.0,
            alpha_cfl: DEFAULT_ALPHA_CFL,
            dt_max: None,
            psi_eta_cap: DEFAULT_PSI_ETA_CAP,
        }
    }
}

impl SchemeParams {
    pub fn with_m(m: f64) -> Self {
        Self {
            m,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m >= 1.0) || !self.m.is_finite() {
            return Err(Error::Params(format!("m must be >= 1, got {}", self.m)));
        }
        if !(self.nu > 0.0) || !self.nu.is_finite() {
            return Err(Error::Params(format!("nu must be > 0, got {}", self.nu)));
        }
        if !(self.alpha_cfl > 2.0) || !self.alpha_cfl.is_finite() {
            return Err(Error::Params(format!(
                "alpha_cfl must be > 2, got {}",
                self.alpha_cfl
            )));
        }
        if let Some(dt) = self.dt_max {
            if !(dt > 0.0) {
                return Err(Error::Params(format!("dt_max must be > 0, got {dt}")));
            }
        }
        if !(self.psi_eta_cap > 0.0) {
            return Err(Error::Params("psi_eta_cap must be positive".into()));
        }
        Ok(())
    }
}

/// `x^p` with the common exponents special-cased; the hot loop evaluates it per node.
#[derive(Debug, Clone, Copy)]
enum Power {
    Int(i32),
    Half(i32),
    Real(f64),
}

impl Power {
    fn new(p: f64) -> Self {
        if p.fract() == 0.0 && p.abs() < 64.0 {
            Power::Int(p as i32)
        } else if (p - 0.5).fract() == 0.0 && p > 0.0 && p < 64.0 {
            Power::Half(p.floor() as i32)
        } else {
            Power::Real(p)
        }
    }

    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Power::Int(k) => int_pow(x, k),
            Power::Half(k) => int_pow(x, k) * x.sqrt(),
            Power::Real(p) => x.powf(p),
        }
    }
}

#[inline]
fn int_pow(x: f64, k: i32) -> f64 {
    match k {
        0 => 1.0,
        1 => x,
        2 => x * x,
        3 => x * x * x,
        4 => {
            let y = x * x;
            y * y
        }
        _ => x.powi(k),
    }
}

/// Right-hand side `phi_t` at every node.
pub fn rhs(state: &PseudoInverseState, params: &SchemeParams) -> Result<Vec<f64>> {
    let mut solver = Solver::new(*params)?;
    solver.evaluate(state)?;
    Ok(solver.velocity.clone())
}

/// CFL time step for `state`.
///
/// `dt = 1 / (alpha * max(nu, 1) * max_i psi_bar_i^m / (d_{i-1} d_i))`, where
/// `psi_bar_i` is the largest `psi` among node `i` and its neighbours and `d` the
/// mass spacings. On a uniform mesh with `nu <= 1` this is exactly
/// `d^2 / (alpha * max psi^m)`. The result is further capped by `dt_max` and by
/// `until - t` when `until` is given.
pub fn cfl_dt(state: &PseudoInverseState, params: &SchemeParams, until: Option<f64>) -> Result<f64> {
    let mut solver = Solver::new(*params)?;
    solver.evaluate(state)?;
    let dt = solver.cfl_dt(state.t)?;
    Ok(cap_dt(dt, params.dt_max, until.map(|u| u - state.t)))
}

/// One explicit Euler step.
pub fn step(state: &PseudoInverseState, params: &SchemeParams) -> Result<PseudoInverseState> {
    let mut solver = Solver::new(*params)?;
    let mut next = state.clone();
    solver.step(&mut next, None)?;
    Ok(next)
}

fn cap_dt(dt: f64, dt_max: Option<f64>, remaining: Option<f64>) -> f64 {
    let mut dt = dt;
    if let Some(cap) = dt_max {
        dt = dt.min(cap);
    }
    if let Some(r) = remaining {
        dt = dt.min(r);
    }
    dt
}

#[inline(always)]
fn sequential_speed<F: Fn(f64) -> f64>(
    v: &mut [f64],
    psi: &[f64],
    psi_eta: &[f64],
    nu: f64,
    cap: f64,
    f: F,
) {
    let n = psi.len();
    for ((o, &p), &pe) in v.iter_mut().zip(&psi[1..n - 1]).zip(&psi_eta[1..n - 1]) {
        let g = nu * pe.clamp(-cap, cap);
        *o = -f(p) * g / (1.0 + g * g).sqrt();
    }
}

fn sequential_max_rate(psi: &[f64], inv_d: &[f64], pow_m: Power, buf: &mut [f64]) -> f64 {
    match pow_m {
        Power::Int(1) => max_rate_with(psi, inv_d, buf, |x| x),
        Power::Int(2) => max_rate_with(psi, inv_d, buf, |x| x * x),
        p => max_rate_with(psi, inv_d, buf, move |x| p.apply(x)),
    }
}

#[inline(always)]
fn max_rate_with<F: Fn(f64) -> f64>(psi: &[f64], inv_d: &[f64], buf: &mut [f64], pow: F) -> f64 {
    let n = psi.len();
    let buf = &mut buf[..n - 2];
    // psi^m is increasing, so the power is taken once per triple
    for ((((o, &a), &b), &c), (&d0, &d1)) in buf
        .iter_mut()
        .zip(&psi[..n - 2])
        .zip(&psi[1..n - 1])
        .zip(&psi[2..])
        .zip(inv_d[..n - 2].iter().zip(&inv_d[1..n - 1]))
    {
        let p = if a > b { a } else { b };
        let p = if c > p { c } else { p };
        *o = pow(p) * (d0 * d1);
    }
    lane_max(buf)
}

/// Per-step information handed to observers.
#[derive(Debug)]
pub struct StepReport<'a> {
    pub step: u64,
    /// Time before the step.
    pub t: f64,
    pub dt: f64,
    /// `psi` at the start of the step.
    pub psi: &'a [f64],
    /// `psi_eta` at the start of the step.
    pub psi_eta: &'a [f64],
    /// `phi_t` used for the update.
    pub velocity: &'a [f64],
    /// State after the update.
    pub state: &'a PseudoInverseState,
}

impl StepReport<'_> {
    /// `max_i |phi_t,i|` over all nodes.
    pub fn max_speed(&self) -> f64 {
        self.velocity.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Reusable workspace for repeated steps on one mesh.
#[derive(Debug, Clone)]
pub struct Solver {
    params: SchemeParams,
    pow_m1: Power,
    pow_m: Power,
    psi: Vec<f64>,
    psi_eta: Vec<f64>,
    velocity: Vec<f64>,
    /// `psi` at the start of the last step.
    psi_prev: Vec<f64>,
    psi_eta_prev: Vec<f64>,
    rates: Vec<f64>,
    exec: Exec,
    max_rate: f64,
    /// `psi`/`psi_eta` already match the state's current positions and argmax.
    fresh: bool,
}

impl Solver {
    pub fn new(params: SchemeParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            pow_m1: Power::new(params.m - 1.0),
            pow_m: Power::new(params.m),
            psi: Vec::new(),
            psi_eta: Vec::new(),
            velocity: Vec::new(),
            psi_prev: Vec::new(),
            psi_eta_prev: Vec::new(),
            rates: Vec::new(),
            exec: Exec::default(),
            max_rate: 0.0,
            fresh: false,
        })
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn velocity(&self) -> &[f64] {
        &self.velocity
    }

    fn derivatives(&mut self, state: &PseudoInverseState) {
        let n = state.len();
        if self.psi.len() != n {
            self.psi = vec![0.0; n];
            self.psi_eta = vec![0.0; n];
            self.velocity = vec![0.0; n];
            self.psi_prev = vec![0.0; n];
            self.psi_eta_prev = vec![0.0; n];
            self.rates = vec![0.0; n];
        }
        node_derivatives(
            &state.mesh,
            &state.phi,
            state.argmax,
            &mut self.psi,
            &mut self.psi_eta,
        );
    }

    /// Fills `psi`, `psi_eta` and `velocity` for `state`.
    pub fn evaluate(&mut self, state: &PseudoInverseState) -> Result<()> {
        if !self.fresh || self.psi.len() != state.len() {
            state.check_monotone()?;
            self.derivatives(state);
        }
        self.fresh = false;
        let n = state.len();
        let SchemeParams {
            nu, psi_eta_cap, ..
        } = self.params;
        let (pow_m1, pow_m) = (self.pow_m1, self.pow_m);
        let psi = &self.psi;
        let psi_eta = &self.psi_eta;
        let inv_d = state.mesh.inv_spacings();
        let speed = move |i: usize| {
            let g = nu * psi_eta[i].clamp(-psi_eta_cap, psi_eta_cap);
            -pow_m1.apply(psi[i]) * g / (1.0 + g * g).sqrt()
        };
        let rate = move |i: usize| {
            let a = psi[i - 1];
            let b = psi[i];
            let c = psi[i + 1];
            let p = if a > b { a } else { b };
            let p = if c > p { c } else { p };
            pow_m.apply(p) * (inv_d[i - 1] * inv_d[i])
        };

        let max_rate;
        if n >= PAR_MIN_NODES && self.exec.is_parallel() {
            self.exec.fill(&mut self.velocity[1..n - 1], |k| speed(k + 1));
            max_rate = self.exec.max_by_index(n - 2, |k| rate(k + 1));
        } else {
            let v = &mut self.velocity[1..n - 1];
            let g = |x: f64| nu * x.clamp(-psi_eta_cap, psi_eta_cap);
            let m1 = |f: &dyn Fn(f64) -> f64, v: &mut [f64]| {
                for (k, o) in v.iter_mut().enumerate() {
                    let gi = g(psi_eta[k + 1]);
                    *o = -f(psi[k + 1]) * gi / (1.0 + gi * gi).sqrt();
                }
            };
            match pow_m1 {
                Power::Int(0) => sequential_speed(v, psi, psi_eta, nu, psi_eta_cap, |_| 1.0),
                Power::Int(1) => sequential_speed(v, psi, psi_eta, nu, psi_eta_cap, |x| x),
                Power::Int(2) => sequential_speed(v, psi, psi_eta, nu, psi_eta_cap, |x| x * x),
                p => m1(&move |x| p.apply(x), v),
            }
            max_rate = sequential_max_rate(psi, inv_d, pow_m, &mut self.rates);
        }
        self.velocity[0] = -pow_m1.apply(self.psi[1]);
        self.velocity[n - 1] = pow_m1.apply(self.psi[n - 2]);
        self.max_rate = max_rate;
        let finite = self.velocity.iter().fold(true, |ok, v| ok & v.is_finite());
        if !finite {
            let i = self.velocity.iter().position(|v| !v.is_finite()).unwrap_or(0);
            return Err(Error::solver(
                state.t,
                format!("non-finite velocity at node {i}"),
            ));
        }
        Ok(())
    }

    /// CFL step for the last evaluated state (before `dt_max` and snapshot caps).
    pub fn cfl_dt(&self, t: f64) -> Result<f64> {
        let max_rate = self.max_rate;
        if !(max_rate > 0.0) || !max_rate.is_finite() {
            return Err(Error::solver(t, "degenerate state: max psi is zero"));
        }
        Ok(1.0 / (self.params.alpha_cfl * self.params.nu.max(1.0) * max_rate))
    }

    /// Advances `state` by one CFL-limited step, landing exactly on `until` if it
    /// would be overshot. Returns the step size taken.
    pub fn step(&mut self, state: &mut PseudoInverseState, until: Option<f64>) -> Result<f64> {
        self.evaluate(state)?;
        let dt_cfl = self.cfl_dt(state.t)?;
        let remaining = until.map(|u| u - state.t);
        let dt = cap_dt(dt_cfl, self.params.dt_max, remaining);
        if !(dt > 0.0) {
            return Err(Error::solver(state.t, format!("non-positive time step {dt}")));
        }
        for (p, v) in state.phi.iter_mut().zip(&self.velocity) {
            *p += dt * v;
        }
        let landed = matches!(remaining, Some(r) if dt >= r);
        state.t = if landed { until.unwrap() } else { state.t + dt };
        check_monotone(&state.phi, state.t)?;

        // Re-track the maximum of u on the updated positions.
        std::mem::swap(&mut self.psi, &mut self.psi_prev);
        std::mem::swap(&mut self.psi_eta, &mut self.psi_eta_prev);
        self.derivatives(state);
        let argmax = track_argmax(&self.psi, state.argmax);
        if argmax != state.argmax {
            state.argmax = argmax;
            self.derivatives(state);
        }
        self.fresh = true;
        Ok(dt)
    }
}

/// Snapshot times and final time of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub times: Vec<f64>,
    pub t_end: f64,
}

impl Schedule {
    pub fn new(times: Vec<f64>, t_end: f64) -> Self {
        Self { times, t_end }
    }

    fn validate(&self, t_start: f64) -> Result<()> {
        if !(self.t_end >= t_start) {
            return Err(Error::Params(format!(
                "t_end = {} precedes the start time {t_start}",
                self.t_end
            )));
        }
        if self.times.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(Error::Params("snapshot times must be nondecreasing".into()));
        }
        if let Some(&t) = self
            .times
            .iter()
            .find(|&&t| !(t >= t_start && t <= self.t_end))
        {
            return Err(Error::Params(format!(
                "snapshot time {t} outside [{t_start}, {}]",
                self.t_end
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub t: f64,
    pub dt: f64,
    pub u_max: f64,
    pub support_left: f64,
    pub support_right: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    StepLimit { steps: u64 },
    Failed { t: f64, reason: String },
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Upper bound on retained log entries; the log is thinned by halves past it.
    pub max_log_entries: usize,
    pub max_steps: Option<u64>,
    pub exec: Exec,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            max_log_entries: 1 << 14,
            max_steps: None,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Initial state followed by one state per requested snapshot time.
    pub snapshots: Vec<PseudoInverseState>,
    /// Step log, every `log_stride`-th step.
    pub log: Vec<StepLog>,
    pub log_stride: u64,
    pub steps: u64,
    pub final_state: PseudoInverseState,
    pub termination: Termination,
}

impl Trajectory {
    pub fn completed(&self) -> bool {
        self.termination == Termination::Completed
    }
}

/// Integrates from `initial` to `schedule.t_end`.
pub fn run(
    initial: PseudoInverseState,
    params: &SchemeParams,
    schedule: &Schedule,
    options: &RunOptions,
) -> Result<Trajectory> {
    run_observed(initial, params, schedule, options, |_| {})
}

/// [`run`] with a callback after every accepted step.
///
/// Parameter and schedule errors are returned as `Err`; solver failures during
/// the integration end the run with [`Termination::Failed`] and keep the
/// snapshots taken so far.
pub fn run_observed<F>(
    initial: PseudoInverseState,
    params: &SchemeParams,
    schedule: &Schedule,
    options: &RunOptions,
    mut observer: F,
) -> Result<Trajectory>
where
    F: FnMut(&StepReport<'_>),
{
    let mut solver = Solver::new(*params)?.with_exec(options.exec);
    schedule.validate(initial.t)?;
    initial.check_monotone()?;

    let mut state = initial;
    let mut snapshots = vec![state.clone()];
    let mut log = Vec::new();
    let mut stride = 1u64;
    let mut steps = 0u64;
    let mut next = 0usize;

    let termination = loop {
        while next < schedule.times.len() && state.t >= schedule.times[next] {
            snapshots.push(state.clone());
            next += 1;
        }
        let target = schedule
            .times
            .get(next)
            .copied()
            .unwrap_or(schedule.t_end);
        if state.t >= schedule.t_end && next == schedule.times.len() {
            break Termination::Completed;
        }
        if let Some(limit) = options.max_steps {
            if steps >= limit {
                break Termination::StepLimit { steps };
            }
        }
        let t_before = state.t;
        let dt = match solver.step(&mut state, Some(target)) {
            Ok(dt) => dt,
            Err(e) => break failure(e, t_before),
        };
        steps += 1;
        observer(&StepReport {
            step: steps,
            t: t_before,
            dt,
            psi: &solver.psi_prev,
            psi_eta: &solver.psi_eta_prev,
            velocity: &solver.velocity,
            state: &state,
        });
        if steps.is_multiple_of(stride) {
            let n = state.len();
            let u_max = lane_max(&solver.psi[1..n - 1]).max(0.0);
            let (l, r) = state.support();
            log.push(StepLog {
                t: state.t,
                dt,
                u_max,
                support_left: l,
                support_right: r,
            });
            if log.len() > options.max_log_entries.max(2) {
                stride *= 2;
                log = log
                    .into_iter()
                    .enumerate()
                    .filter(|(k, _)| k % 2 == 1)
                    .map(|(_, e)| e)
                    .collect();
            }
        }
    };

    Ok(Trajectory {
        snapshots,
        log,
        log_stride: stride,
        steps,
        final_state: state,
        termination,
    })
}

fn failure(e: Error, t: f64) -> Termination {
    match e {
        Error::Solver { t, reason } => Termination::Failed { t, reason },
        other => Termination::Failed {
            t,
            reason: other.to_string(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::InitialDensity;
    use crate::mesh::MassMesh;
    use crate::transform::{init_pseudo_inverse, reconstruct};
    use std::sync::Arc;

    fn scaled(n: usize, scale: f64) -> PseudoInverseState {
        let mesh = Arc::new(MassMesh::uniform(n).unwrap());
        let phi = mesh.nodes().iter().map(|e| scale * e).collect();
        PseudoInverseState::new(mesh, phi, 0.0).unwrap()
    }

    fn triangle(n: usize) -> PseudoInverseState {
        let mesh = Arc::new(MassMesh::uniform(n).unwrap());
        init_pseudo_inverse(&InitialDensity::triangle(1.0).unwrap(), mesh).unwrap()
    }

    #[test]
    fn flat_state_moves_only_its_ends() {
        for m in [1.0, 1.5, 3.0] {
            let v = rhs(&scaled(20, 1.0), &SchemeParams::with_m(m)).unwrap();
            assert!(v[2..18].iter().all(|&x| x == 0.0));
            assert_eq!((v[0], v[19]), (-1.0, 1.0));
            // the trace nodes see the zero end values
            let g: f64 = 19.0;
            assert!((v[1] + g / (1.0 + g * g).sqrt()).abs() < 1e-14);
            assert_eq!(v[18], -v[1]);
        }
        // height 1/2 on [-1, 1]
        let v = rhs(&scaled(20, 2.0), &SchemeParams::with_m(2.0)).unwrap();
        assert!((v[0] + 0.5).abs() < 1e-14 && (v[19] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn heat_speed_is_bounded_by_one() {
        for nu in [0.1, 1.0, 100.0] {
            let params = SchemeParams { nu, ..SchemeParams::default() };
            let v = rhs(&triangle(200), &params).unwrap();
            assert!(v.iter().all(|x| x.abs() <= 1.0 + 1e-12));
        }
    }

    #[test]
    fn cfl_examples() {
        let p = SchemeParams::default();
        let s = scaled(100, 1.0);
        let d = 1.0 / 99.0;
        let dt = cfl_dt(&s, &p, None).unwrap();
        assert!((dt - d * d / 8.0).abs() < 1e-18);

        let p16 = SchemeParams { alpha_cfl: 16.0, ..p };
        assert!((cfl_dt(&s, &p16, None).unwrap() - dt / 2.0).abs() < 1e-18);

        // psi = 2 everywhere
        let p3 = SchemeParams::with_m(3.0);
        let a = cfl_dt(&scaled(100, 1.0), &p3, None).unwrap();
        let b = cfl_dt(&scaled(100, 0.5), &p3, None).unwrap();
        assert!((a / b - 8.0).abs() < 1e-12);

        let capped = SchemeParams { dt_max: Some(1e-6), ..p };
        assert_eq!(cfl_dt(&s, &capped, None).unwrap(), 1e-6);
        assert_eq!(cfl_dt(&s, &p, Some(1e-7)).unwrap(), 1e-7);
    }

    #[test]
    fn flat_step_widens_support() {
        let s = scaled(20, 1.0);
        let p = SchemeParams::default();
        let dt = cfl_dt(&s, &p, None).unwrap();
        let next = step(&s, &p).unwrap();
        assert_eq!(&next.phi[2..18], &s.phi[2..18]);
        assert!(((next.phi[19] - next.phi[0]) - (1.0 + 2.0 * dt)).abs() < 1e-15);
        assert_eq!(next.t, dt);
    }

    #[test]
    fn run_with_zero_end_keeps_initial_snapshot() {
        let t = run(triangle(20), &SchemeParams::default(), &Schedule::new(vec![], 0.0), &RunOptions::default()).unwrap();
        assert_eq!(t.snapshots.len(), 1);
        assert_eq!(t.steps, 0);
        assert!(t.completed());
    }

    #[test]
    fn indicator_support_grows_at_unit_speed() {
        let mesh = Arc::new(MassMesh::uniform(200).unwrap());
        let s = init_pseudo_inverse(&InitialDensity::indicator(-0.5, 0.5).unwrap(), mesh).unwrap();
        let mut boundary_trace = Vec::new();
        let traj = run_observed(
            s,
            &SchemeParams::default(),
            &Schedule::new(vec![0.5], 1.0),
            &RunOptions::default(),
            |r| boundary_trace.push((r.psi[1], r.psi[198], r.max_speed())),
        )
        .unwrap();
        assert!(traj.completed());
        let (a, b) = traj.final_state.support();
        assert!((a + 1.5).abs() < 1e-2 && (b - 1.5).abs() < 1e-2, "{a} {b}");
        assert!(boundary_trace.iter().all(|x| x.2 <= 1.0 + 1e-12));
        // boundary traces of u never increase when m = 1
        assert!(boundary_trace.windows(2).all(|w| w[1].0 <= w[0].0 && w[1].1 <= w[0].1));
        let u0 = reconstruct(&traj.snapshots[0]).unwrap().u_max;
        let u1 = reconstruct(&traj.final_state).unwrap().u_max;
        assert!(u1 < u0);
    }

    #[test]
    fn snapshots_land_on_requested_times() {
        let times = vec![0.0, 0.01, 0.01, 0.03];
        let t = run(triangle(40), &SchemeParams::with_m(2.0), &Schedule::new(times.clone(), 0.05), &RunOptions::default()).unwrap();
        let got: Vec<f64> = t.snapshots.iter().map(|s| s.t).collect();
        assert_eq!(got, [0.0, 0.0, 0.01, 0.01, 0.03]);
        assert_eq!(t.final_state.t, 0.05);
        assert!(t.log.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn mass_stays_within_quadrature_error() {
        let s = triangle(1000);
        let times = vec![0.01, 0.1, 0.5, 1.0];
        let t = run(s, &SchemeParams::with_m(2.0), &Schedule::new(times, 1.0), &RunOptions::default()).unwrap();
        for s in &t.snapshots {
            let dev = (reconstruct(s).unwrap().trapezoid_mass() - 1.0).abs();
            assert!(dev < 2e-3, "t = {}: {dev}", s.t);
        }
    }

    #[test]
    fn limits_and_failures_terminate_runs() {
        let opts = RunOptions { max_steps: Some(5), ..RunOptions::default() };
        let t = run(triangle(40), &SchemeParams::default(), &Schedule::new(vec![], 1.0), &opts).unwrap();
        assert_eq!(t.termination, Termination::StepLimit { steps: 5 });

        let mut broken = triangle(40);
        broken.phi[5] = broken.phi[4];
        assert!(rhs(&broken, &SchemeParams::default()).unwrap_err().is_solver());

        assert!(Schedule::new(vec![0.2, 0.1], 1.0).validate(0.0).is_err());
        assert!(Schedule::new(vec![2.0], 1.0).validate(0.0).is_err());
        assert!(SchemeParams { alpha_cfl: 2.0, ..SchemeParams::default() }.validate().is_err());
        assert!(SchemeParams::with_m(0.5).validate().is_err());
    }

    #[test]
    fn exec_modes_agree_on_large_meshes() {
        let n = PAR_MIN_NODES + 2;
        let s = triangle(n);
        let p = SchemeParams::with_m(1.5);
        let mut a = Solver::new(p).unwrap().with_exec(Exec::Sequential);
        let mut b = Solver::new(p).unwrap().with_exec(Exec::Parallel);
        a.evaluate(&s).unwrap();
        b.evaluate(&s).unwrap();
        assert_eq!(a.velocity(), b.velocity());
        assert_eq!(a.cfl_dt(0.0).unwrap(), b.cfl_dt(0.0).unwrap());
    }
}
