//! Adaptive time stepping for `(𝔽, 𝔾)' = Ψ(𝔽, 𝔾)`.
//!
//! Two embedded schemes share one step-size controller and one acceptance
//! rule: a step is accepted when its scaled error estimate is at most one
//! *and* it does not raise the system's Lyapunov energy by more than the
//! configured slack. Components listed by [`OdeSystem::frozen`] are never
//! touched, so conserved quantities stay bit-identical.

mod dopri5;
mod rodas3;

use nalgebra::DMatrix;

use crate::basis::SpectralBasis;
use crate::diagnostics;
use crate::error::{Error, Result};
use crate::rhs::{self, GalerkinState, SystemParams};

/// An autonomous ODE system `y' = F(y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;

    fn rhs(&self, y: &[f64], dydt: &mut [f64]) -> Result<()>;

    /// `∂F/∂y`; the default uses central differences.
    fn jacobian(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut jac = DMatrix::zeros(n, n);
        let mut yp = y.to_vec();
        let (mut fp, mut fm) = (vec![0.0; n], vec![0.0; n]);
        for col in 0..n {
            let h = 1e-7 * y[col].abs().max(1.0);
            yp[col] = y[col] + h;
            self.rhs(&yp, &mut fp)?;
            yp[col] = y[col] - h;
            self.rhs(&yp, &mut fm)?;
            yp[col] = y[col];
            for row in 0..n {
                jac[(row, col)] = (fp[row] - fm[row]) / (2.0 * h);
            }
        }
        Ok(jac)
    }

    /// Lyapunov functional used for energy-based step rejection.
    fn energy(&self, _y: &[f64]) -> f64 {
        0.0
    }

    /// Dissipation rate `-dE/dt`, recorded per accepted step.
    fn dissipation(&self, _y: &[f64]) -> Result<f64> {
        Ok(0.0)
    }

    /// Indices whose values must stay fixed.
    fn frozen(&self) -> Vec<usize> {
        Vec::new()
    }
}

/// The Galerkin system on a given basis.
#[derive(Debug, Clone, Copy)]
pub struct GalerkinSystem<'a> {
    params: SystemParams,
    basis: &'a SpectralBasis,
}

impl<'a> GalerkinSystem<'a> {
    pub fn new(params: SystemParams, basis: &'a SpectralBasis) -> Result<Self> {
        params.validate()?;
        if (params.length - basis.length()).abs() > 1e-14 * params.length {
            return Err(Error::Usage(format!(
                "parameter L = {} does not match basis length {}",
                params.length,
                basis.length()
            )));
        }
        Ok(Self { params, basis })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn basis(&self) -> &SpectralBasis {
        self.basis
    }

    fn split<'y>(&self, y: &'y [f64]) -> (&'y [f64], &'y [f64]) {
        y.split_at(self.basis.dim())
    }
}

impl OdeSystem for GalerkinSystem<'_> {
    fn dim(&self) -> usize {
        2 * self.basis.dim()
    }

    fn rhs(&self, y: &[f64], dydt: &mut [f64]) -> Result<()> {
        let (f, g) = self.split(y);
        let out = rhs::assemble_raw(f, g, &self.params, self.basis)?;
        let w = self.basis.dim();
        dydt[..w].copy_from_slice(&out.df);
        dydt[w..].copy_from_slice(&out.dg);
        Ok(())
    }

    fn jacobian(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let (f, g) = self.split(y);
        rhs::jacobian_raw(f, g, &self.params, self.basis)
    }

    fn energy(&self, y: &[f64]) -> f64 {
        let (f, g) = self.split(y);
        diagnostics::energy_raw(f, g, &self.params)
    }

    fn dissipation(&self, y: &[f64]) -> Result<f64> {
        let (f, g) = self.split(y);
        diagnostics::dissipation_raw(f, g, &self.params, self.basis)
    }

    fn frozen(&self) -> Vec<usize> {
        vec![0, self.basis.dim()]
    }
}

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Dormand–Prince 5(4), explicit.
    Dopri5,
    /// Rodas3: 4-stage L-stable Rosenbrock 3(2) with an exact Jacobian.
    #[default]
    Rodas3,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Dopri5 => "dopri5",
            Scheme::Rodas3 => "rodas3",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dopri5" => Some(Scheme::Dopri5),
            "rodas3" | "rosenbrock" => Some(Scheme::Rodas3),
            _ => None,
        }
    }
}

/// Tolerances, step limits and output cadence.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorControls {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub dt_init: f64,
    pub dt_min: f64,
    /// Absolute per-step energy slack; `None` means `1e-10 · max(1, E(0))`.
    pub energy_slack: Option<f64>,
    pub t_final: f64,
    /// Snapshot cadence in time units; `0` records every accepted step.
    pub snapshot_every: f64,
    pub scheme: Scheme,
    /// Upper bound on attempted steps.
    pub max_steps: usize,
}

impl Default for IntegratorControls {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            dt_init: 1e-6,
            dt_min: 1e-14,
            energy_slack: None,
            t_final: 0.1,
            snapshot_every: 0.01,
            scheme: Scheme::default(),
            max_steps: 10_000_000,
        }
    }
}

impl IntegratorControls {
    pub fn validate(&self) -> Result<()> {
        let check = |name, value: f64, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(Error::Parameter {
                    name,
                    value,
                    reason: "out of range",
                })
            }
        };
        check("rel_tol", self.rel_tol, self.rel_tol > 0.0)?;
        check("abs_tol", self.abs_tol, self.abs_tol > 0.0)?;
        check("dt_min", self.dt_min, self.dt_min > 0.0)?;
        check("dt_init", self.dt_init, self.dt_init >= self.dt_min)?;
        check("t_final", self.t_final, self.t_final.is_finite())?;
        check(
            "snapshot_every",
            self.snapshot_every,
            self.snapshot_every >= 0.0,
        )?;
        if let Some(slack) = self.energy_slack {
            check("energy_slack", slack, slack >= 0.0)?;
        }
        Ok(())
    }

    /// Slack resolved against the initial energy.
    pub fn resolved_slack(&self, initial_energy: f64) -> f64 {
        self.energy_slack
            .unwrap_or(1e-10 * initial_energy.max(1.0))
    }
}

/// Safety-factor controller `dt · clamp(0.9 err^{-1/5}, 0.2, 5)`.
pub fn adapt_dt(err_est: f64, dt: f64) -> f64 {
    let factor = if err_est > 0.0 {
        0.9 * err_est.powf(-0.2)
    } else {
        5.0
    };
    dt * factor.clamp(0.2, 5.0)
}

/// Outcome of one attempted step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub accepted: bool,
    /// New state if accepted, otherwise the unchanged input.
    pub y: Vec<f64>,
    pub dt_used: f64,
    pub dt_next: f64,
    /// Scaled error norm; `≤ 1` for accepted steps.
    pub err_est: f64,
    pub energy_after: f64,
    /// The step passed the error test but raised the energy too much.
    pub energy_rejected: bool,
}

/// Trial solution and error vector from one scheme application.
pub(crate) struct Trial {
    pub y: Vec<f64>,
    pub err: Vec<f64>,
}

pub(crate) fn active_indices(system: &dyn OdeSystem) -> Vec<usize> {
    let frozen = system.frozen();
    (0..system.dim()).filter(|i| !frozen.contains(i)).collect()
}

/// One attempted step of size `dt` from `y` using `controls.scheme`.
pub fn step_system(
    system: &dyn OdeSystem,
    y: &[f64],
    t: f64,
    dt: f64,
    controls: &IntegratorControls,
    energy_slack: f64,
) -> Result<StepResult> {
    if !(dt > 0.0) {
        return Err(Error::Parameter {
            name: "dt",
            value: dt,
            reason: "step must be positive",
        });
    }
    if y.len() != system.dim() {
        return Err(Error::Usage(format!(
            "state has length {}, system dimension is {}",
            y.len(),
            system.dim()
        )));
    }
    crate::error::check_finite("state", y)?;
    let active = active_indices(system);
    let attempt = match controls.scheme {
        Scheme::Dopri5 => dopri5::attempt(system, y, dt, &active),
        Scheme::Rodas3 => rodas3::attempt(system, y, t, dt, &active),
    };
    let trial = match attempt.and_then(|tr| crate::error::check_finite("trial state", &tr.y).map(|_| tr)) {
        Ok(tr) => tr,
        // A step that blows up is a failed error test, unless the vector
        // field is already broken at the starting point.
        Err(Error::NonFinite { .. } | Error::SingularMatrix { .. }) => {
            let mut f = vec![0.0; y.len()];
            system.rhs(y, &mut f)?;
            crate::error::check_finite("vector field", &f)?;
            let energy = system.energy(y);
            return Ok(StepResult {
                accepted: false,
                y: y.to_vec(),
                dt_used: dt,
                dt_next: adapt_dt(f64::INFINITY, dt),
                err_est: f64::INFINITY,
                energy_after: energy,
                energy_rejected: false,
            });
        }
        Err(e) => return Err(e),
    };

    let err_est = active.iter().fold(0.0f64, |m, &i| {
        let scale = controls.abs_tol + controls.rel_tol * y[i].abs().max(trial.y[i].abs());
        m.max(trial.err[i].abs() / scale)
    });
    let energy_before = system.energy(y);
    let energy_after = system.energy(&trial.y);
    let error_ok = err_est <= 1.0;
    let energy_ok = energy_after <= energy_before + energy_slack;
    let mut dt_next = adapt_dt(err_est, dt);
    if error_ok && !energy_ok {
        dt_next = dt_next.min(0.5 * dt);
    }
    let accepted = error_ok && energy_ok;
    Ok(StepResult {
        accepted,
        y: if accepted { trial.y } else { y.to_vec() },
        dt_used: dt,
        dt_next,
        err_est,
        energy_after: if accepted { energy_after } else { energy_before },
        energy_rejected: error_ok && !energy_ok,
    })
}

/// Galerkin result of [`step`].
#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinStep {
    pub accepted: bool,
    pub state: GalerkinState,
    pub dt_used: f64,
    pub dt_next: f64,
    pub err_est: f64,
    pub energy_after: f64,
}

/// One step of the Galerkin system. The energy slack is resolved against
/// the energy of `state` when the controls leave it unset.
pub fn step(
    state: &GalerkinState,
    dt: f64,
    params: &SystemParams,
    basis: &SpectralBasis,
    controls: &IntegratorControls,
) -> Result<GalerkinStep> {
    rhs::check_compatible(state, params, basis)?;
    let system = GalerkinSystem::new(*params, basis)?;
    let y = state.to_vector();
    let slack = controls.resolved_slack(system.energy(&y));
    let r = step_system(&system, &y, state.t, dt, controls, slack)?;
    let t = if r.accepted { state.t + dt } else { state.t };
    Ok(GalerkinStep {
        accepted: r.accepted,
        state: GalerkinState::from_vector(&r.y, t)?,
        dt_used: r.dt_used,
        dt_next: r.dt_next,
        err_est: r.err_est,
        energy_after: r.energy_after,
    })
}

/// Per-accepted-step record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSample {
    pub t: f64,
    /// Size of the step that reached `t` (0 for the initial sample).
    pub dt: f64,
    pub energy: f64,
    pub dissipation: f64,
    pub err_est: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub y: Vec<f64>,
}

/// How an integration ended.
#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    Aborted(Error),
}

/// Snapshots, per-step diagnostics and controller state of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub snapshots: Vec<Snapshot>,
    pub steps: Vec<StepSample>,
    pub termination: Termination,
    pub accepted: usize,
    pub rejected: usize,
    pub energy_rejections: usize,
    /// Proposed size of the next step; resuming from the final state with
    /// this value reproduces an uninterrupted run.
    pub dt_next: f64,
    pub energy_slack: f64,
}

impl TrajectoryRecord {
    pub fn final_snapshot(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory has an initial snapshot")
    }

    pub fn completed(&self) -> bool {
        self.termination == Termination::Completed
    }

    /// Snapshot `i` as a Galerkin state.
    pub fn state(&self, i: usize) -> GalerkinState {
        let s = &self.snapshots[i];
        GalerkinState::from_vector(&s.y, s.t).expect("stacked Galerkin state")
    }

    pub fn final_state(&self) -> GalerkinState {
        self.state(self.snapshots.len() - 1)
    }
}

/// Information handed to observers after each accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub sample: StepSample,
    pub dt_next: f64,
    pub energy_slack: f64,
}

/// Callbacks invoked during [`integrate_system`].
pub trait Observer {
    fn on_accepted(&mut self, _t: f64, _y: &[f64], _info: &StepInfo) {}
    fn on_snapshot(&mut self, _t: f64, _y: &[f64]) {}
}

impl Observer for () {}

/// Where to start: initial state, time and controller state.
#[derive(Debug, Clone, PartialEq)]
pub struct StartPoint {
    pub y: Vec<f64>,
    pub t: f64,
    /// Overrides `controls.dt_init` (used when resuming).
    pub dt: Option<f64>,
    /// Overrides the energy slack resolution (used when resuming).
    pub energy_slack: Option<f64>,
}

impl StartPoint {
    pub fn new(y: Vec<f64>, t: f64) -> Self {
        Self {
            y,
            t,
            dt: None,
            energy_slack: None,
        }
    }
}

/// Integrates from `start` to `controls.t_final`.
pub fn integrate_system(
    system: &dyn OdeSystem,
    start: StartPoint,
    controls: &IntegratorControls,
    observer: &mut dyn Observer,
) -> Result<TrajectoryRecord> {
    controls.validate()?;
    if start.y.len() != system.dim() {
        return Err(Error::Usage(format!(
            "initial state has length {}, system dimension is {}",
            start.y.len(),
            system.dim()
        )));
    }
    crate::error::check_finite("initial state", &start.y)?;
    let mut y = start.y;
    let mut t = start.t;
    let energy0 = system.energy(&y);
    let slack = start
        .energy_slack
        .unwrap_or_else(|| controls.resolved_slack(energy0));
    let mut dt = start.dt.unwrap_or(controls.dt_init);

    let mut record = TrajectoryRecord {
        snapshots: vec![Snapshot { t, y: y.clone() }],
        steps: vec![StepSample {
            t,
            dt: 0.0,
            energy: energy0,
            dissipation: system.dissipation(&y)?,
            err_est: 0.0,
        }],
        termination: Termination::Completed,
        accepted: 0,
        rejected: 0,
        energy_rejections: 0,
        dt_next: dt,
        energy_slack: slack,
    };
    observer.on_snapshot(t, &y);

    // Snapshot times lie on the absolute grid k·every, so a resumed run
    // shares the grid of the run it continues; steps are shortened to land
    // on them.
    let every = controls.snapshot_every;
    let snapshot_after = |t: f64| {
        let mut k = (t / every).floor() + 1.0;
        while k * every <= t {
            k += 1.0;
        }
        k * every
    };
    let mut next_snapshot = if every > 0.0 { snapshot_after(t) } else { f64::INFINITY };
    let mut attempts = 0usize;
    let mut last_snapshot_t = t;

    while t < controls.t_final {
        if attempts >= controls.max_steps {
            record.termination = Termination::Aborted(Error::StepBudget {
                t,
                max_steps: controls.max_steps,
            });
            break;
        }
        attempts += 1;
        let target = next_snapshot.min(controls.t_final);
        let remaining = target - t;
        let clipped = dt >= remaining;
        let h = if clipped { remaining } else { dt };
        let r = match step_system(system, &y, t, h, controls, slack) {
            Ok(r) => r,
            Err(e) => {
                record.termination = Termination::Aborted(e);
                break;
            }
        };
        if r.accepted {
            t = if clipped { target } else { t + h };
            y = r.y;
            // A shortened step says little about the step size that works.
            dt = if clipped { r.dt_next.max(dt) } else { r.dt_next };
            record.accepted += 1;
            let dissipation = match system.dissipation(&y) {
                Ok(d) => d,
                Err(e) => {
                    record.termination = Termination::Aborted(e);
                    break;
                }
            };
            let sample = StepSample {
                t,
                dt: h,
                energy: r.energy_after,
                dissipation,
                err_est: r.err_est,
            };
            record.steps.push(sample);
            record.dt_next = dt;
            observer.on_accepted(
                t,
                &y,
                &StepInfo {
                    sample,
                    dt_next: dt,
                    energy_slack: slack,
                },
            );
            let due = every == 0.0 || t >= next_snapshot;
            if due || t >= controls.t_final {
                record.snapshots.push(Snapshot { t, y: y.clone() });
                last_snapshot_t = t;
                observer.on_snapshot(t, &y);
                if every > 0.0 {
                    next_snapshot = snapshot_after(t);
                }
            }
        } else {
            record.rejected += 1;
            if r.energy_rejected {
                record.energy_rejections += 1;
            }
            dt = r.dt_next;
            record.dt_next = dt;
            if dt < controls.dt_min {
                record.termination = Termination::Aborted(Error::StiffnessAbort {
                    t,
                    dt,
                    dt_min: controls.dt_min,
                });
                break;
            }
        }
    }
    if last_snapshot_t != t {
        record.snapshots.push(Snapshot { t, y: y.clone() });
        observer.on_snapshot(t, &y);
    }
    Ok(record)
}

/// Integrates the Galerkin system from `state0`.
pub fn integrate(
    state0: &GalerkinState,
    params: &SystemParams,
    basis: &SpectralBasis,
    controls: &IntegratorControls,
    observer: &mut dyn Observer,
) -> Result<TrajectoryRecord> {
    rhs::check_compatible(state0, params, basis)?;
    let system = GalerkinSystem::new(*params, basis)?;
    integrate_system(
        &system,
        StartPoint::new(state0.to_vector(), state0.t),
        controls,
        observer,
    )
}

/// Resumes the Galerkin system from a checkpointed controller state.
pub fn resume(
    state: &GalerkinState,
    dt_next: f64,
    energy_slack: f64,
    params: &SystemParams,
    basis: &SpectralBasis,
    controls: &IntegratorControls,
    observer: &mut dyn Observer,
) -> Result<TrajectoryRecord> {
    rhs::check_compatible(state, params, basis)?;
    let system = GalerkinSystem::new(*params, basis)?;
    integrate_system(
        &system,
        StartPoint {
            y: state.to_vector(),
            t: state.t,
            dt: Some(dt_next),
            energy_slack: Some(energy_slack),
        },
        controls,
        observer,
    )
}
