use serde::Serialize;

use super::scheme::Evolution;
use super::state::FlowState;
use crate::error::{Error, Result};
use crate::gas::GasParams;

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub state: FlowState,
    /// Number of steps taken before this snapshot.
    pub step_index: usize,
    /// `∫₀ᵗ (F(0) − F(L)) ds` accumulated from the scheme's own boundary fluxes.
    pub boundary_inflow: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    /// Time at the end of the step.
    pub t: f64,
    pub dt: f64,
    /// `dt` divided by the stability bound at the start of the step.
    pub margin: f64,
    pub min_rho: f64,
    pub max_rho: f64,
    pub min_theta: f64,
    pub max_theta: f64,
}

#[derive(Debug, Clone)]
pub struct Failure {
    pub time: f64,
    pub error: Error,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    /// `(t, ρ(t, 0))` at the initial time and after every step.
    pub boundary_density_history: Vec<(f64, f64)>,
    pub step_log: Vec<StepRecord>,
    pub failure: Option<Failure>,
}

impl Trajectory {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    pub fn final_state(&self) -> &FlowState {
        &self.snapshots.last().expect("trajectory has a snapshot").state
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.state.t).collect()
    }

    /// Error with the failure time attached, if the run broke down.
    pub fn check(&self) -> Result<()> {
        match &self.failure {
            None => Ok(()),
            Some(f) => Err(Error::Breakdown {
                time: f.time,
                source: Box::new(f.error.clone()),
            }),
        }
    }
}

/// Output schedule for [`run`].
#[derive(Debug, Clone, Copy)]
pub struct RunControl {
    pub t_end: f64,
    /// Snapshot cadence in time units; snapshots land exactly on multiples.
    pub output_every: f64,
}

/// March from `initial` to `t_end` with `dt = cfl_dt`, shortened to land on
/// output times. Breakdown stops the run and is recorded in the trajectory.
pub fn run(evolution: &Evolution, initial: FlowState, control: RunControl) -> Result<Trajectory> {
    if !(control.t_end >= 0.0) || !(control.output_every > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need t_end >= 0 and output_every > 0 (t_end={}, output_every={})",
            control.t_end, control.output_every
        )));
    }
    initial.check_grid(&evolution.grid)?;
    initial.validate()?;
    let mut traj = Trajectory {
        snapshots: vec![Snapshot {
            state: initial.clone(),
            step_index: 0,
            boundary_inflow: [0.0; 3],
        }],
        boundary_density_history: vec![(initial.t, initial.rho[0])],
        step_log: Vec::new(),
        failure: None,
    };
    let t0 = initial.t;
    let mut state = initial;
    let mut inflow = [0.0; 3];
    let mut next_out = 1usize;
    let t_end = t0 + control.t_end;
    let mut steps = 0usize;
    while state.t < t_end {
        let target = (t0 + next_out as f64 * control.output_every).min(t_end);
        let bound = evolution.cfl_dt(&state);
        let remaining = target - state.t;
        let (dt, lands) = if bound >= remaining {
            (remaining, true)
        } else if bound > 0.5 * remaining {
            // split evenly to avoid a sliver step before the output time
            (0.5 * remaining, false)
        } else {
            (bound, false)
        };
        match evolution.step_with_fluxes(&state, dt) {
            Ok(out) => {
                let mut next = out.state;
                if lands {
                    next.t = target;
                }
                for (acc, b) in inflow.iter_mut().zip(out.boundary_inflow) {
                    *acc += b;
                }
                steps += 1;
                let (min_rho, max_rho, min_theta, max_theta) = next.extrema();
                traj.step_log.push(StepRecord {
                    t: next.t,
                    dt,
                    margin: dt / (bound / evolution.cfl),
                    min_rho,
                    max_rho,
                    min_theta,
                    max_theta,
                });
                traj.boundary_density_history.push((next.t, next.rho[0]));
                state = next;
                if lands {
                    traj.snapshots.push(Snapshot {
                        state: state.clone(),
                        step_index: steps,
                        boundary_inflow: inflow,
                    });
                    next_out += 1;
                }
            }
            Err(error) => {
                traj.failure = Some(Failure { time: state.t, error });
                break;
            }
        }
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConservationReport {
    /// `|∫U(t_end) − ∫U(0) − ∫₀^{t_end}(F(0) − F(L))|` for mass, momentum, energy.
    pub errors: [f64; 3],
    /// Largest such error over consecutive snapshot pairs, divided by the
    /// number of steps between them.
    pub max_per_step: [f64; 3],
    pub initial_integrals: [f64; 3],
    pub steps: usize,
}

/// Discrete balance of the conserved integrals against the boundary fluxes
/// the scheme applied.
pub fn balance_report(traj: &Trajectory, params: &GasParams, dx: f64) -> ConservationReport {
    let first = &traj.snapshots[0];
    let last = traj.snapshots.last().unwrap();
    let i0 = first.state.integrals(params, dx);
    let i1 = last.state.integrals(params, dx);
    let errors =
        [0, 1, 2].map(|k| (i1[k] - i0[k] - (last.boundary_inflow[k] - first.boundary_inflow[k])).abs());
    let mut max_per_step = [0.0f64; 3];
    let mut prev = (first, i0);
    for snap in &traj.snapshots[1..] {
        let ints = snap.state.integrals(params, dx);
        let steps = (snap.step_index - prev.0.step_index).max(1) as f64;
        for k in 0..3 {
            let e = (ints[k] - prev.1[k] - (snap.boundary_inflow[k] - prev.0.boundary_inflow[k])).abs();
            max_per_step[k] = max_per_step[k].max(e / steps);
        }
        prev = (snap, ints);
    }
    ConservationReport {
        errors,
        max_per_step,
        initial_integrals: i0,
        steps: last.step_index - first.step_index,
    }
}

/// Balance recomputed from snapshot states only: boundary fluxes assembled
/// from the physical flux formulas with one-sided quadratic derivatives,
/// integrated in time by the trapezoid rule. Converges at `O(Δt² + dx)`.
pub fn balance_report_analytic(traj: &Trajectory, evolution: &Evolution) -> [f64; 3] {
    let p = &evolution.params;
    let dx = evolution.grid.dx();
    let (mu, kappa, r, cv) = (p.mu(), p.kappa(), p.r(), p.cv());
    let (um, thm) = (evolution.bdry.u_minus(), evolution.bdry.theta_minus());
    let far = evolution.far;
    // derivative at a boundary value f_b from cells at distances dx/2, 3dx/2
    let d_bdry = |fb: f64, f0: f64, f1: f64| (-8.0 * fb + 9.0 * f0 - f1) / (3.0 * dx);
    let net = |s: &FlowState| -> [f64; 3] {
        let n = s.len();
        let rho0 = s.rho[0];
        let ux = d_bdry(um, s.u[0], s.u[1]);
        let tx = d_bdry(thm, s.theta[0], s.theta[1]);
        let p0 = r * rho0 * thm;
        let e0 = rho0 * (cv * thm + 0.5 * um * um);
        let left = [
            rho0 * um,
            rho0 * um * um + p0 - mu * ux,
            um * (e0 + p0) - kappa * tx - mu * um * ux,
        ];
        let (rp, upl, tp) = (far.rho_plus(), far.u_plus(), far.theta_plus());
        let uxr = -d_bdry(upl, s.u[n - 1], s.u[n - 2]);
        let txr = -d_bdry(tp, s.theta[n - 1], s.theta[n - 2]);
        let pp = r * rp * tp;
        let ep = rp * (cv * tp + 0.5 * upl * upl);
        let right = [
            rp * upl,
            rp * upl * upl + pp - mu * uxr,
            upl * (ep + pp) - kappa * txr - mu * upl * uxr,
        ];
        [0, 1, 2].map(|k| left[k] - right[k])
    };
    let mut integral = [0.0; 3];
    for pair in traj.snapshots.windows(2) {
        let (a, b) = (&pair[0].state, &pair[1].state);
        let (fa, fb) = (net(a), net(b));
        let h = b.t - a.t;
        for k in 0..3 {
            integral[k] += 0.5 * h * (fa[k] + fb[k]);
        }
    }
    let i0 = traj.snapshots[0].state.integrals(p, dx);
    let i1 = traj.final_state().integrals(p, dx);
    [0, 1, 2].map(|k| (i1[k] - i0[k] - integral[k]).abs())
}
