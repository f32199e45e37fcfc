//! Conservative finite-volume discretization of the full system with HLL
//! convective fluxes, central viscous/heat fluxes, and two-stage SSP
//! Runge–Kutta time stepping.
//!
//! Boundary closure: at `x = 0` the face carries `u = u₋`, `θ = θ₋` and the
//! density of the first cell; at `x = L` the ghost state is the far field.

use super::grid::Grid;
use super::state::FlowState;
use crate::error::{Error, Result};
use crate::gas::{BoundaryData, FarField, GasParams};

/// Time-dependent source `S(x, t)` added to the conserved equations.
pub type SourceFn = dyn Fn(f64, f64) -> [f64; 3] + Send + Sync;

/// Stable time step: `cfl · min_j [dx/(|u|+c), dx²ρ·min(1/(2μ), c_v/(2κ))]`.
pub fn cfl_dt(params: &GasParams, grid: &Grid, state: &FlowState, cfl: f64) -> f64 {
    let dx = grid.dx();
    let diff = (1.0 / (2.0 * params.mu())).min(params.cv() / (2.0 * params.kappa()));
    let rg = params.r() * params.gamma();
    let mut bound = f64::INFINITY;
    for j in 0..state.len() {
        let c = (rg * state.theta[j]).sqrt();
        let adv = dx / (state.u[j].abs() + c);
        let dif = dx * dx * state.rho[j] * diff;
        bound = bound.min(adv.min(dif));
    }
    cfl * bound
}

#[derive(Debug, Clone, Copy)]
struct Prim {
    rho: f64,
    u: f64,
    theta: f64,
    p: f64,
    c: f64,
    /// total energy density ρE
    energy: f64,
}

impl Prim {
    fn new(params: &GasParams, rho: f64, u: f64, theta: f64) -> Self {
        let p = params.r() * rho * theta;
        Self {
            rho,
            u,
            theta,
            p,
            c: (params.gamma() * p / rho).sqrt(),
            energy: rho * (params.cv() * theta + 0.5 * u * u),
        }
    }

    fn flux(&self) -> [f64; 3] {
        let m = self.rho * self.u;
        [m, m * self.u + self.p, self.u * (self.energy + self.p)]
    }

    fn conserved(&self) -> [f64; 3] {
        [self.rho, self.rho * self.u, self.energy]
    }
}

fn hll(l: &Prim, r: &Prim) -> [f64; 3] {
    let sl = (l.u - l.c).min(r.u - r.c);
    let sr = (l.u + l.c).max(r.u + r.c);
    if sl >= 0.0 {
        return l.flux();
    }
    if sr <= 0.0 {
        return r.flux();
    }
    let (fl, fr) = (l.flux(), r.flux());
    let (ul, ur) = (l.conserved(), r.conserved());
    let inv = 1.0 / (sr - sl);
    [0, 1, 2].map(|k| (sr * fl[k] - sl * fr[k] + sl * sr * (ur[k] - ul[k])) * inv)
}

/// Conserved-variable work arrays.
#[derive(Debug, Clone)]
struct Cons {
    mass: Vec<f64>,
    momentum: Vec<f64>,
    energy: Vec<f64>,
}

/// Result of one step: the new state and the time-integrated net flux
/// entering through the two boundaries, `∫ (F(0) − F(L)) dt` per conserved
/// quantity, as the scheme itself applied it.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: FlowState,
    pub boundary_inflow: [f64; 3],
}

/// Solver set-up shared by every step of a run.
pub struct Evolution {
    pub params: GasParams,
    pub far: FarField,
    pub bdry: BoundaryData,
    pub grid: Grid,
    pub cfl: f64,
    pub source: Option<Box<SourceFn>>,
}

impl std::fmt::Debug for Evolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Evolution")
            .field("params", &self.params)
            .field("far", &self.far)
            .field("bdry", &self.bdry)
            .field("grid", &self.grid)
            .field("cfl", &self.cfl)
            .field("source", &self.source.is_some())
            .finish()
    }
}

impl Evolution {
    pub fn new(params: GasParams, far: FarField, bdry: BoundaryData, grid: Grid, cfl: f64) -> Result<Self> {
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cfl must lie in (0, 1], got {cfl}"
            )));
        }
        Ok(Self {
            params,
            far,
            bdry,
            grid,
            cfl,
            source: None,
        })
    }

    pub fn with_source(mut self, source: Box<SourceFn>) -> Self {
        self.source = Some(source);
        self
    }

    pub fn cfl_dt(&self, state: &FlowState) -> f64 {
        cfl_dt(&self.params, &self.grid, state, self.cfl)
    }

    pub fn step(&self, state: &FlowState, dt: f64) -> Result<FlowState> {
        self.step_with_fluxes(state, dt).map(|o| o.state)
    }

    pub fn step_with_fluxes(&self, state: &FlowState, dt: f64) -> Result<StepOutcome> {
        state.check_grid(&self.grid)?;
        state.validate()?;
        let bound = self.cfl_dt(state);
        if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
            return Err(Error::CflViolation { dt, bound });
        }
        let n = self.grid.nx();
        let c0 = self.to_cons(state);
        let mut rate = Cons {
            mass: vec![0.0; n],
            momentum: vec![0.0; n],
            energy: vec![0.0; n],
        };

        let b0 = self.rhs(&c0, state.t, &mut rate)?;
        let mut c1 = c0.clone();
        for j in 0..n {
            c1.mass[j] += dt * rate.mass[j];
            c1.momentum[j] += dt * rate.momentum[j];
            c1.energy[j] += dt * rate.energy[j];
        }
        let b1 = self.rhs(&c1, state.t + dt, &mut rate)?;
        let mut c2 = c1;
        for j in 0..n {
            c2.mass[j] = 0.5 * c0.mass[j] + 0.5 * (c2.mass[j] + dt * rate.mass[j]);
            c2.momentum[j] = 0.5 * c0.momentum[j] + 0.5 * (c2.momentum[j] + dt * rate.momentum[j]);
            c2.energy[j] = 0.5 * c0.energy[j] + 0.5 * (c2.energy[j] + dt * rate.energy[j]);
        }
        let new_state = self.to_prim(&c2, state.t + dt)?;
        let boundary_inflow = [0, 1, 2].map(|k| 0.5 * dt * (b0[k] + b1[k]));
        Ok(StepOutcome {
            state: new_state,
            boundary_inflow,
        })
    }

    fn to_cons(&self, s: &FlowState) -> Cons {
        let [mass, momentum, energy] = s.conserved(&self.params);
        Cons {
            mass,
            momentum,
            energy,
        }
    }

    fn to_prim(&self, c: &Cons, t: f64) -> Result<FlowState> {
        let n = c.mass.len();
        let cv = self.params.cv();
        let mut u = Vec::with_capacity(n);
        let mut theta = Vec::with_capacity(n);
        for j in 0..n {
            let rho = c.mass[j];
            if !(rho > 0.0) {
                return Err(Error::NonPhysicalState(format!(
                    "density {rho} in cell {j} at t = {t}"
                )));
            }
            let uj = c.momentum[j] / rho;
            let th = (c.energy[j] / rho - 0.5 * uj * uj) / cv;
            if !(th > 0.0) {
                return Err(Error::NonPhysicalState(format!(
                    "temperature {th} in cell {j} at t = {t}"
                )));
            }
            u.push(uj);
            theta.push(th);
        }
        Ok(FlowState {
            t,
            rho: c.mass.clone(),
            u,
            theta,
        })
    }

    /// Semi-discrete right-hand side `dU/dt`; returns the net boundary
    /// inflow rate `F(0) − F(L)`.
    fn rhs(&self, c: &Cons, t: f64, out: &mut Cons) -> Result<[f64; 3]> {
        let n = self.grid.nx();
        let dx = self.grid.dx();
        let p = &self.params;
        let (mu, kappa, cv) = (p.mu(), p.kappa(), p.cv());
        let mut prim = Vec::with_capacity(n);
        for j in 0..n {
            let rho = c.mass[j];
            let u = c.momentum[j] / rho;
            let theta = (c.energy[j] / rho - 0.5 * u * u) / cv;
            if !(rho > 0.0) || !(theta > 0.0) {
                return Err(Error::NonPhysicalState(format!(
                    "stage state rho = {rho}, theta = {theta} in cell {j} at t = {t}"
                )));
            }
            prim.push(Prim::new(p, rho, u, theta));
        }

        // face 0: prescribed (u₋, θ₋) with the first cell's density
        let left = Prim::new(p, prim[0].rho, self.bdry.u_minus(), self.bdry.theta_minus());
        let half = 0.5 * dx;
        let tau0 = mu * (prim[0].u - left.u) / half;
        let q0 = kappa * (prim[0].theta - left.theta) / half;
        let fc = left.flux();
        let mut f_prev = [fc[0], fc[1] - tau0, fc[2] - q0 - left.u * tau0];
        let f_left = f_prev;

        for j in 0..n {
            let f_next = if j + 1 < n {
                let (a, b) = (&prim[j], &prim[j + 1]);
                let fc = hll(a, b);
                let tau = mu * (b.u - a.u) / dx;
                let q = kappa * (b.theta - a.theta) / dx;
                let um = 0.5 * (a.u + b.u);
                [fc[0], fc[1] - tau, fc[2] - q - um * tau]
            } else {
                let far = Prim::new(p, self.far.rho_plus(), self.far.u_plus(), self.far.theta_plus());
                let a = &prim[j];
                let fc = hll(a, &far);
                let tau = mu * (far.u - a.u) / half;
                let q = kappa * (far.theta - a.theta) / half;
                [fc[0], fc[1] - tau, fc[2] - q - far.u * tau]
            };
            out.mass[j] = (f_prev[0] - f_next[0]) / dx;
            out.momentum[j] = (f_prev[1] - f_next[1]) / dx;
            out.energy[j] = (f_prev[2] - f_next[2]) / dx;
            f_prev = f_next;
        }
        if let Some(src) = &self.source {
            for j in 0..n {
                let s = src(self.grid.center(j), t);
                out.mass[j] += s[0];
                out.momentum[j] += s[1];
                out.energy[j] += s[2];
            }
        }
        Ok([0, 1, 2].map(|k| f_left[k] - f_prev[k]))
    }
}
