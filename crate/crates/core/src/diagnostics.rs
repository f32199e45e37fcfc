//! Quantities tracked along a trajectory: perturbation fields and norms, the
//! relative-entropy energy and its dissipation integrals, running bounds and
//! the smallness product, residuals of the perturbation system, the
//! temperature differential inequality, and a Poincaré-type bound.
//!
//! Every field lives on the node set `{0} ∪ {cell centres}`. At `x = 0` the
//! node carries `(ρ_0, u₋, θ₋)` for the flow and `(ρ̃(x_0), ũ(0), θ̃(0))` for
//! the profile: density is extrapolated from the first cell on both sides,
//! matching the boundary closure of the solver.
//! Derivatives are central differences on these nodes, one-sided at the ends.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{profile_on_grid, FlowState, Grid, Trajectory};
use crate::gas::{phi as big_phi, xi, BoundaryData, GasParams};
use crate::stationary::{finite_difference, StationaryProfile};

/// Stationary profile sampled on the diagnostic nodes, with derivatives.
#[derive(Debug, Clone)]
pub struct NodalProfile {
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub theta: Vec<f64>,
    pub rho_x: Vec<f64>,
    pub u_x: Vec<f64>,
    pub theta_x: Vec<f64>,
    pub u_minus: f64,
    pub theta_minus: f64,
    pub dx: f64,
}

impl NodalProfile {
    pub fn new(profile: &StationaryProfile, grid: &Grid, bdry: &BoundaryData) -> Result<Self> {
        let [rc, uc, tc] = profile_on_grid(profile, grid)?;
        let mut x = vec![0.0];
        x.extend(grid.centers());
        let prepend = |b: f64, c: Vec<f64>| {
            let mut v = Vec::with_capacity(c.len() + 1);
            v.push(b);
            v.extend(c);
            v
        };
        let rho = prepend(rc[0], rc);
        let u = prepend(profile.u[0], uc);
        let theta = prepend(profile.theta[0], tc);
        Ok(Self {
            rho_x: finite_difference(&x, &rho),
            u_x: finite_difference(&x, &u),
            theta_x: finite_difference(&x, &theta),
            x,
            rho,
            u,
            theta,
            u_minus: bdry.u_minus(),
            theta_minus: bdry.theta_minus(),
            dx: grid.dx(),
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Flow fields of `state` on the nodes.
    pub fn nodal_state(&self, state: &FlowState) -> Result<[Vec<f64>; 3]> {
        if state.len() + 1 != self.len() {
            return Err(Error::GridMismatch(format!(
                "state has {} cells, profile sampled on {}",
                state.len(),
                self.len() - 1
            )));
        }
        let with = |b: f64, c: &[f64]| {
            let mut v = Vec::with_capacity(c.len() + 1);
            v.push(b);
            v.extend_from_slice(c);
            v
        };
        Ok([
            with(state.rho[0], &state.rho),
            with(self.u_minus, &state.u),
            with(self.theta_minus, &state.theta),
        ])
    }
}

/// `(φ, ψ, ϑ) = (ρ − ρ̃, u − ũ, θ − θ̃)` on the diagnostic nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationField {
    pub t: f64,
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub vartheta: Vec<f64>,
}

impl PerturbationField {
    pub fn supnorm(&self) -> f64 {
        self.phi
            .iter()
            .chain(&self.psi)
            .chain(&self.vartheta)
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `‖(φ, ψ, ϑ)‖_{L²}` by the trapezoid rule.
    pub fn l2norm(&self) -> f64 {
        let sq: Vec<f64> = (0..self.x.len())
            .map(|i| self.phi[i].powi(2) + self.psi[i].powi(2) + self.vartheta[i].powi(2))
            .collect();
        trapezoid(&self.x, &sq).sqrt()
    }

    /// `‖(φ, ψ, ϑ)‖_{H¹}`.
    pub fn h1norm(&self) -> f64 {
        let d = [&self.phi, &self.psi, &self.vartheta].map(|f| finite_difference(&self.x, f));
        let sq: Vec<f64> = (0..self.x.len())
            .map(|i| d[0][i].powi(2) + d[1][i].powi(2) + d[2][i].powi(2))
            .collect();
        (self.l2norm().powi(2) + trapezoid(&self.x, &sq)).sqrt()
    }
}

pub fn perturbation(state: &FlowState, profile: &NodalProfile) -> Result<PerturbationField> {
    let [rho, u, theta] = profile.nodal_state(state)?;
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p - q).collect::<Vec<_>>();
    Ok(PerturbationField {
        t: state.t,
        x: profile.x.clone(),
        phi: diff(&rho, &profile.rho),
        psi: diff(&u, &profile.u),
        vartheta: diff(&theta, &profile.theta),
    })
}

/// Relative entropy density `E = Rθ̃Φ(ρ̃/ρ) + ψ²/2 + c_vθ̃Φ(θ/θ̃)`.
pub fn relative_entropy(
    params: &GasParams,
    rho: f64,
    rho_tilde: f64,
    psi: f64,
    theta: f64,
    theta_tilde: f64,
) -> Result<f64> {
    Ok(params.r() * theta_tilde * big_phi(rho_tilde / rho)?
        + 0.5 * psi * psi
        + params.cv() * theta_tilde * big_phi(theta / theta_tilde)?)
}

/// Instantaneous energy quantities at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergySample {
    pub t: f64,
    /// `∫ ρE dx`
    pub total_e: f64,
    /// `ρΦ(ρ̃/ρ)` at `x = 0`
    pub boundary_integrand: f64,
    /// `∫ ψ_x²/θ dx`
    pub diss_u_rate: f64,
    /// `∫ ϑ_x²/θ² dx`
    pub diss_theta_rate: f64,
    /// `∫ θφ_x²/ρ² dx`
    pub diss_rho_rate: f64,
    pub h1_norm: f64,
}

pub fn energy(
    pert: &PerturbationField,
    state: &FlowState,
    profile: &NodalProfile,
    params: &GasParams,
) -> Result<EnergySample> {
    let [rho, _, theta] = profile.nodal_state(state)?;
    if pert.x.len() != rho.len() {
        return Err(Error::GridMismatch(
            "perturbation and state differ in size".into(),
        ));
    }
    if let Some(i) = (0..rho.len()).find(|&i| !(rho[i] > 0.0) || !(theta[i] > 0.0)) {
        return Err(Error::NonPhysicalState(format!(
            "node {i}: rho = {}, theta = {}",
            rho[i], theta[i]
        )));
    }
    let x = &pert.x;
    let mut dens = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let e = relative_entropy(
            params,
            rho[i],
            profile.rho[i],
            pert.psi[i],
            theta[i],
            profile.theta[i],
        )?;
        dens.push(rho[i] * e);
    }
    let [phi_x, psi_x, vt_x] = [&pert.phi, &pert.psi, &pert.vartheta].map(|f| finite_difference(x, f));
    let du: Vec<f64> = (0..x.len()).map(|i| psi_x[i].powi(2) / theta[i]).collect();
    let dt: Vec<f64> = (0..x.len()).map(|i| (vt_x[i] / theta[i]).powi(2)).collect();
    let dr: Vec<f64> = (0..x.len())
        .map(|i| theta[i] * (phi_x[i] / rho[i]).powi(2))
        .collect();
    Ok(EnergySample {
        t: state.t,
        total_e: trapezoid(x, &dens),
        boundary_integrand: boundary_integrand(rho[0], profile.rho[0])?,
        diss_u_rate: trapezoid(x, &du),
        diss_theta_rate: trapezoid(x, &dt),
        diss_rho_rate: trapezoid(x, &dr),
        h1_norm: pert.h1norm(),
    })
}

fn boundary_integrand(rho0: f64, rho_tilde0: f64) -> Result<f64> {
    Ok(rho0 * big_phi(rho_tilde0 / rho0)?)
}

/// Energy series with dissipation accumulated over snapshots and the
/// boundary term accumulated over every step of the boundary density history.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub samples: Vec<EnergySample>,
    pub boundary_term: Vec<f64>,
    pub diss_u: Vec<f64>,
    pub diss_theta: Vec<f64>,
    pub diss_rho: Vec<f64>,
}

impl EnergyReport {
    /// Largest value of each tracked quantity over the run:
    /// `[total_E, boundary_term, diss_u, diss_theta, diss_rho, h1]`.
    pub fn ceilings(&self) -> [f64; 6] {
        let max = |v: &mut dyn Iterator<Item = f64>| v.fold(0.0f64, f64::max);
        [
            max(&mut self.samples.iter().map(|s| s.total_e)),
            max(&mut self.boundary_term.iter().copied()),
            max(&mut self.diss_u.iter().copied()),
            max(&mut self.diss_theta.iter().copied()),
            max(&mut self.diss_rho.iter().copied()),
            max(&mut self.samples.iter().map(|s| s.h1_norm)),
        ]
    }
}

pub fn energy_report(traj: &Trajectory, profile: &NodalProfile, params: &GasParams) -> Result<EnergyReport> {
    let mut samples = Vec::with_capacity(traj.snapshots.len());
    for snap in &traj.snapshots {
        let pert = perturbation(&snap.state, profile)?;
        samples.push(energy(&pert, &snap.state, profile, params)?);
    }
    let accumulate = |f: &dyn Fn(&EnergySample) -> f64| {
        let mut acc = vec![0.0];
        for w in samples.windows(2) {
            let last = *acc.last().unwrap();
            acc.push(last + 0.5 * (w[1].t - w[0].t) * (f(&w[0]) + f(&w[1])));
        }
        acc
    };
    let diss_u = accumulate(&|s| s.diss_u_rate);
    let diss_theta = accumulate(&|s| s.diss_theta_rate);
    let diss_rho = accumulate(&|s| s.diss_rho_rate);

    let rho_t0 = profile.rho[0];
    let hist = &traj.boundary_density_history;
    let mut boundary_term = Vec::with_capacity(samples.len());
    let mut acc = 0.0;
    let mut k = 0;
    for (idx, w) in std::iter::once(None).chain(hist.windows(2).map(Some)).enumerate() {
        if let Some(w) = w {
            acc += 0.5
                * (w[1].0 - w[0].0)
                * (boundary_integrand(w[0].1, rho_t0)? + boundary_integrand(w[1].1, rho_t0)?);
        }
        let t = hist[idx].0;
        while k < samples.len() && samples[k].t <= t {
            boundary_term.push(acc);
            k += 1;
        }
    }
    while boundary_term.len() < samples.len() {
        boundary_term.push(acc);
    }
    Ok(EnergyReport {
        samples,
        boundary_term,
        diss_u,
        diss_theta,
        diss_rho,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsEntry {
    pub t: f64,
    pub m1: f64,
    #[serde(rename = "M1")]
    pub big_m1: f64,
    pub m2: f64,
    #[serde(rename = "M2")]
    pub big_m2: f64,
    pub xi_delta: f64,
}

/// Running extrema of `ρ` and `θ` up to each snapshot time, using every
/// step of the run, and the smallness product `Ξ(m₁, M₁, m₂, M₂)·δ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsTracker {
    pub series: Vec<BoundsEntry>,
    pub epsilon0: f64,
    pub xi_delta: f64,
    /// Whether the final product exceeds `ε₀`. Informational only.
    pub exceeds_epsilon0: bool,
}

impl BoundsTracker {
    pub fn last(&self) -> &BoundsEntry {
        self.series.last().expect("tracker has entries")
    }
}

pub const DEFAULT_EPSILON0: f64 = 1.0;

pub fn track_bounds(traj: &Trajectory, bdry_theta: f64, delta: f64, epsilon0: f64) -> Result<BoundsTracker> {
    let first = &traj.snapshots[0].state;
    let (mut m1, mut big_m1, mut m2, mut big_m2) = first.extrema();
    // the boundary node carries θ₋ for all time
    m2 = m2.min(bdry_theta);
    big_m2 = big_m2.max(bdry_theta);
    let mut series = Vec::with_capacity(traj.snapshots.len());
    let mut steps = traj.step_log.iter().peekable();
    for snap in &traj.snapshots {
        while let Some(rec) = steps.next_if(|r| r.t <= snap.state.t) {
            m1 = m1.min(rec.min_rho);
            big_m1 = big_m1.max(rec.max_rho);
            m2 = m2.min(rec.min_theta);
            big_m2 = big_m2.max(rec.max_theta);
        }
        series.push(BoundsEntry {
            t: snap.state.t,
            m1,
            big_m1,
            m2,
            big_m2,
            xi_delta: xi(m1, big_m1, m2, big_m2)? * delta,
        });
    }
    let xi_delta = series.last().map(|e| e.xi_delta).unwrap_or(0.0);
    Ok(BoundsTracker {
        series,
        epsilon0,
        xi_delta,
        exceeds_epsilon0: xi_delta > epsilon0,
    })
}

/// First node at which pointwise PDE residuals are evaluated. Stencils at
/// node 1 would reach the boundary node, whose density is extrapolated
/// rather than prescribed.
pub const FIRST_INTERIOR_NODE: usize = 2;

/// L² and L∞ norms of the three residuals of the perturbation system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualNorms {
    pub t: f64,
    pub l2: [f64; 3],
    pub linf: [f64; 3],
}

impl ResidualNorms {
    pub fn max_l2(&self) -> f64 {
        self.l2.iter().cloned().fold(0.0, f64::max)
    }
}

fn snapshot_triple(traj: &Trajectory, index: usize) -> Result<[&FlowState; 3]> {
    let n = traj.snapshots.len();
    if index == 0 || index + 1 >= n {
        return Err(Error::InsufficientSnapshots {
            needed: 3,
            index,
            available: n,
        });
    }
    Ok([
        &traj.snapshots[index - 1].state,
        &traj.snapshots[index].state,
        &traj.snapshots[index + 1].state,
    ])
}

/// Residuals of
/// `φ_t + uφ_x + ρψ_x + ũ_xφ + ρ̃_xψ`,
/// `ρ(ψ_t + uψ_x) + (P − P̃)_x − μψ_xx − g`,
/// `c_vρ(ϑ_t + uϑ_x) + Pψ_x − κϑ_xx − μψ_x² − h`
/// with `g = −ũ_x(ũφ + ρψ)`, `h = −c_vθ̃_x(ũφ + ρψ) − ũ_x(P − P̃) + 2μũ_xψ_x`,
/// at snapshot `index`, over nodes from [`FIRST_INTERIOR_NODE`] to the last but one. Time derivatives are centred
/// over the neighbouring snapshots.
pub fn perturbation_residual(
    traj: &Trajectory,
    profile: &NodalProfile,
    params: &GasParams,
    index: usize,
) -> Result<ResidualNorms> {
    let [prev, cur, next] = snapshot_triple(traj, index)?;
    let pp = perturbation(prev, profile)?;
    let pc = perturbation(cur, profile)?;
    let pn = perturbation(next, profile)?;
    let [rho, u, theta] = profile.nodal_state(cur)?;
    let x = &profile.x;
    let n = x.len();
    let (r, cv, mu, kappa) = (params.r(), params.cv(), params.mu(), params.kappa());
    let inv_2h = 1.0 / (next.t - prev.t);
    let p: Vec<f64> = (0..n).map(|i| r * rho[i] * theta[i]).collect();
    let p_tilde: Vec<f64> = (0..n).map(|i| r * profile.rho[i] * profile.theta[i]).collect();
    let dp: Vec<f64> = (0..n).map(|i| p[i] - p_tilde[i]).collect();
    let phi_x = finite_difference(x, &pc.phi);
    let psi_x = finite_difference(x, &pc.psi);
    let vt_x = finite_difference(x, &pc.vartheta);
    let dp_x = finite_difference(x, &dp);
    let psi_xx = second_difference(x, &pc.psi);
    let vt_xx = second_difference(x, &pc.vartheta);
    let (ut, tt, rt) = (&profile.u_x, &profile.theta_x, &profile.rho_x);

    let mut l2 = [0.0; 3];
    let mut linf = [0.0f64; 3];
    for i in FIRST_INTERIOR_NODE..n - 1 {
        let phi_t = (pn.phi[i] - pp.phi[i]) * inv_2h;
        let psi_t = (pn.psi[i] - pp.psi[i]) * inv_2h;
        let vt_t = (pn.vartheta[i] - pp.vartheta[i]) * inv_2h;
        let flux = profile.u[i] * pc.phi[i] + rho[i] * pc.psi[i];
        let g = -ut[i] * flux;
        let h = -cv * tt[i] * flux - ut[i] * dp[i] + 2.0 * mu * ut[i] * psi_x[i];
        let res = [
            phi_t + u[i] * phi_x[i] + rho[i] * psi_x[i] + ut[i] * pc.phi[i] + rt[i] * pc.psi[i],
            rho[i] * (psi_t + u[i] * psi_x[i]) + dp_x[i] - mu * psi_xx[i] - g,
            cv * rho[i] * (vt_t + u[i] * vt_x[i]) + p[i] * psi_x[i]
                - kappa * vt_xx[i]
                - mu * psi_x[i] * psi_x[i]
                - h,
        ];
        let w = 0.5 * (x[i + 1] - x[i - 1]);
        for k in 0..3 {
            l2[k] += w * res[k] * res[k];
            linf[k] = linf[k].max(res[k].abs());
        }
    }
    Ok(ResidualNorms {
        t: cur.t,
        l2: l2.map(f64::sqrt),
        linf,
    })
}

/// Pointwise margin of `θ_t + uθ_x − (κ/(c_vρ))θ_xx ≥ −R²ρθ²/(4μc_v)` at a
/// snapshot. The exact margin equals `(μu_x − P/2)²/(μc_vρ) ≥ 0`; the
/// difference between the two evaluations is reported as the defect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaMargin {
    pub t: f64,
    pub min_margin: f64,
    /// Largest `|margin − (μu_x − P/2)²/(μc_vρ)|` over interior nodes.
    pub defect: f64,
}

pub fn theta_inequality_check(
    traj: &Trajectory,
    profile: &NodalProfile,
    params: &GasParams,
    index: usize,
) -> Result<ThetaMargin> {
    let [prev, cur, next] = snapshot_triple(traj, index)?;
    let [_, _, th_p] = profile.nodal_state(prev)?;
    let [_, _, th_n] = profile.nodal_state(next)?;
    let [rho, u, theta] = profile.nodal_state(cur)?;
    let x = &profile.x;
    let (r, cv, mu, kappa) = (params.r(), params.cv(), params.mu(), params.kappa());
    let th_x = finite_difference(x, &theta);
    let th_xx = second_difference(x, &theta);
    let u_x = finite_difference(x, &u);
    let inv_2h = 1.0 / (next.t - prev.t);
    let mut min_margin = f64::INFINITY;
    let mut defect = 0.0f64;
    for i in FIRST_INTERIOR_NODE..x.len() - 1 {
        let th_t = (th_n[i] - th_p[i]) * inv_2h;
        let margin = th_t + u[i] * th_x[i] - kappa / (cv * rho[i]) * th_xx[i]
            + r * r * rho[i] * theta[i] * theta[i] / (4.0 * mu * cv);
        let p = r * rho[i] * theta[i];
        let square = (mu * u_x[i] - 0.5 * p).powi(2) / (mu * cv * rho[i]);
        min_margin = min_margin.min(margin);
        defect = defect.max((margin - square).abs());
    }
    Ok(ThetaMargin {
        t: cur.t,
        min_margin,
        defect,
    })
}

/// Lower envelope `θ_s/(C₂θ_s(t − s) + 1)` seeded at the first snapshot with
/// `C₂ = R²M₁/(4μc_v)` and `M₁` the run's density ceiling; returns the
/// smallest `inf θ(t) − envelope(t)` over all snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeCheck {
    pub c2: f64,
    pub min_slack: f64,
    pub holds: bool,
}

pub fn theta_envelope_check(
    traj: &Trajectory,
    profile: &NodalProfile,
    params: &GasParams,
    big_m1: f64,
) -> Result<EnvelopeCheck> {
    let c2 = params.r().powi(2) * big_m1 / (4.0 * params.mu() * params.cv());
    let inf_theta = |s: &FlowState| s.theta.iter().fold(profile.theta_minus, |m, &v| m.min(v));
    let first = &traj.snapshots[0].state;
    let theta_s = inf_theta(first);
    let mut min_slack = f64::INFINITY;
    for snap in &traj.snapshots {
        let t = snap.state.t - first.t;
        let env = theta_s / (c2 * theta_s * t + 1.0);
        min_slack = min_slack.min(inf_theta(&snap.state) - env);
    }
    Ok(EnvelopeCheck {
        c2,
        min_slack,
        holds: min_slack >= 0.0,
    })
}

/// `max_x |f(x)| / (|f(0)| + √x ‖f_x‖)` for the piecewise-linear interpolant
/// of `f` on `x` (first node at 0); `0/0` counts as 0.
pub fn poincare_ratio(x: &[f64], f: &[f64]) -> f64 {
    let grad_sq: f64 = (1..x.len())
        .map(|i| (f[i] - f[i - 1]).powi(2) / (x[i] - x[i - 1]))
        .sum();
    let grad = grad_sq.sqrt();
    let f0 = f[0].abs();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let num = f[i].abs();
        let den = f0 + (x[i] - x[0]).sqrt() * grad;
        let ratio = if num == 0.0 { 0.0 } else { num / den };
        worst = worst.max(ratio);
    }
    worst
}

pub fn poincare_check(pert: &PerturbationField) -> f64 {
    [&pert.phi, &pert.psi, &pert.vartheta]
        .iter()
        .map(|f| poincare_ratio(&pert.x, f))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecaySeries {
    pub times: Vec<f64>,
    pub supnorm: Vec<f64>,
    pub final_ratio: f64,
    /// First snapshot time at which the sup-norm is at most half its initial value.
    pub time_to_half: Option<f64>,
}

pub fn suptime_decay(traj: &Trajectory, profile: &NodalProfile) -> Result<DecaySeries> {
    let mut times = Vec::with_capacity(traj.snapshots.len());
    let mut supnorm = Vec::with_capacity(traj.snapshots.len());
    for snap in &traj.snapshots {
        times.push(snap.state.t);
        supnorm.push(perturbation(&snap.state, profile)?.supnorm());
    }
    let s0 = supnorm[0];
    let last = *supnorm.last().unwrap();
    let final_ratio = if s0 == 0.0 {
        if last == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        last / s0
    };
    let time_to_half = (s0 > 0.0)
        .then(|| {
            times
                .iter()
                .zip(&supnorm)
                .find(|(_, &s)| s <= 0.5 * s0)
                .map(|(&t, _)| t)
        })
        .flatten();
    Ok(DecaySeries {
        times,
        supnorm,
        final_ratio,
        time_to_half,
    })
}

/// One row of the per-run diagnostics table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub supnorm: f64,
    pub l2norm: f64,
    pub h1norm: f64,
    #[serde(rename = "total_E")]
    pub total_e: f64,
    pub boundary_term: f64,
    pub diss_u: f64,
    pub diss_theta: f64,
    pub diss_rho: f64,
    pub m1: f64,
    #[serde(rename = "M1")]
    pub big_m1: f64,
    pub m2: f64,
    #[serde(rename = "M2")]
    pub big_m2: f64,
    pub xi_delta: f64,
}

pub fn diagnostics_table(
    traj: &Trajectory,
    profile: &NodalProfile,
    params: &GasParams,
    delta: f64,
) -> Result<(Vec<DiagnosticsRow>, EnergyReport, BoundsTracker)> {
    let energy = energy_report(traj, profile, params)?;
    let bounds = track_bounds(traj, profile.theta_minus, delta, DEFAULT_EPSILON0)?;
    let mut rows = Vec::with_capacity(traj.snapshots.len());
    for (k, snap) in traj.snapshots.iter().enumerate() {
        let pert = perturbation(&snap.state, profile)?;
        let b = &bounds.series[k];
        rows.push(DiagnosticsRow {
            t: snap.state.t,
            supnorm: pert.supnorm(),
            l2norm: pert.l2norm(),
            h1norm: energy.samples[k].h1_norm,
            total_e: energy.samples[k].total_e,
            boundary_term: energy.boundary_term[k],
            diss_u: energy.diss_u[k],
            diss_theta: energy.diss_theta[k],
            diss_rho: energy.diss_rho[k],
            m1: b.m1,
            big_m1: b.big_m1,
            m2: b.m2,
            big_m2: b.big_m2,
            xi_delta: b.xi_delta,
        });
    }
    Ok((rows, energy, bounds))
}

fn trapezoid(x: &[f64], f: &[f64]) -> f64 {
    (1..x.len())
        .map(|i| 0.5 * (x[i] - x[i - 1]) * (f[i] + f[i - 1]))
        .sum()
}

/// Three-point second derivative on a non-uniform grid; ends copy their neighbour.
fn second_difference(x: &[f64], f: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        d[i] = 2.0 * (h0 * f[i + 1] - (h0 + h1) * f[i] + h1 * f[i - 1]) / (h0 * h1 * (h0 + h1));
    }
    d[0] = d[1];
    d[n - 1] = d[n - 2];
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_entropy_single_cell() {
        let p = GasParams::new(1.0, 5.0 / 3.0, 1.0, 1.0).unwrap();
        let e = relative_entropy(&p, 2.0, 1.0, 0.0, 1.0, 1.0).unwrap();
        assert!((e - (0.5 - 0.5f64.ln() - 1.0)).abs() < 1e-15);
        assert!((e - 0.193147).abs() < 1e-6);
    }

    #[test]
    fn poincare_conventions() {
        let x = [0.0, 0.5, 1.0, 2.0];
        assert_eq!(poincare_ratio(&x, &[0.0; 4]), 0.0);
        assert!((poincare_ratio(&x, &[3.0; 4]) - 1.0).abs() < 1e-15);
        assert!(poincare_ratio(&x, &[0.0, 1.0, -2.0, 0.5]) <= 1.0 + 1e-12);
    }

    #[test]
    fn second_difference_exact_on_quadratics() {
        let x = [0.0, 0.1, 0.3, 0.6, 1.0];
        let f: Vec<f64> = x.iter().map(|v| 3.0 * v * v - v).collect();
        let d = second_difference(&x, &f);
        for v in &d[1..4] {
            assert!((v - 6.0).abs() < 1e-10);
        }
    }
}
