use serde::{Deserialize, Serialize};

use super::decay::{fit_decay, DecayFit, DecayModel};
use super::integrator::{DormandPrince, Halt, Tolerances};
use super::reduced::{eigen_data_lenient, ReducedOde};
use crate::error::{Error, Result};
use crate::gas::{boundary_strength, BoundaryData, FarField, GasParams, Regime, RegimeKind, TRANSONIC_TOL};

/// Node coordinates for a stationary profile, strictly increasing from 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileGrid {
    nodes: Vec<f64>,
}

impl ProfileGrid {
    pub fn uniform(length: f64, intervals: usize) -> Result<Self> {
        if !(length > 0.0) || intervals < 2 {
            return Err(Error::InvalidParameter(format!(
                "profile grid needs length > 0 and >= 2 intervals (length={length}, intervals={intervals})"
            )));
        }
        let h = length / intervals as f64;
        let mut nodes: Vec<f64> = (0..=intervals).map(|k| k as f64 * h).collect();
        nodes[intervals] = length;
        Ok(Self { nodes })
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 || nodes[0] != 0.0 {
            return Err(Error::InvalidParameter(
                "profile grid needs >= 3 nodes starting at 0".into(),
            ));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "profile grid nodes must be strictly increasing".into(),
            ));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn length(&self) -> f64 {
        *self.nodes.last().unwrap()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Radius of the far-field ball the trajectory must settle in. `None`
    /// picks 1e-10 for exponential regimes and `δ/10` for transonic.
    pub farfield_tol: Option<f64>,
    /// `None` means `10·δ + 1`.
    pub blowup_radius: Option<f64>,
    /// Limit on the piecewise-linear reconstruction error between nodes,
    /// relative to the profile amplitude. `None` disables the check.
    pub resample_tol: Option<f64>,
    pub max_steps: usize,
    pub transonic_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            farfield_tol: None,
            blowup_radius: None,
            resample_tol: Some(0.25),
            max_steps: 5_000_000,
            transonic_tol: TRANSONIC_TOL,
        }
    }
}

/// Stationary boundary layer sampled on nodes. Deviations from the far
/// field are stored separately from the absolute values so the exponentially
/// small tail keeps full relative precision.
#[derive(Debug, Clone)]
pub struct StationaryProfile {
    pub grid_x: Vec<f64>,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub theta: Vec<f64>,
    pub du: Vec<f64>,
    pub dtheta: Vec<f64>,
    pub drho: Vec<f64>,
    /// `(ũ′, θ̃′)` at nodes, from the reduced system when available.
    pub du_dx: Vec<f64>,
    pub dtheta_dx: Vec<f64>,
    pub decay_fit: Option<DecayFit>,
    pub regime: Regime,
    pub far: FarField,
    pub delta: f64,
    /// Below this magnitude the stored deviations are rounding noise.
    pub deviation_floor: f64,
}

impl StationaryProfile {
    pub fn len(&self) -> usize {
        self.grid_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid_x.is_empty()
    }

    pub fn length(&self) -> f64 {
        *self.grid_x.last().unwrap()
    }

    pub fn is_constant(&self) -> bool {
        self.delta == 0.0
    }

    /// Piecewise-linear interpolation of `(ρ̃, ũ, θ̃)`; constant extension
    /// beyond the last node.
    pub fn at(&self, x: f64) -> (f64, f64, f64) {
        let xs = &self.grid_x;
        if x <= xs[0] {
            return (self.rho[0], self.u[0], self.theta[0]);
        }
        let n = xs.len();
        if x >= xs[n - 1] {
            return (self.rho[n - 1], self.u[n - 1], self.theta[n - 1]);
        }
        let k = xs.partition_point(|&v| v <= x) - 1;
        let w = (x - xs[k]) / (xs[k + 1] - xs[k]);
        let lerp = |f: &[f64]| f[k] + w * (f[k + 1] - f[k]);
        (lerp(&self.rho), lerp(&self.u), lerp(&self.theta))
    }

    /// Build a profile from absolute nodal values (e.g. read from a file).
    /// Deviations are recovered by subtraction and derivatives by finite
    /// differences.
    pub fn from_values(
        params: &GasParams,
        far: &FarField,
        grid_x: Vec<f64>,
        rho: Vec<f64>,
        u: Vec<f64>,
        theta: Vec<f64>,
    ) -> Result<Self> {
        let n = grid_x.len();
        if n < 3 || rho.len() != n || u.len() != n || theta.len() != n {
            return Err(Error::InvalidParameter(
                "profile columns must have equal length >= 3".into(),
            ));
        }
        ProfileGrid::from_nodes(grid_x.clone())?;
        if rho.iter().chain(theta.iter()).any(|v| !(*v > 0.0)) {
            return Err(Error::NonPhysicalState(
                "profile density and temperature must be positive".into(),
            ));
        }
        let du: Vec<f64> = u.iter().map(|v| v - far.u_plus()).collect();
        let dtheta: Vec<f64> = theta.iter().map(|v| v - far.theta_plus()).collect();
        let drho: Vec<f64> = rho.iter().map(|v| v - far.rho_plus()).collect();
        let du_dx = finite_difference(&grid_x, &u);
        let dtheta_dx = finite_difference(&grid_x, &theta);
        let delta = (u[0] - far.u_plus()).hypot(theta[0] - far.theta_plus());
        let scale = far.u_plus().abs().max(far.theta_plus()).max(1.0);
        Ok(Self {
            grid_x,
            rho,
            u,
            theta,
            du,
            dtheta,
            drho,
            du_dx,
            dtheta_dx,
            decay_fit: None,
            regime: params.classify(far, TRANSONIC_TOL)?,
            far: *far,
            delta,
            deviation_floor: 64.0 * f64::EPSILON * scale,
        })
    }
}

/// Second-order finite differences on a possibly non-uniform grid, written
/// in terms of node increments so constants differentiate to exactly zero.
pub(crate) fn finite_difference(x: &[f64], f: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        let h0 = x[k] - x[k - 1];
        let h1 = x[k + 1] - x[k];
        d[k] = h1 / (h0 * (h0 + h1)) * (f[k] - f[k - 1]) + h0 / (h1 * (h0 + h1)) * (f[k + 1] - f[k]);
    }
    let h0 = x[1] - x[0];
    let h1 = x[2] - x[1];
    d[0] = (2.0 * h0 + h1) / (h0 * (h0 + h1)) * (f[1] - f[0]) - h0 / (h1 * (h0 + h1)) * (f[2] - f[1]);
    let h0 = x[n - 2] - x[n - 3];
    let h1 = x[n - 1] - x[n - 2];
    d[n - 1] = -h1 / (h0 * (h0 + h1)) * (f[n - 2] - f[n - 3])
        + (2.0 * h1 + h0) / (h1 * (h0 + h1)) * (f[n - 1] - f[n - 2]);
    d
}

/// Default half-line truncation length. Exponential regimes use `40/ĉ` with
/// `ĉ` the slowest stable rate; transonic uses `200/δ` capped at `10⁵`.
pub fn default_domain_length(ode: &ReducedOde, delta: f64) -> Result<f64> {
    let regime = ode.params.classify(&ode.far, TRANSONIC_TOL)?;
    if regime.kind == RegimeKind::Transonic {
        return Ok(if delta > 0.0 {
            (200.0 / delta).min(1e5)
        } else {
            1e5
        });
    }
    let eigen = eigen_data_lenient(ode);
    let rate = eigen
        .slowest_stable_rate()
        .ok_or_else(|| Error::DomainError("far-field Jacobian has no stable direction".into()))?;
    Ok(40.0 / rate)
}

fn constant_profile(ode: &ReducedOde, grid: &ProfileGrid, regime: Regime) -> StationaryProfile {
    let n = grid.nodes().len();
    let far = ode.far;
    StationaryProfile {
        grid_x: grid.nodes().to_vec(),
        rho: vec![far.rho_plus(); n],
        u: vec![far.u_plus(); n],
        theta: vec![far.theta_plus(); n],
        du: vec![0.0; n],
        dtheta: vec![0.0; n],
        drho: vec![0.0; n],
        du_dx: vec![0.0; n],
        dtheta_dx: vec![0.0; n],
        decay_fit: Some(DecayFit {
            model: DecayModel::Constant,
            rate: 0.0,
            amplitude: 0.0,
        }),
        regime,
        far,
        delta: 0.0,
        deviation_floor: 0.0,
    }
}

/// Integrate the reduced system forward from the boundary data and sample it
/// on `grid`. The trajectory must settle into the far-field ball and stay
/// there through the last node.
pub fn solve_profile(
    ode: &ReducedOde,
    bdry: &BoundaryData,
    grid: &ProfileGrid,
    opts: &SolverOptions,
) -> Result<StationaryProfile> {
    let regime = ode.params.classify(&ode.far, opts.transonic_tol)?;
    let delta = boundary_strength(&ode.far, bdry);
    if delta == 0.0 {
        return Ok(constant_profile(ode, grid, regime));
    }
    let far = ode.far;
    let farfield_tol = opts.farfield_tol.unwrap_or(match regime.kind {
        RegimeKind::Transonic => 0.1 * delta,
        _ => 1e-10,
    });
    let blowup = opts.blowup_radius.unwrap_or(10.0 * delta + 1.0);
    let u_sign = far.u_plus().signum();

    let nodes = grid.nodes();
    let n = nodes.len();
    let mut dev = [
        bdry.u_minus() - far.u_plus(),
        bdry.theta_minus() - far.theta_plus(),
    ];
    let mut du = Vec::with_capacity(n);
    let mut dth = Vec::with_capacity(n);
    du.push(dev[0]);
    dth.push(dev[1]);

    let tol = Tolerances {
        rtol: opts.rtol,
        atol: opts.atol,
    };
    let h0 = (nodes[1] - nodes[0]).min(1e-3);
    let mut stepper = DormandPrince::new(|y: &[f64; 2]| ode.rhs(y), tol, h0, opts.max_steps);
    // x at which the trajectory last entered the far-field ball
    let mut settled_since: Option<f64> = None;
    let mut guard = |x: f64, y: &[f64; 2]| -> std::result::Result<(), String> {
        let u = far.u_plus() + y[0];
        let theta = far.theta_plus() + y[1];
        if !(u * u_sign > 0.0) || !u.is_finite() {
            return Err(format!("velocity changed sign (u = {u})"));
        }
        if !(theta > 0.0) {
            return Err(format!("temperature lost positivity (theta = {theta})"));
        }
        let dist = y[0].hypot(y[1]);
        if dist > blowup {
            return Err(format!("left blow-up radius {blowup} (distance {dist})"));
        }
        if dist <= farfield_tol {
            settled_since.get_or_insert(x);
        } else {
            settled_since = None;
        }
        Ok(())
    };
    for k in 1..n {
        stepper
            .advance(nodes[k - 1], nodes[k], &mut dev, &mut guard)
            .map_err(|halt| match halt {
                Halt::Guard { x, reason } => Error::NoProfile { reason, x },
                Halt::StepUnderflow { x } => Error::NoProfile {
                    reason: "step size underflow".into(),
                    x,
                },
                Halt::TooManySteps { x } => Error::NoProfile {
                    reason: "step budget exhausted".into(),
                    x,
                },
            })?;
        du.push(dev[0]);
        dth.push(dev[1]);
    }
    if settled_since.is_none() {
        let dist = dev[0].hypot(dev[1]);
        return Err(Error::NoProfile {
            reason: format!(
                "trajectory not within far-field tolerance {farfield_tol:e} at the last node (distance {dist:e})"
            ),
            x: grid.length(),
        });
    }

    let mut u = Vec::with_capacity(n);
    let mut theta = Vec::with_capacity(n);
    let mut rho = Vec::with_capacity(n);
    let mut drho = Vec::with_capacity(n);
    let mut du_dx = Vec::with_capacity(n);
    let mut dtheta_dx = Vec::with_capacity(n);
    for k in 0..n {
        let uk = far.u_plus() + du[k];
        u.push(uk);
        theta.push(far.theta_plus() + dth[k]);
        rho.push(ode.density(uk));
        drho.push(-far.rho_plus() * du[k] / uk);
        let f = ode.rhs(&[du[k], dth[k]]);
        du_dx.push(f[0]);
        dtheta_dx.push(f[1]);
    }
    if rho.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::NoProfile {
            reason: "density not positive".into(),
            x: 0.0,
        });
    }

    if let Some(rtol) = opts.resample_tol {
        let amplitude = du.iter().zip(&dth).map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max);
        let err = linear_reconstruction_error(nodes, &[&du, &dth], &[&du_dx, &dtheta_dx]);
        if err > rtol * amplitude {
            return Err(Error::GridTooCoarse {
                error: err / amplitude,
                tol: rtol,
            });
        }
    }

    let mut profile = StationaryProfile {
        grid_x: nodes.to_vec(),
        rho,
        u,
        theta,
        du,
        dtheta: dth,
        drho,
        du_dx,
        dtheta_dx,
        decay_fit: None,
        regime,
        far,
        delta,
        deviation_floor: f64::MIN_POSITIVE * 1e10,
    };
    profile.decay_fit = fit_decay(&profile).ok();
    Ok(profile)
}

/// Largest gap, at interval midpoints, between linear interpolation and the
/// cubic Hermite interpolant built from nodal values and slopes.
fn linear_reconstruction_error(x: &[f64], values: &[&[f64]], slopes: &[&[f64]]) -> f64 {
    let mut worst: f64 = 0.0;
    for (f, df) in values.iter().zip(slopes) {
        for k in 0..x.len() - 1 {
            let h = x[k + 1] - x[k];
            let linear = 0.5 * (f[k] + f[k + 1]);
            let hermite = linear + h * (df[k] - df[k + 1]) / 8.0;
            worst = worst.max((hermite - linear).abs());
        }
    }
    worst
}

/// Central-difference residuals of the second-order stationary system at
/// interior nodes (max norms).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BacksubResidual {
    pub mass: f64,
    pub momentum: f64,
    pub energy: f64,
}

impl BacksubResidual {
    pub fn max(&self) -> f64 {
        self.mass.max(self.momentum).max(self.energy)
    }
}

/// Substitute the sampled profile back into
/// `(ρ̃ũ)′ = 0`, `(ρ̃ũ² + P̃)′ = μũ″`, `(ρ̃ũẼ + ũP̃)′ = κθ̃″ + μ(ũũ′)′`
/// using three-point central differences.
pub fn backsubstitution_residual(profile: &StationaryProfile, params: &GasParams) -> BacksubResidual {
    let x = &profile.grid_x;
    let n = x.len();
    let (r, cv, mu, kappa) = (params.r(), params.cv(), params.mu(), params.kappa());
    let mass: Vec<f64> = (0..n).map(|k| profile.rho[k] * profile.u[k]).collect();
    let mom: Vec<f64> = (0..n)
        .map(|k| profile.rho[k] * profile.u[k] * profile.u[k] + r * profile.rho[k] * profile.theta[k])
        .collect();
    let energy: Vec<f64> = (0..n)
        .map(|k| {
            let (rho, u, th) = (profile.rho[k], profile.u[k], profile.theta[k]);
            rho * u * (cv * th + 0.5 * u * u) + u * r * rho * th
        })
        .collect();
    let half_u2: Vec<f64> = profile.u.iter().map(|u| 0.5 * u * u).collect();
    let mut res = BacksubResidual {
        mass: 0.0,
        momentum: 0.0,
        energy: 0.0,
    };
    for k in 1..n - 1 {
        let h0 = x[k] - x[k - 1];
        let h1 = x[k + 1] - x[k];
        let d1 = |f: &[f64]| {
            (-h1 / (h0 * (h0 + h1))) * f[k - 1]
                + ((h1 - h0) / (h0 * h1)) * f[k]
                + (h0 / (h1 * (h0 + h1))) * f[k + 1]
        };
        let d2 =
            |f: &[f64]| 2.0 * (f[k - 1] / (h0 * (h0 + h1)) - f[k] / (h0 * h1) + f[k + 1] / (h1 * (h0 + h1)));
        res.mass = res.mass.max(d1(&mass).abs());
        res.momentum = res.momentum.max((d1(&mom) - mu * d2(&profile.u)).abs());
        res.energy = res
            .energy
            .max((d1(&energy) - kappa * d2(&profile.theta) - mu * d2(&half_u2)).abs());
    }
    res
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stationary::reduced::{linearize_at_infinity, reduce};

    fn headline_ode() -> ReducedOde {
        reduce(
            &GasParams::monatomic_unit(),
            &FarField::new(1.0, -2.0, 0.6).unwrap(),
        )
        .unwrap()
    }

    fn headline_bdry(delta: f64) -> BoundaryData {
        BoundaryData::offset(&FarField::new(1.0, -2.0, 0.6).unwrap(), delta, (1.0, 1.0)).unwrap()
    }

    #[test]
    fn zero_strength_is_exact_constant() {
        let ode = headline_ode();
        let grid = ProfileGrid::uniform(10.0, 50).unwrap();
        let bdry = BoundaryData::matching(&ode.far).unwrap();
        let p = solve_profile(&ode, &bdry, &grid, &SolverOptions::default()).unwrap();
        assert!(p.rho.iter().all(|&v| v == 1.0));
        assert!(p.u.iter().all(|&v| v == -2.0));
        assert!(p.theta.iter().all(|&v| v == 0.6));
        assert_eq!(p.decay_fit.unwrap().model, DecayModel::Constant);
    }

    #[test]
    fn headline_profile_invariants() {
        let ode = headline_ode();
        let len = default_domain_length(&ode, 0.01).unwrap();
        let grid = ProfileGrid::uniform(len, 1000).unwrap();
        let bdry = headline_bdry(0.01);
        let p = solve_profile(&ode, &bdry, &grid, &SolverOptions::default()).unwrap();
        assert_eq!(p.u[0], bdry.u_minus());
        assert_eq!(p.theta[0], bdry.theta_minus());
        let last = p.len() - 1;
        assert!(p.du[last].abs() < 1e-12 && p.dtheta[last].abs() < 1e-12);
        assert!((p.rho[last] - 1.0).abs() < 1e-12);
        for k in 0..p.len() {
            assert!(p.rho[k] > 0.0 && p.theta[k] > 0.0);
            assert!((p.rho[k] * p.u[k] - ode.mass_flux).abs() <= 1e-9 * ode.mass_flux.abs());
        }
    }

    #[test]
    fn back_substitution_is_second_order() {
        let ode = headline_ode();
        let len = default_domain_length(&ode, 0.01).unwrap();
        let bdry = headline_bdry(0.01);
        let opts = SolverOptions::default();
        let coarse = solve_profile(&ode, &bdry, &ProfileGrid::uniform(len, 512).unwrap(), &opts).unwrap();
        let fine = solve_profile(&ode, &bdry, &ProfileGrid::uniform(len, 1024).unwrap(), &opts).unwrap();
        let rc = backsubstitution_residual(&coarse, &ode.params);
        let rf = backsubstitution_residual(&fine, &ode.params);
        let ratio = rc.momentum.max(rc.energy) / rf.momentum.max(rf.energy);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}, {rc:?} {rf:?}");
        assert!(rf.mass < 1e-12);
    }

    #[test]
    fn large_strength_has_no_profile() {
        let ode = headline_ode();
        let len = default_domain_length(&ode, 10.0).unwrap();
        let bdry = BoundaryData::offset(&ode.far, 10.0, (0.0, 1.0)).unwrap();
        let r = solve_profile(
            &ode,
            &bdry,
            &ProfileGrid::uniform(len, 200).unwrap(),
            &SolverOptions::default(),
        );
        assert!(matches!(r, Err(Error::NoProfile { .. })), "{r:?}");
    }

    #[test]
    fn coarse_grid_is_flagged() {
        let ode = headline_ode();
        let len = default_domain_length(&ode, 0.01).unwrap();
        let r = solve_profile(
            &ode,
            &headline_bdry(0.01),
            &ProfileGrid::uniform(len, 8).unwrap(),
            &SolverOptions::default(),
        );
        assert!(matches!(r, Err(Error::GridTooCoarse { .. })), "{r:?}");
    }

    #[test]
    fn default_length_uses_slowest_rate() {
        let ode = headline_ode();
        let rate = linearize_at_infinity(&ode)
            .unwrap()
            .slowest_stable_rate()
            .unwrap();
        assert!((default_domain_length(&ode, 0.01).unwrap() - 40.0 / rate).abs() < 1e-12);
        let transonic = reduce(&ode.params, &FarField::new(1.0, -1.0, 0.6).unwrap()).unwrap();
        assert_eq!(default_domain_length(&transonic, 0.01).unwrap(), 2e4);
        assert_eq!(default_domain_length(&transonic, 1e-4).unwrap(), 1e5);
    }

    #[test]
    fn interpolation_hits_nodes() {
        let ode = headline_ode();
        let p = solve_profile(
            &ode,
            &headline_bdry(0.01),
            &ProfileGrid::uniform(30.0, 300).unwrap(),
            &SolverOptions::default(),
        )
        .unwrap();
        let (r, u, t) = p.at(p.grid_x[17]);
        assert_eq!((r, u, t), (p.rho[17], p.u[17], p.theta[17]));
        let (_, u_far, _) = p.at(1e3);
        assert_eq!(u_far, p.u[p.len() - 1]);
    }
}
