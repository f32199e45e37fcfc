use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grid::Grid;
use super::state::FlowState;
use crate::error::{Error, Result};
use crate::stationary::StationaryProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitKind {
    StationaryExact,
    Bump,
    SinePacket,
    RandomSeeded,
}

/// Perturbation added on top of the stationary profile at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitSpec {
    pub kind: InitKind,
    pub amplitude: f64,
    pub width: f64,
    pub seed: u64,
}

impl InitSpec {
    pub fn exact() -> Self {
        Self {
            kind: InitKind::StationaryExact,
            amplitude: 0.0,
            width: 1.0,
            seed: 0,
        }
    }

    pub fn bump(amplitude: f64, width: f64) -> Self {
        Self {
            kind: InitKind::Bump,
            amplitude,
            width,
            seed: 0,
        }
    }
}

/// `(1 − r²)⁴` on `|r| < 1`, zero outside; three times continuously differentiable.
pub fn bump_shape(r: f64) -> f64 {
    if r.abs() >= 1.0 {
        0.0
    } else {
        let s = 1.0 - r * r;
        let s2 = s * s;
        s2 * s2
    }
}

/// Centre of the `Bump` perturbation; its support is `[width, 3·width]`.
pub fn bump_center(width: f64) -> f64 {
    2.0 * width
}

/// Stationary profile values `(ρ̃, ũ, θ̃)` at the cell centres of `grid`.
/// Nodes coinciding with a centre are used verbatim, anything else is
/// interpolated linearly.
pub fn profile_on_grid(profile: &StationaryProfile, grid: &Grid) -> Result<[Vec<f64>; 3]> {
    let len = profile.length();
    if (len - grid.length()).abs() > 1e-9 * len.max(1.0) {
        return Err(Error::GridMismatch(format!(
            "profile covers [0, {len}], grid covers [0, {}]",
            grid.length()
        )));
    }
    let xs = &profile.grid_x;
    let tol = 1e-9 * grid.dx();
    let mut out = [
        Vec::with_capacity(grid.nx()),
        Vec::with_capacity(grid.nx()),
        Vec::with_capacity(grid.nx()),
    ];
    for j in 0..grid.nx() {
        let x = grid.center(j);
        let k = xs.partition_point(|&v| v < x - tol);
        let (r, u, t) = if k < xs.len() && (xs[k] - x).abs() <= tol {
            (profile.rho[k], profile.u[k], profile.theta[k])
        } else {
            profile.at(x)
        };
        out[0].push(r);
        out[1].push(u);
        out[2].push(t);
    }
    Ok(out)
}

/// Smooth window on `[0, L/2]` used by the packet and noise perturbations.
fn window(x: f64, length: f64) -> f64 {
    let half = 0.25 * length;
    bump_shape((x - half) / half)
}

pub fn initialize(grid: &Grid, profile: &StationaryProfile, spec: &InitSpec) -> Result<FlowState> {
    let [rho, u, theta] = profile_on_grid(profile, grid)?;
    if !spec.amplitude.is_finite() {
        return Err(Error::InvalidParameter(
            "perturbation amplitude must be finite".into(),
        ));
    }
    let xs = grid.centers();
    let perturb: [Vec<f64>; 3] = match spec.kind {
        InitKind::StationaryExact => return FlowState::new(0.0, rho, u, theta),
        InitKind::Bump => {
            if !(spec.width > 0.0) || 3.0 * spec.width >= grid.length() {
                return Err(Error::InvalidParameter(format!(
                    "bump width must lie in (0, L/3), got {}",
                    spec.width
                )));
            }
            let c = bump_center(spec.width);
            let p: Vec<f64> = xs
                .iter()
                .map(|x| spec.amplitude * bump_shape((x - c) / spec.width))
                .collect();
            [p.clone(), p.clone(), p]
        }
        InitKind::SinePacket => {
            if !(spec.width > 0.0) {
                return Err(Error::InvalidParameter(
                    "packet wavelength must be positive".into(),
                ));
            }
            let p: Vec<f64> = xs
                .iter()
                .map(|&x| {
                    spec.amplitude
                        * (2.0 * std::f64::consts::PI * x / spec.width).sin()
                        * window(x, grid.length())
                })
                .collect();
            [p.clone(), p.clone(), p]
        }
        InitKind::RandomSeeded => seeded_noise(grid, spec),
    };
    let add = |base: Vec<f64>, p: &[f64]| base.iter().zip(p).map(|(b, d)| b + d).collect::<Vec<_>>();
    let rho = add(rho, &perturb[0]);
    let u = add(u, &perturb[1]);
    let theta = add(theta, &perturb[2]);
    FlowState::new(0.0, rho, u, theta)
}

/// Band-limited noise: a random Fourier series on the window `[0, L/2]`
/// keeping only wavelengths `≥ max(width, 8·dx)`, scaled so each field has
/// sup-norm equal to the amplitude.
fn seeded_noise(grid: &Grid, spec: &InitSpec) -> [Vec<f64>; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let span = 0.5 * grid.length();
    let min_wavelength = spec.width.max(8.0 * grid.dx());
    let modes = ((span / min_wavelength).floor() as usize).max(1);
    let xs = grid.centers();
    let mut out: [Vec<f64>; 3] = Default::default();
    for field in out.iter_mut() {
        let coeffs: Vec<(f64, f64)> = (0..modes)
            .map(|_| {
                (
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                )
            })
            .collect();
        let raw: Vec<f64> = xs
            .iter()
            .map(|&x| {
                let s: f64 = coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, (a, ph))| a * (std::f64::consts::TAU * (k + 1) as f64 * x / span + ph).sin())
                    .sum();
                s * window(x, grid.length())
            })
            .collect();
        let peak = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = if peak > 0.0 { spec.amplitude / peak } else { 0.0 };
        *field = raw.iter().map(|v| v * scale).collect();
    }
    out
}
