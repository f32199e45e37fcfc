//! The `verify` battery: one PASS/FAIL line per check.

use std::io::Write;
use std::path::Path;

use outflow_core::diagnostics::{
    perturbation, perturbation_residual, poincare_check, theta_envelope_check, theta_inequality_check,
    track_bounds, NodalProfile,
};
use outflow_core::evolution::{
    balance_report, initialize, run, Evolution, FlowState, Grid, InitKind, InitSpec, RunControl, Trajectory,
    MIN_CELLS,
};
use outflow_core::gas::{phi, phi_inequalities, BoundaryData};
use outflow_core::lagrangian::{build_chart, representation_check};
use outflow_core::stationary::{
    backsubstitution_residual, solve_profile, verify_decay, DecayModel, ProfileGrid, SolverOptions,
    StationaryProfile,
};
use serde::Serialize;

use crate::config::{RunConfig, Setup};
use crate::error::{CliError, CliResult};

/// Names and descriptions of the checks, in run order.
pub const CHECKS: [(&str, &str); 10] = [
    ("gas_phi", "Phi(1) = 0, Phi > 0 elsewhere and both Phi inequalities on a 10^4-point log grid over [1e-2, 1e2]"),
    ("stationary_backsubstitution", "profile residual <= 100*delta*dx^2 + 1e-10; ratio in [3.5, 4.5] when dx is halved (solved profiles)"),
    ("stationary_decay", "fitted tail rate within 5% of the slowest stable eigenvalue (20% of exponent 1 when algebraic)"),
    ("equilibrium", "delta = 0, no perturbation: 10^4 steps change no field by more than 1e-12 relative"),
    ("conservation", "per-step balance error <= 1e-12 * |integral| for mass, momentum and energy"),
    ("lagrangian_identity", "representation identity on the constant equilibrium within 1e-8 (and on the configured window within 5%)"),
    ("perturbation_residual", "residual L2 norm falls by >= 1.7 when dx and snapshot spacing are halved"),
    ("theta_inequality", "minimum margin >= -defect, defect shrinks under refinement"),
    ("theta_envelope", "inf theta stays above the envelope with C2 = R^2 M1 / (4 mu c_v)"),
    ("poincare", "ratio <= 1 + 1e-6 over 1000 seeded random perturbations"),
];

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

pub fn list_checks(out: &mut impl Write) -> std::io::Result<()> {
    for (name, desc) in CHECKS {
        writeln!(out, "{name}: {desc}")?;
    }
    Ok(())
}

const REFINEMENT_WINDOW: f64 = 0.5;
const EQUILIBRIUM_STEPS: usize = 10_000;
const POINCARE_SEEDS: u64 = 1000;

fn check_gas() -> CheckOutcome {
    let mut worst = [0.0f64; 2];
    let mut positive = phi(1.0).map(|v| v == 0.0).unwrap_or(false);
    let n = 10_000;
    for k in 0..n {
        let z = 10f64.powf(-2.0 + 4.0 * k as f64 / (n - 1) as f64);
        if z != 1.0 && !(phi(z).unwrap_or(-1.0) > 0.0) {
            positive = false;
        }
        for (w, (lhs, rhs)) in worst
            .iter_mut()
            .zip(phi_inequalities(z).unwrap_or([(f64::NAN, 0.0); 2]))
        {
            *w = w.max(if rhs > 0.0 {
                lhs / rhs
            } else if lhs == 0.0 {
                0.0
            } else {
                f64::INFINITY
            });
        }
    }
    let ok = positive && worst.iter().all(|&w| w <= 1.0);
    CheckOutcome::new(
        "gas_phi",
        ok,
        format!(
            "positivity {positive}, lhs/rhs maxima {:.6} and {:.6}",
            worst[0], worst[1]
        ),
    )
}

fn max_spacing(x: &[f64]) -> f64 {
    x.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

fn check_backsub(setup: &Setup) -> CliResult<CheckOutcome> {
    let prof = &setup.profile;
    let dx = max_spacing(&prof.grid_x);
    let tol = 100.0 * setup.delta * dx * dx + 1e-10;
    let res = backsubstitution_residual(prof, &setup.params).max();
    let mut ok = res <= tol;
    let mut detail = format!("residual {res:.3e} (tolerance {tol:.3e})");
    if !setup.profile_loaded && setup.delta > 0.0 {
        let coarse_grid = ProfileGrid::uniform(setup.grid.length(), setup.grid.nx())?;
        let coarse = solve_profile(&setup.ode, &setup.bdry, &coarse_grid, &SolverOptions::default())?;
        let ratio = backsubstitution_residual(&coarse, &setup.params).max() / res;
        ok &= (3.5..=4.5).contains(&ratio);
        detail.push_str(&format!(", halving ratio {ratio:.3}"));
    }
    Ok(CheckOutcome::new("stationary_backsubstitution", ok, detail))
}

fn check_decay(setup: &Setup) -> CheckOutcome {
    match verify_decay(&setup.profile, Some(&setup.eigen)) {
        Ok(r) => {
            let tol = if r.model == DecayModel::Algebraic {
                0.2
            } else {
                0.05
            };
            CheckOutcome::new(
                "stationary_decay",
                r.mismatch <= tol,
                format!(
                    "{:?} rate {:.6}, mismatch {:.3e} (tolerance {tol})",
                    r.model, r.rate, r.mismatch
                ),
            )
        }
        Err(e) => CheckOutcome::new("stationary_decay", false, e.to_string()),
    }
}

fn check_equilibrium(cfg: &RunConfig, setup: &Setup) -> CliResult<CheckOutcome> {
    let far = setup.far;
    let ev = Evolution::new(
        setup.params,
        far,
        BoundaryData::matching(&far)?,
        setup.grid,
        cfg.time.cfl,
    )?;
    let s0 = FlowState::uniform(&setup.grid, far.rho_plus(), far.u_plus(), far.theta_plus())?;
    let mut s = s0.clone();
    for _ in 0..EQUILIBRIUM_STEPS {
        let dt = ev.cfl_dt(&s);
        s = ev.step(&s, dt)?;
    }
    let change = s.max_relative_change(&s0);
    Ok(CheckOutcome::new(
        "equilibrium",
        change <= 1e-12,
        format!("max relative change {change:.3e} after {EQUILIBRIUM_STEPS} steps"),
    ))
}

fn short_run(
    cfg: &RunConfig,
    setup: &Setup,
    grid: Grid,
    profile: &StationaryProfile,
    t_end: f64,
    every: f64,
) -> CliResult<Trajectory> {
    let s0 = initialize(&grid, profile, &cfg.init.spec())?;
    let ev = Evolution::new(setup.params, setup.far, setup.bdry, grid, cfg.time.cfl)?;
    let tr = run(
        &ev,
        s0,
        RunControl {
            t_end,
            output_every: every,
        },
    )?;
    tr.check()?;
    Ok(tr)
}

fn check_conservation(setup: &Setup, tr: &Trajectory) -> CheckOutcome {
    let rep = balance_report(tr, &setup.params, setup.grid.dx());
    let scale = rep.initial_integrals.map(|v| 1e-12 * v.abs().max(1.0));
    let ok = (0..3).all(|k| rep.max_per_step[k] <= scale[k]);
    CheckOutcome::new(
        "conservation",
        ok,
        format!(
            "per-step errors {:.3e} / {:.3e} / {:.3e} over {} steps",
            rep.max_per_step[0], rep.max_per_step[1], rep.max_per_step[2], rep.steps
        ),
    )
}

fn check_lagrangian(cfg: &RunConfig, setup: &Setup) -> CliResult<CheckOutcome> {
    let far = setup.far;
    let z = 3.0;
    let tau = 0.5f64.min(2.0 / (far.rho_plus() * far.u_plus().abs()));
    let grid = Grid::new(16.0 / far.rho_plus(), 64)?;
    let bdry = BoundaryData::matching(&far)?;
    let ev = Evolution::new(setup.params, far, bdry, grid, cfg.time.cfl)?;
    let s0 = FlowState::uniform(&grid, far.rho_plus(), far.u_plus(), far.theta_plus())?;
    let tr = run(
        &ev,
        s0,
        RunControl {
            t_end: tau,
            output_every: tau / 2000.0,
        },
    )?;
    tr.check()?;
    let chart = build_chart(&tr, &bdry, &grid)?;
    let eq = representation_check(&chart, &setup.params, tau, z)?.max_rel_error;
    let mut ok = eq <= 1e-8;
    let mut detail = format!("equilibrium error {eq:.3e}");
    if let Some(rep) = cfg.checks.representation {
        let mut dense = cfg.clone();
        dense.time.t_end = rep.tau;
        if let Some(h) = rep.output_every {
            dense.time.output_every = h;
        }
        let tr = short_run(
            &dense,
            setup,
            setup.grid,
            &setup.profile,
            rep.tau,
            dense.time.output_every,
        )?;
        let chart = build_chart(&tr, &setup.bdry, &setup.grid)?;
        let err = representation_check(&chart, &setup.params, rep.tau, rep.z)?.max_rel_error;
        ok &= err <= 0.05;
        detail.push_str(&format!(", configured window error {err:.3e}"));
    }
    Ok(CheckOutcome::new("lagrangian_identity", ok, detail))
}

struct Level {
    nodal: NodalProfile,
    traj: Trajectory,
}

/// The configured run on `nx` and `nx/2` cells over a short window, with
/// snapshot spacing proportional to `dx`.
fn refinement_levels(cfg: &RunConfig, setup: &Setup) -> CliResult<[Level; 2]> {
    let nx = setup.grid.nx();
    if nx / 2 < MIN_CELLS {
        return Err(CliError::Validation(format!(
            "verify needs nx >= {}",
            2 * MIN_CELLS
        )));
    }
    let t_end = REFINEMENT_WINDOW;
    let level = |n: usize| -> CliResult<Level> {
        let grid = Grid::new(setup.grid.length(), n)?;
        let profile = if n == nx {
            setup.profile.clone()
        } else {
            solve_profile(
                &setup.ode,
                &setup.bdry,
                &grid.profile_grid(),
                &SolverOptions::default(),
            )?
        };
        let every = t_end / (t_end / (grid.dx() / 3.0)).round().max(4.0);
        let traj = short_run(cfg, setup, grid, &profile, t_end, every)?;
        let nodal = NodalProfile::new(&profile, &grid, &setup.bdry)?;
        Ok(Level { nodal, traj })
    };
    Ok([level(nx / 2)?, level(nx)?])
}

fn max_residual(level: &Level, setup: &Setup) -> CliResult<f64> {
    let mut worst = 0.0f64;
    for k in 1..level.traj.snapshots.len() - 1 {
        worst = worst.max(perturbation_residual(&level.traj, &level.nodal, &setup.params, k)?.max_l2());
    }
    Ok(worst)
}

fn check_residual(levels: &[Level; 2], setup: &Setup) -> CliResult<CheckOutcome> {
    let coarse = max_residual(&levels[0], setup)?;
    let fine = max_residual(&levels[1], setup)?;
    let ratio = coarse / fine;
    let ok = fine <= 1e-10 || ratio >= 1.7;
    Ok(CheckOutcome::new(
        "perturbation_residual",
        ok,
        format!("L2 residual {coarse:.3e} -> {fine:.3e}, ratio {ratio:.3}"),
    ))
}

fn theta_stats(level: &Level, setup: &Setup) -> CliResult<(f64, f64)> {
    let mut min_margin = f64::INFINITY;
    let mut defect = 0.0f64;
    for k in 1..level.traj.snapshots.len() - 1 {
        let m = theta_inequality_check(&level.traj, &level.nodal, &setup.params, k)?;
        min_margin = min_margin.min(m.min_margin);
        defect = defect.max(m.defect);
    }
    Ok((min_margin, defect))
}

fn check_theta(levels: &[Level; 2], setup: &Setup) -> CliResult<[CheckOutcome; 2]> {
    let (_, d_coarse) = theta_stats(&levels[0], setup)?;
    let (m_fine, d_fine) = theta_stats(&levels[1], setup)?;
    let ineq = CheckOutcome::new(
        "theta_inequality",
        m_fine >= -d_fine && (d_fine < d_coarse || d_fine <= 1e-10),
        format!("min margin {m_fine:.3e}, defect {d_coarse:.3e} -> {d_fine:.3e}"),
    );
    let fine = &levels[1];
    let bounds = track_bounds(&fine.traj, setup.bdry.theta_minus(), setup.delta, 1.0)?;
    let env = theta_envelope_check(&fine.traj, &fine.nodal, &setup.params, bounds.last().big_m1)?;
    let envelope = CheckOutcome::new(
        "theta_envelope",
        env.holds,
        format!("C2 {:.6}, min slack {:.3e}", env.c2, env.min_slack),
    );
    Ok([ineq, envelope])
}

fn check_poincare(setup: &Setup) -> CliResult<CheckOutcome> {
    let nodal = NodalProfile::new(&setup.profile, &setup.grid, &setup.bdry)?;
    let mut worst = 0.0f64;
    for seed in 0..POINCARE_SEEDS {
        let spec = InitSpec {
            kind: InitKind::RandomSeeded,
            amplitude: 0.2,
            width: 1.0,
            seed,
        };
        let s = initialize(&setup.grid, &setup.profile, &spec)?;
        worst = worst.max(poincare_check(&perturbation(&s, &nodal)?));
    }
    Ok(CheckOutcome::new(
        "poincare",
        worst <= 1.0 + 1e-6,
        format!("max ratio {worst:.6} over {POINCARE_SEEDS} seeds"),
    ))
}

/// Run every check, printing one line each to `out` as it completes.
pub fn cmd_verify(
    cfg: &RunConfig,
    out_dir: Option<&Path>,
    out: &mut impl Write,
) -> CliResult<Vec<CheckOutcome>> {
    cfg.validate()?;
    let setup = cfg.setup()?;
    let mut results = Vec::new();
    let mut emit = |c: CheckOutcome, results: &mut Vec<CheckOutcome>| -> CliResult<()> {
        writeln!(out, "{}", c.line())?;
        results.push(c);
        Ok(())
    };
    emit(check_gas(), &mut results)?;
    emit(check_backsub(&setup)?, &mut results)?;
    emit(check_decay(&setup), &mut results)?;
    emit(check_equilibrium(cfg, &setup)?, &mut results)?;
    let levels = refinement_levels(cfg, &setup)?;
    emit(check_conservation(&setup, &levels[1].traj), &mut results)?;
    emit(check_lagrangian(cfg, &setup)?, &mut results)?;
    emit(check_residual(&levels, &setup)?, &mut results)?;
    for c in check_theta(&levels, &setup)? {
        emit(c, &mut results)?;
    }
    emit(check_poincare(&setup)?, &mut results)?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let text = serde_json::to_string_pretty(&results)?;
        std::fs::write(dir.join("verify.json"), text + "\n")?;
    }
    Ok(results)
}
