//! `stationary`, `evolve` and `sweep`.

use std::fs;
use std::path::{Path, PathBuf};

use outflow_core::diagnostics::{diagnostics_table, suptime_decay, track_bounds, BoundsEntry, NodalProfile};
use outflow_core::evolution::{
    balance_report, initialize, run, ConservationReport, Evolution, RunControl, Trajectory,
};
use outflow_core::gas::Regime;
use outflow_core::io::{
    write_chart_boundary_csv, write_chart_snapshot_csv, write_diagnostics_csv, write_profile_csv,
    write_snapshot_csv, write_step_log_csv,
};
use outflow_core::lagrangian::{
    build_chart, cell_average_range, representation_check, CellAverageRange, RepresentationReport,
};
use outflow_core::stationary::{
    backsubstitution_residual, verify_decay, BacksubResidual, DecayReport, EigenData,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, Setup, SweepConfig};
use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// A run counts as converged when it completes with final/initial sup-norm at most this.
pub const CONVERGED_RATIO: f64 = 1e-2;

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainInfo {
    #[serde(rename = "L")]
    pub length: f64,
    pub nx: usize,
    pub dx: f64,
}

impl DomainInfo {
    fn of(setup: &Setup) -> Self {
        Self {
            length: setup.grid.length(),
            nx: setup.grid.nx(),
            dx: setup.grid.dx(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenReport {
    #[serde(flatten)]
    pub eigen: EigenData,
    pub singular: bool,
    pub slowest_stable_rate: Option<f64>,
    pub stable_count: usize,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum DecayOutcome {
    Report(DecayReport),
    Failed { error: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct StationarySummary {
    pub schema_version: u32,
    pub command: &'static str,
    pub regime: Regime,
    pub delta: f64,
    pub domain: DomainInfo,
    pub nodes: usize,
    pub profile_loaded: bool,
    pub backsubstitution: BacksubResidual,
    pub decay: DecayOutcome,
}

fn eigen_report(setup: &Setup) -> EigenReport {
    let e = &setup.eigen;
    EigenReport {
        eigen: e.clone(),
        singular: outflow_core::stationary::linearize_at_infinity(&setup.ode).is_err(),
        slowest_stable_rate: e.slowest_stable_rate(),
        stable_count: e.stable_count(),
    }
}

/// Solve (or load) the stationary profile and write `profile.csv`,
/// `decay_report.json`, `eigen_report.json` and `summary.json`.
pub fn cmd_stationary(cfg: &RunConfig, out: &Path) -> CliResult<StationarySummary> {
    cfg.validate()?;
    let setup = cfg.setup()?;
    create_dir(out)?;
    write_profile_csv(&out.join("profile.csv"), &setup.profile)?;
    let eigen = eigen_report(&setup);
    write_json(&out.join("eigen_report.json"), &eigen)?;
    let decay = match verify_decay(&setup.profile, Some(&setup.eigen)) {
        Ok(r) => DecayOutcome::Report(r),
        Err(e) => DecayOutcome::Failed { error: e.to_string() },
    };
    write_json(&out.join("decay_report.json"), &decay)?;
    let summary = StationarySummary {
        schema_version: SCHEMA_VERSION,
        command: "stationary",
        regime: setup.regime,
        delta: setup.delta,
        domain: DomainInfo::of(&setup),
        nodes: setup.profile.len(),
        profile_loaded: setup.profile_loaded,
        backsubstitution: backsubstitution_residual(&setup.profile, &setup.params),
        decay,
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Completed,
    Breakdown,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailureInfo {
    pub time: f64,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayInfo {
    pub initial_supnorm: f64,
    pub final_supnorm: f64,
    pub final_ratio: f64,
    pub time_to_half: Option<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundsInfo {
    pub m1: f64,
    #[serde(rename = "M1")]
    pub big_m1: f64,
    pub m2: f64,
    #[serde(rename = "M2")]
    pub big_m2: f64,
    pub xi_delta: f64,
    pub epsilon0: f64,
    pub exceeds_epsilon0: bool,
}

/// Largest values of the energy and the accumulated dissipation over the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Ceilings {
    #[serde(rename = "total_E")]
    pub total_e: f64,
    pub boundary_term: f64,
    pub diss_u: f64,
    pub diss_theta: f64,
    pub diss_rho: f64,
    pub h1: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConservationInfo {
    pub errors: [f64; 3],
    pub max_per_step: [f64; 3],
    pub initial_integrals: [f64; 3],
    pub steps: usize,
}

impl From<ConservationReport> for ConservationInfo {
    fn from(r: ConservationReport) -> Self {
        Self {
            errors: r.errors,
            max_per_step: r.max_per_step,
            initial_integrals: r.initial_integrals,
            steps: r.steps,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellAverageInfo {
    pub v_min: f64,
    pub v_max: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub samples: usize,
}

impl From<CellAverageRange> for CellAverageInfo {
    fn from(r: CellAverageRange) -> Self {
        Self {
            v_min: r.v_min,
            v_max: r.v_max,
            theta_min: r.theta_min,
            theta_max: r.theta_max,
            samples: r.samples,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepresentationInfo {
    pub tau: f64,
    pub z: f64,
    pub max_rel_error: f64,
    pub samples: usize,
}

impl From<RepresentationReport> for RepresentationInfo {
    fn from(r: RepresentationReport) -> Self {
        Self {
            tau: r.tau,
            z: r.z,
            max_rel_error: r.max_rel_error,
            samples: r.samples,
        }
    }
}

/// `summary.json` of an evolve run; see `docs/summary_schema.md`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolveSummary {
    pub schema_version: u32,
    pub command: String,
    pub status: RunStatus,
    pub regime: Regime,
    pub delta: f64,
    pub domain: DomainInfo,
    pub steps: usize,
    pub t_final: f64,
    pub failure: Option<FailureInfo>,
    pub decay: DecayInfo,
    pub bounds: BoundsInfo,
    pub energy_ceilings: Ceilings,
    pub conservation: ConservationInfo,
    pub cell_averages: Option<CellAverageInfo>,
    pub representation: Option<RepresentationInfo>,
}

/// Snapshot stride used when sampling cell averages.
const CELL_AVERAGE_T_STRIDE: usize = 1;

/// Run the evolution for a validated setup.
pub fn simulate(cfg: &RunConfig, setup: &Setup) -> CliResult<Trajectory> {
    let initial = initialize(&setup.grid, &setup.profile, &cfg.init.spec())?;
    let ev = Evolution::new(setup.params, setup.far, setup.bdry, setup.grid, cfg.time.cfl)?;
    Ok(run(
        &ev,
        initial,
        RunControl {
            t_end: cfg.time.t_end,
            output_every: cfg.time.output_every,
        },
    )?)
}

fn representation(
    cfg: &RunConfig,
    setup: &Setup,
    traj: &Trajectory,
) -> CliResult<Option<RepresentationInfo>> {
    let Some(rep) = cfg.checks.representation else {
        return Ok(None);
    };
    let dense;
    let traj = match rep.output_every {
        Some(h) => {
            let mut short = cfg.clone();
            short.time.t_end = rep.tau;
            short.time.output_every = h;
            dense = simulate(&short, setup)?;
            dense.check()?;
            &dense
        }
        None => traj,
    };
    let chart = build_chart(traj, &setup.bdry, &setup.grid)?;
    Ok(Some(
        representation_check(&chart, &setup.params, rep.tau, rep.z)?.into(),
    ))
}

/// Run `evolve` and write its artefacts. A breakdown is reported through
/// the summary's `status`, not as an error.
pub fn evolve_to(cfg: &RunConfig, out: &Path) -> CliResult<EvolveSummary> {
    cfg.validate()?;
    let setup = cfg.setup()?;
    let traj = simulate(cfg, &setup)?;
    create_dir(out)?;
    let nodal = NodalProfile::new(&setup.profile, &setup.grid, &setup.bdry)?;

    if cfg.checks.write_snapshots {
        let dir = out.join("snapshots");
        create_dir(&dir)?;
        for snap in &traj.snapshots {
            write_snapshot_csv(&dir, &snap.state, &setup.grid)?;
        }
    }
    write_step_log_csv(&out.join("step_log.csv"), &traj.step_log)?;

    let (rows, energy, _) = diagnostics_table(&traj, &nodal, &setup.params, setup.delta)?;
    if cfg.checks.diagnostics {
        write_diagnostics_csv(&out.join("diagnostics.csv"), &rows)?;
    }
    let bounds = track_bounds(&traj, setup.bdry.theta_minus(), setup.delta, cfg.checks.epsilon0)?;
    let decay = suptime_decay(&traj, &nodal)?;
    let complete = traj.is_complete();

    let mut cell_averages = None;
    let mut representation_info = None;
    if complete && cfg.checks.lagrangian {
        let chart = build_chart(&traj, &setup.bdry, &setup.grid)?;
        let dir = out.join("lagrangian");
        create_dir(&dir)?;
        write_chart_boundary_csv(&dir.join("boundary.csv"), &chart)?;
        for k in 0..chart.len() {
            write_chart_snapshot_csv(&dir.join(format!("chart_t{:.6}.csv", chart.times[k])), &chart, k)?;
        }
        cell_averages = Some(cell_average_range(&chart, CELL_AVERAGE_T_STRIDE)?.into());
    }
    if complete {
        representation_info = representation(cfg, &setup, &traj)?;
    }

    let c = energy.ceilings();
    let last: &BoundsEntry = bounds.last();
    let summary = EvolveSummary {
        schema_version: SCHEMA_VERSION,
        command: "evolve".into(),
        status: if complete {
            RunStatus::Completed
        } else {
            RunStatus::Breakdown
        },
        regime: setup.regime,
        delta: setup.delta,
        domain: DomainInfo::of(&setup),
        steps: traj.step_log.len(),
        t_final: traj.step_log.last().map_or(traj.snapshots[0].state.t, |r| r.t),
        failure: traj.failure.as_ref().map(|f| FailureInfo {
            time: f.time,
            message: f.error.to_string(),
        }),
        decay: DecayInfo {
            initial_supnorm: decay.supnorm[0],
            final_supnorm: *decay.supnorm.last().unwrap(),
            final_ratio: decay.final_ratio,
            time_to_half: decay.time_to_half,
            converged: complete && decay.final_ratio <= CONVERGED_RATIO,
        },
        bounds: BoundsInfo {
            m1: last.m1,
            big_m1: last.big_m1,
            m2: last.m2,
            big_m2: last.big_m2,
            xi_delta: bounds.xi_delta,
            epsilon0: bounds.epsilon0,
            exceeds_epsilon0: bounds.exceeds_epsilon0,
        },
        energy_ceilings: Ceilings {
            total_e: c[0],
            boundary_term: c[1],
            diss_u: c[2],
            diss_theta: c[3],
            diss_rho: c[4],
            h1: c[5],
        },
        conservation: balance_report(&traj, &setup.params, setup.grid.dx()).into(),
        cell_averages,
        representation: representation_info,
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

/// `evolve` with breakdown mapped to an error (exit code 3).
pub fn cmd_evolve(cfg: &RunConfig, out: &Path) -> CliResult<EvolveSummary> {
    let summary = evolve_to(cfg, out)?;
    match &summary.failure {
        Some(f) => Err(CliError::Breakdown(format!(
            "breakdown at t = {}: {} (summary written to {})",
            f.time,
            f.message,
            out.join("summary.json").display()
        ))),
        None => Ok(summary),
    }
}

/// One aggregate row per sweep run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: &'static str,
    pub value: f64,
    pub converged: bool,
    pub final_ratio: f64,
    pub breakdown_time: Option<f64>,
    pub xi_delta: f64,
    pub representation_error: Option<f64>,
    /// Set when the run could not start (e.g. no stationary profile).
    pub error: Option<String>,
}

pub const AGGREGATE_HEADER: &str =
    "axis,value,converged,final_ratio,breakdown_time,xi_delta,representation_error,error";

/// Aggregate rows from per-run outcomes, sorted by axis value (ties keep input order).
pub fn aggregate(
    axis: &'static str,
    values: &[f64],
    outcomes: &[Result<EvolveSummary, String>],
) -> Vec<SweepRow> {
    let mut rows: Vec<SweepRow> = values
        .iter()
        .zip(outcomes)
        .map(|(&value, outcome)| match outcome {
            Ok(s) => SweepRow {
                axis,
                value,
                converged: s.decay.converged,
                final_ratio: s.decay.final_ratio,
                breakdown_time: s.failure.as_ref().map(|f| f.time),
                xi_delta: s.bounds.xi_delta,
                representation_error: s.representation.as_ref().map(|r| r.max_rel_error),
                error: None,
            },
            Err(e) => SweepRow {
                axis,
                value,
                converged: false,
                final_ratio: f64::NAN,
                breakdown_time: None,
                xi_delta: f64::NAN,
                representation_error: None,
                error: Some(e.clone()),
            },
        })
        .collect();
    rows.sort_by(|a, b| a.value.total_cmp(&b.value));
    rows
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn format_aggregate(rows: &[SweepRow]) -> String {
    let f = |v: f64| format!("{v:.16e}");
    let opt = |v: Option<f64>| v.map(f).unwrap_or_default();
    let mut out = String::from(AGGREGATE_HEADER);
    out.push('\n');
    for r in rows {
        let line = [
            r.axis.to_string(),
            f(r.value),
            r.converged.to_string(),
            f(r.final_ratio),
            opt(r.breakdown_time),
            f(r.xi_delta),
            opt(r.representation_error),
            csv_field(r.error.as_deref().unwrap_or("")),
        ];
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Directory of run `k` inside a sweep output.
pub fn run_dir(out: &Path, k: usize) -> PathBuf {
    out.join(format!("run_{k:03}"))
}

/// Run every instantiated config (in parallel), then write `aggregate.csv`.
/// With `reuse`, a run whose directory already holds a `summary.json` next to
/// an identical `config.json` is read back instead of re-run.
pub fn cmd_sweep(sweep: &SweepConfig, out: &Path, reuse: bool) -> CliResult<Vec<SweepRow>> {
    let runs = sweep.instantiate()?;
    create_dir(out)?;
    write_json(&out.join("sweep_config.json"), sweep)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(sweep.parallelism.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    let outcomes: Vec<CliResult<Result<EvolveSummary, String>>> = pool.install(|| {
        runs.par_iter()
            .enumerate()
            .map(|(k, cfg)| {
                let dir = run_dir(out, k);
                if reuse {
                    if let Some(s) = cached(&dir, cfg) {
                        return Ok(Ok(s));
                    }
                }
                create_dir(&dir)?;
                write_json(&dir.join("config.json"), cfg)?;
                match evolve_to(cfg, &dir) {
                    Ok(s) => Ok(Ok(s)),
                    Err(CliError::Io(e)) => Err(CliError::Io(e)),
                    Err(e) => Ok(Err(e.to_string())),
                }
            })
            .collect()
    });
    let outcomes = outcomes.into_iter().collect::<CliResult<Vec<_>>>()?;
    let rows = aggregate(sweep.axis.name(), &sweep.values, &outcomes);
    let path = out.join("aggregate.csv");
    fs::write(&path, format_aggregate(&rows))
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(rows)
}

fn cached(dir: &Path, cfg: &RunConfig) -> Option<EvolveSummary> {
    let stored: RunConfig = serde_json::from_str(&fs::read_to_string(dir.join("config.json")).ok()?).ok()?;
    if &stored != cfg {
        return None;
    }
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).ok()?).ok()
}
