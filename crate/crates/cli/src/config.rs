//! JSON run and sweep configurations, and their validation into a ready-to-run setup.

use std::path::{Path, PathBuf};

use outflow_core::evolution::{Grid, InitKind, InitSpec, MIN_CELLS};
use outflow_core::gas::{boundary_strength, BoundaryData, FarField, GasParams, Regime, TRANSONIC_TOL};
use outflow_core::io::read_profile_csv;
use outflow_core::stationary::{
    default_domain_length, eigen_data_lenient, reduce, solve_profile, EigenData, ReducedOde, SolverOptions,
    StationaryProfile,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasSection {
    #[serde(rename = "R")]
    pub r: f64,
    pub gamma: f64,
    pub mu: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FarFieldSection {
    pub rho_plus: f64,
    pub u_plus: f64,
    pub theta_plus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySection {
    pub u_minus: f64,
    pub theta_minus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoKeyword {
    Auto,
}

/// Domain length: a positive number or `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LengthSpec {
    Value(f64),
    Keyword(AutoKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    #[serde(rename = "L")]
    pub length: LengthSpec,
    pub nx: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t_end: f64,
    pub cfl: f64,
    pub output_every: f64,
}

fn default_width() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSection {
    pub kind: InitKind,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default = "default_width")]
    pub width: f64,
    #[serde(default)]
    pub seed: u64,
}

impl InitSection {
    pub fn spec(&self) -> InitSpec {
        InitSpec {
            kind: self.kind,
            amplitude: self.amplitude,
            width: self.width,
            seed: self.seed,
        }
    }
}

/// Window of the representation check. With `output_every` set, the check
/// runs on a separate trajectory to `tau` with that snapshot cadence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepresentationSection {
    pub tau: f64,
    pub z: f64,
    #[serde(default)]
    pub output_every: Option<f64>,
}

fn yes() -> bool {
    true
}

fn default_epsilon0() -> f64 {
    outflow_core::diagnostics::DEFAULT_EPSILON0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksSection {
    /// Write the per-snapshot diagnostics table.
    #[serde(default = "yes")]
    pub diagnostics: bool,
    /// Build the Lagrangian chart, record cell-average bounds and write chart CSVs.
    #[serde(default)]
    pub lagrangian: bool,
    #[serde(default)]
    pub representation: Option<RepresentationSection>,
    #[serde(default = "default_epsilon0")]
    pub epsilon0: f64,
    #[serde(default = "yes")]
    pub write_snapshots: bool,
}

impl Default for ChecksSection {
    fn default() -> Self {
        Self {
            diagnostics: true,
            lagrangian: false,
            representation: None,
            epsilon0: default_epsilon0(),
            write_snapshots: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub gas: GasSection,
    pub far_field: FarFieldSection,
    pub boundary: BoundarySection,
    pub domain: DomainSection,
    pub time: TimeSection,
    pub init: InitSection,
    #[serde(default)]
    pub checks: ChecksSection,
    /// Used when `--out` is not given.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Stationary profile CSV (`x,rho,u,theta`) to use instead of solving.
    #[serde(default)]
    pub profile_file: Option<PathBuf>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn finite(name: &str, v: f64) -> CliResult<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{name} must be finite, got {v}")))
    }
}

/// Validated physical setup with its stationary profile.
#[derive(Debug, Clone)]
pub struct Setup {
    pub params: GasParams,
    pub far: FarField,
    pub bdry: BoundaryData,
    pub delta: f64,
    pub regime: Regime,
    pub ode: ReducedOde,
    pub eigen: EigenData,
    pub grid: Grid,
    pub profile: StationaryProfile,
    pub profile_loaded: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        read_json(path)
    }

    pub fn params(&self) -> CliResult<GasParams> {
        let g = &self.gas;
        Ok(GasParams::new(g.r, g.gamma, g.mu, g.kappa)?)
    }

    pub fn far_field(&self) -> CliResult<FarField> {
        let f = &self.far_field;
        Ok(FarField::new(f.rho_plus, f.u_plus, f.theta_plus)?)
    }

    pub fn boundary_data(&self) -> CliResult<BoundaryData> {
        Ok(BoundaryData::new(
            self.boundary.u_minus,
            self.boundary.theta_minus,
        )?)
    }

    /// Every check that needs no stationary solve.
    pub fn validate(&self) -> CliResult<()> {
        self.params()?;
        self.far_field()?;
        self.boundary_data()?;
        let t = &self.time;
        finite("time.t_end", t.t_end)?;
        if t.t_end < 0.0 {
            return Err(CliError::Validation(format!(
                "time.t_end must be >= 0, got {}",
                t.t_end
            )));
        }
        if !(t.output_every > 0.0) || !t.output_every.is_finite() {
            return Err(CliError::Validation(format!(
                "time.output_every must be positive, got {}",
                t.output_every
            )));
        }
        if !(t.cfl > 0.0 && t.cfl <= 1.0) {
            return Err(CliError::Validation(format!(
                "time.cfl must lie in (0, 1], got {}",
                t.cfl
            )));
        }
        if self.domain.nx < MIN_CELLS {
            return Err(CliError::Validation(format!(
                "domain.nx must be at least {MIN_CELLS}, got {}",
                self.domain.nx
            )));
        }
        if let LengthSpec::Value(l) = self.domain.length {
            if !(l > 0.0) || !l.is_finite() {
                return Err(CliError::Validation(format!(
                    "domain.L must be positive, got {l}"
                )));
            }
        }
        let i = &self.init;
        finite("init.amplitude", i.amplitude)?;
        if !(i.width > 0.0) || !i.width.is_finite() {
            return Err(CliError::Validation(format!(
                "init.width must be positive, got {}",
                i.width
            )));
        }
        let c = &self.checks;
        if !(c.epsilon0 > 0.0) {
            return Err(CliError::Validation(format!(
                "checks.epsilon0 must be positive, got {}",
                c.epsilon0
            )));
        }
        if let Some(r) = c.representation {
            finite("checks.representation.z", r.z)?;
            if !(r.tau >= 0.0) || !r.tau.is_finite() {
                return Err(CliError::Validation(format!(
                    "checks.representation.tau must be >= 0, got {}",
                    r.tau
                )));
            }
            if let Some(h) = r.output_every {
                if !(h > 0.0) || !h.is_finite() {
                    return Err(CliError::Validation(format!(
                        "checks.representation.output_every must be positive, got {h}"
                    )));
                }
            }
            if r.output_every.is_none() && r.tau > t.t_end {
                return Err(CliError::Validation(format!(
                    "checks.representation.tau = {} exceeds time.t_end = {}",
                    r.tau, t.t_end
                )));
            }
        }
        Ok(())
    }

    /// Validate, resolve the domain length and obtain the stationary profile
    /// (solved, or loaded from `profile_file`).
    pub fn setup(&self) -> CliResult<Setup> {
        self.validate()?;
        let params = self.params()?;
        let far = self.far_field()?;
        let bdry = self.boundary_data()?;
        let ode = reduce(&params, &far)?;
        let regime = params.classify(&far, TRANSONIC_TOL)?;
        let delta = boundary_strength(&far, &bdry);
        let eigen = eigen_data_lenient(&ode);
        let (grid, profile, loaded) = match &self.profile_file {
            Some(path) => {
                let [x, rho, u, theta] = read_profile_csv(path)?;
                let profile = StationaryProfile::from_values(&params, &far, x, rho, u, theta)?;
                let len = profile.length();
                if let LengthSpec::Value(l) = self.domain.length {
                    if (l - len).abs() > 1e-9 * len.max(1.0) {
                        return Err(CliError::Validation(format!(
                            "domain.L = {l} but the profile file covers [0, {len}]"
                        )));
                    }
                }
                let (u0, t0) = (profile.u[0], profile.theta[0]);
                if (u0 - bdry.u_minus()).abs() > 1e-9 || (t0 - bdry.theta_minus()).abs() > 1e-9 {
                    return Err(CliError::Validation(format!(
                        "profile file starts at (u, theta) = ({u0}, {t0}), boundary data is ({}, {})",
                        bdry.u_minus(),
                        bdry.theta_minus()
                    )));
                }
                (Grid::new(len, self.domain.nx)?, profile, true)
            }
            None => {
                let len = match self.domain.length {
                    LengthSpec::Value(l) => l,
                    LengthSpec::Keyword(AutoKeyword::Auto) => default_domain_length(&ode, delta)?,
                };
                let grid = Grid::new(len, self.domain.nx)?;
                let profile = solve_profile(&ode, &bdry, &grid.profile_grid(), &SolverOptions::default())?;
                (grid, profile, false)
            }
        };
        Ok(Setup {
            params,
            far,
            bdry,
            delta,
            regime,
            ode,
            eigen,
            grid,
            profile,
            profile_loaded: loaded,
        })
    }

    /// Output directory: `--out` if given, else `out_dir`.
    pub fn output_dir(&self, cli_out: Option<&Path>) -> CliResult<PathBuf> {
        cli_out
            .map(Path::to_path_buf)
            .or_else(|| self.out_dir.clone())
            .ok_or_else(|| CliError::Validation("no output directory: pass --out or set out_dir".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Boundary strength `δ`, along the base config's offset direction.
    DeltaScale,
    /// Far-field Mach number; `u₊ = −M·c₊` with the boundary offset vector kept.
    Mach,
    Amplitude,
    Nx,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::DeltaScale => "delta_scale",
            SweepAxis::Mach => "mach",
            SweepAxis::Amplitude => "amplitude",
            SweepAxis::Nx => "nx",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: RunConfig,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    /// Worker threads; `None` uses every core.
    #[serde(default)]
    pub parallelism: Option<usize>,
}

impl SweepConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        read_json(path)
    }

    /// Check the sweep and return the instantiated run configs, in `values` order.
    pub fn instantiate(&self) -> CliResult<Vec<RunConfig>> {
        if self.values.is_empty() {
            return Err(CliError::Validation("sweep.values must be non-empty".into()));
        }
        if self.parallelism == Some(0) {
            return Err(CliError::Validation(
                "sweep.parallelism must be at least 1".into(),
            ));
        }
        if self.base.profile_file.is_some() {
            return Err(CliError::Validation(
                "sweep.base must not set profile_file".into(),
            ));
        }
        self.base.validate()?;
        let runs = self
            .values
            .iter()
            .map(|&v| self.apply(v))
            .collect::<CliResult<Vec<_>>>()?;
        for r in &runs {
            r.validate()?;
        }
        Ok(runs)
    }

    fn apply(&self, value: f64) -> CliResult<RunConfig> {
        finite("sweep value", value)?;
        let mut cfg = self.base.clone();
        let b = &self.base;
        let offset = (
            b.boundary.u_minus - b.far_field.u_plus,
            b.boundary.theta_minus - b.far_field.theta_plus,
        );
        match self.axis {
            SweepAxis::DeltaScale => {
                if value < 0.0 {
                    return Err(CliError::Validation(format!(
                        "delta_scale must be >= 0, got {value}"
                    )));
                }
                let far = b.far_field()?;
                let dir = if offset.0 == 0.0 && offset.1 == 0.0 {
                    (1.0, 1.0)
                } else {
                    offset
                };
                let bd = BoundaryData::offset(&far, value, dir)?;
                cfg.boundary = BoundarySection {
                    u_minus: bd.u_minus(),
                    theta_minus: bd.theta_minus(),
                };
            }
            SweepAxis::Mach => {
                if !(value > 0.0) {
                    return Err(CliError::Validation(format!(
                        "mach must be positive, got {value}"
                    )));
                }
                let c = (b.gas.gamma * b.gas.r * b.far_field.theta_plus).sqrt();
                cfg.far_field.u_plus = -value * c;
                cfg.boundary.u_minus = cfg.far_field.u_plus + offset.0;
            }
            SweepAxis::Amplitude => cfg.init.amplitude = value,
            SweepAxis::Nx => {
                if value.fract() != 0.0 || value < MIN_CELLS as f64 {
                    return Err(CliError::Validation(format!(
                        "nx values must be integers >= {MIN_CELLS}, got {value}"
                    )));
                }
                cfg.domain.nx = value as usize;
            }
        }
        Ok(cfg)
    }
}
