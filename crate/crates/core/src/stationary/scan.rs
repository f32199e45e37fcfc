use rayon::prelude::*;
use serde::Serialize;

use super::profile::{default_domain_length, solve_profile, ProfileGrid, SolverOptions};
use super::reduced::reduce;
use crate::error::{Error, Result};
use crate::gas::{boundary_strength, BoundaryData, FarField, GasParams};

/// Axis-aligned rectangle in the `(u₋, θ₋)` plane.
#[derive(Debug, Clone, Copy)]
pub struct ScanBox {
    pub u_min: f64,
    pub u_max: f64,
    pub theta_min: f64,
    pub theta_max: f64,
}

impl ScanBox {
    /// Square box of half-width `radius` centred on the far-field state.
    pub fn around(far: &FarField, radius: f64) -> Self {
        Self {
            u_min: far.u_plus() - radius,
            u_max: far.u_plus() + radius,
            theta_min: far.theta_plus() - radius,
            theta_max: far.theta_plus() + radius,
        }
    }

    fn contains(&self, u: f64, theta: f64) -> bool {
        (self.u_min..=self.u_max).contains(&u) && (self.theta_min..=self.theta_max).contains(&theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CellOutcome {
    Success,
    NoProfile,
    GridTooCoarse,
    /// `u₋ ≥ 0` or `θ₋ ≤ 0`: not admissible outflow data.
    Inadmissible,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExistenceMap {
    pub u_values: Vec<f64>,
    pub theta_values: Vec<f64>,
    /// `outcomes[i][j]` is the cell at `(u_values[i], theta_values[j])`.
    pub outcomes: Vec<Vec<CellOutcome>>,
}

impl ExistenceMap {
    pub fn success_fraction(&self) -> f64 {
        let total = self.u_values.len() * self.theta_values.len();
        let ok = self
            .outcomes
            .iter()
            .flatten()
            .filter(|c| **c == CellOutcome::Success)
            .count();
        ok as f64 / total as f64
    }

    pub fn outcome_at(&self, i: usize, j: usize) -> CellOutcome {
        self.outcomes[i][j]
    }
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            if k + 1 == n {
                hi
            } else {
                lo + (hi - lo) * k as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Attempt a profile for every `(u₋, θ₋)` on a `resolution × resolution`
/// lattice over `scan_box`. Cells are independent and evaluated in parallel.
pub fn scan_region(
    params: &GasParams,
    far: &FarField,
    scan_box: &ScanBox,
    resolution: usize,
    opts: &SolverOptions,
) -> Result<ExistenceMap> {
    if resolution < 2 {
        return Err(Error::InvalidParameter("scan resolution must be >= 2".into()));
    }
    if !scan_box.contains(far.u_plus(), far.theta_plus()) {
        return Err(Error::InvalidParameter(
            "scan box must contain the far-field state".into(),
        ));
    }
    let ode = reduce(params, far)?;
    let u_values = axis(scan_box.u_min, scan_box.u_max, resolution);
    let theta_values = axis(scan_box.theta_min, scan_box.theta_max, resolution);
    let mut opts = *opts;
    opts.resample_tol = None;

    let outcomes = u_values
        .par_iter()
        .map(|&u_minus| {
            theta_values
                .iter()
                .map(|&theta_minus| {
                    let Ok(bdry) = BoundaryData::new(u_minus, theta_minus) else {
                        return CellOutcome::Inadmissible;
                    };
                    let delta = boundary_strength(far, &bdry);
                    let Ok(length) = default_domain_length(&ode, delta) else {
                        return CellOutcome::Failed;
                    };
                    let Ok(grid) = ProfileGrid::uniform(length, 64) else {
                        return CellOutcome::Failed;
                    };
                    match solve_profile(&ode, &bdry, &grid, &opts) {
                        Ok(_) => CellOutcome::Success,
                        Err(Error::NoProfile { .. }) => CellOutcome::NoProfile,
                        Err(Error::GridTooCoarse { .. }) => CellOutcome::GridTooCoarse,
                        Err(_) => CellOutcome::Failed,
                    }
                })
                .collect()
        })
        .collect();
    Ok(ExistenceMap {
        u_values,
        theta_values,
        outcomes,
    })
}
