//! CSV import/export. Floats are written with 17 significant digits so
//! files round-trip bit-exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::diagnostics::DiagnosticsRow;
use crate::error::{Error, Result};
use crate::evolution::{FlowState, Grid, StepRecord};
use crate::lagrangian::LagrangianChart;
use crate::stationary::StationaryProfile;

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write a header line and rows of floats.
pub fn write_table<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.as_ref().iter().map(|&v| fmt(v)).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Read a float table, checking the header.
pub fn read_table(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let found: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if found != header {
        return Err(Error::Io(format!(
            "{}: expected header {:?}, found {:?}",
            path.display(),
            header,
            found
        )));
    }
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Io(format!("{}: row {}: {e}", path.display(), line + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != header.len() {
            return Err(Error::Io(format!(
                "{}: row {} has {} fields",
                path.display(),
                line + 1,
                row.len()
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub const PROFILE_HEADER: [&str; 4] = ["x", "rho", "u", "theta"];

pub fn write_profile_csv(path: &Path, profile: &StationaryProfile) -> Result<()> {
    write_table(
        path,
        &PROFILE_HEADER,
        (0..profile.len()).map(|i| [profile.grid_x[i], profile.rho[i], profile.u[i], profile.theta[i]]),
    )
}

/// Columns `(x, ρ, u, θ)` of a profile file.
pub fn read_profile_csv(path: &Path) -> Result<[Vec<f64>; 4]> {
    let rows = read_table(path, &PROFILE_HEADER)?;
    let mut cols: [Vec<f64>; 4] = Default::default();
    for row in rows {
        for (c, v) in cols.iter_mut().zip(row) {
            c.push(v);
        }
    }
    Ok(cols)
}

pub fn snapshot_file_name(t: f64) -> String {
    format!("snap_t{t:.6}.csv")
}

pub fn write_snapshot_csv(dir: &Path, state: &FlowState, grid: &Grid) -> Result<PathBuf> {
    let path = dir.join(snapshot_file_name(state.t));
    write_table(
        &path,
        &PROFILE_HEADER,
        (0..state.len()).map(|j| [grid.center(j), state.rho[j], state.u[j], state.theta[j]]),
    )?;
    Ok(path)
}

pub fn write_step_log_csv(path: &Path, log: &[StepRecord]) -> Result<()> {
    write_table(
        path,
        &["t", "dt", "min_rho", "max_rho", "min_theta", "max_theta"],
        log.iter()
            .map(|r| [r.t, r.dt, r.min_rho, r.max_rho, r.min_theta, r.max_theta]),
    )
}

pub const DIAGNOSTICS_HEADER: [&str; 14] = [
    "t",
    "supnorm",
    "l2norm",
    "h1norm",
    "total_E",
    "boundary_term",
    "diss_u",
    "diss_theta",
    "diss_rho",
    "m1",
    "M1",
    "m2",
    "M2",
    "xi_delta",
];

pub fn write_diagnostics_csv(path: &Path, rows: &[DiagnosticsRow]) -> Result<()> {
    write_table(
        path,
        &DIAGNOSTICS_HEADER,
        rows.iter().map(|r| {
            [
                r.t,
                r.supnorm,
                r.l2norm,
                r.h1norm,
                r.total_e,
                r.boundary_term,
                r.diss_u,
                r.diss_theta,
                r.diss_rho,
                r.m1,
                r.big_m1,
                r.m2,
                r.big_m2,
                r.xi_delta,
            ]
        }),
    )
}

/// `t,Y` on every step time.
pub fn write_chart_boundary_csv(path: &Path, chart: &LagrangianChart) -> Result<()> {
    write_table(
        path,
        &["t", "Y"],
        chart.boundary_path.iter().map(|&(t, y)| [t, y]),
    )
}

/// `x,y,v` of snapshot `k`.
pub fn write_chart_snapshot_csv(path: &Path, chart: &LagrangianChart, k: usize) -> Result<()> {
    write_table(
        path,
        &["x", "y", "v"],
        (0..chart.x.len()).map(|i| [chart.x[i], chart.y_map[k][i], chart.v_field[k][i]]),
    )
}
