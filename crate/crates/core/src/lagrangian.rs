//! Mass-coordinate view of a trajectory: the moving boundary `Y(t)`, the
//! per-snapshot map `x ↦ y`, the cutoff `φ_z`, the Lagrangian cells `Ω_i(t)`,
//! and a numerical check of the local representation formula for `v = 1/ρ`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{Grid, Trajectory};
use crate::gas::{BoundaryData, GasParams};
use crate::stationary::finite_difference;

/// Trajectory fields re-expressed on the mass coordinate. Node 0 of every
/// snapshot is the boundary `x = 0` (carrying `u₋`, `θ₋` and the first
/// cell's density); the remaining nodes are the cell centres.
#[derive(Debug, Clone)]
pub struct LagrangianChart {
    pub u_minus: f64,
    /// `(t, Y(t))` on every step time.
    pub boundary_path: Vec<(f64, f64)>,
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub y_map: Vec<Vec<f64>>,
    pub v_field: Vec<Vec<f64>>,
    pub u_field: Vec<Vec<f64>>,
    pub theta_field: Vec<Vec<f64>>,
}

impl LagrangianChart {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `Y` at snapshot `k`.
    pub fn boundary(&self, k: usize) -> f64 {
        self.y_map[k][0]
    }

    /// Largest charted `y` at snapshot `k`.
    pub fn right_end(&self, k: usize) -> f64 {
        *self.y_map[k].last().expect("non-empty chart")
    }

    /// Piecewise-linear value of a node field of snapshot `k` at `y`.
    pub fn sample(&self, k: usize, field: &[f64], y: f64) -> f64 {
        interp(&self.y_map[k], field, y)
    }
}

pub fn build_chart(traj: &Trajectory, bdry: &BoundaryData, grid: &Grid) -> Result<LagrangianChart> {
    let hist = &traj.boundary_density_history;
    let (Some(first), Some(last)) = (hist.first(), hist.last()) else {
        return Err(Error::MissingHistory("boundary density history is empty".into()));
    };
    let t0 = traj.snapshots[0].state.t;
    let t_end = traj.final_state().t;
    if first.0 != t0 || last.0 != t_end {
        return Err(Error::MissingHistory(format!(
            "history spans [{}, {}], trajectory spans [{t0}, {t_end}]",
            first.0, last.0
        )));
    }
    if hist.len() != traj.step_log.len() + 1 {
        return Err(Error::MissingHistory(format!(
            "{} history samples for {} steps",
            hist.len(),
            traj.step_log.len()
        )));
    }
    let u_minus = bdry.u_minus();
    let mut path = Vec::with_capacity(hist.len());
    let mut y_b = 0.0;
    path.push((first.0, 0.0));
    for w in hist.windows(2) {
        let h = w[1].0 - w[0].0;
        if !(h > 0.0) {
            return Err(Error::MissingHistory(format!(
                "history times not increasing at t = {}",
                w[0].0
            )));
        }
        y_b += -u_minus * 0.5 * h * (w[0].1 + w[1].1);
        path.push((w[1].0, y_b));
    }

    let mut x = vec![0.0];
    x.extend(grid.centers());
    let mut chart = LagrangianChart {
        u_minus,
        boundary_path: path,
        times: Vec::with_capacity(traj.snapshots.len()),
        x,
        y_map: Vec::new(),
        v_field: Vec::new(),
        u_field: Vec::new(),
        theta_field: Vec::new(),
    };
    for snap in &traj.snapshots {
        let s = &snap.state;
        s.check_grid(grid)?;
        let idx = chart
            .boundary_path
            .binary_search_by(|p| p.0.total_cmp(&s.t))
            .map_err(|_| Error::MissingHistory(format!("no history sample at snapshot time {}", s.t)))?;
        let mut rho = vec![s.rho[0]];
        rho.extend_from_slice(&s.rho);
        let mut u = vec![u_minus];
        u.extend_from_slice(&s.u);
        let mut theta = vec![bdry.theta_minus()];
        theta.extend_from_slice(&s.theta);
        let mut y = Vec::with_capacity(rho.len());
        let mut acc = chart.boundary_path[idx].1;
        y.push(acc);
        for i in 1..rho.len() {
            acc += 0.5 * (chart.x[i] - chart.x[i - 1]) * (rho[i] + rho[i - 1]);
            y.push(acc);
        }
        chart.times.push(s.t);
        chart.y_map.push(y);
        chart.v_field.push(rho.iter().map(|r| 1.0 / r).collect());
        chart.u_field.push(u);
        chart.theta_field.push(theta);
    }
    Ok(chart)
}

/// Gaussian bracket.
fn bracket(z: f64) -> f64 {
    z.floor()
}

/// Window data for the cutoff `φ_z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffWindow {
    pub z: f64,
}

impl CutoffWindow {
    pub fn new(z: f64) -> Self {
        Self { z }
    }

    /// `[z] + 4`, where the cutoff starts to fall.
    pub fn lower(&self) -> f64 {
        bracket(self.z) + 4.0
    }

    /// `[z] + 5`, beyond which the cutoff vanishes.
    pub fn upper(&self) -> f64 {
        bracket(self.z) + 5.0
    }

    /// `I_z(τ) = (Y(τ), ∞) ∩ ([z] − 1, [z] + 4)`; `None` when empty.
    pub fn interval(&self, y_tau: f64) -> Option<(f64, f64)> {
        let lo = y_tau.max(bracket(self.z) - 1.0);
        let hi = self.lower();
        (lo < hi).then_some((lo, hi))
    }
}

pub fn cutoff(window: &CutoffWindow, y: f64) -> f64 {
    if y < window.lower() {
        1.0
    } else if y < window.upper() {
        window.upper() - y
    } else {
        0.0
    }
}

/// `Ω_i(t)`: `[Y, [Y] + 2]` for `i = [Y] + 1`, otherwise `[i, i + 1]`.
pub fn omega_interval(y_t: f64, i: i64) -> Result<(f64, f64)> {
    let b = bracket(y_t) as i64;
    if i <= b {
        return Err(Error::DomainError(format!(
            "cell index {i} must exceed [Y(t)] = {b}"
        )));
    }
    if i == b + 1 {
        Ok((y_t, (b + 2) as f64))
    } else {
        Ok((i as f64, (i + 1) as f64))
    }
}

/// `(∫_{Ω_i(t)} v(s, y) dy, ∫_{Ω_i(t)} θ(s, y) dy)` for snapshot indices
/// `s ≤ t`, by trapezoidal quadrature in `y`.
pub fn cell_averages(chart: &LagrangianChart, s: usize, t: usize, i: i64) -> Result<(f64, f64)> {
    if s > t || t >= chart.len() {
        return Err(Error::InvalidParameter(format!(
            "need s <= t < {} snapshots, got s = {s}, t = {t}",
            chart.len()
        )));
    }
    let (a, b) = omega_interval(chart.boundary(t), i)?;
    if a < chart.boundary(s) || b > chart.right_end(s) {
        return Err(Error::OutOfChart(format!(
            "[{a}, {b}] not inside [{}, {}] at t = {}",
            chart.boundary(s),
            chart.right_end(s),
            chart.times[s]
        )));
    }
    let ys = &chart.y_map[s];
    Ok((
        integrate_linear(ys, &chart.v_field[s], a, b),
        integrate_linear(ys, &chart.theta_field[s], a, b),
    ))
}

/// Extremes of the cell averages `|Ω_i(t)|⁻¹∫_{Ω_i(t)} v(s, ·)` (and of `θ`)
/// over a sample of `(s, t, i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellAverageRange {
    pub v_min: f64,
    pub v_max: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub samples: usize,
}

/// Samples every `t_stride`-th snapshot `t`, the lags `s = t, t−1, t−2, t−4, …, 0`,
/// and every cell `Ω_i(t)` that fits inside the chart at `s`.
pub fn cell_average_range(chart: &LagrangianChart, t_stride: usize) -> Result<CellAverageRange> {
    if t_stride == 0 || chart.is_empty() {
        return Err(Error::InvalidParameter(
            "need a non-empty chart and t_stride >= 1".into(),
        ));
    }
    let mut out = CellAverageRange {
        v_min: f64::INFINITY,
        v_max: f64::NEG_INFINITY,
        theta_min: f64::INFINITY,
        theta_max: f64::NEG_INFINITY,
        samples: 0,
    };
    for t in (0..chart.len()).step_by(t_stride) {
        let mut lags = vec![0usize];
        let mut lag = 1;
        while lag <= t {
            lags.push(lag);
            lag *= 2;
        }
        if t > 0 && *lags.last().unwrap() != t {
            lags.push(t);
        }
        let first = bracket(chart.boundary(t)) as i64 + 1;
        for s in lags.into_iter().map(|l| t - l) {
            for i in first.. {
                let (a, b) = omega_interval(chart.boundary(t), i)?;
                if b > chart.right_end(s) {
                    break;
                }
                let (v, th) = cell_averages(chart, s, t, i)?;
                let (v, th) = (v / (b - a), th / (b - a));
                out.v_min = out.v_min.min(v);
                out.v_max = out.v_max.max(v);
                out.theta_min = out.theta_min.min(th);
                out.theta_max = out.theta_max.max(th);
                out.samples += 1;
            }
        }
    }
    if out.samples == 0 {
        return Err(Error::OutOfChart(
            "no Lagrangian cell fits inside the chart".into(),
        ));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RepresentationReport {
    pub tau: f64,
    pub z: f64,
    pub max_rel_error: f64,
    pub samples: usize,
}

/// Sample points in `y` per snapshot used by [`representation_check`].
pub const REPRESENTATION_Y_SAMPLES: usize = 33;

/// Evaluates both sides of the local representation of `v` on snapshots
/// with `t ≤ τ` and `y` sampled in `I_z(τ)`:
///
/// `v(t,y) = B A(t) + (R/μ) ∫₀ᵗ [B A(t) / (B(s,y) A(s))] θ(s,y) ds`,
/// `B(t,y) = v₀(y) exp{(1/μ) ∫_y^∞ (u₀ − u(t,·)) φ_z}`,
/// `A(t) = exp{(1/μ) ∫₀ᵗ ∫_{[z]+4}^{[z]+5} (μu_y/v − P)}`.
///
/// Time integrals use the trapezoid rule over snapshots, space integrals the
/// trapezoid rule over the merged node sets.
pub fn representation_check(
    chart: &LagrangianChart,
    params: &GasParams,
    tau: f64,
    z: f64,
) -> Result<RepresentationReport> {
    let n_t = chart
        .times
        .iter()
        .take_while(|&&t| t <= tau * (1.0 + 1e-12) + 1e-300)
        .count();
    if n_t == 0 || tau > *chart.times.last().unwrap() * (1.0 + 1e-12) {
        return Err(Error::OutOfChart(format!(
            "tau = {tau} outside charted times [{}, {}]",
            chart.times[0],
            chart.times.last().unwrap()
        )));
    }
    let window = CutoffWindow::new(z);
    let y_tau = chart.boundary(n_t - 1);
    let (lo, hi) = window.interval(y_tau).ok_or_else(|| {
        Error::OutOfChart(format!(
            "I_z(tau) empty: Y(tau) = {y_tau}, [z]+4 = {}",
            window.lower()
        ))
    })?;
    for k in 0..n_t {
        if window.upper() > chart.right_end(k) {
            return Err(Error::OutOfChart(format!(
                "[z]+5 = {} beyond charted y = {} at t = {}",
                window.upper(),
                chart.right_end(k),
                chart.times[k]
            )));
        }
    }
    let (mu, r) = (params.mu(), params.r());

    // log A at every snapshot
    let g: Vec<f64> = (0..n_t)
        .map(|k| {
            let u_x = finite_difference(&chart.x, &chart.u_field[k]);
            let f: Vec<f64> = (0..chart.x.len())
                .map(|i| mu * u_x[i] - r * chart.theta_field[k][i] / chart.v_field[k][i])
                .collect();
            integrate_linear(&chart.y_map[k], &f, window.lower(), window.upper())
        })
        .collect();
    let mut log_a = vec![0.0; n_t];
    for k in 1..n_t {
        log_a[k] = log_a[k - 1] + 0.5 * (chart.times[k] - chart.times[k - 1]) * (g[k] + g[k - 1]) / mu;
    }

    let mut worst = 0.0f64;
    let n_y = REPRESENTATION_Y_SAMPLES;
    for q in 0..n_y {
        let y = lo + (hi - lo) * (q as f64 + 0.5) / n_y as f64;
        let v0 = chart.sample(0, &chart.v_field[0], y);
        // log(B A) and θ along the time axis at this y
        let mut log_ba = Vec::with_capacity(n_t);
        let mut theta = Vec::with_capacity(n_t);
        for (k, la) in log_a.iter().enumerate().take(n_t) {
            let integral = b_exponent(chart, &window, k, y);
            log_ba.push(v0.ln() + integral / mu + la);
            theta.push(chart.sample(k, &chart.theta_field[k], y));
        }
        for k in 0..n_t {
            let mut memory = 0.0;
            for j in 1..=k {
                let w0 = (log_ba[k] - log_ba[j - 1]).exp() * theta[j - 1];
                let w1 = (log_ba[k] - log_ba[j]).exp() * theta[j];
                memory += 0.5 * (chart.times[j] - chart.times[j - 1]) * (w0 + w1);
            }
            let rhs = log_ba[k].exp() + r / mu * memory;
            let v = chart.sample(k, &chart.v_field[k], y);
            worst = worst.max((rhs - v).abs() / v);
        }
    }
    Ok(RepresentationReport {
        tau,
        z,
        max_rel_error: worst,
        samples: n_t * n_y,
    })
}

/// `∫_y^{[z]+5} (u₀ − u(t_k, ·)) φ_z` over the merged breakpoints of both snapshots.
fn b_exponent(chart: &LagrangianChart, window: &CutoffWindow, k: usize, y: f64) -> f64 {
    let top = window.upper();
    if y >= top {
        return 0.0;
    }
    let mut pts = vec![y, window.lower(), top];
    for ys in [&chart.y_map[0], &chart.y_map[k]] {
        let a = ys.partition_point(|&v| v <= y);
        let b = ys.partition_point(|&v| v < top);
        pts.extend_from_slice(&ys[a..b]);
    }
    pts.retain(|&p| p >= y && p <= top);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let f = |p: f64| {
        (chart.sample(0, &chart.u_field[0], p) - chart.sample(k, &chart.u_field[k], p)) * cutoff(window, p)
    };
    let mut sum = 0.0;
    let mut prev = (pts[0], f(pts[0]));
    for &p in &pts[1..] {
        let fp = f(p);
        sum += 0.5 * (p - prev.0) * (fp + prev.1);
        prev = (p, fp);
    }
    sum
}

/// Piecewise-linear interpolation on increasing nodes, constant outside.
pub(crate) fn interp(xs: &[f64], fs: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return fs[0];
    }
    if x >= xs[n - 1] {
        return fs[n - 1];
    }
    let i = xs.partition_point(|&v| v <= x).clamp(1, n - 1);
    let w = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    fs[i - 1] + w * (fs[i] - fs[i - 1])
}

/// Exact integral of the piecewise-linear interpolant of `(xs, fs)` over `[a, b]`.
pub(crate) fn integrate_linear(xs: &[f64], fs: &[f64], a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let lo = xs.partition_point(|&v| v <= a);
    let hi = xs.partition_point(|&v| v < b);
    let mut prev = (a, interp(xs, fs, a));
    let mut sum = 0.0;
    for i in lo..hi {
        sum += 0.5 * (xs[i] - prev.0) * (fs[i] + prev.1);
        prev = (xs[i], fs[i]);
    }
    sum + 0.5 * (b - prev.0) * (interp(xs, fs, b) + prev.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_branches() {
        let w = CutoffWindow::new(2.7);
        assert_eq!(cutoff(&w, 5.0), 1.0);
        assert_eq!(cutoff(&w, 6.5), 0.5);
        assert_eq!(cutoff(&w, 8.0), 0.0);
        assert_eq!(w.interval(0.0), Some((1.0, 6.0)));
        assert_eq!(w.interval(6.0), None);
    }

    #[test]
    fn omega_branches() {
        assert_eq!(omega_interval(0.3, 1).unwrap(), (0.3, 2.0));
        assert_eq!(omega_interval(0.3, 2).unwrap(), (2.0, 3.0));
        assert!(matches!(omega_interval(0.3, 0), Err(Error::DomainError(_))));
    }

    #[test]
    fn linear_quadrature_is_exact_and_additive() {
        let xs = [0.0, 0.5, 1.7, 3.0];
        let fs = [1.0, 2.0, -1.0, 4.0];
        let whole = integrate_linear(&xs, &fs, 0.2, 2.9);
        let split = integrate_linear(&xs, &fs, 0.2, 1.1) + integrate_linear(&xs, &fs, 1.1, 2.9);
        assert!((whole - split).abs() < 1e-15);
        assert!((integrate_linear(&xs, &[2.0; 4], 0.25, 2.0) - 3.5).abs() < 1e-15);
    }
}
