use crate::error::{Error, Result};
use crate::gas::GasParams;

use super::grid::Grid;

/// Cell-centred primitive fields at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub theta: Vec<f64>,
}

impl FlowState {
    pub fn new(t: f64, rho: Vec<f64>, u: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        let s = Self { t, rho, u, theta };
        s.validate()?;
        Ok(s)
    }

    pub fn uniform(grid: &Grid, rho: f64, u: f64, theta: f64) -> Result<Self> {
        let n = grid.nx();
        Self::new(0.0, vec![rho; n], vec![u; n], vec![theta; n])
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.rho.len();
        if self.u.len() != n || self.theta.len() != n {
            return Err(Error::GridMismatch(format!(
                "field lengths differ: rho {}, u {}, theta {}",
                n,
                self.u.len(),
                self.theta.len()
            )));
        }
        if let Some(j) =
            (0..n).find(|&j| !(self.rho[j] > 0.0) || !(self.theta[j] > 0.0) || !self.u[j].is_finite())
        {
            return Err(Error::NonPhysicalState(format!(
                "cell {j}: rho = {}, u = {}, theta = {}",
                self.rho[j], self.u[j], self.theta[j]
            )));
        }
        Ok(())
    }

    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        if self.len() != grid.nx() {
            return Err(Error::GridMismatch(format!(
                "state has {} cells, grid has {}",
                self.len(),
                grid.nx()
            )));
        }
        Ok(())
    }

    /// Conserved densities `(ρ, ρu, ρE)` with `E = c_vθ + u²/2`.
    pub fn conserved(&self, params: &GasParams) -> [Vec<f64>; 3] {
        let cv = params.cv();
        let mass = self.rho.clone();
        let momentum = self.rho.iter().zip(&self.u).map(|(r, u)| r * u).collect();
        let energy = (0..self.len())
            .map(|j| self.rho[j] * (cv * self.theta[j] + 0.5 * self.u[j] * self.u[j]))
            .collect();
        [mass, momentum, energy]
    }

    /// Cell sums `Σ U_j dx` of the conserved densities.
    pub fn integrals(&self, params: &GasParams, dx: f64) -> [f64; 3] {
        let cons = self.conserved(params);
        [0, 1, 2].map(|k| cons[k].iter().sum::<f64>() * dx)
    }

    pub fn extrema(&self) -> (f64, f64, f64, f64) {
        let (mut rmin, mut rmax) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut tmin, mut tmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for j in 0..self.len() {
            rmin = rmin.min(self.rho[j]);
            rmax = rmax.max(self.rho[j]);
            tmin = tmin.min(self.theta[j]);
            tmax = tmax.max(self.theta[j]);
        }
        (rmin, rmax, tmin, tmax)
    }

    /// Largest relative change of any field against `other`.
    pub fn max_relative_change(&self, other: &FlowState) -> f64 {
        let rel = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs() / y.abs().max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max)
        };
        rel(&self.rho, &other.rho)
            .max(rel(&self.u, &other.u))
            .max(rel(&self.theta, &other.theta))
    }
}
