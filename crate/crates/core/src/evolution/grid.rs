use crate::error::{Error, Result};
use crate::stationary::ProfileGrid;

pub const MIN_CELLS: usize = 16;

/// Uniform cell-centred grid on `[0, L]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    length: f64,
    nx: usize,
}

impl Grid {
    pub fn new(length: f64, nx: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "domain length must be positive, got {length}"
            )));
        }
        if nx < MIN_CELLS {
            return Err(Error::InvalidParameter(format!(
                "need at least {MIN_CELLS} cells, got {nx}"
            )));
        }
        Ok(Self { length, nx })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn dx(&self) -> f64 {
        self.length / self.nx as f64
    }

    pub fn center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.nx).map(|j| self.center(j)).collect()
    }

    /// Half-cell profile grid: node `2j + 1` is the centre of cell `j`,
    /// node 0 is the boundary and the last node is `x = L`.
    pub fn profile_grid(&self) -> ProfileGrid {
        ProfileGrid::uniform(self.length, 2 * self.nx).expect("valid grid")
    }
}
