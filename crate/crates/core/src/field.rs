//! Uniform 1-D grids and complex-valued fields stored as (Re, Im) pairs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::cubic_interp;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    /// Fractional index of x = 0; x_i = (i - origin) h, which keeps symmetric grids exactly symmetric.
    pub origin: f64,
    pub h: f64,
    pub n: usize,
}

impl Grid1D {
    /// Symmetric grid on [-x_max, x_max] with n points (n odd keeps x = 0 on the grid).
    pub fn symmetric(x_max: f64, n: usize) -> Result<Self> {
        if n < 5 || !(x_max > 0.0) {
            return Err(Error::GridTooCoarse(format!("n = {n}, x_max = {x_max}")));
        }
        Ok(Grid1D { origin: (n - 1) as f64 / 2.0, h: 2.0 * x_max / (n - 1) as f64, n })
    }

    /// Periodic grid on [x_min, x_min + length) with n points.
    pub fn periodic(x_min: f64, length: f64, n: usize) -> Self {
        let h = length / n as f64;
        Grid1D { origin: -x_min / h, h, n }
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - self.origin) * self.h
    }

    pub fn x_min(&self) -> f64 {
        self.x(0)
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.n - 1)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexField {
    pub grid: Grid1D,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub t: f64,
}

impl ComplexField {
    pub fn from_fn(grid: Grid1D, t: f64, f: impl Fn(f64) -> (f64, f64)) -> Self {
        let (u1, u2) = grid.points().into_iter().map(f).unzip();
        ComplexField { grid, u1, u2, t }
    }

    /// sup |u| over the grid.
    pub fn sup_norm(&self) -> f64 {
        self.u1.iter().zip(&self.u2).map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max)
    }

    pub fn min_re(&self) -> f64 {
        self.u1.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Cubic interpolation of (u1, u2) at x. Errors outside the grid.
    pub fn eval(&self, x: f64) -> Result<(f64, f64)> {
        let lo = self.grid.x_min();
        let hi = self.grid.x_max();
        if x < lo - 1e-12 * self.grid.h || x > hi + 1e-12 * self.grid.h {
            return Err(Error::OutOfDomain(format!("x = {x} outside [{lo}, {hi}]")));
        }
        Ok((
            cubic_interp(lo, self.grid.h, &self.u1, x),
            cubic_interp(lo, self.grid.h, &self.u2, x),
        ))
    }
}
