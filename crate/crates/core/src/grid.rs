//! Uniform grids on `[0, L]` and functions sampled on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid `x_j = j·dx`, `j = 0..n`, with `dx = L/(n−1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    length: f64,
    n: usize,
    dx: f64,
}

impl Grid {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Grid(format!("need at least 3 nodes, got {n}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Grid(format!("domain length must be positive, got {length}")));
        }
        Ok(Self {
            length,
            n,
            dx: length / (n - 1) as f64,
        })
    }

    /// Grid with spacing as close as possible to `dx` and length at least `length`.
    pub fn with_spacing(length: f64, dx: f64) -> Result<Self> {
        if !(dx.is_finite() && dx > 0.0) {
            return Err(Error::Grid(format!("spacing must be positive, got {dx}")));
        }
        let cells = (length / dx).ceil().max(2.0) as usize;
        Self::new(cells as f64 * dx, cells + 1)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.x(j))
    }

    /// Index of the last node with `x_j ≤ x` (clamped to the grid).
    pub fn floor_index(&self, x: f64) -> usize {
        if x <= 0.0 {
            return 0;
        }
        ((x / self.dx).floor() as usize).min(self.n - 1)
    }
}

/// A function sampled on a [`Grid`] at a given time.
///
/// `trusted_xmax` marks the right end of the region not yet reached by
/// information from the artificial boundary at `x = L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub time: f64,
    pub trusted_xmax: f64,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            time,
            trusted_xmax: grid.length(),
        })
    }

    pub fn sample<F: Fn(f64) -> f64>(grid: Grid, f: F) -> Self {
        let values = grid.nodes().map(f).collect();
        Self {
            grid,
            values,
            time: 0.0,
            trusted_xmax: grid.length(),
        }
    }

    pub fn is_trusted(&self, j: usize) -> bool {
        self.grid.x(j) <= self.trusted_xmax
    }

    /// Number of leading nodes inside the trusted region.
    pub fn trusted_len(&self) -> usize {
        if self.trusted_xmax < 0.0 {
            return 0;
        }
        (self.grid.floor_index(self.trusted_xmax) + 1).min(self.values.len())
    }

    /// Piecewise-linear interpolation; `None` outside `[0, L]`.
    pub fn interpolate(&self, x: f64) -> Option<f64> {
        if !(0.0..=self.grid.length()).contains(&x) {
            return None;
        }
        let j = self.grid.floor_index(x);
        if j + 1 >= self.values.len() {
            return Some(self.values[self.values.len() - 1]);
        }
        let w = x / self.grid.dx() - j as f64;
        Some((1.0 - w) * self.values[j] + w * self.values[j + 1])
    }

    /// `max |self − f|` over trusted nodes with `x ≤ xmax`.
    pub fn sup_distance<F: Fn(f64) -> f64>(&self, xmax: f64, f: F) -> f64 {
        let limit = xmax.min(self.trusted_xmax);
        self.values
            .iter()
            .enumerate()
            .take_while(|(j, _)| self.grid.x(*j) <= limit)
            .map(|(j, v)| (v - f(self.grid.x(j))).abs())
            .fold(0.0, f64::max)
    }
}
