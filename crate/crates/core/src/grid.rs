//! Uniform grids on the unit square and nodal fields.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Smallest grid accepted by the solvers.
pub const MIN_CELLS: usize = 8;

/// Uniform grid on `[0,1]^2` with `n_cells` cells per side and spacing `h = 1/n_cells`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n_cells: usize,
}

impl GridSpec {
    /// Fails unless `field` lives on this grid.
    pub fn check_field(&self, field: &ScalarField) -> Result<()> {
        if *self != field.grid {
            return Err(Error::GridMismatch(self.n_cells(), field.grid.n_cells()));
        }
        Ok(())
    }

    /// Grid usable by the solvers (`n_cells >= 8`).
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells < MIN_CELLS {
            return Err(Error::GridTooCoarse {
                got: n_cells,
                min: MIN_CELLS,
            });
        }
        Ok(Self { n_cells })
    }

    /// Grid with any positive cell count. Only suitable for assembling and
    /// inspecting tiny systems; derivative tables need at least 5 cells.
    pub fn coarse(n_cells: usize) -> Result<Self> {
        if n_cells == 0 {
            return Err(Error::GridTooCoarse { got: 0, min: 1 });
        }
        Ok(Self { n_cells })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Nodes per side, `n_cells + 1`.
    pub fn side(&self) -> usize {
        self.n_cells + 1
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n_cells as f64
    }

    /// Coordinate of node index `i` along either axis.
    pub fn coord(&self, i: usize) -> f64 {
        i as f64 / self.n_cells as f64
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.n_cells || j == self.n_cells
    }

    /// Number of interior unknowns, `(n_cells - 1)^2`.
    pub fn n_interior(&self) -> usize {
        let m = self.n_cells.saturating_sub(1);
        m * m
    }

    /// Row-major position of interior node `(i, j)`: rows run along `j`.
    pub fn interior_index(&self, i: usize, j: usize) -> usize {
        (j - 1) * (self.n_cells - 1) + (i - 1)
    }
}

/// Convenience constructor matching [`GridSpec::new`].
pub fn make_grid(n_cells: usize) -> Result<GridSpec> {
    GridSpec::new(n_cells)
}

/// Values at every node of a grid, boundary included.
///
/// Storage is row-major with `j` (the y index) selecting the row.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.side() * grid.side()],
        }
    }

    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let s = grid.side();
        let mut values = Vec::with_capacity(s * s);
        for j in 0..s {
            for i in 0..s {
                values.push(f(i, j));
            }
        }
        Self { grid, values }
    }

    /// Wraps raw row-major values; fails on a length mismatch.
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        let expected = grid.side() * grid.side();
        if values.len() != expected {
            return Err(Error::MissingStencil {
                got: values.len(),
                expected,
            });
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.side() + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let s = self.grid.side();
        self.values[j * s + i] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&x, &y)| f(x, y))
                .collect(),
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Largest absolute pointwise difference.
    pub fn max_abs_diff(&self, other: &ScalarField) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs())))
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(
                self.grid.n_cells(),
                other.grid.n_cells(),
            ));
        }
        Ok(())
    }
}
