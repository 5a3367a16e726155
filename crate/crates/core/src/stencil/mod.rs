//! Compact 9-point stencils.
//!
//! A stencil at node `(i, j)` is nine weights `C_kl`, `k, l` in `{-1, 0, 1}`,
//! and a right-hand side `F` so that `h^-2 sum C_kl u_(i+k, j+l) = F`.

pub mod closed_form;
pub mod dump;
pub mod hpoly;
pub mod mmatrix;
pub mod reduced;
pub mod reduction;
pub mod taylor;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::{CoefficientTables, EquationMode, PointCoefficients};
use crate::error::{Error, Result};
use crate::grid::GridSpec;

pub use closed_form::{closed_form_general, closed_form_special};
pub use hpoly::HPolynomial;
pub use mmatrix::{mmatrix_report, MMatrixReport};
pub use reduced::{derive_reduced, reduced_stencil, rhs_value, ReducedStencil};
pub use reduction::{reduce_derivative, ReductionRow};
pub use taylor::{taylor_tables, TaylorTables, NEIGHBORS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StencilVariant {
    /// Explicit fourth-order stencil, any `a`, `b`.
    General4,
    /// Explicit fourth-order stencil for `a = b`.
    Special4,
    /// Reduced-pollution stencil for the steady equation.
    ReducedElliptic,
    /// Reduced-pollution stencil with a reaction term.
    ReducedHelmholtz,
}

impl StencilVariant {
    pub fn mode(self) -> EquationMode {
        match self {
            StencilVariant::ReducedHelmholtz => EquationMode::Helmholtz,
            _ => EquationMode::Steady,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StencilVariant::General4 => "general4",
            StencilVariant::Special4 => "special4",
            StencilVariant::ReducedElliptic => "reduced_elliptic",
            StencilVariant::ReducedHelmholtz => "reduced_helmholtz",
        }
    }
}

/// Weights and right-hand side at one node.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilWeights {
    pub variant: StencilVariant,
    pub h: f64,
    /// `C_kl` stored at `[k+1][l+1]`.
    pub weights: [[f64; 3]; 3],
    pub rhs: f64,
    /// Matching residual; zero for the explicit stencils.
    pub match_residual: f64,
    /// Coefficients `c_(k,l,p)` of the reduced stencils, `[neighbor][p]`.
    pub c_klp: Option<[[f64; 8]; 9]>,
}

impl StencilWeights {
    #[inline]
    pub fn weight(&self, k: i32, l: i32) -> f64 {
        self.weights[(k + 1) as usize][(l + 1) as usize]
    }

    /// `sum C_kl u(k, l)`.
    pub fn apply(&self, u: impl Fn(i32, i32) -> f64) -> f64 {
        NEIGHBORS.iter().map(|&(k, l)| self.weight(k, l) * u(k, l)).sum()
    }

    /// Local residual `h^-2 sum C_kl u(k, l) - F`.
    pub fn residual(&self, u: impl Fn(i32, i32) -> f64) -> f64 {
        self.apply(u) / (self.h * self.h) - self.rhs
    }
}

/// Builds the stencil of `variant` from point coefficients.
pub fn build_stencil(pc: &PointCoefficients, variant: StencilVariant) -> Result<StencilWeights> {
    if pc.mode != variant.mode() {
        return Err(Error::ModeMismatch(format!(
            "{} stencil needs {:?} coefficients, got {:?}",
            variant.name(),
            variant.mode(),
            pc.mode
        )));
    }
    match variant {
        StencilVariant::General4 => Ok(closed_form_general(pc)),
        StencilVariant::Special4 => closed_form_special(pc),
        StencilVariant::ReducedElliptic | StencilVariant::ReducedHelmholtz => reduced_stencil(pc),
    }
}

/// Stencils at every interior node, row-major along `j`.
#[derive(Debug, Clone)]
pub struct StencilField {
    pub grid: GridSpec,
    pub variant: StencilVariant,
    pub nodes: Vec<StencilWeights>,
}

impl StencilField {
    pub fn new(grid: GridSpec, variant: StencilVariant, nodes: Vec<StencilWeights>) -> Result<Self> {
        if nodes.len() != grid.n_interior() {
            return Err(Error::MissingStencil {
                got: nodes.len(),
                expected: grid.n_interior(),
            });
        }
        Ok(Self {
            grid,
            variant,
            nodes,
        })
    }

    pub fn at(&self, i: usize, j: usize) -> &StencilWeights {
        &self.nodes[self.grid.interior_index(i, j)]
    }

    /// Largest matching residual over the field.
    pub fn max_match_residual(&self) -> f64 {
        self.nodes.iter().fold(0.0, |m, s| m.max(s.match_residual))
    }
}

fn locate(err: Error, i: usize, j: usize) -> Error {
    match err {
        Error::StencilDerivation { residual, .. } => Error::StencilDerivation { i, j, residual },
        Error::CoefficientsNotEqual { diff, .. } => Error::CoefficientsNotEqual { i, j, diff },
        other => other,
    }
}

/// Builds stencils at all interior nodes, in parallel.
pub fn build_stencil_field(tables: &CoefficientTables, variant: StencilVariant) -> Result<StencilField> {
    let grid = tables.grid;
    let m = grid.n_cells() - 1;
    let nodes = (0..grid.n_interior())
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx % m + 1, idx / m + 1);
            build_stencil(&tables.at(i, j), variant).map_err(|e| locate(e, i, j))
        })
        .collect::<Result<Vec<_>>>()?;
    StencilField::new(grid, variant, nodes)
}
