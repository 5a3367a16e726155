//! Sign checks that make the assembled matrix an M-matrix.
//!
//! The equations are multiplied by `-1`, so the checks are on `-C`: a positive
//! center, non-positive neighbors and a non-negative row sum.

use serde::Serialize;

use super::{StencilField, StencilWeights, NEIGHBORS};

/// Slack allowed on the neighbor and row-sum signs.
pub const SIGN_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    CenterNotPositive,
    NeighborPositive,
    RowSumNegative,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub i: usize,
    pub j: usize,
    pub kind: ViolationKind,
    /// The offending entry of `-C` (or its row sum).
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MMatrixReport {
    pub pass: bool,
    pub nodes_checked: usize,
    pub violations: Vec<Violation>,
}

/// Sign violations of a single stencil, as `(kind, value of -C)`.
pub fn check_stencil(s: &StencilWeights) -> Vec<(ViolationKind, f64)> {
    let mut out = Vec::new();
    let center = -s.weight(0, 0);
    if !(center > 0.0) {
        out.push((ViolationKind::CenterNotPositive, center));
    }
    let mut sum = 0.0;
    for &(k, l) in &NEIGHBORS {
        let v = -s.weight(k, l);
        sum += v;
        if (k, l) != (0, 0) && !(v <= SIGN_TOL) {
            out.push((ViolationKind::NeighborPositive, v));
        }
    }
    if !(sum >= -SIGN_TOL) {
        out.push((ViolationKind::RowSumNegative, sum));
    }
    out
}

pub fn mmatrix_report(field: &StencilField) -> MMatrixReport {
    let m = field.grid.n_cells() - 1;
    let violations: Vec<Violation> = field
        .nodes
        .iter()
        .enumerate()
        .flat_map(|(idx, s)| {
            let (i, j) = (idx % m + 1, idx / m + 1);
            check_stencil(s)
                .into_iter()
                .map(move |(kind, value)| Violation { i, j, kind, value })
        })
        .collect();
    MMatrixReport {
        pass: violations.is_empty(),
        nodes_checked: field.nodes.len(),
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{EquationMode, PointCoefficients};
    use crate::stencil::closed_form_general;

    #[test]
    fn strong_convection_on_a_coarse_grid_fails() {
        let pc = PointCoefficients::constant(EquationMode::Steady, 0.25, 50.0, 50.0, 0.0, 0.0);
        let v = check_stencil(&closed_form_general(&pc));
        assert!(v.iter().any(|(k, _)| *k == ViolationKind::NeighborPositive));
    }

    #[test]
    fn mild_convection_passes() {
        let pc = PointCoefficients::constant(EquationMode::Steady, 1.0 / 64.0, 2.0, -1.0, 0.0, 0.0);
        assert!(check_stencil(&closed_form_general(&pc)).is_empty());
    }
}
