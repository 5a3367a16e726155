//! Explicit fourth-order stencils for the steady equation.

use crate::coefficients::PointCoefficients;
use crate::error::{Error, Result};

use super::{StencilVariant, StencilWeights};

/// Right-hand side shared by both explicit stencils.
fn explicit_rhs(pc: &PointCoefficients, a: f64, b: f64, a10: f64, b01: f64) -> f64 {
    let psi = pc.psi(0, 0);
    let lap_psi = pc.psi(2, 0) + pc.psi(0, 2);
    let h2 = pc.h * pc.h;
    psi - ((a10 + b01) * psi - a * pc.psi(1, 0) - b * pc.psi(0, 1) - lap_psi) * h2 / 12.0
}

/// Fourth-order stencil for `lap u + a u_x + b u_y = psi` with general `a`, `b`.
pub fn closed_form_general(pc: &PointCoefficients) -> StencilWeights {
    let h = pc.h;
    let (h2, h3) = (h * h, h * h * h);
    let (a, b) = (pc.a(0, 0), pc.b(0, 0));
    let (a10, a01, b10, b01) = (pc.a(1, 0), pc.a(0, 1), pc.b(1, 0), pc.b(0, 1));
    let lap_a = pc.a(2, 0) + pc.a(0, 2);
    let lap_b = pc.b(2, 0) + pc.b(0, 2);

    let r1 = a + b;
    let r2 = a01 + a10;
    let r3 = b10 - b01;
    let r4 = a01 + b10;
    let r5 = a - b;
    let r6 = a01 - a10;
    let r7 = b10 + b01;
    let lap_r1 = lap_a + lap_b;

    let mut w = [[0.0; 3]; 3];
    w[0][0] = 1.0 / 6.0 - r1 * h / 12.0 + (r3 * a - (2.0 * a01 + a10) * b + lap_r1) * h3 / 24.0;
    w[0][1] = 2.0 / 3.0 - a * h / 3.0
        + (a * a + a * b + r2 + r3) * h2 / 12.0
        + (r2 * b - r3 * a - lap_r1) * h3 / 12.0;
    w[0][2] = 1.0 / 6.0 - r5 * h / 12.0 - (a * b + r4) * h2 / 12.0
        + (a * b10 - r2 * b + lap_b) * h3 / 24.0;
    w[1][0] = 2.0 / 3.0 - b * h / 3.0
        + (a * b + b * b + r6 + r7) * h2 / 12.0
        + (r2 * b - r3 * a - lap_r1) * h3 / 12.0;
    w[1][1] = -10.0 / 3.0 - (a * a + a * b + b * b + r4) * h2 / 6.0
        + (r3 * a - r2 * b + lap_r1) * h3 / 12.0;
    w[1][2] = 2.0 / 3.0 + b * h / 3.0 + (a * b + b * b + r6 + r7) * h2 / 12.0;
    w[2][0] = 1.0 / 6.0 + r5 * h / 12.0 - (a * b + r4) * h2 / 12.0
        + (lap_a - a * b01) * h3 / 24.0;
    w[2][1] = 2.0 / 3.0 + a * h / 3.0 + (a * a + a * b + r2 + r3) * h2 / 12.0;
    w[2][2] = 1.0 / 6.0 + r1 * h / 12.0 + a01 * b * h3 / 24.0;

    StencilWeights {
        variant: StencilVariant::General4,
        h,
        weights: w,
        rhs: explicit_rhs(pc, a, b, a10, b01),
        match_residual: 0.0,
        c_klp: None,
    }
}

/// Relative tolerance for the `a = b` precondition.
const EQUAL_TOL: f64 = 1e-12;

/// Fourth-order stencil for `lap u + a (u_x + u_y) = psi`. Fails unless `a = b`.
pub fn closed_form_special(pc: &PointCoefficients) -> Result<StencilWeights> {
    let checked = [(0, 0), (1, 0), (0, 1), (2, 0), (0, 2)];
    for (m, n) in checked {
        let (x, y) = (pc.a(m, n), pc.b(m, n));
        let diff = (x - y).abs();
        if diff > EQUAL_TOL * x.abs().max(y.abs()).max(1.0) {
            return Err(Error::CoefficientsNotEqual { i: 0, j: 0, diff });
        }
    }
    let h = pc.h;
    let (h2, h3) = (h * h, h * h * h);
    let a = pc.a(0, 0);
    let (a10, a01) = (pc.a(1, 0), pc.a(0, 1));
    let lap_a = pc.a(2, 0) + pc.a(0, 2);

    let mut w = [[0.0; 3]; 3];
    w[0][0] = 1.0 / 6.0 - a * h / 6.0 + lap_a * h3 / 12.0;
    w[0][1] = 2.0 / 3.0 - a * h / 3.0 + (a * a + a10) * h2 / 6.0 - lap_a * h3 / 6.0;
    w[0][2] = 1.0 / 6.0 - (a * a + a01 + a10) * h2 / 12.0 + lap_a * h3 / 24.0;
    w[1][0] = 2.0 / 3.0 - a * h / 3.0 + (a * a + a01) * h2 / 6.0 - lap_a * h3 / 6.0;
    w[1][1] = -10.0 / 3.0 - (3.0 * a * a + a01 + a10) * h2 / 6.0 + lap_a * h3 / 6.0;
    w[1][2] = 2.0 / 3.0 + a * h / 3.0 + (a * a + a01) * h2 / 6.0;
    w[2][0] = w[0][2];
    w[2][1] = 2.0 / 3.0 + a * h / 3.0 + (a * a + a10) * h2 / 6.0;
    w[2][2] = 1.0 / 6.0 + a * h / 6.0;

    Ok(StencilWeights {
        variant: StencilVariant::Special4,
        h,
        weights: w,
        rhs: explicit_rhs(pc, a, a, a10, a01),
        match_residual: 0.0,
        c_klp: None,
    })
}
