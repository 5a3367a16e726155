//! Stencils with reduced pollution, derived numerically at each node.
//!
//! Each weight is `C_kl = sum_(p=0..7) c_(k,l,p) h^p`. The `h^0` parts are the
//! classical 9-point Laplacian, a fixed set of higher coefficients is pinned
//! to zero, and the rest solve the matching conditions on the expansion of
//! `sum C_kl u(kh, lh)`: every coefficient of `u^(m,n) h^t` (`m <= 1`,
//! `t <= 7`) vanishes, except `u^(1,3) h^6`, which equals
//! `(a^(0,1) - b^(1,0))/90`, and, with a reaction term, three `h^7`
//! coefficients fixed to closed-form values. The system does not depend on
//! `h`.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::coefficients::{EquationMode, PointCoefficients};
use crate::error::{Error, Result};

use super::reduction::{lower_pairs, ReductionTable};
use super::taylor::{neighbor_index, Expansion, NEIGHBORS, N_T};
use super::{StencilVariant, StencilWeights};

/// Degree of the weights in `h`.
pub const WEIGHT_DEGREE: usize = 7;
/// Largest accepted matching residual, relative to the largest matrix entry.
pub const MATCH_TOLERANCE: f64 = 1e-9;

/// The `h^0` part of every weight, in neighbor order.
pub const LEADING: [f64; 9] = [
    1.0 / 6.0,
    2.0 / 3.0,
    1.0 / 6.0,
    2.0 / 3.0,
    -10.0 / 3.0,
    2.0 / 3.0,
    1.0 / 6.0,
    2.0 / 3.0,
    1.0 / 6.0,
];

/// Whether `c_(k,l,p)`, `p >= 1`, is pinned to zero.
pub fn is_pinned(k: i32, l: i32, p: usize, mode: EquationMode) -> bool {
    let from = match (k, l) {
        (-1, -1) => return false,
        (-1, 0) => 7,
        (-1, 1) => 6,
        (0, -1) => 7,
        (0, 0) => 6,
        (0, 1) => 5,
        (1, -1) => 5,
        (1, 0) => 4,
        (1, 1) => match mode {
            EquationMode::Steady => 2,
            EquationMode::Helmholtz => 1,
        },
        _ => unreachable!("neighbor offsets lie in -1..=1"),
    };
    p >= from
}

/// Unknown and equation bookkeeping for one mode.
struct Layout {
    /// `(neighbor, power)` of each unknown.
    unknowns: Vec<(usize, usize)>,
    /// `(m, n, t)` of each equation.
    rows: Vec<(usize, usize, usize)>,
    /// Rows forming a nonsingular square subsystem for generic coefficients.
    square: Vec<usize>,
}

impl Layout {
    fn new(mode: EquationMode) -> Self {
        let mut unknowns = Vec::new();
        for (kl, &(k, l)) in NEIGHBORS.iter().enumerate() {
            for p in 1..=WEIGHT_DEGREE {
                if !is_pinned(k, l, p, mode) {
                    unknowns.push((kl, p));
                }
            }
        }
        // Entries of the u^(m,n) equations start at h^(m+n).
        let rows: Vec<_> = lower_pairs()
            .flat_map(|(m, n)| (m + n..N_T).map(move |t| (m, n, t)))
            .collect();
        let mut layout = Self {
            unknowns,
            rows,
            square: Vec::new(),
        };
        layout.square = layout.pick_square(mode);
        layout
    }

    /// Greedy pivoted Gram-Schmidt over the rows of a generic instance.
    fn pick_square(&self, mode: EquationMode) -> Vec<usize> {
        let pc = generic_coefficients(mode);
        let e = Expansion::build(&ReductionTable::build(&pc));
        let (a, _) = self.system(&e, &pc);
        let nc = self.unknowns.len();
        let mut rows: Vec<Vec<f64>> = a.chunks(nc).map(|r| r.to_vec()).collect();
        let mut chosen = Vec::with_capacity(nc);
        let mut used = vec![false; rows.len()];
        for _ in 0..nc {
            let (best, norm) = rows
                .iter()
                .enumerate()
                .filter(|(r, _)| !used[*r])
                .map(|(r, v)| (r, v.iter().map(|x| x * x).sum::<f64>().sqrt()))
                .fold((usize::MAX, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best == usize::MAX || norm < 1e-10 {
                break;
            }
            used[best] = true;
            chosen.push(best);
            let q: Vec<f64> = rows[best].iter().map(|x| x / norm).collect();
            for (r, v) in rows.iter_mut().enumerate() {
                if used[r] {
                    continue;
                }
                let d: f64 = v.iter().zip(&q).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(&q).for_each(|(x, y)| *x -= d * y);
            }
        }
        chosen.sort_unstable();
        chosen
    }

    /// Dense row-major matrix and right-hand side of the matching system.
    fn system(&self, e: &Expansion, pc: &PointCoefficients) -> (Vec<f64>, Vec<f64>) {
        let nc = self.unknowns.len();
        let mut a = vec![0.0; self.rows.len() * nc];
        let mut rhs = vec![0.0; self.rows.len()];
        for (r, &(m, n, t)) in self.rows.iter().enumerate() {
            let row = &mut a[r * nc..(r + 1) * nc];
            for (col, &(kl, s)) in self.unknowns.iter().enumerate() {
                if s <= t {
                    row[col] = e.g(kl, m, n)[t - s];
                }
            }
            let pinned: f64 = (0..9).map(|kl| LEADING[kl] * e.g(kl, m, n)[t]).sum();
            rhs[r] = target(pc, m, n, t) - pinned;
        }
        (a, rhs)
    }
}

/// Required value of the `u^(m,n) h^t` coefficient.
fn target(pc: &PointCoefficients, m: usize, n: usize, t: usize) -> f64 {
    let (a, b, c) = (pc.a(0, 0), pc.b(0, 0), pc.c(0, 0));
    let (a01, b10) = (pc.a(0, 1), pc.b(1, 0));
    let (c10, c01) = (pc.c(1, 0), pc.c(0, 1));
    match (m, n, t) {
        (1, 3, 6) => (a01 - b10) / 90.0,
        _ if pc.mode == EquationMode::Steady => 0.0,
        (1, 3, 7) => {
            (10.0 * a * (6.0 * b * c - 21.0 * (a01 - b10) - 8.0 * c01)
                - 210.0 * (a01 - b10 + c10) * b
                - (49.0 * a01 + 91.0 * b10) * c)
                / 37800.0
        }
        (1, 4, 7) => -(a * c + 14.0 * c10) / 7560.0,
        (0, 5, 7) => (b * c - c01) / 540.0,
        _ => 0.0,
    }
}

/// Fixed pseudo-random coefficients used to choose the square subsystem.
fn generic_coefficients(mode: EquationMode) -> PointCoefficients {
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut next = || {
        state = state
            .wrapping_mul(6_364_136_223_846_793_005)
            .wrapping_add(1_442_695_040_888_963_407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };
    let mut pc = PointCoefficients::zero(mode, 0.1);
    for k in 0..pc.a.len() {
        pc.a[k] = next();
        pc.b[k] = next();
        if mode == EquationMode::Helmholtz {
            pc.c[k] = next();
        }
        pc.psi[k] = next();
    }
    pc
}

fn layout(mode: EquationMode) -> &'static Layout {
    static STEADY: OnceLock<Layout> = OnceLock::new();
    static HELMHOLTZ: OnceLock<Layout> = OnceLock::new();
    match mode {
        EquationMode::Steady => STEADY.get_or_init(|| Layout::new(mode)),
        EquationMode::Helmholtz => HELMHOLTZ.get_or_init(|| Layout::new(mode)),
    }
}

/// Number of unknown coefficients and of structurally nonzero equations.
pub fn system_size(mode: EquationMode) -> (usize, usize) {
    let l = layout(mode);
    (l.unknowns.len(), l.rows.len())
}

/// Solved coefficients `c_(k,l,p)` at one node, indexed `[neighbor][p]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedStencil {
    pub mode: EquationMode,
    pub c_klp: [[f64; WEIGHT_DEGREE + 1]; 9],
    /// Largest equation residual divided by the largest matrix entry.
    pub residual: f64,
}

impl ReducedStencil {
    pub fn coefficient(&self, k: i32, l: i32, p: usize) -> f64 {
        self.c_klp[neighbor_index(k, l)][p]
    }

    /// `C_kl` evaluated at `h`, indexed `[k+1][l+1]`.
    pub fn weights(&self, h: f64) -> [[f64; 3]; 3] {
        let mut w = [[0.0; 3]; 3];
        for (kl, &(k, l)) in NEIGHBORS.iter().enumerate() {
            w[(k + 1) as usize][(l + 1) as usize] = self.c_klp[kl]
                .iter()
                .rev()
                .fold(0.0, |acc, &c| acc * h + c);
        }
        w
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn residual(a: &[f64], rhs: &[f64], x: &[f64]) -> f64 {
    let nc = x.len();
    rhs.iter()
        .enumerate()
        .map(|(r, &b)| {
            let ax: f64 = a[r * nc..(r + 1) * nc].iter().zip(x).map(|(p, q)| p * q).sum();
            (ax - b).abs()
        })
        .fold(0.0, f64::max)
}

/// Upper bound on the number of unknowns in either mode.
const MAX_UNKNOWNS: usize = 41;

/// In-place LU with partial pivoting on the leading `b.len()` block.
/// Leaves the solution in `b`; false if a pivot vanishes.
fn lu_solve(m: &mut [[f64; MAX_UNKNOWNS]; MAX_UNKNOWNS], b: &mut [f64]) -> bool {
    let n = b.len();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))
            .expect("non-empty pivot range");
        if m[p][c] == 0.0 {
            return false;
        }
        if p != c {
            m.swap(p, c);
            b.swap(p, c);
        }
        let (top, rest) = m.split_at_mut(c + 1);
        let pivot_row = &top[c];
        let inv = 1.0 / pivot_row[c];
        for (r, row) in rest[..n - c - 1].iter_mut().enumerate() {
            let f = row[c] * inv;
            if f == 0.0 {
                continue;
            }
            for k in c + 1..n {
                row[k] -= f * pivot_row[k];
            }
            b[c + 1 + r] -= f * b[c];
        }
    }
    for c in (0..n).rev() {
        let s: f64 = (c + 1..n).map(|k| m[c][k] * b[k]).sum();
        b[c] = (b[c] - s) / m[c][c];
    }
    true
}

fn solve_matching(e: &Expansion, pc: &PointCoefficients) -> Result<ReducedStencil> {
    let lay = layout(pc.mode);
    let (a, rhs) = lay.system(e, pc);
    let nc = lay.unknowns.len();
    let scale = max_abs(&a).max(f64::MIN_POSITIVE);

    let mut x = None;
    if lay.square.len() == nc {
        let mut sq = [[0.0; MAX_UNKNOWNS]; MAX_UNKNOWNS];
        let mut b = [0.0; MAX_UNKNOWNS];
        for (r, &src) in lay.square.iter().enumerate() {
            sq[r][..nc].copy_from_slice(&a[src * nc..(src + 1) * nc]);
            b[r] = rhs[src];
        }
        if lu_solve(&mut sq, &mut b[..nc]) {
            let sol = b[..nc].to_vec();
            let res = residual(&a, &rhs, &sol) / scale;
            if res <= MATCH_TOLERANCE {
                x = Some((sol, res));
            }
        }
    }
    let (x, res) = match x {
        Some(x) => x,
        None => {
            let full = DMatrix::from_row_slice(lay.rows.len(), nc, &a);
            let b = DVector::from_column_slice(&rhs);
            let sol = full
                .svd(true, true)
                .solve(&b, 1e-14 * scale)
                .map_err(|e| Error::Singular(e.to_string()))?;
            let sol: Vec<f64> = sol.iter().copied().collect();
            let res = residual(&a, &rhs, &sol) / scale;
            (sol, res)
        }
    };
    if !(res <= MATCH_TOLERANCE) {
        return Err(Error::StencilDerivation {
            i: 0,
            j: 0,
            residual: res,
        });
    }
    let mut c_klp = [[0.0; WEIGHT_DEGREE + 1]; 9];
    for (kl, row) in c_klp.iter_mut().enumerate() {
        row[0] = LEADING[kl];
    }
    for (&(kl, s), v) in lay.unknowns.iter().zip(&x) {
        c_klp[kl][s] = *v;
    }
    Ok(ReducedStencil {
        mode: pc.mode,
        c_klp,
        residual: res,
    })
}

/// Solves the matching conditions at one node.
pub fn derive_reduced(pc: &PointCoefficients) -> Result<ReducedStencil> {
    let e = Expansion::build(&ReductionTable::build(pc));
    solve_matching(&e, pc)
}

fn rhs_from_expansion(e: &Expansion, pc: &PointCoefficients, st: &ReducedStencil) -> f64 {
    // F keeps the powers h^0..h^5 of h^-2 sum_kl C_kl sum psi^(m,n) H_(m,n)(k,l).
    let mut by_power = [0.0; N_T];
    for kl in 0..9 {
        let hk = e.contracted_h(kl, pc);
        for (s, &c) in st.c_klp[kl].iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (j, &v) in hk.iter().enumerate().take(N_T - s) {
                by_power[s + j] += c * v;
            }
        }
    }
    let h = pc.h;
    by_power[2..].iter().rev().fold(0.0, |acc, &v| acc * h + v)
}

/// Right-hand side `F` that pairs with a reduced stencil.
pub fn rhs_value(pc: &PointCoefficients, st: &ReducedStencil) -> f64 {
    let e = Expansion::build(&ReductionTable::build(pc));
    rhs_from_expansion(&e, pc, st)
}

/// Weights and right-hand side in one pass.
pub fn reduced_stencil(pc: &PointCoefficients) -> Result<StencilWeights> {
    let e = Expansion::build(&ReductionTable::build(pc));
    let st = solve_matching(&e, pc)?;
    let rhs = rhs_from_expansion(&e, pc, &st);
    Ok(StencilWeights {
        variant: match pc.mode {
            EquationMode::Steady => StencilVariant::ReducedElliptic,
            EquationMode::Helmholtz => StencilVariant::ReducedHelmholtz,
        },
        h: pc.h,
        weights: st.weights(pc.h),
        rhs,
        match_residual: st.residual,
        c_klp: Some(st.c_klp),
    })
}
