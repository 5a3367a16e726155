//! Taylor expansions of `u(x_i + kh, y_j + lh)` in the reduced derivative basis.
//!
//! After every `u^(p,q)` with `p >= 2` is replaced by its reduction,
//! `u(kh, lh) = sum_(m<=1) u^(m,n) G_(m,n)(k,l) + sum psi^(m,n) H_(m,n)(k,l)`,
//! truncated after `h^7`.

use crate::coefficients::PointCoefficients;
use crate::derivatives::tri_pairs;

use super::hpoly::HPolynomial;
use super::reduction::{
    atom_ranges, lower_pairs, psi_atom, u_atom, upper_pairs, ReductionTable, N_ATOMS,
    PSI_ORDER,
};

/// Number of `h` powers kept: `h^0 ..= h^7`.
pub(crate) const N_T: usize = 8;

/// Neighbor offsets in storage order: `k` outer, `l` inner.
pub const NEIGHBORS: [(i32, i32); 9] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 0),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

#[inline]
pub(crate) fn neighbor_index(k: i32, l: i32) -> usize {
    ((k + 1) * 3 + (l + 1)) as usize
}

const INV_FACT: [f64; 8] = [
    1.0,
    1.0,
    0.5,
    1.0 / 6.0,
    1.0 / 24.0,
    1.0 / 120.0,
    1.0 / 720.0,
    1.0 / 5040.0,
];

/// `k^p l^q / (p! q!)` for `k, l` in `{-1, 0, 1}`.
#[inline]
fn monomial(k: i32, l: i32, p: usize, q: usize) -> f64 {
    let pw = |v: i32, e: usize| match (v, e) {
        (_, 0) => 1.0,
        (0, _) => 0.0,
        (1, _) => 1.0,
        _ => {
            if e % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        }
    };
    pw(k, p) * pw(l, q) * INV_FACT[p] * INV_FACT[q]
}

/// Per-neighbor, per-atom coefficients of `h^0 ..= h^7`.
pub(crate) struct Expansion {
    pub(crate) table: [[[f64; N_T]; N_ATOMS]; 9],
}

impl Expansion {
    pub(crate) fn build(red: &ReductionTable) -> Self {
        let mut table = [[[0.0; N_T]; N_ATOMS]; 9];
        for (kl, &(k, l)) in NEIGHBORS.iter().enumerate() {
            let t = &mut table[kl];
            for (m, n) in lower_pairs() {
                t[u_atom(m, n)][m + n] += monomial(k, l, m, n);
            }
            for (p, q) in upper_pairs() {
                let mono = monomial(k, l, p, q);
                if mono == 0.0 {
                    continue;
                }
                let row = red.row(p, q);
                for range in atom_ranges(p + q) {
                    for atom in range {
                        for (e, &v) in row[atom].iter().enumerate().take(red.depth.min(p + q + 1)) {
                            // Reductions carry at most one 1/h per two derivatives,
                            // so p + q - e is never negative.
                            t[atom][p + q - e] += v * mono;
                        }
                    }
                }
            }
        }
        Self { table }
    }

    #[inline]
    pub(crate) fn g(&self, kl: usize, m: usize, n: usize) -> &[f64; N_T] {
        &self.table[kl][u_atom(m, n)]
    }

    /// `sum_(m,n) psi^(m,n) H_(m,n)` for one neighbor.
    pub(crate) fn contracted_h(&self, kl: usize, pc: &PointCoefficients) -> [f64; N_T] {
        let mut out = [0.0; N_T];
        for (m, n) in tri_pairs(PSI_ORDER) {
            let w = pc.psi(m, n);
            if w == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(&self.table[kl][psi_atom(m, n)]) {
                *o += w * v;
            }
        }
        out
    }
}

/// Expansion tables for inspection.
#[derive(Debug, Clone)]
pub struct TaylorTables {
    g: Vec<[HPolynomial; 9]>,
    h: Vec<[HPolynomial; 9]>,
}

fn poly(coefs: &[f64; N_T]) -> HPolynomial {
    let mut p = HPolynomial::zero();
    for (t, &v) in coefs.iter().enumerate() {
        p.add_term(t as i32, v);
    }
    p
}

impl TaylorTables {
    /// Coefficient of `u^(m,n)` (`m <= 1`, `m + n <= 7`) in `u(kh, lh)`.
    pub fn g(&self, m: usize, n: usize, k: i32, l: i32) -> HPolynomial {
        self.g[u_atom(m, n)][neighbor_index(k, l)]
    }

    /// Coefficient of `psi^(m,n)` (`m + n <= 5`) in `u(kh, lh)`.
    pub fn h(&self, m: usize, n: usize, k: i32, l: i32) -> HPolynomial {
        self.h[crate::derivatives::tri_index(m, n)][neighbor_index(k, l)]
    }
}

pub fn taylor_tables(pc: &PointCoefficients) -> TaylorTables {
    let e = Expansion::build(&ReductionTable::build(pc));
    let collect = |atom: usize| -> [HPolynomial; 9] {
        std::array::from_fn(|kl| poly(&e.table[kl][atom]))
    };
    TaylorTables {
        g: lower_pairs().map(|(m, n)| collect(u_atom(m, n))).collect(),
        h: tri_pairs(PSI_ORDER).map(|(m, n)| collect(psi_atom(m, n))).collect(),
    }
}
