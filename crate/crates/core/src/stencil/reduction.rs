//! Elimination of high x-derivatives through the differentiated equation.
//!
//! Differentiating `u_xx = -u_yy - a u_x - b u_y - d u + psi` repeatedly
//! expresses every `u^(p,q)` with `p >= 2` through the derivatives with
//! `p <= 1` and derivatives of `psi`. With `d = c/h` the coefficients are
//! Laurent polynomials in `h`.

use crate::coefficients::{EquationMode, PointCoefficients};
use crate::derivatives::{tri_index, tri_len};
use crate::error::{Error, Result};

use super::hpoly::HPolynomial;

/// Highest total derivative order handled by the expansion.
pub const EXPANSION_ORDER: usize = 7;
/// Highest total order of `psi` derivatives that can appear.
pub const PSI_ORDER: usize = EXPANSION_ORDER - 2;

/// `u^(m,n)` with `m <= 1`, `m + n <= 7`.
pub(crate) const N_U: usize = 15;
pub(crate) const N_PSI: usize = tri_len(PSI_ORDER);
pub(crate) const N_ATOMS: usize = N_U + N_PSI;
/// Powers of `1/h` a coefficient can carry (`d^3` at most).
pub(crate) const N_D: usize = 4;

pub(crate) type Row = [[f64; N_D]; N_ATOMS];
const ZERO_ROW: Row = [[0.0; N_D]; N_ATOMS];

#[inline]
pub(crate) fn u_atom(m: usize, n: usize) -> usize {
    debug_assert!(m <= 1 && m + n <= EXPANSION_ORDER);
    if m == 0 {
        n
    } else {
        8 + n
    }
}

#[inline]
pub(crate) fn psi_atom(m: usize, n: usize) -> usize {
    N_U + tri_index(m, n)
}

/// The `(m, n)` with `m <= 1` and `m + n <= 7`, in atom order.
pub fn lower_pairs() -> impl Iterator<Item = (usize, usize)> {
    (0..=7).map(|n| (0, n)).chain((0..=6).map(|n| (1, n)))
}

/// The `(p, q)` with `p >= 2` and `p + q <= 7`.
pub fn upper_pairs() -> impl Iterator<Item = (usize, usize)> {
    (2..=EXPANSION_ORDER).flat_map(|s| (2..=s).map(move |p| (p, s - p)))
}

pub(crate) const BINOM: [[f64; 8]; 8] = {
    let mut t = [[0.0; 8]; 8];
    let mut n = 0;
    while n < 8 {
        t[n][0] = 1.0;
        let mut k = 1;
        while k <= n {
            t[n][k] = t[n - 1][k - 1] + if k < n { t[n - 1][k] } else { 0.0 };
            k += 1;
        }
        n += 1;
    }
    t
};

/// Atoms that can be nonzero in the reduction of a derivative of total
/// order `s`: `u^(0,n)` with `n <= s`, `u^(1,n)` with `n < s`, and `psi`
/// derivatives of order up to `s - 2`.
#[inline]
pub(crate) fn atom_ranges(s: usize) -> [std::ops::Range<usize>; 3] {
    let psi_len = if s >= 2 { tri_len(s - 2) } else { 0 };
    [0..s.min(7) + 1, 8..8 + s.min(7), N_U..N_U + psi_len]
}

/// Position of `(p, q)`, `p >= 2`, in build order (total order, then `p`).
#[inline]
const fn upper_index(p: usize, q: usize) -> usize {
    let s = p + q;
    (s - 2) * (s - 1) / 2 + p - 2
}

const N_UPPER: usize = upper_index(EXPANSION_ORDER, 0) + 1;

/// All reductions at one node. Row `(p,q)` holds, for every atom, the
/// coefficients of `h^0, h^-1, h^-2, h^-3`.
pub(crate) struct ReductionTable {
    rows: Vec<Row>,
    pub(crate) depth: usize,
}

impl ReductionTable {
    pub(crate) fn build(pc: &PointCoefficients) -> Self {
        let helmholtz = pc.mode == EquationMode::Helmholtz;
        let depth = if helmholtz { N_D } else { 1 };
        let mut rows = vec![ZERO_ROW; N_UPPER];
        for (p, q) in upper_pairs() {
            // Every row referenced below precedes (p, q) in build order.
            let (done, rest) = rows.split_at_mut(upper_index(p, q));
            let row = &mut rest[0];
            let (m, n) = (p - 2, q);
            add_ref(done, depth, row, -1.0, m, n + 2, 0);
            for i in 0..=m {
                for j in 0..=n {
                    let w = BINOM[m][i] * BINOM[n][j];
                    let k = tri_index(m - i, n - j);
                    let av = pc.a[k];
                    if av != 0.0 {
                        add_ref(done, depth, row, -w * av, i + 1, j, 0);
                    }
                    let bv = pc.b[k];
                    if bv != 0.0 {
                        add_ref(done, depth, row, -w * bv, i, j + 1, 0);
                    }
                    if helmholtz {
                        let cv = pc.c[k];
                        if cv != 0.0 {
                            add_ref(done, depth, row, -w * cv, i, j, 1);
                        }
                    }
                }
            }
            row[psi_atom(m, n)][0] += 1.0;
        }
        Self { rows, depth }
    }

    #[inline]
    pub(crate) fn row(&self, p: usize, q: usize) -> &Row {
        &self.rows[upper_index(p, q)]
    }
}

/// `row += coef * h^-shift * u^(x,y)` with `u^(x,y)` replaced by its reduction.
#[inline]
fn add_ref(done: &[Row], depth: usize, row: &mut Row, coef: f64, x: usize, y: usize, shift: usize) {
    if x <= 1 {
        row[u_atom(x, y)][shift] += coef;
        return;
    }
    let src = &done[upper_index(x, y)];
    let top = depth - shift;
    for range in atom_ranges(x + y) {
        for (dst, s) in row[range.clone()].iter_mut().zip(&src[range]) {
            for e in 0..top {
                dst[e + shift] += coef * s[e];
            }
        }
    }
}

/// Reduction of one derivative `u^(p,q)`:
/// `u^(p,q) = sum xi_(m,n) u^(m,n) + sum eta_(m,n) psi^(m,n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionRow {
    pub p: usize,
    pub q: usize,
    /// Coefficients of `u^(m,n)`, `m <= 1`, in atom order.
    pub xi: Vec<((usize, usize), HPolynomial)>,
    /// Coefficients of `psi^(m,n)`, `m + n <= 5`.
    pub eta: Vec<((usize, usize), HPolynomial)>,
}

impl ReductionRow {
    /// Value of the right-hand side for given derivative values.
    pub fn evaluate(
        &self,
        h: f64,
        u: impl Fn(usize, usize) -> f64,
        psi: impl Fn(usize, usize) -> f64,
    ) -> f64 {
        let a: f64 = self.xi.iter().map(|((m, n), c)| c.eval(h) * u(*m, *n)).sum();
        let b: f64 = self.eta.iter().map(|((m, n), c)| c.eval(h) * psi(*m, *n)).sum();
        a + b
    }
}

fn to_poly(coefs: &[f64; N_D]) -> HPolynomial {
    let mut p = HPolynomial::zero();
    for (e, &v) in coefs.iter().enumerate() {
        p.add_term(-(e as i32), v);
    }
    p
}

/// Reduces `u^(p,q)` for `p >= 2`, `p + q <= cap <= 7`.
pub fn reduce_derivative(
    pc: &PointCoefficients,
    p: usize,
    q: usize,
    cap: usize,
) -> Result<ReductionRow> {
    let cap_ok = cap <= EXPANSION_ORDER;
    if !cap_ok || p < 2 || p + q > cap {
        return Err(Error::ReductionRange {
            p,
            q,
            cap: cap.min(EXPANSION_ORDER),
        });
    }
    let table = ReductionTable::build(pc);
    let row = table.row(p, q);
    let xi = lower_pairs()
        .map(|(m, n)| ((m, n), to_poly(&row[u_atom(m, n)])))
        .collect();
    let eta = crate::derivatives::tri_pairs(PSI_ORDER)
        .map(|(m, n)| ((m, n), to_poly(&row[psi_atom(m, n)])))
        .collect();
    Ok(ReductionRow { p, q, xi, eta })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_sets_have_the_expected_sizes() {
        assert_eq!(lower_pairs().count(), 15);
        assert_eq!(upper_pairs().count(), 21);
        for (k, (m, n)) in lower_pairs().enumerate() {
            assert_eq!(u_atom(m, n), k);
        }
        for (k, (p, q)) in upper_pairs().enumerate() {
            assert_eq!(upper_index(p, q), k);
        }
        assert_eq!(BINOM[5][2], 10.0);
        assert_eq!(BINOM[7][3], 35.0);
    }

    #[test]
    fn second_derivative_is_the_equation_itself() {
        let pc = PointCoefficients::constant(EquationMode::Steady, 0.1, 2.0, 3.0, 0.0, 0.0);
        let r = reduce_derivative(&pc, 2, 0, 7).unwrap();
        let get = |m, n| r.xi.iter().find(|(k, _)| *k == (m, n)).unwrap().1.coeff(0);
        assert_eq!(get(0, 2), -1.0);
        assert_eq!(get(1, 0), -2.0);
        assert_eq!(get(0, 1), -3.0);
        assert_eq!(r.eta[0].1.coeff(0), 1.0);
    }

    #[test]
    fn out_of_range_requests_fail() {
        let pc = PointCoefficients::zero(EquationMode::Steady, 0.1);
        for (p, q, cap) in [(1, 3, 7), (2, 6, 7), (3, 3, 5), (2, 0, 8)] {
            assert!(matches!(
                reduce_derivative(&pc, p, q, cap),
                Err(Error::ReductionRange { .. })
            ));
        }
    }
}
