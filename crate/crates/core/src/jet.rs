//! Bivariate truncated Taylor series for exact coefficient derivatives.
//!
//! A [`Jet`] holds `rho^(m,n) / (m! n!)` for `m + n <= 5` at a base point;
//! arithmetic and the elementary functions propagate all of them at once.
//! Case definitions written against [`Real`] can be evaluated on `f64` or on
//! jets from the same source.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::derivatives::{tri_index, tri_pairs};

/// Highest total degree carried.
pub const JET_DEGREE: usize = 5;
pub const JET_LEN: usize = (JET_DEGREE + 1) * (JET_DEGREE + 2) / 2;

const FACT: [f64; 6] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    coef: [f64; JET_LEN],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        let mut coef = [0.0; JET_LEN];
        coef[0] = v;
        Self { coef }
    }

    /// The coordinate `x` at `x0`.
    pub fn var_x(x0: f64) -> Self {
        let mut j = Self::constant(x0);
        j.coef[tri_index(1, 0)] = 1.0;
        j
    }

    /// The coordinate `y` at `y0`.
    pub fn var_y(y0: f64) -> Self {
        let mut j = Self::constant(y0);
        j.coef[tri_index(0, 1)] = 1.0;
        j
    }

    pub fn value(&self) -> f64 {
        self.coef[0]
    }

    /// `rho^(m,n)` at the base point.
    pub fn derivative(&self, m: usize, n: usize) -> f64 {
        self.coef[tri_index(m, n)] * FACT[m] * FACT[n]
    }

    /// All derivatives up to total order 5 in triangular order.
    pub fn derivatives(&self) -> [f64; JET_LEN] {
        let mut out = [0.0; JET_LEN];
        for (m, n) in tri_pairs(JET_DEGREE) {
            out[tri_index(m, n)] = self.derivative(m, n);
        }
        out
    }

    /// `d/dx`; the result is exact up to total order 4.
    pub fn dx(&self) -> Self {
        let mut out = Self::constant(0.0);
        for (m, n) in tri_pairs(JET_DEGREE - 1) {
            out.coef[tri_index(m, n)] = (m + 1) as f64 * self.coef[tri_index(m + 1, n)];
        }
        out
    }

    /// `d/dy`; the result is exact up to total order 4.
    pub fn dy(&self) -> Self {
        let mut out = Self::constant(0.0);
        for (m, n) in tri_pairs(JET_DEGREE - 1) {
            out.coef[tri_index(m, n)] = (n + 1) as f64 * self.coef[tri_index(m, n + 1)];
        }
        out
    }

    /// `g(self)` given `g^(k)(value) / k!` for `k = 0..=5`.
    fn compose(self, g: [f64; JET_DEGREE + 1]) -> Self {
        let mut delta = self;
        delta.coef[0] = 0.0;
        let mut acc = Self::constant(g[JET_DEGREE]);
        for &gk in g[..JET_DEGREE].iter().rev() {
            acc = acc * delta;
            acc.coef[0] += gk;
        }
        acc
    }

    pub fn recip(self) -> Self {
        let inv = 1.0 / self.coef[0];
        let mut g = [0.0; JET_DEGREE + 1];
        let mut p = inv;
        for gk in g.iter_mut() {
            *gk = p;
            p *= -inv;
        }
        self.compose(g)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Jet) -> Jet {
        self.coef.iter_mut().zip(rhs.coef).for_each(|(a, b)| *a += b);
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: Jet) -> Jet {
        self.coef.iter_mut().zip(rhs.coef).for_each(|(a, b)| *a -= b);
        self
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        self.coef.iter_mut().for_each(|a| *a = -*a);
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let mut out = [0.0; JET_LEN];
        for s1 in 0..=JET_DEGREE {
            for n1 in 0..=s1 {
                let a = self.coef[s1 * (s1 + 1) / 2 + n1];
                if a == 0.0 {
                    continue;
                }
                for s2 in 0..=JET_DEGREE - s1 {
                    let s = s1 + s2;
                    let base = s * (s + 1) / 2 + n1;
                    let row = s2 * (s2 + 1) / 2;
                    for n2 in 0..=s2 {
                        out[base + n2] += a * rhs.coef[row + n2];
                    }
                }
            }
        }
        Jet { coef: out }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.coef[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.coef[0] -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, rhs: f64) -> Jet {
        self.coef.iter_mut().for_each(|a| *a *= rhs);
        self
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        self * (1.0 / rhs)
    }
}

/// Scalars the built-in cases are written against.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn tanh(self) -> Self;
}

impl Real for f64 {
    fn sin(self) -> f64 {
        f64::sin(self)
    }
    fn cos(self) -> f64 {
        f64::cos(self)
    }
    fn exp(self) -> f64 {
        f64::exp(self)
    }
    fn tanh(self) -> f64 {
        f64::tanh(self)
    }
}

impl Real for Jet {
    fn sin(self) -> Jet {
        let (s, c) = self.coef[0].sin_cos();
        let d = [s, c, -s, -c];
        self.compose(std::array::from_fn(|k| d[k % 4] / FACT[k]))
    }

    fn cos(self) -> Jet {
        let (s, c) = self.coef[0].sin_cos();
        let d = [c, -s, -c, s];
        self.compose(std::array::from_fn(|k| d[k % 4] / FACT[k]))
    }

    fn exp(self) -> Jet {
        let e = self.coef[0].exp();
        self.compose(std::array::from_fn(|k| e / FACT[k]))
    }

    fn tanh(self) -> Jet {
        // d^k tanh / dx^k = P_k(tanh) with P_0 = T, P_(k+1) = P_k'(T) (1 - T^2).
        let t = self.coef[0].tanh();
        let mut poly = [0.0; JET_DEGREE + 3];
        poly[1] = 1.0;
        let mut g = [0.0; JET_DEGREE + 1];
        for (k, gk) in g.iter_mut().enumerate() {
            *gk = poly.iter().rev().fold(0.0, |acc, &c| acc * t + c) / FACT[k];
            let mut deriv = [0.0; JET_DEGREE + 3];
            for p in 1..poly.len() {
                deriv[p - 1] = p as f64 * poly[p];
            }
            poly = [0.0; JET_DEGREE + 3];
            for (p, &d) in deriv.iter().enumerate() {
                if d != 0.0 {
                    poly[p] += d;
                    poly[p + 2] -= d;
                }
            }
        }
        self.compose(g)
    }
}
