//! Laurent polynomials in the mesh size `h` over a fixed window of powers.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// Lowest power of `h` that can be stored.
pub const H_MIN_POWER: i32 = -4;
/// Highest power of `h` that can be stored.
pub const H_MAX_POWER: i32 = 8;
const LEN: usize = (H_MAX_POWER - H_MIN_POWER + 1) as usize;

/// `sum_p c_p h^p` for `H_MIN_POWER <= p <= H_MAX_POWER`.
///
/// Products that produce powers outside the window drop them and set the
/// `truncated` flag when a dropped coefficient was nonzero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HPolynomial {
    coeffs: [f64; LEN],
    truncated: bool,
}

impl Default for HPolynomial {
    fn default() -> Self {
        Self::zero()
    }
}

impl HPolynomial {
    pub const fn zero() -> Self {
        Self {
            coeffs: [0.0; LEN],
            truncated: false,
        }
    }

    pub fn constant(v: f64) -> Self {
        Self::monomial(0, v)
    }

    pub fn monomial(power: i32, v: f64) -> Self {
        let mut p = Self::zero();
        p.add_term(power, v);
        p
    }

    /// Adds `v h^power`, flagging truncation when the power is out of range.
    pub fn add_term(&mut self, power: i32, v: f64) {
        match Self::slot(power) {
            Some(k) => self.coeffs[k] += v,
            None => self.truncated |= v != 0.0,
        }
    }

    fn slot(power: i32) -> Option<usize> {
        (H_MIN_POWER..=H_MAX_POWER)
            .contains(&power)
            .then(|| (power - H_MIN_POWER) as usize)
    }

    /// Coefficient of `h^power`; zero outside the window.
    pub fn coeff(&self, power: i32) -> f64 {
        Self::slot(power).map_or(0.0, |k| self.coeffs[k])
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Lowest power with a nonzero coefficient.
    pub fn min_power(&self) -> Option<i32> {
        self.terms().next().map(|(p, _)| p)
    }

    /// Highest power with a nonzero coefficient.
    pub fn max_power(&self) -> Option<i32> {
        self.terms().last().map(|(p, _)| p)
    }

    /// Nonzero `(power, coefficient)` pairs in increasing power.
    pub fn terms(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(k, &c)| (k as i32 + H_MIN_POWER, c))
    }

    pub fn eval(&self, h: f64) -> f64 {
        // Horner on h and on 1/h separately keeps negative powers accurate.
        let pos: f64 = (0..=H_MAX_POWER)
            .rev()
            .fold(0.0, |acc, p| acc * h + self.coeff(p));
        let inv = 1.0 / h;
        let neg: f64 = (H_MIN_POWER..0).fold(0.0, |acc, p| (acc + self.coeff(p)) * inv);
        pos + neg
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        out.coeffs.iter_mut().for_each(|c| *c *= s);
        out
    }

    /// Keeps only the powers `<= max`.
    pub fn truncate_above(&self, max: i32) -> Self {
        let mut out = *self;
        for p in (max + 1)..=H_MAX_POWER {
            if let Some(k) = Self::slot(p) {
                out.coeffs[k] = 0.0;
            }
        }
        out
    }
}

impl Add for HPolynomial {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl AddAssign for HPolynomial {
    fn add_assign(&mut self, rhs: Self) {
        for (a, b) in self.coeffs.iter_mut().zip(rhs.coeffs) {
            *a += b;
        }
        self.truncated |= rhs.truncated;
    }
}

impl Sub for HPolynomial {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for HPolynomial {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul<f64> for HPolynomial {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.scale(rhs)
    }
}

impl Mul for HPolynomial {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zero();
        out.truncated = self.truncated || rhs.truncated;
        for (p, a) in self.terms() {
            for (q, b) in rhs.terms() {
                out.add_term(p + q, a * b);
            }
        }
        out
    }
}
