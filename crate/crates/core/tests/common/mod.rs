//! Test oracles shared by the integration tests and the acceptance target.
#![allow(dead_code)]

use compact9::coefficients::{EquationMode, PointCoefficients};
use compact9::derivatives::{tri_index, tri_pairs};
use compact9::stencil::reduce_derivative;

/// Highest total degree kept in [`Poly`].
pub const DEG: usize = 10;

const FACT: [f64; DEG + 1] = {
    let mut f = [1.0; DEG + 1];
    let mut k = 1;
    while k <= DEG {
        f[k] = f[k - 1] * k as f64;
        k += 1;
    }
    f
};

/// Bivariate polynomial `sum c[i][j] x^i y^j`. Products drop terms above
/// total degree `DEG`, so every derivative of order `<= DEG` at the origin
/// stays exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Poly {
    pub c: [[f64; DEG + 1]; DEG + 1],
}

impl Poly {
    pub fn zero() -> Self {
        Self {
            c: [[0.0; DEG + 1]; DEG + 1],
        }
    }

    pub fn constant(v: f64) -> Self {
        let mut p = Self::zero();
        p.c[0][0] = v;
        p
    }

    /// Coefficients from `next()` up to total degree `deg`.
    pub fn from_fn(deg: usize, mut next: impl FnMut() -> f64) -> Self {
        let mut p = Self::zero();
        for s in 0..=deg.min(DEG) {
            for i in 0..=s {
                p.c[i][s - i] = next();
            }
        }
        p
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut p = *self;
        for i in 0..=DEG {
            for j in 0..=DEG - i {
                p.c[i][j] += o.c[i][j];
            }
        }
        p
    }

    pub fn scale(&self, s: f64) -> Poly {
        let mut p = *self;
        p.c.iter_mut().flatten().for_each(|v| *v *= s);
        p
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut p = Poly::zero();
        for i1 in 0..=DEG {
            for j1 in 0..=DEG - i1 {
                let v = self.c[i1][j1];
                if v == 0.0 {
                    continue;
                }
                for i2 in 0..=DEG - i1 - j1 {
                    for j2 in 0..=DEG - i1 - j1 - i2 {
                        p.c[i1 + i2][j1 + j2] += v * o.c[i2][j2];
                    }
                }
            }
        }
        p
    }

    pub fn dx(&self) -> Poly {
        let mut p = Poly::zero();
        for i in 1..=DEG {
            for j in 0..=DEG - i {
                p.c[i - 1][j] = i as f64 * self.c[i][j];
            }
        }
        p
    }

    pub fn dy(&self) -> Poly {
        let mut p = Poly::zero();
        for i in 0..=DEG {
            for j in 1..=DEG - i {
                p.c[i][j - 1] = j as f64 * self.c[i][j];
            }
        }
        p
    }

    /// `p^(m,n)` at the origin.
    pub fn deriv(&self, m: usize, n: usize) -> f64 {
        if m + n > DEG {
            return 0.0;
        }
        self.c[m][n] * FACT[m] * FACT[n]
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let mut out = 0.0;
        for i in (0..=DEG).rev() {
            let mut row = 0.0;
            for j in (0..=DEG - i).rev() {
                row = row * y + self.c[i][j];
            }
            out = out * x + row;
        }
        out
    }
}

/// A smooth instance of the linearized equation around the origin:
/// `lap u + a u_x + b u_y + (c/h) u = psi`.
#[derive(Debug, Clone)]
pub struct PolyProblem {
    pub mode: EquationMode,
    pub h: f64,
    pub a: Poly,
    pub b: Poly,
    pub c: Poly,
    pub u: Poly,
    pub psi: Poly,
}

impl PolyProblem {
    pub fn new(mode: EquationMode, h: f64, a: Poly, b: Poly, c: Poly, u: Poly) -> Self {
        let c = match mode {
            EquationMode::Steady => Poly::zero(),
            EquationMode::Helmholtz => c,
        };
        let lap = u.dx().dx().add(&u.dy().dy());
        let psi = lap
            .add(&a.mul(&u.dx()))
            .add(&b.mul(&u.dy()))
            .add(&c.mul(&u).scale(1.0 / h));
        Self {
            mode,
            h,
            a,
            b,
            c,
            u,
            psi,
        }
    }

    /// Derivatives at the origin in the layout the stencils consume.
    pub fn point(&self) -> PointCoefficients {
        let mut pc = PointCoefficients::zero(self.mode, self.h);
        for (m, n) in tri_pairs(5) {
            let k = tri_index(m, n);
            pc.a[k] = self.a.deriv(m, n);
            pc.b[k] = self.b.deriv(m, n);
            pc.c[k] = self.c.deriv(m, n);
            pc.psi[k] = self.psi.deriv(m, n);
        }
        pc
    }
}

/// Deterministic generator in `[-1, 1)`.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6_364_136_223_846_793_005)
            .wrapping_add(1_442_695_040_888_963_407);
        ((self.0 >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }
}

/// Random problem with coefficients of degree 5 and a solution of degree `DEG`.
pub fn random_problem(mode: EquationMode, h: f64, seed: u64) -> PolyProblem {
    let mut g = Lcg(seed);
    let a = Poly::from_fn(5, || g.next());
    let b = Poly::from_fn(5, || g.next());
    let c = Poly::from_fn(5, || g.next());
    let u = Poly::from_fn(DEG, || g.next());
    PolyProblem::new(mode, h, a, b, c, u)
}

/// Largest relative gap between `u^(p,q)` and its reduction, over all
/// `p >= 2`, `p + q <= 7`.
pub fn reduction_identity_gap(prob: &PolyProblem) -> f64 {
    let pc = prob.point();
    let mut worst = 0.0_f64;
    for s in 2..=7 {
        for p in 2..=s {
            let q = s - p;
            let row = reduce_derivative(&pc, p, q, 7).expect("in range");
            let got = row.evaluate(prob.h, |m, n| prob.u.deriv(m, n), |m, n| prob.psi.deriv(m, n));
            let want = prob.u.deriv(p, q);
            let scale = row
                .xi
                .iter()
                .map(|((m, n), c)| (c.eval(prob.h) * prob.u.deriv(*m, *n)).abs())
                .chain(row.eta.iter().map(|((m, n), c)| (c.eval(prob.h) * prob.psi.deriv(*m, *n)).abs()))
                .fold(want.abs(), f64::max)
                .max(1.0);
            worst = worst.max((got - want).abs() / scale);
        }
    }
    worst
}

/// `h^-2 sum C u(kh, lh) - F` for a stencil built at the origin.
pub fn stencil_residual(prob: &PolyProblem, st: &compact9::stencil::StencilWeights) -> f64 {
    let h = st.h;
    let u0 = prob.u.eval(0.0, 0.0);
    let total: f64 = compact9::stencil::NEIGHBORS.iter().map(|&(k, l)| st.weight(k, l)).sum();
    let spread = st.apply(|k, l| prob.u.eval(k as f64 * h, l as f64 * h) - u0);
    (spread + total * u0) / (h * h) - st.rhs
}

/// The same problem with its step set to `h`.
pub fn with_h(prob: &PolyProblem, h: f64) -> PolyProblem {
    PolyProblem::new(prob.mode, h, prob.a, prob.b, prob.c, prob.u)
}

/// `kappa = 1`, no flux, and `u` given in both forms.
pub fn poisson_case(
    name: &str,
    kind: compact9::cases::CaseKind,
    u: compact9::cases::SpaceTimeFn,
    u_jet: compact9::cases::JetFn,
    f: compact9::cases::SpaceTimeFn,
    f_jet: compact9::cases::JetFn,
) -> compact9::cases::ManufacturedCase {
    use std::sync::Arc;
    compact9::cases::ManufacturedCase {
        name: name.into(),
        kind,
        kappa: Arc::new(|_, _, _| 1.0),
        flux: compact9::cases::FluxSpec::zero(),
        exact_u: u,
        source_f: f,
        analytic: Some(compact9::cases::AnalyticFields {
            kappa: Arc::new(|x: compact9::jet::Jet, _, _| x * 0.0 + 1.0),
            source_f: f_jet,
            exact_u: u_jet,
        }),
    }
}

/// Harmonic `u = x + y`, no source.
pub fn linear_case(kind: compact9::cases::CaseKind) -> compact9::cases::ManufacturedCase {
    use std::sync::Arc;
    poisson_case(
        "linear",
        kind,
        Arc::new(|x, y, _| x + y),
        Arc::new(|x, y, _| x + y),
        Arc::new(|_, _, _| 0.0),
        Arc::new(|x, _, _| x * 0.0),
    )
}

/// `u = x^3 + x y^2 - 2 y^3 + x y`, so `f = -lap u = 12 y - 8 x`.
pub fn cubic_case() -> compact9::cases::ManufacturedCase {
    use std::sync::Arc;
    poisson_case(
        "cubic",
        compact9::cases::CaseKind::Steady,
        Arc::new(|x, y, _| x * x * x + x * y * y - 2.0 * y * y * y + x * y),
        Arc::new(|x, y, _| x * x * x + x * y * y - y * y * y * 2.0 + x * y),
        Arc::new(|x, y, _| 12.0 * y - 8.0 * x),
        Arc::new(|x, y, _| y * 12.0 - x * 8.0),
    )
}
