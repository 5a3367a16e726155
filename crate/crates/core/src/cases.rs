//! Problem definitions: coefficients, flux, manufactured solutions and a registry.
//!
//! The model equation is `u_t - div(kappa grad u) + alpha(u)_x + beta(u)_y = f`
//! on the unit square with Dirichlet data `g`. Steady cases drop `u_t`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::jet::{Jet, Real};

/// Function of `(x, y, t)`.
pub type SpaceTimeFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
/// Function of `u`.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// Function of jet-valued `(x, y)` and time.
pub type JetFn = Arc<dyn Fn(Jet, Jet, f64) -> Jet + Send + Sync>;

/// Nonlinear flux `F(u) = (alpha(u), beta(u))` with its derivatives.
#[derive(Clone)]
pub struct FluxSpec {
    pub alpha: ScalarFn,
    pub beta: ScalarFn,
    pub alpha_u: ScalarFn,
    pub beta_u: ScalarFn,
}

impl FluxSpec {
    pub fn zero() -> Self {
        let z: ScalarFn = Arc::new(|_| 0.0);
        Self {
            alpha: z.clone(),
            beta: z.clone(),
            alpha_u: z.clone(),
            beta_u: z,
        }
    }

    /// `alpha = beta = u^2 / 2`.
    pub fn burgers() -> Self {
        let half_sq: ScalarFn = Arc::new(|u| 0.5 * u * u);
        let id: ScalarFn = Arc::new(|u| u);
        Self {
            alpha: half_sq.clone(),
            beta: half_sq,
            alpha_u: id.clone(),
            beta_u: id,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseKind {
    Steady,
    Transient,
}

impl CaseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseKind::Steady => "steady",
            CaseKind::Transient => "transient",
        }
    }
}

/// A problem with a known exact solution. The boundary data and, for
/// transient cases, the initial condition are the exact solution itself.
#[derive(Clone)]
pub struct ManufacturedCase {
    pub name: String,
    pub kind: CaseKind,
    pub kappa: SpaceTimeFn,
    pub flux: FluxSpec,
    pub exact_u: SpaceTimeFn,
    pub source_f: SpaceTimeFn,
    /// Jet forms of `kappa` and `f`; when present, their derivatives enter
    /// the coefficients exactly instead of through grid differencing.
    pub analytic: Option<AnalyticFields>,
}

impl fmt::Debug for ManufacturedCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManufacturedCase")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .finish_non_exhaustive()
    }
}

impl ManufacturedCase {
    /// Dirichlet data; the same function object as the exact solution.
    pub fn boundary_g(&self) -> SpaceTimeFn {
        self.exact_u.clone()
    }

    pub fn initial_u0(&self, grid: GridSpec) -> Result<ScalarField> {
        sample_scalar(self.exact_u.as_ref(), grid, 0.0)
    }

    pub fn is_steady(&self) -> bool {
        self.kind == CaseKind::Steady
    }
}

/// Samples `f(x_i, y_j, t)` at every node.
pub fn sample_scalar(
    f: &(dyn Fn(f64, f64, f64) -> f64 + Send + Sync),
    grid: GridSpec,
    t: f64,
) -> Result<ScalarField> {
    let field = ScalarField::from_fn(grid, |i, j| f(grid.coord(i), grid.coord(j), t));
    check_finite(&field)?;
    Ok(field)
}

pub(crate) fn check_finite(field: &ScalarField) -> Result<()> {
    let g = field.grid();
    for j in 0..g.side() {
        for i in 0..g.side() {
            let v = field.get(i, j);
            if !v.is_finite() {
                return Err(Error::NonFiniteSample { i, j, value: v });
            }
        }
    }
    Ok(())
}

/// Named collection of cases.
#[derive(Debug, Clone, Default)]
pub struct CaseRegistry {
    cases: BTreeMap<String, ManufacturedCase>,
}

impl CaseRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Registry holding `example1` to `example4`.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        for c in [example1(), example2(), example3(), example4()] {
            r.register(c);
        }
        r
    }

    /// Adds or replaces a case under its own name.
    pub fn register(&mut self, case: ManufacturedCase) {
        self.cases.insert(case.name.clone(), case);
    }

    pub fn get(&self, name: &str) -> Result<&ManufacturedCase> {
        self.cases.get(name).ok_or_else(|| Error::UnknownCase {
            name: name.to_string(),
            registered: self.names(),
        })
    }

    pub fn names(&self) -> Vec<String> {
        self.cases.keys().cloned().collect()
    }
}

/// Looks a case up in the built-in registry.
pub fn lookup_case(name: &str) -> Result<ManufacturedCase> {
    CaseRegistry::builtin().get(name).cloned()
}

/// Jet-valued `kappa`, `f` and `u` for exact derivatives.
#[derive(Clone)]
pub struct AnalyticFields {
    pub kappa: JetFn,
    pub source_f: JetFn,
    pub exact_u: JetFn,
}

/// Builds the `f64` and jet forms of a generic `(x, y, t)` function.
macro_rules! both_forms {
    ($f:path) => {
        (
            Arc::new(|x: f64, y: f64, t: f64| $f(x, y, t)) as SpaceTimeFn,
            Arc::new(|x: Jet, y: Jet, t: f64| $f(x, y, t)) as JetFn,
        )
    };
}

fn ex1_u<T: Real>(x: T, y: T, _t: f64) -> T {
    (x * 3.0).sin() * (y * 7.0).cos()
}

fn ex1_kappa<T: Real>(x: T, y: T, _t: f64) -> T {
    (x * 5.0 - y * 2.0).sin() + 2.0
}

fn ex1_f<T: Real>(x: T, y: T, t: f64) -> T {
    let u = ex1_u(x, y, t);
    let ux = (x * 3.0).cos() * (y * 7.0).cos() * 3.0;
    let uy = (x * 3.0).sin() * (y * 7.0).sin() * -7.0;
    let k = ex1_kappa(x, y, t);
    let kc = (x * 5.0 - y * 2.0).cos();
    // -k lap u - k_x u_x - k_y u_y + alpha'(u) u_x + beta'(u) u_y, lap u = -58 u
    k * u * 58.0 - kc * ux * 5.0 + kc * uy * 2.0 - u.sin() * ux + u.cos() * uy
}

/// Steady case with `u = sin 3x cos 7y`, `kappa = 2 + sin(5x - 2y)`,
/// `alpha = cos u`, `beta = sin u`.
pub fn example1() -> ManufacturedCase {
    let (kappa, kappa_jet) = both_forms!(ex1_kappa);
    let (source_f, source_jet) = both_forms!(ex1_f);
    let (exact_u, u_jet) = both_forms!(ex1_u);
    ManufacturedCase {
        name: "example1".into(),
        kind: CaseKind::Steady,
        kappa,
        flux: FluxSpec {
            alpha: Arc::new(f64::cos),
            beta: Arc::new(f64::sin),
            alpha_u: Arc::new(|u: f64| -u.sin()),
            beta_u: Arc::new(f64::cos),
        },
        exact_u,
        source_f,
        analytic: Some(AnalyticFields {
            kappa: kappa_jet,
            source_f: source_jet,
            exact_u: u_jet,
        }),
    }
}

const LAYER_KAPPA: f64 = 0.1;

/// `s tanh((1 - s)/k)` and its first two derivatives.
fn layer_profile<T: Real>(s: T) -> (T, T, T) {
    let k = LAYER_KAPPA;
    let t = ((-s + 1.0) / k).tanh();
    let t1 = -(-(t * t) + 1.0) / k;
    let t2 = t * t1 * (2.0 / k);
    (s * t, t + s * t1, t1 * 2.0 + s * t2)
}

fn ex2_u<T: Real>(x: T, y: T, _t: f64) -> T {
    layer_profile(x).0 * layer_profile(y).0
}

fn layer_kappa<T: Real>(x: T, _y: T, _t: f64) -> T {
    x * 0.0 + LAYER_KAPPA
}

fn ex2_f<T: Real>(x: T, y: T, _t: f64) -> T {
    let (sx, sx1, sx2) = layer_profile(x);
    let (sy, sy1, sy2) = layer_profile(y);
    let u = sx * sy;
    -(sx2 * sy + sx * sy2) * LAYER_KAPPA + u * (sx1 * sy + sx * sy1)
}

/// Steady boundary-layer case: `u = xy tanh((1-x)/k) tanh((1-y)/k)`,
/// `kappa = k = 0.1`, `alpha = beta = u^2/2`.
pub fn example2() -> ManufacturedCase {
    let (kappa, kappa_jet) = both_forms!(layer_kappa);
    let (source_f, source_jet) = both_forms!(ex2_f);
    let (exact_u, u_jet) = both_forms!(ex2_u);
    ManufacturedCase {
        name: "example2".into(),
        kind: CaseKind::Steady,
        kappa,
        flux: FluxSpec::burgers(),
        exact_u,
        source_f,
        analytic: Some(AnalyticFields {
            kappa: kappa_jet,
            source_f: source_jet,
            exact_u: u_jet,
        }),
    }
}

fn ex3_u<T: Real>(x: T, y: T, t: f64) -> T {
    (x * 2.0 - y).cos() * (3.0 * t).sin()
}

fn ex3_kappa<T: Real>(x: T, y: T, t: f64) -> T {
    (x + y * 3.0 + t).cos() + 3.0
}

fn ex3_f<T: Real>(x: T, y: T, t: f64) -> T {
    let st = (3.0 * t).sin();
    let u = ex3_u(x, y, t);
    let ut = (x * 2.0 - y).cos() * (3.0 * (3.0 * t).cos());
    let ux = (x * 2.0 - y).sin() * (-2.0 * st);
    let uy = (x * 2.0 - y).sin() * st;
    let k = ex3_kappa(x, y, t);
    let ks = (x + y * 3.0 + t).sin();
    // lap u = -5 u, k_x = -ks, k_y = -3 ks, alpha' = -u^2, beta' = cos u
    ut + k * u * 5.0 + ks * ux + ks * uy * 3.0 - u * u * ux + u.cos() * uy
}

/// Transient case: `u = sin 3t cos(2x - y)`, `kappa = 3 + cos(x + 3y + t)`,
/// `alpha = -u^3/3`, `beta = sin u`.
pub fn example3() -> ManufacturedCase {
    let (kappa, kappa_jet) = both_forms!(ex3_kappa);
    let (source_f, source_jet) = both_forms!(ex3_f);
    let (exact_u, u_jet) = both_forms!(ex3_u);
    ManufacturedCase {
        name: "example3".into(),
        kind: CaseKind::Transient,
        kappa,
        flux: FluxSpec {
            alpha: Arc::new(|u: f64| -u * u * u / 3.0),
            beta: Arc::new(f64::sin),
            alpha_u: Arc::new(|u: f64| -u * u),
            beta_u: Arc::new(f64::cos),
        },
        exact_u,
        source_f,
        analytic: Some(AnalyticFields {
            kappa: kappa_jet,
            source_f: source_jet,
            exact_u: u_jet,
        }),
    }
}

fn ex4_u<T: Real>(x: T, y: T, t: f64) -> T {
    ex2_u(x, y, t) * t.exp_m1()
}

fn ex4_f<T: Real>(x: T, y: T, t: f64) -> T {
    let (sx, sx1, sx2) = layer_profile(x);
    let (sy, sy1, sy2) = layer_profile(y);
    let e = t.exp_m1();
    let u = sx * sy * e;
    sx * sy * t.exp() - (sx2 * sy + sx * sy2) * (LAYER_KAPPA * e) + u * (sx1 * sy + sx * sy1) * e
}

/// Transient boundary-layer case: `u = (e^t - 1) xy tanh((1-x)/k) tanh((1-y)/k)`,
/// `kappa = k = 0.1`, `alpha = beta = u^2/2`.
pub fn example4() -> ManufacturedCase {
    let (kappa, kappa_jet) = both_forms!(layer_kappa);
    let (source_f, source_jet) = both_forms!(ex4_f);
    let (exact_u, u_jet) = both_forms!(ex4_u);
    ManufacturedCase {
        name: "example4".into(),
        kind: CaseKind::Transient,
        kappa,
        flux: FluxSpec::burgers(),
        exact_u,
        source_f,
        analytic: Some(AnalyticFields {
            kappa: kappa_jet,
            source_f: source_jet,
            exact_u: u_jet,
        }),
    }
}

// Sixth-order centered weights on offsets -3..=3.
const D1_7: [f64; 7] = [-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0];
const D1_7_DEN: f64 = 60.0;
const D2_7: [f64; 7] = [2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0];
const D2_7_DEN: f64 = 180.0;

fn centered(f: impl Fn(f64) -> f64, x: f64, step: f64, w: &[f64; 7], den: f64, pow: i32) -> f64 {
    let s: f64 = w
        .iter()
        .enumerate()
        .map(|(k, wk)| wk * f(x + (k as f64 - 3.0) * step))
        .sum();
    s / (den * step.powi(pow))
}

/// Largest interior discrepancy between the case's source and the operator
/// applied to its exact solution by sixth-order centered differences with
/// spacing `h` (in space and time).
pub fn exact_source_check(case: &ManufacturedCase, grid: GridSpec, t: f64) -> f64 {
    let h = grid.h();
    let u = &case.exact_u;
    let k = &case.kappa;
    let fl = &case.flux;
    let mut worst = 0.0_f64;
    for j in 1..grid.n_cells() {
        for i in 1..grid.n_cells() {
            let (x, y) = (grid.coord(i), grid.coord(j));
            let ux = centered(|s| u(s, y, t), x, h, &D1_7, D1_7_DEN, 1);
            let uy = centered(|s| u(x, s, t), y, h, &D1_7, D1_7_DEN, 1);
            let uxx = centered(|s| u(s, y, t), x, h, &D2_7, D2_7_DEN, 2);
            let uyy = centered(|s| u(x, s, t), y, h, &D2_7, D2_7_DEN, 2);
            let kx = centered(|s| k(s, y, t), x, h, &D1_7, D1_7_DEN, 1);
            let ky = centered(|s| k(x, s, t), y, h, &D1_7, D1_7_DEN, 1);
            let ut = match case.kind {
                CaseKind::Steady => 0.0,
                CaseKind::Transient => centered(|s| u(x, y, s), t, h, &D1_7, D1_7_DEN, 1),
            };
            let uv = u(x, y, t);
            let f_num = ut - k(x, y, t) * (uxx + uyy) - kx * ux - ky * uy
                + (fl.alpha_u)(uv) * ux
                + (fl.beta_u)(uv) * uy;
            worst = worst.max((f_num - (case.source_f)(x, y, t)).abs());
        }
    }
    worst
}

/// Trivial case with `u = 0`, `kappa = 1`, no flux and no source.
pub fn zero_case(kind: CaseKind) -> ManufacturedCase {
    let z: SpaceTimeFn = Arc::new(|_, _, _| 0.0);
    ManufacturedCase {
        name: "zero".into(),
        kind,
        kappa: Arc::new(|_, _, _| 1.0),
        flux: FluxSpec::zero(),
        exact_u: z.clone(),
        source_f: z,
        analytic: Some(AnalyticFields {
            kappa: Arc::new(|x, _, _| x * 0.0 + 1.0),
            source_f: Arc::new(|x, _, _| x * 0.0),
            exact_u: Arc::new(|x, _, _| x * 0.0),
        }),
    }
}
