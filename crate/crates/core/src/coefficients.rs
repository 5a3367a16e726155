//! Coefficients of the linearized equation solved in each Picard iteration.
//!
//! Steady problems become `lap u + a u_x + b u_y = psi`; implicit time steps
//! become `lap u + a u_x + b u_y + (c/h) u = psi` where `c` carries the time
//! discretization and `psi` the source plus the history terms.

use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use crate::cases::{check_finite, sample_scalar, AnalyticFields, ManufacturedCase};
use crate::derivatives::{
    axis_derivative_with, derivative_table_with, tri_index, tri_len, Axis, DerivativeTable,
    SelectionPolicy,
};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::jet::Jet;

/// Highest total order of `a`, `b` derivatives kept in the tables.
pub const CONVECTION_ORDER: usize = 4;
/// Highest total order of `c` and `psi` derivatives kept in the tables.
pub const REACTION_ORDER: usize = 5;
/// Entries in a per-node derivative array (total order up to 5).
pub const POINT_LEN: usize = tri_len(5);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquationMode {
    /// No zeroth-order term.
    Steady,
    /// Zeroth-order term `(c/h) u` from an implicit time step.
    Helmholtz,
}

/// How derivatives of the parts built from `kappa` and `f` are obtained.
///
/// The parts that depend on the iterate (`alpha_u(u)/kappa`, `beta_u(u)/kappa`
/// and the history levels over `kappa`) are always differenced on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeSource {
    /// Exact when the case carries jet forms, grid differencing otherwise.
    #[default]
    Auto,
    /// Difference every composite coefficient field on the grid.
    Grid,
    /// Exact derivatives from the case's jet forms; an error if it has none.
    Analytic,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoefficientOptions {
    pub source: DerivativeSource,
    pub policy: SelectionPolicy,
}

/// Nodal derivative tables of `a`, `b`, `c` and `psi`.
#[derive(Debug, Clone)]
pub struct CoefficientTables {
    pub mode: EquationMode,
    pub grid: GridSpec,
    pub a: DerivativeTable,
    pub b: DerivativeTable,
    /// Present in Helmholtz mode only.
    pub c: Option<DerivativeTable>,
    pub psi: DerivativeTable,
}

impl CoefficientTables {
    /// Gathers every derivative at node `(i, j)`.
    pub fn at(&self, i: usize, j: usize) -> PointCoefficients {
        let mut p = PointCoefficients::zero(self.mode, self.grid.h());
        fill(&mut p.a, &self.a, i, j);
        fill(&mut p.b, &self.b, i, j);
        if let Some(c) = &self.c {
            fill(&mut p.c, c, i, j);
        }
        fill(&mut p.psi, &self.psi, i, j);
        p
    }
}

fn fill(dst: &mut [f64; POINT_LEN], table: &DerivativeTable, i: usize, j: usize) {
    for (k, v) in dst.iter_mut().enumerate().take(table.len()) {
        *v = table.get_by_index(k).get(i, j);
    }
}

/// Derivatives of the coefficients at one node, indexed by total order up to 5.
///
/// Entries the tables do not provide are zero. Fifth-order derivatives of `a`
/// and `b` only ever meet the symmetric leading stencil in the matching
/// conditions, where they cancel, so the tables stop at order 4 for them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointCoefficients {
    pub mode: EquationMode,
    pub h: f64,
    pub a: [f64; POINT_LEN],
    pub b: [f64; POINT_LEN],
    pub c: [f64; POINT_LEN],
    pub psi: [f64; POINT_LEN],
}

impl PointCoefficients {
    pub fn zero(mode: EquationMode, h: f64) -> Self {
        Self {
            mode,
            h,
            a: [0.0; POINT_LEN],
            b: [0.0; POINT_LEN],
            c: [0.0; POINT_LEN],
            psi: [0.0; POINT_LEN],
        }
    }

    /// Constant coefficients: every derivative of order 1 and above is zero.
    pub fn constant(mode: EquationMode, h: f64, a: f64, b: f64, c: f64, psi: f64) -> Self {
        let mut p = Self::zero(mode, h);
        p.a[0] = a;
        p.b[0] = b;
        p.c[0] = c;
        p.psi[0] = psi;
        p
    }

    #[inline]
    pub fn a(&self, m: usize, n: usize) -> f64 {
        self.a[tri_index(m, n)]
    }

    #[inline]
    pub fn b(&self, m: usize, n: usize) -> f64 {
        self.b[tri_index(m, n)]
    }

    #[inline]
    pub fn c(&self, m: usize, n: usize) -> f64 {
        self.c[tri_index(m, n)]
    }

    #[inline]
    pub fn psi(&self, m: usize, n: usize) -> f64 {
        self.psi[tri_index(m, n)]
    }
}

fn kappa_field(case: &ManufacturedCase, grid: GridSpec, t: f64) -> Result<ScalarField> {
    let kappa = sample_scalar(case.kappa.as_ref(), grid, t)?;
    for j in 0..grid.side() {
        for i in 0..grid.side() {
            let v = kappa.get(i, j);
            if v <= 0.0 {
                return Err(Error::NonPositiveKappa { i, j, value: v });
            }
        }
    }
    Ok(kappa)
}

fn analytic_fields<'a>(
    case: &'a ManufacturedCase,
    source: DerivativeSource,
) -> Result<Option<&'a AnalyticFields>> {
    match (source, case.analytic.as_ref()) {
        (DerivativeSource::Grid, _) => Ok(None),
        (DerivativeSource::Auto, a) => Ok(a),
        (DerivativeSource::Analytic, Some(a)) => Ok(Some(a)),
        (DerivativeSource::Analytic, None) => Err(Error::ModeMismatch(format!(
            "case `{}` has no analytic kappa and f",
            case.name
        ))),
    }
}

/// Exact derivative tables of `kappa_x/kappa`, `kappa_y/kappa` (order 4) and
/// `1/kappa`, `f/kappa` (order 5).
struct ExactParts {
    kx: DerivativeTable,
    ky: DerivativeTable,
    inv_k: DerivativeTable,
    f_over_k: DerivativeTable,
}

fn exact_parts(fields: &AnalyticFields, grid: GridSpec, t: f64) -> Result<ExactParts> {
    let side = grid.side();
    let nodes: Vec<[[f64; POINT_LEN]; 4]> = (0..side * side)
        .into_par_iter()
        .map(|idx| {
            let (x, y) = (Jet::var_x(grid.coord(idx % side)), Jet::var_y(grid.coord(idx / side)));
            let k = (fields.kappa)(x, y, t);
            let inv = k.recip();
            [
                (k.dx() * inv).derivatives(),
                (k.dy() * inv).derivatives(),
                inv.derivatives(),
                ((fields.source_f)(x, y, t) * inv).derivatives(),
            ]
        })
        .collect();
    let table = |part: usize, order: usize| -> Result<DerivativeTable> {
        let entries = (0..tri_len(order))
            .map(|d| {
                let field = ScalarField::from_values(grid, nodes.iter().map(|n| n[part][d]).collect())?;
                check_finite(&field)?;
                Ok(field)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DerivativeTable::from_entries(entries))
    };
    Ok(ExactParts {
        kx: table(0, CONVECTION_ORDER)?,
        ky: table(1, CONVECTION_ORDER)?,
        inv_k: table(2, REACTION_ORDER)?,
        f_over_k: table(3, REACTION_ORDER)?,
    })
}

/// `alpha_u(u)/kappa` and `beta_u(u)/kappa` at the nodes.
fn flux_quotients(
    case: &ManufacturedCase,
    kappa: &ScalarField,
    iterate: &ScalarField,
) -> Result<(ScalarField, ScalarField)> {
    let fl = &case.flux;
    let pa = iterate.zip_map(kappa, |u, k| (fl.alpha_u)(u) / k)?;
    let pb = iterate.zip_map(kappa, |u, k| (fl.beta_u)(u) / k)?;
    check_finite(&pa)?;
    check_finite(&pb)?;
    Ok((pa, pb))
}

/// Tables of `a` and `b`.
fn convection_tables(
    case: &ManufacturedCase,
    kappa: &ScalarField,
    iterate: &ScalarField,
    exact: Option<&ExactParts>,
    policy: SelectionPolicy,
) -> Result<(DerivativeTable, DerivativeTable)> {
    let (pa, pb) = flux_quotients(case, kappa, iterate)?;
    if let Some(ex) = exact {
        let da = derivative_table_with(&pa, CONVECTION_ORDER, policy)?;
        let db = derivative_table_with(&pb, CONVECTION_ORDER, policy)?;
        return Ok((ex.kx.combine(1.0, &da, -1.0)?, ex.ky.combine(1.0, &db, -1.0)?));
    }
    let kx = axis_derivative_with(kappa, Axis::X, 1, policy)?;
    let ky = axis_derivative_with(kappa, Axis::Y, 1, policy)?;
    let a = kx.zip_map(kappa, |d, k| d / k)?.zip_map(&pa, |q, p| q - p)?;
    let b = ky.zip_map(kappa, |d, k| d / k)?.zip_map(&pb, |q, p| q - p)?;
    check_finite(&a)?;
    check_finite(&b)?;
    Ok((
        derivative_table_with(&a, CONVECTION_ORDER, policy)?,
        derivative_table_with(&b, CONVECTION_ORDER, policy)?,
    ))
}

/// The parts of the coefficients at one time level that do not depend on
/// the iterate. Built once per steady solve or time step and reused by every
/// Picard iteration.
pub struct CoefficientBuilder<'a> {
    case: &'a ManufacturedCase,
    grid: GridSpec,
    t: f64,
    policy: SelectionPolicy,
    kappa: ScalarField,
    /// `f/kappa` and friends with exact derivatives, when available.
    exact: Option<ExactParts>,
    /// Sampled `f` for grid differencing otherwise.
    source: Option<ScalarField>,
}

impl<'a> CoefficientBuilder<'a> {
    pub fn new(case: &'a ManufacturedCase, grid: GridSpec, t: f64, opts: CoefficientOptions) -> Result<Self> {
        let kappa = kappa_field(case, grid, t)?;
        let exact = analytic_fields(case, opts.source)?
            .map(|f| exact_parts(f, grid, t))
            .transpose()?;
        let source = match exact {
            Some(_) => None,
            None => Some(sample_scalar(case.source_f.as_ref(), grid, t)?),
        };
        Ok(Self {
            case,
            grid,
            t,
            policy: opts.policy,
            kappa,
            exact,
            source,
        })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Steady coefficients for the iterate `u_k`.
    pub fn steady(&self, iterate: &ScalarField) -> Result<CoefficientTables> {
        self.grid.check_field(iterate)?;
        let (a, b) = convection_tables(self.case, &self.kappa, iterate, self.exact.as_ref(), self.policy)?;
        let psi = match (&self.exact, &self.source) {
            (Some(ex), _) => ex.f_over_k.scaled(-1.0),
            (None, Some(f)) => {
                derivative_table_with(&f.zip_map(&self.kappa, |f, k| -f / k)?, REACTION_ORDER, self.policy)?
            }
            (None, None) => unreachable!("source is sampled whenever exact parts are absent"),
        };
        Ok(CoefficientTables {
            mode: EquationMode::Steady,
            grid: self.grid,
            a,
            b,
            c: None,
            psi,
        })
    }

    /// Fixes the history levels of an implicit step; `history` is oldest first.
    pub fn step(&self, scheme: TimeScheme, history: &[&ScalarField], r: f64) -> Result<StepCoefficients<'_, 'a>> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidRatio(r));
        }
        let weights = scheme.history_weights();
        if history.len() != weights.len() {
            return Err(Error::ModeMismatch(format!(
                "{scheme:?} needs {} history levels, got {}",
                weights.len(),
                history.len()
            )));
        }
        for level in history {
            self.grid.check_field(level)?;
        }
        let grid = self.grid;
        let h = grid.h();
        let kappa = &self.kappa;
        let gamma = scheme.gamma();
        // sum_k w_k u^k / kappa
        let combo = ScalarField::from_fn(grid, |i, j| {
            let s: f64 = weights.iter().zip(history).map(|(w, u)| w * u.get(i, j)).sum();
            s / kappa.get(i, j)
        });
        check_finite(&combo)?;
        let (c, psi) = match (&self.exact, &self.source) {
            (Some(ex), _) => {
                let d_combo = derivative_table_with(&combo, REACTION_ORDER, self.policy)?;
                (
                    ex.inv_k.scaled(-gamma / r),
                    ex.f_over_k.combine(-1.0, &d_combo, -1.0 / (r * h))?,
                )
            }
            (None, Some(f)) => {
                let c = kappa.map(|k| -gamma / (r * k));
                let psi = ScalarField::from_fn(grid, |i, j| {
                    -f.get(i, j) / kappa.get(i, j) - combo.get(i, j) / (r * h)
                });
                check_finite(&psi)?;
                (
                    derivative_table_with(&c, REACTION_ORDER, self.policy)?,
                    derivative_table_with(&psi, REACTION_ORDER, self.policy)?,
                )
            }
            (None, None) => unreachable!("source is sampled whenever exact parts are absent"),
        };
        Ok(StepCoefficients { builder: self, c, psi })
    }
}

/// Coefficients of one implicit step with the history folded in.
pub struct StepCoefficients<'b, 'a> {
    builder: &'b CoefficientBuilder<'a>,
    c: DerivativeTable,
    psi: DerivativeTable,
}

impl StepCoefficients<'_, '_> {
    /// Tables for the iterate of the unknown level.
    pub fn tables(&self, iterate: &ScalarField) -> Result<CoefficientTables> {
        let b = self.builder;
        b.grid.check_field(iterate)?;
        let (a, bt) = convection_tables(b.case, &b.kappa, iterate, b.exact.as_ref(), b.policy)?;
        Ok(CoefficientTables {
            mode: EquationMode::Helmholtz,
            grid: b.grid,
            a,
            b: bt,
            c: Some(self.c.clone()),
            psi: self.psi.clone(),
        })
    }
}

/// Coefficients for one Picard iteration of a steady problem.
pub fn steady_coefficients(
    case: &ManufacturedCase,
    iterate: &ScalarField,
    opts: CoefficientOptions,
) -> Result<CoefficientTables> {
    CoefficientBuilder::new(case, iterate.grid(), 0.0, opts)?.steady(iterate)
}

/// Implicit time discretizations. Each solves for one unknown level with
/// `c = -gamma/(r kappa)` and history combination `sum_k w_k u^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeScheme {
    /// Crank-Nicolson, solved for the half level.
    Cn,
    Bdf3,
    Bdf4,
}

impl TimeScheme {
    pub fn gamma(self) -> f64 {
        match self {
            TimeScheme::Cn => 2.0,
            TimeScheme::Bdf3 => 11.0 / 6.0,
            TimeScheme::Bdf4 => 25.0 / 12.0,
        }
    }

    /// Weights of the history levels, oldest first.
    pub fn history_weights(self) -> &'static [f64] {
        match self {
            TimeScheme::Cn => &[2.0],
            TimeScheme::Bdf3 => &[1.0 / 3.0, -1.5, 3.0],
            TimeScheme::Bdf4 => &[-0.25, 4.0 / 3.0, -3.0, 4.0],
        }
    }

    pub fn default_ratio(self) -> f64 {
        match self {
            TimeScheme::Cn => 0.5,
            TimeScheme::Bdf3 | TimeScheme::Bdf4 => 1.0,
        }
    }
}

/// Coefficients for one Picard iteration of an implicit step.
///
/// `history` lists the previous levels oldest first; `t` is the time at which
/// the unknown level lives (the half step for Crank-Nicolson).
pub fn helmholtz_coefficients(
    case: &ManufacturedCase,
    scheme: TimeScheme,
    history: &[&ScalarField],
    iterate: &ScalarField,
    t: f64,
    r: f64,
    opts: CoefficientOptions,
) -> Result<CoefficientTables> {
    CoefficientBuilder::new(case, iterate.grid(), t, opts)?
        .step(scheme, history, r)?
        .tables(iterate)
}

/// Crank-Nicolson half step from `prev` evaluated at `t_mid`.
pub fn cn_coefficients(
    case: &ManufacturedCase,
    prev: &ScalarField,
    iterate: &ScalarField,
    t_mid: f64,
    r: f64,
    opts: CoefficientOptions,
) -> Result<CoefficientTables> {
    helmholtz_coefficients(case, TimeScheme::Cn, &[prev], iterate, t_mid, r, opts)
}

/// BDF3 step to `t_new` from `u^n, u^{n+1}, u^{n+2}`.
#[allow(clippy::too_many_arguments)]
pub fn bdf3_coefficients(
    case: &ManufacturedCase,
    u_n: &ScalarField,
    u_n1: &ScalarField,
    u_n2: &ScalarField,
    iterate: &ScalarField,
    t_new: f64,
    r: f64,
    opts: CoefficientOptions,
) -> Result<CoefficientTables> {
    helmholtz_coefficients(case, TimeScheme::Bdf3, &[u_n, u_n1, u_n2], iterate, t_new, r, opts)
}

/// BDF4 step to `t_new` from `u^n .. u^{n+3}`.
#[allow(clippy::too_many_arguments)]
pub fn bdf4_coefficients(
    case: &ManufacturedCase,
    u_n: &ScalarField,
    u_n1: &ScalarField,
    u_n2: &ScalarField,
    u_n3: &ScalarField,
    iterate: &ScalarField,
    t_new: f64,
    r: f64,
    opts: CoefficientOptions,
) -> Result<CoefficientTables> {
    helmholtz_coefficients(
        case,
        TimeScheme::Bdf4,
        &[u_n, u_n1, u_n2, u_n3],
        iterate,
        t_new,
        r,
        opts,
    )
}
