//! Error norms, convergence studies, consistency probes and report files.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::cases::{sample_scalar, ManufacturedCase};
use crate::coefficients::{CoefficientBuilder, CoefficientOptions, CoefficientTables, TimeScheme};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::jet::Jet;
use crate::solvers::{run_transient, solve_steady, SolutionReport, SolveConfig};
use crate::stencil::{
    build_stencil, build_stencil_field, mmatrix_report, MMatrixReport, StencilField, StencilVariant,
    StencilWeights, NEIGHBORS,
};

/// Discrete `l2` and max norms of `numeric - exact`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    pub l2: f64,
    pub linf: f64,
}

/// `l2 = h sqrt(sum diff^2)` and `linf = max |diff|` over every node,
/// boundary included.
pub fn error_norms(numeric: &ScalarField, exact: &ScalarField) -> Result<ErrorNorms> {
    numeric.grid().check_field(exact)?;
    let (sum, linf) = numeric
        .values()
        .iter()
        .zip(exact.values())
        .fold((0.0, 0.0_f64), |(s, m), (a, b)| {
            let d = a - b;
            (s + d * d, m.max(d.abs()))
        });
    Ok(ErrorNorms {
        l2: numeric.grid().h() * sum.sqrt(),
        linf,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Picard iteration on the steady equation.
    Steady,
    Cn,
    Bdf3,
    Bdf4,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Steady, Algorithm::Cn, Algorithm::Bdf3, Algorithm::Bdf4];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Steady => "steady",
            Algorithm::Cn => "cn",
            Algorithm::Bdf3 => "bdf3",
            Algorithm::Bdf4 => "bdf4",
        }
    }

    pub fn scheme(self) -> Option<TimeScheme> {
        match self {
            Algorithm::Steady => None,
            Algorithm::Cn => Some(TimeScheme::Cn),
            Algorithm::Bdf3 => Some(TimeScheme::Bdf3),
            Algorithm::Bdf4 => Some(TimeScheme::Bdf4),
        }
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown algorithm `{s}` (expected steady, cn, bdf3 or bdf4)"))
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Runs `algorithm` on `case`; transient runs end at `t = 1`.
pub fn run_algorithm(
    case: &ManufacturedCase,
    grid: GridSpec,
    config: &SolveConfig,
    algorithm: Algorithm,
) -> Result<SolutionReport> {
    match algorithm.scheme() {
        None => solve_steady(case, grid, config),
        Some(scheme) => run_transient(case, grid, config, scheme),
    }
}

/// Exact solution sampled at the report's final time.
pub fn exact_field(case: &ManufacturedCase, grid: GridSpec, t: f64) -> Result<ScalarField> {
    sample_scalar(case.exact_u.as_ref(), grid, t)
}

/// `log2(e_coarse / e_fine)`.
pub fn observed_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// Rejects level lists that are not strictly doubling.
pub fn check_levels(levels: &[usize]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::InvalidLevels("no levels given".into()));
    }
    for w in levels.windows(2) {
        if w[1] != 2 * w[0] {
            return Err(Error::InvalidLevels(format!(
                "levels must double, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub n_cells: usize,
    pub h: f64,
    pub tau: Option<f64>,
    pub l2: f64,
    pub linf: f64,
    /// Against the next coarser level; `None` on the first.
    pub l2_order: Option<f64>,
    pub linf_order: Option<f64>,
    /// Picard iterations over the whole run.
    pub iterations: usize,
    /// Largest stencil matching residual met during the run.
    pub max_match_residual: f64,
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub case: String,
    pub algorithm: Algorithm,
    pub variant: StencilVariant,
    /// `tau / h` of transient runs.
    pub r: Option<f64>,
    pub levels: Vec<LevelResult>,
    /// Seconds since the Unix epoch when the study finished.
    pub finished_unix: u64,
}

impl ConvergenceReport {
    pub fn new(case: &str, algorithm: Algorithm, variant: StencilVariant, r: Option<f64>) -> Self {
        Self {
            case: case.to_owned(),
            algorithm,
            variant,
            r,
            levels: Vec::new(),
            finished_unix: 0,
        }
    }

    /// Appends a level and fills in its orders against the previous one.
    pub fn push(&mut self, mut level: LevelResult) {
        if let Some(prev) = self.levels.last() {
            level.l2_order = Some(observed_order(prev.l2, level.l2));
            level.linf_order = Some(observed_order(prev.linf, level.linf));
        }
        self.levels.push(level);
    }

    pub fn level(&self, n_cells: usize) -> Option<&LevelResult> {
        self.levels.iter().find(|l| l.n_cells == n_cells)
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("h,tau,l2,l2_order,linf,linf_order\n");
        for l in &self.levels {
            out.push_str(&format!(
                "{:.6e},{},{:.4e},{},{:.4e},{}\n",
                l.h,
                l.tau.map(|t| format!("{t:.6e}")).unwrap_or_default(),
                l.l2,
                fmt_order(l.l2_order),
                l.linf,
                fmt_order(l.linf_order),
            ));
        }
        out
    }
}

fn fmt_order(order: Option<f64>) -> String {
    order.map(|o| format!("{o:.2}")).unwrap_or_default()
}

impl fmt::Display for ConvergenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} / {} / {}", self.case, self.algorithm, self.variant.name())?;
        writeln!(
            f,
            "{:>7} {:>10} {:>12} {:>6} {:>12} {:>6} {:>6}",
            "h", "tau", "l2", "order", "linf", "order", "iters"
        )?;
        for l in &self.levels {
            writeln!(
                f,
                "{:>7} {:>10} {:>12.4e} {:>6} {:>12.4e} {:>6} {:>6}",
                format!("1/{}", l.n_cells),
                l.tau.map(|t| format!("{t:.4e}")).unwrap_or_else(|| "-".into()),
                l.l2,
                fmt_order(l.l2_order),
                l.linf,
                fmt_order(l.linf_order),
                l.iterations,
            )?;
        }
        Ok(())
    }
}

/// Errors of one solution against the exact solution; orders are left empty.
pub fn level_result(case: &ManufacturedCase, sol: &SolutionReport) -> Result<LevelResult> {
    let grid = sol.field.grid();
    let norms = error_norms(&sol.field, &exact_field(case, grid, sol.t)?)?;
    Ok(LevelResult {
        n_cells: grid.n_cells(),
        h: grid.h(),
        tau: sol.tau,
        l2: norms.l2,
        linf: norms.linf,
        l2_order: None,
        linf_order: None,
        iterations: sol.iterations.len(),
        max_match_residual: sol.iterations.iter().fold(0.0, |m, d| m.max(d.max_match_residual)),
        elapsed_secs: sol.elapsed_secs,
    })
}

/// Solves on each of `levels` (cells per side) and tabulates errors and orders.
pub fn convergence_study(
    case: &ManufacturedCase,
    algorithm: Algorithm,
    config: &SolveConfig,
    levels: &[usize],
) -> Result<ConvergenceReport> {
    check_levels(levels)?;
    let r = algorithm
        .scheme()
        .map(|s| config.r.unwrap_or_else(|| s.default_ratio()));
    let mut report = ConvergenceReport::new(&case.name, algorithm, config.variant, r);
    for &n in levels {
        let grid = GridSpec::new(n)?;
        let sol = run_algorithm(case, grid, config, algorithm)?;
        report.variant = sol.variant;
        report.push(level_result(case, &sol)?);
    }
    report.finished_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    /// `.json` paths get JSON, everything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => ReportFormat::Json,
            _ => ReportFormat::Csv,
        }
    }
}

pub fn emit_report(report: &ConvergenceReport, path: &Path, format: ReportFormat) -> Result<()> {
    let text = match format {
        ReportFormat::Csv => report.csv(),
        ReportFormat::Json => serde_json::to_string_pretty(report)?,
    };
    fs::write(path, text)?;
    Ok(())
}

/// Coefficient tables built from the exact solution of a steady case.
///
/// `ReducedHelmholtz` gets the Crank-Nicolson reaction form with the exact
/// solution as its own history level, which the exact solution also
/// satisfies.
pub fn exact_tables(
    case: &ManufacturedCase,
    grid: GridSpec,
    variant: StencilVariant,
    options: CoefficientOptions,
) -> Result<(CoefficientTables, ScalarField)> {
    if !case.is_steady() {
        return Err(Error::CaseKind {
            name: case.name.clone(),
            expected: "steady",
            actual: case.kind.as_str(),
        });
    }
    let exact = exact_field(case, grid, 0.0)?;
    let builder = CoefficientBuilder::new(case, grid, 0.0, options)?;
    let tables = match variant {
        StencilVariant::ReducedHelmholtz => builder
            .step(TimeScheme::Cn, &[&exact], TimeScheme::Cn.default_ratio())?
            .tables(&exact)?,
        _ => builder.steady(&exact)?,
    };
    Ok((tables, exact))
}

/// Coefficient tables of the first step of `scheme` on a transient case,
/// with the history levels and the unknown level all taken from the exact
/// solution. Crank-Nicolson tables belong to the half level.
pub fn exact_step_tables(
    case: &ManufacturedCase,
    grid: GridSpec,
    scheme: TimeScheme,
    r: f64,
    options: CoefficientOptions,
) -> Result<(CoefficientTables, ScalarField)> {
    if case.is_steady() {
        return Err(Error::CaseKind {
            name: case.name.clone(),
            expected: "transient",
            actual: case.kind.as_str(),
        });
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidRatio(r));
    }
    let tau = r * grid.h();
    let k = scheme.history_weights().len();
    let history = (0..k)
        .map(|n| exact_field(case, grid, n as f64 * tau))
        .collect::<Result<Vec<_>>>()?;
    let t = match scheme {
        TimeScheme::Cn => 0.5 * tau,
        _ => k as f64 * tau,
    };
    let target = exact_field(case, grid, t)?;
    let refs: Vec<&ScalarField> = history.iter().collect();
    let tables = CoefficientBuilder::new(case, grid, t, options)?
        .step(scheme, &refs, r)?
        .tables(&target)?;
    Ok((tables, target))
}

/// `h^-2 sum C u_exact - F` at interior node `(i, j)`.
pub fn node_residual(stencils: &StencilField, exact: &ScalarField, i: usize, j: usize) -> f64 {
    stencil_residual(stencils.at(i, j), exact, i, j)
}

/// Residual summed over differences from the centre value, which keeps
/// rounding well below `h^4` on fine grids.
fn stencil_residual(st: &StencilWeights, exact: &ScalarField, i: usize, j: usize) -> f64 {
    let u0 = exact.get(i, j);
    let at = |k: i32, l: i32| exact.get((i as i32 + k) as usize, (j as i32 + l) as usize);
    let total: f64 = NEIGHBORS.iter().map(|&(k, l)| st.weight(k, l)).sum();
    let spread = st.apply(|k, l| at(k, l) - u0);
    (spread + total * u0) / (st.h * st.h) - st.rhs
}

/// Stencils built from the exact solution of a steady case.
pub fn exact_stencils(
    case: &ManufacturedCase,
    grid: GridSpec,
    variant: StencilVariant,
    options: CoefficientOptions,
) -> Result<(CoefficientTables, StencilField)> {
    let (tables, _) = exact_tables(case, grid, variant, options)?;
    let stencils = build_stencil_field(&tables, variant)?;
    Ok((tables, stencils))
}

/// Sign pattern and diagonal dominance of the stencils at the exact solution.
pub fn mmatrix_check(
    case: &ManufacturedCase,
    grid: GridSpec,
    variant: StencilVariant,
    options: CoefficientOptions,
) -> Result<MMatrixReport> {
    Ok(mmatrix_report(&exact_stencils(case, grid, variant, options)?.1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyLevel {
    pub n_cells: usize,
    pub h: f64,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub case: String,
    pub variant: StencilVariant,
    pub levels: Vec<ConsistencyLevel>,
    /// Least-squares slope of `log2(residual)` against `log2(h)`.
    pub order: f64,
}

/// Applies the stencils built from the exact solution to the exact solution
/// and fits the decay rate of the largest interior residual.
pub fn consistency_probe(
    case: &ManufacturedCase,
    variant: StencilVariant,
    levels: &[usize],
    options: CoefficientOptions,
) -> Result<ConsistencyReport> {
    check_levels(levels)?;
    let mut out = Vec::with_capacity(levels.len());
    for &n in levels {
        let grid = GridSpec::new(n)?;
        let (tables, exact) = exact_tables(case, grid, variant, options)?;
        let stencils = build_stencil_field(&tables, variant)?;
        let max_residual = (1..n)
            .flat_map(|j| (1..n).map(move |i| (i, j)))
            .map(|(i, j)| node_residual(&stencils, &exact, i, j).abs())
            .fold(0.0, f64::max);
        out.push(ConsistencyLevel {
            n_cells: n,
            h: grid.h(),
            max_residual,
        });
    }
    let order = fit_order(&out);
    Ok(ConsistencyReport {
        case: case.name.clone(),
        variant,
        levels: out,
        order,
    })
}

impl ConsistencyReport {
    pub fn csv(&self) -> String {
        let mut out = String::from("h,max_residual\n");
        for l in &self.levels {
            out.push_str(&format!("{:.6e},{:.4e}\n", l.h, l.max_residual));
        }
        out
    }
}

fn fit_order(levels: &[ConsistencyLevel]) -> f64 {
    if levels.len() < 2 {
        return f64::NAN;
    }
    let pts: Vec<(f64, f64)> = levels
        .iter()
        .map(|l| (l.h.log2(), l.max_residual.log2()))
        .collect();
    let n = pts.len() as f64;
    let (mx, my) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(sxy, sxx), (x, y)| {
        (sxy + (x - mx) * (y - my), sxx + (x - mx) * (x - mx))
    });
    sxy / sxx
}

/// Observed and predicted `h^4` error term of a reduced stencil at one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadingTerm {
    pub n_cells: usize,
    pub node: (usize, usize),
    /// `residual / h^4`.
    pub observed: f64,
    /// `(a^(0,1) - b^(1,0)) u^(1,3) / 90`.
    pub predicted: f64,
}

impl LeadingTerm {
    pub fn relative_gap(&self) -> f64 {
        (self.observed - self.predicted).abs() / self.predicted.abs()
    }
}

/// Compares the residual of the reduced steady stencil at the grid centre
/// with the predicted leading term. Needs jet forms of the exact solution.
pub fn leading_term_check(case: &ManufacturedCase, n_cells: usize, options: CoefficientOptions) -> Result<LeadingTerm> {
    if n_cells % 2 != 0 {
        return Err(Error::InvalidLevels(format!("{n_cells} cells have no centre node")));
    }
    let fields = case
        .analytic
        .as_ref()
        .ok_or_else(|| Error::ModeMismatch(format!("case `{}` has no analytic fields", case.name)))?;
    let grid = GridSpec::new(n_cells)?;
    let variant = StencilVariant::ReducedElliptic;
    let (tables, exact) = exact_tables(case, grid, variant, options)?;
    let c = n_cells / 2;
    let (x, y) = (grid.coord(c), grid.coord(c));
    let h = grid.h();
    let pc = tables.at(c, c);
    let stencil = build_stencil(&pc, variant)?;
    let u = (fields.exact_u)(Jet::var_x(x), Jet::var_y(y), 0.0);
    Ok(LeadingTerm {
        n_cells,
        node: (c, c),
        observed: stencil_residual(&stencil, &exact, c, c) / h.powi(4),
        predicted: (pc.a(0, 1) - pc.b(1, 0)) * u.derivative(1, 3) / 90.0,
    })
}
