//! Picard-linearized steady solver and implicit time-stepping drivers.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cases::{sample_scalar, ManufacturedCase};
use crate::coefficients::{
    CoefficientBuilder, CoefficientOptions, CoefficientTables,
    EquationMode, TimeScheme,
};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::sparse::{assemble, solve_with, SolveStats, SolverKind};
use crate::stencil::{build_stencil_field, mmatrix_report, StencilVariant};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    pub variant: StencilVariant,
    pub steady_iterations: usize,
    pub step_iterations: usize,
    /// `tau / h`; `None` picks the scheme default.
    pub r: Option<f64>,
    /// Stop Picard early once `||u_(k+1) - u_k||_inf` falls to this value.
    pub early_stop_tol: Option<f64>,
    pub options: CoefficientOptions,
    pub solver: SolverKind,
    pub check_mmatrix: bool,
    /// Start each time step's Picard loop from an extrapolation of the
    /// previous levels instead of the newest level.
    pub extrapolate: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            variant: StencilVariant::ReducedElliptic,
            steady_iterations: 40,
            step_iterations: 20,
            r: None,
            early_stop_tol: None,
            options: CoefficientOptions::default(),
            solver: SolverKind::Direct,
            check_mmatrix: false,
            extrapolate: true,
        }
    }
}

impl SolveConfig {
    pub fn with_variant(variant: StencilVariant) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.steady_iterations == 0 || self.step_iterations == 0 {
            return Err(Error::ModeMismatch("iteration counts must be at least 1".into()));
        }
        if let Some(r) = self.r {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::InvalidRatio(r));
            }
        }
        Ok(())
    }

    /// The variant to use in `mode`. Reduced stencils follow the mode; the
    /// explicit ones exist for the steady equation only.
    fn variant_for(&self, mode: EquationMode) -> Result<StencilVariant> {
        use StencilVariant::*;
        match (mode, self.variant) {
            (EquationMode::Steady, ReducedHelmholtz) => Ok(ReducedElliptic),
            (EquationMode::Helmholtz, ReducedElliptic | ReducedHelmholtz) => Ok(ReducedHelmholtz),
            (EquationMode::Helmholtz, v) => Err(Error::ModeMismatch(format!(
                "{} stencil has no time-dependent form",
                v.name()
            ))),
            (_, v) => Ok(v),
        }
    }
}

/// One Picard iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationDiagnostic {
    /// Time step index (0 for steady solves).
    pub step: usize,
    pub iteration: usize,
    /// `||u_(k+1) - u_k||_inf`.
    pub change: f64,
    pub max_match_residual: f64,
    pub mmatrix_pass: Option<bool>,
    pub solve: SolveStats,
}

/// One time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostic {
    pub step: usize,
    pub scheme: TimeScheme,
    /// Time of the level produced by the step.
    pub t: f64,
    pub iterations: usize,
    pub final_change: f64,
}

#[derive(Debug, Clone)]
pub struct SolutionReport {
    pub variant: StencilVariant,
    pub field: ScalarField,
    /// Time of `field` (0 for steady solves).
    pub t: f64,
    pub tau: Option<f64>,
    pub iterations: Vec<IterationDiagnostic>,
    pub steps: Vec<StepDiagnostic>,
    pub elapsed_secs: f64,
}

fn check_kind(case: &ManufacturedCase, steady: bool) -> Result<()> {
    if case.is_steady() == steady {
        return Ok(());
    }
    let name = |s: bool| if s { "steady" } else { "transient" };
    Err(Error::CaseKind {
        name: case.name.clone(),
        expected: name(steady),
        actual: case.kind.as_str(),
    })
}

struct Picard<'a> {
    config: &'a SolveConfig,
    variant: StencilVariant,
    iterations: usize,
    log: &'a mut Vec<IterationDiagnostic>,
}

impl Picard<'_> {
    /// Runs the fixed-point loop; returns the final iterate, the iteration
    /// count and the last change.
    fn run(
        &mut self,
        step: usize,
        boundary: &ScalarField,
        mut u: ScalarField,
        coefficients: impl Fn(&ScalarField) -> Result<CoefficientTables>,
    ) -> Result<(ScalarField, usize, f64)> {
        let mut change = f64::INFINITY;
        for k in 0..self.iterations {
            let tables = coefficients(&u).map_err(|e| diverged(e, step, k))?;
            let stencils = build_stencil_field(&tables, self.variant)?;
            let mmatrix_pass = self.config.check_mmatrix.then(|| mmatrix_report(&stencils).pass);
            let system = assemble(&stencils, boundary)?;
            let (next, solve) = solve_with(&system, self.config.solver, Some(&u))?;
            if !next.all_finite() {
                return Err(Error::Divergence { step, iteration: k });
            }
            change = next.max_abs_diff(&u)?;
            u = next;
            self.log.push(IterationDiagnostic {
                step,
                iteration: k,
                change,
                max_match_residual: stencils.max_match_residual(),
                mmatrix_pass,
                solve,
            });
            if self.config.early_stop_tol.is_some_and(|tol| change <= tol) {
                return Ok((u, k + 1, change));
            }
        }
        Ok((u, self.iterations, change))
    }
}

/// Non-finite coefficients built from an iterate mean the iterate blew up.
fn diverged(e: Error, step: usize, iteration: usize) -> Error {
    match e {
        Error::NonFiniteSample { .. } => Error::Divergence { step, iteration },
        other => other,
    }
}

/// Steady solve starting from `u_0 = 0`.
pub fn solve_steady(case: &ManufacturedCase, grid: GridSpec, config: &SolveConfig) -> Result<SolutionReport> {
    let start = Instant::now();
    config.validate()?;
    check_kind(case, true)?;
    let variant = config.variant_for(EquationMode::Steady)?;
    let boundary = sample_scalar(case.boundary_g().as_ref(), grid, 0.0)?;
    let mut log = Vec::new();
    let mut picard = Picard {
        config,
        variant,
        iterations: config.steady_iterations,
        log: &mut log,
    };
    let builder = CoefficientBuilder::new(case, grid, 0.0, config.options)?;
    let (field, _, _) = picard.run(0, &boundary, ScalarField::zeros(grid), |u| builder.steady(u))?;
    Ok(SolutionReport {
        variant,
        field,
        t: 0.0,
        tau: None,
        iterations: log,
        steps: Vec::new(),
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

/// Number of steps `1/(r h)` to reach `t = 1`.
pub fn step_count(grid: GridSpec, r: f64) -> Result<usize> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidRatio(r));
    }
    let exact = 1.0 / (r * grid.h());
    let n = exact.round();
    if n < 1.0 || (exact - n).abs() > 1e-9 * exact {
        return Err(Error::NonIntegerSteps(exact));
    }
    Ok(n as usize)
}

/// Crank-Nicolson (midpoint form) to `t = 1`.
pub fn run_cn(case: &ManufacturedCase, grid: GridSpec, config: &SolveConfig) -> Result<SolutionReport> {
    run_transient(case, grid, config, TimeScheme::Cn)
}

/// BDF3 to `t = 1`, started with two Crank-Nicolson steps.
pub fn run_bdf3(case: &ManufacturedCase, grid: GridSpec, config: &SolveConfig) -> Result<SolutionReport> {
    run_transient(case, grid, config, TimeScheme::Bdf3)
}

/// BDF4 to `t = 1`, started with two Crank-Nicolson steps and one BDF3 step.
pub fn run_bdf4(case: &ManufacturedCase, grid: GridSpec, config: &SolveConfig) -> Result<SolutionReport> {
    run_transient(case, grid, config, TimeScheme::Bdf4)
}

/// Runs `scheme` to `t = 1` with the same-step startup sequence.
pub fn run_transient(
    case: &ManufacturedCase,
    grid: GridSpec,
    config: &SolveConfig,
    scheme: TimeScheme,
) -> Result<SolutionReport> {
    let start = Instant::now();
    config.validate()?;
    check_kind(case, false)?;
    let variant = config.variant_for(EquationMode::Helmholtz)?;
    let r = config.r.unwrap_or_else(|| scheme.default_ratio());
    let n_steps = step_count(grid, r)?;
    let startup: &[TimeScheme] = match scheme {
        TimeScheme::Cn => &[],
        TimeScheme::Bdf3 => &[TimeScheme::Cn, TimeScheme::Cn],
        TimeScheme::Bdf4 => &[TimeScheme::Cn, TimeScheme::Cn, TimeScheme::Bdf3],
    };
    if n_steps < startup.len() + 1 {
        return Err(Error::ModeMismatch(format!(
            "{scheme:?} needs at least {} steps, got {n_steps}",
            startup.len() + 1
        )));
    }
    let tau = r * grid.h();
    let g = case.boundary_g();
    let mut levels = vec![case.initial_u0(grid)?];
    let mut log = Vec::new();
    let mut steps = Vec::with_capacity(n_steps);
    for n in 0..n_steps {
        let this = startup.get(n).copied().unwrap_or(scheme);
        let t_new = (n + 1) as f64 * tau;
        let mut picard = Picard {
            config,
            variant,
            iterations: config.step_iterations,
            log: &mut log,
        };
        let (next, iterations, final_change) = match this {
            TimeScheme::Cn => {
                let prev = levels.last().expect("initial level");
                let t_half = t_new - 0.5 * tau;
                let boundary = sample_scalar(g.as_ref(), grid, t_half)?;
                let builder = CoefficientBuilder::new(case, grid, t_half, config.options)?;
                let step = builder.step(TimeScheme::Cn, &[prev], r)?;
                let init = start_guess(&levels, 0.5, config.extrapolate);
                let (half, it, ch) = picard.run(n, &boundary, init, |u| step.tables(u))?;
                let mut next = sample_scalar(g.as_ref(), grid, t_new)?;
                for j in 1..grid.n_cells() {
                    for i in 1..grid.n_cells() {
                        next.set(i, j, 2.0 * half.get(i, j) - prev.get(i, j));
                    }
                }
                (next, it, ch)
            }
            TimeScheme::Bdf3 | TimeScheme::Bdf4 => {
                let depth = this.history_weights().len();
                let history: Vec<&ScalarField> = levels[levels.len() - depth..].iter().collect();
                let boundary = sample_scalar(g.as_ref(), grid, t_new)?;
                let init = start_guess(&levels, 1.0, config.extrapolate);
                let builder = CoefficientBuilder::new(case, grid, t_new, config.options)?;
                let step = builder.step(this, &history, r)?;
                picard.run(n, &boundary, init, |u| step.tables(u))?
            }
        };
        steps.push(StepDiagnostic {
            step: n,
            scheme: this,
            t: t_new,
            iterations,
            final_change,
        });
        levels.push(next);
        if levels.len() > 4 {
            levels.remove(0);
        }
    }
    Ok(SolutionReport {
        variant,
        field: levels.pop().expect("final level"),
        t: n_steps as f64 * tau,
        tau: Some(tau),
        iterations: log,
        steps,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

/// First Picard iterate for a level `theta` steps past the newest one:
/// polynomial extrapolation through up to three stored levels, or the
/// newest level itself.
fn start_guess(levels: &[ScalarField], theta: f64, extrapolate: bool) -> ScalarField {
    let newest = levels.last().expect("initial level");
    let weights: &[f64] = match (extrapolate, levels.len()) {
        (false, _) | (_, 1) => return newest.clone(),
        (true, 2) => &[-theta, 1.0 + theta],
        (true, _) => &[
            theta * (theta + 1.0) / 2.0,
            -theta * (theta + 2.0),
            (theta + 1.0) * (theta + 2.0) / 2.0,
        ],
    };
    let used = &levels[levels.len() - weights.len()..];
    let mut out = ScalarField::zeros(newest.grid());
    for (w, level) in weights.iter().zip(used) {
        out.values_mut()
            .iter_mut()
            .zip(level.values())
            .for_each(|(o, v)| *o += w * v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::{example1, example4, zero_case, CaseKind};

    #[test]
    fn zero_steady_case_stays_zero() {
        let grid = GridSpec::new(8).unwrap();
        let mut cfg = SolveConfig::default();
        cfg.steady_iterations = 1;
        let rep = solve_steady(&zero_case(CaseKind::Steady), grid, &cfg).unwrap();
        assert!(rep.field.values().iter().all(|&v| v == 0.0));
        assert_eq!(rep.iterations.len(), 1);
    }

    #[test]
    fn zero_transient_case_stays_zero() {
        let grid = GridSpec::new(8).unwrap();
        let mut cfg = SolveConfig::default();
        cfg.step_iterations = 2;
        let z = zero_case(CaseKind::Transient);
        for run in [run_cn, run_bdf3, run_bdf4] {
            let rep = run(&z, grid, &cfg).unwrap();
            assert!(rep.field.values().iter().all(|&v| v == 0.0));
            assert!((rep.t - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn step_schedule() {
        let grid = GridSpec::new(8).unwrap();
        let mut cfg = SolveConfig::default();
        cfg.step_iterations = 1;
        let rep = run_bdf4(&zero_case(CaseKind::Transient), grid, &cfg).unwrap();
        let schemes: Vec<_> = rep.steps.iter().map(|s| s.scheme).collect();
        assert_eq!(schemes.len(), 8);
        assert_eq!(&schemes[..4], &[TimeScheme::Cn, TimeScheme::Cn, TimeScheme::Bdf3, TimeScheme::Bdf4]);
        assert_eq!(rep.iterations.len(), 8);
    }

    #[test]
    fn non_integer_step_count_is_rejected() {
        let grid = GridSpec::new(8).unwrap();
        let mut cfg = SolveConfig::default();
        cfg.r = Some(0.3);
        let e = run_bdf3(&zero_case(CaseKind::Transient), grid, &cfg);
        assert!(matches!(e, Err(Error::NonIntegerSteps(_))));
    }

    #[test]
    fn case_kind_is_checked() {
        let grid = GridSpec::new(8).unwrap();
        let cfg = SolveConfig::default();
        assert!(matches!(solve_steady(&example4(), grid, &cfg), Err(Error::CaseKind { .. })));
        assert!(matches!(run_cn(&example1(), grid, &cfg), Err(Error::CaseKind { .. })));
    }

    #[test]
    fn explicit_stencils_are_steady_only() {
        let grid = GridSpec::new(8).unwrap();
        let cfg = SolveConfig::with_variant(StencilVariant::General4);
        assert!(matches!(
            run_cn(&zero_case(CaseKind::Transient), grid, &cfg),
            Err(Error::ModeMismatch(_))
        ));
    }

    #[test]
    fn early_stop_shortens_the_loop() {
        let grid = GridSpec::new(8).unwrap();
        let mut cfg = SolveConfig::with_variant(StencilVariant::General4);
        cfg.early_stop_tol = Some(1e-10);
        let rep = solve_steady(&example1(), grid, &cfg).unwrap();
        assert!(rep.iterations.len() < 40);
        assert!(rep.iterations.last().unwrap().change <= 1e-10);
    }
}
