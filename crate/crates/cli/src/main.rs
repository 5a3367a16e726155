//! `compact9` command-line driver.
//!
//! Exit codes: 0 on success, 1 on a usage error (bad flag, unknown case,
//! inconsistent options), 2 when a computation fails or a check does not pass.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use compact9::cases::{lookup_case, ManufacturedCase};
use compact9::coefficients::{CoefficientOptions, DerivativeSource, TimeScheme};
use compact9::derivatives::SelectionPolicy;
use compact9::grid::GridSpec;
use compact9::harness::{
    consistency_probe, convergence_study, emit_report, exact_step_tables, exact_tables, level_result,
    run_algorithm, Algorithm, ConvergenceReport, ReportFormat,
};
use compact9::solvers::SolveConfig;
use compact9::sparse::SolverKind;
use compact9::stencil::dump::{sample_records, write_stencil_dump};
use compact9::stencil::{build_stencil_field, mmatrix_report, MMatrixReport, StencilVariant};
use compact9::Error;

#[derive(Parser, Debug)]
#[command(name = "compact9", version, about = "Compact 9-point solvers for nonlinear convection-diffusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve a steady case on one grid.
    SolveSteady(RunArgs),
    /// Integrate a transient case to t = 1 on one grid.
    SolveTransient(RunArgs),
    /// Solve on a sequence of doubling grids and tabulate errors and orders.
    Convergence(RunArgs),
    /// Residual of the stencils applied to the exact solution.
    Consistency(RunArgs),
    /// Sign and row-sum checks of the stencils at the exact solution.
    CheckMmatrix(RunArgs),
    /// Write derived reduced stencils as JSON.
    DumpStencils(RunArgs),
}

impl Command {
    fn args(&self) -> &RunArgs {
        match self {
            Command::SolveSteady(a)
            | Command::SolveTransient(a)
            | Command::Convergence(a)
            | Command::Consistency(a)
            | Command::CheckMmatrix(a)
            | Command::DumpStencils(a) => a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum VariantArg {
    General4,
    Special4,
    /// The reduced stencil; picks the reaction form for transient runs.
    Reduced,
    #[value(name = "reduced_elliptic", alias = "reduced-elliptic")]
    ReducedElliptic,
    #[value(name = "reduced_helmholtz", alias = "reduced-helmholtz")]
    ReducedHelmholtz,
}

impl VariantArg {
    fn resolve(self, transient: bool) -> StencilVariant {
        match self {
            VariantArg::General4 => StencilVariant::General4,
            VariantArg::Special4 => StencilVariant::Special4,
            VariantArg::Reduced if transient => StencilVariant::ReducedHelmholtz,
            VariantArg::Reduced | VariantArg::ReducedElliptic => StencilVariant::ReducedElliptic,
            VariantArg::ReducedHelmholtz => StencilVariant::ReducedHelmholtz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum AlgoArg {
    Steady,
    Cn,
    Bdf3,
    Bdf4,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Steady => Algorithm::Steady,
            AlgoArg::Cn => Algorithm::Cn,
            AlgoArg::Bdf3 => Algorithm::Bdf3,
            AlgoArg::Bdf4 => Algorithm::Bdf4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SolverArg {
    Direct,
    Bicgstab,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SourceArg {
    Auto,
    Grid,
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum PolicyArg {
    #[value(name = "most_centered", alias = "most-centered")]
    MostCentered,
    #[value(name = "first_listed", alias = "first-listed")]
    FirstListed,
}

/// Run settings. Every field can come from `--config`; flags win.
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunArgs {
    /// JSON file with any of these settings (snake_case keys).
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Case name: example1 .. example4.
    #[arg(long)]
    case: Option<String>,
    /// Cells per side.
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated doubling cell counts, e.g. 8,16,32,64.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    #[arg(long, value_enum)]
    algo: Option<AlgoArg>,
    /// Time-step ratio tau / h.
    #[arg(long)]
    r: Option<f64>,
    /// Picard iterations of a steady solve.
    #[arg(long)]
    iterations: Option<usize>,
    /// Picard iterations per time step.
    #[arg(long)]
    step_iterations: Option<usize>,
    /// Stop Picard once the max-norm change falls to this value.
    #[arg(long)]
    early_stop: Option<f64>,
    #[arg(long, value_enum)]
    solver: Option<SolverArg>,
    /// Where coefficient derivatives come from.
    #[arg(long, value_enum)]
    derivatives: Option<SourceArg>,
    /// Difference formula selection near the boundary.
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
    /// Report or dump path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format; defaults to the extension of --out.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Also write the final stencils of a steady solve to this JSON file.
    #[arg(long)]
    dump_stencils: Option<PathBuf>,
    /// Nodes sampled into a stencil dump.
    #[arg(long)]
    dump_count: Option<usize>,
    /// Check the M-matrix property at every Picard iteration.
    #[arg(long)]
    check_mmatrix: bool,
    /// Worker threads for node-parallel work; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
}

impl RunArgs {
    /// Values from `self` where set, else from `file`.
    fn over(self, file: RunArgs) -> RunArgs {
        RunArgs {
            config: self.config,
            case: self.case.or(file.case),
            n: self.n.or(file.n),
            levels: self.levels.or(file.levels),
            variant: self.variant.or(file.variant),
            algo: self.algo.or(file.algo),
            r: self.r.or(file.r),
            iterations: self.iterations.or(file.iterations),
            step_iterations: self.step_iterations.or(file.step_iterations),
            early_stop: self.early_stop.or(file.early_stop),
            solver: self.solver.or(file.solver),
            derivatives: self.derivatives.or(file.derivatives),
            policy: self.policy.or(file.policy),
            out: self.out.or(file.out),
            format: self.format.or(file.format),
            dump_stencils: self.dump_stencils.or(file.dump_stencils),
            dump_count: self.dump_count.or(file.dump_count),
            check_mmatrix: self.check_mmatrix || file.check_mmatrix,
            threads: self.threads.or(file.threads),
        }
    }
}

/// A failed run and its exit code.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

fn usage(err: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 1, err: err.into() }
}

fn numerical(err: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, err: err.into() }
}

/// Precondition violations are usage errors; everything else is a failed computation.
fn classify(err: Error) -> Failure {
    match err {
        Error::UnknownCase { .. }
        | Error::CaseKind { .. }
        | Error::GridTooCoarse { .. }
        | Error::InvalidRatio(_)
        | Error::NonIntegerSteps(_)
        | Error::InvalidLevels(_)
        | Error::ModeMismatch(_)
        | Error::CoefficientsNotEqual { .. } => usage(err),
        other => numerical(other),
    }
}

type Outcome = Result<(), Failure>;

/// Fully resolved settings.
struct Run {
    case: ManufacturedCase,
    args: RunArgs,
    options: CoefficientOptions,
}

impl Run {
    fn new(args: RunArgs) -> Result<Self, Failure> {
        let args = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))
                    .map_err(usage)?;
                let file: RunArgs = serde_json::from_str(&text)
                    .with_context(|| format!("parsing {}", path.display()))
                    .map_err(usage)?;
                args.over(file)
            }
            None => args,
        };
        if let Some(t) = args.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global()
                .map_err(numerical)?;
        }
        let name = args.case.clone().ok_or_else(|| usage(anyhow!("--case is required")))?;
        let case = lookup_case(&name).map_err(classify)?;
        let options = CoefficientOptions {
            source: match args.derivatives.unwrap_or(SourceArg::Auto) {
                SourceArg::Auto => DerivativeSource::Auto,
                SourceArg::Grid => DerivativeSource::Grid,
                SourceArg::Analytic => DerivativeSource::Analytic,
            },
            policy: match args.policy.unwrap_or(PolicyArg::MostCentered) {
                PolicyArg::MostCentered => SelectionPolicy::MostCentered,
                PolicyArg::FirstListed => SelectionPolicy::FirstListed,
            },
        };
        Ok(Self { case, args, options })
    }

    fn transient(&self) -> bool {
        !self.case.is_steady()
    }

    fn variant(&self) -> StencilVariant {
        self.args.variant.unwrap_or(VariantArg::Reduced).resolve(self.transient())
    }

    /// `--algo`, else BDF4 for transient cases and the steady solver otherwise.
    fn algorithm(&self) -> Algorithm {
        self.algorithm_or(self.transient())
    }

    fn algorithm_or(&self, transient: bool) -> Algorithm {
        match self.args.algo {
            Some(a) => a.into(),
            None if transient => Algorithm::Bdf4,
            None => Algorithm::Steady,
        }
    }

    fn scheme(&self) -> Result<TimeScheme, Failure> {
        self.algorithm()
            .scheme()
            .ok_or_else(|| usage(anyhow!("--algo must be cn, bdf3 or bdf4 for a transient case")))
    }

    fn grid(&self) -> Result<GridSpec, Failure> {
        GridSpec::new(self.args.n.unwrap_or(64)).map_err(classify)
    }

    fn levels(&self, default: &[usize]) -> Vec<usize> {
        self.args.levels.clone().unwrap_or_else(|| default.to_vec())
    }

    fn solve_config(&self) -> SolveConfig {
        let base = SolveConfig::with_variant(self.variant());
        SolveConfig {
            steady_iterations: self.args.iterations.unwrap_or(base.steady_iterations),
            step_iterations: self.args.step_iterations.unwrap_or(base.step_iterations),
            r: self.args.r,
            early_stop_tol: self.args.early_stop,
            options: self.options,
            solver: match self.args.solver.unwrap_or(SolverArg::Direct) {
                SolverArg::Direct => SolverKind::Direct,
                SolverArg::Bicgstab => SolverKind::Bicgstab,
            },
            check_mmatrix: self.args.check_mmatrix,
            ..base
        }
    }

    fn format(&self, path: &Path) -> ReportFormat {
        match self.args.format {
            Some(FormatArg::Csv) => ReportFormat::Csv,
            Some(FormatArg::Json) => ReportFormat::Json,
            None => ReportFormat::from_path(path),
        }
    }

    fn write(&self, path: &Path, csv: impl FnOnce() -> String, json: impl FnOnce() -> serde_json::Result<String>) -> Outcome {
        let text = match self.format(path) {
            ReportFormat::Csv => csv(),
            ReportFormat::Json => json().map_err(numerical)?,
        };
        std::fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(numerical)?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn dump_count(&self) -> usize {
        self.args.dump_count.unwrap_or(20)
    }
}

fn solve(run: &Run, steady: bool) -> Outcome {
    let algorithm = run.algorithm_or(!steady);
    if steady != algorithm.scheme().is_none() {
        let want = if steady { "steady" } else { "cn, bdf3 or bdf4" };
        return Err(usage(anyhow!("--algo must be {want} for this subcommand")));
    }
    let grid = run.grid()?;
    let cfg = run.solve_config();
    let sol = run_algorithm(&run.case, grid, &cfg, algorithm).map_err(classify)?;
    let level = level_result(&run.case, &sol).map_err(numerical)?;
    let mut report = ConvergenceReport::new(&run.case.name, algorithm, sol.variant, sol.tau.map(|t| t / grid.h()));
    report.push(level);
    print!("{report}");
    println!("time {:.2} s, t = {}", sol.elapsed_secs, sol.t);
    if cfg.check_mmatrix {
        let failed = sol.iterations.iter().filter(|d| d.mmatrix_pass == Some(false)).count();
        println!("M-matrix check: {failed} of {} iterations failed", sol.iterations.len());
    }
    if let Some(path) = &run.args.dump_stencils {
        if !steady {
            return Err(usage(anyhow!("--dump-stencils applies to solve-steady; use dump-stencils for transient cases")));
        }
        let tables = compact9::coefficients::steady_coefficients(&run.case, &sol.field, run.options).map_err(numerical)?;
        let field = build_stencil_field(&tables, sol.variant).map_err(numerical)?;
        let records = sample_records(&tables, &field, run.dump_count());
        write_stencil_dump(path, &records).map_err(numerical)?;
        println!("wrote {} stencil records to {}", records.len(), path.display());
    }
    if let Some(path) = &run.args.out {
        emit_report(&report, path, run.format(path)).map_err(numerical)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn convergence(run: &Run) -> Outcome {
    let cfg = run.solve_config();
    let report = convergence_study(&run.case, run.algorithm(), &cfg, &run.levels(&[8, 16, 32, 64])).map_err(classify)?;
    print!("{report}");
    if let Some(path) = &run.args.out {
        emit_report(&report, path, run.format(path)).map_err(numerical)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn consistency(run: &Run) -> Outcome {
    let report = consistency_probe(&run.case, run.variant(), &run.levels(&[16, 32, 64]), run.options).map_err(classify)?;
    println!("{} / {}", report.case, report.variant.name());
    println!("{:>7} {:>12}", "h", "residual");
    for l in &report.levels {
        println!("{:>7} {:>12.4e}", format!("1/{}", l.n_cells), l.max_residual);
    }
    println!("order {:.2}", report.order);
    if let Some(path) = &run.args.out {
        run.write(path, || report.csv(), || serde_json::to_string_pretty(&report))?;
    }
    Ok(())
}

/// Stencil tables at the exact solution: steady cases directly, transient
/// cases through the first step of `--algo`.
fn exact_case_tables(run: &Run) -> Result<compact9::coefficients::CoefficientTables, Failure> {
    let grid = run.grid()?;
    if run.transient() {
        let scheme = run.scheme()?;
        let r = run.args.r.unwrap_or_else(|| scheme.default_ratio());
        Ok(exact_step_tables(&run.case, grid, scheme, r, run.options).map_err(classify)?.0)
    } else {
        Ok(exact_tables(&run.case, grid, run.variant(), run.options).map_err(classify)?.0)
    }
}

fn check_mmatrix(run: &Run) -> Outcome {
    let tables = exact_case_tables(run)?;
    let variant = run.variant();
    let field = build_stencil_field(&tables, variant).map_err(classify)?;
    let report: MMatrixReport = mmatrix_report(&field);
    println!(
        "{} / {} at h = 1/{}: {} nodes, {} violations",
        run.case.name,
        variant.name(),
        field.grid.n_cells(),
        report.nodes_checked,
        report.violations.len()
    );
    for v in report.violations.iter().take(10) {
        println!("  ({}, {}) {:?} {:.3e}", v.i, v.j, v.kind, v.value);
    }
    if let Some(path) = &run.args.out {
        let text = serde_json::to_string_pretty(&report).map_err(numerical)?;
        std::fs::write(path, text).map_err(numerical)?;
        println!("wrote {}", path.display());
    }
    if report.pass {
        println!("PASS");
        Ok(())
    } else {
        Err(numerical(anyhow!("M-matrix check failed")))
    }
}

fn dump_stencils(run: &Run) -> Outcome {
    let path = run
        .args
        .out
        .as_ref()
        .or(run.args.dump_stencils.as_ref())
        .ok_or_else(|| usage(anyhow!("--out is required")))?;
    let variant = run.variant();
    if !matches!(variant, StencilVariant::ReducedElliptic | StencilVariant::ReducedHelmholtz) {
        return Err(usage(anyhow!("only reduced stencils carry derived coefficients")));
    }
    let tables = exact_case_tables(run)?;
    let field = build_stencil_field(&tables, variant).map_err(classify)?;
    let records = sample_records(&tables, &field, run.dump_count());
    write_stencil_dump(path, &records).map_err(numerical)?;
    let worst = records.iter().map(|r| r.residual).fold(0.0, f64::max);
    println!(
        "wrote {} stencil records to {} (max match residual {worst:.1e})",
        records.len(),
        path.display()
    );
    Ok(())
}

fn dispatch(command: Command) -> Outcome {
    let run = Run::new(command.args().clone())?;
    match command {
        Command::SolveSteady(_) => solve(&run, true),
        Command::SolveTransient(_) => solve(&run, false),
        Command::Convergence(_) => convergence(&run),
        Command::Consistency(_) => consistency(&run),
        Command::CheckMmatrix(_) => check_mmatrix(&run),
        Command::DumpStencils(_) => dump_stencils(&run),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, err }) => {
            eprintln!("error: {err:#}");
            if code == 1 {
                eprintln!("run `compact9 help` for usage");
            }
            ExitCode::from(code)
        }
    }
}
