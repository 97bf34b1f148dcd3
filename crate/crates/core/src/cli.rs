//! Command-line front end.
//!
//! Exit statuses: 0 success, 1 usage or configuration error, 2 the constant
//! fit failed (no convergence or singular Jacobian), 3 a verdict was FAIL,
//! 4 any other runtime error.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::bench::{bench_sweep, emit, solve_report, table1, BenchError, ReportFormat, SolveSettings, TABLE1_SLACK};
use crate::config::{ConfigError, ConfigFile, ProblemBlock};
use crate::opia::{default_degree_cap, iterate, OpiaError};
use crate::optimize::{approximant_residual, FitMode, OptimizeError};
use crate::problem::ProblemCatalogEntry;
use crate::scalar::{CoefficientDomain, Rational, Scalar};
use crate::series::DEFAULT_EXP_ORDER;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FIT: i32 = 2;
pub const EXIT_VERDICT: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "opim",
    version,
    about = "Optimal perturbation iteration for singular Emden-Fowler problems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the constants for one problem and report errors against the truth
    Solve(RunArgs),
    /// Print the residual R(x; C) for given constants
    Residual {
        #[command(flatten)]
        run: RunArgs,
        /// Constants C_0..C_{m-1}, comma separated
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        constants: Vec<f64>,
    },
    /// Reproduce the Example 1 error table and compare with the published one
    Table1 {
        #[arg(long, value_delimiter = ',', default_values_t = vec![4usize, 5])]
        orders: Vec<usize>,
        #[arg(long, default_value_t = TABLE1_SLACK)]
        slack: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Fit every catalog problem and summarize
    Bench {
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[arg(long)]
        exp_order: Option<usize>,
        #[arg(long)]
        ref_tol: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Catalog name: example1, isothermal, lane_emden_s1, lane_emden_s5
    #[arg(long)]
    pub problem: Option<String>,
    /// TOML run configuration (schema 1)
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub degree_cap: Option<usize>,
    /// collocation or least-squares
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub points: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub init: Option<Vec<f64>>,
    /// a,b
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub domain: Option<Vec<f64>>,
    /// Write the iterates and corrections to this file
    #[arg(long)]
    pub dump_trace: Option<PathBuf>,
    #[arg(long)]
    pub exp_order: Option<usize>,
    #[arg(long)]
    pub ref_tol: Option<f64>,
    /// rational or float
    #[arg(long)]
    pub coefficients: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    Catalog(String),
    Config(PathBuf),
}

/// Flags merged over the optional config file, validated.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: ProblemSource,
    pub problem: ProblemBlock,
    pub order: usize,
    pub degree_cap: usize,
    pub domain_kind: CoefficientDomain,
    pub mode: FitMode,
    pub points: Option<Vec<f64>>,
    pub init: Option<Vec<f64>>,
    pub domain: Option<(f64, f64)>,
    pub format: ReportFormat,
    pub out: Option<PathBuf>,
    pub dump_trace: Option<PathBuf>,
    pub exp_order: usize,
    pub ref_tol: f64,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Fit(OptimizeError),
    #[error("verdict FAIL: {0}")]
    Verdict(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => EXIT_USAGE,
            CliError::Fit(_) => EXIT_FIT,
            CliError::Verdict(_) => EXIT_VERDICT,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<OptimizeError> for CliError {
    fn from(e: OptimizeError) -> Self {
        match e {
            OptimizeError::SingularJacobian { .. } | OptimizeError::NoConvergence { .. } => CliError::Fit(e),
            OptimizeError::InvalidPoints(_)
            | OptimizeError::ConstantCount { .. }
            | OptimizeError::InvalidInterval(..) => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<OpiaError> for CliError {
    fn from(e: OpiaError) -> Self {
        match e {
            OpiaError::ConstantCount { .. } | OpiaError::ZeroOrder => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Optimize(o) => o.into(),
            BenchError::Iteration(o) => o.into(),
            BenchError::Problem(p) => CliError::Config(ConfigError::Problem(p)),
            BenchError::UnsupportedOrder(_) => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn parse_format(s: Option<&str>, default: ReportFormat) -> Result<ReportFormat, CliError> {
    s.map(|f| f.parse().map_err(CliError::Usage)).unwrap_or(Ok(default))
}

impl RunConfig {
    pub fn from_args(args: &RunArgs) -> Result<Self, CliError> {
        let (source, file) = match (&args.problem, &args.config) {
            (Some(_), Some(_)) => return Err(CliError::Usage("give either --problem or --config, not both".into())),
            (None, None) => {
                return Err(CliError::Usage(
                    "no problem given (use --problem NAME or --config FILE)".into(),
                ))
            }
            (Some(name), None) => (ProblemSource::Catalog(name.clone()), None),
            (None, Some(path)) => (ProblemSource::Config(path.clone()), Some(ConfigFile::load(path)?)),
        };
        let solver = file.as_ref().map(|f| f.solver.clone()).unwrap_or_default();
        let problem = match (&source, &file) {
            (ProblemSource::Catalog(name), _) => ProblemBlock {
                catalog: Some(name.clone()),
                ..ProblemBlock::default()
            },
            (_, Some(f)) => f.problem.clone(),
            (_, None) => unreachable!(),
        };

        let order = args.order.or(solver.order).unwrap_or(3);
        let mode = match args.mode.as_deref().or(solver.mode.as_deref()) {
            Some(m) => m.parse().map_err(CliError::Usage)?,
            None => FitMode::Collocation,
        };
        let domain_kind = match args.coefficients.as_deref().or(solver.coefficients.as_deref()) {
            Some(d) => d.parse().map_err(CliError::Usage)?,
            None => CoefficientDomain::Float,
        };
        let domain = match &args.domain {
            Some(v) if v.len() == 2 => Some((v[0], v[1])),
            Some(_) => return Err(CliError::Usage("--domain takes exactly two values a,b".into())),
            None => None,
        };
        let cfg = RunConfig {
            source,
            problem,
            order,
            degree_cap: args
                .degree_cap
                .or(solver.degree_cap)
                .unwrap_or_else(|| default_degree_cap(order)),
            domain_kind,
            mode,
            points: args.points.clone().or(solver.points),
            init: args.init.clone().or(solver.init),
            domain,
            format: parse_format(args.output.format.as_deref(), ReportFormat::Text)?,
            out: args.output.out.clone(),
            dump_trace: args.dump_trace.clone(),
            exp_order: args.exp_order.or(solver.exp_order).unwrap_or(DEFAULT_EXP_ORDER),
            ref_tol: args.ref_tol.or(solver.ref_tol).unwrap_or(1e-12),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.order < 1 {
            return Err(CliError::Usage("order must be at least 1".into()));
        }
        if self.degree_cap < 2 {
            return Err(CliError::Usage("degree cap must be at least 2".into()));
        }
        if self.exp_order < 1 {
            return Err(CliError::Usage("exp order must be at least 1".into()));
        }
        if !(self.ref_tol > 0.0) {
            return Err(CliError::Usage("reference tolerance must be positive".into()));
        }
        if let Some(init) = &self.init {
            if init.len() != self.order {
                return Err(CliError::Usage(format!(
                    "--init has {} values, order {} needs {}",
                    init.len(),
                    self.order,
                    self.order
                )));
            }
        }
        if let Some((a, b)) = self.domain {
            if !(a < b) {
                return Err(CliError::Usage(format!("domain [{a}, {b}] is empty or reversed")));
            }
        }
        Ok(())
    }

    pub fn entry<T: Scalar>(&self) -> Result<ProblemCatalogEntry<T>, CliError> {
        let mut entry = self.problem.build::<T>(self.exp_order)?;
        if let Some(d) = self.domain {
            entry.problem.domain = d;
        }
        Ok(entry)
    }

    fn settings(&self) -> SolveSettings {
        let mut s = SolveSettings::new(self.order, self.mode);
        s.degree_cap = Some(self.degree_cap);
        s.fit.points = self.points.clone();
        s.fit.init = self.init.clone();
        s.ref_tol = self.ref_tol;
        s
    }
}

fn write_output(path: Option<&PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", p.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Runtime(e.to_string())),
    }
}

fn run_solve(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let entry = cfg.entry::<f64>()?;
    let report = solve_report(&entry, &cfg.settings())?;
    if let Some(path) = &cfg.dump_trace {
        let dump = match cfg.domain_kind {
            CoefficientDomain::Float => {
                iterate(&entry.problem, cfg.order, &report.fit.constants, cfg.degree_cap)?.dump()
            }
            CoefficientDomain::Rational => {
                let exact = cfg.entry::<Rational>()?;
                let cs: Vec<Rational> = report.fit.constants.iter().map(|c| Rational::from_f64(*c)).collect();
                iterate(&exact.problem, cfg.order, &cs, cfg.degree_cap)?.dump()
            }
        };
        write_output(Some(path), &dump, stdout)?;
    }
    let mut text = emit(&report, cfg.format);
    if cfg.format == ReportFormat::Csv {
        text.insert_str(0, &format!("# coefficients={}\n", cfg.domain_kind));
    }
    write_output(cfg.out.as_ref(), &text, stdout)?;
    if !report.fit.converged {
        return Err(CliError::Fit(OptimizeError::NoConvergence {
            best: Box::new(report.fit),
        }));
    }
    Ok(())
}

fn residual_text<T: Scalar>(cfg: &RunConfig, constants: &[f64]) -> Result<String, CliError> {
    let entry = cfg.entry::<T>()?;
    let cs: Vec<T> = constants.iter().map(|c| T::from_f64(*c)).collect();
    let r = approximant_residual(&entry.problem, cfg.order, &cs, cfg.degree_cap)?;
    let (a, b) = entry.problem.domain;
    let rf = r.poly.to_f64();
    let j = (&rf * &rf)
        .definite_integral(&a, &b)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut out = String::new();
    match cfg.format {
        ReportFormat::Text => {
            let _ = writeln!(out, "problem = {}", entry.name);
            let _ = writeln!(out, "residual = {}", r.poly);
            let _ = writeln!(out, "objective_j = {j:?}");
            let _ = writeln!(out, "max_abs = {:?}", r.max_abs_on(a, b, 200));
        }
        ReportFormat::Csv => {
            let _ = writeln!(out, "# problem={}", entry.name);
            let _ = writeln!(out, "# residual={}", r.poly);
            let _ = writeln!(out, "# objective_j={j:?}");
            out.push_str("x,residual\n");
            for i in 0..=100 {
                let x = a + (b - a) * i as f64 / 100.0;
                let _ = writeln!(out, "{x:?},{:?}", rf.eval(&x));
            }
        }
    }
    Ok(out)
}

fn run_residual(cfg: &RunConfig, constants: &[f64], stdout: &mut dyn Write) -> Result<(), CliError> {
    if constants.len() != cfg.order {
        return Err(CliError::Usage(format!(
            "--constants has {} values, order {} needs {}",
            constants.len(),
            cfg.order,
            cfg.order
        )));
    }
    let text = match cfg.domain_kind {
        CoefficientDomain::Float => residual_text::<f64>(cfg, constants)?,
        CoefficientDomain::Rational => residual_text::<Rational>(cfg, constants)?,
    };
    write_output(cfg.out.as_ref(), &text, stdout)
}

fn run_table1(orders: &[usize], slack: f64, output: &OutputArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    if !(slack > 0.0) {
        return Err(CliError::Usage("--slack must be positive".into()));
    }
    let format = parse_format(output.format.as_deref(), ReportFormat::Csv)?;
    let report = table1(orders, slack)?;
    let text = match format {
        ReportFormat::Csv => report.to_csv(),
        ReportFormat::Text => report.to_text(),
    };
    write_output(output.out.as_ref(), &text, stdout)?;
    if !report.passes() {
        let worst = report
            .entries
            .iter()
            .filter(|e| e.row.abs_error() > slack * e.published)
            .count();
        return Err(CliError::Verdict(format!(
            "{worst} of {} errors exceed {slack} x published",
            report.entries.len()
        )));
    }
    Ok(())
}

fn run_bench(
    order: usize,
    exp_order: Option<usize>,
    ref_tol: Option<f64>,
    output: &OutputArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    if order < 1 {
        return Err(CliError::Usage("order must be at least 1".into()));
    }
    let format = parse_format(output.format.as_deref(), ReportFormat::Csv)?;
    let results = bench_sweep(order, exp_order.unwrap_or(DEFAULT_EXP_ORDER), ref_tol.unwrap_or(1e-12));
    let mut out = String::new();
    let mut failures = 0;
    if format == ReportFormat::Csv {
        let _ = writeln!(out, "# bench order={order}");
        out.push_str("problem,converged,iterations,objective_j,residual_max,max_abs_error\n");
    }
    for (name, res) in &results {
        match res {
            Ok(r) => {
                failures += usize::from(!r.fit.converged);
                match format {
                    ReportFormat::Csv => {
                        let _ = writeln!(
                            out,
                            "{name},{},{},{:?},{:?},{:?}",
                            r.fit.converged,
                            r.fit.iterations,
                            r.objective,
                            r.residual_max,
                            r.table.max_error()
                        );
                    }
                    ReportFormat::Text => {
                        let _ = writeln!(
                            out,
                            "{name:<14} converged={} iterations={} J={:e} max|R|={:e} max error={:e} ({:?})",
                            r.fit.converged,
                            r.fit.iterations,
                            r.objective,
                            r.residual_max,
                            r.table.max_error(),
                            r.wall_time
                        );
                    }
                }
            }
            Err(e) => {
                failures += 1;
                let _ = writeln!(stderr, "{name}: {e}");
                if format == ReportFormat::Csv {
                    let _ = writeln!(out, "{name},false,,,,");
                } else {
                    let _ = writeln!(out, "{name:<14} failed: {e}");
                }
            }
        }
    }
    let verdict = if failures == 0 { "PASS" } else { "FAIL" };
    if format == ReportFormat::Csv {
        let _ = writeln!(out, "# verdict={verdict}");
    } else {
        let _ = writeln!(out, "verdict: {verdict}");
    }
    write_output(output.out.as_ref(), &out, stdout)?;
    if failures > 0 {
        return Err(CliError::Verdict(format!(
            "{failures} of {} problems failed",
            results.len()
        )));
    }
    Ok(())
}

pub fn dispatch(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Solve(args) => run_solve(&RunConfig::from_args(args)?, stdout),
        Command::Residual { run, constants } => run_residual(&RunConfig::from_args(run)?, constants, stdout),
        Command::Table1 { orders, slack, output } => run_table1(orders, *slack, output, stdout),
        Command::Bench {
            order,
            exp_order,
            ref_tol,
            output,
        } => run_bench(*order, *exp_order, *ref_tol, output, stdout, stderr),
    }
}

/// Parses `args` (including the program name) and runs; returns the exit status.
pub fn main_with_args<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return EXIT_OK;
            }
            let msg = e.to_string();
            let line = msg
                .lines()
                .next()
                .unwrap_or("usage error")
                .trim_start_matches("error: ");
            let _ = writeln!(stderr, "opim: {line}");
            return EXIT_USAGE;
        }
    };
    match dispatch(&cli, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "opim: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = main_with_args(std::iter::once("opim").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn missing_problem_is_a_usage_error() {
        let (code, out, err) = run(&["solve"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(out.is_empty());
        assert_eq!(err.lines().count(), 1);
        assert!(err.contains("no problem given"));
    }

    #[test]
    fn order_zero_is_a_usage_error() {
        let (code, _, err) = run(&["solve", "--problem", "example1", "--order", "0"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("order must be at least 1"));
    }

    #[test]
    fn unknown_flags_and_modes() {
        assert_eq!(run(&["solve", "--problem", "example1", "--bogus"]).0, EXIT_USAGE);
        assert_eq!(
            run(&["solve", "--problem", "example1", "--mode", "newton"]).0,
            EXIT_USAGE
        );
        assert_eq!(run(&["solve", "--problem", "nope"]).0, EXIT_USAGE);
        assert_eq!(run(&["frobnicate"]).0, EXIT_USAGE);
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("table1"));
    }

    #[test]
    fn order_three_fit_at_published_points() {
        let (code, out, err) = run(&[
            "solve",
            "--problem",
            "example1",
            "--order",
            "3",
            "--mode",
            "collocation",
            "--points",
            "0.3,0.6,0.9",
            "--init",
            "0.3,0.3,0.2",
        ]);
        assert_eq!(code, EXIT_OK, "{err}");
        assert!(out.contains("converged = true"));
        assert!(out.contains("0.33423439"));
    }

    #[test]
    fn residual_in_rational_mode_is_exact() {
        let (code, out, _) = run(&[
            "residual",
            "--problem",
            "example1",
            "--order",
            "1",
            "--constants",
            "0",
            "--coefficients",
            "rational",
        ]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("residual = rational:[-6, 0, -4]"), "{out}");
    }

    #[test]
    fn singular_collocation_exits_two_and_names_points() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("flat.toml");
        std::fs::write(
            &path,
            "schema = 1\n[problem]\nk = 2\nbeta = [0]\ngamma = \"power:1\"\ng = [1]\ny0 = 0\n",
        )
        .unwrap();
        let (code, _, err) = run(&[
            "solve",
            "--config",
            path.to_str().unwrap(),
            "--order",
            "2",
            "--points",
            "0.4,0.8",
        ]);
        assert_eq!(code, EXIT_FIT, "{err}");
        assert!(err.contains("(0.4, 0.8)"), "{err}");
    }
}
