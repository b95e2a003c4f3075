//! Command-line front end.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 solver did
//! not converge (traces are still written).

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::diagnostics;
use crate::envelope::{PenaltyMode, PenaltyPlan, SubproblemSolver};
use crate::experiments::{self, ExperimentSpec};
use crate::io;
use crate::linalg;
use crate::penalty::{self, CapVariant};
use crate::problem::Problem;
use crate::prox::ProxFunction;
use crate::solvers::{self, Algorithm, EpsilonSchedule, ProxIalmParams, SolverConfig, StopRule, TerminalStatus};
use crate::{Error, Vector};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "meal", version, about = "Moreau envelope augmented Lagrangian solvers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a problem file.
    Solve(SolveArgs),
    /// Run the two-dimensional ALM counterexample.
    Exp1(OutputArgs),
    /// Run the random box-QP comparison.
    Exp2(Exp2Args),
    /// Certify every closed-form prox and oracle; exit 0 iff all pass.
    Check {
        #[arg(long, default_value_t = experiments::DEFAULT_SEED)]
        seed: u64,
    },
    /// Tabulate a prox map over a grid of scalar inputs.
    ProxTable(ProxTableArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Root directory for run outputs.
    #[arg(long, env = "MEAL_OUTPUT_DIR", default_value = "runs")]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SubproblemArg {
    Direct,
    Inner,
    Paper72,
}

#[derive(Debug, Args)]
pub struct Exp2Args {
    #[arg(long, default_value_t = experiments::DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub m: usize,
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    /// Subproblem path for LiMEAL.
    #[arg(long, value_enum, default_value = "inner")]
    pub subproblem_path: SubproblemArg,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    Meal,
    Imeal,
    Limeal,
    Alm,
    ProxIalm,
    Ialm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CapArg {
    MealA,
    MealB,
    ImealA,
    ImealB,
    LimealA,
    LimealB,
}

impl From<CapArg> for CapVariant {
    fn from(c: CapArg) -> Self {
        match c {
            CapArg::MealA => CapVariant::MealA,
            CapArg::MealB => CapVariant::MealB,
            CapArg::ImealA => CapVariant::ImealA,
            CapArg::ImealB => CapVariant::ImealB,
            CapArg::LimealA => CapVariant::LimealA,
            CapArg::LimealB => CapVariant::LimealB,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaTarget {
    Auto,
    Value(f64),
}

fn parse_alpha_target(s: &str) -> Result<AlphaTarget, String> {
    if s == "auto" {
        return Ok(AlphaTarget::Auto);
    }
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(AlphaTarget::Value(v)),
        _ => Err("expected `auto` or a positive number".into()),
    }
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(_) => Err("must be positive and finite".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn nonnegative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        Ok(_) => Err("must be nonnegative and finite".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn step_size(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v < 2.0 => Ok(v),
        Ok(_) => Err("must lie in (0, 2)".into()),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Problem file (JSON).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "meal")]
    pub algorithm: AlgorithmArg,
    /// Fixed penalty β.
    #[arg(long, value_parser = positive, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Proximal parameter γ; defaults to 1/(2ρ).
    #[arg(long, value_parser = positive, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    /// Anchor step size η ∈ (0, 2).
    #[arg(long, value_parser = step_size, allow_hyphen_values = true, default_value_t = 1.0)]
    pub eta: f64,
    /// Horizon K: constant β tuned for K iterations; the run stops at K.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub horizon: Option<u64>,
    /// `auto` (admissible cap) or an explicit α target used to select β.
    #[arg(long, value_parser = parse_alpha_target, allow_hyphen_values = true)]
    pub alpha_target: Option<AlphaTarget>,
    /// Cap used by `--alpha-target auto`; defaults per algorithm and metadata.
    #[arg(long, value_enum)]
    pub cap_variant: Option<CapArg>,
    /// ε₀ of the iMEAL schedule ε_k = ε₀/(k+1).
    #[arg(long, value_parser = nonnegative, allow_hyphen_values = true, default_value_t = 1e-2)]
    pub epsilon0: f64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..), default_value_t = 2000)]
    pub max_iters: u64,
    #[arg(long, value_parser = positive, allow_hyphen_values = true, default_value_t = 1e-6)]
    pub stat_tol: f64,
    #[arg(long, value_parser = positive, allow_hyphen_values = true, default_value_t = 1e-6)]
    pub feas_tol: f64,
    /// Prox-iALM proximal weight p (default 2·L_h).
    #[arg(long, value_parser = positive, allow_hyphen_values = true)]
    pub p: Option<f64>,
    /// Prox-iALM primal step s (default 1/(2(L_h + p + β‖A‖²))).
    #[arg(long, value_parser = positive, allow_hyphen_values = true)]
    pub s: Option<f64>,
    /// Prox-iALM dual step (default β).
    #[arg(long, value_parser = positive, allow_hyphen_values = true)]
    pub alpha_dual: Option<f64>,
    #[arg(long, value_enum, default_value = "inner")]
    pub subproblem_path: SubproblemArg,
    /// Check the descent and dual-control inequalities along the run.
    #[arg(long)]
    pub monitors: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProxKindArg {
    Zero,
    L1,
    Scad,
    Mcp,
    Box,
}

#[derive(Debug, Args)]
pub struct ProxTableArgs {
    #[arg(long, value_enum)]
    pub kind: ProxKindArg,
    #[arg(long, value_parser = positive, allow_hyphen_values = true)]
    pub gamma: f64,
    /// L1 weight.
    #[arg(long, value_parser = nonnegative, allow_hyphen_values = true, default_value_t = 1.0)]
    pub weight: f64,
    /// SCAD / MCP regularization λ.
    #[arg(long, value_parser = positive, allow_hyphen_values = true, default_value_t = 1.0)]
    pub lambda: f64,
    /// SCAD / MCP shape parameter.
    #[arg(long, value_parser = positive, allow_hyphen_values = true, default_value_t = 3.7)]
    pub a: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = -1.0)]
    pub lower: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    pub upper: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = -3.0)]
    pub from: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 3.0)]
    pub to: f64,
    #[arg(long, value_parser = positive, allow_hyphen_values = true, default_value_t = 0.1)]
    pub step: f64,
}

/// Parses `argv` (including the program name) and runs the command.
pub fn parse_and_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("\nFor more information, try '--help'.");
            EXIT_USAGE
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Schema { .. } => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other),
        }
    }
}

fn usage(flag: &str, e: impl std::fmt::Display) -> Failure {
    Failure::Usage(format!("invalid value for '{flag}': {e}"))
}

fn dispatch(command: Command) -> Result<i32, Failure> {
    match command {
        Command::Solve(args) => solve(args),
        Command::Exp1(out) => {
            let bundle = experiments::run_experiment(&ExperimentSpec::exp1()?)?;
            report_bundle(&bundle, &out.output)
        }
        Command::Exp2(args) => {
            let spec = ExperimentSpec::exp2(args.seed, args.m, args.n, subproblem(args.subproblem_path))
                .map_err(|e| usage("--m/--n", e))?;
            let bundle = experiments::run_experiment(&spec)?;
            report_bundle(&bundle, &args.out.output)
        }
        Command::Check { seed } => {
            let results = diagnostics::certification_suite(seed);
            let mut all = true;
            for r in &results {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
                all &= r.passed;
            }
            Ok(if all { EXIT_OK } else { EXIT_FAILURE })
        }
        Command::ProxTable(args) => prox_table(args),
    }
}

fn subproblem(arg: SubproblemArg) -> SubproblemSolver {
    match arg {
        SubproblemArg::Direct => SubproblemSolver::DirectQP,
        SubproblemArg::Inner => SubproblemSolver::exact(),
        SubproblemArg::Paper72 => SubproblemSolver::Paper72FastPath,
    }
}

fn report_bundle(bundle: &experiments::Bundle, root: &std::path::Path) -> Result<i32, Failure> {
    let dir = experiments::write_bundle(bundle, root)?;
    let mut failed = false;
    for o in &bundle.outcomes {
        match &o.result {
            Ok(t) => println!(
                "{:<18} {:<22} rows={:<5} to_tol={}{}",
                o.label,
                t.status.name(),
                t.rows.len(),
                t.iterations_to_tol.map_or("-".to_string(), |k| k.to_string()),
                if t.oscillating { " oscillating" } else { "" }
            ),
            Err(e) => {
                failed = true;
                println!("{:<18} error: {e}", o.label);
            }
        }
    }
    println!("wrote {}", dir.display());
    Ok(if failed { EXIT_FAILURE } else { EXIT_OK })
}

fn default_cap(algorithm: Algorithm, problem: &Problem) -> CapVariant {
    let lipschitz = match algorithm {
        Algorithm::Limeal => problem.prox_part.implicit_class().lipschitz().is_some(),
        _ => problem.implicit_class().lipschitz().is_some(),
    };
    match (algorithm, lipschitz) {
        (Algorithm::Imeal, true) => CapVariant::ImealA,
        (Algorithm::Imeal, false) => CapVariant::ImealB,
        (Algorithm::Limeal, true) => CapVariant::LimealA,
        (Algorithm::Limeal, false) => CapVariant::LimealB,
        (_, true) => CapVariant::MealA,
        (_, false) => CapVariant::MealB,
    }
}

fn solve(args: SolveArgs) -> Result<i32, Failure> {
    let problem = io::load_problem(&args.input).map_err(|e| match e {
        Error::Io(io) => usage("--input", io),
        other => Failure::Usage(other.to_string()),
    })?;
    let algorithm = match args.algorithm {
        AlgorithmArg::Meal => Algorithm::Meal,
        AlgorithmArg::Imeal => Algorithm::Imeal,
        AlgorithmArg::Limeal => Algorithm::Limeal,
        AlgorithmArg::Alm => Algorithm::Alm,
        AlgorithmArg::ProxIalm | AlgorithmArg::Ialm => Algorithm::ProxIalm,
    };
    let eta = if args.algorithm == AlgorithmArg::Ialm {
        1.0
    } else {
        args.eta
    };
    let rho = match algorithm {
        Algorithm::Limeal => problem.prox_part.rho() + problem.smooth_lipschitz(),
        _ => problem.rho_total(),
    };
    let gamma = args.gamma.unwrap_or(if rho > 0.0 { 0.5 / rho } else { 1.0 });

    let c = problem.c_gamma_a(gamma).map_err(Failure::Runtime)?;
    let alpha = match args.alpha_target {
        Some(AlphaTarget::Value(v)) => Some(v),
        Some(AlphaTarget::Auto) => {
            let variant = args
                .cap_variant
                .map_or_else(|| default_cap(algorithm, &problem), CapVariant::from);
            Some(penalty::alpha_cap(&problem, gamma, eta, variant).map_err(|e| usage("--alpha-target", e))?)
        }
        None => None,
    };
    let mode = match (args.horizon, alpha, args.beta) {
        (Some(k), Some(a), _) => PenaltyMode::Horizon {
            horizon: k as usize,
            alpha_target: a,
        },
        (Some(_), None, _) => return Err(Failure::Usage("'--horizon' requires '--alpha-target'".into())),
        (None, Some(a), _) => PenaltyMode::Fixed {
            beta: penalty::beta_for_target_alpha(a, gamma, eta, c).map_err(|e| usage("--alpha-target", e))?,
        },
        (None, None, Some(beta)) => PenaltyMode::Fixed { beta },
        (None, None, None) => return Err(Failure::Usage("one of '--beta' or '--alpha-target' is required".into())),
    };
    let plan = PenaltyPlan { mode, gamma, eta };
    plan.validate().map_err(|e| usage("--beta", e))?;
    let beta = plan.resolve_beta(c).map_err(|e| usage("--alpha-target", e))?;

    let stop = StopRule {
        max_iters: args.max_iters as usize,
        stat_tol: args.stat_tol,
        feas_tol: args.feas_tol,
    };
    let mut config = match algorithm {
        Algorithm::Meal => SolverConfig::meal(plan),
        Algorithm::Imeal => SolverConfig::imeal(plan, EpsilonSchedule::Harmonic { eps0: args.epsilon0 }),
        Algorithm::Limeal => SolverConfig::limeal(plan),
        Algorithm::Alm => SolverConfig::alm(beta).map_err(|e| usage("--beta", e))?,
        Algorithm::ProxIalm => {
            let lh = problem.smooth_lipschitz();
            let p = args.p.unwrap_or(if lh > 0.0 { 2.0 * lh } else { 1.0 });
            let a_norm = linalg::spectral_norm(problem.constraint.a());
            let s = args.s.unwrap_or(1.0 / (2.0 * (lh + p + beta * a_norm * a_norm)));
            let params = ProxIalmParams {
                p,
                s,
                alpha_dual: args.alpha_dual,
            };
            if args.algorithm == AlgorithmArg::Ialm {
                SolverConfig::ialm(beta, params)
            } else {
                SolverConfig::prox_ialm(beta, eta, params)
            }
            .map_err(|e| usage("--beta", e))?
        }
    }
    .with_stop(stop)
    .with_monitors(args.monitors)
    .with_subproblem(subproblem(args.subproblem_path));
    if args.algorithm == AlgorithmArg::Ialm {
        config.label = "ialm".into();
    }

    let trace = solvers::run(&problem, &config, None).map_err(|e| match e {
        Error::GammaTooLarge { .. } => usage("--gamma", e),
        Error::UnsupportedSubproblemPath(_) => usage("--subproblem-path", e),
        other => Failure::Runtime(other),
    })?;
    let path = args.out.output.join("solve").join(format!("{}.csv", config.label));
    io::save_trace(&trace, &path)?;

    let last = trace.rows.last().expect("at least one row");
    println!(
        "{} status={} rows={} objective={} feasibility={} stationarity={}",
        config.label,
        trace.status.name(),
        trace.rows.len(),
        io::fmt_float(last.objective),
        io::fmt_float(last.feasibility),
        io::fmt_float(last.stationarity)
    );
    if args.monitors {
        let m = &trace.monitors;
        println!(
            "monitors: descent {}/{} violations, dual {}/{} violations",
            m.descent_violations, m.descent_checked, m.dual_violations, m.dual_checked
        );
    }
    println!("x = {:?}", trace.final_state.x.as_slice());
    println!("wrote {}", path.display());

    let horizon_done = plan.horizon_len().is_some_and(|k| trace.rows.len() == k);
    Ok(match trace.status {
        TerminalStatus::Converged => EXIT_OK,
        TerminalStatus::MaxIters if horizon_done => EXIT_OK,
        _ => EXIT_NOT_CONVERGED,
    })
}

fn prox_table(args: ProxTableArgs) -> Result<i32, Failure> {
    let g = match args.kind {
        ProxKindArg::Zero => Ok(ProxFunction::zero()),
        ProxKindArg::L1 => ProxFunction::l1(args.weight),
        ProxKindArg::Scad => ProxFunction::scad(args.lambda, args.a),
        ProxKindArg::Mcp => ProxFunction::mcp(args.lambda, args.a),
        ProxKindArg::Box => ProxFunction::box_indicator(vec![args.lower], vec![args.upper]),
    }
    .map_err(|e| usage("--kind", e))?;
    g.check_gamma(args.gamma).map_err(|e| usage("--gamma", e))?;
    if args.to < args.from {
        return Err(usage("--to", "must not be below --from"));
    }
    println!("# kind={:?} gamma={}", args.kind, args.gamma);
    println!("v prox envelope");
    let count = ((args.to - args.from) / args.step + 1e-9).floor() as usize;
    for i in 0..=count {
        let v = args.from + i as f64 * args.step;
        let m = g.moreau_value_grad(args.gamma, &Vector::from_element(1, v))?;
        println!(
            "{} {} {}",
            io::fmt_float(v),
            io::fmt_float(m.prox_point[0]),
            io::fmt_float(m.value)
        );
    }
    Ok(EXIT_OK)
}
