//! The two reference experiments.
//!
//! Exp1 is the two-dimensional saddle `min x² - y² s.t. x = y, x ∈ [-1, 1]`,
//! on which classic ALM oscillates while LiMEAL converges. Exp2 is a random
//! nonconvex box-constrained QP comparing LiMEAL with Prox-iALM and iALM.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::diagnostics::{self, Column, RateFit, RateKind};
use crate::envelope::{IterateState, PenaltyPlan, SubproblemSolver};
use crate::io;
use crate::linalg;
use crate::problem::{LinearConstraint, Problem, QuadraticForm, SmoothFunction};
use crate::prox::ProxFunction;
use crate::rng::UniformStream;
use crate::solvers::{self, ProxIalmParams, SolverConfig, Trace};
use crate::{Error, Matrix, Result, Vector};

pub const DEFAULT_SEED: u64 = 42;
pub const EXP_BETA: f64 = 50.0;
pub const EXP_ETAS: [f64; 3] = [0.5, 1.0, 1.5];
pub const PROX_IALM_ETAS: [f64; 2] = [0.5, 1.0];
/// Burn-in used by the summary's rate fit.
pub const RATE_BURN_IN: usize = 5;

/// `h(x, y) = x² - y²`, `g` the indicator of `[-1, 1] × ℝ`, `A = [1, -1]`, `b = 0`.
pub fn build_exp1() -> Problem {
    let c = LinearConstraint::new(Matrix::from_row_slice(1, 2, &[1.0, -1.0]), Vector::zeros(1)).expect("valid");
    let h = QuadraticForm::new(
        Matrix::from_diagonal(&Vector::from_vec(vec![2.0, -2.0])),
        Vector::zeros(2),
        0.0,
    )
    .expect("valid");
    let g = ProxFunction::box_indicator(vec![-1.0, f64::NEG_INFINITY], vec![1.0, f64::INFINITY]).expect("valid");
    Problem::composite(c, SmoothFunction::Quadratic(h), g).expect("valid")
}

/// `x⁰ = z⁰ = (0.5, -0.5)`, `λ⁰ = 0`. The origin is already a KKT point.
pub fn exp1_init() -> IterateState {
    let x = Vector::from_vec(vec![0.5, -0.5]);
    IterateState::new(x.clone(), x, Vector::zeros(1))
}

/// Random box QP: `Q = (G + Gᵀ)/2`, `r`, `A`, `x̃` i.i.d. uniform on `[0, 1]`
/// (drawn in that order, matrices row-major), `b = Ax̃`, box `[0, 1]ⁿ`.
pub fn build_exp2(seed: u64, m: usize, n: usize) -> Result<Problem> {
    if m == 0 || m >= n {
        return Err(Error::invalid("m", "Exp2 requires 1 <= m < n"));
    }
    let mut rng = UniformStream::new(seed);
    let g = rng.matrix(n, n);
    let r = rng.vector(n);
    let a = rng.matrix(m, n);
    let x_tilde = rng.vector(n);
    let q = (&g + g.transpose()) * 0.5;
    let b = &a * &x_tilde;
    let c = LinearConstraint::new(a, b)?;
    let h = QuadraticForm::new(q, r, 0.0)?;
    let g = ProxFunction::box_indicator(vec![0.0; n], vec![1.0; n])?;
    Problem::composite(c, SmoothFunction::Quadratic(h), g)
}

/// Parameter settings of the QP comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exp2Params {
    pub q_norm: f64,
    pub a_norm: f64,
    pub beta: f64,
    /// `1/(2‖Q‖)`.
    pub gamma: f64,
    /// `2‖Q‖`.
    pub p: f64,
    /// `1/(2(‖Q‖ + p + β‖A‖²))`.
    pub s: f64,
}

pub fn exp2_params(problem: &Problem, beta: f64) -> Exp2Params {
    let q_norm = problem.smooth_lipschitz();
    let a_norm = linalg::spectral_norm(problem.constraint.a());
    let p = 2.0 * q_norm;
    Exp2Params {
        q_norm,
        a_norm,
        beta,
        gamma: 1.0 / (2.0 * q_norm),
        p,
        s: 1.0 / (2.0 * (q_norm + p + beta * a_norm * a_norm)),
    }
}

fn fmt_param(v: f64) -> String {
    format!("{v}")
}

pub fn exp1_grid() -> Result<Vec<SolverConfig>> {
    let mut grid = vec![SolverConfig::alm(EXP_BETA)?.with_label(format!("alm_beta{}", fmt_param(EXP_BETA)))];
    for eta in EXP_ETAS {
        let plan = PenaltyPlan::fixed(EXP_BETA, 0.5, eta)?;
        grid.push(SolverConfig::limeal(plan).with_label(format!("limeal_eta{}", fmt_param(eta))));
    }
    Ok(grid)
}

pub fn exp2_grid(problem: &Problem, subproblem: SubproblemSolver) -> Result<Vec<SolverConfig>> {
    let prm = exp2_params(problem, EXP_BETA);
    let mut grid = Vec::new();
    for eta in EXP_ETAS {
        let plan = PenaltyPlan::fixed(prm.beta, prm.gamma, eta)?;
        grid.push(
            SolverConfig::limeal(plan)
                .with_subproblem(subproblem)
                .with_label(format!("limeal_eta{}", fmt_param(eta))),
        );
    }
    let params = ProxIalmParams {
        p: prm.p,
        s: prm.s,
        alpha_dual: None,
    };
    for eta in PROX_IALM_ETAS {
        let cfg = if eta == 1.0 {
            SolverConfig::ialm(prm.beta, params)?.with_label("ialm_eta1")
        } else {
            SolverConfig::prox_ialm(prm.beta, eta, params)?.with_label(format!("prox_ialm_eta{}", fmt_param(eta)))
        };
        grid.push(cfg);
    }
    Ok(grid)
}

#[derive(Debug, Clone)]
pub enum ExperimentId {
    Exp1,
    Exp2,
    Custom(Box<Problem>),
}

impl ExperimentId {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentId::Exp1 => "exp1",
            ExperimentId::Exp2 => "exp2",
            ExperimentId::Custom(_) => "custom",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub id: ExperimentId,
    pub seed: u64,
    /// `(m, n)`; ignored by Exp1.
    pub dims: Option<(usize, usize)>,
    pub grid: Vec<SolverConfig>,
    pub init: Option<IterateState>,
}

impl ExperimentSpec {
    pub fn exp1() -> Result<Self> {
        Ok(ExperimentSpec {
            id: ExperimentId::Exp1,
            seed: DEFAULT_SEED,
            dims: None,
            grid: exp1_grid()?,
            init: Some(exp1_init()),
        })
    }

    pub fn exp2(seed: u64, m: usize, n: usize, subproblem: SubproblemSolver) -> Result<Self> {
        let problem = build_exp2(seed, m, n)?;
        Ok(ExperimentSpec {
            id: ExperimentId::Exp2,
            seed,
            dims: Some((m, n)),
            grid: exp2_grid(&problem, subproblem)?,
            init: None,
        })
    }

    pub fn problem(&self) -> Result<Problem> {
        match &self.id {
            ExperimentId::Exp1 => Ok(build_exp1()),
            ExperimentId::Exp2 => {
                let (m, n) = self.dims.unwrap_or((5, 20));
                build_exp2(self.seed, m, n)
            }
            ExperimentId::Custom(p) => Ok((**p).clone()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub label: String,
    /// Solver errors are kept per run; the bundle is still returned.
    pub result: std::result::Result<Trace, String>,
    pub rate: Option<RateFit>,
}

#[derive(Debug, Clone)]
pub struct Bundle {
    pub name: &'static str,
    pub outcomes: Vec<RunOutcome>,
}

impl Bundle {
    pub fn trace(&self, label: &str) -> Option<&Trace> {
        self.outcomes
            .iter()
            .find(|o| o.label == label)
            .and_then(|o| o.result.as_ref().ok())
    }
}

/// Runs every grid entry in parallel; outcomes keep grid order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Bundle> {
    let problem = spec.problem()?;
    let outcomes = spec
        .grid
        .par_iter()
        .map(|cfg| {
            let result = solvers::run(&problem, cfg, spec.init.clone()).map_err(|e| e.to_string());
            let rate = result
                .as_ref()
                .ok()
                .and_then(|t| diagnostics::rate_fit_trace(t, Column::Stationarity, RATE_BURN_IN).ok());
            RunOutcome {
                label: cfg.label.clone(),
                result,
                rate,
            }
        })
        .collect();
    Ok(Bundle {
        name: spec.id.name(),
        outcomes,
    })
}

pub const SUMMARY_HEADER: [&str; 12] = [
    "label",
    "algorithm",
    "status",
    "iterations",
    "iterations_to_tol",
    "final_objective",
    "final_feasibility",
    "final_stationarity",
    "oscillating",
    "rate_kind",
    "rate_param",
    "rate_r2",
];

/// Writes `<root>/<name>/<label>.csv` per run and `<root>/<name>/summary.csv`.
pub fn write_bundle(bundle: &Bundle, root: &Path) -> Result<PathBuf> {
    let dir = root.join(bundle.name);
    fs::create_dir_all(&dir)?;
    let mut summary = csv::Writer::from_path(dir.join("summary.csv"))?;
    let mut header: Vec<&str> = SUMMARY_HEADER.to_vec();
    header.push("error");
    summary.write_record(&header)?;
    for o in &bundle.outcomes {
        match &o.result {
            Ok(trace) => {
                io::save_trace(trace, &dir.join(format!("{}.csv", o.label)))?;
                let last = trace.rows.last();
                let num = |f: fn(&solvers::TraceRow) -> f64| last.map(|r| io::fmt_float(f(r))).unwrap_or_default();
                let (kind, param, r2) = match o.rate {
                    Some(RateFit {
                        kind: RateKind::Linear { tau },
                        r2,
                        ..
                    }) => ("linear".to_string(), io::fmt_float(tau), io::fmt_float(r2)),
                    Some(RateFit {
                        kind: RateKind::Sublinear { power },
                        r2,
                        ..
                    }) => ("sublinear".to_string(), io::fmt_float(power), io::fmt_float(r2)),
                    None => Default::default(),
                };
                summary.write_record([
                    o.label.clone(),
                    trace.algorithm.name().to_string(),
                    trace.status.name().to_string(),
                    trace.rows.len().to_string(),
                    trace.iterations_to_tol.map(|k| k.to_string()).unwrap_or_default(),
                    num(|r| r.objective),
                    num(|r| r.feasibility),
                    num(|r| r.stationarity),
                    trace.oscillating.to_string(),
                    kind,
                    param,
                    r2,
                    String::new(),
                ])?;
            }
            Err(e) => {
                let mut rec = vec![o.label.clone()];
                rec.extend(std::iter::repeat_n(String::new(), SUMMARY_HEADER.len() - 1));
                rec.push(e.clone());
                summary.write_record(&rec)?;
            }
        }
    }
    summary.flush()?;
    Ok(dir)
}
