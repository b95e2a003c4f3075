//! MEAL, iMEAL, LiMEAL and the ALM / Prox-iALM baselines.
//!
//! Every method keeps a primal iterate `x`, an anchor `z` and a multiplier
//! `λ`. The envelope methods take one subproblem solve per iteration and then
//!
//! ```text
//! z⁺ = z - η(z - x⁺),    λ⁺ = λ + β(Ax⁺ - b).
//! ```
//!
//! [`run`] drives a method to tolerance and records a [`Trace`].

use std::time::Instant;

use crate::diagnostics;
use crate::envelope::{EnvelopeContext, IterateState, PenaltyPlan, SubproblemSolver};
use crate::measures::{self, DualBound, LyapunovVariant, MonitorSummary, StepReport, Window};
use crate::problem::Problem;
use crate::prox::ProxKind;
use crate::{Error, Result, Vector};

/// Magnitude of `‖λ‖` or `|f|` treated as divergence.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;
/// Consecutive period-2 steps needed to flag multiplier oscillation.
pub const OSCILLATION_WINDOW: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Meal,
    Imeal,
    Limeal,
    Alm,
    ProxIalm,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Meal => "meal",
            Algorithm::Imeal => "imeal",
            Algorithm::Limeal => "limeal",
            Algorithm::Alm => "alm",
            Algorithm::ProxIalm => "prox_ialm",
        }
    }
}

/// Inner tolerances `ε_k` for iMEAL.
#[derive(Debug, Clone, PartialEq)]
pub enum EpsilonSchedule {
    /// `ε_k = ε₀/(k + 1)`, square-summable.
    Harmonic {
        eps0: f64,
    },
    Constant(f64),
    Explicit(Vec<f64>),
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule::Harmonic { eps0: 1e-2 }
    }
}

impl EpsilonSchedule {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            EpsilonSchedule::Harmonic { eps0 } => eps0 / (k + 1) as f64,
            EpsilonSchedule::Constant(e) => *e,
            EpsilonSchedule::Explicit(v) => v.get(k).or(v.last()).copied().unwrap_or(0.0),
        }
    }
}

/// Proximal-term weight `p`, primal step `s` and dual step of Prox-iALM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxIalmParams {
    pub p: f64,
    pub s: f64,
    /// Dual step; `None` uses `β`.
    pub alpha_dual: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub max_iters: usize,
    pub stat_tol: f64,
    pub feas_tol: f64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            max_iters: 2000,
            stat_tol: 1e-6,
            feas_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub label: String,
    pub plan: PenaltyPlan,
    pub epsilon: EpsilonSchedule,
    pub prox_ialm: Option<ProxIalmParams>,
    pub stop: StopRule,
    /// Check the descent and dual-control inequalities along the run.
    pub monitors: bool,
    pub subproblem: SubproblemSolver,
    /// Lyapunov variant recorded in the trace; defaults per method.
    pub lyapunov: Option<LyapunovVariant>,
}

impl SolverConfig {
    fn base(algorithm: Algorithm, plan: PenaltyPlan) -> Self {
        SolverConfig {
            algorithm,
            label: algorithm.name().to_string(),
            plan,
            epsilon: EpsilonSchedule::default(),
            prox_ialm: None,
            stop: StopRule::default(),
            monitors: false,
            subproblem: SubproblemSolver::exact(),
            lyapunov: None,
        }
    }

    pub fn meal(plan: PenaltyPlan) -> Self {
        Self::base(Algorithm::Meal, plan)
    }

    pub fn imeal(plan: PenaltyPlan, epsilon: EpsilonSchedule) -> Self {
        SolverConfig {
            epsilon,
            ..Self::base(Algorithm::Imeal, plan)
        }
    }

    pub fn limeal(plan: PenaltyPlan) -> Self {
        Self::base(Algorithm::Limeal, plan)
    }

    /// Classic ALM; `γ` and `η` of the plan are unused.
    pub fn alm(beta: f64) -> Result<Self> {
        Ok(Self::base(Algorithm::Alm, PenaltyPlan::fixed(beta, 1.0, 1.0)?))
    }

    pub fn prox_ialm(beta: f64, eta: f64, params: ProxIalmParams) -> Result<Self> {
        let mut cfg = Self::base(Algorithm::ProxIalm, PenaltyPlan::fixed(beta, 1.0, eta)?);
        cfg.prox_ialm = Some(params);
        Ok(cfg)
    }

    /// Prox-iALM with `η = 1`.
    pub fn ialm(beta: f64, params: ProxIalmParams) -> Result<Self> {
        let mut cfg = Self::prox_ialm(beta, 1.0, params)?;
        cfg.label = "ialm".to_string();
        Ok(cfg)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_stop(mut self, stop: StopRule) -> Self {
        self.stop = stop;
        self
    }

    pub fn with_monitors(mut self, on: bool) -> Self {
        self.monitors = on;
        self
    }

    pub fn with_subproblem(mut self, solver: SubproblemSolver) -> Self {
        self.subproblem = solver;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.plan.validate()?;
        if self.stop.max_iters == 0 {
            return Err(Error::invalid("max_iters", "must be at least 1"));
        }
        if !(self.stop.stat_tol > 0.0) {
            return Err(Error::invalid("stat_tol", "must be positive"));
        }
        if !(self.stop.feas_tol > 0.0) {
            return Err(Error::invalid("feas_tol", "must be positive"));
        }
        if self.algorithm == Algorithm::ProxIalm {
            let p = self
                .prox_ialm
                .ok_or_else(|| Error::invalid("prox_ialm", "Prox-iALM requires p, s"))?;
            if !(p.p > 0.0 && p.s > 0.0 && p.alpha_dual.is_none_or(|a| a > 0.0)) {
                return Err(Error::invalid("prox_ialm", "p, s and the dual step must be positive"));
            }
        }
        if let EpsilonSchedule::Harmonic { eps0 } | EpsilonSchedule::Constant(eps0) = self.epsilon {
            if !(eps0 >= 0.0) {
                return Err(Error::invalid("epsilon", "must be nonnegative"));
            }
        }
        Ok(())
    }

    fn default_lyapunov(&self) -> Option<LyapunovVariant> {
        self.lyapunov.or(match self.algorithm {
            Algorithm::Meal => Some(LyapunovVariant::MealS1),
            Algorithm::Imeal => Some(LyapunovVariant::ImealS1),
            Algorithm::Limeal => Some(LyapunovVariant::LimealS1),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminalStatus {
    Converged,
    MaxIters,
    InnerBudgetExhausted,
    DivergenceDetected,
}

impl TerminalStatus {
    pub fn name(self) -> &'static str {
        match self {
            TerminalStatus::Converged => "converged",
            TerminalStatus::MaxIters => "max_iters",
            TerminalStatus::InnerBudgetExhausted => "inner_budget_exhausted",
            TerminalStatus::DivergenceDetected => "divergence_detected",
        }
    }
}

/// One trace row, evaluated at the step leaving `(z^k, λ^k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    /// `f(x^{k+1})`.
    pub objective: f64,
    /// `‖Ax^{k+1} - b‖`.
    pub feasibility: f64,
    /// Prefix-min `ξ^k` (MEAL, iMEAL) or the raw per-step measure.
    pub stationarity: f64,
    /// `ℰ^k`, undefined at `k = 0`.
    pub lyapunov: Option<f64>,
    /// `‖λ^{k+1}‖`.
    pub lambda_norm: f64,
    /// `‖x^{k+1} - z^k‖`.
    pub xz_gap: f64,
    pub wall_time: f64,
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub label: String,
    pub algorithm: Algorithm,
    pub rows: Vec<TraceRow>,
    /// Per-step measure before any prefix minimum.
    pub raw_stationarity: Vec<f64>,
    pub status: TerminalStatus,
    pub oscillating: bool,
    pub iterations_to_tol: Option<usize>,
    pub monitors: MonitorSummary,
    pub final_state: IterateState,
}

impl Trace {
    pub fn stationarity(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.stationarity).collect()
    }
}

fn envelope_report(
    ctx: &EnvelopeContext,
    state: &IterateState,
    x_next: Vector,
    residual_norm: f64,
    exhausted: bool,
) -> (IterateState, StepReport, bool) {
    let (gamma, eta, beta) = (ctx.gamma(), ctx.eta(), ctx.beta());
    let constraint = &ctx.problem().constraint;
    let z_next = &state.z * (1.0 - eta) + &x_next * eta;
    let r = constraint.residual(&x_next);
    let lambda_next = &state.lambda + &r * beta;
    let (gz, gl) = measures::envelope_gradient(&state.z, &z_next, &state.lambda, &lambda_next, gamma, eta, beta);
    let mut report = StepReport::new(gz, gl, r.norm());
    report.inexact_residual_norm = Some(residual_norm);
    let next = IterateState {
        x: x_next,
        z: z_next,
        lambda: lambda_next,
        k: state.k + 1,
        x_prev: Some(state.x.clone()),
        z_prev: Some(state.z.clone()),
    };
    (next, report, exhausted)
}

/// One MEAL step: exact subproblem, then the anchor and dual updates.
///
/// The boolean is false when the inner solver ran out of budget.
pub fn meal_step(ctx: &EnvelopeContext, state: &IterateState) -> Result<(IterateState, StepReport, bool)> {
    let sol = ctx.solve_subproblem_tol(&state.z, &state.lambda, ctx.beta(), &state.x, None)?;
    Ok(envelope_report(ctx, state, sol.x, sol.residual_norm, !sol.converged))
}

/// One iMEAL step with inner tolerance `eps`.
pub fn imeal_step(ctx: &EnvelopeContext, state: &IterateState, eps: f64) -> Result<(IterateState, StepReport, bool)> {
    let sol = ctx.solve_subproblem_tol(&state.z, &state.lambda, ctx.beta(), &state.x, Some(eps))?;
    Ok(envelope_report(ctx, state, sol.x, sol.residual_norm, !sol.converged))
}

/// One LiMEAL step with `h` linearized at `x^k`.
///
/// The report's `grad_phi_z` holds `(z - x⁺)/γ + ∇h(x⁺) - ∇h(x^k)`.
pub fn limeal_step(ctx: &EnvelopeContext, state: &IterateState) -> Result<(IterateState, StepReport, bool)> {
    if !ctx.is_linearized() {
        return Err(Error::NotComposite);
    }
    let sol = ctx.solve_linearized(&state.z, &state.lambda, ctx.beta(), &state.x)?;
    let problem = ctx.problem();
    let correction = problem.smooth_gradient(&sol.x) - problem.smooth_gradient(&state.x);
    let (next, mut report, exhausted) = envelope_report(ctx, state, sol.x, sol.residual_norm, !sol.converged);
    report.grad_phi_z = (&state.z - &next.x) / ctx.gamma() + correction;
    report.stationarity_norm = (report.grad_phi_z.norm_squared() + report.grad_phi_lambda.norm_squared()).sqrt();
    Ok((next, report, exhausted))
}

/// One classic ALM step: global minimization of `ℒ_β(·, λ)` followed by
/// dual ascent. Supported for quadratic objectives with box or no
/// constraints on `n ≤ 8` coordinates.
pub fn alm_step(problem: &Problem, state: &IterateState, beta: f64) -> Result<(IterateState, StepReport)> {
    let n = problem.dim();
    let a = problem.constraint.a();
    let b = problem.constraint.b();
    let mut q = a.transpose() * a * beta;
    let mut r = a.transpose() * (&state.lambda - b * beta);
    if let Some(h) = &problem.smooth {
        let qf = h
            .as_quadratic()
            .ok_or_else(|| Error::SubproblemNonconvexUnsupported("ALM needs a quadratic smooth part".into()))?;
        q += qf.q();
        r += qf.r();
    }
    let (lower, upper) = match problem.prox_part.kind() {
        ProxKind::Zero => (
            Vector::from_element(n, f64::NEG_INFINITY),
            Vector::from_element(n, f64::INFINITY),
        ),
        ProxKind::Quadratic(qf) => {
            q += qf.q();
            r += qf.r();
            (
                Vector::from_element(n, f64::NEG_INFINITY),
                Vector::from_element(n, f64::INFINITY),
            )
        }
        ProxKind::Box(bx) => (bx.lower().clone(), bx.upper().clone()),
        _ => {
            return Err(Error::SubproblemNonconvexUnsupported(
                "ALM needs a quadratic objective with at most a box constraint".into(),
            ))
        }
    };
    let x_next = diagnostics::box_qp_global_min(&q, &r, &lower, &upper)?;
    let res = problem.constraint.residual(&x_next);
    let lambda_next = &state.lambda + &res * beta;
    let report = StepReport::new(Vector::zeros(n), res.clone(), res.norm());
    let next = IterateState {
        x: x_next,
        z: state.z.clone(),
        lambda: lambda_next,
        k: state.k + 1,
        x_prev: Some(state.x.clone()),
        z_prev: Some(state.z.clone()),
    };
    Ok((next, report))
}

/// One Prox-iALM step:
///
/// ```text
/// x̄  = βAᵀ(Ax - b) + p(x - z) + ∇h(x) + Aᵀλ
/// x⁺ = Prox_{s,g}(x - s·x̄)
/// z⁺ = z - η(z - x⁺),    λ⁺ = λ + α(Ax⁺ - b)
/// ```
///
/// The report certifies `((x - x⁺)/s - x̄ + ∇h(x⁺) + Aᵀλ⁺, Ax⁺ - b)`.
pub fn prox_ialm_step(
    problem: &Problem,
    state: &IterateState,
    beta: f64,
    eta: f64,
    params: ProxIalmParams,
) -> Result<(IterateState, StepReport)> {
    let a = problem.constraint.a();
    let x = &state.x;
    let xbar = a.transpose() * (problem.constraint.residual(x) * beta + &state.lambda)
        + (x - &state.z) * params.p
        + problem.smooth_gradient(x);
    let x_next = problem.prox_part.prox(params.s, &(x - &xbar * params.s))?;
    let res = problem.constraint.residual(&x_next);
    let lambda_next = &state.lambda + &res * params.alpha_dual.unwrap_or(beta);
    let z_next = &state.z * (1.0 - eta) + &x_next * eta;
    let cert = (x - &x_next) / params.s - &xbar + problem.smooth_gradient(&x_next) + a.transpose() * &lambda_next;
    let report = StepReport::new(cert, res.clone(), res.norm());
    let next = IterateState {
        x: x_next,
        z: z_next,
        lambda: lambda_next,
        k: state.k + 1,
        x_prev: Some(state.x.clone()),
        z_prev: Some(state.z.clone()),
    };
    Ok((next, report))
}

enum Engine<'a> {
    Envelope(Box<EnvelopeContext>),
    Alm(&'a Problem, f64),
    ProxIalm(&'a Problem, f64, f64, ProxIalmParams),
}

fn check_state(problem: &Problem, state: &IterateState) -> Result<()> {
    let (n, m) = (problem.dim(), problem.constraint.rows());
    if state.x.len() != n || state.z.len() != n {
        return Err(Error::dim(
            "initial primal iterate",
            n,
            state.x.len().max(state.z.len()),
        ));
    }
    if state.lambda.len() != m {
        return Err(Error::dim("initial multiplier", m, state.lambda.len()));
    }
    if !state.is_finite() {
        return Err(Error::invalid("init", "initial iterates must be finite"));
    }
    Ok(())
}

/// Runs `config` from `init` (all zeros when `None`).
pub fn run(problem: &Problem, config: &SolverConfig, init: Option<IterateState>) -> Result<Trace> {
    config.validate()?;
    let mut state = init.unwrap_or_else(|| IterateState::zeros(problem.dim(), problem.constraint.rows()));
    check_state(problem, &state)?;
    state.k = 0;

    let engine = match config.algorithm {
        Algorithm::Meal | Algorithm::Imeal => {
            Engine::Envelope(Box::new(EnvelopeContext::new(problem, config.plan, config.subproblem)?))
        }
        Algorithm::Limeal => Engine::Envelope(Box::new(EnvelopeContext::linearized(
            problem,
            config.plan,
            config.subproblem,
        )?)),
        Algorithm::Alm => Engine::Alm(problem, config.plan.resolve_beta(1.0)?),
        Algorithm::ProxIalm => {
            let params = config.prox_ialm.expect("validated");
            problem.prox_part.check_gamma(params.s)?;
            Engine::ProxIalm(problem, config.plan.resolve_beta(1.0)?, config.plan.eta, params)
        }
    };

    let max_steps = match (&engine, config.plan.horizon_len()) {
        (Engine::Envelope(_), Some(k)) => config.stop.max_iters.min(k),
        _ => config.stop.max_iters,
    };
    let lyap_variant = config.default_lyapunov();
    let lyap_at = |ctx: &EnvelopeContext, s: &IterateState| -> Option<f64> {
        let variant = lyap_variant?;
        measures::lyapunov(
            problem,
            variant,
            Window {
                x: &s.x,
                z: &s.z,
                lambda: &s.lambda,
                x_prev: s.x_prev.as_ref(),
                z_prev: s.z_prev.as_ref(),
            },
            ctx.beta(),
            ctx.gamma(),
            ctx.alpha(),
        )
        .ok()
    };

    let started = Instant::now();
    let mut rows = Vec::new();
    let mut raw = Vec::new();
    let mut best = f64::INFINITY;
    let mut status = TerminalStatus::MaxIters;
    let mut iterations_to_tol = None;
    let mut monitors = MonitorSummary::default();
    let mut lambda_hist: Vec<Vector> = vec![state.lambda.clone()];
    let mut osc_run = 0usize;
    let mut oscillating = false;

    for k in 0..max_steps {
        state.k = k;
        let (next, report, exhausted, lyap_k) = match &engine {
            Engine::Envelope(ctx) => {
                let lyap_k = lyap_at(ctx, &state);
                let (next, report, exhausted) = match config.algorithm {
                    Algorithm::Meal => meal_step(ctx, &state)?,
                    Algorithm::Imeal => imeal_step(ctx, &state, config.epsilon.at(k))?,
                    _ => limeal_step(ctx, &state)?,
                };
                if config.monitors && k >= 1 {
                    check_monitors(
                        problem,
                        ctx,
                        config,
                        &state,
                        &next,
                        &report,
                        lyap_k,
                        lyap_at(ctx, &next),
                        &mut monitors,
                    );
                }
                (next, report, exhausted, lyap_k)
            }
            Engine::Alm(p, beta) => {
                let (next, report) = alm_step(p, &state, *beta)?;
                (next, report, false, None)
            }
            Engine::ProxIalm(p, beta, eta, params) => {
                let (next, report) = prox_ialm_step(p, &state, *beta, *eta, *params)?;
                (next, report, false, None)
            }
        };

        let measure = report.stationarity_norm;
        best = best.min(measure);
        let column = match config.algorithm {
            Algorithm::Meal | Algorithm::Imeal => best,
            _ => measure,
        };
        let objective = problem.objective_value(&next.x);
        rows.push(TraceRow {
            k,
            objective,
            feasibility: report.feasibility,
            stationarity: column,
            lyapunov: lyap_k,
            lambda_norm: next.lambda.norm(),
            xz_gap: (&next.x - &state.z).norm(),
            wall_time: started.elapsed().as_secs_f64(),
        });
        raw.push(measure);

        lambda_hist.push(next.lambda.clone());
        if lambda_hist.len() > 3 {
            lambda_hist.remove(0);
        }
        if lambda_hist.len() == 3 {
            let period2 = (&lambda_hist[2] - &lambda_hist[0]).norm() <= 1e-6;
            let moving = (&lambda_hist[2] - &lambda_hist[1]).norm() >= 1e-3;
            osc_run = if period2 && moving { osc_run + 1 } else { 0 };
            oscillating |= osc_run >= OSCILLATION_WINDOW;
        }

        let diverged = !next.is_finite()
            || !objective.is_finite()
            || next.lambda.norm() > DIVERGENCE_THRESHOLD
            || objective.abs() > DIVERGENCE_THRESHOLD;
        state = next;
        if diverged {
            status = TerminalStatus::DivergenceDetected;
            break;
        }
        if exhausted {
            status = TerminalStatus::InnerBudgetExhausted;
            break;
        }
        if measure <= config.stop.stat_tol && report.feasibility <= config.stop.feas_tol {
            status = TerminalStatus::Converged;
            iterations_to_tol = Some(k);
            break;
        }
    }

    Ok(Trace {
        label: config.label.clone(),
        algorithm: config.algorithm,
        rows,
        raw_stationarity: raw,
        status,
        oscillating,
        iterations_to_tol,
        monitors,
        final_state: state,
    })
}

#[allow(clippy::too_many_arguments)]
fn check_monitors(
    problem: &Problem,
    ctx: &EnvelopeContext,
    config: &SolverConfig,
    state: &IterateState,
    next: &IterateState,
    report: &StepReport,
    lyap_k: Option<f64>,
    lyap_next: Option<f64>,
    summary: &mut MonitorSummary,
) {
    let gamma = ctx.gamma();
    if config.algorithm == Algorithm::Meal {
        if let (Some(e0), Some(e1)) = (lyap_k, lyap_next) {
            let grad_sq = report.stationarity_norm.powi(2);
            summary.descent_checked += 1;
            let need = gamma * ctx.eta() * (2.0 - ctx.eta()) / 4.0 * grad_sq;
            summary.worst_descent_gap = summary.worst_descent_gap.max(need - (e0 - e1));
            if !measures::descent_holds(e0, e1, grad_sq, gamma, ctx.eta()) {
                summary.descent_violations += 1;
            }
        }
    }
    let bound = match config.algorithm {
        Algorithm::Meal => problem.implicit_class().lipschitz().map(|lf| DualBound::Meal { lf }),
        Algorithm::Imeal => problem.implicit_class().lipschitz().map(|lf| DualBound::Imeal {
            lf,
            eps: config.epsilon.at(state.k),
            eps_prev: config.epsilon.at(state.k.saturating_sub(1)),
        }),
        Algorithm::Limeal => {
            let lg = problem.prox_part.implicit_class().lipschitz();
            match (lg, &state.x_prev) {
                (Some(lg), Some(xp)) => Some(DualBound::Limeal {
                    lg,
                    lh: problem.smooth_lipschitz(),
                    dx_prev_sq: (&state.x - xp).norm_squared(),
                }),
                _ => None,
            }
        }
        _ => None,
    };
    if let (Some(bound), Some(zp)) = (bound, &state.z_prev) {
        let dl = (&next.lambda - &state.lambda).norm_squared();
        let dx = (&next.x - &state.x).norm_squared();
        let dz = (&state.z - zp).norm_squared();
        let (ok, lhs, rhs) = measures::dual_control(bound, dl, dx, dz, gamma, ctx.c_gamma_a());
        summary.dual_checked += 1;
        summary.worst_dual_gap = summary.worst_dual_gap.max(lhs - rhs);
        if !ok {
            summary.dual_violations += 1;
        }
    }
}
