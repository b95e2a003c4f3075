//! Augmented Lagrangian, its proximal potential and the primal subproblem.
//!
//! The subproblem shared by every envelope method is
//!
//! ```text
//! x⁺ = argmin_x  f(x) + ⟨λ, Ax - b⟩ + (β/2)‖Ax - b‖² + ‖x - z‖²/(2γ)
//! ```
//!
//! where `f` is replaced by `g + ⟨∇h(x^k), ·⟩` in the linearized form.
//! Quadratic terms are gathered into one Hessian which is factored once for
//! the plan's penalty.

use nalgebra::{Cholesky, Dyn};

use crate::inner::{proximal_gradient, InnerSettings};
use crate::penalty;
use crate::problem::{Problem, SmoothFunction};
use crate::prox::{ProxFunction, ProxKind};
use crate::{linalg, Error, Matrix, Result, Vector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltyMode {
    Fixed {
        beta: f64,
    },
    /// Constant β tuned for a horizon of `horizon` iterations with
    /// `α_k ≡ alpha_target / horizon`.
    Horizon {
        horizon: usize,
        alpha_target: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyPlan {
    pub mode: PenaltyMode,
    pub gamma: f64,
    pub eta: f64,
}

impl PenaltyPlan {
    pub fn fixed(beta: f64, gamma: f64, eta: f64) -> Result<Self> {
        let plan = PenaltyPlan {
            mode: PenaltyMode::Fixed { beta },
            gamma,
            eta,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn horizon(horizon: usize, alpha_target: f64, gamma: f64, eta: f64) -> Result<Self> {
        let plan = PenaltyPlan {
            mode: PenaltyMode::Horizon { horizon, alpha_target },
            gamma,
            eta,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid("gamma", "must be positive and finite"));
        }
        if !(self.eta > 0.0 && self.eta < 2.0) {
            return Err(Error::invalid("eta", "must lie in (0, 2)"));
        }
        match self.mode {
            PenaltyMode::Fixed { beta } if !(beta > 0.0 && beta.is_finite()) => {
                Err(Error::invalid("beta", "must be positive and finite"))
            }
            PenaltyMode::Horizon { horizon: 0, .. } => Err(Error::invalid("horizon", "must be at least 1")),
            PenaltyMode::Horizon { alpha_target, .. } if !(alpha_target > 0.0) => {
                Err(Error::NonPositiveAlpha(alpha_target))
            }
            _ => Ok(()),
        }
    }

    /// The (constant) penalty realized by this plan for a given `c_{γ,A}`.
    pub fn resolve_beta(&self, c_gamma_a: f64) -> Result<f64> {
        match self.mode {
            PenaltyMode::Fixed { beta } => Ok(beta),
            PenaltyMode::Horizon { horizon, alpha_target } => {
                penalty::horizon_beta(horizon, alpha_target, self.gamma, self.eta, c_gamma_a)
            }
        }
    }

    pub fn horizon_len(&self) -> Option<usize> {
        match self.mode {
            PenaltyMode::Horizon { horizon, .. } => Some(horizon),
            PenaltyMode::Fixed { .. } => None,
        }
    }
}

/// Primal, anchor and dual iterates plus the predecessors the Lyapunov
/// functions need.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub x: Vector,
    pub z: Vector,
    pub lambda: Vector,
    pub k: usize,
    pub x_prev: Option<Vector>,
    pub z_prev: Option<Vector>,
}

impl IterateState {
    pub fn new(x: Vector, z: Vector, lambda: Vector) -> Self {
        IterateState {
            x,
            z,
            lambda,
            k: 0,
            x_prev: None,
            z_prev: None,
        }
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self::new(Vector::zeros(n), Vector::zeros(n), Vector::zeros(m))
    }

    pub fn is_finite(&self) -> bool {
        self.x
            .iter()
            .chain(self.z.iter())
            .chain(self.lambda.iter())
            .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubproblemSolver {
    /// Dense linear solve; the whole subproblem must be an unconstrained QP.
    DirectQP,
    /// Proximal gradient on the strongly convex subproblem.
    InnerProxGradient { tol: f64, max_inner: usize },
    /// Minimize the quadratic part without the box, then clip to the box.
    /// Linearized quadratic-plus-box problems only; not the exact subproblem
    /// once the box is active.
    Paper72FastPath,
}

impl SubproblemSolver {
    /// Inner prox-gradient run to round-off.
    pub fn exact() -> Self {
        SubproblemSolver::InnerProxGradient {
            tol: 1e-12,
            max_inner: 50_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSolution {
    pub x: Vector,
    /// Element of `∂_x ℒ_β(x, λ) + (x - z)/γ` (linearized form for LiMEAL).
    pub residual: Vector,
    pub residual_norm: f64,
    pub inner_iterations: usize,
    /// False when the inner budget ran out; `x` is then the best iterate.
    pub converged: bool,
}

/// `f(x) + ⟨λ, Ax - b⟩ + (β/2)‖Ax - b‖²`, `+∞` outside `dom f`.
pub fn augmented_lagrangian(problem: &Problem, x: &Vector, lambda: &Vector, beta: f64) -> f64 {
    let f = problem.objective_value(x);
    if !f.is_finite() {
        return f;
    }
    let r = problem.constraint.residual(x);
    f + lambda.dot(&r) + 0.5 * beta * r.norm_squared()
}

/// `ℒ_β(x, λ) + ‖x - z‖²/(2γ)`.
pub fn potential(problem: &Problem, x: &Vector, z: &Vector, lambda: &Vector, beta: f64, gamma: f64) -> f64 {
    augmented_lagrangian(problem, x, lambda, beta) + (x - z).norm_squared() / (2.0 * gamma)
}

#[derive(Debug, Clone)]
struct Stage {
    beta: f64,
    hess: Matrix,
    chol: Option<Cholesky<f64, Dyn>>,
    lmax: f64,
    lmin: f64,
}

/// Immutable solving context for one problem, plan and subproblem path.
#[derive(Debug, Clone)]
pub struct EnvelopeContext {
    problem: Problem,
    plan: PenaltyPlan,
    solver: SubproblemSolver,
    linearized: bool,
    beta: f64,
    c_gamma_a: f64,
    /// `h` when it is smooth but not quadratic and stays in the subproblem.
    custom_smooth: Option<SmoothFunction>,
    /// Linear term of the quadratic part, without the `z`, `λ` and `b` pieces.
    base_linear: Vector,
    /// `g` when it still needs a prox inside the subproblem.
    prox: Option<ProxFunction>,
    box_only: bool,
    stage: Stage,
}

impl EnvelopeContext {
    /// Context for the full subproblem (MEAL, iMEAL). Requires `γ < 1/ρ_total`.
    pub fn new(problem: &Problem, plan: PenaltyPlan, solver: SubproblemSolver) -> Result<Self> {
        let rho = problem.rho_total();
        if rho > 0.0 && plan.gamma * rho >= 1.0 {
            return Err(Error::GammaTooLarge {
                gamma: plan.gamma,
                limit: 1.0 / rho,
            });
        }
        Self::build(problem, plan, solver, false)
    }

    /// Context for the linearized subproblem (LiMEAL). Requires a smooth part
    /// and `γ < 1/ρ_g`.
    pub fn linearized(problem: &Problem, plan: PenaltyPlan, solver: SubproblemSolver) -> Result<Self> {
        if !problem.is_composite() {
            return Err(Error::NotComposite);
        }
        problem.prox_part.check_gamma(plan.gamma)?;
        Self::build(problem, plan, solver, true)
    }

    fn build(problem: &Problem, plan: PenaltyPlan, solver: SubproblemSolver, linearized: bool) -> Result<Self> {
        plan.validate()?;
        let n = problem.dim();
        let c_gamma_a = problem.c_gamma_a(plan.gamma)?;
        let beta = plan.resolve_beta(c_gamma_a)?;

        let mut fixed_hess = Matrix::zeros(n, n);
        let mut base_linear = Vector::zeros(n);
        let mut custom_smooth = None;
        if !linearized {
            match &problem.smooth {
                Some(SmoothFunction::Quadratic(qf)) => {
                    fixed_hess += qf.q();
                    base_linear += qf.r();
                }
                Some(h @ SmoothFunction::Custom(_)) => custom_smooth = Some(h.clone()),
                None => {}
            }
        }
        let (prox, box_only) = match problem.prox_part.kind() {
            ProxKind::Zero => (None, false),
            ProxKind::Quadratic(qf) => {
                fixed_hess += qf.q();
                base_linear += qf.r();
                (None, false)
            }
            ProxKind::Box(_) => (Some(problem.prox_part.clone()), true),
            _ => (Some(problem.prox_part.clone()), false),
        };

        match solver {
            SubproblemSolver::DirectQP if prox.is_some() || custom_smooth.is_some() => {
                return Err(Error::UnsupportedSubproblemPath("direct"));
            }
            SubproblemSolver::Paper72FastPath
                if !linearized
                    || problem.smooth.as_ref().and_then(SmoothFunction::as_quadratic).is_none()
                    || !(prox.is_none() || box_only) =>
            {
                return Err(Error::UnsupportedSubproblemPath("paper72"));
            }
            SubproblemSolver::InnerProxGradient { tol, max_inner } if !(tol >= 0.0) || max_inner == 0 => {
                return Err(Error::invalid("inner solver", "tol must be >= 0 and max_inner >= 1"));
            }
            _ => {}
        }

        let mut ctx = EnvelopeContext {
            problem: problem.clone(),
            plan,
            solver,
            linearized,
            beta,
            c_gamma_a,
            custom_smooth,
            base_linear,
            prox,
            box_only,
            stage: Stage {
                beta,
                hess: Matrix::zeros(0, 0),
                chol: None,
                lmax: 0.0,
                lmin: 0.0,
            },
        };
        ctx.stage = ctx.make_stage(beta, &fixed_hess)?;
        Ok(ctx)
    }

    fn fixed_hess(&self) -> Matrix {
        let n = self.problem.dim();
        let mut m = Matrix::zeros(n, n);
        if !self.linearized {
            if let Some(SmoothFunction::Quadratic(qf)) = &self.problem.smooth {
                m += qf.q();
            }
        }
        if let ProxKind::Quadratic(qf) = self.problem.prox_part.kind() {
            m += qf.q();
        }
        m
    }

    fn make_stage(&self, beta: f64, fixed_hess: &Matrix) -> Result<Stage> {
        let n = self.problem.dim();
        let a = self.problem.constraint.a();
        let mut hess = a.transpose() * a * beta + fixed_hess;
        for i in 0..n {
            hess[(i, i)] += 1.0 / self.plan.gamma;
        }
        let hess = (&hess + hess.transpose()) * 0.5;
        let eig = linalg::symmetric_eigenvalues(&hess);
        let (lmin, lmax) = (eig[0], eig[n - 1]);
        let chol = if lmin > 0.0 { Cholesky::new(hess.clone()) } else { None };
        if chol.is_none() && self.custom_smooth.is_none() {
            return Err(Error::GammaTooLarge {
                gamma: self.plan.gamma,
                limit: 1.0 / self.problem.rho_total(),
            });
        }
        Ok(Stage {
            beta,
            hess,
            chol,
            lmax,
            lmin,
        })
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn plan(&self) -> &PenaltyPlan {
        &self.plan
    }

    pub fn solver(&self) -> SubproblemSolver {
        self.solver
    }

    pub fn is_linearized(&self) -> bool {
        self.linearized
    }

    pub fn gamma(&self) -> f64 {
        self.plan.gamma
    }

    pub fn eta(&self) -> f64 {
        self.plan.eta
    }

    /// The penalty realized by the plan.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `c_{γ,A} = γ² σ̃_min(AᵀA)`.
    pub fn c_gamma_a(&self) -> f64 {
        self.c_gamma_a
    }

    /// `α` of the plan's constant penalty.
    pub fn alpha(&self) -> f64 {
        penalty::alpha_from_beta(self.plan.gamma, self.plan.eta, self.beta, self.beta, self.c_gamma_a)
    }

    pub fn augmented_lagrangian(&self, x: &Vector, lambda: &Vector, beta: f64) -> f64 {
        augmented_lagrangian(&self.problem, x, lambda, beta)
    }

    pub fn potential(&self, x: &Vector, z: &Vector, lambda: &Vector, beta: f64) -> f64 {
        potential(&self.problem, x, z, lambda, beta, self.plan.gamma)
    }

    /// Exact-path subproblem solve for the full objective, warm-started at `z`.
    pub fn solve_subproblem(&self, z: &Vector, lambda: &Vector, beta: f64) -> Result<SubproblemSolution> {
        if self.linearized {
            return Err(Error::invalid(
                "context",
                "linearized context needs an anchor; use solve_linearized",
            ));
        }
        self.solve_with(z, lambda, beta, None, z, None)
    }

    /// Full subproblem with an explicit warm start and inner tolerance.
    pub fn solve_subproblem_tol(
        &self,
        z: &Vector,
        lambda: &Vector,
        beta: f64,
        warm: &Vector,
        tol: Option<f64>,
    ) -> Result<SubproblemSolution> {
        if self.linearized {
            return Err(Error::invalid(
                "context",
                "linearized context needs an anchor; use solve_linearized",
            ));
        }
        self.solve_with(z, lambda, beta, None, warm, tol)
    }

    /// Subproblem with `h` linearized at `anchor`.
    pub fn solve_linearized(
        &self,
        z: &Vector,
        lambda: &Vector,
        beta: f64,
        anchor: &Vector,
    ) -> Result<SubproblemSolution> {
        if !self.linearized {
            return Err(Error::invalid("context", "full context has no linearization"));
        }
        let shift = self.problem.smooth_gradient(anchor);
        self.solve_with(z, lambda, beta, Some(&shift), anchor, None)
    }

    fn check_dims(&self, z: &Vector, lambda: &Vector) -> Result<()> {
        if z.len() != self.problem.dim() {
            return Err(Error::dim("anchor z", self.problem.dim(), z.len()));
        }
        if lambda.len() != self.problem.constraint.rows() {
            return Err(Error::dim("multiplier", self.problem.constraint.rows(), lambda.len()));
        }
        Ok(())
    }

    fn solve_with(
        &self,
        z: &Vector,
        lambda: &Vector,
        beta: f64,
        shift: Option<&Vector>,
        warm: &Vector,
        tol: Option<f64>,
    ) -> Result<SubproblemSolution> {
        self.check_dims(z, lambda)?;
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::invalid("beta", "must be positive and finite"));
        }
        let rebuilt;
        let stage = if beta == self.stage.beta {
            &self.stage
        } else {
            rebuilt = self.make_stage(beta, &self.fixed_hess())?;
            &rebuilt
        };

        let a = self.problem.constraint.a();
        let gamma = self.plan.gamma;
        // q(x) = ½ xᵀHx - rhsᵀx (+ h(x) when h is not quadratic)
        let mut rhs = z / gamma - &self.base_linear - a.transpose() * (lambda - self.problem.constraint.b() * beta);
        if let Some(s) = shift {
            rhs -= s;
        }
        let grad = |x: &Vector| -> Vector {
            let mut g = &stage.hess * x - &rhs;
            if let Some(h) = &self.custom_smooth {
                g += h.gradient(x);
            }
            g
        };

        let direct = |stage: &Stage| {
            let chol = stage.chol.as_ref().expect("positive definite stage");
            linalg::refined_solve(chol, &stage.hess, &rhs)
        };

        match (self.solver, &self.prox) {
            (SubproblemSolver::Paper72FastPath, prox) => {
                let mut x = direct(stage);
                if let Some(p) = prox {
                    x = p.prox_unchecked(gamma, &x);
                }
                let residual = self.certify(&x, &grad);
                Ok(finish(x, residual, 0, true))
            }
            (_, None) if self.custom_smooth.is_none() => {
                let x = direct(stage);
                let residual = grad(&x);
                Ok(finish(x, residual, 0, true))
            }
            (SubproblemSolver::DirectQP, _) => Err(Error::UnsupportedSubproblemPath("direct")),
            (
                SubproblemSolver::InnerProxGradient {
                    tol: default_tol,
                    max_inner,
                },
                prox,
            ) => {
                let rho_h = self.custom_smooth.as_ref().map_or(0.0, SmoothFunction::weak_convexity);
                let lip = stage.lmax + self.custom_smooth.as_ref().map_or(0.0, SmoothFunction::lipschitz);
                let mu = stage.lmin - rho_h;
                let g_convex = prox.as_ref().is_none_or(ProxFunction::is_convex);
                let settings = InnerSettings {
                    lipschitz: lip,
                    momentum_modulus: if g_convex && mu > 0.0 { Some(mu) } else { None },
                    tol: tol.unwrap_or(default_tol),
                    max_iter: max_inner,
                };
                let start = match prox {
                    Some(p) if self.box_only => p.prox_unchecked(gamma, warm),
                    _ => warm.clone(),
                };
                let out = match prox {
                    Some(p) => proximal_gradient(grad, |t, v| p.prox_unchecked(t, v), start, &settings),
                    None => proximal_gradient(grad, |_, v| v.clone(), start, &settings),
                };
                Ok(finish(out.x, out.residual, out.iterations, out.converged))
            }
        }
    }

    /// Certified subgradient residual at an arbitrary point of the box:
    /// the smallest-norm element of `∇q(x) + N_C(x)` for box `g`.
    fn certify(&self, x: &Vector, grad: &dyn Fn(&Vector) -> Vector) -> Vector {
        let g = grad(x);
        match self.problem.prox_part.kind() {
            ProxKind::Box(b) => Vector::from_iterator(
                x.len(),
                (0..x.len()).map(|i| {
                    let at_lo = x[i] <= b.lower()[i];
                    let at_hi = x[i] >= b.upper()[i];
                    match (at_lo, at_hi) {
                        (true, true) => 0.0,
                        (true, false) => g[i].min(0.0),
                        (false, true) => g[i].max(0.0),
                        _ => g[i],
                    }
                }),
            ),
            _ => g,
        }
    }
}

fn finish(x: Vector, residual: Vector, inner_iterations: usize, converged: bool) -> SubproblemSolution {
    SubproblemSolution {
        residual_norm: residual.norm(),
        x,
        residual,
        inner_iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{LinearConstraint, QuadraticForm};

    fn exp1() -> Problem {
        let c = LinearConstraint::new(Matrix::from_row_slice(1, 2, &[1.0, -1.0]), Vector::zeros(1)).unwrap();
        let h = QuadraticForm::new(
            Matrix::from_diagonal(&Vector::from_vec(vec![2.0, -2.0])),
            Vector::zeros(2),
            0.0,
        )
        .unwrap();
        let g = ProxFunction::box_indicator(vec![-1.0, f64::NEG_INFINITY], vec![1.0, f64::INFINITY]).unwrap();
        Problem::composite(c, SmoothFunction::Quadratic(h), g).unwrap()
    }

    fn zero_identity(n: usize) -> Problem {
        let c = LinearConstraint::new(Matrix::identity(n, n), Vector::zeros(n)).unwrap();
        Problem::pure(c, ProxFunction::zero()).unwrap()
    }

    fn v(xs: &[f64]) -> Vector {
        Vector::from_vec(xs.to_vec())
    }

    #[test]
    fn augmented_lagrangian_examples() {
        let p = zero_identity(2);
        assert_eq!(augmented_lagrangian(&p, &Vector::zeros(2), &v(&[3.0, -1.0]), 7.0), 0.0);
        assert_eq!(augmented_lagrangian(&exp1(), &v(&[1.0, 0.0]), &v(&[0.0]), 50.0), 26.0);
        // feasible point: value is f(x) whatever λ, β
        let x = v(&[0.5, 0.5]);
        assert_eq!(augmented_lagrangian(&exp1(), &x, &v(&[9.0]), 123.0), 0.0);
    }

    #[test]
    fn potential_examples() {
        let p = zero_identity(2);
        assert_eq!(
            potential(&p, &Vector::zeros(2), &v(&[1.0, 0.0]), &Vector::zeros(2), 1.0, 0.5),
            1.0
        );
        let x = v(&[0.3, -0.2]);
        let lam = v(&[0.7]);
        assert_eq!(
            potential(&exp1(), &x, &x, &lam, 5.0, 0.25),
            augmented_lagrangian(&exp1(), &x, &lam, 5.0)
        );
    }

    #[test]
    fn zero_objective_subproblem_fixed_point() {
        let p = zero_identity(2);
        let ctx = EnvelopeContext::new(
            &p,
            PenaltyPlan::fixed(1.0, 0.5, 1.0).unwrap(),
            SubproblemSolver::DirectQP,
        )
        .unwrap();
        let out = ctx.solve_subproblem(&Vector::zeros(2), &Vector::zeros(2), 1.0).unwrap();
        assert_eq!(out.x, Vector::zeros(2));
    }

    #[test]
    fn one_dimensional_strongly_convex_subproblem() {
        let c = LinearConstraint::new(Matrix::identity(1, 1), Vector::zeros(1)).unwrap();
        let p = Problem::pure(c, ProxFunction::quadratic(QuadraticForm::half_squared_norm(1))).unwrap();
        let ctx = EnvelopeContext::new(
            &p,
            PenaltyPlan::fixed(1.0, 0.5, 1.0).unwrap(),
            SubproblemSolver::DirectQP,
        )
        .unwrap();
        let out = ctx.solve_subproblem(&v(&[3.0]), &v(&[0.0]), 1.0).unwrap();
        assert!((out.x[0] - 1.5).abs() < 1e-14);
        assert!(out.residual_norm < 1e-13);
    }

    #[test]
    fn direct_path_rejects_box() {
        let plan = PenaltyPlan::fixed(50.0, 0.25, 1.0).unwrap();
        assert!(matches!(
            EnvelopeContext::new(&exp1(), plan, SubproblemSolver::DirectQP),
            Err(Error::UnsupportedSubproblemPath(_))
        ));
    }

    #[test]
    fn full_context_enforces_total_modulus() {
        let plan = PenaltyPlan::fixed(50.0, 0.5, 1.0).unwrap();
        assert!(matches!(
            EnvelopeContext::new(&exp1(), plan, SubproblemSolver::exact()),
            Err(Error::GammaTooLarge { .. })
        ));
        assert!(EnvelopeContext::linearized(&exp1(), plan, SubproblemSolver::exact()).is_ok());
    }

    #[test]
    fn inner_solution_is_stationary() {
        let plan = PenaltyPlan::fixed(50.0, 0.25, 1.0).unwrap();
        let ctx = EnvelopeContext::new(&exp1(), plan, SubproblemSolver::exact()).unwrap();
        let z = v(&[0.9, -0.4]);
        let lam = v(&[0.3]);
        let out = ctx.solve_subproblem(&z, &lam, 50.0).unwrap();
        assert!(out.converged && out.residual_norm < 1e-9);
        // strong convexity certificate
        let val = |x: &Vector| ctx.potential(x, &z, &lam, 50.0);
        let modulus = 1.0 / 0.25 - exp1().rho_total();
        for d in [v(&[1.0, 0.0]), v(&[0.0, 1.0]), v(&[-0.6, 0.8])] {
            let y = &out.x + &d * 1e-3;
            if val(&y).is_finite() {
                assert!(val(&y) - val(&out.x) >= 0.5 * modulus * 1e-6 - 1e-9);
            }
        }
    }

    #[test]
    fn paper72_matches_projected_formula() {
        let plan = PenaltyPlan::fixed(50.0, 0.5, 1.0).unwrap();
        let p = exp1();
        let ctx = EnvelopeContext::linearized(&p, plan, SubproblemSolver::Paper72FastPath).unwrap();
        let (z, lam, xk) = (v(&[0.7, 0.1]), v(&[0.2]), v(&[0.4, -0.3]));
        let out = ctx.solve_linearized(&z, &lam, 50.0, &xk).unwrap();
        let a = p.constraint.a();
        let q = p.smooth.as_ref().unwrap().as_quadratic().unwrap().q();
        let h = a.transpose() * a * 50.0 + Matrix::identity(2, 2) * 2.0;
        let rhs = &z * 2.0 + a.transpose() * p.constraint.b() * 50.0 - q * &xk - a.transpose() * &lam;
        let xt = h.lu().solve(&rhs).unwrap();
        let expected = v(&[xt[0].clamp(-1.0, 1.0), xt[1]]);
        assert!((out.x - expected).norm() < 1e-12);
    }

    #[test]
    fn paper72_requires_linearized_quadratic() {
        let plan = PenaltyPlan::fixed(50.0, 0.25, 1.0).unwrap();
        assert!(EnvelopeContext::new(&exp1(), plan, SubproblemSolver::Paper72FastPath).is_err());
    }

    #[test]
    fn horizon_plan_resolves_constant_beta() {
        let plan = PenaltyPlan::horizon(10, 0.2, 0.5, 1.0).unwrap();
        let beta = plan.resolve_beta(0.5).unwrap();
        assert!(penalty::alpha_from_beta(0.5, 1.0, beta, beta, 0.5) < 0.02);
        assert!(PenaltyPlan::horizon(0, 0.2, 0.5, 1.0).is_err());
        assert!(PenaltyPlan::fixed(-1.0, 0.5, 1.0).is_err());
        assert!(PenaltyPlan::fixed(1.0, 0.5, 2.0).is_err());
    }

    #[test]
    fn other_beta_refactors() {
        let p = zero_identity(1);
        let ctx = EnvelopeContext::new(
            &p,
            PenaltyPlan::fixed(1.0, 0.5, 1.0).unwrap(),
            SubproblemSolver::DirectQP,
        )
        .unwrap();
        // β = 2: (2 + 2) x = 2·3 → 1.5
        let out = ctx.solve_subproblem(&v(&[3.0]), &v(&[0.0]), 2.0).unwrap();
        assert!((out.x[0] - 1.5).abs() < 1e-14);
    }
}
