//! Constrained problem data model.

use std::fmt;
use std::sync::Arc;

use crate::linalg;
use crate::prox::ProxFunction;
use crate::{Error, Matrix, Result, Vector};

/// Default tolerance for the least-squares feasibility probe of `Ax = b`,
/// relative to `max(1, ‖b‖)`.
pub const FEAS_PROBE_TOL: f64 = 1e-8;

/// Regularity class of the envelope-gradient selection of `∂f`.
///
/// This is declared metadata. The crate never certifies it; it only feeds the
/// penalty calculus and the dual-control monitor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImplicitClass {
    LipschitzSubgradient(f64),
    BoundedSubgradient(f64),
    Unknown,
}

impl ImplicitClass {
    pub fn lipschitz(&self) -> Option<f64> {
        match *self {
            ImplicitClass::LipschitzSubgradient(l) => Some(l),
            _ => None,
        }
    }

    pub fn bound(&self) -> Option<f64> {
        match *self {
            ImplicitClass::BoundedSubgradient(l) => Some(l),
            _ => None,
        }
    }
}

/// `½ xᵀQx + rᵀx + c` with symmetric `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    q: Matrix,
    r: Vector,
    c: f64,
    spectral_norm: f64,
    min_eigenvalue: f64,
}

impl QuadraticForm {
    pub fn new(q: Matrix, r: Vector, c: f64) -> Result<Self> {
        linalg::check_symmetric(&q)?;
        if r.len() != q.nrows() {
            return Err(Error::dim("quadratic form linear term", q.nrows(), r.len()));
        }
        if q.iter().chain(r.iter()).any(|v| !v.is_finite()) || !c.is_finite() {
            return Err(Error::invalid("quadratic form", "entries must be finite"));
        }
        let eigs = linalg::symmetric_eigenvalues(&q);
        let min_eigenvalue = eigs.first().copied().unwrap_or(0.0);
        let max_eigenvalue = eigs.last().copied().unwrap_or(0.0);
        Ok(QuadraticForm {
            spectral_norm: min_eigenvalue.abs().max(max_eigenvalue.abs()),
            min_eigenvalue,
            q,
            r,
            c,
        })
    }

    /// `½‖x‖²` in dimension `n`.
    pub fn half_squared_norm(n: usize) -> Self {
        QuadraticForm::new(Matrix::identity(n, n), Vector::zeros(n), 0.0).expect("identity is valid")
    }

    pub fn dim(&self) -> usize {
        self.r.len()
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn r(&self) -> &Vector {
        &self.r
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `‖Q‖₂`, the Lipschitz constant of the gradient.
    pub fn spectral_norm(&self) -> f64 {
        self.spectral_norm
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    /// Weak-convexity modulus `max(0, -λ_min(Q))`.
    pub fn weak_convexity(&self) -> f64 {
        (-self.min_eigenvalue).max(0.0)
    }

    pub fn value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.q * x)) + self.r.dot(x) + self.c
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        &self.q * x + &self.r
    }
}

type ScalarField = dyn Fn(&Vector) -> f64 + Send + Sync;
type VectorField = dyn Fn(&Vector) -> Vector + Send + Sync;

/// User-supplied smooth function with a Lipschitz gradient.
#[derive(Clone)]
pub struct CustomSmooth {
    pub value: Arc<ScalarField>,
    pub gradient: Arc<VectorField>,
    pub lipschitz: f64,
}

impl fmt::Debug for CustomSmooth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomSmooth")
            .field("lipschitz", &self.lipschitz)
            .finish_non_exhaustive()
    }
}

/// Smooth part `h` of a composite objective.
#[derive(Debug, Clone)]
pub enum SmoothFunction {
    Quadratic(QuadraticForm),
    Custom(CustomSmooth),
}

impl SmoothFunction {
    pub fn custom(
        value: impl Fn(&Vector) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
        lipschitz: f64,
    ) -> Result<Self> {
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(Error::invalid("lipschitz", "must be positive and finite"));
        }
        Ok(SmoothFunction::Custom(CustomSmooth {
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            lipschitz,
        }))
    }

    pub fn value(&self, x: &Vector) -> f64 {
        match self {
            SmoothFunction::Quadratic(qf) => qf.value(x),
            SmoothFunction::Custom(c) => (c.value)(x),
        }
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        match self {
            SmoothFunction::Quadratic(qf) => qf.gradient(x),
            SmoothFunction::Custom(c) => (c.gradient)(x),
        }
    }

    /// `L_h`.
    pub fn lipschitz(&self) -> f64 {
        match self {
            SmoothFunction::Quadratic(qf) => qf.spectral_norm(),
            SmoothFunction::Custom(c) => c.lipschitz,
        }
    }

    /// Weak-convexity modulus of `h` itself (never larger than `L_h`).
    pub fn weak_convexity(&self) -> f64 {
        match self {
            SmoothFunction::Quadratic(qf) => qf.weak_convexity(),
            SmoothFunction::Custom(c) => c.lipschitz,
        }
    }

    pub fn as_quadratic(&self) -> Option<&QuadraticForm> {
        match self {
            SmoothFunction::Quadratic(qf) => Some(qf),
            SmoothFunction::Custom(_) => None,
        }
    }

    pub fn dim(&self) -> Option<usize> {
        self.as_quadratic().map(QuadraticForm::dim)
    }
}

/// The linear constraint `Ax = b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    a: Matrix,
    b: Vector,
}

impl LinearConstraint {
    /// Validates dimensions and probes feasibility with a least-squares solve.
    pub fn new(a: Matrix, b: Vector) -> Result<Self> {
        Self::with_probe_tol(a, b, FEAS_PROBE_TOL)
    }

    pub fn with_probe_tol(a: Matrix, b: Vector, probe_tol: f64) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::invalid("A", "must have at least one row and one column"));
        }
        if b.len() != a.nrows() {
            return Err(Error::dim("constraint right-hand side", a.nrows(), b.len()));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("A, b", "entries must be finite"));
        }
        let x_ls = linalg::least_squares(&a, &b);
        let residual = (&a * x_ls - &b).norm();
        if residual > probe_tol * b.norm().max(1.0) {
            return Err(Error::Infeasible(residual));
        }
        Ok(LinearConstraint { a, b })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Vector {
        &self.b
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn cols(&self) -> usize {
        self.a.ncols()
    }

    /// `Ax - b`.
    pub fn residual(&self, x: &Vector) -> Vector {
        &self.a * x - &self.b
    }

    /// `‖Ax - b‖`.
    pub fn violation(&self, x: &Vector) -> f64 {
        self.residual(x).norm()
    }

    /// `σ̃_min(AᵀA)`.
    pub fn smallest_positive_gram_eigenvalue(&self) -> Result<f64> {
        let gram = self.a.transpose() * &self.a;
        linalg::smallest_positive_eigenvalue(&gram, linalg::DEFAULT_RANK_TOL)
    }
}

/// `minimize f(x) s.t. Ax = b`, with `f = g` or `f = h + g`.
#[derive(Debug, Clone)]
pub struct Problem {
    pub constraint: LinearConstraint,
    pub smooth: Option<SmoothFunction>,
    pub prox_part: ProxFunction,
    implicit_class: ImplicitClass,
}

impl Problem {
    /// Pure problem with `f = g`.
    pub fn pure(constraint: LinearConstraint, prox_part: ProxFunction) -> Result<Self> {
        Self::build(constraint, None, prox_part)
    }

    /// Composite problem with `f = h + g`.
    pub fn composite(constraint: LinearConstraint, smooth: SmoothFunction, prox_part: ProxFunction) -> Result<Self> {
        Self::build(constraint, Some(smooth), prox_part)
    }

    fn build(constraint: LinearConstraint, smooth: Option<SmoothFunction>, prox_part: ProxFunction) -> Result<Self> {
        let n = constraint.cols();
        if let Some(d) = smooth.as_ref().and_then(SmoothFunction::dim) {
            if d != n {
                return Err(Error::dim("smooth part", n, d));
            }
        }
        if let Some(d) = prox_part.dim() {
            if d != n {
                return Err(Error::dim("prox part", n, d));
            }
        }
        let prox_part = prox_part.with_dim(n);
        let implicit_class = default_objective_class(smooth.as_ref(), &prox_part);
        Ok(Problem {
            constraint,
            smooth,
            prox_part,
            implicit_class,
        })
    }

    /// Overrides the declared regularity class of `f`.
    pub fn with_implicit_class(mut self, class: ImplicitClass) -> Self {
        self.implicit_class = class;
        self
    }

    pub fn implicit_class(&self) -> ImplicitClass {
        self.implicit_class
    }

    pub fn dim(&self) -> usize {
        self.constraint.cols()
    }

    pub fn is_composite(&self) -> bool {
        self.smooth.is_some()
    }

    /// `L_h`, zero for pure problems.
    pub fn smooth_lipschitz(&self) -> f64 {
        self.smooth.as_ref().map_or(0.0, SmoothFunction::lipschitz)
    }

    /// `ρ_g + L_h` (composite) or `ρ` (pure).
    pub fn rho_total(&self) -> f64 {
        self.prox_part.rho() + self.smooth_lipschitz()
    }

    /// `f(x)`, `+∞` outside the domain.
    pub fn objective_value(&self, x: &Vector) -> f64 {
        let g = self.prox_part.value(x);
        match &self.smooth {
            Some(h) if g.is_finite() => h.value(x) + g,
            _ => g,
        }
    }

    /// `∇h(x)`, the zero vector for pure problems.
    pub fn smooth_gradient(&self, x: &Vector) -> Vector {
        self.smooth
            .as_ref()
            .map_or_else(|| Vector::zeros(x.len()), |h| h.gradient(x))
    }

    /// `γ² σ̃_min(AᵀA)`.
    pub fn c_gamma_a(&self, gamma: f64) -> Result<f64> {
        Ok(gamma * gamma * self.constraint.smallest_positive_gram_eigenvalue()?)
    }
}

fn default_objective_class(smooth: Option<&SmoothFunction>, g: &ProxFunction) -> ImplicitClass {
    match (smooth, g.implicit_class()) {
        (None, class) => class,
        (Some(h), ImplicitClass::LipschitzSubgradient(l)) => ImplicitClass::LipschitzSubgradient(l + h.lipschitz()),
        (Some(_), _) => ImplicitClass::Unknown,
    }
}
