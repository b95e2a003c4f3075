//! Catalog of weakly convex functions with exact proximal maps.
//!
//! Every function exposes its value, its weak-convexity modulus `ρ` and the
//! proximal map `prox(γ, v) = argmin_x g(x) + ‖x - v‖²/(2γ)`, which is
//! single-valued for `γ < 1/ρ`. Queries with `γ ≥ 1/ρ` are rejected.
//!
//! SCAD and MCP use the piecewise closed forms of the scaled thresholding
//! rules; the tests certify them against a brute-force grid search.

use crate::inner::{proximal_gradient, InnerSettings};
use crate::problem::{ImplicitClass, QuadraticForm};
use crate::{linalg, Error, Result, Vector};

/// Coordinate-wise bounds `ℓ ≤ x ≤ u`; infinite entries mean unbounded.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxBounds {
    lower: Vector,
    upper: Vector,
}

impl BoxBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::dim("box bounds", lower.len(), upper.len()));
        }
        if lower.is_empty() {
            return Err(Error::invalid("box", "bounds must be non-empty"));
        }
        for (l, u) in lower.iter().zip(&upper) {
            if l.is_nan() || u.is_nan() || l > u || *l == f64::INFINITY || *u == f64::NEG_INFINITY {
                return Err(Error::invalid("box", format!("empty interval [{l}, {u}]")));
            }
        }
        Ok(BoxBounds {
            lower: Vector::from_vec(lower),
            upper: Vector::from_vec(upper),
        })
    }

    pub fn lower(&self) -> &Vector {
        &self.lower
    }

    pub fn upper(&self) -> &Vector {
        &self.upper
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &Vector) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(self.upper.iter()))
            .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    pub fn project(&self, v: &Vector) -> Vector {
        Vector::from_iterator(
            v.len(),
            v.iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .map(|(t, (l, u))| t.clamp(*l, *u)),
        )
    }
}

/// One piece of a pointwise minimum: a quadratic restricted to an optional box.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub form: QuadraticForm,
    pub bounds: Option<BoxBounds>,
}

impl Piece {
    pub fn value(&self, x: &Vector) -> f64 {
        match &self.bounds {
            Some(b) if !b.contains(x) => f64::INFINITY,
            _ => self.form.value(x),
        }
    }

    /// Minimizer of the piece plus `‖x - v‖²/(2γ)`; requires `γ λ_min(Q) > -1`.
    fn prox(&self, gamma: f64, v: &Vector) -> Vector {
        let q = self.form.q();
        let r = self.form.r();
        let project = |x: Vector| match &self.bounds {
            Some(b) => b.project(&x),
            None => x,
        };
        if is_diagonal(q) {
            let x = Vector::from_iterator(
                v.len(),
                (0..v.len()).map(|i| (v[i] / gamma - r[i]) / (q[(i, i)] + 1.0 / gamma)),
            );
            return project(x);
        }
        let shifted = q + linalg_identity(v.len()) / gamma;
        if self.bounds.is_none() {
            let chol = linalg::cholesky(shifted.clone(), "piece prox system").expect("gamma below 1/rho");
            return linalg::refined_solve(&chol, &shifted, &(v / gamma - r));
        }
        let bounds = self.bounds.as_ref().expect("checked above");
        let settings = InnerSettings {
            lipschitz: self.form.spectral_norm() + 1.0 / gamma,
            momentum_modulus: Some(self.form.min_eigenvalue() + 1.0 / gamma),
            tol: 0.0,
            max_iter: 100_000,
        };
        let out = proximal_gradient(
            |x| q * x + r + (x - v) / gamma,
            |_, y| bounds.project(y),
            bounds.project(v),
            &settings,
        );
        out.x
    }
}

fn linalg_identity(n: usize) -> crate::Matrix {
    crate::Matrix::identity(n, n)
}

fn is_diagonal(m: &crate::Matrix) -> bool {
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == 0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProxKind {
    Zero,
    Quadratic(QuadraticForm),
    Box(BoxBounds),
    L1 { weight: f64 },
    Scad { lambda: f64, a: f64 },
    Mcp { lambda: f64, a: f64 },
    PointwiseMin(Vec<Piece>),
}

/// The prox-friendly part `g` of the objective.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxFunction {
    kind: ProxKind,
    rho: f64,
    declared_class: Option<ImplicitClass>,
    dim_hint: Option<usize>,
}

/// Value, gradient and prox point of the Moreau envelope at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct MoreauEval {
    pub value: f64,
    pub grad: Vector,
    pub prox_point: Vector,
}

pub fn soft_threshold(v: f64, threshold: f64) -> f64 {
    v.signum() * (v.abs() - threshold).max(0.0)
}

impl ProxFunction {
    fn from_kind(kind: ProxKind, rho: f64) -> Self {
        ProxFunction {
            kind,
            rho,
            declared_class: None,
            dim_hint: None,
        }
    }

    pub fn zero() -> Self {
        Self::from_kind(ProxKind::Zero, 0.0)
    }

    pub fn quadratic(form: QuadraticForm) -> Self {
        let rho = form.weak_convexity();
        Self::from_kind(ProxKind::Quadratic(form), rho)
    }

    pub fn box_indicator(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        Ok(Self::from_kind(ProxKind::Box(BoxBounds::new(lower, upper)?), 0.0))
    }

    pub fn l1(weight: f64) -> Result<Self> {
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(Error::invalid("weight", "must be nonnegative and finite"));
        }
        Ok(Self::from_kind(ProxKind::L1 { weight }, 0.0))
    }

    /// SCAD penalty; `ρ = 1/(a - 1)`.
    pub fn scad(lambda: f64, a: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid("lambda", "must be positive"));
        }
        if !(a > 2.0 && a.is_finite()) {
            return Err(Error::invalid("a", "SCAD requires a > 2"));
        }
        Ok(Self::from_kind(ProxKind::Scad { lambda, a }, 1.0 / (a - 1.0)))
    }

    /// Minimax concave penalty; `ρ = 1/a`.
    pub fn mcp(lambda: f64, a: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid("lambda", "must be positive"));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::invalid("a", "MCP requires a > 0"));
        }
        Ok(Self::from_kind(ProxKind::Mcp { lambda, a }, 1.0 / a))
    }

    /// Pointwise minimum of quadratic pieces, each optionally box-restricted.
    ///
    /// The modulus defaults to the largest piece modulus; `declared_rho` may
    /// raise it. Exact ties in the prox are broken toward the lowest index.
    pub fn pointwise_min(pieces: Vec<Piece>, declared_rho: Option<f64>) -> Result<Self> {
        let first = pieces
            .first()
            .ok_or_else(|| Error::invalid("pieces", "need at least one piece"))?;
        let n = first.form.dim();
        for p in &pieces {
            if p.form.dim() != n {
                return Err(Error::dim("pointwise-min piece", n, p.form.dim()));
            }
            if let Some(b) = &p.bounds {
                if b.dim() != n {
                    return Err(Error::dim("pointwise-min piece bounds", n, b.dim()));
                }
            }
        }
        let intrinsic = pieces.iter().map(|p| p.form.weak_convexity()).fold(0.0, f64::max);
        let rho = match declared_rho {
            Some(r) if r < intrinsic || !r.is_finite() => {
                return Err(Error::invalid(
                    "rho",
                    format!("must be finite and at least {intrinsic}"),
                ));
            }
            Some(r) => r,
            None => intrinsic,
        };
        Ok(Self::from_kind(ProxKind::PointwiseMin(pieces), rho))
    }

    pub fn with_implicit_class(mut self, class: ImplicitClass) -> Self {
        self.declared_class = Some(class);
        self
    }

    /// Records the ambient dimension for dimension-agnostic kinds.
    pub fn with_dim(mut self, n: usize) -> Self {
        self.dim_hint = Some(n);
        self
    }

    pub fn kind(&self) -> &ProxKind {
        &self.kind
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn declared_class(&self) -> Option<ImplicitClass> {
        self.declared_class
    }

    pub fn implicit_class(&self) -> ImplicitClass {
        if let Some(c) = self.declared_class {
            return c;
        }
        let sqrt_n = self.dim_hint.map(|n| (n as f64).sqrt());
        match &self.kind {
            ProxKind::Zero => ImplicitClass::LipschitzSubgradient(0.0),
            ProxKind::Quadratic(qf) => ImplicitClass::LipschitzSubgradient(qf.spectral_norm()),
            ProxKind::L1 { weight: s } | ProxKind::Scad { lambda: s, .. } | ProxKind::Mcp { lambda: s, .. } => {
                sqrt_n.map_or(ImplicitClass::Unknown, |r| ImplicitClass::BoundedSubgradient(s * r))
            }
            ProxKind::Box(_) | ProxKind::PointwiseMin(_) => ImplicitClass::Unknown,
        }
    }

    /// Fixed dimension, if the kind carries one.
    pub fn dim(&self) -> Option<usize> {
        match &self.kind {
            ProxKind::Quadratic(qf) => Some(qf.dim()),
            ProxKind::Box(b) => Some(b.dim()),
            ProxKind::PointwiseMin(p) => Some(p[0].form.dim()),
            _ => None,
        }
    }

    pub fn is_convex(&self) -> bool {
        self.rho == 0.0
    }

    /// Coordinate-separable kinds can be certified by a 1-D grid search.
    pub fn is_separable(&self) -> bool {
        matches!(
            self.kind,
            ProxKind::Zero | ProxKind::Box(_) | ProxKind::L1 { .. } | ProxKind::Scad { .. } | ProxKind::Mcp { .. }
        )
    }

    /// Value of coordinate `i`'s term for separable kinds.
    pub fn coordinate_value(&self, i: usize, t: f64) -> Option<f64> {
        match &self.kind {
            ProxKind::Zero => Some(0.0),
            ProxKind::Box(b) => Some(if b.lower[i] <= t && t <= b.upper[i] {
                0.0
            } else {
                f64::INFINITY
            }),
            ProxKind::L1 { weight } => Some(weight * t.abs()),
            ProxKind::Scad { lambda, a } => Some(scad_value(t, *lambda, *a)),
            ProxKind::Mcp { lambda, a } => Some(mcp_value(t, *lambda, *a)),
            _ => None,
        }
    }

    /// `g(x)`; `+∞` outside the domain of indicator kinds.
    pub fn value(&self, x: &Vector) -> f64 {
        match &self.kind {
            ProxKind::Zero => 0.0,
            ProxKind::Quadratic(qf) => qf.value(x),
            ProxKind::Box(b) => {
                if b.contains(x) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ProxKind::L1 { weight } => weight * x.lp_norm(1),
            ProxKind::Scad { lambda, a } => x.iter().map(|&t| scad_value(t, *lambda, *a)).sum(),
            ProxKind::Mcp { lambda, a } => x.iter().map(|&t| mcp_value(t, *lambda, *a)).sum(),
            ProxKind::PointwiseMin(pieces) => pieces.iter().map(|p| p.value(x)).fold(f64::INFINITY, f64::min),
        }
    }

    pub fn check_gamma(&self, gamma: f64) -> Result<()> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::invalid("gamma", "must be positive and finite"));
        }
        if self.rho > 0.0 && gamma * self.rho >= 1.0 {
            return Err(Error::GammaTooLarge {
                gamma,
                limit: 1.0 / self.rho,
            });
        }
        Ok(())
    }

    /// `argmin_x g(x) + ‖x - v‖²/(2γ)`.
    pub fn prox(&self, gamma: f64, v: &Vector) -> Result<Vector> {
        self.check_gamma(gamma)?;
        if let Some(n) = self.dim() {
            if n != v.len() {
                return Err(Error::dim("prox argument", n, v.len()));
            }
        }
        if v.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("v", "prox argument must be finite"));
        }
        Ok(self.prox_unchecked(gamma, v))
    }

    pub(crate) fn prox_unchecked(&self, gamma: f64, v: &Vector) -> Vector {
        match &self.kind {
            ProxKind::Zero => v.clone(),
            ProxKind::Quadratic(qf) => {
                let n = v.len();
                let m = qf.q() + crate::Matrix::identity(n, n) / gamma;
                let chol = linalg::cholesky(m.clone(), "quadratic prox system").expect("gamma below 1/rho");
                linalg::refined_solve(&chol, &m, &(v / gamma - qf.r()))
            }
            ProxKind::Box(b) => b.project(v),
            ProxKind::L1 { weight } => v.map(|t| soft_threshold(t, gamma * weight)),
            ProxKind::Scad { lambda, a } => v.map(|t| scad_prox(t, gamma, *lambda, *a)),
            ProxKind::Mcp { lambda, a } => v.map(|t| mcp_prox(t, gamma, *lambda, *a)),
            ProxKind::PointwiseMin(pieces) => {
                let mut best: Option<(f64, Vector)> = None;
                for piece in pieces {
                    let x = piece.prox(gamma, v);
                    let val = piece.value(&x) + (&x - v).norm_squared() / (2.0 * gamma);
                    if best.as_ref().is_none_or(|(b, _)| val < *b) {
                        best = Some((val, x));
                    }
                }
                best.expect("at least one piece").1
            }
        }
    }

    /// Moreau envelope `M_{γ,g}(v)`, its gradient `(v - p)/γ` and `p = prox(γ, v)`.
    pub fn moreau_value_grad(&self, gamma: f64, v: &Vector) -> Result<MoreauEval> {
        let p = self.prox(gamma, v)?;
        let diff = v - &p;
        Ok(MoreauEval {
            value: self.value(&p) + diff.norm_squared() / (2.0 * gamma),
            grad: diff / gamma,
            prox_point: p,
        })
    }
}

pub fn scad_value(t: f64, lambda: f64, a: f64) -> f64 {
    let x = t.abs();
    if x <= lambda {
        lambda * x
    } else if x <= a * lambda {
        (2.0 * a * lambda * x - x * x - lambda * lambda) / (2.0 * (a - 1.0))
    } else {
        lambda * lambda * (a + 1.0) / 2.0
    }
}

/// Scaled SCAD thresholding, valid for `γ < a - 1`.
pub fn scad_prox(v: f64, gamma: f64, lambda: f64, a: f64) -> f64 {
    let x = v.abs();
    if x <= lambda * (1.0 + gamma) {
        soft_threshold(v, gamma * lambda)
    } else if x <= a * lambda {
        v.signum() * ((a - 1.0) * x - gamma * a * lambda) / (a - 1.0 - gamma)
    } else {
        v
    }
}

pub fn mcp_value(t: f64, lambda: f64, a: f64) -> f64 {
    let x = t.abs();
    if x <= a * lambda {
        lambda * x - x * x / (2.0 * a)
    } else {
        a * lambda * lambda / 2.0
    }
}

/// Scaled firm thresholding, valid for `γ < a`.
pub fn mcp_prox(v: f64, gamma: f64, lambda: f64, a: f64) -> f64 {
    let x = v.abs();
    if x <= gamma * lambda {
        0.0
    } else if x <= a * lambda {
        v.signum() * (x - gamma * lambda) / (1.0 - gamma / a)
    } else {
        v
    }
}
