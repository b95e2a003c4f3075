//! Stationarity measures, Lyapunov functions and the runtime monitors
//! checking the one-step descent and dual-control inequalities.

use crate::envelope::potential;
use crate::problem::Problem;
use crate::{Error, Result, Vector};

/// Slack allowed in every monitored inequality.
pub const MONITOR_SLACK: f64 = 1e-9;

/// Per-step byproducts of one envelope iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub grad_phi_z: Vector,
    pub grad_phi_lambda: Vector,
    pub stationarity_norm: f64,
    /// `‖Ax⁺ - b‖`.
    pub feasibility: f64,
    pub lyapunov: Option<f64>,
    /// `‖s^k‖` for inexact solves.
    pub inexact_residual_norm: Option<f64>,
}

impl StepReport {
    pub fn new(grad_phi_z: Vector, grad_phi_lambda: Vector, feasibility: f64) -> Self {
        let stationarity_norm = (grad_phi_z.norm_squared() + grad_phi_lambda.norm_squared()).sqrt();
        StepReport {
            grad_phi_z,
            grad_phi_lambda,
            stationarity_norm,
            feasibility,
            lyapunov: None,
            inexact_residual_norm: None,
        }
    }
}

/// `∇φ_β(z, λ) = ((z - z⁺)/(ηγ), (λ⁺ - λ)/β)`.
pub fn envelope_gradient(
    z: &Vector,
    z_next: &Vector,
    lambda: &Vector,
    lambda_next: &Vector,
    gamma: f64,
    eta: f64,
    beta: f64,
) -> (Vector, Vector) {
    ((z - z_next) / (eta * gamma), (lambda_next - lambda) / beta)
}

/// Running minimum `ξ^k = min_{t ≤ k} ‖∇φ^t‖`.
pub fn prefix_min(norms: &[f64]) -> Vec<f64> {
    norms
        .iter()
        .scan(f64::INFINITY, |best, &v| {
            *best = best.min(v);
            Some(*best)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LyapunovVariant {
    MealS1,
    MealS2,
    ImealS1,
    ImealS2,
    LimealS1,
    LimealS2,
}

impl LyapunovVariant {
    pub fn coefficient(self) -> f64 {
        match self {
            LyapunovVariant::MealS1 => 2.0,
            LyapunovVariant::MealS2 | LyapunovVariant::ImealS1 | LyapunovVariant::LimealS1 => 3.0,
            LyapunovVariant::ImealS2 | LyapunovVariant::LimealS2 => 4.0,
        }
    }

    pub fn is_limeal(self) -> bool {
        matches!(self, LyapunovVariant::LimealS1 | LyapunovVariant::LimealS2)
    }
}

/// Consecutive iterates needed by a Lyapunov evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Window<'a> {
    pub x: &'a Vector,
    pub z: &'a Vector,
    pub lambda: &'a Vector,
    pub x_prev: Option<&'a Vector>,
    pub z_prev: Option<&'a Vector>,
}

/// `𝒫_β(x^k, z^k, λ^k) + c·α_k·(‖z^k - z^{k-1}‖² [+ γ²L_h²‖x^k - x^{k-1}‖²])`.
pub fn lyapunov(
    problem: &Problem,
    variant: LyapunovVariant,
    window: Window<'_>,
    beta: f64,
    gamma: f64,
    alpha: f64,
) -> Result<f64> {
    let z_prev = window.z_prev.ok_or(Error::WindowTooShort)?;
    let mut memory = (window.z - z_prev).norm_squared();
    if variant.is_limeal() {
        let x_prev = window.x_prev.ok_or(Error::WindowTooShort)?;
        let lh = problem.smooth_lipschitz();
        memory += gamma * gamma * lh * lh * (window.x - x_prev).norm_squared();
    }
    Ok(potential(problem, window.x, window.z, window.lambda, beta, gamma) + variant.coefficient() * alpha * memory)
}

/// `ℰ^k - ℰ^{k+1} ≥ (γη(2 - η)/4)‖∇φ(z^k, λ^k)‖² - slack`.
pub fn descent_holds(e_k: f64, e_next: f64, grad_phi_sq: f64, gamma: f64, eta: f64) -> bool {
    e_k - e_next >= gamma * eta * (2.0 - eta) / 4.0 * grad_phi_sq - MONITOR_SLACK
}

/// Right-hand side of the dual-control inequality for each method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DualBound {
    /// `2/c[(γL_f + 1)²‖Δx‖² + ‖Δz_prev‖²]`
    Meal { lf: f64 },
    /// `3/c[(γL_f + 1)²‖Δx‖² + ‖Δz_prev‖² + γ²(ε_k + ε_{k-1})²]`
    Imeal { lf: f64, eps: f64, eps_prev: f64 },
    /// `3/c[(γL_g + 1)²‖Δx‖² + γ²L_h²‖x^k - x^{k-1}‖² + ‖Δz_prev‖²]`
    Limeal { lg: f64, lh: f64, dx_prev_sq: f64 },
}

/// Checks `‖λ^{k+1} - λ^k‖² ≤ bound + slack`; returns (holds, lhs, rhs).
pub fn dual_control(
    bound: DualBound,
    dlambda_sq: f64,
    dx_sq: f64,
    dz_prev_sq: f64,
    gamma: f64,
    c: f64,
) -> (bool, f64, f64) {
    let rhs = match bound {
        DualBound::Meal { lf } => 2.0 / c * ((gamma * lf + 1.0).powi(2) * dx_sq + dz_prev_sq),
        DualBound::Imeal { lf, eps, eps_prev } => {
            3.0 / c * ((gamma * lf + 1.0).powi(2) * dx_sq + dz_prev_sq + gamma * gamma * (eps + eps_prev).powi(2))
        }
        DualBound::Limeal { lg, lh, dx_prev_sq } => {
            3.0 / c * ((gamma * lg + 1.0).powi(2) * dx_sq + gamma * gamma * lh * lh * dx_prev_sq + dz_prev_sq)
        }
    };
    (dlambda_sq <= rhs + MONITOR_SLACK, dlambda_sq, rhs)
}

/// Tally of monitored inequalities along a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MonitorSummary {
    pub descent_checked: usize,
    pub descent_violations: usize,
    pub dual_checked: usize,
    pub dual_violations: usize,
    /// Largest `lhs - rhs` seen among dual checks.
    pub worst_dual_gap: f64,
    /// Largest shortfall in the descent inequality.
    pub worst_descent_gap: f64,
}

impl MonitorSummary {
    pub fn all_hold(&self) -> bool {
        self.descent_violations == 0 && self.dual_violations == 0
    }
}
