//! Penalty-parameter calculus.
//!
//! The convergence analysis couples the penalty `β_k` to a scalar
//!
//! ```text
//! α_k = (β_k + β_{k+1} + γη(1 - η/2)) / (2 c β_k²),    c = γ² σ̃_min(AᵀA)
//! ```
//!
//! which must stay below a variant-dependent cap. [`alpha_cap`] evaluates the
//! cap and [`beta_for_target_alpha`] inverts the relation.

use crate::problem::Problem;
use crate::{Error, Result};

/// Relative safety margin that turns the threshold β into a strict inequality.
pub const BETA_MARGIN: f64 = 1e-6;

/// Admissibility regime: `a` needs an implicit Lipschitz subgradient,
/// `b` an implicit bounded one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapVariant {
    MealA,
    MealB,
    ImealA,
    ImealB,
    LimealA,
    LimealB,
}

fn check_gamma_eta(gamma: f64, eta: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid("gamma", "must be positive and finite"));
    }
    if !(eta > 0.0 && eta < 2.0) {
        return Err(Error::invalid("eta", "must lie in (0, 2)"));
    }
    Ok(())
}

/// `α_k` for consecutive penalties; pass `beta_next = beta` for fixed β.
pub fn alpha_from_beta(gamma: f64, eta: f64, beta: f64, beta_next: f64, c: f64) -> f64 {
    (beta + beta_next + gamma * eta * (1.0 - eta / 2.0)) / (2.0 * c * beta * beta)
}

/// Smallest fixed β with `α(β) < alpha_target`, inflated by [`BETA_MARGIN`].
pub fn beta_for_target_alpha(alpha_target: f64, gamma: f64, eta: f64, c: f64) -> Result<f64> {
    if !(alpha_target > 0.0) {
        return Err(Error::NonPositiveAlpha(alpha_target));
    }
    check_gamma_eta(gamma, eta)?;
    if !(c > 0.0) {
        return Err(Error::invalid("c", "must be positive"));
    }
    let ca = c * alpha_target;
    let root = (1.0 + eta * (2.0 - eta) * gamma * ca).sqrt();
    Ok((1.0 + root) / (2.0 * ca) * (1.0 + BETA_MARGIN))
}

/// Constant penalty for a horizon of `k` iterations: `α_k ≡ α*/K`.
pub fn horizon_beta(horizon: usize, alpha_star: f64, gamma: f64, eta: f64, c: f64) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::invalid("horizon", "must be at least 1"));
    }
    beta_for_target_alpha(alpha_star / horizon as f64, gamma, eta, c)
}

/// Admissible upper bound on `α` for the chosen variant.
///
/// MEAL/iMEAL use `ρ = ρ_total` and, for the `a` regime, `L_f` from the
/// problem's implicit class. LiMEAL uses `ρ_g`, `L_h` and, for the `a`
/// regime, `L_g` from the prox part's class; it also requires `γ` below the
/// root bound
///
/// ```text
/// 2 / ((ρ_g + L_h)(1 + √(1 + 2(2 - η)η L_h² / (ρ_g + L_h)²)))
/// ```
pub fn alpha_cap(problem: &Problem, gamma: f64, eta: f64, variant: CapVariant) -> Result<f64> {
    check_gamma_eta(gamma, eta)?;
    let step = 2.0 / eta - 1.0;
    let cap = match variant {
        CapVariant::MealA | CapVariant::ImealA => {
            let rho = problem.rho_total();
            let lf = problem
                .implicit_class()
                .lipschitz()
                .ok_or(Error::MissingMetadata("implicit Lipschitz constant L_f"))?;
            let (d1, d2) = if variant == CapVariant::MealA {
                (4.0, 8.0)
            } else {
                (6.0, 12.0)
            };
            let lead = (1.0 - gamma * rho) / (d1 * gamma * (1.0 + gamma * lf).powi(2));
            lead.min(step / (d2 * gamma))
        }
        CapVariant::MealB | CapVariant::ImealB => {
            let rho = problem.rho_total();
            let (d1, d2) = if variant == CapVariant::MealB {
                (6.0, 12.0)
            } else {
                (8.0, 16.0)
            };
            ((1.0 - rho * gamma) / (d1 * gamma)).min(step / (d2 * gamma))
        }
        CapVariant::LimealA | CapVariant::LimealB => {
            if !problem.is_composite() {
                return Err(Error::NotComposite);
            }
            let rho_g = problem.prox_part.rho();
            let lh = problem.smooth_lipschitz();
            let s = rho_g + lh;
            if s > 0.0 {
                let limit = 2.0 / (s * (1.0 + (1.0 + 2.0 * (2.0 - eta) * eta * lh * lh / (s * s)).sqrt()));
                if gamma >= limit {
                    return Err(Error::GammaTooLarge { gamma, limit });
                }
            }
            let numer = 1.0 - gamma * s - eta * (1.0 - eta / 2.0) * gamma * gamma * lh * lh;
            if variant == CapVariant::LimealA {
                let lg = problem
                    .prox_part
                    .implicit_class()
                    .lipschitz()
                    .ok_or(Error::MissingMetadata("implicit Lipschitz constant L_g"))?;
                let denom = 6.0 * gamma * ((1.0 + gamma * lg).powi(2) + gamma * gamma * lh * lh);
                (step / (12.0 * gamma)).min(numer / denom)
            } else {
                (numer / (8.0 * gamma * (1.0 + gamma * gamma * lh * lh))).min(step / (16.0 * gamma))
            }
        }
    };
    if cap > 0.0 {
        Ok(cap)
    } else {
        let limit = match variant {
            CapVariant::LimealA | CapVariant::LimealB => 1.0 / (problem.prox_part.rho() + problem.smooth_lipschitz()),
            _ => 1.0 / problem.rho_total(),
        };
        Err(Error::GammaTooLarge { gamma, limit })
    }
}

/// `β` meeting the chosen cap: `beta_for_target_alpha(alpha_cap(..))`.
pub fn auto_beta(problem: &Problem, gamma: f64, eta: f64, variant: CapVariant) -> Result<f64> {
    let cap = alpha_cap(problem, gamma, eta, variant)?;
    beta_for_target_alpha(cap, gamma, eta, problem.c_gamma_a(gamma)?)
}
